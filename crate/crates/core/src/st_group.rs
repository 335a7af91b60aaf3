//! Compact groups inside USp(2g): catalog identity components, component
//! groups given by coset representatives, Haar sampling and exact moments.
//!
//! Everything is written in the basis where the symplectic form is the
//! block sum of `[[0, 1], [-1, 0]]`; "block i" means coordinates 2i, 2i+1.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use num::Zero;
use rayon::prelude::*;

use crate::endo_group::{EndoData, GroupIdentification};
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{rat, RatMatrix};
use crate::rng::SplitMix64;
use crate::stats::{moments_from_values, MomentReport, MAX_A2_ORDER};

pub type CMatrix = DMatrix<Complex64>;

/// Numerical tolerance for group-membership and normalization checks.
pub const TOL: f64 = 1e-9;
/// Samples per independently seeded shard.
pub const SHARD_SIZE: usize = 4096;
/// Equispaced nodes per angle in exact moment quadrature.
pub const QUADRATURE_NODES: usize = 48;
pub const MAX_EXACT_ORDER: usize = 10;

const CHECK_SEED: u64 = 0x005E_ED0F_C0DE;
const CHECK_POINTS: usize = 10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn standard_form(g: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * g, 2 * g);
    for b in 0..g {
        j[(2 * b, 2 * b + 1)] = c(1.0, 0.0);
        j[(2 * b + 1, 2 * b)] = c(-1.0, 0.0);
    }
    j
}

pub fn standard_form_rational(g: usize) -> RatMatrix {
    let mut j = RatMatrix::zeros(2 * g, 2 * g);
    for b in 0..g {
        j[(2 * b, 2 * b + 1)] = rat(1);
        j[(2 * b + 1, 2 * b)] = rat(-1);
    }
    j
}

pub fn to_complex(m: &RatMatrix) -> CMatrix {
    let vals = m.to_f64();
    CMatrix::from_row_iterator(m.rows(), m.cols(), vals.into_iter().map(|v| c(v, 0.0)))
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs(&(a - b)) < tol
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square()
        && close(
            &(m.adjoint() * m),
            &CMatrix::identity(m.nrows(), m.nrows()),
            tol,
        )
}

pub fn is_symplectic(m: &CMatrix, tol: f64) -> bool {
    if !m.is_square() || !m.nrows().is_multiple_of(2) {
        return false;
    }
    let j = standard_form(m.nrows() / 2);
    close(&(m.transpose() * &j * m), &j, tol)
}

/// Identity-component shapes available in the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentTag {
    U1,
    SU2,
    U1xU1,
    U1xSU2,
    SU2xSU2,
    USp4,
    USp6,
}

impl ComponentTag {
    pub const ALL: [ComponentTag; 7] = [
        ComponentTag::U1,
        ComponentTag::SU2,
        ComponentTag::U1xU1,
        ComponentTag::U1xSU2,
        ComponentTag::SU2xSU2,
        ComponentTag::USp4,
        ComponentTag::USp6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComponentTag::U1 => "U1",
            ComponentTag::SU2 => "SU2",
            ComponentTag::U1xU1 => "U1xU1",
            ComponentTag::U1xSU2 => "U1xSU2",
            ComponentTag::SU2xSU2 => "SU2xSU2",
            ComponentTag::USp4 => "USp4",
            ComponentTag::USp6 => "USp6",
        }
    }

    pub fn lie_dim(self) -> usize {
        match self {
            ComponentTag::U1 => 1,
            ComponentTag::SU2 => 3,
            ComponentTag::U1xU1 => 2,
            ComponentTag::U1xSU2 => 4,
            ComponentTag::SU2xSU2 => 6,
            ComponentTag::USp4 => 10,
            ComponentTag::USp6 => 21,
        }
    }

    /// Genus in which the tag is written without an `@g` suffix.
    pub fn natural_genus(self) -> usize {
        match self {
            ComponentTag::U1 | ComponentTag::SU2 => 1,
            ComponentTag::USp6 => 3,
            _ => 2,
        }
    }

    /// Ambient genera the tag can be embedded in.
    pub fn supports_genus(self, g: usize) -> bool {
        match self {
            ComponentTag::U1 | ComponentTag::SU2 => (1..=3).contains(&g),
            ComponentTag::USp6 => g == 3,
            _ => g == 2,
        }
    }
}

impl fmt::Display for ComponentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ComponentTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ComponentTag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown component tag '{s}'")))
    }
}

/// Catalog key: ambient genus, Lie algebra dimension, and dimension of the
/// center of the endomorphism algebra.
pub fn catalog_lookup(g: usize, lie_dim: usize, center_dim: usize) -> Option<ComponentTag> {
    use ComponentTag::*;
    match (g, lie_dim, center_dim) {
        (1..=3, 1, 2) => Some(U1),
        (1..=3, 3, 1) => Some(SU2),
        (2, 2, 4) => Some(U1xU1),
        (2, 4, 3) => Some(U1xSU2),
        (2, 6, 2) => Some(SU2xSU2),
        (2, 10, 1) => Some(USp4),
        (3, 21, 1) => Some(USp6),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorKind {
    U1,
    SU2,
    /// USp(2k) acting on k blocks.
    USp(usize),
}

/// One simple or toral factor of an identity component. U1 and SU2 act
/// diagonally (the same 2x2 matrix) on every block they own; USp(2k) acts on
/// the span of its k blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub kind: FactorKind,
    pub blocks: Vec<usize>,
}

impl Factor {
    fn new(kind: FactorKind, blocks: Vec<usize>) -> Self {
        Factor { kind, blocks }
    }

    fn is_abelian(&self) -> bool {
        self.kind == FactorKind::U1
    }

    fn angle_count(&self) -> usize {
        match self.kind {
            FactorKind::U1 | FactorKind::SU2 => 1,
            FactorKind::USp(k) => k,
        }
    }

    fn indices(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .flat_map(|&b| [2 * b, 2 * b + 1])
            .collect()
    }
}

/// A catalog identity component embedded in USp(2g) with a fixed block layout.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityComponent {
    tag: ComponentTag,
    g: usize,
    factors: Vec<Factor>,
}

impl IdentityComponent {
    pub fn new(tag: ComponentTag, g: usize) -> Result<Self> {
        IdentityComponent::layouts(tag, g)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Embedding(format!("{tag} has no layout in genus {g}")))
    }

    /// All block layouts of `tag` in genus `g`, default first.
    pub fn layouts(tag: ComponentTag, g: usize) -> Result<Vec<Self>> {
        if !tag.supports_genus(g) {
            return Err(Error::Embedding(format!(
                "{tag} does not embed in USp({})",
                2 * g
            )));
        }
        let all: Vec<usize> = (0..g).collect();
        let mk = |factors: Vec<Factor>| IdentityComponent { tag, g, factors };
        use FactorKind as K;
        Ok(match tag {
            ComponentTag::U1 => vec![mk(vec![Factor::new(K::U1, all)])],
            ComponentTag::SU2 => vec![mk(vec![Factor::new(K::SU2, all)])],
            ComponentTag::U1xU1 => vec![mk(vec![
                Factor::new(K::U1, vec![0]),
                Factor::new(K::U1, vec![1]),
            ])],
            ComponentTag::U1xSU2 => vec![
                mk(vec![
                    Factor::new(K::U1, vec![0]),
                    Factor::new(K::SU2, vec![1]),
                ]),
                mk(vec![
                    Factor::new(K::U1, vec![1]),
                    Factor::new(K::SU2, vec![0]),
                ]),
            ],
            ComponentTag::SU2xSU2 => vec![mk(vec![
                Factor::new(K::SU2, vec![0]),
                Factor::new(K::SU2, vec![1]),
            ])],
            ComponentTag::USp4 => vec![mk(vec![Factor::new(K::USp(2), all)])],
            ComponentTag::USp6 => vec![mk(vec![Factor::new(K::USp(3), all)])],
        })
    }

    pub fn tag(&self) -> ComponentTag {
        self.tag
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn lie_dim(&self) -> usize {
        self.tag.lie_dim()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Tag, with `@g` appended outside its natural genus.
    pub fn label(&self) -> String {
        if self.g == self.tag.natural_genus() {
            self.tag.name().to_string()
        } else {
            format!("{}@{}", self.tag.name(), self.g)
        }
    }

    fn place(&self, m: &mut CMatrix, factor: &Factor, local: &CMatrix) {
        match factor.kind {
            FactorKind::U1 | FactorKind::SU2 => {
                for &b in &factor.blocks {
                    m.view_mut((2 * b, 2 * b), (2, 2)).copy_from(local);
                }
            }
            FactorKind::USp(_) => {
                let idx = factor.indices();
                for (li, &gi) in idx.iter().enumerate() {
                    for (lj, &gj) in idx.iter().enumerate() {
                        m[(gi, gj)] = local[(li, lj)];
                    }
                }
            }
        }
    }

    fn factor_local(factor: &Factor, rng: &mut SplitMix64) -> CMatrix {
        match factor.kind {
            FactorKind::U1 => rotation(2.0 * PI * rng.next_f64()),
            FactorKind::SU2 => conjugate_torus(1, rng),
            FactorKind::USp(k) => conjugate_torus(k, rng),
        }
    }

    /// Haar-random element.
    pub fn random_element(&self, rng: &mut SplitMix64) -> CMatrix {
        let mut m = CMatrix::zeros(2 * self.g, 2 * self.g);
        for f in &self.factors {
            let local = IdentityComponent::factor_local(f, rng);
            self.place(&mut m, f, &local);
        }
        m
    }

    /// Haar-random element of one factor, identity on all other blocks.
    fn factor_element(&self, fi: usize, rng: &mut SplitMix64) -> CMatrix {
        let mut m = CMatrix::identity(2 * self.g, 2 * self.g);
        let f = &self.factors[fi];
        let local = IdentityComponent::factor_local(f, rng);
        self.place(&mut m, f, &local);
        m
    }

    /// Maximal-torus element with the given angles, factor by factor.
    fn torus_element(&self, angles: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(2 * self.g, 2 * self.g);
        let mut it = angles.iter();
        for f in &self.factors {
            let local = match f.kind {
                FactorKind::U1 => rotation(*it.next().unwrap()),
                FactorKind::SU2 => diagonal_phases(&[*it.next().unwrap()]),
                FactorKind::USp(k) => {
                    diagonal_phases(&it.by_ref().take(k).copied().collect::<Vec<_>>())
                }
            };
            self.place(&mut m, f, &local);
        }
        m
    }

    pub fn contains(&self, y: &CMatrix, tol: f64) -> bool {
        let n = 2 * self.g;
        if y.shape() != (n, n) {
            return false;
        }
        let mut owner = vec![usize::MAX; self.g];
        for (fi, f) in self.factors.iter().enumerate() {
            for &b in &f.blocks {
                owner[b] = fi;
            }
        }
        let block = |i: usize, j: usize| y.view((2 * i, 2 * j), (2, 2)).into_owned();
        for bi in 0..self.g {
            for bj in 0..self.g {
                let f = &self.factors[owner[bi]];
                let must_vanish =
                    owner[bi] != owner[bj] || (bi != bj && !matches!(f.kind, FactorKind::USp(_)));
                if must_vanish && max_abs(&block(bi, bj)) > tol {
                    return false;
                }
            }
        }
        self.factors.iter().all(|f| {
            let first = block(f.blocks[0], f.blocks[0]);
            let same = matches!(f.kind, FactorKind::USp(_))
                || f.blocks.iter().all(|&b| close(&block(b, b), &first, tol));
            same && match f.kind {
                FactorKind::U1 => {
                    let (a, b, cc, d) =
                        (first[(0, 0)], first[(0, 1)], first[(1, 0)], first[(1, 1)]);
                    (a - d).norm() < tol
                        && (b + cc).norm() < tol
                        && a.im.abs() < tol
                        && cc.im.abs() < tol
                        && (a.re * a.re + cc.re * cc.re - 1.0).abs() < tol
                }
                FactorKind::SU2 => {
                    is_unitary(&first, tol) && ((first.determinant() - c(1.0, 0.0)).norm() < tol)
                }
                FactorKind::USp(_) => {
                    let idx = f.indices();
                    let sub = CMatrix::from_fn(idx.len(), idx.len(), |i, j| y[(idx[i], idx[j])]);
                    is_unitary(&sub, tol) && is_symplectic(&sub, tol)
                }
            }
        })
    }
}

fn rotation(theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// diag(e^{i t_1}, e^{-i t_1}, ..., e^{i t_k}, e^{-i t_k}).
fn diagonal_phases(angles: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(2 * angles.len(), 2 * angles.len());
    for (j, &t) in angles.iter().enumerate() {
        m[(2 * j, 2 * j)] = Complex64::from_polar(1.0, t);
        m[(2 * j + 1, 2 * j + 1)] = Complex64::from_polar(1.0, -t);
    }
    m
}

/// Unnormalized Weyl density of USp(2k) in eigenangles:
/// prod sin^2(t_i) * prod_{i<j} (2 cos t_i - 2 cos t_j)^2.
pub fn weyl_density(angles: &[f64]) -> f64 {
    let mut f: f64 = angles.iter().map(|t| t.sin().powi(2)).product();
    for i in 0..angles.len() {
        for j in i + 1..angles.len() {
            f *= (2.0 * angles[i].cos() - 2.0 * angles[j].cos()).powi(2);
        }
    }
    f
}

/// Upper bounds for `weyl_density` on [0, pi]^k used for rejection sampling.
fn weyl_envelope(k: usize) -> f64 {
    match k {
        1 => 1.0,
        2 => 16.0,
        3 => 10.0,
        _ => unreachable!("USp(2k) factors have k <= 3"),
    }
}

fn weyl_angles(k: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let env = weyl_envelope(k);
    loop {
        let t: Vec<f64> = (0..k).map(|_| PI * rng.next_f64()).collect();
        if rng.next_f64() * env < weyl_density(&t) {
            return t;
        }
    }
}

fn gaussian(rng: &mut SplitMix64) -> Complex64 {
    let r = (-2.0 * (1.0 - rng.next_f64()).ln()).sqrt();
    Complex64::from_polar(r, 2.0 * PI * rng.next_f64())
}

/// Haar-random element of USp(2k) by symplectic Gram-Schmidt: each new
/// column u is paired with -J conj(u).
fn haar_usp(k: usize, rng: &mut SplitMix64) -> CMatrix {
    let n = 2 * k;
    let j = standard_form(k);
    let mut q = CMatrix::zeros(n, n);
    for i in 0..k {
        let mut v = DVector::from_fn(n, |_, _| gaussian(rng));
        for col in 0..2 * i {
            let qc = q.column(col).into_owned();
            let proj = qc.dotc(&v);
            v -= qc * proj;
        }
        let norm = v.norm();
        v /= c(norm, 0.0);
        let partner = -(&j * v.map(|z| z.conj()));
        q.set_column(2 * i, &v);
        q.set_column(2 * i + 1, &partner);
    }
    q
}

/// Haar element of USp(2k): eigenangles from the Weyl density, conjugated by
/// a Haar-random group element.
fn conjugate_torus(k: usize, rng: &mut SplitMix64) -> CMatrix {
    let t = diagonal_phases(&weyl_angles(k, rng));
    let h = haar_usp(k, rng);
    &h * t * h.adjoint()
}

/// Compact group given by an identity component and one coset
/// representative per component-group element.
#[derive(Clone, Debug)]
pub struct STModel {
    component: IdentityComponent,
    pi0: FiniteGroup,
    reps: Vec<CMatrix>,
}

impl STModel {
    pub fn connected(component: IdentityComponent) -> Self {
        let n = 2 * component.genus();
        STModel {
            component,
            pi0: FiniteGroup::trivial(),
            reps: vec![CMatrix::identity(n, n)],
        }
    }

    /// Validates the representatives: identity first, unitary symplectic,
    /// normalizing the identity component, distinct cosets, and compatible
    /// with the group law of `pi0` up to the identity component.
    pub fn new(component: IdentityComponent, pi0: FiniteGroup, reps: Vec<CMatrix>) -> Result<Self> {
        let n = 2 * component.genus();
        let bad = |msg: String| Err(Error::Embedding(msg));
        if reps.len() != pi0.order() {
            return bad(format!(
                "{} representatives for a group of order {}",
                reps.len(),
                pi0.order()
            ));
        }
        if reps.iter().any(|r| r.shape() != (n, n)) {
            return bad(format!("representatives must be {n}x{n}"));
        }
        if !close(&reps[0], &CMatrix::identity(n, n), TOL) {
            return bad("representative of the identity element is not the identity matrix".into());
        }
        for (i, r) in reps.iter().enumerate() {
            if !is_unitary(r, TOL) || !is_symplectic(r, TOL) {
                return bad(format!("representative {i} is not unitary symplectic"));
            }
            if i > 0 && component.contains(r, TOL) {
                return bad(format!("representative {i} lies in the identity component"));
            }
        }
        let mut rng = SplitMix64::new(CHECK_SEED);
        for _ in 0..CHECK_POINTS {
            let x = component.random_element(&mut rng);
            for (i, r) in reps.iter().enumerate() {
                if !component.contains(&(r * &x * r.adjoint()), TOL) {
                    return bad(format!(
                        "representative {i} does not normalize the identity component"
                    ));
                }
            }
        }
        for s in 0..pi0.order() {
            for t in 0..pi0.order() {
                let st = pi0.mul(s, t);
                let defect = reps[st].adjoint() * &reps[s] * &reps[t];
                if !component.contains(&defect, TOL) {
                    return bad(format!(
                        "representatives of {s} and {t} do not compose to the representative of {st}"
                    ));
                }
            }
        }
        Ok(STModel {
            component,
            pi0,
            reps,
        })
    }

    /// Normalizer of U(1) in SU(2).
    pub fn normalizer_u1() -> Self {
        let comp = IdentityComponent::new(ComponentTag::U1, 1).expect("U1 embeds in genus 1");
        STModel::new(
            comp,
            FiniteGroup::cyclic(2),
            vec![CMatrix::identity(2, 2), coset_flip()],
        )
        .expect("built-in representative is valid")
    }

    /// Parses a catalog id such as `SU2`, `N(U1)`, `USp4` or `SU2@2`.
    pub fn catalog(id: &str) -> Result<Self> {
        let id = id.trim();
        if id.eq_ignore_ascii_case("N(U1)") {
            return Ok(STModel::normalizer_u1());
        }
        let (tag, g) = match id.split_once('@') {
            Some((t, g)) => {
                let g = g
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad genus in '{id}'")))?;
                (t.parse::<ComponentTag>()?, g)
            }
            None => {
                let t = id.parse::<ComponentTag>()?;
                (t, t.natural_genus())
            }
        };
        Ok(STModel::connected(IdentityComponent::new(tag, g)?))
    }

    /// Realizes an identification on the coordinates of `data`, which must
    /// use the standard block form. The identity component layout is chosen
    /// to commute with the endomorphisms, and each coset representative is
    /// searched among block permutations composed with blockwise
    /// diag(i, -i) twists.
    pub fn from_identification(ident: &GroupIdentification, data: &EndoData) -> Result<Self> {
        let g = data.genus();
        if ident.g != g {
            return Err(Error::Inconsistency(format!(
                "identification is for genus {}, data for genus {g}",
                ident.g
            )));
        }
        if data.form() != &standard_form_rational(g) {
            return Err(Error::Embedding(
                "endomorphism data must use the standard block symplectic form".into(),
            ));
        }
        if ident.component_group.order() != data.galois().order() {
            return Err(Error::Inconsistency(
                "component group order differs from the Galois group order".into(),
            ));
        }
        let basis: Vec<CMatrix> = data.basis().iter().map(to_complex).collect();
        let mut rng = SplitMix64::new(CHECK_SEED);
        let component = IdentityComponent::layouts(ident.tag, g)?
            .into_iter()
            .find(|comp| {
                (0..CHECK_POINTS).all(|_| {
                    let x = comp.random_element(&mut rng);
                    basis.iter().all(|b| close(&(&x * b), &(b * &x), TOL))
                })
            })
            .ok_or_else(|| {
                Error::Embedding(format!(
                    "no {} layout commutes with the endomorphisms",
                    ident.tag
                ))
            })?;

        let candidates = candidate_reps(g);
        let mut reps = Vec::with_capacity(data.galois().order());
        for tau in 0..data.galois().order() {
            let images: Vec<CMatrix> = (0..basis.len())
                .map(|i| data.image(tau, i).map(|m| to_complex(&m)))
                .collect::<Result<_>>()?;
            let rep = candidates
                .iter()
                .find(|r| {
                    basis
                        .iter()
                        .zip(&images)
                        .all(|(b, img)| close(&(*r * b), &(img * *r), TOL))
                })
                .ok_or_else(|| {
                    Error::Embedding(format!(
                        "no built-in coset representative for Galois element {tau}"
                    ))
                })?;
            reps.push(rep.clone());
        }
        STModel::new(component, ident.component_group.clone(), reps)
    }

    pub fn component(&self) -> &IdentityComponent {
        &self.component
    }

    pub fn pi0(&self) -> &FiniteGroup {
        &self.pi0
    }

    pub fn reps(&self) -> &[CMatrix] {
        &self.reps
    }

    pub fn genus(&self) -> usize {
        self.component.genus()
    }

    /// Catalog-style id: `N(U1)`, a component label, or `label/order`.
    pub fn id(&self) -> String {
        let ord = self.pi0.order();
        if self.component.tag() == ComponentTag::U1 && self.genus() == 1 && ord == 2 {
            "N(U1)".to_string()
        } else if ord == 1 {
            self.component.label()
        } else {
            format!("{}/{}", self.component.label(), ord)
        }
    }

    /// `label/order`, as used in moment serialization.
    pub fn group_label(&self) -> String {
        format!("{}/{}", self.component.label(), self.pi0.order())
    }

    pub fn draw(&self, rng: &mut SplitMix64) -> HaarSample {
        let coset = rng.below(self.pi0.order() as u64) as usize;
        let x = self.component.random_element(rng);
        HaarSample {
            matrix: &self.reps[coset] * x,
            coset,
        }
    }
}

/// diag(i, -i): conjugates a 2x2 rotation to its inverse.
fn coset_flip() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)])
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Block permutations times blockwise {I, diag(i, -i)}, identity first.
fn candidate_reps(g: usize) -> Vec<CMatrix> {
    let flip = coset_flip();
    let mut out = Vec::new();
    for perm in permutations(g) {
        let mut p = CMatrix::zeros(2 * g, 2 * g);
        for (b, &to) in perm.iter().enumerate() {
            p[(2 * to, 2 * b)] = c(1.0, 0.0);
            p[(2 * to + 1, 2 * b + 1)] = c(1.0, 0.0);
        }
        for mask in 0..(1usize << g) {
            let mut d = CMatrix::identity(2 * g, 2 * g);
            for b in (0..g).filter(|b| mask >> b & 1 == 1) {
                d.view_mut((2 * b, 2 * b), (2, 2)).copy_from(&flip);
            }
            out.push(&p * d);
        }
    }
    out
}

/// Catalog ids in a fixed order.
pub fn catalog_ids() -> Vec<&'static str> {
    vec![
        "U1", "N(U1)", "SU2", "U1@2", "SU2@2", "U1xU1", "U1xSU2", "SU2xSU2", "USp4", "U1@3",
        "SU2@3", "USp6",
    ]
}

/// Default comparison candidates for data of genus `g`.
pub fn default_candidates(g: usize) -> Result<Vec<STModel>> {
    let ids: &[&str] = match g {
        1 => &["U1", "N(U1)", "SU2"],
        2 => &["USp4", "SU2xSU2", "U1xSU2", "U1xU1", "SU2@2", "U1@2"],
        3 => &["USp6", "SU2@3", "U1@3"],
        _ => return Err(Error::UnsupportedGenus(g, "no catalog candidates")),
    };
    ids.iter().map(|id| STModel::catalog(id)).collect()
}

/// One Haar-distributed group element and the coset it was drawn from.
#[derive(Clone, Debug)]
pub struct HaarSample {
    pub matrix: CMatrix,
    pub coset: usize,
}

impl HaarSample {
    pub fn genus(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Minus the trace.
    pub fn a1(&self) -> f64 {
        -self.matrix.trace().re
    }

    /// Second elementary symmetric function of the eigenvalues.
    pub fn a2(&self) -> f64 {
        second_coefficient(&self.matrix)
    }

    /// Coefficients of det(T - M), highest degree first.
    pub fn charpoly(&self) -> Vec<Complex64> {
        let a = &self.matrix;
        let n = a.nrows();
        let mut coeffs = vec![Complex64::zero(); n + 1];
        coeffs[0] = c(1.0, 0.0);
        let mut m = CMatrix::zeros(n, n);
        let id = CMatrix::identity(n, n);
        for k in 1..=n {
            m = a * &m + &id * coeffs[k - 1];
            coeffs[k] = -(a * &m).trace() / c(k as f64, 0.0);
        }
        coeffs
    }

    pub fn is_unitary_symplectic(&self, tol: f64) -> bool {
        is_unitary(&self.matrix, tol) && is_symplectic(&self.matrix, tol)
    }
}

fn second_coefficient(m: &CMatrix) -> f64 {
    let t = m.trace();
    let t2 = (m * m).trace();
    ((t * t - t2) / 2.0).re
}

fn shard_map<T, F>(seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SplitMix64) -> T + Sync,
{
    let shards = n.div_ceil(SHARD_SIZE);
    let parts: Vec<Vec<T>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let len = SHARD_SIZE.min(n - s * SHARD_SIZE);
            let mut rng = SplitMix64::for_shard(seed, s as u64);
            (0..len).map(|_| f(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// `n` Haar samples; the first m samples of a longer run with the same seed
/// are the m samples of a shorter one.
pub fn sample(model: &STModel, seed: u64, n: usize) -> Result<Vec<HaarSample>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    Ok(shard_map(seed, n, |rng| model.draw(rng)))
}

/// Moment report of `sample(model, seed, n)` without keeping the matrices.
pub fn sample_moments(model: &STModel, seed: u64, n: usize) -> Result<MomentReport> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    let coeffs = shard_map(seed, n, |rng| {
        let s = model.draw(rng);
        (s.a1(), s.a2())
    });
    let a1: Vec<f64> = coeffs.iter().map(|x| x.0).collect();
    let a2: Vec<f64> = coeffs.iter().map(|x| x.1).collect();
    moments_from_values(model.group_label(), model.genus(), &a1, Some(&a2))
}

pub fn coefficient_stats(samples: &[HaarSample]) -> Result<MomentReport> {
    let first = samples.first().ok_or(Error::EmptySample)?;
    let g = first.genus();
    let a1: Vec<f64> = samples.iter().map(HaarSample::a1).collect();
    let a2: Vec<f64> = samples.iter().map(HaarSample::a2).collect();
    moments_from_values("sample", g, &a1, Some(&a2))
}

/// Quadrature nodes (angles, weight) for one factor's class function
/// integral. Trapezoid sums on a full period are exact for trigonometric
/// polynomials of degree below the node count.
fn factor_nodes(factor: &Factor) -> Vec<(Vec<f64>, f64)> {
    let n = QUADRATURE_NODES;
    let step = 2.0 * PI / n as f64;
    let k = factor.angle_count();
    let scale = match factor.kind {
        FactorKind::U1 => 1.0 / n as f64,
        FactorKind::SU2 => 2.0 / n as f64,
        FactorKind::USp(k) => {
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            (2.0 / n as f64).powi(k as i32) / fact
        }
    };
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        let angles: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
        let w = match factor.kind {
            FactorKind::U1 => scale,
            _ => scale * weyl_density(&angles),
        };
        if w > 0.0 {
            out.push((angles, w));
        }
        let mut d = 0;
        loop {
            if d == k {
                return out;
            }
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Moments of a1 up to `k_max` (and of a2 up to order 4 when g >= 2) by
/// quadrature of the Weyl integration formula, averaged over cosets.
///
/// Each non-neutral representative must commute with the non-abelian
/// factors, so that the integrand stays a class function there.
pub fn exact_moments(model: &STModel, k_max: usize) -> Result<MomentReport> {
    if k_max == 0 || k_max > MAX_EXACT_ORDER {
        return Err(Error::Unsupported(format!(
            "exact moments are available for orders 1..={MAX_EXACT_ORDER}, got {k_max}"
        )));
    }
    let comp = model.component();
    let g = comp.genus();
    let mut rng = SplitMix64::new(CHECK_SEED);
    for (ci, r) in model.reps().iter().enumerate().skip(1) {
        for (fi, f) in comp.factors().iter().enumerate() {
            if f.is_abelian() {
                continue;
            }
            for _ in 0..3 {
                let x = comp.factor_element(fi, &mut rng);
                if !close(&(r * &x), &(&x * r), TOL) {
                    return Err(Error::Unsupported(format!(
                        "coset {ci} of {} does not commute with a non-abelian factor",
                        model.id()
                    )));
                }
            }
        }
    }

    let mut nodes: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for f in comp.factors() {
        let fac = factor_nodes(f);
        nodes = nodes
            .iter()
            .flat_map(|(a, w)| {
                fac.iter().map(move |(b, v)| {
                    let mut angles = a.clone();
                    angles.extend_from_slice(b);
                    (angles, w * v)
                })
            })
            .collect();
    }

    let with_a2 = g >= 2;
    let cosets = model.reps().len();
    let per_coset: Vec<(Vec<f64>, Vec<f64>, bool)> = model
        .reps()
        .par_iter()
        .map(|r| {
            let mut a1 = vec![0.0; k_max];
            let mut a2 = vec![0.0; MAX_A2_ORDER];
            let mut max_a1: f64 = 0.0;
            for (angles, w) in &nodes {
                let m = r * comp.torus_element(angles);
                let x1 = -m.trace().re;
                max_a1 = max_a1.max(x1.abs());
                let mut p = *w;
                for slot in a1.iter_mut() {
                    p *= x1;
                    *slot += p;
                }
                if with_a2 {
                    let x2 = second_coefficient(&m);
                    let mut p = *w;
                    for slot in a2.iter_mut() {
                        p *= x2;
                        *slot += p;
                    }
                }
            }
            (a1, a2, max_a1 < TOL)
        })
        .collect();

    let avg = |sel: &dyn Fn(&(Vec<f64>, Vec<f64>, bool)) -> &Vec<f64>, len: usize| -> Vec<f64> {
        (0..len)
            .map(|k| per_coset.iter().map(|pc| sel(pc)[k]).sum::<f64>() / cosets as f64)
            .collect()
    };
    let a1 = avg(&|pc| &pc.0, k_max);
    let a2 = if with_a2 {
        avg(&|pc| &pc.1, MAX_A2_ORDER)
    } else {
        Vec::new()
    };
    let zero = per_coset.iter().filter(|pc| pc.2).count() as f64 / cosets as f64;
    Ok(MomentReport::exact(model.group_label(), g, a1, a2, zero))
}
