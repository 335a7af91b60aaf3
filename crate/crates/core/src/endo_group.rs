//! Endomorphism algebras as concrete rational matrix algebras with a Galois
//! action, the twisted centralizer systems they define in Sp(V), and the
//! identification of the identity component and component group.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{echelon, integer_rows, nullspace, rank, rat, RatMatrix, Rational};
use crate::st_group::{catalog_lookup, standard_form_rational, ComponentTag};

/// Coordinates with respect to a fixed linearly independent family of
/// matrices, via an invertible square minor.
#[derive(Clone, Debug)]
struct SpanCoords {
    vectors: Vec<RatMatrix>,
    positions: Vec<usize>,
    minor_inv: RatMatrix,
}

impl SpanCoords {
    fn new(vectors: &[RatMatrix]) -> Result<Self> {
        let m = vectors.len();
        let len = vectors[0].as_slice().len();
        let rows: Vec<Vec<Rational>> = vectors.iter().map(|v| v.as_slice().to_vec()).collect();
        let ech = echelon(integer_rows(&rows), len);
        if ech.rank() != m {
            return Err(Error::InvalidEndoData(
                "basis matrices are linearly dependent".into(),
            ));
        }
        let positions = ech.pivots.clone();
        let minor = RatMatrix::from_rows(
            positions
                .iter()
                .map(|&p| vectors.iter().map(|v| v.as_slice()[p].clone()).collect())
                .collect(),
        );
        let minor_inv = minor.inverse().expect("pivot minor is invertible");
        Ok(SpanCoords {
            vectors: vectors.to_vec(),
            positions,
            minor_inv,
        })
    }

    fn combine(&self, coords: &[Rational]) -> RatMatrix {
        let (r, c) = (self.vectors[0].rows(), self.vectors[0].cols());
        let mut out = RatMatrix::zeros(r, c);
        for (x, v) in coords.iter().zip(&self.vectors) {
            if !x.is_zero() {
                out = out.add(&v.scale(x));
            }
        }
        out
    }

    fn coordinates(&self, target: &RatMatrix) -> Option<Vec<Rational>> {
        let t = target.as_slice();
        let rhs = RatMatrix::from_vec(
            self.positions.len(),
            1,
            self.positions.iter().map(|&p| t[p].clone()).collect(),
        );
        let x: Vec<Rational> = self.minor_inv.mul(&rhs).as_slice().to_vec();
        (&self.combine(&x) == target).then_some(x)
    }
}

/// Endomorphism algebra D of an abelian variety of dimension g, given by a
/// basis of rational 2g x 2g matrices (first element the identity), a
/// symplectic form, and a faithful action of a finite Galois group on D.
#[derive(Clone, Debug)]
pub struct EndoData {
    g: usize,
    form: RatMatrix,
    basis: Vec<RatMatrix>,
    galois: FiniteGroup,
    /// Column i of `action[t]` holds the coordinates of t(basis[i]).
    action: Vec<RatMatrix>,
    /// `structure[i][j]` holds the coordinates of basis[i] * basis[j].
    structure: Vec<Vec<Vec<Rational>>>,
    coords: SpanCoords,
}

impl PartialEq for EndoData {
    fn eq(&self, other: &Self) -> bool {
        self.g == other.g
            && self.form == other.form
            && self.basis == other.basis
            && self.galois == other.galois
            && self.action == other.action
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidEndoData(msg.into())
}

impl EndoData {
    pub fn new(
        form: RatMatrix,
        basis: Vec<RatMatrix>,
        galois: FiniteGroup,
        action: Vec<RatMatrix>,
    ) -> Result<Self> {
        let n = form.rows();
        if n == 0 || !n.is_multiple_of(2) || !form.is_square() {
            return Err(invalid("symplectic form must be square of even size"));
        }
        let g = n / 2;
        if form.transpose() != form.neg() {
            return Err(invalid("symplectic form is not antisymmetric"));
        }
        if form.det().is_zero() {
            return Err(invalid("symplectic form is degenerate"));
        }
        if basis.is_empty() {
            return Err(invalid("empty basis"));
        }
        if let Some(i) = basis.iter().position(|b| b.rows() != n || b.cols() != n) {
            return Err(invalid(format!("basis element {i} is not {n}x{n}")));
        }
        if basis[0] != RatMatrix::identity(n) {
            return Err(invalid("first basis element must be the identity"));
        }
        let coords = SpanCoords::new(&basis)?;
        let m = basis.len();
        let mut structure = vec![vec![Vec::new(); m]; m];
        for i in 0..m {
            for j in 0..m {
                structure[i][j] =
                    coords
                        .coordinates(&basis[i].mul(&basis[j]))
                        .ok_or_else(|| {
                            invalid(format!(
                                "product of basis elements {i} and {j} leaves the span"
                            ))
                        })?;
            }
        }

        if action.len() != galois.order() {
            return Err(Error::InvalidGalois(format!(
                "{} action matrices for a group of order {}",
                action.len(),
                galois.order()
            )));
        }
        if let Some(t) = action.iter().position(|a| a.rows() != m || a.cols() != m) {
            return Err(Error::InvalidGalois(format!(
                "action matrix {t} is not {m}x{m}"
            )));
        }
        if action[0] != RatMatrix::identity(m) {
            return Err(Error::InvalidGalois(
                "identity element must act trivially".into(),
            ));
        }
        for a in 0..galois.order() {
            for b in 0..galois.order() {
                if action[galois.mul(a, b)] != action[a].mul(&action[b]) {
                    return Err(Error::InvalidGalois(format!(
                        "action is not a homomorphism at ({a}, {b})"
                    )));
                }
            }
            if a > 0 && action[a] == RatMatrix::identity(m) {
                return Err(Error::InvalidGalois(format!(
                    "element {a} acts trivially; the action must be faithful"
                )));
            }
        }
        let data = EndoData {
            g,
            form,
            basis,
            galois,
            action,
            structure,
            coords,
        };
        for t in 1..data.galois.order() {
            data.check_ring_automorphism(t)?;
        }
        Ok(data)
    }

    /// Data given by images t(basis[i]) as matrices, `images[t][i]`.
    pub fn from_images(
        form: RatMatrix,
        basis: Vec<RatMatrix>,
        galois: FiniteGroup,
        images: &[Vec<RatMatrix>],
    ) -> Result<Self> {
        let coords = SpanCoords::new(&basis)?;
        let m = basis.len();
        let action = images
            .iter()
            .enumerate()
            .map(|(t, imgs)| {
                if imgs.len() != m {
                    return Err(Error::InvalidGalois(format!(
                        "element {t} has {} images",
                        imgs.len()
                    )));
                }
                let cols = imgs
                    .iter()
                    .map(|x| {
                        coords.coordinates(x).ok_or_else(|| {
                            Error::InvalidGalois(format!("image under {t} leaves the span"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(RatMatrix::from_rows(
                    (0..m)
                        .map(|r| cols.iter().map(|c| c[r].clone()).collect())
                        .collect(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        EndoData::new(form, basis, galois, action)
    }

    /// D = Q, trivial Galois group, standard form.
    pub fn trivial(g: usize) -> Self {
        let n = 2 * g;
        EndoData::new(
            standard_form_rational(g),
            vec![RatMatrix::identity(n)],
            FiniteGroup::trivial(),
            vec![RatMatrix::identity(1)],
        )
        .expect("trivial data is valid")
    }

    fn check_ring_automorphism(&self, t: usize) -> Result<()> {
        let m = self.basis.len();
        let images: Vec<RatMatrix> = (0..m).map(|i| self.image_unchecked(t, i)).collect();
        for i in 0..m {
            for j in 0..m {
                let lhs = images[i].mul(&images[j]);
                let mut rhs = RatMatrix::zeros(2 * self.g, 2 * self.g);
                for (x, img) in self.structure[i][j].iter().zip(&images) {
                    if !x.is_zero() {
                        rhs = rhs.add(&img.scale(x));
                    }
                }
                if lhs != rhs {
                    return Err(Error::InvalidGalois(format!(
                        "element {t} does not respect the product of basis elements {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn image_unchecked(&self, t: usize, i: usize) -> RatMatrix {
        let a = &self.action[t];
        let col: Vec<Rational> = (0..self.basis.len()).map(|k| a[(k, i)].clone()).collect();
        self.coords.combine(&col)
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    /// Dimension of D over Q.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn form(&self) -> &RatMatrix {
        &self.form
    }

    pub fn basis(&self) -> &[RatMatrix] {
        &self.basis
    }

    pub fn galois(&self) -> &FiniteGroup {
        &self.galois
    }

    pub fn action(&self, t: usize) -> Result<&RatMatrix> {
        self.action.get(t).ok_or(Error::UnknownElement(t))
    }

    /// t(basis[i]) as a matrix.
    pub fn image(&self, t: usize, i: usize) -> Result<RatMatrix> {
        if !self.galois.contains(t) {
            return Err(Error::UnknownElement(t));
        }
        if i >= self.basis.len() {
            return Err(Error::InvalidArgument(format!("no basis element {i}")));
        }
        Ok(self.image_unchecked(t, i))
    }

    /// Coordinates of `x` in the basis, if `x` lies in D.
    pub fn coordinates(&self, x: &RatMatrix) -> Option<Vec<Rational>> {
        self.coords.coordinates(x)
    }

    /// Coordinates of basis[i] * basis[j].
    pub fn structure_constants(&self, i: usize, j: usize) -> &[Rational] {
        &self.structure[i][j]
    }

    /// The same algebra after the change of coordinates v = P w:
    /// basis elements become P^-1 b P and the form becomes P^T J P.
    pub fn conjugate(&self, p: &RatMatrix) -> Result<EndoData> {
        let pinv = p
            .inverse()
            .ok_or_else(|| Error::InvalidArgument("change of coordinates is singular".into()))?;
        let basis = self.basis.iter().map(|b| pinv.mul(b).mul(p)).collect();
        let form = p.transpose().mul(&self.form).mul(p);
        EndoData::new(form, basis, self.galois.clone(), self.action.clone())
    }

    /// Elements acting trivially on D.
    pub fn kernel(&self) -> Vec<usize> {
        let id = RatMatrix::identity(self.dim());
        (0..self.galois.order())
            .filter(|&t| self.action[t] == id)
            .collect()
    }
}

/// Linear constraints on the entries of a 2g x 2g matrix X (row-major
/// unknowns) expressing X b = t(b) X for every b in D.
#[derive(Clone, Debug)]
pub struct CosetSystem {
    n: usize,
    form: RatMatrix,
    rows: Vec<Vec<Rational>>,
}

impl CosetSystem {
    pub fn equations(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    /// Basis of the solution space, as matrices.
    pub fn solution_space(&self) -> Vec<RatMatrix> {
        nullspace(&self.rows, self.n * self.n)
            .into_iter()
            .map(|v| RatMatrix::from_vec(self.n, self.n, v))
            .collect()
    }

    pub fn is_solution(&self, x: &RatMatrix) -> bool {
        let v = x.as_slice();
        self.rows.iter().all(|row| {
            row.iter()
                .zip(v)
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, b)| a * b)
                .fold(Rational::zero(), |acc, t| acc + t)
                .is_zero()
        })
    }

    /// X^T J X = J.
    pub fn is_symplectic(&self, x: &RatMatrix) -> bool {
        x.transpose().mul(&self.form).mul(x) == self.form
    }
}

/// Rows of the linear map X -> X a - b X, unknowns X row-major.
fn intertwining_rows(a: &RatMatrix, b: &RatMatrix, out: &mut Vec<Vec<Rational>>) {
    let n = a.rows();
    for i in 0..n {
        for j in 0..n {
            let mut row = vec![Rational::zero(); n * n];
            for k in 0..n {
                // (X a)_ij = sum_k X_ik a_kj
                if !a[(k, j)].is_zero() {
                    row[i * n + k] += &a[(k, j)];
                }
                // (b X)_ij = sum_k b_ik X_kj
                if !b[(i, k)].is_zero() {
                    row[k * n + j] -= &b[(i, k)];
                }
            }
            if row.iter().any(|x| !x.is_zero()) {
                out.push(row);
            }
        }
    }
}

/// Rows of X^T J + J X = 0.
fn symplectic_algebra_rows(form: &RatMatrix, out: &mut Vec<Vec<Rational>>) {
    let n = form.rows();
    for i in 0..n {
        for j in 0..n {
            let mut row = vec![Rational::zero(); n * n];
            for k in 0..n {
                // (X^T J)_ij = sum_k X_ki J_kj
                if !form[(k, j)].is_zero() {
                    row[k * n + i] += &form[(k, j)];
                }
                // (J X)_ij = sum_k J_ik X_kj
                if !form[(i, k)].is_zero() {
                    row[k * n + j] += &form[(i, k)];
                }
            }
            if row.iter().any(|x| !x.is_zero()) {
                out.push(row);
            }
        }
    }
}

/// Dimension of the Lie algebra of the centralizer of D in Sp(V, J).
pub fn centralizer_lie_dim(data: &EndoData) -> usize {
    let n = 2 * data.g;
    let mut rows = Vec::new();
    for b in &data.basis {
        intertwining_rows(b, b, &mut rows);
    }
    symplectic_algebra_rows(&data.form, &mut rows);
    n * n - rank(&rows, n * n)
}

/// The linear system X b = t(b) X for all basis elements b.
pub fn twisted_coset_constraints(data: &EndoData, t: usize) -> Result<CosetSystem> {
    let mut rows = Vec::new();
    for i in 0..data.basis.len() {
        let img = data.image(t, i)?;
        intertwining_rows(&data.basis[i], &img, &mut rows);
    }
    Ok(CosetSystem {
        n: 2 * data.g,
        form: data.form.clone(),
        rows,
    })
}

/// Dimension over Q of the center of D.
pub fn center_dim(data: &EndoData) -> usize {
    let m = data.basis.len();
    let mut rows = Vec::new();
    for j in 0..m {
        for l in 0..m {
            rows.push(
                (0..m)
                    .map(|k| &data.structure[k][j][l] - &data.structure[j][k][l])
                    .collect(),
            );
        }
    }
    m - rank(&rows, m)
}

fn coord_product(data: &EndoData, u: &[Rational], v: &[Rational]) -> Vec<Rational> {
    let m = data.basis.len();
    let mut out = vec![Rational::zero(); m];
    for (a, ua) in u.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
        for (b, vb) in v.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            let s = ua * vb;
            for (o, c) in out.iter_mut().zip(&data.structure[a][b]) {
                if !c.is_zero() {
                    *o += &s * c;
                }
            }
        }
    }
    out
}

/// Dimension of a commutative subalgebra of D found greedily from the basis
/// elements. A lower bound for the maximal dimension.
pub fn commutative_subalgebra_dim(data: &EndoData) -> usize {
    let m = data.basis.len();
    let unit = |k: usize| -> Vec<Rational> {
        (0..m)
            .map(|i| if i == k { rat(1) } else { rat(0) })
            .collect()
    };
    let commutes =
        |u: &[Rational], v: &[Rational]| coord_product(data, u, v) == coord_product(data, v, u);
    let mut gens: Vec<Vec<Rational>> = vec![unit(0)];
    let mut span: Vec<Vec<Rational>> = vec![unit(0)];
    for k in 1..m {
        let x = unit(k);
        if !gens.iter().all(|gn| commutes(gn, &x)) {
            continue;
        }
        let mut trial = span.clone();
        trial.push(x.clone());
        if rank(&trial, m) == span.len() {
            continue;
        }
        gens.push(x);
        // close under products
        let mut cur = trial;
        loop {
            let r = rank(&cur, m);
            let mut next = cur.clone();
            for a in &cur {
                for b in &gens {
                    next.push(coord_product(data, a, b));
                }
            }
            if rank(&next, m) == r {
                break;
            }
            let ech = echelon(integer_rows(&next), m);
            cur = ech
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|v| Rational::from_integer(v.clone()))
                        .collect()
                })
                .collect();
        }
        span = cur;
    }
    rank(&span, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlbertType {
    I,
    II,
    III,
    IV,
    CM,
    /// Not asserted to be simple; no Albert type is claimed.
    Composite,
}

impl fmt::Display for AlbertType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlbertType::I => "I",
            AlbertType::II => "II",
            AlbertType::III => "III",
            AlbertType::IV => "IV",
            AlbertType::CM => "CM",
            AlbertType::Composite => "composite",
        })
    }
}

impl FromStr for AlbertType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "I" => AlbertType::I,
            "II" => AlbertType::II,
            "III" => AlbertType::III,
            "IV" => AlbertType::IV,
            "CM" => AlbertType::CM,
            "composite" => AlbertType::Composite,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown Albert type '{other}'"
                )))
            }
        })
    }
}

/// Albert type of D with e = [E:Q] for the center E and d^2 = [D:E].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlbertDescriptor {
    pub kind: AlbertType,
    pub e: usize,
    pub d: usize,
    pub g: usize,
}

impl AlbertDescriptor {
    pub fn new(kind: AlbertType, e: usize, d: usize, g: usize) -> Result<Self> {
        if e == 0 || d == 0 || g == 0 {
            return Err(Error::InvalidArgument("e, d and g must be positive".into()));
        }
        let simple = matches!(
            kind,
            AlbertType::I | AlbertType::II | AlbertType::III | AlbertType::IV
        );
        if simple && !(2 * g).is_multiple_of(e * d * d) {
            return Err(Error::InvalidArgument(format!(
                "e*d^2 = {} does not divide 2g = {}",
                e * d * d,
                2 * g
            )));
        }
        Ok(AlbertDescriptor { kind, e, d, g })
    }

    /// Conservative descriptor from the data alone: CM when a commutative
    /// subalgebra of dimension 2g is found, type I when D = Q, and otherwise
    /// composite.
    pub fn derive(data: &EndoData) -> Self {
        let g = data.genus();
        let e = center_dim(data);
        let d = integer_sqrt(data.dim() / e);
        let kind = if commutative_subalgebra_dim(data) >= 2 * g {
            AlbertType::CM
        } else if data.dim() == 1 {
            AlbertType::I
        } else {
            AlbertType::Composite
        };
        AlbertDescriptor { kind, e, d, g }
    }

    pub fn check_against(&self, data: &EndoData) -> Result<()> {
        if self.g != data.genus() {
            return Err(Error::InvalidArgument(format!(
                "descriptor is for g={}, data has g={}",
                self.g,
                data.genus()
            )));
        }
        match self.kind {
            AlbertType::Composite => Ok(()),
            AlbertType::CM => {
                let c = commutative_subalgebra_dim(data);
                if c < 2 * self.g {
                    Err(Error::InvalidArgument(format!(
                        "no commutative subalgebra of dimension {} found (largest {c})",
                        2 * self.g
                    )))
                } else {
                    Ok(())
                }
            }
            _ => {
                let e = center_dim(data);
                if e != self.e || e * self.d * self.d != data.dim() {
                    Err(Error::InvalidArgument(format!(
                        "descriptor (e={}, d={}) does not match center dimension {e} and [D:Q] = {}",
                        self.e,
                        self.d,
                        data.dim()
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn integer_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Which result justifies reading the component group off the Galois group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Theorem {
    CM,
    AlbertOdd,
    DimLe3,
    ConditionsChecked,
    Unverified,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::CM => "CM",
            Theorem::AlbertOdd => "AlbertOdd",
            Theorem::DimLe3 => "DimLe3",
            Theorem::ConditionsChecked => "ConditionsChecked",
            Theorem::Unverified => "Unverified",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupIdentification {
    pub tag: ComponentTag,
    pub g: usize,
    pub lie_dim: usize,
    pub center_dim: usize,
    pub component_group: FiniteGroup,
    pub theorem: Theorem,
}

impl GroupIdentification {
    /// True when no theorem backs the component group.
    pub fn flagged(&self) -> bool {
        self.theorem == Theorem::Unverified
    }

    pub fn summary(&self) -> String {
        let label = if self.g == self.tag.natural_genus() {
            self.tag.to_string()
        } else {
            format!("{}@{}", self.tag, self.g)
        };
        format!(
            "{label}, dim {}, pi0 {}, theorem {}",
            self.lie_dim,
            self.component_group.order(),
            self.theorem
        )
    }
}

pub fn classify(data: &EndoData, albert: &AlbertDescriptor) -> Result<GroupIdentification> {
    albert.check_against(data)?;
    let g = data.genus();
    let lie_dim = centralizer_lie_dim(data);
    let center = center_dim(data);
    let tag = catalog_lookup(g, lie_dim, center).ok_or(Error::UnknownComponent {
        g,
        lie_dim,
        center_dim: center,
    })?;
    let albert_odd = matches!(
        albert.kind,
        AlbertType::I | AlbertType::II | AlbertType::III
    ) && g.is_multiple_of(albert.e * albert.d)
        && (g / (albert.e * albert.d)) % 2 == 1;
    let theorem = if albert.kind == AlbertType::CM {
        Theorem::CM
    } else if g <= 3 {
        Theorem::DimLe3
    } else if albert_odd {
        Theorem::AlbertOdd
    } else {
        Theorem::Unverified
    };
    Ok(GroupIdentification {
        tag,
        g,
        lie_dim,
        center_dim: center,
        component_group: data.galois.clone(),
        theorem,
    })
}

/// Restricts the Galois group to a subgroup.
pub fn base_change(data: &EndoData, subgroup: &[usize]) -> Result<EndoData> {
    let (group, old) = data.galois.subgroup(subgroup)?;
    let action = old.iter().map(|&t| data.action[t].clone()).collect();
    EndoData::new(data.form.clone(), data.basis.clone(), group, action)
}

/// Data of A^s: V^s with the block-sum form and D(A^s) = M_s(D), basis the
/// identity followed by every E_ab (x) b_k except E_00 (x) 1.
pub fn product_power(data: &EndoData, s: usize) -> Result<EndoData> {
    if s == 0 {
        return Err(Error::InvalidArgument("power must be at least 1".into()));
    }
    let n = 2 * data.g;
    let m = data.dim();
    let form = RatMatrix::identity(s).kron(&data.form);
    let index: Vec<(usize, usize, usize)> = (0..s)
        .flat_map(|a| (0..s).flat_map(move |b| (0..m).map(move |k| (a, b, k))))
        .filter(|&t| t != (0, 0, 0))
        .collect();
    let mut basis = vec![RatMatrix::identity(n * s)];
    basis.extend(
        index
            .iter()
            .map(|&(a, b, k)| RatMatrix::unit(s, a, b).kron(&data.basis[k])),
    );
    let images: Vec<Vec<RatMatrix>> = (0..data.galois.order())
        .map(|t| {
            let mut imgs = vec![RatMatrix::identity(n * s)];
            imgs.extend(
                index
                    .iter()
                    .map(|&(a, b, k)| RatMatrix::unit(s, a, b).kron(&data.image_unchecked(t, k))),
            );
            imgs
        })
        .collect();
    EndoData::from_images(form, basis, data.galois.clone(), &images)
}

/// A group with surjective homomorphisms onto two Galois groups.
#[derive(Clone, Debug)]
pub struct JointGalois {
    pub group: FiniteGroup,
    pub to_a: Vec<usize>,
    pub to_b: Vec<usize>,
}

impl JointGalois {
    /// Direct product of the two groups with the coordinate projections.
    pub fn product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let group = a.product(b);
        let nb = b.order();
        JointGalois {
            to_a: (0..group.order()).map(|x| x / nb).collect(),
            to_b: (0..group.order()).map(|x| x % nb).collect(),
            group,
        }
    }
}

fn block_sum(x: &RatMatrix, y: &RatMatrix) -> RatMatrix {
    RatMatrix::block_diag(&[x, y])
}

/// Data of A x B when Hom(A, B) = 0: block-diagonal form and algebra, with
/// the Galois action factoring through the two projections.
pub fn direct_sum(a: &EndoData, b: &EndoData, joint: &JointGalois) -> Result<EndoData> {
    let grp = &joint.group;
    if !grp.is_homomorphism(a.galois(), &joint.to_a)
        || !grp.is_surjective_onto(a.galois(), &joint.to_a)
    {
        return Err(Error::InvalidGalois(
            "map to the first factor is not a surjective homomorphism".into(),
        ));
    }
    if !grp.is_homomorphism(b.galois(), &joint.to_b)
        || !grp.is_surjective_onto(b.galois(), &joint.to_b)
    {
        return Err(Error::InvalidGalois(
            "map to the second factor is not a surjective homomorphism".into(),
        ));
    }
    let (na, nb) = (2 * a.g, 2 * b.g);
    let za = RatMatrix::zeros(na, na);
    let zb = RatMatrix::zeros(nb, nb);
    let form = block_sum(&a.form, &b.form);
    let mut basis = vec![RatMatrix::identity(na + nb)];
    basis.extend(a.basis.iter().map(|x| block_sum(x, &zb)));
    basis.extend(b.basis.iter().skip(1).map(|y| block_sum(&za, y)));
    let images: Vec<Vec<RatMatrix>> = (0..grp.order())
        .map(|t| {
            let (ta, tb) = (joint.to_a[t], joint.to_b[t]);
            let mut imgs = vec![RatMatrix::identity(na + nb)];
            imgs.extend((0..a.dim()).map(|i| block_sum(&a.image_unchecked(ta, i), &zb)));
            imgs.extend((1..b.dim()).map(|j| block_sum(&za, &b.image_unchecked(tb, j))));
            imgs
        })
        .collect();
    EndoData::from_images(form, basis, grp.clone(), &images)
}

/// Endomorphism data plus an optional declared Albert descriptor, as stored
/// in a text file.
#[derive(Clone, Debug, PartialEq)]
pub struct EndoFile {
    pub data: EndoData,
    pub albert: Option<AlbertDescriptor>,
}

impl EndoFile {
    pub fn load(path: &Path) -> Result<Self> {
        EndoFile::parse(&std::fs::read_to_string(path)?)
    }

    /// The declared descriptor, or one derived from the data.
    pub fn albert(&self) -> AlbertDescriptor {
        self.albert
            .unwrap_or_else(|| AlbertDescriptor::derive(&self.data))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<(String, Vec<(usize, String)>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let lineno = i + 1;
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::parse(lineno, "unterminated section header"));
                }
                let name = line[1..line.len() - 1].trim().to_ascii_lowercase();
                if sections.iter().any(|(n, _)| *n == name) {
                    return Err(Error::parse(lineno, format!("duplicate section [{name}]")));
                }
                sections.push((name, Vec::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push((lineno, line.to_string()));
            } else if !line.is_empty() {
                return Err(Error::parse(lineno, "content before the first section"));
            }
        }
        let section = |name: &str| {
            sections
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| b.as_slice())
        };
        if let Some((n, _)) = sections
            .iter()
            .find(|(n, _)| !["basis", "j", "galois", "albert"].contains(&n.as_str()))
        {
            return Err(Error::parse(0, format!("unknown section [{n}]")));
        }

        let basis_lines =
            section("basis").ok_or_else(|| Error::parse(0, "missing [basis] section"))?;
        let basis = parse_matrix_list(basis_lines)?;
        let first = basis
            .first()
            .ok_or_else(|| Error::parse(0, "[basis] is empty"))?;
        let n = first.rows();
        let form_lines: Vec<(usize, String)> = section("j")
            .ok_or_else(|| Error::parse(0, "missing [J] section"))?
            .iter()
            .filter(|(_, l)| !l.is_empty())
            .cloned()
            .collect();
        let form = parse_matrix(&form_lines)?;
        if form.rows() != n {
            return Err(Error::parse(0, "[J] size differs from the basis matrices"));
        }
        let m = basis.len();
        let (galois, action) = match section("galois") {
            Some(lines) => parse_galois(lines, m)?,
            None => (FiniteGroup::trivial(), vec![RatMatrix::identity(m)]),
        };
        let data = EndoData::new(form, basis, galois, action)?;
        let albert = match section("albert") {
            Some(lines) => Some(parse_albert(lines, data.genus())?),
            None => None,
        };
        Ok(EndoFile { data, albert })
    }

    pub fn to_text(&self) -> String {
        let d = &self.data;
        let mut out = String::from("[basis]\n");
        for (i, b) in d.basis.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            write_matrix(&mut out, b);
        }
        out.push_str("\n[J]\n");
        write_matrix(&mut out, &d.form);
        if d.galois.order() > 1 {
            out.push_str("\n[galois]\n");
            let _ = writeln!(out, "order {}", d.galois.order());
            out.push_str("table\n");
            for row in d.galois.table() {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
            for gen in d.galois.generators() {
                let _ = writeln!(out, "generator {gen}");
                write_matrix(&mut out, &d.action[gen]);
            }
        }
        if let Some(a) = &self.albert {
            let _ = writeln!(out, "\n[albert]\ntype {} e {} d {}", a.kind, a.e, a.d);
        }
        out
    }
}

fn write_matrix(out: &mut String, m: &RatMatrix) {
    for i in 0..m.rows() {
        let cells: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
}

fn parse_rational(tok: &str, line: usize) -> Result<Rational> {
    let (num, den) = match tok.split_once('/') {
        Some((a, b)) => (a, b),
        None => (tok, "1"),
    };
    let num: num::BigInt = num
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number '{tok}'")))?;
    let den: num::BigInt = den
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number '{tok}'")))?;
    if den.is_zero() {
        return Err(Error::parse(line, format!("zero denominator in '{tok}'")));
    }
    Ok(Rational::new(num, den))
}

fn parse_matrix(lines: &[(usize, String)]) -> Result<RatMatrix> {
    let mut rows = Vec::new();
    for (ln, l) in lines {
        let row = l
            .split_whitespace()
            .map(|t| parse_rational(t, *ln))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let line0 = lines.first().map_or(0, |x| x.0);
    let n = rows.len();
    if n == 0 {
        return Err(Error::parse(line0, "empty matrix"));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::parse(
            lines[k].0,
            format!("expected {n} entries in a square matrix row"),
        ));
    }
    Ok(RatMatrix::from_rows(rows))
}

fn parse_matrix_list(lines: &[(usize, String)]) -> Result<Vec<RatMatrix>> {
    let mut out = Vec::new();
    let mut cur: Vec<(usize, String)> = Vec::new();
    for l in lines.iter().chain(std::iter::once(&(0, String::new()))) {
        if l.1.is_empty() {
            if !cur.is_empty() {
                out.push(parse_matrix(&cur)?);
                cur.clear();
            }
        } else {
            cur.push(l.clone());
        }
    }
    if let Some(i) = out.iter().position(|b| b.rows() != out[0].rows()) {
        return Err(Error::parse(
            0,
            format!("basis matrix {i} has a different size"),
        ));
    }
    Ok(out)
}

fn parse_galois(lines: &[(usize, String)], m: usize) -> Result<(FiniteGroup, Vec<RatMatrix>)> {
    let lines: Vec<&(usize, String)> = lines.iter().filter(|(_, l)| !l.is_empty()).collect();
    let mut order = None;
    let mut table = Vec::new();
    let mut gens: Vec<(usize, RatMatrix)> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let (ln, l) = lines[i];
        let mut words = l.split_whitespace();
        match words.next() {
            Some("order") => {
                let v = words
                    .next()
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(*ln, "expected 'order <n>'"))?;
                order = Some(v);
                i += 1;
            }
            Some("table") => {
                let n = order.ok_or_else(|| Error::parse(*ln, "'order' must precede 'table'"))?;
                for k in 0..n {
                    let (rl, row) = lines
                        .get(i + 1 + k)
                        .ok_or_else(|| Error::parse(*ln, "table is truncated"))?;
                    let r = row
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|_| Error::parse(*rl, format!("bad table entry '{t}'")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    table.push(r);
                }
                i += 1 + n;
            }
            Some("generator") => {
                let el = words
                    .next()
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(*ln, "expected 'generator <element>'"))?;
                if i + 1 + m > lines.len() {
                    return Err(Error::parse(*ln, "generator matrix is truncated"));
                }
                let rows: Vec<(usize, String)> = lines[i + 1..i + 1 + m]
                    .iter()
                    .map(|x| (*x).clone())
                    .collect();
                gens.push((el, parse_matrix(&rows)?));
                i += 1 + m;
            }
            _ => {
                return Err(Error::parse(
                    *ln,
                    format!("unexpected line '{l}' in [galois]"),
                ))
            }
        }
    }
    let group = FiniteGroup::new(table)?;
    if order != Some(group.order()) {
        return Err(Error::InvalidGalois(
            "order does not match the table".into(),
        ));
    }
    let mut action: Vec<Option<RatMatrix>> = vec![None; group.order()];
    action[0] = Some(RatMatrix::identity(m));
    for (el, mat) in &gens {
        if !group.contains(*el) {
            return Err(Error::UnknownElement(*el));
        }
        if mat.rows() != m {
            return Err(Error::InvalidGalois(format!(
                "generator {el} matrix is not {m}x{m}"
            )));
        }
    }
    let mut frontier = vec![0];
    while let Some(x) = frontier.pop() {
        for (el, mat) in &gens {
            let y = group.mul(x, *el);
            let my = action[x].as_ref().unwrap().mul(mat);
            match &action[y] {
                None => {
                    action[y] = Some(my);
                    frontier.push(y);
                }
                Some(existing) if *existing != my => {
                    return Err(Error::InvalidGalois(format!(
                        "generator matrices are inconsistent at element {y}"
                    )));
                }
                Some(_) => {}
            }
        }
    }
    let action = action
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::InvalidGalois("generators do not generate the group".into()))?;
    Ok((group, action))
}

fn parse_albert(lines: &[(usize, String)], g: usize) -> Result<AlbertDescriptor> {
    let (ln, l) = lines
        .iter()
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| Error::parse(0, "empty [albert] section"))?;
    let w: Vec<&str> = l.split_whitespace().collect();
    match w.as_slice() {
        ["type", t, "e", e, "d", d] => {
            let kind: AlbertType = t
                .parse()
                .map_err(|_| Error::parse(*ln, format!("unknown type '{t}'")))?;
            let e = e.parse().map_err(|_| Error::parse(*ln, "bad e"))?;
            let d = d.parse().map_err(|_| Error::parse(*ln, "bad d"))?;
            AlbertDescriptor::new(kind, e, d, g)
        }
        _ => Err(Error::parse(*ln, "expected 'type <T> e <e> d <d>'")),
    }
}

impl fmt::Display for EndoData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "g={} [D:Q]={} |Gal|={}",
            self.g,
            self.dim(),
            self.galois.order()
        )
    }
}

impl EndoData {
    /// Whether `x` satisfies X^T J X = J.
    pub fn is_symplectic(&self, x: &RatMatrix) -> bool {
        x.transpose().mul(&self.form).mul(x) == self.form
    }

    /// Whether the basis generates D with 1 = basis[0] as unit.
    pub fn unit_is_identity(&self) -> bool {
        self.structure[0].iter().enumerate().all(|(j, c)| {
            c.iter()
                .enumerate()
                .all(|(k, x)| if k == j { x.is_one() } else { x.is_zero() })
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::frac;
    use proptest::prelude::*;

    pub(crate) fn cm_matrix() -> RatMatrix {
        RatMatrix::from_i64(&[&[0, -1], &[1, 0]])
    }

    pub(crate) fn cm_elliptic() -> EndoData {
        EndoData::new(
            standard_form_rational(1),
            vec![RatMatrix::identity(2), cm_matrix()],
            FiniteGroup::cyclic(2),
            vec![
                RatMatrix::identity(2),
                RatMatrix::from_i64(&[&[1, 0], &[0, -1]]),
            ],
        )
        .unwrap()
    }

    fn cm_albert(g: usize) -> AlbertDescriptor {
        AlbertDescriptor::new(AlbertType::CM, 2, 1, g).unwrap()
    }

    #[test]
    fn lie_dims() {
        assert_eq!(centralizer_lie_dim(&EndoData::trivial(1)), 3);
        assert_eq!(centralizer_lie_dim(&EndoData::trivial(2)), 10);
        assert_eq!(centralizer_lie_dim(&EndoData::trivial(3)), 21);
        assert_eq!(centralizer_lie_dim(&cm_elliptic()), 1);
    }

    #[test]
    fn validation_errors() {
        let j = standard_form_rational(1);
        let id = RatMatrix::identity(2);
        let triv = || (FiniteGroup::trivial(), vec![RatMatrix::identity(1)]);
        // symmetric form
        let (gr, act) = triv();
        assert!(EndoData::new(RatMatrix::identity(2), vec![id.clone()], gr, act).is_err());
        // first element not the identity
        let (gr, act) = triv();
        assert!(EndoData::new(j.clone(), vec![cm_matrix()], gr, act).is_err());
        // not closed: the nilpotent E_01 squares to 0 but E_01 * E_10 leaves span{I, E_01, E_10}
        let e01 = RatMatrix::unit(2, 0, 1);
        let e10 = RatMatrix::unit(2, 1, 0);
        let act3 = vec![RatMatrix::identity(3)];
        assert!(matches!(
            EndoData::new(
                j.clone(),
                vec![id.clone(), e01, e10],
                FiniteGroup::trivial(),
                act3
            ),
            Err(Error::InvalidEndoData(_))
        ));
        // dependent basis
        let act2 = vec![RatMatrix::identity(2)];
        assert!(EndoData::new(
            j.clone(),
            vec![id.clone(), id.scale(&rat(2))],
            FiniteGroup::trivial(),
            act2
        )
        .is_err());
        // action not a ring map: J -> 2J
        let bad = RatMatrix::from_i64(&[&[1, 0], &[0, 2]]);
        assert!(matches!(
            EndoData::new(
                j.clone(),
                vec![id.clone(), cm_matrix()],
                FiniteGroup::cyclic(2),
                vec![RatMatrix::identity(2), bad]
            ),
            Err(Error::InvalidGalois(_))
        ));
        // conjugation does not have order 4
        let conj = RatMatrix::from_i64(&[&[1, 0], &[0, -1]]);
        let z4 = vec![
            RatMatrix::identity(2),
            conj.clone(),
            RatMatrix::identity(2),
            conj,
        ];
        assert!(EndoData::new(j, vec![id, cm_matrix()], FiniteGroup::cyclic(4), z4).is_err());
    }

    #[test]
    fn classify_examples() {
        let id = classify(
            &EndoData::trivial(1),
            &AlbertDescriptor::derive(&EndoData::trivial(1)),
        )
        .unwrap();
        assert_eq!(
            (id.tag, id.lie_dim, id.component_group.order(), id.theorem),
            (ComponentTag::SU2, 3, 1, Theorem::DimLe3)
        );

        let cm = cm_elliptic();
        let id = classify(&cm, &cm_albert(1)).unwrap();
        assert_eq!(
            (id.tag, id.lie_dim, id.component_group.order(), id.theorem),
            (ComponentTag::U1, 1, 2, Theorem::CM)
        );
        assert_eq!(id.summary(), "U1, dim 1, pi0 2, theorem CM");

        let over_k = base_change(&cm, &[0]).unwrap();
        let id = classify(&over_k, &cm_albert(1)).unwrap();
        assert_eq!(
            (id.tag, id.component_group.order(), id.theorem),
            (ComponentTag::U1, 1, Theorem::CM)
        );

        let id = classify(
            &EndoData::trivial(2),
            &AlbertDescriptor::derive(&EndoData::trivial(2)),
        )
        .unwrap();
        assert_eq!(id.summary(), "USp4, dim 10, pi0 1, theorem DimLe3");

        let err = classify(
            &EndoData::trivial(4),
            &AlbertDescriptor::derive(&EndoData::trivial(4)),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownComponent { lie_dim: 36, .. }));
    }

    #[test]
    fn derived_albert() {
        assert_eq!(
            AlbertDescriptor::derive(&cm_elliptic()).kind,
            AlbertType::CM
        );
        assert_eq!(
            AlbertDescriptor::derive(&EndoData::trivial(2)).kind,
            AlbertType::I
        );
        assert!(AlbertDescriptor::new(AlbertType::II, 1, 2, 1).is_err());
        assert!(AlbertDescriptor::new(AlbertType::I, 1, 1, 2).is_ok());
        // CM claimed on data without a large commutative subalgebra
        assert!(classify(&EndoData::trivial(1), &cm_albert(1)).is_err());
        let sq = product_power(&cm_elliptic(), 2).unwrap();
        assert_eq!(commutative_subalgebra_dim(&sq), 4);
        assert_eq!(AlbertDescriptor::derive(&sq).kind, AlbertType::CM);
    }

    #[test]
    fn coset_systems() {
        let cm = cm_elliptic();
        let id_sys = twisted_coset_constraints(&cm, 0).unwrap();
        assert!(id_sys.is_solution(&RatMatrix::identity(2)));
        let tw = twisted_coset_constraints(&cm, 1).unwrap();
        let w1 = RatMatrix::from_i64(&[&[1, 0], &[0, -1]]);
        let w2 = RatMatrix::from_i64(&[&[0, -1], &[-1, 0]]);
        assert!(tw.is_solution(&w1) && tw.is_solution(&w2));
        assert!(!tw.is_symplectic(&w1) && !tw.is_symplectic(&w2));
        assert_eq!(w1.det(), rat(-1));
        assert_eq!(tw.solution_space().len(), 2);
        assert!(!tw.is_solution(&RatMatrix::identity(2)));
        assert!(matches!(
            twisted_coset_constraints(&cm, 2),
            Err(Error::UnknownElement(2))
        ));

        let triv = EndoData::trivial(1);
        let a = twisted_coset_constraints(&triv, 0).unwrap();
        assert_eq!(a.solution_space().len(), 4);
    }

    #[test]
    fn base_change_cases() {
        let cm = cm_elliptic();
        assert_eq!(base_change(&cm, &[1, 0]).unwrap(), cm);
        assert!(matches!(
            base_change(&cm, &[1]),
            Err(Error::NotASubgroup(_))
        ));
        assert_eq!(cm.kernel(), vec![0]);
        let k = base_change(&cm, &cm.kernel()).unwrap();
        assert_eq!(k.galois().order(), 1);

        let (h, _) = FiniteGroup::cyclic(4).subgroup(&[0, 2]).unwrap();
        assert_eq!(h.order(), 2);
    }

    #[test]
    fn product_power_invariance() {
        for data in [EndoData::trivial(1), cm_elliptic()] {
            let d0 = centralizer_lie_dim(&data);
            assert_eq!(product_power(&data, 1).unwrap(), data);
            for s in 1..=3 {
                let p = product_power(&data, s).unwrap();
                assert_eq!(centralizer_lie_dim(&p), d0, "s={s}");
                assert_eq!(p.galois().order(), data.galois().order());
                assert_eq!(p.dim(), s * s * data.dim());
            }
        }
        assert!(product_power(&cm_elliptic(), 0).is_err());
        let id = classify(&product_power(&cm_elliptic(), 2).unwrap(), &cm_albert(2)).unwrap();
        assert_eq!((id.tag, id.component_group.order()), (ComponentTag::U1, 2));
        let sq = product_power(&EndoData::trivial(1), 2).unwrap();
        let id = classify(&sq, &AlbertDescriptor::derive(&sq)).unwrap();
        assert_eq!((id.tag, id.component_group.order()), (ComponentTag::SU2, 1));
    }

    #[test]
    fn direct_sum_additivity() {
        let t = EndoData::trivial(1);
        let cm = cm_elliptic();
        let tt = direct_sum(&t, &t, &JointGalois::product(t.galois(), t.galois())).unwrap();
        assert_eq!(centralizer_lie_dim(&tt), 6);

        let joint = JointGalois {
            group: FiniteGroup::cyclic(2),
            to_a: vec![0, 1],
            to_b: vec![0, 0],
        };
        let s = direct_sum(&cm, &t, &joint).unwrap();
        assert_eq!(centralizer_lie_dim(&s), 4);
        let id = classify(&s, &AlbertDescriptor::derive(&s)).unwrap();
        assert_eq!(
            (id.tag, id.component_group.order()),
            (ComponentTag::U1xSU2, 2)
        );

        let swapped = JointGalois {
            group: FiniteGroup::cyclic(2),
            to_a: vec![0, 0],
            to_b: vec![0, 1],
        };
        let r = direct_sum(&t, &cm, &swapped).unwrap();
        assert_eq!(centralizer_lie_dim(&r), centralizer_lie_dim(&s));
        assert!(r.galois().is_isomorphic(s.galois()));

        let bad = JointGalois {
            group: FiniteGroup::cyclic(2),
            to_a: vec![1, 0],
            to_b: vec![0, 0],
        };
        assert!(matches!(
            direct_sum(&cm, &t, &bad),
            Err(Error::InvalidGalois(_))
        ));
    }

    #[test]
    fn center_dims() {
        assert_eq!(center_dim(&EndoData::trivial(2)), 1);
        assert_eq!(center_dim(&cm_elliptic()), 2);
        assert_eq!(
            center_dim(&product_power(&EndoData::trivial(1), 2).unwrap()),
            1
        );
        assert_eq!(center_dim(&product_power(&cm_elliptic(), 2).unwrap()), 2);
        assert!(product_power(&cm_elliptic(), 3).unwrap().unit_is_identity());
    }

    #[test]
    fn file_round_trip() {
        let sq = product_power(&cm_elliptic(), 2).unwrap();
        for (data, albert) in [
            (cm_elliptic(), Some(cm_albert(1))),
            (sq, None),
            (EndoData::trivial(2), None),
        ] {
            let f = EndoFile { data, albert };
            let text = f.to_text();
            let back = EndoFile::parse(&text).unwrap();
            assert_eq!(back, f);
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn file_errors() {
        assert!(matches!(
            EndoFile::parse("[J]\n0 1\n-1 0\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            EndoFile::parse("[basis]\n1 0\n0 1\n"),
            Err(Error::Parse { .. })
        ));
        let bad_num = "[basis]\n1 0\n0 x\n[J]\n0 1\n-1 0\n";
        assert!(matches!(
            EndoFile::parse(bad_num),
            Err(Error::Parse { line: 3, .. })
        ));
        let zero_den = "[basis]\n1 0\n0 1/0\n[J]\n0 1\n-1 0\n";
        assert!(EndoFile::parse(zero_den).is_err());
        let with_frac = "# comment\n[basis]\n1 0\n0 1\n\n0 -1/2\n2 0\n[J]\n0 1\n-1 0\n";
        let f = EndoFile::parse(with_frac).unwrap();
        assert_eq!(f.data.basis()[1][(0, 1)], frac(-1, 2));
        let inconsistent = "[basis]\n1 0\n0 1\n\n0 -1\n1 0\n[J]\n0 1\n-1 0\n[galois]\norder 2\ntable\n0 1\n1 0\ngenerator 1\n1 0\n0 1\n";
        assert!(matches!(
            EndoFile::parse(inconsistent),
            Err(Error::InvalidGalois(_))
        ));
    }

    fn small_invertible() -> impl Strategy<Value = RatMatrix> {
        proptest::collection::vec(-3i64..=3, 4).prop_filter_map("singular", |v| {
            let m = RatMatrix::from_i64(&[&[v[0], v[1]], &[v[2], v[3]]]);
            (!m.det().is_zero()).then_some(m)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn lie_dim_conjugation_invariant(p in small_invertible(), which in 0usize..2) {
            let data = if which == 0 { EndoData::trivial(1) } else { cm_elliptic() };
            let conj = data.conjugate(&p).unwrap();
            prop_assert_eq!(centralizer_lie_dim(&conj), centralizer_lie_dim(&data));
        }

        #[test]
        fn coset_quotients_centralize(c in proptest::collection::vec(-3i64..=3, 4)) {
            let cm = cm_elliptic();
            let tw = twisted_coset_constraints(&cm, 1).unwrap();
            let id_sys = twisted_coset_constraints(&cm, 0).unwrap();
            let sols = tw.solution_space();
            let comb = |a: i64, b: i64| sols[0].scale(&rat(a)).add(&sols[1].scale(&rat(b)));
            let g1 = comb(c[0], c[1]);
            let g2 = comb(c[2], c[3]);
            prop_assert!(tw.is_solution(&g1) && tw.is_solution(&g2));
            if let Some(inv) = g2.inverse() {
                prop_assert!(id_sys.is_solution(&inv.mul(&g1)));
            }
        }
    }
}
