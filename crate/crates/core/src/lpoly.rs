//! Hyperelliptic curves y^2 = f(x), point counts over F_p and F_{p^2}, and
//! the (normalized) characteristic polynomials of Frobenius built from them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;
use num::bigint::BigInt;
use num::{Integer, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ff_arith::{check_modulus, reduce, Fp2Field, QuadraticCharacter, MAX_MODULUS};
use crate::linalg::det_bigint;

/// Model y^2 = f(x) of a hyperelliptic curve over Q of genus 1, 2 or 3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveSpec {
    /// `coeffs[i]` is the coefficient of x^i; the last entry is nonzero.
    coeffs: Vec<i64>,
    genus: usize,
    disc: BigInt,
}

impl CurveSpec {
    /// Builds a curve from ascending coefficients of f.
    pub fn new(coeffs: &[i64]) -> Result<Self> {
        let mut coeffs = coeffs.to_vec();
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        let deg = coeffs.len().saturating_sub(1);
        if !(3..=8).contains(&deg) {
            return Err(Error::InvalidCurve(format!(
                "deg f = {deg}; expected 3..=8 (genus 1 to 3)"
            )));
        }
        let genus = (deg - 1) / 2;
        let disc = discriminant(&coeffs);
        if disc.is_zero() {
            return Err(Error::InvalidCurve("f is not squarefree (disc = 0)".into()));
        }
        Ok(CurveSpec {
            coeffs,
            genus,
            disc,
        })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> i64 {
        *self.coeffs.last().unwrap()
    }

    pub fn discriminant(&self) -> &BigInt {
        &self.disc
    }

    pub fn is_good_prime(&self, p: u64) -> bool {
        p > 2 && self.leading() % p as i64 != 0 && !(&self.disc % BigInt::from(p)).is_zero()
    }

    fn check_prime(&self, p: u64) -> Result<()> {
        if p == 2 {
            // every model y^2 = f(x) is singular in characteristic 2
            return Err(Error::BadReduction(2));
        }
        check_modulus(p)?;
        if !self.is_good_prime(p) {
            return Err(Error::BadReduction(p));
        }
        Ok(())
    }

    /// Canonical form `y^2=c_d*x^d+...+c_0`, zero terms omitted.
    pub fn canonical(&self) -> String {
        let mut out = String::from("y^2=");
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first && c > 0 {
                out.push('+');
            }
            first = false;
            if k == 0 {
                out.push_str(&c.to_string());
            } else {
                out.push_str(&format!("{c}*x^{k}"));
            }
        }
        out
    }

    fn reduced_coeffs(&self, p: u64) -> Vec<u64> {
        self.coeffs.iter().map(|&c| reduce(c, p)).collect()
    }
}

impl fmt::Display for CurveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for CurveSpec {
    type Err = Error;

    /// Accepts forms like `y^2=x^3+x+1`, `y^2 = 2x^5 - 3*x + 1` or the canonical form.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let Some(rhs) = s.strip_prefix("y^2=") else {
            return Err(Error::InvalidCurve(format!(
                "expected 'y^2=...', got '{s}'"
            )));
        };
        if rhs.is_empty() {
            return Err(Error::InvalidCurve("empty right-hand side".into()));
        }
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, ch) in rhs.char_indices() {
            if (ch == '+' || ch == '-') && i > start && !rhs[..i].ends_with('^') {
                terms.push(&rhs[start..i]);
                start = i;
            }
        }
        terms.push(&rhs[start..]);
        let mut coeffs: Vec<i64> = Vec::new();
        for term in terms {
            let (c, k) = parse_term(term)?;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, 0);
            }
            coeffs[k] = coeffs[k]
                .checked_add(c)
                .ok_or_else(|| Error::InvalidCurve("coefficient overflow".into()))?;
        }
        CurveSpec::new(&coeffs)
    }
}

fn parse_term(term: &str) -> Result<(i64, usize)> {
    let bad = || Error::InvalidCurve(format!("cannot parse term '{term}'"));
    let (sign, body) = match term.as_bytes().first() {
        Some(b'+') => (1, &term[1..]),
        Some(b'-') => (-1, &term[1..]),
        _ => (1, term),
    };
    if body.is_empty() {
        return Err(bad());
    }
    let Some(xpos) = body.find('x') else {
        let c: i64 = body.parse().map_err(|_| bad())?;
        return Ok((sign * c, 0));
    };
    let coef_part = body[..xpos].trim_end_matches('*');
    let c: i64 = if coef_part.is_empty() {
        1
    } else {
        coef_part.parse().map_err(|_| bad())?
    };
    let rest = &body[xpos + 1..];
    let k = if rest.is_empty() {
        1
    } else {
        rest.strip_prefix('^')
            .and_then(|e| e.parse::<usize>().ok())
            .ok_or_else(bad)?
    };
    Ok((sign * c, k))
}

/// disc(f) = (-1)^(n(n-1)/2) Res(f, f') / lead(f).
fn discriminant(coeffs: &[i64]) -> BigInt {
    let n = coeffs.len() - 1;
    let f: Vec<BigInt> = coeffs.iter().rev().map(|&c| BigInt::from(c)).collect();
    let df: Vec<BigInt> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .map(|(k, &c)| BigInt::from(c) * BigInt::from(k as i64))
        .collect();
    // Sylvester matrix of f (degree n) and f' (degree n-1), size 2n-1.
    let size = 2 * n - 1;
    let mut syl = vec![vec![BigInt::zero(); size]; size];
    for r in 0..n - 1 {
        for (j, c) in f.iter().enumerate() {
            syl[r][r + j] = c.clone();
        }
    }
    for r in 0..n {
        for (j, c) in df.iter().enumerate() {
            syl[n - 1 + r][r + j] = c.clone();
        }
    }
    let res = det_bigint(syl);
    let sign = if (n * (n - 1) / 2).is_multiple_of(2) {
        1
    } else {
        -1
    };
    let (q, r) = (res * BigInt::from(sign)).div_rem(&BigInt::from(coeffs[n]));
    debug_assert!(r.is_zero());
    q
}

/// Walks the values f(x0), f(x0+1), ... with additions only, using the
/// forward difference table of f.
struct DifferenceWalker {
    p: u64,
    diffs: Vec<u64>,
}

impl DifferenceWalker {
    fn new(coeffs: &[u64], p: u64) -> Self {
        let d = coeffs.len() - 1;
        let mut vals: Vec<u64> = (0..=d as u64).map(|x| horner(coeffs, x % p, p)).collect();
        let mut diffs = Vec::with_capacity(d + 1);
        for k in 0..=d {
            diffs.push(vals[0]);
            for j in 0..d - k {
                vals[j] = (vals[j + 1] + p - vals[j]) % p;
            }
        }
        DifferenceWalker { p, diffs }
    }

    #[inline]
    fn value(&self) -> u64 {
        self.diffs[0]
    }

    #[inline]
    fn step(&mut self) {
        let p = self.p;
        for k in 0..self.diffs.len() - 1 {
            let mut v = self.diffs[k] + self.diffs[k + 1];
            if v >= p {
                v -= p;
            }
            self.diffs[k] = v;
        }
    }
}

fn horner(coeffs: &[u64], x: u64, p: u64) -> u64 {
    coeffs.iter().rev().fold(0, |acc, &c| (acc * x + c) % p)
}

/// Same walk over a + b*s for fixed b, in F_{p^2}.
struct Fp2DifferenceWalker {
    p: u64,
    diffs: Vec<(u64, u64)>,
}

impl Fp2DifferenceWalker {
    fn new(coeffs: &[u64], field: &Fp2Field, b: u64) -> Self {
        let p = field.modulus();
        let d = coeffs.len() - 1;
        let eval = |a: u64| {
            coeffs.iter().rev().fold((0u64, 0u64), |acc, &c| {
                let m = field.mul_raw(acc, (a % p, b));
                ((m.0 + c) % p, m.1)
            })
        };
        let mut vals: Vec<(u64, u64)> = (0..=d as u64).map(eval).collect();
        let mut diffs = Vec::with_capacity(d + 1);
        for k in 0..=d {
            diffs.push(vals[0]);
            for j in 0..d - k {
                vals[j] = (
                    (vals[j + 1].0 + p - vals[j].0) % p,
                    (vals[j + 1].1 + p - vals[j].1) % p,
                );
            }
        }
        Fp2DifferenceWalker { p, diffs }
    }

    #[inline]
    fn value(&self) -> (u64, u64) {
        self.diffs[0]
    }

    #[inline]
    fn step(&mut self) {
        let p = self.p;
        for k in 0..self.diffs.len() - 1 {
            let (a, b) = (self.diffs[k], self.diffs[k + 1]);
            let mut x = a.0 + b.0;
            if x >= p {
                x -= p;
            }
            let mut y = a.1 + b.1;
            if y >= p {
                y -= p;
            }
            self.diffs[k] = (x, y);
        }
    }
}

fn count_fp(curve: &CurveSpec, p: u64, chi: &QuadraticCharacter) -> u64 {
    let coeffs = curve.reduced_coeffs(p);
    let mut walker = DifferenceWalker::new(&coeffs, p);
    let mut sum: i64 = 0;
    for _ in 0..p {
        sum += chi.get(walker.value()) as i64;
        walker.step();
    }
    let infinity = if curve.degree() % 2 == 1 {
        1
    } else {
        1 + chi.get(reduce(curve.leading(), p)) as i64
    };
    (p as i64 + sum + infinity) as u64
}

fn count_fp2(curve: &CurveSpec, p: u64, chi: &QuadraticCharacter) -> Result<u64> {
    let field = Fp2Field::new(p)?;
    let coeffs = curve.reduced_coeffs(p);
    let sum: i64 = (0..p)
        .map(|b| {
            let mut walker = Fp2DifferenceWalker::new(&coeffs, &field, b);
            let mut s: i64 = 0;
            for _ in 0..p {
                s += chi.get_ext(&field, walker.value()) as i64;
                walker.step();
            }
            s
        })
        .sum();
    let infinity = if curve.degree() % 2 == 1 {
        1
    } else {
        1 + chi.get_ext(&field, (reduce(curve.leading(), p), 0)) as i64
    };
    Ok((p as i64 * p as i64 + sum + infinity) as u64)
}

/// Number of F_p-points on the smooth projective model.
pub fn count_points(curve: &CurveSpec, p: u64) -> Result<u64> {
    curve.check_prime(p)?;
    let chi = QuadraticCharacter::new(p)?;
    Ok(count_fp(curve, p, &chi))
}

/// Number of F_{p^2}-points on the smooth projective model.
pub fn count_points_p2(curve: &CurveSpec, p: u64) -> Result<u64> {
    curve.check_prime(p)?;
    let chi = QuadraticCharacter::new(p)?;
    count_fp2(curve, p, &chi)
}

/// Monic characteristic polynomial of Frobenius,
/// `T^(2g) + c_(2g-1) T^(2g-1) + ... + c_0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobPoly {
    pub p: u64,
    pub g: usize,
    /// `coeffs[k] = c_k` for k = 0..=2g, with `coeffs[2g] = 1`.
    pub coeffs: Vec<i64>,
}

impl FrobPoly {
    /// Builds the polynomial from its top g coefficients c_(2g-1)..c_g,
    /// filling in the rest from self-reciprocity.
    pub fn from_top(p: u64, g: usize, top: &[i64]) -> Result<Self> {
        if top.len() != g {
            return Err(Error::InvalidArgument(format!(
                "expected {g} leading coefficients, got {}",
                top.len()
            )));
        }
        let mut coeffs = vec![0i64; 2 * g + 1];
        coeffs[2 * g] = 1;
        for (i, &c) in top.iter().enumerate() {
            coeffs[2 * g - 1 - i] = c;
        }
        // c_k = p^(g-k) c_(2g-k) for k < g
        for k in 0..g {
            let scale = (p as i64).checked_pow((g - k) as u32);
            coeffs[k] = scale
                .and_then(|s| s.checked_mul(coeffs[2 * g - k]))
                .ok_or_else(|| Error::Inconsistency("coefficient overflow".into()))?;
        }
        Ok(FrobPoly { p, g, coeffs })
    }

    /// Coefficients c_(2g-1), ..., c_0 (the cache row layout).
    pub fn row(&self) -> Vec<i64> {
        self.coeffs[..2 * self.g].iter().rev().copied().collect()
    }

    /// Sum of the Frobenius roots, -c_(2g-1).
    pub fn trace(&self) -> i64 {
        -self.coeffs[2 * self.g - 1]
    }

    /// |c_k| <= binom(2g, k) p^((2g-k)/2) for every k.
    pub fn satisfies_weil_bound(&self) -> bool {
        let n = 2 * self.g;
        (0..=n).all(|k| {
            let b = binomial(n, k) as i128;
            let lhs = (self.coeffs[k] as i128).pow(2);
            let rhs = b * b * (self.p as i128).pow((n - k) as u32);
            lhs <= rhs
        })
    }

    /// c_k = p^(g-k) c_(2g-k), as an exact integer identity.
    pub fn satisfies_functional_equation(&self) -> bool {
        let g = self.g;
        (0..=2 * g).all(|k| {
            let (lo, hi) = if k <= g {
                (k, 2 * g - k)
            } else {
                (2 * g - k, k)
            };
            let scale = (self.p as i128).pow((g - lo) as u32);
            self.coeffs[lo] as i128 == scale * self.coeffs[hi] as i128
        })
    }

    /// Complex roots alpha_i with |alpha_i| = sqrt(p).
    pub fn roots(&self) -> Vec<Complex<f64>> {
        let s = (self.p as f64).sqrt();
        normalize(self).roots().into_iter().map(|t| t * s).collect()
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Characteristic polynomial of Frobenius for genus 1 or 2.
pub fn frob_poly(curve: &CurveSpec, p: u64) -> Result<FrobPoly> {
    curve.check_prime(p)?;
    let chi = QuadraticCharacter::new(p)?;
    frob_poly_with(curve, p, &chi)
}

fn frob_poly_with(curve: &CurveSpec, p: u64, chi: &QuadraticCharacter) -> Result<FrobPoly> {
    let n1 = count_fp(curve, p, chi) as i64;
    let t1 = p as i64 + 1 - n1;
    let poly = match curve.genus() {
        1 => FrobPoly::from_top(p, 1, &[-t1])?,
        2 => {
            let n2 = count_fp2(curve, p, chi)? as i64;
            let t2 = (p * p) as i64 + 1 - n2;
            let num = t1 * t1 - t2;
            if num % 2 != 0 {
                return Err(Error::Inconsistency(format!(
                    "odd t1^2 - t2 = {num} at p={p} for {curve}"
                )));
            }
            FrobPoly::from_top(p, 2, &[-t1, num / 2])?
        }
        g => return Err(Error::UnsupportedGenus(g, "needs counts over F_{p^3}")),
    };
    if !poly.satisfies_weil_bound() {
        return Err(Error::Inconsistency(format!(
            "Weil bound violated at p={p}: {:?}",
            poly.coeffs
        )));
    }
    Ok(poly)
}

/// Unit-circle normalization p^(-g) P(sqrt(p) T), stored as its first g
/// coefficients (or only the first, for trace-only data).
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedPoly {
    pub g: usize,
    /// `coeffs[k-1]` is the coefficient of T^(2g-k).
    pub coeffs: Vec<f64>,
}

impl NormalizedPoly {
    pub fn a1(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn a2(&self) -> Option<f64> {
        self.coeffs.get(1).copied()
    }

    pub fn is_trace_only(&self) -> bool {
        self.coeffs.len() < self.g
    }

    /// Roots of the full polynomial, via the substitution x = T + 1/T which
    /// turns T^(-g) P(T) into a real polynomial of degree g in x.
    ///
    /// Supported for g <= 2; returns an empty vector otherwise.
    pub fn roots(&self) -> Vec<Complex<f64>> {
        const EPS: f64 = 1e-12;
        let xs: Vec<Complex<f64>> = match (self.g, self.coeffs.as_slice()) {
            (1, [a1]) => vec![Complex::new(-a1, 0.0)],
            (2, [a1, a2]) => {
                // x^2 + a1 x + (a2 - 2)
                let mut disc = a1 * a1 - 4.0 * (a2 - 2.0);
                if disc < 0.0 && disc > -EPS {
                    disc = 0.0;
                }
                let sq = Complex::new(disc, 0.0).sqrt();
                vec![(-a1 + sq) / 2.0, (-a1 - sq) / 2.0]
            }
            _ => return Vec::new(),
        };
        let mut roots = Vec::with_capacity(2 * self.g);
        for mut x in xs {
            if x.im == 0.0 && x.re.abs() > 2.0 && x.re.abs() < 2.0 + EPS {
                x.re = 2.0f64.copysign(x.re);
            }
            // T^2 - x T + 1
            let sq = (x * x / 4.0 - 1.0).sqrt();
            roots.push(x / 2.0 + sq);
            roots.push(x / 2.0 - sq);
        }
        roots
    }
}

/// a_k = c_(2g-k) p^(-k/2).
pub fn normalize(poly: &FrobPoly) -> NormalizedPoly {
    let g = poly.g;
    let p = poly.p as f64;
    let coeffs = (1..=g)
        .map(|k| poly.coeffs[2 * g - k] as f64 / p.powf(k as f64 / 2.0))
        .collect();
    NormalizedPoly { g, coeffs }
}

/// One good prime of an a_p sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct ApEntry {
    pub p: u64,
    /// Full polynomial for g <= 2; `None` for trace-only genus 3 data.
    pub frob: Option<FrobPoly>,
    /// Sum of the Frobenius roots, p + 1 - N_1.
    pub trace: i64,
    pub normalized: NormalizedPoly,
}

impl ApEntry {
    fn trace_only(p: u64, g: usize, trace: i64) -> Self {
        ApEntry {
            p,
            frob: None,
            trace,
            normalized: NormalizedPoly {
                g,
                coeffs: vec![-(trace as f64) / (p as f64).sqrt()],
            },
        }
    }

    fn full(poly: FrobPoly) -> Self {
        ApEntry {
            p: poly.p,
            trace: poly.trace(),
            normalized: normalize(&poly),
            frob: Some(poly),
        }
    }

    /// Cache row: c_(2g-1)..c_0, or just c_(2g-1) for trace-only data.
    pub fn row(&self) -> Vec<i64> {
        match &self.frob {
            Some(f) => f.row(),
            None => vec![-self.trace],
        }
    }

    pub fn from_row(p: u64, g: usize, row: &[i64]) -> Result<Self> {
        if row.len() == 1 && g == 3 {
            return Ok(ApEntry::trace_only(p, g, -row[0]));
        }
        if row.len() != 2 * g {
            return Err(Error::InvalidArgument(format!(
                "row for p={p} has {} coefficients, expected {}",
                row.len(),
                2 * g
            )));
        }
        let mut coeffs: Vec<i64> = row.iter().rev().copied().collect();
        coeffs.push(1);
        let poly = FrobPoly { p, g, coeffs };
        if !poly.satisfies_functional_equation() {
            return Err(Error::Inconsistency(format!(
                "row for p={p} violates the functional equation"
            )));
        }
        Ok(ApEntry::full(poly))
    }
}

/// Computes the entry for one good prime: the full polynomial for g <= 2,
/// the trace alone for g = 3.
pub fn ap_entry(curve: &CurveSpec, p: u64) -> Result<ApEntry> {
    curve.check_prime(p)?;
    let chi = QuadraticCharacter::new(p)?;
    if curve.genus() == 3 {
        let n1 = count_fp(curve, p, &chi) as i64;
        return Ok(ApEntry::trace_only(p, 3, p as i64 + 1 - n1));
    }
    frob_poly_with(curve, p, &chi).map(ApEntry::full)
}

/// Normalized data for every good odd prime up to a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ApSequence {
    pub entries: Vec<ApEntry>,
    /// Odd primes of bad reduction that were skipped.
    pub skipped: Vec<u64>,
}

impl ApSequence {
    pub fn normalized(&self) -> Vec<NormalizedPoly> {
        self.entries.iter().map(|e| e.normalized.clone()).collect()
    }

    pub fn labeled(&self) -> Vec<(u64, NormalizedPoly)> {
        self.entries
            .iter()
            .map(|e| (e.p, e.normalized.clone()))
            .collect()
    }

    pub fn primes(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.p).collect()
    }
}

/// Odd primes `p <= bound`.
pub fn odd_primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 3 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    (3..=n).filter(|&k| sieve[k]).map(|k| k as u64).collect()
}

/// Normalized Frobenius data at every good odd prime `p <= bound`, in
/// increasing order. Primes are processed in parallel.
pub fn ap_sequence(curve: &CurveSpec, bound: u64) -> Result<ApSequence> {
    ap_sequence_excluding(curve, bound, |_| false)
}

/// As [`ap_sequence`], omitting primes for which `skip` returns true.
pub fn ap_sequence_excluding(
    curve: &CurveSpec,
    bound: u64,
    skip: impl Fn(u64) -> bool + Sync,
) -> Result<ApSequence> {
    if bound >= MAX_MODULUS {
        return Err(Error::InvalidArgument(format!(
            "bound {bound} exceeds the supported modulus range (< {MAX_MODULUS})"
        )));
    }
    let (good, skipped): (Vec<u64>, Vec<u64>) = odd_primes_up_to(bound)
        .into_iter()
        .partition(|&p| curve.is_good_prime(p));
    let entries = good
        .into_par_iter()
        .filter(|&p| !skip(p))
        .map(|p| ap_entry(curve, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ApSequence { entries, skipped })
}

/// On-disk cache of Frobenius data for one curve.
///
/// Text layout: a header `# curve=<canonical> g=<g>` followed by one line
/// `p,c_(2g-1),...,c_0` per good prime in increasing order. Genus 3 rows
/// carry only `p,c_5`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApCache {
    pub curve: CurveSpec,
    pub rows: BTreeMap<u64, Vec<i64>>,
}

impl ApCache {
    pub fn new(curve: CurveSpec) -> Self {
        ApCache {
            curve,
            rows: BTreeMap::new(),
        }
    }

    pub fn header(&self) -> String {
        format!(
            "# curve={} g={}",
            self.curve.canonical(),
            self.curve.genus()
        )
    }

    pub fn insert(&mut self, entry: &ApEntry) {
        self.rows.insert(entry.p, entry.row());
    }

    pub fn contains(&self, p: u64) -> bool {
        self.rows.contains_key(&p)
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for (p, row) in &self.rows {
            out.push_str(&p.to_string());
            for c in row {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty cache file"))?;
        let body = header
            .strip_prefix("# curve=")
            .ok_or_else(|| Error::parse(1, "missing '# curve=' header"))?;
        let (curve_str, g_str) = body
            .rsplit_once(" g=")
            .ok_or_else(|| Error::parse(1, "missing ' g=' in header"))?;
        let curve: CurveSpec = curve_str.parse()?;
        let g: usize = g_str
            .parse()
            .map_err(|_| Error::parse(1, format!("bad genus '{g_str}'")))?;
        if g != curve.genus() {
            return Err(Error::parse(1, "genus does not match curve"));
        }
        let mut cache = ApCache::new(curve);
        let mut last = 0;
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<i64> = line
                .split(',')
                .map(|f| f.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
            let (&p, row) = fields
                .split_first()
                .ok_or_else(|| Error::parse(i + 1, "empty row"))?;
            if p <= last {
                return Err(Error::parse(i + 1, "rows must be sorted by p"));
            }
            last = p;
            ApEntry::from_row(p as u64, g, row).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            cache.rows.insert(p as u64, row.to_vec());
        }
        Ok(cache)
    }

    /// Entries with `p <= bound`, in increasing order.
    pub fn entries(&self, bound: u64) -> Result<Vec<ApEntry>> {
        let g = self.curve.genus();
        self.rows
            .range(..=bound)
            .map(|(&p, row)| ApEntry::from_row(p, g, row))
            .collect()
    }
}

/// Rounds sum alpha_i^k over the roots of `poly` to the nearest integer,
/// failing if it is more than 0.01 away from one.
pub fn power_sum(poly: &FrobPoly, k: u32) -> Option<i64> {
    let s: Complex<f64> = poly.roots().iter().map(|r| r.powu(k)).sum();
    let n = s.re.round();
    ((s.re - n).abs() <= 0.01 && s.im.abs() <= 0.01)
        .then(|| n.to_i64())
        .flatten()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(s: &str) -> CurveSpec {
        s.parse().unwrap()
    }

    /// Independent double loop over all (x, y) pairs.
    fn brute_count(c: &CurveSpec, p: u64) -> u64 {
        let mut n = 0;
        for x in 0..p {
            let fx = c
                .coeffs()
                .iter()
                .rev()
                .fold(0i64, |acc, &k| (acc * x as i64 + k).rem_euclid(p as i64));
            for y in 0..p {
                if (y * y) % p == fx as u64 {
                    n += 1;
                }
            }
        }
        let lead = c.leading().rem_euclid(p as i64) as u64;
        let lead_is_square = (1..p).any(|y| y * y % p == lead);
        n + if c.degree() % 2 == 1 {
            1
        } else if lead_is_square {
            2
        } else {
            0
        }
    }

    #[test]
    fn parsing_and_canonical_form() {
        let c = curve("y^2 = x^3 + x");
        assert_eq!(c.coeffs(), &[0, 1, 0, 1]);
        assert_eq!(c.canonical(), "y^2=1*x^3+1*x^1");
        let c = curve("y^2=-2x^6+3*x^2-x-7");
        assert_eq!(c.canonical(), "y^2=-2*x^6+3*x^2-1*x^1-7");
        assert_eq!(curve(&c.canonical()), c);
        assert_eq!(c.genus(), 2);
        assert!("y^2=x^3".parse::<CurveSpec>().is_err());
        assert!("y^2=x^2+1".parse::<CurveSpec>().is_err());
        assert!("x^3+x".parse::<CurveSpec>().is_err());
        assert!("y^2=x^3+?".parse::<CurveSpec>().is_err());
    }

    #[test]
    fn discriminants() {
        assert_eq!(curve("y^2=x^3+x").discriminant(), &BigInt::from(-4));
        assert_eq!(curve("y^2=x^3+x+1").discriminant(), &BigInt::from(-31));
        // disc(x^5 + 1) = 5^5
        assert_eq!(curve("y^2=x^5+1").discriminant(), &BigInt::from(3125));
        // disc(x^2 - 1)-style even-degree check: x^4 - 1 has disc -256
        assert_eq!(curve("y^2=x^4-1").discriminant(), &BigInt::from(-256));
    }

    #[test]
    fn count_examples() {
        let c = curve("y^2=x^3+x");
        assert_eq!(count_points(&c, 5).unwrap(), 4);
        assert_eq!(count_points(&c, 7).unwrap(), 8);
        assert!(matches!(count_points(&c, 2), Err(Error::BadReduction(2))));
        assert_eq!(count_points(&curve("y^2=x^5+1"), 7).unwrap(), 8);
        assert!(matches!(count_points(&c, 9), Err(Error::InvalidModulus(9))));
    }

    #[test]
    fn count_p2_examples() {
        assert_eq!(count_points_p2(&curve("y^2=x^5+1"), 7).unwrap(), 50);
        assert!(matches!(
            count_points_p2(&curve("y^2=x^5+1"), 5),
            Err(Error::BadReduction(5))
        ));
        let c = curve("y^2=x^3+x");
        let n1 = count_points(&c, 3).unwrap() as i64;
        let ap = 3 + 1 - n1;
        let n2 = count_points_p2(&c, 3).unwrap() as i64;
        assert_eq!(n2, 9 + 1 - (ap * ap - 2 * 3));
    }

    #[test]
    fn counts_match_brute_force() {
        let curves = [
            "y^2=x^3+x",
            "y^2=x^3+x+1",
            "y^2=x^5+1",
            "y^2=x^5+x+1",
            "y^2=2*x^6-x^3+5",
            "y^2=x^4+3*x+1",
            "y^2=x^7-x+1",
        ];
        for s in curves {
            let c = curve(s);
            for p in [3u64, 5, 7, 11, 13] {
                if !c.is_good_prime(p) {
                    continue;
                }
                assert_eq!(
                    count_points(&c, p).unwrap(),
                    brute_count(&c, p),
                    "{s} p={p}"
                );
            }
        }
    }

    #[test]
    fn p2_count_matches_brute_force() {
        // brute force over F_{p^2} by enumerating all (x, y)
        let c = curve("y^2=x^5+x+1");
        for p in [3u64, 5, 7] {
            if !c.is_good_prime(p) {
                continue;
            }
            let f = Fp2Field::new(p).unwrap();
            let coeffs: Vec<_> = c.coeffs().iter().map(|&k| f.elem(k, 0)).collect();
            let all: Vec<_> = f.elements().collect();
            let mut n = 0u64;
            for x in &all {
                let fx = coeffs
                    .iter()
                    .rev()
                    .fold(f.zero(), |acc, k| acc.mul(x).unwrap().add(k).unwrap());
                n += all.iter().filter(|y| y.mul(y).unwrap() == fx).count() as u64;
            }
            assert_eq!(count_points_p2(&c, p).unwrap(), n + 1, "p={p}");
        }
    }

    #[test]
    fn frob_poly_examples() {
        let c = curve("y^2=x^3+x");
        assert_eq!(frob_poly(&c, 5).unwrap().coeffs, vec![5, -2, 1]);
        assert_eq!(frob_poly(&c, 7).unwrap().coeffs, vec![7, 0, 1]);
        let c = curve("y^2=x^5+1");
        assert_eq!(frob_poly(&c, 7).unwrap().coeffs, vec![49, 0, 0, 0, 1]);
        let c3 = curve("y^2=x^7+x+3");
        assert!(matches!(
            frob_poly(&c3, 7),
            Err(Error::UnsupportedGenus(3, _))
        ));
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&FrobPoly::from_top(5, 1, &[-2]).unwrap());
        assert!((n.a1() + 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((n.a1() + 0.894427191).abs() < 1e-9);
        let n = normalize(&FrobPoly::from_top(7, 1, &[0]).unwrap());
        assert_eq!(n.coeffs, vec![0.0]);
        let n = normalize(&FrobPoly::from_top(7, 2, &[0, 0]).unwrap());
        assert_eq!(n.coeffs, vec![0.0, 0.0]);
        for r in n.roots() {
            assert!((r.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ap_sequence_examples() {
        let s = ap_sequence(&curve("y^2=x^3+x"), 10).unwrap();
        assert_eq!(s.primes(), vec![3, 5, 7]);
        assert!(s.skipped.is_empty());
        assert!(ap_sequence(&curve("y^2=x^3+x"), 2)
            .unwrap()
            .entries
            .is_empty());
        let s = ap_sequence(&curve("y^2=x^5+1"), 12).unwrap();
        assert_eq!(s.primes(), vec![3, 7, 11]);
        assert_eq!(s.skipped, vec![5]);
    }

    #[test]
    fn genus_three_is_trace_only() {
        let c = curve("y^2=x^7+x+3");
        let s = ap_sequence(&c, 40).unwrap();
        assert!(!s.entries.is_empty());
        for e in &s.entries {
            assert!(e.frob.is_none());
            assert!(e.normalized.is_trace_only());
            assert!(e.normalized.a1().abs() <= 6.0);
            assert_eq!(
                e.trace,
                e.p as i64 + 1 - count_points(&c, e.p).unwrap() as i64
            );
        }
    }

    #[test]
    fn invariants_hold_on_small_ranges() {
        for s in ["y^2=x^3+x+1", "y^2=x^5+x+1", "y^2=x^6+2*x+3", "y^2=x^5-x"] {
            let c = curve(s);
            let seq = ap_sequence(&c, 200).unwrap();
            for e in &seq.entries {
                let f = e.frob.as_ref().unwrap();
                assert!(f.satisfies_weil_bound(), "{s} p={}", e.p);
                assert!(f.satisfies_functional_equation());
                assert!(e.normalized.a1().abs() <= 2.0 * c.genus() as f64 + 1e-12);
                for r in e.normalized.roots() {
                    assert!((r.norm() - 1.0).abs() < 1e-9, "{s} p={} root {r}", e.p);
                }
                let n1 = count_points(&c, e.p).unwrap() as i64;
                assert_eq!(n1, e.p as i64 + 1 - power_sum(f, 1).unwrap());
                if c.genus() == 2 {
                    let n2 = count_points_p2(&c, e.p).unwrap() as i64;
                    assert_eq!(n2, (e.p * e.p) as i64 + 1 - power_sum(f, 2).unwrap());
                }
            }
        }
    }

    #[test]
    fn self_reciprocity_as_polynomial_identity() {
        // P(T) = p^(-g) T^(2g) P(p/T), checked at rational points
        let c = curve("y^2=x^5+x+1");
        for e in ap_sequence(&c, 60).unwrap().entries {
            let f = e.frob.unwrap();
            let eval = |t: f64| {
                f.coeffs
                    .iter()
                    .rev()
                    .fold(0.0, |acc, &k| acc * t + k as f64)
            };
            for t in [0.5f64, 1.5, 3.0] {
                let lhs = eval(t);
                let rhs = (f.p as f64).powi(-2) * t.powi(4) * eval(f.p as f64 / t);
                assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn cache_round_trip() {
        let c = curve("y^2=x^5+x+1");
        let seq = ap_sequence(&c, 50).unwrap();
        let mut cache = ApCache::new(c.clone());
        for e in &seq.entries {
            cache.insert(e);
        }
        let text = cache.to_text();
        assert!(text.starts_with("# curve=y^2=1*x^5+1*x^1+1 g=2\n"));
        let parsed = ApCache::parse(&text).unwrap();
        assert_eq!(parsed, cache);
        assert_eq!(parsed.to_text(), text);
        assert_eq!(parsed.entries(50).unwrap(), seq.entries);
    }

    #[test]
    fn cache_rejects_bad_rows() {
        assert!(ApCache::parse("# curve=y^2=1*x^3+1*x^1 g=1\n5,-2,6\n").is_err());
        assert!(ApCache::parse("# curve=y^2=1*x^3+1*x^1 g=2\n").is_err());
        assert!(ApCache::parse("# curve=y^2=1*x^3+1*x^1 g=1\n7,0,7\n5,-2,5\n").is_err());
        assert!(ApCache::parse("5,-2,5\n").is_err());
    }

    #[test]
    fn large_prime_bound_rejected() {
        assert!(ap_sequence(&curve("y^2=x^3+x"), 1 << 21).is_err());
    }
}
