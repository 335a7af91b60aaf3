//! Arithmetic in prime fields F_p and their quadratic extensions F_{p^2}.
//!
//! Moduli are odd primes below [`MAX_MODULUS`], so every product of two
//! reduced residues fits comfortably in a `u64`.

use std::fmt;

use crate::error::{Error, Result};

/// Upper bound (exclusive) on supported moduli.
pub const MAX_MODULUS: u64 = 1 << 20;

/// Deterministic trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Checks that `p` is an odd prime in the supported range.
pub fn check_modulus(p: u64) -> Result<()> {
    if !(3..MAX_MODULUS).contains(&p) || !is_prime(p) {
        return Err(Error::InvalidModulus(p));
    }
    Ok(())
}

#[inline]
pub(crate) fn reduce(a: i64, p: u64) -> u64 {
    a.rem_euclid(p as i64) as u64
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Legendre symbol via Euler's criterion.
pub fn legendre(a: i64, p: u64) -> Result<i8> {
    check_modulus(p)?;
    let r = pow_mod(reduce(a, p), (p - 1) / 2, p);
    Ok(match r {
        0 => 0,
        1 => 1,
        _ => -1,
    })
}

/// Smallest positive quadratic non-residue modulo `p`.
pub fn find_nonresidue(p: u64) -> Result<u64> {
    check_modulus(p)?;
    (2..p)
        .find(|&n| pow_mod(n, (p - 1) / 2, p) == p - 1)
        .ok_or_else(|| Error::Inconsistency(format!("no non-residue mod {p}")))
}

/// Element of F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fp {
    p: u64,
    value: u64,
}

impl Fp {
    pub fn new(value: i64, p: u64) -> Result<Self> {
        check_modulus(p)?;
        Ok(Fp {
            p,
            value: reduce(value, p),
        })
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.p
    }

    fn check(self, other: Fp) -> Result<()> {
        if self.p != other.p {
            return Err(Error::IncompatibleField(self.p, 0, other.p, 0));
        }
        Ok(())
    }

    pub fn add(self, other: Fp) -> Result<Fp> {
        self.check(other)?;
        Ok(Fp {
            p: self.p,
            value: (self.value + other.value) % self.p,
        })
    }

    pub fn sub(self, other: Fp) -> Result<Fp> {
        self.check(other)?;
        Ok(Fp {
            p: self.p,
            value: (self.value + self.p - other.value) % self.p,
        })
    }

    pub fn mul(self, other: Fp) -> Result<Fp> {
        self.check(other)?;
        Ok(Fp {
            p: self.p,
            value: mul_mod(self.value, other.value, self.p),
        })
    }

    pub fn pow(self, k: u64) -> Fp {
        Fp {
            p: self.p,
            value: pow_mod(self.value, k, self.p),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self) -> Option<Fp> {
        (self.value != 0).then(|| self.pow(self.p - 2))
    }

    pub fn legendre(self) -> i8 {
        match pow_mod(self.value, (self.p - 1) / 2, self.p) {
            0 => 0,
            1 => 1,
            _ => -1,
        }
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.p)
    }
}

/// The field F_p[s]/(s^2 - n) for a fixed non-residue `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fp2Field {
    p: u64,
    n: u64,
}

impl Fp2Field {
    /// Uses the smallest non-residue, so the representation is reproducible.
    pub fn new(p: u64) -> Result<Self> {
        let n = find_nonresidue(p)?;
        Ok(Fp2Field { p, n })
    }

    pub fn with_nonresidue(p: u64, n: u64) -> Result<Self> {
        check_modulus(p)?;
        let n = n % p;
        if pow_mod(n, (p - 1) / 2, p) != p - 1 {
            return Err(Error::InvalidArgument(format!(
                "{n} is not a quadratic non-residue mod {p}"
            )));
        }
        Ok(Fp2Field { p, n })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn nonresidue(&self) -> u64 {
        self.n
    }

    pub fn elem(&self, a: i64, b: i64) -> Fp2 {
        Fp2 {
            field: *self,
            a: reduce(a, self.p),
            b: reduce(b, self.p),
        }
    }

    pub fn zero(&self) -> Fp2 {
        self.elem(0, 0)
    }

    pub fn one(&self) -> Fp2 {
        self.elem(1, 0)
    }

    /// All p^2 elements, ordered by (b, a).
    pub fn elements(&self) -> impl Iterator<Item = Fp2> + '_ {
        let p = self.p as i64;
        (0..p).flat_map(move |b| (0..p).map(move |a| self.elem(a, b)))
    }

    #[inline]
    pub(crate) fn mul_raw(&self, x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
        let p = self.p;
        let bb = mul_mod(mul_mod(x.1, y.1, p), self.n, p);
        let a = (mul_mod(x.0, y.0, p) + bb) % p;
        let b = (mul_mod(x.0, y.1, p) + mul_mod(x.1, y.0, p)) % p;
        (a, b)
    }

    /// Norm a^2 - n b^2 of a + b s, an element of F_p.
    #[inline]
    pub(crate) fn norm_raw(&self, x: (u64, u64)) -> u64 {
        let p = self.p;
        let nb2 = mul_mod(mul_mod(x.1, x.1, p), self.n, p);
        (mul_mod(x.0, x.0, p) + p - nb2) % p
    }
}

/// Element a + b s of F_{p^2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fp2 {
    field: Fp2Field,
    a: u64,
    b: u64,
}

impl Fp2 {
    pub fn field(&self) -> Fp2Field {
        self.field
    }

    pub fn coords(&self) -> (u64, u64) {
        (self.a, self.b)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    fn check(&self, other: &Fp2) -> Result<()> {
        if self.field != other.field {
            return Err(Error::IncompatibleField(
                self.field.p,
                self.field.n,
                other.field.p,
                other.field.n,
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Fp2) -> Result<Fp2> {
        self.check(other)?;
        let p = self.field.p;
        Ok(Fp2 {
            field: self.field,
            a: (self.a + other.a) % p,
            b: (self.b + other.b) % p,
        })
    }

    pub fn mul(&self, other: &Fp2) -> Result<Fp2> {
        fp2_mul(self, other)
    }

    pub fn pow(&self, k: u64) -> Fp2 {
        fp2_pow(self, k)
    }

    /// Frobenius x -> x^p, i.e. a + b s -> a - b s.
    pub fn frobenius(&self) -> Fp2 {
        let p = self.field.p;
        Fp2 {
            field: self.field,
            a: self.a,
            b: (p - self.b) % p,
        }
    }

    pub fn norm(&self) -> u64 {
        self.field.norm_raw((self.a, self.b))
    }
}

impl fmt::Display for Fp2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*s", self.a, self.b)
    }
}

pub fn fp2_mul(x: &Fp2, y: &Fp2) -> Result<Fp2> {
    x.check(y)?;
    let (a, b) = x.field.mul_raw((x.a, x.b), (y.a, y.b));
    Ok(Fp2 {
        field: x.field,
        a,
        b,
    })
}

pub fn fp2_pow(x: &Fp2, mut k: u64) -> Fp2 {
    let field = x.field;
    let mut acc = (1 % field.p, 0);
    let mut base = (x.a, x.b);
    while k > 0 {
        if k & 1 == 1 {
            acc = field.mul_raw(acc, base);
        }
        base = field.mul_raw(base, base);
        k >>= 1;
    }
    Fp2 {
        field,
        a: acc.0,
        b: acc.1,
    }
}

/// Squareness by Euler's criterion in F_{p^2}: x = 0 or x^((p^2-1)/2) = 1.
pub fn fp2_is_square(x: &Fp2) -> bool {
    if x.is_zero() {
        return true;
    }
    let p = x.field.p;
    let r = fp2_pow(x, (p * p - 1) / 2);
    r.a == 1 && r.b == 0
}

/// Quadratic character table of F_p: `chi[v]` is the Legendre symbol of `v`.
///
/// Built with additions only, using (x+1)^2 = x^2 + 2x + 1.
#[derive(Clone, Debug)]
pub struct QuadraticCharacter {
    p: u64,
    chi: Vec<i8>,
}

impl QuadraticCharacter {
    pub fn new(p: u64) -> Result<Self> {
        check_modulus(p)?;
        let mut chi = vec![-1i8; p as usize];
        chi[0] = 0;
        let mut sq = 0u64;
        let mut odd = 1u64;
        for _ in 1..=(p - 1) / 2 {
            sq += odd;
            if sq >= p {
                sq -= p;
            }
            odd += 2;
            if odd >= p {
                odd -= p;
            }
            chi[sq as usize] = 1;
        }
        Ok(QuadraticCharacter { p, chi })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn get(&self, v: u64) -> i8 {
        self.chi[v as usize]
    }

    /// Quadratic character of F_{p^2}, via the norm to F_p.
    #[inline]
    pub fn get_ext(&self, field: &Fp2Field, x: (u64, u64)) -> i8 {
        self.chi[field.norm_raw(x) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre(0, 7).unwrap(), 0);
        assert_eq!(legendre(1, 7).unwrap(), 1);
        assert_eq!(legendre(3, 5).unwrap(), -1);
        assert_eq!(legendre(-1, 5).unwrap(), 1);
        assert_eq!(legendre(-1, 7).unwrap(), -1);
    }

    #[test]
    fn invalid_moduli() {
        assert!(matches!(legendre(1, 2), Err(Error::InvalidModulus(2))));
        assert!(matches!(legendre(1, 9), Err(Error::InvalidModulus(9))));
        assert!(matches!(find_nonresidue(1), Err(Error::InvalidModulus(1))));
        assert!(Fp2Field::new(1 << 21).is_err());
        assert!(Fp2Field::new((1 << 20) + 7).is_err());
    }

    #[test]
    fn nonresidue_examples() {
        assert_eq!(find_nonresidue(5).unwrap(), 2);
        assert_eq!(find_nonresidue(7).unwrap(), 3);
        assert_eq!(find_nonresidue(13).unwrap(), 2);
        // smallest non-residue mod 71 is 7
        assert_eq!(find_nonresidue(71).unwrap(), 7);
    }

    #[test]
    fn residue_counts() {
        for p in [3u64, 5, 7, 11, 13, 101] {
            let qr = (1..p as i64)
                .filter(|&a| legendre(a, p).unwrap() == 1)
                .count();
            assert_eq!(qr as u64, (p - 1) / 2);
            let chi = QuadraticCharacter::new(p).unwrap();
            for a in 0..p {
                assert_eq!(chi.get(a), legendre(a as i64, p).unwrap());
            }
        }
    }

    #[test]
    fn fp2_examples() {
        let f = Fp2Field::with_nonresidue(3, 2).unwrap();
        let s = f.elem(0, 1);
        assert_eq!(fp2_mul(&s, &s).unwrap(), f.elem(2, 0));
        assert_eq!(fp2_pow(&s, 8), f.one());
        assert!(fp2_is_square(&f.elem(2, 0)));
        // exhaustive check that 2 really is a square
        assert!(f
            .elements()
            .any(|x| fp2_mul(&x, &x).unwrap() == f.elem(2, 0)));
    }

    #[test]
    fn nonresidue_must_be_verified() {
        assert!(Fp2Field::with_nonresidue(7, 2).is_err());
        assert!(Fp2Field::with_nonresidue(7, 3).is_ok());
    }

    #[test]
    fn mismatched_fields() {
        let f = Fp2Field::with_nonresidue(7, 3).unwrap();
        let g = Fp2Field::with_nonresidue(7, 5).unwrap();
        assert!(matches!(
            fp2_mul(&f.one(), &g.one()),
            Err(Error::IncompatibleField(7, 3, 7, 5))
        ));
        let a = Fp::new(1, 5).unwrap();
        let b = Fp::new(1, 7).unwrap();
        assert!(a.mul(b).is_err());
    }

    #[test]
    fn fp_basics() {
        let a = Fp::new(-3, 7).unwrap();
        assert_eq!(a.value(), 4);
        assert_eq!(a.mul(a.inv().unwrap()).unwrap().value(), 1);
        assert!(Fp::new(0, 7).unwrap().inv().is_none());
        assert_eq!(a.sub(Fp::new(5, 7).unwrap()).unwrap().value(), 6);
        assert_eq!(a.add(Fp::new(5, 7).unwrap()).unwrap().value(), 2);
    }

    #[test]
    fn group_order_and_square_count() {
        for p in [3u64, 5, 7, 11, 13] {
            let f = Fp2Field::new(p).unwrap();
            let mut squares = 0;
            for x in f.elements() {
                if x.is_zero() {
                    continue;
                }
                assert_eq!(fp2_pow(&x, p * p - 1), f.one());
                if fp2_is_square(&x) {
                    squares += 1;
                }
            }
            assert_eq!(squares, (p * p - 1) / 2);
        }
    }

    #[test]
    fn field_axioms_exhaustive() {
        for p in [3u64, 5] {
            let f = Fp2Field::new(p).unwrap();
            let all: Vec<Fp2> = f.elements().collect();
            for x in &all {
                for y in &all {
                    let xy = fp2_mul(x, y).unwrap();
                    assert_eq!(xy, fp2_mul(y, x).unwrap());
                    for z in &all {
                        let l = fp2_mul(&xy, z).unwrap();
                        let r = fp2_mul(x, &fp2_mul(y, z).unwrap()).unwrap();
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    #[test]
    fn frobenius_is_automorphism_fixing_fp() {
        for p in [3u64, 5, 7] {
            let f = Fp2Field::new(p).unwrap();
            let mut fixed = 0;
            for x in f.elements() {
                let fx = x.frobenius();
                assert_eq!(fx, fp2_pow(&x, p));
                if fx == x {
                    fixed += 1;
                    assert_eq!(x.coords().1, 0);
                }
                for y in f.elements() {
                    let lhs = fp2_mul(&x, &y).unwrap().frobenius();
                    let rhs = fp2_mul(&fx, &y.frobenius()).unwrap();
                    assert_eq!(lhs, rhs);
                    assert_eq!(
                        x.add(&y).unwrap().frobenius(),
                        fx.add(&y.frobenius()).unwrap()
                    );
                }
            }
            assert_eq!(fixed, p);
        }
    }

    #[test]
    fn norm_character_matches_euler_criterion() {
        for p in [3u64, 5, 7, 11, 13] {
            let f = Fp2Field::new(p).unwrap();
            let chi = QuadraticCharacter::new(p).unwrap();
            for x in f.elements() {
                let via_norm = chi.get_ext(&f, x.coords());
                let expected = if x.is_zero() {
                    0
                } else if fp2_is_square(&x) {
                    1
                } else {
                    -1
                };
                assert_eq!(via_norm, expected, "p={p} x={x}");
            }
        }
    }
}
