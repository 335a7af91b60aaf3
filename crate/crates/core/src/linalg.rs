//! Exact linear algebra over the rationals.
//!
//! All elimination is fraction-free: rational rows are scaled to integer rows
//! and reduced with integer row operations, dividing each row by its content
//! to keep entries small. Nothing here touches floating point.

use std::fmt;
use std::ops::{Index, IndexMut};

use num::bigint::BigInt;
use num::integer::Integer;
use num::rational::BigRational;
use num::{One, Signed, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Dense rational matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = rat(v);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        RatMatrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Rational>) -> Self {
        assert_eq!(data.len(), rows * cols);
        RatMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Rational] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: &Rational) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn neg(&self) -> RatMatrix {
        self.scale(&rat(-1))
    }

    /// Block-diagonal sum of square or rectangular blocks.
    pub fn block_diag(blocks: &[&RatMatrix]) -> RatMatrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)].clone();
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &RatMatrix) -> RatMatrix {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * &other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Matrix unit E_ij of the given size.
    pub fn unit(n: usize, i: usize, j: usize) -> RatMatrix {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = Rational::one();
        m
    }

    pub fn rank(&self) -> usize {
        rank(&self.row_vecs(), self.cols)
    }

    pub fn inverse(&self) -> Option<RatMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let e: Vec<Rational> = (0..n)
                .map(|i| {
                    if i == j {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect();
            cols.push(solve(&self.row_vecs(), n, &e)?);
        }
        let mut inv = Self::zeros(n, n);
        for (j, col) in cols.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        Some(inv)
    }

    pub fn det(&self) -> Rational {
        assert!(self.is_square());
        let (int_rows, scale) = integer_rows_with_scale(&self.row_vecs());
        Rational::new(det_bigint(int_rows), scale)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num::ToPrimitive;
        self.data
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect()
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

fn lcm_of_denominators(row: &[Rational]) -> BigInt {
    row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Clears denominators row by row.
pub fn integer_rows(rows: &[Vec<Rational>]) -> Vec<Vec<BigInt>> {
    integer_rows_with_scale(rows).0
}

/// Integer rows plus the product of the per-row multipliers used.
fn integer_rows_with_scale(rows: &[Vec<Rational>]) -> (Vec<Vec<BigInt>>, BigInt) {
    let mut scale = BigInt::one();
    let out = rows
        .iter()
        .map(|row| {
            let l = lcm_of_denominators(row);
            scale *= &l;
            row.iter()
                .map(|v| (v * Rational::from_integer(l.clone())).to_integer())
                .collect()
        })
        .collect();
    (out, scale)
}

fn primitive(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if !g.is_zero() && !g.is_one() {
        for v in row.iter_mut() {
            *v /= &g;
        }
    }
}

/// Integer row echelon form together with its pivot columns.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub rows: Vec<Vec<BigInt>>,
    pub pivots: Vec<usize>,
    pub cols: usize,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Fraction-free elimination. Each row update is
/// `row_i <- (piv/g)*row_i - (lead/g)*row_r` followed by division by the row content.
pub fn echelon(mut m: Vec<Vec<BigInt>>, cols: usize) -> Echelon {
    let nrows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == nrows {
            break;
        }
        // Smallest nonzero entry as pivot keeps the numbers tame.
        let pivot = (r..nrows)
            .filter(|&i| !m[i][c].is_zero())
            .min_by(|&a, &b| m[a][c].abs().cmp(&m[b][c].abs()));
        let Some(pi) = pivot else { continue };
        m.swap(r, pi);
        let (head, tail) = m.split_at_mut(r + 1);
        let pivot_row = &head[r];
        for row in tail.iter_mut() {
            if row[c].is_zero() {
                continue;
            }
            let g = pivot_row[c].gcd(&row[c]);
            let mul_cur = &pivot_row[c] / &g;
            let mul_piv = &row[c] / &g;
            for j in c..cols {
                let v = &row[j] * &mul_cur - &pivot_row[j] * &mul_piv;
                row[j] = v;
            }
            debug_assert!(row[c].is_zero());
            primitive(row);
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    Echelon {
        rows: m,
        pivots,
        cols,
    }
}

pub fn rank(rows: &[Vec<Rational>], cols: usize) -> usize {
    echelon(integer_rows(rows), cols).rank()
}

/// Back-substitution on an echelon form with the given free-variable values.
fn back_substitute(
    ech: &Echelon,
    free_values: &[(usize, Rational)],
    rhs: Option<&[BigInt]>,
) -> Vec<Rational> {
    let mut x = vec![Rational::zero(); ech.cols];
    for (j, v) in free_values {
        x[*j] = v.clone();
    }
    for (k, &c) in ech.pivots.iter().enumerate().rev() {
        let row = &ech.rows[k];
        let mut acc = match rhs {
            Some(b) => Rational::from_integer(b[k].clone()),
            None => Rational::zero(),
        };
        for j in c + 1..ech.cols {
            if !row[j].is_zero() && !x[j].is_zero() {
                acc -= Rational::from_integer(row[j].clone()) * &x[j];
            }
        }
        x[c] = acc / Rational::from_integer(row[c].clone());
    }
    x
}

/// Basis of the right nullspace {x : A x = 0}.
pub fn nullspace(rows: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let ech = echelon(integer_rows(rows), cols);
    let free: Vec<usize> = (0..cols).filter(|c| !ech.pivots.contains(c)).collect();
    free.iter()
        .map(|&f| back_substitute(&ech, &[(f, Rational::one())], None))
        .collect()
}

/// Some solution of A x = b, or `None` if inconsistent.
pub fn solve(rows: &[Vec<Rational>], cols: usize, b: &[Rational]) -> Option<Vec<Rational>> {
    assert_eq!(rows.len(), b.len());
    let augmented: Vec<Vec<Rational>> = rows
        .iter()
        .zip(b)
        .map(|(row, v)| {
            let mut r = row.clone();
            r.push(v.clone());
            r
        })
        .collect();
    let ech = echelon(integer_rows(&augmented), cols + 1);
    if ech.pivots.last() == Some(&cols) {
        return None;
    }
    let rhs: Vec<BigInt> = ech.rows.iter().map(|r| r[cols].clone()).collect();
    let trimmed = Echelon {
        rows: ech.rows.iter().map(|r| r[..cols].to_vec()).collect(),
        pivots: ech.pivots.clone(),
        cols,
    };
    Some(back_substitute(&trimmed, &[], Some(&rhs)))
}

/// Coordinates of `target` in the span of `vectors`, if it lies there.
pub fn coordinates(vectors: &[Vec<Rational>], target: &[Rational]) -> Option<Vec<Rational>> {
    let n = target.len();
    let m = vectors.len();
    let rows: Vec<Vec<Rational>> = (0..n)
        .map(|i| vectors.iter().map(|v| v[i].clone()).collect())
        .collect();
    let x = solve(&rows, m, target)?;
    Some(x)
}

/// Determinant of a square integer matrix by Bareiss elimination.
pub fn det_bigint(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(s) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, s);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[k][k] * &m[i][j] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_and_nullspace_small() {
        let a = RatMatrix::from_i64(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(a.rank(), 2);
        let ns = nullspace(&a.row_vecs(), 3);
        assert_eq!(ns.len(), 1);
        let x = RatMatrix::from_vec(3, 1, ns[0].clone());
        assert!(a.mul(&x).is_zero());
    }

    #[test]
    fn solve_inconsistent() {
        let rows = RatMatrix::from_i64(&[&[1, 1], &[2, 2]]).row_vecs();
        assert!(solve(&rows, 2, &[rat(1), rat(3)]).is_none());
        let x = solve(&rows, 2, &[rat(1), rat(2)]).unwrap();
        assert_eq!(&x[0] + &x[1], rat(1));
    }

    #[test]
    fn determinant_and_inverse() {
        let a = RatMatrix::from_rows(vec![vec![frac(1, 2), rat(3)], vec![rat(-1), frac(2, 3)]]);
        assert_eq!(a.det(), frac(1, 3) + rat(3));
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), RatMatrix::identity(2));
        let sing = RatMatrix::from_i64(&[&[1, 2], &[2, 4]]);
        assert_eq!(sing.det(), rat(0));
        assert!(sing.inverse().is_none());
    }

    #[test]
    fn det_bareiss_known() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(3), BigInt::from(2)],
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(2)],
        ];
        assert_eq!(det_bigint(m), BigInt::from(6));
        let m = vec![
            vec![BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(0)],
        ];
        assert_eq!(det_bigint(m), BigInt::from(-1));
    }

    #[test]
    fn kron_and_blocks() {
        let a = RatMatrix::from_i64(&[&[0, 1], &[-1, 0]]);
        let i2 = RatMatrix::identity(2);
        let k = i2.kron(&a);
        assert_eq!(k, RatMatrix::block_diag(&[&a, &a]));
    }

    fn small_matrix(n: usize, m: usize) -> impl Strategy<Value = RatMatrix> {
        proptest::collection::vec(-4i64..=4, n * m)
            .prop_map(move |v| RatMatrix::from_vec(n, m, v.into_iter().map(rat).collect()))
    }

    proptest! {
        #[test]
        fn rank_nullity(a in small_matrix(4, 6)) {
            let r = a.rank();
            let ns = nullspace(&a.row_vecs(), 6);
            prop_assert_eq!(r + ns.len(), 6);
            for v in ns {
                let x = RatMatrix::from_vec(6, 1, v);
                prop_assert!(a.mul(&x).is_zero());
            }
        }

        #[test]
        fn det_multiplicative(a in small_matrix(3, 3), b in small_matrix(3, 3)) {
            prop_assert_eq!(a.mul(&b).det(), a.det() * b.det());
        }
    }
}
