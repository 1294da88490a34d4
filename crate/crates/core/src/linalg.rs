//! Dense matrices over exact rationals or `f64`, plus exact Gaussian
//! elimination for span ranks and affine solves.
//!
//! Exactness is carried by the type: anything that decides an equality
//! (`rank_of_span`, `solve_affine`, tensor coordinates compared with `==`)
//! takes `Matrix<Rational>`, so floating-point entries cannot reach it.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational scalar.
pub type Rational = BigRational;

/// Field operations shared by the exact and floating-point scalars.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// Whether arithmetic on this scalar is exact.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Explicit conversion to a float; never happens implicitly.
    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Shorthand for the rational `num/den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// The matrix unit `e_{ij}` in `M_n` (zero-based indices).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[i * n + j] = T::one();
        m
    }

    pub fn diagonal(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in entries.iter().enumerate() {
            m.data[i * n + i] = v.clone();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries cannot fill a {rows}x{cols} matrix", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
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

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Row-major flattening.
    pub fn vectorize(&self) -> Vec<T> {
        self.data.clone()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].clone();
            }
        }
        out
    }

    pub fn scale(&self, s: &T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.clone() * s.clone()).collect() }
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(Scalar::to_f64)
    }

    fn check_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        })
    }

    /// Matrix product. Zero entries of the left factor are skipped, which
    /// keeps products of signed permutations and matrix units cheap over
    /// big rationals.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "mul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.data[k * other.cols + j];
                    if b.is_zero() {
                        continue;
                    }
                    let slot = &mut out.data[i * other.cols + j];
                    *slot = slot.clone() + a.clone() * b.clone();
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("mul_vec: {} columns, vector of length {}", self.cols, x.len())));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect())
    }

    /// Kronecker product; index `(i, j)` of the result block structure is
    /// `i * other.rows + k`, matching row-major vectorization of `x ⊗ y`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self.data[i * self.cols + j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let b = &other.data[k * other.cols + l];
                        if b.is_zero() {
                            continue;
                        }
                        out.data[(i * other.rows + k) * cols + j * other.cols + l] = a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    /// Copy of the `size x size` block starting at `(offset, offset)`.
    pub fn principal_block(&self, offset: usize, size: usize) -> Self {
        let mut out = Self::zeros(size, size);
        for r in 0..size {
            for c in 0..size {
                out.data[r * size + c] = self.get(offset + r, offset + c).clone();
            }
        }
        out
    }

    /// Place `self` as the block starting at `(offset, offset)` of a zero
    /// `n x n` matrix.
    pub fn embed(&self, n: usize, offset: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[(offset + r) * n + offset + c] = self.get(r, c).clone();
            }
        }
        out
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_add(rhs).expect("matrix add: shape mismatch")
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_sub(rhs).expect("matrix sub: shape mismatch")
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_mul(rhs).expect("matrix mul: shape mismatch")
    }
}

impl Matrix<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(f64::abs(*v)))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The exact rational value of every entry (floats are dyadic
    /// rationals, so nothing is rounded).
    pub fn to_exact(&self) -> Result<Matrix<Rational>> {
        let data = self
            .data
            .iter()
            .map(|v| Rational::from_float(*v).ok_or_else(|| Error::InvalidParameter(format!("non-finite entry {v}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }
}

impl Matrix<Rational> {
    /// Exact inverse by Gauss-Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug: Vec<Vec<Rational>> = (0..n)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                row.extend((0..n).map(|c| if c == r { Rational::one() } else { Rational::zero() }));
                row
            })
            .collect();
        let pivots = reduce_rows(&mut aug, n);
        if pivots.len() < n {
            return None;
        }
        let data = aug.into_iter().flat_map(|row| row.into_iter().skip(n)).collect();
        Some(Matrix { rows: n, cols: n, data })
    }
}

/// In-place reduced row echelon form over the first `pivot_cols` columns.
/// Returns the pivot column of each nonzero row, in order.
pub(crate) fn reduce_rows(rows: &mut [Vec<Rational>], pivot_cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..pivot_cols {
        let Some(found) = (next..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next, found);
        let inv = rows[next][col].recip();
        if !inv.is_one() {
            for v in rows[next].iter_mut() {
                if !v.is_zero() {
                    *v = &*v * &inv;
                }
            }
        }
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == next || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v = &*v - &factor * p;
                }
            }
        }
        pivots.push(col);
        next += 1;
        if next == rows.len() {
            break;
        }
    }
    pivots
}

/// Incrementally maintained row-reduced basis of a subspace of `Q^len`.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    len: usize,
    /// Each basis row is normalized with a 1 at its pivot.
    rows: Vec<(usize, Vec<Rational>)>,
}

impl SpanBasis {
    pub fn new(len: usize) -> Self {
        SpanBasis { len, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.len
    }

    /// Adds `v` to the span; returns whether the rank grew.
    pub fn insert(&mut self, mut v: Vec<Rational>) -> Result<bool> {
        if v.len() != self.len {
            return Err(Error::Dimension(format!(
                "vector of length {} in a span of length-{} vectors",
                v.len(),
                self.len
            )));
        }
        for (pivot, row) in &self.rows {
            if v[*pivot].is_zero() {
                continue;
            }
            let factor = v[*pivot].clone();
            for (x, r) in v.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x = &*x - &factor * r;
                }
            }
        }
        let Some(pivot) = v.iter().position(|x| !x.is_zero()) else {
            return Ok(false);
        };
        let inv = v[pivot].recip();
        for x in v.iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        // Keep existing rows reduced against the new pivot.
        for (_, row) in self.rows.iter_mut() {
            if row[pivot].is_zero() {
                continue;
            }
            let factor = row[pivot].clone();
            for (x, r) in row.iter_mut().zip(&v) {
                if !r.is_zero() {
                    *x = &*x - &factor * r;
                }
            }
        }
        self.rows.push((pivot, v));
        Ok(true)
    }
}

/// Rank of `{vectorize(m)}` by exact elimination.
pub fn rank_of_span(ms: &[Matrix<Rational>]) -> Result<usize> {
    let Some(first) = ms.first() else {
        return Ok(0);
    };
    let (rows, cols) = (first.rows(), first.cols());
    if rows != cols {
        return Err(Error::Dimension(format!("span of non-square {rows}x{cols} matrices")));
    }
    let mut basis = SpanBasis::new(rows * cols);
    for m in ms {
        if m.rows() != rows || m.cols() != cols {
            return Err(Error::Dimension(format!("mixed sizes in span: {rows}x{cols} and {}x{}", m.rows(), m.cols())));
        }
        basis.insert(m.vectorize())?;
        if basis.is_full() {
            break;
        }
    }
    Ok(basis.rank())
}

/// Solution set of an exact affine system `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub enum AffineSolution {
    Inconsistent,
    /// A particular solution (free variables set to zero) and the dimension
    /// of the solution space.
    Solvable {
        particular: Vec<Rational>,
        nullity: usize,
    },
}

pub fn solve_affine(a: &Matrix<Rational>, b: &[Rational]) -> Result<AffineSolution> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!("right-hand side of length {} for {} equations", b.len(), a.rows())));
    }
    let n = a.cols();
    let mut aug: Vec<Vec<Rational>> = (0..a.rows())
        .map(|r| {
            let mut row = a.row(r).to_vec();
            row.push(b[r].clone());
            row
        })
        .filter(|row| row.iter().any(|v| !v.is_zero()))
        .collect();
    let pivots = reduce_rows(&mut aug, n);
    if aug.iter().skip(pivots.len()).any(|row| !row[n].is_zero()) {
        return Ok(AffineSolution::Inconsistent);
    }
    let mut particular = vec![Rational::zero(); n];
    for (row, &col) in aug.iter().zip(&pivots) {
        particular[col] = row[n].clone();
    }
    Ok(AffineSolution::Solvable { particular, nullity: n - pivots.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::MatrixGroup;
    use proptest::prelude::*;

    fn rational_matrix(n: usize) -> impl Strategy<Value = Matrix<Rational>> {
        prop::collection::vec((-9i64..=9, 1i64..=5), n * n)
            .prop_map(move |v| Matrix::from_vec(n, n, v.into_iter().map(|(a, b)| ratio(a, b)).collect()).unwrap())
    }

    #[test]
    fn float_conversion_is_exact() {
        let m = Matrix::from_vec(1, 3, vec![0.5, -0.125, 0.1]).unwrap().to_exact().unwrap();
        assert_eq!(m.get(0, 0), &ratio(1, 2));
        assert_eq!(m.get(0, 1), &ratio(-1, 8));
        // 0.1 is not representable; its float is a nearby dyadic rational.
        assert_ne!(m.get(0, 2), &ratio(1, 10));
        assert_eq!(Scalar::to_f64(m.get(0, 2)), 0.1);
        assert!(Matrix::from_vec(1, 1, vec![f64::NAN]).unwrap().to_exact().is_err());
    }

    #[test]
    fn vectorize_unit_and_zero() {
        let e11 = Matrix::<Rational>::unit(2, 0, 0);
        assert_eq!(e11.vectorize(), vec![ratio(1, 1), ratio(0, 1), ratio(0, 1), ratio(0, 1)]);
        assert!(Matrix::<Rational>::zeros(2, 2).vectorize().iter().all(Zero::is_zero));
        assert_eq!(e11.entries().iter().filter(|v| v.is_one()).count(), 1);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_of_span(&[Matrix::identity(2)]).unwrap(), 1);
        let units: Vec<_> = (0..2).flat_map(|i| (0..2).map(move |j| Matrix::unit(2, i, j))).collect();
        assert_eq!(rank_of_span(&units).unwrap(), 4);
        let g = MatrixGroup::monomial(2).unwrap();
        assert_eq!(g.order(), 8);
        assert_eq!(rank_of_span(&g.dense_elements()).unwrap(), 4);
        assert_eq!(rank_of_span(&[]).unwrap(), 0);
    }

    #[test]
    fn rank_rejects_mixed_sizes() {
        let err = rank_of_span(&[Matrix::identity(2), Matrix::identity(3)]);
        assert!(matches!(err, Err(Error::Dimension(_))));
        let err = rank_of_span(&[Matrix::zeros(2, 3)]);
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn inverse_and_affine_solve() {
        let m = Matrix::from_rows(vec![vec![ratio(2, 1), ratio(1, 1)], vec![ratio(1, 1), ratio(1, 1)]]).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, Matrix::identity(2));
        assert!(Matrix::<Rational>::zeros(2, 2).inverse().is_none());

        let sol = solve_affine(&m, &[ratio(3, 1), ratio(2, 1)]).unwrap();
        assert_eq!(sol, AffineSolution::Solvable { particular: vec![ratio(1, 1), ratio(1, 1)], nullity: 0 });
        let sing = Matrix::from_rows(vec![vec![ratio(1, 1), ratio(1, 1)], vec![ratio(1, 1), ratio(1, 1)]]).unwrap();
        assert_eq!(solve_affine(&sing, &[ratio(1, 1), ratio(2, 1)]).unwrap(), AffineSolution::Inconsistent);
        assert!(matches!(
            solve_affine(&sing, &[ratio(1, 1), ratio(1, 1)]).unwrap(),
            AffineSolution::Solvable { nullity: 1, .. }
        ));
    }

    #[test]
    fn kron_matches_vectorized_outer_product() {
        let a = Matrix::from_rows(vec![vec![ratio(1, 1), ratio(2, 1)], vec![ratio(0, 1), ratio(3, 1)]]).unwrap();
        let b = Matrix::<Rational>::unit(3, 1, 2);
        let k = a.kron(&b);
        assert_eq!(k.rows(), 6);
        let at = |outer: usize, inner: usize| outer * 3 + inner;
        assert_eq!(k.get(at(1, 1), at(1, 2)), &ratio(3, 1));
        assert_eq!(k.get(at(0, 1), at(1, 2)), &ratio(2, 1));
        assert_eq!(k.entries().iter().filter(|v| !v.is_zero()).count(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn vectorize_is_linear(a in rational_matrix(3), b in rational_matrix(3)) {
            let lhs = (&a + &b).vectorize();
            let rhs: Vec<_> = a.vectorize().into_iter().zip(b.vectorize()).map(|(x, y)| x + y).collect();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn exact_products_associate_and_distribute(
            n in 1usize..=6,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut gen = || {
                let data = (0..n * n).map(|_| ratio(rng.gen_range(-7..=7), rng.gen_range(1..=6))).collect();
                Matrix::from_vec(n, n, data).unwrap()
            };
            let (a, b, c) = (gen(), gen(), gen());
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn rank_invariant_under_permutation_and_combinations(
            ms in prop::collection::vec(rational_matrix(2), 1..5),
            shift in 0usize..5,
            coef in -4i64..=4,
        ) {
            let base = rank_of_span(&ms).unwrap();
            let mut rotated = ms.clone();
            let len = rotated.len();
            rotated.rotate_left(shift % len);
            prop_assert_eq!(rank_of_span(&rotated).unwrap(), base);
            let mut extended = ms.clone();
            let combo = &ms[0].scale(&ratio(coef, 1)) + &ms[len - 1];
            extended.push(combo);
            prop_assert_eq!(rank_of_span(&extended).unwrap(), base);
            prop_assert!(base <= 4);
        }
    }
}
