//! The algebra `M_n ⊗ M_n` at finite dimension.
//!
//! A [`TensorElement`] is kept as an explicit list of terms `c·(a ⊗ b)`;
//! nothing is simplified, so representation-dependent bounds such as
//! [`projective_upper`] see exactly the terms a construction produced.
//! Equality is decided on coordinates: `e_ij ⊗ e_kl` sits at row `i*n + j`,
//! column `k*n + l` of an `n² × n²` grid.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::MatrixGroup;
use crate::linalg::{solve_affine, AffineSolution, Matrix, Rational, Scalar};

/// Product rule on elementary tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Product {
    /// `(a⊗b)(c⊗d) = ac ⊗ db`
    Hash,
    /// `(a⊗b)•(c⊗d) = ac ⊗ bd`
    Bullet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Which pair of identities [`is_diagonal`] checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `a.d = d.a` with `a.(b⊗c) = ab⊗c`, `(b⊗c).a = b⊗ca`, and `π(d) = 1`.
    Std,
    /// `ba⊗c` against `b⊗ac`, and `π_op(d) = 1`.
    Op,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term<T> {
    pub coef: T,
    pub left: Matrix<T>,
    pub right: Matrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorElement<T> {
    n: usize,
    terms: Vec<Term<T>>,
}

impl<T: Scalar> TensorElement<T> {
    pub fn zero(n: usize) -> Self {
        TensorElement { n, terms: Vec::new() }
    }

    pub fn elementary(coef: T, left: Matrix<T>, right: Matrix<T>) -> Result<Self> {
        let mut t = Self::zero(left.rows());
        t.push(coef, left, right)?;
        Ok(t)
    }

    pub fn push(&mut self, coef: T, left: Matrix<T>, right: Matrix<T>) -> Result<()> {
        for leg in [&left, &right] {
            if leg.rows() != self.n || leg.cols() != self.n {
                return Err(Error::Dimension(format!(
                    "{}x{} leg in M_{} ⊗ M_{}",
                    leg.rows(),
                    leg.cols(),
                    self.n,
                    self.n
                )));
            }
        }
        self.terms.push(Term { coef, left, right });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("ambient M_{} vs M_{}", self.n, other.n)));
        }
        Ok(())
    }

    /// Concatenation of the term lists.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ambient(other)?;
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    pub fn scale(&self, s: &T) -> Self {
        TensorElement {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| Term { coef: t.coef.clone() * s.clone(), left: t.left.clone(), right: t.right.clone() })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    /// Apply `f` to each pair of legs, keeping coefficients.
    pub fn map_legs<F>(&self, n: usize, f: F) -> Self
    where
        F: Fn(&Matrix<T>, &Matrix<T>) -> (Matrix<T>, Matrix<T>),
    {
        TensorElement {
            n,
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let (left, right) = f(&t.left, &t.right);
                    Term { coef: t.coef.clone(), left, right }
                })
                .collect(),
        }
    }

    /// Embed both legs as the block at `offset` of `M_n`.
    pub fn embed(&self, n: usize, offset: usize) -> Self {
        self.map_legs(n, |a, b| (a.embed(n, offset), b.embed(n, offset)))
    }

    /// Restrict both legs to the principal block of the given size.
    pub fn restrict(&self, offset: usize, size: usize) -> Self {
        self.map_legs(size, |a, b| (a.principal_block(offset, size), b.principal_block(offset, size)))
    }

    /// Coordinates in the basis `{e_ij ⊗ e_kl}`.
    pub fn to_coordinates(&self) -> Matrix<T> {
        let n = self.n;
        let mut out = Matrix::<T>::zeros(n * n, n * n);
        for t in &self.terms {
            if t.coef.is_zero() {
                continue;
            }
            let left: Vec<(usize, T)> = nonzeros(&t.left);
            let right: Vec<(usize, T)> = nonzeros(&t.right);
            for (r, a) in &left {
                let ca = t.coef.clone() * a.clone();
                for (c, b) in &right {
                    let v = out.get(*r, *c).clone() + ca.clone() * b.clone();
                    out.set(*r, *c, v);
                }
            }
        }
        out
    }

    /// The element `Σ coords[(ij),(kl)] e_ij ⊗ e_kl`, one term per nonzero.
    pub fn from_coordinates(n: usize, coords: &Matrix<T>) -> Result<Self> {
        if coords.rows() != n * n || coords.cols() != n * n {
            return Err(Error::Dimension(format!("{}x{} grid for M_{n} ⊗ M_{n}", coords.rows(), coords.cols())));
        }
        let mut out = Self::zero(n);
        for r in 0..n * n {
            for c in 0..n * n {
                let v = coords.get(r, c);
                if !v.is_zero() {
                    out.push(v.clone(), Matrix::unit(n, r / n, r % n), Matrix::unit(n, c / n, c % n))?;
                }
            }
        }
        Ok(out)
    }

    pub fn coordinates_eq(&self, other: &Self) -> bool {
        self.n == other.n && self.to_coordinates() == other.to_coordinates()
    }
}

impl TensorElement<f64> {
    /// Exact rational copy of a floating-point element.
    pub fn to_exact(&self) -> Result<TensorElement<Rational>> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let coef = Rational::from_float(t.coef)
                    .ok_or_else(|| Error::InvalidParameter(format!("non-finite coefficient {}", t.coef)))?;
                Ok(Term { coef, left: t.left.to_exact()?, right: t.right.to_exact()? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorElement { n: self.n, terms })
    }
}

impl TensorElement<Rational> {
    pub fn to_f64(&self) -> TensorElement<f64> {
        let terms = self
            .terms
            .iter()
            .map(|t| Term { coef: Scalar::to_f64(&t.coef), left: t.left.to_f64(), right: t.right.to_f64() })
            .collect();
        TensorElement { n: self.n, terms }
    }
}

fn nonzeros<T: Scalar>(m: &Matrix<T>) -> Vec<(usize, T)> {
    m.entries().iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| (i, v.clone())).collect()
}

fn check_leg<T: Scalar>(a: &Matrix<T>, n: usize) -> Result<()> {
    if a.rows() != n || a.cols() != n {
        return Err(Error::Dimension(format!("{}x{} multiplier on M_{n} ⊗ M_{n}", a.rows(), a.cols())));
    }
    Ok(())
}

/// Bilinear product of `s` and `t`; the result has `|s|·|t|` terms.
pub fn tensor_mul<T: Scalar>(s: &TensorElement<T>, t: &TensorElement<T>, product: Product) -> Result<TensorElement<T>> {
    s.check_ambient(t)?;
    let mut out = TensorElement::zero(s.n);
    for a in &s.terms {
        for c in &t.terms {
            let left = &a.left * &c.left;
            let right = match product {
                Product::Hash => &c.right * &a.right,
                Product::Bullet => &a.right * &c.right,
            };
            out.terms.push(Term { coef: a.coef.clone() * c.coef.clone(), left, right });
        }
    }
    Ok(out)
}

/// Bimodule action: left `(b⊗c) ↦ ab⊗c`, right `(b⊗c) ↦ b⊗ca`.
pub fn act<T: Scalar>(a: &Matrix<T>, t: &TensorElement<T>, side: Side) -> Result<TensorElement<T>> {
    check_leg(a, t.n)?;
    Ok(match side {
        Side::Left => t.map_legs(t.n, |b, c| (a * b, c.clone())),
        Side::Right => t.map_legs(t.n, |b, c| (b.clone(), c * a)),
    })
}

/// The action used by the opposite identity: left `(b⊗c) ↦ ba⊗c`, right
/// `(b⊗c) ↦ b⊗ac`.
pub fn act_opposite<T: Scalar>(a: &Matrix<T>, t: &TensorElement<T>, side: Side) -> Result<TensorElement<T>> {
    check_leg(a, t.n)?;
    Ok(match side {
        Side::Left => t.map_legs(t.n, |b, c| (b * a, c.clone())),
        Side::Right => t.map_legs(t.n, |b, c| (b.clone(), a * c)),
    })
}

/// `Σ c·ab`, or `Σ c·ba` when `opposite`.
pub fn pi<T: Scalar>(t: &TensorElement<T>, opposite: bool) -> Matrix<T> {
    let mut out = Matrix::zeros(t.n, t.n);
    for term in &t.terms {
        let prod = if opposite { &term.right * &term.left } else { &term.left * &term.right };
        out = &out + &prod.scale(&term.coef);
    }
    out
}

/// `(1/n) Σ e_ij ⊗ e_ji`.
pub fn canonical_diagonal<T: Scalar>(n: usize) -> TensorElement<T> {
    let coef = T::from_ratio(1, n as i64);
    let mut out = TensorElement::zero(n);
    for i in 0..n {
        for j in 0..n {
            out.terms.push(Term { coef: coef.clone(), left: Matrix::unit(n, i, j), right: Matrix::unit(n, j, i) });
        }
    }
    out
}

/// `(1/|G|) Σ g ⊗ g⁻¹`, terms in group order.
pub fn group_diagonal<T: Scalar>(g: &MatrixGroup) -> TensorElement<T> {
    let coef = T::from_ratio(1, g.order() as i64);
    TensorElement {
        n: g.n(),
        terms: g.dense_pairs::<T>().into_iter().map(|(left, right)| Term { coef: coef.clone(), left, right }).collect(),
    }
}

/// A subalgebra of `M_n` spanned by matrix units, with the unit
/// `Σ e_ii` over its diagonal positions. Covers `M_n` itself, block
/// subalgebras and corners.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSpan {
    n: usize,
    allowed: Vec<bool>,
}

impl UnitSpan {
    pub fn full(n: usize) -> Self {
        UnitSpan { n, allowed: vec![true; n * n] }
    }

    /// Block-diagonal `M_{s_1} ⊕ … ⊕ M_{s_r}` inside `M_{Σ s}`.
    pub fn blocks(sizes: &[usize]) -> Self {
        let n = sizes.iter().sum();
        let mut allowed = vec![false; n * n];
        let mut offset = 0;
        for &s in sizes {
            for i in offset..offset + s {
                for j in offset..offset + s {
                    allowed[i * n + j] = true;
                }
            }
            offset += s;
        }
        UnitSpan { n, allowed }
    }

    /// The corner `P M_n P` for the coordinate projection onto
    /// `offset..offset + size`.
    pub fn corner(n: usize, offset: usize, size: usize) -> Self {
        let mut allowed = vec![false; n * n];
        for i in offset..offset + size {
            for j in offset..offset + size {
                allowed[i * n + j] = true;
            }
        }
        UnitSpan { n, allowed }
    }

    /// Validates closure under products and the existence of the unit.
    pub fn from_positions(n: usize, positions: &[(usize, usize)]) -> Result<Self> {
        let mut allowed = vec![false; n * n];
        for &(i, j) in positions {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!("unit position ({i}, {j}) outside M_{n}")));
            }
            allowed[i * n + j] = true;
        }
        for i in 0..n {
            for j in 0..n {
                if !allowed[i * n + j] {
                    continue;
                }
                if !allowed[i * n + i] || !allowed[j * n + j] {
                    return Err(Error::InvalidParameter(format!("span lacks a unit for e_({i},{j})")));
                }
                for k in 0..n {
                    if allowed[j * n + k] && !allowed[i * n + k] {
                        return Err(Error::InvalidParameter(format!("span is not closed: e_({i},{j}) e_({j},{k})")));
                    }
                }
            }
        }
        Ok(UnitSpan { n, allowed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains_unit(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n + j]
    }

    pub fn units<T: Scalar>(&self) -> Vec<Matrix<T>> {
        (0..self.n * self.n)
            .filter(|&k| self.allowed[k])
            .map(|k| Matrix::unit(self.n, k / self.n, k % self.n))
            .collect()
    }

    pub fn identity<T: Scalar>(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            if self.allowed[i * self.n + i] {
                m.set(i, i, T::one());
            }
        }
        m
    }

    fn supports(&self, coords: &Matrix<Rational>) -> bool {
        let nn = self.n * self.n;
        (0..nn).all(|r| (0..nn).all(|c| coords.get(r, c).is_zero() || (self.allowed[r] && self.allowed[c])))
    }
}

/// Outcome of a diagonal check, identity by identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalCheck {
    /// Coordinates lie in `B ⊗ B`.
    pub supported: bool,
    pub std_module: Option<bool>,
    pub std_pi: Option<bool>,
    pub op_module: Option<bool>,
    pub op_pi: Option<bool>,
}

impl DiagonalCheck {
    pub fn passed(&self) -> bool {
        self.supported && [self.std_module, self.std_pi, self.op_module, self.op_pi].iter().all(|c| c.unwrap_or(true))
    }
}

type ActionFn = fn(&Matrix<Rational>, &TensorElement<Rational>, Side) -> Result<TensorElement<Rational>>;

/// Checks the diagonal identities for the subalgebra `algebra` exactly.
pub fn check_diagonal_in(
    t: &TensorElement<Rational>,
    algebra: &UnitSpan,
    convention: Convention,
) -> Result<DiagonalCheck> {
    if t.n != algebra.n {
        return Err(Error::Dimension(format!("element in M_{} checked against M_{}", t.n, algebra.n)));
    }
    let units = algebra.units::<Rational>();
    let unit = algebra.identity::<Rational>();
    let module_holds = |left: ActionFn| {
        units.iter().try_fold(true, |ok, e| {
            if !ok {
                return Ok(false);
            }
            Ok(left(e, t, Side::Left)?.coordinates_eq(&left(e, t, Side::Right)?))
        })
    };
    let mut check = DiagonalCheck {
        supported: algebra.supports(&t.to_coordinates()),
        std_module: None,
        std_pi: None,
        op_module: None,
        op_pi: None,
    };
    if matches!(convention, Convention::Std | Convention::Both) {
        check.std_module = Some(module_holds(act)?);
        check.std_pi = Some(pi(t, false) == unit);
    }
    if matches!(convention, Convention::Op | Convention::Both) {
        check.op_module = Some(module_holds(act_opposite)?);
        check.op_pi = Some(pi(t, true) == unit);
    }
    Ok(check)
}

pub fn is_diagonal_in(t: &TensorElement<Rational>, algebra: &UnitSpan, convention: Convention) -> Result<bool> {
    Ok(check_diagonal_in(t, algebra, convention)?.passed())
}

/// Exact diagonal check for the full algebra `M_n`.
pub fn is_diagonal(t: &TensorElement<Rational>, convention: Convention) -> Result<bool> {
    is_diagonal_in(t, &UnitSpan::full(t.n), convention)
}

/// Solves `π(d) = I` together with the opposite module identity for all
/// matrix units over the `n⁴` coordinates of `d`. Errors with
/// [`Error::Internal`] unless the solution is a single point.
pub fn unique_bidiagonal(n: usize) -> Result<TensorElement<Rational>> {
    const CAP: usize = 4;
    if n == 0 || n > CAP {
        return Err(Error::EnumerationCap(format!("unique_bidiagonal needs 1 ≤ n ≤ {CAP}, got {n}")));
    }
    let nn = n * n;
    let unknowns = nn * nn;
    let units: Vec<Matrix<Rational>> = (0..nn).map(|k| Matrix::unit(n, k / n, k % n)).collect();
    // Column u of the system is the image of the basis tensor u.
    let equations = units.len() * unknowns + nn;
    let mut a = Matrix::<Rational>::zeros(equations, unknowns);
    for u in 0..unknowns {
        let (r, c) = (u / nn, u % nn);
        let basis = TensorElement::elementary(Rational::one(), units[r].clone(), units[c].clone())?;
        for (k, e) in units.iter().enumerate() {
            let diff = act_opposite(e, &basis, Side::Left)?.sub(&act_opposite(e, &basis, Side::Right)?)?;
            let coords = diff.to_coordinates();
            for (idx, v) in coords.entries().iter().enumerate() {
                if !v.is_zero() {
                    a.set(k * unknowns + idx, u, v.clone());
                }
            }
        }
        let p = pi(&basis, false);
        for (idx, v) in p.entries().iter().enumerate() {
            if !v.is_zero() {
                a.set(units.len() * unknowns + idx, u, v.clone());
            }
        }
    }
    let mut b = vec![Rational::zero(); equations];
    for i in 0..n {
        b[units.len() * unknowns + i * n + i] = Rational::one();
    }
    match solve_affine(&a, &b)? {
        AffineSolution::Inconsistent => {
            Err(Error::Internal(format!("no element of M_{n} ⊗ M_{n} satisfies both identities")))
        }
        AffineSolution::Solvable { nullity, .. } if nullity > 0 => {
            Err(Error::Internal(format!("solution space of dimension {nullity}, expected a single point")))
        }
        AffineSolution::Solvable { particular, .. } => {
            let coords = Matrix::from_vec(nn, nn, particular)?;
            TensorElement::from_coordinates(n, &coords)
        }
    }
}

/// `Σ |c_i| ‖a_i‖ ‖b_i‖` over the stored representation.
pub fn projective_upper<T: Scalar, F: Fn(&Matrix<T>) -> f64>(t: &TensorElement<T>, norm: F) -> f64 {
    t.terms.iter().map(|term| term.coef.to_f64().abs() * norm(&term.left) * norm(&term.right)).sum()
}
