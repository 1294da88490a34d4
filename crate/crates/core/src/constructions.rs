//! Diagonal constructions: averaged lifts with quantitative defects, the
//! ideal construction, and the direct-sum and cut-down constructions for
//! block algebras, all as exact finite models where the setting allows.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::MatrixGroup;
use crate::lifts::Lift;
use crate::linalg::{Matrix, Rational};
use crate::spaces::{HostSpace, NormEngine};
use crate::tensor::{
    act, canonical_diagonal, is_diagonal_in, pi, tensor_mul, Convention, Product, Side, TensorElement, UnitSpan,
};

/// `(1/|G|) Σ_g E(g) ⊗ E(g⁻¹)` with legs acting on the host. The legs are
/// the exact rational values of the float lift matrices.
pub fn approx_diagonal(lift: &Lift, group: &MatrixGroup) -> Result<TensorElement<Rational>> {
    if group.n() != lift.n() {
        return Err(Error::Dimension(format!("group of degree {} for a lift of size {}", group.n(), lift.n())));
    }
    group.require_irreducible()?;
    let coef = Rational::new(1.into(), group.order().into());
    let mut d = TensorElement::zero(lift.dim());
    for (g, ginv) in group.dense_pairs::<f64>() {
        d.push(coef.clone(), lift.apply(&g)?.to_exact()?, lift.apply(&ginv)?.to_exact()?)?;
    }
    Ok(d)
}

/// Group used at each schedule point of a convergence run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupChoice {
    /// Cyclic-monomial, except for powers of two from 16 on, which use the
    /// dyadic group.
    Auto,
    CyclicMonomial,
    Monomial,
    /// `k`-fold tensor power of `cyclic_monomial(2)` on `2^k` points.
    Dyadic,
}

const DYADIC_FROM: usize = 16;

impl GroupChoice {
    pub fn build(self, n: usize) -> Result<MatrixGroup> {
        match self {
            GroupChoice::Auto if n >= DYADIC_FROM && n.is_power_of_two() => dyadic_group(n),
            GroupChoice::Auto | GroupChoice::CyclicMonomial => MatrixGroup::cyclic_monomial(n),
            GroupChoice::Monomial => MatrixGroup::monomial(n),
            GroupChoice::Dyadic => dyadic_group(n),
        }
    }
}

/// Tensor power of `cyclic_monomial(2)` acting on `n = 2^k` points.
pub fn dyadic_group(n: usize) -> Result<MatrixGroup> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::InvalidParameter(format!("dyadic group needs n a power of two ≥ 2, got {n}")));
    }
    let base = MatrixGroup::cyclic_monomial(2)?;
    let mut g = base.clone();
    while g.n() < n {
        g = MatrixGroup::tensor(&g, &base)?;
    }
    Ok(g)
}

/// Operators `F` probed by the defect computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestOperator {
    /// Coordinate projection onto the first `m` coordinates.
    TruncationProjection { m: usize },
    /// `diag(1, 1/2, …, 1/dim)`.
    HarmonicDiagonal,
    /// Entries `r_ij / (i + j)` (one-based) with `r_ij` uniform in `[-1, 1]`.
    RandomCompact { seed: u64 },
}

impl TestOperator {
    pub fn matrix(&self, dim: usize) -> Result<Matrix<f64>> {
        Ok(match self {
            TestOperator::TruncationProjection { m } => {
                if *m > dim {
                    return Err(Error::Dimension(format!("truncation to {m} coordinates of a {dim}-dimensional host")));
                }
                Matrix::diagonal(&(0..dim).map(|i| if i < *m { 1.0 } else { 0.0 }).collect::<Vec<_>>())
            }
            TestOperator::HarmonicDiagonal => Matrix::diagonal(&(1..=dim).map(|k| 1.0 / k as f64).collect::<Vec<_>>()),
            TestOperator::RandomCompact { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let data = (0..dim * dim)
                    .map(|idx| rng.gen_range(-1.0..=1.0) / ((idx / dim + 1) + (idx % dim + 1)) as f64)
                    .collect();
                Matrix::from_vec(dim, dim, data)?
            }
        })
    }
}

/// Residuals of one approximate diagonal against one operator `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub n: usize,
    pub group_order: usize,
    /// Upper bound for `‖π(d)F − F‖`.
    pub pi_defect: f64,
    /// Representation bound for `F.d − d.F` written as `G.d − d.G` with
    /// `G = F − PFP`.
    pub commutator_bound: f64,
    /// Representation bound for `F.d − d.F` from its direct expansion.
    pub direct_commutator_bound: f64,
    /// Representation bound for `d`.
    pub diag_norm_bound: f64,
    /// Upper bound for `‖F − PFP‖`.
    pub compressed_norm: f64,
    /// `2·‖F − PFP‖·diag_norm_bound`.
    pub analytic_bound: f64,
    /// Largest difference between `F.d − d.F` and `G.d − d.G` under the
    /// seeded bilinear probes.
    pub identity_residual: f64,
}

/// Number of bilinear probes `A⊗B ↦ (uᵀAv)(sᵀBr)` used for the identity
/// check.
pub const IDENTITY_PROBES: usize = 8;
const IDENTITY_PROBE_SEED: u64 = 0x1d;

fn probe_value(t: &TensorElement<f64>, u: &[f64], v: &[f64], s: &[f64], r: &[f64]) -> f64 {
    let bilinear = |m: &Matrix<f64>, x: &[f64], y: &[f64]| -> f64 {
        let my = m.mul_vec(y).expect("probe length matches");
        x.iter().zip(&my).map(|(a, b)| a * b).sum()
    };
    t.terms().iter().map(|term| term.coef * bilinear(&term.left, u, v) * bilinear(&term.right, s, r)).sum()
}

/// `Σ |c| (‖x a‖‖b‖ + ‖a‖‖b x‖)`, the representation bound of
/// `x.d − d.x` with the legs of `d` normed once.
fn commutator_upper<F: Fn(&Matrix<f64>) -> Result<f64>>(
    d: &TensorElement<f64>,
    leg_norms: &[(f64, f64)],
    x: &Matrix<f64>,
    norm: &F,
) -> Result<f64> {
    let mut total = 0.0;
    for (term, (na, nb)) in d.terms().iter().zip(leg_norms) {
        let left = norm(&(x * &term.left))? * nb;
        let right = na * norm(&(&term.right * x))?;
        total += term.coef.abs() * (left + right);
    }
    Ok(total)
}

/// Defects of `d` against `F` on `host`. `P = π(d)` and `π(d)F − F` are
/// formed exactly before norming.
pub fn defects(
    exact: &TensorElement<Rational>,
    f: &Matrix<f64>,
    host: &HostSpace,
    engine: &NormEngine,
    group_order: usize,
    n: usize,
) -> Result<DefectReport> {
    let dim = host.dim();
    let d = &exact.to_f64();
    if d.n() != dim || f.rows() != dim || f.cols() != dim {
        return Err(Error::Dimension(format!(
            "operators of size {} and {}x{} on a host of dimension {dim}",
            d.n(),
            f.rows(),
            f.cols()
        )));
    }
    let norm = |m: &Matrix<f64>| -> Result<f64> { Ok(engine.op_norm(host, host, m)?.upper) };
    let p_exact = pi(exact, false);
    let f_exact = f.to_exact()?;
    let pi_defect = norm(&(&(&p_exact * &f_exact) - &f_exact).to_f64())?;
    let p = p_exact.to_f64();
    let g = f - &(&(&p * f) * &p);
    let leg_norms = d.terms().iter().map(|t| Ok((norm(&t.left)?, norm(&t.right)?))).collect::<Result<Vec<_>>>()?;
    let diag_norm_bound: f64 = d.terms().iter().zip(&leg_norms).map(|(t, (a, b))| t.coef.abs() * a * b).sum();
    let commutator_bound = commutator_upper(d, &leg_norms, &g, &norm)?;
    let direct_commutator_bound = commutator_upper(d, &leg_norms, f, &norm)?;
    let compressed_norm = norm(&g)?;
    let analytic_bound = 2.0 * compressed_norm * diag_norm_bound;

    let via_f = act(f, d, Side::Left)?.sub(&act(f, d, Side::Right)?)?;
    let via_g = act(&g, d, Side::Left)?.sub(&act(&g, d, Side::Right)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(IDENTITY_PROBE_SEED);
    let mut draw = || -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-3..=3) as f64).collect() };
    let mut identity_residual = 0.0f64;
    for _ in 0..IDENTITY_PROBES {
        let (u, v, s, r) = (draw(), draw(), draw(), draw());
        let diff = probe_value(&via_f, &u, &v, &s, &r) - probe_value(&via_g, &u, &v, &s, &r);
        identity_residual = identity_residual.max(diff.abs());
    }
    if commutator_bound > analytic_bound + 1e-9 {
        return Err(Error::Internal(format!(
            "commutator bound {commutator_bound} exceeds the analytic bound {analytic_bound}"
        )));
    }
    Ok(DefectReport {
        n,
        group_order,
        pi_defect,
        commutator_bound,
        direct_commutator_bound,
        diag_norm_bound,
        compressed_norm,
        analytic_bound,
        identity_residual,
    })
}

/// Truncation lifts of sizes `schedule` on `host`, each averaged over the
/// chosen group and measured against `operator`.
pub fn convergence(
    host: &HostSpace,
    operator: &TestOperator,
    schedule: &[usize],
    groups: GroupChoice,
    engine: &NormEngine,
) -> Result<Vec<DefectReport>> {
    let f = operator.matrix(host.dim())?;
    schedule
        .iter()
        .map(|&n| {
            let lift = Lift::new(crate::lifts::BiorthogonalSystem::lp_truncation(host, n)?);
            let group = groups.build(n)?;
            let d = approx_diagonal(&lift, &group)?;
            defects(&d, &f, host, engine, group.order(), n)
        })
        .collect()
}

fn is_idempotent(e: &Matrix<Rational>) -> bool {
    e.is_square() && &(e * e) == e
}

/// `d_A • (e ⊗ e)`.
pub fn ideal_diagonal(d: &TensorElement<Rational>, e: &Matrix<Rational>) -> Result<TensorElement<Rational>> {
    if !is_idempotent(e) {
        return Err(Error::NotIdempotent);
    }
    let ee = TensorElement::elementary(Rational::one(), e.clone(), e.clone())?;
    tensor_mul(d, &ee, Product::Bullet)
}

/// Block-diagonal algebra `M_{s_1} ⊕ … ⊕ M_{s_r}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockAlgebra {
    sizes: Vec<usize>,
}

impl BlockAlgebra {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParameter("block sizes must be positive".into()));
        }
        Ok(BlockAlgebra { sizes })
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offset(&self, block: usize) -> usize {
        self.sizes[..block].iter().sum()
    }

    pub fn span(&self) -> UnitSpan {
        UnitSpan::blocks(&self.sizes)
    }

    /// The ideal `M_{s_block}` as a corner of the ambient algebra.
    pub fn ideal(&self, block: usize) -> UnitSpan {
        UnitSpan::corner(self.n(), self.offset(block), self.sizes[block])
    }

    /// Identity of one block.
    pub fn block_unit(&self, block: usize) -> Matrix<Rational> {
        Matrix::identity(self.sizes[block]).embed(self.n(), self.offset(block))
    }

    /// Sum of the embedded canonical diagonals of the blocks.
    pub fn canonical_diagonal(&self) -> TensorElement<Rational> {
        let n = self.n();
        (0..self.sizes.len()).fold(TensorElement::zero(n), |acc, b| {
            acc.add(&canonical_diagonal::<Rational>(self.sizes[b]).embed(n, self.offset(b))).expect("same ambient")
        })
    }
}

/// `Σ_j e_{m+j,1} ⊗ e_{1,m+j}` (one-based), an element of `A₂₁ ⊗ A₁₂` with
/// `π = P₂`.
pub fn standard_c(m: usize, k: usize) -> Result<TensorElement<Rational>> {
    if m == 0 {
        return Err(Error::InvalidParameter("standard_c needs m ≥ 1".into()));
    }
    let n = m + k;
    let mut c = TensorElement::zero(n);
    for j in 0..k {
        c.push(Rational::one(), Matrix::unit(n, m + j, 0), Matrix::unit(n, 0, m + j))?;
    }
    Ok(c)
}

/// Projections onto the first `m` and the last `k` coordinates.
pub fn block_projections(m: usize, k: usize) -> (Matrix<Rational>, Matrix<Rational>) {
    let n = m + k;
    (Matrix::identity(m).embed(n, 0), Matrix::identity(k).embed(n, m))
}

fn coordinates_within(t: &TensorElement<Rational>, left: &UnitSpan, right: &UnitSpan) -> bool {
    let n = t.n();
    let coords = t.to_coordinates();
    (0..n * n).all(|r| {
        (0..n * n).all(|c| {
            coords.get(r, c).is_zero() || (left.contains_unit(r / n, r % n) && right.contains_unit(c / n, c % n))
        })
    })
}

/// Checks `π(c) = P₂` and that `c ∈ A₂₁ ⊗ A₁₂`.
fn check_c(c: &TensorElement<Rational>, m: usize, k: usize) -> Result<()> {
    let n = m + k;
    if c.n() != n {
        return Err(Error::Dimension(format!("c lives in M_{} but the blocks need M_{n}", c.n())));
    }
    let coords = c.to_coordinates();
    for r in 0..n * n {
        for col in 0..n * n {
            if coords.get(r, col).is_zero() {
                continue;
            }
            let (i, j, p, q) = (r / n, r % n, col / n, col % n);
            if !(i >= m && j < m && p < m && q >= m) {
                return Err(Error::Support(format!("c has a coordinate at e_({i},{j}) ⊗ e_({p},{q})")));
            }
        }
    }
    if pi(c, false) != block_projections(m, k).1 {
        return Err(Error::PiMismatch);
    }
    Ok(())
}

/// `d₁₁ + c·d₁₁` with the hash product; a diagonal for `M_{m+k}` when
/// `d₁₁` is one for the corner `M_m` and `π(c) = P₂`.
pub fn direct_sum_diagonal(
    m: usize,
    k: usize,
    d11: &TensorElement<Rational>,
    c: &TensorElement<Rational>,
) -> Result<TensorElement<Rational>> {
    direct_sum_with(m, k, d11, c, Product::Hash)
}

/// [`direct_sum_diagonal`] with an explicit product rule, for comparing
/// conventions.
pub fn direct_sum_with(
    m: usize,
    k: usize,
    d11: &TensorElement<Rational>,
    c: &TensorElement<Rational>,
    product: Product,
) -> Result<TensorElement<Rational>> {
    let n = m + k;
    if d11.n() != n {
        return Err(Error::Dimension(format!("d11 lives in M_{} but the blocks need M_{n}", d11.n())));
    }
    let corner = UnitSpan::corner(n, 0, m);
    if !coordinates_within(d11, &corner, &corner) {
        return Err(Error::Support("d11 is not supported in A11 ⊗ A11".into()));
    }
    if !is_diagonal_in(d11, &corner, Convention::Std)? {
        return Err(Error::NotDiagonal("d11 is not a diagonal for A11".into()));
    }
    check_c(c, m, k)?;
    d11.add(&tensor_mul(c, d11, product)?)
}

/// `(P₁⊗P₁) d (P₁⊗P₁ + c)`, restricted to the corner `M_m`, using
/// `(P_i⊗P_j)(a⊗b) = P_i a ⊗ b P_j`, `(a⊗b)(P_i⊗P_j) = a P_i ⊗ P_j b` and the
/// hash product for `c`.
pub fn cutdown_diagonal(
    d: &TensorElement<Rational>,
    m: usize,
    k: usize,
    c: &TensorElement<Rational>,
) -> Result<TensorElement<Rational>> {
    let n = m + k;
    if d.n() != n {
        return Err(Error::Dimension(format!("d lives in M_{} but the blocks need M_{n}", d.n())));
    }
    check_c(c, m, k)?;
    let (p1, _) = block_projections(m, k);
    let y = d.map_legs(n, |a, b| (&p1 * a, b * &p1));
    let y_p = y.map_legs(n, |a, b| (a * &p1, &p1 * b));
    let full = y_p.add(&tensor_mul(&y, c, Product::Hash)?)?;
    let corner = UnitSpan::corner(n, 0, m);
    if !coordinates_within(&full, &corner, &corner) {
        return Err(Error::Internal("cut-down left the corner A11 ⊗ A11".into()));
    }
    Ok(full.restrict(0, m))
}
