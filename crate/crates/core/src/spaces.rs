//! Finite-dimensional normed host spaces and an interval-valued operator
//! norm engine.
//!
//! Hosts are weighted `ℓ_p` (measure weights), Lorentz sequence spaces
//! `d(w, p)`, and mixed `ℓ_q(ℓ_p)` spaces. For weighted `ℓ_p` hosts with a
//! common exponent the operator is first conjugated to unweighted `ℓ_p`;
//! there `p ∈ {1, ∞}` is exact, `p = 2` is the largest singular value, and
//! other `p` get an ascent lower bound and a certified upper bound. Other
//! hosts get ascent lower bounds only.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// An exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidParameter(format!("exponent {p} is not in [1, ∞]")))
        }
    }

    /// `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// `1/p`, zero for `p = ∞`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HostSpace {
    /// `‖x‖ = (Σ w_i |x_i|^p)^{1/p}`, max-norm for `p = ∞`. Pairing is
    /// `⟨x, y⟩ = Σ w_i x_i y_i`.
    WeightedLp { weights: Vec<f64>, p: Exponent },
    /// `‖x‖ = (Σ w_k |x|_{(k)}^p)^{1/p}` over the nonincreasing
    /// rearrangement of `|x|`.
    Lorentz { weights: Vec<f64>, p: f64 },
    /// `ℓ_q` over `outer` blocks of `ℓ_p^{inner}`; coordinate `j*inner + i`
    /// is entry `i` of block `j`.
    Mixed { outer: usize, inner: usize, p: Exponent, q: Exponent },
}

impl HostSpace {
    pub fn lp(dim: usize, p: Exponent) -> Self {
        HostSpace::WeightedLp { weights: vec![1.0; dim], p }
    }

    pub fn weighted_lp(weights: Vec<f64>, p: Exponent) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter("weights must be finite and positive".into()));
        }
        Ok(HostSpace::WeightedLp { weights, p })
    }

    pub fn lorentz(weights: Vec<f64>, p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!("Lorentz exponent {p} must be finite and ≥ 1")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter("Lorentz weights must be positive".into()));
        }
        if weights.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("Lorentz weights must be nonincreasing".into()));
        }
        Ok(HostSpace::Lorentz { weights, p })
    }

    /// Lorentz space with `w_k = k^{-alpha}`.
    pub fn lorentz_power(dim: usize, alpha: f64, p: f64) -> Result<Self> {
        Self::lorentz((1..=dim).map(|k| (k as f64).powf(-alpha)).collect(), p)
    }

    pub fn mixed(outer: usize, inner: usize, p: Exponent, q: Exponent) -> Self {
        HostSpace::Mixed { outer, inner, p, q }
    }

    pub fn dim(&self) -> usize {
        match self {
            HostSpace::WeightedLp { weights, .. } | HostSpace::Lorentz { weights, .. } => weights.len(),
            HostSpace::Mixed { outer, inner, .. } => outer * inner,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            HostSpace::WeightedLp { .. } => "weighted_lp",
            HostSpace::Lorentz { .. } => "lorentz",
            HostSpace::Mixed { .. } => "mixed",
        }
    }

    /// Weights of the pairing `⟨x, y⟩ = Σ w_i x_i y_i` (unit for Lorentz and
    /// mixed hosts).
    pub fn pairing_weights(&self) -> Vec<f64> {
        match self {
            HostSpace::WeightedLp { weights, .. } => weights.clone(),
            _ => vec![1.0; self.dim()],
        }
    }

    /// Weighted `ℓ_p` view: measure weights and exponent, when the host norm
    /// is one (mixed hosts with `p = q` qualify with unit weights).
    pub fn lp_view(&self) -> Option<(Vec<f64>, Exponent)> {
        match self {
            HostSpace::WeightedLp { weights, p } => Some((weights.clone(), *p)),
            HostSpace::Mixed { p, q, .. } if p == q => Some((vec![1.0; self.dim()], *p)),
            _ => None,
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "vector of length {} in a host of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn vec_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.norm_unchecked(x))
    }

    fn norm_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            HostSpace::WeightedLp { weights, p } => weighted_p_norm(x, weights, *p),
            HostSpace::Lorentz { weights, p } => {
                let sorted = decreasing_magnitudes(x);
                let s: f64 = sorted.iter().zip(weights).map(|(v, w)| w * v.powf(*p)).sum();
                s.powf(1.0 / p)
            }
            HostSpace::Mixed { outer, inner, p, q } => {
                let blocks: Vec<f64> = (0..*outer).map(|j| plain_p_norm(&x[j * inner..(j + 1) * inner], *p)).collect();
                plain_p_norm(&blocks, *q)
            }
        }
    }

    pub fn pairing(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.pairing_weights().iter().zip(x).zip(y).map(|((w, a), b)| w * a * b).sum())
    }

    /// The dual of a weighted `ℓ_p` host under the measure pairing: same
    /// weights, conjugate exponent.
    pub fn dual_host(&self) -> Result<HostSpace> {
        match self {
            HostSpace::WeightedLp { weights, p } => {
                Ok(HostSpace::WeightedLp { weights: weights.clone(), p: p.conjugate() })
            }
            other => Err(Error::UnsupportedHost(format!("no dual host for {} spaces", other.kind_name()))),
        }
    }

    /// A subgradient of the norm at `x` (a norming direction).
    fn norm_gradient(&self, x: &[f64]) -> Vec<f64> {
        let norm = self.norm_unchecked(x);
        if norm == 0.0 {
            return vec![0.0; x.len()];
        }
        match self {
            HostSpace::WeightedLp { weights, p } => match p {
                Exponent::Infinity => max_subgradient(x),
                Exponent::Finite(p) => x.iter().zip(weights).map(|(v, w)| w * signed_pow(*v / norm, p - 1.0)).collect(),
            },
            HostSpace::Lorentz { weights, p } => {
                let mut order: Vec<usize> = (0..x.len()).collect();
                order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
                let mut g = vec![0.0; x.len()];
                for (rank, &i) in order.iter().enumerate() {
                    g[i] = weights[rank] * signed_pow(x[i] / norm, p - 1.0);
                }
                g
            }
            HostSpace::Mixed { outer, inner, p, q } => {
                let blocks: Vec<f64> = (0..*outer).map(|j| plain_p_norm(&x[j * inner..(j + 1) * inner], *p)).collect();
                let outer_grad = match q {
                    Exponent::Infinity => max_subgradient(&blocks),
                    Exponent::Finite(q) => blocks.iter().map(|b| (b / norm).powf(q - 1.0)).collect(),
                };
                let mut g = vec![0.0; x.len()];
                for j in 0..*outer {
                    if outer_grad[j] == 0.0 || blocks[j] == 0.0 {
                        continue;
                    }
                    let block = &x[j * inner..(j + 1) * inner];
                    let inner_grad: Vec<f64> = match p {
                        Exponent::Infinity => max_subgradient(block),
                        Exponent::Finite(p) => block.iter().map(|v| signed_pow(v / blocks[j], p - 1.0)).collect(),
                    };
                    for (i, gi) in inner_grad.into_iter().enumerate() {
                        g[j * inner + i] = outer_grad[j] * gi;
                    }
                }
                g
            }
        }
    }
}

fn decreasing_magnitudes(x: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().map(|a| a.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn max_subgradient(x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    if let Some((i, v)) = x.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())) {
        g[i] = v.signum();
    }
    g
}

fn signed_pow(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(e)
    }
}

fn plain_p_norm(x: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        Exponent::Finite(1.0) => x.iter().map(|v| v.abs()).sum(),
        Exponent::Finite(p) => {
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

fn weighted_p_norm(x: &[f64], w: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => plain_p_norm(x, p),
        Exponent::Finite(p) => {
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            scale * x.iter().zip(w).map(|(v, w)| w * (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// Bracket `[lower, upper]` for an operator norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormInterval {
    pub lower: f64,
    /// `+∞` when no certificate is available.
    pub upper: f64,
    /// Whether `upper` is a certified bound.
    pub certified: bool,
    /// False when an iteration hit its cap or the bracket is wider than
    /// expected for an exactly solvable case.
    pub converged: bool,
}

impl NormInterval {
    fn exact(v: f64) -> Self {
        NormInterval { lower: v, upper: v, certified: true, converged: true }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn relative_width(&self) -> f64 {
        if self.upper == 0.0 {
            0.0
        } else {
            self.width() / self.upper
        }
    }
}

/// Settings for the ascent and power iterations. The seed fixes every
/// random restart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEngine {
    pub seed: u64,
    pub random_restarts: usize,
    pub basis_restarts: bool,
    /// Relative objective change that stops an ascent run.
    pub ascent_tol: f64,
    pub max_iter: usize,
    /// Relative change that stops power iteration.
    pub power_tol: f64,
}

impl Default for NormEngine {
    fn default() -> Self {
        NormEngine {
            seed: 0x5eed,
            random_restarts: 16,
            basis_restarts: true,
            ascent_tol: 1e-10,
            max_iter: 10_000,
            power_tol: 1e-12,
        }
    }
}

const EPS: f64 = f64::EPSILON;

impl NormEngine {
    pub fn with_seed(seed: u64) -> Self {
        NormEngine { seed, ..Self::default() }
    }

    fn seeds(&self, dim: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        if self.basis_restarts {
            for j in 0..dim {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                out.push(e);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_restarts {
            out.push((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
        out
    }

    /// Operator norm of `t: from → to` as an interval.
    pub fn op_norm(&self, from: &HostSpace, to: &HostSpace, t: &Matrix<f64>) -> Result<NormInterval> {
        if t.cols() != from.dim() || t.rows() != to.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} operator between hosts of dimension {} and {}",
                t.rows(),
                t.cols(),
                from.dim(),
                to.dim()
            )));
        }
        if t.rows() == 0 || t.cols() == 0 || t.max_abs() == 0.0 {
            return Ok(NormInterval::exact(0.0));
        }
        match (from.lp_view(), to.lp_view()) {
            (Some((wf, pf)), Some((wt, pt))) if pf == pt => {
                let reduced = reduce_to_unweighted(t, &wf, &wt, pf);
                Ok(self.lp_op_norm(&reduced, pf))
            }
            _ => Ok(self.host_ascent(from, to, t)),
        }
    }

    /// Norm on unweighted `ℓ_p`.
    pub fn lp_op_norm(&self, t: &Matrix<f64>, p: Exponent) -> NormInterval {
        match p {
            Exponent::Infinity => NormInterval::exact(max_row_sum(t)),
            Exponent::Finite(1.0) => NormInterval::exact(max_col_sum(t)),
            Exponent::Finite(2.0) => self.spectral(t),
            Exponent::Finite(v) => self.general_p(t, v),
        }
    }

    fn spectral(&self, t: &Matrix<f64>) -> NormInterval {
        // Eigen-decomposition of the Gram matrix; nalgebra's SVD with vectors
        // misreports the top singular value on some rank-deficient inputs.
        let dm = DMatrix::from_row_slice(t.rows(), t.cols(), t.entries());
        let eig = (dm.transpose() * &dm).symmetric_eigen();
        let (idx, lambda) = eig.eigenvalues.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, l)| {
            if l > best.1 {
                (i, l)
            } else {
                best
            }
        });
        let start: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let (lower, converged) = self.power_iteration(t, start);
        let fro = t.frobenius();
        let slack = 8.0 * t.cols() as f64 * EPS * fro * fro;
        let upper = lower.max((lambda.max(0.0) + slack).sqrt());
        let ok = converged && upper - lower <= 1e-9 * upper;
        NormInterval { lower, upper, certified: true, converged: ok }
    }

    fn power_iteration(&self, t: &Matrix<f64>, mut x: Vec<f64>) -> (f64, bool) {
        let tt = t.transpose();
        let mut best = 0.0f64;
        let mut prev = 0.0f64;
        normalize2(&mut x);
        for _ in 0..self.max_iter {
            let y = t.mul_vec(&x).expect("shape checked");
            let val = norm2(&y);
            best = best.max(val);
            if val == 0.0 {
                return (best, true);
            }
            if (val - prev).abs() <= self.power_tol * val {
                return (best, true);
            }
            prev = val;
            x = tt.mul_vec(&y).expect("shape checked");
            if normalize2(&mut x) == 0.0 {
                return (best, true);
            }
        }
        (best, false)
    }

    fn general_p(&self, t: &Matrix<f64>, p: f64) -> NormInterval {
        let (lower, converged) = self.boyd_ascent(t, p);
        let interp = interpolation_bound(t, Exponent::Finite(p));
        let schur = schur_certificate(t, p, self.max_iter.min(500));
        let upper = interp.min(schur);
        debug_assert!(upper >= lower * (1.0 - 1e-9), "upper {upper} below lower {lower}");
        NormInterval { lower, upper: upper.max(lower), certified: true, converged }
    }

    /// Norm-ascent for `ℓ_p → ℓ_p`: `x ↦ ψ_{p'}(Tᵀ ψ_p(Tx))`, normalized.
    fn boyd_ascent(&self, t: &Matrix<f64>, p: f64) -> (f64, bool) {
        let q = p / (p - 1.0);
        let tt = t.transpose();
        let norm_p = Exponent::Finite(p);
        let mut best = 0.0f64;
        let mut all_converged = true;
        for mut x in self.seeds(t.cols()) {
            let nx = plain_p_norm(&x, norm_p);
            if nx == 0.0 {
                continue;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let mut value = plain_p_norm(&t.mul_vec(&x).expect("shape checked"), norm_p);
            best = best.max(value);
            let mut converged = false;
            for _ in 0..self.max_iter {
                let y = t.mul_vec(&x).expect("shape checked");
                let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if ymax == 0.0 {
                    converged = true;
                    break;
                }
                let g: Vec<f64> = y.iter().map(|v| signed_pow(v / ymax, p - 1.0)).collect();
                let z = tt.mul_vec(&g).expect("shape checked");
                let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if zmax == 0.0 {
                    converged = true;
                    break;
                }
                let mut next: Vec<f64> = z.iter().map(|v| signed_pow(v / zmax, q - 1.0)).collect();
                let nn = plain_p_norm(&next, norm_p);
                next.iter_mut().for_each(|v| *v /= nn);
                let next_value = plain_p_norm(&t.mul_vec(&next).expect("shape checked"), norm_p);
                best = best.max(next_value);
                let change = (next_value - value).abs();
                x = next;
                value = next_value;
                if change <= self.ascent_tol * value {
                    converged = true;
                    break;
                }
            }
            all_converged &= converged;
        }
        (best, all_converged)
    }

    /// Lower bound for arbitrary hosts by monotone ascent on
    /// `‖Tx‖_to / ‖x‖_from`.
    fn host_ascent(&self, from: &HostSpace, to: &HostSpace, t: &Matrix<f64>) -> NormInterval {
        let (lower, converged) = self.ascent_lower(from, to, t);
        NormInterval { lower, upper: f64::INFINITY, certified: false, converged }
    }

    pub(crate) fn ascent_lower(&self, from: &HostSpace, to: &HostSpace, t: &Matrix<f64>) -> (f64, bool) {
        let tt = t.transpose();
        let ratio = |x: &[f64]| -> f64 {
            let d = from.norm_unchecked(x);
            if d == 0.0 {
                0.0
            } else {
                to.norm_unchecked(&t.mul_vec(x).expect("shape checked")) / d
            }
        };
        let mut best = 0.0f64;
        let mut all_converged = true;
        for mut x in self.seeds(t.cols()) {
            let nx = from.norm_unchecked(&x);
            if nx == 0.0 {
                continue;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let mut value = ratio(&x);
            best = best.max(value);
            let mut converged = false;
            for _ in 0..self.max_iter {
                let y = t.mul_vec(&x).expect("shape checked");
                let dual = to.norm_gradient(&y);
                let pulled = tt.mul_vec(&dual).expect("shape checked");
                // Gradient of the ratio at a point with ‖x‖_from = 1.
                let gfrom = from.norm_gradient(&x);
                let grad: Vec<f64> = pulled.iter().zip(&gfrom).map(|(a, b)| a - value * b).collect();
                let gnorm = norm2(&grad);
                let mut candidates = vec![pulled.clone()];
                if gnorm > 0.0 {
                    let xn = norm2(&x);
                    let mut step = 1.0;
                    while step > 1e-12 {
                        candidates.push(x.iter().zip(&grad).map(|(a, g)| a + step * xn * g / gnorm).collect());
                        step *= 0.5;
                    }
                }
                let improved = candidates.into_iter().find_map(|c| {
                    let v = ratio(&c);
                    (v > value).then_some((c, v))
                });
                let Some((mut next, next_value)) = improved else {
                    converged = true;
                    break;
                };
                let nn = from.norm_unchecked(&next);
                next.iter_mut().for_each(|v| *v /= nn);
                let change = next_value - value;
                x = next;
                value = next_value;
                best = best.max(value);
                if change <= self.ascent_tol * value {
                    converged = true;
                    break;
                }
            }
            all_converged &= converged;
        }
        (best, all_converged)
    }
}

/// `D_to T D_from^{-1}` with `D = diag(w^{1/p})`.
fn reduce_to_unweighted(t: &Matrix<f64>, from_w: &[f64], to_w: &[f64], p: Exponent) -> Matrix<f64> {
    let r = p.reciprocal();
    if r == 0.0 {
        return t.clone();
    }
    let df: Vec<f64> = from_w.iter().map(|w| w.powf(r)).collect();
    let dt: Vec<f64> = to_w.iter().map(|w| w.powf(r)).collect();
    let mut out = t.clone();
    for i in 0..t.rows() {
        for j in 0..t.cols() {
            out.set(i, j, dt[i] * t.get(i, j) / df[j]);
        }
    }
    out
}

/// `‖T‖_1^{1/p} ‖T‖_∞^{1-1/p}`, an upper bound for `‖T‖_{p→p}`.
pub fn interpolation_bound(t: &Matrix<f64>, p: Exponent) -> f64 {
    let r = p.reciprocal();
    max_col_sum(t).powf(r) * max_row_sum(t).powf(1.0 - r)
}

fn max_col_sum(t: &Matrix<f64>) -> f64 {
    (0..t.cols()).map(|j| (0..t.rows()).map(|i| t.get(i, j).abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn max_row_sum(t: &Matrix<f64>) -> f64 {
    (0..t.rows()).map(|i| t.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn norm2(x: &[f64]) -> f64 {
    plain_p_norm(x, Exponent::Finite(2.0))
}

fn normalize2(x: &mut [f64]) -> f64 {
    let n = norm2(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Schur-test upper bound for `‖T‖_{p→p}`.
///
/// With `A = |T|` and positive `x` on the active columns, set
/// `a_i^{p'} = (Ax)_i` and `b_j^{p'} = x_j`. If `Σ_j A_ij b_j^{p'} ≤ C1 a_i^{p'}`
/// and `Σ_i A_ij a_i^p ≤ C2 b_j^p`, then `‖T‖_p ≤ ‖A‖_p ≤ C1^{1/p'} C2^{1/p}`.
/// The bound is tight when `x` is the positive maximizer for `A`, which a
/// few ascent steps on `A` from the all-ones vector approach.
fn schur_certificate(t: &Matrix<f64>, p: f64, steps: usize) -> f64 {
    let q = p / (p - 1.0);
    let a = t.map(|v| v.abs());
    let at = a.transpose();
    let active_cols: Vec<bool> = (0..a.cols()).map(|j| (0..a.rows()).any(|i| *a.get(i, j) > 0.0)).collect();
    let mut x: Vec<f64> = active_cols.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
    let mut prev = 0.0f64;
    for _ in 0..steps {
        let y = a.mul_vec(&x).expect("square by construction");
        let ymax = y.iter().fold(0.0f64, |m, v| m.max(*v));
        let g: Vec<f64> = y.iter().map(|v| (v / ymax).powf(p - 1.0)).collect();
        let z = at.mul_vec(&g).expect("shape");
        let zmax = z.iter().fold(0.0f64, |m, v| m.max(*v));
        let mut next: Vec<f64> = z
            .iter()
            .zip(&active_cols)
            .map(|(v, &c)| if c { (v / zmax).powf(q - 1.0).max(1e-300) } else { 0.0 })
            .collect();
        let nn = plain_p_norm(&next, Exponent::Finite(p));
        next.iter_mut().for_each(|v| *v /= nn);
        let value = plain_p_norm(&a.mul_vec(&next).expect("shape"), Exponent::Finite(p));
        x = next;
        if (value - prev).abs() <= 1e-15 * value {
            break;
        }
        prev = value;
    }
    let y = a.mul_vec(&x).expect("shape");
    let mut c1 = 0.0f64;
    for (i, yi) in y.iter().enumerate() {
        if *yi > 0.0 {
            let lhs: f64 = a.row(i).iter().zip(&x).map(|(aij, xj)| aij * xj).sum();
            c1 = c1.max(lhs / yi);
        }
    }
    let mut c2 = 0.0f64;
    for j in 0..a.cols() {
        if !active_cols[j] {
            continue;
        }
        let lhs: f64 = (0..a.rows()).filter(|&i| y[i] > 0.0).map(|i| a.get(i, j) * y[i].powf(p - 1.0)).sum();
        c2 = c2.max(lhs / x[j].powf(p - 1.0));
    }
    let slack = 1.0 + 16.0 * EPS * (a.rows() + a.cols()) as f64;
    c1.powf(1.0 / q) * c2.powf(1.0 / p) * slack
}

/// Largest ascent estimate of `A(x) = Σ_i x_{m_i} e_{n_i}` over all pairs of
/// increasing index sequences of equal length inside the first `n`
/// coordinates of a Lorentz host. A desk-scale stand-in for the
/// subsequence-equivalence constant of the unit vector basis.
pub fn subsym_constant_m(host: &HostSpace, n: usize) -> Result<f64> {
    const CAP: usize = 10;
    let HostSpace::Lorentz { weights, p } = host else {
        return Err(Error::UnsupportedHost(format!(
            "subsequence constant needs a Lorentz host, got {}",
            host.kind_name()
        )));
    };
    if n > CAP {
        return Err(Error::EnumerationCap(format!("n = {n} exceeds the exhaustive cap {CAP}")));
    }
    if n == 0 || n > weights.len() {
        return Err(Error::Dimension(format!("n = {n} outside 1..={}", weights.len())));
    }
    let sub = HostSpace::Lorentz { weights: weights[..n].to_vec(), p: *p };
    let engine = NormEngine { random_restarts: 0, basis_restarts: true, ..NormEngine::default() };
    let subsets: Vec<Vec<Vec<usize>>> = {
        let mut by_len = vec![Vec::new(); n + 1];
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            by_len[idx.len()].push(idx);
        }
        by_len
    };
    let mut best = 0.0f64;
    for same_len in &subsets {
        for src in same_len {
            for dst in same_len {
                let mut a = Matrix::<f64>::zeros(n, n);
                for (m, k) in src.iter().zip(dst) {
                    a.set(*k, *m, 1.0);
                }
                let (v, _) = engine.ascent_lower(&sub, &sub, &a);
                best = best.max(v);
            }
        }
    }
    Ok(best)
}
