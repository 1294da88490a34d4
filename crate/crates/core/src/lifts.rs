//! Biorthogonal systems on host spaces and the lift
//! `E(a) = Σ a_ij x_i ⊗ x*_j` of `M_n` into operators on the host.
//!
//! Operators are stored as `dim × dim` matrices acting on host
//! coordinates, with functionals applied through the host pairing, so
//! `E(a)x = Σ a_ij ⟨x, x*_j⟩ x_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::MatrixGroup;
use crate::linalg::Matrix;
use crate::spaces::{subsym_constant_m, Exponent, HostSpace, NormEngine};

/// Absolute tolerance for floating-point certifications.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    LpTruncation,
    Dissection,
    Lorentz,
    Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiorthogonalSystem {
    kind: SystemKind,
    host: HostSpace,
    vectors: Vec<Vec<f64>>,
    functionals: Vec<Vec<f64>>,
}

impl BiorthogonalSystem {
    /// Validates shapes and biorthogonality to within `1e-12`.
    pub fn new(kind: SystemKind, host: HostSpace, vectors: Vec<Vec<f64>>, functionals: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() != functionals.len() {
            return Err(Error::Dimension(format!("{} vectors and {} functionals", vectors.len(), functionals.len())));
        }
        let dim = host.dim();
        if vectors.len() > dim {
            return Err(Error::Dimension(format!("system of size {} in a host of dimension {dim}", vectors.len())));
        }
        if vectors.iter().chain(&functionals).any(|v| v.len() != dim) {
            return Err(Error::Dimension(format!("system coordinates must have length {dim}")));
        }
        let system = BiorthogonalSystem { kind, host, vectors, functionals };
        let defect = system.biorthogonality_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidParameter(format!("system is not biorthogonal (defect {defect:e})")));
        }
        Ok(system)
    }

    /// The first `n` unit vectors and coordinate functionals of an
    /// unweighted `ℓ_p` host.
    pub fn lp_truncation(host: &HostSpace, n: usize) -> Result<Self> {
        match host {
            HostSpace::WeightedLp { weights, .. } if weights.iter().all(|w| *w == 1.0) => {}
            HostSpace::Mixed { .. } if host.lp_view().is_some() => {}
            _ => {
                return Err(Error::UnsupportedHost(format!(
                    "truncation systems need an unweighted ℓ_p host, got {}",
                    host.kind_name()
                )))
            }
        }
        Self::coordinate(SystemKind::LpTruncation, host, n)
    }

    /// Unit vector basis of a Lorentz host, truncated to `n`.
    pub fn lorentz(host: &HostSpace, n: usize) -> Result<Self> {
        if !matches!(host, HostSpace::Lorentz { .. }) {
            return Err(Error::UnsupportedHost(format!("expected a Lorentz host, got {}", host.kind_name())));
        }
        Self::coordinate(SystemKind::Lorentz, host, n)
    }

    fn coordinate(kind: SystemKind, host: &HostSpace, n: usize) -> Result<Self> {
        let dim = host.dim();
        if n == 0 || n > dim {
            return Err(Error::Dimension(format!("system size {n} outside 1..={dim}")));
        }
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                v
            })
            .collect();
        Self::new(kind, host.clone(), basis.clone(), basis)
    }

    /// `x_i = μ(M_i)^{-1/p} χ_{M_i}`, `x*_i = μ(M_i)^{-1/p'} χ_{M_i}` on the
    /// atoms of `d`, paired by the measure.
    pub fn dissection(d: &Dissection, p: Exponent) -> Result<Self> {
        let host = HostSpace::weighted_lp(d.atoms.clone(), p)?;
        let dim = d.atoms.len();
        let (rp, rq) = (p.reciprocal(), p.conjugate().reciprocal());
        let mut vectors = Vec::new();
        let mut functionals = Vec::new();
        for cell in &d.cells {
            let mu: f64 = cell.iter().map(|&a| d.atoms[a]).sum();
            let mut x = vec![0.0; dim];
            let mut xs = vec![0.0; dim];
            for &a in cell {
                x[a] = mu.powf(-rp);
                xs[a] = mu.powf(-rq);
            }
            vectors.push(x);
            functionals.push(xs);
        }
        Self::new(SystemKind::Dissection, host, vectors, functionals)
    }

    /// `{(x ⊗ y, x* ⊗ y*)}` with index `i*m + k` for `(x_i, y_k)`. Two
    /// unweighted hosts give the mixed host `ℓ_q(ℓ_p)` (outer exponent from
    /// the first); weighted `ℓ_p` hosts with a common exponent give the
    /// product measure.
    pub fn tensor(a: &Self, b: &Self) -> Result<Self> {
        let host = match (&a.host, &b.host) {
            (HostSpace::WeightedLp { weights: wa, p: pa }, HostSpace::WeightedLp { weights: wb, p: pb })
                if wa.iter().chain(wb).all(|w| *w == 1.0) =>
            {
                HostSpace::mixed(wa.len(), wb.len(), *pb, *pa)
            }
            (HostSpace::WeightedLp { weights: wa, p: pa }, HostSpace::WeightedLp { weights: wb, p: pb })
                if pa == pb =>
            {
                HostSpace::weighted_lp(wa.iter().flat_map(|x| wb.iter().map(move |y| x * y)).collect(), *pa)?
            }
            _ => {
                return Err(Error::UnsupportedHost(format!(
                    "tensor systems need ℓ_p factors, got {} and {}",
                    a.host.kind_name(),
                    b.host.kind_name()
                )))
            }
        };
        let kron = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect() };
        let mut vectors = Vec::new();
        let mut functionals = Vec::new();
        for (x, xs) in a.vectors.iter().zip(&a.functionals) {
            for (y, ys) in b.vectors.iter().zip(&b.functionals) {
                vectors.push(kron(x, y));
                functionals.push(kron(xs, ys));
            }
        }
        Self::new(SystemKind::Tensor, host, vectors, functionals)
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn host(&self) -> &HostSpace {
        &self.host
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn functionals(&self) -> &[Vec<f64>] {
        &self.functionals
    }

    fn pair(&self, x: &[f64], y: &[f64]) -> f64 {
        self.host.pairing(x, y).expect("lengths validated at construction")
    }

    /// `max |⟨x_i, x*_j⟩ − δ_ij|`.
    pub fn biorthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, x) in self.vectors.iter().enumerate() {
            for (j, xs) in self.functionals.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.pair(x, xs) - target).abs());
            }
        }
        worst
    }

    /// `|1 − (1/n) Σ ⟨x_i, x*_i⟩|`.
    pub fn trace_defect(&self) -> f64 {
        let n = self.n() as f64;
        let s: f64 = self.vectors.iter().zip(&self.functionals).map(|(x, xs)| self.pair(x, xs)).sum();
        (1.0 - s / n).abs()
    }
}

/// A finite probability space (atoms with measures) and a partition of its
/// atoms into cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dissection {
    atoms: Vec<f64>,
    cells: Vec<Vec<usize>>,
}

impl Dissection {
    pub fn new(atoms: Vec<f64>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidParameter("atom measures must be positive".into()));
        }
        let total: f64 = atoms.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("atom measures sum to {total}, not 1")));
        }
        let mut seen = vec![false; atoms.len()];
        for cell in &cells {
            if cell.is_empty() {
                return Err(Error::InvalidParameter("empty cell".into()));
            }
            for &a in cell {
                if a >= atoms.len() || std::mem::replace(&mut seen[a], true) {
                    return Err(Error::InvalidParameter(format!("atom {a} missing or repeated in cells")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("cells do not cover every atom".into()));
        }
        Ok(Dissection { atoms, cells })
    }

    /// One cell holding every atom.
    pub fn trivial(atoms: Vec<f64>) -> Result<Self> {
        let all = (0..atoms.len()).collect();
        Self::new(atoms, vec![all])
    }

    /// `2^k` atoms of measure `2^{-k}` in a single cell.
    pub fn uniform(k: u32) -> Result<Self> {
        let m = 1usize << k;
        Self::trivial(vec![1.0 / m as f64; m])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_measures(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.iter().map(|&a| self.atoms[a]).sum()).collect()
    }

    /// Splits the cell of largest measure (lowest index on ties) into the
    /// first and second halves of its atom list. Cells of one atom cannot
    /// be split and are passed over.
    pub fn refine(&self) -> Result<Self> {
        let measures = self.cell_measures();
        let target = (0..self.cells.len())
            .filter(|&i| self.cells[i].len() > 1)
            .fold(None::<usize>, |best, i| match best {
                Some(b) if measures[b] >= measures[i] => Some(b),
                _ => Some(i),
            })
            .ok_or_else(|| Error::InvalidParameter("every cell is a single atom".into()))?;
        let cell = &self.cells[target];
        let (first, second) = cell.split_at(cell.len() / 2);
        let mut cells = self.cells.clone();
        cells[target] = first.to_vec();
        cells.insert(target + 1, second.to_vec());
        Ok(Dissection { atoms: self.atoms.clone(), cells })
    }

    /// The chain `self, refine(self), …` of the given length.
    pub fn refinement_chain(&self, len: usize) -> Result<Vec<Self>> {
        let mut chain = vec![self.clone()];
        while chain.len() < len {
            let next = chain.last().expect("nonempty").refine()?;
            chain.push(next);
        }
        chain.truncate(len);
        Ok(chain)
    }

    /// Whether every cell of `coarse` is a union of cells of `self`.
    pub fn refines(&self, coarse: &Self) -> bool {
        if self.atoms != coarse.atoms {
            return false;
        }
        let mut owner = vec![0; self.atoms.len()];
        for (i, c) in coarse.cells.iter().enumerate() {
            for &a in c {
                owner[a] = i;
            }
        }
        self.cells.iter().all(|c| c.iter().all(|&a| owner[a] == owner[c[0]]))
    }
}

/// The homomorphism `E` induced by a biorthogonal system.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    system: BiorthogonalSystem,
}

impl Lift {
    pub fn new(system: BiorthogonalSystem) -> Self {
        Lift { system }
    }

    pub fn system(&self) -> &BiorthogonalSystem {
        &self.system
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn dim(&self) -> usize {
        self.system.host.dim()
    }

    /// `E(a)` as a `dim × dim` matrix on host coordinates.
    pub fn apply(&self, a: &Matrix<f64>) -> Result<Matrix<f64>> {
        let n = self.n();
        if a.rows() != n || a.cols() != n {
            return Err(Error::Dimension(format!("{}x{} matrix lifted by a system of size {n}", a.rows(), a.cols())));
        }
        let dim = self.dim();
        let w = self.system.host.pairing_weights();
        // Row j of `yw` is the functional x*_j as a row acting on coordinates.
        let yw: Vec<Vec<f64>> =
            self.system.functionals.iter().map(|f| f.iter().zip(&w).map(|(v, w)| v * w).collect()).collect();
        let mut out = Matrix::zeros(dim, dim);
        for i in 0..n {
            let x = &self.system.vectors[i];
            for j in 0..n {
                let aij = *a.get(i, j);
                if aij == 0.0 {
                    continue;
                }
                for (k, xk) in x.iter().enumerate() {
                    if *xk == 0.0 {
                        continue;
                    }
                    for (l, yl) in yw[j].iter().enumerate() {
                        if *yl != 0.0 {
                            let v = out.get(k, l) + aij * xk * yl;
                            out.set(k, l, v);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `P = E(I_n)`.
    pub fn projection(&self) -> Matrix<f64> {
        self.apply(&Matrix::identity(self.n())).expect("identity has the system size")
    }

    /// `P^a y = Σ ⟨x_i, y⟩ x*_i`, the adjoint of `P` under the pairing.
    pub fn adjoint_projection_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let host = &self.system.host;
        let mut out = vec![0.0; host.dim()];
        for (x, xs) in self.system.vectors.iter().zip(&self.system.functionals) {
            let c = host.pairing(x, y)?;
            for (o, v) in out.iter_mut().zip(xs) {
                *o += c * v;
            }
        }
        Ok(out)
    }
}

pub fn lift_apply(lift: &Lift, a: &Matrix<f64>) -> Result<Matrix<f64>> {
    lift.apply(a)
}

/// Unit probe vectors and functionals for strong-convergence residuals:
/// every basis vector, the all-ones vector and `random` seeded vectors,
/// each scaled to norm one (functionals in the dual norm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub seed: u64,
    pub vectors: Vec<Vec<f64>>,
    /// Empty when the host has no dual.
    pub functionals: Vec<Vec<f64>>,
}

impl ProbeSet {
    pub const RANDOM_PROBES: usize = 8;

    pub fn standard(host: &HostSpace, seed: u64) -> Result<Self> {
        let dim = host.dim();
        let mut raw: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                v
            })
            .collect();
        raw.push(vec![1.0; dim]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..Self::RANDOM_PROBES {
            raw.push((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
        }
        let normalize = |h: &HostSpace, family: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
            family
                .iter()
                .map(|v| {
                    let n = h.vec_norm(v)?;
                    Ok(v.iter().map(|x| x / n).collect())
                })
                .collect()
        };
        let vectors = normalize(host, &raw)?;
        let functionals = match host.dual_host() {
            Ok(dual) => normalize(&dual, &raw)?,
            Err(_) => Vec::new(),
        };
        Ok(ProbeSet { seed, vectors, functionals })
    }
}

/// Where an A(iii) upper bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    /// The operator-norm engine certified it.
    Engine,
    /// `2·K·M` from the unconditional and subsequence constants of the
    /// Lorentz unit vector basis.
    Structural,
    /// No upper bound available.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub n: usize,
    pub group_order: usize,
    /// `max ‖Px − x‖` over probe vectors.
    pub a_i: f64,
    /// `max ‖P^a y − y‖` in the dual norm; `None` when not certified.
    pub a_ii: Option<f64>,
    /// `max_g` of the upper bound for `‖E(g)‖`.
    pub a_iii_upper: f64,
    /// `max_g` of the lower bound for `‖E(g)‖`.
    pub a_iii_lower: f64,
    pub a_iii_source: BoundSource,
    pub trace_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub rows: Vec<CertificateRow>,
    /// Largest A(iii) upper bound along the schedule.
    pub a_iii_sup: f64,
    pub a_ii_certified: bool,
    /// `K` and `M` when the structural bound was used.
    pub structural_constants: Option<(f64, f64)>,
    pub tolerance: f64,
    pub probes: ProbeSet,
    pub verdict: bool,
}

/// Largest structural dimension for which the subsequence constant is
/// enumerated.
const STRUCTURAL_CAP: usize = 10;

/// Certifies the property-(A) conditions along a schedule of systems and
/// groups on a common host.
pub fn certify_a(
    schedule: &[(BiorthogonalSystem, MatrixGroup)],
    host: &HostSpace,
    probes: &ProbeSet,
    engine: &NormEngine,
    tolerance: f64,
) -> Result<CertificateReport> {
    let dual = host.dual_host().ok();
    let structural = match host {
        HostSpace::Lorentz { .. } if host.dim() <= STRUCTURAL_CAP => Some((1.0, subsym_constant_m(host, host.dim())?)),
        _ => None,
    };
    let mut rows = Vec::with_capacity(schedule.len());
    let mut prev_n = 0;
    for (system, group) in schedule {
        if system.host() != host {
            return Err(Error::InvalidParameter("schedule systems must share the certified host".into()));
        }
        if system.n() < prev_n {
            return Err(Error::InvalidParameter("schedule must be nondecreasing in n".into()));
        }
        prev_n = system.n();
        if group.n() != system.n() {
            return Err(Error::Dimension(format!("group of degree {} for a system of size {}", group.n(), system.n())));
        }
        group.require_irreducible()?;
        let lift = Lift::new(system.clone());
        let p = lift.projection();
        let a_i = probes
            .vectors
            .iter()
            .map(|x| {
                let px = p.mul_vec(x)?;
                let r: Vec<f64> = px.iter().zip(x).map(|(a, b)| a - b).collect();
                host.vec_norm(&r)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let a_ii = match &dual {
            Some(d) if !probes.functionals.is_empty() => Some(
                probes
                    .functionals
                    .iter()
                    .map(|y| {
                        let py = lift.adjoint_projection_apply(y)?;
                        let r: Vec<f64> = py.iter().zip(y).map(|(a, b)| a - b).collect();
                        d.vec_norm(&r)
                    })
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(0.0, f64::max),
            ),
            _ => None,
        };
        let (mut upper, mut lower) = (0.0f64, 0.0f64);
        let mut certified = true;
        for g in group.dense_elements_as::<f64>() {
            let iv = engine.op_norm(host, host, &lift.apply(&g)?)?;
            upper = upper.max(iv.upper);
            lower = lower.max(iv.lower);
            certified &= iv.certified;
        }
        let source = if certified {
            BoundSource::Engine
        } else if let Some((k, m)) = structural {
            upper = 2.0 * k * m;
            BoundSource::Structural
        } else {
            BoundSource::None
        };
        rows.push(CertificateRow {
            n: system.n(),
            group_order: group.order(),
            a_i,
            a_ii,
            a_iii_upper: upper,
            a_iii_lower: lower,
            a_iii_source: source,
            trace_defect: system.trace_defect(),
        });
    }
    let nonincreasing = |f: &dyn Fn(&CertificateRow) -> Option<f64>| {
        rows.windows(2).all(|w| match (f(&w[0]), f(&w[1])) {
            (Some(a), Some(b)) => b <= a + tolerance,
            _ => true,
        })
    };
    let a_iii_sup = rows.iter().map(|r| r.a_iii_upper).fold(0.0, f64::max);
    let a_ii_certified = rows.iter().all(|r| r.a_ii.is_some());
    let verdict = nonincreasing(&|r| Some(r.a_i))
        && nonincreasing(&|r| r.a_ii)
        && a_iii_sup.is_finite()
        && rows.iter().all(|r| r.trace_defect <= tolerance && r.a_iii_lower <= r.a_iii_upper + tolerance);
    Ok(CertificateReport {
        rows,
        a_iii_sup,
        a_ii_certified,
        structural_constants: structural,
        tolerance,
        probes: probes.clone(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(dim: usize, p: f64) -> HostSpace {
        HostSpace::lp(dim, Exponent::new(p).unwrap())
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix<f64> {
        Matrix::from_vec(n, n, (0..n * n).map(|_| rng.gen_range(-4..=4) as f64 / 4.0).collect()).unwrap()
    }

    fn close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> bool {
        a.try_sub(b).unwrap().max_abs() <= tol
    }

    #[test]
    fn dissection_uniform_example() {
        let d = Dissection::new(vec![0.25; 4], vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let s = BiorthogonalSystem::dissection(&d, Exponent::Finite(2.0)).unwrap();
        for (i, x) in s.vectors().iter().enumerate() {
            for (k, v) in x.iter().enumerate() {
                assert!((v - if i == k { 2.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        assert!(s.biorthogonality_defect() < 1e-15);
        assert!(s.trace_defect() < 1e-15);
    }

    #[test]
    fn dissection_validation() {
        assert!(Dissection::new(vec![0.5, 0.6], vec![vec![0, 1]]).is_err());
        assert!(Dissection::new(vec![0.5, 0.5], vec![vec![0]]).is_err());
        assert!(Dissection::new(vec![0.5, 0.5], vec![vec![0, 1], vec![1]]).is_err());
        assert!(Dissection::new(vec![1.0, 0.0], vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn truncation_and_tensor_systems() {
        let h = lp(8, 3.0);
        let s = BiorthogonalSystem::lp_truncation(&h, 3).unwrap();
        assert_eq!(s.n(), 3);
        assert_eq!(s.trace_defect(), 0.0);
        assert!(BiorthogonalSystem::lp_truncation(&h, 9).is_err());
        let a = BiorthogonalSystem::lp_truncation(&lp(2, 3.0), 2).unwrap();
        let b = BiorthogonalSystem::lp_truncation(&lp(3, 3.0), 3).unwrap();
        let t = BiorthogonalSystem::tensor(&a, &b).unwrap();
        assert_eq!(t.n(), 6);
        assert!(matches!(t.host(), HostSpace::Mixed { outer: 2, inner: 3, .. }));
    }

    #[test]
    fn projection_is_idempotent_lift() {
        let d = Dissection::uniform(3).unwrap().refinement_chain(4).unwrap().pop().unwrap();
        for p in [1.0, 1.5, 2.0, f64::INFINITY] {
            let lift = Lift::new(BiorthogonalSystem::dissection(&d, Exponent::new(p).unwrap()).unwrap());
            let pm = lift.projection();
            assert!(close(&(&pm * &pm), &pm, 1e-12));
        }
    }

    #[test]
    fn lift_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let atoms: Vec<f64> = {
            let raw: Vec<f64> = (0..7).map(|_| rng.gen_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        };
        let d = Dissection::new(atoms, vec![vec![0, 3], vec![1], vec![2, 4, 5, 6]]).unwrap();
        let systems = [
            BiorthogonalSystem::lp_truncation(&lp(5, 2.0), 3).unwrap(),
            BiorthogonalSystem::dissection(&d, Exponent::Finite(1.5)).unwrap(),
            BiorthogonalSystem::lorentz(&HostSpace::lorentz_power(5, 0.5, 2.0).unwrap(), 3).unwrap(),
        ];
        for s in systems {
            let lift = Lift::new(s);
            for _ in 0..5 {
                let a = random_matrix(&mut rng, 3);
                let b = random_matrix(&mut rng, 3);
                let lhs = lift.apply(&(&a * &b)).unwrap();
                let rhs = &lift.apply(&a).unwrap() * &lift.apply(&b).unwrap();
                assert!(close(&lhs, &rhs, 1e-10));
            }
        }
    }

    #[test]
    fn signed_permutation_lifts_are_isometries_on_truncations() {
        let e = NormEngine::default();
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let h = lp(5, p);
            let lift = Lift::new(BiorthogonalSystem::lp_truncation(&h, 3).unwrap());
            for g in MatrixGroup::cyclic_monomial(3).unwrap().dense_elements_as::<f64>() {
                let iv = e.op_norm(&h, &h, &lift.apply(&g).unwrap()).unwrap();
                assert!((iv.lower - 1.0).abs() < 1e-12 && (iv.upper - 1.0).abs() < 1e-12, "p={p} {iv:?}");
            }
        }
    }

    #[test]
    fn refinement_chain_is_monotone() {
        let chain = Dissection::uniform(4).unwrap().refinement_chain(16).unwrap();
        assert_eq!(chain.iter().map(|d| d.cells().len()).collect::<Vec<_>>(), (1..=16).collect::<Vec<_>>());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for w in chain.windows(2) {
            assert!(w[1].refines(&w[0]));
            assert!(!w[0].refines(&w[1]));
            let p1 = Lift::new(BiorthogonalSystem::dissection(&w[0], Exponent::Finite(3.0)).unwrap()).projection();
            let p2 = Lift::new(BiorthogonalSystem::dissection(&w[1], Exponent::Finite(3.0)).unwrap()).projection();
            let x: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = p2.mul_vec(&p1.mul_vec(&x).unwrap()).unwrap();
            let rhs = p1.mul_vec(&x).unwrap();
            assert!(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).abs() <= 1e-12));
        }
        // The largest cell is split first; ties go to the lowest index.
        assert_eq!(chain[2].cells(), &[(0..4).collect::<Vec<_>>(), (4..8).collect(), (8..16).collect()]);
        assert!(Dissection::trivial(vec![1.0]).unwrap().refine().is_err());
    }

    #[test]
    fn tensor_lift_factorizes() {
        for p in [1.0, 2.0, f64::INFINITY] {
            let a = BiorthogonalSystem::lp_truncation(&lp(2, p), 2).unwrap();
            let b = BiorthogonalSystem::lp_truncation(&lp(3, p), 3).unwrap();
            let (la, lb) = (Lift::new(a.clone()), Lift::new(b.clone()));
            let lt = Lift::new(BiorthogonalSystem::tensor(&a, &b).unwrap());
            for g in MatrixGroup::cyclic_monomial(2).unwrap().dense_elements_as::<f64>() {
                for h in MatrixGroup::cyclic_monomial(3).unwrap().dense_elements_as::<f64>() {
                    let lhs = lt.apply(&g.kron(&h)).unwrap();
                    let rhs = la.apply(&g).unwrap().kron(&lb.apply(&h).unwrap());
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn certify_truncation_schedule() {
        let h = lp(8, 2.0);
        let schedule: Vec<_> = (1..=8)
            .map(|n| (BiorthogonalSystem::lp_truncation(&h, n).unwrap(), MatrixGroup::cyclic_monomial(n).unwrap()))
            .collect();
        let probes = ProbeSet::standard(&h, 7).unwrap();
        assert_eq!(probes.vectors.len(), 8 + 1 + ProbeSet::RANDOM_PROBES);
        let report = certify_a(&schedule, &h, &probes, &NormEngine::default(), DEFAULT_TOLERANCE).unwrap();
        assert!(report.verdict);
        assert!((report.a_iii_sup - 1.0).abs() < 1e-12);
        assert_eq!(report.rows.last().unwrap().a_i, 0.0);
        assert!(report.a_ii_certified);
        // Probes supported in the first n coordinates are reproduced.
        for n in 1..=8 {
            let p = Lift::new(BiorthogonalSystem::lp_truncation(&h, n).unwrap()).projection();
            for v in probes.vectors.iter().take(n) {
                assert_eq!(&p.mul_vec(v).unwrap(), v);
            }
        }
    }

    #[test]
    fn certify_dissection_schedule() {
        let p = Exponent::Finite(1.5);
        let chain = Dissection::uniform(3).unwrap().refinement_chain(8).unwrap();
        let schedule: Vec<_> = chain
            .iter()
            .map(|d| {
                let s = BiorthogonalSystem::dissection(d, p).unwrap();
                let g = MatrixGroup::cyclic_monomial(s.n()).unwrap();
                (s, g)
            })
            .collect();
        let host = schedule[0].0.host().clone();
        let probes = ProbeSet::standard(&host, 1).unwrap();
        let report = certify_a(&schedule, &host, &probes, &NormEngine::default(), DEFAULT_TOLERANCE).unwrap();
        assert!(report.rows.iter().all(|r| r.a_iii_upper <= 1.0 + 1e-9), "{:?}", report.rows);
        let last = report.rows.last().unwrap();
        assert!(last.a_i < 1e-12 && last.a_ii.unwrap() < 1e-12);
        // Nested conditional expectations are not contractions on the
        // residual for p ≠ 2, so the dual residuals need not be monotone and
        // the monotonicity verdict fails on this chain.
        let a_ii: Vec<f64> = report.rows.iter().map(|r| r.a_ii.unwrap()).collect();
        assert!(a_ii[1] > a_ii[0]);
        assert!(!report.verdict);
    }

    #[test]
    fn certify_lorentz_uses_structural_bound() {
        let h = HostSpace::lorentz_power(6, 0.5, 2.0).unwrap();
        let schedule: Vec<_> = (2..=6)
            .map(|n| (BiorthogonalSystem::lorentz(&h, n).unwrap(), MatrixGroup::cyclic_monomial(n).unwrap()))
            .collect();
        let probes = ProbeSet::standard(&h, 3).unwrap();
        assert!(probes.functionals.is_empty());
        let report = certify_a(&schedule, &h, &probes, &NormEngine::default(), DEFAULT_TOLERANCE).unwrap();
        assert!(!report.a_ii_certified);
        let (k, m) = report.structural_constants.unwrap();
        for r in &report.rows {
            assert_eq!(r.a_iii_source, BoundSource::Structural);
            assert!(r.a_iii_lower <= 2.0 * k * m + 1e-6);
        }
        assert!(report.verdict);
    }

    #[test]
    fn certify_rejects_reducible_groups() {
        let h = lp(2, 2.0);
        let schedule = vec![(BiorthogonalSystem::lp_truncation(&h, 2).unwrap(), MatrixGroup::sign_flips(2).unwrap())];
        let probes = ProbeSet::standard(&h, 0).unwrap();
        let err = certify_a(&schedule, &h, &probes, &NormEngine::default(), DEFAULT_TOLERANCE).unwrap_err();
        assert!(matches!(err, Error::Reducible { .. }));
    }
}
