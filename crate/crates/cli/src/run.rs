use std::fs;

use serde_json::{json, Map, Value};

use diagbench::constructions::{
    convergence, cutdown_diagonal, direct_sum_diagonal, ideal_diagonal, standard_c, BlockAlgebra, IDENTITY_PROBES,
};
use diagbench::groups::{GroupSpecFile, MatrixGroup};
use diagbench::lifts::{certify_a, BiorthogonalSystem, BoundSource, Dissection, ProbeSet};
use diagbench::spaces::{Exponent, HostSpace, NormEngine};
use diagbench::tensor::{
    canonical_diagonal, check_diagonal_in, group_diagonal, is_diagonal, pi, Convention, DiagonalCheck, TensorElement,
    UnitSpan,
};
use diagbench::{Matrix, Rational};

use crate::config::{
    Command, ExperimentConfig, GroupConfig, GroupName, HostConfig, HostKind, Model, OperatorConfig, OperatorName,
};
use crate::report::{float_array, float_value, Report, Row};
use crate::CliError;

const DEFAULT_CONVERGE_SCHEDULE: [usize; 5] = [2, 4, 8, 16, 32];
const DEFAULT_LORENTZ_ALPHA: f64 = 0.5;

/// Executes the experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<Report, CliError> {
    if !(config.tolerance.is_finite() && config.tolerance >= 0.0) {
        return Err(CliError::Invalid(format!("tolerance {} must be finite and nonnegative", config.tolerance)));
    }
    let (rows, verdict, probes, summary) = match config.command {
        Command::VerifyDiagonal => verify_diagonal(config)?,
        Command::Irreducible => irreducible(config)?,
        Command::CertifyA => certify(config)?,
        Command::Converge => converge(config)?,
        Command::Construct => construct(config)?,
    };
    Ok(Report { config: config.clone(), rows, verdict, probes, summary })
}

type Outcome = (Vec<Row>, bool, Value, Map<String, Value>);

fn build_group(g: &GroupConfig) -> Result<(MatrixGroup, String), CliError> {
    if g.kind == GroupName::File {
        let path = g
            .generators_file
            .as_ref()
            .ok_or_else(|| CliError::Invalid("group kind file needs generators_file".into()))?;
        let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let spec: GroupSpecFile =
            serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        if g.n.is_some_and(|n| n != spec.n) {
            return Err(CliError::Invalid(format!("group file has n = {}, config has {:?}", spec.n, g.n)));
        }
        return Ok((spec.build()?, format!("file:{}", path.display())));
    }
    let n = g.n.ok_or_else(|| CliError::Invalid("group needs n".into()))?;
    let group = match g.kind {
        GroupName::Monomial => MatrixGroup::monomial(n)?,
        GroupName::CyclicMonomial => MatrixGroup::cyclic_monomial(n)?,
        GroupName::SignFlips => MatrixGroup::sign_flips(n)?,
        other => other.schedule_choice()?.build(n)?,
    };
    let name = serde_json::to_value(g.kind).expect("enum serializes");
    Ok((group, name.as_str().expect("unit variant").to_string()))
}

fn verify_diagonal(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (group, name) = build_group(config.group()?)?;
    let n = group.n();
    let d = group_diagonal::<Rational>(&group);
    let exact_equal = d.coordinates_eq(&canonical_diagonal(n));
    let row = Row::new()
        .with("n", n)
        .with("group", name.as_str())
        .with("group_order", group.order())
        .with("irreducible", group.is_irreducible()?)
        .with("exact_equal", exact_equal)
        .with("is_diagonal_std", is_diagonal(&d, Convention::Std)?)
        .with("is_diagonal_op", is_diagonal(&d, Convention::Op)?);
    Ok((vec![row], exact_equal, Value::Null, Map::new()))
}

fn irreducible(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (group, name) = build_group(config.group()?)?;
    let n = group.n();
    let rank = group.span_rank()?;
    let row = Row::new()
        .with("n", n)
        .with("group", name.as_str())
        .with("group_order", group.order())
        .with("span_rank", rank)
        .with("full_rank", n * n)
        .with("irreducible", rank == n * n);
    Ok((vec![row], rank == n * n, Value::Null, Map::new()))
}

fn exponent(h: &HostConfig) -> Result<Exponent, CliError> {
    Ok(Exponent::new(h.p)?)
}

fn host_space(h: &HostConfig) -> Result<HostSpace, CliError> {
    let p = exponent(h)?;
    let weights = |dim: usize| -> Result<Vec<f64>, CliError> {
        match &h.weights {
            Some(w) if w.len() == dim => Ok(w.clone()),
            Some(w) => Err(CliError::Invalid(format!("{} weights for a host of dimension {dim}", w.len()))),
            None => Err(CliError::Invalid("weighted-lp host needs weights".into())),
        }
    };
    if h.dim == 0 {
        return Err(CliError::Invalid("host dimension must be positive".into()));
    }
    Ok(match h.kind {
        HostKind::Lp => HostSpace::lp(h.dim, p),
        HostKind::WeightedLp => HostSpace::weighted_lp(weights(h.dim)?, p)?,
        HostKind::Lorentz => match (&h.weights, p) {
            (_, Exponent::Infinity) => return Err(CliError::Invalid("Lorentz hosts need finite p".into())),
            (Some(_), Exponent::Finite(v)) => HostSpace::lorentz(weights(h.dim)?, v)?,
            (None, Exponent::Finite(v)) => {
                HostSpace::lorentz_power(h.dim, h.alpha.unwrap_or(DEFAULT_LORENTZ_ALPHA), v)?
            }
        },
        HostKind::Dissection => HostSpace::weighted_lp(vec![1.0 / h.dim as f64; h.dim], p)?,
    })
}

fn schedule_or(config: &ExperimentConfig, default: impl FnOnce() -> Vec<usize>) -> Vec<usize> {
    if config.schedule.is_empty() {
        default()
    } else {
        config.schedule.clone()
    }
}

fn certify(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let h = config.host()?;
    let host = host_space(h)?;
    let choice = match &config.group {
        Some(g) => g.kind.schedule_choice()?,
        None => GroupName::CyclicMonomial.schedule_choice()?,
    };
    let schedule = schedule_or(config, || (1..=h.dim).collect());
    if schedule.iter().any(|&n| n == 0 || n > h.dim) {
        return Err(CliError::Invalid(format!("schedule entries must lie in 1..={}", h.dim)));
    }
    let systems: Vec<BiorthogonalSystem> = match h.kind {
        HostKind::Lp => {
            schedule.iter().map(|&n| BiorthogonalSystem::lp_truncation(&host, n)).collect::<Result<_, _>>()?
        }
        HostKind::WeightedLp => {
            return Err(CliError::Invalid("certify-a has no biorthogonal system for weighted-lp hosts".into()))
        }
        HostKind::Lorentz => {
            schedule.iter().map(|&n| BiorthogonalSystem::lorentz(&host, n)).collect::<Result<_, _>>()?
        }
        HostKind::Dissection => {
            if !h.dim.is_power_of_two() {
                return Err(CliError::Invalid("dissection hosts need a power-of-two number of atoms".into()));
            }
            let chain = Dissection::uniform(h.dim.trailing_zeros())?.refinement_chain(h.dim)?;
            let p = exponent(h)?;
            schedule.iter().map(|&n| BiorthogonalSystem::dissection(&chain[n - 1], p)).collect::<Result<_, _>>()?
        }
    };
    let sched = systems
        .into_iter()
        .zip(&schedule)
        .map(|(s, &n)| Ok((s, choice.build(n)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let probes = ProbeSet::standard(&host, config.seed)?;
    let report = certify_a(&sched, &host, &probes, &NormEngine::with_seed(config.seed), config.tolerance)?;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            Row::new()
                .with("n", r.n)
                .with("group_order", r.group_order)
                .with("a_i", r.a_i)
                .with("a_ii", r.a_ii)
                .with("a_iii_upper", r.a_iii_upper)
                .with("a_iii_lower", r.a_iii_lower)
                .with("a_iii_source", source_name(r.a_iii_source))
                .with("trace_defect", r.trace_defect)
        })
        .collect();
    let mut summary = Map::new();
    summary.insert("a_iii_sup".into(), float_value(report.a_iii_sup));
    summary.insert("a_ii_certified".into(), Value::Bool(report.a_ii_certified));
    summary.insert(
        "structural_constants".into(),
        report.structural_constants.map_or(Value::Null, |(k, m)| json!({"k": float_value(k), "m": float_value(m)})),
    );
    summary.insert("tolerance".into(), float_value(report.tolerance));
    let probes = json!({
        "seed": report.probes.seed,
        "vectors": report.probes.vectors.iter().map(|v| float_array(v)).collect::<Vec<_>>(),
        "functionals": report.probes.functionals.iter().map(|v| float_array(v)).collect::<Vec<_>>(),
    });
    Ok((rows, report.verdict, probes, summary))
}

fn source_name(s: BoundSource) -> &'static str {
    match s {
        BoundSource::Engine => "engine",
        BoundSource::Structural => "structural",
        BoundSource::None => "none",
    }
}

fn converge(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let h = config.host()?;
    if h.kind != HostKind::Lp {
        return Err(CliError::Invalid("converge needs an lp host".into()));
    }
    let host = host_space(h)?;
    let choice =
        config.group.as_ref().map_or(Ok(GroupName::Auto), |g| Ok(g.kind)).and_then(GroupName::schedule_choice)?;
    let schedule = schedule_or(config, || DEFAULT_CONVERGE_SCHEDULE.into_iter().filter(|&n| n <= h.dim).collect());
    if schedule.is_empty() || schedule.iter().any(|&n| n == 0 || n > h.dim) {
        return Err(CliError::Invalid(format!("schedule entries must lie in 1..={}", h.dim)));
    }
    let op_config = config.operator.clone().unwrap_or(OperatorConfig { kind: OperatorName::HarmonicDiag, m: None });
    let operator = op_config.operator(config.seed)?;
    let reports = convergence(&host, &operator, &schedule, choice, &NormEngine::with_seed(config.seed))?;
    let tol = config.tolerance;
    let monotone = reports.windows(2).all(|w| w[1].pi_defect <= w[0].pi_defect + tol);
    let identity = reports.iter().all(|r| r.identity_residual <= tol);
    let rows = reports
        .iter()
        .map(|r| {
            Row::new()
                .with("n", r.n)
                .with("group_order", r.group_order)
                .with("pi_defect", r.pi_defect)
                .with("commutator_bound", r.commutator_bound)
                .with("direct_commutator_bound", r.direct_commutator_bound)
                .with("diag_norm_bound", r.diag_norm_bound)
                .with("compressed_norm", r.compressed_norm)
                .with("analytic_bound", r.analytic_bound)
                .with("identity_residual", r.identity_residual)
        })
        .collect();
    let mut summary = Map::new();
    summary.insert("pi_defect_nonincreasing".into(), Value::Bool(monotone));
    summary.insert("identity_holds".into(), Value::Bool(identity));
    let probes = json!({
        "operator": serde_json::to_value(operator).expect("operator serializes"),
        "seed": config.seed,
        "identity_probes": IDENTITY_PROBES,
    });
    Ok((rows, monotone && identity, probes, summary))
}

fn check_row(
    model: &str,
    m: usize,
    k: usize,
    t: &TensorElement<Rational>,
    check: DiagonalCheck,
    unit: Matrix<Rational>,
) -> Row {
    let pi_identity = pi(t, false) == unit;
    Row::new()
        .with("model", model)
        .with("m", m)
        .with("k", k)
        .with("terms", t.len())
        .with("supported", check.supported)
        .with("std_module", check.std_module)
        .with("std_pi", check.std_pi)
        .with("pi_identity", pi_identity)
        .with("is_diagonal", check.passed() && pi_identity)
}

fn direct_sum_row(m: usize, k: usize, label: &str) -> Result<Row, CliError> {
    let d11 = canonical_diagonal::<Rational>(m).embed(m + k, 0);
    let out = direct_sum_diagonal(m, k, &d11, &standard_c(m, k)?)?;
    let check = check_diagonal_in(&out, &UnitSpan::full(m + k), Convention::Std)?;
    Ok(check_row(label, m, k, &out, check, Matrix::identity(m + k)))
}

fn cutdown_row(m: usize, k: usize, label: &str) -> Result<Row, CliError> {
    let out = cutdown_diagonal(&canonical_diagonal(m + k), m, k, &standard_c(m, k)?)?;
    let check = check_diagonal_in(&out, &UnitSpan::full(m), Convention::Std)?;
    Ok(check_row(label, m, k, &out, check, Matrix::identity(m)))
}

fn construct(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = config.construct.as_ref().ok_or_else(|| CliError::Invalid("construct needs a model".into()))?;
    if c.m == 0 {
        return Err(CliError::Invalid("construct needs m ≥ 1".into()));
    }
    let rows = match c.model {
        Model::DirectSum => vec![direct_sum_row(c.m, c.k, "direct-sum")?],
        Model::Cutdown => vec![cutdown_row(c.m, c.k, "cutdown")?],
        Model::Hyperplane => {
            vec![direct_sum_row(1, 1, "hyperplane-direct-sum")?, cutdown_row(1, 1, "hyperplane-cutdown")?]
        }
        Model::Ideal => {
            if c.k == 0 || c.block > 1 {
                return Err(CliError::Invalid("ideal model needs k ≥ 1 and block 0 or 1".into()));
            }
            let alg = BlockAlgebra::new(vec![c.m, c.k])?;
            let out = ideal_diagonal(&alg.canonical_diagonal(), &alg.block_unit(c.block))?;
            let ideal = alg.ideal(c.block);
            let check = check_diagonal_in(&out, &ideal, Convention::Std)?;
            vec![check_row("ideal", c.m, c.k, &out, check, ideal.identity())]
        }
    };
    let verdict = rows.iter().all(|r| r.get("is_diagonal") == Some(&true.into()));
    Ok((rows, verdict, Value::Null, Map::new()))
}
