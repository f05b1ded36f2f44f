//! The five batch experiments. Each returns its data tables and report
//! lines; nothing here touches the filesystem.

use rayon::prelude::*;

use semimart_core::diagnostics::{
    associativity_probe, continuity_probe, linearity_probe, localization_probe, presets,
    stopping_probe, ContinuitySettings, ProbeReport,
};
use semimart_core::hermite::{Distribution, HermiteBasis, TestFunction};
use semimart_core::integrate::scalar::{
    h_dot, ElementaryScalarIntegrand, ScaledDistribution, StoppingRule,
};
use semimart_core::integrate::vector::{riemann_vector, vector_integrate};
use semimart_core::ito::{conv_pair, ito_terms_with_kernel};
use semimart_core::metrics::{
    d_ucp_estimate, fit_log_slope, r_em_estimate, r_ucp_estimate, IntegrandDictionary,
    MetricEstimate, ProcessEnsemble,
};
use semimart_core::paths::{make_partition, simulate_ensemble, stop_path, CadlagPath};
use semimart_core::{DiracSemimartingale, RandomPartition, ScalarPath};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::Table;
use crate::CliError;

/// Data tables keyed by file name, report lines and the overall verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub lines: Vec<String>,
    pub passed: bool,
}

impl Outcome {
    fn new() -> Self {
        Self {
            tables: Vec::new(),
            lines: Vec::new(),
            passed: true,
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.lines.push(format!(
            "{} {name}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        ));
    }

    fn note(&mut self, line: String) {
        self.lines.push(line);
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    match config.experiment {
        Experiment::Simulate => simulate(config),
        Experiment::ItoVerify => ito_verify(config),
        Experiment::RiemannConverge => riemann_converge(config),
        Experiment::Metrics => metrics(config),
        Experiment::IntegratorProbe => integrator_probe(config),
    }
}

fn ensemble(config: &ExperimentConfig) -> Result<Vec<CadlagPath>, CliError> {
    Ok(simulate_ensemble(
        &config.spec(),
        config.resolved_grid_cells(),
        config.seed,
        config.replicas,
    )?)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn simulate(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let paths = ensemble(config)?;
    let mut out = Outcome::new();
    for (i, path) in paths.iter().enumerate() {
        let mut table = Table::new(&["t", "z_t", "z_tminus", "jump_flag"]);
        for t in path.event_times() {
            let jump = path.jump_at(t) != 0.0;
            table.push(vec![
                t.into(),
                path.value(t).into(),
                path.left_limit(t).into(),
                jump.into(),
            ]);
        }
        out.tables.push((format!("path_{i:04}.csv"), table));
        out.note(format!(
            "replica {i}: z_T = {:.6}, jumps = {}, realized variance = {:.6}",
            path.value(path.horizon()),
            path.jump_times().len(),
            path.realized_variance(path.horizon())
        ));
    }
    Ok(out)
}

fn distribution_presets(n: usize) -> Vec<(String, Distribution)> {
    vec![
        (
            "e0".into(),
            Distribution::basis(n, 0).expect("truncation is positive"),
        ),
        ("harmonic".into(), presets::harmonic_distribution(n)),
    ]
}

fn ito_verify(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = config.truncation;
    let basis = HermiteBasis::new(n, config.quad_order)?;
    let spec = config.spec();
    let paths = ensemble(config)?;
    let phis = presets::test_functions(n);
    let kernels = distribution_presets(n)
        .into_iter()
        .map(|(name, t)| Ok((name, basis.shift_kernel(&t)?)))
        .collect::<Result<Vec<_>, CliError>>()?;

    // rows per replica, in replica order
    let per_path = paths
        .par_iter()
        .map(|path| {
            let mut rows = Vec::new();
            for &level in &config.levels {
                let sigma =
                    make_partition(&config.partition_kind(level), spec.horizon, Some(path))?;
                for (phi_id, phi) in &phis {
                    for (t_id, kernel) in &kernels {
                        let terms = ito_terms_with_kernel(kernel, path, &spec, phi, &sigma)?;
                        rows.push((level, phi_id.clone(), t_id.clone(), terms.sup_residual()));
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, semimart_core::Error>>()?;

    let mut table = Table::new(&[
        "seed",
        "replica",
        "mesh_level",
        "phi_id",
        "T_id",
        "residual",
    ]);
    for (replica, rows) in per_path.iter().enumerate() {
        for (level, phi_id, t_id, residual) in rows {
            table.push(vec![
                config.seed.into(),
                replica.into(),
                (*level).into(),
                phi_id.as_str().into(),
                t_id.as_str().into(),
                (*residual).into(),
            ]);
        }
    }

    let mut out = Outcome::new();
    let checkpoint = conv_pair(
        &basis,
        &Distribution::basis(n, 0)?,
        1.0,
        &TestFunction::basis(n, 0)?,
    )?;
    out.note(format!(
        "conv_pair(dual e0, 1, e0) = {checkpoint:.12} (e^(-1/4) = {:.12})",
        (-0.25f64).exp()
    ));
    let medians_for = |phi_id: &str, t_id: &str| -> Vec<f64> {
        config
            .levels
            .iter()
            .map(|&level| {
                let mut values: Vec<f64> = per_path
                    .iter()
                    .flat_map(|rows| rows.iter())
                    .filter(|(l, p, t, _)| *l == level && p == phi_id && t == t_id)
                    .map(|r| r.3)
                    .collect();
                median(&mut values)
            })
            .collect()
    };
    for (phi_id, _) in &phis {
        for (t_id, _) in &kernels {
            let medians = medians_for(phi_id, t_id);
            let cells: Vec<String> = config
                .levels
                .iter()
                .zip(&medians)
                .map(|(l, m)| format!("n={l}: {m:.3e}"))
                .collect();
            out.note(format!(
                "median residual phi={phi_id} T={t_id}: {}",
                cells.join(", ")
            ));
        }
    }

    let all_max = per_path.iter().flatten().fold(0.0f64, |m, r| m.max(r.3));
    if config.mu == 0.0 && config.sigma == 0.0 {
        let tol = config.tolerance("exact").unwrap_or(1e-10);
        out.check(
            "pure-jump residual",
            all_max <= tol,
            format!("max {all_max:.3e} vs {tol:.0e}"),
        );
    }
    let e0_medians = medians_for("e0", "e0");
    if let Some(tol) = config.tolerance("ito_median") {
        let last = *e0_medians.last().expect("levels are nonempty");
        out.check(
            "median residual at finest level",
            last < tol,
            format!("{last:.3e} vs {tol:.0e} at n = {}", config.max_level()),
        );
    }
    if let Some(tol) = config.tolerance("ito_slope") {
        let levels: Vec<f64> = config.levels.iter().map(|&l| f64::from(l)).collect();
        let slope = fit_log_slope(&levels, &e0_medians, 2.0);
        out.check(
            "residual log2 slope",
            slope <= tol,
            format!("{slope:.3} vs {tol}"),
        );
    }
    out.tables.push(("residuals.csv".into(), table));
    Ok(out)
}

fn riemann_converge(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = config.truncation;
    let paths = ensemble(config)?;
    let x = DiracSemimartingale::new(n);
    let (_, r) = presets::tensor_integrands(n, config.horizon)?.remove(2);
    let obs = paths[0].grid().to_vec();
    let report = riemann_vector(
        &r,
        &x,
        &paths,
        &config.levels,
        config.dual_r,
        config.eps,
        &obs,
    )?;

    let mut out = Outcome::new();
    let mut conv = Table::new(&[
        "level",
        "next_level",
        "mean_sup_difference",
        "ucp_probability",
    ]);
    for (k, w) in report.levels.windows(2).enumerate() {
        conv.push(vec![
            w[0].into(),
            w[1].into(),
            report.mean_sup_difference[k].into(),
            report.ucp_probability[k].into(),
        ]);
        out.note(format!(
            "n={} -> {}: mean sup p'_{} difference {:.4e}, P(>= {}) = {:.3}",
            w[0],
            w[1],
            config.dual_r,
            report.mean_sup_difference[k],
            config.eps,
            report.ucp_probability[k]
        ));
    }
    let mut reference = Table::new(&["level", "mean_sup_to_reference"]);
    for (level, d) in report.levels.iter().zip(&report.mean_sup_to_reference) {
        reference.push(vec![(*level).into(), (*d).into()]);
    }
    out.note(format!(
        "log2 slope of successive differences: {:.3}",
        report.log2_slope
    ));
    if let Some(tol) = config.tolerance("riemann_slope") {
        out.check(
            "riemann log2 slope",
            report.log2_slope <= tol,
            format!("{:.3} vs {tol}", report.log2_slope),
        );
    }

    let finest = RandomPartition::dyadic(config.max_level(), config.horizon);
    let y = vector_integrate(&r, &x, &paths[0], &finest, &obs)?;
    let mut vector = Table::new(&["t", "j", "f_j"]);
    for (i, &t) in y.times().iter().enumerate() {
        for (j, &f) in y.row(i).iter().enumerate() {
            vector.push(vec![t.into(), j.into(), f.into()]);
        }
    }
    out.tables.push(("convergence.csv".into(), conv));
    out.tables.push(("reference.csv".into(), reference));
    out.tables.push(("vector_path.csv".into(), vector));
    Ok(out)
}

fn metrics(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let paths = ensemble(config)?;
    let obs = paths[0].grid().to_vec();
    let observed = |ps: &[CadlagPath]| -> Result<ProcessEnsemble, CliError> {
        Ok(ProcessEnsemble::new(
            ps.iter()
                .map(|p| p.observe(&obs))
                .collect::<Result<_, _>>()?,
        )?)
    };
    let z = observed(&paths)?;
    let stopped: Vec<CadlagPath> = paths
        .iter()
        .map(|p| stop_path(p, StoppingRule::FirstPassage(1.0).time(p)))
        .collect();
    let z_stopped = observed(&stopped)?;
    let unit = ElementaryScalarIntegrand::constant(1.0, config.horizon)?;
    let unit_integral = ProcessEnsemble::new(
        paths
            .iter()
            .map(|p| h_dot(&unit, p, &obs))
            .collect::<Result<Vec<_>, _>>()?,
    )?;
    let dict = IntegrandDictionary::standard(config.horizon, 8, 16, config.seed)?;

    let r_ucp = r_ucp_estimate(&z, config.n_max)?;
    let r_em = r_em_estimate(&paths, &dict, config.n_max, &obs)?;
    let d_stop = d_ucp_estimate(&z, &z_stopped, config.n_max)?;
    let unit_ucp = r_ucp_estimate(&unit_integral, config.n_max)?;

    let rows: [(&str, MetricEstimate); 4] = [
        ("r_ucp", r_ucp),
        ("r_em_lower_bound", r_em.estimate),
        ("d_ucp_first_passage_1", d_stop),
        ("r_ucp_unit_integral", unit_ucp),
    ];
    let mut table = Table::new(&["metric_name", "value", "tail_bound", "replicas", "seed"]);
    let mut out = Outcome::new();
    for (name, est) in rows {
        table.push(vec![
            name.into(),
            est.value.into(),
            est.tail_bound.into(),
            est.replicas.into(),
            config.seed.into(),
        ]);
        out.note(format!(
            "{name} = {:.6} ± {:.1e} (tail ≤ {:.1e}, {} replicas)",
            est.value, est.std_error, est.tail_bound, est.replicas
        ));
    }
    out.note(format!(
        "r_em_lower_bound is a lower bound over {} dictionary elements (best: #{})",
        dict.len(),
        r_em.best_element
    ));
    out.check(
        "bound chain",
        unit_ucp.value <= r_em.estimate.value,
        format!(
            "r_ucp(1·z) = {:.6} ≤ r_em lower bound = {:.6}",
            unit_ucp.value, r_em.estimate.value
        ),
    );
    out.tables.push(("metrics.csv".into(), table));
    Ok(out)
}

fn probe_rows(table: &mut Table, report: &ProbeReport) {
    for case in &report.cases {
        table.push(vec![
            report.probe.as_str().into(),
            case.name.as_str().into(),
            case.deviation.into(),
            case.tolerance.into(),
            case.passed().into(),
        ]);
    }
}

fn integrator_probe(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = config.truncation;
    let level = config.max_level();
    let horizon = config.horizon;
    let paths = ensemble(config)?;
    let x = DiracSemimartingale::new(n);
    let y = ScaledDistribution(presets::harmonic_distribution(n));
    let integrands = presets::tensor_integrands(n, horizon)?;

    let mut reports = vec![
        stopping_probe(
            &x,
            &integrands,
            &presets::stopping_rules(horizon),
            &paths,
            level,
        )?,
        linearity_probe(
            &x,
            &y,
            &integrands[2].1,
            &integrands[1].1,
            &[0.0, -1.0, 0.37],
            &paths,
            level,
        )?,
    ];
    let (localized, direct) = presets::localized_linear(n, &[1.0, 2.0, 3.0, 1e6])?;
    let (report, used) = localization_probe(
        &x,
        &localized,
        &direct,
        &presets::test_functions(n),
        &paths,
        level,
    )?;
    reports.push(report);
    reports.push(associativity_probe(
        &x,
        &presets::associativity_cases(n, horizon)?,
        &paths,
        level,
    )?);

    let settings = ContinuitySettings {
        dictionary: IntegrandDictionary::standard(horizon, 8, 16, config.seed)?,
        n_max: config.n_max,
        threshold: config.tolerance("continuity").unwrap_or(0.1),
    };
    let obs = paths[0].grid().to_vec();
    let mut continuity = Table::new(&[
        "sequence",
        "k",
        "emery_lower_bound",
        "emery_std_error",
        "ucp_estimate",
        "ucp_std_error",
    ]);
    for (name, kind) in [
        ("scaled", presets::Shrinking::Scaled),
        ("window", presets::Shrinking::Window),
        ("zero", presets::Shrinking::Zero),
    ] {
        let sequence = presets::shrinking_sequence(kind, n, horizon, 16)?;
        let mut report = continuity_probe(&x, &sequence, &paths, &obs, &settings)?;
        report.probe = format!("continuity/{name}");
        for row in &report.table {
            continuity.push(vec![
                name.into(),
                row.index.into(),
                row.emery_lower_bound.into(),
                row.emery_std_error.into(),
                row.ucp_estimate.into(),
                row.ucp_std_error.into(),
            ]);
        }
        reports.push(report);
    }

    let mut out = Outcome::new();
    let mut table = Table::new(&["probe", "case", "deviation", "tolerance", "passed"]);
    for report in &reports {
        probe_rows(&mut table, report);
        out.passed &= report.passed();
        out.lines.extend(report.summary_lines());
    }
    out.note(format!(
        "localization pasting compared on {used} of {} paths",
        paths.len()
    ));
    out.tables.push(("probes.csv".into(), table));
    out.tables.push(("continuity.csv".into(), continuity));
    Ok(out)
}
