//! Dispatch of a validated configuration to the library, and persistence.

use std::path::Path;

use chrono::{SecondsFormat, Utc};

use nsfde::lab::{
    compare_against_value, compare_rate_vs_mc, stroock_bound_check, verify_exponential_closeness,
    verify_tightness, verify_truncation_closeness, CompareReport, DecayCurve, McPlan,
};
use nsfde::model::{check_assumption, Assumption, CoefficientSet, PiecewiseLinearSampler, Segment};
use nsfde::rate::{qp_oracle_linear, rate_for_event, rate_for_event_truncated, EventSpec, RateResult};
use nsfde::sim::{simulate_nsfde, NoiseSeed};
use nsfde::skeleton::{log_log_slope, skeleton_convergence_sweep, solve_skeleton};

use crate::config::{EventConfig, Experiment, ExperimentConfig, Lemma, RateSource};
use crate::error::{CliError, CliResult};
use crate::output::{digest_hex, manifest_path, render_csv, write_atomic, Cell, RunManifest, Table, ARTIFACT_VERSION};

/// Digest of the canonical configuration, excluding where the output goes.
pub fn config_digest(config: &ExperimentConfig) -> String {
    let mut raw = config.to_raw();
    raw.output_path = None;
    digest_hex(serde_json::to_string(&raw).expect("raw config serializes").as_bytes())
}

/// Rendered result of a run, before anything touches the filesystem.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub csv: String,
    pub config_digest: String,
}

/// Runs the experiment on a pool of `threads` workers (`None`: rayon's default).
pub fn execute(config: &ExperimentConfig, threads: Option<usize>) -> CliResult<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads:?} worker threads: {e}")))?;
    let table = pool.install(|| dispatch(config))?;
    let digest = config_digest(config);
    let csv = render_csv(&table, config.experiment.name(), &digest);
    Ok(RunOutput {
        table,
        csv,
        config_digest: digest,
    })
}

/// Executes the run, then writes the CSV and its manifest atomically to `output_path`.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> CliResult<RunManifest> {
    let started = now();
    let out = execute(config, threads)?;
    let finished = now();
    let manifest = RunManifest {
        config_digest: out.config_digest.clone(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        experiment: config.experiment.name().to_string(),
        started,
        finished,
        row_count: out.table.rows.len(),
        output_path: config.output_path.clone(),
    };
    if let Some(path) = &config.output_path {
        let path = Path::new(path);
        write_atomic(path, out.csv.as_bytes())?;
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&manifest_path(path), json.as_bytes())?;
    }
    Ok(manifest)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    coeffs: CoefficientSet,
    xi: Segment,
}

impl Ctx<'_> {
    fn plan(&self) -> McPlan {
        McPlan {
            neutral_tol: self.cfg.neutral_tol(),
            ..McPlan::new(self.cfg.mesh, self.cfg.samples, self.cfg.seed)
        }
    }

    fn event(&self) -> CliResult<EventSpec> {
        let ev = self
            .cfg
            .event
            .as_ref()
            .ok_or_else(|| CliError::Usage("this experiment needs an `event`".into()))?;
        Ok(match ev {
            EventConfig::EndpointBall { center, radius } => EventSpec::EndpointBall {
                center: center.clone(),
                radius: *radius,
            },
            EventConfig::EndpointHalfspace { normal, level } => EventSpec::EndpointHalfspace {
                normal: normal.clone(),
                level: *level,
            },
            EventConfig::SupTube { around, radius } => {
                let h = around.build(&self.cfg.mesh, self.cfg.dim, self.cfg.seed)?;
                EventSpec::SupTube {
                    center: solve_skeleton(&self.coeffs, &self.xi, &h, self.cfg.neutral_tol())?,
                    radius: *radius,
                }
            }
        })
    }

    fn m_r(&self, i: usize, r: f64) -> CliResult<f64> {
        match &self.cfg.m_r {
            Some(list) => Ok(list[i]),
            None => Ok(self
                .cfg
                .coefficients
                .as_ref()
                .expect("validated")
                .sup_on_ball(self.cfg.dim, r)?),
        }
    }

    /// Exact linear-quadratic value for endpoint events on affine coefficients.
    ///
    /// A ball is represented by its center; a one-dimensional half-space by its
    /// boundary point, or zero when the free skeleton already lies inside.
    fn oracle(&self, event: &EventSpec) -> CliResult<Option<RateResult>> {
        let Some(spec) = self.cfg.coefficients.as_ref().and_then(|c| c.affine(self.cfg.dim)) else {
            return Ok(None);
        };
        let target = match event {
            EventSpec::EndpointBall { center, .. } => center.clone(),
            EventSpec::EndpointHalfspace { normal, level } if normal.len() == 1 => vec![level / normal[0]],
            _ => return Ok(None),
        };
        if let EventSpec::EndpointHalfspace { .. } = event {
            let zero = nsfde::skeleton::ControlPath::zeros(&self.cfg.mesh, self.cfg.dim);
            let free = solve_skeleton(&self.coeffs, &self.xi, &zero, self.cfg.neutral_tol())?;
            if event.contains(&free) {
                return Ok(Some(RateResult {
                    value: 0.0,
                    minimizer: zero,
                    constraint_residual: 0.0,
                    iterations: 0,
                    converged: true,
                }));
            }
        }
        Ok(Some(qp_oracle_linear(&spec, &self.xi, &target, &self.cfg.mesh)?))
    }
}

fn dispatch(cfg: &ExperimentConfig) -> CliResult<Table> {
    if cfg.experiment == Experiment::Stroock {
        return stroock(cfg);
    }
    let coeffs = cfg.coefficients.as_ref().expect("validated").build(cfg.dim)?;
    let ctx = Ctx {
        cfg,
        coeffs,
        xi: cfg.initial_segment(),
    };
    match cfg.experiment {
        Experiment::Simulate => simulate(&ctx),
        Experiment::Skeleton => skeleton(&ctx),
        Experiment::Rate => rate(&ctx),
        Experiment::CheckAssumptions => check_assumptions(&ctx),
        Experiment::LdpVerify => ldp_verify(&ctx),
        Experiment::Compare => compare(&ctx),
        Experiment::Stroock => unreachable!(),
    }
}

fn path_columns(lead: &[&str], dim: usize) -> Vec<String> {
    lead.iter()
        .map(|s| s.to_string())
        .chain((0..dim).map(|i| format!("x_{i}")))
        .collect()
}

fn simulate(ctx: &Ctx) -> CliResult<Table> {
    let cfg = ctx.cfg;
    let mut table = Table::new(path_columns(&["eps", "path", "t"], cfg.dim));
    for &eps in &cfg.eps_list {
        // Replicate p uses stream p for every eps, so the driving noise is shared.
        let paths: Vec<_> = {
            use rayon::prelude::*;
            (0..cfg.paths)
                .into_par_iter()
                .map(|p| simulate_nsfde(&ctx.coeffs, &ctx.xi, eps, &cfg.mesh, NoiseSeed::new(cfg.seed, p), cfg.neutral_tol()))
                .collect::<Result<_, _>>()?
        };
        for (p, path) in paths.iter().enumerate() {
            for j in 0..cfg.mesh.len() {
                let mut row = vec![Cell::Float(eps), Cell::from(p), Cell::Float(cfg.mesh.time(j))];
                row.extend(path.value(j).iter().map(|&x| Cell::Float(x)));
                table.push(row);
            }
        }
    }
    Ok(table)
}

fn skeleton(ctx: &Ctx) -> CliResult<Table> {
    let cfg = ctx.cfg;
    let h = cfg.control.build(&cfg.mesh, cfg.dim, cfg.seed)?;
    if cfg.n_list.is_empty() {
        let path = solve_skeleton(&ctx.coeffs, &ctx.xi, &h, cfg.neutral_tol())?;
        let mut table = Table::new(path_columns(&["t"], cfg.dim));
        for j in 0..cfg.mesh.len() {
            let mut row = vec![Cell::Float(cfg.mesh.time(j))];
            row.extend(path.value(j).iter().map(|&x| Cell::Float(x)));
            table.push(row);
        }
        return Ok(table);
    }
    let rows = skeleton_convergence_sweep(&ctx.coeffs, &ctx.xi, &h, &cfg.n_list, cfg.neutral_tol())?;
    let mut table = Table::new(["n", "sup_distance"]);
    for r in &rows {
        table.push(vec![r.n.into(), r.sup_distance.into()]);
    }
    match log_log_slope(&rows) {
        Some(s) => table.note("log_log_slope", crate::output::fmt_float(s)),
        None => table.note("log_log_slope", "undefined"),
    }
    Ok(table)
}

fn rate_row(r: Option<f64>, res: &RateResult, oracle: Option<f64>) -> Vec<Cell> {
    vec![
        r.into(),
        res.value.into(),
        res.constraint_residual.into(),
        res.iterations.into(),
        res.converged.into(),
        oracle.into(),
    ]
}

fn rate(ctx: &Ctx) -> CliResult<Table> {
    let cfg = ctx.cfg;
    let event = ctx.event()?;
    let mut table = Table::new(["r", "value", "constraint_residual", "iterations", "converged", "oracle_value"]);
    let oracle = ctx.oracle(&event)?;
    let oracle_value = oracle.as_ref().map(|o| o.value);
    let solve = |r: Option<(f64, f64)>| -> CliResult<RateResult> {
        Ok(match (cfg.rate_source, r) {
            (RateSource::Oracle, None) => oracle.clone().expect("validated"),
            (_, None) => rate_for_event(&ctx.coeffs, &ctx.xi, &event, &cfg.mesh, &cfg.rate)?,
            (_, Some((r, m_r))) => {
                rate_for_event_truncated(&ctx.coeffs, r, m_r, &ctx.xi, &event, &cfg.mesh, &cfg.rate)?
            }
        })
    };
    if cfg.r_list.is_empty() {
        table.push(rate_row(None, &solve(None)?, oracle_value));
    } else {
        for (i, &r) in cfg.r_list.iter().enumerate() {
            let m_r = ctx.m_r(i, r)?;
            table.push(rate_row(Some(r), &solve(Some((r, m_r)))?, oracle_value));
        }
    }
    table.note("rate_source", cfg.rate_source.name());
    Ok(table)
}

fn check_assumptions(ctx: &Ctx) -> CliResult<Table> {
    let cfg = ctx.cfg;
    let sampler = PiecewiseLinearSampler::new(cfg.dim, cfg.mesh.window_len());
    let mut table = Table::new(["assumption", "declared", "worst_ratio", "passed", "trials"]);
    for which in [Assumption::H1, Assumption::H2, Assumption::H3] {
        match check_assumption(&ctx.coeffs, which, &sampler, cfg.trials, cfg.seed) {
            Ok(rep) => table.push(vec![
                Cell::Text(which.to_string()),
                rep.declared.into(),
                rep.worst_ratio.into(),
                rep.passed.into(),
                rep.trials.into(),
            ]),
            Err(nsfde::Error::MissingConstant(_)) => table.push(vec![
                Cell::Text(which.to_string()),
                Cell::Empty,
                Cell::Empty,
                Cell::Text("undeclared".into()),
                Cell::from(0u64),
            ]),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(table)
}

const CURVE_COLUMNS: [&str; 8] = [
    "control_parameter",
    "eps",
    "probability",
    "ci_halfwidth_95",
    "eps_log_p",
    "censored",
    "successes",
    "samples",
];

fn ldp_verify(ctx: &Ctx) -> CliResult<Table> {
    let cfg = ctx.cfg;
    let plan = ctx.plan();
    let curve: DecayCurve = match cfg.lemma.expect("validated") {
        Lemma::ExponentialCloseness => verify_exponential_closeness(
            &ctx.coeffs,
            &ctx.xi,
            cfg.delta.expect("validated"),
            &cfg.n_list,
            &cfg.eps_list,
            &plan,
        )?,
        Lemma::Tightness => verify_tightness(&ctx.coeffs, &ctx.xi, &cfg.r_list, &cfg.eps_list, &plan)?,
        Lemma::TruncationCloseness => {
            let m_r = cfg
                .r_list
                .iter()
                .enumerate()
                .map(|(i, &r)| ctx.m_r(i, r))
                .collect::<CliResult<Vec<_>>>()?;
            verify_truncation_closeness(
                &ctx.coeffs,
                &ctx.xi,
                cfg.delta.expect("validated"),
                &cfg.r_list,
                &m_r,
                &cfg.eps_list,
                &plan,
            )?
        }
    };
    let mut table = Table::new(CURVE_COLUMNS);
    for r in &curve.rows {
        table.push(vec![
            r.control_parameter.into(),
            r.eps.into(),
            r.probability.into(),
            r.ci_halfwidth_95.into(),
            r.eps_log_p.into(),
            r.censored.into(),
            r.successes.into(),
            r.samples.into(),
        ]);
    }
    table.note("lemma", &curve.label);
    if let Some(eps) = curve.smallest_eps() {
        table.note("smallest_eps", crate::output::fmt_float(eps));
        table.note("monotone_at_smallest_eps", curve.is_non_increasing(eps));
    }
    table.note("censoring_consistent", curve.censoring_consistent());
    Ok(table)
}

fn stroock(cfg: &ExperimentConfig) -> CliResult<Table> {
    let setup = cfg.stroock.expect("validated");
    let check = stroock_bound_check(&setup, cfg.samples, cfg.seed, cfg.steps)?;
    let mut table = Table::new([
        "probability",
        "ci_halfwidth_95",
        "successes",
        "samples",
        "bound",
        "oracle",
        "within_bound",
    ]);
    table.push(vec![
        check.empirical.probability.into(),
        check.empirical.ci_halfwidth_95.into(),
        check.empirical.successes.into(),
        check.empirical.samples.into(),
        check.bound.into(),
        check.oracle.into(),
        check.within_bound.into(),
    ]);
    Ok(table)
}

fn compare(ctx: &Ctx) -> CliResult<Table> {
    let cfg = ctx.cfg;
    let event = ctx.event()?;
    let plan = ctx.plan();
    let report: CompareReport = match cfg.rate_source {
        RateSource::Optimizer => compare_rate_vs_mc(&ctx.coeffs, &ctx.xi, &event, &cfg.eps_list, &plan, &cfg.rate)?,
        RateSource::Oracle => {
            let value = ctx.oracle(&event)?.expect("validated").value;
            compare_against_value(&ctx.coeffs, &ctx.xi, &event, &cfg.eps_list, &plan, value)?
        }
    };
    let mut table = Table::new(["eps", "probability", "ci_halfwidth_95", "eps_log_p", "censored", "neg_rate"]);
    for r in &report.rows {
        table.push(vec![
            r.eps.into(),
            r.probability.into(),
            r.ci_halfwidth_95.into(),
            r.eps_log_p.into(),
            r.censored.into(),
            report.neg_rate.into(),
        ]);
    }
    table.note("rate_source", cfg.rate_source.name());
    table.note("terminal_gap", crate::output::fmt_float(report.terminal_gap));
    if let Some(r) = &report.rate {
        table.note("rate_converged", r.converged);
    }
    Ok(table)
}
