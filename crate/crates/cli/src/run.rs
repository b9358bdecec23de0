//! Run orchestration: admissibility, solve or convergence study, Lyapunov evaluation, output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use sdmi::lyapunov::evaluate_pair_decay;
use sdmi::solver::{
    apriori_bounds_for, best_step_constant, convergence_study, solve, DeltaChoice, SolveOptions, Trajectory,
};

use crate::config::ScenarioConfig;
use crate::output::{convergence_csv, trajectory_csv, write_atomic};
use crate::scenario::{build, Built};
use crate::CliError;

/// Command-line overrides of configuration values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub h: Option<f64>,
    pub refine: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecaySummary {
    pub pass: bool,
    pub v0: f64,
    pub max_excess: f64,
    pub max_increment: f64,
    pub slack: f64,
    pub first_exit: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub gap: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionRow {
    pub name: String,
    pub verdict: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriSummary {
    pub delta: f64,
    pub c1: f64,
    pub m: f64,
    pub big_m: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub build_ms: f64,
    pub solve_ms: f64,
    pub evaluate_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: ScenarioConfig,
    pub h_list: Vec<f64>,
    pub trajectory_files: Vec<String>,
    pub convergence_file: Option<String>,
    pub steps: usize,
    pub max_step_residual: f64,
    pub apriori: Option<AprioriSummary>,
    pub decay: Option<DecaySummary>,
    pub convergence: Option<Vec<ConvergenceRow>>,
    pub assumptions: Option<Vec<AssumptionRow>>,
    pub warnings: Vec<String>,
    pub timings: Timings,
    pub pass: bool,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn step_list(cfg: &ScenarioConfig, ov: &Overrides, default_h: f64) -> Vec<f64> {
    let h = ov.h.or(cfg.solver.h).unwrap_or(default_h);
    if let Some(k) = ov.refine.or(cfg.solver.refine) {
        return (0..k).map(|j| h * 0.5_f64.powi(j as i32)).collect();
    }
    if ov.h.is_none() {
        if let Some(list) = &cfg.solver.h_list {
            return list.clone();
        }
    }
    vec![h]
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents.as_bytes()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Executes a configured run and writes its outputs. `Ok` reports may still fail a criterion.
pub fn run(cfg: &ScenarioConfig, ov: &Overrides) -> Result<RunReport, CliError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = ov.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(k) = ov.refine {
        if k < 2 {
            return Err(CliError::Input("--refine: needs at least 2 runs".into()));
        }
    }
    if let Some(h) = ov.h {
        if !(h > 0.0) || !h.is_finite() {
            return Err(CliError::Input("--h: must be positive and finite".into()));
        }
    }
    if let Some(s) = ov.slack {
        if !(s >= 0.0) {
            return Err(CliError::Input("--slack: must be nonnegative".into()));
        }
    }
    cfg.validate()?;

    let start = Instant::now();
    let Built { problem, t0, x0, h: default_h, pair, assumptions } = build(&cfg)?;
    let mut timings = Timings { build_ms: ms(start), ..Timings::default() };

    if !sdmi::solver::admissible(&problem, t0, &x0) {
        return Err(CliError::Input(format!(
            "scenario.x0: initial state {:?} is inadmissible (not in the operator domain at t0 = {t0})",
            x0.as_slice()
        )));
    }
    let h_list = step_list(&cfg, ov, default_h);
    let opts = SolveOptions { allow_large_step: cfg.solver.allow_large_step };
    let (_, c1) = best_step_constant(problem.c_f, problem.c_a, problem.l1, problem.l2);
    if !opts.allow_large_step {
        if let Some(h) = h_list.iter().find(|h| !(**h * c1 < 0.5)) {
            return Err(CliError::Input(format!(
                "solver.h: step {h} violates h·c1 < 1/2 with c1 = {c1:.6}; use a step below {:.6e}",
                0.5 / c1
            )));
        }
    }

    let start = Instant::now();
    let (trajectories, gaps): (Vec<Trajectory>, Option<Vec<f64>>) = if h_list.len() > 1 {
        let rep = convergence_study(&problem, t0, &x0, &h_list, opts).map_err(|e| CliError::Solver(e.to_string()))?;
        (rep.trajectories, Some(rep.gaps))
    } else {
        let tr = solve(&problem, t0, &x0, h_list[0], opts).map_err(|e| CliError::Solver(e.to_string()))?;
        (vec![tr], None)
    };
    timings.solve_ms = ms(start);

    let start = Instant::now();
    let finest = trajectories.last().expect("at least one run");
    let pair = pair.filter(|_| cfg.lyapunov.enabled);
    let slack = ov.slack.or(cfg.lyapunov.slack);
    let decay = match &pair {
        Some(p) => {
            let r = evaluate_pair_decay(finest, p, slack).map_err(|e| CliError::Solver(e.to_string()))?;
            Some(DecaySummary {
                pass: r.pass,
                v0: r.v0,
                max_excess: r.max_excess,
                max_increment: r.max_increment,
                slack: r.slack,
                first_exit: r.first_exit,
            })
        }
        None => None,
    };
    let apriori = apriori_bounds_for(&problem, &x0, DeltaChoice::Default).ok().map(|c| AprioriSummary {
        delta: c.delta,
        c1: c.c1,
        m: c.m,
        big_m: c.big_m,
    });
    timings.evaluate_ms = ms(start);

    let out_dir = ov
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("sdmi-out"));
    let mut files = Vec::new();
    for (k, tr) in trajectories.iter().enumerate() {
        let name = if trajectories.len() == 1 {
            "trajectory.csv".to_string()
        } else {
            format!("trajectory_{k}.csv")
        };
        let path = out_dir.join(&name);
        write(&path, &trajectory_csv(tr, pair.as_ref()))?;
        files.push(path.display().to_string());
    }
    let mut convergence_file = None;
    let convergence = gaps.as_ref().map(|g| {
        g.iter()
            .enumerate()
            .map(|(k, &gap)| ConvergenceRow {
                h: h_list[k],
                gap,
                ratio: (k > 0).then(|| gap / g[k - 1]),
            })
            .collect::<Vec<_>>()
    });
    if let Some(g) = &gaps {
        let path = out_dir.join("convergence.csv");
        write(&path, &convergence_csv(&h_list, g))?;
        convergence_file = Some(path.display().to_string());
    }

    let assumptions = assumptions.map(|r| {
        r.checks
            .iter()
            .map(|c| AssumptionRow {
                name: c.name.to_string(),
                verdict: c.verdict.to_string(),
                ok: c.verdict.ok(),
                detail: c.detail.clone(),
            })
            .collect::<Vec<_>>()
    });
    let gaps_ok = gaps.as_ref().is_none_or(|g| g.windows(2).all(|w| w[1] <= w[0]));
    let pass = decay.as_ref().is_none_or(|d| d.pass) && gaps_ok;
    let mut warnings: Vec<String> = trajectories.iter().flat_map(|t| t.warnings.clone()).collect();
    if !gaps_ok {
        warnings.push("refinement gaps are not monotonically decreasing".into());
    }
    let report = RunReport {
        scenario: cfg,
        h_list: h_list.clone(),
        trajectory_files: files,
        convergence_file,
        steps: finest.diagnostics.len(),
        max_step_residual: trajectories.iter().map(|t| t.max_residual()).fold(0.0, f64::max),
        apriori,
        decay,
        convergence,
        assumptions,
        warnings,
        timings,
        pass,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    write(&out_dir.join("report.json"), &json)?;
    Ok(report)
}
