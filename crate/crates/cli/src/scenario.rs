//! Turns a configuration into a solvable problem.

use std::sync::Arc;

use nalgebra::DVector;
use sdmi::linalg::{spectral_norm, Matrix, Vector};
use sdmi::lure::{check_assumptions, fit_beta1, lure_problem, AssumptionOptions, AssumptionReport, LureSystem};
use sdmi::lyapunov::LyapunovPair;
use sdmi::operator::MonotoneOperator;
use sdmi::scenarios::{self, Example1Params, Example2Params, Scenario};
use sdmi::sets::ConvexSet;
use sdmi::solver::InclusionProblem;
use sdmi::sweeping::{sweeping_problem, SweepingScenario};

use crate::config::{
    FeedbackKind, GenericSection, LureSection, OperatorChoice, ProblemKind, ScenarioConfig, SetShape, SweepingSection,
};
use crate::CliError;

pub struct Built {
    pub problem: InclusionProblem,
    pub t0: f64,
    pub x0: Vector,
    pub h: f64,
    pub pair: Option<LyapunovPair>,
    pub assumptions: Option<AssumptionReport>,
}

fn input(key: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{key}: {e}"))
}

fn matrix(key: &str, rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(input(key, "must be a nonempty rectangular list of rows"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(input(key, "entries must be finite"));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn vector(key: &str, v: &[f64], n: usize) -> Result<Vector, CliError> {
    if v.len() != n {
        return Err(input(key, format!("expected {n} entries, got {}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

fn required<'a, T>(key: &str, v: &'a Option<T>) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| input(key, "is required"))
}

/// Growth constant of `x ↦ F x + b`.
fn affine_growth(f: &Matrix, b: &Vector) -> f64 {
    let c = spectral_norm(f).max(b.norm());
    if c > 0.0 {
        c
    } else {
        1.0
    }
}

fn affine_field(f: Matrix, b: Vector) -> sdmi::solver::VectorField {
    Arc::new(move |_, x: &Vector| &f * x + &b)
}

fn from_builtin(s: Scenario, cfg: &ScenarioConfig) -> Result<Built, CliError> {
    let mut s = s;
    if let Some(x0) = &cfg.scenario.x0 {
        s.x0 = vector("scenario.x0", x0, s.problem.dim())?;
    }
    if let Some(t0) = cfg.scenario.t0 {
        s.t0 = t0;
    }
    if let Some(h) = cfg.scenario.horizon {
        s.problem.horizon = h;
    }
    Ok(Built {
        problem: s.problem,
        t0: s.t0,
        x0: s.x0,
        h: s.h,
        pair: s.pair,
        assumptions: None,
    })
}

fn sweeping(sec: &SweepingSection, cfg: &ScenarioConfig) -> Result<Built, CliError> {
    let base = match sec.set {
        SetShape::Box => {
            let lo = required("sweeping.lo", &sec.lo)?;
            let hi = required("sweeping.hi", &sec.hi)?;
            let lo = DVector::from_column_slice(lo);
            let hi = vector("sweeping.hi", hi, lo.len())?;
            ConvexSet::interval_product(lo, hi).map_err(|e| input("sweeping.lo/hi", e))?
        }
        SetShape::Ball => {
            let c = DVector::from_column_slice(required("sweeping.center", &sec.center)?);
            let r = *required("sweeping.radius", &sec.radius)?;
            ConvexSet::ball(c, r).map_err(|e| input("sweeping.radius", e))?
        }
    };
    let n = base.dim();
    let vel = match &sec.velocity {
        Some(v) => vector("sweeping.velocity", v, n)?,
        None => Vector::zeros(n),
    };
    let f = match &sec.f_matrix {
        Some(m) => matrix("sweeping.f_matrix", m)?,
        None => Matrix::zeros(n, n),
    };
    if f.nrows() != n || f.ncols() != n {
        return Err(input("sweeping.f_matrix", format!("must be {n}×{n}")));
    }
    let b = match &sec.f_offset {
        Some(v) => vector("sweeping.f_offset", v, n)?,
        None => Vector::zeros(n),
    };
    let coupling = sec.coupling;
    let (l1, l2) = (vel.norm(), coupling.abs());
    let set_map: sdmi::operator::SetMap = Arc::new(move |t, s: &Vector| {
        let shift = &vel * t + s * coupling;
        Ok(match &base {
            ConvexSet::IntervalProduct { lo, hi } => ConvexSet::IntervalProduct { lo: lo + &shift, hi: hi + &shift },
            ConvexSet::Ball { center, radius } => ConvexSet::Ball { center: center + &shift, radius: *radius },
            ConvexSet::Polytope(_) => unreachable!("configured sets are boxes or balls"),
        })
    });
    let horizon = cfg.scenario.horizon.unwrap_or(1.0);
    let sc = SweepingScenario {
        dim: n,
        set_map,
        c_f: affine_growth(&f, &b),
        f: affine_field(f, b),
        l1,
        l2,
        horizon,
    };
    let problem = sweeping_problem(&sc).map_err(|e| input("sweeping.coupling", e))?;
    let x0 = vector("scenario.x0", required("scenario.x0", &cfg.scenario.x0)?, n)?;
    Ok(Built {
        problem,
        t0: cfg.scenario.t0.unwrap_or(0.0),
        x0,
        h: 1e-2,
        pair: None,
        assumptions: None,
    })
}

fn lure(sec: &LureSection, cfg: &ScenarioConfig) -> Result<Built, CliError> {
    let g = matrix("lure.g_matrix", &sec.g_matrix)?;
    let b = matrix("lure.b", &sec.b)?;
    let c = matrix("lure.c", &sec.c)?;
    let d = matrix("lure.d", &sec.d)?;
    let m = c.nrows();
    let n = c.ncols();
    if g.nrows() != n || g.ncols() != n {
        return Err(input("lure.g_matrix", format!("must be {n}×{n}")));
    }
    let feedback = match sec.feedback {
        FeedbackKind::Sign => MonotoneOperator::sign(sec.gain, m).map_err(|e| input("lure.gain", e))?,
        FeedbackKind::Interval => {
            let lo = vector("lure.lo", required("lure.lo", &sec.lo)?, m)?;
            let hi = vector("lure.hi", required("lure.hi", &sec.hi)?, m)?;
            MonotoneOperator::normal_cone_fixed(ConvexSet::interval_product(lo, hi).map_err(|e| input("lure.lo/hi", e))?)
        }
    };
    let c_g = spectral_norm(&g).max(1e-12);
    let horizon = cfg.scenario.horizon.unwrap_or(1.0);
    let mut sys = LureSystem::new(affine_field(g, Vector::zeros(n)), b, c, d, feedback, c_g, 0.0, horizon)
        .map_err(|e| input("lure", e))?;
    if let Some(p) = &sec.p {
        sys = sys.with_p(matrix("lure.p", p)?);
    }
    let t0 = cfg.scenario.t0.unwrap_or(0.0);
    let seed = cfg.scenario.seed;
    sys.beta1 = match sec.beta1 {
        Some(b) if b >= 0.0 => b,
        Some(_) => return Err(input("lure.beta1", "must be nonnegative")),
        None => fit_beta1(&sys, t0, 3.0, 200, seed).map_err(|e| input("lure", e))?,
    };
    let report = check_assumptions(&sys, &AssumptionOptions { t0, seed, ..AssumptionOptions::default() });
    let problem = lure_problem(&sys).map_err(|e| input("lure", e))?;
    let x0 = vector("scenario.x0", required("scenario.x0", &cfg.scenario.x0)?, n)?;
    Ok(Built {
        problem,
        t0,
        x0,
        h: 1e-2,
        pair: None,
        assumptions: Some(report),
    })
}

fn generic(sec: &GenericSection, cfg: &ScenarioConfig) -> Result<Built, CliError> {
    let f = matrix("generic.f_matrix", &sec.f_matrix)?;
    let n = f.nrows();
    if f.ncols() != n {
        return Err(input("generic.f_matrix", "must be square"));
    }
    let b = match &sec.f_offset {
        Some(v) => vector("generic.f_offset", v, n)?,
        None => Vector::zeros(n),
    };
    let op = match sec.operator {
        OperatorChoice::Sign => {
            let mask = sec.mask.clone().unwrap_or_else(|| vec![true; n]);
            if mask.len() != n {
                return Err(input("generic.mask", format!("expected {n} entries")));
            }
            MonotoneOperator::sign_relay(sec.gain, mask).map_err(|e| input("generic.gain", e))?
        }
        OperatorChoice::Linear => {
            let m = matrix("generic.m", required("generic.m", &sec.m)?)?;
            if m.nrows() != n || m.ncols() != n {
                return Err(input("generic.m", format!("must be {n}×{n}")));
            }
            MonotoneOperator::linear(m).map_err(|e| input("generic.m", e))?
        }
        OperatorChoice::Box => {
            let lo = vector("generic.lo", required("generic.lo", &sec.lo)?, n)?;
            let hi = vector("generic.hi", required("generic.hi", &sec.hi)?, n)?;
            MonotoneOperator::normal_cone_fixed(ConvexSet::interval_product(lo, hi).map_err(|e| input("generic.lo/hi", e))?)
        }
    };
    let horizon = cfg.scenario.horizon.unwrap_or(1.0);
    let problem = InclusionProblem::new(Arc::new({
        let (f, b) = (f.clone(), b.clone());
        move |_, x: &Vector| &f * x + &b
    }), op, affine_growth(&f, &b), horizon)
    .map_err(|e| input("generic", e))?;
    let x0 = vector("scenario.x0", required("scenario.x0", &cfg.scenario.x0)?, n)?;
    Ok(Built {
        problem,
        t0: cfg.scenario.t0.unwrap_or(0.0),
        x0,
        h: 1e-2,
        pair: None,
        assumptions: None,
    })
}

pub fn build(cfg: &ScenarioConfig) -> Result<Built, CliError> {
    match cfg.scenario.kind {
        ProblemKind::BuiltinExample1 => {
            let mut p = Example1Params::default();
            if let Some(sec) = &cfg.example1 {
                p.p = sec.p;
                let g = sec.g;
                p.g = Arc::new(move |_| g);
            }
            if let Some(x0) = &cfg.scenario.x0 {
                p.x0 = vector("scenario.x0", x0, 3)?;
            }
            p.t0 = cfg.scenario.t0.unwrap_or(p.t0);
            p.horizon = cfg.scenario.horizon.unwrap_or(p.horizon);
            from_builtin(scenarios::example_1(&p).map_err(|e| input("example1", e))?, cfg)
        }
        ProblemKind::BuiltinExample2 => {
            let mut p = Example2Params::default();
            if let Some(sec) = &cfg.example2 {
                p.alpha = sec.alpha;
                p.beta = sec.beta;
                p.gamma = sec.gamma;
            }
            if let Some(x0) = &cfg.scenario.x0 {
                p.x0 = vector("scenario.x0", x0, 2)?;
            }
            p.t0 = cfg.scenario.t0.unwrap_or(p.t0);
            p.horizon = cfg.scenario.horizon.unwrap_or(p.horizon);
            from_builtin(scenarios::example_2(&p).map_err(|e| input("example2", e))?, cfg)
        }
        ProblemKind::BuiltinSweepingStatic => {
            from_builtin(scenarios::sweeping_static().map_err(|e| input("scenario", e))?, cfg)
        }
        ProblemKind::BuiltinLureRelay => {
            let mut b = from_builtin(scenarios::lure_relay().map_err(|e| input("scenario", e))?, cfg)?;
            let sys = scenarios::lure_relay_system().map_err(|e| input("scenario", e))?;
            b.assumptions = Some(check_assumptions(
                &sys,
                &AssumptionOptions { t0: b.t0, seed: cfg.scenario.seed, ..AssumptionOptions::default() },
            ));
            Ok(b)
        }
        ProblemKind::Sweeping => sweeping(required("[sweeping]", &cfg.sweeping)?, cfg),
        ProblemKind::Lure => lure(required("[lure]", &cfg.lure)?, cfg),
        ProblemKind::Generic => generic(required("[generic]", &cfg.generic)?, cfg),
    }
}
