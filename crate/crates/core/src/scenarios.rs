//! Built-in scenarios, addressable by name.

use std::fmt;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{spectral_norm, Vector};
use crate::lure::{lure_problem, LureSystem};
use crate::lyapunov::LyapunovPair;
use crate::operator::MonotoneOperator;
use crate::sets::ConvexSet;
use crate::solver::InclusionProblem;
use crate::sweeping::{sweeping_problem, SweepingScenario};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const BUILTIN_NAMES: [&str; 4] = ["example-1", "example-2", "sweeping-static", "lure-relay"];

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub problem: InclusionProblem,
    pub t0: f64,
    pub x0: Vector,
    /// Default step.
    pub h: f64,
    pub pair: Option<LyapunovPair>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("problem", &self.problem)
            .field("t0", &self.t0)
            .field("x0", &self.x0)
            .field("h", &self.h)
            .finish()
    }
}

/// Three-dimensional system with a sign relay on the last coordinate:
///
/// ```text
/// ẋ₁ = −x₁ − g(t)x₂,  ẋ₂ = x₁ − x₂,  ẋ₃ ∈ p|x₃| − Sign(x₃)
/// ```
#[derive(Clone)]
pub struct Example1Params {
    pub p: f64,
    pub g: ScalarFn,
    pub g_dot: ScalarFn,
    pub t0: f64,
    pub x0: Vector,
    pub horizon: f64,
}

impl Default for Example1Params {
    fn default() -> Self {
        Example1Params {
            p: 1.0,
            g: Arc::new(|_| 1.0),
            g_dot: Arc::new(|_| 0.0),
            t0: 0.0,
            x0: dvector![1.0, 1.0, 0.5],
            horizon: 3.0,
        }
    }
}

pub fn example_1(params: &Example1Params) -> Result<Scenario> {
    let Example1Params { p, g, g_dot, t0, x0, horizon } = params.clone();
    check_dim(3, x0.len())?;
    if !(p > 0.0) {
        return Err(invalid("p", "must be positive"));
    }
    let mut g_max: f64 = 0.0;
    for k in 0..=1000 {
        let t = t0 + horizon * k as f64 / 1000.0;
        let (gv, gd) = (g(t), g_dot(t));
        if !(gv >= 0.0) || !(gd <= 2.0 * gv) {
            return Err(invalid("g", format!("need g ≥ 0 and ġ ≤ 2g, violated at t = {t}")));
        }
        g_max = g_max.max(gv);
    }
    if x0[2] > 1.0 / p {
        return Err(invalid("x0", "third coordinate must not exceed 1/p"));
    }
    let gf = g.clone();
    let f = Arc::new(move |t: f64, x: &Vector| dvector![-x[0] - gf(t) * x[1], x[0] - x[1], p * x[2].abs()]);
    let op = MonotoneOperator::sign_relay(1.0, vec![false, false, true])?;
    let c_f = (3.0 + g_max * g_max).sqrt().max(p);
    let problem = InclusionProblem::new(f, op, c_f, horizon)?;

    let cap = 1.0 / p;
    let gv = g.clone();
    let v = Arc::new(move |t: f64, x: &Vector| {
        if x[2] > cap {
            f64::INFINITY
        } else {
            x[0] * x[0] + (1.0 + gv(t)) * x[1] * x[1] + x[2].abs()
        }
    });
    let gs = g.clone();
    let prox = Arc::new(move |t: f64, x: &Vector| {
        if x[2] > cap {
            return Vec::new();
        }
        let theta = g_dot(t) * x[1] * x[1];
        let head = [2.0 * x[0], 2.0 * x[1] * (1.0 + gs(t))];
        let third: Vec<f64> = if x[2] == cap {
            vec![1.0, 2.0]
        } else if x[2] == 0.0 {
            vec![-1.0, 0.0, 1.0]
        } else {
            vec![x[2].signum()]
        };
        third.into_iter().map(|s| (theta, dvector![head[0], head[1], s])).collect()
    });
    let pair = LyapunovPair::new(v, Arc::new(|_, _| 0.0), 0.0)?.with_prox_subdiff(prox);
    Ok(Scenario {
        name: "example-1".into(),
        problem,
        t0,
        x0,
        h: 1e-3,
        pair: Some(pair),
    })
}

/// Planar system with a moving interval constraint on `x₁` and a relay on `x₂`:
///
/// ```text
/// ẋ₁ ∈ −αx₁ + βx₂ − N_{C(t,x₁)}(x₁),  ẋ₂ ∈ −βx₁ + x₂ − γ Sign(x₂)
/// C(t,x₁) = [−(t + 2|x₀₁|), t + 2|x₀₁|] + x₁/2
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Example2Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub t0: f64,
    pub x0: Vector,
    pub horizon: f64,
}

impl Default for Example2Params {
    fn default() -> Self {
        Example2Params {
            alpha: 1.0,
            beta: 0.5,
            gamma: 1.0,
            t0: 0.0,
            x0: dvector![0.5, 0.5],
            horizon: 2.0,
        }
    }
}

/// Moving set of the second example, as a function of the full state.
pub fn example_2_set(x01: f64) -> crate::operator::SetMap {
    let r0 = 2.0 * x01.abs();
    Arc::new(move |t: f64, s: &Vector| {
        let r = t + r0;
        ConvexSet::interval(-r + 0.5 * s[0], r + 0.5 * s[0])
    })
}

pub fn example_2(params: &Example2Params) -> Result<Scenario> {
    let Example2Params { alpha, beta, gamma, t0, x0, horizon } = params.clone();
    check_dim(2, x0.len())?;
    if !(alpha > 0.0) || !(gamma > 0.0) {
        return Err(invalid("alpha/gamma", "must be positive"));
    }
    if !(t0 >= 0.0) {
        return Err(invalid("t0", "must be nonnegative"));
    }
    if x0[1].abs() > gamma {
        return Err(invalid("x0", "|x₀₂| must not exceed γ"));
    }
    let nc = MonotoneOperator::normal_cone(1, example_2_set(x0[0])).with_constants(0.0, 1.0, 0.5)?;
    let relay = MonotoneOperator::sign(gamma, 1)?;
    let op = MonotoneOperator::direct_sum(vec![nc, relay])?;
    let c_f = spectral_norm(&dmatrix![-alpha, beta; -beta, 1.0]);
    let f = Arc::new(move |_: f64, x: &Vector| dvector![-alpha * x[0] + beta * x[1], -beta * x[0] + x[1]]);
    let problem = InclusionProblem::new(f, op, c_f, horizon)?;

    let v = Arc::new(move |_: f64, x: &Vector| {
        if x[1].abs() > gamma {
            f64::INFINITY
        } else {
            0.5 * x.norm_squared()
        }
    });
    let prox = Arc::new(move |_: f64, x: &Vector| {
        if x[1].abs() > gamma {
            Vec::new()
        } else if x[1].abs() == gamma {
            vec![(0.0, dvector![x[0], x[1]]), (0.0, dvector![x[0], 2.0 * x[1]])]
        } else {
            vec![(0.0, x.clone())]
        }
    });
    let pair = LyapunovPair::new(v, Arc::new(|_, _| 0.0), 0.0)?.with_prox_subdiff(prox);
    Ok(Scenario {
        name: "example-2".into(),
        problem,
        t0,
        x0,
        h: 1e-3,
        pair: Some(pair),
    })
}

/// Constant drift against the fixed interval `[−1, 1]`.
pub fn sweeping_static_scenario() -> SweepingScenario {
    SweepingScenario {
        dim: 1,
        set_map: Arc::new(|_, _| ConvexSet::interval(-1.0, 1.0)),
        f: Arc::new(|_, _| dvector![0.5]),
        c_f: 0.5,
        l1: 0.0,
        l2: 0.0,
        horizon: 3.0,
    }
}

pub fn sweeping_static() -> Result<Scenario> {
    let problem = sweeping_problem(&sweeping_static_scenario())?;
    let pair = LyapunovPair::new(
        Arc::new(|_, x: &Vector| 0.5 * (x[0] - 1.0).powi(2)),
        Arc::new(|_, _| 0.0),
        0.0,
    )?
    .with_prox_subdiff(Arc::new(|_, x: &Vector| vec![(0.0, dvector![x[0] - 1.0])]));
    Ok(Scenario {
        name: "sweeping-static".into(),
        problem,
        t0: 0.0,
        x0: dvector![-0.5],
        h: 1e-2,
        pair: Some(pair),
    })
}

/// `ẋ = −x + λ`, `y = x + λ`, `λ ∈ −Sign(y)`, i.e. `ẋ = −x − sat(x)`.
pub fn lure_relay_system() -> Result<LureSystem> {
    LureSystem::new(
        Arc::new(|_, x: &Vector| -x),
        dmatrix![1.0],
        dmatrix![1.0],
        dmatrix![1.0],
        MonotoneOperator::sign(1.0, 1)?,
        1.0,
        1.0,
        3.0,
    )
}

pub fn lure_relay() -> Result<Scenario> {
    let problem = lure_problem(&lure_relay_system()?)?;
    let pair = LyapunovPair::new(Arc::new(|_, x: &Vector| 0.5 * x[0] * x[0]), Arc::new(|_, _| 0.0), 2.0)?
        .with_prox_subdiff(Arc::new(|_, x: &Vector| vec![(0.0, x.clone())]));
    Ok(Scenario {
        name: "lure-relay".into(),
        problem,
        t0: 0.0,
        x0: dvector![2.0],
        h: 1e-2,
        pair: Some(pair),
    })
}

/// Looks up a built-in scenario with default parameters.
pub fn builtin(name: &str) -> Result<Scenario> {
    match name {
        "example-1" => example_1(&Example1Params::default()),
        "example-2" => example_2(&Example2Params::default()),
        "sweeping-static" => sweeping_static(),
        "lure-relay" => lure_relay(),
        other => Err(Error::Unsupported(format!(
            "unknown scenario `{other}`; available: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

pub fn builtin_scenarios() -> Result<Vec<Scenario>> {
    BUILTIN_NAMES.iter().map(|n| builtin(n)).collect()
}
