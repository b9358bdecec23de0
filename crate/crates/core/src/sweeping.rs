//! State-dependent sweeping processes `ẋ ∈ f(t,x) − N_{C(t,x)}(x)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, invalid, Result};
use crate::linalg::Vector;
use crate::metrics::hausdorff;
use crate::operator::{MonotoneOperator, SetMap};
use crate::solver::{uniform_grid, InclusionProblem, VectorField};

/// Moving set with Lipschitz data `d_H(C(t,x), C(s,y)) ≤ L₁|t−s| + L₂‖x−y‖`.
#[derive(Clone)]
pub struct SweepingScenario {
    pub dim: usize,
    pub set_map: SetMap,
    pub f: VectorField,
    pub c_f: f64,
    pub l1: f64,
    pub l2: f64,
    pub horizon: f64,
}

impl fmt::Debug for SweepingScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SweepingScenario")
            .field("dim", &self.dim)
            .field("c_f", &self.c_f)
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .field("horizon", &self.horizon)
            .finish()
    }
}

/// The sweeping process as an inclusion with `A_{t,s} = N_{C(t,s)}`.
pub fn sweeping_problem(sc: &SweepingScenario) -> Result<InclusionProblem> {
    if !(sc.l2 < 1.0) {
        return Err(invalid("L2", format!("the moving set needs L2 < 1, got {}", sc.l2)));
    }
    let op = MonotoneOperator::normal_cone(sc.dim, sc.set_map.clone()).with_constants(0.0, sc.l1, sc.l2)?;
    InclusionProblem::with_constants(sc.f.clone(), op, sc.c_f, 0.0, sc.l1, sc.l2, sc.horizon)
}

/// Largest sampled `d_H(C(t,x), C(s,y)) / (L₁|t−s| + L₂‖x−y‖)`. Values above 1 contradict
/// the declared constants.
pub fn sampled_lipschitz_ratio(sc: &SweepingScenario, t0: f64, box_radius: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t = t0 + rng.random_range(0.0..=sc.horizon);
        let s = t0 + rng.random_range(0.0..=sc.horizon);
        let x = Vector::from_fn(sc.dim, |_, _| rng.random_range(-box_radius..=box_radius));
        let y = Vector::from_fn(sc.dim, |_, _| rng.random_range(-box_radius..=box_radius));
        let dh = hausdorff(&(sc.set_map)(t, &x)?, &(sc.set_map)(s, &y)?)?;
        let bound = sc.l1 * (t - s).abs() + sc.l2 * (&x - &y).norm();
        let ratio = if bound > 0.0 {
            dh / bound
        } else if dh > 1e-12 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Moreau's catching-up algorithm written out directly:
/// `x_{i+1} = proj_{C(t_{i+1}, x_i)}(x_i + (t_{i+1} − t_i) f(t_i, x_i))` on the grid `t₀ + i h`.
pub fn catching_up(sc: &SweepingScenario, t0: f64, x0: &Vector, h: f64) -> Result<Vec<Vector>> {
    check_dim(sc.dim, x0.len())?;
    let times = uniform_grid(t0, sc.horizon, h)?;
    let mut xs = Vec::with_capacity(times.len());
    xs.push(x0.clone());
    for i in 0..times.len() - 1 {
        let x = &xs[i];
        let y = x + (sc.f)(times[i], x) * (times[i + 1] - times[i]);
        let next = (sc.set_map)(times[i + 1], x)?.project(&y)?;
        xs.push(next);
    }
    Ok(xs)
}
