//! The catching-up scheme for `ẋ ∈ f(t,x) − A_{t,x}(x)` and its companions: a-priori
//! bounds, convergence studies and hypo-monotonicity probes.
//!
//! One step reads
//!
//! ```text
//! yᵢ     = xᵢ + h f(tᵢ, xᵢ)
//! xᵢ₊₁   = J^h_{A_{tᵢ₊₁, xᵢ}}(yᵢ)
//! ```
//!
//! with the state parameter of the operator frozen at the previous iterate.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::Vector;
use crate::operator::{GraphPoint, MonotoneOperator};

/// Perturbation `(t, x) ↦ f(t, x)`.
pub type VectorField = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;

/// `ẋ ∈ f(t,x) − A_{t,x}(x)` on `[t₀, t₀ + T]` with declared constants.
#[derive(Clone)]
pub struct InclusionProblem {
    pub f: VectorField,
    pub op: MonotoneOperator,
    pub c_f: f64,
    pub c_a: f64,
    pub l1: f64,
    pub l2: f64,
    pub horizon: f64,
}

impl std::fmt::Debug for InclusionProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InclusionProblem")
            .field("op", &self.op)
            .field("c_f", &self.c_f)
            .field("c_a", &self.c_a)
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl InclusionProblem {
    /// Takes `c_A`, `L₁`, `L₂` from the operator.
    pub fn new(f: VectorField, op: MonotoneOperator, c_f: f64, horizon: f64) -> Result<Self> {
        let (c_a, l1, l2) = (op.c_a(), op.l1(), op.l2());
        Self::with_constants(f, op, c_f, c_a, l1, l2, horizon)
    }

    pub fn with_constants(
        f: VectorField,
        op: MonotoneOperator,
        c_f: f64,
        c_a: f64,
        l1: f64,
        l2: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(c_f > 0.0) || !c_f.is_finite() {
            return Err(invalid("c_f", format!("must be positive, got {c_f}")));
        }
        if !(c_a >= 0.0) || !(l1 >= 0.0) {
            return Err(invalid("constants", "c_A and L1 must be nonnegative"));
        }
        if !(0.0..1.0).contains(&l2) {
            return Err(invalid("L2", format!("must lie in [0, 1), got {l2}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid("horizon", format!("must be positive, got {horizon}")));
        }
        Ok(InclusionProblem { f, op, c_f, c_a, l1, l2, horizon })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Largest sampled `‖f(t,x)‖/(1 + ‖x‖)` over `t ∈ [t₀, t₀+T]` and `x` in a box.
    pub fn sampled_growth(&self, t0: f64, box_radius: f64, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        (0..samples)
            .map(|_| {
                let t = t0 + rng.random_range(0.0..=self.horizon);
                let x = Vector::from_fn(n, |_, _| rng.random_range(-box_radius..=box_radius));
                (self.f)(t, &x).norm() / (1.0 + x.norm())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// Graph-membership defect of the accepted step (resolvent identity with `μ = 1`).
    pub residual: f64,
    /// `‖(yᵢ − xᵢ₊₁)/h‖`, the norm of the operator selection used by the step.
    pub selection_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// `(xᵢ₊₁ − xᵢ)/h`, one per step.
    pub velocities: Vec<Vector>,
    pub h: f64,
    pub diagnostics: Vec<StepDiagnostics>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &Vector {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_residual(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.residual).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriConstants {
    pub delta: f64,
    pub c1: f64,
    pub m: f64,
    pub big_m: f64,
}

/// How `δ` is chosen in [`apriori_bounds_for`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DeltaChoice {
    /// `δ = 1` when admissible, otherwise the log-grid minimiser of `m(x₀)`.
    #[default]
    Default,
    Fixed(f64),
    Minimize,
}

/// `c₁ = c_f + (1 + (4δ+1)c_A)/(4δ) + (1+δ)L₁`.
pub fn step_constant(delta: f64, c_f: f64, c_a: f64, l1: f64) -> f64 {
    c_f + (1.0 + (4.0 * delta + 1.0) * c_a) / (4.0 * delta) + (1.0 + delta) * l1
}

/// `c₁`, `m(x₀)` and `M(x₀)` for a given `δ` with `(1+δ)L₂ < 1`.
pub fn apriori_bounds(x0: &Vector, delta: f64, c_f: f64, c_a: f64, l1: f64, l2: f64) -> Result<AprioriConstants> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    if !((1.0 + delta) * l2 < 1.0) {
        return Err(invalid("delta", format!("(1+δ)L2 = {} must be below 1", (1.0 + delta) * l2)));
    }
    let c1 = step_constant(delta, c_f, c_a, l1);
    let q = 1.0 - (1.0 + delta) * l2;
    let x = x0.norm();
    let m = (2.0 * x + 2.0 * c1 / q) * (6.0 * c1 / q).exp();
    let big_m = c_f + c_a + (c_f + 2.0 * c_a + 1.0) * (x + m);
    Ok(AprioriConstants { delta, c1, m, big_m })
}

/// Admissible `δ` range `(0, δ_max)` for a given `L₂`.
fn delta_limit(l2: f64) -> f64 {
    if l2 > 0.0 {
        1.0 / l2 - 1.0
    } else {
        f64::INFINITY
    }
}

/// [`apriori_bounds`] with the constants of a problem and a `δ` policy.
pub fn apriori_bounds_for(problem: &InclusionProblem, x0: &Vector, choice: DeltaChoice) -> Result<AprioriConstants> {
    let p = problem;
    let eval = |d: f64| apriori_bounds(x0, d, p.c_f, p.c_a, p.l1, p.l2);
    match choice {
        DeltaChoice::Fixed(d) => eval(d),
        DeltaChoice::Default if (1.0 + 1.0) * p.l2 < 1.0 => eval(1.0),
        DeltaChoice::Default | DeltaChoice::Minimize => {
            let limit = delta_limit(p.l2).min(1e4);
            let mut best: Option<AprioriConstants> = None;
            for k in 0..=400 {
                let d = 1e-4 * (limit / 1e-4).powf(k as f64 / 400.0) * (1.0 - 1e-9);
                if let Ok(c) = eval(d) {
                    if best.is_none_or(|b| c.m < b.m) {
                        best = Some(c);
                    }
                }
            }
            best.ok_or_else(|| invalid("delta", "no admissible δ found"))
        }
    }
}

/// `δ` minimising `c₁` subject to `(1+δ)L₂ < 1`, and that minimum.
pub fn best_step_constant(c_f: f64, c_a: f64, l1: f64, l2: f64) -> (f64, f64) {
    let limit = delta_limit(l2);
    let unconstrained = if l1 > 0.0 {
        ((1.0 + c_a) / (4.0 * l1)).sqrt()
    } else {
        1e6
    };
    let delta = if unconstrained < limit {
        unconstrained
    } else {
        limit * (1.0 - 1e-9)
    };
    (delta, step_constant(delta, c_f, c_a, l1))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    /// Skip the `h·c₁ < 1/2` precondition.
    pub allow_large_step: bool,
}

/// `x₀ ∈ dom(A_{t₀,x₀})`.
pub fn admissible(problem: &InclusionProblem, t0: f64, x0: &Vector) -> bool {
    x0.len() == problem.dim() && problem.op.in_domain(t0, x0, x0).unwrap_or(false)
}

/// One step of the scheme from `(tᵢ, xᵢ)` to `tᵢ₊₁`.
pub fn step(problem: &InclusionProblem, ti: f64, ti1: f64, xi: &Vector) -> Result<Vector> {
    Ok(step_with_selection(problem, ti, ti1, xi)?.0)
}

fn step_with_selection(problem: &InclusionProblem, ti: f64, ti1: f64, xi: &Vector) -> Result<(Vector, Vector)> {
    let h = ti1 - ti;
    if !(h > 0.0) {
        return Err(invalid("h", format!("step must be positive, got {h}")));
    }
    check_dim(problem.dim(), xi.len())?;
    let fx = (problem.f)(ti, xi);
    check_dim(problem.dim(), fx.len())?;
    let y = xi + fx * h;
    let next = problem.op.resolvent(h, ti1, xi, &y)?;
    Ok((next, y))
}

/// Uniform grid `t₀ + i h`, `i = 0..=round(T/h)`.
pub fn uniform_grid(t0: f64, horizon: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    let n = (horizon / h).round() as usize;
    if n == 0 {
        return Err(invalid("h", format!("step {h} exceeds the horizon {horizon}")));
    }
    Ok((0..=n).map(|i| t0 + i as f64 * h).collect())
}

/// Runs the scheme, stopping at the first failing step. The partial trajectory is always
/// returned; the error, if any, carries the index of the failed step.
pub fn solve_truncating(
    problem: &InclusionProblem,
    t0: f64,
    x0: &Vector,
    h: f64,
    opts: SolveOptions,
) -> Result<(Trajectory, Option<Error>)> {
    check_dim(problem.dim(), x0.len())?;
    if !admissible(problem, t0, x0) {
        return Err(Error::Inadmissible);
    }
    let times = uniform_grid(t0, problem.horizon, h)?;
    let (_, c1) = best_step_constant(problem.c_f, problem.c_a, problem.l1, problem.l2);
    if !opts.allow_large_step && !(h * c1 < 0.5) {
        return Err(Error::StepTooLarge { h, c1 });
    }
    let bound = apriori_bounds_for(problem, x0, DeltaChoice::Default).ok();
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![x0.clone()],
        velocities: Vec::with_capacity(times.len() - 1),
        h,
        diagnostics: Vec::with_capacity(times.len() - 1),
        warnings: Vec::new(),
    };
    let mut worst_speed = (0.0_f64, 0usize);
    for i in 0..times.len() - 1 {
        let xi = traj.states[i].clone();
        let res = step_with_selection(problem, times[i], times[i + 1], &xi).and_then(|(next, y)| {
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { index: i + 1 });
            }
            let selection = (&y - &next) / h;
            let residual = problem.op.graph_membership_residual(
                times[i + 1],
                &xi,
                &GraphPoint::new(next.clone(), selection.clone()),
                1.0,
            )?;
            Ok((next, selection.norm(), residual))
        });
        match res {
            Ok((next, selection_norm, residual)) => {
                let v = (&next - &xi) / h;
                if times[i + 1] <= t0 + 1.0 + 1e-12 && v.norm() > worst_speed.0 {
                    worst_speed = (v.norm(), i);
                }
                traj.velocities.push(v);
                traj.diagnostics.push(StepDiagnostics { residual, selection_norm });
                traj.times.push(times[i + 1]);
                traj.states.push(next);
            }
            Err(e) => {
                return Ok((
                    traj,
                    Some(Error::StepFailure {
                        index: i,
                        source: Box::new(e),
                    }),
                ))
            }
        }
    }
    if let Some(b) = bound {
        if worst_speed.0 > b.m + 1e-6 {
            traj.warnings.push(format!(
                "discrete speed {:.6e} at step {} exceeds the a-priori bound m(x0) = {:.6e}",
                worst_speed.0, worst_speed.1, b.m
            ));
        }
    }
    Ok((traj, None))
}

/// Runs the scheme over `[t₀, t₀ + T]`.
pub fn solve(problem: &InclusionProblem, t0: f64, x0: &Vector, h: f64, opts: SolveOptions) -> Result<Trajectory> {
    match solve_truncating(problem, t0, x0, h, opts)? {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub h_list: Vec<f64>,
    /// `gaps[k]`: sup-norm distance between runs `k` and `k+1` on the grid of run `k`.
    pub gaps: Vec<f64>,
    /// `gaps[k+1]/gaps[k]`.
    pub ratios: Vec<f64>,
    /// Richardson extrapolation of the final state from the two finest runs.
    pub extrapolated_final: Vector,
    pub trajectories: Vec<Trajectory>,
}

/// Solves for every step in `h_list` (in parallel) and compares consecutive runs.
/// Consecutive steps must have an integer ratio.
pub fn convergence_study(
    problem: &InclusionProblem,
    t0: f64,
    x0: &Vector,
    h_list: &[f64],
    opts: SolveOptions,
) -> Result<ConvergenceReport> {
    if h_list.len() < 2 {
        return Err(invalid("h_list", "need at least two step sizes"));
    }
    let mut factors = Vec::with_capacity(h_list.len() - 1);
    for w in h_list.windows(2) {
        let r = w[0] / w[1];
        if !(w[1] < w[0]) || (r - r.round()).abs() > 1e-9 * r {
            return Err(invalid("h_list", format!("{} / {} is not an integer refinement", w[0], w[1])));
        }
        factors.push(r.round() as usize);
    }
    let trajectories: Vec<Trajectory> = h_list
        .par_iter()
        .map(|&h| solve(problem, t0, x0, h, opts))
        .collect::<Result<_>>()?;
    let mut gaps = Vec::with_capacity(factors.len());
    for (k, &r) in factors.iter().enumerate() {
        let (coarse, fine) = (&trajectories[k], &trajectories[k + 1]);
        let gap = coarse
            .states
            .iter()
            .enumerate()
            .filter_map(|(i, x)| fine.states.get(i * r).map(|y| (x - y).norm()))
            .fold(0.0, f64::max);
        gaps.push(gap);
    }
    let ratios = gaps.windows(2).map(|g| g[1] / g[0]).collect();
    let n = trajectories.len();
    let r = *factors.last().expect("at least one refinement") as f64;
    let (xc, xf) = (trajectories[n - 2].last(), trajectories[n - 1].last());
    let extrapolated_final = xf + (xf - xc) / (r - 1.0);
    Ok(ConvergenceReport {
        h_list: h_list.to_vec(),
        gaps,
        ratios,
        extrapolated_final,
        trajectories,
    })
}

/// Options for [`hypo_probe`] and [`lipschitz_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    /// Half-width of the sampling box for resolvent arguments.
    pub box_radius: f64,
    /// Only points with `‖x‖ ≤ radius` are kept.
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub lambdas: Vec<f64>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            box_radius: 3.0,
            radius: 5.0,
            samples: 200,
            seed: 0,
            lambdas: vec![1e-2, 1e-1, 0.5],
        }
    }
}

/// Graph point of `x ↦ A_{t,x}(x)`: a fixed point `z = J^λ_{A_{t,z}}(w)` by successive
/// substitution, with `(w − z)/λ ∈ A_{t,z}(z)`.
fn diagonal_graph_point(op: &MonotoneOperator, lambda: f64, t: f64, w: &Vector) -> Option<GraphPoint> {
    let mut z = w.clone();
    for _ in 0..500 {
        let next = op.resolvent(lambda, t, &z, w).ok()?;
        let gap = (&next - &z).norm();
        z = next;
        if gap <= 1e-13 * (1.0 + z.norm()) {
            let image = (w - &z) / lambda;
            return Some(GraphPoint::new(z, image));
        }
    }
    None
}

/// Lower bound on the hypo-monotonicity constant of `x ↦ A_{t,x}(x)` on `radius·𝔹`:
/// the largest sampled `−⟨x₁*−x₂*, x₁−x₂⟩/‖x₁−x₂‖²`, clipped at 0.
pub fn hypo_probe(op: &MonotoneOperator, t_grid: &[f64], opts: &ProbeOptions) -> Result<f64> {
    if opts.samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    if opts.lambdas.is_empty() {
        return Err(invalid("lambdas", "must be nonempty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = op.dim();
    let mut best = 0.0_f64;
    for &t in t_grid {
        let mut pts = Vec::with_capacity(opts.samples);
        for _ in 0..opts.samples {
            let w = Vector::from_fn(n, |_, _| rng.random_range(-opts.box_radius..=opts.box_radius));
            let lambda = opts.lambdas[rng.random_range(0..opts.lambdas.len())];
            if let Some(p) = diagonal_graph_point(op, lambda, t, &w) {
                if p.base.norm() <= opts.radius {
                    pts.push(p);
                }
            }
        }
        for i in 0..pts.len() {
            for j in 0..i {
                let dx = &pts[i].base - &pts[j].base;
                let d2 = dx.norm_squared();
                if d2 <= 1e-12 {
                    continue;
                }
                let q = -(&pts[i].image - &pts[j].image).dot(&dx) / d2;
                best = best.max(q);
            }
        }
    }
    Ok(if best > PROBE_NOISE_FLOOR { best } else { 0.0 })
}

/// Probe values at or below this level are rounding noise of the fixed-point solves.
pub const PROBE_NOISE_FLOOR: f64 = 1e-8;

/// Largest sampled `‖f(t,x₁) − f(t,x₂)‖/‖x₁ − x₂‖` for `x₁, x₂` in `radius·𝔹`.
pub fn lipschitz_fit(f: &VectorField, dim: usize, t_grid: &[f64], opts: &ProbeOptions) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let r = opts.radius;
    let mut best = 0.0_f64;
    let sample = |rng: &mut ChaCha8Rng| loop {
        let x = Vector::from_fn(dim, |_, _| rng.random_range(-r..=r));
        if x.norm() <= r {
            return x;
        }
    };
    for &t in t_grid {
        for _ in 0..opts.samples {
            let x1 = sample(&mut rng);
            let x2 = if rng.random_bool(0.5) {
                sample(&mut rng)
            } else {
                let e = Vector::from_fn(dim, |_, _| rng.random_range(-1e-3..=1e-3));
                &x1 + e
            };
            let d = (&x1 - &x2).norm();
            if d > 1e-12 {
                best = best.max((f(t, &x1) - f(t, &x2)).norm() / d);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::FeedbackOptions;
    use crate::operator::soft_threshold;
    use crate::sets::ConvexSet;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;

    fn zero_field(n: usize) -> VectorField {
        Arc::new(move |_, _| Vector::zeros(n))
    }

    fn moving_interval() -> MonotoneOperator {
        MonotoneOperator::normal_cone(1, Arc::new(|t, _| ConvexSet::interval(t, t + 1.0)))
            .with_constants(0.0, 1.0, 0.0)
            .unwrap()
    }

    #[test]
    fn admissibility_of_static_interval() {
        let op = MonotoneOperator::normal_cone_fixed(ConvexSet::interval(-1.0, 1.0).unwrap());
        let p = InclusionProblem::new(Arc::new(|_, _| dvector![1.0]), op, 1.0, 1.0).unwrap();
        assert!(admissible(&p, 0.0, &dvector![0.5]));
        assert!(!admissible(&p, 0.0, &dvector![3.0]));
    }

    #[test]
    fn step_examples() {
        let p = InclusionProblem::new(zero_field(1), moving_interval(), 1.0, 1.0).unwrap();
        assert_eq!(step(&p, 0.0, 0.5, &dvector![0.0]).unwrap(), dvector![0.5]);

        let f: VectorField = Arc::new(|t, x| dvector![x[0] * t + 1.0]);
        let p = InclusionProblem::new(f.clone(), MonotoneOperator::zero(1), 1.0, 1.0).unwrap();
        let x = dvector![0.7];
        assert_eq!(step(&p, 0.2, 0.3, &x).unwrap(), &x + f(0.2, &x) * (0.3 - 0.2));

        let p = InclusionProblem::new(zero_field(1), MonotoneOperator::sign(1.0, 1).unwrap(), 1.0, 1.0).unwrap();
        let x1 = step(&p, 0.0, 0.1, &dvector![0.3]).unwrap();
        assert_abs_diff_eq!(x1[0], soft_threshold(0.3, 0.1), epsilon = 1e-16);
        assert_abs_diff_eq!(x1[0], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn stationary_point_gives_constant_trajectory() {
        let op = MonotoneOperator::normal_cone_fixed(ConvexSet::interval(-1.0, 1.0).unwrap());
        let p = InclusionProblem::new(zero_field(1), op, 1.0, 1.0).unwrap();
        let tr = solve(&p, 0.0, &dvector![0.25], 0.01, SolveOptions::default()).unwrap();
        assert_eq!(tr.len(), 101);
        assert!(tr.states.iter().all(|x| x[0] == 0.25));
    }

    #[test]
    fn solve_rejects_bad_inputs() {
        let op = MonotoneOperator::normal_cone_fixed(ConvexSet::interval(-1.0, 1.0).unwrap());
        let p = InclusionProblem::new(zero_field(1), op, 1.0, 1.0).unwrap();
        assert_eq!(solve(&p, 0.0, &dvector![3.0], 0.01, SolveOptions::default()), Err(Error::Inadmissible));
        assert!(matches!(solve(&p, 0.0, &dvector![0.0], 0.6, SolveOptions::default()), Err(Error::StepTooLarge { .. })));
        assert!(solve(&p, 0.0, &dvector![0.0], 0.6, SolveOptions { allow_large_step: true }).is_ok());
    }

    #[test]
    fn apriori_example_values() {
        let c = apriori_bounds(&dvector![0.0], 1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(c.c1, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.m / 15f64.exp(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!((c.big_m - 2.0) / 15f64.exp(), 20.0, epsilon = 1e-12);
        assert!(apriori_bounds(&dvector![0.0], 1.0, 1.0, 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn best_delta_for_moving_interval_with_relay() {
        let (d, c1) = best_step_constant(1.5, 1.0, 1.0, 0.5);
        assert_abs_diff_eq!(d, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c1, 3.5 + 2.0 * 0.5f64.sqrt(), epsilon = 1e-12);
        for k in 1..100 {
            let delta = k as f64 * 0.0099;
            assert!(step_constant(delta, 1.5, 1.0, 1.0) >= c1 - 1e-12);
        }
    }

    #[test]
    fn explicit_euler_converges_at_first_order() {
        let f: VectorField = Arc::new(|_, x| -x);
        let p = InclusionProblem::new(f, MonotoneOperator::zero(1), 1.0, 1.0).unwrap();
        let rep = convergence_study(&p, 0.0, &dvector![1.0], &[0.1, 0.05, 0.025, 0.0125], SolveOptions::default()).unwrap();
        for r in &rep.ratios {
            assert!((r - 0.5).abs() < 0.05, "ratio {r}");
        }
        assert!((rep.extrapolated_final[0] - (-1f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn stationary_convergence_has_zero_gaps() {
        let op = MonotoneOperator::normal_cone_fixed(ConvexSet::interval(-1.0, 1.0).unwrap());
        let p = InclusionProblem::new(zero_field(1), op, 1.0, 1.0).unwrap();
        let rep = convergence_study(&p, 0.0, &dvector![0.3], &[0.1, 0.05, 0.025], SolveOptions::default()).unwrap();
        assert_eq!(rep.gaps, vec![0.0, 0.0]);
        assert!(convergence_study(&p, 0.0, &dvector![0.3], &[0.1, 0.03], SolveOptions::default()).is_err());
    }

    #[test]
    fn hypo_probe_of_monotone_families_is_zero() {
        let t_grid = [0.0, 0.5, 1.0];
        let time_only = moving_interval();
        assert_eq!(hypo_probe(&time_only, &t_grid, &ProbeOptions::default()).unwrap(), 0.0);
        let shifted = MonotoneOperator::shifted(MonotoneOperator::sign(1.0, 2).unwrap(), 0.5).unwrap();
        assert_eq!(hypo_probe(&shifted, &t_grid, &ProbeOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn hypo_probe_of_lure_feedback_respects_bound() {
        // F_{t,x}(u) = Sign(u + L_g sin x), D = 1 so c₁ = 1
        let lg = 0.8;
        let g1: crate::operator::ShiftMap = Arc::new(move |_, s: &Vector| dvector![lg * s[0].sin()]);
        let f = MonotoneOperator::shifted_by(MonotoneOperator::sign(1.0, 1).unwrap(), g1);
        let op = MonotoneOperator::lure_composed(f, dmatrix![1.0], dmatrix![1.0], FeedbackOptions::default()).unwrap();
        let k = hypo_probe(&op, &[0.0], &ProbeOptions { samples: 300, ..ProbeOptions::default() }).unwrap();
        assert!(k <= lg * lg / 4.0 + 1e-9, "k = {k}");
    }

    #[test]
    fn lipschitz_fit_of_linear_field() {
        let f: VectorField = Arc::new(|_, x| dmatrix![0.0, 2.0; 0.0, 0.0] * x);
        let l = lipschitz_fit(&f, 2, &[0.0], &ProbeOptions { samples: 2000, ..ProbeOptions::default() });
        assert!(l <= 2.0 + 1e-12 && l > 1.9);
    }

    proptest! {
        #[test]
        fn m_increases_with_initial_norm(a in 0.0f64..5.0, b in 0.0f64..5.0, delta in 0.1f64..3.0) {
            let ca = apriori_bounds(&dvector![a], delta, 1.0, 0.5, 0.2, 0.1).unwrap();
            let cb = apriori_bounds(&dvector![b], delta, 1.0, 0.5, 0.2, 0.1).unwrap();
            if a < b {
                prop_assert!(ca.m < cb.m);
            }
            prop_assert!(ca.big_m > ca.m);
        }

        #[test]
        fn apriori_invariants(
            cf in 0.01f64..3.0, ca in 0.0f64..3.0, l1 in 0.0f64..2.0, l2 in 0.0f64..0.9, x in 0.0f64..4.0,
        ) {
            let (delta, _) = best_step_constant(cf, ca, l1, l2);
            prop_assert!((1.0 + delta) * l2 < 1.0);
            let delta = delta.min(0.5 * delta_limit(l2)).min(10.0);
            let c = apriori_bounds(&dvector![x], delta, cf, ca, l1, l2).unwrap();
            prop_assert_eq!(c.c1, step_constant(delta, cf, ca, l1));
            prop_assume!(c.m.is_finite());
            prop_assert!(c.big_m > c.m);
        }
    }
}
