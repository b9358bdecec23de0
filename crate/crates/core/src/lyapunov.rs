//! Verification of a-Lyapunov pairs `(V, W)`.
//!
//! Two checks are offered: the integral decay of `e^{a(t−t₀)}V(t,x(t)) + ∫W` along a computed
//! trajectory, and the pointwise proximal criterion
//! `θ + min ⟨ξ, v⟩ + aV + W ≤ 0` over generators `(θ, ξ)` of `∂ᴾV` and velocities `v` in
//! `(f(t,x) − A_{t,x}(x)) ∩ M𝔹`.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::Vector;
use crate::operator::ValueSet;
use crate::solver::{InclusionProblem, Trajectory};

/// `(t, x) ↦ ℝ ∪ {+∞}`.
pub type ScalarField = Arc<dyn Fn(f64, &Vector) -> f64 + Send + Sync>;
/// `(t, x) ↦` finite list of generators `(θ, ξ)`.
pub type GeneratorMap = Arc<dyn Fn(f64, &Vector) -> Vec<(f64, Vector)> + Send + Sync>;
/// Domain predicate.
pub type DomainMap = Arc<dyn Fn(f64, &Vector) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct LyapunovPair {
    pub v: ScalarField,
    pub w: ScalarField,
    pub rate: f64,
    pub prox_subdiff: Option<GeneratorMap>,
    /// Generators of the singular subdifferential, when supplied.
    pub singular_subdiff: Option<GeneratorMap>,
    pub domain: DomainMap,
}

impl fmt::Debug for LyapunovPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovPair")
            .field("rate", &self.rate)
            .field("prox_subdiff", &self.prox_subdiff.is_some())
            .field("singular_subdiff", &self.singular_subdiff.is_some())
            .finish()
    }
}

impl LyapunovPair {
    /// The domain defaults to `{V < ∞}`.
    pub fn new(v: ScalarField, w: ScalarField, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid("rate", format!("must be finite and ≥ 0, got {rate}")));
        }
        let vv = v.clone();
        Ok(LyapunovPair {
            v,
            w,
            rate,
            prox_subdiff: None,
            singular_subdiff: None,
            domain: Arc::new(move |t, x| vv(t, x).is_finite()),
        })
    }

    pub fn with_prox_subdiff(mut self, g: GeneratorMap) -> Self {
        self.prox_subdiff = Some(g);
        self
    }

    pub fn with_singular_subdiff(mut self, g: GeneratorMap) -> Self {
        self.singular_subdiff = Some(g);
        self
    }

    pub fn with_domain(mut self, d: DomainMap) -> Self {
        self.domain = d;
        self
    }

    /// `V(t,x)`, `+∞` outside the domain.
    pub fn value(&self, t: f64, x: &Vector) -> f64 {
        if (self.domain)(t, x) {
            (self.v)(t, x)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub times: Vec<f64>,
    /// `e^{a(t−t₀)}V(t,x(t)) + ∫_{t₀}^t W`, up to the first domain exit.
    pub composite: Vec<f64>,
    pub v0: f64,
    /// Largest positive increment between consecutive samples.
    pub max_increment: f64,
    /// `max composite − V(t₀,x₀)`.
    pub max_excess: f64,
    pub slack: f64,
    /// Index of the first state outside `dom(V)` (or with `W = ∞`).
    pub first_exit: Option<usize>,
    pub pass: bool,
}

/// Evaluates the composite decay quantity along a trajectory. `slack` defaults to `5h`.
pub fn evaluate_pair_decay(traj: &Trajectory, pair: &LyapunovPair, slack: Option<f64>) -> Result<DecayReport> {
    if traj.is_empty() {
        return Err(invalid("trajectory", "is empty"));
    }
    let slack = slack.unwrap_or(5.0 * traj.h);
    if !(slack >= 0.0) {
        return Err(invalid("slack", "must be nonnegative"));
    }
    let t0 = traj.times[0];
    let mut times = Vec::with_capacity(traj.len());
    let mut composite = Vec::with_capacity(traj.len());
    let mut integral = 0.0;
    let mut prev_w = 0.0;
    let mut first_exit = None;
    for (k, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let v = pair.value(*t, x);
        let w = (pair.w)(*t, x);
        if !v.is_finite() || !w.is_finite() {
            first_exit = Some(k);
            break;
        }
        if k > 0 {
            integral += 0.5 * (t - traj.times[k - 1]) * (w + prev_w);
        }
        prev_w = w;
        times.push(*t);
        composite.push((pair.rate * (t - t0)).exp() * v + integral);
    }
    let v0 = composite.first().copied().unwrap_or(f64::INFINITY);
    let max_increment = composite.windows(2).map(|c| c[1] - c[0]).fold(0.0, f64::max);
    let max_excess = composite.iter().map(|c| c - v0).fold(f64::NEG_INFINITY, f64::max);
    let pass = first_exit.is_none() && max_excess <= slack && max_increment <= slack;
    Ok(DecayReport {
        times,
        composite,
        v0,
        max_increment,
        max_excess,
        slack,
        first_exit,
        pass,
    })
}

/// `(f(t,x) − A_{t,x}(x)) ∩ M𝔹`.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocitySet {
    /// Interval product intersected with the ball, exact.
    Box { lo: Vector, hi: Vector, radius: f64 },
    /// Finite sample inside the ball.
    Sampled(Vec<Vector>),
}

fn project_box(lo: &Vector, hi: &Vector, y: &Vector) -> Vector {
    Vector::from_fn(y.len(), |i, _| y[i].max(lo[i]).min(hi[i]))
}

impl VelocitySet {
    pub fn is_exact(&self) -> bool {
        matches!(self, VelocitySet::Box { .. })
    }

    /// `min ⟨ξ, v⟩` over the set, with a minimiser.
    pub fn min_inner(&self, xi: &Vector) -> Result<(f64, Vector)> {
        match self {
            VelocitySet::Box { lo, hi, radius } => {
                check_dim(lo.len(), xi.len())?;
                let zero = Vector::zeros(lo.len());
                // ν → 0: linear minimisation over the box
                let corner = Vector::from_fn(lo.len(), |i, _| {
                    if xi[i] > 0.0 {
                        lo[i]
                    } else if xi[i] < 0.0 {
                        hi[i]
                    } else {
                        0.0_f64.max(lo[i]).min(hi[i])
                    }
                });
                if corner.iter().all(|v| v.is_finite()) && corner.norm() <= *radius {
                    return Ok((xi.dot(&corner), corner));
                }
                // v(ν) = proj_box(−ξ/ν) has nonincreasing norm in ν; find ‖v(ν)‖ = M
                let at = |nu: f64| project_box(lo, hi, &(-xi / nu));
                let mut hi_nu = 1.0;
                while at(hi_nu).norm() > *radius {
                    hi_nu *= 2.0;
                    if hi_nu > 1e300 {
                        let nearest = project_box(lo, hi, &zero).norm();
                        return Err(Error::EmptyVelocitySet { radius: *radius, nearest });
                    }
                }
                let mut lo_nu = hi_nu;
                while at(lo_nu).norm() <= *radius && lo_nu > 1e-300 {
                    lo_nu *= 0.5;
                }
                for _ in 0..200 {
                    let mid = (lo_nu * hi_nu).sqrt();
                    if at(mid).norm() > *radius {
                        lo_nu = mid;
                    } else {
                        hi_nu = mid;
                    }
                }
                let v = at(hi_nu);
                Ok((xi.dot(&v), v))
            }
            VelocitySet::Sampled(pts) => {
                let mut best: Option<(f64, Vector)> = None;
                for p in pts {
                    check_dim(p.len(), xi.len())?;
                    let q = xi.dot(p);
                    if best.as_ref().is_none_or(|b| q < b.0) {
                        best = Some((q, p.clone()));
                    }
                }
                best.ok_or(Error::EmptyVelocitySet { radius: f64::NAN, nearest: f64::NAN })
            }
        }
    }
}

/// Exact for box-valued operators (sign relays, interval normal cones, their sums);
/// otherwise a finite sample anchored at `f(t,x) − A⁰_{t,x}(x)`.
pub fn truncated_velocity_set(problem: &InclusionProblem, t: f64, x: &Vector, radius: f64) -> Result<VelocitySet> {
    if !(radius > 0.0) {
        return Err(invalid("radius", "must be positive"));
    }
    check_dim(problem.dim(), x.len())?;
    let fx = (problem.f)(t, x);
    let values = problem.op.value_set(t, x, x, radius + fx.norm())?;
    let vel = values.reflect_from(&fx);
    match vel {
        ValueSet::Box { lo, hi } => {
            let nearest = project_box(&lo, &hi, &Vector::zeros(lo.len())).norm();
            if nearest > radius {
                return Err(Error::EmptyVelocitySet { radius, nearest });
            }
            Ok(VelocitySet::Box { lo, hi, radius })
        }
        other => {
            let pts = other.samples(radius + fx.norm());
            let nearest = pts.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
            let kept: Vec<Vector> = pts.into_iter().filter(|p| p.norm() <= radius).collect();
            if kept.is_empty() {
                return Err(Error::EmptyVelocitySet { radius, nearest });
            }
            Ok(VelocitySet::Sampled(kept))
        }
    }
}

fn generator_residual(
    gens: &[(f64, Vector)],
    vel: &VelocitySet,
    extra: f64,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for (theta, xi) in gens {
        let (m, _) = vel.min_inner(xi)?;
        worst = worst.max(theta + m + extra);
    }
    Ok(worst)
}

/// `max_{(θ,ξ)} [θ + min_{v} ⟨ξ,v⟩ + aV + W]` over the supplied generators of `∂ᴾV(t,x)`.
pub fn proximal_criterion(pair: &LyapunovPair, problem: &InclusionProblem, t: f64, x: &Vector, radius: f64) -> Result<f64> {
    let gen_map = pair
        .prox_subdiff
        .as_ref()
        .ok_or_else(|| invalid("prox_subdiff", "the pair has no proximal subdifferential description"))?;
    let v = pair.value(t, x);
    if !v.is_finite() {
        return Err(invalid("x", "point lies outside dom(V)"));
    }
    let gens = gen_map(t, x);
    if gens.is_empty() {
        return Err(invalid("prox_subdiff", "no generators at this point"));
    }
    let vel = truncated_velocity_set(problem, t, x, radius)?;
    generator_residual(&gens, &vel, pair.rate * v + (pair.w)(t, x))
}

/// Singular line of the criterion, `max [θ + min ⟨ξ,v⟩]` over `∂^∞V` generators. `None`
/// when the pair supplies no singular description.
pub fn singular_criterion(pair: &LyapunovPair, problem: &InclusionProblem, t: f64, x: &Vector, radius: f64) -> Result<Option<f64>> {
    let Some(gen_map) = pair.singular_subdiff.as_ref() else {
        return Ok(None);
    };
    let gens = gen_map(t, x);
    if gens.is_empty() {
        return Ok(Some(f64::NEG_INFINITY));
    }
    let vel = truncated_velocity_set(problem, t, x, radius)?;
    Ok(Some(generator_residual(&gens, &vel, 0.0)?))
}
