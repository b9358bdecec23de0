//! Lur'e systems
//!
//! ```text
//! ẋ = g(t,x) + B λ,   y = C x + D λ,   λ ∈ −F_{t,x}(y)
//! ```
//!
//! recast as `ẋ ∈ f(t,x) − Cᵀ Φ(t,x,x)` with `Φ(t,x,y) = (F_{t,y}⁻¹ + D)⁻¹ C x` and
//! `f = g − (B − Cᵀ) Φ⁰`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::feedback::{minimal_norm_solution, solve_feedback, FeedbackOptions, Phi0Result};
use crate::linalg::{
    is_monotone_matrix, range_and_kernel, rank, smallest_positive_eigenvalue, spectral_norm, sym_eigen, is_zero,
    Matrix, Vector, RANK_TOL,
};
use crate::operator::MonotoneOperator;
use crate::solver::{InclusionProblem, VectorField};

#[derive(Clone)]
pub struct LureSystem {
    pub g: VectorField,
    /// `n × m`.
    pub b: Matrix,
    /// `m × n`.
    pub c: Matrix,
    /// `m × m`, positive semidefinite.
    pub d: Matrix,
    /// `F_{t,y}` on `ℝᵐ`; its `L₁`, `L₂` are the constants of the family.
    pub feedback: MonotoneOperator,
    /// Symmetric positive definite weight for the kernel condition. `None` means `I`.
    pub p: Option<Matrix>,
    /// `‖g(t,x)‖ ≤ c_g(1 + ‖x‖)`.
    pub c_g: f64,
    /// `‖Φ⁰(t,x,y)‖ ≤ β₁(1 + ‖x‖ + ‖y‖)`.
    pub beta1: f64,
    pub options: FeedbackOptions,
    pub horizon: f64,
}

impl fmt::Debug for LureSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LureSystem")
            .field("b", &self.b)
            .field("c", &self.c)
            .field("d", &self.d)
            .field("feedback", &self.feedback)
            .field("c_g", &self.c_g)
            .field("beta1", &self.beta1)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl LureSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        g: VectorField,
        b: Matrix,
        c: Matrix,
        d: Matrix,
        feedback: MonotoneOperator,
        c_g: f64,
        beta1: f64,
        horizon: f64,
    ) -> Result<Self> {
        let m = feedback.dim();
        let n = c.ncols();
        if c.nrows() != m || b.nrows() != n || b.ncols() != m || d.nrows() != m || d.ncols() != m {
            return Err(invalid(
                "matrices",
                format!(
                    "need B n×m, C m×n, D m×m with m = {m}; got B {}×{}, C {}×{}, D {}×{}",
                    b.nrows(),
                    b.ncols(),
                    c.nrows(),
                    c.ncols(),
                    d.nrows(),
                    d.ncols()
                ),
            ));
        }
        if !(c_g > 0.0) || !(beta1 >= 0.0) {
            return Err(invalid("constants", "need c_g > 0 and β₁ ≥ 0"));
        }
        Ok(LureSystem {
            g,
            b,
            c,
            d,
            feedback,
            p: None,
            c_g,
            beta1,
            options: FeedbackOptions::default(),
            horizon,
        })
    }

    pub fn with_p(mut self, p: Matrix) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_options(mut self, options: FeedbackOptions) -> Self {
        self.options = options;
        self
    }

    pub fn state_dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn feedback_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Smallest positive eigenvalue of `CᵀC`.
    pub fn c2(&self) -> Option<f64> {
        smallest_positive_eigenvalue(&(self.c.transpose() * &self.c))
    }

    /// `c₁` with `⟨Dz, z⟩ ≥ c₁‖z‖²` on `rge(D + Dᵀ)`: half the smallest positive
    /// eigenvalue of `D + Dᵀ`.
    pub fn c1(&self) -> Option<f64> {
        smallest_positive_eigenvalue(&(&self.d + self.d.transpose())).map(|l| 0.5 * l)
    }

    /// `(L₁', L₂') = ‖C‖ (L_{F1}, L_{F2}) / c₂`.
    pub fn derived_lipschitz(&self) -> Result<(f64, f64)> {
        let c2 = self.c2().ok_or_else(|| invalid("C", "CᵀC has no positive eigenvalue"))?;
        let nc = spectral_norm(&self.c);
        Ok((nc * self.feedback.l1() / c2, nc * self.feedback.l2() / c2))
    }
}

/// Minimal-norm solution of `z ∈ F_{t,y}(Cx − Dz)`.
pub fn phi0_solve(sys: &LureSystem, t: f64, x: &Vector, y: &Vector, opts: &FeedbackOptions) -> Result<Phi0Result> {
    if let Some(rho) = opts.step {
        let sym = (&sys.d + sys.d.transpose()) * 0.5;
        let lmax = sym_eigen(&sym).eigenvalues.max();
        if !(rho > 0.0) || (lmax > 0.0 && rho >= 2.0 / lmax) {
            return Err(invalid("step", format!("ρ = {rho} outside (0, 2/λmax(D)) with λmax = {lmax}")));
        }
    }
    let rhs = &sys.c * x;
    minimal_norm_solution(&sys.feedback, t, y, &sys.d, &rhs, opts)
}

/// The inclusion `ẋ ∈ f(t,x) − CᵀΦ(t,x,x)`.
pub fn lure_problem(sys: &LureSystem) -> Result<InclusionProblem> {
    let m = sys.feedback_dim();
    if rank(&sys.c) != m {
        return Err(invalid("C", "CCᵀ must be invertible (full row rank)"));
    }
    let (l1, l2) = sys.derived_lipschitz()?;
    if !(l2 < 1.0) {
        return Err(invalid("L2", format!("derived state constant ‖C‖L_F2/c₂ = {l2} must be < 1")));
    }
    let nc = spectral_norm(&sys.c);
    let c_a = nc * sys.beta1;
    let op = MonotoneOperator::lure_composed(sys.feedback.clone(), sys.c.clone(), sys.d.clone(), sys.options)?
        .with_constants(c_a, l1, l2)?;
    let bmc = &sys.b - sys.c.transpose();
    let (f, c_f): (VectorField, f64) = if is_zero(&bmc) {
        (sys.g.clone(), sys.c_g)
    } else {
        let s = sys.clone();
        let nb = spectral_norm(&bmc);
        let f: VectorField = Arc::new(move |t, x: &Vector| {
            let gx = (s.g)(t, x);
            match phi0_solve(&s, t, x, x, &s.options) {
                Ok(p) => gx - &bmc * p.z,
                Err(_) => Vector::from_element(x.len(), f64::NAN),
            }
        });
        (f, sys.c_g + 2.0 * nb * sys.beta1)
    };
    InclusionProblem::with_constants(f, op, c_f, c_a, l1, l2, sys.horizon)
}

/// Largest sampled `‖Φ⁰(t,x,x)‖/(1 + 2‖x‖)`.
pub fn fit_beta1(sys: &LureSystem, t0: f64, box_radius: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.state_dim();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t = t0 + rng.random_range(0.0..=sys.horizon);
        let x = Vector::from_fn(n, |_, _| rng.random_range(-box_radius..=box_radius));
        let p = phi0_solve(sys, t, &x, &x, &sys.options)?;
        worst = worst.max(p.z.norm() / (1.0 + 2.0 * x.norm()));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Checked only on samples.
    Sampled { checked: usize, violations: usize },
}

impl Verdict {
    pub fn ok(&self) -> bool {
        match self {
            Verdict::Pass => true,
            Verdict::Fail => false,
            Verdict::Sampled { violations, .. } => *violations == 0,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
            Verdict::Sampled { checked, violations } => {
                write!(f, "sampled-only ({violations} violations in {checked})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl AssumptionReport {
    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionOptions {
    pub t0: f64,
    pub box_radius: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for AssumptionOptions {
    fn default() -> Self {
        AssumptionOptions {
            t0: 0.0,
            box_radius: 3.0,
            samples: 100,
            seed: 0,
        }
    }
}

pub const CHECK_D_PSD: &str = "d-positive-semidefinite";
pub const CHECK_C_RANK: &str = "c-full-row-rank";
pub const CHECK_KERNEL: &str = "kernel-inclusion";
pub const CHECK_LF2: &str = "state-lipschitz-bound";
pub const CHECK_RANGE: &str = "range-condition";
pub const CHECK_SOLVABLE: &str = "feedback-solvability";
pub const CHECK_GROWTH: &str = "g-linear-growth";

/// Report-only check of the structural assumptions on a Lur'e system.
pub fn check_assumptions(sys: &LureSystem, opts: &AssumptionOptions) -> AssumptionReport {
    let mut checks = Vec::new();
    let m = sys.feedback_dim();
    let dsym = &sys.d + sys.d.transpose();

    let psd = is_monotone_matrix(&sys.d);
    let c1 = sys.c1();
    checks.push(AssumptionCheck {
        name: CHECK_D_PSD,
        verdict: if psd { Verdict::Pass } else { Verdict::Fail },
        detail: format!("c1 = {}", c1.map_or("none".into(), |v| format!("{v:.6e}"))),
    });

    let rk = rank(&sys.c);
    let c2 = sys.c2();
    checks.push(AssumptionCheck {
        name: CHECK_C_RANK,
        verdict: if rk == m { Verdict::Pass } else { Verdict::Fail },
        detail: format!("rank(C) = {rk}, m = {m}, c2 = {}", c2.map_or("none".into(), |v| format!("{v:.6e}"))),
    });

    let p = sys.p.clone().unwrap_or_else(|| Matrix::identity(sys.state_dim(), sys.state_dim()));
    let p_spd = p.is_square()
        && p.nrows() == sys.state_dim()
        && (&p - p.transpose()).amax() <= RANK_TOL * spectral_norm(&p).max(1.0)
        && sym_eigen(&p).eigenvalues.min() > 0.0;
    let (_, ker) = range_and_kernel(&dsym);
    let mismatch = &p * &sys.b - sys.c.transpose();
    let defect = if ker.ncols() == 0 { 0.0 } else { (&mismatch * &ker).amax() };
    let scale = spectral_norm(&mismatch).max(1.0);
    checks.push(AssumptionCheck {
        name: CHECK_KERNEL,
        verdict: if p_spd && defect <= 1e-9 * scale { Verdict::Pass } else { Verdict::Fail },
        detail: format!("dim ker(D+Dᵀ) = {}, max |(PB−Cᵀ)K| = {defect:.3e}, P spd = {p_spd}", ker.ncols()),
    });

    let lf2 = sys.feedback.l2();
    let (verdict, detail) = match c2 {
        Some(c2) => {
            let bound = c2 / spectral_norm(&sys.c);
            let v = if lf2 < bound { Verdict::Pass } else { Verdict::Fail };
            let d = if lf2 == bound {
                format!("L_F2 = {lf2} sits on the boundary c2/‖C‖; strict inequality is required")
            } else {
                format!("L_F2 = {lf2}, c2/‖C‖ = {bound:.6e}")
            };
            (v, d)
        }
        None => (Verdict::Fail, "c2 undefined".to_string()),
    };
    checks.push(AssumptionCheck { name: CHECK_LF2, verdict, detail });

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = sys.state_dim();
    let (mut range_bad, mut solve_bad, mut growth_bad) = (0, 0, 0);
    let mut worst_growth: f64 = 0.0;
    for _ in 0..opts.samples {
        let t = opts.t0 + rng.random_range(0.0..=sys.horizon.max(0.0));
        let x = Vector::from_fn(n, |_, _| rng.random_range(-opts.box_radius..=opts.box_radius));
        match phi0_solve(sys, t, &x, &x, &sys.options) {
            Ok(p) => {
                if !p.in_range_component {
                    range_bad += 1;
                }
            }
            Err(_) => range_bad += 1,
        }
        let rhs = &sys.c * &x;
        match solve_feedback(&sys.feedback, t, &x, &sys.d, &rhs, &sys.options) {
            Ok(_) => {}
            Err(Error::EmptySolutionSet(_)) | Err(Error::NoConvergence { .. }) => solve_bad += 1,
            Err(_) => solve_bad += 1,
        }
        let ratio = (sys.g)(t, &x).norm() / (1.0 + x.norm());
        worst_growth = worst_growth.max(ratio);
        if ratio > sys.c_g * (1.0 + 1e-12) {
            growth_bad += 1;
        }
    }
    checks.push(AssumptionCheck {
        name: CHECK_RANGE,
        verdict: Verdict::Sampled { checked: opts.samples, violations: range_bad },
        detail: "minimal-norm solution re-verified after projection onto rge(D+Dᵀ)".into(),
    });
    checks.push(AssumptionCheck {
        name: CHECK_SOLVABLE,
        verdict: Verdict::Sampled { checked: opts.samples, violations: solve_bad },
        detail: "feasibility probe of z ∈ F(Cx − Dz)".into(),
    });
    checks.push(AssumptionCheck {
        name: CHECK_GROWTH,
        verdict: Verdict::Sampled { checked: opts.samples, violations: growth_bad },
        detail: format!("max sampled ‖g‖/(1+‖x‖) = {worst_growth:.6e}, c_g = {}", sys.c_g),
    });
    AssumptionReport { checks, c1, c2 }
}
