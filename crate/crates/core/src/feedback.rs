//! Solver for generalized equations `0 ∈ F⁻¹(w) + D w − c`, i.e. `w ∈ F(c − D w)`.
//!
//! Used by the Lur'e composition (resolvent and minimal-norm element) and by
//! [`crate::lure::phi0_solve`]. Two paths are available: splitting iterations that only
//! need resolvents of `F`, and an exact piecewise enumeration for coordinatewise `F` with
//! diagonal `D`.

use crate::error::{Error, Result};
use crate::linalg::{is_diagonal, range_projector, spectral_norm, sym_eigen, Matrix, Vector};
use crate::operator::{MonotoneOperator, OperatorKind, Shift};
use crate::sets::ConvexSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phi0Method {
    /// Enumeration when the structure allows it, splitting otherwise.
    #[default]
    Auto,
    ForwardBackward,
    Enumeration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackOptions {
    /// Stopping tolerance on successive iterates (relative to `1 + ‖w‖`).
    pub tol: f64,
    /// Largest graph-membership defect accepted for a solution.
    pub accept_tol: f64,
    pub max_iter: usize,
    /// Step `ρ`; chosen from the linear part when `None`.
    pub step: Option<f64>,
    pub method: Phi0Method,
}

impl Default for FeedbackOptions {
    fn default() -> Self {
        FeedbackOptions {
            tol: 1e-13,
            accept_tol: 1e-9,
            max_iter: 200_000,
            step: None,
            method: Phi0Method::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSolution {
    pub w: Vector,
    /// Graph-membership defect of `(c − D w, w)` in `F`.
    pub residual: f64,
    pub iterations: usize,
    /// `true` when produced by enumeration.
    pub exact: bool,
}

/// Minimal-norm solution of the generalized equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi0Result {
    pub z: Vector,
    pub residual: f64,
    /// `z` was projected onto `rge(D + Dᵀ)` and still solves the equation.
    pub in_range_component: bool,
    pub iterations: usize,
}

/// Scalar piece of a coordinatewise operator, evaluated at `u + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarPiece {
    Linear { slope: f64, offset: f64 },
    Relay { gain: f64, offset: f64 },
    Interval { lo: f64, hi: f64, offset: f64 },
}

impl ScalarPiece {
    fn with_offset(self, extra: f64) -> Self {
        match self {
            ScalarPiece::Linear { slope, offset } => ScalarPiece::Linear { slope, offset: offset + extra },
            ScalarPiece::Relay { gain, offset } => ScalarPiece::Relay { gain, offset: offset + extra },
            ScalarPiece::Interval { lo, hi, offset } => ScalarPiece::Interval { lo, hi, offset: offset + extra },
        }
    }

    /// Minimal-norm `z` with `z ∈ φ(c − d z)`, `d ≥ 0`.
    pub fn solve(self, c: f64, d: f64) -> Result<f64> {
        match self {
            ScalarPiece::Linear { slope, offset } => Ok(slope * (c + offset) / (1.0 + slope * d)),
            ScalarPiece::Relay { gain, offset } => {
                let c = c + offset;
                if c > d * gain {
                    Ok(gain)
                } else if c < -d * gain {
                    Ok(-gain)
                } else if d > 0.0 {
                    Ok(c / d)
                } else {
                    Ok(0.0)
                }
            }
            ScalarPiece::Interval { lo, hi, offset } => {
                let c = c + offset;
                if c >= lo && c <= hi {
                    Ok(0.0)
                } else if d > 0.0 {
                    Ok(if c > hi { (c - hi) / d } else { (c - lo) / d })
                } else {
                    Err(Error::EmptySolutionSet(format!(
                        "{c} lies outside [{lo}, {hi}] and the coupling is zero"
                    )))
                }
            }
        }
    }
}

/// Coordinatewise description of `F_{t,s}`, if it has one.
pub fn scalar_pieces(op: &MonotoneOperator, t: f64, s: &Vector) -> Result<Option<Vec<ScalarPiece>>> {
    Ok(match op.kind() {
        OperatorKind::SignRelay { gain, mask } => Some(
            mask.iter()
                .map(|&m| {
                    if m {
                        ScalarPiece::Relay { gain: *gain, offset: 0.0 }
                    } else {
                        ScalarPiece::Linear { slope: 0.0, offset: 0.0 }
                    }
                })
                .collect(),
        ),
        OperatorKind::Linear(m) if is_diagonal(m) => Some(
            (0..m.nrows())
                .map(|i| ScalarPiece::Linear { slope: m[(i, i)], offset: 0.0 })
                .collect(),
        ),
        OperatorKind::Linear(_) => None,
        OperatorKind::NormalCone { set_map, .. } => match set_map(t, s)? {
            ConvexSet::IntervalProduct { lo, hi } => Some(
                (0..lo.len())
                    .map(|i| ScalarPiece::Interval { lo: lo[i], hi: hi[i], offset: 0.0 })
                    .collect(),
            ),
            _ => None,
        },
        OperatorKind::Shifted { base, shift } => {
            let sh = match shift {
                Shift::Scaled(a) => s * *a,
                Shift::Map(map) => map(t, s),
            };
            if sh.len() != op.dim() {
                return Err(Error::DimensionMismatch { expected: op.dim(), found: sh.len() });
            }
            scalar_pieces(base, t, s)?
                .map(|p| p.into_iter().enumerate().map(|(i, q)| q.with_offset(sh[i])).collect())
        }
        OperatorKind::Lure(_) => None,
        OperatorKind::DirectSum(blocks) => {
            let mut all = Vec::with_capacity(op.dim());
            for b in blocks {
                match scalar_pieces(b, t, s)? {
                    Some(p) => all.extend(p),
                    None => return Ok(None),
                }
            }
            Some(all)
        }
    })
}

/// Defect of `w ∈ F(c − D w)` measured through the resolvent identity with `μ = 1`.
pub fn membership_defect(f: &MonotoneOperator, t: f64, s: &Vector, d: &Matrix, rhs: &Vector, w: &Vector) -> Result<f64> {
    let u = rhs - d * w;
    let j = f.resolvent(1.0, t, s, &(&u + w))?;
    Ok((u - j).norm())
}

fn check_shapes(f: &MonotoneOperator, d: &Matrix, rhs: &Vector) -> Result<()> {
    let m = f.dim();
    for found in [d.nrows(), d.ncols(), rhs.len()] {
        if found != m {
            return Err(Error::DimensionMismatch { expected: m, found });
        }
    }
    Ok(())
}

/// `J^ρ_{F⁻¹}(u) = u − ρ J^{1/ρ}_F(u/ρ)`.
fn inverse_resolvent(f: &MonotoneOperator, rho: f64, t: f64, s: &Vector, u: &Vector) -> Result<Vector> {
    Ok(u - f.resolvent(1.0 / rho, t, s, &(u / rho))? * rho)
}

/// Solves `w ∈ F_{t,s}(c − D w)` for a monotone `D`.
pub fn solve_feedback(
    f: &MonotoneOperator,
    t: f64,
    s: &Vector,
    d: &Matrix,
    rhs: &Vector,
    opts: &FeedbackOptions,
) -> Result<FeedbackSolution> {
    check_shapes(f, d, rhs)?;
    let use_enum = match opts.method {
        Phi0Method::ForwardBackward => false,
        Phi0Method::Enumeration => true,
        Phi0Method::Auto => is_diagonal(d) && scalar_pieces(f, t, s)?.is_some(),
    };
    if use_enum {
        enumerate(f, t, s, d, rhs)
    } else {
        splitting(f, t, s, d, rhs, opts)
    }
}

fn enumerate(f: &MonotoneOperator, t: f64, s: &Vector, d: &Matrix, rhs: &Vector) -> Result<FeedbackSolution> {
    if !is_diagonal(d) {
        return Err(Error::Unsupported("enumeration needs a diagonal coupling matrix".into()));
    }
    let pieces = scalar_pieces(f, t, s)?
        .ok_or_else(|| Error::Unsupported("enumeration needs a coordinatewise feedback operator".into()))?;
    let mut w = Vector::zeros(rhs.len());
    for (i, p) in pieces.iter().enumerate() {
        w[i] = p.solve(rhs[i], d[(i, i)])?;
    }
    let residual = membership_defect(f, t, s, d, rhs, &w)?;
    Ok(FeedbackSolution {
        w,
        residual,
        iterations: 0,
        exact: true,
    })
}

fn splitting(
    f: &MonotoneOperator,
    t: f64,
    s: &Vector,
    d: &Matrix,
    rhs: &Vector,
    opts: &FeedbackOptions,
) -> Result<FeedbackSolution> {
    let norm = spectral_norm(d);
    let symmetric = (d - d.transpose()).amax() <= 1e-14 * norm.max(1.0);
    let m = rhs.len();
    let mut w = Vector::zeros(m);
    let mut best = f64::INFINITY;
    if symmetric {
        // forward–backward; D is (1/λmax)-cocoercive
        let lmax = sym_eigen(d).eigenvalues.max();
        let rho = opts.step.unwrap_or(if lmax > 0.0 { 1.0 / lmax } else { 1.0 });
        for k in 1..=opts.max_iter {
            let next = inverse_resolvent(f, rho, t, s, &(&w - (d * &w - rhs) * rho))?;
            let step = (&next - &w).norm();
            w = next;
            if !w.iter().all(|v| v.is_finite()) || w.norm() > 1e12 {
                return Err(Error::EmptySolutionSet("splitting iterates diverge".into()));
            }
            if step <= opts.tol * (1.0 + w.norm()) {
                let residual = membership_defect(f, t, s, d, rhs, &w)?;
                best = best.min(residual);
                if residual <= opts.accept_tol {
                    return Ok(FeedbackSolution { w, residual, iterations: k, exact: false });
                }
            }
        }
    } else {
        // forward–backward–forward for a monotone, non-cocoercive linear part
        let rho = opts.step.unwrap_or(0.9 / norm);
        for k in 1..=opts.max_iter {
            let dw = d * &w;
            let p = inverse_resolvent(f, rho, t, s, &(&w - (&dw - rhs) * rho))?;
            let next = &p - (d * &p - dw) * rho;
            let step = (&next - &w).norm();
            w = next;
            if !w.iter().all(|v| v.is_finite()) || w.norm() > 1e12 {
                return Err(Error::EmptySolutionSet("splitting iterates diverge".into()));
            }
            if step <= opts.tol * (1.0 + w.norm()) {
                let residual = membership_defect(f, t, s, d, rhs, &w)?;
                best = best.min(residual);
                if residual <= opts.accept_tol {
                    return Ok(FeedbackSolution { w, residual, iterations: k, exact: false });
                }
            }
        }
    }
    if !best.is_finite() {
        best = membership_defect(f, t, s, d, rhs, &w)?;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: best,
    })
}

/// Minimal-norm solution: any solution projected onto `rge(D + Dᵀ)`, re-verified.
pub fn minimal_norm_solution(
    f: &MonotoneOperator,
    t: f64,
    s: &Vector,
    d: &Matrix,
    rhs: &Vector,
    opts: &FeedbackOptions,
) -> Result<Phi0Result> {
    let sol = solve_feedback(f, t, s, d, rhs, opts)?;
    let proj = range_projector(&(d + d.transpose()));
    let zp = &proj * &sol.w;
    let rp = membership_defect(f, t, s, d, rhs, &zp)?;
    if rp <= opts.accept_tol.max(sol.residual) {
        Ok(Phi0Result {
            z: zp,
            residual: rp,
            in_range_component: true,
            iterations: sol.iterations,
        })
    } else {
        Ok(Phi0Result {
            z: sol.w,
            residual: sol.residual,
            in_range_component: false,
            iterations: sol.iterations,
        })
    }
}
