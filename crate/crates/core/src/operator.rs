//! Parameterised maximal monotone operators `A_{t,s}` and their resolvents.
//!
//! An operator is evaluated at a time `t` and a state parameter `s` (the lagged state in
//! the catching-up scheme). Every variant has a closed-form resolvent except the Lur'e
//! composition, which solves a generalized equation iteratively.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, invalid, Error, Result};
use crate::feedback::{self, FeedbackOptions};
use crate::linalg::{is_identity, is_monotone_matrix, is_zero, spectral_norm, Matrix, Vector};
use crate::sets::ConvexSet;

/// Default membership tolerance (Euclidean norm).
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Moving set `(t, s) ↦ C(t, s)`.
pub type SetMap = Arc<dyn Fn(f64, &Vector) -> Result<ConvexSet> + Send + Sync>;
/// Argument shift `(t, s) ↦ σ(t, s)`.
pub type ShiftMap = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;

/// A point of the graph: `image ∈ A(base)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPoint {
    pub base: Vector,
    pub image: Vector,
}

impl GraphPoint {
    pub fn new(base: Vector, image: Vector) -> Self {
        GraphPoint { base, image }
    }
}

/// Description of the value `A(x)` of an operator at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueSet {
    /// Interval product, exact. Entries may be infinite.
    Box { lo: Vector, hi: Vector },
    /// `anchor + cone(rays)`, exact.
    Cone { anchor: Vector, rays: Vec<Vector> },
    /// Finite subset; the first point is the anchor (a minimal-norm selection when known).
    Sampled(Vec<Vector>),
}

impl ValueSet {
    pub fn singleton(v: Vector) -> Self {
        ValueSet::Box { lo: v.clone(), hi: v }
    }

    pub fn dim(&self) -> usize {
        match self {
            ValueSet::Box { lo, .. } => lo.len(),
            ValueSet::Cone { anchor, .. } => anchor.len(),
            ValueSet::Sampled(p) => p.first().map_or(0, |v| v.len()),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, ValueSet::Sampled(_))
    }

    pub fn is_singleton(&self) -> bool {
        match self {
            ValueSet::Box { lo, hi } => lo == hi,
            ValueSet::Cone { rays, .. } => rays.iter().all(|r| r.iter().all(|&v| v == 0.0)),
            ValueSet::Sampled(p) => p.len() == 1,
        }
    }

    /// A representative element: the minimal-norm point of a box, the anchor otherwise.
    pub fn anchor(&self) -> Vector {
        match self {
            ValueSet::Box { lo, hi } => {
                Vector::from_fn(lo.len(), |i, _| 0.0_f64.max(lo[i]).min(hi[i]))
            }
            ValueSet::Cone { anchor, .. } => anchor.clone(),
            ValueSet::Sampled(p) => p[0].clone(),
        }
    }

    /// `v − S` for the value set `S`.
    pub fn reflect_from(&self, v: &Vector) -> ValueSet {
        match self {
            ValueSet::Box { lo, hi } => ValueSet::Box { lo: v - hi, hi: v - lo },
            ValueSet::Cone { anchor, rays } => ValueSet::Cone {
                anchor: v - anchor,
                rays: rays.iter().map(|r| -r).collect(),
            },
            ValueSet::Sampled(p) => ValueSet::Sampled(p.iter().map(|q| v - q).collect()),
        }
    }

    /// Finite sample; unbounded directions are cut at distance `radius` from the anchor.
    pub fn samples(&self, radius: f64) -> Vec<Vector> {
        match self {
            ValueSet::Box { lo, hi } => {
                let anchor = self.anchor();
                let clip = |v: f64, a: f64| v.max(a - radius).min(a + radius);
                let mut out = vec![anchor.clone()];
                for i in 0..anchor.len() {
                    for end in [lo[i], hi[i]] {
                        let mut p = anchor.clone();
                        p[i] = clip(end, anchor[i]);
                        if p != anchor {
                            out.push(p);
                        }
                    }
                }
                let low = Vector::from_fn(anchor.len(), |i, _| clip(lo[i], anchor[i]));
                let high = Vector::from_fn(anchor.len(), |i, _| clip(hi[i], anchor[i]));
                out.push(low);
                out.push(high);
                out
            }
            ValueSet::Cone { anchor, rays } => {
                let mut out = vec![anchor.clone()];
                for r in rays {
                    let n = r.norm();
                    if n == 0.0 {
                        continue;
                    }
                    for k in 1..=4 {
                        out.push(anchor + r * (radius * k as f64 / (4.0 * n)));
                    }
                }
                if rays.len() > 1 {
                    let sum: Vector = rays.iter().fold(Vector::zeros(anchor.len()), |acc, r| acc + r);
                    let n = sum.norm();
                    if n > 0.0 {
                        out.push(anchor + sum * (radius / n));
                    }
                }
                out
            }
            ValueSet::Sampled(p) => p.clone(),
        }
    }

    fn direct_sum(parts: Vec<ValueSet>, radius: f64) -> ValueSet {
        if parts.iter().all(|p| matches!(p, ValueSet::Box { .. })) {
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for p in &parts {
                if let ValueSet::Box { lo: l, hi: h } = p {
                    lo.extend(l.iter());
                    hi.extend(h.iter());
                }
            }
            return ValueSet::Box {
                lo: Vector::from_vec(lo),
                hi: Vector::from_vec(hi),
            };
        }
        let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
        let total: usize = dims.iter().sum();
        let anchor = Vector::from_iterator(total, parts.iter().flat_map(|p| p.anchor().iter().cloned().collect::<Vec<_>>()));
        let cone_like = parts.iter().all(|p| match p {
            ValueSet::Cone { .. } => true,
            ValueSet::Box { .. } => p.is_singleton(),
            ValueSet::Sampled(_) => false,
        });
        let mut offset = 0;
        if cone_like {
            let mut rays = Vec::new();
            for (p, &d) in parts.iter().zip(&dims) {
                if let ValueSet::Cone { rays: rs, .. } = p {
                    for r in rs {
                        let mut full = Vector::zeros(total);
                        full.rows_mut(offset, d).copy_from(r);
                        rays.push(full);
                    }
                }
                offset += d;
            }
            return ValueSet::Cone { anchor, rays };
        }
        let mut pts = vec![anchor.clone()];
        for (p, &d) in parts.iter().zip(&dims) {
            for s in p.samples(radius).into_iter().skip(1) {
                let mut full = anchor.clone();
                full.rows_mut(offset, d).copy_from(&s);
                pts.push(full);
            }
            offset += d;
        }
        ValueSet::Sampled(pts)
    }
}

/// Argument shift of a [`OperatorKind::Shifted`] operator.
#[derive(Clone)]
pub enum Shift {
    /// `A_{t,s}(y) = B_{t,s}(y + α s)` with `α > −1`.
    Scaled(f64),
    /// `A_{t,s}(y) = B_{t,s}(y + σ(t, s))`.
    Map(ShiftMap),
}

/// Data of the Lur'e composition `x ↦ Cᵀ(F⁻¹ + D)⁻¹ C x`.
#[derive(Clone)]
pub struct LureComposition {
    pub feedback: MonotoneOperator,
    pub c: Matrix,
    pub d: Matrix,
    pub options: FeedbackOptions,
}

#[derive(Clone)]
pub enum OperatorKind {
    NormalCone { dim: usize, set_map: SetMap },
    /// `γ Sign` on masked coordinates, zero elsewhere.
    SignRelay { gain: f64, mask: Vec<bool> },
    Linear(Matrix),
    Shifted { base: Box<MonotoneOperator>, shift: Shift },
    Lure(Box<LureComposition>),
    /// Block-diagonal combination; each block sees the full state parameter.
    DirectSum(Vec<MonotoneOperator>),
}

/// A `(t, s)`-indexed maximal monotone operator with its growth and continuity constants.
#[derive(Clone)]
pub struct MonotoneOperator {
    kind: OperatorKind,
    dim: usize,
    c_a: f64,
    l1: f64,
    l2: f64,
    tol: f64,
}

impl fmt::Debug for MonotoneOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            OperatorKind::NormalCone { .. } => "normal_cone".to_string(),
            OperatorKind::SignRelay { gain, .. } => format!("sign_relay(γ={gain})"),
            OperatorKind::Linear(_) => "linear".to_string(),
            OperatorKind::Shifted { base, .. } => format!("shifted({base:?})"),
            OperatorKind::Lure(l) => format!("lure({:?})", l.feedback),
            OperatorKind::DirectSum(b) => format!("direct_sum({b:?})"),
        };
        f.debug_struct("MonotoneOperator")
            .field("kind", &kind)
            .field("dim", &self.dim)
            .field("c_a", &self.c_a)
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .finish()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid("lambda", format!("must be positive and finite, got {lambda}")))
    }
}

impl MonotoneOperator {
    fn from_kind(kind: OperatorKind, dim: usize, c_a: f64) -> Self {
        MonotoneOperator {
            kind,
            dim,
            c_a,
            l1: 0.0,
            l2: 0.0,
            tol: MEMBERSHIP_TOL,
        }
    }

    /// Normal cone of a moving set.
    pub fn normal_cone(dim: usize, set_map: SetMap) -> Self {
        Self::from_kind(OperatorKind::NormalCone { dim, set_map }, dim, 0.0)
    }

    /// Normal cone of a fixed set.
    pub fn normal_cone_fixed(set: ConvexSet) -> Self {
        let dim = set.dim();
        Self::normal_cone(dim, Arc::new(move |_, _| Ok(set.clone())))
    }

    pub fn sign_relay(gain: f64, mask: Vec<bool>) -> Result<Self> {
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(invalid("gain", format!("must be positive, got {gain}")));
        }
        if mask.is_empty() {
            return Err(invalid("mask", "must be nonempty"));
        }
        let dim = mask.len();
        Ok(Self::from_kind(OperatorKind::SignRelay { gain, mask }, dim, gain))
    }

    /// `γ Sign` on every coordinate of `ℝⁿ`.
    pub fn sign(gain: f64, dim: usize) -> Result<Self> {
        Self::sign_relay(gain, vec![true; dim])
    }

    /// `x ↦ M x` with `M + Mᵀ` positive semidefinite.
    pub fn linear(m: Matrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(invalid("matrix", "must be square and nonempty"));
        }
        if !is_monotone_matrix(&m) {
            return Err(invalid("matrix", "symmetric part is not positive semidefinite"));
        }
        let dim = m.nrows();
        let c_a = spectral_norm(&m);
        Ok(Self::from_kind(OperatorKind::Linear(m), dim, c_a))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_kind(OperatorKind::Linear(Matrix::zeros(dim, dim)), dim, 0.0)
    }

    /// `A_{t,s}(y) = B_{t,s}(y + α s)`.
    pub fn shifted(base: MonotoneOperator, alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(invalid("alpha", format!("must exceed -1, got {alpha}")));
        }
        let dim = base.dim;
        let c_a = base.c_a * alpha.abs().max(1.0);
        let mut op = Self::from_kind(
            OperatorKind::Shifted {
                base: Box::new(base),
                shift: Shift::Scaled(alpha),
            },
            dim,
            c_a,
        );
        if let OperatorKind::Shifted { base, .. } = &op.kind {
            op.l1 = base.l1;
            op.l2 = base.l2;
        }
        Ok(op)
    }

    /// `A_{t,s}(y) = B_{t,s}(y + σ(t, s))` for an arbitrary shift map.
    pub fn shifted_by(base: MonotoneOperator, shift: ShiftMap) -> Self {
        let dim = base.dim;
        let c_a = base.c_a;
        Self::from_kind(
            OperatorKind::Shifted {
                base: Box::new(base),
                shift: Shift::Map(shift),
            },
            dim,
            c_a,
        )
    }

    /// `x ↦ Cᵀ(F⁻¹ + D)⁻¹ C x` with `C` of size `m × n` and `D` positive semidefinite.
    ///
    /// With `C = I` and `D = 0` the composition is `F` itself and `F` is returned unchanged.
    pub fn lure_composed(feedback: MonotoneOperator, c: Matrix, d: Matrix, options: FeedbackOptions) -> Result<Self> {
        let m = feedback.dim;
        check_dim(m, c.nrows())?;
        if d.nrows() != m || d.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: d.nrows().max(d.ncols()),
            });
        }
        if !is_monotone_matrix(&d) {
            return Err(invalid("D", "must be positive semidefinite"));
        }
        if is_identity(&c) && is_zero(&d) {
            return Ok(feedback);
        }
        let dim = c.ncols();
        let (l1, l2) = (feedback.l1, feedback.l2);
        let mut op = Self::from_kind(
            OperatorKind::Lure(Box::new(LureComposition {
                feedback,
                c,
                d,
                options,
            })),
            dim,
            0.0,
        );
        op.l1 = l1;
        op.l2 = l2;
        Ok(op)
    }

    pub fn direct_sum(blocks: Vec<MonotoneOperator>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(invalid("blocks", "direct sum needs at least one block"));
        }
        let dim = blocks.iter().map(|b| b.dim).sum();
        let c_a = blocks.iter().map(|b| b.c_a).sum();
        let l1 = blocks.iter().map(|b| b.l1).sum();
        let l2 = blocks.iter().map(|b| b.l2).fold(0.0, f64::max);
        let mut op = Self::from_kind(OperatorKind::DirectSum(blocks), dim, c_a);
        op.l1 = l1;
        op.l2 = l2;
        Ok(op)
    }

    /// Declares growth and `dis`-continuity constants.
    pub fn with_constants(mut self, c_a: f64, l1: f64, l2: f64) -> Result<Self> {
        if !(c_a >= 0.0) || !(l1 >= 0.0) || !(0.0..1.0).contains(&l2) {
            return Err(invalid(
                "constants",
                format!("need c_A ≥ 0, L1 ≥ 0, 0 ≤ L2 < 1; got ({c_a}, {l1}, {l2})"),
            ));
        }
        self.c_a = c_a;
        self.l1 = l1;
        self.l2 = l2;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn c_a(&self) -> f64 {
        self.c_a
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    fn shift_vector(shift: &Shift, t: f64, s: &Vector, dim: usize) -> Result<Vector> {
        let v = match shift {
            Shift::Scaled(alpha) => s * *alpha,
            Shift::Map(map) => map(t, s),
        };
        check_dim(dim, v.len())?;
        Ok(v)
    }

    /// `J^λ(y) = (I + λ A_{t,s})⁻¹ y`.
    pub fn resolvent(&self, lambda: f64, t: f64, s: &Vector, y: &Vector) -> Result<Vector> {
        check_lambda(lambda)?;
        check_dim(self.dim, y.len())?;
        match &self.kind {
            OperatorKind::NormalCone { dim, set_map } => {
                let set = set_map(t, s)?;
                check_dim(*dim, set.dim())?;
                set.project(y)
            }
            OperatorKind::SignRelay { gain, mask } => Ok(Vector::from_fn(y.len(), |i, _| {
                if mask[i] {
                    soft_threshold(y[i], lambda * gain)
                } else {
                    y[i]
                }
            })),
            OperatorKind::Linear(m) => {
                let a = Matrix::identity(self.dim, self.dim) + m * lambda;
                a.lu()
                    .solve(y)
                    .ok_or_else(|| Error::Unsupported("singular linear resolvent".into()))
            }
            OperatorKind::Shifted { base, shift } => {
                let sh = Self::shift_vector(shift, t, s, self.dim)?;
                Ok(base.resolvent(lambda, t, s, &(y + &sh))? - sh)
            }
            OperatorKind::Lure(l) => {
                let dp = &l.d + &l.c * l.c.transpose() * lambda;
                let rhs = &l.c * y;
                let sol = feedback::solve_feedback(&l.feedback, t, s, &dp, &rhs, &l.options)?;
                Ok(y - l.c.transpose() * sol.w * lambda)
            }
            OperatorKind::DirectSum(blocks) => {
                let mut out = Vector::zeros(self.dim);
                let mut off = 0;
                for b in blocks {
                    let yb = y.rows(off, b.dim).into_owned();
                    out.rows_mut(off, b.dim).copy_from(&b.resolvent(lambda, t, s, &yb)?);
                    off += b.dim;
                }
                Ok(out)
            }
        }
    }

    /// `F^λ(y) = (y − J^λ y)/λ`.
    pub fn yosida(&self, lambda: f64, t: f64, s: &Vector, y: &Vector) -> Result<Vector> {
        let j = self.resolvent(lambda, t, s, y)?;
        Ok((y - j) / lambda)
    }

    /// Domain test at tolerance `self.tolerance()`.
    pub fn in_domain(&self, t: f64, s: &Vector, x: &Vector) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            OperatorKind::NormalCone { set_map, .. } => set_map(t, s)?.contains(x, self.tol),
            OperatorKind::SignRelay { .. } | OperatorKind::Linear(_) => Ok(true),
            OperatorKind::Shifted { base, shift } => {
                let sh = Self::shift_vector(shift, t, s, self.dim)?;
                base.in_domain(t, s, &(x + sh))
            }
            OperatorKind::Lure(l) => {
                let rhs = &l.c * x;
                match feedback::solve_feedback(&l.feedback, t, s, &l.d, &rhs, &l.options) {
                    Ok(sol) => Ok(sol.residual <= self.tol),
                    Err(Error::EmptySolutionSet(_)) | Err(Error::NoConvergence { .. }) => Ok(false),
                    Err(e) => Err(e),
                }
            }
            OperatorKind::DirectSum(blocks) => {
                let mut off = 0;
                for b in blocks {
                    if !b.in_domain(t, s, &x.rows(off, b.dim).into_owned())? {
                        return Ok(false);
                    }
                    off += b.dim;
                }
                Ok(true)
            }
        }
    }

    /// Minimal-norm element `A⁰_{t,s}(x)`. For the Lur'e composition this is `CᵀΦ⁰`.
    pub fn minimal_norm(&self, t: f64, s: &Vector, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            OperatorKind::NormalCone { set_map, .. } => {
                let dist = set_map(t, s)?.distance(x)?;
                if dist > self.tol {
                    return Err(Error::OutsideDomain { distance: dist });
                }
                Ok(Vector::zeros(self.dim))
            }
            OperatorKind::SignRelay { gain, mask } => Ok(Vector::from_fn(x.len(), |i, _| {
                if mask[i] && x[i] != 0.0 {
                    gain * x[i].signum()
                } else {
                    0.0
                }
            })),
            OperatorKind::Linear(m) => Ok(m * x),
            OperatorKind::Shifted { base, shift } => {
                let sh = Self::shift_vector(shift, t, s, self.dim)?;
                base.minimal_norm(t, s, &(x + sh))
            }
            OperatorKind::Lure(l) => {
                let rhs = &l.c * x;
                let res = feedback::minimal_norm_solution(&l.feedback, t, s, &l.d, &rhs, &l.options)?;
                Ok(l.c.transpose() * res.z)
            }
            OperatorKind::DirectSum(blocks) => {
                let mut out = Vector::zeros(self.dim);
                let mut off = 0;
                for b in blocks {
                    let v = b.minimal_norm(t, s, &x.rows(off, b.dim).into_owned())?;
                    out.rows_mut(off, b.dim).copy_from(&v);
                    off += b.dim;
                }
                Ok(out)
            }
        }
    }

    /// Description of `A_{t,s}(x)`. Unbounded parts of sampled descriptions are cut at `radius`.
    pub fn value_set(&self, t: f64, s: &Vector, x: &Vector, radius: f64) -> Result<ValueSet> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            OperatorKind::NormalCone { set_map, .. } => set_map(t, s)?.normal_cone(x, self.tol),
            OperatorKind::SignRelay { gain, mask } => {
                let mut lo = Vector::zeros(self.dim);
                let mut hi = Vector::zeros(self.dim);
                for i in 0..self.dim {
                    if !mask[i] {
                        continue;
                    }
                    if x[i] == 0.0 {
                        lo[i] = -gain;
                        hi[i] = *gain;
                    } else {
                        lo[i] = gain * x[i].signum();
                        hi[i] = lo[i];
                    }
                }
                Ok(ValueSet::Box { lo, hi })
            }
            OperatorKind::Linear(m) => Ok(ValueSet::singleton(m * x)),
            OperatorKind::Shifted { base, shift } => {
                let sh = Self::shift_vector(shift, t, s, self.dim)?;
                base.value_set(t, s, &(x + sh), radius)
            }
            OperatorKind::Lure(_) => Ok(ValueSet::Sampled(vec![self.minimal_norm(t, s, x)?])),
            OperatorKind::DirectSum(blocks) => {
                let mut parts = Vec::with_capacity(blocks.len());
                let mut off = 0;
                for b in blocks {
                    parts.push(b.value_set(t, s, &x.rows(off, b.dim).into_owned(), radius)?);
                    off += b.dim;
                }
                Ok(ValueSet::direct_sum(parts, radius))
            }
        }
    }

    /// `‖base − J^λ(base + λ·image)‖`, zero iff `image ∈ A(base)`.
    pub fn graph_membership_residual(&self, t: f64, s: &Vector, pt: &GraphPoint, lambda: f64) -> Result<f64> {
        check_dim(self.dim, pt.base.len())?;
        check_dim(self.dim, pt.image.len())?;
        let j = self.resolvent(lambda, t, s, &(&pt.base + &pt.image * lambda))?;
        Ok((&pt.base - j).norm())
    }

    /// The graph point `(J^λ y, F^λ y)`.
    pub fn graph_point(&self, lambda: f64, t: f64, s: &Vector, y: &Vector) -> Result<GraphPoint> {
        let j = self.resolvent(lambda, t, s, y)?;
        let image = (y - &j) / lambda;
        Ok(GraphPoint { base: j, image })
    }
}

/// Free-function form of [`ConvexSet::project`].
pub fn project(set: &ConvexSet, y: &Vector) -> Result<Vector> {
    set.project(y)
}

/// Free-function form of [`MonotoneOperator::shifted`].
pub fn shift_operator(base: MonotoneOperator, alpha: f64) -> Result<MonotoneOperator> {
    MonotoneOperator::shifted(base, alpha)
}

/// `sign(y)·max(|y| − τ, 0)`.
pub fn soft_threshold(y: f64, tau: f64) -> f64 {
    if y > tau {
        y - tau
    } else if y < -tau {
        y + tau
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;

    fn s0() -> Vector {
        dvector![0.0]
    }

    /// Grid minimisation of `λγ|z| + ½(z − y)²` over `[−3, 3]`.
    fn prox_abs_grid(lambda_gain: f64, y: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let n = 6_000_000;
        for k in 0..=n {
            let z = -3.0 + 6.0 * k as f64 / n as f64;
            let v = lambda_gain * z.abs() + 0.5 * (z - y) * (z - y);
            if v < best.0 {
                best = (v, z);
            }
        }
        best.1
    }

    #[test]
    fn normal_cone_resolvent_projects() {
        let op = MonotoneOperator::normal_cone_fixed(ConvexSet::interval(0.0, 1.0).unwrap());
        assert_eq!(op.resolvent(0.7, 0.0, &s0(), &dvector![5.0]).unwrap(), dvector![1.0]);
        assert_eq!(op.yosida(3.0, 0.0, &s0(), &dvector![0.5]).unwrap(), dvector![0.0]);
        assert_eq!(op.minimal_norm(0.0, &s0(), &dvector![1.0]).unwrap(), dvector![0.0]);
    }

    #[test]
    fn sign_relay_resolvent_matches_grid_oracle() {
        let op = MonotoneOperator::sign(1.0, 1).unwrap();
        let oracle = prox_abs_grid(0.5, 1.2);
        assert!((oracle - 0.7).abs() < 2e-6);
        assert_abs_diff_eq!(op.resolvent(0.5, 0.0, &s0(), &dvector![1.2]).unwrap()[0], 0.7, epsilon = 1e-15);
        let j = prox_abs_grid(0.5, 0.2);
        assert!(j.abs() < 2e-6);
        assert_abs_diff_eq!(op.yosida(0.5, 0.0, &s0(), &dvector![0.2]).unwrap()[0], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn sign_relay_minimal_norm() {
        let op = MonotoneOperator::sign(1.0, 1).unwrap();
        assert_eq!(op.minimal_norm(0.0, &s0(), &dvector![0.0]).unwrap(), dvector![0.0]);
        assert_eq!(op.minimal_norm(0.0, &s0(), &dvector![0.3]).unwrap(), dvector![1.0]);
    }

    #[test]
    fn linear_resolvent_and_yosida() {
        let op = MonotoneOperator::linear(Matrix::identity(2, 2)).unwrap();
        let y = dvector![2.0, -4.0];
        assert_abs_diff_eq!(op.resolvent(1.0, 0.0, &s0(), &y).unwrap(), dvector![1.0, -2.0], epsilon = 1e-15);
        assert_abs_diff_eq!(op.yosida(1.0, 0.0, &s0(), &y).unwrap(), dvector![1.0, -2.0], epsilon = 1e-15);
        assert!(MonotoneOperator::linear(dmatrix![-1.0, 0.0; 0.0, 1.0]).is_err());
    }

    /// Piecewise enumeration of `z + Sign(z + a) ∋ y`.
    fn shifted_sign_oracle(a: f64, y: f64) -> f64 {
        // branch w = z + a > 0: z = y − 1, needs y − 1 + a > 0
        if y - 1.0 + a > 0.0 {
            return y - 1.0;
        }
        if y + 1.0 + a < 0.0 {
            return y + 1.0;
        }
        -a
    }

    #[test]
    fn shifted_relay_resolvent() {
        let base = MonotoneOperator::sign(1.0, 1).unwrap();
        let op = shift_operator(base.clone(), 1.0).unwrap();
        let s = dvector![0.5];
        let z = op.resolvent(1.0, 0.0, &s, &dvector![0.0]).unwrap()[0];
        assert_eq!(shifted_sign_oracle(0.5, 0.0), -0.5);
        assert_abs_diff_eq!(z, -0.5, epsilon = 1e-15);
        let same = shift_operator(base.clone(), 0.0).unwrap();
        for y in [-2.0, -0.3, 0.0, 0.8, 4.0] {
            assert_eq!(
                same.resolvent(0.4, 0.0, &s, &dvector![y]).unwrap(),
                base.resolvent(0.4, 0.0, &s, &dvector![y]).unwrap()
            );
        }
        assert!(shift_operator(base, -1.0).is_err());
    }

    #[test]
    fn graph_residual_examples() {
        let op = MonotoneOperator::sign(1.0, 1).unwrap();
        let r = op
            .graph_membership_residual(0.0, &s0(), &GraphPoint::new(dvector![0.0], dvector![0.5]), 1.0)
            .unwrap();
        assert_eq!(r, 0.0);
        // J(1 − 1) = 0, so the defect is |1 − 0| = 1
        let r = op
            .graph_membership_residual(0.0, &s0(), &GraphPoint::new(dvector![1.0], dvector![-1.0]), 1.0)
            .unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
        let nc = MonotoneOperator::normal_cone_fixed(ConvexSet::interval(0.0, 1.0).unwrap());
        let r = nc
            .graph_membership_residual(0.0, &s0(), &GraphPoint::new(dvector![0.5], dvector![0.0]), 2.0)
            .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn lure_with_identity_coupling_is_the_feedback() {
        let f = MonotoneOperator::sign(1.0, 1).unwrap();
        let op = MonotoneOperator::lure_composed(f, dmatrix![1.0], dmatrix![0.0], FeedbackOptions::default()).unwrap();
        assert!(matches!(op.kind(), OperatorKind::SignRelay { .. }));
    }

    #[test]
    fn lure_resolvent_solves_inclusion() {
        let f = MonotoneOperator::sign(1.0, 1).unwrap();
        let op = MonotoneOperator::lure_composed(f, dmatrix![1.0], dmatrix![1.0], FeedbackOptions::default()).unwrap();
        // A(x) = (Sign⁻¹ + 1)⁻¹ x = sat(x)
        for y in [-3.0, -1.5, -0.2, 0.0, 0.7, 2.5] {
            let z = op.resolvent(1.0, 0.0, &s0(), &dvector![y]).unwrap()[0];
            let sat = z.clamp(-1.0, 1.0);
            assert_abs_diff_eq!(z + sat, y, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(op.minimal_norm(0.0, &s0(), &dvector![2.0]).unwrap()[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(op.minimal_norm(0.0, &s0(), &dvector![0.5]).unwrap()[0], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn direct_sum_value_set_is_a_box() {
        let nc = MonotoneOperator::normal_cone_fixed(ConvexSet::interval(-1.0, 1.0).unwrap());
        let sg = MonotoneOperator::sign(2.0, 1).unwrap();
        let op = MonotoneOperator::direct_sum(vec![nc, sg]).unwrap();
        let vs = op.value_set(0.0, &dvector![0.0, 0.0], &dvector![1.0, 0.0], 10.0).unwrap();
        assert_eq!(
            vs,
            ValueSet::Box {
                lo: dvector![0.0, -2.0],
                hi: dvector![f64::INFINITY, 2.0]
            }
        );
    }

    fn families() -> Vec<MonotoneOperator> {
        let set = ConvexSet::polytope(&[
            (dvector![1.0, 1.0], 1.0),
            (dvector![-1.0, 0.0], 0.0),
            (dvector![0.0, -1.0], 0.0),
        ])
        .unwrap();
        vec![
            MonotoneOperator::normal_cone_fixed(ConvexSet::interval_product(dvector![-1.0, 0.0], dvector![1.0, f64::INFINITY]).unwrap()),
            MonotoneOperator::normal_cone_fixed(ConvexSet::ball(dvector![0.5, 0.0], 1.0).unwrap()),
            MonotoneOperator::normal_cone_fixed(set),
            MonotoneOperator::sign_relay(1.5, vec![true, false]).unwrap(),
            MonotoneOperator::linear(dmatrix![1.0, 2.0; -2.0, 0.5]).unwrap(),
            MonotoneOperator::shifted(MonotoneOperator::sign(1.0, 2).unwrap(), 0.5).unwrap(),
            MonotoneOperator::lure_composed(
                MonotoneOperator::sign(1.0, 2).unwrap(),
                dmatrix![1.0, 0.5; 0.0, 1.0],
                dmatrix![1.0, 0.0; 0.0, 0.5],
                FeedbackOptions::default(),
            )
            .unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn resolvent_is_nonexpansive(
            y1 in proptest::collection::vec(-5.0f64..5.0, 2),
            y2 in proptest::collection::vec(-5.0f64..5.0, 2),
            lk in 0usize..4,
        ) {
            let lambda = [1e-3, 1e-1, 1.0, 10.0][lk];
            let (y1, y2) = (Vector::from_vec(y1), Vector::from_vec(y2));
            let s = dvector![0.3, -0.2];
            for op in families() {
                let j1 = op.resolvent(lambda, 0.0, &s, &y1).unwrap();
                let j2 = op.resolvent(lambda, 0.0, &s, &y2).unwrap();
                prop_assert!((&j1 - &j2).norm() <= (&y1 - &y2).norm() + 1e-9, "{:?}", op);
                let f1 = op.yosida(lambda, 0.0, &s, &y1).unwrap();
                let f2 = op.yosida(lambda, 0.0, &s, &y2).unwrap();
                prop_assert!((f1 - f2).norm() <= (&y1 - &y2).norm() / lambda + 1e-9);
            }
        }

        #[test]
        fn yosida_lies_in_the_graph(
            y in proptest::collection::vec(-5.0f64..5.0, 2),
            lk in 0usize..4,
        ) {
            let lambda = [1e-3, 1e-1, 1.0, 10.0][lk];
            let y = Vector::from_vec(y);
            let s = dvector![0.3, -0.2];
            for op in families() {
                let pt = op.graph_point(lambda, 0.0, &s, &y).unwrap();
                let r = op.graph_membership_residual(0.0, &s, &pt, 0.37).unwrap();
                prop_assert!(r <= 1e-8, "{:?} residual {}", op, r);
            }
        }

        #[test]
        fn yosida_is_dominated_by_minimal_norm(
            y in proptest::collection::vec(-5.0f64..5.0, 2),
            lk in 0usize..4,
        ) {
            let lambda = [1e-3, 1e-1, 1.0, 10.0][lk];
            let s = dvector![0.3, -0.2];
            for op in families() {
                // move y into the domain first
                let x = op.resolvent(1.0, 0.0, &s, &Vector::from_vec(y.clone())).unwrap();
                let a0 = op.minimal_norm(0.0, &s, &x).unwrap();
                let fl = op.yosida(lambda, 0.0, &s, &x).unwrap();
                prop_assert!(fl.norm() <= a0.norm() + 1e-9, "{:?}", op);
            }
        }
    }
}
