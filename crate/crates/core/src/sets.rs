//! Closed convex sets with exact projections.
//!
//! Three shapes are supported: interval products (entries may be `±∞`), Euclidean balls
//! and polytopes given by halfspaces. Polytope projections use a dual active-set
//! iteration (Goldfarb–Idnani specialised to the identity Hessian), which also detects
//! empty halfspace systems.

use itertools::Itertools;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::operator::ValueSet;

/// Largest polytope dimension accepted.
pub const MAX_POLYTOPE_DIM: usize = 8;
/// Largest number of halfspaces accepted.
pub const MAX_POLYTOPE_FACETS: usize = 32;

const MAX_VERTEX_COMBINATIONS: usize = 1_000_000;

/// Halfspace description `{x : ⟨aᵢ, x⟩ ≤ bᵢ}` with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    normals: Matrix,
    offsets: Vector,
}

impl Polytope {
    /// Rows of `normals` are the halfspace normals. Normals are rescaled to unit length;
    /// zero rows must have a nonnegative offset and are dropped.
    pub fn new(normals: Matrix, offsets: Vector) -> Result<Self> {
        check_dim(normals.nrows(), offsets.len())?;
        let dim = normals.ncols();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..normals.nrows() {
            let row = normals.row(i).transpose();
            let norm = row.norm();
            if !norm.is_finite() || !offsets[i].is_finite() {
                return Err(invalid("polytope", "halfspace data must be finite"));
            }
            if norm == 0.0 {
                if offsets[i] < 0.0 {
                    return Err(Error::InfeasiblePolytope);
                }
                continue;
            }
            rows.push(row / norm);
            rhs.push(offsets[i] / norm);
        }
        if dim == 0 || dim > MAX_POLYTOPE_DIM || rows.len() > MAX_POLYTOPE_FACETS {
            return Err(Error::PolytopeTooLarge {
                dim,
                facets: rows.len(),
            });
        }
        let normals = if rows.is_empty() {
            Matrix::zeros(0, dim)
        } else {
            Matrix::from_rows(&rows.iter().map(|r| r.transpose()).collect::<Vec<_>>())
        };
        let poly = Polytope {
            normals,
            offsets: Vector::from_vec(rhs),
        };
        // feasibility solve
        poly.project(&Vector::zeros(dim))?;
        Ok(poly)
    }

    pub fn from_halfspaces(halfspaces: &[(Vector, f64)]) -> Result<Self> {
        let dim = halfspaces
            .first()
            .map(|(a, _)| a.len())
            .ok_or_else(|| invalid("polytope", "at least one halfspace is required"))?;
        for (a, _) in halfspaces {
            check_dim(dim, a.len())?;
        }
        let normals = Matrix::from_rows(
            &halfspaces
                .iter()
                .map(|(a, _)| a.transpose())
                .collect::<Vec<_>>(),
        );
        let offsets = Vector::from_iterator(halfspaces.len(), halfspaces.iter().map(|(_, b)| *b));
        Polytope::new(normals, offsets)
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    pub fn facets(&self) -> usize {
        self.normals.nrows()
    }

    pub fn normals(&self) -> &Matrix {
        &self.normals
    }

    pub fn offsets(&self) -> &Vector {
        &self.offsets
    }

    /// Largest normalised constraint violation (≤ 0 inside).
    pub fn max_violation(&self, y: &Vector) -> f64 {
        (0..self.facets())
            .map(|i| self.normals.row(i).transpose().dot(y) - self.offsets[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn project(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.dim(), y.len())?;
        dual_active_set_projection(&self.normals, &self.offsets, y)
    }

    /// The recession cone `{d : ⟨aᵢ, d⟩ ≤ 0}` is trivial iff the projection of every
    /// `±eᵢ` onto it vanishes.
    pub fn is_bounded(&self) -> bool {
        let zero = Vector::zeros(self.facets());
        let n = self.dim();
        (0..n).all(|i| {
            [1.0, -1.0].iter().all(|&s| {
                let mut e = Vector::zeros(n);
                e[i] = s;
                dual_active_set_projection(&self.normals, &zero, &e)
                    .map(|p| p.norm() <= 1e-12)
                    .unwrap_or(false)
            })
        })
    }

    /// Vertices by enumeration of `dim`-subsets of active constraints.
    pub fn vertices(&self) -> Result<Vec<Vector>> {
        let n = self.dim();
        let m = self.facets();
        if binomial(m, n) > MAX_VERTEX_COMBINATIONS {
            return Err(Error::Unsupported(format!(
                "vertex enumeration of {m} facets in dimension {n}"
            )));
        }
        let scale = 1.0 + self.offsets.amax();
        let mut out: Vec<Vector> = Vec::new();
        for subset in (0..m).combinations(n) {
            let a = Matrix::from_fn(n, n, |r, c| self.normals[(subset[r], c)]);
            let b = Vector::from_fn(n, |r, _| self.offsets[subset[r]]);
            let lu = a.lu();
            if lu.determinant().abs() < 1e-12 {
                continue;
            }
            let Some(v) = lu.solve(&b) else { continue };
            if self.max_violation(&v) > 1e-9 * scale {
                continue;
            }
            if !out.iter().any(|w| (w - &v).norm() <= 1e-9 * scale) {
                out.push(v);
            }
        }
        Ok(out)
    }
}

fn binomial(m: usize, k: usize) -> usize {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(m - i) / (i + 1))
}

/// Projection onto `{x : A x ≤ b}` (rows of `A` of unit norm) by the dual active-set
/// method with identity Hessian. Starts from the unconstrained minimiser `y` and adds
/// violated constraints one at a time while keeping multipliers nonnegative.
fn dual_active_set_projection(a: &Matrix, b: &Vector, y: &Vector) -> Result<Vector> {
    let n = a.ncols();
    let m = a.nrows();
    let mut x = y.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let scale = 1.0 + y.amax() + if m > 0 { b.amax() } else { 0.0 };
    let feas_tol = 1e-13 * scale;
    let row = |i: usize| a.row(i).transpose();
    // slack sᵢ(x) = bᵢ − ⟨aᵢ, x⟩ ≥ 0
    let slack = |i: usize, x: &Vector| b[i] - row(i).dot(x);
    let max_iter = 50 * (m + n + 1);
    let mut iter = 0;

    loop {
        let candidate = (0..m)
            .filter(|i| !active.contains(i))
            .map(|i| (i, slack(i, &x)))
            .min_by(|p, q| p.1.total_cmp(&q.1));
        let Some((p, sp)) = candidate else {
            return Ok(x);
        };
        if sp >= -feas_tol {
            return Ok(x);
        }
        // normal of the added constraint in "≥" form
        let np = -row(p);
        let mut up = 0.0;
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: -slack(p, &x),
                });
            }
            let (z, r) = if active.is_empty() {
                (np.clone(), Vector::zeros(0))
            } else {
                let nmat = Matrix::from_columns(&active.iter().map(|&j| -row(j)).collect::<Vec<_>>());
                let gram = nmat.transpose() * &nmat;
                let rhs = nmat.transpose() * &np;
                let r = gram
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::Unsupported("degenerate active set".into()))?;
                (&np - &nmat * &r, r)
            };
            // partial step: largest step keeping active multipliers nonnegative
            let mut t1 = f64::INFINITY;
            let mut drop_k = None;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 1e-14 {
                    let ratio = mult[k] / rk;
                    if ratio < t1 {
                        t1 = ratio;
                        drop_k = Some(k);
                    }
                }
            }
            let zz = z.norm_squared();
            let t2 = if zz > 1e-24 {
                -slack(p, &x) / zz
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if t.is_infinite() {
                return Err(Error::InfeasiblePolytope);
            }
            for (k, mk) in mult.iter_mut().enumerate() {
                *mk -= t * r[k];
            }
            up += t;
            if t2.is_finite() {
                x += &z * t;
            }
            if t2 <= t1 {
                active.push(p);
                mult.push(up);
                break;
            }
            let k = drop_k.expect("finite partial step has an index");
            active.remove(k);
            mult.remove(k);
        }
    }
}

/// A nonempty closed convex set.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `∏ [loᵢ, hiᵢ]`; infinite endpoints are allowed.
    IntervalProduct { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
    Polytope(Polytope),
}

impl ConvexSet {
    pub fn interval_product(lo: Vector, hi: Vector) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(invalid("interval_product", "dimension must be positive"));
        }
        for i in 0..lo.len() {
            if lo[i].is_nan() || hi[i].is_nan() || lo[i] > hi[i] || lo[i] == f64::INFINITY || hi[i] == f64::NEG_INFINITY {
                return Err(invalid(
                    "interval_product",
                    format!("empty coordinate {i}: [{}, {}]", lo[i], hi[i]),
                ));
            }
        }
        Ok(ConvexSet::IntervalProduct { lo, hi })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::interval_product(Vector::from_element(1, lo), Vector::from_element(1, hi))
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(invalid("ball", format!("radius must be finite and ≥ 0, got {radius}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("ball", "center must be a finite nonempty vector"));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn polytope(halfspaces: &[(Vector, f64)]) -> Result<Self> {
        Ok(ConvexSet::Polytope(Polytope::from_halfspaces(halfspaces)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::IntervalProduct { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Polytope(p) => p.dim(),
        }
    }

    pub fn project(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.dim(), y.len())?;
        Ok(match self {
            ConvexSet::IntervalProduct { lo, hi } => {
                Vector::from_fn(y.len(), |i, _| clamp(y[i], lo[i], hi[i]))
            }
            ConvexSet::Ball { center, radius } => {
                let d = y - center;
                let norm = d.norm();
                if norm <= *radius {
                    y.clone()
                } else {
                    center + d * (*radius / norm)
                }
            }
            ConvexSet::Polytope(p) => p.project(y)?,
        })
    }

    pub fn distance(&self, y: &Vector) -> Result<f64> {
        Ok((y - self.project(y)?).norm())
    }

    pub fn contains(&self, y: &Vector, tol: f64) -> Result<bool> {
        check_dim(self.dim(), y.len())?;
        Ok(match self {
            ConvexSet::IntervalProduct { lo, hi } => {
                let mut d2 = 0.0;
                for i in 0..y.len() {
                    let d = (lo[i] - y[i]).max(y[i] - hi[i]).max(0.0);
                    d2 += d * d;
                }
                d2.sqrt() <= tol
            }
            _ => self.distance(y)? <= tol,
        })
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexSet::IntervalProduct { lo, hi } => {
                lo.iter().chain(hi.iter()).all(|v| v.is_finite())
            }
            ConvexSet::Ball { .. } => true,
            ConvexSet::Polytope(p) => p.is_bounded(),
        }
    }

    /// Support function `σ(d) = sup_{x ∈ K} ⟨d, x⟩`; may be `+∞`.
    pub fn support(&self, dir: &Vector) -> Result<f64> {
        check_dim(self.dim(), dir.len())?;
        Ok(match self {
            ConvexSet::IntervalProduct { lo, hi } => {
                let mut s = 0.0;
                for i in 0..dir.len() {
                    s += if dir[i] > 0.0 {
                        dir[i] * hi[i]
                    } else if dir[i] < 0.0 {
                        dir[i] * lo[i]
                    } else {
                        0.0
                    };
                }
                s
            }
            ConvexSet::Ball { center, radius } => center.dot(dir) + radius * dir.norm(),
            ConvexSet::Polytope(p) => {
                let zero = Vector::zeros(p.facets());
                let rec = dual_active_set_projection(p.normals(), &zero, dir)?;
                if rec.norm() > 1e-12 * (1.0 + dir.norm()) {
                    return Ok(f64::INFINITY);
                }
                let verts = p.vertices()?;
                if verts.is_empty() {
                    return Err(Error::Unsupported(
                        "support of a polyhedron without vertices".into(),
                    ));
                }
                verts.iter().map(|v| v.dot(dir)).fold(f64::NEG_INFINITY, f64::max)
            }
        })
    }

    /// Extreme points of a bounded polyhedral set (interval products and polytopes).
    pub fn vertices(&self) -> Result<Vec<Vector>> {
        match self {
            ConvexSet::IntervalProduct { lo, hi } => {
                if !self.is_bounded() {
                    return Err(Error::Unsupported("vertices of an unbounded box".into()));
                }
                let n = lo.len();
                if n > 20 {
                    return Err(Error::Unsupported(format!("box corners in dimension {n}")));
                }
                Ok((0..1usize << n)
                    .map(|mask| {
                        Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                    })
                    .collect())
            }
            ConvexSet::Polytope(p) => {
                if !p.is_bounded() {
                    return Err(Error::Unsupported("vertices of an unbounded polytope".into()));
                }
                p.vertices()
            }
            ConvexSet::Ball { .. } => Err(Error::Unsupported("a ball has no vertex list".into())),
        }
    }

    /// The normal cone `N(K, x)` described exactly. `x` must lie within `tol` of the set.
    pub fn normal_cone(&self, x: &Vector, tol: f64) -> Result<ValueSet> {
        let dist = self.distance(x)?;
        if dist > tol {
            return Err(Error::OutsideDomain { distance: dist });
        }
        let n = x.len();
        Ok(match self {
            ConvexSet::IntervalProduct { lo, hi } => {
                let mut nlo = Vector::zeros(n);
                let mut nhi = Vector::zeros(n);
                for i in 0..n {
                    let at_lo = (x[i] - lo[i]).abs() <= tol;
                    let at_hi = (x[i] - hi[i]).abs() <= tol;
                    if at_lo {
                        nlo[i] = f64::NEG_INFINITY;
                    }
                    if at_hi {
                        nhi[i] = f64::INFINITY;
                    }
                }
                ValueSet::Box { lo: nlo, hi: nhi }
            }
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let norm = d.norm();
                if norm < radius - tol {
                    ValueSet::singleton(Vector::zeros(n))
                } else if *radius <= tol {
                    ValueSet::Box {
                        lo: Vector::from_element(n, f64::NEG_INFINITY),
                        hi: Vector::from_element(n, f64::INFINITY),
                    }
                } else {
                    ValueSet::Cone {
                        anchor: Vector::zeros(n),
                        rays: vec![d / norm],
                    }
                }
            }
            ConvexSet::Polytope(p) => {
                let rays: Vec<Vector> = (0..p.facets())
                    .filter(|&i| (p.normals().row(i).transpose().dot(x) - p.offsets()[i]).abs() <= tol)
                    .map(|i| p.normals().row(i).transpose())
                    .collect();
                if rays.is_empty() {
                    ValueSet::singleton(Vector::zeros(n))
                } else {
                    ValueSet::Cone {
                        anchor: Vector::zeros(n),
                        rays,
                    }
                }
            }
        })
    }
}

fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simplex_like() -> ConvexSet {
        ConvexSet::polytope(&[
            (dvector![1.0, 1.0], 1.0),
            (dvector![-1.0, 0.0], 0.0),
            (dvector![0.0, -1.0], 0.0),
        ])
        .unwrap()
    }

    /// Brute-force projection onto {x1 + x2 ≤ 1, x ≥ 0}: grid search followed by a
    /// local refinement on the best face.
    fn grid_projection(y: &Vector) -> Vector {
        let steps = 2000;
        let mut best = (f64::INFINITY, dvector![0.0, 0.0]);
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let p = dvector![i as f64 / steps as f64, j as f64 / steps as f64];
                let d = (y - &p).norm();
                if d < best.0 {
                    best = (d, p);
                }
            }
        }
        let mut p = best.1;
        // refine along the diagonal face when it is active
        if (p[0] + p[1] - 1.0).abs() < 2.0 / steps as f64 {
            let s = ((y[0] - y[1] + 1.0) / 2.0).clamp(0.0, 1.0);
            p = dvector![s, 1.0 - s];
        }
        p
    }

    #[test]
    fn interval_clamps_upper_side() {
        let k = ConvexSet::interval(-1.0, 2.0).unwrap();
        assert_eq!(k.project(&dvector![3.0]).unwrap(), dvector![2.0]);
    }

    #[test]
    fn ball_projection_scales_radially() {
        let k = ConvexSet::ball(dvector![0.0, 0.0], 1.0).unwrap();
        let p = k.project(&dvector![3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p, dvector![0.6, 0.8], epsilon = 1e-15);
    }

    #[test]
    fn polytope_projection_matches_grid_oracle() {
        let k = simplex_like();
        let y = dvector![1.0, 1.0];
        let oracle = grid_projection(&y);
        assert_abs_diff_eq!(oracle, dvector![0.5, 0.5], epsilon = 1e-12);
        assert_abs_diff_eq!(k.project(&y).unwrap(), oracle, epsilon = 1e-12);
        for y in [dvector![-1.0, 3.0], dvector![2.0, -0.5], dvector![-2.0, -3.0], dvector![0.2, 0.3]] {
            let p = k.project(&y).unwrap();
            let o = grid_projection(&y);
            assert!((p - o).norm() < 1e-3, "y = {y}");
        }
    }

    #[test]
    fn infeasible_polytope_is_rejected() {
        let err = ConvexSet::polytope(&[(dvector![1.0], 0.0), (dvector![-1.0], -1.0)]).unwrap_err();
        assert_eq!(err, Error::InfeasiblePolytope);
    }

    #[test]
    fn oversized_polytope_is_rejected() {
        let hs: Vec<_> = (0..33).map(|i| (dvector![1.0, i as f64], 1.0)).collect();
        assert!(matches!(ConvexSet::polytope(&hs), Err(Error::PolytopeTooLarge { .. })));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let k = ConvexSet::interval(0.0, 1.0).unwrap();
        assert_eq!(
            k.project(&dvector![1.0, 2.0]).unwrap_err(),
            Error::DimensionMismatch { expected: 1, found: 2 }
        );
    }

    #[test]
    fn unbounded_interval_clamps_only_finite_sides() {
        let k = ConvexSet::interval_product(dvector![0.0, f64::NEG_INFINITY], dvector![f64::INFINITY, 1.0]).unwrap();
        assert_eq!(k.project(&dvector![-5.0, -7.0]).unwrap(), dvector![0.0, -7.0]);
        assert_eq!(k.project(&dvector![9.0, 3.0]).unwrap(), dvector![9.0, 1.0]);
        assert!(!k.is_bounded());
    }

    #[test]
    fn polytope_boundedness_and_vertices() {
        let k = simplex_like();
        assert!(k.is_bounded());
        let mut v = k.vertices().unwrap();
        v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        assert_eq!(v.len(), 3);
        assert_abs_diff_eq!(v[2], dvector![1.0, 0.0], epsilon = 1e-12);
        let half = ConvexSet::polytope(&[(dvector![1.0, 0.0], 1.0)]).unwrap();
        assert!(!half.is_bounded());
        assert_eq!(half.support(&dvector![0.0, 1.0]).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(k.support(&dvector![1.0, 2.0]).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_satisfies_variational_inequality() {
        let sets = vec![
            ConvexSet::interval_product(dvector![-1.0, 0.0, -2.0], dvector![1.0, 3.0, f64::INFINITY]).unwrap(),
            ConvexSet::ball(dvector![0.5, -0.5, 1.0], 1.5).unwrap(),
            ConvexSet::polytope(&[
                (dvector![1.0, 1.0, 1.0], 1.0),
                (dvector![-1.0, 0.0, 0.0], 0.0),
                (dvector![0.0, -1.0, 0.0], 0.0),
                (dvector![0.0, 0.0, -1.0], 0.0),
                (dvector![1.0, -2.0, 0.5], 0.3),
            ])
            .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for set in &sets {
            for _ in 0..50 {
                let y = Vector::from_fn(3, |_, _| rng.random_range(-4.0..4.0));
                let p = set.project(&y).unwrap();
                assert!(set.contains(&p, 1e-10).unwrap());
                assert!((set.project(&p).unwrap() - &p).norm() <= 1e-12);
                for _ in 0..1000 {
                    let z = set.project(&Vector::from_fn(3, |_, _| rng.random_range(-6.0..6.0))).unwrap();
                    assert!((&y - &p).dot(&(z - &p)) <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn normal_cone_descriptions() {
        let k = ConvexSet::interval(0.0, 1.0).unwrap();
        match k.normal_cone(&dvector![1.0], 1e-12).unwrap() {
            ValueSet::Box { lo, hi } => {
                assert_eq!(lo[0], 0.0);
                assert_eq!(hi[0], f64::INFINITY);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(k.normal_cone(&dvector![3.0], 1e-12), Err(Error::OutsideDomain { .. })));
    }
}
