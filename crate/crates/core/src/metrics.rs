//! Distances between sets and operators, the resolvent gap bound and Gronwall bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::Vector;
use crate::operator::{GraphPoint, MonotoneOperator};
use crate::sets::ConvexSet;

/// Certified lower bound on the pseudo-distance `dis(F₁, F₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisEstimate {
    pub lower_bound: f64,
    /// Number of graph-point pairs evaluated.
    pub samples_used: usize,
    /// Best pair `(z₁, η₁) ∈ F₁`, `(z₂, η₂) ∈ F₂`.
    pub witness: (GraphPoint, GraphPoint),
    /// Value of the quotient at the witness (may be negative before clipping).
    pub witness_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisOptions {
    /// Half-width of the sampling box for resolvent arguments.
    pub radius: f64,
    pub lambdas: Vec<f64>,
    pub seed: u64,
    /// Quotients at or below this value are reported as a zero lower bound.
    pub noise_floor: f64,
}

impl Default for DisOptions {
    fn default() -> Self {
        DisOptions {
            radius: 10.0,
            lambdas: vec![1e-3, 1e-2, 1e-1, 1.0],
            seed: 0,
            noise_floor: 1e-10,
        }
    }
}

/// `d_H(K₁, K₂)`.
///
/// Interval products are handled exactly (unbounded sides must coincide), balls by the
/// radial formula, and bounded polyhedral sets by vertex enumeration.
pub fn hausdorff(s1: &ConvexSet, s2: &ConvexSet) -> Result<f64> {
    check_dim(s1.dim(), s2.dim())?;
    match (s1, s2) {
        (ConvexSet::IntervalProduct { lo: l1, hi: h1 }, ConvexSet::IntervalProduct { lo: l2, hi: h2 }) => {
            for i in 0..l1.len() {
                if l1[i].is_finite() != l2[i].is_finite() || h1[i].is_finite() != h2[i].is_finite() {
                    return Err(Error::Unsupported(format!(
                        "Hausdorff distance is infinite: unbounded directions differ in coordinate {i}"
                    )));
                }
            }
            let excess = |la: &Vector, ha: &Vector, lb: &Vector, hb: &Vector| {
                let mut sum = 0.0;
                for i in 0..la.len() {
                    let d = [la[i], ha[i]]
                        .iter()
                        .filter(|v| v.is_finite())
                        .map(|&v| (lb[i] - v).max(v - hb[i]).max(0.0))
                        .fold(0.0, f64::max);
                    sum += d * d;
                }
                sum.sqrt()
            };
            Ok(excess(l1, h1, l2, h2).max(excess(l2, h2, l1, h1)))
        }
        (ConvexSet::Ball { center: c1, radius: r1 }, ConvexSet::Ball { center: c2, radius: r2 }) => {
            Ok((c1 - c2).norm() + (r1 - r2).abs())
        }
        _ => {
            if s1.is_bounded() != s2.is_bounded() {
                return Err(invalid("hausdorff", "mixed bounded and unbounded sets"));
            }
            if !s1.is_bounded() {
                return Err(Error::Unsupported("Hausdorff distance of unbounded polytopes".into()));
            }
            Ok(excess_by_vertices(s1, s2)?.max(excess_by_vertices(s2, s1)?))
        }
    }
}

fn excess_by_vertices(a: &ConvexSet, b: &ConvexSet) -> Result<f64> {
    let verts = a.vertices()?;
    let mut best = 0.0_f64;
    for v in &verts {
        best = best.max(b.distance(v)?);
    }
    Ok(best)
}

/// The quotient inside the definition of `dis`.
pub fn dis_quotient(p1: &GraphPoint, p2: &GraphPoint) -> f64 {
    let num = (&p1.image - &p2.image).dot(&(&p2.base - &p1.base));
    num / (1.0 + p1.image.norm() + p2.image.norm())
}

/// Sampled lower bound on `dis(A, B)` with `A = op1` at `(t1, s1)` and `B = op2` at `(t2, s2)`.
///
/// Graph points are drawn as `(J^λ w, F^λ w)` with `w` uniform in a box and `λ` from a
/// fixed list. The first `n = ⌊√budget⌋` points are paired exhaustively, so the estimate is
/// nondecreasing in the budget for a fixed seed.
pub fn dis_estimate(
    op1: &MonotoneOperator,
    op2: &MonotoneOperator,
    (t1, s1): (f64, &Vector),
    (t2, s2): (f64, &Vector),
    budget: usize,
    opts: &DisOptions,
) -> Result<DisEstimate> {
    check_dim(op1.dim(), op2.dim())?;
    if budget == 0 {
        return Err(invalid("budget", "must be at least 1"));
    }
    if opts.lambdas.is_empty() || opts.lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(invalid("lambdas", "need a nonempty list of positive steps"));
    }
    let n = ((budget as f64).sqrt().floor() as usize).max(1);
    let dim = op1.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut g1 = Vec::with_capacity(n);
    let mut g2 = Vec::with_capacity(n);
    for _ in 0..n {
        let w = Vector::from_fn(dim, |_, _| rng.random_range(-opts.radius..=opts.radius));
        let lambda = opts.lambdas[rng.random_range(0..opts.lambdas.len())];
        g1.push(op1.graph_point(lambda, t1, s1, &w)?);
        g2.push(op2.graph_point(lambda, t2, s2, &w)?);
    }
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, p1) in g1.iter().enumerate() {
        for (j, p2) in g2.iter().enumerate() {
            let q = dis_quotient(p1, p2);
            if q > best.0 {
                best = (q, i, j);
            }
        }
    }
    Ok(DisEstimate {
        lower_bound: if best.0 > opts.noise_floor { best.0 } else { 0.0 },
        samples_used: n * n,
        witness: (g1[best.1].clone(), g2[best.2].clone()),
        witness_value: best.0,
    })
}

/// `λ(1 + (4δ+1)‖F₁⁰x‖)/(4δ) + (1+δ)·dis`.
pub fn resolvent_gap_bound(lambda: f64, delta: f64, f0norm: f64, dis: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(delta > 0.0) || !(f0norm >= 0.0) || !(dis >= 0.0) {
        return Err(invalid(
            "resolvent_gap_bound",
            format!("need λ, δ > 0 and ‖F⁰x‖, dis ≥ 0; got ({lambda}, {delta}, {f0norm}, {dis})"),
        ));
    }
    Ok(lambda * (1.0 + (4.0 * delta + 1.0) * f0norm) / (4.0 * delta) + (1.0 + delta) * dis)
}

/// `α·exp(Σ_{k<n} βₖ)` for `n = 0, …, len(β)`.
pub fn discrete_gronwall_bound(alpha: f64, betas: &[f64]) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    if betas.iter().any(|&b| !(b >= 0.0)) {
        return Err(invalid("betas", "must be nonnegative"));
    }
    let mut out = Vec::with_capacity(betas.len() + 1);
    let mut sum = 0.0;
    out.push(alpha);
    for b in betas {
        sum += b;
        out.push(alpha * sum.exp());
    }
    Ok(out)
}

/// Right-hand side `w₀^{1−α} e^{∫₀ᵗa} + ∫₀ᵗ e^{∫ₛᵗa} b(s) ds` on a grid, trapezoid rule.
pub fn continuous_gronwall_bound(
    w0: f64,
    a: impl Fn(f64) -> f64,
    b: impl Fn(f64) -> f64,
    alpha_exp: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    if !(w0 >= 0.0) {
        return Err(invalid("w0", "must be nonnegative"));
    }
    if !(0.0..1.0).contains(&alpha_exp) {
        return Err(invalid("alpha", format!("must lie in [0, 1), got {alpha_exp}")));
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid", "must be nonempty and strictly increasing"));
    }
    let bs: Vec<f64> = grid.iter().map(|&t| b(t)).collect();
    if bs.iter().any(|&v| !(v >= 0.0)) {
        return Err(invalid("b", "must be nonnegative on the grid"));
    }
    let av: Vec<f64> = grid.iter().map(|&t| a(t)).collect();
    // A(t) = ∫₀ᵗ a and I(t) = ∫₀ᵗ e^{−A} b, both cumulative trapezoids
    let mut cum_a = 0.0;
    let mut cum_i = 0.0;
    let start = w0.powf(1.0 - alpha_exp);
    let mut out = Vec::with_capacity(grid.len());
    out.push(start);
    for k in 1..grid.len() {
        let dt = grid[k] - grid[k - 1];
        let prev_a = cum_a;
        cum_a += 0.5 * dt * (av[k] + av[k - 1]);
        cum_i += 0.5 * dt * ((-prev_a).exp() * bs[k - 1] + (-cum_a).exp() * bs[k]);
        out.push(cum_a.exp() * (start + cum_i));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> ConvexSet {
        ConvexSet::interval(lo, hi).unwrap()
    }

    /// One-sided excess by dense sampling of the first set.
    fn sampled_hausdorff(a: &ConvexSet, b: &ConvexSet, pts: &[Vector], qts: &[Vector]) -> f64 {
        let e1 = pts.iter().map(|p| b.distance(p).unwrap()).fold(0.0, f64::max);
        let e2 = qts.iter().map(|q| a.distance(q).unwrap()).fold(0.0, f64::max);
        e1.max(e2)
    }

    #[test]
    fn hausdorff_intervals() {
        assert_eq!(hausdorff(&iv(0.0, 1.0), &iv(0.0, 1.0)).unwrap(), 0.0);
        let endpoint_oracle = f64::max(iv(0.5, 2.0).distance(&dvector![0.0]).unwrap(), iv(0.0, 1.0).distance(&dvector![2.0]).unwrap());
        assert_eq!(endpoint_oracle, 1.0);
        assert_eq!(hausdorff(&iv(0.0, 1.0), &iv(0.5, 2.0)).unwrap(), 1.0);
    }

    #[test]
    fn hausdorff_balls_against_boundary_sampling() {
        let b1 = ConvexSet::ball(dvector![0.0, 0.0], 1.0).unwrap();
        let b2 = ConvexSet::ball(dvector![0.0, 0.0], 2.0).unwrap();
        let circle = |r: f64| (0..720).map(|k| {
            let a = k as f64 * std::f64::consts::PI / 360.0;
            dvector![r * a.cos(), r * a.sin()]
        }).collect::<Vec<_>>();
        let sampled = sampled_hausdorff(&b1, &b2, &circle(1.0), &circle(2.0));
        assert_abs_diff_eq!(sampled, 1.0, epsilon = 1e-12);
        assert_eq!(hausdorff(&b1, &b2).unwrap(), 1.0);
    }

    #[test]
    fn hausdorff_polytope_against_box() {
        let square = ConvexSet::interval_product(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
        let tri = ConvexSet::polytope(&[
            (dvector![1.0, 1.0], 1.0),
            (dvector![-1.0, 0.0], 0.0),
            (dvector![0.0, -1.0], 0.0),
        ])
        .unwrap();
        // corner (1,1) is √2/2 away from the diagonal face
        assert_abs_diff_eq!(hausdorff(&square, &tri).unwrap(), 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn hausdorff_rejects_mixed_boundedness() {
        let half = ConvexSet::interval(0.0, f64::INFINITY).unwrap();
        assert!(hausdorff(&half, &iv(0.0, 1.0)).is_err());
        assert_eq!(hausdorff(&half, &ConvexSet::interval(2.0, f64::INFINITY).unwrap()).unwrap(), 2.0);
    }

    #[test]
    fn dis_of_identical_operators_is_zero() {
        let op = MonotoneOperator::normal_cone_fixed(iv(0.0, 1.0));
        let s = dvector![0.0];
        let est = dis_estimate(&op, &op, (0.0, &s), (0.0, &s), 400, &DisOptions::default()).unwrap();
        assert_eq!(est.lower_bound, 0.0);
        assert!(est.witness_value.abs() <= 1e-10);
        let sign = MonotoneOperator::sign(1.0, 1).unwrap();
        let shifted = MonotoneOperator::shifted(sign.clone(), 0.7).unwrap();
        let est = dis_estimate(&sign, &shifted, (0.0, &s), (0.0, &s), 400, &DisOptions::default()).unwrap();
        assert_eq!(est.lower_bound, 0.0);
    }

    #[test]
    fn dis_of_normal_cones_approaches_hausdorff() {
        let a = MonotoneOperator::normal_cone_fixed(iv(0.0, 1.0));
        let b = MonotoneOperator::normal_cone_fixed(iv(0.5, 2.0));
        let s = dvector![0.0];
        let mut prev = 0.0;
        for budget in [10, 100, 1000, 10_000, 100_000] {
            let est = dis_estimate(&a, &b, (0.0, &s), (0.0, &s), budget, &DisOptions::default()).unwrap();
            assert!(est.lower_bound >= prev);
            assert!(est.lower_bound <= 1.0 + 1e-9);
            assert_abs_diff_eq!(dis_quotient(&est.witness.0, &est.witness.1), est.witness_value);
            prev = est.lower_bound;
        }
        assert!(prev >= 0.9);
    }

    #[test]
    fn gap_bound_values() {
        assert_abs_diff_eq!(resolvent_gap_bound(0.1, 1.0, 2.0, 0.5).unwrap(), 1.275, epsilon = 1e-15);
        assert_abs_diff_eq!(resolvent_gap_bound(0.3, 2.0, 0.0, 0.0).unwrap(), 0.3 / 8.0, epsilon = 1e-15);
        assert!(resolvent_gap_bound(1e-300, 1.0, 0.0, 0.0).unwrap() < 1e-299);
        assert!(resolvent_gap_bound(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn discrete_gronwall_values() {
        assert_eq!(discrete_gronwall_bound(1.0, &[0.0; 4]).unwrap(), vec![1.0; 5]);
        let b = discrete_gronwall_bound(2.0, &[0.1, 0.2]).unwrap();
        assert_abs_diff_eq!(b[1], 2.0 * 0.1f64.exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(b[2], 2.0 * 0.3f64.exp(), epsilon = 1e-15);
    }

    #[test]
    fn continuous_gronwall_values() {
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let c = continuous_gronwall_bound(3.0, |_| 0.0, |_| 0.0, 0.5, &grid).unwrap();
        assert!(c.iter().all(|&v| (v - 3.0f64.sqrt()).abs() < 1e-15));
        let e = continuous_gronwall_bound(2.0, |_| 0.7, |_| 0.0, 0.0, &grid).unwrap();
        for (t, v) in grid.iter().zip(&e) {
            assert_abs_diff_eq!(*v, 2.0 * (0.7 * t).exp(), epsilon = 1e-12);
        }
        let l = continuous_gronwall_bound(2.0, |_| 0.0, |_| 1.0, 0.0, &grid).unwrap();
        for (t, v) in grid.iter().zip(&l) {
            assert!((v - (2.0 + t)).abs() <= 1e-4);
        }
    }

    proptest! {
        #[test]
        fn discrete_gronwall_dominates_recursion(
            alpha in 0.01f64..5.0,
            betas in proptest::collection::vec(0.0f64..0.5, 1..40),
        ) {
            let bound = discrete_gronwall_bound(alpha, &betas).unwrap();
            let mut u: Vec<f64> = Vec::new();
            for n in 0..=betas.len() {
                let un = alpha + (0..n).map(|k| betas[k] * u[k]).sum::<f64>();
                u.push(un);
                prop_assert!(un <= bound[n] * (1.0 + 1e-12));
            }
        }

        #[test]
        fn continuous_gronwall_dominates_ode(
            w0 in 0.0f64..3.0,
            a0 in -1.0f64..1.0,
            a1 in -1.0f64..1.0,
            b0 in 0.0f64..2.0,
            alpha in 0.0f64..0.9,
        ) {
            // (1−α)w' = a w + b w^α, integrated with a fine RK4 as the reference
            let a = |t: f64| a0 + a1 * t;
            let b = |t: f64| b0 * (1.0 + t.sin()) * 0.5;
            let rhs = |t: f64, w: f64| (a(t) * w + b(t) * w.max(0.0).powf(alpha)) / (1.0 - alpha);
            let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.005).collect();
            let bound = continuous_gronwall_bound(w0, a, b, alpha, &grid).unwrap();
            let mut w = w0;
            let sub = 20;
            for k in 1..grid.len() {
                let h = (grid[k] - grid[k - 1]) / sub as f64;
                for j in 0..sub {
                    let t = grid[k - 1] + j as f64 * h;
                    let k1 = rhs(t, w);
                    let k2 = rhs(t + h / 2.0, w + h / 2.0 * k1);
                    let k3 = rhs(t + h / 2.0, w + h / 2.0 * k2);
                    let k4 = rhs(t + h, w + h * k3);
                    w = (w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).max(0.0);
                }
                prop_assert!(w.powf(1.0 - alpha) <= bound[k] + 1e-4, "t={} w={} bound={}", grid[k], w, bound[k]);
            }
        }

        #[test]
        fn hausdorff_is_symmetric_and_bounds_dis(
            a in -3.0f64..3.0, wa in 0.0f64..3.0,
            b in -3.0f64..3.0, wb in 0.0f64..3.0,
        ) {
            let (k1, k2) = (iv(a, a + wa), iv(b, b + wb));
            let h = hausdorff(&k1, &k2).unwrap();
            prop_assert_eq!(h, hausdorff(&k2, &k1).unwrap());
            let s = dvector![0.0];
            let est = dis_estimate(
                &MonotoneOperator::normal_cone_fixed(k1),
                &MonotoneOperator::normal_cone_fixed(k2),
                (0.0, &s), (0.0, &s), 900, &DisOptions::default(),
            ).unwrap();
            prop_assert!(est.lower_bound <= h + 1e-9);
        }
    }
}
