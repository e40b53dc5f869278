//! Hamenstädt metrics on unstable leaves.
//!
//! `ρ_x(y, z) = exp(-a t*)` where `t*` is the time at which the flowed pair
//! reaches leaf distance 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::models::{flow, ConeModel, CoverPoint, Point, SuspensionModel};
use crate::numerics::brent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamenstadtError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("root of the leaf-distance equation not found (bracket [{lo}, {hi}])")]
    NonConvergence { lo: f64, hi: f64 },
    #[error("point outside the holonomy chart: {0}")]
    OutsideChart(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoEvaluation {
    pub value: f64,
    pub t_star: f64,
    pub iterations: usize,
    pub tol: f64,
}

/// Default relative tolerance: tight for closed-form leaf distances.
pub fn default_tol(model: &ConeModel) -> f64 {
    if model.axis_rates().is_some() {
        1e-9
    } else {
        1e-6
    }
}

fn log_leaf_distance(model: &ConeModel, x: &Point, y: &Point, t: f64) -> Result<f64, GeometryError> {
    Ok(geometry::leaf_distance(model, &flow(model, x, t), &flow(model, y, t))?.ln())
}

/// Hamenstädt distance between two points of one unstable leaf.
pub fn rho(model: &ConeModel, x: &Point, y: &Point, tol: f64) -> Result<RhoEvaluation, HamenstadtError> {
    let d0 = geometry::leaf_distance(model, x, y)?;
    if d0 == 0.0 {
        return Ok(RhoEvaluation { value: 0.0, t_star: f64::INFINITY, iterations: 0, tol });
    }
    let l0 = d0.ln();
    let (a, big_a) = (model.a, model.big_a);
    // The rate sandwich brackets the root; a unit margin absorbs rounding.
    let (lo, hi) = if l0 <= 0.0 { (-l0 / big_a - 1.0, -l0 / a + 1.0) } else { (-l0 / a - 1.0, -l0 / big_a + 1.0) };
    let mut err = None;
    let root = brent(
        |t| match log_leaf_distance(model, x, y, t) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        lo,
        hi,
        0.1 * tol / a,
        200,
    );
    if let Some(e) = err {
        return Err(e.into());
    }
    let (t_star, iterations) = root.ok_or(HamenstadtError::NonConvergence { lo, hi })?;
    Ok(RhoEvaluation { value: (-a * t_star).exp(), t_star, iterations, tol })
}

/// Relative defect of `ρ_{fᵗx}(fᵗx, fᵗy) = e^{at} ρ_x(x, y)`.
pub fn scaling_check(model: &ConeModel, x: &Point, y: &Point, t: f64, tol: f64) -> Result<f64, HamenstadtError> {
    let base = rho(model, x, y, tol)?.value;
    let moved = rho(model, &flow(model, x, t), &flow(model, y, t), tol)?.value;
    let expect = (model.a * t).exp() * base;
    if expect == 0.0 {
        return Ok(moved);
    }
    Ok((moved - expect).abs() / expect)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub leaf_distance: f64,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    /// Signed slack `min(ρ - lower, upper - ρ)` relative to `ρ`.
    pub slack: f64,
    pub holds: bool,
}

/// Places `ρ` inside the power envelope determined by `d^u` and `a/A`.
pub fn comparison_check(model: &ConeModel, x: &Point, y: &Point, tol: f64) -> Result<ComparisonReport, HamenstadtError> {
    let du = geometry::leaf_distance(model, x, y)?;
    let r = rho(model, x, y, tol)?.value;
    let e = model.a / model.big_a;
    let (lower, upper) = if du <= 1.0 { (du, du.powf(e)) } else { (du.powf(e), du) };
    let slack = if r > 0.0 { (r - lower).min(upper - r) / r } else { 0.0 };
    Ok(ComparisonReport { leaf_distance: du, rho: r, lower, upper, slack, holds: slack >= -4.0 * tol })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionComparison {
    pub distance: f64,
    pub rho: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Off-leaf comparison `ρ_x(x, P_x y) ≤ max(e^{Ad} d, e^{ad} d^{a/A})`.
pub fn projection_comparison(model: &ConeModel, x: &Point, y: &Point, tol: f64) -> Result<ProjectionComparison, HamenstadtError> {
    let d = geometry::distance(model, x, y)?;
    let p = geometry::project(x, y);
    let r = rho(model, x, &p, tol)?.value;
    let (a, big_a) = (model.a, model.big_a);
    let bound = ((big_a * d).exp() * d).max((a * d).exp() * d.powf(a / big_a));
    Ok(ProjectionComparison { distance: d, rho: r, bound, holds: r <= bound * (1.0 + 4.0 * tol) })
}

// ---------------------------------------------------------------------------
// Suspension holonomy.

fn leaf_point(q: &CoverPoint) -> Point {
    Point::planar(q.p_u, q.t)
}

/// `ρ` on the unstable leaf of the cover through `p` and `q`.
pub fn rho_cover(susp: &SuspensionModel, p: &CoverPoint, q: &CoverPoint, tol: f64) -> Result<f64, HamenstadtError> {
    if (p.p_s - q.p_s).abs() > 1e-12 * (1.0 + p.p_s.abs()) {
        return Err(GeometryError::LeafMismatch(p.p_s, q.p_s).into());
    }
    Ok(rho(&susp.cover, &leaf_point(p), &leaf_point(q), tol)?.value)
}

/// Center-stable holonomy `W^u(x) → W^u(y)` applied to `z`, with the chart
/// preconditions `d^{cs}(x, y) ≤ R` and `ρ_x(x, z) ≤ R`.
pub fn holonomy_cs(susp: &SuspensionModel, x: &CoverPoint, y: &CoverPoint, z: &CoverPoint, r: f64) -> Result<CoverPoint, HamenstadtError> {
    if (x.p_u - y.p_u).abs() > 1e-12 * (1.0 + x.p_u.abs()) {
        return Err(HamenstadtError::OutsideChart("y is not on the center-stable leaf of x".into()));
    }
    let dcs = susp.cs_distance(x, y);
    if dcs > r * (1.0 + 1e-12) {
        return Err(HamenstadtError::OutsideChart(format!("d_cs(x, y) = {dcs} exceeds R = {r}")));
    }
    let rz = rho_cover(susp, x, z, 1e-12)?;
    if rz > r * (1.0 + 1e-9) {
        return Err(HamenstadtError::OutsideChart(format!("rho_x(x, z) = {rz} exceeds R = {r}")));
    }
    Ok(susp.holonomy_cs(y, z))
}

#[derive(Debug, Clone, Serialize)]
pub struct BilipschitzEstimate {
    pub radius: f64,
    pub k: f64,
    pub samples: usize,
    /// `λ^R`, the largest possible distortion across a cs-ball of radius R.
    pub bound: f64,
}

/// Worst two-sided distortion of `ρ` under cs-holonomy at scale `R`.
pub fn bilipschitz_estimate(susp: &SuspensionModel, r: f64, samples: usize, seed: u64) -> Result<BilipschitzEstimate, HamenstadtError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = susp.cover.a;
    let mut k: f64 = 1.0;
    let mut done = 0;
    while done < samples {
        let x = CoverPoint { p_u: rng.gen_range(-2.0..2.0), p_s: rng.gen_range(-2.0..2.0), t: rng.gen_range(-1.0..1.0) };
        // Draw y in the cs-ball of radius R: vertical offset then a stable shift.
        let dt = rng.gen_range(-r..=r);
        let ds = rng.gen_range(-1.0..1.0) * r * (a * x.t).exp();
        let y = CoverPoint { p_s: x.p_s + ds, t: x.t + dt, ..x };
        if susp.cs_distance(&x, &y) > r {
            continue;
        }
        let scale = r * (-a * x.t).exp();
        let z = CoverPoint { p_u: x.p_u + rng.gen_range(-1.0..1.0) * scale, ..x };
        let w = CoverPoint { p_u: x.p_u + rng.gen_range(-1.0..1.0) * scale, ..x };
        if z.p_u == w.p_u {
            continue;
        }
        let hz = holonomy_cs(susp, &x, &y, &z, r)?;
        let hw = holonomy_cs(susp, &x, &y, &w, r)?;
        let before = rho_cover(susp, &z, &w, 1e-12)?;
        let after = rho_cover(susp, &hz, &hw, 1e-12)?;
        k = k.max(after / before).max(before / after);
        done += 1;
    }
    Ok(BilipschitzEstimate { radius: r, k, samples, bound: susp.lambda.powf(r) })
}

/// Largest torus-coordinate gap in the identities `fᵗ∘h = h∘fᵗ` on the cover
/// and `π∘fᵗ = fᵗ∘π` for the projection `π` to the suspension.
pub fn equivariance_check(susp: &SuspensionModel, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let torus_gap = |p: [f64; 2], q: [f64; 2]| -> f64 {
        let d = |a: f64, b: f64| {
            let r = (a - b).rem_euclid(1.0);
            r.min(1.0 - r)
        };
        d(p[0], q[0]).max(d(p[1], q[1]))
    };
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = CoverPoint { p_u: rng.gen_range(-0.5..0.5), p_s: rng.gen_range(-0.5..0.5), t: rng.gen_range(0.0..1.0) };
        let y = CoverPoint { p_s: x.p_s + rng.gen_range(-0.2..0.2), t: x.t + rng.gen_range(-0.2..0.2), ..x };
        let z = CoverPoint { p_u: x.p_u + rng.gen_range(-0.2..0.2), ..x };
        let t: f64 = rng.gen_range(-2.0..2.0);
        let lhs = susp.cover_flow(&susp.holonomy_cs(&y, &z), t);
        let rhs = susp.holonomy_cs(&susp.cover_flow(&y, t), &susp.cover_flow(&z, t));
        let (pl, pr) = (susp.project(&lhs), susp.project(&rhs));
        worst = worst.max(torus_gap(pl.x, pr.x)).max((pl.t - pr.t).abs());
        let down = susp.project(&susp.cover_flow(&z, t));
        let across = susp.flow(&susp.project(&z), t);
        worst = worst.max(torus_gap(down.x, across.x)).max((down.t - across.t).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_diagonal, make_halfplane, make_suspension, make_warped};

    #[test]
    fn closed_form_values() {
        let m = make_halfplane(1.0).unwrap();
        let r = rho(&m, &Point::planar(0.0, 0.0), &Point::planar(0.5, 0.0), 1e-12).unwrap();
        assert!((r.value - 0.5).abs() < 1e-11);
        assert!((r.t_star - 2f64.ln()).abs() < 1e-10);
        let r = rho(&m, &Point::planar(0.0, 0.0), &Point::planar(1.0, 0.0), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
        let d = make_diagonal(&[1.0, 2.0]).unwrap();
        let r = rho(&d, &Point::new(vec![0.0, 0.0], 0.0), &Point::new(vec![0.0, 0.25], 0.0), 1e-12).unwrap();
        assert!((r.value - 0.5).abs() < 1e-11);
        assert_eq!(rho(&m, &Point::planar(1.0, 0.0), &Point::planar(1.0, 0.0), 1e-9).unwrap().value, 0.0);
    }

    #[test]
    fn envelopes_attained_on_extreme_axes() {
        let d = make_diagonal(&[1.0, 2.0]).unwrap();
        let o = Point::new(vec![0.0, 0.0], 0.0);
        let fast = comparison_check(&d, &o, &Point::new(vec![0.0, 0.25], 0.0), 1e-10).unwrap();
        assert!(fast.holds && (fast.rho - fast.upper).abs() < 1e-9);
        let slow = comparison_check(&d, &o, &Point::new(vec![4.0, 0.0], 0.0), 1e-10).unwrap();
        assert!(slow.holds && (slow.rho - slow.upper).abs() < 1e-8);
    }

    #[test]
    fn warped_scaling() {
        let m = make_warped(0.1, 1.0, 1.0).unwrap();
        let disc = scaling_check(&m, &Point::planar(0.3, 0.5), &Point::planar(1.1, 0.5), 1.7, 1e-6).unwrap();
        assert!(disc < 1e-5, "{disc}");
    }

    #[test]
    fn holonomy_distortion_shrinks() {
        let s = make_suspension([[2, 1], [1, 1]]).unwrap();
        let k1 = bilipschitz_estimate(&s, 0.5, 300, 3).unwrap();
        let k2 = bilipschitz_estimate(&s, 0.25, 300, 3).unwrap();
        assert!(k2.k <= k1.k && k1.k <= k1.bound * (1.0 + 1e-9));
        assert!(equivariance_check(&s, 200, 5) < 1e-9);
    }
}
