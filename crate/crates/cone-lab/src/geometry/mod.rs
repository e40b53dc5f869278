//! Geodesics, ambient and leaf distances, flow projection and the height
//! profile along geodesics.

pub mod diagonal;
pub mod halfplane;
pub mod mesh;
pub mod shooting;

use serde::Serialize;
use thiserror::Error;

use crate::models::{ConeModel, Point, Warp};
use crate::numerics::GaussLegendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("endpoints coincide")]
    SamePoint,
    #[error("boundary-value solver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence { best_residual: f64, iterations: usize },
    #[error("points are not on a common unstable leaf (heights {0} and {1})")]
    LeafMismatch(f64, f64),
    #[error("path has {got} samples, at least {need} are required")]
    InsufficientSamples { got: usize, need: usize },
    #[error("invalid horizon {0}")]
    InvalidHorizon(f64),
    #[error("dimension mismatch: model has {model} unstable coordinates, point has {point}")]
    DimensionMismatch { model: usize, point: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Which solver produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverMethod {
    Vertical,
    ClosedForm,
    Momentum,
    AngleShooting,
    Mesh,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicSample {
    pub point: Point,
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicSample>,
    pub total_length: f64,
    pub endpoints: (Point, Point),
    pub solver_residual: f64,
    pub method: SolverMethod,
}

impl GeodesicPath {
    pub fn new(samples: Vec<GeodesicSample>, total_length: f64, x: Point, y: Point, solver_residual: f64, method: SolverMethod) -> Self {
        Self { samples, total_length, endpoints: (x, y), solver_residual, method }
    }

    /// Lowest height among the samples.
    pub fn min_height(&self) -> f64 {
        self.samples.iter().map(|s| s.b).fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `s, u0.., t, b, b_prime`.
    pub fn to_csv(&self) -> String {
        let n = self.endpoints.0.dim();
        let mut out = String::from("s");
        for i in 0..n {
            out.push_str(&format!(",u{i}"));
        }
        out.push_str(",t,b,b_prime\n");
        for smp in &self.samples {
            out.push_str(&format!("{}", smp.s));
            for u in &smp.point.u {
                out.push_str(&format!(",{u}"));
            }
            out.push_str(&format!(",{},{},{}\n", smp.point.t, smp.b, smp.b_prime));
        }
        out
    }

    /// Largest relative mismatch between metric chord lengths of consecutive
    /// samples and their arclength spacing.
    pub fn unit_speed_defect(&self, model: &ConeModel) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.samples.windows(2) {
            let ds = w[1].s - w[0].s;
            if ds <= 0.0 {
                continue;
            }
            let chord = chord_length(model, &w[0].point, &w[1].point);
            worst = worst.max((chord - ds).abs() / ds);
        }
        worst
    }
}

/// Simpson length of the straight chart segment from `p` to `q`.
pub fn chord_length(model: &ConeModel, p: &Point, q: &Point) -> f64 {
    let du: Vec<f64> = q.u.iter().zip(&p.u).map(|(b, a)| b - a).collect();
    let dt = q.t - p.t;
    let mid = Point::new(p.u.iter().zip(&q.u).map(|(a, b)| 0.5 * (a + b)).collect(), 0.5 * (p.t + q.t));
    (model.speed(p, &du, dt) + 4.0 * model.speed(&mid, &du, dt) + model.speed(q, &du, dt)) / 6.0
}

/// Samples used for a path of length `len`: at least 257 and spacing ≤ 0.02.
pub fn sample_count(len: f64) -> usize {
    ((len / 0.02).ceil() as usize + 1).max(257)
}

fn check_dims(model: &ConeModel, x: &Point, y: &Point) -> Result<(), GeometryError> {
    for p in [x, y] {
        if p.dim() != model.dim_u {
            return Err(GeometryError::DimensionMismatch { model: model.dim_u, point: p.dim() });
        }
    }
    Ok(())
}

fn vertical(x: &Point, y: &Point, n: usize) -> GeodesicPath {
    let len = (y.t - x.t).abs();
    let dir = if y.t >= x.t { 1.0 } else { -1.0 };
    let samples = (0..n)
        .map(|k| {
            let s = len * k as f64 / (n - 1) as f64;
            let t = if k == n - 1 { y.t } else { x.t + dir * s };
            GeodesicSample { point: Point::new(x.u.clone(), t), s, b: t, b_prime: dir }
        })
        .collect();
    GeodesicPath::new(samples, len, x.clone(), y.clone(), 0.0, SolverMethod::Vertical)
}

/// Geodesic joining `x` to `y` with terminal miss at most `tol`.
pub fn geodesic_connect(model: &ConeModel, x: &Point, y: &Point, tol: f64) -> Result<GeodesicPath, GeometryError> {
    check_dims(model, x, y)?;
    if x == y {
        return Err(GeometryError::SamePoint);
    }
    if x.u == y.u {
        return Ok(vertical(x, y, sample_count((y.t - x.t).abs())));
    }
    if let Some(a) = model.constant_rate() {
        let n = sample_count(halfplane::distance(a, x, y));
        return Ok(halfplane::geodesic(a, x, y, n));
    }
    if let Some(rates) = model.axis_rates() {
        let sol = diagonal::solve(rates, x, y, tol)?;
        return diagonal::geodesic(rates, x, y, tol, sample_count(sol.length));
    }
    shooting::geodesic(model, x, y, tol)
}

/// Ambient Riemannian distance.
pub fn distance(model: &ConeModel, x: &Point, y: &Point) -> Result<f64, GeometryError> {
    check_dims(model, x, y)?;
    if x == y {
        return Ok(0.0);
    }
    if x.u == y.u {
        return Ok((x.t - y.t).abs());
    }
    if let Some(a) = model.constant_rate() {
        return Ok(halfplane::distance(a, x, y));
    }
    if let Some(rates) = model.axis_rates() {
        return Ok(diagonal::solve(rates, x, y, 1e-9)?.length);
    }
    Ok(shooting::solve_ambient(model, x, y, 1e-9)?.length)
}

fn same_leaf(x: &Point, y: &Point) -> Result<(), GeometryError> {
    if (x.t - y.t).abs() > 1e-12 * (1.0 + x.t.abs()) {
        return Err(GeometryError::LeafMismatch(x.t, y.t));
    }
    Ok(())
}

/// Distance in the induced metric of the unstable leaf through `x`.
///
/// Each `φᵢ` depends on `uᵢ` and `t` only, so `vᵢ = ∫ φᵢ duᵢ` flattens the
/// leaf and the distance is the Euclidean norm of the `vᵢ` increments.
pub fn leaf_distance(model: &ConeModel, x: &Point, y: &Point) -> Result<f64, GeometryError> {
    check_dims(model, x, y)?;
    same_leaf(x, y)?;
    let t = x.t;
    let mut acc = 0.0;
    for i in 0..model.dim_u {
        let du = y.u[i] - x.u[i];
        let v = match &model.warp {
            Warp::Exponential { rates } => (rates[i] * t).exp() * du,
            Warp::Perturbed { .. } => {
                let panels = ((du.abs() * 4.0).ceil() as usize).clamp(1, 4096);
                let mut u = x.u.clone();
                GaussLegendre::g16().integrate(
                    |s| {
                        u[i] = s;
                        model.phi(i, &u, t)
                    },
                    x.u[i],
                    y.u[i],
                    panels,
                )
            }
        };
        acc += v * v;
    }
    Ok(acc.sqrt())
}

/// Flow projection onto the leaf of `x`: same `u` as `y`, height of `x`.
pub fn project(x: &Point, y: &Point) -> Point {
    Point::new(y.u.clone(), x.t)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    pub b_second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeightProfile {
    pub rows: Vec<ProfileRow>,
    /// Samples with `b'' < a(1 - b'²) - tol`.
    pub quadratic_violations: usize,
    /// `min(b'' - a(1 - b'²))`.
    pub quadratic_margin: f64,
    /// Samples with `b'' < a√(1 - b'²) - tol`.
    pub sqrt_violations: usize,
    /// `min(b'' - a√(1 - b'²))`.
    pub sqrt_margin: f64,
    /// Largest decrease of `b'` between consecutive samples.
    pub b_prime_decrease: f64,
    /// Number of strict local minima of `b` in the interior.
    pub interior_minima: usize,
    pub tol: f64,
}

/// Central-difference profile of `b` along a path.
pub fn height_profile(path: &GeodesicPath, a: f64, tol: f64) -> Result<HeightProfile, GeometryError> {
    let n = path.samples.len();
    if n < 64 {
        return Err(GeometryError::InsufficientSamples { got: n, need: 64 });
    }
    let smp = &path.samples;
    let mut rows = Vec::with_capacity(n - 2);
    let (mut qv, mut sv) = (0, 0);
    let (mut qm, mut sm) = (f64::INFINITY, f64::INFINITY);
    for k in 1..n - 1 {
        let h1 = smp[k].s - smp[k - 1].s;
        let h2 = smp[k + 1].s - smp[k].s;
        if h1 <= 0.0 || h2 <= 0.0 {
            continue;
        }
        let (b0, b1, b2) = (smp[k - 1].b, smp[k].b, smp[k + 1].b);
        let bp = ((b2 - b1) * h1 / h2 + (b1 - b0) * h2 / h1) / (h1 + h2);
        let bpp = 2.0 * ((b2 - b1) / h2 - (b1 - b0) / h1) / (h1 + h2);
        let bp_c = bp.clamp(-1.0, 1.0);
        let q = bpp - a * (1.0 - bp_c * bp_c);
        let r = bpp - a * (1.0 - bp_c * bp_c).sqrt();
        if q < -tol {
            qv += 1;
        }
        if r < -tol {
            sv += 1;
        }
        qm = qm.min(q);
        sm = sm.min(r);
        rows.push(ProfileRow { s: smp[k].s, b: b1, b_prime: bp, b_second: bpp });
    }
    let b_prime_decrease = smp.windows(2).map(|w| w[0].b_prime - w[1].b_prime).fold(0.0, f64::max);
    let interior_minima = (1..n - 1).filter(|&k| smp[k].b < smp[k - 1].b && smp[k].b < smp[k + 1].b).count();
    Ok(HeightProfile {
        rows,
        quadratic_violations: qv,
        quadratic_margin: qm,
        sqrt_violations: sv,
        sqrt_margin: sm,
        b_prime_decrease,
        interior_minima,
        tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BusemannReport {
    /// Discrepancy `D(n) = d(γ(n), x) - n - (b(x) - b(γ(0)))` at the horizon.
    pub limit: f64,
    /// `|D(H) - D(H/2)|`.
    pub drift: f64,
    /// `sup |D(n)|` over all sampled `n ≤ H`.
    pub sup_all: f64,
    /// `sup |D(n) - D(H)|` over sampled `n ≥ 10`.
    pub tail: f64,
    pub table: Vec<(f64, f64)>,
}

/// Compares distances to a descending vertical ray with the height function.
pub fn busemann_check(model: &ConeModel, ray_start: &Point, x: &Point, horizon: f64) -> Result<BusemannReport, GeometryError> {
    if !(horizon >= 10.0) {
        return Err(GeometryError::InvalidHorizon(horizon));
    }
    let steps = (horizon.ceil() as usize) * 2;
    let mut table = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let n = horizon * k as f64 / steps as f64;
        let g = Point::new(ray_start.u.clone(), ray_start.t - n);
        let d = distance(model, &g, x)?;
        table.push((n, d - n - (x.t - ray_start.t)));
    }
    let limit = table[steps].1;
    let half = table[steps / 2].1;
    let sup_all = table.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let tail = table.iter().filter(|r| r.0 >= 10.0).map(|r| (r.1 - limit).abs()).fold(0.0, f64::max);
    Ok(BusemannReport { limit: limit.abs(), drift: (limit - half).abs(), sup_all, tail, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_diagonal, make_halfplane};

    #[test]
    fn halfplane_examples() {
        let m = make_halfplane(1.0).unwrap();
        let g = geodesic_connect(&m, &Point::planar(0.0, 0.0), &Point::planar(0.0, 5.0), 1e-9).unwrap();
        assert_eq!(g.method, SolverMethod::Vertical);
        assert!((g.total_length - 5.0).abs() < 1e-15);
        let x = Point::planar(0.0, 0.0);
        let y = Point::planar(4.0, 0.0);
        let d = distance(&m, &x, &y).unwrap();
        let du = leaf_distance(&m, &x, &y).unwrap();
        assert!((du - 4.0).abs() < 1e-15);
        assert!(d <= du && du <= d.exp() * d);
        assert!(matches!(geodesic_connect(&m, &x, &x, 1e-9), Err(GeometryError::SamePoint)));
    }

    #[test]
    fn leaf_distance_diagonal() {
        let m = make_diagonal(&[1.0, 2.0]).unwrap();
        let d = leaf_distance(&m, &Point::new(vec![0.0, 0.0], 0.0), &Point::new(vec![3.0, 0.0], 0.0)).unwrap();
        assert_eq!(d, 3.0);
        assert!(leaf_distance(&m, &Point::new(vec![0.0, 0.0], 0.0), &Point::new(vec![3.0, 0.0], 1.0)).is_err());
    }

    #[test]
    fn projection_is_idempotent() {
        let x = Point::planar(0.0, 0.0);
        let p = project(&x, &Point::planar(3.0, 2.0));
        assert_eq!(p, Point::planar(3.0, 0.0));
        assert_eq!(project(&x, &p), p);
    }

    #[test]
    fn profile_of_semicircle_is_tight() {
        let m = make_halfplane(1.0).unwrap();
        let g = geodesic_connect(&m, &Point::planar(-3.0, 0.0), &Point::planar(3.0, 0.0), 1e-9).unwrap();
        let p = height_profile(&g, 1.0, 1e-3).unwrap();
        assert_eq!(p.quadratic_violations, 0);
        assert!(p.quadratic_margin.abs() < 1e-3);
        assert!(p.sqrt_violations > 0);
        assert_eq!(p.interior_minima, 1);
        assert!(g.unit_speed_defect(&m) < 1e-4);
    }

    #[test]
    fn busemann_limit_vanishes_in_halfplane() {
        let m = make_halfplane(1.0).unwrap();
        let r = busemann_check(&m, &Point::planar(0.0, 0.0), &Point::planar(4.0, 0.0), 20.0).unwrap();
        assert!(r.limit < 1e-6);
        assert!(r.tail < 0.01);
        let on_ray = busemann_check(&m, &Point::planar(0.0, 0.0), &Point::planar(0.0, 2.0), 10.0).unwrap();
        assert!(on_ray.sup_all < 1e-12);
    }
}
