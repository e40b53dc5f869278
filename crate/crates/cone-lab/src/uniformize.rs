//! Conformal uniformization by the density `κ = e^{-ab}`.
//!
//! In the coordinate `y = e^{-at}/a` the vertical direction becomes
//! Euclidean, which gives exact distances to the boundary and exact lengths
//! of vertical segments in every model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, halfplane, mesh, shooting, GeodesicPath, GeometryError};
use crate::gromov::Sampler;
use crate::hamenstadt::{self, HamenstadtError};
use crate::models::{ConeModel, Point};
use crate::numerics::brent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UniformizeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Hamenstadt(#[from] HamenstadtError),
    #[error("radius {r} exceeds half the boundary distance {half}")]
    RadiusTooLarge { r: f64, half: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Grid used when the conformal shooting fails and the mesh takes over.
pub const FALLBACK_GRID: usize = 96;
/// Successive boundary-limit increments must stay below this, measured in
/// units of the base leaf boundary distance.
pub const CAUCHY_TOL: f64 = 1e-3;
/// Truncation heights above the base leaf for boundary limits.
pub const TRUNCATION_HEIGHTS: [f64; 3] = [5.0, 10.0, 15.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DbMethod {
    Oracle,
    GeodesicFamily,
    MeshDijkstra,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformizedDistance {
    pub value: f64,
    pub method: DbMethod,
    pub bounds: (f64, f64),
}

impl UniformizedDistance {
    fn exact(value: f64) -> Self {
        Self { value, method: DbMethod::Oracle, bounds: (value, value) }
    }
}

/// A point of the boundary, named by the leaf coordinate of the ascending
/// vertical ray that ends there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub u: Vec<f64>,
}

pub fn kappa(model: &ConeModel, p: &Point) -> f64 {
    (-model.a * p.t).exp()
}

/// Cumulative κ-length along the samples of a unit-speed path.
fn cumulative_b(model: &ConeModel, path: &GeodesicPath) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.samples.len());
    out.push(0.0);
    for w in path.samples.windows(2) {
        let ds = w[1].s - w[0].s;
        // Exact for exponentials in b when b is affine on the step.
        let (b0, b1) = (w[0].b, w[1].b);
        let db = b1 - b0;
        let seg = if (model.a * db).abs() < 1e-8 {
            ds * (-model.a * 0.5 * (b0 + b1)).exp()
        } else {
            ds * ((-model.a * b0).exp() - (-model.a * b1).exp()) / (model.a * db)
        };
        out.push(out.last().unwrap() + seg);
    }
    out
}

/// κ-length of a sampled geodesic.
pub fn length_b(model: &ConeModel, path: &GeodesicPath) -> f64 {
    *cumulative_b(model, path).last().unwrap_or(&0.0)
}

/// Exact uniformized distance from `x` to the boundary, `e^{-ab(x)}/a`.
///
/// The ascending vertical ray realises it, and `|dy| ≤ κ ds` along any curve
/// bounds it from below, so no quadrature is needed in any model.
pub fn boundary_distance(model: &ConeModel, x: &Point) -> f64 {
    halfplane::y_coord(model.a, x.t)
}

pub fn boundary_point(_model: &ConeModel, x: &Point) -> BoundaryPoint {
    BoundaryPoint { u: x.u.clone() }
}

/// Lower bound from `b` being 1-Lipschitz: a curve leaving `p` must cover
/// ambient length `d` with `κ ≥ e^{-a(b(p)+s)}` at arclength `s`.
fn harnack_lower(model: &ConeModel, x: &Point, y: &Point, d: f64) -> f64 {
    let a = model.a;
    let reach = (1.0 - (-a * d).exp()) / a;
    let dy = (halfplane::y_coord(a, x.t) - halfplane::y_coord(a, y.t)).abs();
    dy.max(kappa(model, x) * reach).max(kappa(model, y) * reach)
}

/// Uniformized distance with the method used and two-sided bounds.
pub fn d_b(model: &ConeModel, x: &Point, y: &Point) -> Result<UniformizedDistance, UniformizeError> {
    Ok(d_b_with_distance(model, x, y)?.0)
}

/// [`d_b`] together with the ambient distance computed along the way.
pub fn d_b_with_distance(model: &ConeModel, x: &Point, y: &Point) -> Result<(UniformizedDistance, f64), UniformizeError> {
    if x.dim() != model.dim_u || y.dim() != model.dim_u {
        return Err(GeometryError::DimensionMismatch { model: model.dim_u, point: x.dim().min(y.dim()) }.into());
    }
    let a = model.a;
    if x == y {
        return Ok((UniformizedDistance::exact(0.0), 0.0));
    }
    if let Some(rate) = model.constant_rate() {
        return Ok((UniformizedDistance::exact(halfplane::euclid_uy(rate, x, y)), halfplane::distance(rate, x, y)));
    }
    if x.u == y.u {
        let dy = (halfplane::y_coord(a, x.t) - halfplane::y_coord(a, y.t)).abs();
        return Ok((UniformizedDistance::exact(dy), (x.t - y.t).abs()));
    }
    let path = if model.axis_rates().is_some() {
        geometry::geodesic_connect(model, x, y, 1e-9)?
    } else {
        // An accepted shot is still an admissible curve for the upper bound.
        shooting::shot_path(&shooting::solve_ambient(model, x, y, 1e-9)?, x, y)
    };
    let d = path.total_length;
    let upper = length_b(model, &path);
    let lower = harnack_lower(model, x, y, d).min(upper);
    if model.axis_rates().is_some() {
        return Ok((UniformizedDistance { value: upper, method: DbMethod::GeodesicFamily, bounds: (lower, upper) }, d));
    }
    let out = match shooting::solve_conformal(model, a, x, y, 1e-9) {
        Ok(shot) => {
            UniformizedDistance { value: shot.length.clamp(lower, upper), method: DbMethod::GeodesicFamily, bounds: (lower, upper) }
        }
        Err(_) => {
            let est = mesh::mesh_distance_conformal(model, a, x, y, FALLBACK_GRID)?;
            let value = est.refined_length.min(upper).max(lower);
            UniformizedDistance { value, method: DbMethod::MeshDijkstra, bounds: (lower, value) }
        }
    };
    Ok((out, d))
}

/// Boundary distance as a limit of truncated evaluations.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryLimit {
    pub heights: Vec<f64>,
    pub values: Vec<f64>,
    /// Increments between successive truncations in units of the boundary
    /// distance of the base leaf, which makes them flow-invariant.
    pub increments: Vec<f64>,
    pub value: f64,
    pub cauchy: bool,
    pub monotone: bool,
}

/// `d_b(Ψw, Ψz)` as the limit of `d_b` between the rays over `w` and `z`
/// at heights `base + h` for `h` in [`TRUNCATION_HEIGHTS`].
pub fn boundary_d_b(model: &ConeModel, w: &BoundaryPoint, z: &BoundaryPoint, base: f64) -> Result<BoundaryLimit, UniformizeError> {
    let heights: Vec<f64> = TRUNCATION_HEIGHTS.iter().map(|h| base + h).collect();
    let mut values = Vec::with_capacity(heights.len());
    for &h in &heights {
        values.push(d_b(model, &Point::new(w.u.clone(), h), &Point::new(z.u.clone(), h))?.value);
    }
    let last = *values.last().unwrap();
    let scale = halfplane::y_coord(model.a, base);
    let increments: Vec<f64> = values.windows(2).map(|v| (v[1] - v[0]).abs() / scale).collect();
    let cauchy = increments.last().is_none_or(|&i| i < CAUCHY_TOL);
    let monotone = values.windows(2).all(|v| v[1] <= v[0] * (1.0 + 1e-9)) || values.windows(2).all(|v| v[1] >= v[0] * (1.0 - 1e-9));
    Ok(BoundaryLimit { heights, values, increments, value: last, cauchy, monotone })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryBilipschitz {
    /// Worst two-sided ratio `max(sup, 1/inf)`.
    pub k: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub max_increment: f64,
    pub not_cauchy: usize,
    pub coincident: usize,
    pub samples: usize,
}

/// `(d_b, scaled ρ, within band)` for one boundary pair.
type PairRow = (f64, f64, bool);

/// Compares `d_b` on the boundary against `e^{-ab(x)} ρ_x` on the leaf of `x`.
pub fn boundary_bilipschitz_check(
    model: &ConeModel,
    x: &Point,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<BoundaryBilipschitz, UniformizeError> {
    let scale = kappa(model, x);
    let tol = hamenstadt::default_tol(model);
    let rows: Vec<Result<Option<PairRow>, UniformizeError>> = pairs
        .par_iter()
        .map(|(w, z)| {
            if w == z {
                return Ok(None);
            }
            let pw = Point::new(w.clone(), x.t);
            let pz = Point::new(z.clone(), x.t);
            let r = hamenstadt::rho(model, &pw, &pz, tol)?.value;
            let lim = boundary_d_b(model, &BoundaryPoint { u: w.clone() }, &BoundaryPoint { u: z.clone() }, x.t)?;
            let inc = lim.increments.last().copied().unwrap_or(0.0);
            Ok(Some((lim.value / (scale * r), inc, lim.cauchy)))
        })
        .collect();
    let mut out = BoundaryBilipschitz {
        k: 1.0,
        ratio_min: f64::INFINITY,
        ratio_max: 0.0,
        max_increment: 0.0,
        not_cauchy: 0,
        coincident: 0,
        samples: pairs.len(),
    };
    for row in rows {
        match row? {
            None => out.coincident += 1,
            Some((ratio, inc, cauchy)) => {
                out.ratio_min = out.ratio_min.min(ratio);
                out.ratio_max = out.ratio_max.max(ratio);
                out.max_increment = out.max_increment.max(inc);
                if !cauchy {
                    out.not_cauchy += 1;
                }
            }
        }
    }
    if out.ratio_max > 0.0 {
        out.k = out.ratio_max.max(1.0 / out.ratio_min);
    }
    Ok(out)
}

/// Random pairs of leaf coordinates within `half_width` of `x.u`.
pub fn leaf_pairs(x: &Point, n: usize, half_width: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| x.u.iter().map(|c| c + rng.gen_range(-half_width..=half_width)).collect::<Vec<f64>>();
    (0..n).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

/// Flow-saturated Hamenstädt ball over an apex, optionally truncated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeRegion {
    pub apex: Point,
    pub radius: f64,
    /// Points must sit strictly more than this above the apex leaf.
    pub t_min: f64,
    /// Largest admitted height above the apex leaf; `None` for no cap.
    pub truncation: Option<f64>,
}

impl ConeRegion {
    pub fn full(apex: Point, radius: f64) -> Self {
        Self { apex, radius, t_min: 0.0, truncation: None }
    }

    fn rho_of(&self, model: &ConeModel, u: &[f64]) -> Result<f64, UniformizeError> {
        let q = Point::new(u.to_vec(), self.apex.t);
        Ok(hamenstadt::rho(model, &self.apex, &q, hamenstadt::default_tol(model))?.value)
    }

    pub fn contains(&self, model: &ConeModel, p: &Point) -> Result<bool, UniformizeError> {
        let h = p.t - self.apex.t;
        if h <= self.t_min || self.truncation.is_some_and(|cap| h > cap) {
            return Ok(false);
        }
        Ok(self.rho_of(model, &p.u)? < self.radius)
    }

    /// Boundary part of the cone; empty for truncated regions.
    pub fn contains_boundary(&self, model: &ConeModel, w: &BoundaryPoint) -> Result<bool, UniformizeError> {
        if self.truncation.is_some() {
            return Ok(false);
        }
        Ok(self.rho_of(model, &w.u)? < self.radius)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeBallRow {
    pub l: f64,
    /// Smallest `t` with the inner cone inside the ball.
    pub t_inner: f64,
    /// Smallest `t` with the ball inside the outer cone.
    pub t_outer: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeBallReport {
    pub radius: f64,
    pub rows: Vec<ConeBallRow>,
    /// Row minimising `L·e^{a t*}`.
    pub l_star: f64,
    pub t_star: f64,
    pub in_ball: usize,
    pub outside: usize,
    /// Samples whose membership fell inside the truncation margin.
    pub inconclusive: usize,
}

/// Candidate values of `L` scanned by [`cone_ball_inclusions`].
pub const L_GRID: [f64; 9] = [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0];

/// Leaf offset along `dir` at which `ρ_x` first exceeds `target`.
fn rho_reach(model: &ConeModel, x: &Point, dir: &[f64], target: f64) -> Result<f64, UniformizeError> {
    let tol = hamenstadt::default_tol(model);
    let mut s = 1e-3;
    for _ in 0..80 {
        let q = Point::new(x.u.iter().zip(dir).map(|(c, d)| c + s * d).collect(), x.t);
        if hamenstadt::rho(model, x, &q, tol)?.value >= target {
            return Ok(s);
        }
        s *= 2.0;
    }
    Err(UniformizeError::Invalid("leaf offset for the requested ρ not found".into()))
}

/// `(ρ to the apex, height above it, inside the ball if decidable)`.
type SampleClass = (f64, f64, Option<bool>);

/// Samples points around the ray over `x` and measures the smallest
/// `(L*, t*)` for which `C(f^{t*}x, 1/L*) ⊂ B_b(x̄, r) ⊂ C(f^{-t*}x, L*)`.
///
/// Flowing the apex by `s` scales `ρ` by `e^{as}` exactly, so a sample with
/// apex-leaf value `q` and height `h` above the apex leaf lies in
/// `C(f^s x, R)` iff `e^{as} q < R` and `h > s`; each sample then yields a
/// closed-form threshold on `t`.
pub fn cone_ball_inclusions(model: &ConeModel, x: &Point, r: f64, n: usize, seed: u64) -> Result<ConeBallReport, UniformizeError> {
    if !(r > 0.0) {
        return Err(UniformizeError::Invalid(format!("radius {r}")));
    }
    let a = model.a;
    let l_max = *L_GRID.last().unwrap();
    let h_span = 6.0 / a;
    let q_max = 2.0 * l_max * (a * h_span).exp().min(1e3);
    let mut reach = Vec::with_capacity(model.dim_u);
    for i in 0..model.dim_u {
        let mut e = vec![0.0; model.dim_u];
        e[i] = 1.0;
        reach.push(rho_reach(model, x, &e, q_max)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(Vec<f64>, Option<f64>)> = (0..n)
        .map(|k| {
            // Offsets log-uniform in scale so small ρ values are represented.
            let frac = 10f64.powf(rng.gen_range(-3.0..=0.0));
            let u: Vec<f64> = x.u.iter().zip(&reach).map(|(c, w)| c + frac * w * rng.gen_range(-1.0..=1.0)).collect();
            let h = if k % 5 == 0 { None } else { Some(rng.gen_range(-h_span..=h_span)) };
            (u, h)
        })
        .collect();
    let x_bar_height = x.t + TRUNCATION_HEIGHTS[2] / a;
    let margin = boundary_distance(model, &Point::new(x.u.clone(), x_bar_height));
    let tol = hamenstadt::default_tol(model);
    let classified: Vec<Result<SampleClass, UniformizeError>> = samples
        .par_iter()
        .map(|(u, h)| {
            let on_leaf = Point::new(u.clone(), x.t);
            let q = hamenstadt::rho(model, x, &on_leaf, tol)?.value;
            let (dist, slack) = match (model.constant_rate(), h) {
                (Some(rate), Some(h)) => {
                    let yy = halfplane::y_coord(rate, x.t + h);
                    let du2: f64 = u.iter().zip(&x.u).map(|(p, c)| (p - c).powi(2)).sum();
                    ((du2 + yy * yy).sqrt(), 0.0)
                }
                (Some(_), None) => (u.iter().zip(&x.u).map(|(p, c)| (p - c).powi(2)).sum::<f64>().sqrt(), 0.0),
                (None, Some(h)) => {
                    let p = Point::new(u.clone(), x.t + h);
                    (d_b(model, &p, &Point::new(x.u.clone(), x_bar_height))?.value, margin)
                }
                (None, None) => {
                    let p = Point::new(u.clone(), x_bar_height);
                    (d_b(model, &p, &Point::new(x.u.clone(), x_bar_height))?.value, 2.0 * margin)
                }
            };
            let inside = if dist + slack < r {
                Some(true)
            } else if dist - slack >= r {
                Some(false)
            } else {
                None
            };
            Ok((q, h.unwrap_or(f64::INFINITY), inside))
        })
        .collect();
    let mut pts = Vec::with_capacity(n);
    let (mut in_ball, mut outside, mut inconclusive) = (0, 0, 0);
    for c in classified {
        let (q, h, inside) = c?;
        match inside {
            Some(true) => in_ball += 1,
            Some(false) => outside += 1,
            None => inconclusive += 1,
        }
        pts.push((q, h, inside));
    }
    let mut rows = Vec::with_capacity(L_GRID.len());
    for &l in &L_GRID {
        let mut t_inner: f64 = 0.0;
        let mut t_outer: f64 = 0.0;
        for &(q, h, inside) in &pts {
            match inside {
                Some(false) | None => {
                    let by_rho = if q > 0.0 { (1.0 / (l * q)).ln() / a } else { f64::INFINITY };
                    t_inner = t_inner.max(h.min(by_rho));
                }
                Some(true) => {
                    let by_rho = if q > 0.0 { (q / l).ln() / a } else { f64::NEG_INFINITY };
                    t_outer = t_outer.max(by_rho.max(-h));
                }
            }
        }
        rows.push(ConeBallRow { l, t_inner, t_outer, t_star: t_inner.max(t_outer) });
    }
    let best = rows.iter().min_by(|p, q| (p.l * (a * p.t_star).exp()).total_cmp(&(q.l * (a * q.t_star).exp()))).unwrap();
    Ok(ConeBallReport { radius: r, l_star: best.l, t_star: best.t_star, rows: rows.clone(), in_ball, outside, inconclusive })
}

#[derive(Debug, Clone, Serialize)]
pub struct SubInclusionReport {
    pub radius: f64,
    /// Ambient radius `r e^{ab(x)}`.
    pub scaled_radius: f64,
    pub c_inner: f64,
    pub c_outer: f64,
    pub c_star: f64,
    pub samples: usize,
    pub failures: usize,
}

/// Smallest `C*` with `B(x, R/C*) ⊂ B_b(x, r) ⊂ B(x, C* R)`, `R = r e^{ab(x)}`,
/// over points sampled around `x`.
pub fn sub_inclusion_check(model: &ConeModel, x: &Point, r: f64, n: usize, seed: u64) -> Result<SubInclusionReport, UniformizeError> {
    let half = 0.5 * boundary_distance(model, x);
    if !(r > 0.0) || r > half * (1.0 + 1e-12) {
        return Err(UniformizeError::RadiusTooLarge { r, half });
    }
    let big_r = r / kappa(model, x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point> = (0..n)
        .map(|_| {
            let u = x.u.iter().enumerate().map(|(i, c)| c + 3.0 * big_r / model.phi(i, &x.u, x.t) * rng.gen_range(-1.0..=1.0)).collect();
            Point::new(u, x.t + 3.0 * big_r * rng.gen_range(-1.0..=1.0))
        })
        .collect();
    let rows: Vec<Option<(f64, f64)>> = pts
        .par_iter()
        .map(|p| {
            let d = geometry::distance(model, x, p).ok()?;
            let db = d_b(model, x, p).ok()?.value;
            Some((d, db))
        })
        .collect();
    let (mut c_inner, mut c_outer, mut failures) = (1.0f64, 1.0f64, 0);
    for row in rows {
        match row {
            Some((d, db)) if d > 0.0 => {
                if db >= r {
                    c_inner = c_inner.max(big_r / d);
                } else {
                    c_outer = c_outer.max(d / big_r);
                }
            }
            Some(_) => {}
            None => failures += 1,
        }
    }
    Ok(SubInclusionReport { radius: r, scaled_radius: big_r, c_inner, c_outer, c_star: c_inner.max(c_outer), samples: n, failures })
}

/// Interior point or boundary point used as a ball centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Anchor {
    Interior(Point),
    Boundary(BoundaryPoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CenterCase {
    /// The ray segment to the level `d_b = r` is long; the centre sits at
    /// `d_b`-arclength `r/3` from the anchor.
    ThirdOfSegment,
    /// The segment is short; the centre is the level point itself.
    LevelPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubWhitney {
    pub center: Point,
    pub c0: f64,
    pub case: CenterCase,
    pub boundary_distance: f64,
    /// `r - d_b(anchor, z) - c0 r`; non-negative when the ball nests.
    pub nesting_margin: f64,
    pub holds: bool,
}

/// Centre of a sub-Whitney ball inside `B_b(anchor, r)` on the vertical
/// geodesic through the anchor, with `c0 = 1/(6L)` for a measured
/// uniformity constant `L`.
pub fn subwhitney_center(model: &ConeModel, anchor: &Anchor, r: f64, l_uniform: f64) -> Result<SubWhitney, UniformizeError> {
    if !(r > 0.0) || !(l_uniform >= 1.0) {
        return Err(UniformizeError::Invalid(format!("r = {r}, L = {l_uniform}")));
    }
    let a = model.a;
    let (u, y_anchor) = match anchor {
        Anchor::Interior(p) => (p.u.clone(), boundary_distance(model, p)),
        Anchor::Boundary(w) => (w.u.clone(), 0.0),
    };
    let on_ray = |t: f64| boundary_distance(model, &Point::new(u.clone(), t));
    // d_b(γ(t)) decreases from ∞ to 0; bracket the level r and solve.
    let level = |target: f64| -> Result<f64, UniformizeError> {
        let guess = halfplane::t_from_y(a, target);
        let (lo, hi) = (guess - 1.0, guess + 1.0);
        brent(|t| on_ray(t) - target, lo, hi, 1e-14 * (1.0 + guess.abs()), 200)
            .map(|(t, _)| t)
            .ok_or_else(|| UniformizeError::Invalid("level point not bracketed".into()))
    };
    let t0 = level(r)?;
    let seg = (y_anchor - r).abs();
    let c0 = 1.0 / (6.0 * l_uniform);
    let (t_z, case) = if seg >= 2.0 * r / 3.0 {
        // Along a vertical segment d_b-arclength is |Δy|.
        let y_z = y_anchor + (r - y_anchor).signum() * r / 3.0;
        (level(y_z)?, CenterCase::ThirdOfSegment)
    } else {
        (t0, CenterCase::LevelPoint)
    };
    let dz = on_ray(t_z);
    let center = Point::new(u, t_z);
    let nesting_margin = r - (y_anchor - dz).abs() - c0 * r;
    let holds = nesting_margin >= -1e-12 * r && dz >= 2.0 * c0 * r * (1.0 - 1e-12);
    Ok(SubWhitney { center, c0, case, boundary_distance: dz, nesting_margin, holds })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformCurveReport {
    /// Smallest `L` for both conditions.
    pub l: f64,
    /// `max min{ℓ_b(γ≤t), ℓ_b(γ≥t)} / d_b(γ(t))` over samples.
    pub l_cigar: f64,
    /// `ℓ_b(γ) / d_b(x, y)`.
    pub l_length: f64,
    pub length_b: f64,
    pub d_b: f64,
}

/// Uniform-curve constant of a sampled ambient geodesic.
pub fn uniform_curve_check(model: &ConeModel, path: &GeodesicPath) -> Result<UniformCurveReport, UniformizeError> {
    let cum = cumulative_b(model, path);
    let total = *cum.last().unwrap();
    let mut l_cigar: f64 = 0.0;
    for (smp, &c) in path.samples.iter().zip(&cum) {
        let side = c.min(total - c);
        l_cigar = l_cigar.max(side / boundary_distance(model, &smp.point));
    }
    let (x, y) = &path.endpoints;
    let db = d_b(model, x, y)?.value;
    let l_length = if db > 0.0 { total / db } else { 1.0 };
    Ok(UniformCurveReport { l: l_cigar.max(l_length), l_cigar, l_length, length_b: total, d_b: db })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformCurveStats {
    pub max_l: f64,
    pub mean_l: f64,
    pub samples: usize,
    pub failures: usize,
}

pub fn uniform_curve_sample(model: &ConeModel, sampler: &Sampler, n: usize, seed: u64) -> UniformCurveStats {
    let pairs = sample_pairs(model, sampler, n, seed);
    let ls: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(x, y)| {
            let path = geometry::geodesic_connect(model, x, y, 1e-9).ok()?;
            uniform_curve_check(model, &path).ok().map(|r| r.l)
        })
        .collect();
    let ok: Vec<f64> = ls.iter().flatten().copied().collect();
    let max_l = ok.iter().copied().fold(0.0, f64::max);
    let mean_l = if ok.is_empty() { 0.0 } else { ok.iter().sum::<f64>() / ok.len() as f64 };
    UniformCurveStats { max_l, mean_l, samples: n, failures: n - ok.len() }
}

fn sample_pairs(model: &ConeModel, sampler: &Sampler, n: usize, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = sampler.sample(&mut rng, model.dim_u);
            let mut y = sampler.sample(&mut rng, model.dim_u);
            while y == x {
                y = sampler.sample(&mut rng, model.dim_u);
            }
            (x, y)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformEstimateReport {
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `max(ratio_max, 1/ratio_min)`.
    pub constant: f64,
    pub samples: usize,
    pub failures: usize,
    pub mesh_fallbacks: usize,
}

/// Ratio of `d_b(x, y)` to `e^{-a(x|y)_b} min{d(x, y), 1}` over random pairs.
pub fn uniform_estimate_sample(model: &ConeModel, sampler: &Sampler, n: usize, seed: u64) -> UniformEstimateReport {
    let pairs = sample_pairs(model, sampler, n, seed);
    let a = model.a;
    let rows: Vec<Option<(f64, DbMethod)>> = pairs
        .par_iter()
        .map(|(x, y)| {
            let (ub, d) = d_b_with_distance(model, x, y).ok()?;
            let gp = 0.5 * (x.t + y.t - d);
            let pred = (-a * gp).exp() * d.min(1.0);
            Some((ub.value / pred, ub.method))
        })
        .collect();
    let mut out = UniformEstimateReport {
        ratio_min: f64::INFINITY,
        ratio_max: 0.0,
        constant: f64::INFINITY,
        samples: n,
        failures: 0,
        mesh_fallbacks: 0,
    };
    for row in rows {
        match row {
            Some((ratio, method)) => {
                out.ratio_min = out.ratio_min.min(ratio);
                out.ratio_max = out.ratio_max.max(ratio);
                if method == DbMethod::MeshDijkstra {
                    out.mesh_fallbacks += 1;
                }
            }
            None => out.failures += 1,
        }
    }
    if out.ratio_max > 0.0 {
        out.constant = out.ratio_max.max(1.0 / out.ratio_min);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    /// Smallest `a d(x, y) - |ln κ(x) - ln κ(y)|`; non-negative when it holds.
    pub worst_margin: f64,
    pub violations: usize,
    pub samples: usize,
    pub failures: usize,
}

pub fn harnack_check(model: &ConeModel, sampler: &Sampler, n: usize, seed: u64) -> HarnackReport {
    let pairs = sample_pairs(model, sampler, n, seed);
    let a = model.a;
    let margins: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(x, y)| {
            let d = geometry::distance(model, x, y).ok()?;
            Some(a * d - (kappa(model, x).ln() - kappa(model, y).ln()).abs())
        })
        .collect();
    let mut out = HarnackReport { worst_margin: f64::INFINITY, violations: 0, samples: n, failures: 0 };
    for m in margins {
        match m {
            Some(m) => {
                out.worst_margin = out.worst_margin.min(m);
                if m < -1e-9 {
                    out.violations += 1;
                }
            }
            None => out.failures += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_diagonal, make_halfplane};

    #[test]
    fn halfplane_distance_is_euclidean() {
        let m = make_halfplane(1.0).unwrap();
        let v = d_b(&m, &Point::planar(0.0, 0.0), &Point::planar(3.0, 0.0)).unwrap();
        assert_eq!(v.method, DbMethod::Oracle);
        assert!((v.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_distance_closed_form() {
        let m = make_halfplane(1.0).unwrap();
        assert!((boundary_distance(&m, &Point::planar(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((boundary_distance(&m, &Point::planar(0.0, 4f64.ln())) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn vertical_ray_length_tends_to_one() {
        let m = make_halfplane(1.0).unwrap();
        let path = geometry::geodesic_connect(&m, &Point::planar(0.0, 0.0), &Point::planar(0.0, 30.0), 1e-9).unwrap();
        assert!((length_b(&m, &path) - 1.0).abs() < 1e-9);
        let rep = uniform_curve_check(&m, &path).unwrap();
        assert!((rep.l - 1.0).abs() < 1e-9, "{rep:?}");
    }

    #[test]
    fn semicircle_is_uniform() {
        let m = make_halfplane(1.0).unwrap();
        let path = geometry::geodesic_connect(&m, &Point::planar(-4.0, 0.0), &Point::planar(4.0, 0.0), 1e-9).unwrap();
        let rep = uniform_curve_check(&m, &path).unwrap();
        assert!(rep.l <= 10.0 && rep.l >= 1.0, "{rep:?}");
    }

    #[test]
    fn diagonal_bounds_are_ordered() {
        let m = make_diagonal(&[1.0, 2.0]).unwrap();
        let v = d_b(&m, &Point::new(vec![0.0, 0.0], 0.0), &Point::new(vec![1.0, -2.0], 0.5)).unwrap();
        assert_eq!(v.method, DbMethod::GeodesicFamily);
        assert!(v.bounds.0 <= v.value && v.value <= v.bounds.1);
    }

    #[test]
    fn subwhitney_at_boundary_point() {
        let m = make_halfplane(1.0).unwrap();
        let sw = subwhitney_center(&m, &Anchor::Boundary(BoundaryPoint { u: vec![0.0] }), 1.0, 1.0).unwrap();
        assert!(sw.holds, "{sw:?}");
        assert_eq!(sw.case, CenterCase::ThirdOfSegment);
        assert!((sw.boundary_distance - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cone_sandwich_on_halfplane() {
        let m = make_halfplane(1.0).unwrap();
        let rep = cone_ball_inclusions(&m, &Point::planar(0.0, 0.0), 1.0, 400, 7).unwrap();
        assert!(rep.l_star <= 4.0 && rep.t_star <= 4f64.ln(), "{rep:?}");
        assert_eq!(rep.inconclusive, 0);
    }

    #[test]
    fn cone_region_membership() {
        let m = make_halfplane(1.0).unwrap();
        let c = ConeRegion::full(Point::planar(0.0, 0.0), 1.0);
        assert!(c.contains(&m, &Point::planar(0.5, 1.0)).unwrap());
        assert!(!c.contains(&m, &Point::planar(0.5, -1.0)).unwrap());
        assert!(!c.contains(&m, &Point::planar(1.5, 1.0)).unwrap());
        assert!(c.contains_boundary(&m, &BoundaryPoint { u: vec![-0.9] }).unwrap());
    }
}
