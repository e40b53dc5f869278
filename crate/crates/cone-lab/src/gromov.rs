//! Gromov products, empirical hyperbolicity constants and visual metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{self, GeometryError};
use crate::hamenstadt::{self, HamenstadtError};
use crate::models::{ConeModel, Point};

/// `(x|y)_b = ½(b(x) + b(y) - d(x, y))`.
pub fn gromov_product_b(model: &ConeModel, x: &Point, y: &Point) -> Result<f64, GeometryError> {
    Ok(0.5 * (x.t + y.t - geometry::distance(model, x, y)?))
}

/// `(x|y)_p = ½(d(x, p) + d(y, p) - d(x, y))`.
pub fn gromov_product_p(model: &ConeModel, x: &Point, y: &Point, p: &Point) -> Result<f64, GeometryError> {
    let d = |a: &Point, b: &Point| geometry::distance(model, a, b);
    Ok(0.5 * (d(x, p)? + d(y, p)? - d(x, y)?))
}

/// Gap between the two smallest entries: the least `δ` making this a δ-triple.
pub fn triple_defect(a: f64, b: f64, c: f64) -> f64 {
    let mut v = [a, b, c];
    v.sort_by(f64::total_cmp);
    v[1] - v[0]
}

/// Uniform sampling box in the chart.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sampler {
    pub u_half_width: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Sampler {
    pub fn new(u_half_width: f64, t_min: f64, t_max: f64) -> Self {
        Self { u_half_width, t_min, t_max }
    }

    /// Default box for a model: `|t| ≤ 5`, or `|t| ≤ 8` for warped models.
    pub fn for_model(model: &ConeModel) -> Self {
        let h = if model.axis_rates().is_some() { 5.0 } else { 8.0 };
        Self::new(20.0, -h, h)
    }

    /// Same centre, every extent doubled.
    pub fn doubled(&self) -> Self {
        let mid = 0.5 * (self.t_min + self.t_max);
        let half = self.t_max - mid;
        Self::new(2.0 * self.u_half_width, mid - 2.0 * half, mid + 2.0 * half)
    }

    pub fn sample(&self, rng: &mut impl Rng, dim: usize) -> Point {
        let u = (0..dim).map(|_| rng.gen_range(-self.u_half_width..=self.u_half_width)).collect();
        Point::new(u, rng.gen_range(self.t_min..=self.t_max))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaReport {
    /// Worst b-based triple defect.
    pub delta_b: f64,
    /// Worst four-point defect with a sampled basepoint.
    pub delta_4pt: f64,
    /// Worst cross-difference defect, with its ratio to the sub-triple defects.
    pub cross_difference: f64,
    pub cross_difference_excess: f64,
    /// Largest `(x|y)_b - min(b(x), b(y))`; non-positive up to rounding.
    pub lip_height_excess: f64,
    pub n_samples: usize,
    pub failures: usize,
    /// `(n, delta_b, delta_4pt)` over nested prefixes `n/4, n/2, n`.
    pub refinement_history: Vec<(usize, f64, f64)>,
    /// Relative change of both defects between the first and last prefix.
    pub relative_drift: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct QuadDefects {
    delta_b: f64,
    delta_4pt: f64,
    cross: f64,
    cross_excess: f64,
    lip: f64,
}

fn quad_defects(model: &ConeModel, q: &[Point; 5]) -> Result<QuadDefects, GeometryError> {
    let mut d = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in (i + 1)..5 {
            d[i][j] = geometry::distance(model, &q[i], &q[j])?;
            d[j][i] = d[i][j];
        }
    }
    let gb = |i: usize, j: usize| 0.5 * (q[i].t + q[j].t - d[i][j]);
    let gp = |i: usize, j: usize| 0.5 * (d[i][4] + d[j][4] - d[i][j]);
    let mut out = QuadDefects::default();
    let triples = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
    for &(i, j, k) in &triples {
        out.delta_b = out.delta_b.max(triple_defect(gb(i, j), gb(i, k), gb(j, k)));
        out.delta_4pt = out.delta_4pt.max(triple_defect(gp(i, j), gp(i, k), gp(j, k)));
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            out.lip = out.lip.max(gb(i, j) - q[i].t.min(q[j].t));
        }
    }
    // Cross-difference triple of Q = (x, y, z, u) based at the fifth point.
    let a_o = triple_defect(gp(0, 1) + gp(2, 3), gp(0, 2) + gp(1, 3), gp(0, 3) + gp(1, 2));
    let a_b = triple_defect(gb(0, 1) + gb(2, 3), gb(0, 2) + gb(1, 3), gb(0, 3) + gb(1, 2));
    out.cross = a_o.max(a_b);
    out.cross_excess = (a_o - 2.0 * out.delta_b).max(a_b - 2.0 * out.delta_b).max((a_o - a_b).abs() - 1e-9);
    Ok(out)
}

/// Samples `n` quintuples and records the worst defects.
pub fn delta_estimate(model: &ConeModel, sampler: &Sampler, n: usize, seed: u64) -> DeltaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quads: Vec<[Point; 5]> = (0..n).map(|_| std::array::from_fn(|_| sampler.sample(&mut rng, model.dim_u))).collect();
    let results: Vec<Option<QuadDefects>> = quads.par_iter().map(|q| quad_defects(model, q).ok()).collect();
    let mut acc = QuadDefects::default();
    let mut failures = 0;
    let mut history = Vec::new();
    let marks = [n / 4, n / 2, n];
    for (k, r) in results.iter().enumerate() {
        match r {
            Some(q) => {
                acc.delta_b = acc.delta_b.max(q.delta_b);
                acc.delta_4pt = acc.delta_4pt.max(q.delta_4pt);
                acc.cross = acc.cross.max(q.cross);
                acc.cross_excess = acc.cross_excess.max(q.cross_excess);
                acc.lip = acc.lip.max(q.lip);
            }
            None => failures += 1,
        }
        if marks.contains(&(k + 1)) && history.last().is_none_or(|h: &(usize, f64, f64)| h.0 != k + 1) {
            history.push((k + 1, acc.delta_b, acc.delta_4pt));
        }
    }
    let drift = match (history.first(), history.last()) {
        (Some(f), Some(l)) if l.1 > 0.0 && l.2 > 0.0 => ((l.1 - f.1) / l.1).max((l.2 - f.2) / l.2),
        _ => 0.0,
    };
    DeltaReport {
        delta_b: acc.delta_b,
        delta_4pt: acc.delta_4pt,
        cross_difference: acc.cross,
        cross_difference_excess: acc.cross_excess,
        lip_height_excess: acc.lip,
        n_samples: n,
        failures,
        refinement_history: history,
        relative_drift: drift,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinHeightReport {
    pub b_min: f64,
    pub product: f64,
    /// `|b_min - (x|y)_b|`.
    pub discrepancy: f64,
    /// Worst `|d(x, w) - (b(x) - b(w))|` over `w` on the descending arcs.
    pub segment_defect: f64,
}

/// Compares the lowest point of the geodesic with the b-based product.
pub fn min_height_check(model: &ConeModel, x: &Point, y: &Point) -> Result<MinHeightReport, GeometryError> {
    if x == y {
        return Ok(MinHeightReport { b_min: x.t, product: x.t, discrepancy: 0.0, segment_defect: 0.0 });
    }
    let path = geometry::geodesic_connect(model, x, y, 1e-9)?;
    let (k_min, b_min) = path.samples.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, s)| if s.b < acc.1 { (k, s.b) } else { acc });
    let len = path.total_length;
    let product = 0.5 * (x.t + y.t - len);
    let mut seg: f64 = 0.0;
    for (k, s) in path.samples.iter().enumerate() {
        let defect = if k <= k_min { (s.s - (x.t - s.b)).abs() } else { ((len - s.s) - (y.t - s.b)).abs() };
        seg = seg.max(defect);
    }
    Ok(MinHeightReport { b_min, product, discrepancy: (b_min - product).abs(), segment_defect: seg })
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum VisualError {
    #[error(transparent)]
    Hamenstadt(#[from] HamenstadtError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("points are closer than 1 (d = {0})")]
    TooClose(f64),
}

/// `e^{-a(y|z)_b} / (e^{-ab(x)} ρ_x(P_x y, P_x z))` for `d(y, z) ≥ 1`.
pub fn visual_metric_check(model: &ConeModel, x: &Point, y: &Point, z: &Point) -> Result<f64, VisualError> {
    let d = geometry::distance(model, y, z)?;
    if d < 1.0 {
        return Err(VisualError::TooClose(d));
    }
    let prod = 0.5 * (y.t + z.t - d);
    let r = hamenstadt::rho(model, &geometry::project(x, y), &geometry::project(x, z), hamenstadt::default_tol(model))?.value;
    Ok((-model.a * prod).exp() / ((-model.a * x.t).exp() * r))
}

/// Visual ratio for the ascending rays above `u_y` and `u_z`, truncated at `height`.
pub fn visual_ray_ratio(model: &ConeModel, x: &Point, u_y: &[f64], u_z: &[f64], height: f64) -> Result<f64, VisualError> {
    visual_metric_check(model, x, &Point::new(u_y.to_vec(), height), &Point::new(u_z.to_vec(), height))
}

#[derive(Debug, Clone, Serialize)]
pub struct VisualReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max_ratio, 1/min_ratio)`.
    pub constant: f64,
    pub samples: usize,
    pub rejected: usize,
}

/// Samples the visual ratio over random `(x, y, z)` with `d(y, z) ≥ 1`.
pub fn visual_metric_sample(model: &ConeModel, sampler: &Sampler, n: usize, seed: u64) -> VisualReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[Point; 3]> = (0..n).map(|_| std::array::from_fn(|_| sampler.sample(&mut rng, model.dim_u))).collect();
    let ratios: Vec<Option<f64>> = triples.par_iter().map(|[x, y, z]| visual_metric_check(model, x, y, z).ok()).collect();
    let ok: Vec<f64> = ratios.into_iter().flatten().collect();
    let min_ratio = ok.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ok.iter().copied().fold(0.0, f64::max);
    VisualReport { min_ratio, max_ratio, constant: max_ratio.max(1.0 / min_ratio), samples: ok.len(), rejected: n - ok.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_halfplane;

    #[test]
    fn product_examples() {
        let m = make_halfplane(1.0).unwrap();
        let x = Point::planar(0.0, 3.0);
        assert_eq!(gromov_product_b(&m, &x, &x).unwrap(), 3.0);
        assert_eq!(gromov_product_b(&m, &Point::planar(0.0, 2.0), &Point::planar(0.0, 4.0)).unwrap(), 2.0);
        let p = gromov_product_b(&m, &Point::planar(0.0, 0.0), &Point::planar(4.0, 0.0)).unwrap();
        assert!((p + 0.5 * 9f64.acosh()).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_have_no_defect() {
        let m = make_halfplane(1.0).unwrap();
        let q =
            [Point::planar(1.0, -1.0), Point::planar(1.0, 0.5), Point::planar(1.0, 2.0), Point::planar(1.0, 3.0), Point::planar(1.0, 4.0)];
        let d = quad_defects(&m, &q).unwrap();
        assert!(d.delta_b < 1e-12 && d.delta_4pt < 1e-12);
    }

    #[test]
    fn min_height_of_symmetric_pair() {
        let m = make_halfplane(1.0).unwrap();
        let r = min_height_check(&m, &Point::planar(-4.0, 0.0), &Point::planar(4.0, 0.0)).unwrap();
        assert!(r.discrepancy <= 0.7, "{}", r.discrepancy);
        let v = min_height_check(&m, &Point::planar(0.0, 0.0), &Point::planar(0.0, 2.0)).unwrap();
        assert!(v.discrepancy < 1e-12);
    }

    #[test]
    fn visual_ratio_scaling_invariance() {
        let m = make_halfplane(1.0).unwrap();
        let (x, y, z) = (Point::planar(0.0, 0.0), Point::planar(0.0, 0.0), Point::planar(4.0, 0.0));
        let r0 = visual_metric_check(&m, &x, &y, &z).unwrap();
        let x1 = Point::planar(0.0, 2.0);
        let r1 = visual_metric_check(&m, &x1, &y, &z).unwrap();
        assert!((r0 - r1).abs() < 1e-6 * r0);
        assert!((1.0 / 4.0..=4.0).contains(&r0));
    }
}
