//! Graph shortest paths on a chart mesh, refined by polyline relaxation.
//!
//! Used only as an independent check of the geodesic solvers. The relaxed
//! polyline is an admissible curve, so its length bounds the distance from
//! above up to the Simpson error of each segment.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::{chord_length, halfplane, GeometryError};
use crate::models::{ConeModel, Point};

#[derive(Debug, Clone, Serialize)]
pub struct MeshEstimate {
    /// Dijkstra length on the stencil graph.
    pub graph_length: f64,
    /// Length after multilevel relaxation of the graph path.
    pub refined_length: f64,
    pub grid: usize,
    pub polyline: Vec<(f64, f64)>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// The 32 primitive offsets with entries of absolute value at most 3.
pub fn stencil() -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for di in -3i64..=3 {
        for dj in -3i64..=3 {
            if (di, dj) != (0, 0) && gcd(di, dj) == 1 {
                out.push((di, dj));
            }
        }
    }
    out
}

/// Length functional: the model metric, optionally scaled by `e^{-a t}`.
#[derive(Clone, Copy)]
struct Metric<'m> {
    model: &'m ConeModel,
    conformal: Option<f64>,
}

impl Metric<'_> {
    fn weight(&self, t: f64) -> f64 {
        self.conformal.map_or(1.0, |a| (-a * t).exp())
    }

    /// Composite Simpson with panels no wider than 0.05 in the chart, so
    /// long relaxed segments cannot exploit a coarse rule.
    fn seg_len(&self, p: (f64, f64), q: (f64, f64)) -> f64 {
        let (du, dt) = (q.0 - p.0, q.1 - p.1);
        let panels = ((du.hypot(dt) / 0.05).ceil() as usize).max(1);
        if panels == 1 && self.conformal.is_none() {
            return chord_length(self.model, &Point::planar(p.0, p.1), &Point::planar(q.0, q.1));
        }
        let f = |s: f64| {
            let (u, t) = (p.0 + s * du, p.1 + s * dt);
            self.weight(t) * self.model.speed(&Point::planar(u, t), &[du], dt)
        };
        let h = 1.0 / panels as f64;
        (0..panels)
            .map(|k| {
                let s0 = k as f64 * h;
                (f(s0) + 4.0 * f(s0 + 0.5 * h) + f(s0 + h)) * h / 6.0
            })
            .sum()
    }

    fn polyline_length(&self, pts: &[(f64, f64)]) -> f64 {
        pts.windows(2).map(|w| self.seg_len(w[0], w[1])).sum()
    }
}

/// Shortest-path estimate between `x` and `y` on a `grid × grid` mesh.
pub fn mesh_distance(model: &ConeModel, x: &Point, y: &Point, grid: usize) -> Result<MeshEstimate, GeometryError> {
    mesh_core(Metric { model, conformal: None }, x, y, grid)
}

/// Same estimate for the metric rescaled by `e^{-a t}`.
pub fn mesh_distance_conformal(model: &ConeModel, a: f64, x: &Point, y: &Point, grid: usize) -> Result<MeshEstimate, GeometryError> {
    mesh_core(Metric { model, conformal: Some(a) }, x, y, grid)
}

fn mesh_core(metric: Metric<'_>, x: &Point, y: &Point, grid: usize) -> Result<MeshEstimate, GeometryError> {
    let model = metric.model;
    if model.dim_u != 1 || x.dim() != 1 || y.dim() != 1 {
        return Err(GeometryError::Unsupported("mesh oracle needs one unstable coordinate".into()));
    }
    let n = grid.max(16);
    let du = (x.u[0] - y.u[0]).abs();
    let low = halfplane::min_height(model.a, x, y).min(x.t.min(y.t));
    let (u_lo, u_hi) = (x.u[0].min(y.u[0]) - 0.25 * du - 0.5, x.u[0].max(y.u[0]) + 0.25 * du + 0.5);
    let (t_lo, t_hi) = (low - 1.0, x.t.max(y.t) + 0.5);
    let hu = (u_hi - u_lo) / (n - 1) as f64;
    let ht = (t_hi - t_lo) / (n - 1) as f64;
    let coord = |i: usize, j: usize| (u_lo + hu * i as f64, t_lo + ht * j as f64);

    // φ on the half-step grid so Simpson midpoints are table lookups.
    let m = 2 * n - 1;
    let mut phi = vec![0.0; m * m];
    let mut wts = vec![1.0; m];
    for i in 0..m {
        for j in 0..m {
            let t = t_lo + 0.5 * ht * j as f64;
            phi[i * m + j] = model.phi(0, &[u_lo + 0.5 * hu * i as f64], t);
            wts[j] = metric.weight(t);
        }
    }
    let speed = |hi: usize, hj: usize, du: f64, dt: f64| {
        let p = phi[hi * m + hj];
        wts[hj] * (dt * dt + p * p * du * du).sqrt()
    };

    let n_nodes = n * n + 2;
    let (src, dst) = (n * n, n * n + 1);
    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut prev = vec![usize::MAX; n_nodes];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry(0.0, src));

    let near = |p: &Point| -> Vec<(usize, usize)> {
        let ci = ((p.u[0] - u_lo) / hu).round() as i64;
        let cj = ((p.t - t_lo) / ht).round() as i64;
        let mut v = Vec::new();
        for i in (ci - 2).max(0)..=(ci + 2).min(n as i64 - 1) {
            for j in (cj - 2).max(0)..=(cj + 2).min(n as i64 - 1) {
                v.push((i as usize, j as usize));
            }
        }
        v
    };
    let near_y = near(y);
    let offs = stencil();

    while let Some(Entry(d, k)) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        if k == dst {
            break;
        }
        let mut relax = |to: usize, w: f64, heap: &mut BinaryHeap<Entry>| {
            if d + w < dist[to] {
                dist[to] = d + w;
                prev[to] = k;
                heap.push(Entry(d + w, to));
            }
        };
        if k == src {
            for (i, j) in near(x) {
                let w = metric.seg_len((x.u[0], x.t), coord(i, j));
                relax(i * n + j, w, &mut heap);
            }
            continue;
        }
        let (i, j) = (k / n, k % n);
        for &(di, dj) in &offs {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni >= n as i64 || nj >= n as i64 {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            let (dux, dtx) = (hu * di as f64, ht * dj as f64);
            let w = (speed(2 * i, 2 * j, dux, dtx)
                + 4.0 * speed((2 * i as i64 + di) as usize, (2 * j as i64 + dj) as usize, dux, dtx)
                + speed(2 * ni, 2 * nj, dux, dtx))
                / 6.0;
            relax(ni * n + nj, w, &mut heap);
        }
        if near_y.contains(&(i, j)) {
            let w = metric.seg_len(coord(i, j), (y.u[0], y.t));
            relax(dst, w, &mut heap);
        }
    }
    if !dist[dst].is_finite() {
        return Err(GeometryError::NonConvergence { best_residual: f64::INFINITY, iterations: 0 });
    }
    let mut path = vec![(y.u[0], y.t)];
    let mut k = prev[dst];
    while k != src {
        path.push(coord(k / n, k % n));
        k = prev[k];
    }
    path.push((x.u[0], x.t));
    path.reverse();

    let refined = relax(metric, &path);
    Ok(MeshEstimate { graph_length: dist[dst], refined_length: metric.polyline_length(&refined), grid: n, polyline: refined })
}

fn resample(pts: &[(f64, f64)], segments: usize) -> Vec<(f64, f64)> {
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1));
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(segments + 1);
    let mut idx = 0;
    for k in 0..=segments {
        let target = total * k as f64 / segments as f64;
        while idx + 1 < cum.len() - 1 && cum[idx + 1] < target {
            idx += 1;
        }
        let span = cum[idx + 1] - cum[idx];
        let f = if span > 0.0 { ((target - cum[idx]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push((pts[idx].0 + f * (pts[idx + 1].0 - pts[idx].0), pts[idx].1 + f * (pts[idx + 1].1 - pts[idx].1)));
    }
    out[0] = pts[0];
    out[segments] = *pts.last().unwrap();
    out
}

fn local_newton(metric: Metric<'_>, a: (f64, f64), p: (f64, f64), b: (f64, f64), scale: f64) -> (f64, f64) {
    let f = |q: (f64, f64)| metric.seg_len(a, q) + metric.seg_len(q, b);
    let h = 1e-4 * scale.max(1e-12);
    let mut p = p;
    for _ in 0..8 {
        let f0 = f(p);
        let fx1 = f((p.0 + h, p.1));
        let fx0 = f((p.0 - h, p.1));
        let fy1 = f((p.0, p.1 + h));
        let fy0 = f((p.0, p.1 - h));
        let fxy = (f((p.0 + h, p.1 + h)) - f((p.0 + h, p.1 - h)) - f((p.0 - h, p.1 + h)) + f((p.0 - h, p.1 - h))) / (4.0 * h * h);
        let (gx, gy) = ((fx1 - fx0) / (2.0 * h), (fy1 - fy0) / (2.0 * h));
        let (hxx, hyy) = ((fx1 - 2.0 * f0 + fx0) / (h * h), (fy1 - 2.0 * f0 + fy0) / (h * h));
        let det = hxx * hyy - fxy * fxy;
        let (mut sx, mut sy) = if det > 0.0 && hxx > 0.0 {
            (-(hyy * gx - fxy * gy) / det, -(hxx * gy - fxy * gx) / det)
        } else {
            (-gx * scale * 0.1, -gy * scale * 0.1)
        };
        let cap = 0.5 * scale;
        let norm = sx.hypot(sy);
        if norm > cap {
            sx *= cap / norm;
            sy *= cap / norm;
        }
        let mut lam = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            let q = (p.0 + lam * sx, p.1 + lam * sy);
            if f(q) < f0 {
                p = q;
                moved = true;
                break;
            }
            lam *= 0.5;
        }
        if !moved || norm < 1e-12 * scale {
            break;
        }
    }
    p
}

/// Gauss-Seidel relaxation on polylines with 8, 16, ..., 256 segments.
pub fn relax_polyline(model: &ConeModel, path: &[(f64, f64)]) -> Vec<(f64, f64)> {
    relax(Metric { model, conformal: None }, path)
}

fn relax(metric: Metric<'_>, path: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = resample(path, 8);
    let mut segs = 8;
    loop {
        let mut last = metric.polyline_length(&pts);
        for _ in 0..60 {
            for k in 1..pts.len() - 1 {
                let scale = (pts[k + 1].0 - pts[k - 1].0).hypot(pts[k + 1].1 - pts[k - 1].1);
                pts[k] = local_newton(metric, pts[k - 1], pts[k], pts[k + 1], scale);
            }
            let now = metric.polyline_length(&pts);
            if last - now < 1e-13 * now {
                break;
            }
            last = now;
        }
        if segs >= 256 {
            return pts;
        }
        let mut finer = Vec::with_capacity(2 * pts.len());
        for w in pts.windows(2) {
            finer.push(w[0]);
            finer.push((0.5 * (w[0].0 + w[1].0), 0.5 * (w[0].1 + w[1].1)));
        }
        finer.push(*pts.last().unwrap());
        pts = finer;
        segs *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_halfplane;

    #[test]
    fn stencil_has_32_directions() {
        assert_eq!(stencil().len(), 32);
    }

    #[test]
    fn mesh_bounds_halfplane_distance() {
        let m = make_halfplane(1.0).unwrap();
        let x = Point::planar(0.0, 0.0);
        let y = Point::planar(4.0, 0.0);
        let est = mesh_distance(&m, &x, &y, 128).unwrap();
        let exact = 9f64.acosh();
        assert!(est.graph_length > exact - 1e-9);
        assert!(est.refined_length >= exact - 1e-6);
        assert!(est.refined_length - exact < 1e-3, "{}", est.refined_length - exact);
    }

    #[test]
    fn conformal_mesh_recovers_euclidean_chart() {
        let m = make_halfplane(1.0).unwrap();
        let x = Point::planar(0.0, 0.0);
        let y = Point::planar(2.0, 0.5);
        let exact = halfplane::euclid_uy(1.0, &x, &y);
        let est = mesh_distance_conformal(&m, 1.0, &x, &y, 96).unwrap();
        assert!(est.refined_length >= exact - 1e-6);
        assert!(est.refined_length - exact < 1e-3, "{}", est.refined_length - exact);
    }
}
