//! Closed forms for constant curvature `-a²`: the chart is isometric to the
//! upper half-space with coordinates `(u, y)`, `y = e^{-at}/a`, scaled by `1/a`.

use super::{GeodesicPath, GeodesicSample, SolverMethod};
use crate::models::Point;

pub fn y_coord(a: f64, t: f64) -> f64 {
    (-a * t).exp() / a
}

pub fn t_from_y(a: f64, y: f64) -> f64 {
    -(a * y).ln() / a
}

/// Chart distance in `(u, y)` coordinates, which equals `d_b` for this model.
pub fn euclid_uy(a: f64, x: &Point, y: &Point) -> f64 {
    let du2: f64 = x.u.iter().zip(&y.u).map(|(p, q)| (p - q) * (p - q)).sum();
    let dy = y_coord(a, x.t) - y_coord(a, y.t);
    (du2 + dy * dy).sqrt()
}

pub fn distance(a: f64, x: &Point, y: &Point) -> f64 {
    let y1 = y_coord(a, x.t);
    let y2 = y_coord(a, y.t);
    let du2: f64 = x.u.iter().zip(&y.u).map(|(p, q)| (p - q) * (p - q)).sum();
    let dt = (x.t - y.t).abs();
    if du2 == 0.0 {
        return dt;
    }
    let num = (du2 + (y1 - y2) * (y1 - y2)).sqrt();
    2.0 / a * (num / (2.0 * (y1 * y2).sqrt())).asinh()
}

fn ln_cosh(s: f64) -> f64 {
    let s = s.abs();
    s + (-2.0 * s).exp().ln_1p() - std::f64::consts::LN_2
}

/// Semicircle data of the geodesic through `x` and `y` in the plane spanned by
/// the vertical and `Δu`.
#[derive(Debug, Clone)]
pub struct Semicircle {
    pub dir: Vec<f64>,
    pub center: f64,
    pub radius: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl Semicircle {
    /// Height of the apex, `-(1/a) log(aR)`.
    pub fn apex_height(&self, a: f64) -> f64 {
        -(a * self.radius).ln() / a
    }
}

pub fn semicircle(a: f64, x: &Point, y: &Point) -> Option<Semicircle> {
    let du: Vec<f64> = y.u.iter().zip(&x.u).map(|(q, p)| q - p).collect();
    let d = du.iter().map(|v| v * v).sum::<f64>().sqrt();
    if d == 0.0 {
        return None;
    }
    let y1 = y_coord(a, x.t);
    let y2 = y_coord(a, y.t);
    let c = (d * d + y2 * y2 - y1 * y1) / (2.0 * d);
    let r = c.hypot(y1);
    Some(Semicircle {
        dir: du.iter().map(|v| v / d).collect(),
        center: c,
        radius: r,
        sigma_x: (-c / y1).asinh(),
        sigma_y: ((d - c) / y2).asinh(),
    })
}

/// Minimum height along the geodesic joining `x` and `y`.
pub fn min_height(a: f64, x: &Point, y: &Point) -> f64 {
    match semicircle(a, x, y) {
        None => x.t.min(y.t),
        Some(sc) => {
            if sc.sigma_x <= 0.0 && sc.sigma_y >= 0.0 {
                sc.apex_height(a)
            } else {
                x.t.min(y.t)
            }
        }
    }
}

pub fn geodesic(a: f64, x: &Point, y: &Point, n_samples: usize) -> GeodesicPath {
    let n = n_samples.max(2);
    let mut samples = Vec::with_capacity(n);
    match semicircle(a, x, y) {
        None => {
            let len = (y.t - x.t).abs();
            let dir = (y.t - x.t).signum();
            for k in 0..n {
                let s = len * k as f64 / (n - 1) as f64;
                let t = x.t + dir * s;
                samples.push(GeodesicSample { point: Point::new(x.u.clone(), t), s, b: t, b_prime: dir });
            }
            GeodesicPath::new(samples, len, x.clone(), y.clone(), 0.0, SolverMethod::ClosedForm)
        }
        Some(sc) => {
            let len = (sc.sigma_y - sc.sigma_x) / a;
            let ln_ar = (a * sc.radius).ln();
            for k in 0..n {
                let s = len * k as f64 / (n - 1) as f64;
                let sigma = if k == n - 1 { sc.sigma_y } else { sc.sigma_x + a * s };
                let along = sc.center + sc.radius * sigma.tanh();
                let t = (ln_cosh(sigma) - ln_ar) / a;
                let u: Vec<f64> = x.u.iter().zip(&sc.dir).map(|(p, e)| p + e * along).collect();
                samples.push(GeodesicSample { point: Point::new(u, t), s, b: t, b_prime: sigma.tanh() });
            }
            let last = samples.last().expect("nonempty").point.clone();
            let resid = chart_gap(&last, y);
            GeodesicPath::new(samples, len, x.clone(), y.clone(), resid, SolverMethod::ClosedForm)
        }
    }
}

pub(crate) fn chart_gap(p: &Point, q: &Point) -> f64 {
    let du2: f64 = p.u.iter().zip(&q.u).map(|(a, b)| (a - b) * (a - b)).sum();
    (du2 + (p.t - q.t).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_values() {
        let d = distance(1.0, &Point::planar(0.0, 0.0), &Point::planar(4.0, 0.0));
        assert!((d - 9f64.acosh()).abs() < 1e-12);
        let d = distance(1.0, &Point::planar(0.0, 0.0), &Point::planar(0.0, 3.0));
        assert!((d - 3.0).abs() < 1e-15);
    }

    #[test]
    fn semicircle_length_matches_distance() {
        let x = Point::planar(-1.0, 0.3);
        let y = Point::planar(2.5, -1.2);
        for a in [0.5, 1.0, 2.0] {
            let g = geodesic(a, &x, &y, 65);
            assert!((g.total_length - distance(a, &x, &y)).abs() < 1e-12);
            assert!(g.solver_residual < 1e-12);
        }
    }

    #[test]
    fn apex_of_symmetric_pair() {
        let h = min_height(1.0, &Point::planar(0.0, 0.0), &Point::planar(4.0, 0.0));
        assert!((h + 5f64.sqrt().ln()).abs() < 1e-12);
    }
}
