//! Angle shooting for two-dimensional metrics `dτ² + w(u, τ)² du²`.
//!
//! A unit-speed geodesic leaves the start point with `τ'(0) = sin θ`; the
//! height at which it reaches the target `u` is increasing in `θ`, so the
//! boundary-value problem reduces to a scalar bracketed root find. Convexity
//! (or concavity) of `τ` along geodesics lets hopeless shots abort early.

use super::{halfplane, sample_count, GeodesicPath, GeodesicSample, GeometryError, SolverMethod};
use crate::models::{ConeModel, Point};
use crate::numerics::{dopri5, OdeOptions, OdeSolution, OdeStop};
use std::f64::consts::FRAC_PI_2;

/// `(log w, ∂ᵤ log w, ∂τ log w)` at `(u, τ)`.
pub trait LogWarp: Fn(f64, f64) -> (f64, f64, f64) {}
impl<F: Fn(f64, f64) -> (f64, f64, f64)> LogWarp for F {}

/// Sign of `τ''` along geodesics: `+1` convex (ambient height), `-1` concave
/// (uniformized `y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Convex,
    Concave,
}

#[derive(Debug, Clone)]
pub struct Shot {
    pub theta: f64,
    pub length: f64,
    /// `|τ(hit) - τ₁|`.
    pub residual: f64,
    pub iterations: usize,
    /// Consecutive arcs from the first endpoint to the second.
    pub pieces: Vec<Piece>,
}

/// An integrated arc, traversed backwards when `reversed`.
#[derive(Debug, Clone)]
pub struct Piece {
    pub solution: OdeSolution<4>,
    pub reversed: bool,
}

impl Piece {
    fn len(&self) -> f64 {
        self.solution.s_end - self.solution.s0
    }

    fn eval(&self, s: f64) -> (f64, f64, f64) {
        if self.reversed {
            let st = self.solution.eval(self.solution.s_end - s);
            (st[0], st[1], -st[3])
        } else {
            let st = self.solution.eval(self.solution.s0 + s);
            (st[0], st[1], st[3])
        }
    }
}

impl Shot {
    /// `(u, τ, τ')` at arclength `s` from the first endpoint.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let mut rest = s.max(0.0);
        for (k, p) in self.pieces.iter().enumerate() {
            if rest <= p.len() || k + 1 == self.pieces.len() {
                return p.eval(rest.min(p.len()));
            }
            rest -= p.len();
        }
        unreachable!("shot has at least one piece")
    }

    fn reversed(mut self) -> Self {
        self.pieces.reverse();
        for p in &mut self.pieces {
            p.reversed = !p.reversed;
        }
        self
    }
}

enum Miss {
    Hit(f64, Box<OdeSolution<4>>),
    Over,
    Under,
}

impl Miss {
    fn sign(&self) -> f64 {
        match self {
            Miss::Hit(m, _) => m.signum(),
            Miss::Over => 1.0,
            Miss::Under => -1.0,
        }
    }
}

/// Largest terminal miss accepted once the angle bracket is exhausted.
pub const ACCEPT_MISS: f64 = 1e-4;

pub struct Problem<W: LogWarp> {
    pub warp: W,
    pub curvature: Curvature,
    pub start: (f64, f64),
    pub target: (f64, f64),
    /// Shots with `τ` below this value abort as undershoots.
    pub tau_floor: f64,
    pub s_max: f64,
}

impl<W: LogWarp> Problem<W> {
    fn shoot(&self, theta: f64) -> Miss {
        let (u0, t0) = self.start;
        let (u1, t1) = self.target;
        let dir = if u1 >= u0 { 1.0 } else { -1.0 };
        let (l0, _, _) = (self.warp)(u0, t0);
        let y0 = [u0, t0, dir * theta.cos() * (-l0).exp(), theta.sin()];
        let opts = OdeOptions { s_max: self.s_max, h_max: 1.0, ..Default::default() };
        let warp = &self.warp;
        let curv = self.curvature;
        let floor = self.tau_floor;
        let sol = dopri5(
            |_, s: &[f64; 4]| {
                let (l, lu, lt) = warp(s[0], s[1]);
                let (up, tp) = (s[2], s[3]);
                [up, tp, -lu * up * up - 2.0 * lt * tp * up, (2.0 * l).exp() * lt * up * up]
            },
            0.0,
            y0,
            &opts,
            |_, s| dir * (s[0] - u1),
            |_, s| match curv {
                Curvature::Convex => s[3] > 0.0 && s[1] > t1,
                Curvature::Concave => (s[3] < 0.0 && s[1] < t1) || s[1] < floor,
            },
        );
        match sol.stop {
            OdeStop::Event => Miss::Hit(sol.y_end[1] - t1, Box::new(sol)),
            OdeStop::Abort => match curv {
                Curvature::Convex => Miss::Over,
                Curvature::Concave => Miss::Under,
            },
            _ => {
                if sol.y_end[1] > t1 {
                    Miss::Over
                } else {
                    Miss::Under
                }
            }
        }
    }

    /// Solves for the connecting geodesic starting from the guess `theta0`.
    ///
    /// Long geodesics are exponentially sensitive to `θ`; when the bracket
    /// collapses to adjacent floats the best shot is returned if its miss is
    /// below [`ACCEPT_MISS`], with the first-variation length correction
    /// `τ'(end)·(τ₁ - τ(end))` and the miss reported as residual.
    pub fn solve(&self, theta0: f64, tol: f64) -> Result<Shot, GeometryError> {
        let lim = FRAC_PI_2 - 1e-12;
        let theta0 = theta0.clamp(-lim, lim);
        let mut iters = 0;
        let mut best: Option<(f64, f64, Box<OdeSolution<4>>)> = None;
        let record = |theta: f64, m: Miss, best: &mut Option<(f64, f64, Box<OdeSolution<4>>)>| -> (f64, bool) {
            let sg = m.sign();
            if let Miss::Hit(v, sol) = m {
                let done = v.abs() <= tol;
                if best.as_ref().is_none_or(|b| v.abs() < b.1.abs()) {
                    *best = Some((theta, v, sol));
                }
                return (sg, done);
            }
            (sg, false)
        };
        let (s0, done) = record(theta0, self.shoot(theta0), &mut best);
        iters += 1;
        if !done {
            // Expand away from the guess until the miss changes sign.
            let mut step = 0.02;
            let (mut lo, mut hi) = (theta0, theta0);
            let mut bracketed = false;
            let mut finished = false;
            for _ in 0..64 {
                let th = if s0 > 0.0 { (theta0 - step).max(-lim) } else { (theta0 + step).min(lim) };
                let (sg, d) = record(th, self.shoot(th), &mut best);
                iters += 1;
                if d {
                    finished = true;
                    break;
                }
                if sg != s0 {
                    if s0 > 0.0 {
                        lo = th;
                    } else {
                        hi = th;
                    }
                    bracketed = true;
                    break;
                }
                if s0 > 0.0 {
                    hi = th;
                } else {
                    lo = th;
                }
                if th.abs() >= lim {
                    break;
                }
                step *= 2.0;
            }
            if bracketed && !finished {
                // Plain bisection: the shot map is monotone but may be
                // undefined near the edges.
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let (sg, d) = record(mid, self.shoot(mid), &mut best);
                    iters += 1;
                    if d {
                        break;
                    }
                    if sg > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
        }
        match best {
            Some((theta, miss, sol)) if miss.abs() <= tol.max(ACCEPT_MISS) => {
                let correction = if miss.abs() > tol { -sol.y_end[3] * miss } else { 0.0 };
                Ok(Shot {
                    theta,
                    length: sol.s_end + correction,
                    residual: miss.abs(),
                    iterations: iters,
                    pieces: vec![Piece { solution: *sol, reversed: false }],
                })
            }
            Some((_, miss, _)) => Err(GeometryError::NonConvergence { best_residual: miss.abs(), iterations: iters }),
            None => Err(GeometryError::NonConvergence { best_residual: f64::INFINITY, iterations: iters }),
        }
    }
}

impl<W: LogWarp> Problem<W> {
    /// Shoots a fan of `n` angles, bisects every bracket where the miss
    /// changes sign and returns the shortest converged geodesic. Used when
    /// the metric may carry several geodesics between the same endpoints.
    pub fn solve_scan(&self, n: usize, tol: f64) -> Result<Shot, GeometryError> {
        let lim = FRAC_PI_2 - 1e-9;
        let thetas: Vec<f64> = (0..n).map(|k| -lim + 2.0 * lim * k as f64 / (n - 1) as f64).collect();
        let signs: Vec<f64> = thetas.iter().map(|&th| self.shoot(th).sign()).collect();
        let mut iters = n;
        let mut shortest: Option<Shot> = None;
        let mut worst = f64::INFINITY;
        for k in 0..n - 1 {
            if signs[k] == signs[k + 1] {
                continue;
            }
            let (mut lo, mut hi) = (thetas[k], thetas[k + 1]);
            let s_lo = signs[k];
            let mut best: Option<(f64, f64, Box<OdeSolution<4>>)> = None;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let m = self.shoot(mid);
                iters += 1;
                let sg = m.sign();
                if let Miss::Hit(v, sol) = m {
                    if best.as_ref().is_none_or(|b| v.abs() < b.1.abs()) {
                        best = Some((mid, v, sol));
                    }
                    if v.abs() <= tol {
                        break;
                    }
                }
                if sg == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if let Some((theta, miss, sol)) = best {
                if miss.abs() <= tol.max(ACCEPT_MISS) {
                    let correction = if miss.abs() > tol { -sol.y_end[3] * miss } else { 0.0 };
                    let len = sol.s_end + correction;
                    if shortest.as_ref().is_none_or(|s| len < s.length) {
                        shortest = Some(Shot {
                            theta,
                            length: len,
                            residual: miss.abs(),
                            iterations: 0,
                            pieces: vec![Piece { solution: *sol, reversed: false }],
                        });
                    }
                } else {
                    worst = worst.min(miss.abs());
                }
            }
        }
        match shortest {
            Some(mut s) => {
                s.iterations = iters;
                Ok(s)
            }
            None => Err(GeometryError::NonConvergence { best_residual: worst, iterations: iters }),
        }
    }
}

fn planar_only(model: &ConeModel) -> Result<(), GeometryError> {
    if model.dim_u != 1 {
        return Err(GeometryError::Unsupported(format!("angle shooting needs one unstable coordinate, model has {}", model.dim_u)));
    }
    Ok(())
}

fn ambient_problem<'a>(model: &'a ConeModel, x: &Point, y: &Point) -> Problem<impl LogWarp + 'a> {
    Problem {
        warp: move |u: f64, t: f64| {
            let j = model.jet(0, &[u], t);
            (j.log_phi, j.lu, j.lt)
        },
        curvature: Curvature::Convex,
        start: (x.u[0], x.t),
        target: (y.u[0], y.t),
        tau_floor: f64::NEG_INFINITY,
        s_max: 50.0 + 4.0 * ((x.t - y.t).abs() + (x.u[0] - y.u[0]).abs()),
    }
}

fn halfplane_guess(model: &ConeModel, x: &Point, y: &Point) -> f64 {
    let base = 0.5 * (model.a + model.big_a);
    let g = halfplane::geodesic(base, x, y, 2);
    g.samples[0].b_prime.clamp(-1.0, 1.0).asin()
}

/// Ambient geodesic of a one-dimensional model by angle shooting, fired from
/// a fitted apex when the geodesic is expected to turn, otherwise from `x`
/// and then from `y`.
pub fn solve_ambient(model: &ConeModel, x: &Point, y: &Point, tol: f64) -> Result<Shot, GeometryError> {
    planar_only(model)?;
    let mut best: Result<Shot, GeometryError> = Err(GeometryError::NonConvergence { best_residual: f64::INFINITY, iterations: 0 });
    let keep = |cand: Result<Shot, GeometryError>, best: &mut Result<Shot, GeometryError>| {
        let better = match (&cand, &*best) {
            (Ok(c), Ok(b)) => c.residual < b.residual,
            (Ok(_), Err(_)) => true,
            _ => false,
        };
        if better {
            *best = cand;
        }
        matches!(best, Ok(b) if b.residual <= tol)
    };
    let base = 0.5 * (model.a + model.big_a);
    let turning = halfplane::semicircle(base, x, y).is_some_and(|sc| sc.sigma_x < 0.0 && sc.sigma_y > 0.0);
    if turning && keep(solve_from_apex(model, x, y, tol), &mut best) {
        return best;
    }
    if keep(ambient_problem(model, x, y).solve(halfplane_guess(model, x, y), tol), &mut best) {
        return best;
    }
    if keep(ambient_problem(model, y, x).solve(halfplane_guess(model, y, x), tol).map(Shot::reversed), &mut best) {
        return best;
    }
    if !turning {
        keep(solve_from_apex(model, x, y, tol), &mut best);
    }
    best
}

/// Horizontal shot from `apex` toward `target`, stopped when the rising branch
/// reaches the target height; returns the signed miss in `u`.
fn rising_branch(model: &ConeModel, apex: (f64, f64), target: &Point) -> Option<(f64, Box<OdeSolution<4>>)> {
    let (u1, t1) = (target.u[0], target.t);
    if t1 <= apex.1 {
        return None;
    }
    let dir = if u1 >= apex.0 { 1.0 } else { -1.0 };
    let l0 = model.jet(0, &[apex.0], apex.1).log_phi;
    let opts = OdeOptions { s_max: 50.0 + 4.0 * (t1 - apex.1), h_max: 1.0, ..Default::default() };
    let sol = dopri5(
        |_, s: &[f64; 4]| {
            let j = model.jet(0, &[s[0]], s[1]);
            let (up, tp) = (s[2], s[3]);
            [up, tp, -j.lu * up * up - 2.0 * j.lt * tp * up, (2.0 * j.log_phi).exp() * j.lt * up * up]
        },
        0.0,
        [apex.0, apex.1, dir * (-l0).exp(), 0.0],
        &opts,
        |_, s| s[1] - t1,
        |_, _| false,
    );
    (sol.stop == OdeStop::Event).then(|| (dir * (sol.y_end[0] - u1), Box::new(sol)))
}

fn apex_branches(model: &ConeModel, apex: (f64, f64), x: &Point, y: &Point) -> Option<([f64; 2], [Box<OdeSolution<4>>; 2])> {
    let (a, sa) = rising_branch(model, apex, x)?;
    let (b, sb) = rising_branch(model, apex, y)?;
    Some(([a, b], [sa, sb]))
}

/// Fits the lowest point of a turning geodesic by damped Newton on the
/// horizontal misses of its two rising branches. Rising branches become
/// vertical, so these misses depend mildly on the apex.
fn solve_from_apex(model: &ConeModel, x: &Point, y: &Point, tol: f64) -> Result<Shot, GeometryError> {
    let base = 0.5 * (model.a + model.big_a);
    let fail = |r: f64, it: usize| GeometryError::NonConvergence { best_residual: r, iterations: it };
    let sc = halfplane::semicircle(base, x, y).ok_or_else(|| fail(f64::INFINITY, 0))?;
    if !(sc.sigma_x < 0.0 && sc.sigma_y > 0.0) {
        return Err(fail(f64::INFINITY, 0));
    }
    let mut z = (x.u[0] + sc.dir[0] * sc.center, sc.apex_height(base).min(x.t.min(y.t) - 1e-3));
    let (mut f, mut sols) = apex_branches(model, z, x, y).ok_or_else(|| fail(f64::INFINITY, 1))?;
    let norm = |f: &[f64; 2]| f[0].abs().max(f[1].abs());
    let mut iters = 1;
    while norm(&f) > tol && iters < 80 {
        let h = 1e-7;
        let fu = apex_branches(model, (z.0 + h, z.1), x, y).ok_or_else(|| fail(norm(&f), iters))?.0;
        let ft = apex_branches(model, (z.0, z.1 + h), x, y).ok_or_else(|| fail(norm(&f), iters))?.0;
        iters += 2;
        let j = [[(fu[0] - f[0]) / h, (ft[0] - f[0]) / h], [(fu[1] - f[1]) / h, (ft[1] - f[1]) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let du = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dt = -(j[0][0] * f[1] - j[1][0] * f[0]) / det;
        let mut lam = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand = (z.0 + lam * du, z.1 + lam * dt);
            iters += 1;
            if let Some((fc, sc)) = apex_branches(model, cand, x, y) {
                if norm(&fc) < norm(&f) {
                    (z, f, sols) = (cand, fc, sc);
                    moved = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let resid = norm(&f);
    if resid > tol.max(ACCEPT_MISS) {
        return Err(fail(resid, iters));
    }
    let [sl, sr] = sols;
    // First variation: the endpoint moves by the miss along the leaf.
    let along = |st: &[f64; 4]| (2.0 * model.jet(0, &[st[0]], st[1]).log_phi).exp() * st[2].abs();
    let correction = if resid > tol { -along(&sl.y_end) * f[0] - along(&sr.y_end) * f[1] } else { 0.0 };
    let length = sl.s_end + sr.s_end + correction;
    Ok(Shot {
        theta: 0.0,
        length,
        residual: resid,
        iterations: iters,
        pieces: vec![Piece { solution: *sl, reversed: true }, Piece { solution: *sr, reversed: false }],
    })
}

pub fn geodesic(model: &ConeModel, x: &Point, y: &Point, tol: f64) -> Result<GeodesicPath, GeometryError> {
    let shot = solve_ambient(model, x, y, tol)?;
    if shot.residual > tol {
        return Err(GeometryError::NonConvergence { best_residual: shot.residual, iterations: shot.iterations });
    }
    Ok(shot_path(&shot, x, y))
}

/// Samples a converged or accepted shot into a path from `x` to `y`.
pub fn shot_path(shot: &Shot, x: &Point, y: &Point) -> GeodesicPath {
    let n = sample_count(shot.length);
    let l = shot.length;
    let samples = (0..n)
        .map(|k| {
            let s = l * k as f64 / (n - 1) as f64;
            let (u, t, tp) = shot.eval(s);
            GeodesicSample { point: Point::planar(u, t), s, b: t, b_prime: tp.clamp(-1.0, 1.0) }
        })
        .collect();
    GeodesicPath::new(samples, l, x.clone(), y.clone(), shot.residual, SolverMethod::AngleShooting)
}

/// Geodesic of the uniformized metric `e^{-2at}(dt² + φ² du²)` in the
/// coordinate `y = e^{-at}/a`, where it reads `dy² + (a y φ)² du²`.
pub fn solve_conformal(model: &ConeModel, a: f64, x: &Point, y: &Point, tol: f64) -> Result<Shot, GeometryError> {
    planar_only(model)?;
    let (y0, y1) = (halfplane::y_coord(a, x.t), halfplane::y_coord(a, y.t));
    let pb = Problem {
        warp: move |u: f64, yy: f64| {
            let t = halfplane::t_from_y(a, yy);
            let j = model.jet(0, &[u], t);
            ((a * yy).ln() + j.log_phi, j.lu, (1.0 - j.lt / a) / yy)
        },
        curvature: Curvature::Concave,
        start: (x.u[0], y0),
        target: (y.u[0], y1),
        tau_floor: 1e-6 * y0.min(y1),
        s_max: 10.0 * ((y0 - y1).abs() + (x.u[0] - y.u[0]).abs()) + 10.0 * y0.max(y1),
    };
    let tol = tol * y0.min(y1).max(1e-300);
    let w0 = a * y0 * model.phi(0, &x.u, x.t);
    pb.solve((y1 - y0).atan2(w0 * (y.u[0] - x.u[0]).abs()), tol).or_else(|_| pb.solve_scan(CONFORMAL_FAN, tol))
}

/// Angles in the fallback fan of [`solve_conformal`].
pub const CONFORMAL_FAN: usize = 24;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_halfplane, make_warped};

    #[test]
    fn recovers_semicircle() {
        let m = make_halfplane(1.0).unwrap();
        let x = Point::planar(0.0, 0.0);
        let y = Point::planar(4.0, 0.0);
        let pb = ambient_problem(&m, &x, &y);
        let shot = pb.solve(0.3, 1e-10).unwrap();
        assert!((shot.length - 9f64.acosh()).abs() < 1e-8);
        let z = Point::planar(-2.0, 1.5);
        let shot = ambient_problem(&m, &x, &z).solve(0.0, 1e-10).unwrap();
        assert!((shot.length - halfplane::distance(1.0, &x, &z)).abs() < 1e-8);
    }

    #[test]
    fn conformal_halfplane_is_euclidean() {
        let m = make_halfplane(1.0).unwrap();
        let x = Point::planar(0.0, 0.0);
        let y = Point::planar(3.0, -0.5);
        let shot = solve_conformal(&m, 1.0, &x, &y, 1e-10).unwrap();
        assert!((shot.length - halfplane::euclid_uy(1.0, &x, &y)).abs() < 1e-8);
    }

    #[test]
    fn warped_geodesic_closes() {
        let m = make_warped(0.1, 1.0, 1.0).unwrap();
        let g = geodesic(&m, &Point::planar(-1.0, 0.2), &Point::planar(2.5, -0.4), 1e-8).unwrap();
        assert!(g.solver_residual <= 1e-8);
        assert!(g.unit_speed_defect(&m) < 1e-4);
    }
}
