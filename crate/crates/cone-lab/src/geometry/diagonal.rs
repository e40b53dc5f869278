//! Geodesics of `dt² + Σ e^{2rᵢt} duᵢ²` with distinct rates.
//!
//! The momenta `pᵢ = e^{2rᵢt} uᵢ'` are conserved and `t'² + V(t) = 1` with
//! `V(t) = Σ pᵢ² e^{-2rᵢt}`. The boundary-value problem is solved for
//! `(μ, direction)`: `μ < 0` selects the monotone branch with
//! `|p| = p_c(t_L) e^{μ}`, `μ ≥ 0` the turning branch with minimum height
//! `t_L - μ`. Integrals use `τ = base + w²`, which removes the turning-point
//! singularity.

use super::{halfplane, GeodesicPath, GeodesicSample, GeometryError, SolverMethod};
use crate::models::Point;
use crate::numerics::{dopri5, GaussLegendre, OdeOptions};

/// Largest unstable dimension handled by the momentum solver.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone)]
pub struct MomentumSolution {
    pub p: Vec<f64>,
    pub mu: f64,
    pub min_height: f64,
    pub length: f64,
    pub residual: f64,
    pub iterations: usize,
}

struct Branch<'a> {
    rates: &'a [f64],
    t_l: f64,
    t_h: f64,
}

/// Integrals `(Σ over pieces) ∫ e^{-2rᵢτ}/√(1-V) dτ` and `∫ dτ/√(1-V)`.
struct Integrals {
    j: [f64; MAX_DIM],
    len: f64,
}

fn graded<F: FnMut(f64) -> [f64; MAX_DIM + 1]>(mut f: F, w_max: f64) -> [f64; MAX_DIM + 1] {
    let mut acc = [0.0; MAX_DIM + 1];
    if w_max <= 0.0 {
        return acc;
    }
    let g8 = GaussLegendre::g16();
    let mut add_panel = |lo: f64, hi: f64, acc: &mut [f64; MAX_DIM + 1]| {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (x, w) in g8.nodes.iter().zip(&g8.weights) {
            let v = f(mid + half * x);
            for k in 0..=MAX_DIM {
                acc[k] += w * half * v[k];
            }
        }
    };
    let split = w_max.min(0.5);
    // Dyadic panels toward w = 0 resolve the near-singular peak.
    let mut hi = split;
    for _ in 0..44 {
        let lo = 0.5 * hi;
        add_panel(lo, hi, &mut acc);
        hi = lo;
    }
    add_panel(0.0, hi, &mut acc);
    if w_max > split {
        let panels = ((w_max - split) / 0.25).ceil().max(1.0) as usize;
        let h = (w_max - split) / panels as f64;
        for k in 0..panels {
            add_panel(split + h * k as f64, split + h * (k + 1) as f64, &mut acc);
        }
    }
    acc
}

impl Branch<'_> {
    /// Integrals from `base` (where `V(base) = v_base ≤ 1`) up to `top`.
    fn piece(&self, p: &[f64], base: f64, one_minus_vbase: f64, top: f64) -> Integrals {
        let n = self.rates.len();
        let pb: Vec<f64> = (0..n).map(|i| p[i] * p[i] * (-2.0 * self.rates[i] * base).exp()).collect();
        let w_max = (top - base).max(0.0).sqrt();
        let raw = graded(
            |w| {
                let w2 = w * w;
                let mut omv = one_minus_vbase;
                let mut out = [0.0; MAX_DIM + 1];
                for i in 0..n {
                    let e = (-2.0 * self.rates[i] * w2).exp_m1();
                    omv -= pb[i] * e;
                    out[i] = (-2.0 * self.rates[i] * (base + w2)).exp();
                }
                let inv = if omv > 0.0 { 2.0 * w / omv.sqrt() } else { 0.0 };
                for o in out.iter_mut().take(n) {
                    *o *= inv;
                }
                out[MAX_DIM] = inv;
                out
            },
            w_max,
        );
        let mut j = [0.0; MAX_DIM];
        j[..n].copy_from_slice(&raw[..n]);
        Integrals { j, len: raw[MAX_DIM] }
    }

    /// Momentum for branch parameter `μ` and unit direction `dir`.
    fn momentum(&self, mu: f64, dir: &[f64]) -> (Vec<f64>, f64) {
        let n = self.rates.len();
        if mu < 0.0 {
            let s: f64 = (0..n).map(|i| dir[i] * dir[i] * (-2.0 * self.rates[i] * self.t_l).exp()).sum();
            let pc = 1.0 / s.sqrt();
            (dir.iter().map(|d| d * pc * mu.exp()).collect(), self.t_l)
        } else {
            let m = self.t_l - mu;
            let s: f64 = (0..n).map(|i| dir[i] * dir[i] * (-2.0 * self.rates[i] * m).exp()).sum();
            let pm = 1.0 / s.sqrt();
            (dir.iter().map(|d| d * pm).collect(), m)
        }
    }

    fn displacement(&self, mu: f64, dir: &[f64]) -> (Vec<f64>, f64, Vec<f64>, f64) {
        let n = self.rates.len();
        let (p, m) = self.momentum(mu, dir);
        let (j, len) = if mu < 0.0 {
            let one_minus = -(2.0 * mu).exp_m1();
            let ig = self.piece(&p, self.t_l, one_minus, self.t_h);
            (ig.j, ig.len)
        } else {
            let a = self.piece(&p, m, 0.0, self.t_l);
            let b = self.piece(&p, m, 0.0, self.t_h);
            let mut j = [0.0; MAX_DIM];
            for (ji, (ja, jb)) in j.iter_mut().zip(a.j.iter().zip(&b.j)).take(n) {
                *ji = ja + jb;
            }
            (j, a.len + b.len)
        };
        let du = (0..n).map(|i| p[i] * j[i]).collect();
        (du, len, p, m)
    }
}

fn direction(signs: &[f64], active: &[usize], q: &[f64], n: usize) -> Vec<f64> {
    let mut dir = vec![0.0; n];
    let mut norm = 0.0;
    for (k, &i) in active.iter().enumerate() {
        let e = if k == 0 { 1.0 } else { q[k - 1].exp() };
        dir[i] = signs[i] * e;
        norm += e * e;
    }
    let norm = norm.sqrt();
    dir.iter_mut().for_each(|d| *d /= norm);
    dir
}

#[allow(clippy::needless_range_loop)]
fn solve_linear(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[piv][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, piv);
        b.swap(c, piv);
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}

/// Solves the two-point problem between `x` and `y`.
pub fn solve(rates: &[f64], x: &Point, y: &Point, tol: f64) -> Result<MomentumSolution, GeometryError> {
    let n = rates.len();
    if n > MAX_DIM {
        return Err(GeometryError::Unsupported(format!("momentum solver handles dim <= {MAX_DIM}, got {n}")));
    }
    let du: Vec<f64> = (0..n).map(|i| y.u[i] - x.u[i]).collect();
    let active: Vec<usize> = (0..n).filter(|&i| du[i] != 0.0).collect();
    let (t_l, t_h) = (x.t.min(y.t), x.t.max(y.t));
    if active.is_empty() {
        return Ok(MomentumSolution {
            p: vec![0.0; n],
            mu: f64::NEG_INFINITY,
            min_height: t_l,
            length: t_h - t_l,
            residual: 0.0,
            iterations: 0,
        });
    }
    let signs: Vec<f64> = du.iter().map(|d| if *d < 0.0 { -1.0 } else { 1.0 }).collect();
    let target: Vec<f64> = active.iter().map(|&i| du[i].abs().ln()).collect();
    let br = Branch { rates, t_l, t_h };
    let k = active.len();

    let eval = |z: &[f64]| -> Option<(Vec<f64>, f64)> {
        let dir = direction(&signs, &active, &z[1..], n);
        let (d, len, _, _) = br.displacement(z[0], &dir);
        let f: Vec<f64> = active.iter().zip(&target).map(|(&i, tg)| d[i].abs().ln() - tg).collect();
        f.iter().all(|v| v.is_finite()).then_some((f, len))
    };

    // Initial guess from the constant-rate geodesic with the mean active rate.
    let abar = active.iter().map(|&i| rates[i]).sum::<f64>() / k as f64;
    let m0 = halfplane::min_height(abar, x, y);
    let mu0 = if m0 < t_l - 1e-9 {
        t_l - m0
    } else {
        let g = halfplane::geodesic(abar, x, y, 2);
        let slope = if x.t <= y.t { g.samples[0].b_prime } else { g.samples[1].b_prime };
        0.5 * (1.0 - slope * slope).max(1e-300).ln()
    };
    let q0: Vec<f64> = active[1..]
        .iter()
        .map(|&i| (du[i].abs().ln() + 2.0 * rates[i] * m0.min(t_l)) - (du[active[0]].abs().ln() + 2.0 * rates[active[0]] * m0.min(t_l)))
        .collect();

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut total_iters = 0;
    for restart in 0..6 {
        let shift = [0.0, 1.0, -1.0, 2.5, -2.5, 5.0][restart];
        let mut z = vec![mu0 + shift];
        z.extend_from_slice(&q0);
        if t_h - t_l < 1e-12 && z[0] < 0.1 {
            z[0] = 0.1;
        }
        let Some((mut f, _)) = eval(&z) else { continue };
        let mut fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..200 {
            total_iters += 1;
            if fnorm < 1e-13 {
                break;
            }
            let mut jac = vec![vec![0.0; k]; k];
            let mut ok = true;
            for c in 0..k {
                let h = 1e-7 * (1.0 + z[c].abs());
                let mut zp = z.clone();
                zp[c] += h;
                match eval(&zp) {
                    Some((fp, _)) => {
                        for r in 0..k {
                            jac[r][c] = (fp[r] - f[r]) / h;
                        }
                    }
                    None => ok = false,
                }
            }
            if !ok {
                break;
            }
            let Some(step) = solve_linear(jac, f.iter().map(|v| -v).collect()) else { break };
            let mut lam = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let mut zn: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + lam * b).collect();
                if t_h - t_l < 1e-12 && zn[0] < 0.0 {
                    zn[0] = 0.5 * z[0];
                }
                if let Some((fn_, _)) = eval(&zn) {
                    let nn = fn_.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    if nn < fnorm {
                        z = zn;
                        f = fn_;
                        fnorm = nn;
                        improved = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, bn)| fnorm < *bn) {
            best = Some((z.clone(), fnorm));
        }
        if fnorm < 1e-11 {
            break;
        }
    }
    let (z, fnorm) = best.ok_or(GeometryError::NonConvergence { best_residual: f64::INFINITY, iterations: total_iters })?;
    let dir = direction(&signs, &active, &z[1..], n);
    let (d, len, p, m) = br.displacement(z[0], &dir);
    let residual = (0..n).map(|i| (d[i] - du[i]).powi(2)).sum::<f64>().sqrt();
    if !(residual <= tol) {
        return Err(GeometryError::NonConvergence { best_residual: residual.max(fnorm), iterations: total_iters });
    }
    let min_height = if z[0] >= 0.0 { m } else { t_l };
    Ok(MomentumSolution { p, mu: z[0], min_height, length: len, residual, iterations: total_iters })
}

/// Samples the geodesic by integrating the conserved-momentum equations.
pub fn geodesic(rates: &[f64], x: &Point, y: &Point, tol: f64, n_samples: usize) -> Result<GeodesicPath, GeometryError> {
    let sol = solve(rates, x, y, tol)?;
    let n = rates.len();
    let v_at = |t: f64| -> f64 { (0..n).map(|i| sol.p[i] * sol.p[i] * (-2.0 * rates[i] * t).exp()).sum() };
    let descending_first = sol.mu >= 0.0 || x.t > y.t;
    let tp0 = (1.0 - v_at(x.t)).max(0.0).sqrt() * if descending_first { -1.0 } else { 1.0 };
    let mut y0 = [0.0; 5];
    y0[0] = x.t;
    y0[1] = tp0;
    y0[2..2 + n].copy_from_slice(&x.u[..n]);
    let p = sol.p.clone();
    let rates_v = rates.to_vec();
    let opts = OdeOptions { s_max: sol.length, h_max: (sol.length / 32.0).max(1e-3), ..Default::default() };
    let ode = dopri5(
        move |_, s: &[f64; 5]| {
            let mut d = [0.0; 5];
            d[0] = s[1];
            let mut acc = 0.0;
            for i in 0..rates_v.len() {
                let e = (-2.0 * rates_v[i] * s[0]).exp();
                acc += rates_v[i] * p[i] * p[i] * e;
                d[2 + i] = p[i] * e;
            }
            d[1] = acc;
            d
        },
        0.0,
        y0,
        &opts,
        |_, _| 1.0,
        |_, _| false,
    );
    let nn = n_samples.max(2);
    let mut samples = Vec::with_capacity(nn);
    for k in 0..nn {
        let s = sol.length * k as f64 / (nn - 1) as f64;
        let st = ode.eval(s);
        let u = (0..n).map(|i| st[2 + i]).collect();
        samples.push(GeodesicSample { point: Point::new(u, st[0]), s, b: st[0], b_prime: st[1].clamp(-1.0, 1.0) });
    }
    let end = &samples[nn - 1].point;
    let resid = halfplane::chart_gap(end, y);
    if !(resid <= tol.max(1e-8)) {
        return Err(GeometryError::NonConvergence { best_residual: resid, iterations: sol.iterations });
    }
    Ok(GeodesicPath::new(samples, sol.length, x.clone(), y.clone(), resid.max(sol.residual), SolverMethod::Momentum))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_rates_reproduce_closed_form() {
        let pairs = [
            (Point::new(vec![0.0, 0.0], 0.0), Point::new(vec![3.0, 1.0], 0.5)),
            (Point::new(vec![-1.0, 2.0], 1.0), Point::new(vec![0.5, -0.5], -0.7)),
            (Point::new(vec![0.0, 0.0], 0.0), Point::new(vec![0.0, 0.01], 2.0)),
            (Point::new(vec![0.0, 0.0], 0.0), Point::new(vec![4.0, 0.0], 0.0)),
        ];
        for (x, y) in pairs {
            let sol = solve(&[1.0, 1.0], &x, &y, 1e-9).unwrap();
            let exact = halfplane::distance(1.0, &x, &y);
            assert!((sol.length - exact).abs() < 1e-9, "{} vs {}", sol.length, exact);
        }
    }

    #[test]
    fn distinct_rates_path_closes() {
        let x = Point::new(vec![0.0, 0.0], 0.0);
        let y = Point::new(vec![3.0, 0.5], 0.2);
        let g = geodesic(&[1.0, 2.0], &x, &y, 1e-8, 129).unwrap();
        assert!(g.solver_residual < 1e-7);
        assert!(g.total_length < 3.0);
    }
}
