//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! Every criterion recomputes its verdict here from library outputs and
//! independent closed forms instead of reusing the library's own checks.

use std::time::Instant;

use cone_lab::analysis::{self, TEST_FUNCTIONS};
use cone_lab::geometry::{self, shooting};
use cone_lab::gromov::{self, Sampler};
use cone_lab::hamenstadt;
use cone_lab::measures::{self, CuBox, FlowBox, LeafSet};
use cone_lab::models::{flow, make_diagonal, make_halfplane, make_suspension, make_warped, ConeModel, Point};
use cone_lab::uniformize;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn models() -> Vec<(&'static str, ConeModel)> {
    vec![
        ("halfplane", make_halfplane(1.0).unwrap()),
        ("diagonal(1,2)", make_diagonal(&[1.0, 2.0]).unwrap()),
        ("warped(0.1)", make_warped(0.1, 1.0, 1.0).unwrap()),
        ("cat-map cover", make_suspension([[2, 1], [1, 1]]).unwrap().cover),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, w: f64, t: f64) -> Point {
    Point::new((0..dim).map(|_| rng.gen_range(-w..w)).collect(), rng.gen_range(-t..t))
}

/// Least squares slope.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Riemann zeta for `s > 1`: direct sum plus an Euler-Maclaurin tail.
fn zeta(s: f64) -> f64 {
    let n = 10_000usize;
    let head: f64 = (1..=n).map(|k| (k as f64).powf(-s)).sum();
    let nf = n as f64;
    head + nf.powf(1.0 - s) / (s - 1.0) - 0.5 * nf.powf(-s) + s * nf.powf(-s - 1.0) / 12.0
}

/// `G(σ)` on the unit-rate half-plane, where `V_t = ⌊2eᵗ⌋ + 1` exactly.
fn halfplane_g(sigma: f64) -> f64 {
    (2.0 + 2f64.powf(sigma) * (zeta(sigma) - 1.0)) / sigma
}

fn c1() -> Verdict {
    let m = make_halfplane(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_db, mut worst_shoot, mut errors) = (0.0f64, 0.0f64, 0);
    for _ in 0..1000 {
        let x = random_point(&mut rng, 1, 5.0, 3.0);
        let y = random_point(&mut rng, 1, 5.0, 3.0);
        let euclid = ((x.u[0] - y.u[0]).powi(2) + ((-x.t).exp() - (-y.t).exp()).powi(2)).sqrt();
        worst_db = worst_db.max((uniformize::d_b(&m, &x, &y).unwrap().value - euclid).abs());
        match shooting::solve_conformal(&m, 1.0, &x, &y, 1e-10) {
            Ok(s) => worst_shoot = worst_shoot.max((s.length - euclid).abs()),
            Err(_) => errors += 1,
        }
    }
    Verdict::new(
        worst_db <= 1e-6 && worst_shoot <= 1e-6 && errors == 0,
        format!("max |d_b - euclid| {worst_db:.1e}, conformal geodesic {worst_shoot:.1e}, {errors} solver failures"),
    )
}

fn c2() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in models() {
        let base = if m.axis_rates().is_some() { Sampler::for_model(&m) } else { Sampler::new(10.0, -4.0, 4.0) };
        let r1 = uniformize::uniform_estimate_sample(&m, &base, 1000, SEED);
        let r2 = uniformize::uniform_estimate_sample(&m, &base.doubled(), 1000, SEED + 1);
        let drift = (r2.constant / r1.constant - 1.0).abs();
        pass &= r1.constant.is_finite() && r2.constant.is_finite() && drift < 0.25 && r1.failures + r2.failures == 0;
        parts.push(format!("{name} C {:.3}->{:.3}", r1.constant, r2.constant));
    }
    Verdict::new(pass, parts.join("; "))
}

/// Largest `min((x|y), (y|z)) - (x|z)` over the three choices of middle point.
fn defect(p: [f64; 3]) -> f64 {
    let [xy, xz, yz] = p;
    (xy.min(yz) - xz).max(xy.min(xz) - yz).max(xz.min(yz) - xy).max(0.0)
}

fn c3() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in models() {
        let large = gromov::delta_estimate(&m, &Sampler::for_model(&m), 1000, SEED);
        // The first quarter of the same draws is the 4x smaller sample.
        let (n_small, small_b, small_4) = large.refinement_history[0];
        assert_eq!(n_small, 250);
        let rel_b = (large.delta_b - small_b).abs() / large.delta_b;
        let rel_4 = (large.delta_4pt - small_4).abs() / large.delta_4pt;
        let finite = large.delta_b.is_finite() && large.delta_4pt.is_finite();
        // Flowline-collinear triples.
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut collinear = 0.0f64;
        for _ in 0..100 {
            let u: Vec<f64> = (0..m.dim_u).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p: Vec<Point> = (0..3).map(|_| Point::new(u.clone(), rng.gen_range(-3.0..3.0))).collect();
            let gp = |i: usize, j: usize| 0.5 * (p[i].t + p[j].t - geometry::distance(&m, &p[i], &p[j]).unwrap());
            collinear = collinear.max(defect([gp(0, 1), gp(0, 2), gp(1, 2)]));
        }
        pass &= finite && rel_b <= 0.1 && rel_4 <= 0.1 && collinear <= 1e-9;
        parts.push(format!(
            "{name} delta_b {:.3}->{:.3}, 4pt {:.3}->{:.3}, collinear {collinear:.0e}",
            small_b, large.delta_b, small_4, large.delta_4pt
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

fn c4() -> Verdict {
    let mut worst = 0.0f64;
    let mut errors = 0;
    for (_, m) in models() {
        let tol = hamenstadt::default_tol(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..250 {
            let x = random_point(&mut rng, m.dim_u, 3.0, 2.0);
            let y = Point::new(random_point(&mut rng, m.dim_u, 3.0, 2.0).u, x.t);
            let t = rng.gen_range(-2.0..2.0);
            let r0 = hamenstadt::rho(&m, &x, &y, tol);
            let r1 = hamenstadt::rho(&m, &flow(&m, &x, t), &flow(&m, &y, t), tol);
            match (r0, r1) {
                (Ok(r0), Ok(r1)) => worst = worst.max((r1.value / ((m.a * t).exp() * r0.value) - 1.0).abs()),
                _ => errors += 1,
            }
        }
    }
    Verdict::new(worst <= 1e-5 && errors == 0, format!("1000 samples over 4 models, worst relative defect {worst:.1e}, {errors} errors"))
}

fn c5() -> Verdict {
    let mut outside = 0;
    let mut total = 0;
    for (_, m) in models() {
        let tol = hamenstadt::default_tol(&m);
        let e = m.a / m.big_a;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
        for _ in 0..250 {
            let x = random_point(&mut rng, m.dim_u, 3.0, 2.0);
            let y = Point::new(random_point(&mut rng, m.dim_u, 3.0, 2.0).u, x.t);
            let d = geometry::leaf_distance(&m, &x, &y).unwrap();
            let r = hamenstadt::rho(&m, &x, &y, tol).unwrap().value;
            let (lo, hi) = (d.min(d.powf(e)), d.max(d.powf(e)));
            total += 1;
            if r < lo * (1.0 - 10.0 * tol) || r > hi * (1.0 + 10.0 * tol) {
                outside += 1;
            }
        }
    }
    // On a diagonal cone a displacement along the axis of rate r has ρ = |Δu|^{a/r}.
    let d = make_diagonal(&[1.0, 2.0]).unwrap();
    let o = Point::new(vec![0.0, 0.0], 0.0);
    let mut attained = 0.0f64;
    for du in [0.05, 0.3, 0.8, 2.0, 6.0] {
        let fast = hamenstadt::rho(&d, &o, &Point::new(vec![0.0, du], 0.0), 1e-12).unwrap().value;
        let slow = hamenstadt::rho(&d, &o, &Point::new(vec![du, 0.0], 0.0), 1e-12).unwrap().value;
        attained = attained.max((fast / du.powf(0.5) - 1.0).abs()).max((slow / du - 1.0).abs());
    }
    Verdict::new(
        outside == 0 && attained <= 1e-8,
        format!("{}/{total} inside envelopes; extreme-axis envelopes attained to {attained:.1e}", total - outside),
    )
}

fn c6() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m, x) in [
        ("halfplane", make_halfplane(1.0).unwrap(), Point::planar(0.0, 0.0)),
        ("diagonal(1,2)", make_diagonal(&[1.0, 2.0]).unwrap(), Point::new(vec![0.0, 0.0], 0.0)),
    ] {
        let rep = measures::entropy_estimate(&m, &[x], 8).unwrap();
        let h: f64 = m.axis_rates().unwrap().iter().sum();
        pass &= (rep.h_est - h).abs() <= 0.05 && rep.submult.holds && rep.fekete_holds;
        parts.push(format!("{name} h_est {:.4} (h {h})", rep.h_est));
        if name == "halfplane" {
            let exact = rep.table.iter().all(|r| r.count == (2.0 * r.s.exp() + 1e-9).floor() as u64 + 1);
            pass &= exact;
            parts.push(format!("counts = floor(2e^s)+1: {exact}"));
        }
    }
    Verdict::new(pass, parts.join("; "))
}

fn c7() -> Verdict {
    let offsets = [1.0, 0.5, 0.25, 0.125];
    let xs: Vec<f64> = offsets.iter().map(|v: &f64| (1.0 / v).ln()).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in models().into_iter().take(3) {
        let o = Point::new(vec![0.0; m.dim_u], 0.0);
        let h = m.entropy();
        let gs: Vec<_> = offsets.iter().map(|v| measures::laplace_g(&m, &o, h + v, 12.0).unwrap()).collect();
        let k = slope(&xs, &gs.iter().map(|g| g.value.ln()).collect::<Vec<_>>());
        pass &= (k - 1.0).abs() <= 0.1;
        parts.push(format!("{name} slope {k:.4}"));
        if name == "halfplane" {
            let worst = gs.iter().map(|g| (g.value - halfplane_g(g.sigma)).abs() / g.abs_error).fold(0.0, f64::max);
            pass &= worst <= 1.0;
            let exact_slope = slope(&xs, &offsets.iter().map(|v| halfplane_g(1.0 + v).ln()).collect::<Vec<_>>());
            parts.push(format!("exact-G slope {exact_slope:.4}, |G - G_exact| <= {worst:.2} x error bound"));
        }
    }
    Verdict::new(pass, parts.join("; "))
}

fn c8() -> Verdict {
    let offsets = [1.0, 0.5, 0.25, 0.125];
    let heights = [-2.0, 0.0, 2.0];
    let mut band_ok = true;
    let mut parts = Vec::new();
    for (name, m) in models().into_iter().take(3) {
        let sw = measures::crit_sweep(&m, &vec![0.0; m.dim_u], &offsets, &heights, 12.0).unwrap();
        let all: Vec<f64> = sw.rows.iter().flat_map(|r| [r.ratio, r.ratio_pos, r.ratio_neg]).collect();
        let spread = all.iter().copied().fold(0.0, f64::max) / all.iter().copied().fold(f64::INFINITY, f64::min);
        band_ok &= spread <= 2.0;
        parts.push(format!("{name} band {spread:.3}"));
    }
    let m = make_halfplane(1.0).unwrap();
    let o = Point::planar(0.0, 0.0);
    let g = measures::laplace_g(&m, &o, 2.0, 12.0).unwrap();
    let row = measures::crit_ratio(&m, &o, 2.0, &g).unwrap();
    let err = row.ratio * g.abs_error / g.value;
    let matches = (row.ratio - 0.8).abs() <= err;
    parts.push(format!(
        "half-plane sigma=2 ratio {:.4} +- {err:.4} vs 0.8 (exact step-count G gives {:.4})",
        row.ratio,
        row.mass / halfplane_g(2.0)
    ));
    Verdict::new(band_ok && matches, parts.join("; "))
}

fn c9() -> Verdict {
    let offsets = [1.0, 0.5, 0.25, 0.125];
    let radii = [1.0, 0.5, 0.25, 0.125];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in [("halfplane", make_halfplane(1.0).unwrap()), ("warped(0.1)", make_warped(0.1, 1.0, 1.0).unwrap())] {
        let o = Point::planar(0.0, 0.0);
        let sw = measures::ps_sweep(&m, &o, 1.0, 256, &offsets).unwrap();
        let interior: Vec<f64> = sw.measures.iter().map(|r| r.interior_mass_below(1.0).unwrap()).collect();
        let decrease = interior.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
        let (fine, prev) = (&sw.measures[3], &sw.measures[2]);
        let cauchy = fine.masses.iter().zip(&prev.masses).map(|(a, b)| (a - b).abs() / a).fold(0.0, f64::max);
        // Same increments for the shares mass/total, which factor out the e^{σl} total.
        let shape =
            fine.masses.iter().zip(&prev.masses).map(|(a, b)| ((b / prev.total) / (a / fine.total) - 1.0).abs()).fold(0.0, f64::max);
        let ahl = measures::ahlfors_check(&m, &sw, &radii, 20, SEED).unwrap();
        let band =
            ahl.rows.iter().map(|r| r.ratio_max).fold(0.0, f64::max) / ahl.rows.iter().map(|r| r.ratio_min).fold(f64::INFINITY, f64::min);
        pass &= decrease >= 2.0 && cauchy <= 0.05 && band <= 2.0;
        let mut part = format!(
            "{name}: interior decrease >= {decrease:.2}, Cauchy {:.2}% (shares {:.2}%), Ahlfors band {band:.3}",
            100.0 * cauchy,
            100.0 * shape
        );
        if name == "halfplane" {
            let LeafSet::Interval { lo, hi } = fine.domain else { unreachable!() };
            let lebesgue = fine
                .partition
                .iter()
                .zip(&fine.masses)
                .map(|(c, mass)| (mass / fine.total) / ((c.hi[0] - c.lo[0]) / (hi - lo)) - 1.0)
                .fold(0.0f64, |acc, d| acc.max(d.abs()));
            pass &= lebesgue <= 0.02;
            part.push_str(&format!(", Lebesgue deviation {:.2}%", 100.0 * lebesgue));
        }
        parts.push(part);
    }
    // Informational: at l = 0 the per-halving factor on the half-plane is 1 + e^{-v/2}.
    let m = make_halfplane(1.0).unwrap();
    let sw0 = measures::ps_sweep(&m, &Point::planar(0.0, 0.0), 0.0, 64, &offsets).unwrap();
    parts.push(format!("(l=0 factors {:?})", sw0.interior_decrease.iter().map(|f| (f * 1000.0).round() / 1000.0).collect::<Vec<_>>()));
    Verdict::new(pass, parts.join("; "))
}

fn c10() -> Verdict {
    let mut worst_scale = 0.0f64;
    let mut worst_flip = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for m in [make_halfplane(1.0).unwrap(), make_suspension([[2, 1], [1, 1]]).unwrap().cover] {
        let h = m.entropy();
        for _ in 0..20 {
            let u_lo = rng.gen_range(-2.0..2.0);
            let t_lo = rng.gen_range(-1.0..1.0);
            let b = FlowBox { u_lo: vec![u_lo], u_hi: vec![u_lo + rng.gen_range(0.1..1.0)], t_lo, t_hi: t_lo + rng.gen_range(0.1..1.0) };
            for shift in [0.5, 1.0, 2.0] {
                let r = measures::margulis_checks(&m, &b, shift).unwrap();
                worst_scale = worst_scale.max((r.shifted_mass / ((h * shift).exp() * r.mass) - 1.0).abs());
                worst_flip = worst_flip.max((r.flipped_mass / r.mass - 1.0).abs());
            }
        }
    }
    Verdict::new(
        worst_scale <= 1e-3 && worst_flip <= 1e-6,
        format!("40 boxes x 3 shifts: scaling {worst_scale:.1e}, flip {worst_flip:.1e}"),
    )
}

fn c11() -> Verdict {
    let s = make_suspension([[2, 1], [1, 1]]).unwrap();
    let b = CuBox { p_u: (0.0, 0.5), t: (0.0, 0.5), p_s: 0.0 };
    let rep = measures::holonomy_invariance_check(&s, &b, 0.5, &[0.5, 0.25, 0.125], 400, SEED).unwrap();
    let s_err = (rep.mass_v / rep.mass_u - 1.0).abs();
    let ks: Vec<f64> = rep.cs_rows.iter().map(|r| r.k_r).collect();
    let decreasing = ks.windows(2).all(|w| w[1] < w[0]) && ks.iter().all(|k| *k >= 1.0);
    let exponent = s.cover.entropy() / s.cover.a + 1.0;
    let in_band = rep.cs_rows.iter().all(|r| {
        let bound = r.k_r.powf(exponent);
        r.mass_ratio >= 1.0 / bound && r.mass_ratio <= bound
    });
    Verdict::new(
        s_err <= 0.01 && in_band && decreasing,
        format!("s-holonomy discrepancy {s_err:.1e}; cs ratios within K_R band: {in_band}; K_R {ks:.3?}"),
    )
}

fn c12() -> Verdict {
    let m = make_halfplane(1.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for v in [1.0, 0.5, 0.25] {
        let sigma = 1.0 + v;
        let d = analysis::doubling_check(&m, sigma, 90, &[0.05, 0.2, 0.5], SEED).unwrap();
        let bound = d.uniform_bound.unwrap_or(f64::INFINITY);
        let p = analysis::poincare_check(&m, sigma, &TEST_FUNCTIONS, 60, &[0.05, 0.2, 0.5], SEED).unwrap();
        pass &= d.worst_ratio.is_finite() && d.worst_ratio <= bound && p.worst.is_finite() && p.worst > 0.0;
        parts.push(format!("sigma {sigma}: doubling {:.2} <= {bound:.1}, Poincare {:.3}", d.worst_ratio, p.worst));
    }
    // At σ = h = 1 the density is 1/y, so a boundary ball of radius r gains ~2r per unit height.
    let r = 0.5;
    let c = analysis::critical_failure_demo(&m, 0.0, r, &[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
    let last = *c.slopes.last().unwrap();
    let growing = c.slopes.iter().all(|s| *s > 0.0) && (last - 2.0 * r).abs() <= 0.01 * 2.0 * r;
    pass &= growing;
    parts.push(format!(
        "sigma=h masses {:.2?} (slope -> {last:.4}, expected {})",
        c.rows.iter().map(|g| g.mass).collect::<Vec<_>>(),
        2.0 * r
    ));
    Verdict::new(pass, parts.join("; "))
}

fn c13() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in models() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 13);
        let (mut viol, mut sqrt_viol, mut samples, mut failed) = (0, 0, 0, 0);
        let mut margin = f64::INFINITY;
        for _ in 0..40 {
            let x = random_point(&mut rng, m.dim_u, 3.0, 2.0);
            let y = random_point(&mut rng, m.dim_u, 3.0, 2.0);
            match geometry::geodesic_connect(&m, &x, &y, 1e-9) {
                Ok(path) => {
                    let hp = geometry::height_profile(&path, m.a, 1e-3).unwrap();
                    viol += hp.quadratic_violations;
                    sqrt_viol += hp.sqrt_violations;
                    samples += hp.rows.len();
                    margin = margin.min(hp.quadratic_margin);
                }
                Err(_) => failed += 1,
            }
        }
        pass &= viol == 0 && failed == 0;
        if name == "halfplane" {
            // The square-root form must be visibly violated on the oracle.
            pass &= sqrt_viol > 0;
        }
        parts.push(format!("{name}: {viol}/{samples} quadratic violations (margin {margin:.1e}), sqrt form fails at {sqrt_viol}"));
    }
    Verdict::new(pass, parts.join("; "))
}

type Criterion = (&'static str, f64, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 13] = [
        ("half-plane uniformization oracle", 10.0, c1),
        ("uniform estimate constant", 120.0, c2),
        ("delta-hyperbolicity", 120.0, c3),
        ("Hamenstadt scaling", 30.0, c4),
        ("comparison exponents", 30.0, c5),
        ("entropy", 180.0, c6),
        ("G divergence rate", 60.0, c7),
        ("cone-mass asymptotic", 120.0, c8),
        ("Patterson-Sullivan limit", 300.0, c9),
        ("Margulis scaling", 60.0, c10),
        ("holonomy invariance", 120.0, c11),
        ("doubling and Poincare", 300.0, c12),
        ("convexity ledger", 60.0, c13),
    ];
    let mut failed = Vec::new();
    for (k, (title, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        let ok = v.pass && secs <= *budget;
        if !ok {
            failed.push(k + 1);
        }
        println!("criterion {:>2} {} {title}: {} [{secs:.1}s / {budget:.0}s]", k + 1, if ok { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{}/13 criteria pass", 13 - failed.len());
    if !failed.is_empty() {
        println!("failing: {failed:?}");
        std::process::exit(1);
    }
}
