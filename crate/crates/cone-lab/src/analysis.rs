//! Doubling and Poincaré checks for `μ_σ` on the uniformized cone, and the
//! blow-up of boundary-ball masses at the critical exponent.
//!
//! Implemented for constant-rate models with one-dimensional leaves, where
//! `y = e^{-at}/a` makes `d_b` Euclidean on the closed half-plane `y ≥ 0` and
//! `dμ_σ = (ay)^{σ/a - 2} du dy`. Balls are integrated by tensor
//! Gauss-Legendre rules with substitutions that absorb the boundary
//! singularity of the density and the square-root ends of each chord.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{self, MeasureError};
use crate::models::{ConeModel, Point};
use crate::numerics::GaussLegendre;
use crate::uniformize::ConeRegion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("mass diverges: sigma = {sigma} is not above the entropy {entropy}")]
    Divergent { sigma: f64, entropy: f64 },
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Uniformized half-plane of a constant-rate cone with 1-D leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub sigma: f64,
}

impl HalfPlane {
    pub fn new(model: &ConeModel, sigma: f64) -> Result<Self, AnalysisError> {
        let a = model
            .constant_rate()
            .filter(|_| model.dim_u == 1)
            .ok_or_else(|| AnalysisError::Unsupported("analysis needs a constant-rate model with 1-D leaves".into()))?;
        if !(sigma > 0.0) {
            return Err(AnalysisError::Invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { a, sigma })
    }

    /// Exponent `p` of the density `(ay)^p`.
    pub fn power(&self) -> f64 {
        self.sigma / self.a - 2.0
    }

    pub fn density(&self, y: f64) -> f64 {
        (self.a * y).powf(self.power())
    }

    pub fn y_of_t(&self, t: f64) -> f64 {
        (-self.a * t).exp() / self.a
    }

    pub fn t_of_y(&self, y: f64) -> f64 {
        -(self.a * y).ln() / self.a
    }
}

/// Closed Euclidean ball in the uniformized `(u, y)` half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub u: f64,
    pub y: f64,
    pub r: f64,
}

/// Quadrature node `(u, y, weight)` with the density folded into the weight.
type Node = (f64, f64, f64);

/// Nodes for `μ_σ` on `ball ∩ {y ≥ y_cut}`; `level` doubles the resolution.
pub fn ball_nodes(hp: &HalfPlane, ball: &Ball, y_cut: f64, level: usize) -> Vec<Node> {
    let rule = GaussLegendre::g32();
    let scale = 1usize << level;
    let (y0, r) = (ball.y, ball.r);
    let bottom = y0 - r;
    let y_lo = y_cut.max(bottom).max(0.0);
    let y_top = y0 + r;
    let mut rows: Vec<(f64, f64)> = Vec::new(); // (y, dy-weight including density)
    let p = hp.power();
    let mut push_gl = |lo: f64, hi: f64, panels: usize, map: &dyn Fn(f64) -> (f64, f64)| {
        let h = (hi - lo) / panels as f64;
        for k in 0..panels {
            let mid = lo + h * (k as f64 + 0.5);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let (y, jac) = map(mid + 0.5 * h * x);
                rows.push((y, 0.5 * h * w * jac));
            }
        }
    };
    if y_lo >= y_top {
        return Vec::new();
    }
    if y_lo <= bottom {
        // Whole disk: y = y0 + r sin θ.
        push_gl(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 8 * scale, &|th: f64| (y0 + r * th.sin(), r * th.cos()));
    } else {
        let y_m = 0.5 * (y_lo + y_top);
        if y_lo == 0.0 {
            // y = y_m s^k with k(p + 1) = 1 flattens y^p near the boundary.
            let k = 1.0 / (p + 1.0);
            push_gl(0.0, 1.0, 4 * scale, &|s: f64| {
                let s = s.max(1e-300);
                (y_m * s.powf(k), y_m * k * s.powf(k - 1.0))
            });
        } else if y_m / y_lo > 4.0 {
            let span = (y_m / y_lo).ln();
            let panels = (span.ceil() as usize).max(4) * scale;
            push_gl(0.0, span, panels, &|z: f64| {
                let y = y_lo * z.exp();
                (y, y)
            });
        } else {
            push_gl(y_lo, y_m, 4 * scale, &|y: f64| (y, 1.0));
        }
        let th_m = ((y_m - y0) / r).clamp(-1.0, 1.0).asin();
        push_gl(th_m, std::f64::consts::FRAC_PI_2, 4 * scale, &|th: f64| (y0 + r * th.sin(), r * th.cos()));
    }
    let mut nodes = Vec::with_capacity(rows.len() * 64);
    for (y, wy) in rows {
        let c = (r * r - (y - y0).powi(2)).max(0.0).sqrt();
        if c == 0.0 || y <= 0.0 {
            continue;
        }
        let dens = hp.density(y) * wy;
        let panels = 2 * scale;
        let h = 2.0 * c / panels as f64;
        for k in 0..panels {
            let mid = ball.u - c + h * (k as f64 + 0.5);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push((mid + 0.5 * h * x, y, 0.5 * h * w * dens));
            }
        }
    }
    nodes
}

/// `μ_σ(ball ∩ {y ≥ y_cut})` with the change under doubled resolution as error.
pub fn ball_mass(hp: &HalfPlane, ball: &Ball, y_cut: f64) -> (f64, f64) {
    let m = |level| ball_nodes(hp, ball, y_cut, level).iter().map(|n| n.2).sum::<f64>();
    let (coarse, fine) = (m(0), m(1));
    (fine, (fine - coarse).abs())
}

// Doubling

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CenterClass {
    /// Center on the boundary `y = 0`.
    Boundary,
    /// `y ∈ [0.3r, 2.5r]`: straddles or nearly touches the boundary.
    Intermediate,
    /// `y ∈ [3r, 10r]`: far from the boundary relative to the radius.
    SubWhitney,
}

pub const CLASSES: [CenterClass; 3] = [CenterClass::Boundary, CenterClass::Intermediate, CenterClass::SubWhitney];

fn draw_ball(class: CenterClass, r: f64, rng: &mut ChaCha8Rng) -> Ball {
    let u = rng.gen_range(-1.0..1.0);
    let y = match class {
        CenterClass::Boundary => 0.0,
        CenterClass::Intermediate => rng.gen_range(0.3..2.5) * r,
        CenterClass::SubWhitney => rng.gen_range(3.0..10.0) * r,
    };
    Ball { u, y, r }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassWorst {
    pub class: CenterClass,
    pub balls: usize,
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub sigma: f64,
    pub worst_ratio: f64,
    pub n_balls: usize,
    pub radius_range: (f64, f64),
    pub center_classes: Vec<ClassWorst>,
    /// Largest over smallest class worst ratio.
    pub class_spread: f64,
    /// Smallest `K` with `μ_σ(C(x, 1)) ≤ K e^{-σ b(x)} μ(B(x, 1))` over the sampled heights.
    pub cone_upper_k: f64,
    /// `K (σ - h)`, constant when `K` grows like `G(σ)`.
    pub k_times_gap: f64,
    /// Exact ratio for boundary-centred balls, `2^{p+2}`.
    pub boundary_exact: f64,
    /// A-priori bound on the ratio valid for every centre; see [`doubling_bound`].
    pub uniform_bound: Option<f64>,
    pub excluded: usize,
}

/// Relative quadrature error above which a ball is excluded.
pub const EXCLUDE_REL: f64 = 0.1;

/// Riemannian area of a unit ball in curvature `-a²`.
fn unit_ball_area(a: f64) -> f64 {
    2.0 * std::f64::consts::PI * (a.cosh() - 1.0) / (a * a)
}

/// Centre-independent bound on `μ_σ(2B)/μ_σ(B)` when the density `(ay)^p`
/// is non-increasing (`p ≤ 0`), taken over the three centre classes.
///
/// Half-disks scale as `R^{p+2}`. For `y ≤ 2.5r` the doubled ball sits in the
/// half-disk of radius `y + 2r` while `B` holds at least half a disk at
/// density no smaller than at `y + r`; for `y ≥ 3r` the density varies by at
/// most `((y+2r)/(y-2r))^{-p} ≤ 5^{-p}` over the doubled ball.
pub fn doubling_bound(hp: &HalfPlane) -> Option<f64> {
    let p = hp.power();
    if p > 0.0 {
        return None;
    }
    let (half_unit, _) = ball_mass(hp, &Ball { u: 0.0, y: 0.0, r: 1.0 }, 0.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let intermediate = half_unit * 4.5f64.powf(p + 2.0) / (half_pi * hp.density(3.5));
    let sub_whitney = 4.0 * 5f64.powf(-p);
    Some(intermediate.max(sub_whitney).max(2f64.powf(p + 2.0)))
}

/// Worst `μ_σ(2B)/μ_σ(B)` over balls stratified by distance to the boundary.
pub fn doubling_check(model: &ConeModel, sigma: f64, n_balls: usize, radii: &[f64], seed: u64) -> Result<DoublingReport, AnalysisError> {
    let h = model.entropy();
    if !(sigma > h) {
        return Err(AnalysisError::Divergent { sigma, entropy: h });
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(AnalysisError::Invalid("radii must be positive and non-empty".into()));
    }
    let hp = HalfPlane::new(model, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<ClassWorst> = CLASSES.iter().map(|c| ClassWorst { class: *c, balls: 0, worst_ratio: 0.0 }).collect();
    let mut excluded = 0;
    for k in 0..n_balls {
        let slot = k % 3;
        let r = radii[(k / 3) % radii.len()];
        let ball = draw_ball(CLASSES[slot], r, &mut rng);
        let big = Ball { r: 2.0 * r, ..ball };
        let (m1, e1) = ball_mass(&hp, &ball, 0.0);
        let (m2, e2) = ball_mass(&hp, &big, 0.0);
        if e1 > EXCLUDE_REL * m1 || e2 > EXCLUDE_REL * m2 || !(m1 > 0.0) {
            excluded += 1;
            continue;
        }
        let cw = &mut classes[slot];
        cw.balls += 1;
        cw.worst_ratio = cw.worst_ratio.max(m2 / m1);
    }
    let used: Vec<f64> = classes.iter().filter(|c| c.balls > 0).map(|c| c.worst_ratio).collect();
    let worst = used.iter().copied().fold(0.0, f64::max);
    let best = used.iter().copied().fold(f64::INFINITY, f64::min);
    let mut k: f64 = 0.0;
    for b in [-2.0, 0.0, 2.0] {
        let x = Point::planar(0.0, b);
        let cone = measures::mu_sigma_region(model, &ConeRegion::full(x, 1.0), sigma)?.value;
        k = k.max(cone * (sigma * b).exp() / unit_ball_area(hp.a));
    }
    let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    Ok(DoublingReport {
        sigma,
        worst_ratio: worst,
        n_balls: classes.iter().map(|c| c.balls).sum(),
        radius_range: (rmin, rmax),
        center_classes: classes,
        class_spread: worst / best,
        cone_upper_k: k,
        k_times_gap: k * (sigma - h),
        boundary_exact: 2f64.powf(hp.power() + 2.0),
        uniform_bound: doubling_bound(&hp),
        excluded,
    })
}

// Poincaré

/// Test function on the cone with its Riemannian gradient in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Constant(f64),
    /// Leaf coordinate `u`.
    CoordU,
    /// Height `t`; used only on balls away from the boundary.
    Height,
    /// Conformal height `y = e^{-at}/a`.
    CoordY,
    /// `d_b` to a fixed point `(u, y)`.
    Radial {
        u: f64,
        y: f64,
    },
    /// Ramp from 1 inside `d_b ≤ radius` to 0 beyond `radius + width`.
    Ramp {
        u: f64,
        y: f64,
        radius: f64,
        width: f64,
    },
}

pub const TEST_FUNCTIONS: [TestFunction; 5] = [
    TestFunction::Constant(1.0),
    TestFunction::CoordU,
    TestFunction::Height,
    TestFunction::CoordY,
    TestFunction::Radial { u: 0.3, y: 0.2 },
];

impl TestFunction {
    /// Value and chart partials `(f, ∂_u f, ∂_t f)` at `(u, t)`.
    pub fn eval(&self, a: f64, u: f64, t: f64) -> (f64, f64, f64) {
        let y = (-a * t).exp() / a;
        let dy_dt = -a * y;
        match *self {
            TestFunction::Constant(c) => (c, 0.0, 0.0),
            TestFunction::CoordU => (u, 1.0, 0.0),
            TestFunction::Height => (t, 0.0, 1.0),
            TestFunction::CoordY => (y, 0.0, dy_dt),
            TestFunction::Radial { u: uc, y: yc } => {
                let d = ((u - uc).powi(2) + (y - yc).powi(2)).sqrt();
                if d == 0.0 {
                    return (0.0, 1.0, 0.0);
                }
                (d, (u - uc) / d, (y - yc) / d * dy_dt)
            }
            TestFunction::Ramp { u: uc, y: yc, radius, width } => {
                let d = ((u - uc).powi(2) + (y - yc).powi(2)).sqrt();
                let v = ((radius + width - d) / width).clamp(0.0, 1.0);
                if d <= radius || d >= radius + width || d == 0.0 {
                    return (v, 0.0, 0.0);
                }
                (v, -(u - uc) / d / width, -(y - yc) / d / width * dy_dt)
            }
        }
    }

    /// Upper gradient in the `d_b` geometry: `g_b = g / κ` with `g` the Riemannian gradient norm.
    pub fn upper_gradient_b(&self, a: f64, u: f64, t: f64) -> f64 {
        let (_, fu, ft) = self.eval(a, u, t);
        let kappa = (-a * t).exp();
        let g = (ft * ft + (fu * kappa).powi(2)).sqrt();
        g / kappa
    }

    fn defined_on(&self, ball: &Ball) -> bool {
        !matches!(self, TestFunction::Height) || ball.y - ball.r > 0.5 * ball.r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareRow {
    pub class: CenterClass,
    pub function: TestFunction,
    pub ball: Ball,
    pub quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareReport {
    pub sigma: f64,
    pub worst: f64,
    pub class_worst: Vec<(CenterClass, f64)>,
    pub balls: usize,
    pub excluded: usize,
    pub rows: Vec<PoincareRow>,
}

/// Quotients `⨍|f - f_B| / (diam B · ⨍ g_b)` with dilation 1.
fn poincare_quotient(hp: &HalfPlane, ball: &Ball, f: &TestFunction, level: usize) -> Option<f64> {
    let nodes = ball_nodes(hp, ball, 0.0, level);
    let a = hp.a;
    let mass: f64 = nodes.iter().map(|n| n.2).sum();
    let vals: Vec<(f64, f64)> = nodes
        .iter()
        .map(|&(u, y, _)| {
            let t = hp.t_of_y(y);
            (f.eval(a, u, t).0, f.upper_gradient_b(a, u, t))
        })
        .collect();
    let mean: f64 = nodes.iter().zip(&vals).map(|(n, v)| n.2 * v.0).sum::<f64>() / mass;
    let osc: f64 = nodes.iter().zip(&vals).map(|(n, v)| n.2 * (v.0 - mean).abs()).sum::<f64>() / mass;
    let grad: f64 = nodes.iter().zip(&vals).map(|(n, v)| n.2 * v.1).sum::<f64>() / mass;
    let rhs = 2.0 * ball.r * grad;
    if rhs == 0.0 {
        return (osc <= 1e-12 * (1.0 + mean.abs())).then_some(0.0);
    }
    Some(osc / rhs)
}

/// Worst Poincaré quotient over stratified balls and the given test functions.
pub fn poincare_check(
    model: &ConeModel,
    sigma: f64,
    functions: &[TestFunction],
    n_balls: usize,
    radii: &[f64],
    seed: u64,
) -> Result<PoincareReport, AnalysisError> {
    let h = model.entropy();
    if !(sigma > h) {
        return Err(AnalysisError::Divergent { sigma, entropy: h });
    }
    if radii.is_empty() {
        return Err(AnalysisError::Invalid("no radii".into()));
    }
    let hp = HalfPlane::new(model, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut excluded = 0;
    let mut balls = 0;
    for k in 0..n_balls {
        let class = CLASSES[k % 3];
        let r = radii[(k / 3) % radii.len()];
        let ball = draw_ball(class, r, &mut rng);
        balls += 1;
        for f in functions.iter().filter(|f| f.defined_on(&ball)) {
            match (poincare_quotient(&hp, &ball, f, 0), poincare_quotient(&hp, &ball, f, 1)) {
                (Some(q0), Some(q1)) if (q1 - q0).abs() <= EXCLUDE_REL * q1.max(1e-12) || q1 == 0.0 => {
                    rows.push(PoincareRow { class, function: *f, ball, quotient: q1 });
                }
                _ => excluded += 1,
            }
        }
    }
    let worst = rows.iter().map(|r| r.quotient).fold(0.0, f64::max);
    let class_worst = CLASSES.iter().map(|c| (*c, rows.iter().filter(|r| r.class == *c).map(|r| r.quotient).fold(0.0, f64::max))).collect();
    Ok(PoincareReport { sigma, worst, class_worst, balls, excluded, rows })
}

// Critical exponent

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub truncation: f64,
    pub mass: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    pub boundary_u: f64,
    pub radius: f64,
    pub rows: Vec<GrowthRow>,
    /// `mass(2T) / mass(T)` for consecutive doublings.
    pub doubling_ratios: Vec<f64>,
    /// Mass gained per unit height between consecutive truncations.
    pub slopes: Vec<f64>,
}

/// `μ_h` of the boundary ball `B_b(w, r)` cut at heights `t ≤ T`.
pub fn critical_failure_demo(model: &ConeModel, boundary_u: f64, r: f64, truncations: &[f64]) -> Result<CriticalReport, AnalysisError> {
    if !(r > 0.0) {
        return Err(AnalysisError::Invalid(format!("radius must be positive, got {r}")));
    }
    let hp = HalfPlane::new(model, model.entropy())?;
    let ball = Ball { u: boundary_u, y: 0.0, r };
    let rows: Vec<GrowthRow> = truncations
        .iter()
        .map(|&t| {
            let (mass, abs_error) = ball_mass(&hp, &ball, hp.y_of_t(t));
            GrowthRow { truncation: t, mass, abs_error }
        })
        .collect();
    let doubling_ratios = rows.windows(2).map(|w| w[1].mass / w[0].mass).collect();
    let slopes = rows.windows(2).map(|w| (w[1].mass - w[0].mass) / (w[1].truncation - w[0].truncation)).collect();
    Ok(CriticalReport { boundary_u, radius: r, rows, doubling_ratios, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_halfplane, make_warped};

    fn hp(sigma: f64) -> (ConeModel, HalfPlane) {
        let m = make_halfplane(1.0).unwrap();
        let h = HalfPlane::new(&m, sigma).unwrap();
        (m, h)
    }

    #[test]
    fn half_disk_masses_match_closed_forms() {
        let (_, h2) = hp(2.0);
        let (m, e) = ball_mass(&h2, &Ball { u: 0.0, y: 0.0, r: 0.7 }, 0.0);
        assert!((m - std::f64::consts::FRAC_PI_2 * 0.49).abs() < 1e-10, "{m} {e}");
        // ∫₀¹ s^{-1/2} 2√(1 - s²) ds = B(1/4, 3/2)
        let beta = 3.625_609_908_221_908 * 0.886_226_925_452_758 / 0.919_062_526_848_883;
        let (_, h) = hp(1.5);
        let (m, _) = ball_mass(&h, &Ball { u: 0.0, y: 0.0, r: 0.3 }, 0.0);
        assert!((m - beta * 0.3f64.powf(1.5)).abs() < 1e-8 * beta, "{m}");
        // Full disk at σ = 2 is Euclidean area.
        let (m, _) = ball_mass(&h2, &Ball { u: 0.0, y: 2.0, r: 1.0 }, 0.0);
        assert!((m - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn boundary_doubling_is_two_to_the_sigma() {
        let m = make_halfplane(1.0).unwrap();
        let rep = doubling_check(&m, 2.0, 30, &[0.1, 0.4], 1).unwrap();
        let b = &rep.center_classes[0];
        assert!((b.worst_ratio - 4.0).abs() < 1e-8, "{b:?}");
        let bound = rep.uniform_bound.unwrap();
        assert!(rep.worst_ratio <= bound, "{} > {bound}", rep.worst_ratio);
        let sw = &rep.center_classes[2];
        assert!((sw.worst_ratio - 4.0).abs() < 0.4, "{sw:?}");
        assert!(matches!(doubling_check(&m, 1.0, 3, &[0.1], 1), Err(AnalysisError::Divergent { .. })));
        assert!(matches!(doubling_check(&make_warped(0.1, 1.0, 1.0).unwrap(), 2.0, 3, &[0.1], 1), Err(AnalysisError::Unsupported(_))));
    }

    #[test]
    fn chain_rule_gives_euclidean_gradients() {
        let a = 1.0;
        let f = TestFunction::Radial { u: 0.1, y: 0.5 };
        let (u, t) = (0.4, 0.7);
        assert!((f.upper_gradient_b(a, u, t) - 1.0).abs() < 1e-12);
        assert!((TestFunction::CoordY.upper_gradient_b(a, u, t) - 1.0).abs() < 1e-12);
        assert!((TestFunction::CoordU.upper_gradient_b(a, u, t) - 1.0).abs() < 1e-12);
        let y = (-t).exp();
        assert!((TestFunction::Height.upper_gradient_b(a, u, t) - 1.0 / y).abs() < 1e-9);
    }

    #[test]
    fn poincare_quotients_are_finite() {
        let m = make_halfplane(1.0).unwrap();
        let rep = poincare_check(&m, 2.0, &TEST_FUNCTIONS, 12, &[0.2, 0.5], 4).unwrap();
        assert!(rep.worst.is_finite() && rep.worst > 0.0 && rep.worst <= 1.0, "{}", rep.worst);
        let (_, h) = hp(2.0);
        let q = poincare_quotient(&h, &Ball { u: 0.0, y: 0.0, r: 1.0 }, &TestFunction::Constant(3.0), 0).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn critical_masses_grow_linearly() {
        let m = make_halfplane(1.0).unwrap();
        let rep = critical_failure_demo(&m, 0.0, 0.5, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        let last = rep.slopes.last().unwrap();
        // dμ_h = du dy / y: each unit of height adds the chord 2r, up to O(e^{-2T}).
        assert!((last - 1.0).abs() < 1e-3, "{:?}", rep.slopes);
        assert!(rep.doubling_ratios.iter().all(|r| *r > 1.0));
    }
}
