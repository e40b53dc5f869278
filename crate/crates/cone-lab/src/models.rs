//! Concrete expanding-cone models in a single global chart `(u, t)`.
//!
//! Every model carries the metric `dt² + Σ φᵢ(u,t)² duᵢ²`, the height `b = t`
//! and the flow `(u, t) ↦ (u, t + s)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::linalg::{self, Mat};
use crate::numerics::GaussLegendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("expansion rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("rate vector is empty")]
    EmptyRates,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rate invariant violated: d/dt log phi = {value} at (u={u}, t={t})")]
    RateInvariant { u: f64, t: f64, value: f64 },
    #[error("matrix is not hyperbolic (|trace| = {0} must exceed 2)")]
    NotHyperbolic(i64),
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(i64),
    #[error("declared rates ({declared_a}, {declared_big_a}) disagree with realized ({a}, {big_a})")]
    RateMismatch { declared_a: f64, declared_big_a: f64, a: f64, big_a: f64 },
    #[error("model spec incomplete: {0}")]
    IncompleteSpec(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("adapted-metric verification failed: {0}")]
    Verification(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    HalfPlane,
    Diagonal,
    Warped,
    SuspensionCover,
}

/// A point `(u, t)` of the chart; `t` is the height `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub u: Vec<f64>,
    pub t: f64,
}

impl Point {
    pub fn new(u: Vec<f64>, t: f64) -> Self {
        Self { u, t }
    }

    pub fn planar(u: f64, t: f64) -> Self {
        Self { u: vec![u], t }
    }

    pub fn height(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

/// Value and derivatives of `log φᵢ` at a chart point.
///
/// `lu`, `ltu`, `luu` differentiate with respect to the same-axis coordinate
/// `uᵢ`; no warp in this crate depends on the other coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpJet {
    pub log_phi: f64,
    pub lt: f64,
    pub lu: f64,
    pub ltt: f64,
    pub ltu: f64,
    pub luu: f64,
}

impl WarpJet {
    pub fn phi(&self) -> f64 {
        self.log_phi.exp()
    }
}

/// The warp family of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Warp {
    /// `φᵢ = exp(rᵢ t)`.
    Exponential { rates: Vec<f64> },
    /// `φ = exp(base·t + ε sin(ω u) g(t))` on a one-dimensional leaf.
    Perturbed { epsilon: f64, frequency: f64, base_rate: f64 },
}

/// Smooth time profile of the perturbation: `1 - e^{-t}` for `t ≥ 0`,
/// continued for `t < 0` by `t - (t - 1)eᵗ - 1`, which matches value, first and
/// second derivative at 0 and keeps `g'` in `[1, 1 + 1/e]`.
pub fn profile(t: f64) -> (f64, f64, f64) {
    if t >= 0.0 {
        let e = (-t).exp();
        (1.0 - e, e, -e)
    } else {
        let e = t.exp();
        (t - (t - 1.0) * e - 1.0, 1.0 - t * e, -(1.0 + t) * e)
    }
}

/// Chart grid on which rate invariants are verified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 201, half_width: 10.0 }
    }
}

/// An expanding cone presented in a global chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeModel {
    pub kind: ModelKind,
    pub dim_u: usize,
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub warp: Warp,
}

impl ConeModel {
    /// Entropy of the flow restricted to the cone (volume growth exponent).
    pub fn entropy(&self) -> f64 {
        match &self.warp {
            Warp::Exponential { rates } => rates.iter().sum(),
            Warp::Perturbed { base_rate, .. } => *base_rate,
        }
    }

    /// `Some(a)` when the model is isometric to constant curvature `-a²`
    /// (all rates equal, no perturbation), which unlocks closed forms.
    pub fn constant_rate(&self) -> Option<f64> {
        match &self.warp {
            Warp::Exponential { rates } => {
                let r0 = rates[0];
                rates.iter().all(|r| (r - r0).abs() <= 1e-15 * r0.abs()).then_some(r0)
            }
            Warp::Perturbed { epsilon, base_rate, .. } => (*epsilon == 0.0).then_some(*base_rate),
        }
    }

    /// Per-axis rates when the warp depends on `t` only.
    pub fn axis_rates(&self) -> Option<&[f64]> {
        match &self.warp {
            Warp::Exponential { rates } => Some(rates),
            Warp::Perturbed { .. } => None,
        }
    }

    pub fn jet(&self, axis: usize, u: &[f64], t: f64) -> WarpJet {
        match &self.warp {
            Warp::Exponential { rates } => {
                let r = rates[axis];
                WarpJet { log_phi: r * t, lt: r, lu: 0.0, ltt: 0.0, ltu: 0.0, luu: 0.0 }
            }
            Warp::Perturbed { epsilon, frequency, base_rate } => {
                let (g, g1, g2) = profile(t);
                let (s, c) = (frequency * u[axis]).sin_cos();
                WarpJet {
                    log_phi: base_rate * t + epsilon * s * g,
                    lt: base_rate + epsilon * s * g1,
                    lu: epsilon * frequency * c * g,
                    ltt: epsilon * s * g2,
                    ltu: epsilon * frequency * c * g1,
                    luu: -epsilon * frequency * frequency * s * g,
                }
            }
        }
    }

    pub fn log_phi(&self, axis: usize, u: &[f64], t: f64) -> f64 {
        match &self.warp {
            Warp::Exponential { rates } => rates[axis] * t,
            _ => self.jet(axis, u, t).log_phi,
        }
    }

    pub fn phi(&self, axis: usize, u: &[f64], t: f64) -> f64 {
        self.log_phi(axis, u, t).exp()
    }

    /// `∂ₜ log φᵢ`.
    pub fn rate_at(&self, axis: usize, u: &[f64], t: f64) -> f64 {
        self.jet(axis, u, t).lt
    }

    /// Volume density `Π φᵢ`.
    pub fn volume_density(&self, u: &[f64], t: f64) -> f64 {
        (0..self.dim_u).map(|i| self.log_phi(i, u, t)).sum::<f64>().exp()
    }

    /// Riemannian speed of a chart velocity `(du, dt)` at `p`.
    pub fn speed(&self, p: &Point, du: &[f64], dt: f64) -> f64 {
        let mut s = dt * dt;
        for (i, d) in du.iter().enumerate() {
            let phi = self.phi(i, &p.u, p.t);
            s += phi * phi * d * d;
        }
        s.sqrt()
    }

    /// Checks the rate sandwich on a chart grid, returning the realized `(a, A)`.
    pub fn verify_rates(&self, grid: &GridConfig) -> Result<(f64, f64), ModelError> {
        let (lo, hi, arg_lo) = grid_rate_extremes(self, grid);
        if lo <= 0.0 {
            return Err(ModelError::RateInvariant { u: arg_lo.0, t: arg_lo.1, value: lo });
        }
        Ok((lo, hi))
    }
}

fn grid_rate_extremes(model: &ConeModel, grid: &GridConfig) -> (f64, f64, (f64, f64)) {
    let n = grid.n.max(2);
    let w = grid.half_width;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut arg_lo = (0.0, 0.0);
    let mut u = vec![0.0; model.dim_u];
    for i in 0..n {
        let t = -w + 2.0 * w * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let uu = -w + 2.0 * w * j as f64 / (n - 1) as f64;
            u.iter_mut().for_each(|x| *x = uu);
            for axis in 0..model.dim_u {
                let r = model.rate_at(axis, &u, t);
                if r < lo {
                    lo = r;
                    arg_lo = (uu, t);
                }
                hi = hi.max(r);
            }
        }
    }
    (lo, hi, arg_lo)
}

/// Local refinement of a grid extremum of `f` over the box `[-w, w]²` by
/// alternating golden-section searches in each coordinate.
fn polish_extremum<F: Fn(f64, f64) -> f64>(f: F, start: (f64, f64), cell: f64, w: f64, maximize: bool) -> f64 {
    let sgn = if maximize { -1.0 } else { 1.0 };
    let g = |x: f64, y: f64| sgn * f(x, y);
    let (mut x, mut y) = start;
    let golden = |h: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> f64 {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        for _ in 0..80 {
            if h(c) < h(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - r * (b - a);
            d = a + r * (b - a);
        }
        0.5 * (a + b)
    };
    for _ in 0..4 {
        x = golden(&|xx| g(xx, y), (x - cell).max(-w), (x + cell).min(w));
        y = golden(&|yy| g(x, yy), (y - cell).max(-w), (y + cell).min(w));
    }
    if maximize {
        f(x, y).max(f(start.0, start.1))
    } else {
        f(x, y).min(f(start.0, start.1))
    }
}

/// Constant curvature `-a²` half-plane: metric `dt² + e^{2at} du²`.
pub fn make_halfplane(a: f64) -> Result<ConeModel, ModelError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(ModelError::NonPositiveRate(a));
    }
    Ok(ConeModel { kind: ModelKind::HalfPlane, dim_u: 1, a, big_a: a, warp: Warp::Exponential { rates: vec![a] } })
}

/// Multi-rate cone with metric `dt² + Σ e^{2rᵢt} duᵢ²`.
pub fn make_diagonal(rates: &[f64]) -> Result<ConeModel, ModelError> {
    if rates.is_empty() {
        return Err(ModelError::EmptyRates);
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(ModelError::NonPositiveRate(*r));
    }
    let a = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let big_a = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ConeModel { kind: ModelKind::Diagonal, dim_u: rates.len(), a, big_a, warp: Warp::Exponential { rates: rates.to_vec() } })
}

/// Perturbed warped product on a one-dimensional leaf; `(a, A)` are measured on
/// the default verification grid.
pub fn make_warped(epsilon: f64, frequency: f64, base_rate: f64) -> Result<ConeModel, ModelError> {
    make_warped_on(epsilon, frequency, base_rate, &GridConfig::default())
}

pub fn make_warped_on(epsilon: f64, frequency: f64, base_rate: f64, grid: &GridConfig) -> Result<ConeModel, ModelError> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(ModelError::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(ModelError::InvalidParameter(format!("frequency must be > 0, got {frequency}")));
    }
    if !(base_rate > 0.0) || !base_rate.is_finite() {
        return Err(ModelError::NonPositiveRate(base_rate));
    }
    let mut model = ConeModel {
        kind: ModelKind::Warped,
        dim_u: 1,
        a: base_rate,
        big_a: base_rate,
        warp: Warp::Perturbed { epsilon, frequency, base_rate },
    };
    let (lo, hi, arg_lo) = grid_rate_extremes(&model, grid);
    if lo <= 0.0 {
        return Err(ModelError::RateInvariant { u: arg_lo.0, t: arg_lo.1, value: lo });
    }
    let n = grid.n.max(2);
    let cell = 2.0 * grid.half_width / (n - 1) as f64;
    let rate = |u: f64, t: f64| model.rate_at(0, &[u], t);
    let (arg_min, arg_max) = grid_argext(&rate, grid);
    let a = polish_extremum(rate, arg_min, cell, grid.half_width, false).min(lo);
    let big_a = polish_extremum(rate, arg_max, cell, grid.half_width, true).max(hi);
    if a <= 0.0 {
        return Err(ModelError::RateInvariant { u: arg_min.0, t: arg_min.1, value: a });
    }
    model.a = a;
    model.big_a = big_a;
    Ok(model)
}

fn grid_argext<F: Fn(f64, f64) -> f64>(f: &F, grid: &GridConfig) -> ((f64, f64), (f64, f64)) {
    let n = grid.n.max(2);
    let w = grid.half_width;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut alo, mut ahi) = ((0.0, 0.0), (0.0, 0.0));
    for i in 0..n {
        let t = -w + 2.0 * w * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let u = -w + 2.0 * w * j as f64 / (n - 1) as f64;
            let v = f(u, t);
            if v < lo {
                lo = v;
                alo = (u, t);
            }
            if v > hi {
                hi = v;
                ahi = (u, t);
            }
        }
    }
    (alo, ahi)
}

/// Time-`s` flow: shifts the height.
pub fn flow(_model: &ConeModel, x: &Point, s: f64) -> Point {
    Point { u: x.u.clone(), t: x.t + s }
}

/// Expansion factor `φᵢ(u, t + s) / φᵢ(u, t)` of `Df^s` on axis `i`.
pub fn dflow_factor(model: &ConeModel, x: &Point, axis: usize, s: f64) -> f64 {
    (model.log_phi(axis, &x.u, x.t + s) - model.log_phi(axis, &x.u, x.t)).exp()
}

// ---------------------------------------------------------------------------
// Suspension of a hyperbolic toral automorphism.

/// Point of the suspension `T² × [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuspPoint {
    pub x: [f64; 2],
    pub t: f64,
}

/// Point of the universal cover in eigencoordinates `(p_u, p_s, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub p_u: f64,
    pub p_s: f64,
    pub t: f64,
}

/// Suspension flow of `M ∈ GL(2, ℤ)` with roof 1 and its cu-leaf cover cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspensionModel {
    pub matrix: [[i64; 2]; 2],
    /// Modulus of the expanding eigenvalue.
    pub lambda: f64,
    /// Signed eigenvalues `(μ_u, μ_s)` with `|μ_u| = λ`, `|μ_s| = 1/λ`.
    pub eigenvalues: [f64; 2],
    pub period: f64,
    pub unstable_dir: [f64; 2],
    pub stable_dir: [f64; 2],
    pub cover: ConeModel,
}

pub fn make_suspension(matrix: [[i64; 2]; 2]) -> Result<SuspensionModel, ModelError> {
    let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    if det.abs() != 1 {
        return Err(ModelError::NotUnimodular(det));
    }
    let tr = matrix[0][0] + matrix[1][1];
    // Real eigenvalues off the unit circle: tr² > 4 det and not (det=-1, tr=0).
    let disc = (tr * tr - 4 * det) as f64;
    if disc <= 0.0 || (det == 1 && tr.abs() <= 2) || (det == -1 && tr == 0) {
        return Err(ModelError::NotHyperbolic(tr.abs()));
    }
    let trf = tr as f64;
    let sq = disc.sqrt();
    let (l1, l2) = (0.5 * (trf + sq), 0.5 * (trf - sq));
    let (mu_u, mu_s) = if l1.abs() > l2.abs() { (l1, l2) } else { (l2, l1) };
    let eigvec = |mu: f64| -> [f64; 2] {
        let (a, b, c, d) = (matrix[0][0] as f64, matrix[0][1] as f64, matrix[1][0] as f64, matrix[1][1] as f64);
        let v = if b.abs() > 1e-12 || (a - mu).abs() > 1e-12 { [b, mu - a] } else { [mu - d, c] };
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    };
    let lambda = mu_u.abs();
    let mut cover = make_halfplane(lambda.ln())?;
    cover.kind = ModelKind::SuspensionCover;
    Ok(SuspensionModel {
        matrix,
        lambda,
        eigenvalues: [mu_u, mu_s],
        period: 1.0,
        unstable_dir: eigvec(mu_u),
        stable_dir: eigvec(mu_s),
        cover,
    })
}

fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl SuspensionModel {
    pub fn entropy(&self) -> f64 {
        self.lambda.ln()
    }

    /// Torus coordinates of eigencoordinates.
    pub fn to_torus(&self, p_u: f64, p_s: f64) -> [f64; 2] {
        [p_u * self.unstable_dir[0] + p_s * self.stable_dir[0], p_u * self.unstable_dir[1] + p_s * self.stable_dir[1]]
    }

    /// Eigencoordinates of a plane vector.
    pub fn to_eigen(&self, x: [f64; 2]) -> (f64, f64) {
        let (eu, es) = (self.unstable_dir, self.stable_dir);
        let det = eu[0] * es[1] - eu[1] * es[0];
        ((x[0] * es[1] - x[1] * es[0]) / det, (eu[0] * x[1] - eu[1] * x[0]) / det)
    }

    /// Projection of the cover to the suspension: `(x, t) ~ (Mx, t - 1)`, then mod `ℤ²`.
    pub fn project(&self, q: &CoverPoint) -> SuspPoint {
        let n = q.t.floor();
        let k = n as i32;
        let pu = q.p_u * signed_pow(self.eigenvalues[0], k);
        let ps = q.p_s * signed_pow(self.eigenvalues[1], k);
        let x = self.to_torus(pu, ps);
        SuspPoint { x: [wrap01(x[0]), wrap01(x[1])], t: q.t - n }
    }

    /// Suspension flow on `T² × [0, 1)`.
    pub fn flow(&self, p: &SuspPoint, s: f64) -> SuspPoint {
        let t = p.t + s;
        let n = t.floor();
        let mut x = p.x;
        let steps = n.abs() as i64;
        let m = if n >= 0.0 { self.matrix } else { inverse_unimodular(self.matrix) };
        for _ in 0..steps {
            x = [m[0][0] as f64 * x[0] + m[0][1] as f64 * x[1], m[1][0] as f64 * x[0] + m[1][1] as f64 * x[1]];
            x = [wrap01(x[0]), wrap01(x[1])];
        }
        SuspPoint { x, t: t - n }
    }

    pub fn cover_flow(&self, q: &CoverPoint, s: f64) -> CoverPoint {
        CoverPoint { t: q.t + s, ..*q }
    }

    /// Deck generator of the ℤ-cover `T² × ℝ`: `(x, t) ↦ (M⁻¹x, t + 1)`.
    pub fn deck(&self, p: &SuspPoint, t_cover: f64) -> (SuspPoint, f64) {
        let m = inverse_unimodular(self.matrix);
        let x = [wrap01(m[0][0] as f64 * p.x[0] + m[0][1] as f64 * p.x[1]), wrap01(m[1][0] as f64 * p.x[0] + m[1][1] as f64 * p.x[1])];
        (SuspPoint { x, t: p.t }, t_cover + self.period)
    }

    /// Stable holonomy between the cu-leaves `p_s = q.p_s` and `p_s = target_ps`.
    pub fn holonomy_s(&self, q: &CoverPoint, target_ps: f64) -> CoverPoint {
        CoverPoint { p_s: target_ps, ..*q }
    }

    /// Center-stable holonomy from `W^u(x)` to `W^u(y)` for `y ∈ W^{cs}(x)`.
    pub fn holonomy_cs(&self, y: &CoverPoint, z: &CoverPoint) -> CoverPoint {
        CoverPoint { p_u: z.p_u, p_s: y.p_s, t: y.t }
    }

    /// Unstable holonomy between the cs-leaves `p_u = q.p_u` and `p_u = target_pu`.
    pub fn holonomy_u(&self, q: &CoverPoint, target_pu: f64) -> CoverPoint {
        CoverPoint { p_u: target_pu, ..*q }
    }

    /// Distance inside the cs-leaf `{p_u = const}` with metric `dt² + λ^{-2t} dp_s²`.
    pub fn cs_distance(&self, x: &CoverPoint, y: &CoverPoint) -> f64 {
        let a = self.lambda.ln();
        halfplane_distance_scalar(a, x.p_s, -x.t, y.p_s, -y.t)
    }

    /// Distance along a stable leaf at fixed height.
    pub fn s_distance(&self, x: &CoverPoint, y: &CoverPoint) -> f64 {
        self.lambda.powf(-x.t) * (x.p_s - y.p_s).abs()
    }
}

fn signed_pow(mu: f64, k: i32) -> f64 {
    let m = mu.abs().powi(k);
    if mu < 0.0 && k % 2 != 0 {
        -m
    } else {
        m
    }
}

fn inverse_unimodular(m: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[det * m[1][1], -det * m[0][1]], [-det * m[1][0], det * m[0][0]]]
}

/// Distance in `dt² + e^{2at} du²` between `(u1, t1)` and `(u2, t2)`.
pub fn halfplane_distance_scalar(a: f64, u1: f64, t1: f64, u2: f64, t2: f64) -> f64 {
    let y1 = (-a * t1).exp() / a;
    let y2 = (-a * t2).exp() / a;
    let num = ((u1 - u2).powi(2) + (y1 - y2).powi(2)).sqrt();
    2.0 / a * (num / (2.0 * (y1 * y2).sqrt())).asinh()
}

// ---------------------------------------------------------------------------
// Adapted (Lyapunov) norm.

/// Linear flow cocycle `Df^s = exp(sG)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCocycle {
    pub generator: Mat,
}

impl LinearCocycle {
    pub fn diagonal(rates: &[f64]) -> Self {
        let n = rates.len();
        let mut g = vec![vec![0.0; n]; n];
        for (i, r) in rates.iter().enumerate() {
            g[i][i] = *r;
        }
        Self { generator: g }
    }

    /// Continuous shear whose time-one map is `[[λ, 1], [0, λ]]`.
    pub fn shear(lambda: f64) -> Self {
        Self { generator: vec![vec![lambda.ln(), 1.0 / lambda], vec![0.0, lambda.ln()]] }
    }

    pub fn dim(&self) -> usize {
        self.generator.len()
    }

    pub fn matrix(&self, s: f64) -> Mat {
        linalg::expm(&linalg::scale(&self.generator, s))
    }

    pub fn apply(&self, s: f64, v: &[f64]) -> Vec<f64> {
        linalg::matvec(&self.matrix(s), v)
    }
}

/// Raw expansion constants `C⁻¹e^{as} ≤ ‖Df^s v‖/‖v‖ ≤ C e^{As}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawRates {
    pub c: f64,
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
}

/// Averaged norm `g_*(v, v) = ∫₀ᵀ ‖Df^s v‖² ds` and its constant-free rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedMetric {
    pub averaging_time: f64,
    pub gram: Mat,
    pub a_star: f64,
    pub big_a_star: f64,
    pub quadrature_error: f64,
    pub samples_checked: usize,
    /// Largest relative violation of the starred inequality seen on samples (≤ 0 means none).
    pub worst_violation: f64,
}

impl AdaptedMetric {
    pub fn norm(&self, v: &[f64]) -> f64 {
        let gv = linalg::matvec(&self.gram, v);
        v.iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>().sqrt()
    }
}

/// Tolerance on the ratio checks of the starred inequality.
pub const ADAPTED_RATIO_TOL: f64 = 1e-6;

pub fn adapt_metric(raw: RawRates, cocycle: &LinearCocycle) -> Result<AdaptedMetric, ModelError> {
    if !(raw.c >= 1.0) || !(raw.a > 0.0) || !(raw.big_a >= raw.a) {
        return Err(ModelError::InvalidParameter(format!("need C >= 1, a > 0, A >= a; got {raw:?}")));
    }
    let n = cocycle.dim();
    let big_t = (2.0 * raw.c).ln() / raw.a;
    let dirs = sample_directions(n, 64);
    let s_grid: Vec<f64> = (1..=80).map(|k| 0.125 * k as f64).collect();

    // Hypothesis check with the raw constants.
    for &s in &s_grid {
        let m = cocycle.matrix(s);
        for v in &dirs {
            let r = norm2(&linalg::matvec(&m, v));
            let lo = (raw.a * s).exp() / raw.c;
            let hi = raw.c * (raw.big_a * s).exp();
            if r < lo * (1.0 - ADAPTED_RATIO_TOL) || r > hi * (1.0 + ADAPTED_RATIO_TOL) {
                return Err(ModelError::Verification(format!(
                    "cocycle violates the raw expansion bounds at s={s}: ratio {r} not in [{lo}, {hi}]"
                )));
            }
        }
    }

    // Gram matrix by composite Gauss-Legendre with a panel-doubling error estimate.
    let gl = GaussLegendre::g16();
    let panels = (big_t * 4.0).ceil().max(1.0) as usize;
    let gram_with = |panels: usize| -> Mat {
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = gl.integrate(
                    |s| {
                        let m = cocycle.matrix(s);
                        (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>()
                    },
                    0.0,
                    big_t,
                    panels,
                );
                q[i][j] = v;
                q[j][i] = v;
            }
        }
        q
    };
    let coarse = gram_with(panels);
    let gram = gram_with(2 * panels);
    let scale_q = gram.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let qerr = gram.iter().flatten().zip(coarse.iter().flatten()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if !(qerr <= 1e-10 * scale_q) {
        return Err(ModelError::Quadrature(format!("gram matrix quadrature error {qerr:e}")));
    }

    // Sharp infinitesimal rates: generalized eigenvalues of sym(QG) relative to Q.
    let l = linalg::cholesky(&gram).ok_or_else(|| ModelError::Quadrature("gram matrix not positive definite".into()))?;
    let linv = linalg::lower_inverse(&l);
    let qg = linalg::matmul(&gram, &cocycle.generator);
    let sym = linalg::add(&qg, &linalg::transpose(&qg));
    let m = linalg::matmul(&linalg::matmul(&linv, &sym), &linalg::transpose(&linv));
    let (vals, _) = linalg::sym_eigen(&m);
    let a_star = 0.5 * vals[0];
    let big_a_star = 0.5 * vals[n - 1];
    if !(a_star > 0.0) {
        return Err(ModelError::Verification(format!("adapted lower rate {a_star} is not positive")));
    }

    let mut metric = AdaptedMetric {
        averaging_time: big_t,
        gram,
        a_star,
        big_a_star,
        quadrature_error: qerr,
        samples_checked: 0,
        worst_violation: f64::NEG_INFINITY,
    };
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    for &s in s_grid.iter().chain([1e-3, 1e-2, 0.05].iter()) {
        let mtx = cocycle.matrix(s);
        for v in &dirs {
            let r = metric.norm(&linalg::matvec(&mtx, v)) / metric.norm(v);
            let lo = (a_star * s).exp();
            let hi = (big_a_star * s).exp();
            worst = worst.max(1.0 - r / lo).max(r / hi - 1.0);
            checked += 1;
        }
    }
    metric.samples_checked = checked;
    metric.worst_violation = worst;
    if worst > ADAPTED_RATIO_TOL {
        return Err(ModelError::Verification(format!("starred inequality violated by relative {worst:e}")));
    }
    Ok(metric)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sample_directions(n: usize, k: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![1.0]];
    }
    let mut out = Vec::new();
    if n == 2 {
        for i in 0..k {
            let th = std::f64::consts::PI * i as f64 / k as f64;
            out.push(vec![th.cos(), th.sin()]);
        }
        return out;
    }
    // Deterministic quasi-random directions on the sphere.
    for i in 0..k * n {
        let v: Vec<f64> = (0..n).map(|j| ((i * (2 * j + 3) + 7 * j) as f64 * 0.618_033_988_75).fract() - 0.5).collect();
        let nv = norm2(&v);
        if nv > 1e-9 {
            out.push(v.iter().map(|x| x / nv).collect());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// JSON model specification.

/// Serializable model description `{kind, a, A, rates[], epsilon, frequency, matrix[][]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub big_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<i64>>>,
}

/// A built model: either a cone or a suspension (whose cone is its cover).
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltModel {
    Cone(ConeModel),
    Suspension(SuspensionModel),
}

impl BuiltModel {
    pub fn cone(&self) -> &ConeModel {
        match self {
            BuiltModel::Cone(c) => c,
            BuiltModel::Suspension(s) => &s.cover,
        }
    }
}

impl ModelSpec {
    pub fn halfplane(a: f64) -> Self {
        Self { kind: Some(ModelKind::HalfPlane), a: Some(a), ..Default::default() }
    }

    pub fn diagonal(rates: &[f64]) -> Self {
        Self { kind: Some(ModelKind::Diagonal), rates: Some(rates.to_vec()), ..Default::default() }
    }

    pub fn warped(epsilon: f64, frequency: f64, base_rate: f64) -> Self {
        Self {
            kind: Some(ModelKind::Warped),
            epsilon: Some(epsilon),
            frequency: Some(frequency),
            base_rate: Some(base_rate),
            ..Default::default()
        }
    }

    pub fn suspension(matrix: [[i64; 2]; 2]) -> Self {
        Self { kind: Some(ModelKind::SuspensionCover), matrix: Some(matrix.iter().map(|r| r.to_vec()).collect()), ..Default::default() }
    }

    pub fn build(&self) -> Result<BuiltModel, ModelError> {
        let kind = self.kind.ok_or_else(|| ModelError::IncompleteSpec("missing kind".into()))?;
        let built = match kind {
            ModelKind::HalfPlane => {
                let a = self.a.ok_or_else(|| ModelError::IncompleteSpec("half-plane needs a".into()))?;
                BuiltModel::Cone(make_halfplane(a)?)
            }
            ModelKind::Diagonal => {
                let rates = self.rates.as_ref().ok_or_else(|| ModelError::IncompleteSpec("diagonal needs rates".into()))?;
                BuiltModel::Cone(make_diagonal(rates)?)
            }
            ModelKind::Warped => {
                let eps = self.epsilon.unwrap_or(0.0);
                let freq = self.frequency.unwrap_or(1.0);
                let base = self.base_rate.or(self.a).ok_or_else(|| ModelError::IncompleteSpec("warped needs base_rate".into()))?;
                BuiltModel::Cone(make_warped(eps, freq, base)?)
            }
            ModelKind::SuspensionCover => {
                let m = match &self.matrix {
                    Some(m) if m.len() == 2 && m.iter().all(|r| r.len() == 2) => [[m[0][0], m[0][1]], [m[1][0], m[1][1]]],
                    Some(_) => return Err(ModelError::IncompleteSpec("matrix must be 2x2".into())),
                    None => [[2, 1], [1, 1]],
                };
                BuiltModel::Suspension(make_suspension(m)?)
            }
        };
        let cone = built.cone();
        let tol = if cone.kind == ModelKind::Warped { 1e-3 } else { 1e-9 };
        let declared_a = if kind == ModelKind::HalfPlane { None } else { self.a };
        if declared_a.is_some_and(|a| (a - cone.a).abs() > tol * a.abs().max(1.0))
            || self.big_a.is_some_and(|big| (big - cone.big_a).abs() > tol * big.abs().max(1.0))
        {
            return Err(ModelError::RateMismatch {
                declared_a: self.a.unwrap_or(cone.a),
                declared_big_a: self.big_a.unwrap_or(cone.big_a),
                a: cone.a,
                big_a: cone.big_a,
            });
        }
        Ok(built)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfplane_rates_and_rejection() {
        let m = make_halfplane(2.0).unwrap();
        assert_eq!((m.a, m.big_a), (2.0, 2.0));
        assert!(make_halfplane(0.0).is_err());
        assert!(make_halfplane(-1.0).is_err());
    }

    #[test]
    fn diagonal_min_max() {
        let m = make_diagonal(&[1.0, 2.0]).unwrap();
        assert_eq!((m.a, m.big_a), (1.0, 2.0));
        assert_eq!(make_diagonal(&[]), Err(ModelError::EmptyRates));
    }

    #[test]
    fn profile_is_c2_at_zero() {
        let (g0, g1, g2) = profile(0.0);
        let (h0, h1, h2) = profile(-1e-12);
        assert!((g0 - h0).abs() < 1e-11 && (g1 - h1).abs() < 1e-11 && (g2 - h2).abs() < 1e-11);
        for t in [-10.0, -3.0, -1.0, -0.2] {
            let (_, d, _) = profile(t);
            assert!((1.0..=1.0 + (-1f64).exp() + 1e-12).contains(&d));
        }
    }

    #[test]
    fn warped_realized_rates() {
        let m = make_warped(0.1, 1.0, 1.0).unwrap();
        assert!(m.a > 0.0 && m.a <= 1.0 && m.big_a >= 1.0);
        // Exact extremes: 1 ∓ 0.1 (1 + 1/e).
        let ext = 0.1 * (1.0 + (-1f64).exp());
        assert!((m.a - (1.0 - ext)).abs() < 1e-6, "{}", m.a);
        assert!((m.big_a - (1.0 + ext)).abs() < 1e-6, "{}", m.big_a);
        assert!(make_warped(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn suspension_cat_map() {
        let s = make_suspension([[2, 1], [1, 1]]).unwrap();
        assert!((s.lambda - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((s.cover.a - 0.962_423_650_119_206_9).abs() < 1e-12);
        assert!(matches!(make_suspension([[1, 1], [0, 1]]), Err(ModelError::NotHyperbolic(_))));
        assert!(matches!(make_suspension([[2, 0], [0, 1]]), Err(ModelError::NotUnimodular(2))));
        let d = s.unstable_dir[0] * s.stable_dir[0] + s.unstable_dir[1] * s.stable_dir[1];
        assert!(d.abs() < 1e-12, "cat map eigendirections are orthogonal");
    }

    #[test]
    fn adapted_metric_examples() {
        let raw = RawRates { c: 2.0, a: 2f64.ln(), big_a: 2f64.ln() };
        let m = adapt_metric(raw, &LinearCocycle::diagonal(&[2f64.ln()])).unwrap();
        assert!((m.averaging_time - 2.0).abs() < 1e-12);
        let raw = RawRates { c: 2.0, a: 0.4, big_a: 1.0 };
        let m = adapt_metric(raw, &LinearCocycle::shear(2.0)).unwrap();
        assert!(m.a_star <= 2f64.ln() && m.big_a_star >= 2f64.ln());
    }

    #[test]
    fn spec_round_trip() {
        let spec = ModelSpec::diagonal(&[1.0, 2.0]);
        let json = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let bad = ModelSpec { big_a: Some(3.0), ..ModelSpec::diagonal(&[1.0, 2.0]) };
        assert!(matches!(bad.build(), Err(ModelError::RateMismatch { .. })));
    }
}
