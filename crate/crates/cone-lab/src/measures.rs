//! Rescaled volumes `μ_σ = e^{-σt} dvol`, separated-set counts, the Laplace
//! transform `G(σ)` of the counting function, boundary measures obtained by
//! renormalizing `μ_σ` on cones, and Margulis-measure checks.
//!
//! Leaves are one-dimensional except in diagonal models, whose leaves are
//! flat. In the flat case the coordinates `v = e^{r(b+s)}(u - x)` turn the
//! `ρ`-ball into an ellipsoid and `e^{-as}`-separation into Euclidean unit
//! separation, so nets are integer lattices clipped to an ellipsoid.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamenstadt::{self, HamenstadtError};
use crate::models::{ConeModel, CoverPoint, Point, SuspensionModel, Warp};
use crate::numerics::GaussLegendre;
use crate::uniformize::ConeRegion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("mass diverges: sigma = {sigma} is not above the entropy {entropy}")]
    Divergent { sigma: f64, entropy: f64 },
    #[error(transparent)]
    Hamenstadt(#[from] HamenstadtError),
    #[error("net audit failed: {0}")]
    Audit(String),
    #[error("leaf reach did not converge from u = {u0} at height {height}")]
    Reach { u0: f64, height: f64 },
    #[error("non-monotone separated counts at s = {s}: {prev} then {next}")]
    NonMonotone { s: f64, prev: u64, next: u64 },
    #[error("input not converged: {0}")]
    NotConverged(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureMethod {
    Quadrature,
    MonteCarlo,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: MeasureMethod,
    pub n_evals: usize,
}

impl MeasureEstimate {
    fn closed(value: f64) -> Self {
        Self { value, abs_error: 0.0, method: MeasureMethod::ClosedForm, n_evals: 0 }
    }
}

/// Slack added before flooring so that exact ties count as inside a closed ball.
const TIE: f64 = 1e-9;
/// Largest net whose points are listed.
pub const POINT_CAP: u64 = 4096;
/// Largest net that is audited by brute force.
pub const AUDIT_CAP: u64 = 512;
/// Range of heights resolved by quadrature before the tail formula takes over.
const TAIL_START: f64 = 40.0;
/// Truncation heights at which interior masses are reported.
pub const INTERIOR_HEIGHTS: [f64; 3] = [1.0, 2.0, 4.0];

fn check_sigma(model: &ConeModel, sigma: f64) -> Result<(), MeasureError> {
    let h = model.entropy();
    if !(sigma > h) {
        return Err(MeasureError::Divergent { sigma, entropy: h });
    }
    Ok(())
}

// Leaf sets

/// Subset of an unstable leaf in leaf coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LeafSet {
    Interval { lo: f64, hi: f64 },
    Ellipsoid { center: Vec<f64>, semi_axes: Vec<f64> },
}

impl LeafSet {
    /// Lebesgue measure in leaf coordinates.
    pub fn lebesgue(&self) -> f64 {
        match self {
            LeafSet::Interval { lo, hi } => hi - lo,
            LeafSet::Ellipsoid { semi_axes, .. } => unit_ball_volume(semi_axes.len()) * semi_axes.iter().product::<f64>(),
        }
    }

    /// Coordinate box `[lo, hi]` containing the set.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            LeafSet::Interval { lo, hi } => (vec![*lo], vec![*hi]),
            LeafSet::Ellipsoid { center, semi_axes } => {
                (center.iter().zip(semi_axes).map(|(c, s)| c - s).collect(), center.iter().zip(semi_axes).map(|(c, s)| c + s).collect())
            }
        }
    }

    fn contains_set(&self, other: &LeafSet) -> bool {
        match (self, other) {
            (LeafSet::Interval { lo, hi }, LeafSet::Interval { lo: a, hi: b }) => *a >= lo - TIE && *b <= hi + TIE,
            (LeafSet::Ellipsoid { center, semi_axes }, LeafSet::Ellipsoid { center: c2, semi_axes: s2 }) => {
                // Sufficient test: every extreme point of the inner box lies inside.
                let n = center.len();
                (0..1usize << n).all(|mask| {
                    let q: f64 = (0..n)
                        .map(|i| {
                            let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                            ((c2[i] + sign * s2[i] - center[i]) / semi_axes[i]).powi(2)
                        })
                        .sum();
                    q <= 1.0 + TIE
                })
            }
            _ => false,
        }
    }
}

fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Axis-aligned cell `[lo, hi]` of a leaf partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Lebesgue measure of `cell ∩ set`, exact for intervals and planar ellipses.
pub fn cell_overlap(cell: &Cell, set: &LeafSet) -> Result<f64, MeasureError> {
    match set {
        LeafSet::Interval { lo, hi } => Ok((cell.hi[0].min(*hi) - cell.lo[0].max(*lo)).max(0.0)),
        LeafSet::Ellipsoid { center, semi_axes } if center.len() == 2 => {
            let (s0, s1) = (semi_axes[0], semi_axes[1]);
            let x0 = (cell.lo[0] - center[0]) / s0;
            let x1 = (cell.hi[0] - center[0]) / s0;
            let y0 = (cell.lo[1] - center[1]) / s1;
            let y1 = (cell.hi[1] - center[1]) / s1;
            Ok(s0 * s1 * rect_disk_area(x0, x1, y0, y1))
        }
        LeafSet::Ellipsoid { .. } => Err(MeasureError::Unsupported("cell overlaps are implemented for leaves of dimension 1 and 2".into())),
    }
}

/// Area of `[x0, x1] × [y0, y1]` inside the unit disk.
fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let (x0, x1) = (x0.max(-1.0), x1.min(1.0));
    if x0 >= x1 || y0 >= y1 {
        return 0.0;
    }
    // ∫ √(1 - x²) dx
    let prim = |x: f64| 0.5 * (x * (1.0 - x * x).max(0.0).sqrt() + x.clamp(-1.0, 1.0).asin());
    let mut cuts = vec![x0, x1];
    for y in [y0, y1] {
        if y.abs() < 1.0 {
            let c = (1.0 - y * y).sqrt();
            cuts.extend([c, -c]);
        }
    }
    cuts.retain(|c| *c >= x0 && *c <= x1);
    cuts.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        let m = 0.5 * (p + q);
        let s = (1.0 - m * m).max(0.0).sqrt();
        // On each piece the top and bottom are either a rectangle side or the circle.
        let top_circle = y1 >= s;
        let bottom_circle = y0 <= -s;
        let top_m = if top_circle { s } else { y1 };
        let bottom_m = if bottom_circle { -s } else { y0 };
        if top_m <= bottom_m {
            continue;
        }
        let circ = prim(q) - prim(p);
        let top = if top_circle { circ } else { y1 * (q - p) };
        let bottom = if bottom_circle { -circ } else { y0 * (q - p) };
        area += top - bottom;
    }
    area
}

// One-dimensional leaves

fn warp_panels(model: &ConeModel, width: f64) -> usize {
    match &model.warp {
        Warp::Perturbed { frequency, .. } => ((width.abs() * frequency).ceil() as usize).max(1),
        Warp::Exponential { .. } => 1,
    }
}

/// Signed leaf length `∫_{lo}^{hi} φ(u, height) du` on a 1-D leaf.
pub fn leaf_length(model: &ConeModel, lo: f64, hi: f64, height: f64) -> f64 {
    if let Some(r) = model.axis_rates() {
        return (hi - lo) * (r[0] * height).exp();
    }
    GaussLegendre::g16().integrate(|u| model.phi(0, &[u], height), lo, hi, warp_panels(model, hi - lo))
}

/// Point at signed leaf length `dir · len` from `u0` at the given height.
pub fn leaf_reach(model: &ConeModel, u0: f64, height: f64, len: f64, dir: f64) -> Result<f64, MeasureError> {
    if let Some(r) = model.axis_rates() {
        return Ok(u0 + dir * len * (-r[0] * height).exp());
    }
    let target = dir * len;
    let mut q = u0 + target / model.phi(0, &[u0], height);
    for _ in 0..60 {
        let f = leaf_length(model, u0, q, height) - target;
        if f.abs() <= 1e-14 * len.max(1e-300) {
            return Ok(q);
        }
        q -= f / model.phi(0, &[q], height);
    }
    Err(MeasureError::Reach { u0, height })
}

/// Closed `ρ`-ball of radius `r` about `x`, described on its leaf.
pub fn rho_ball(model: &ConeModel, x: &Point, r: f64) -> Result<LeafSet, MeasureError> {
    if !(r > 0.0) {
        return Err(MeasureError::Invalid(format!("radius must be positive, got {r}")));
    }
    // ρ ≤ r exactly when the leaf distance at height b + τ is at most 1.
    let height = x.t - r.ln() / model.a;
    if model.dim_u == 1 {
        let u0 = x.u[0];
        return Ok(LeafSet::Interval { lo: leaf_reach(model, u0, height, 1.0, -1.0)?, hi: leaf_reach(model, u0, height, 1.0, 1.0)? });
    }
    let rates = model.axis_rates().ok_or_else(|| MeasureError::Unsupported("leaves of dimension > 1 need constant axis rates".into()))?;
    Ok(LeafSet::Ellipsoid { center: x.u.clone(), semi_axes: rates.iter().map(|r| (-r * height).exp()).collect() })
}

/// `e^{-ht} vol_t(S)`: leaf volume at height `t` with the exponential trend removed.
fn detrended_volume(model: &ConeModel, set: &LeafSet, t: f64) -> f64 {
    let h = model.entropy();
    match set {
        LeafSet::Interval { lo, hi } => match model.axis_rates() {
            Some(_) => hi - lo,
            None => GaussLegendre::g16().integrate(|u| (model.log_phi(0, &[u], t) - h * t).exp(), *lo, *hi, warp_panels(model, hi - lo)),
        },
        LeafSet::Ellipsoid { .. } => set.lebesgue(),
    }
}

/// `∫ e^{-σt} vol_t(S) dt` over absolute heights `(t_lo, t_hi]`.
pub fn slab_mass(model: &ConeModel, set: &LeafSet, t_lo: f64, t_hi: Option<f64>, sigma: f64) -> Result<MeasureEstimate, MeasureError> {
    let h = model.entropy();
    if t_hi.is_none() {
        check_sigma(model, sigma)?;
    }
    if let Some(hi) = t_hi {
        if hi <= t_lo {
            return Ok(MeasureEstimate::closed(0.0));
        }
    }
    let k = h - sigma;
    // ∫ e^{kt} dt over (t_lo, t_hi]
    let exp_integral = |lo: f64, hi: Option<f64>| -> f64 {
        match hi {
            None => -(k * lo).exp() / k,
            Some(hi) if k.abs() < 1e-14 => hi - lo,
            Some(hi) => ((k * hi).exp() - (k * lo).exp()) / k,
        }
    };
    if model.axis_rates().is_some() {
        return Ok(MeasureEstimate::closed(set.lebesgue() * exp_integral(t_lo, t_hi)));
    }
    let rule = GaussLegendre::g16();
    let start = t_lo;
    let end = match t_hi {
        Some(hi) => hi.min(start + TAIL_START),
        None => start + TAIL_START,
    };
    let panels = ((end - start) / 0.5).ceil().max(1.0) as usize;
    let mut evals = 0usize;
    let mut f = |t: f64| {
        evals += 1;
        (k * t).exp() * detrended_volume(model, set, t)
    };
    let q = rule.integrate_checked(&mut f, start, end, panels);
    let mut value = q.value;
    let mut err = q.abs_error;
    let beyond = match t_hi {
        Some(hi) => (hi > end).then_some(Some(hi)),
        None => Some(None),
    };
    if let Some(hi) = beyond {
        // The detrended volume has settled by now; freeze it and bound the drift.
        let w_end = detrended_volume(model, set, end);
        let w_prev = detrended_volume(model, set, end - 1.0);
        let tail = w_end * exp_integral(end, hi);
        value += tail;
        err += (w_end - w_prev).abs() * exp_integral(end, hi).abs();
    }
    Ok(MeasureEstimate { value, abs_error: err, method: MeasureMethod::Quadrature, n_evals: q.evals + 2 })
}

/// `μ_σ` of a cone region.
pub fn mu_sigma_region(model: &ConeModel, region: &ConeRegion, sigma: f64) -> Result<MeasureEstimate, MeasureError> {
    let set = rho_ball(model, &region.apex, region.radius)?;
    let t_lo = region.apex.t + region.t_min;
    let t_hi = region.truncation.map(|cap| region.apex.t + cap);
    slab_mass(model, &set, t_lo, t_hi, sigma)
}

// Separated sets

/// Maximal `e^{-as}`-separated subset of the closed `ρ`-ball of radius `e^{-al}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetResult {
    pub center: Point,
    pub ball_radius: f64,
    pub separation: f64,
    /// Leaf coordinates; empty when the count exceeds [`POINT_CAP`].
    pub points: Vec<Vec<f64>>,
    pub count: u64,
    /// Points added by the maximality audit on top of the structured net.
    pub completion: u64,
    pub audited: bool,
}

fn check_scales(s: f64, l: f64) -> Result<(), MeasureError> {
    if !(s >= l) || !s.is_finite() || !l.is_finite() {
        return Err(MeasureError::Invalid(format!("need finite s >= l, got s = {s}, l = {l}")));
    }
    Ok(())
}

fn flat_semi_axes(model: &ConeModel, s: f64, l: f64) -> Result<Vec<f64>, MeasureError> {
    let rates = model.axis_rates().ok_or_else(|| MeasureError::Unsupported("leaves of dimension > 1 need constant axis rates".into()))?;
    Ok(rates.iter().map(|r| (r * (s - l)).exp()).collect())
}

/// Number of integer points in the closed ellipsoid with the given semi-axes.
pub fn lattice_count(semi_axes: &[f64]) -> u64 {
    let mut axes = semi_axes.to_vec();
    axes.sort_by(f64::total_cmp);
    fn rec(axes: &[f64], budget: f64) -> u64 {
        let a = axes[0];
        let reach = (a * budget.max(0.0).sqrt() + TIE).floor() as i64;
        if axes.len() == 1 {
            return 2 * reach as u64 + 1;
        }
        (-reach..=reach)
            .map(|j| {
                let rem = budget - (j as f64 / a).powi(2);
                if rem < -TIE {
                    0
                } else {
                    rec(&axes[1..], rem)
                }
            })
            .sum()
    }
    rec(&axes, 1.0)
}

fn inside_ellipsoid(v: &[f64], semi: &[f64]) -> bool {
    v.iter().zip(semi).map(|(x, a)| (x / a).powi(2)).sum::<f64>() <= 1.0 + TIE
}

/// Visits every point of the grid `spacing · ℤⁿ` inside the box `[-half, half]`.
fn for_grid(half: &[f64], spacing: f64, mut f: impl FnMut(&[f64])) {
    let n = half.len();
    let m: Vec<i64> = half.iter().map(|h| (h / spacing + TIE).floor() as i64).collect();
    let mut idx: Vec<i64> = m.iter().map(|x| -x).collect();
    let mut p = vec![0.0; n];
    loop {
        for i in 0..n {
            p[i] = idx[i] as f64 * spacing;
        }
        f(&p);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            idx[i] += 1;
            if idx[i] <= m[i] {
                break;
            }
            idx[i] = -m[i];
            i += 1;
        }
    }
}

/// Net in flat coordinates: lattice points plus audit completions.
struct FlatNet {
    semi: Vec<f64>,
    extra: Vec<Vec<f64>>,
    extra_index: HashMap<Vec<i64>, Vec<usize>>,
}

impl FlatNet {
    fn key(p: &[f64]) -> Vec<i64> {
        p.iter().map(|x| x.floor() as i64).collect()
    }

    fn covered(&self, p: &[f64]) -> bool {
        let n = p.len();
        let base: Vec<i64> = p.iter().map(|x| x.floor() as i64).collect();
        let mut hit = false;
        // Net points within distance 1 have their floor among the 3ⁿ neighbouring cells.
        let mut offs = vec![-1i64; n];
        'outer: loop {
            let cell: Vec<i64> = base.iter().zip(&offs).map(|(b, o)| b + o).collect();
            let corner: Vec<f64> = cell.iter().map(|c| *c as f64).collect();
            if inside_ellipsoid(&corner, &self.semi) && dist2(&corner, p) < 1.0 - 1e-12 {
                hit = true;
                break 'outer;
            }
            if let Some(ids) = self.extra_index.get(&cell) {
                if ids.iter().any(|&i| dist2(&self.extra[i], p) < 1.0 - 1e-12) {
                    hit = true;
                    break 'outer;
                }
            }
            let mut i = 0;
            loop {
                if i == n {
                    break 'outer;
                }
                offs[i] += 1;
                if offs[i] <= 1 {
                    break;
                }
                offs[i] = -1;
                i += 1;
            }
        }
        hit
    }

    fn add(&mut self, p: &[f64]) {
        self.extra_index.entry(Self::key(p)).or_default().push(self.extra.len());
        self.extra.push(p.to_vec());
    }

    /// Greedy completion over an audit grid; returns the number of points added.
    fn complete(&mut self, spacing: f64) -> usize {
        let before = self.extra.len();
        let semi = self.semi.clone();
        let mut pending = Vec::new();
        for_grid(&semi, spacing, |p| {
            if inside_ellipsoid(p, &semi) {
                pending.push(p.to_vec());
            }
        });
        for p in pending {
            if !self.covered(&p) {
                self.add(&p);
            }
        }
        self.extra.len() - before
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `V_{s,l}(x)` without listing points.
pub fn separated_cardinality(model: &ConeModel, x: &Point, s: f64, l: f64) -> Result<u64, MeasureError> {
    check_scales(s, l)?;
    if model.dim_u == 1 {
        let (lo, hi) = ball_interval(model, x, l)?;
        let len = leaf_length(model, lo, hi, x.t + s);
        return Ok((len + TIE).floor() as u64 + 1);
    }
    Ok(lattice_count(&flat_semi_axes(model, s, l)?))
}

fn ball_interval(model: &ConeModel, x: &Point, l: f64) -> Result<(f64, f64), MeasureError> {
    let height = x.t + l;
    Ok((leaf_reach(model, x.u[0], height, 1.0, -1.0)?, leaf_reach(model, x.u[0], height, 1.0, 1.0)?))
}

/// Separated net of the closed ball `B̄_ρ(x, e^{-al})` at separation `e^{-as}`.
///
/// 1-D leaves are stepped at unit leaf length at height `b + s`, which is
/// exactly maximal. Flat leaves use the integer lattice in flat coordinates,
/// completed greedily over an audit grid while the net is small enough to list.
pub fn separated_count(model: &ConeModel, x: &Point, s: f64, l: f64) -> Result<NetResult, MeasureError> {
    check_scales(s, l)?;
    let a = model.a;
    let mut net = NetResult {
        center: x.clone(),
        ball_radius: (-a * l).exp(),
        separation: (-a * s).exp(),
        points: Vec::new(),
        count: 0,
        completion: 0,
        audited: false,
    };
    if model.dim_u == 1 {
        let (lo, hi) = ball_interval(model, x, l)?;
        let height = x.t + s;
        net.count = (leaf_length(model, lo, hi, height) + TIE).floor() as u64 + 1;
        if net.count <= POINT_CAP {
            let mut p = lo;
            net.points.push(vec![p]);
            for _ in 1..net.count {
                p = leaf_reach(model, p, height, 1.0, 1.0)?;
                net.points.push(vec![p.min(hi)]);
            }
        }
        if net.count <= AUDIT_CAP {
            audit_1d(model, &net, lo, hi)?;
            net.audited = true;
        }
        return Ok(net);
    }
    let semi = flat_semi_axes(model, s, l)?;
    let lattice = lattice_count(&semi);
    net.count = lattice;
    if lattice > POINT_CAP {
        return Ok(net);
    }
    let mut flat = FlatNet { semi: semi.clone(), extra: Vec::new(), extra_index: HashMap::new() };
    flat.complete(0.25);
    let mut spacing = 0.125;
    loop {
        let added = flat.complete(spacing);
        if added == 0 {
            break;
        }
        // Densify until the grid is fine enough, then give up.
        spacing *= 0.5;
        if spacing < 0.03 {
            return Err(MeasureError::Audit(format!("{added} uncovered audit points at spacing {}", spacing * 2.0)));
        }
    }
    let rates = model.axis_rates().expect("checked by flat_semi_axes");
    let to_leaf = |v: &[f64]| -> Vec<f64> { v.iter().enumerate().map(|(i, vi)| x.u[i] + vi * (-rates[i] * (x.t + s)).exp()).collect() };
    let half: Vec<f64> = semi.iter().map(|a| a.floor()).collect();
    for_grid(&half, 1.0, |p| {
        if inside_ellipsoid(p, &semi) {
            net.points.push(to_leaf(p));
        }
    });
    for p in &flat.extra {
        net.points.push(to_leaf(p));
    }
    net.completion = flat.extra.len() as u64;
    net.count = lattice + net.completion;
    // Separation of completions from the lattice and from each other.
    for (i, p) in flat.extra.iter().enumerate() {
        for q in &flat.extra[i + 1..] {
            if dist2(p, q) < 1.0 - 1e-9 {
                return Err(MeasureError::Audit("completion points closer than the separation".into()));
            }
        }
    }
    net.audited = true;
    Ok(net)
}

fn audit_1d(model: &ConeModel, net: &NetResult, lo: f64, hi: f64) -> Result<(), MeasureError> {
    let tol = hamenstadt::default_tol(model);
    let at = |u: f64| Point::new(vec![u], net.center.t);
    let rho = |p: f64, q: f64| -> Result<f64, MeasureError> { Ok(hamenstadt::rho(model, &at(p), &at(q), tol)?.value) };
    let pts: Vec<f64> = net.points.iter().map(|p| p[0]).collect();
    // ρ is monotone in the leaf gap on a line, so neighbours decide separation.
    for w in pts.windows(2) {
        let r = rho(w[0], w[1])?;
        if r < net.separation * (1.0 - 1e-6) {
            return Err(MeasureError::Audit(format!("neighbours {} and {} at rho {r} < {}", w[0], w[1], net.separation)));
        }
    }
    let n_grid = 8 * net.count as usize + 1;
    for k in 0..n_grid {
        let g = lo + (hi - lo) * k as f64 / (n_grid - 1) as f64;
        let j = pts.partition_point(|p| *p < g);
        let near = [j.checked_sub(1), Some(j)]
            .into_iter()
            .flatten()
            .filter_map(|i| pts.get(i))
            .map(|p| rho(*p, g))
            .collect::<Result<Vec<_>, _>>()?;
        if near.iter().all(|r| *r >= net.separation * (1.0 + 1e-6)) {
            return Err(MeasureError::Audit(format!("grid point {g} is separated from the net")));
        }
    }
    Ok(())
}

// Entropy

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub s: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmultReport {
    /// Largest `V_{s+t} / (V_s V_t)` over sampled pairs.
    pub worst_ratio: f64,
    /// Allowed slack `2^{dim}` for structured nets.
    pub slack: f64,
    pub pairs: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub h_est: f64,
    pub intercept: f64,
    pub table: Vec<CountRow>,
    pub submult: SubmultReport,
    /// Smallest `(1/s) log V_s + dim·ln 2 / s - h_est`; non-negative when the inf form holds.
    pub fekete_margin: f64,
    pub fekete_holds: bool,
}

/// Least-squares line `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Entropy as the growth rate of `V_s = sup_x V_{s,0}(x)` over the given centers.
pub fn entropy_estimate(model: &ConeModel, centers: &[Point], s_max: usize) -> Result<EntropyReport, MeasureError> {
    if s_max < 6 {
        return Err(MeasureError::Invalid(format!("s_max must be at least 6, got {s_max}")));
    }
    if centers.is_empty() {
        return Err(MeasureError::Invalid("no centers".into()));
    }
    let mut table = Vec::with_capacity(s_max);
    for s in 1..=s_max {
        let sf = s as f64;
        let count = centers.iter().map(|x| separated_cardinality(model, x, sf, 0.0)).try_fold(0u64, |m, c| c.map(|c| m.max(c)))?;
        if let Some(prev) = table.last().map(|r: &CountRow| r.count) {
            if count < prev {
                return Err(MeasureError::NonMonotone { s: sf, prev, next: count });
            }
        }
        table.push(CountRow { s: sf, count });
    }
    let xs: Vec<f64> = table.iter().map(|r| r.s).collect();
    let ys: Vec<f64> = table.iter().map(|r| (r.count as f64).ln()).collect();
    let (h_est, intercept) = fit_line(&xs, &ys);
    let slack = 2f64.powi(model.dim_u as i32);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for s in 1..=s_max {
        for t in s..=s_max - s {
            let v = |k: usize| table[k - 1].count as f64;
            worst = worst.max(v(s + t) / (v(s) * v(t)));
            pairs += 1;
        }
    }
    let ln2 = 2f64.ln() * model.dim_u as f64;
    let fekete_margin = table.iter().map(|r| ((r.count as f64).ln() + ln2) / r.s - h_est).fold(f64::INFINITY, f64::min);
    Ok(EntropyReport {
        h_est,
        intercept,
        table,
        submult: SubmultReport { worst_ratio: worst, slack, pairs, holds: worst <= slack },
        fekete_margin,
        fekete_holds: fekete_margin >= 0.0,
    })
}

// Laplace transform of the counting function

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GReport {
    pub sigma: f64,
    pub value: f64,
    pub abs_error: f64,
    pub tail: f64,
    pub s_max: f64,
    pub n_evals: usize,
}

/// Grid step for `G`.
const G_STEP: f64 = 1.0 / 64.0;

/// `G(σ) = ∫₀^∞ e^{-σt} V_t dt` with `V_t = V_{t,0}(x)`.
///
/// `V_t` is non-decreasing, so on each grid cell the integral lies between
/// the left and right counts times the exact exponential integral; the value
/// is the bracket midpoint and the half-width is the discretization error.
/// The tail beyond `s_max` is `C e^{ht}` fitted at `s_max`.
pub fn laplace_g(model: &ConeModel, x: &Point, sigma: f64, s_max: f64) -> Result<GReport, MeasureError> {
    check_sigma(model, sigma)?;
    if !(s_max >= 2.0) {
        return Err(MeasureError::Invalid(format!("s_max must be at least 2, got {s_max}")));
    }
    let h = model.entropy();
    let n = (s_max / G_STEP).round() as usize;
    let step = s_max / n as f64;
    let counts: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|k| separated_cardinality(model, x, k as f64 * step, 0.0).map(|c| c as f64))
        .collect::<Result<_, _>>()?;
    let (mut lower, mut upper) = (0.0, 0.0);
    for k in 0..n {
        let (t0, t1) = (k as f64 * step, (k + 1) as f64 * step);
        let e = ((-sigma * t0).exp() - (-sigma * t1).exp()) / sigma;
        lower += counts[k].min(counts[k + 1]) * e;
        upper += counts[k].max(counts[k + 1]) * e;
    }
    let c_end = counts[n] * (-h * s_max).exp();
    let back = ((1.0 / step).round() as usize).min(n);
    let c_prev = counts[n - back] * (-h * (s_max - back as f64 * step)).exp();
    let tail = c_end * ((h - sigma) * s_max).exp() / (sigma - h);
    let tail_err = tail * (c_end / c_prev - 1.0).abs();
    Ok(GReport { sigma, value: 0.5 * (lower + upper) + tail, abs_error: 0.5 * (upper - lower) + tail_err, tail, s_max, n_evals: n + 1 })
}

// Critical exponent

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CritRow {
    pub sigma: f64,
    pub height: f64,
    pub mass: f64,
    pub g: f64,
    pub ratio: f64,
    /// Ratio rebuilt from the `l = +1` decomposition `C̄(x, e^{a}) ∪ slab`.
    pub ratio_pos: f64,
    /// Ratio rebuilt from the `l = -1` decomposition `C̄(x, e^{-a}) \ slab`.
    pub ratio_neg: f64,
}

/// `μ_σ(C̄(x, 1)) / (e^{-σ b(x)} G(σ))` with both shifted variants.
pub fn crit_ratio(model: &ConeModel, x: &Point, sigma: f64, g: &GReport) -> Result<CritRow, MeasureError> {
    if (g.sigma - sigma).abs() > 1e-12 {
        return Err(MeasureError::Invalid(format!("G was computed at sigma = {}, not {sigma}", g.sigma)));
    }
    let b = x.t;
    let a = model.a;
    let full = |r: f64| mu_sigma_region(model, &ConeRegion::full(x.clone(), r), sigma).map(|m| m.value);
    let slab = |r: f64, lo: f64, hi: f64| {
        let region = ConeRegion { apex: x.clone(), radius: r, t_min: lo, truncation: Some(hi) };
        mu_sigma_region(model, &region, sigma).map(|m| m.value)
    };
    let mass = full(1.0)?;
    let denom = |height: f64| (-sigma * height).exp() * g.value;
    let pos = (full(a.exp())? + slab(a.exp(), -1.0, 0.0)?) / denom(b - 1.0);
    let neg = (full((-a).exp())? - slab((-a).exp(), 0.0, 1.0)?) / denom(b + 1.0);
    Ok(CritRow { sigma, height: b, mass, g: g.value, ratio: mass / denom(b), ratio_pos: pos, ratio_neg: neg })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CritSweep {
    pub rows: Vec<CritRow>,
    pub c_min: f64,
    pub c_max: f64,
    /// Largest ratio over smallest across the whole sweep, shifted variants included.
    pub spread: f64,
    /// Slope of `log G(h + v)` against `log(1/v)`.
    pub g_slope: f64,
}

/// Critical ratios over `σ = h + v` and apex heights, with `G` taken at height 0.
pub fn crit_sweep(model: &ConeModel, u: &[f64], offsets: &[f64], heights: &[f64], s_max: f64) -> Result<CritSweep, MeasureError> {
    let h = model.entropy();
    let base = Point::new(u.to_vec(), 0.0);
    let gs: Vec<GReport> = offsets.iter().map(|v| laplace_g(model, &base, h + v, s_max)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for g in &gs {
        for &b in heights {
            rows.push(crit_ratio(model, &Point::new(u.to_vec(), b), g.sigma, g)?);
        }
    }
    let all: Vec<f64> = rows.iter().flat_map(|r| [r.ratio, r.ratio_pos, r.ratio_neg]).collect();
    let c_min = all.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = all.iter().copied().fold(0.0, f64::max);
    let xs: Vec<f64> = offsets.iter().map(|v| (1.0 / v).ln()).collect();
    let ys: Vec<f64> = gs.iter().map(|g| g.value.ln()).collect();
    let g_slope = if offsets.len() >= 2 { fit_line(&xs, &ys).0 } else { f64::NAN };
    Ok(CritSweep { rows, c_min, c_max, spread: c_max / c_min, g_slope })
}

// Renormalized boundary measures

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorMass {
    pub truncation: f64,
    pub mass: f64,
}

/// `μ̌_{σ,l,x} = e^{σl} μ_σ|_C / μ_σ(C)` on `C = C̄(x, e^{al})`, split over sub-cones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenormalizedMeasure {
    pub sigma: f64,
    pub l: f64,
    pub apex: Point,
    pub domain: LeafSet,
    pub partition: Vec<Cell>,
    /// Masses of the sub-cones over the partition cells.
    pub masses: Vec<f64>,
    pub total: f64,
    pub interior: Vec<InteriorMass>,
    /// `μ_σ(C̄(x, e^{al}))`, the divisor of the renormalization.
    pub normalization: f64,
    pub abs_error: f64,
    pub method: MeasureMethod,
}

impl RenormalizedMeasure {
    pub fn interior_mass_below(&self, t: f64) -> Option<f64> {
        self.interior.iter().find(|m| (m.truncation - t).abs() < 1e-12).map(|m| m.mass)
    }

    /// Mass of a leaf set, spreading each cell's mass uniformly over the cell.
    pub fn mass_of(&self, set: &LeafSet) -> Result<f64, MeasureError> {
        let mut total = 0.0;
        for (cell, m) in self.partition.iter().zip(&self.masses) {
            if *m == 0.0 {
                continue;
            }
            let in_domain = cell_overlap(cell, &self.domain)?;
            if in_domain <= 0.0 {
                continue;
            }
            let both = match (set, &self.domain) {
                (LeafSet::Interval { lo, hi }, LeafSet::Interval { lo: dl, hi: dh }) => {
                    (cell.hi[0].min(*hi).min(*dh) - cell.lo[0].max(*lo).max(*dl)).max(0.0)
                }
                // Balls handed in are checked to lie inside the domain.
                _ => cell_overlap(cell, set)?,
            };
            total += m * (both / in_domain).min(1.0);
        }
        Ok(total)
    }
}

/// Partition of the leaf ball `B_ρ(x, e^{al})` into `cells` pieces per axis.
fn partition(domain: &LeafSet, cells: usize) -> Vec<Cell> {
    let (lo, hi) = domain.bounding_box();
    let n = lo.len();
    let widths: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / cells as f64).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let c_lo: Vec<f64> = (0..n).map(|i| lo[i] + widths[i] * idx[i] as f64).collect();
        let c_hi: Vec<f64> = (0..n).map(|i| lo[i] + widths[i] * (idx[i] + 1) as f64).collect();
        out.push(Cell { lo: c_lo, hi: c_hi });
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            idx[i] += 1;
            if idx[i] < cells {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Renormalized measure at `b(x) = 0` on sub-cones over an even partition of the leaf ball.
pub fn ps_renormalize(model: &ConeModel, x: &Point, sigma: f64, l: f64, cells: usize) -> Result<RenormalizedMeasure, MeasureError> {
    check_sigma(model, sigma)?;
    if x.t.abs() > 1e-12 {
        return Err(MeasureError::Invalid(format!("the apex must sit at height 0, got {}", x.t)));
    }
    if cells == 0 {
        return Err(MeasureError::Invalid("empty partition".into()));
    }
    let domain = rho_ball(model, x, (model.a * l).exp())?;
    let cone = slab_mass(model, &domain, x.t, None, sigma)?;
    let scale = (sigma * l).exp() / cone.value;
    let part = partition(&domain, cells);
    let (masses, errs): (Vec<f64>, Vec<f64>) = part
        .par_iter()
        .map(|cell| -> Result<(f64, f64), MeasureError> {
            let piece = match &domain {
                LeafSet::Interval { lo, hi } => LeafSet::Interval { lo: cell.lo[0].max(*lo), hi: cell.hi[0].min(*hi) },
                LeafSet::Ellipsoid { .. } => {
                    // Homogeneous leaves: the sub-cone mass is the overlap times the cone's per-area mass.
                    let frac = cell_overlap(cell, &domain)? / domain.lebesgue();
                    return Ok((frac * (sigma * l).exp(), 0.0));
                }
            };
            let m = slab_mass(model, &piece, x.t, None, sigma)?;
            Ok((m.value * scale, m.abs_error * scale))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    let interior = INTERIOR_HEIGHTS
        .iter()
        .map(|&t| slab_mass(model, &domain, x.t, Some(x.t + t), sigma).map(|m| InteriorMass { truncation: t, mass: m.value * scale }))
        .collect::<Result<Vec<_>, _>>()?;
    let total = masses.iter().sum();
    Ok(RenormalizedMeasure {
        sigma,
        l,
        apex: x.clone(),
        domain,
        partition: part,
        masses,
        total,
        interior,
        normalization: cone.value,
        abs_error: errs.iter().sum::<f64>() + cone.abs_error * scale,
        method: cone.method,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsSweep {
    pub measures: Vec<RenormalizedMeasure>,
    /// Largest relative change of a cell mass between the two finest `σ`.
    pub cauchy: f64,
    pub converged: bool,
    /// Interior mass below `T = 1` at consecutive `σ` divided by the next one.
    pub interior_decrease: Vec<f64>,
    /// Largest relative deviation of the finest masses from Lebesgue proportions.
    pub lebesgue_deviation: f64,
}

pub const CAUCHY_REL: f64 = 0.05;

/// Renormalized measures along `σ = h + v`, finest last.
pub fn ps_sweep(model: &ConeModel, x: &Point, l: f64, cells: usize, offsets: &[f64]) -> Result<PsSweep, MeasureError> {
    if offsets.len() < 2 {
        return Err(MeasureError::Invalid("a sweep needs at least two sigmas".into()));
    }
    let h = model.entropy();
    let measures: Vec<RenormalizedMeasure> = offsets.iter().map(|v| ps_renormalize(model, x, h + v, l, cells)).collect::<Result<_, _>>()?;
    let (p, q) = (&measures[measures.len() - 2], &measures[measures.len() - 1]);
    let floor = 1e-6 * q.total;
    let cauchy = p
        .masses
        .iter()
        .zip(&q.masses)
        .filter(|(_, b)| **b > floor)
        .map(|(a, b)| ((a / p.total) / (b / q.total) - 1.0).abs())
        .fold(0.0, f64::max);
    let interior_decrease = measures
        .windows(2)
        .map(|w| w[0].interior_mass_below(1.0).unwrap_or(f64::NAN) / w[1].interior_mass_below(1.0).unwrap_or(f64::NAN))
        .collect();
    let leb = q.domain.lebesgue();
    let mut lebesgue_deviation: f64 = 0.0;
    for (cell, m) in q.partition.iter().zip(&q.masses) {
        let share = cell_overlap(cell, &q.domain)? / leb;
        if share > 1e-6 {
            lebesgue_deviation = lebesgue_deviation.max((m / q.total / share - 1.0).abs());
        }
    }
    Ok(PsSweep { measures, cauchy, converged: cauchy <= CAUCHY_REL, interior_decrease, lebesgue_deviation })
}

// Ahlfors regularity

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AhlforsRow {
    pub radius: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub balls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AhlforsReport {
    pub exponent: f64,
    pub rows: Vec<AhlforsRow>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ratio_max / ratio_min`.
    pub band: f64,
    /// Smallest `K` with every ratio in `[1/K, K]`.
    pub k: f64,
    /// Balls not contained in the partitioned domain.
    pub excluded: usize,
}

/// `mass(B_ρ(c, r)) / r^{h/a}` for random centers of the finest measure of a converged sweep.
pub fn ahlfors_check(
    model: &ConeModel,
    sweep: &PsSweep,
    radii: &[f64],
    n_centers: usize,
    seed: u64,
) -> Result<AhlforsReport, MeasureError> {
    if !sweep.converged {
        return Err(MeasureError::NotConverged(format!("cell masses still move by {:.3} between the finest sigmas", sweep.cauchy)));
    }
    let measure = sweep.measures.last().expect("sweep is non-empty");
    let exponent = model.entropy() / model.a;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = measure.domain.bounding_box();
    let mut rows = Vec::new();
    let mut excluded = 0;
    for &r in radii {
        let mut row = AhlforsRow { radius: r, ratio_min: f64::INFINITY, ratio_max: 0.0, balls: 0 };
        let mut attempts = 0;
        while row.balls < n_centers && attempts < 50 * n_centers {
            attempts += 1;
            let u: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
            let c = Point::new(u, measure.apex.t);
            let ball = rho_ball(model, &c, r)?;
            if !measure.domain.contains_set(&ball) {
                excluded += 1;
                continue;
            }
            let ratio = measure.mass_of(&ball)? / r.powf(exponent);
            row.ratio_min = row.ratio_min.min(ratio);
            row.ratio_max = row.ratio_max.max(ratio);
            row.balls += 1;
        }
        rows.push(row);
    }
    let used: Vec<&AhlforsRow> = rows.iter().filter(|r| r.balls > 0).collect();
    if used.is_empty() {
        return Err(MeasureError::Invalid("no ball fits inside the partitioned domain".into()));
    }
    let ratio_min = used.iter().map(|r| r.ratio_min).fold(f64::INFINITY, f64::min);
    let ratio_max = used.iter().map(|r| r.ratio_max).fold(0.0, f64::max);
    Ok(AhlforsReport { exponent, rows, ratio_min, ratio_max, band: ratio_max / ratio_min, k: ratio_max.max(1.0 / ratio_min), excluded })
}

// Margulis measure

/// Flow box `Q × [t_lo, t_hi]` in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowBox {
    pub u_lo: Vec<f64>,
    pub u_hi: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MargulisReport {
    pub mass: f64,
    pub shift: f64,
    pub shifted_mass: f64,
    pub scaling_rel_error: f64,
    pub flipped_mass: f64,
    pub flip_rel_error: f64,
    pub normalization: String,
}

/// Pieces used to sum `ρ`-lengths on a 1-D leaf.
const RHO_PIECES: usize = 64;

/// `ν_t(Q)` on the leaf at height `t`.
fn leaf_nu(model: &ConeModel, lo: &[f64], hi: &[f64], t: f64) -> Result<f64, MeasureError> {
    let h = model.entropy();
    if model.dim_u == 1 {
        // ρ-length by summing ρ over a fine partition: the Hausdorff 1-measure of ρ.
        let tol = hamenstadt::default_tol(model).min(1e-10);
        let step = (hi[0] - lo[0]) / RHO_PIECES as f64;
        let mut acc = 0.0;
        for k in 0..RHO_PIECES {
            let p = Point::new(vec![lo[0] + step * k as f64], t);
            let q = Point::new(vec![lo[0] + step * (k + 1) as f64], t);
            acc += hamenstadt::rho(model, &p, &q, tol)?.value;
        }
        return Ok(acc);
    }
    let leb: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    Ok((h * t).exp() * leb)
}

fn margulis_mass(model: &ConeModel, b: &FlowBox) -> Result<f64, MeasureError> {
    let rule = GaussLegendre::g16();
    let mut err = None;
    let v = rule.integrate(
        |t| match leaf_nu(model, &b.u_lo, &b.u_hi, t) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        b.t_lo,
        b.t_hi,
        ((b.t_hi - b.t_lo).abs().ceil() as usize).max(1),
    );
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Margulis mass of a flow box, its flow scaling and the flipped integration order.
pub fn margulis_checks(model: &ConeModel, b: &FlowBox, shift: f64) -> Result<MargulisReport, MeasureError> {
    let h = model.entropy();
    if (h / model.a - model.dim_u as f64).abs() > 1e-9 || model.axis_rates().is_none() {
        return Err(MeasureError::Unsupported("the leaf measure is only available when h/a equals the leaf dimension".into()));
    }
    if b.u_lo.len() != model.dim_u || b.u_hi.len() != model.dim_u || !(b.t_hi > b.t_lo) {
        return Err(MeasureError::Invalid("malformed flow box".into()));
    }
    let mass = margulis_mass(model, b)?;
    let moved = FlowBox { t_lo: b.t_lo + shift, t_hi: b.t_hi + shift, ..b.clone() };
    let shifted_mass = margulis_mass(model, &moved)?;
    let expected = (h * shift).exp() * mass;
    // e^{h(t - t_lo)} dt dν at the bottom leaf.
    let base = leaf_nu(model, &b.u_lo, &b.u_hi, b.t_lo)?;
    let flipped_mass = base * ((h * (b.t_hi - b.t_lo)).exp() - 1.0) / h;
    let normalization = if model.dim_u == 1 {
        "nu_t is the rho-length on the leaf at height t, equal to exp(a t) du".to_string()
    } else {
        "nu_t is exp(h t) times Lebesgue measure in leaf coordinates".to_string()
    };
    Ok(MargulisReport {
        mass,
        shift,
        shifted_mass,
        scaling_rel_error: (shifted_mass / expected - 1.0).abs(),
        flipped_mass,
        flip_rel_error: (flipped_mass / mass - 1.0).abs(),
        normalization,
    })
}

// Holonomy on the suspension cover

/// Box in a cu-leaf `p_s = const` of the suspension cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuBox {
    pub p_u: (f64, f64),
    pub t: (f64, f64),
    pub p_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsRow {
    pub radius: f64,
    pub k_r: f64,
    pub mass_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyReport {
    pub stable_distance: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub s_rel_error: f64,
    pub cs_rows: Vec<CsRow>,
}

fn cover_nu(susp: &SuspensionModel, p_u: (f64, f64), p_s: f64, t: f64) -> Result<f64, MeasureError> {
    let step = (p_u.1 - p_u.0) / RHO_PIECES as f64;
    let mut acc = 0.0;
    for k in 0..RHO_PIECES {
        let p = CoverPoint { p_u: p_u.0 + step * k as f64, p_s, t };
        let q = CoverPoint { p_u: p_u.0 + step * (k + 1) as f64, p_s, t };
        acc += hamenstadt::rho_cover(susp, &p, &q, 1e-12)?;
    }
    Ok(acc)
}

fn cover_mass(susp: &SuspensionModel, b: &CuBox) -> Result<f64, MeasureError> {
    let rule = GaussLegendre::g16();
    let mut out = 0.0;
    let h = (b.t.1 - b.t.0) / 2.0;
    let mid = (b.t.0 + b.t.1) / 2.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        out += w * h * cover_nu(susp, b.p_u, b.p_s, mid + h * x)?;
    }
    Ok(out)
}

/// Stable-holonomy invariance of the cu-box mass and cs-holonomy quasi-invariance of leaf measures.
pub fn holonomy_invariance_check(
    susp: &SuspensionModel,
    u: &CuBox,
    target_p_s: f64,
    cs_radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<HolonomyReport, MeasureError> {
    let corner = CoverPoint { p_u: u.p_u.0, p_s: u.p_s, t: u.t.0 };
    let image = susp.holonomy_s(&corner, target_p_s);
    let v = CuBox { p_u: (image.p_u, susp.holonomy_s(&CoverPoint { p_u: u.p_u.1, ..corner }, target_p_s).p_u), p_s: image.p_s, ..*u };
    let mass_u = cover_mass(susp, u)?;
    let mass_v = cover_mass(susp, &v)?;
    let exponent = susp.cover.entropy() / susp.cover.a + 1.0;
    let mut cs_rows = Vec::new();
    for &r in cs_radii {
        let x = CoverPoint { p_u: 0.5 * (u.p_u.0 + u.p_u.1), p_s: u.p_s, t: u.t.0 };
        let y = CoverPoint { t: x.t + 0.99 * r, ..x };
        let half = 0.9 * r * (-susp.cover.a * x.t).exp();
        let z0 = CoverPoint { p_u: x.p_u - half, ..x };
        let z1 = CoverPoint { p_u: x.p_u + half, ..x };
        let w0 = hamenstadt::holonomy_cs(susp, &x, &y, &z0, r)?;
        let w1 = hamenstadt::holonomy_cs(susp, &x, &y, &z1, r)?;
        let before = cover_nu(susp, (z0.p_u, z1.p_u), x.p_s, x.t)?;
        let after = cover_nu(susp, (w0.p_u, w1.p_u), w0.p_s, w0.t)?;
        let k_r = hamenstadt::bilipschitz_estimate(susp, r, samples, seed)?.k;
        let bound = k_r.powf(exponent);
        let ratio = after / before;
        cs_rows.push(CsRow {
            radius: r,
            k_r,
            mass_ratio: ratio,
            lower: 1.0 / bound,
            upper: bound,
            holds: ratio >= 1.0 / bound && ratio <= bound,
        });
    }
    Ok(HolonomyReport {
        stable_distance: susp.s_distance(&corner, &image),
        mass_u,
        mass_v,
        s_rel_error: (mass_v / mass_u - 1.0).abs(),
        cs_rows,
    })
}

/// Leaf-count table as CSV with header `s,count`.
pub fn counts_csv(table: &[CountRow]) -> String {
    let mut out = String::from("s,count\n");
    for r in table {
        out.push_str(&format!("{},{}\n", r.s, r.count));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_diagonal, make_halfplane, make_suspension, make_warped};

    fn origin() -> Point {
        Point::planar(0.0, 0.0)
    }

    #[test]
    fn unit_ball_net_has_three_points() {
        let m = make_halfplane(1.0).unwrap();
        let net = separated_count(&m, &origin(), 0.0, 0.0).unwrap();
        assert_eq!(net.count, 3);
        assert!(net.audited);
        assert_eq!(net.points.len(), 3);
    }

    #[test]
    fn scale_relation_is_exact() {
        let m = make_halfplane(1.0).unwrap();
        let w = make_warped(0.1, 1.0, 1.0).unwrap();
        for model in [&m, &w] {
            let x = Point::planar(0.3, 0.5);
            for t in [1.0, 2.0] {
                for (s, l) in [(2.0, 0.0), (3.5, 1.0)] {
                    let lhs = separated_cardinality(model, &Point::planar(0.3, 0.5 - t), s + t, l + t).unwrap();
                    let rhs = separated_cardinality(model, &x, s, l).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn lattice_count_matches_brute_force() {
        let semi = [2.7, 5.3];
        let mut brute = 0;
        for i in -3..=3 {
            for j in -6..=6 {
                if (i as f64 / semi[0]).powi(2) + (j as f64 / semi[1]).powi(2) <= 1.0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(lattice_count(&semi), brute);
        assert_eq!(lattice_count(&[1.0, 1.0]), 5);
    }

    #[test]
    fn flat_nets_are_completed_and_separated() {
        let m = make_diagonal(&[1.0, 2.0]).unwrap();
        let net = separated_count(&m, &Point::new(vec![0.0, 0.0], 0.0), 1.0, 0.0).unwrap();
        assert!(net.audited);
        assert_eq!(net.points.len() as u64, net.count);
        let v: Vec<Vec<f64>> = net.points.iter().map(|p| vec![p[0] * 1f64.exp(), p[1] * 2f64.exp()]).collect();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                assert!(dist2(&v[i], &v[j]) >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn rect_disk_area_pieces() {
        assert!((rect_disk_area(-2.0, 2.0, -2.0, 2.0) - std::f64::consts::PI).abs() < 1e-12);
        assert!((rect_disk_area(0.0, 2.0, 0.0, 2.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!((rect_disk_area(-0.5, 0.5, -0.5, 0.5) - 1.0).abs() < 1e-12);
        // Strip |x| ≤ ½: 2(½·√3/2 + asin ½)
        let strip = 2.0 * (0.5 * 3f64.sqrt() / 2.0 + std::f64::consts::FRAC_PI_6);
        assert!((rect_disk_area(-0.5, 0.5, -3.0, 3.0) - strip).abs() < 1e-12);
    }

    #[test]
    fn halfplane_cone_masses() {
        let m = make_halfplane(1.0).unwrap();
        let full = ConeRegion::full(origin(), 1.0);
        assert!((mu_sigma_region(&m, &full, 2.0).unwrap().value - 2.0).abs() < 1e-12);
        assert!(matches!(mu_sigma_region(&m, &full, 1.0), Err(MeasureError::Divergent { .. })));
        let cut = ConeRegion { truncation: Some(1.0), ..full };
        assert!((mu_sigma_region(&m, &cut, 1.0).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn warped_quadrature_brackets_the_flat_mass() {
        let w = make_warped(0.1, 1.0, 1.0).unwrap();
        let est = mu_sigma_region(&w, &ConeRegion::full(origin(), 1.0), 2.0).unwrap();
        assert!(est.abs_error < 1e-8, "{est:?}");
        // |log φ - t| ≤ ε for t ≥ 0 bounds the ball and the density.
        let e = 0.1f64.exp();
        assert!(est.value > 2.0 / e / e && est.value < 2.0 * e * e, "{}", est.value);
        let flat = make_warped(0.0, 1.0, 1.0).unwrap();
        let est0 = mu_sigma_region(&flat, &ConeRegion::full(origin(), 1.0), 2.0).unwrap();
        assert!((est0.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn g_matches_the_exact_step_sum() {
        // V_t = ⌊2eᵗ⌋ + 1 jumps at ln(k/2); integrate by parts.
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        let exact = 0.5 + 0.5 * (2.0 + 4.0 * (zeta2 - 1.25));
        let m = make_halfplane(1.0).unwrap();
        let g = laplace_g(&m, &origin(), 2.0, 12.0).unwrap();
        assert!((g.value - exact).abs() < 2e-3, "{} vs {exact}", g.value);
        assert!((g.value - exact).abs() <= 2.0 * g.abs_error + 1e-4);
        assert!(matches!(laplace_g(&m, &origin(), 1.0, 12.0), Err(MeasureError::Divergent { .. })));
    }

    #[test]
    fn entropy_of_homogeneous_models() {
        let m = make_halfplane(1.0).unwrap();
        let r = entropy_estimate(&m, &[origin()], 10).unwrap();
        assert!((r.h_est - 1.0).abs() < 0.05, "{}", r.h_est);
        assert!(r.submult.holds && r.fekete_holds);
        let d = make_diagonal(&[1.0, 2.0]).unwrap();
        let r = entropy_estimate(&d, &[Point::new(vec![0.0, 0.0], 0.0)], 8).unwrap();
        assert!((r.h_est - 3.0).abs() < 0.1, "{}", r.h_est);
        assert!(r.submult.holds, "{:?}", r.submult);
    }

    #[test]
    fn halfplane_renormalization_is_lebesgue() {
        let m = make_halfplane(1.0).unwrap();
        let mu = ps_renormalize(&m, &origin(), 2.0, 0.0, 4).unwrap();
        assert!((mu.total - 1.0).abs() < 1e-12);
        // Cells of [-1, 1] have length ½; [0, ½] is the third.
        assert!((mu.masses[2] - 0.25).abs() < 1e-12);
        let below = mu.interior_mass_below(1.0).unwrap();
        assert!((below - (1.0 - (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn ahlfors_ratio_is_constant_on_the_halfplane() {
        let m = make_halfplane(1.0).unwrap();
        let sweep = ps_sweep(&m, &origin(), 1.0, 64, &[0.25, 0.125]).unwrap();
        assert!(sweep.converged && sweep.lebesgue_deviation < 1e-9);
        let rep = ahlfors_check(&m, &sweep, &[1.0, 0.5, 0.25, 0.125], 10, 7).unwrap();
        assert!(rep.band < 1.0 + 1e-9, "{rep:?}");
        assert!((rep.ratio_min - 0.125f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn margulis_scaling_and_flip() {
        let m = make_halfplane(1.0).unwrap();
        let b = FlowBox { u_lo: vec![0.0], u_hi: vec![1.0], t_lo: 0.0, t_hi: 1.0 };
        let rep = margulis_checks(&m, &b, 1.0).unwrap();
        assert!((rep.mass - (1f64.exp() - 1.0)).abs() < 1e-8);
        assert!(rep.scaling_rel_error < 1e-8 && rep.flip_rel_error < 1e-6);
        let zero = margulis_checks(&m, &b, 0.0).unwrap();
        assert!(zero.scaling_rel_error < 1e-12);
    }

    #[test]
    fn cat_map_holonomy() {
        let s = make_suspension([[2, 1], [1, 1]]).unwrap();
        let u = CuBox { p_u: (0.0, 0.5), t: (0.0, 0.5), p_s: 0.0 };
        let rep = holonomy_invariance_check(&s, &u, 0.5, &[0.25], 200, 3).unwrap();
        assert!(rep.s_rel_error < 1e-2);
        assert!(rep.cs_rows.iter().all(|r| r.holds), "{:?}", rep.cs_rows);
    }
}
