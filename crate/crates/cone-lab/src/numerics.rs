//! Quadrature, ODE integration, root finding and small dense linear algebra.

use std::sync::OnceLock;

/// Result of a one-dimensional quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub abs_error: f64,
    pub evals: usize,
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 16-point rule.
    pub fn g16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    /// Shared 32-point rule.
    pub fn g32() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(32))
    }

    /// Composite rule over `panels` equal panels of [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * acc;
        }
        total
    }

    /// Composite rule with an error estimate from panel doubling.
    pub fn integrate_checked<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> Quad {
        let coarse = self.integrate(&mut f, a, b, panels);
        let fine = self.integrate(&mut f, a, b, 2 * panels);
        Quad { value: fine, abs_error: (fine - coarse).abs(), evals: 3 * panels * self.nodes.len() }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Quad {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    let mut err = 0.0;
    let value = simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, max_depth, &mut evals, &mut err);
    Quad { value, abs_error: err, evals }
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals, err)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals, err)
}

/// Root of a function with a sign change on [lo, hi] (Brent's method).
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Option<(f64, usize)> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some((a, 0));
    }
    if fb == 0.0 {
        return Some((b, 0));
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some((b, iter));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Some((b, max_iter))
}

/// Expands `[lo, hi]` geometrically until `f` changes sign, returning the bracket.
pub fn expand_bracket<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, max_expand: usize) -> Option<(f64, f64)> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    for _ in 0..max_expand {
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Some((lo, hi));
        }
        let w = hi - lo;
        if flo.abs() < fhi.abs() {
            lo -= w;
            flo = f(lo);
        } else {
            hi += w;
            fhi = f(hi);
        }
    }
    None
}

/// Options for [`dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub s_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-12, h0: 1e-3, h_max: 0.25, s_max: 1e3, max_steps: 200_000 }
    }
}

/// Why an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeStop {
    Event,
    Abort,
    Horizon,
    MaxSteps,
    StepUnderflow,
}

#[derive(Debug, Clone)]
struct DenseStep<const N: usize> {
    s0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, s: f64) -> [f64; N] {
        let th = ((s - self.s0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for (i, yi) in y.iter_mut().enumerate() {
            let r = &self.r;
            *yi = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// Solution of a Dormand-Prince integration with dense output.
#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    steps: Vec<DenseStep<N>>,
    pub s0: f64,
    pub y0: [f64; N],
    pub s_end: f64,
    pub y_end: [f64; N],
    pub stop: OdeStop,
    pub n_steps: usize,
}

impl<const N: usize> OdeSolution<N> {
    /// Dense-output state at `s` in `[s0, s_end]`.
    pub fn eval(&self, s: f64) -> [f64; N] {
        if s <= self.s0 || self.steps.is_empty() {
            return self.y0;
        }
        if s >= self.s_end {
            return self.y_end;
        }
        let idx = self.steps.partition_point(|st| st.s0 + st.h < s);
        let idx = idx.min(self.steps.len() - 1);
        self.steps[idx].eval(s)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Dormand-Prince 5(4) integrator with dense output, event location and abort predicate.
///
/// Integration stops when `event` changes sign (the crossing is located on the
/// dense output), when `abort` returns true at a step end, or at `opts.s_max`.
pub fn dopri5<const N: usize, F, G, A>(mut f: F, s0: f64, y0: [f64; N], opts: &OdeOptions, mut event: G, mut abort: A) -> OdeSolution<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    G: FnMut(f64, &[f64; N]) -> f64,
    A: FnMut(f64, &[f64; N]) -> bool,
{
    let mut steps: Vec<DenseStep<N>> = Vec::new();
    let mut s = s0;
    let mut y = y0;
    let mut k1 = f(s, &y);
    let mut h = opts.h0.min(opts.h_max);
    let mut g_prev = event(s, &y);
    let mut n_steps = 0;
    let finish = |steps: Vec<DenseStep<N>>, s_end: f64, y_end: [f64; N], stop: OdeStop, n: usize| OdeSolution {
        steps,
        s0,
        y0,
        s_end,
        y_end,
        stop,
        n_steps: n,
    };
    loop {
        if n_steps >= opts.max_steps {
            return finish(steps, s, y, OdeStop::MaxSteps, n_steps);
        }
        if s >= opts.s_max {
            return finish(steps, s, y, OdeStop::Horizon, n_steps);
        }
        if s + h > opts.s_max {
            h = opts.s_max - s;
        }
        if h < 1e-14 * (1.0 + s.abs()) {
            return finish(steps, s, y, OdeStop::StepUnderflow, n_steps);
        }
        let k2 = f(s + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(s + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(s + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(s + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(s + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(s + h, &y1);
        let mut err = 0.0;
        let mut finite = true;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
            finite &= y1[i].is_finite();
        }
        let err = if finite { (err / N as f64).sqrt() } else { f64::INFINITY };
        if err <= 1.0 {
            n_steps += 1;
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - h * k7[i] - bspl;
                r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep { s0: s, h, r };
            let g_new = event(s + h, &y1);
            if g_prev.signum() != g_new.signum() && g_prev != 0.0 {
                let (mut lo, mut hi) = (s, s + h);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let gm = event(mid, &step.eval(mid));
                    if gm.signum() == g_prev.signum() && gm != 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let s_hit = 0.5 * (lo + hi);
                let y_hit = step.eval(s_hit);
                steps.push(step);
                return finish(steps, s_hit, y_hit, OdeStop::Event, n_steps);
            }
            steps.push(step);
            s += h;
            y = y1;
            k1 = k7;
            g_prev = g_new;
            if abort(s, &y) {
                return finish(steps, s, y, OdeStop::Abort, n_steps);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.h_max);
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
        }
    }
}

/// Dense row-major square matrix helpers for small dimensions.
pub mod linalg {
    pub type Mat = Vec<Vec<f64>>;

    pub fn identity(n: usize) -> Mat {
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    }

    pub fn matmul(a: &Mat, b: &Mat) -> Mat {
        let n = a.len();
        let m = b[0].len();
        let k = b.len();
        (0..n).map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect()).collect()
    }

    pub fn matvec(a: &Mat, v: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
    }

    pub fn transpose(a: &Mat) -> Mat {
        let n = a.len();
        let m = a[0].len();
        (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
    }

    pub fn scale(a: &Mat, c: f64) -> Mat {
        a.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
    }

    pub fn add(a: &Mat, b: &Mat) -> Mat {
        a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
    }

    fn norm1(a: &Mat) -> f64 {
        (0..a[0].len()).map(|j| a.iter().map(|r| r[j].abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Matrix exponential by scaling and squaring with a Taylor core.
    pub fn expm(a: &Mat) -> Mat {
        let n = a.len();
        let nrm = norm1(a);
        let sq = if nrm > 0.5 { (nrm / 0.5).log2().ceil() as u32 } else { 0 };
        let b = scale(a, 0.5f64.powi(sq as i32));
        let mut term = identity(n);
        let mut sum = identity(n);
        for k in 1..=20 {
            term = scale(&matmul(&term, &b), 1.0 / k as f64);
            sum = add(&sum, &term);
        }
        for _ in 0..sq {
            sum = matmul(&sum, &sum);
        }
        sum
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns (eigenvalues ascending, eigenvectors as columns).
    #[allow(clippy::needless_range_loop)]
    pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
        let n = a.len();
        let mut m = a.clone();
        let mut v = identity(n);
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if m[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[k][p];
                        let mkq = m[k][q];
                        m[k][p] = c * mkp - s * mkq;
                        m[k][q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p][k];
                        let mqk = m[q][k];
                        m[p][k] = c * mpk - s * mqk;
                        m[q][k] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[k][p];
                        let vkq = v[k][q];
                        v[k][p] = c * vkp - s * vkq;
                        v[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
        let vals = idx.iter().map(|&i| m[i][i]).collect();
        let vecs = (0..n).map(|r| idx.iter().map(|&c| v[r][c]).collect()).collect();
        (vals, vecs)
    }

    /// Cholesky factor L with A = L Lᵀ, or None if A is not positive definite.
    pub fn cholesky(a: &Mat) -> Option<Mat> {
        let n = a.len();
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    let d = a[i][i] - s;
                    if d <= 0.0 {
                        return None;
                    }
                    l[i][j] = d.sqrt();
                } else {
                    l[i][j] = (a[i][j] - s) / l[j][j];
                }
            }
        }
        Some(l)
    }

    /// Inverse of a lower-triangular matrix.
    #[allow(clippy::needless_range_loop)]
    pub fn lower_inverse(l: &Mat) -> Mat {
        let n = l.len();
        let mut inv = vec![vec![0.0; n]; n];
        for i in 0..n {
            inv[i][i] = 1.0 / l[i][i];
            for j in 0..i {
                let s: f64 = (j..i).map(|k| l[i][k] * inv[k][j]).sum();
                inv[i][j] = -s / l[i][i];
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let g = GaussLegendre::new(8);
        let v = g.integrate(|x| x.powi(15) + 3.0 * x * x, -1.0, 1.0, 1);
        assert!((v - 2.0).abs() < 1e-14);
        let v = g.integrate(f64::exp, 0.0, 1.0, 4);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_smooth_integrand() {
        let q = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 40);
        assert!((q.value - 2.0).abs() < 1e-10);
        assert!(q.abs_error < 1e-9);
    }

    #[test]
    fn brent_finds_cube_root() {
        let (r, _) = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50).is_none());
    }

    #[test]
    fn dopri_harmonic_oscillator_and_event() {
        let opts = OdeOptions { s_max: 10.0, ..Default::default() };
        let sol = dopri5(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], &opts, |_, y| y[0] - 0.5, |_, _| false);
        assert_eq!(sol.stop, OdeStop::Event);
        assert!((sol.s_end - 0.5f64.asin()).abs() < 1e-9);
        let mid = sol.eval(0.3);
        assert!((mid[0] - 0.3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn expm_and_eigen() {
        let a = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
        let e = linalg::expm(&a);
        assert!((e[0][0] - 1f64.cos()).abs() < 1e-13);
        assert!((e[0][1] - 1f64.sin()).abs() < 1e-13);
        let s = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (vals, _) = linalg::sym_eigen(&s);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
    }
}
