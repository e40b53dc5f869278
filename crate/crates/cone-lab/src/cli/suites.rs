//! The `verify-all` battery: every invariant suite at desk scale, in
//! dependency order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::ops::{CriticalParams, DoublingParams, EntropyParams, HolonomyParams, LaplaceParams, MargulisParams, Op, OpOutcome, PsParams};
use super::CliError;
use crate::geometry::{self, halfplane, shooting};
use crate::gromov::{self, Sampler};
use crate::hamenstadt;
use crate::models::{BuiltModel, ConeModel, GridConfig, ModelKind, ModelSpec, Point};
use crate::uniformize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub suite: String,
    /// The inequality or identity the suite tests.
    pub statement: String,
    pub status: Status,
    pub detail: String,
}

impl SuiteRow {
    fn new(suite: &str, statement: &str, status: Status, detail: impl Into<String>) -> Self {
        Self { suite: suite.into(), statement: statement.into(), status, detail: detail.into() }
    }

    fn verdict(suite: &str, statement: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(suite, statement, if ok { Status::Pass } else { Status::Fail }, detail)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub rows: Vec<SuiteRow>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    /// Fixed-width text table.
    pub fn table(&self) -> String {
        let w0 = self.rows.iter().map(|r| r.suite.len()).max().unwrap_or(5).max(5);
        let w1 = self.rows.iter().map(|r| r.statement.chars().count()).max().unwrap_or(9).max(9);
        let mut out = format!("{:<w0$}  {:<w1$}  {:<6}  detail\n", "suite", "statement", "status");
        for r in &self.rows {
            let pad = w1 - r.statement.chars().count();
            out.push_str(&format!("{:<w0$}  {}{}  {:<6}  {}\n", r.suite, r.statement, " ".repeat(pad), r.status.to_string(), r.detail));
        }
        out
    }
}

const PAIRS: usize = 200;

fn sample_pair(rng: &mut ChaCha8Rng, dim: usize, same_leaf: bool) -> (Point, Point) {
    let draw = |rng: &mut ChaCha8Rng| Point::new((0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect(), rng.gen_range(-2.0..2.0));
    let x = draw(rng);
    let mut y = draw(rng);
    if same_leaf {
        y.t = x.t;
    }
    (x, y)
}

fn from_outcome(suite: &str, statement: &str, res: Result<OpOutcome, CliError>) -> Vec<SuiteRow> {
    match res {
        Ok(out) => {
            out.checks.iter().map(|c| SuiteRow::verdict(&format!("{suite}/{}", c.name), statement, c.passed, c.detail.clone())).collect()
        }
        Err(e) => vec![SuiteRow::new(suite, statement, Status::Fail, e.to_string())],
    }
}

fn convexity(model: &ConeModel, seed: u64) -> SuiteRow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut quad, mut sqrt, mut paths, mut errors) = (0, 0, 0, 0);
    let mut margin = f64::INFINITY;
    for _ in 0..24 {
        let (x, y) = sample_pair(&mut rng, model.dim_u, false);
        match geometry::geodesic_connect(model, &x, &y, 1e-9).and_then(|p| geometry::height_profile(&p, model.a, 1e-3)) {
            Ok(h) => {
                paths += 1;
                quad += h.quadratic_violations;
                sqrt += h.sqrt_violations;
                margin = margin.min(h.quadratic_margin);
            }
            Err(_) => errors += 1,
        }
    }
    SuiteRow::verdict(
        "convexity",
        "b'' >= a(1 - b'^2) - 1e-3",
        quad == 0 && errors == 0,
        format!("{paths} paths, margin {margin:.2e}, {errors} solver errors; sqrt form violated at {sqrt} samples"),
    )
}

fn hyperbolicity(model: &ConeModel, seed: u64) -> Vec<SuiteRow> {
    let rep = gromov::delta_estimate(model, &Sampler::for_model(model), 400, seed);
    let mut rows = vec![SuiteRow::verdict(
        "delta",
        "sup defect of (x|z) >= min((x|y),(y|z)) - delta",
        rep.delta_b.is_finite() && rep.delta_4pt.is_finite() && rep.relative_drift <= 0.1,
        format!("delta_b {:.4}, delta_4pt {:.4}, drift {:.3} over 4x samples", rep.delta_b, rep.delta_4pt, rep.relative_drift),
    )];
    let u = vec![0.3; model.dim_u];
    let p = |t: f64| Point::new(u.clone(), t);
    let collinear = (|| -> Result<f64, crate::geometry::GeometryError> {
        let (x, y, z) = (p(-1.0), p(0.5), p(2.0));
        let xy = gromov::gromov_product_b(model, &x, &y)?;
        let xz = gromov::gromov_product_b(model, &x, &z)?;
        let yz = gromov::gromov_product_b(model, &y, &z)?;
        Ok(gromov::triple_defect(xy, xz, yz))
    })();
    rows.push(match collinear {
        Ok(d) => SuiteRow::verdict("delta/flowline", "defect = 0 on one flowline", d.abs() <= 1e-9, format!("{d:.2e}")),
        Err(e) => SuiteRow::new("delta/flowline", "defect = 0 on one flowline", Status::Fail, e.to_string()),
    });
    rows
}

fn scaling_and_comparison(model: &ConeModel, seed: u64) -> Vec<SuiteRow> {
    let tol = hamenstadt::default_tol(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut fail_s) = (0.0f64, 0);
    let (mut holds, mut slack, mut fail_c) = (0, f64::INFINITY, 0);
    for _ in 0..PAIRS {
        let (x, y) = sample_pair(&mut rng, model.dim_u, true);
        let t = rng.gen_range(-2.0..2.0);
        match hamenstadt::scaling_check(model, &x, &y, t, tol) {
            Ok(r) => worst = worst.max(r),
            Err(_) => fail_s += 1,
        }
        match hamenstadt::comparison_check(model, &x, &y, tol) {
            Ok(c) => {
                holds += c.holds as usize;
                slack = slack.min(c.slack);
            }
            Err(_) => fail_c += 1,
        }
    }
    vec![
        SuiteRow::verdict(
            "scaling",
            "rho(f^t x, f^t y) = e^(at) rho(x, y)",
            worst <= 1e-5 && fail_s == 0,
            format!("worst rel {worst:.2e}, {fail_s} errors"),
        ),
        SuiteRow::verdict(
            "comparison",
            "min(d, d^(a/A)) <= rho <= max(d, d^(a/A))",
            holds == PAIRS,
            format!("{holds}/{PAIRS} inside, min slack {slack:.2e}, {fail_c} errors"),
        ),
    ]
}

fn uniform(model: &ConeModel, seed: u64) -> Vec<SuiteRow> {
    let base = if model.axis_rates().is_some() { Sampler::for_model(model) } else { Sampler::new(10.0, -4.0, 4.0) };
    let r1 = uniformize::uniform_estimate_sample(model, &base, PAIRS, seed);
    let r2 = uniformize::uniform_estimate_sample(model, &base.doubled(), PAIRS, seed);
    let drift = (r2.constant / r1.constant - 1.0).abs();
    let mut rows = vec![SuiteRow::verdict(
        "uniform",
        "d_b ~ e^(-a (x|y)_b) min(d, 1) with one constant C",
        r1.constant.is_finite() && r2.constant.is_finite() && drift < 0.25 && r1.failures + r2.failures == 0,
        format!("C {:.3} -> {:.3} under box doubling, drift {:.1}%", r1.constant, r2.constant, 100.0 * drift),
    )];
    if let (Some(a), 1) = (model.constant_rate(), model.dim_u) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut errors = 0;
        for _ in 0..PAIRS {
            let (x, y) = sample_pair(&mut rng, 1, false);
            let exact = halfplane::euclid_uy(a, &x, &y);
            match shooting::solve_conformal(model, a, &x, &y, 1e-10) {
                Ok(s) => worst = worst.max((s.length - exact).abs()),
                Err(_) => errors += 1,
            }
        }
        rows.push(SuiteRow::verdict(
            "uniform/oracle",
            "d_b = |(u, e^(-at)/a) - (u', e^(-at')/a)|",
            worst <= 1e-6 && errors == 0,
            format!("worst |conformal geodesic - Euclidean| {worst:.2e}, {errors} errors"),
        ));
    }
    rows
}

/// Runs the battery; models failing to build short-circuit the rest.
pub fn verify_all(spec: &ModelSpec, seed: u64) -> Summary {
    let mut rows = Vec::new();
    let built = spec.build().and_then(|b| b.cone().verify_rates(&GridConfig::default()).map(|r| (b, r)));
    let (built, (a, big_a)) = match built {
        Ok(b) => b,
        Err(e) => {
            rows.push(SuiteRow::new("models", "a <= d/dt log phi_i <= A", Status::Fail, e.to_string()));
            for s in [
                "convexity",
                "delta",
                "scaling",
                "comparison",
                "uniform",
                "entropy",
                "laplace_G",
                "crit",
                "ps",
                "margulis",
                "holonomy",
                "analysis",
            ] {
                rows.push(SuiteRow::new(s, "-", Status::Skip, "model suite failed"));
            }
            return Summary { rows };
        }
    };
    let model = built.cone();
    rows.push(SuiteRow::verdict(
        "models",
        "a <= d/dt log phi_i <= A",
        a > 0.0 && big_a >= a,
        format!("realized rates [{a:.5}, {big_a:.5}]"),
    ));
    rows.push(convexity(model, seed));
    rows.extend(hyperbolicity(model, seed));
    rows.extend(scaling_and_comparison(model, seed));
    rows.extend(uniform(model, seed));

    let run = |op: Op| op.run(&built, seed);
    let centers = if model.dim_u == 1 && model.axis_rates().is_none() { Some(vec![vec![0.0], vec![1.5]]) } else { None };
    let s_max = if model.axis_rates().is_none() { 12 } else { 8 };
    rows.extend(from_outcome("entropy", "V_s ~ e^(hs), h = lim log V_s / s", run(Op::EntropyEstimate(EntropyParams { s_max, centers }))));
    rows.extend(from_outcome("laplace_G", "G(h + v) ~ 1/v as v -> 0", run(Op::LaplaceG(LaplaceParams::default()))));
    rows.extend(from_outcome("crit", "mu_sigma(cone) / (e^(-sigma b) G(sigma)) bounded", run(Op::CritRatio(Default::default()))));
    rows.extend(from_outcome("ps", "e^(sigma l) mu_sigma / G -> mu, mass(B_r) ~ r^(h/a)", run(Op::PsRenormalize(PsParams::default()))));

    let homogeneous = model.axis_rates().is_some_and(|r| (r.iter().sum::<f64>() / model.a - model.dim_u as f64).abs() < 1e-9);
    if homogeneous {
        rows.extend(from_outcome("margulis", "m(f^t B) = e^(ht) m(B)", run(Op::MargulisChecks(MargulisParams::default()))));
    } else {
        rows.push(SuiteRow::new("margulis", "m(f^t B) = e^(ht) m(B)", Status::Skip, "leaf measure needs h/a = leaf dimension"));
    }
    if matches!(built, BuiltModel::Suspension(_)) {
        rows.extend(from_outcome(
            "holonomy",
            "m(h^s B) = m(B), m(h^cs B) within K_R^(+-(h/a+1))",
            run(Op::HolonomyInvarianceCheck(HolonomyParams::default())),
        ));
    } else {
        rows.push(SuiteRow::new("holonomy", "m(h^s B) = m(B)", Status::Skip, "needs a SuspensionCover model"));
    }
    if model.constant_rate().is_some() && model.dim_u == 1 && model.kind != ModelKind::SuspensionCover {
        let d = DoublingParams::default();
        rows.extend(from_outcome("doubling", "mu_sigma(2B) <= C mu_sigma(B), sigma > h", run(Op::DoublingCheck(d.clone()))));
        rows.extend(from_outcome("poincare", "avg|f - f_B| <= C r avg g_f over B", run(Op::PoincareCheck(d))));
        rows.extend(from_outcome(
            "critical",
            "mu_h(B(w, r) cut at T) unbounded in T",
            run(Op::CriticalFailureDemo(CriticalParams::default())),
        ));
    } else {
        rows.push(SuiteRow::new(
            "analysis",
            "doubling, Poincare, critical blow-up",
            Status::Skip,
            "needs a constant-rate model with 1-D leaves",
        ));
    }
    Summary { rows }
}

/// JSON form of the summary for the result store.
pub fn summary_json(spec: &ModelSpec, seed: u64, summary: &Summary) -> serde_json::Value {
    json!({ "model": spec, "seed": seed, "passed": summary.passed(), "rows": summary.rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broken_model_skips_everything_else() {
        let spec = ModelSpec { a: Some(2.0), ..ModelSpec::diagonal(&[1.0, 3.0]) };
        let s = verify_all(&spec, 0);
        assert_eq!(s.rows[0].status, Status::Fail);
        assert!(s.rows[1..].iter().all(|r| r.status == Status::Skip));
        assert!(!s.passed());
    }

    #[test]
    fn table_has_one_line_per_row() {
        let s = Summary { rows: vec![SuiteRow::verdict("x", "a = b", true, "ok")] };
        assert_eq!(s.table().lines().count(), 2);
    }
}
