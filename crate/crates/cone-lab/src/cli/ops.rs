//! Named operations runnable from a configuration file.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{hex_digest, ExperimentConfig};
use super::store::{self, Check, Method, ResultRecord, Tagged};
use super::CliError;
use crate::analysis::{self, TEST_FUNCTIONS};
use crate::gromov::{self, Sampler};
use crate::hamenstadt;
use crate::measures::{self, CuBox, FlowBox, MeasureMethod};
use crate::models::{BuiltModel, ConeModel, Point, SuspensionModel};
use crate::uniformize::{self, ConeRegion};

fn offsets() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125]
}

fn heights() -> Vec<f64> {
    vec![-2.0, 0.0, 2.0]
}

fn ahlfors_radii() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparatedParams {
    pub u: Option<Vec<f64>>,
    pub t: f64,
    pub s: f64,
    pub l: f64,
}

impl Default for SeparatedParams {
    fn default() -> Self {
        Self { u: None, t: 0.0, s: 2.0, l: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyParams {
    pub s_max: usize,
    /// Leaf coordinates of the centers on the leaf `t = 0`.
    pub centers: Option<Vec<Vec<f64>>>,
}

impl Default for EntropyParams {
    fn default() -> Self {
        Self { s_max: 8, centers: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaplaceParams {
    /// `σ - h` values.
    pub offsets: Vec<f64>,
    pub s_max: f64,
}

impl Default for LaplaceParams {
    fn default() -> Self {
        Self { offsets: offsets(), s_max: 12.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CritParams {
    pub offsets: Vec<f64>,
    pub heights: Vec<f64>,
    pub s_max: f64,
    /// Largest admitted max/min ratio over the sweep.
    pub band: f64,
}

impl Default for CritParams {
    fn default() -> Self {
        Self { offsets: offsets(), heights: heights(), s_max: 12.0, band: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsParams {
    pub offsets: Vec<f64>,
    pub l: f64,
    /// Cells per axis of the leaf partition.
    pub cells: usize,
    pub radii: Vec<f64>,
    pub centers: usize,
}

impl Default for PsParams {
    fn default() -> Self {
        Self { offsets: offsets(), l: 1.0, cells: 256, radii: ahlfors_radii(), centers: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuSigmaParams {
    pub u: Option<Vec<f64>>,
    pub t: f64,
    pub radius: f64,
    pub sigma: f64,
    pub truncation: Option<f64>,
}

impl Default for MuSigmaParams {
    fn default() -> Self {
        Self { u: None, t: 0.0, radius: 1.0, sigma: 2.0, truncation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MargulisParams {
    pub boxes: usize,
    pub shifts: Vec<f64>,
}

impl Default for MargulisParams {
    fn default() -> Self {
        Self { boxes: 20, shifts: vec![0.5, 1.0, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolonomyParams {
    pub target_p_s: f64,
    pub radii: Vec<f64>,
    pub samples: usize,
}

impl Default for HolonomyParams {
    fn default() -> Self {
        Self { target_p_s: 0.5, radii: vec![0.5, 0.25, 0.125], samples: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleParams {
    pub n: usize,
}

impl Default for SampleParams {
    fn default() -> Self {
        Self { n: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoublingParams {
    pub offsets: Vec<f64>,
    pub n_balls: usize,
    pub radii: Vec<f64>,
}

impl Default for DoublingParams {
    fn default() -> Self {
        Self { offsets: vec![1.0, 0.5, 0.25], n_balls: 60, radii: vec![0.05, 0.2, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalParams {
    pub u: f64,
    pub r: f64,
    pub truncations: Vec<f64>,
}

impl Default for CriticalParams {
    fn default() -> Self {
        Self { u: 0.0, r: 0.5, truncations: vec![1.0, 2.0, 4.0, 8.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "params", rename_all = "snake_case")]
pub enum Op {
    SeparatedCount(SeparatedParams),
    EntropyEstimate(EntropyParams),
    #[serde(rename = "laplace_G", alias = "laplace_g")]
    LaplaceG(LaplaceParams),
    CritRatio(CritParams),
    PsRenormalize(PsParams),
    MuSigmaRegion(MuSigmaParams),
    MargulisChecks(MargulisParams),
    HolonomyInvarianceCheck(HolonomyParams),
    DeltaEstimate(SampleParams),
    UniformEstimate(SampleParams),
    HamenstadtScaling(SampleParams),
    DoublingCheck(DoublingParams),
    PoincareCheck(DoublingParams),
    CriticalFailureDemo(CriticalParams),
}

/// Result of one operation before it is wrapped into a record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpOutcome {
    pub report: Value,
    pub values: Vec<Tagged>,
    pub checks: Vec<Check>,
}

impl OpOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn method(m: MeasureMethod) -> Method {
    match m {
        MeasureMethod::ClosedForm => Method::ClosedForm,
        MeasureMethod::Quadrature => Method::Quadrature,
        MeasureMethod::MonteCarlo => Method::MonteCarlo,
    }
}

fn cone_only(built: &BuiltModel) -> &ConeModel {
    built.cone()
}

fn suspension(built: &BuiltModel) -> Result<&SuspensionModel, CliError> {
    match built {
        BuiltModel::Suspension(s) => Ok(s),
        BuiltModel::Cone(_) => Err(CliError::Config("this operation needs a SuspensionCover model".into())),
    }
}

fn apex(model: &ConeModel, u: &Option<Vec<f64>>, t: f64) -> Result<Point, CliError> {
    let u = u.clone().unwrap_or_else(|| vec![0.0; model.dim_u]);
    if u.len() != model.dim_u {
        return Err(CliError::Config(format!("point has {} coordinates, model has {}", u.len(), model.dim_u)));
    }
    Ok(Point::new(u, t))
}

/// Tolerance on `|h_est - h|`, wider for perturbed models.
pub fn entropy_tolerance(model: &ConeModel) -> f64 {
    if model.axis_rates().is_some() {
        0.05
    } else {
        0.1
    }
}

impl Op {
    pub fn from_parts(name: &str, params: &Value) -> Result<Self, CliError> {
        let params = if params.is_null() { json!({}) } else { params.clone() };
        serde_json::from_value(json!({ "op": name, "params": params })).map_err(|e| CliError::Config(format!("op {name}: {e}")))
    }

    pub fn name(&self) -> String {
        to_json(self)["op"].as_str().unwrap_or_default().to_string()
    }

    pub fn params_json(&self) -> Value {
        to_json(self)["params"].clone()
    }

    pub fn run(&self, built: &BuiltModel, seed: u64) -> Result<OpOutcome, CliError> {
        let model = cone_only(built);
        let h = model.entropy();
        match self {
            Op::SeparatedCount(p) => {
                let x = apex(model, &p.u, p.t)?;
                let net = measures::separated_count(model, &x, p.s, p.l)?;
                Ok(OpOutcome {
                    values: vec![Tagged::new("count", net.count as f64, Method::Count, Some(0.0))],
                    checks: vec![check("audit", net.audited || net.count > measures::POINT_CAP, format!("completion {}", net.completion))],
                    report: to_json(&net),
                })
            }
            Op::EntropyEstimate(p) => {
                let centers: Vec<Point> = match &p.centers {
                    Some(cs) => cs.iter().map(|u| apex(model, &Some(u.clone()), 0.0)).collect::<Result<_, _>>()?,
                    None => vec![Point::new(vec![0.0; model.dim_u], 0.0)],
                };
                let rep = measures::entropy_estimate(model, &centers, p.s_max)?;
                let tol = entropy_tolerance(model);
                Ok(OpOutcome {
                    values: vec![
                        Tagged::new("h_est", rep.h_est, Method::Sampled, Some(tol)),
                        Tagged::new("h", h, Method::ClosedForm, Some(0.0)),
                    ],
                    checks: vec![
                        check("entropy", (rep.h_est - h).abs() <= tol, format!("h_est {:.4} vs {h:.4}", rep.h_est)),
                        check(
                            "submultiplicative",
                            rep.submult.holds,
                            format!("worst {:.3} <= {}", rep.submult.worst_ratio, rep.submult.slack),
                        ),
                        check("fekete", rep.fekete_holds, format!("margin {:.4}", rep.fekete_margin)),
                    ],
                    report: to_json(&rep),
                })
            }
            Op::LaplaceG(p) => {
                let x = Point::new(vec![0.0; model.dim_u], 0.0);
                let gs: Vec<measures::GReport> =
                    p.offsets.iter().map(|v| measures::laplace_g(model, &x, h + v, p.s_max)).collect::<Result<_, _>>()?;
                let xs: Vec<f64> = p.offsets.iter().map(|v| (1.0 / v).ln()).collect();
                let ys: Vec<f64> = gs.iter().map(|g| g.value.ln()).collect();
                let slope = if gs.len() >= 2 { measures::fit_line(&xs, &ys).0 } else { f64::NAN };
                let mut values: Vec<Tagged> =
                    gs.iter().map(|g| Tagged::new(format!("G({})", g.sigma), g.value, Method::Quadrature, Some(g.abs_error))).collect();
                values.push(Tagged::new("slope", slope, Method::Sampled, None));
                Ok(OpOutcome {
                    values,
                    checks: vec![check("divergence rate", (slope - 1.0).abs() <= 0.1, format!("slope {slope:.4}"))],
                    report: json!({ "rows": gs, "slope": slope }),
                })
            }
            Op::CritRatio(p) => {
                let sweep = measures::crit_sweep(model, &vec![0.0; model.dim_u], &p.offsets, &p.heights, p.s_max)?;
                Ok(OpOutcome {
                    values: vec![
                        Tagged::new("c_min", sweep.c_min, Method::Quadrature, None),
                        Tagged::new("c_max", sweep.c_max, Method::Quadrature, None),
                    ],
                    checks: vec![check("band", sweep.spread <= p.band, format!("spread {:.4}", sweep.spread))],
                    report: to_json(&sweep),
                })
            }
            Op::PsRenormalize(p) => {
                let x = Point::new(vec![0.0; model.dim_u], 0.0);
                let cells = if model.dim_u == 1 { p.cells } else { p.cells.min(64) };
                let sweep = measures::ps_sweep(model, &x, p.l, cells, &p.offsets)?;
                let mut checks = vec![check("cauchy", sweep.converged, format!("{:.4} <= {}", sweep.cauchy, measures::CAUCHY_REL))];
                let dec = sweep.interior_decrease.iter().copied().fold(f64::INFINITY, f64::min);
                checks.push(check("interior decrease", dec >= 2.0, format!("min factor {dec:.3}")));
                let finest = sweep.measures.last().expect("non-empty sweep");
                let total_err = (finest.total - (finest.sigma * finest.l).exp()).abs();
                checks.push(check(
                    "total mass",
                    total_err <= 1e-6 * finest.total + finest.abs_error,
                    format!("|total - e^(sigma l)| = {total_err:.2e}"),
                ));
                let ahlfors = if sweep.converged { Some(measures::ahlfors_check(model, &sweep, &p.radii, p.centers, seed)?) } else { None };
                if let Some(a) = &ahlfors {
                    checks.push(check("ahlfors band", a.band <= 2.0, format!("band {:.4}, K {:.4}", a.band, a.k)));
                }
                Ok(OpOutcome {
                    values: vec![
                        Tagged::new("cauchy", sweep.cauchy, Method::Quadrature, Some(finest.abs_error)),
                        Tagged::new("lebesgue_deviation", sweep.lebesgue_deviation, Method::Quadrature, Some(finest.abs_error)),
                    ],
                    checks,
                    report: json!({
                        "cauchy": sweep.cauchy,
                        "interior_decrease": sweep.interior_decrease,
                        "lebesgue_deviation": sweep.lebesgue_deviation,
                        "interior": sweep.measures.iter().map(|m| json!({"sigma": m.sigma, "interior": m.interior, "total": m.total})).collect::<Vec<_>>(),
                        "ahlfors": ahlfors,
                    }),
                })
            }
            Op::MuSigmaRegion(p) => {
                let x = apex(model, &p.u, p.t)?;
                let region = ConeRegion { apex: x, radius: p.radius, t_min: 0.0, truncation: p.truncation };
                let m = measures::mu_sigma_region(model, &region, p.sigma)?;
                Ok(OpOutcome {
                    values: vec![Tagged::new("mass", m.value, method(m.method), Some(m.abs_error))],
                    checks: vec![check(
                        "finite",
                        m.value.is_finite() && m.abs_error.is_finite(),
                        format!("{} +- {:.1e}", m.value, m.abs_error),
                    )],
                    report: to_json(&m),
                })
            }
            Op::MargulisChecks(p) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut rows = Vec::new();
                let (mut worst_scale, mut worst_flip): (f64, f64) = (0.0, 0.0);
                for _ in 0..p.boxes {
                    let u_lo: Vec<f64> = (0..model.dim_u).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    let u_hi: Vec<f64> = u_lo.iter().map(|u| u + rng.gen_range(0.1..1.0)).collect();
                    let t_lo = rng.gen_range(-1.0..1.0);
                    let b = FlowBox { u_lo, u_hi, t_lo, t_hi: t_lo + rng.gen_range(0.1..1.0) };
                    for &s in &p.shifts {
                        let r = measures::margulis_checks(model, &b, s)?;
                        worst_scale = worst_scale.max(r.scaling_rel_error);
                        worst_flip = worst_flip.max(r.flip_rel_error);
                        rows.push(r);
                    }
                }
                Ok(OpOutcome {
                    values: vec![
                        Tagged::new("scaling_rel_error", worst_scale, Method::Quadrature, None),
                        Tagged::new("flip_rel_error", worst_flip, Method::Quadrature, None),
                    ],
                    checks: vec![
                        check("scaling", worst_scale <= 1e-3, format!("{worst_scale:.2e}")),
                        check("flip", worst_flip <= 1e-6, format!("{worst_flip:.2e}")),
                    ],
                    report: to_json(&rows),
                })
            }
            Op::HolonomyInvarianceCheck(p) => {
                let susp = suspension(built)?;
                let u = CuBox { p_u: (0.0, 0.5), t: (0.0, 0.5), p_s: 0.0 };
                let rep = measures::holonomy_invariance_check(susp, &u, p.target_p_s, &p.radii, p.samples, seed)?;
                let ks: Vec<f64> = rep.cs_rows.iter().map(|r| r.k_r).collect();
                let decreasing = ks.windows(2).all(|w| w[1] <= w[0]);
                Ok(OpOutcome {
                    values: vec![Tagged::new("s_rel_error", rep.s_rel_error, Method::Quadrature, None)],
                    checks: vec![
                        check("s-holonomy", rep.s_rel_error <= 1e-2, format!("{:.2e}", rep.s_rel_error)),
                        check("cs band", rep.cs_rows.iter().all(|r| r.holds), format!("{} radii", rep.cs_rows.len())),
                        check("K_R decreasing", decreasing, format!("{ks:?}")),
                    ],
                    report: to_json(&rep),
                })
            }
            Op::DeltaEstimate(p) => {
                let s = Sampler::for_model(model);
                let rep = gromov::delta_estimate(model, &s, p.n, seed);
                Ok(OpOutcome {
                    values: vec![
                        Tagged::new("delta_b", rep.delta_b, Method::Sampled, None),
                        Tagged::new("delta_4pt", rep.delta_4pt, Method::Sampled, None),
                    ],
                    checks: vec![check(
                        "finite",
                        rep.delta_b.is_finite() && rep.delta_4pt.is_finite(),
                        format!("{} failures", rep.failures),
                    )],
                    report: to_json(&rep),
                })
            }
            Op::UniformEstimate(p) => {
                let s = Sampler::for_model(model);
                let rep = uniformize::uniform_estimate_sample(model, &s, p.n, seed);
                Ok(OpOutcome {
                    values: vec![Tagged::new("constant", rep.constant, Method::Sampled, None)],
                    checks: vec![check("finite", rep.constant.is_finite(), format!("C {:.4}, {} failures", rep.constant, rep.failures))],
                    report: to_json(&rep),
                })
            }
            Op::HamenstadtScaling(p) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let tol = hamenstadt::default_tol(model);
                let mut worst: f64 = 0.0;
                for _ in 0..p.n {
                    let t0 = rng.gen_range(-2.0..2.0);
                    let x = Point::new((0..model.dim_u).map(|_| rng.gen_range(-1.0..1.0)).collect(), t0);
                    let y = Point::new((0..model.dim_u).map(|_| rng.gen_range(-1.0..1.0)).collect(), t0);
                    let t = rng.gen_range(-2.0..2.0);
                    worst = worst.max(hamenstadt::scaling_check(model, &x, &y, t, tol)?);
                }
                Ok(OpOutcome {
                    values: vec![Tagged::new("worst_rel", worst, Method::Sampled, None)],
                    checks: vec![check("scaling", worst <= 1e-5, format!("{worst:.2e}"))],
                    report: json!({ "worst_rel": worst, "samples": p.n }),
                })
            }
            Op::DoublingCheck(p) => {
                let reps: Vec<analysis::DoublingReport> = p
                    .offsets
                    .iter()
                    .map(|v| analysis::doubling_check(model, h + v, p.n_balls, &p.radii, seed))
                    .collect::<Result<_, _>>()?;
                let checks = reps
                    .iter()
                    .flat_map(|r| {
                        let boundary = r.center_classes[0].worst_ratio;
                        let within = r.uniform_bound.is_none_or(|b| r.worst_ratio <= b);
                        [
                            check(
                                &format!("sigma {:.4}", r.sigma),
                                r.worst_ratio.is_finite() && within,
                                format!(
                                    "worst {:.3}, centre-uniform bound {}, class spread {:.3}",
                                    r.worst_ratio,
                                    r.uniform_bound.map_or("n/a".to_string(), |b| format!("{b:.3}")),
                                    r.class_spread
                                ),
                            ),
                            check(
                                &format!("boundary {:.4}", r.sigma),
                                (boundary / r.boundary_exact - 1.0).abs() <= 1e-6,
                                format!("{boundary:.6} vs 2^(sigma/a) = {:.6}", r.boundary_exact),
                            ),
                        ]
                    })
                    .collect();
                Ok(OpOutcome {
                    values: reps
                        .iter()
                        .map(|r| Tagged::new(format!("worst({})", r.sigma), r.worst_ratio, Method::Quadrature, None))
                        .collect(),
                    checks,
                    report: to_json(&reps),
                })
            }
            Op::PoincareCheck(p) => {
                let reps: Vec<analysis::PoincareReport> = p
                    .offsets
                    .iter()
                    .map(|v| analysis::poincare_check(model, h + v, &TEST_FUNCTIONS, p.n_balls, &p.radii, seed))
                    .collect::<Result<_, _>>()?;
                let checks = reps
                    .iter()
                    .map(|r| {
                        check(
                            &format!("sigma {:.4}", r.sigma),
                            r.worst.is_finite() && r.worst > 0.0,
                            format!("worst {:.3}, excluded {}", r.worst, r.excluded),
                        )
                    })
                    .collect();
                Ok(OpOutcome {
                    values: reps.iter().map(|r| Tagged::new(format!("worst({})", r.sigma), r.worst, Method::Quadrature, None)).collect(),
                    checks,
                    report: json!(reps.iter().map(|r| json!({"sigma": r.sigma, "worst": r.worst, "class_worst": r.class_worst, "balls": r.balls, "excluded": r.excluded})).collect::<Vec<_>>()),
                })
            }
            Op::CriticalFailureDemo(p) => {
                let rep = analysis::critical_failure_demo(model, p.u, p.r, &p.truncations)?;
                let growing = rep.slopes.iter().all(|s| *s > 0.0) && rep.slopes.last().is_some_and(|s| *s >= 0.5 * rep.slopes[0]);
                Ok(OpOutcome {
                    values: rep
                        .rows
                        .iter()
                        .map(|r| Tagged::new(format!("mass(T={})", r.truncation), r.mass, Method::Quadrature, Some(r.abs_error)))
                        .collect(),
                    checks: vec![check("no plateau", growing, format!("slopes {:?}", rep.slopes))],
                    report: to_json(&rep),
                })
            }
        }
    }
}

/// Executes a configuration and appends its record to the store.
///
/// Returns the record; failed checks are reported through `record.passed`.
pub fn run(config: &ExperimentConfig, seed_override: Option<u64>) -> Result<ResultRecord, CliError> {
    let config = ExperimentConfig { seed: seed_override.unwrap_or(config.seed), ..config.clone() };
    let op = config.operation()?;
    let built = config.model.build()?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(config.workers).build().map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let started = Instant::now();
    let outcome = pool.install(|| op.run(&built, config.seed))?;
    let wall_time_s = started.elapsed().as_secs_f64();
    let mut record = ResultRecord {
        config_hash: config.hash()?,
        output_hash: String::new(),
        model: config.model.clone(),
        op: op.name(),
        params: op.params_json(),
        seed: config.seed,
        workers: config.workers,
        passed: outcome.passed(),
        checks: outcome.checks,
        values: outcome.values,
        report: outcome.report,
        wall_time_s,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    record.output_hash = output_hash(&record);
    store::append(&config.output, &record)?;
    Ok(record)
}

/// Hash over the deterministic part of a record.
pub fn output_hash(record: &ResultRecord) -> String {
    let body = json!({
        "config_hash": record.config_hash,
        "passed": record.passed,
        "checks": record.checks,
        "values": record.values,
        "report": record.report,
    });
    hex_digest(body.to_string().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let op = Op::from_parts("laplace_G", &Value::Null).unwrap();
        assert_eq!(op.name(), "laplace_G");
        assert_eq!(Op::from_parts("laplace_g", &json!({})).unwrap(), op);
        assert!(Op::from_parts("entropy_estimate", &json!({"s_max": 6})).is_ok());
        assert!(Op::from_parts("entropy_estimate", &json!({"bogus": 1})).is_err());
    }
}
