//! Desk-scale checks of structural properties of process dimension:
//! additivity over distinct stationary components, lower semi-continuity along
//! convergent families, and the bound by the number of causal states.
//!
//! Every run produces an [`ExperimentReport`] whose verdict is decided by the
//! predicate recorded in the report. Rank ladders that do not settle give
//! [`Verdict::Inconclusive`] rather than a guess.

use std::time::Instant;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::causal::{
    causal_span_rank, enumerate_causal_states, statistical_complexity, topological_complexity,
};
use crate::dimension::{equivalent, process_dimension, DimensionReport};
use crate::error::{OomError, Result};
use crate::oom::{
    hmm_to_oom, max_cylinder_deviation, mixture_direct_sum, stationarity_check, validate_oom,
    OomModel, ProcessOracle, DEFAULT_NEG_TOL, DEFAULT_VALIDATION_DEPTH,
};
use crate::processes::{bernoulli, bernoulli_mixture, emitting_hmm, stationary_distribution};

/// Two stationary parts count as the same component when all cylinders up to
/// the sum of their dimensions agree within this tolerance.
pub const EQUIVALENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One row of measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub values: IndexMap<String, Value>,
}

impl Measurement {
    fn new(label: impl Into<String>) -> Self {
        Measurement {
            label: label.into(),
            values: IndexMap::new(),
        }
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    fn with_dimension(self, report: &DimensionReport) -> Self {
        self.with("dimension", json!(report.dimension))
            .with("stabilized", json!(report.stabilized))
            .with("rank_by_level", json!(report.rank_by_level))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub verdict: Verdict,
    /// The condition the verdict was decided by.
    pub predicate: String,
    pub measurements: Vec<Measurement>,
    pub tolerances: IndexMap<String, f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

impl ExperimentReport {
    pub fn without_runtime(mut self) -> Self {
        self.runtime_ms = None;
        self
    }

    /// Flat CSV: `label` followed by every value key in first-seen order.
    pub fn to_csv(&self) -> String {
        let mut keys: Vec<&str> = Vec::new();
        for m in &self.measurements {
            for k in m.values.keys() {
                if !keys.contains(&k.as_str()) {
                    keys.push(k);
                }
            }
        }
        let mut out = String::from("label");
        for k in &keys {
            out.push(',');
            out.push_str(&csv_field(k));
        }
        out.push('\n');
        for m in &self.measurements {
            out.push_str(&csv_field(&m.label));
            for k in &keys {
                out.push(',');
                if let Some(v) = m.values.get(*k) {
                    let text = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    out.push_str(&csv_field(&text));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn elapsed_ms(start: Instant) -> Option<f64> {
    Some(start.elapsed().as_secs_f64() * 1e3)
}

/// `max_{|w| ≤ max_len} |P(w) - Q(w)|`, a metric for convergence of all cylinders up to that length.
pub fn cylinder_distance<P, Q>(p: &P, q: &Q, max_len: usize) -> Result<f64>
where
    P: ProcessOracle + ?Sized,
    Q: ProcessOracle + ?Sized,
{
    max_cylinder_deviation(p, q, max_len)
}

/// Dimension of a mixture against the sum of the dimensions of its parts. The
/// parts must be stationary and pairwise inequivalent.
pub fn run_additivity(
    parts: &[(f64, OomModel)],
    max_level: usize,
    tol_rel: f64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    for (k, (_, m)) in parts.iter().enumerate() {
        let st = stationarity_check(m, max_level)?;
        if !st.stationary {
            return Err(OomError::Precondition(format!(
                "part {k} is not stationary (residual {:e})",
                st.max_residual
            )));
        }
    }
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let depth = parts[i].1.dim() + parts[j].1.dim();
            if equivalent(&parts[i].1, &parts[j].1, depth, EQUIVALENCE_TOL)? {
                return Err(OomError::Precondition(format!(
                    "parts {i} and {j} generate the same process; components must be distinct"
                )));
            }
        }
    }
    let mixture = mixture_direct_sum(parts)?;

    let mut measurements = Vec::new();
    let mut part_dims = Vec::new();
    for (k, (w, m)) in parts.iter().enumerate() {
        let report = process_dimension(m, max_level, tol_rel)?;
        part_dims.push(report.dimension.value());
        measurements.push(
            Measurement::new(format!("part {k}"))
                .with("weight", json!(w))
                .with_dimension(&report),
        );
    }
    let mix_report = process_dimension(&mixture, max_level, tol_rel)?;
    measurements.push(
        Measurement::new("mixture")
            .with("weight", json!(1.0))
            .with_dimension(&mix_report),
    );

    let verdict = match (
        mix_report.dimension.value(),
        part_dims.iter().copied().collect::<Option<Vec<usize>>>(),
    ) {
        (Some(total), Some(dims)) if total == dims.iter().sum::<usize>() => Verdict::Pass,
        (Some(_), Some(_)) => Verdict::Fail,
        _ => Verdict::Inconclusive,
    };
    Ok(ExperimentReport {
        name: "additivity".into(),
        verdict,
        predicate: "dim(mixture) == sum_k dim(part_k), all stabilized".into(),
        measurements,
        tolerances: IndexMap::from([
            ("tol_rel".to_string(), tol_rel),
            ("equivalence_tol".to_string(), EQUIVALENCE_TOL),
        ]),
        seed: 0,
        runtime_ms: elapsed_ms(start),
    })
}

/// Parametric families `t ↦ P_t` converging cylinderwise to `P_0` as `t → 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `(1 - t)·Bernoulli(base) + t·Bernoulli(other)`.
    MixtureWeight { base: f64, other: f64 },
    /// Two-state HMM whose states emit 1 with probabilities `center ± t`; the
    /// states become indistinguishable at `t = 0`.
    StateMerge {
        transition: Vec<Vec<f64>>,
        center: f64,
    },
    /// `½·Bernoulli(center - t) + ½·Bernoulli(center + t)`.
    CoalescingBernoulli { center: f64 },
    /// `Bernoulli(p)` for every `t`.
    Constant { p: f64 },
}

impl Family {
    pub fn generate(&self, t: f64) -> Result<OomModel> {
        match self {
            Family::MixtureWeight { base, other } => {
                if t == 0.0 {
                    bernoulli(*base)
                } else {
                    bernoulli_mixture(&[(1.0 - t, *base), (t, *other)])
                }
            }
            Family::StateMerge { transition, center } => {
                let n = transition.len();
                if n != 2 || transition.iter().any(|r| r.len() != 2) {
                    return Err(OomError::Shape {
                        field: "family.transition".into(),
                        expected: "2x2".into(),
                        found: format!("{n} rows"),
                    });
                }
                let a = DMatrix::from_fn(2, 2, |i, j| transition[i][j]);
                let e = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        1.0 - (center + t),
                        center + t,
                        1.0 - (center - t),
                        center - t,
                    ],
                );
                let init = stationary_distribution(&a)?;
                Ok(hmm_to_oom(&emitting_hmm(&a, &e, init)?))
            }
            Family::CoalescingBernoulli { center } => {
                bernoulli_mixture(&[(0.5, center - t), (0.5, center + t)])
            }
            Family::Constant { p } => bernoulli(*p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default)]
    pub description: String,
    /// Strictly decreasing positive parameters; the limit is `t = 0`.
    pub grid: Vec<f64>,
    pub family: Family,
}

/// Checks `dim(P_0) ≤ min_i dim(P_{t_i})` along the grid.
pub fn run_semicontinuity(
    spec: &FamilySpec,
    max_level: usize,
    tol_rel: f64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if spec.grid.is_empty() {
        return Err(OomError::Precondition("grid must not be empty".into()));
    }
    if spec.grid.iter().any(|&t| t.is_nan() || t <= 0.0)
        || spec.grid.windows(2).any(|w| w[0].is_nan() || w[0] <= w[1])
    {
        return Err(OomError::Precondition(
            "grid must be strictly decreasing and positive".into(),
        ));
    }
    let limit = spec.family.generate(0.0)?;
    let mut models = Vec::with_capacity(spec.grid.len());
    for &t in &spec.grid {
        let m = spec.family.generate(t)?;
        let v = validate_oom(&m, DEFAULT_VALIDATION_DEPTH, DEFAULT_NEG_TOL)?;
        if !v.passed {
            return Err(OomError::Precondition(format!(
                "family member at t = {t} is not a valid OOM"
            )));
        }
        models.push(m);
    }

    let mut measurements = Vec::new();
    let mut distances = Vec::new();
    let mut dims = Vec::new();
    for (&t, m) in spec.grid.iter().zip(&models) {
        let distance = cylinder_distance(m, &limit, max_level)?;
        let report = process_dimension(m, max_level, tol_rel)?;
        distances.push(distance);
        dims.push(report.dimension.value());
        measurements.push(
            Measurement::new(format!("t={t}"))
                .with("t", json!(t))
                .with("distance_to_limit", json!(distance))
                .with_dimension(&report),
        );
    }
    if distances.windows(2).any(|w| w[1] > w[0] + 1e-15) {
        return Err(OomError::Precondition(
            "cylinder distance to the limit does not decrease along the grid".into(),
        ));
    }
    let limit_report = process_dimension(&limit, max_level, tol_rel)?;
    measurements.push(
        Measurement::new("limit")
            .with("t", json!(0.0))
            .with("distance_to_limit", json!(0.0))
            .with_dimension(&limit_report),
    );

    let verdict = match (
        limit_report.dimension.value(),
        dims.iter().copied().collect::<Option<Vec<usize>>>(),
    ) {
        (Some(d0), Some(ds)) if ds.iter().all(|&d| d0 <= d) => Verdict::Pass,
        (Some(_), Some(_)) => Verdict::Fail,
        _ => Verdict::Inconclusive,
    };
    Ok(ExperimentReport {
        name: if spec.description.is_empty() {
            "semicontinuity".into()
        } else {
            format!("semicontinuity: {}", spec.description)
        },
        verdict,
        predicate: "dim(limit) <= min_t dim(P_t), all stabilized".into(),
        measurements,
        tolerances: IndexMap::from([("tol_rel".to_string(), tol_rel)]),
        seed: 0,
        runtime_ms: elapsed_ms(start),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundParams {
    pub past_len: usize,
    pub horizon: usize,
    pub max_level: usize,
    pub tol_rel: f64,
    pub cluster_tol: f64,
}

/// Checks `log₂ dim(P) ≤ log₂ #causal states` and records whether the span of the
/// predictive distributions has the same rank as the process dimension.
pub fn run_upperbound<P: ProcessOracle + ?Sized>(
    p: &P,
    params: &UpperBoundParams,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let st = stationarity_check(p, params.past_len + params.horizon)?;
    if !st.stationary {
        return Err(OomError::Precondition(format!(
            "process is not stationary (residual {:e})",
            st.max_residual
        )));
    }
    let dim_report = process_dimension(p, params.max_level, params.tol_rel)?;
    let partition =
        enumerate_causal_states(p, params.past_len, params.horizon, params.cluster_tol)?;
    let n_states = partition.len();
    let topo = topological_complexity(&partition)?;
    let span_rank = causal_span_rank(&partition, params.tol_rel);

    let mut row = Measurement::new("process")
        .with_dimension(&dim_report)
        .with("causal_states", json!(n_states))
        .with("topological_complexity_bits", json!(topo))
        .with(
            "statistical_complexity_bits",
            json!(statistical_complexity(&partition)),
        )
        .with("span_rank", json!(span_rank));
    let verdict = match dim_report.dimension.value() {
        Some(d) => {
            row = row
                .with("log2_dimension", json!((d as f64).log2()))
                .with("span_rank_equals_dimension", json!(span_rank == d));
            if d <= n_states {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        None => Verdict::Inconclusive,
    };
    Ok(ExperimentReport {
        name: "upperbound".into(),
        verdict,
        predicate: "log2(dim) <= log2(#causal states), dimension stabilized".into(),
        measurements: vec![row],
        tolerances: IndexMap::from([
            ("tol_rel".to_string(), params.tol_rel),
            ("cluster_tol".to_string(), params.cluster_tol),
        ]),
        seed: 0,
        runtime_ms: elapsed_ms(start),
    })
}

/// Uniform mixtures of the first `k` Bernoulli parameters for `k = 1..=n`;
/// passes when each has dimension exactly `k`.
pub fn run_growth(params: &[f64], tol_rel: f64) -> Result<ExperimentReport> {
    let start = Instant::now();
    if params.is_empty() {
        return Err(OomError::Precondition("need at least one parameter".into()));
    }
    for i in 0..params.len() {
        if params[..i].contains(&params[i]) {
            return Err(OomError::Precondition(format!(
                "parameter {} repeats; components must be distinct",
                params[i]
            )));
        }
    }
    let mut measurements = Vec::new();
    let mut verdict = Verdict::Pass;
    for k in 1..=params.len() {
        let parts: Vec<(f64, f64)> = params[..k].iter().map(|&p| (1.0 / k as f64, p)).collect();
        let m = bernoulli_mixture(&parts)?;
        let report = process_dimension(&m, k + 1, tol_rel)?;
        match report.dimension.value() {
            Some(d) if d == k => {}
            Some(_) => verdict = Verdict::Fail,
            None if verdict == Verdict::Pass => verdict = Verdict::Inconclusive,
            None => {}
        }
        measurements.push(
            Measurement::new(format!("k={k}"))
                .with("components", json!(k))
                .with_dimension(&report),
        );
    }
    Ok(ExperimentReport {
        name: "growth".into(),
        verdict,
        predicate: "dim(uniform mixture of k distinct Bernoullis) == k for every k".into(),
        measurements,
        tolerances: IndexMap::from([("tol_rel".to_string(), tol_rel)]),
        seed: 0,
        runtime_ms: elapsed_ms(start),
    })
}
