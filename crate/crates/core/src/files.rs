//! JSON model files and experiment specifications.
//!
//! Matrices are row-major lists of rows. Complex numbers are `[re, im]` pairs.
//! Unknown fields are rejected. Mixture parts and experiment inputs may refer to
//! other model files by path, resolved relative to the referring file.

use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraElement, CStarAlgebra, C64};
use crate::dimension::DEFAULT_TOL_REL;
use crate::error::OomError;
use crate::experiments::{
    run_additivity, run_growth, run_semicontinuity, run_upperbound, ExperimentReport, FamilySpec,
    UpperBoundParams,
};
use crate::ncoom::{
    embed_classical, nc_mixture_direct_sum, validate_ncoom, NcOomModel, NcValidationReport,
    DEFAULT_NC_DEPTH, DEFAULT_SAMPLES,
};
use crate::oom::{
    hmm_to_oom, mixture_direct_sum, validate_oom, HmmModel, OomModel, ValidationReport,
    DEFAULT_NEG_TOL, DEFAULT_VALIDATION_DEPTH,
};
use crate::word::Alphabet;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("invalid model: {0}")]
    Model(#[from] OomError),

    #[error("model failed validation: {0}")]
    Invalid(String),

    #[error("mixture references itself through {0}")]
    Cycle(PathBuf),
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> FileError {
    FileError::Schema {
        field: field.into(),
        message: message.into(),
    }
}

type Matrix = Vec<Vec<f64>>;
type ComplexPair = [f64; 2];
type ComplexMatrix = Vec<Vec<ComplexPair>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelFile {
    Oom(OomFile),
    Hmm(HmmFile),
    Ncoom(NcOomFile),
    Mixture(MixtureFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OomFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub alphabet: Vec<String>,
    pub dim: usize,
    pub operators: IndexMap<String, Matrix>,
    pub init: Vec<f64>,
    pub eval: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub alphabet: Vec<String>,
    pub n_states: usize,
    pub transition_emission: IndexMap<String, Matrix>,
    pub init: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcOomFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub algebra: AlgebraSpec,
    pub dim: usize,
    pub op_per_basis: Vec<ComplexMatrix>,
    pub init: Vec<ComplexPair>,
    pub eval: Vec<ComplexPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub parts: Vec<MixturePart>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixturePart {
    pub weight: f64,
    pub model: ModelRef,
}

/// A model given inline or as a path to another model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(String),
    Inline(Box<ModelFile>),
}

/// A loaded model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Oom(OomModel),
    Hmm(HmmModel),
    Nc(NcOomModel),
}

impl Model {
    /// The classical OOM, converting HMMs. `None` for NC-OOMs.
    pub fn to_oom(&self) -> Option<OomModel> {
        match self {
            Model::Oom(m) => Some(m.clone()),
            Model::Hmm(h) => Some(hmm_to_oom(h)),
            Model::Nc(_) => None,
        }
    }

    /// The NC-OOM, embedding classical models over `C(Δ)`.
    pub fn to_ncoom(&self) -> NcOomModel {
        match self {
            Model::Nc(m) => m.clone(),
            other => embed_classical(&other.to_oom().expect("classical model")),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Oom(_) => "oom",
            Model::Hmm(_) => "hmm",
            Model::Nc(_) => "ncoom",
        }
    }
}

/// Residual report for whichever kind of model was loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyValidation {
    Classical(ValidationReport),
    Nc(NcValidationReport),
}

impl AnyValidation {
    pub fn passed(&self) -> bool {
        match self {
            AnyValidation::Classical(r) => r.passed,
            AnyValidation::Nc(r) => r.passed,
        }
    }
}

/// Runs the default validation for a model.
pub fn validate_model(model: &Model) -> Result<AnyValidation, OomError> {
    Ok(match model {
        Model::Nc(m) => AnyValidation::Nc(validate_ncoom(m, DEFAULT_NC_DEPTH, DEFAULT_SAMPLES, 0)?),
        other => AnyValidation::Classical(validate_oom(
            &other.to_oom().expect("classical model"),
            DEFAULT_VALIDATION_DEPTH,
            DEFAULT_NEG_TOL,
        )?),
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_json(&text, path)
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T, FileError> {
    serde_json::from_str(text).map_err(|e| FileError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Reads and validates a model file; mixtures are resolved recursively.
pub fn parse_model_file(path: &Path) -> Result<Model, FileError> {
    let model = load_model_file(path)?;
    let report = validate_model(&model)?;
    if !report.passed() {
        return Err(FileError::Invalid(
            serde_json::to_string(&report).expect("report serializes"),
        ));
    }
    Ok(model)
}

/// Reads a model file without checking the model conditions (shapes are still checked).
pub fn load_model_file(path: &Path) -> Result<Model, FileError> {
    let file: ModelFile = read_json(path)?;
    let mut stack = vec![canonical(path)];
    file_to_model(&file, base_dir(path), &mut stack)
}

/// Parses model JSON held in memory; relative paths resolve against `base`.
pub fn model_from_str(text: &str, base: &Path) -> Result<Model, FileError> {
    let file: ModelFile = parse_json(text, Path::new("<input>"))?;
    file_to_model(&file, base, &mut Vec::new())
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or_else(|| Path::new("."))
}

fn canonical(path: &Path) -> PathBuf {
    fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

fn resolve_ref(r: &ModelRef, base: &Path, stack: &mut Vec<PathBuf>) -> Result<Model, FileError> {
    match r {
        ModelRef::Inline(file) => file_to_model(file, base, stack),
        ModelRef::Path(p) => {
            let path = base.join(p);
            let key = canonical(&path);
            if stack.contains(&key) {
                return Err(FileError::Cycle(path));
            }
            let file: ModelFile = read_json(&path)?;
            stack.push(key);
            let model = file_to_model(&file, base_dir(&path), stack);
            stack.pop();
            model
        }
    }
}

fn real_matrix(field: &str, rows: &Matrix, n: usize) -> Result<DMatrix<f64>, FileError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(schema(field, format!("expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn complex_matrix(field: &str, rows: &ComplexMatrix, n: usize) -> Result<DMatrix<C64>, FileError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(schema(field, format!("expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn real_vector(field: &str, v: &[f64], n: usize) -> Result<DVector<f64>, FileError> {
    if v.len() != n {
        return Err(schema(
            field,
            format!("expected length {n} (dim), got {}", v.len()),
        ));
    }
    Ok(DVector::from_column_slice(v))
}

fn complex_vector(field: &str, v: &[ComplexPair], n: usize) -> Result<DVector<C64>, FileError> {
    if v.len() != n {
        return Err(schema(
            field,
            format!("expected length {n} (dim), got {}", v.len()),
        ));
    }
    Ok(DVector::from_iterator(
        n,
        v.iter().map(|z| C64::new(z[0], z[1])),
    ))
}

/// Operators keyed by symbol, in alphabet order.
fn symbol_matrices(
    field: &str,
    alphabet: &Alphabet,
    map: &IndexMap<String, Matrix>,
    n: usize,
) -> Result<Vec<DMatrix<f64>>, FileError> {
    if let Some(extra) = map.keys().find(|k| alphabet.index_of(k).is_err()) {
        return Err(schema(
            format!("{field}.{extra}"),
            "symbol is not in the alphabet",
        ));
    }
    alphabet
        .symbols()
        .iter()
        .map(|s| {
            let name = format!("{field}.{s}");
            let rows = map.get(s).ok_or_else(|| schema(&name, "missing matrix"))?;
            real_matrix(&name, rows, n)
        })
        .collect()
}

fn alphabet_from(symbols: &[String]) -> Result<Alphabet, FileError> {
    Alphabet::new(symbols.iter().cloned()).map_err(|e| schema("alphabet", e.to_string()))
}

fn file_to_model(
    file: &ModelFile,
    base: &Path,
    stack: &mut Vec<PathBuf>,
) -> Result<Model, FileError> {
    match file {
        ModelFile::Oom(f) => {
            let alphabet = alphabet_from(&f.alphabet)?;
            if f.dim == 0 {
                return Err(schema("dim", "must be positive"));
            }
            let ops = symbol_matrices("operators", &alphabet, &f.operators, f.dim)?;
            let init = real_vector("init", &f.init, f.dim)?;
            let eval = real_vector("eval", &f.eval, f.dim)?;
            Ok(Model::Oom(OomModel::new(alphabet, ops, init, eval)?))
        }
        ModelFile::Hmm(f) => {
            let alphabet = alphabet_from(&f.alphabet)?;
            if f.n_states == 0 {
                return Err(schema("n_states", "must be positive"));
            }
            let ops = symbol_matrices(
                "transition_emission",
                &alphabet,
                &f.transition_emission,
                f.n_states,
            )?;
            let init = real_vector("init", &f.init, f.n_states)?;
            Ok(Model::Hmm(HmmModel::new(alphabet, ops, init)?))
        }
        ModelFile::Ncoom(f) => {
            let algebra = CStarAlgebra::new(f.algebra.blocks.clone())
                .map_err(|e| schema("algebra.blocks", e.to_string()))?;
            if f.dim == 0 {
                return Err(schema("dim", "must be positive"));
            }
            if f.op_per_basis.len() != algebra.total_dim() {
                return Err(schema(
                    "op_per_basis",
                    format!(
                        "expected {} operators (one per matrix unit), got {}",
                        algebra.total_dim(),
                        f.op_per_basis.len()
                    ),
                ));
            }
            let ops = f
                .op_per_basis
                .iter()
                .enumerate()
                .map(|(i, m)| complex_matrix(&format!("op_per_basis[{i}]"), m, f.dim))
                .collect::<Result<Vec<_>, _>>()?;
            let init = complex_vector("init", &f.init, f.dim)?;
            let eval = complex_vector("eval", &f.eval, f.dim)?;
            Ok(Model::Nc(NcOomModel::new(algebra, ops, init, eval)?))
        }
        ModelFile::Mixture(f) => {
            if f.parts.is_empty() {
                return Err(schema("parts", "mixture needs at least one part"));
            }
            let parts = f
                .parts
                .iter()
                .map(|p| resolve_ref(&p.model, base, stack).map(|m| (p.weight, m)))
                .collect::<Result<Vec<_>, _>>()?;
            if parts.iter().any(|(_, m)| matches!(m, Model::Nc(_))) {
                let nc: Vec<(f64, NcOomModel)> =
                    parts.iter().map(|(w, m)| (*w, m.to_ncoom())).collect();
                Ok(Model::Nc(nc_mixture_direct_sum(&nc)?))
            } else {
                let classical: Vec<(f64, OomModel)> = parts
                    .iter()
                    .map(|(w, m)| (*w, m.to_oom().expect("classical model")))
                    .collect();
                Ok(Model::Oom(mixture_direct_sum(&classical)?))
            }
        }
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Matrix {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn complex_rows(m: &DMatrix<C64>) -> ComplexMatrix {
    m.row_iter()
        .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

impl From<&OomModel> for OomFile {
    fn from(m: &OomModel) -> Self {
        OomFile {
            name: None,
            description: None,
            alphabet: m.alphabet().symbols().to_vec(),
            dim: m.dim(),
            operators: m
                .alphabet()
                .symbols()
                .iter()
                .cloned()
                .zip(m.operators().iter().map(matrix_rows))
                .collect(),
            init: m.init().iter().copied().collect(),
            eval: m.eval().iter().copied().collect(),
        }
    }
}

impl From<&HmmModel> for HmmFile {
    fn from(h: &HmmModel) -> Self {
        HmmFile {
            name: None,
            description: None,
            alphabet: h.alphabet().symbols().to_vec(),
            n_states: h.n_states(),
            transition_emission: h
                .alphabet()
                .symbols()
                .iter()
                .cloned()
                .zip(h.transition_emission().iter().map(matrix_rows))
                .collect(),
            init: h.init().iter().copied().collect(),
        }
    }
}

impl From<&NcOomModel> for NcOomFile {
    fn from(m: &NcOomModel) -> Self {
        NcOomFile {
            name: None,
            description: None,
            algebra: AlgebraSpec {
                blocks: m.algebra().block_dims().to_vec(),
            },
            dim: m.dim(),
            op_per_basis: m.op_per_basis().iter().map(complex_rows).collect(),
            init: m.init().iter().map(|z| [z.re, z.im]).collect(),
            eval: m.eval().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl From<&Model> for ModelFile {
    fn from(m: &Model) -> Self {
        match m {
            Model::Oom(m) => ModelFile::Oom(m.into()),
            Model::Hmm(h) => ModelFile::Hmm(h.into()),
            Model::Nc(m) => ModelFile::Ncoom(m.into()),
        }
    }
}

pub fn model_to_json(m: &Model) -> String {
    serde_json::to_string_pretty(&ModelFile::from(m)).expect("model serializes")
}

/// Reads an algebra element given as a list of row-major complex blocks.
pub fn element_from_json(
    algebra: &CStarAlgebra,
    value: &serde_json::Value,
) -> Result<AlgebraElement, FileError> {
    let blocks: Vec<ComplexMatrix> =
        serde_json::from_value(value.clone()).map_err(|e| schema("factors", e.to_string()))?;
    if blocks.len() != algebra.block_dims().len() {
        return Err(schema(
            "factors",
            format!(
                "expected {} blocks, got {}",
                algebra.block_dims().len(),
                blocks.len()
            ),
        ));
    }
    let blocks = blocks
        .iter()
        .zip(algebra.block_dims())
        .enumerate()
        .map(|(k, (b, &d))| complex_matrix(&format!("factors.blocks[{k}]"), b, d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(algebra.element(blocks)?)
}

fn default_tol_rel() -> f64 {
    DEFAULT_TOL_REL
}

fn default_cluster_tol() -> f64 {
    crate::causal::DEFAULT_CLUSTER_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentSpec {
    Additivity(AdditivitySpec),
    Semicontinuity(SemicontinuitySpec),
    Upperbound(UpperboundSpec),
    Growth(GrowthSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditivitySpec {
    #[serde(default)]
    pub name: Option<String>,
    pub parts: Vec<MixturePart>,
    pub max_level: usize,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemicontinuitySpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub family: FamilySpec,
    pub max_level: usize,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpperboundSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub model: ModelRef,
    pub past_len: usize,
    pub horizon: usize,
    pub max_level: usize,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub params: Vec<f64>,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
}

pub fn load_experiment_spec(path: &Path) -> Result<ExperimentSpec, FileError> {
    read_json(path)
}

fn classical(model: Model, what: &str) -> Result<OomModel, FileError> {
    let report = validate_model(&model)?;
    if !report.passed() {
        return Err(FileError::Invalid(format!(
            "{what}: {}",
            serde_json::to_string(&report).expect("report serializes")
        )));
    }
    model
        .to_oom()
        .ok_or_else(|| schema(what, "experiments need classical models"))
}

/// Loads the referenced models and runs the experiment. `seed` is recorded in the report.
pub fn run_experiment(
    spec: &ExperimentSpec,
    base: &Path,
    seed: u64,
) -> Result<ExperimentReport, FileError> {
    let mut stack = Vec::new();
    let (name, mut report) = match spec {
        ExperimentSpec::Additivity(s) => {
            let parts = s
                .parts
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let m = resolve_ref(&p.model, base, &mut stack)?;
                    Ok((p.weight, classical(m, &format!("parts[{k}]"))?))
                })
                .collect::<Result<Vec<_>, FileError>>()?;
            (
                s.name.clone(),
                run_additivity(&parts, s.max_level, s.tol_rel)?,
            )
        }
        ExperimentSpec::Semicontinuity(s) => (
            s.name.clone(),
            run_semicontinuity(&s.family, s.max_level, s.tol_rel)?,
        ),
        ExperimentSpec::Upperbound(s) => {
            let m = classical(resolve_ref(&s.model, base, &mut stack)?, "model")?;
            let params = UpperBoundParams {
                past_len: s.past_len,
                horizon: s.horizon,
                max_level: s.max_level,
                tol_rel: s.tol_rel,
                cluster_tol: s.cluster_tol,
            };
            (s.name.clone(), run_upperbound(&m, &params)?)
        }
        ExperimentSpec::Growth(s) => (s.name.clone(), run_growth(&s.params, s.tol_rel)?),
    };
    if let Some(name) = name {
        report.name = name;
    }
    report.seed = seed;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oom::ProcessOracle;
    use crate::processes::bernoulli;

    const BERNOULLI: &str = r#"{"type":"oom","alphabet":["0","1"],"dim":1,"operators":{"0":[[0.5]],"1":[[0.5]]},"init":[1.0],"eval":[1.0]}"#;

    #[test]
    fn parses_bernoulli() {
        let m = model_from_str(BERNOULLI, Path::new(".")).unwrap();
        let oom = m.to_oom().unwrap();
        assert_eq!(oom.dim(), 1);
        assert_eq!(oom.raw_probability(&[1, 0, 1]).unwrap(), 0.125);
    }

    #[test]
    fn init_length_is_named() {
        let bad = BERNOULLI.replace(r#""init":[1.0]"#, r#""init":[1.0,0.0]"#);
        let err = model_from_str(&bad, Path::new(".")).unwrap_err();
        assert!(
            matches!(err, FileError::Schema { ref field, .. } if field == "init"),
            "{err}"
        );
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = BERNOULLI.replace(r#""dim":1"#, r#""dim":1,"colour":"red""#);
        assert!(matches!(
            model_from_str(&bad, Path::new(".")),
            Err(FileError::Parse { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = model_from_str("{\n  \"type\": \"oom\",\n  oops", Path::new(".")).unwrap_err();
        match err {
            FileError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_operator_named() {
        let bad = BERNOULLI.replace(r#","1":[[0.5]]"#, "");
        let err = model_from_str(&bad, Path::new(".")).unwrap_err();
        assert!(matches!(err, FileError::Schema { ref field, .. } if field == "operators.1"));
    }

    #[test]
    fn inline_mixture() {
        let text = format!(
            r#"{{"type":"mixture","parts":[{{"weight":0.5,"model":{BERNOULLI}}},{{"weight":0.5,"model":{}}}]}}"#,
            BERNOULLI.replace("[[0.5]],\"1\":[[0.5]]", "[[0.1]],\"1\":[[0.9]]")
        );
        let m = model_from_str(&text, Path::new("."))
            .unwrap()
            .to_oom()
            .unwrap();
        assert_eq!(m.dim(), 2);
        assert!((m.raw_probability(&[1]).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let m =
            Model::Oom(crate::processes::bernoulli_mixture(&[(0.25, 0.1), (0.75, 0.6)]).unwrap());
        let back = model_from_str(&model_to_json(&m), Path::new(".")).unwrap();
        assert_eq!(back, m);
        let nc = Model::Nc(embed_classical(&bernoulli(0.3).unwrap()));
        let back = model_from_str(&model_to_json(&nc), Path::new(".")).unwrap();
        assert_eq!(back, nc);
    }

    #[test]
    fn experiment_spec_parses() {
        let text = r#"{"experiment":"semicontinuity","grid":[0.2,0.1],"family":{"kind":"constant","p":0.3},"max_level":2}"#;
        let spec: ExperimentSpec = serde_json::from_str(text).unwrap();
        let report = run_experiment(&spec, Path::new("."), 5).unwrap();
        assert_eq!(report.seed, 5);
        let bad = text.replace("\"max_level\"", "\"bogus\":1,\"max_level\"");
        assert!(serde_json::from_str::<ExperimentSpec>(&bad).is_err());
    }
}
