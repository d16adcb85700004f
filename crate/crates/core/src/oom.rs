//! Classical observable operator models.
//!
//! An OOM `(V, T, v, ℓ)` over an alphabet `Δ` generates the word probabilities
//! `P(d_1 … d_n) = ℓ(T_{d_n} ⋯ T_{d_1} v)`. Operators act on column vectors and the
//! first symbol of a word is applied first.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OomError, Result};
use crate::word::{count_words, words_up_to, Alphabet, Word};

/// Tolerance for the normalization and consistency conditions.
pub const CONDITION_TOL: f64 = 1e-12;
/// Word probabilities in `[-NEG_TOL, 0)` are numerical noise; below that the model is invalid.
pub const DEFAULT_NEG_TOL: f64 = 1e-10;
/// Default word length up to which nonnegativity is checked.
pub const DEFAULT_VALIDATION_DEPTH: usize = 8;
/// Residual below which a process counts as stationary.
pub const STATIONARITY_TOL: f64 = 1e-10;
/// Upper bound on the number of words visited by exhaustive checks.
pub const MAX_ENUMERATED_WORDS: u128 = 10_000_000;

/// Anything that assigns probabilities to cylinder sets `[w]`.
pub trait ProcessOracle: Sync {
    fn alphabet(&self) -> &Alphabet;

    /// Unclamped probability of the cylinder `[word]`.
    fn raw_probability(&self, word: &[usize]) -> Result<f64>;

    /// Matrix of unclamped `P(uw)` for `u` in `pasts` and `w` in `futures`.
    fn raw_hankel(&self, pasts: &[Word], futures: &[Word]) -> Result<DMatrix<f64>> {
        let rows: Vec<Vec<f64>> = pasts
            .par_iter()
            .map(|u| {
                futures
                    .iter()
                    .map(|w| {
                        let mut uw = u.clone();
                        uw.extend_from_slice(w);
                        self.raw_probability(&uw)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(pasts.len(), futures.len(), |i, j| {
            rows[i][j]
        }))
    }
}

/// Applies the negativity policy: values in `[-neg_tol, 0)` become 0, anything
/// lower is reported as an invalid model.
pub fn clamp_probability(word: &[usize], raw: f64, neg_tol: f64) -> Result<f64> {
    if raw < -neg_tol || raw.is_nan() {
        Err(OomError::NegativeProbability {
            word: word.to_vec(),
            value: raw,
            tol: neg_tol,
        })
    } else {
        Ok(raw.max(0.0))
    }
}

/// `P([w])` with the clamping policy applied.
pub fn word_probability<P: ProcessOracle + ?Sized>(
    p: &P,
    word: &[usize],
    neg_tol: f64,
) -> Result<f64> {
    p.alphabet().check_word(word)?;
    if word.is_empty() {
        return Ok(1.0);
    }
    clamp_probability(word, p.raw_probability(word)?, neg_tol)
}

/// `max_{|w| ≤ max_len} |P(w) - Q(w)|` over raw probabilities.
pub fn max_cylinder_deviation<P, Q>(p: &P, q: &Q, max_len: usize) -> Result<f64>
where
    P: ProcessOracle + ?Sized,
    Q: ProcessOracle + ?Sized,
{
    if p.alphabet() != q.alphabet() {
        return Err(OomError::AlphabetMismatch(format!(
            "{:?} vs {:?}",
            p.alphabet().symbols(),
            q.alphabet().symbols()
        )));
    }
    guard_enumeration(p.alphabet().len(), max_len)?;
    let mut worst: f64 = 0.0;
    for w in words_up_to(p.alphabet().len(), max_len) {
        let diff = (p.raw_probability(&w)? - q.raw_probability(&w)?).abs();
        worst = worst.max(diff);
    }
    Ok(worst)
}

fn guard_enumeration(n_symbols: usize, max_len: usize) -> Result<()> {
    let count = count_words(n_symbols, max_len);
    if count > MAX_ENUMERATED_WORDS {
        return Err(OomError::Resource {
            what: "word enumeration",
            requested: count,
            limit: MAX_ENUMERATED_WORDS,
        });
    }
    Ok(())
}

/// A finite-dimensional OOM with real scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct OomModel {
    alphabet: Alphabet,
    operators: Vec<DMatrix<f64>>,
    init: DVector<f64>,
    eval: DVector<f64>,
}

impl OomModel {
    /// Checks shapes only; use [`validate_oom`] for the model conditions.
    pub fn new(
        alphabet: Alphabet,
        operators: Vec<DMatrix<f64>>,
        init: DVector<f64>,
        eval: DVector<f64>,
    ) -> Result<Self> {
        let dim = init.len();
        if dim == 0 {
            return Err(OomError::Shape {
                field: "init".into(),
                expected: "positive length".into(),
                found: "0".into(),
            });
        }
        if operators.len() != alphabet.len() {
            return Err(OomError::Shape {
                field: "operators".into(),
                expected: format!("{} operators (one per symbol)", alphabet.len()),
                found: operators.len().to_string(),
            });
        }
        for (d, t) in operators.iter().enumerate() {
            if t.nrows() != dim || t.ncols() != dim {
                return Err(OomError::Shape {
                    field: format!("operators.{}", alphabet.symbol(d).unwrap_or("?")),
                    expected: format!("{dim}x{dim}"),
                    found: format!("{}x{}", t.nrows(), t.ncols()),
                });
            }
        }
        if eval.len() != dim {
            return Err(OomError::Shape {
                field: "eval".into(),
                expected: dim.to_string(),
                found: eval.len().to_string(),
            });
        }
        Ok(OomModel {
            alphabet,
            operators,
            init,
            eval,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.init.len()
    }

    pub fn operators(&self) -> &[DMatrix<f64>] {
        &self.operators
    }

    pub fn operator(&self, symbol: usize) -> &DMatrix<f64> {
        &self.operators[symbol]
    }

    pub fn init(&self) -> &DVector<f64> {
        &self.init
    }

    pub fn eval(&self) -> &DVector<f64> {
        &self.eval
    }

    /// `Σ_d T_d`.
    pub fn operator_sum(&self) -> DMatrix<f64> {
        self.operators
            .iter()
            .fold(DMatrix::zeros(self.dim(), self.dim()), |acc, t| acc + t)
    }

    /// `T_{w_n} ⋯ T_{w_1} x`.
    pub fn propagate(&self, x: &DVector<f64>, word: &[usize]) -> Result<DVector<f64>> {
        self.alphabet.check_word(word)?;
        Ok(word
            .iter()
            .fold(x.clone(), |acc, &d| &self.operators[d] * acc))
    }

    /// `ℓ T_{w_n} ⋯ T_{w_1}` as a column vector.
    pub fn covector_after(&self, word: &[usize]) -> Result<DVector<f64>> {
        self.alphabet.check_word(word)?;
        Ok(word
            .iter()
            .rev()
            .fold(self.eval.clone(), |acc, &d| self.operators[d].tr_mul(&acc)))
    }

    /// Applies the change of basis `x ↦ S x`. The generated process is unchanged.
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<OomModel> {
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| OomError::Validation("change of basis matrix is singular".into()))?;
        OomModel::new(
            self.alphabet.clone(),
            self.operators.iter().map(|t| s * t * &s_inv).collect(),
            s * &self.init,
            s_inv.tr_mul(&self.eval),
        )
    }
}

impl ProcessOracle for OomModel {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn raw_probability(&self, word: &[usize]) -> Result<f64> {
        Ok(self.eval.dot(&self.propagate(&self.init, word)?))
    }

    fn raw_hankel(&self, pasts: &[Word], futures: &[Word]) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        let mut states = DMatrix::zeros(dim, pasts.len());
        for (j, u) in pasts.iter().enumerate() {
            states.set_column(j, &self.propagate(&self.init, u)?);
        }
        let mut covectors = DMatrix::zeros(dim, futures.len());
        for (j, w) in futures.iter().enumerate() {
            covectors.set_column(j, &self.covector_after(w)?);
        }
        Ok(states.tr_mul(&covectors))
    }
}

/// Residuals of the three model conditions, the last one checked up to a finite depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `|ℓ(v) - 1|`
    pub normalization_residual: f64,
    /// `‖ℓ Σ_d T_d - ℓ‖_∞`
    pub consistency_residual: f64,
    /// Most negative word probability among words of length `1..=depth` (raw).
    pub min_word_probability: f64,
    pub min_word: Word,
    pub depth: usize,
    pub neg_tol: f64,
    pub passed: bool,
}

/// Checks the OOM conditions. Nonnegativity can only be checked on finitely many
/// words, so a pass is necessary but not sufficient for validity.
pub fn validate_oom(m: &OomModel, depth: usize, neg_tol: f64) -> Result<ValidationReport> {
    guard_enumeration(m.alphabet.len(), depth)?;
    let normalization_residual = (m.eval.dot(&m.init) - 1.0).abs();
    let consistency_residual = (m.operator_sum().tr_mul(&m.eval) - &m.eval).amax();

    let mut min_word_probability = f64::INFINITY;
    let mut min_word = Vec::new();
    let mut word = Vec::with_capacity(depth);
    min_probability_dfs(
        m,
        &m.init,
        depth,
        &mut word,
        &mut min_word_probability,
        &mut min_word,
    );
    if !min_word_probability.is_finite() {
        min_word_probability = m.eval.dot(&m.init);
    }

    let passed = normalization_residual <= CONDITION_TOL
        && consistency_residual <= CONDITION_TOL
        && min_word_probability >= -neg_tol;
    Ok(ValidationReport {
        normalization_residual,
        consistency_residual,
        min_word_probability,
        min_word,
        depth,
        neg_tol,
        passed,
    })
}

fn min_probability_dfs(
    m: &OomModel,
    state: &DVector<f64>,
    remaining: usize,
    word: &mut Word,
    best: &mut f64,
    best_word: &mut Word,
) {
    if remaining == 0 {
        return;
    }
    for (d, t) in m.operators.iter().enumerate() {
        let next = t * state;
        word.push(d);
        let p = m.eval.dot(&next);
        if p < *best {
            *best = p;
            best_word.clone_from(word);
        }
        min_probability_dfs(m, &next, remaining - 1, word, best, best_word);
        word.pop();
    }
}

/// A hidden Markov model with transition-emission matrices
/// `(M_d)_{ij} = P(next state j, output d | state i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    alphabet: Alphabet,
    transition_emission: Vec<DMatrix<f64>>,
    init: DVector<f64>,
}

impl HmmModel {
    pub fn new(
        alphabet: Alphabet,
        transition_emission: Vec<DMatrix<f64>>,
        init: DVector<f64>,
    ) -> Result<Self> {
        let n = init.len();
        if n == 0 {
            return Err(OomError::Shape {
                field: "init".into(),
                expected: "positive length".into(),
                found: "0".into(),
            });
        }
        if transition_emission.len() != alphabet.len() {
            return Err(OomError::Shape {
                field: "transition_emission".into(),
                expected: format!("{} matrices (one per symbol)", alphabet.len()),
                found: transition_emission.len().to_string(),
            });
        }
        for (d, m) in transition_emission.iter().enumerate() {
            let name = alphabet.symbol(d).unwrap_or("?");
            if m.nrows() != n || m.ncols() != n {
                return Err(OomError::Shape {
                    field: format!("transition_emission.{name}"),
                    expected: format!("{n}x{n}"),
                    found: format!("{}x{}", m.nrows(), m.ncols()),
                });
            }
            if m.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(OomError::Validation(format!(
                    "transition_emission.{name} has a negative or non-finite entry"
                )));
            }
        }
        if init.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(OomError::Validation(
                "init has a negative or non-finite entry".into(),
            ));
        }
        if (init.sum() - 1.0).abs() > CONDITION_TOL {
            return Err(OomError::Validation(format!(
                "init sums to {}, expected 1",
                init.sum()
            )));
        }
        let total = transition_emission
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, m| acc + m);
        for (i, row) in total.row_iter().enumerate() {
            if (row.sum() - 1.0).abs() > CONDITION_TOL {
                return Err(OomError::Validation(format!(
                    "row {i} of the summed transition matrix sums to {}, expected 1",
                    row.sum()
                )));
            }
        }
        Ok(HmmModel {
            alphabet,
            transition_emission,
            init,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_states(&self) -> usize {
        self.init.len()
    }

    pub fn transition_emission(&self) -> &[DMatrix<f64>] {
        &self.transition_emission
    }

    pub fn init(&self) -> &DVector<f64> {
        &self.init
    }

    /// Returns a copy with a different initial distribution.
    pub fn with_init(&self, init: DVector<f64>) -> Result<HmmModel> {
        HmmModel::new(
            self.alphabet.clone(),
            self.transition_emission.clone(),
            init,
        )
    }
}

impl ProcessOracle for HmmModel {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Forward recursion on row vectors.
    fn raw_probability(&self, word: &[usize]) -> Result<f64> {
        self.alphabet.check_word(word)?;
        let alpha = word.iter().fold(self.init.transpose(), |alpha, &d| {
            alpha * &self.transition_emission[d]
        });
        Ok(alpha.sum())
    }
}

/// The OOM induced by an HMM: `T_d = M_dᵀ`, `v = init`, `ℓ = (1, …, 1)`.
pub fn hmm_to_oom(h: &HmmModel) -> OomModel {
    let n = h.n_states();
    OomModel::new(
        h.alphabet.clone(),
        h.transition_emission
            .iter()
            .map(|m| m.transpose())
            .collect(),
        h.init.clone(),
        DVector::from_element(n, 1.0),
    )
    .expect("HMM shapes already checked")
}

/// Explicit table of cylinder probabilities for all words up to a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct TableProcess {
    alphabet: Alphabet,
    max_len: usize,
    table: BTreeMap<Word, f64>,
}

impl TableProcess {
    /// Every word of length `1..=max_len` must be present.
    pub fn new(alphabet: Alphabet, max_len: usize, table: BTreeMap<Word, f64>) -> Result<Self> {
        guard_enumeration(alphabet.len(), max_len)?;
        for w in words_up_to(alphabet.len(), max_len).into_iter().skip(1) {
            if !table.contains_key(&w) {
                return Err(OomError::Validation(format!(
                    "table is missing word `{}`",
                    alphabet.format_word(&w)
                )));
            }
        }
        Ok(TableProcess {
            alphabet,
            max_len,
            table,
        })
    }

    /// Tabulates another process.
    pub fn from_oracle<P: ProcessOracle + ?Sized>(p: &P, max_len: usize) -> Result<Self> {
        guard_enumeration(p.alphabet().len(), max_len)?;
        let table = words_up_to(p.alphabet().len(), max_len)
            .into_iter()
            .skip(1)
            .map(|w| p.raw_probability(&w).map(|x| (w, x)))
            .collect::<Result<_>>()?;
        Ok(TableProcess {
            alphabet: p.alphabet().clone(),
            max_len,
            table,
        })
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }
}

impl ProcessOracle for TableProcess {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn raw_probability(&self, word: &[usize]) -> Result<f64> {
        if word.is_empty() {
            return Ok(1.0);
        }
        self.table.get(word).copied().ok_or_else(|| {
            OomError::Precondition(format!(
                "word of length {} is beyond the table depth {}",
                word.len(),
                self.max_len
            ))
        })
    }
}

/// Checks that weights are positive and sum to one.
pub(crate) fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if w.is_nan() || w <= 0.0 {
            return Err(OomError::WeightSum { sum: f64::NAN });
        }
        sum += w;
    }
    if (sum - 1.0).abs() > CONDITION_TOL {
        return Err(OomError::WeightSum { sum });
    }
    Ok(())
}

/// Block-diagonal OOM generating `Σ_k ν_k P_k`.
pub fn mixture_direct_sum(parts: &[(f64, OomModel)]) -> Result<OomModel> {
    let (_, first) = parts
        .first()
        .ok_or_else(|| OomError::Validation("mixture needs at least one part".into()))?;
    check_weights(parts.iter().map(|(w, _)| *w))?;
    for (_, m) in parts {
        if m.alphabet != first.alphabet {
            return Err(OomError::AlphabetMismatch(format!(
                "{:?} vs {:?}",
                first.alphabet.symbols(),
                m.alphabet.symbols()
            )));
        }
    }
    let dim: usize = parts.iter().map(|(_, m)| m.dim()).sum();
    let mut operators = vec![DMatrix::zeros(dim, dim); first.alphabet.len()];
    let mut init = DVector::zeros(dim);
    let mut eval = DVector::zeros(dim);
    let mut offset = 0;
    for (weight, m) in parts {
        let n = m.dim();
        for (big, t) in operators.iter_mut().zip(&m.operators) {
            big.view_mut((offset, offset), (n, n)).copy_from(t);
        }
        init.rows_mut(offset, n).copy_from(&(&m.init * *weight));
        eval.rows_mut(offset, n).copy_from(&m.eval);
        offset += n;
    }
    OomModel::new(first.alphabet.clone(), operators, init, eval)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    /// `max_{|w| ≤ depth} |P(w) - Σ_d P(dw)|`
    pub max_residual: f64,
    pub worst_word: Word,
    pub depth: usize,
    pub stationary: bool,
}

/// Tests shift invariance on cylinders up to length `depth`.
pub fn stationarity_check<P: ProcessOracle + ?Sized>(
    p: &P,
    depth: usize,
) -> Result<StationarityReport> {
    let n = p.alphabet().len();
    guard_enumeration(n, depth + 1)?;
    let mut max_residual: f64 = 0.0;
    let mut worst_word = Vec::new();
    for w in words_up_to(n, depth) {
        let direct = if w.is_empty() {
            1.0
        } else {
            p.raw_probability(&w)?
        };
        let mut shifted = 0.0;
        for d in 0..n {
            let mut dw = Vec::with_capacity(w.len() + 1);
            dw.push(d);
            dw.extend_from_slice(&w);
            shifted += p.raw_probability(&dw)?;
        }
        let residual = (direct - shifted).abs();
        if residual > max_residual {
            max_residual = residual;
            worst_word = w;
        }
    }
    Ok(StationarityReport {
        max_residual,
        worst_word,
        depth,
        stationary: max_residual <= STATIONARITY_TOL,
    })
}

/// Draws a word of the given length using the sequential conditionals
/// `P(d | w) = P(wd) / P(w)`. Deterministic for a fixed seed.
pub fn sample_trajectory(m: &OomModel, length: usize, seed: u64, neg_tol: f64) -> Result<Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = m.init.clone();
    let mut word = Vec::with_capacity(length);
    let mut next_states = Vec::with_capacity(m.alphabet.len());
    let mut weights = Vec::with_capacity(m.alphabet.len());
    for _ in 0..length {
        next_states.clear();
        weights.clear();
        for (d, t) in m.operators.iter().enumerate() {
            let next = t * &state;
            let p = m.eval.dot(&next);
            if p < -neg_tol || p.is_nan() {
                word.push(d);
                return Err(OomError::NegativeProbability {
                    word,
                    value: p,
                    tol: neg_tol,
                });
            }
            weights.push(p.max(0.0));
            next_states.push(next);
        }
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(OomError::Validation(format!(
                "no continuation has positive probability after {} symbols",
                word.len()
            )));
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for (d, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = d;
                break;
            }
        }
        word.push(chosen);
        state = &next_states[chosen] / weights[chosen];
    }
    Ok(word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{bernoulli, cycle_hmm};

    #[test]
    fn bernoulli_validates() {
        let m = bernoulli(0.3).unwrap();
        let r = validate_oom(&m, 8, DEFAULT_NEG_TOL).unwrap();
        assert!(r.passed);
        assert_eq!(r.normalization_residual, 0.0);
        assert!(r.consistency_residual < 1e-16);
    }

    #[test]
    fn bad_evaluation_form_fails_normalization() {
        let m = bernoulli(0.5).unwrap();
        let bad = OomModel::new(
            m.alphabet().clone(),
            m.operators().to_vec(),
            m.init().clone(),
            DVector::from_element(1, 2.0),
        )
        .unwrap();
        let r = validate_oom(&bad, 4, DEFAULT_NEG_TOL).unwrap();
        assert!(!r.passed);
        assert_eq!(r.normalization_residual, 1.0);
    }

    #[test]
    fn scaled_operator_fails_consistency() {
        let h = HmmModel::new(
            Alphabet::numeric(2),
            vec![
                DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.1, 0.2]),
                DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.5, 0.2]),
            ],
            DVector::from_vec(vec![0.5, 0.5]),
        )
        .unwrap();
        let m = hmm_to_oom(&h);
        let mut ops = m.operators().to_vec();
        ops[1] *= 1.1;
        let bad = OomModel::new(
            m.alphabet().clone(),
            ops,
            m.init().clone(),
            m.eval().clone(),
        )
        .unwrap();
        let r = validate_oom(&bad, 4, DEFAULT_NEG_TOL).unwrap();
        // ℓ T_1 = column sums of M_1ᵀ = row sums of M_1 = (0.5, 0.7); scaled by 0.1 → 0.07
        assert!((r.consistency_residual - 0.07).abs() < 1e-12);
        assert!(!r.passed);
    }

    #[test]
    fn shape_errors() {
        let a = Alphabet::numeric(2);
        let err = OomModel::new(
            a.clone(),
            vec![DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)],
            DVector::zeros(1),
            DVector::zeros(2),
        )
        .unwrap_err();
        assert!(matches!(err, OomError::Shape { ref field, .. } if field == "eval"));
        assert!(OomModel::new(
            a,
            vec![DMatrix::zeros(1, 1)],
            DVector::zeros(1),
            DVector::zeros(1)
        )
        .is_err());
    }

    #[test]
    fn word_probability_examples() {
        let m = bernoulli(0.5).unwrap();
        assert_eq!(
            word_probability(&m, &[1, 0, 1], DEFAULT_NEG_TOL).unwrap(),
            0.125
        );
        assert_eq!(word_probability(&m, &[], DEFAULT_NEG_TOL).unwrap(), 1.0);
        assert!(matches!(
            word_probability(&m, &[2], DEFAULT_NEG_TOL),
            Err(OomError::SymbolIndex { .. })
        ));
    }

    #[test]
    fn clamping_policy() {
        assert_eq!(clamp_probability(&[0], -1e-12, 1e-10).unwrap(), 0.0);
        assert_eq!(clamp_probability(&[0], 0.25, 1e-10).unwrap(), 0.25);
        assert!(matches!(
            clamp_probability(&[0], -1e-3, 1e-10),
            Err(OomError::NegativeProbability { .. })
        ));
    }

    #[test]
    fn single_state_hmm() {
        let h = HmmModel::new(
            Alphabet::numeric(3),
            vec![
                DMatrix::from_element(1, 1, 0.2),
                DMatrix::from_element(1, 1, 0.5),
                DMatrix::from_element(1, 1, 0.3),
            ],
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let m = hmm_to_oom(&h);
        assert_eq!(m.dim(), 1);
        assert_eq!(m.operator(1)[(0, 0)], 0.5);
    }

    #[test]
    fn deterministic_cycle() {
        let h = cycle_hmm(&[0, 1], Alphabet::new(["A", "B"]).unwrap(), Some(0)).unwrap();
        let m = hmm_to_oom(&h);
        assert_eq!(m.raw_probability(&[0, 1, 0, 1]).unwrap(), 1.0);
        assert_eq!(m.raw_probability(&[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn invalid_hmm_rejected() {
        let err = HmmModel::new(
            Alphabet::numeric(1),
            vec![DMatrix::from_element(1, 1, 0.9)],
            DVector::from_element(1, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, OomError::Validation(_)));
    }

    #[test]
    fn mixture_examples() {
        let b = bernoulli(0.4).unwrap();
        let single = mixture_direct_sum(&[(1.0, b.clone())]).unwrap();
        assert_eq!(
            single.raw_probability(&[1, 1, 0]).unwrap(),
            b.raw_probability(&[1, 1, 0]).unwrap()
        );

        let mix = mixture_direct_sum(&[
            (0.5, bernoulli(0.2).unwrap()),
            (0.5, bernoulli(0.7).unwrap()),
        ])
        .unwrap();
        assert!((mix.raw_probability(&[1]).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(mix.dim(), 2);

        assert!(matches!(
            mixture_direct_sum(&[(0.5, b.clone()), (0.4, b.clone())]),
            Err(OomError::WeightSum { .. })
        ));
        let other = crate::processes::iid(&[0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(
            mixture_direct_sum(&[(0.5, b), (0.5, other)]),
            Err(OomError::AlphabetMismatch(_))
        ));
    }

    #[test]
    fn stationarity_examples() {
        let r = stationarity_check(&bernoulli(0.3).unwrap(), 4).unwrap();
        assert!(r.stationary);
        assert!(r.max_residual < 1e-15);

        let alphabet = Alphabet::new(["A", "B"]).unwrap();
        let fixed = hmm_to_oom(&cycle_hmm(&[0, 1], alphabet.clone(), Some(0)).unwrap());
        let r = stationarity_check(&fixed, 3).unwrap();
        assert!(!r.stationary);
        // P(A) = 1 while Σ_d P(dA) = P(BA) = 0
        assert_eq!(r.max_residual, 1.0);

        let uniform = hmm_to_oom(&cycle_hmm(&[0, 1], alphabet, None).unwrap());
        assert!(stationarity_check(&uniform, 4).unwrap().stationary);
    }

    #[test]
    fn sampling_degenerate_and_deterministic() {
        let m = bernoulli(1.0).unwrap();
        assert_eq!(
            sample_trajectory(&m, 5, 7, DEFAULT_NEG_TOL).unwrap(),
            vec![1; 5]
        );

        let fair = bernoulli(0.5).unwrap();
        let a = sample_trajectory(&fair, 200, 42, DEFAULT_NEG_TOL).unwrap();
        let b = sample_trajectory(&fair, 200, 42, DEFAULT_NEG_TOL).unwrap();
        assert_eq!(a, b);
        assert_ne!(
            a,
            sample_trajectory(&fair, 200, 43, DEFAULT_NEG_TOL).unwrap()
        );
    }

    #[test]
    fn sampling_frequency_within_three_sigma() {
        let n = 100_000;
        let w = sample_trajectory(&bernoulli(0.5).unwrap(), n, 0, DEFAULT_NEG_TOL).unwrap();
        let ones = w.iter().filter(|&&d| d == 1).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 * 0.5).abs() <= 3.0 * sigma);
    }

    #[test]
    fn sampling_rejects_negative_conditionals() {
        let bad = OomModel::new(
            Alphabet::numeric(2),
            vec![
                DMatrix::from_element(1, 1, 1.5),
                DMatrix::from_element(1, 1, -0.5),
            ],
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        assert!(matches!(
            sample_trajectory(&bad, 3, 0, DEFAULT_NEG_TOL),
            Err(OomError::NegativeProbability { .. })
        ));
    }

    #[test]
    fn table_process_matches_source() {
        let m = bernoulli(0.3).unwrap();
        let t = TableProcess::from_oracle(&m, 3).unwrap();
        assert_eq!(
            t.raw_probability(&[1, 0]).unwrap(),
            m.raw_probability(&[1, 0]).unwrap()
        );
        assert!(t.raw_probability(&[1, 0, 1, 1]).is_err());
        assert_eq!(max_cylinder_deviation(&m, &t, 3).unwrap(), 0.0);
    }

    #[test]
    fn factorized_hankel_matches_generic() {
        let m = crate::processes::bernoulli_mixture(&[(0.3, 0.2), (0.7, 0.9)]).unwrap();
        let words = words_up_to(2, 2);
        let fast = m.raw_hankel(&words, &words).unwrap();
        let table = TableProcess::from_oracle(&m, 4).unwrap();
        let slow = table.raw_hankel(&words, &words).unwrap();
        assert!((fast - slow).amax() < 1e-15);
    }
}
