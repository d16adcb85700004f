//! Constructors for common processes: i.i.d. sources, Markov chains, periodic
//! sequences, emitting HMMs and Bernoulli mixtures.

use nalgebra::{DMatrix, DVector};

use crate::error::{OomError, Result};
use crate::oom::{hmm_to_oom, mixture_direct_sum, HmmModel, OomModel};
use crate::word::Alphabet;

/// One-dimensional OOM of an i.i.d. process with the given symbol distribution.
pub fn iid(probs: &[f64]) -> Result<OomModel> {
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(OomError::Validation(
            "symbol probabilities must lie in [0, 1]".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(OomError::Validation(format!(
            "symbol probabilities sum to {total}"
        )));
    }
    OomModel::new(
        Alphabet::numeric(probs.len()),
        probs
            .iter()
            .map(|&p| DMatrix::from_element(1, 1, p))
            .collect(),
        DVector::from_element(1, 1.0),
        DVector::from_element(1, 1.0),
    )
}

/// Bernoulli process over `{0, 1}` with `P(1) = p`.
pub fn bernoulli(p: f64) -> Result<OomModel> {
    iid(&[1.0 - p, p])
}

/// Direct-sum mixture of Bernoulli processes given as `(weight, p)` pairs.
pub fn bernoulli_mixture(parts: &[(f64, f64)]) -> Result<OomModel> {
    let parts = parts
        .iter()
        .map(|&(w, p)| bernoulli(p).map(|m| (w, m)))
        .collect::<Result<Vec<_>>>()?;
    mixture_direct_sum(&parts)
}

/// Stationary distribution `π = π A` of a row-stochastic matrix, assuming it is unique.
pub fn stationary_distribution(transition: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = transition.nrows();
    let mut system = transition.transpose() - DMatrix::identity(n, n);
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    system.lu().solve(&rhs).ok_or_else(|| {
        OomError::Validation("transition matrix has no unique stationary distribution".into())
    })
}

/// Markov chain whose output is the current state, started in its stationary distribution.
pub fn markov_chain(transition: &DMatrix<f64>) -> Result<HmmModel> {
    let n = transition.nrows();
    if transition.ncols() != n {
        return Err(OomError::Shape {
            field: "transition".into(),
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", n, transition.ncols()),
        });
    }
    let init = stationary_distribution(transition)?;
    let emissions = DMatrix::identity(n, n);
    emitting_hmm(transition, &emissions, init)
}

/// HMM where state `i` emits symbol `d` with probability `emissions[(i, d)]` and
/// then moves according to `transition`: `(M_d)_{ij} = A_{ij} B_{id}`.
pub fn emitting_hmm(
    transition: &DMatrix<f64>,
    emissions: &DMatrix<f64>,
    init: DVector<f64>,
) -> Result<HmmModel> {
    let n = transition.nrows();
    if emissions.nrows() != n {
        return Err(OomError::Shape {
            field: "emissions".into(),
            expected: format!("{n} rows"),
            found: emissions.nrows().to_string(),
        });
    }
    let matrices = (0..emissions.ncols())
        .map(|d| DMatrix::from_fn(n, n, |i, j| transition[(i, j)] * emissions[(i, d)]))
        .collect();
    HmmModel::new(Alphabet::numeric(emissions.ncols()), matrices, init)
}

/// Deterministic cyclic HMM emitting `pattern` forever. With `start = None` the
/// phase is uniform, which makes the process stationary.
pub fn cycle_hmm(pattern: &[usize], alphabet: Alphabet, start: Option<usize>) -> Result<HmmModel> {
    let k = pattern.len();
    if k == 0 {
        return Err(OomError::Validation("pattern must not be empty".into()));
    }
    alphabet.check_word(pattern)?;
    let matrices = (0..alphabet.len())
        .map(|d| {
            DMatrix::from_fn(k, k, |i, j| {
                if pattern[i] == d && j == (i + 1) % k {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    let init = match start {
        Some(s) if s < k => DVector::from_fn(k, |i, _| if i == s { 1.0 } else { 0.0 }),
        Some(s) => {
            return Err(OomError::Validation(format!(
                "start phase {s} outside pattern of length {k}"
            )))
        }
        None => DVector::from_element(k, 1.0 / k as f64),
    };
    HmmModel::new(alphabet, matrices, init)
}

/// Stationary periodic process repeating `pattern` with uniformly random phase.
pub fn periodic(pattern: &[usize], n_symbols: usize) -> Result<OomModel> {
    Ok(hmm_to_oom(&cycle_hmm(
        pattern,
        Alphabet::numeric(n_symbols),
        None,
    )?))
}
