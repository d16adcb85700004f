//! Process dimension via Hankel blocks, plus OOM minimization and equivalence.
//!
//! The Hankel block `H[u][w] = P(uw)` has row `u` equal to the unnormalized
//! conditional measure of the future after observing `u`, restricted to the
//! cylinders `[w]`. The rank of these rows over all word lengths is the dimension
//! of the canonical OOM. Here it is computed on finite square blocks and declared
//! only once the rank has stopped growing over two consecutive levels.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{OomError, Result};
use crate::oom::{
    clamp_probability, max_cylinder_deviation, OomModel, ProcessOracle, DEFAULT_NEG_TOL,
};
use crate::word::{count_words, words_up_to, Word};

/// Relative singular-value threshold for numerical rank.
pub const DEFAULT_TOL_REL: f64 = 1e-9;
/// Largest Hankel block (rows × columns) that will be materialized.
pub const MAX_HANKEL_ENTRIES: u128 = 1_000_000;

/// A finite past × future block of the (possibly complex) Hankel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelBlock<T: nalgebra::Scalar> {
    pub pasts: Vec<Word>,
    pub futures: Vec<Word>,
    pub matrix: DMatrix<T>,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
}

impl<T: nalgebra::Scalar> HankelBlock<T> {
    pub fn rank(&self, tol_rel: f64) -> usize {
        numerical_rank(&self.singular_values, tol_rel)
    }
}

/// Past and future word lists for a block, after checking the size guard.
pub(crate) fn hankel_words(
    n_letters: usize,
    past_len: usize,
    future_len: usize,
) -> Result<(Vec<Word>, Vec<Word>)> {
    let entries =
        count_words(n_letters, past_len).saturating_mul(count_words(n_letters, future_len));
    if entries > MAX_HANKEL_ENTRIES {
        return Err(OomError::Resource {
            what: "Hankel block entries",
            requested: entries,
            limit: MAX_HANKEL_ENTRIES,
        });
    }
    Ok((
        words_up_to(n_letters, past_len),
        words_up_to(n_letters, future_len),
    ))
}

/// Singular values sorted in nonincreasing order.
pub fn singular_values<T>(m: &DMatrix<T>) -> Vec<f64>
where
    T: ComplexField<RealField = f64>,
{
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values strictly above `tol_rel · σ_max`.
pub fn numerical_rank(sv: &[f64], tol_rel: f64) -> usize {
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol_rel * max).count()
}

/// `T_{w_n} ⋯ T_{w_1} v`: coordinates of the unnormalized conditional measure after `w`.
pub fn apply_tau(m: &OomModel, word: &[usize]) -> Result<DVector<f64>> {
    m.propagate(m.init(), word)
}

/// Hankel block over all pasts of length `≤ past_len` and futures of length `≤ future_len`.
pub fn build_hankel<P: ProcessOracle + ?Sized>(
    p: &P,
    past_len: usize,
    future_len: usize,
) -> Result<HankelBlock<f64>> {
    let (pasts, futures) = hankel_words(p.alphabet().len(), past_len, future_len)?;
    let mut matrix = p.raw_hankel(&pasts, &futures)?;
    for i in 0..pasts.len() {
        for j in 0..futures.len() {
            let value = matrix[(i, j)];
            if value < 0.0 {
                let mut word = pasts[i].clone();
                word.extend_from_slice(&futures[j]);
                matrix[(i, j)] = clamp_probability(&word, value, DEFAULT_NEG_TOL)?;
            }
        }
    }
    let singular_values = singular_values(&matrix);
    Ok(HankelBlock {
        pasts,
        futures,
        matrix,
        singular_values,
    })
}

/// A declared dimension, or the admission that the rank ladder did not settle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Finite(usize),
    NotStabilized,
}

impl Dimension {
    pub fn value(self) -> Option<usize> {
        match self {
            Dimension::Finite(d) => Some(d),
            Dimension::NotStabilized => None,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dimension::Finite(d) => write!(f, "{d}"),
            Dimension::NotStabilized => f.write_str("not stabilized"),
        }
    }
}

impl Serialize for Dimension {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Dimension::Finite(d) => s.serialize_u64(*d as u64),
            Dimension::NotStabilized => s.serialize_str("not stabilized"),
        }
    }
}

impl<'de> Deserialize<'de> for Dimension {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct DimVisitor;
        impl Visitor<'_> for DimVisitor {
            type Value = Dimension;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative integer or \"not stabilized\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Dimension, E> {
                Ok(Dimension::Finite(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Dimension, E> {
                if v == "not stabilized" {
                    Ok(Dimension::NotStabilized)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(DimVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub rank_by_level: BTreeMap<usize, usize>,
    pub stabilized: bool,
    pub dimension: Dimension,
    pub tol_rel: f64,
    /// Singular values of the largest block.
    pub singular_values: Vec<f64>,
}

impl DimensionReport {
    pub fn is_monotone(&self) -> bool {
        self.rank_by_level
            .values()
            .zip(self.rank_by_level.values().skip(1))
            .all(|(a, b)| a <= b)
    }
}

/// Runs the rank ladder `L = 1..=max_level`; `singular_values_at(L)` returns the
/// spectrum of the `(L, L)` block. At `max_level = 1` the comparison is against
/// the `(0, 0)` block `[1]`, whose rank is 1.
pub(crate) fn dimension_ladder(
    max_level: usize,
    tol_rel: f64,
    mut singular_values_at: impl FnMut(usize) -> Result<Vec<f64>>,
) -> Result<DimensionReport> {
    if max_level == 0 {
        return Err(OomError::Precondition(
            "max level must be at least 1".into(),
        ));
    }
    let mut rank_by_level = BTreeMap::new();
    let mut last = Vec::new();
    for level in 1..=max_level {
        last = singular_values_at(level)?;
        rank_by_level.insert(level, numerical_rank(&last, tol_rel));
    }
    let top = rank_by_level[&max_level];
    let previous = if max_level == 1 {
        1
    } else {
        rank_by_level[&(max_level - 1)]
    };
    let stabilized = top == previous;
    Ok(DimensionReport {
        rank_by_level,
        stabilized,
        dimension: if stabilized {
            Dimension::Finite(top)
        } else {
            Dimension::NotStabilized
        },
        tol_rel,
        singular_values: last,
    })
}

/// Process dimension from the rank ladder of square Hankel blocks.
pub fn process_dimension<P: ProcessOracle + ?Sized>(
    p: &P,
    max_level: usize,
    tol_rel: f64,
) -> Result<DimensionReport> {
    dimension_ladder(max_level, tol_rel, |level| {
        Ok(build_hankel(p, level, level)?.singular_values)
    })
}

/// Orthonormal basis (as columns) of the column span, using a relative rank cut.
fn orthonormal_span(columns: &DMatrix<f64>, tol_rel: f64) -> DMatrix<f64> {
    let n = columns.nrows();
    if columns.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = columns.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let rank = numerical_rank(&sv, tol_rel);
    DMatrix::from_fn(n, rank, |i, j| u[(i, order[j])])
}

/// Smallest subspace containing `start` and invariant under all `ops`.
fn invariant_span(
    ops: &[DMatrix<f64>],
    start: &DVector<f64>,
    tol_rel: f64,
) -> Result<DMatrix<f64>> {
    let n = start.len();
    let mut basis = orthonormal_span(&DMatrix::from_column_slice(n, 1, start.as_slice()), tol_rel);
    for _ in 0..=n {
        let mut columns = basis.clone();
        for t in ops {
            let image = t * &basis;
            let width = columns.ncols();
            columns = columns.insert_columns(width, image.ncols(), 0.0);
            columns.columns_mut(width, image.ncols()).copy_from(&image);
        }
        let next = orthonormal_span(&columns, tol_rel);
        if next.ncols() == basis.ncols() {
            return Ok(basis);
        }
        basis = next;
    }
    Err(OomError::NotStabilized { depth: n + 1 })
}

/// Minimal OOM generating the same process: restrict to the span of the
/// reachable states `T_w v`, then quotient by the common kernel of the
/// functionals `ℓ T_w`.
pub fn minimize_oom(m: &OomModel, tol_rel: f64) -> Result<OomModel> {
    let reach = invariant_span(m.operators(), m.init(), tol_rel)?;
    let ops: Vec<DMatrix<f64>> = m
        .operators()
        .iter()
        .map(|t| reach.tr_mul(&(t * &reach)))
        .collect();
    let init = reach.tr_mul(m.init());
    let eval = reach.tr_mul(m.eval());

    let transposed: Vec<DMatrix<f64>> = ops.iter().map(|t| t.transpose()).collect();
    let observe = invariant_span(&transposed, &eval, tol_rel)?;
    OomModel::new(
        m.alphabet().clone(),
        ops.iter()
            .map(|t| observe.tr_mul(&(t * &observe)))
            .collect(),
        observe.tr_mul(&init),
        observe.tr_mul(&eval),
    )
}

/// True when all cylinder probabilities up to length `max_len` agree within `tol`.
pub fn equivalent(m1: &OomModel, m2: &OomModel, max_len: usize, tol: f64) -> Result<bool> {
    Ok(max_cylinder_deviation(m1, m2, max_len)? <= tol)
}
