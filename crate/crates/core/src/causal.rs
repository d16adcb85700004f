//! Finite-horizon causal states.
//!
//! A causal state is identified with the conditional distribution of the future
//! given the past. Here pasts are words of a fixed length and futures are words
//! of a fixed horizon; pasts whose predictive distributions lie within a
//! total-variation tolerance of each other are merged (single linkage).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dimension::{numerical_rank, singular_values};
use crate::error::{OomError, Result};
use crate::oom::{clamp_probability, ProcessOracle, DEFAULT_NEG_TOL};
use crate::word::{words_of_length, Word};

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
/// Limit on `|Δ|^horizon` and on `|Δ|^past_len`.
pub const MAX_WORDS_PER_SIDE: u128 = 100_000;

/// `P(past · w) / P(past)` for all futures `w` of length `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDistribution {
    pub past: Word,
    pub horizon: usize,
    /// `None` when the past has probability zero.
    pub dist: Option<Vec<f64>>,
    /// `P([past])`
    pub weight: f64,
}

fn guard_side(what: &'static str, n_symbols: usize, len: usize) -> Result<()> {
    let count = (n_symbols as u128).saturating_pow(len as u32);
    if count > MAX_WORDS_PER_SIDE {
        return Err(OomError::Resource {
            what,
            requested: count,
            limit: MAX_WORDS_PER_SIDE,
        });
    }
    Ok(())
}

/// Turns a row of joint probabilities `P(past · w)` into a predictive distribution.
fn normalize_row(
    past: &[usize],
    futures: &[Word],
    joint: impl Iterator<Item = f64>,
    weight: f64,
) -> Result<Option<Vec<f64>>> {
    if weight <= DEFAULT_NEG_TOL {
        return Ok(None);
    }
    joint
        .zip(futures)
        .map(|(x, w)| {
            let mut word = past.to_vec();
            word.extend_from_slice(w);
            clamp_probability(&word, x, DEFAULT_NEG_TOL).map(|x| x / weight)
        })
        .collect::<Result<Vec<f64>>>()
        .map(Some)
}

pub fn predictive_distribution<P: ProcessOracle + ?Sized>(
    p: &P,
    past: &[usize],
    horizon: usize,
) -> Result<PredictiveDistribution> {
    let n = p.alphabet().len();
    p.alphabet().check_word(past)?;
    guard_side("predictive distribution support", n, horizon)?;
    let futures = words_of_length(n, horizon);
    let weight = if past.is_empty() {
        1.0
    } else {
        clamp_probability(past, p.raw_probability(past)?, DEFAULT_NEG_TOL)?
    };
    let joint = p.raw_hankel(&[past.to_vec()], &futures)?;
    let dist = normalize_row(past, &futures, joint.row(0).iter().copied(), weight)?;
    Ok(PredictiveDistribution {
        past: past.to_vec(),
        horizon,
        dist,
        weight,
    })
}

/// Total-variation distance `½ Σ |p_i - q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalState {
    /// Weight-averaged predictive distribution of the members.
    pub representative: Vec<f64>,
    pub weight: f64,
    pub members: Vec<Word>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalStatePartition {
    pub past_len: usize,
    pub horizon: usize,
    pub cluster_tol: f64,
    pub states: Vec<CausalState>,
}

impl CausalStatePartition {
    pub fn total_weight(&self) -> f64 {
        self.states.iter().map(|s| s.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Keeps the smaller index as root so cluster order follows input order.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Clusters all pasts of length `past_len` with positive probability by the
/// total-variation distance of their predictive distributions over `horizon`.
/// The process is assumed stationary; callers check that separately.
pub fn enumerate_causal_states<P: ProcessOracle + ?Sized>(
    p: &P,
    past_len: usize,
    horizon: usize,
    cluster_tol: f64,
) -> Result<CausalStatePartition> {
    let n = p.alphabet().len();
    guard_side("past words", n, past_len)?;
    guard_side("predictive distribution support", n, horizon)?;
    let all_pasts = words_of_length(n, past_len);
    let futures = words_of_length(n, horizon);
    let joint = p.raw_hankel(&all_pasts, &futures)?;

    let mut pasts = Vec::new();
    let mut dists = Vec::new();
    let mut weights = Vec::new();
    for (i, past) in all_pasts.iter().enumerate() {
        let weight = if past.is_empty() {
            1.0
        } else {
            clamp_probability(past, p.raw_probability(past)?, DEFAULT_NEG_TOL)?
        };
        if let Some(dist) = normalize_row(past, &futures, joint.row(i).iter().copied(), weight)? {
            pasts.push(past.clone());
            dists.push(dist);
            weights.push(weight);
        }
    }

    // TV ≤ tol forces the first coordinates within 2·tol, so a sweep in that
    // coordinate finds every linked pair.
    let mut sets = DisjointSets::new(pasts.len());
    let mut order: Vec<usize> = (0..pasts.len()).collect();
    order.sort_by(|&a, &b| dists[a][0].total_cmp(&dists[b][0]).then(a.cmp(&b)));
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if dists[j][0] - dists[i][0] > 2.0 * cluster_tol {
                break;
            }
            if total_variation(&dists[i], &dists[j]) <= cluster_tol {
                sets.union(i, j);
            }
        }
    }

    let mut states: Vec<CausalState> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; pasts.len()];
    for i in 0..pasts.len() {
        let root = sets.find(i);
        let slot = *root_slot[root].get_or_insert_with(|| {
            states.push(CausalState {
                representative: vec![0.0; futures.len()],
                weight: 0.0,
                members: Vec::new(),
            });
            states.len() - 1
        });
        let state = &mut states[slot];
        state.weight += weights[i];
        state.members.push(pasts[i].clone());
        for (r, x) in state.representative.iter_mut().zip(&dists[i]) {
            *r += weights[i] * x;
        }
    }
    for s in &mut states {
        let w = s.weight;
        s.representative.iter_mut().for_each(|r| *r /= w);
    }

    Ok(CausalStatePartition {
        past_len,
        horizon,
        cluster_tol,
        states,
    })
}

/// Shannon entropy of the state weights in bits.
pub fn statistical_complexity(c: &CausalStatePartition) -> f64 {
    -c.states
        .iter()
        .map(|s| s.weight)
        .filter(|&w| w > 0.0)
        .map(|w| w * w.log2())
        .sum::<f64>()
}

/// `log₂` of the number of states.
pub fn topological_complexity(c: &CausalStatePartition) -> Result<f64> {
    if c.states.is_empty() {
        return Err(OomError::EmptyPartition);
    }
    Ok((c.states.len() as f64).log2())
}

/// Numerical rank of the matrix whose rows are the state representatives.
pub fn causal_span_rank(c: &CausalStatePartition, tol_rel: f64) -> usize {
    if c.states.is_empty() {
        return 0;
    }
    let cols = c.states[0].representative.len();
    let m = DMatrix::from_fn(c.states.len(), cols, |i, j| c.states[i].representative[j]);
    numerical_rank(&singular_values(&m), tol_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::DEFAULT_TOL_REL;
    use crate::oom::hmm_to_oom;
    use crate::processes::{bernoulli, bernoulli_mixture, markov_chain, periodic};

    fn chain() -> crate::OomModel {
        hmm_to_oom(&markov_chain(&DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8])).unwrap())
    }

    #[test]
    fn iid_prediction_ignores_past() {
        let m = bernoulli(0.4).unwrap();
        for past in [vec![], vec![0], vec![1, 1, 0]] {
            let pd = predictive_distribution(&m, &past, 1).unwrap();
            let dist = pd.dist.unwrap();
            assert!((dist[1] - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn period_two_prediction_is_deterministic() {
        let m = periodic(&[0, 1], 2).unwrap();
        let pd = predictive_distribution(&m, &[0, 1], 2).unwrap();
        // futures 00, 01, 10, 11: after "01" comes "01"
        assert_eq!(pd.dist.unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        let zero = predictive_distribution(&m, &[0, 0], 2).unwrap();
        assert_eq!(zero.weight, 0.0);
        assert!(zero.dist.is_none());
    }

    #[test]
    fn markov_prediction() {
        let m = chain();
        let a = predictive_distribution(&m, &[1, 0], 1)
            .unwrap()
            .dist
            .unwrap();
        let b = predictive_distribution(&m, &[0, 1], 1)
            .unwrap()
            .dist
            .unwrap();
        assert!((a[0] - 0.9).abs() < 1e-14);
        assert!((b[0] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn horizon_guard() {
        let err = predictive_distribution(&bernoulli(0.5).unwrap(), &[], 20).unwrap_err();
        assert!(matches!(err, OomError::Resource { .. }));
    }

    #[test]
    fn iid_has_one_state() {
        let c =
            enumerate_causal_states(&bernoulli(0.3).unwrap(), 3, 2, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c.states[0].weight - 1.0).abs() < 1e-12);
        assert!(statistical_complexity(&c).abs() < 1e-12);
        assert_eq!(topological_complexity(&c).unwrap(), 0.0);
        assert_eq!(causal_span_rank(&c, DEFAULT_TOL_REL), 1);
    }

    #[test]
    fn markov_chain_states() {
        let c = enumerate_causal_states(&chain(), 1, 3, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(c.len(), 2);
        assert!((c.states[0].weight - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.states[1].weight - 1.0 / 3.0).abs() < 1e-12);
        let expected = 3f64.log2() - 2.0 / 3.0;
        assert!((statistical_complexity(&c) - expected).abs() < 1e-12);
        assert_eq!(causal_span_rank(&c, DEFAULT_TOL_REL), 2);
    }

    #[test]
    fn period_two_states() {
        let c = enumerate_causal_states(&periodic(&[0, 1], 2).unwrap(), 1, 2, DEFAULT_CLUSTER_TOL)
            .unwrap();
        assert_eq!(c.len(), 2);
        assert!((c.states[0].weight - 0.5).abs() < 1e-15);
        assert!((statistical_complexity(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_span_rank_is_two() {
        let m = bernoulli_mixture(&[(0.5, 0.2), (0.5, 0.7)]).unwrap();
        let c = enumerate_causal_states(&m, 3, 2, DEFAULT_CLUSTER_TOL).unwrap();
        // one state per count of ones in the past
        assert_eq!(c.len(), 4);
        assert_eq!(causal_span_rank(&c, DEFAULT_TOL_REL), 2);
        assert!(statistical_complexity(&c) <= topological_complexity(&c).unwrap());
    }

    #[test]
    fn topological_complexity_values() {
        let mk = |k: usize| CausalStatePartition {
            past_len: 1,
            horizon: 1,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            states: (0..k)
                .map(|_| CausalState {
                    representative: vec![1.0],
                    weight: 1.0 / k as f64,
                    members: vec![],
                })
                .collect(),
        };
        assert_eq!(topological_complexity(&mk(1)).unwrap(), 0.0);
        assert_eq!(topological_complexity(&mk(2)).unwrap(), 1.0);
        assert!((topological_complexity(&mk(5)).unwrap() - 2.321928094887362).abs() < 1e-12);
        assert!(matches!(
            topological_complexity(&mk(0)),
            Err(OomError::EmptyPartition)
        ));
    }
}
