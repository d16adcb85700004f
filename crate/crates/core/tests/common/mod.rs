//! Reference implementations used as oracles. They share no code with the
//! library beyond the model constructors.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oomlab::oom::{hmm_to_oom, HmmModel, OomModel};
use oomlab::word::Alphabet;

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// An HMM with exact rational entries: `m[d][i][j] = P(j, d | i)`.
#[derive(Clone, Debug)]
pub struct RationalHmm {
    pub m: Vec<Vec<Vec<BigRational>>>,
    pub init: Vec<BigRational>,
}

impl RationalHmm {
    /// Bernoulli(`num / den`) as a one-state chain.
    pub fn bernoulli(num: i64, den: i64) -> Self {
        let p = rational(num, den);
        RationalHmm {
            m: vec![vec![vec![BigRational::one() - &p]], vec![vec![p]]],
            init: vec![BigRational::one()],
        }
    }

    /// Block-diagonal mixture with the given weights.
    pub fn mixture(parts: &[(BigRational, RationalHmm)]) -> Self {
        let n_sym = parts[0].1.m.len();
        let total: usize = parts.iter().map(|(_, h)| h.init.len()).sum();
        let mut m = vec![vec![vec![BigRational::zero(); total]; total]; n_sym];
        let mut init = Vec::with_capacity(total);
        let mut offset = 0;
        for (w, h) in parts {
            let n = h.init.len();
            for d in 0..n_sym {
                for i in 0..n {
                    for j in 0..n {
                        m[d][offset + i][offset + j] = h.m[d][i][j].clone();
                    }
                }
            }
            init.extend(h.init.iter().map(|x| x * w));
            offset += n;
        }
        RationalHmm { m, init }
    }

    pub fn probability(&self, word: &[usize]) -> BigRational {
        let mut alpha = self.init.clone();
        for &d in word {
            let n = alpha.len();
            let mut next = vec![BigRational::zero(); n];
            for i in 0..n {
                if alpha[i].is_zero() {
                    continue;
                }
                for j in 0..n {
                    next[j] += &alpha[i] * &self.m[d][i][j];
                }
            }
            alpha = next;
        }
        alpha.into_iter().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn to_f64_hmm(&self) -> HmmModel {
        use num_traits::ToPrimitive;
        let n = self.init.len();
        let ops = self
            .m
            .iter()
            .map(|md| DMatrix::from_fn(n, n, |i, j| md[i][j].to_f64().unwrap()))
            .collect();
        let init = DVector::from_iterator(n, self.init.iter().map(|x| x.to_f64().unwrap()));
        HmmModel::new(Alphabet::numeric(self.m.len()), ops, init).unwrap()
    }
}

/// All words of length `1..=max_len` plus the empty word, shortest first.
pub fn words(n_symbols: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for d in 0..n_symbols {
                let mut v: Vec<usize> = w.clone();
                v.push(d);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Exact rank by Gaussian elimination over the rationals.
pub fn exact_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..n_cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let p = rows[rank][col].clone();
        for r in rank + 1..rows.len() {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = &rows[r][col] / &p;
            for c in col..n_cols {
                let delta = &factor * &rows[rank][c];
                rows[r][c] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

/// Exact rank of the square Hankel block over words of length `0..=level`.
pub fn exact_hankel_rank(h: &RationalHmm, level: usize) -> usize {
    let ws = words(h.m.len(), level);
    let rows = ws
        .iter()
        .map(|u| {
            ws.iter()
                .map(|w| {
                    let mut uw = u.clone();
                    uw.extend_from_slice(w);
                    h.probability(&uw)
                })
                .collect()
        })
        .collect();
    exact_rank(rows)
}

pub fn is_nonnegative(x: &BigRational) -> bool {
    !x.is_negative()
}

/// Forward algorithm on plain nested vectors: `α ← α M_d`, `P(w) = Σ α`.
pub fn forward_probability(m: &[Vec<Vec<f64>>], init: &[f64], word: &[usize]) -> f64 {
    let n = init.len();
    let mut alpha = init.to_vec();
    for &d in word {
        let mut next = vec![0.0; n];
        for (i, a) in alpha.iter().enumerate() {
            for (j, x) in next.iter_mut().enumerate() {
                *x += a * m[d][i][j];
            }
        }
        alpha = next;
    }
    alpha.iter().sum()
}

/// A random HMM as nested vectors: each state's outgoing mass is a random
/// distribution over (symbol, next state) pairs.
pub fn random_hmm_parts(
    rng: &mut ChaCha8Rng,
    n_states: usize,
    n_symbols: usize,
) -> (Vec<Vec<Vec<f64>>>, Vec<f64>) {
    let mut m = vec![vec![vec![0.0; n_states]; n_states]; n_symbols];
    for i in 0..n_states {
        let raw: Vec<f64> = (0..n_states * n_symbols)
            .map(|_| rng.random::<f64>() + 0.05)
            .collect();
        let total: f64 = raw.iter().sum();
        for d in 0..n_symbols {
            for j in 0..n_states {
                m[d][i][j] = raw[d * n_states + j] / total;
            }
        }
    }
    let raw: Vec<f64> = (0..n_states).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    let init = raw.iter().map(|x| x / total).collect();
    (m, init)
}

pub fn hmm_from_parts(m: &[Vec<Vec<f64>>], init: &[f64]) -> HmmModel {
    let n = init.len();
    let ops = m
        .iter()
        .map(|md| DMatrix::from_fn(n, n, |i, j| md[i][j]))
        .collect();
    HmmModel::new(
        Alphabet::numeric(m.len()),
        ops,
        DVector::from_column_slice(init),
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random OOM that is not in HMM form: a random HMM conjugated by a random
/// well-conditioned change of basis.
pub fn random_oom(rng: &mut ChaCha8Rng, n_states: usize, n_symbols: usize) -> OomModel {
    let (m, init) = random_hmm_parts(rng, n_states, n_symbols);
    let base = hmm_to_oom(&hmm_from_parts(&m, &init));
    let s = DMatrix::from_fn(n_states, n_states, |i, j| {
        let noise: f64 = rng.random_range(-0.3..0.3);
        if i == j {
            1.0 + noise
        } else {
            noise / n_states as f64
        }
    });
    base.transform(&s).unwrap()
}
