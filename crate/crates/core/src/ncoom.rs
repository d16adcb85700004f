//! Non-commutative OOMs (finitely correlated states).
//!
//! The output alphabet is replaced by a finite-dimensional C*-algebra `𝒜`. The
//! bilinear map `T: 𝒜 × V → V` is stored as one operator per matrix unit of `𝒜`,
//! so `T_a = Σ_β a_β T_{e_β}`. The generated state is
//! `φ(a_1 ⊗ ⋯ ⊗ a_n) = ℓ(T_{a_n} ⋯ T_{a_1} v)`.
//!
//! The other common convention applies the operators in reverse order and
//! divides by `ℓ(v)`; it yields translation-invariant states by construction and
//! is available through [`OperatorOrder::Reversed`] for stationarity comparisons.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, CStarAlgebra, C64};
use crate::dimension::{
    dimension_ladder, hankel_words, singular_values, DimensionReport, HankelBlock,
};
use crate::error::{OomError, Result};
use crate::oom::{check_weights, OomModel, CONDITION_TOL, DEFAULT_NEG_TOL};
use crate::word::Word;

/// Imaginary parts of values that should be real are tolerated up to this size.
pub const IMAG_TOL: f64 = 1e-9;
pub const NC_STATIONARITY_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_NC_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct NcOomModel {
    algebra: CStarAlgebra,
    op_per_basis: Vec<DMatrix<C64>>,
    init: DVector<C64>,
    eval: DVector<C64>,
}

fn bilinear(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

impl NcOomModel {
    pub fn new(
        algebra: CStarAlgebra,
        op_per_basis: Vec<DMatrix<C64>>,
        init: DVector<C64>,
        eval: DVector<C64>,
    ) -> Result<Self> {
        let dim = init.len();
        if dim == 0 {
            return Err(OomError::Shape {
                field: "init".into(),
                expected: "positive length".into(),
                found: "0".into(),
            });
        }
        if op_per_basis.len() != algebra.total_dim() {
            return Err(OomError::Shape {
                field: "op_per_basis".into(),
                expected: format!("{} operators (algebra dimension)", algebra.total_dim()),
                found: op_per_basis.len().to_string(),
            });
        }
        for (i, t) in op_per_basis.iter().enumerate() {
            if t.nrows() != dim || t.ncols() != dim {
                return Err(OomError::Shape {
                    field: format!("op_per_basis[{i}]"),
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
        Ok(NcOomModel {
            algebra,
            op_per_basis,
            init,
            eval,
        })
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.init.len()
    }

    pub fn op_per_basis(&self) -> &[DMatrix<C64>] {
        &self.op_per_basis
    }

    pub fn init(&self) -> &DVector<C64> {
        &self.init
    }

    pub fn eval(&self) -> &DVector<C64> {
        &self.eval
    }

    /// `T_a` expanded in the matrix-unit basis.
    pub fn operator_for(&self, a: &AlgebraElement) -> Result<DMatrix<C64>> {
        if a.algebra() != &self.algebra {
            return Err(OomError::AlgebraMismatch {
                expected: self.algebra.block_dims().to_vec(),
                found: a.algebra().block_dims().to_vec(),
            });
        }
        let dim = self.dim();
        Ok(a.coefficients()
            .iter()
            .zip(&self.op_per_basis)
            .filter(|(c, _)| **c != C64::new(0.0, 0.0))
            .fold(DMatrix::zeros(dim, dim), |acc, (c, t)| acc + t * *c))
    }

    pub fn unit_operator(&self) -> DMatrix<C64> {
        self.operator_for(&self.algebra.unit())
            .expect("unit of the model's own algebra")
    }

    fn propagate_basis(&self, x: &DVector<C64>, tuple: &[usize]) -> DVector<C64> {
        tuple
            .iter()
            .fold(x.clone(), |acc, &b| &self.op_per_basis[b] * acc)
    }

    fn covector_after_basis(&self, tuple: &[usize]) -> DVector<C64> {
        tuple.iter().rev().fold(self.eval.clone(), |acc, &b| {
            self.op_per_basis[b].tr_mul(&acc)
        })
    }

    fn check_tuple(&self, tuple: &[usize]) -> Result<()> {
        match tuple.iter().find(|&&b| b >= self.algebra.total_dim()) {
            Some(&index) => Err(OomError::SymbolIndex {
                index,
                size: self.algebra.total_dim(),
            }),
            None => Ok(()),
        }
    }
}

/// Which end of the tensor product the operators start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorOrder {
    /// `ℓ T_{a_n} ⋯ T_{a_1} v` (first factor applied first).
    #[default]
    Forward,
    /// `ℓ T_{a_1} ⋯ T_{a_n} v / ℓ(v)`.
    Reversed,
}

/// `φ(a_1 ⊗ ⋯ ⊗ a_n)`; the empty product evaluates to 1.
pub fn nc_evaluate(m: &NcOomModel, factors: &[AlgebraElement]) -> Result<C64> {
    nc_evaluate_ordered(m, factors, OperatorOrder::Forward)
}

pub fn nc_evaluate_ordered(
    m: &NcOomModel,
    factors: &[AlgebraElement],
    order: OperatorOrder,
) -> Result<C64> {
    if factors.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    let ops = factors
        .iter()
        .map(|a| m.operator_for(a))
        .collect::<Result<Vec<_>>>()?;
    let x = match order {
        OperatorOrder::Forward => ops.iter().fold(m.init.clone(), |acc, t| t * acc),
        OperatorOrder::Reversed => ops.iter().rev().fold(m.init.clone(), |acc, t| t * acc),
    };
    let value = bilinear(&m.eval, &x);
    Ok(match order {
        OperatorOrder::Forward => value,
        OperatorOrder::Reversed => value / bilinear(&m.eval, &m.init),
    })
}

/// `φ(e_{β_1} ⊗ ⋯ ⊗ e_{β_n})` for basis indices `β_i`.
pub fn nc_evaluate_basis(m: &NcOomModel, tuple: &[usize]) -> Result<C64> {
    m.check_tuple(tuple)?;
    Ok(bilinear(&m.eval, &m.propagate_basis(&m.init, tuple)))
}

/// The state generated by a model, as an evaluation oracle.
#[derive(Debug, Clone, Copy)]
pub struct NcState<'a> {
    model: &'a NcOomModel,
    order: OperatorOrder,
}

impl<'a> NcState<'a> {
    pub fn new(model: &'a NcOomModel) -> Self {
        NcState {
            model,
            order: OperatorOrder::Forward,
        }
    }

    pub fn with_order(model: &'a NcOomModel, order: OperatorOrder) -> Self {
        NcState { model, order }
    }

    pub fn evaluate(&self, factors: &[AlgebraElement]) -> Result<C64> {
        nc_evaluate_ordered(self.model, factors, self.order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcValidationReport {
    /// `|ℓ(v) - 1|`
    pub normalization_residual: f64,
    /// `‖ℓ T_1 - ℓ‖_∞`
    pub consistency_residual: f64,
    /// Smallest real part of `φ(a_1 ⊗ ⋯ ⊗ a_n)` over sampled positive tuples.
    pub min_real_part: f64,
    /// Largest `|Im φ(a_1 ⊗ ⋯ ⊗ a_n)|` over sampled positive tuples.
    pub max_imag_part: f64,
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
}

/// Checks normalization and consistency exactly, and positivity on `samples`
/// random tuples of elements `b*b` per length `1..=depth`.
pub fn validate_ncoom(
    m: &NcOomModel,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<NcValidationReport> {
    let normalization_residual = (bilinear(&m.eval, &m.init) - C64::new(1.0, 0.0)).norm();
    let consistency_residual = (m.unit_operator().tr_mul(&m.eval) - &m.eval)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_real_part = f64::INFINITY;
    let mut max_imag_part: f64 = 0.0;
    for n in 1..=depth {
        for _ in 0..samples {
            let mut x = m.init.clone();
            for _ in 0..n {
                let a = m.algebra.random_positive(&mut rng);
                x = m.operator_for(&a)? * x;
            }
            let value = bilinear(&m.eval, &x);
            min_real_part = min_real_part.min(value.re);
            max_imag_part = max_imag_part.max(value.im.abs());
        }
    }
    if !min_real_part.is_finite() {
        min_real_part = bilinear(&m.eval, &m.init).re;
    }
    let passed = normalization_residual <= CONDITION_TOL
        && consistency_residual <= CONDITION_TOL
        && min_real_part >= -DEFAULT_NEG_TOL
        && max_imag_part <= IMAG_TOL;
    Ok(NcValidationReport {
        normalization_residual,
        consistency_residual,
        min_real_part,
        max_imag_part,
        depth,
        samples,
        seed,
        passed,
    })
}

/// The NC-OOM of a classical OOM over the commutative algebra `C(Δ)`:
/// `T_f = Σ_d f(d) T_d`, with all data complexified.
pub fn embed_classical(m: &OomModel) -> NcOomModel {
    let complexify_matrix = |t: &DMatrix<f64>| t.map(|x| C64::new(x, 0.0));
    let complexify_vector = |v: &DVector<f64>| v.map(|x| C64::new(x, 0.0));
    NcOomModel::new(
        CStarAlgebra::commutative(m.alphabet().len()).expect("alphabet is non-empty"),
        m.operators().iter().map(complexify_matrix).collect(),
        complexify_vector(m.init()),
        complexify_vector(m.eval()),
    )
    .expect("shapes carried over from a valid OOM")
}

/// Hankel block `H[α][β] = φ(e_α ⊗ e_β)` over basis tuples.
pub fn nc_hankel(m: &NcOomModel, past_len: usize, future_len: usize) -> Result<HankelBlock<C64>> {
    let (pasts, futures) = hankel_words(m.algebra.total_dim(), past_len, future_len)?;
    let dim = m.dim();
    let mut states = DMatrix::zeros(dim, pasts.len());
    for (j, u) in pasts.iter().enumerate() {
        states.set_column(j, &m.propagate_basis(&m.init, u));
    }
    let mut covectors = DMatrix::zeros(dim, futures.len());
    for (j, w) in futures.iter().enumerate() {
        covectors.set_column(j, &m.covector_after_basis(w));
    }
    let matrix = states.tr_mul(&covectors);
    let singular_values = singular_values(&matrix);
    Ok(HankelBlock {
        pasts,
        futures,
        matrix,
        singular_values,
    })
}

/// Dimension of the canonical NC-OOM, from the rank ladder of complex Hankel blocks.
pub fn nc_process_dimension(
    m: &NcOomModel,
    max_level: usize,
    tol_rel: f64,
) -> Result<DimensionReport> {
    dimension_ladder(max_level, tol_rel, |level| {
        Ok(nc_hankel(m, level, level)?.singular_values)
    })
}

/// Block-diagonal NC-OOM generating `Σ_k ν_k φ_k`.
pub fn nc_mixture_direct_sum(parts: &[(f64, NcOomModel)]) -> Result<NcOomModel> {
    let (_, first) = parts
        .first()
        .ok_or_else(|| OomError::Validation("mixture needs at least one part".into()))?;
    check_weights(parts.iter().map(|(w, _)| *w))?;
    for (_, m) in parts {
        if m.algebra != first.algebra {
            return Err(OomError::AlgebraMismatch {
                expected: first.algebra.block_dims().to_vec(),
                found: m.algebra.block_dims().to_vec(),
            });
        }
    }
    let dim: usize = parts.iter().map(|(_, m)| m.dim()).sum();
    let mut ops = vec![DMatrix::zeros(dim, dim); first.algebra.total_dim()];
    let mut init = DVector::zeros(dim);
    let mut eval = DVector::zeros(dim);
    let mut offset = 0;
    for (weight, m) in parts {
        let n = m.dim();
        for (big, t) in ops.iter_mut().zip(&m.op_per_basis) {
            big.view_mut((offset, offset), (n, n)).copy_from(t);
        }
        init.rows_mut(offset, n)
            .copy_from(&(&m.init * C64::new(*weight, 0.0)));
        eval.rows_mut(offset, n).copy_from(&m.eval);
        offset += n;
    }
    NcOomModel::new(first.algebra.clone(), ops, init, eval)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcStationarityReport {
    /// Largest `|φ(1 ⊗ a_1 ⊗ ⋯ ⊗ a_n) - φ(a_1 ⊗ ⋯ ⊗ a_n)|` over the samples.
    pub max_residual: f64,
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    pub order: OperatorOrder,
    pub stationary: bool,
}

/// Samples random tuples of unit-norm elements and compares the state with its shift.
pub fn nc_stationarity_check(
    m: &NcOomModel,
    depth: usize,
    samples: usize,
    seed: u64,
    order: OperatorOrder,
) -> Result<NcStationarityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = m.algebra.unit();
    let mut max_residual: f64 = 0.0;
    for n in 1..=depth {
        for _ in 0..samples {
            let factors: Vec<AlgebraElement> = (0..n)
                .map(|_| {
                    let a = m.algebra.random_element(&mut rng);
                    let norm = a.norm();
                    a.scale(C64::new(1.0 / norm, 0.0))
                })
                .collect();
            let mut shifted = Vec::with_capacity(n + 1);
            shifted.push(unit.clone());
            shifted.extend(factors.iter().cloned());
            let residual = (nc_evaluate_ordered(m, &shifted, order)?
                - nc_evaluate_ordered(m, &factors, order)?)
            .norm();
            max_residual = max_residual.max(residual);
        }
    }
    Ok(NcStationarityReport {
        max_residual,
        depth,
        samples,
        seed,
        order,
        stationary: max_residual <= NC_STATIONARITY_TOL,
    })
}

/// Dimension-one model of the product state `φ(a_1 ⊗ ⋯ ⊗ a_n) = Π tr(ρ a_i)`.
pub fn product_state(algebra: &CStarAlgebra, density: &AlgebraElement) -> Result<NcOomModel> {
    if density.algebra() != algebra {
        return Err(OomError::AlgebraMismatch {
            expected: algebra.block_dims().to_vec(),
            found: density.algebra().block_dims().to_vec(),
        });
    }
    // tr(ρ E_ij) = ρ_ji
    let ops = (0..algebra.total_dim())
        .map(|b| {
            let (k, i, j) = algebra.basis_position(b).expect("index in range");
            DMatrix::from_element(1, 1, density.blocks()[k][(j, i)])
        })
        .collect();
    NcOomModel::new(
        algebra.clone(),
        ops,
        DVector::from_element(1, C64::new(1.0, 0.0)),
        DVector::from_element(1, C64::new(1.0, 0.0)),
    )
}

/// Words over the algebra basis, for callers that need the Hankel row labels.
pub fn basis_tuples(m: &NcOomModel, max_len: usize) -> Vec<Word> {
    crate::word::words_up_to(m.algebra.total_dim(), max_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::{Dimension, DEFAULT_TOL_REL};
    use crate::oom::{hmm_to_oom, ProcessOracle};
    use crate::processes::{bernoulli, bernoulli_mixture, cycle_hmm};
    use crate::word::Alphabet;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn qubit() -> CStarAlgebra {
        CStarAlgebra::new(vec![2]).unwrap()
    }

    fn diag(a: &CStarAlgebra, x: f64, y: f64) -> AlgebraElement {
        a.from_coefficients(&[c(x), c(0.0), c(0.0), c(y)]).unwrap()
    }

    #[test]
    fn product_state_values() {
        let q = qubit();
        let m = product_state(&q, &diag(&q, 0.8, 0.2)).unwrap();
        let z = diag(&q, 1.0, -1.0);
        let v = nc_evaluate(&m, &[z.clone(), z]).unwrap();
        assert!((v - c(0.36)).norm() < 1e-15);
        assert_eq!(nc_evaluate(&m, &[]).unwrap(), c(1.0));
        let units = vec![q.unit(); 3];
        assert!((nc_evaluate(&m, &units).unwrap() - c(1.0)).norm() < 1e-15);
        assert!(validate_ncoom(&m, 3, 50, 1).unwrap().passed);
    }

    #[test]
    fn embedded_bernoulli() {
        let m = embed_classical(&bernoulli(0.5).unwrap());
        let r = validate_ncoom(&m, 3, 50, 0).unwrap();
        assert!(r.passed);
        assert_eq!(r.normalization_residual, 0.0);
        assert_eq!(r.consistency_residual, 0.0);
        let v = nc_evaluate_basis(&m, &[1, 0, 1]).unwrap();
        assert_eq!(v, c(0.125));
    }

    #[test]
    fn bilinear_expansion_matches_direct_sum() {
        let classical = bernoulli_mixture(&[(0.4, 0.2), (0.6, 0.9)]).unwrap();
        let m = embed_classical(&classical);
        let a = m.algebra().clone();
        let f = a.from_coefficients(&[c(0.3), c(-1.2)]).unwrap();
        let g = a.from_coefficients(&[c(2.0), c(0.7)]).unwrap();
        let direct: f64 = (0..2)
            .flat_map(|d| (0..2).map(move |e| (d, e)))
            .map(|(d, e)| {
                f.coefficients()[d].re
                    * g.coefficients()[e].re
                    * classical.raw_probability(&[d, e]).unwrap()
            })
            .sum();
        let v = nc_evaluate(&m, &[f, g]).unwrap();
        assert!((v - c(direct)).norm() < 1e-14);
    }

    #[test]
    fn perturbed_consistency_residual() {
        let base = embed_classical(&bernoulli(0.5).unwrap());
        let mut ops = base.op_per_basis().to_vec();
        ops[0][(0, 0)] += c(0.01);
        let m = NcOomModel::new(
            base.algebra().clone(),
            ops,
            base.init().clone(),
            base.eval().clone(),
        )
        .unwrap();
        let r = validate_ncoom(&m, 2, 10, 0).unwrap();
        assert!((r.consistency_residual - 0.01).abs() < 1e-15);
        assert!(!r.passed);
    }

    #[test]
    fn shape_errors() {
        let q = qubit();
        let err = NcOomModel::new(
            q,
            vec![DMatrix::zeros(1, 1); 3],
            DVector::from_element(1, c(1.0)),
            DVector::from_element(1, c(1.0)),
        )
        .unwrap_err();
        assert!(matches!(err, OomError::Shape { ref field, .. } if field == "op_per_basis"));
    }

    #[test]
    fn algebra_mismatch() {
        let m = embed_classical(&bernoulli(0.5).unwrap());
        let other = qubit().unit();
        assert!(matches!(
            nc_evaluate(&m, &[other]),
            Err(OomError::AlgebraMismatch { .. })
        ));
    }

    #[test]
    fn hankel_and_dimension() {
        let q = qubit();
        let p = product_state(&q, &diag(&q, 0.8, 0.2)).unwrap();
        let h = nc_hankel(&p, 1, 1).unwrap();
        assert_eq!(h.matrix[(0, 0)], c(1.0));
        assert_eq!(h.rank(DEFAULT_TOL_REL), 1);
        let r = nc_process_dimension(&p, 2, DEFAULT_TOL_REL).unwrap();
        assert_eq!(r.dimension, Dimension::Finite(1));

        let p2 = product_state(&q, &diag(&q, 0.3, 0.7)).unwrap();
        let mix = nc_mixture_direct_sum(&[(0.5, p.clone()), (0.5, p2)]).unwrap();
        let r = nc_process_dimension(&mix, 3, DEFAULT_TOL_REL).unwrap();
        assert_eq!(r.dimension, Dimension::Finite(2));
    }

    #[test]
    fn mixture_expectation() {
        let q = qubit();
        let p1 = product_state(&q, &diag(&q, 0.9, 0.1)).unwrap();
        let p2 = product_state(&q, &diag(&q, 0.3, 0.7)).unwrap();
        let mix = nc_mixture_direct_sum(&[(0.5, p1.clone()), (0.5, p2)]).unwrap();
        let z = diag(&q, 1.0, -1.0);
        assert!((nc_evaluate(&mix, std::slice::from_ref(&z)).unwrap() - c(0.2)).norm() < 1e-15);
        let single = nc_mixture_direct_sum(&[(1.0, p1.clone())]).unwrap();
        assert_eq!(
            nc_evaluate(&single, std::slice::from_ref(&z)).unwrap(),
            nc_evaluate(&p1, &[z]).unwrap()
        );
    }

    #[test]
    fn stationarity() {
        let q = qubit();
        let p = product_state(&q, &diag(&q, 0.8, 0.2)).unwrap();
        let r = nc_stationarity_check(&p, 3, 20, 0, OperatorOrder::Forward).unwrap();
        assert!(r.stationary);

        let alphabet = Alphabet::new(["A", "B"]).unwrap();
        let fixed = embed_classical(&hmm_to_oom(
            &cycle_hmm(&[0, 1], alphabet.clone(), Some(0)).unwrap(),
        ));
        let r = nc_stationarity_check(&fixed, 2, 20, 0, OperatorOrder::Forward).unwrap();
        assert!(!r.stationary);
        // the reversed convention is shift invariant by construction
        let r = nc_stationarity_check(&fixed, 2, 20, 0, OperatorOrder::Reversed).unwrap();
        assert!(r.stationary);

        let uniform = embed_classical(&hmm_to_oom(&cycle_hmm(&[0, 1], alphabet, None).unwrap()));
        assert!(
            nc_stationarity_check(&uniform, 3, 20, 0, OperatorOrder::Forward)
                .unwrap()
                .stationary
        );
    }

    #[test]
    fn order_matters_for_noncommuting_sequences() {
        let alphabet = Alphabet::new(["A", "B"]).unwrap();
        let fixed = embed_classical(&hmm_to_oom(&cycle_hmm(&[0, 1], alphabet, Some(0)).unwrap()));
        let a = fixed.algebra().basis_element(0).unwrap();
        let b = fixed.algebra().basis_element(1).unwrap();
        let fw =
            nc_evaluate_ordered(&fixed, &[a.clone(), b.clone()], OperatorOrder::Forward).unwrap();
        let rv = nc_evaluate_ordered(&fixed, &[a, b], OperatorOrder::Reversed).unwrap();
        assert_eq!(fw, c(1.0));
        assert_eq!(rv, c(0.0));
    }
}
