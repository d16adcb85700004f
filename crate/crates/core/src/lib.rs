//! Observable operator models and their non-commutative generalisation.
//!
//! * [`oom`]: classical OOMs, HMM import, mixtures, stationarity and sampling.
//! * [`dimension`]: Hankel blocks, process dimension, minimization, equivalence.
//! * [`causal`]: finite-horizon causal states and statistical complexity.
//! * [`algebra`]: finite-dimensional C*-algebras as direct sums of matrix blocks.
//! * [`ncoom`]: NC-OOMs generating states on the quasi-local algebra.
//! * [`experiments`]: reproducible checks of dimension additivity, lower
//!   semi-continuity and the causal-state bound.
//! * [`files`]: JSON model files and experiment specifications.

pub mod algebra;
pub mod causal;
pub mod dimension;
pub mod error;
pub mod experiments;
pub mod files;
pub mod ncoom;
pub mod oom;
pub mod processes;
pub mod word;

pub use algebra::{AlgebraElement, CStarAlgebra, C64};
pub use dimension::{Dimension, DimensionReport, HankelBlock};
pub use error::{OomError, Result};
pub use ncoom::NcOomModel;
pub use oom::{HmmModel, OomModel, ProcessOracle};
pub use word::{Alphabet, Word};
