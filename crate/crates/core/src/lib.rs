//! Distribution-valued semimartingales over the Hermite model of the
//! Schwartz space: stochastic integrals of test-function and operator-valued
//! integrands, the Itô formula for convolutions of Dirac processes, and
//! Monte-Carlo estimators of the UCP and Émery topologies.
//!
//! ```
//! use semimart_core::hermite::{HermiteBasis, Distribution, TestFunction};
//!
//! let basis = HermiteBasis::new(16, 48).unwrap();
//! let t = Distribution::basis(16, 0).unwrap();
//! let phi = TestFunction::basis(16, 0).unwrap();
//! let v = basis.conv_pair(&t, 1.0, &phi).unwrap();
//! assert!((v - (-0.25f64).exp()).abs() < 1e-10);
//! ```

pub mod diagnostics;
pub mod error;
pub mod hermite;
pub mod integrate;
pub mod ito;
pub mod metrics;
pub mod paths;
pub mod trajectory;

pub use error::{Error, Result};
pub use hermite::{pair, Distribution, HermiteBasis, ShiftKernel, TestFunction};
pub use integrate::scalar::{
    CylindricalSemimartingale, ElementaryScalarIntegrand, ElementaryTestFnIntegrand, Side,
    StoppingRule,
};
pub use integrate::vector::{DistributionPath, TensorIntegrand};
pub use ito::{ConvolvedDirac, DiracSemimartingale, ItoTerms};
pub use paths::{CadlagPath, RandomPartition, SemimartingaleSpec};
pub use trajectory::{History, ScalarPath, Trajectory};
