//! Exact energy statistics of the two-dimensional Ising model on a `2N x 2M`
//! cylinder: periodic in the horizontal direction, free in the vertical one.
//!
//! The crate evaluates the closed-form partition function as a sum over the
//! spectral angles `theta = pi (2n - 1) / (2N)`, its decomposition
//! `ln Z = L1 - L2 + L3 + L4`, the energy moment generating function, and the
//! quantities that control the central limit theorem for the energy at the
//! critical point. Brute-force enumeration ([`oracle`]) and Monte Carlo
//! sampling ([`montecarlo`]) provide independent cross-checks.
//!
//! ```
//! use isingcyl::{critical_beta, partition, LatticeSpec};
//!
//! let spec = LatticeSpec::new(1, 1).unwrap();
//! let lp = partition::log_partition(spec, critical_beta(), false).unwrap();
//! let b = critical_beta();
//! let exact = (2.0 * (6.0 * b).exp() + 2.0 * (2.0 * b).exp() + 8.0
//!     + 2.0 * (-2.0 * b).exp() + 2.0 * (-6.0 * b).exp()).ln();
//! assert!((lp.ln_z - exact).abs() < 1e-12);
//! ```

pub mod asymptotics;
mod error;
mod lattice;
pub mod montecarlo;
pub mod oracle;
pub mod partition;
pub mod spectrum;
pub mod sum;

pub use error::{Error, Result};
pub use lattice::{critical_beta, LatticeSpec, BETA_MAX, BETA_MIN};
pub use partition::{EnergyMoments, LogPartition};
pub use spectrum::{SpectrumPoint, ThetaGrid};
pub use sum::{Precision, SumOptions};
