//! Numerical laboratory for `sigma_k` Hessian equations.
//!
//! * [`symm`]: elementary symmetric functions of eigenvalues, their spectral
//!   derivatives, and a Jacobi eigensolver for small Hermitian matrices.
//! * [`cone`]: sampling in the Garding cone under a semi-convexity floor,
//!   concavity-inequality margins, threshold location and adversarial search.
//! * [`solve`]: the complex Hessian equation `sigma_k(chi[u]) = psi(z, Du, u)`
//!   on a flat periodic torus, solved by damped Newton iteration.
//! * [`monitor`]: maximum-principle diagnostics on a computed solution.
//! * [`io`]: snapshot, config and report formats.

pub mod cone;
pub mod error;
pub mod io;
pub mod monitor;
pub mod oracle;
pub mod solve;
pub mod symm;
pub mod verify;

pub use error::{Error, Result};
