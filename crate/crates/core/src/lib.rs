//! Exact p-adic engine for Hilbert and elliptic q-expansions over real
//! quadratic fields: Gauss-Manin iteration, overconvergent projection, slope
//! projectors and the special values of the twisted triple product p-adic
//! L-function together with its Gross-Zagier identities.

pub mod error;
pub mod field;
pub mod forms;
pub mod hecke;
pub mod io;
pub mod lvalue;
pub mod nearly_oc;
pub mod padic;
pub mod qexp;
pub mod suites;
pub mod report;
pub mod weights;

pub use error::{Error, PadicError, Result};
