//! Numerical laboratory for large deviations of unbounded observables on
//! expanding interval maps.

pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod exact_kernels;
pub mod observables;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod tower;

pub use dynamics::{MapKind, MapSpec, OrbitStream};
pub use error::{LdError, Result};
pub use observables::{Observable, ObservableKind, TruncationSchedule};
