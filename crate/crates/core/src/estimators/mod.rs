//! Monte Carlo tail estimation, exponent fitting, the lower-bound
//! certificate, window maxima, the obstruction checker and closed-form bounds.

pub mod bounds;
pub mod fit;
pub mod lower_bound;
pub mod obstruction;
pub mod path;
pub mod tail;
pub mod windows;

pub use bounds::{
    azuma_bound, partial_mgf_integral, pressure_diagnostics, schindler_bound, PressureReport,
};
pub use fit::{fit_exponent, fit_exponent_pairs, ExponentFit};
pub use lower_bound::{lower_bound_construction, lower_bound_parameters, LowerBoundCertificate};
pub use obstruction::{
    expected_hits, obstruction_check, obstruction_threshold, Exceedance, ObstructionReport,
};
pub use path::PathValues;
pub use tail::{
    tail_mc, tail_mc_grid, tail_mc_multi, tail_mc_shared, wilson_interval, Channel, Side, TailEstimate, TailQuery,
    TailTarget,
};
pub use windows::{erdos_renyi_windows, er_window_length, exponential_rate, max_window_average, WindowStat};
