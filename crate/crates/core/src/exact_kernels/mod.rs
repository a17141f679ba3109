//! Deterministic kernels: the doubling-map transfer operator, decay
//! measurements, the martingale decomposition and the cylinder DP.

pub mod cylinder;
pub mod martingale;
pub mod transfer;

pub use cylinder::{cylinder_dp, cylinder_dp_with_budget, SumDistribution};
pub use martingale::{coboundary_residual, martingale_decompose, MartingaleParts};
pub use transfer::{
    apply_transfer, autocorrelation, autocorrelation_curve, autocorrelation_fn, fit_log_slope,
    lp_decay_curve, sup_decay_curve, transfer_lp_norm, transfer_sup_norm, DecayCurve,
    MAX_CURVE_DEPTH, MAX_TRANSFER_DEPTH,
};
