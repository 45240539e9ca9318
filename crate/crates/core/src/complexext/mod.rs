//! Complex-time extension of the lifted system by a λ-perturbed contraction.

mod continuation;
mod contraction;
mod extend;
mod orbit;
mod quadrature;
mod radius;
mod taylor;

pub use continuation::{
    default_lambda0, lambda_continuation, lambda_schedule, ContinuationConfig, ContinuationResult,
    StageRecord, CONTRACTION_SAFETY,
};
pub use contraction::{
    estimate_lipschitz, evaluate_orbit, picard_apply, solve_fixed_point, ContractionConfig,
    ConvergenceRecord, LipschitzEstimate, LIPSCHITZ_SAFETY,
};
pub use extend::{
    extend_orbit, ContinuationSummary, ExtendConfig, ExtendReport, Extension, TaylorSummary,
};
pub use orbit::{ComplexOrbit, DiskGrid};
pub use quadrature::{gauss_legendre, CompositeRule};
pub use radius::{
    block_gaps, default_margin, disk_radius_report, estimate_disk_radius, BlockRadius,
    DiskRadiusReport,
};
pub use taylor::{
    fit_radius, taylor_coefficients, taylor_from_samples, RadiusFit, TaylorSeries, COEFF_FLOOR,
};
