//! Stationary boundary-layer solutions: reduction to a planar first-order
//! system, linearization at the far field, forward integration from the
//! boundary data, decay verification, and existence scans.

mod decay;
mod integrator;
mod profile;
mod reduced;
mod scan;

pub use decay::{
    fit_algebraic, fit_decay, fit_exponential, least_squares_line, verify_decay, DecayFit, DecayModel,
    DecayReport,
};
pub use integrator::{DormandPrince, Halt, Tolerances};
pub(crate) use profile::finite_difference;
pub use profile::{
    backsubstitution_residual, default_domain_length, solve_profile, BacksubResidual, ProfileGrid,
    SolverOptions, StationaryProfile,
};
pub use reduced::{
    eigen_data_lenient, linearize_at_infinity, reduce, EigenData, ReducedOde, SINGULAR_DET_TOL,
};
pub use scan::{scan_region, CellOutcome, ExistenceMap, ScanBox};
