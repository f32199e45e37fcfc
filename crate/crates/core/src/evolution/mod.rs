//! Time evolution of the full system on a truncated half line.

mod grid;
mod init;
mod run;
mod scheme;

pub use grid::{Grid, MIN_CELLS};
pub use init::{bump_center, bump_shape, initialize, profile_on_grid, InitKind, InitSpec};
pub use run::{
    balance_report, balance_report_analytic, run, ConservationReport, Failure, RunControl, Snapshot,
    StepRecord, Trajectory,
};
pub use scheme::{cfl_dt, Evolution, SourceFn, StepOutcome};
pub use state::FlowState;

mod state;
