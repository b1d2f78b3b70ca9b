//! Stability measurement battery: transfer curves, butterfly SNM, N-curve
//! metrics, standby leakage, parameter sweeps and Monte Carlo mismatch.

mod butterfly;
mod leakage;
mod montecarlo;
mod ncurve;
mod snm;
mod sweep;

pub use butterfly::{butterfly, extract_vtc, extract_vtc_from_cell, ButterflyResult, VTC_STEP};
pub use leakage::{leakage, leakage_from_cell};
pub use montecarlo::{draw_vto_shifts, monte_carlo, McResult, McSample, McSpec, MetricStats};
pub use ncurve::{
    ncurve, ncurve_from_cell, ncurve_metrics, zero_crossings, NCurveMetrics, NCurveMode,
    NCurveResult, NCURVE_STEP,
};
pub use snm::{snm_bruteforce_oracle, snm_from_butterfly, SnmResult, Square};
pub use sweep::{evaluate_metric, parameter_sweep, Metric, SweepParameter, SweepRow, SweepTable};

use thiserror::Error;

use crate::circuit::CircuitError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("expected {expected} butterfly intersections, found {found}")]
    IntersectionCount { expected: usize, found: usize },
    #[error("N-curve is monostable; '{0}' is undefined")]
    Monostable(&'static str),
    #[error("oracle grid {0} V is too coarse; must be <= 2 mV")]
    InvalidGrid(f64),
    #[error("invalid analysis request: {0}")]
    InvalidRequest(String),
}
