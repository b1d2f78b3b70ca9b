//! Standby leakage measurement.

use crate::circuit::{apply_harness, build_cell, CellGeometry, Circuit, Harness, HarnessKind, AMMETER_SOURCE};
use crate::solver::{solve_op, SolverOptions};

use super::AnalysisError;

/// Standby supply leakage of a cell, amperes.
///
/// Word and bit lines are grounded, the supply stays up and feeds the cell
/// through a 0 V series ammeter source; the cell holds a 1 at Q. The
/// reported value is the current through the ammeter, positive toward the
/// cell.
pub fn leakage(geometry: &CellGeometry, vdd: f64, temperature: f64) -> Result<f64, AnalysisError> {
    let cell = build_cell(geometry)?;
    leakage_from_cell(&cell, vdd, temperature)
}

/// [`leakage`] on a prepared (possibly mismatch-shifted) cell.
pub fn leakage_from_cell(cell: &Circuit, vdd: f64, temperature: f64) -> Result<f64, AnalysisError> {
    let circuit = apply_harness(cell, &Harness { kind: HarnessKind::Leakage, vdd, temperature })?;
    let sol = solve_op(&circuit, &SolverOptions::default(), &[("q", vdd), ("qb", 0.0)])?;
    // `current` reports delivery out of the + terminal (the supply side);
    // the flow into the cell is its negation.
    Ok(-sol.current(AMMETER_SOURCE).expect("leakage harness always has an ammeter"))
}
