//! Desk-scale SRAM stability laboratory.
//!
//! Builds 6T and 9T SRAM bit cells, wraps them in DC measurement harnesses
//! and solves operating points with modified nodal analysis plus damped
//! Newton-Raphson. On top of that sit the classical stability measurements:
//! butterfly-curve static noise margins with an independent inscribed-square
//! oracle, N-curve read/write metrics, standby leakage, parameter sweeps and
//! Monte Carlo threshold-mismatch runs.

pub mod analysis;
pub mod circuit;
pub mod device;
pub mod netlist;
pub mod solver;

pub use circuit::{
    apply_harness, build_cell, CellGeometry, CellMode, Circuit, CircuitError, Harness, HarnessKind,
    MosfetInstance, Resistor, Side, Topology, VoltageSource,
};
pub use device::{
    drain_current, thermal_voltage, threshold_voltage, BiasPoint, DeviceError, DeviceEval,
    DeviceParams, Polarity,
};
pub use netlist::{parse_netlist, serialize_netlist, NetlistError};
pub use solver::{
    assemble_system, dc_sweep, solve_op, Curve, DcSolution, Observable, SolverError, SolverOptions,
};
