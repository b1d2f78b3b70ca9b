//! Feedback-severed transfer curves and butterfly composition.

use crate::circuit::{apply_harness, build_cell, CellGeometry, CellMode, Circuit, Harness, HarnessKind, Side};
use crate::solver::{dc_sweep, Curve, Observable, SolverOptions};

use super::AnalysisError;

/// Default sweep step for transfer curves, volts.
pub const VTC_STEP: f64 = 5e-3;

/// Both inverter transfer curves of a cell under one bias mode.
///
/// `vtc1` maps the swept input of inverter 1 to its output Q; `vtc2` does
/// the same for inverter 2 (input on the Q gates, output QB). Plotted in a
/// common frame the second curve is mirrored about the diagonal; the SNM
/// routines apply that mirror internally, and [`Self::mirrored_vtc2_points`]
/// provides it as a point list for plotting.
#[derive(Debug, Clone)]
pub struct ButterflyResult {
    pub vtc1: Curve,
    pub vtc2: Curve,
    pub mode: CellMode,
    pub vdd: f64,
}

/// Extract one inverter transfer curve under the given mode clamps.
///
/// Builds the cell, applies the `vtc(mode, side)` harness (which severs the
/// regenerative loop by moving the probed inverter pair's gates to the swept
/// source) and sweeps the input across the full supply range.
pub fn extract_vtc(
    geometry: &CellGeometry,
    mode: CellMode,
    side: Side,
    vdd: f64,
    temperature: f64,
) -> Result<Curve, AnalysisError> {
    let cell = build_cell(geometry)?;
    extract_vtc_from_cell(&cell, mode, side, vdd, temperature)
}

/// [`extract_vtc`] on a prepared (possibly mismatch-shifted) cell.
pub fn extract_vtc_from_cell(
    cell: &Circuit,
    mode: CellMode,
    side: Side,
    vdd: f64,
    temperature: f64,
) -> Result<Curve, AnalysisError> {
    let harness = Harness { kind: HarnessKind::Vtc { mode, side }, vdd, temperature };
    let circuit = apply_harness(cell, &harness)?;
    let output = match side {
        Side::One => "q",
        Side::Two => "qb",
    };
    // Start the sweep from the state that puts the output high; with the
    // loop severed the curve is single-valued and continuation tracks it.
    let guess: &[(&str, f64)] = match side {
        Side::One => &[("q", 1.0), ("qb", 0.0)],
        Side::Two => &[("q", 0.0), ("qb", 1.0)],
    };
    let scaled_guess: Vec<(&str, f64)> = guess.iter().map(|(n, v)| (*n, v * vdd)).collect();
    let curve = dc_sweep(
        &circuit,
        "vin",
        0.0,
        vdd,
        VTC_STEP,
        &Observable::NetVoltage(output.to_string()),
        &scaled_guess,
        &SolverOptions::default(),
    )?;
    Ok(curve)
}

/// Extract both transfer curves of a cell in one mode.
pub fn butterfly(
    geometry: &CellGeometry,
    mode: CellMode,
    vdd: f64,
    temperature: f64,
) -> Result<ButterflyResult, AnalysisError> {
    let cell = build_cell(geometry)?;
    butterfly_from_cell(&cell, mode, vdd, temperature)
}

pub(crate) fn butterfly_from_cell(
    cell: &Circuit,
    mode: CellMode,
    vdd: f64,
    temperature: f64,
) -> Result<ButterflyResult, AnalysisError> {
    let vtc1 = extract_vtc_from_cell(cell, mode, Side::One, vdd, temperature)?;
    let vtc2 = extract_vtc_from_cell(cell, mode, Side::Two, vdd, temperature)?;
    Ok(ButterflyResult { vtc1, vtc2, mode, vdd })
}

impl ButterflyResult {
    /// The second curve mirrored into the first curve's frame (axis swap),
    /// ordered along the original sweep.
    pub fn mirrored_vtc2_points(&self) -> Vec<(f64, f64)> {
        self.vtc2.points().iter().map(|&(x, y)| (y, x)).collect()
    }

    /// Butterfly intersection points in the frame of `vtc1`.
    ///
    /// An intersection is a fixed point of the composed map
    /// `g(f(v)) = v`; bisection on the sign of `g(f(v)) - v` localizes each
    /// one. A functional bistable butterfly yields three.
    pub fn intersections(&self) -> Vec<(f64, f64)> {
        let f = |v: f64| self.vtc1.interpolate(v);
        let h = |v: f64| self.vtc2.interpolate(f(v)) - v;
        let xs: Vec<f64> = self.vtc1.points().iter().map(|p| p.0).collect();
        let mut found: Vec<f64> = Vec::new();
        let mut push = |v: f64| {
            if !found.iter().any(|&u| (u - v).abs() < 1e-9) {
                found.push(v);
            }
        };
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ha, hb) = (h(a), h(b));
            if ha == 0.0 {
                push(a);
                continue;
            }
            if ha * hb < 0.0 {
                // Bisection; h is piecewise linear so this converges fast.
                let (mut lo, mut hi) = (a, b);
                let mut hlo = ha;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let hm = h(mid);
                    if hm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if hlo * hm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        hlo = hm;
                    }
                }
                push(0.5 * (lo + hi));
            }
        }
        let last = *xs.last().unwrap();
        if h(last) == 0.0 {
            push(last);
        }
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        found.into_iter().map(|v| (v, f(v))).collect()
    }
}
