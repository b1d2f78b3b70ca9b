//! N-curve extraction and metrics.
//!
//! A voltage source swept directly on the storage node QB, with the cell
//! biased for read (or for write, with the adjacent bit line grounded),
//! traces the current the cell exchanges with the probe. Its three zero
//! crossings A < B < C are the cell equilibria; the derived metrics are
//!
//! * `svnm = V_B - V_A` and `sinm` = positive current peak on [A, B],
//! * `wtv = V_C - V_B` and `wti` = negative current peak on [B, C],
//! * `spnm` / `wtp` = trapezoidal integrals of I dV over [A, B] and [B, C],
//! * `icrit_wr` = magnitude of the negative peak of a write-mode curve.

use crate::circuit::{apply_harness, build_cell, CellGeometry, Circuit, Harness, HarnessKind};
use crate::solver::{dc_sweep, Curve, Observable, SolverOptions};

use super::AnalysisError;

/// Default N-curve sweep step, volts.
pub const NCURVE_STEP: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NCurveMode {
    Read,
    Write,
}

/// Metric set of one N-curve; fields are absent when the curve lacks the
/// crossings they are defined on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NCurveMetrics {
    pub svnm: Option<f64>,
    pub sinm: Option<f64>,
    pub wtv: Option<f64>,
    pub wti: Option<f64>,
    pub spnm: Option<f64>,
    pub wtp: Option<f64>,
    pub icrit_wr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NCurveResult {
    pub samples: Curve,
    pub mode: NCurveMode,
    /// All zero crossings, ascending.
    pub crossings: Vec<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub metrics: NCurveMetrics,
    /// Set when fewer than three crossings were found.
    pub monostable: bool,
}

/// Zero crossings of the sampled curve by sign change and linear
/// interpolation.
pub fn zero_crossings(samples: &Curve) -> Vec<f64> {
    let pts = samples.points();
    let mut out: Vec<f64> = Vec::new();
    let mut push = |x: f64| {
        if !out.iter().any(|&u| (u - x).abs() < 1e-12) {
            out.push(x);
        }
    };
    for w in pts.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if y0 == 0.0 {
            push(x0);
        } else if y0 * y1 < 0.0 {
            push(x0 - y0 * (x1 - x0) / (y1 - y0));
        }
    }
    if pts[pts.len() - 1].1 == 0.0 {
        push(pts[pts.len() - 1].0);
    }
    out
}

/// Index of the extreme sample within `[x_lo, x_hi]`.
fn extreme_index(pts: &[(f64, f64)], x_lo: f64, x_hi: f64, maximum: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(x, y)) in pts.iter().enumerate() {
        if x < x_lo || x > x_hi {
            continue;
        }
        let better = match best {
            None => true,
            Some(j) => {
                if maximum {
                    y > pts[j].1
                } else {
                    y < pts[j].1
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Extreme value refined by a quadratic fit through the three samples
/// around the extreme grid point.
fn refined_extreme(pts: &[(f64, f64)], x_lo: f64, x_hi: f64, maximum: bool) -> Option<f64> {
    let i = extreme_index(pts, x_lo, x_hi, maximum)?;
    if i == 0 || i + 1 >= pts.len() {
        return Some(pts[i].1);
    }
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    let (x2, y2) = pts[i + 1];
    // Lagrange parabola vertex.
    let d0 = (x1 - x0) * (x2 - x0);
    let d1 = (x1 - x0) * (x2 - x1);
    let d2 = (x2 - x0) * (x2 - x1);
    let a = y0 / d0 - y1 / d1 + y2 / d2;
    if a.abs() < 1e-300 {
        return Some(y1);
    }
    let b = -y0 * (x1 + x2) / d0 + y1 * (x0 + x2) / d1 - y2 * (x0 + x1) / d2;
    let xv = -b / (2.0 * a);
    if xv < x0 || xv > x2 {
        return Some(y1);
    }
    let c = y0 * x1 * x2 / d0 - y1 * x0 * x2 / d1 + y2 * x0 * x1 / d2;
    let yv = (a * xv + b) * xv + c;
    Some(yv)
}

/// Trapezoidal integral of the curve over `[x_lo, x_hi]` with interpolated
/// end ordinates.
fn integral(samples: &Curve, x_lo: f64, x_hi: f64) -> f64 {
    let pts = samples.points();
    let mut xs: Vec<(f64, f64)> = vec![(x_lo, samples.interpolate(x_lo))];
    for &(x, y) in pts {
        if x > x_lo && x < x_hi {
            xs.push((x, y));
        }
    }
    xs.push((x_hi, samples.interpolate(x_hi)));
    xs.windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum()
}

/// Pick the equilibria A, B, C from the crossing list. B is the crossing
/// between the positive and negative current peaks; A and C are its
/// neighbors on either side.
fn classify_crossings(samples: &Curve, crossings: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    match crossings.len() {
        0 => (None, None, None),
        1 => (Some(crossings[0]), None, None),
        2 => (Some(crossings[0]), Some(crossings[1]), None),
        3 => (Some(crossings[0]), Some(crossings[1]), Some(crossings[2])),
        _ => {
            let pts = samples.points();
            let imax = extreme_index(pts, crossings[0], *crossings.last().unwrap(), true);
            let imin = extreme_index(pts, crossings[0], *crossings.last().unwrap(), false);
            match (imax, imin) {
                (Some(imax), Some(imin)) if pts[imax].0 < pts[imin].0 => {
                    let x_peak = pts[imax].0;
                    let x_valley = pts[imin].0;
                    let b = crossings.iter().copied().find(|&x| x > x_peak && x < x_valley);
                    let a = crossings.iter().copied().filter(|&x| x <= x_peak).last();
                    let c = crossings.iter().copied().find(|&x| x >= x_valley);
                    (a, b, c)
                }
                _ => (Some(crossings[0]), Some(crossings[1]), Some(crossings[2])),
            }
        }
    }
}

/// Compute the metric set of a sampled N-curve.
pub fn ncurve_metrics(samples: &Curve) -> NCurveMetrics {
    let crossings = zero_crossings(samples);
    let (a, b, c) = classify_crossings(samples, &crossings);
    metrics_from(samples, a, b, c)
}

fn metrics_from(samples: &Curve, a: Option<f64>, b: Option<f64>, c: Option<f64>) -> NCurveMetrics {
    let mut m = NCurveMetrics::default();
    let pts = samples.points();
    if let (Some(a), Some(b)) = (a, b) {
        m.svnm = Some(b - a);
        m.sinm = refined_extreme(pts, a, b, true);
        m.spnm = Some(integral(samples, a, b));
    }
    if let (Some(b), Some(c)) = (b, c) {
        m.wtv = Some(c - b);
        m.wti = refined_extreme(pts, b, c, false);
        m.wtp = Some(integral(samples, b, c));
    }
    m
}

/// Run an N-curve on the default-card cell for `geometry`.
///
/// The cell starts in the state storing a 0 at the probed node QB.
pub fn ncurve(
    geometry: &CellGeometry,
    mode: NCurveMode,
    vdd: f64,
    temperature: f64,
) -> Result<NCurveResult, AnalysisError> {
    let cell = build_cell(geometry)?;
    ncurve_from_cell(&cell, mode, vdd, temperature)
}

/// [`ncurve`] on a prepared (possibly mismatch-shifted) cell.
pub fn ncurve_from_cell(
    cell: &Circuit,
    mode: NCurveMode,
    vdd: f64,
    temperature: f64,
) -> Result<NCurveResult, AnalysisError> {
    let kind = match mode {
        NCurveMode::Read => HarnessKind::NCurveRead,
        NCurveMode::Write => HarnessKind::NCurveWrite,
    };
    let circuit = apply_harness(cell, &Harness { kind, vdd, temperature })?;
    let samples = dc_sweep(
        &circuit,
        "vin",
        0.0,
        vdd,
        NCURVE_STEP,
        &Observable::SourceCurrent("vin".to_string()),
        &[("q", vdd), ("qb", 0.0)],
        &SolverOptions::default(),
    )?;
    let crossings = zero_crossings(&samples);
    let (a, b, c) = classify_crossings(&samples, &crossings);
    let mut metrics = metrics_from(&samples, a, b, c);
    if mode == NCurveMode::Write {
        // Critical write current: magnitude of the curve's negative peak.
        let neg = refined_extreme(samples.points(), samples.first_x(), samples.last_x(), false);
        metrics.icrit_wr = neg.filter(|v| *v < 0.0).map(f64::abs);
    }
    let monostable = crossings.len() < 3;
    Ok(NCurveResult { samples, mode, crossings, a, b, c, metrics, monostable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Topology;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// I(V) = 1u (V - 0.1)(V - 0.45)(V - 0.8), sampled at 1 mV.
    fn cubic_curve() -> Curve {
        let pts: Vec<(f64, f64)> = (0..=1000)
            .map(|k| {
                let v = k as f64 * 1e-3;
                (v, 1e-6 * (v - 0.1) * (v - 0.45) * (v - 0.8))
            })
            .collect();
        Curve::new(pts).unwrap()
    }

    #[test]
    fn cubic_fixture_crossings_and_metrics() {
        let curve = cubic_curve();
        let crossings = zero_crossings(&curve);
        assert_eq!(crossings.len(), 3);
        let m = ncurve_metrics(&curve);
        assert_abs_diff_eq!(m.svnm.unwrap(), 0.350, epsilon = 1e-3);
        assert_abs_diff_eq!(m.wtv.unwrap(), 0.350, epsilon = 1e-3);
        // Analytic extrema of the cubic: roots of 3v^2 - 2.7v + 0.485 at
        // v = (2.7 -+ sqrt(1.47)) / 6, extreme value 1u * 0.016504...
        let disc = (2.7f64 * 2.7 - 4.0 * 3.0 * 0.485).sqrt();
        let v_peak = (2.7 - disc) / 6.0;
        let peak = 1e-6 * (v_peak - 0.1) * (v_peak - 0.45) * (v_peak - 0.8);
        assert_relative_eq!(m.sinm.unwrap(), peak, max_relative = 1e-2);
        let v_valley = (2.7 + disc) / 6.0;
        let valley = 1e-6 * (v_valley - 0.1) * (v_valley - 0.45) * (v_valley - 0.8);
        assert_relative_eq!(m.wti.unwrap(), valley, max_relative = 1e-2);
        // Integrals against the closed-form antiderivative.
        let prim = |v: f64| 1e-6 * (v.powi(4) / 4.0 - 0.45 * v.powi(3) + 0.2425 * v * v - 0.036 * v);
        let spnm_exact = prim(0.45) - prim(0.1);
        let wtp_exact = prim(0.8) - prim(0.45);
        assert_relative_eq!(m.spnm.unwrap(), spnm_exact, max_relative = 1e-2);
        assert_relative_eq!(m.wtp.unwrap(), wtp_exact, max_relative = 1e-2);
        assert!(m.spnm.unwrap() > 0.0 && m.wtp.unwrap() < 0.0);
    }

    #[test]
    fn single_crossing_is_monostable_with_absent_fields() {
        let pts: Vec<(f64, f64)> = (0..=100).map(|k| (k as f64 * 0.01, k as f64 * 0.01 - 0.5)).collect();
        let curve = Curve::new(pts).unwrap();
        let m = ncurve_metrics(&curve);
        assert!(m.svnm.is_none() && m.wtv.is_none() && m.sinm.is_none());
        assert_eq!(zero_crossings(&curve).len(), 1);
    }

    #[test]
    fn read_ncurve_of_default_6t() {
        let geometry = CellGeometry::new(Topology::SixT);
        let r = ncurve(&geometry, NCurveMode::Read, 1.0, 27.0).unwrap();
        assert_eq!(r.crossings.len(), 3, "crossings: {:?}", r.crossings);
        assert!(!r.monostable);
        // A sits at the read-disturbed low level of the undisturbed cell.
        let cell = crate::circuit::build_cell(&geometry).unwrap();
        let read = crate::circuit::apply_harness(
            &cell,
            &crate::circuit::Harness { kind: crate::circuit::HarnessKind::Read, vdd: 1.0, temperature: 27.0 },
        )
        .unwrap();
        let op = crate::solver::solve_op(&read, &crate::solver::SolverOptions::default(), &[("q", 1.0), ("qb", 0.0)])
            .unwrap();
        let disturbed = op.voltage("qb").unwrap();
        assert!((r.a.unwrap() - disturbed).abs() < 50e-3, "A = {:?} vs disturbed {disturbed}", r.a);
        let m = &r.metrics;
        assert!(m.svnm.unwrap() > 0.0);
        assert!(m.sinm.unwrap() > 0.0);
        assert!(m.wtv.unwrap() > 0.0);
        assert!(m.wti.unwrap() < 0.0);
        assert!(m.spnm.unwrap() > 0.0);
        assert!(m.wtp.unwrap() < 0.0);
        assert!(m.icrit_wr.is_none());
    }

    #[test]
    fn nine_t_read_assist_raises_sinm() {
        let six = ncurve(&CellGeometry::new(Topology::SixT), NCurveMode::Read, 1.0, 27.0).unwrap();
        let nine = ncurve(&CellGeometry::new(Topology::NineT), NCurveMode::Read, 1.0, 27.0).unwrap();
        assert!(nine.metrics.sinm.unwrap() > six.metrics.sinm.unwrap());
    }

    #[test]
    fn write_ncurve_has_negative_region_and_icrit() {
        let r = ncurve(&CellGeometry::new(Topology::SixT), NCurveMode::Write, 1.0, 27.0).unwrap();
        let has_negative = r.samples.points().iter().any(|p| p.1 < 0.0);
        assert!(has_negative);
        assert!(r.metrics.icrit_wr.unwrap() > 0.0);
    }
}
