//! Parameter sweeps over geometry, supply and temperature.

use crate::circuit::{CellGeometry, CellMode, Circuit};

use super::butterfly::butterfly_from_cell;
use super::leakage::leakage_from_cell;
use super::ncurve::{ncurve_from_cell, NCurveMode};
use super::snm::snm_from_butterfly;
use super::AnalysisError;
use crate::circuit::build_cell;

/// Swept cell or environment parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    CellRatio,
    PullupRatio,
    Vdd,
    Temperature,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepParameter::CellRatio => write!(f, "cr"),
            SweepParameter::PullupRatio => write!(f, "pr"),
            SweepParameter::Vdd => write!(f, "vdd"),
            SweepParameter::Temperature => write!(f, "temp"),
        }
    }
}

/// Scalar stability metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Hsnm,
    Rsnm,
    Wsnm,
    Svnm,
    Sinm,
    Wtv,
    Wti,
    Spnm,
    Wtp,
    Leakage,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::Hsnm,
        Metric::Rsnm,
        Metric::Wsnm,
        Metric::Svnm,
        Metric::Sinm,
        Metric::Wtv,
        Metric::Wti,
        Metric::Spnm,
        Metric::Wtp,
        Metric::Leakage,
    ];

    pub fn unit(&self) -> &'static str {
        match self {
            Metric::Hsnm | Metric::Rsnm | Metric::Wsnm | Metric::Svnm | Metric::Wtv => "V",
            Metric::Sinm | Metric::Wti | Metric::Leakage => "A",
            Metric::Spnm | Metric::Wtp => "W",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Metric::Hsnm => "hsnm",
            Metric::Rsnm => "rsnm",
            Metric::Wsnm => "wsnm",
            Metric::Svnm => "svnm",
            Metric::Sinm => "sinm",
            Metric::Wtv => "wtv",
            Metric::Wti => "wti",
            Metric::Spnm => "spnm",
            Metric::Wtp => "wtp",
            Metric::Leakage => "leakage",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hsnm" => Ok(Metric::Hsnm),
            "rsnm" => Ok(Metric::Rsnm),
            "wsnm" => Ok(Metric::Wsnm),
            "svnm" => Ok(Metric::Svnm),
            "sinm" => Ok(Metric::Sinm),
            "wtv" => Ok(Metric::Wtv),
            "wti" => Ok(Metric::Wti),
            "spnm" => Ok(Metric::Spnm),
            "wtp" => Ok(Metric::Wtp),
            "leakage" => Ok(Metric::Leakage),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    /// Metric value, or the failure message for this row.
    pub metric: Result<f64, String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub metric: Metric,
    pub rows: Vec<SweepRow>,
}

/// Evaluate one metric on a prepared cell.
pub(crate) fn evaluate_metric_on_cell(
    cell: &Circuit,
    metric: Metric,
    vdd: f64,
    temperature: f64,
) -> Result<f64, AnalysisError> {
    match metric {
        Metric::Hsnm | Metric::Rsnm | Metric::Wsnm => {
            let mode = match metric {
                Metric::Hsnm => CellMode::Hold,
                Metric::Rsnm => CellMode::Read,
                _ => CellMode::Write0,
            };
            let b = butterfly_from_cell(cell, mode, vdd, temperature)?;
            Ok(snm_from_butterfly(&b)?.snm)
        }
        Metric::Leakage => leakage_from_cell(cell, vdd, temperature),
        _ => {
            let r = ncurve_from_cell(cell, NCurveMode::Read, vdd, temperature)?;
            let pick = |v: Option<f64>, name: &'static str| v.ok_or(AnalysisError::Monostable(name));
            match metric {
                Metric::Svnm => pick(r.metrics.svnm, "svnm"),
                Metric::Sinm => pick(r.metrics.sinm, "sinm"),
                Metric::Wtv => pick(r.metrics.wtv, "wtv"),
                Metric::Wti => pick(r.metrics.wti, "wti"),
                Metric::Spnm => pick(r.metrics.spnm, "spnm"),
                Metric::Wtp => pick(r.metrics.wtp, "wtp"),
                _ => unreachable!(),
            }
        }
    }
}

/// Evaluate one metric at a geometry and bias.
pub fn evaluate_metric(
    geometry: &CellGeometry,
    metric: Metric,
    vdd: f64,
    temperature: f64,
) -> Result<f64, AnalysisError> {
    let cell = build_cell(geometry)?;
    evaluate_metric_on_cell(&cell, metric, vdd, temperature)
}

/// Sweep a metric along one parameter. Rows stay in input order; a failing
/// row records its error instead of aborting the sweep.
pub fn parameter_sweep(
    geometry: &CellGeometry,
    parameter: SweepParameter,
    values: &[f64],
    metric: Metric,
    vdd: f64,
    temperature: f64,
) -> Result<SweepTable, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::InvalidRequest("sweep needs at least one value".to_string()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut geom = *geometry;
        let (vdd, temperature) = match parameter {
            SweepParameter::CellRatio => {
                geom.cell_ratio = value;
                (vdd, temperature)
            }
            SweepParameter::PullupRatio => {
                geom.pullup_ratio = value;
                (vdd, temperature)
            }
            SweepParameter::Vdd => (value, temperature),
            SweepParameter::Temperature => (vdd, value),
        };
        let metric_value = evaluate_metric(&geom, metric, vdd, temperature).map_err(|e| e.to_string());
        rows.push(SweepRow { value, metric: metric_value });
    }
    Ok(SweepTable { parameter, metric, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Topology;

    fn values(table: &SweepTable) -> Vec<f64> {
        table.rows.iter().map(|r| *r.metric.as_ref().unwrap()).collect()
    }

    #[test]
    fn rsnm_increases_with_cell_ratio() {
        let g = CellGeometry::new(Topology::SixT);
        let t = parameter_sweep(&g, SweepParameter::CellRatio, &[0.5, 1.0, 1.5, 2.0, 2.5], Metric::Rsnm, 1.0, 27.0)
            .unwrap();
        let v = values(&t);
        assert!(v.windows(2).all(|w| w[1] > w[0]), "rsnm not increasing: {v:?}");
    }

    #[test]
    fn wsnm_decreases_with_pullup_ratio() {
        let g = CellGeometry::new(Topology::SixT);
        let t = parameter_sweep(&g, SweepParameter::PullupRatio, &[0.5, 1.0, 1.5, 2.0], Metric::Wsnm, 1.0, 27.0)
            .unwrap();
        let v = values(&t);
        assert!(v.windows(2).all(|w| w[1] < w[0]), "wsnm not decreasing: {v:?}");
    }

    #[test]
    fn hsnm_degrades_as_supply_drops() {
        let g = CellGeometry::new(Topology::SixT);
        let t = parameter_sweep(&g, SweepParameter::Vdd, &[1.0, 0.8, 0.6, 0.4], Metric::Hsnm, 1.0, 27.0).unwrap();
        let v = values(&t);
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "hsnm not nonincreasing: {v:?}");
    }

    #[test]
    fn failed_rows_do_not_abort() {
        let g = CellGeometry::new(Topology::SixT);
        // A zero cell ratio is an invalid geometry; its row must carry the
        // error while the other rows succeed.
        let t = parameter_sweep(&g, SweepParameter::CellRatio, &[0.0, 1.5], Metric::Rsnm, 1.0, 27.0).unwrap();
        assert!(t.rows[0].metric.is_err());
        assert!(t.rows[1].metric.is_ok());
    }
}
