//! Monte Carlo threshold-voltage mismatch.
//!
//! Each transistor of the cell receives an independent Gaussian `vto` shift
//! with sigma = avt / sqrt(W L) (Pelgrom scaling). Every sample owns a
//! dedicated counter-mode RNG stream derived from the run seed and the
//! sample index, so results are bit-identical no matter how samples are
//! distributed over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::circuit::{build_cell, CellGeometry, Circuit};

use super::butterfly::butterfly_from_cell;
use super::ncurve::{ncurve_from_cell, NCurveMode};
use super::snm::snm_from_butterfly;
use super::sweep::{evaluate_metric_on_cell, Metric};
use super::AnalysisError;

/// Monte Carlo run description.
#[derive(Debug, Clone, PartialEq)]
pub struct McSpec {
    pub geometry: CellGeometry,
    pub n_samples: usize,
    pub seed: u64,
    /// Pelgrom coefficient in V*m (1 mV*um = 1e-9 V*m).
    pub avt: f64,
    pub metrics: Vec<Metric>,
    pub vdd: f64,
    pub temperature: f64,
    /// Read failure threshold: a sample fails read when rsnm <= this.
    pub rsnm_min: f64,
    /// Write failure threshold: a sample fails write when wtp >= this.
    pub wtp_max: f64,
}

impl McSpec {
    pub fn new(geometry: CellGeometry) -> Self {
        McSpec {
            geometry,
            n_samples: 100,
            seed: 1,
            avt: 2.5e-9,
            metrics: vec![Metric::Rsnm],
            vdd: 1.0,
            temperature: 27.0,
            rsnm_min: 0.0,
            wtp_max: 0.0,
        }
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        if self.n_samples < 1 {
            return Err(AnalysisError::InvalidRequest("n_samples must be >= 1".to_string()));
        }
        if self.avt < 0.0 {
            return Err(AnalysisError::InvalidRequest("avt must be >= 0".to_string()));
        }
        self.geometry.validate()?;
        Ok(())
    }
}

/// One evaluated mismatch sample.
#[derive(Debug, Clone, PartialEq)]
pub struct McSample {
    pub index: u64,
    /// Per-transistor vto shifts in cell declaration order.
    pub shifts: Vec<f64>,
    /// Metric values parallel to `McSpec::metrics`; `None` when the sample
    /// could not produce the metric.
    pub metrics: Vec<Option<f64>>,
    pub read_fail: bool,
    pub write_fail: bool,
    pub solver_fail: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricStats {
    pub metric: Metric,
    /// Samples that produced a value.
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub samples: Vec<McSample>,
    pub stats: Vec<MetricStats>,
    pub n_samples: usize,
    pub read_failures: usize,
    pub write_failures: usize,
    pub solver_failures: usize,
}

impl McResult {
    pub fn read_failure_rate(&self) -> f64 {
        self.read_failures as f64 / self.n_samples as f64
    }

    pub fn write_failure_rate(&self) -> f64 {
        self.write_failures as f64 / self.n_samples as f64
    }
}

/// Draw the per-transistor vto shifts of one sample, in the cell's
/// transistor declaration order. Pure in (spec, index).
pub fn draw_vto_shifts(spec: &McSpec, index: u64) -> Result<Vec<(String, f64)>, AnalysisError> {
    let cell = build_cell(&spec.geometry)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index.wrapping_add(1));
    let mut out = Vec::with_capacity(cell.mosfets.len());
    for m in &cell.mosfets {
        let sigma = spec.avt / (m.w * m.l).sqrt();
        let shift = if sigma > 0.0 {
            Normal::new(0.0, sigma)
                .expect("sigma is finite and positive")
                .sample(&mut rng)
        } else {
            0.0
        };
        out.push((m.name.clone(), shift));
    }
    Ok(out)
}

/// Clone the cell with each transistor bound to a private model card whose
/// vto carries that transistor's shift.
fn shifted_cell(geometry: &CellGeometry, shifts: &[(String, f64)]) -> Result<Circuit, AnalysisError> {
    let mut cell = build_cell(geometry)?;
    for (name, shift) in shifts {
        let m = cell
            .mosfets
            .iter()
            .position(|m| &m.name == name)
            .expect("shift list comes from the same builder");
        let base = cell.mosfets[m].model.clone();
        let mut card = cell.models[&base].clone();
        card.vto += shift;
        let private = format!("{base}-{name}");
        cell.add_model(&private, card);
        cell.mosfets[m].model = private;
    }
    Ok(cell)
}

fn evaluate_sample(spec: &McSpec, index: u64) -> Result<McSample, AnalysisError> {
    let shifts = draw_vto_shifts(spec, index)?;
    let cell = shifted_cell(&spec.geometry, &shifts)?;
    let vdd = spec.vdd;
    let t = spec.temperature;

    let mut read_fail = false;
    let mut write_fail = false;
    let mut solver_fail = false;

    // Read stability: butterfly SNM plus N-curve crossing count.
    let rsnm = match butterfly_from_cell(&cell, crate::circuit::CellMode::Read, vdd, t) {
        Ok(b) => match snm_from_butterfly(&b) {
            Ok(s) => Some(s.snm),
            Err(AnalysisError::IntersectionCount { .. }) => {
                read_fail = true;
                None
            }
            Err(e) => return Err(e),
        },
        Err(AnalysisError::Solver(_)) => {
            solver_fail = true;
            read_fail = true;
            None
        }
        Err(e) => return Err(e),
    };
    if let Some(r) = rsnm {
        if r <= spec.rsnm_min {
            read_fail = true;
        }
    }

    let read_curve = match ncurve_from_cell(&cell, NCurveMode::Read, vdd, t) {
        Ok(r) => {
            if r.crossings.len() < 3 {
                read_fail = true;
            }
            match r.metrics.wtp {
                Some(w) if w < spec.wtp_max => {}
                _ => write_fail = true,
            }
            Some(r)
        }
        Err(AnalysisError::Solver(_)) => {
            solver_fail = true;
            read_fail = true;
            write_fail = true;
            None
        }
        Err(e) => return Err(e),
    };

    let mut metric_values = Vec::with_capacity(spec.metrics.len());
    for metric in &spec.metrics {
        let value = match metric {
            Metric::Rsnm => rsnm,
            Metric::Svnm => read_curve.as_ref().and_then(|r| r.metrics.svnm),
            Metric::Sinm => read_curve.as_ref().and_then(|r| r.metrics.sinm),
            Metric::Wtv => read_curve.as_ref().and_then(|r| r.metrics.wtv),
            Metric::Wti => read_curve.as_ref().and_then(|r| r.metrics.wti),
            Metric::Spnm => read_curve.as_ref().and_then(|r| r.metrics.spnm),
            Metric::Wtp => read_curve.as_ref().and_then(|r| r.metrics.wtp),
            _ => match evaluate_metric_on_cell(&cell, *metric, vdd, t) {
                Ok(v) => Some(v),
                Err(AnalysisError::Solver(_)) | Err(AnalysisError::IntersectionCount { .. }) => {
                    solver_fail |= matches!(metric, Metric::Hsnm | Metric::Wsnm | Metric::Leakage);
                    None
                }
                Err(e) => return Err(e),
            },
        };
        metric_values.push(value);
    }

    Ok(McSample {
        index,
        shifts: shifts.into_iter().map(|(_, s)| s).collect(),
        metrics: metric_values,
        read_fail,
        write_fail,
        solver_fail,
    })
}

/// Run the Monte Carlo. `threads` controls worker parallelism only; the
/// result is bit-identical for any thread count.
pub fn monte_carlo(spec: &McSpec, threads: usize) -> Result<McResult, AnalysisError> {
    spec.validate()?;
    let n = spec.n_samples;
    let threads = threads.max(1).min(n);
    let mut slots: Vec<Option<Result<McSample, AnalysisError>>> = Vec::new();
    slots.resize_with(n, || None);
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        for (ci, slice) in slots.chunks_mut(chunk).enumerate() {
            let base = ci * chunk;
            scope.spawn(move || {
                for (j, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(evaluate_sample(spec, (base + j) as u64));
                }
            });
        }
    });
    let mut samples = Vec::with_capacity(n);
    for slot in slots {
        samples.push(slot.expect("every chunk was evaluated")?);
    }

    let mut stats = Vec::with_capacity(spec.metrics.len());
    for (k, metric) in spec.metrics.iter().enumerate() {
        let values: Vec<f64> = samples.iter().filter_map(|s| s.metrics[k]).collect();
        let n_ok = values.len();
        let (mean, std_dev, min, max) = if n_ok == 0 {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = values.iter().sum::<f64>() / n_ok as f64;
            let var = if n_ok > 1 {
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_ok - 1) as f64
            } else {
                0.0
            };
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (mean, var.sqrt(), min, max)
        };
        stats.push(MetricStats { metric: *metric, n: n_ok, mean, std_dev, min, max });
    }

    Ok(McResult {
        read_failures: samples.iter().filter(|s| s.read_fail).count(),
        write_failures: samples.iter().filter(|s| s.write_fail).count(),
        solver_failures: samples.iter().filter(|s| s.solver_fail).count(),
        n_samples: n,
        samples,
        stats,
    })
}
