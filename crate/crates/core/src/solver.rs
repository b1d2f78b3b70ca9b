//! DC operating-point solver.
//!
//! Modified nodal analysis over the circuit's non-ground nets augmented with
//! one branch-current unknown per voltage source, solved by damped
//! Newton-Raphson with dense LU (partial pivoting). Convergence escalates in
//! a fixed order: plain Newton, then gmin stepping along a decreasing
//! conductance schedule, then source stepping. Sweeps reuse each point's
//! solution as the next point's initial guess (continuation).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError};
use crate::device::{drain_current, BiasPoint, DeviceParams};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no convergence: best residual {best_residual:e} A after {iterations} iterations; trace: {}", trace.join("; "))]
    Convergence {
        best_residual: f64,
        iterations: usize,
        trace: Vec<String>,
    },
    #[error("singular system matrix")]
    Singular,
    #[error("unknown net '{0}'")]
    UnknownNet(String),
    #[error("unknown source '{0}'")]
    UnknownSource(String),
    #[error("sweep of '{source}' failed at {value} V: {cause}")]
    SweepPoint {
        source: String,
        value: f64,
        #[source]
        cause: Box<SolverError>,
    },
    #[error("bad sweep: {0}")]
    BadSweep(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Newton and homotopy controls.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// KCL residual bound, amperes.
    pub abstol: f64,
    /// Newton step bound, volts.
    pub vtol: f64,
    pub max_iterations: usize,
    /// Largest node-voltage move per damped Newton step, volts.
    pub damping: f64,
    /// Strictly decreasing gmin stepping schedule, siemens.
    pub gmin_schedule: Vec<f64>,
    /// Number of source-stepping increments.
    pub source_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            abstol: 1e-9,
            vtol: 1e-6,
            max_iterations: 200,
            damping: 0.3,
            gmin_schedule: (3..=12).map(|k| 10f64.powi(-k)).collect(),
            source_steps: 10,
        }
    }
}

/// Strategy that produced a converged solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStrategy {
    Newton,
    GminStepping,
    SourceStepping,
}

impl std::fmt::Display for SolveStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStrategy::Newton => write!(f, "newton"),
            SolveStrategy::GminStepping => write!(f, "gmin-stepping"),
            SolveStrategy::SourceStepping => write!(f, "source-stepping"),
        }
    }
}

/// Converged operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct DcSolution {
    /// Node voltages by net name; includes ground at exactly 0.
    pub voltages: BTreeMap<String, f64>,
    /// Source currents by name, positive out of the + terminal.
    pub source_currents: BTreeMap<String, f64>,
    /// Newton update steps applied across all strategies.
    pub iterations: usize,
    /// Final gmin-free KCL residual, amperes.
    pub residual: f64,
    pub strategy: SolveStrategy,
}

impl DcSolution {
    pub fn voltage(&self, net: &str) -> Option<f64> {
        self.voltages.get(&net.to_ascii_lowercase()).copied()
    }

    pub fn current(&self, source: &str) -> Option<f64> {
        self.source_currents.get(&source.to_ascii_lowercase()).copied()
    }
}

/// Quantity recorded on the y-axis of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    NetVoltage(String),
    /// Current delivered by the named source, positive out of +.
    SourceCurrent(String),
}

/// Ordered (x, y) samples with strictly increasing x.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, SolverError> {
        if points.len() < 2 {
            return Err(SolverError::BadSweep(format!("curve needs >= 2 points, got {}", points.len())));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(SolverError::BadSweep("curve x values must strictly increase".to_string()));
        }
        Ok(Curve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first_x(&self) -> f64 {
        self.points[0].0
    }

    pub fn last_x(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Piecewise-linear interpolation; clamps outside the x range.
    pub fn interpolate(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x <= pts[0].0 {
            return pts[0].1;
        }
        if x >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        // Binary search for the bracketing segment.
        let mut lo = 0;
        let mut hi = pts.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if pts[mid].0 <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (x0, y0) = pts[lo];
        let (x1, y1) = pts[hi];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Circuit compiled to index form for fast repeated assembly.
/// Unknown ordering: non-ground nets in declaration order, then one branch
/// current per voltage source in declaration order.
struct System {
    /// Non-ground net names in unknown order.
    net_names: Vec<String>,
    n_nets: usize,
    mosfets: Vec<ResolvedMosfet>,
    resistors: Vec<ResolvedTwoTerminal>,
    sources: Vec<ResolvedSource>,
    temperature: f64,
}

struct ResolvedMosfet {
    drain: Option<usize>,
    gate: Option<usize>,
    source: Option<usize>,
    bulk: Option<usize>,
    params: DeviceParams,
    w: f64,
    l: f64,
}

struct ResolvedTwoTerminal {
    pos: Option<usize>,
    neg: Option<usize>,
    conductance: f64,
}

struct ResolvedSource {
    name: String,
    pos: Option<usize>,
    neg: Option<usize>,
    volts: f64,
}

impl System {
    fn new(circuit: &Circuit) -> Result<Self, SolverError> {
        let mut net_names = Vec::new();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for net in circuit.nets() {
            if net != "0" {
                index.insert(net.as_str(), net_names.len());
                net_names.push(net.clone());
            }
        }
        let resolve = |net: &str| -> Option<usize> {
            if net == "0" {
                None
            } else {
                Some(index[net])
            }
        };
        let mosfets = circuit
            .mosfets
            .iter()
            .map(|m| ResolvedMosfet {
                drain: resolve(&m.drain),
                gate: resolve(&m.gate),
                source: resolve(&m.source),
                bulk: resolve(&m.bulk),
                params: circuit.model_for(m).clone(),
                w: m.w,
                l: m.l,
            })
            .collect();
        let resistors = circuit
            .resistors
            .iter()
            .map(|r| ResolvedTwoTerminal {
                pos: resolve(&r.pos),
                neg: resolve(&r.neg),
                conductance: 1.0 / r.ohms,
            })
            .collect();
        let sources = circuit
            .vsources
            .iter()
            .map(|v| ResolvedSource {
                name: v.name.clone(),
                pos: resolve(&v.pos),
                neg: resolve(&v.neg),
                volts: v.volts,
            })
            .collect();
        Ok(System {
            net_names,
            n_nets: circuit.nets().len() - 1,
            mosfets,
            resistors,
            sources,
            temperature: circuit.temperature,
        })
    }

    fn dim(&self) -> usize {
        self.n_nets + self.sources.len()
    }

    /// Stamp the Jacobian and residual at `x`. Residual rows 0..n_nets hold
    /// the KCL imbalance (current leaving each net); the remaining rows hold
    /// the source voltage constraints v+ - v- - E. `source_scale` multiplies
    /// every source value (source stepping).
    fn assemble(&self, x: &DVector<f64>, gmin: f64, source_scale: f64) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.dim();
        let mut jac = DMatrix::zeros(n, n);
        let mut res = DVector::zeros(n);
        let v = |node: Option<usize>| node.map_or(0.0, |i| x[i]);

        for r in &self.resistors {
            let g = r.conductance;
            let i = g * (v(r.pos) - v(r.neg));
            if let Some(p) = r.pos {
                res[p] += i;
                jac[(p, p)] += g;
                if let Some(q) = r.neg {
                    jac[(p, q)] -= g;
                }
            }
            if let Some(q) = r.neg {
                res[q] -= i;
                jac[(q, q)] += g;
                if let Some(p) = r.pos {
                    jac[(q, p)] -= g;
                }
            }
        }

        for m in &self.mosfets {
            let vs = v(m.source);
            let bias = BiasPoint {
                vgs: v(m.gate) - vs,
                vds: v(m.drain) - vs,
                vbs: v(m.bulk) - vs,
                temperature: self.temperature,
            };
            let e = drain_current(&m.params, m.w, m.l, bias);
            // Conventional current enters the drain terminal and leaves the
            // source terminal.
            if let Some(d) = m.drain {
                res[d] += e.id;
            }
            if let Some(s) = m.source {
                res[s] -= e.id;
            }
            let gtot = e.gm + e.gds + e.gmb;
            let mut stamp = |row: Option<usize>, sign: f64| {
                if let Some(r) = row {
                    if let Some(d) = m.drain {
                        jac[(r, d)] += sign * e.gds;
                    }
                    if let Some(g) = m.gate {
                        jac[(r, g)] += sign * e.gm;
                    }
                    if let Some(b) = m.bulk {
                        jac[(r, b)] += sign * e.gmb;
                    }
                    if let Some(s) = m.source {
                        jac[(r, s)] -= sign * gtot;
                    }
                }
            };
            stamp(m.drain, 1.0);
            stamp(m.source, -1.0);
        }

        for (k, src) in self.sources.iter().enumerate() {
            let row = self.n_nets + k;
            // Branch current flows from + through the source to -.
            let i = x[row];
            if let Some(p) = src.pos {
                res[p] += i;
                jac[(p, row)] += 1.0;
                jac[(row, p)] += 1.0;
            }
            if let Some(q) = src.neg {
                res[q] -= i;
                jac[(q, row)] -= 1.0;
                jac[(row, q)] -= 1.0;
            }
            res[row] = v(src.pos) - v(src.neg) - source_scale * src.volts;
        }

        if gmin > 0.0 {
            for i in 0..self.n_nets {
                res[i] += gmin * x[i];
                jac[(i, i)] += gmin;
            }
        }

        (jac, res)
    }

    fn max_node_residual(&self, res: &DVector<f64>) -> f64 {
        (0..self.n_nets).fold(0.0f64, |acc, i| acc.max(res[i].abs()))
    }

    /// Damped Newton iteration at fixed gmin and source scaling.
    fn newton(
        &self,
        x: &mut DVector<f64>,
        gmin: f64,
        source_scale: f64,
        opts: &SolverOptions,
        damped: bool,
    ) -> Result<usize, (f64, usize)> {
        let mut iterations = 0;
        let mut best = f64::INFINITY;
        loop {
            let (jac, res) = self.assemble(x, gmin, source_scale);
            let resid = self.max_node_residual(&res);
            best = best.min(resid);
            let lu = jac.lu();
            let delta = match lu.solve(&(-&res)) {
                Some(d) => d,
                None => return Err((best, iterations)),
            };
            let dv_max = (0..self.n_nets).fold(0.0f64, |acc, i| acc.max(delta[i].abs()));
            if resid <= opts.abstol && dv_max <= opts.vtol {
                // Apply the final correction: it refines the node voltages
                // by at most vtol and sets the source branch currents, which
                // enter the system linearly.
                *x += delta;
                return Ok(iterations);
            }
            if iterations >= opts.max_iterations {
                return Err((best, iterations));
            }
            let scale = if damped && dv_max > opts.damping {
                opts.damping / dv_max
            } else {
                1.0
            };
            *x += scale * delta;
            iterations += 1;
        }
    }

    /// Initial vector: zeros, then ground-referenced source values
    /// propagated through series 0-reference chains, then the caller guess.
    fn initial_guess(&self, guess: &[(&str, f64)]) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        // Two propagation passes cover supplies behind series ammeters.
        for _ in 0..2 {
            for s in &self.sources {
                match (s.pos, s.neg) {
                    (Some(p), None) => x[p] = s.volts,
                    (None, Some(q)) => x[q] = -s.volts,
                    (Some(p), Some(q)) => {
                        if x[q] != 0.0 && x[p] == 0.0 {
                            x[p] = x[q] + s.volts;
                        } else if x[p] != 0.0 && x[q] == 0.0 {
                            x[q] = x[p] - s.volts;
                        }
                    }
                    (None, None) => {}
                }
            }
        }
        for (net, value) in guess {
            let net = net.to_ascii_lowercase();
            if let Some(i) = self.net_names.iter().position(|n| *n == net) {
                x[i] = *value;
            }
        }
        x
    }

    /// Full escalation: plain Newton, gmin stepping, source stepping.
    fn solve(
        &self,
        opts: &SolverOptions,
        guess: &[(&str, f64)],
    ) -> Result<(DVector<f64>, usize, SolveStrategy), SolverError> {
        let damped = !self.mosfets.is_empty();
        let mut trace = Vec::new();
        let mut total_iterations = 0;
        let mut best_residual = f64::INFINITY;

        let x0 = self.initial_guess(guess);

        let mut x = x0.clone();
        match self.newton(&mut x, 0.0, 1.0, opts, damped) {
            Ok(iters) => return Ok((x, iters, SolveStrategy::Newton)),
            Err((resid, iters)) => {
                best_residual = best_residual.min(resid);
                total_iterations += iters;
                trace.push(format!("newton: residual {resid:.3e} after {iters} iters"));
            }
        }

        // gmin stepping: march the schedule, then release gmin entirely.
        let mut x = x0.clone();
        let mut ok = true;
        for &gmin in &opts.gmin_schedule {
            match self.newton(&mut x, gmin, 1.0, opts, damped) {
                Ok(iters) => total_iterations += iters,
                Err((resid, iters)) => {
                    best_residual = best_residual.min(resid);
                    total_iterations += iters;
                    trace.push(format!("gmin {gmin:.1e}: residual {resid:.3e} after {iters} iters"));
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            match self.newton(&mut x, 0.0, 1.0, opts, damped) {
                Ok(iters) => return Ok((x, total_iterations + iters, SolveStrategy::GminStepping)),
                Err((resid, iters)) => {
                    best_residual = best_residual.min(resid);
                    total_iterations += iters;
                    trace.push(format!("gmin release: residual {resid:.3e} after {iters} iters"));
                }
            }
        }

        // Source stepping: ramp every source from zero.
        let mut x = DVector::zeros(self.dim());
        let mut ok = true;
        for k in 1..=opts.source_steps {
            let scale = k as f64 / opts.source_steps as f64;
            match self.newton(&mut x, 0.0, scale, opts, damped) {
                Ok(iters) => total_iterations += iters,
                Err((resid, iters)) => {
                    best_residual = best_residual.min(resid);
                    total_iterations += iters;
                    trace.push(format!("source step {k}/{}: residual {resid:.3e} after {iters} iters", opts.source_steps));
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok((x, total_iterations, SolveStrategy::SourceStepping));
        }

        Err(SolverError::Convergence { best_residual, iterations: total_iterations, trace })
    }

    fn solution(&self, x: &DVector<f64>, iterations: usize, strategy: SolveStrategy) -> DcSolution {
        // Verification pass with gmin removed.
        let (_, res) = self.assemble(x, 0.0, 1.0);
        let residual = self.max_node_residual(&res);
        let mut voltages = BTreeMap::new();
        voltages.insert("0".to_string(), 0.0);
        for (i, name) in self.net_names.iter().enumerate() {
            voltages.insert(name.clone(), x[i]);
        }
        let mut source_currents = BTreeMap::new();
        for (k, s) in self.sources.iter().enumerate() {
            // x holds the + -> - through current; delivered current is its
            // negation.
            source_currents.insert(s.name.clone(), -x[self.n_nets + k]);
        }
        DcSolution { voltages, source_currents, iterations, residual, strategy }
    }
}

/// Assemble the MNA Jacobian and residual at a candidate point.
///
/// Unknown ordering: non-ground nets in declaration order, then source
/// branch currents in declaration order. Missing candidate entries default
/// to 0 V / 0 A.
pub fn assemble_system(
    circuit: &Circuit,
    candidate: &BTreeMap<String, f64>,
    gmin: f64,
) -> Result<(DMatrix<f64>, DVector<f64>), SolverError> {
    let sys = System::new(circuit)?;
    let mut x = DVector::zeros(sys.dim());
    for (i, name) in sys.net_names.iter().enumerate() {
        if let Some(v) = candidate.get(name) {
            x[i] = *v;
        }
    }
    for (k, s) in sys.sources.iter().enumerate() {
        if let Some(v) = candidate.get(&s.name) {
            x[sys.n_nets + k] = *v;
        }
    }
    Ok(sys.assemble(&x, gmin, 1.0))
}

/// Solve the DC operating point. `guess` pre-loads node voltages (net name,
/// volts); bistable circuits converge to the state whose basin contains the
/// guess.
pub fn solve_op(
    circuit: &Circuit,
    options: &SolverOptions,
    guess: &[(&str, f64)],
) -> Result<DcSolution, SolverError> {
    let sys = System::new(circuit)?;
    let (x, iterations, strategy) = sys.solve(options, guess)?;
    Ok(sys.solution(&x, iterations, strategy))
}

/// Per-sweep iteration statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepStats {
    pub total_iterations: usize,
    pub points: usize,
}

/// DC sweep of a named source with continuation: each point starts from the
/// previous solution. Returns the observable against the swept value.
pub fn dc_sweep(
    circuit: &Circuit,
    source: &str,
    start: f64,
    stop: f64,
    step: f64,
    observable: &Observable,
    guess: &[(&str, f64)],
    options: &SolverOptions,
) -> Result<Curve, SolverError> {
    dc_sweep_detailed(circuit, source, start, stop, step, observable, guess, options).map(|(c, _)| c)
}

/// [`dc_sweep`] variant that also reports iteration counts.
#[allow(clippy::too_many_arguments)]
pub fn dc_sweep_detailed(
    circuit: &Circuit,
    source: &str,
    start: f64,
    stop: f64,
    step: f64,
    observable: &Observable,
    guess: &[(&str, f64)],
    options: &SolverOptions,
) -> Result<(Curve, SweepStats), SolverError> {
    let source = source.to_ascii_lowercase();
    if !circuit.vsources.iter().any(|v| v.name == source) {
        return Err(SolverError::UnknownSource(source));
    }
    match observable {
        Observable::NetVoltage(net) => {
            if !circuit.has_net(net) {
                return Err(SolverError::UnknownNet(net.clone()));
            }
        }
        Observable::SourceCurrent(name) => {
            let name = name.to_ascii_lowercase();
            if !circuit.vsources.iter().any(|v| v.name == name) {
                return Err(SolverError::UnknownSource(name));
            }
        }
    }
    if step <= 0.0 {
        return Err(SolverError::BadSweep(format!("step must be positive, got {step}")));
    }
    let span = stop - start;
    let n_steps_f = span / step;
    let n_steps = n_steps_f.round();
    if n_steps < 1.0 || (n_steps_f - n_steps).abs() > 1e-12 * n_steps.max(1.0) {
        return Err(SolverError::BadSweep(format!(
            "step {step} does not divide the span {span}"
        )));
    }
    let n_points = n_steps as usize + 1;

    let mut working = circuit.clone();
    let mut points = Vec::with_capacity(n_points);
    let mut total_iterations = 0;
    let mut previous: Option<DcSolution> = None;

    for i in 0..n_points {
        let value = start + i as f64 * step;
        working.set_source_value(&source, value)?;
        let own_guess: Vec<(&str, f64)>;
        let point_guess: &[(&str, f64)] = match &previous {
            None => guess,
            Some(sol) => {
                own_guess = sol
                    .voltages
                    .iter()
                    .filter(|(n, _)| n.as_str() != "0")
                    .map(|(n, v)| (n.as_str(), *v))
                    .collect();
                &own_guess
            }
        };
        let sol = solve_op(&working, options, point_guess).map_err(|cause| SolverError::SweepPoint {
            source: source.clone(),
            value,
            cause: Box::new(cause),
        })?;
        total_iterations += sol.iterations;
        let y = match observable {
            Observable::NetVoltage(net) => sol.voltage(net).unwrap(),
            Observable::SourceCurrent(name) => sol.current(name).unwrap(),
        };
        points.push((value, y));
        previous = Some(sol);
    }

    let curve = Curve::new(points)?;
    Ok((curve, SweepStats { total_iterations, points: n_points }))
}
