//! Circuit representation, 6T/9T cell builders and measurement harnesses.
//!
//! A [`Circuit`] is the single structure shared by the netlist parser, the
//! cell builders and the DC solver: a set of named nets (ground is net
//! `"0"`), MOSFET/source/resistor instances and model cards. Circuits are
//! immutable once handed to an analysis; harness application clones the cell
//! and returns a new circuit.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::device::DeviceParams;

/// Ground net name.
pub const GROUND: &str = "0";

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("duplicate instance name '{0}'")]
    DuplicateInstance(String),
    #[error("instance '{inst}' references unknown model '{model}'")]
    UnknownModel { inst: String, model: String },
    #[error("instance '{inst}': {what} must be positive, got {value}")]
    NonPositive { inst: String, what: &'static str, value: f64 },
    #[error("invalid cell geometry: {0}")]
    InvalidGeometry(String),
    #[error("harness requires net '{0}' which the cell does not expose")]
    MissingNet(String),
    #[error("harness kind is incompatible with the cell topology: {0}")]
    IncompatibleHarness(String),
    #[error("unknown source '{0}'")]
    UnknownSource(String),
}

/// Four-terminal MOSFET instance bound to a model card by name.
#[derive(Debug, Clone, PartialEq)]
pub struct MosfetInstance {
    pub name: String,
    pub drain: String,
    pub gate: String,
    pub source: String,
    pub bulk: String,
    pub model: String,
    /// Channel width, meters.
    pub w: f64,
    /// Channel length, meters.
    pub l: f64,
}

/// Ideal DC voltage source.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageSource {
    pub name: String,
    pub pos: String,
    pub neg: String,
    pub volts: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resistor {
    pub name: String,
    pub pos: String,
    pub neg: String,
    pub ohms: f64,
}

/// A flat circuit: nets, device instances and model cards.
#[derive(Debug, Clone)]
pub struct Circuit {
    nets: Vec<String>,
    net_index: HashMap<String, usize>,
    pub mosfets: Vec<MosfetInstance>,
    pub vsources: Vec<VoltageSource>,
    pub resistors: Vec<Resistor>,
    pub models: BTreeMap<String, DeviceParams>,
    /// Ambient temperature in °C; set by harness application.
    pub temperature: f64,
}

impl Default for Circuit {
    fn default() -> Self {
        Self::new()
    }
}

impl Circuit {
    pub fn new() -> Self {
        let mut c = Circuit {
            nets: Vec::new(),
            net_index: HashMap::new(),
            mosfets: Vec::new(),
            vsources: Vec::new(),
            resistors: Vec::new(),
            models: BTreeMap::new(),
            temperature: 27.0,
        };
        c.add_net(GROUND);
        c
    }

    /// Canonicalize a name: instance and net names are case-insensitive.
    fn canon(name: &str) -> String {
        name.to_ascii_lowercase()
    }

    /// Declare a net (idempotent); returns its canonical name.
    pub fn add_net(&mut self, name: &str) -> String {
        let name = Self::canon(name);
        if !self.net_index.contains_key(&name) {
            self.net_index.insert(name.clone(), self.nets.len());
            self.nets.push(name.clone());
        }
        name
    }

    pub fn has_net(&self, name: &str) -> bool {
        self.net_index.contains_key(&Self::canon(name))
    }

    /// Nets in declaration order; ground is always first.
    pub fn nets(&self) -> &[String] {
        &self.nets
    }

    pub fn add_model(&mut self, name: &str, params: DeviceParams) {
        self.models.insert(Self::canon(name), params);
    }

    fn check_instance_name(&self, name: &str) -> Result<(), CircuitError> {
        let taken = self.mosfets.iter().any(|m| m.name == name)
            || self.vsources.iter().any(|v| v.name == name)
            || self.resistors.iter().any(|r| r.name == name);
        if taken {
            Err(CircuitError::DuplicateInstance(name.to_string()))
        } else {
            Ok(())
        }
    }

    /// Add a MOSFET; terminals implicitly declare their nets.
    pub fn add_mosfet(
        &mut self,
        name: &str,
        drain: &str,
        gate: &str,
        source: &str,
        bulk: &str,
        model: &str,
        w: f64,
        l: f64,
    ) -> Result<(), CircuitError> {
        let name = Self::canon(name);
        self.check_instance_name(&name)?;
        let model = Self::canon(model);
        if !self.models.contains_key(&model) {
            return Err(CircuitError::UnknownModel { inst: name, model });
        }
        if w <= 0.0 {
            return Err(CircuitError::NonPositive { inst: name, what: "W", value: w });
        }
        if l <= 0.0 {
            return Err(CircuitError::NonPositive { inst: name, what: "L", value: l });
        }
        let m = MosfetInstance {
            name,
            drain: self.add_net(drain),
            gate: self.add_net(gate),
            source: self.add_net(source),
            bulk: self.add_net(bulk),
            model,
            w,
            l,
        };
        self.mosfets.push(m);
        Ok(())
    }

    pub fn add_vsource(&mut self, name: &str, pos: &str, neg: &str, volts: f64) -> Result<(), CircuitError> {
        let name = Self::canon(name);
        self.check_instance_name(&name)?;
        let v = VoltageSource {
            name,
            pos: self.add_net(pos),
            neg: self.add_net(neg),
            volts,
        };
        self.vsources.push(v);
        Ok(())
    }

    pub fn add_resistor(&mut self, name: &str, pos: &str, neg: &str, ohms: f64) -> Result<(), CircuitError> {
        let name = Self::canon(name);
        self.check_instance_name(&name)?;
        if ohms <= 0.0 {
            return Err(CircuitError::NonPositive { inst: name, what: "R", value: ohms });
        }
        let r = Resistor {
            name,
            pos: self.add_net(pos),
            neg: self.add_net(neg),
            ohms,
        };
        self.resistors.push(r);
        Ok(())
    }

    /// Change the value of a named voltage source (used by sweeps).
    pub fn set_source_value(&mut self, name: &str, volts: f64) -> Result<(), CircuitError> {
        let name = Self::canon(name);
        match self.vsources.iter_mut().find(|v| v.name == name) {
            Some(v) => {
                v.volts = volts;
                Ok(())
            }
            None => Err(CircuitError::UnknownSource(name)),
        }
    }

    pub fn model_for(&self, m: &MosfetInstance) -> &DeviceParams {
        &self.models[&m.model]
    }

    /// Move every gate terminal attached to `from` onto `to`. Drain, source
    /// and bulk terminals are left untouched.
    pub fn rename_gates(&mut self, from: &str, to: &str) {
        let from = Self::canon(from);
        let to = self.add_net(to);
        for m in &mut self.mosfets {
            if m.gate == from {
                m.gate = to.clone();
            }
        }
    }

    /// Move the gates of the inverter pair driving `output` onto `to`: a
    /// transistor qualifies when its gate sits on `input` and its channel
    /// runs from a supply rail (`vdd` or ground) to the output node. Gates
    /// of other devices hanging off the input net (such as a read-assist
    /// branch) stay attached to it.
    pub fn rename_inverter_gates(&mut self, input: &str, output: &str, to: &str) {
        let input = Self::canon(input);
        let output = Self::canon(output);
        let to = self.add_net(to);
        let is_rail = |n: &str| n == "vdd" || n == GROUND;
        for m in &mut self.mosfets {
            if m.gate != input {
                continue;
            }
            let drives_output = (m.drain == output && is_rail(&m.source))
                || (m.source == output && is_rail(&m.drain));
            if drives_output {
                m.gate = to.clone();
            }
        }
    }

    /// Structural equivalence up to instance ordering.
    pub fn equivalent(&self, other: &Circuit) -> bool {
        let sorted = |mut v: Vec<String>| {
            v.sort();
            v
        };
        if sorted(self.nets.clone()) != sorted(other.nets.clone()) {
            return false;
        }
        if self.models != other.models || self.temperature != other.temperature {
            return false;
        }
        let key_m = |m: &MosfetInstance| m.name.clone();
        let mut a = self.mosfets.clone();
        let mut b = other.mosfets.clone();
        a.sort_by_key(key_m);
        b.sort_by_key(key_m);
        if a != b {
            return false;
        }
        let mut a = self.vsources.clone();
        let mut b = other.vsources.clone();
        a.sort_by_key(|v| v.name.clone());
        b.sort_by_key(|v| v.name.clone());
        if a != b {
            return false;
        }
        let mut a = self.resistors.clone();
        let mut b = other.resistors.clone();
        a.sort_by_key(|r| r.name.clone());
        b.sort_by_key(|r| r.name.clone());
        a == b
    }
}

/// Cell flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    SixT,
    NineT,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Topology::SixT => write!(f, "6t"),
            Topology::NineT => write!(f, "9t"),
        }
    }
}

/// Geometry of a bit cell. `cell_ratio` and `pullup_ratio` are W/L ratios of
/// the driver and pull-up relative to the access transistor at shared length,
/// so they scale widths directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub topology: Topology,
    /// Access transistor width, meters.
    pub access_w: f64,
    /// Shared channel length, meters.
    pub length: f64,
    pub cell_ratio: f64,
    pub pullup_ratio: f64,
    /// Width of the 9T read-assist transistors, meters.
    pub read_branch_w: f64,
}

impl CellGeometry {
    /// Default sizing: L = 45 nm, access W = 90 nm, CR = PR = 1.5.
    pub fn new(topology: Topology) -> Self {
        CellGeometry {
            topology,
            access_w: 90e-9,
            length: 45e-9,
            cell_ratio: 1.5,
            pullup_ratio: 1.5,
            read_branch_w: 90e-9,
        }
    }

    pub fn driver_w(&self) -> f64 {
        self.cell_ratio * self.access_w
    }

    pub fn pullup_w(&self) -> f64 {
        self.pullup_ratio * self.access_w
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let positive = [
            ("access width", self.access_w),
            ("length", self.length),
            ("cell ratio", self.cell_ratio),
            ("pull-up ratio", self.pullup_ratio),
            ("read branch width", self.read_branch_w),
        ];
        for (what, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CircuitError::InvalidGeometry(format!("{what} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Cell bias mode shared by harnesses, transfer-curve extraction and SNM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellMode {
    Hold,
    Read,
    Write0,
    Write1,
}

impl std::fmt::Display for CellMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellMode::Hold => write!(f, "hold"),
            CellMode::Read => write!(f, "read"),
            CellMode::Write0 => write!(f, "write0"),
            CellMode::Write1 => write!(f, "write1"),
        }
    }
}

/// Which cross-coupled inverter a transfer-curve extraction drives.
/// Side one sweeps the input of the inverter whose output is Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    One,
    Two,
}

/// Measurement harness: a set of ideal-source clamps (plus optional net
/// rewiring) applied to a bare cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HarnessKind {
    Hold,
    Read,
    Write0,
    Write1,
    /// Feedback-severed transfer curve: mode clamps plus every gate on the
    /// selected inverter's input net moved to a fresh swept net `vin`.
    Vtc { mode: CellMode, side: Side },
    /// Read clamps plus a swept source directly on the storage node QB.
    NCurveRead,
    /// Same as the read N-curve but the bit line adjacent to the probed node
    /// is clamped to ground instead of the supply.
    NCurveWrite,
    /// Standby-leakage setup: word and bit lines grounded, supply fed
    /// through a 0 V series source acting as an ammeter.
    Leakage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harness {
    pub kind: HarnessKind,
    pub vdd: f64,
    /// Ambient temperature, °C.
    pub temperature: f64,
}

/// Swept-input net added by the VTC and N-curve harnesses.
pub const SWEPT_NET: &str = "vin";
/// Name of the swept source added by the VTC and N-curve harnesses.
pub const SWEPT_SOURCE: &str = "vin";
/// Name of the 0 V ammeter source in the leakage harness.
pub const AMMETER_SOURCE: &str = "vmeter";

/// Build a bare (unharnessed) 6T or 9T cell.
///
/// 6T: cross-coupled inverters MP1/MN1 (output `q`) and MP2/MN2 (output
/// `qb`) between `vdd` and ground, with access transistors MN3 (`q`-`bl`,
/// gate `wl`) and MN4 (`qb`-`blb`, gate `wl`).
///
/// 9T: the 6T core plus a differential read-assist branch. MN5 and MN6 hang
/// off the storage nodes, each gated by the opposite node, and share the
/// internal net `x`; footer MN7 connects `x` to ground under control of the
/// read word line `rwl`.
pub fn build_cell(geom: &CellGeometry) -> Result<Circuit, CircuitError> {
    geom.validate()?;
    let mut c = Circuit::new();
    c.add_model("nmos", DeviceParams::default_nmos());
    c.add_model("pmos", DeviceParams::default_pmos());
    for net in ["q", "qb", "bl", "blb", "wl", "vdd"] {
        c.add_net(net);
    }
    let l = geom.length;
    c.add_mosfet("mp1", "q", "qb", "vdd", "vdd", "pmos", geom.pullup_w(), l)?;
    c.add_mosfet("mn1", "q", "qb", "0", "0", "nmos", geom.driver_w(), l)?;
    c.add_mosfet("mp2", "qb", "q", "vdd", "vdd", "pmos", geom.pullup_w(), l)?;
    c.add_mosfet("mn2", "qb", "q", "0", "0", "nmos", geom.driver_w(), l)?;
    c.add_mosfet("mn3", "q", "wl", "bl", "0", "nmos", geom.access_w, l)?;
    c.add_mosfet("mn4", "qb", "wl", "blb", "0", "nmos", geom.access_w, l)?;
    if geom.topology == Topology::NineT {
        c.add_net("rwl");
        c.add_net("x");
        c.add_mosfet("mn5", "q", "qb", "x", "0", "nmos", geom.read_branch_w, l)?;
        c.add_mosfet("mn6", "qb", "q", "x", "0", "nmos", geom.read_branch_w, l)?;
        c.add_mosfet("mn7", "x", "rwl", "0", "0", "nmos", geom.read_branch_w, l)?;
    }
    Ok(c)
}

/// Word-line / bit-line / read-word-line clamp levels for a cell mode.
/// Returned as (wl, bl, blb, rwl) in volts.
fn mode_clamps(mode: CellMode, vdd: f64) -> (f64, f64, f64, f64) {
    match mode {
        CellMode::Hold => (0.0, vdd, vdd, 0.0),
        CellMode::Read => (vdd, vdd, vdd, vdd),
        CellMode::Write0 => (vdd, 0.0, vdd, 0.0),
        CellMode::Write1 => (vdd, vdd, 0.0, 0.0),
    }
}

/// Apply a measurement harness to a bare cell, producing a solvable circuit.
///
/// Every external net (`bl`, `blb`, `wl`, `vdd`, and `rwl` when present)
/// receives exactly one clamp source. The cell itself is never resized;
/// harnesses only add sources and, for VTC extraction, move gate terminals
/// onto the swept net.
pub fn apply_harness(cell: &Circuit, harness: &Harness) -> Result<Circuit, CircuitError> {
    let mut c = cell.clone();
    c.temperature = harness.temperature;
    let vdd = harness.vdd;

    for net in ["bl", "blb", "wl", "vdd"] {
        if !c.has_net(net) {
            return Err(CircuitError::MissingNet(net.to_string()));
        }
    }
    let has_rwl = c.has_net("rwl");

    let clamp_rails = |c: &mut Circuit, wl: f64, bl: f64, blb: f64, rwl: f64| -> Result<(), CircuitError> {
        c.add_vsource("vdd", "vdd", GROUND, vdd)?;
        c.add_vsource("vwl", "wl", GROUND, wl)?;
        c.add_vsource("vbl", "bl", GROUND, bl)?;
        c.add_vsource("vblb", "blb", GROUND, blb)?;
        if has_rwl {
            c.add_vsource("vrwl", "rwl", GROUND, rwl)?;
        }
        Ok(())
    };

    match harness.kind {
        HarnessKind::Hold | HarnessKind::Read | HarnessKind::Write0 | HarnessKind::Write1 => {
            let mode = match harness.kind {
                HarnessKind::Hold => CellMode::Hold,
                HarnessKind::Read => CellMode::Read,
                HarnessKind::Write0 => CellMode::Write0,
                _ => CellMode::Write1,
            };
            let (wl, bl, blb, rwl) = mode_clamps(mode, vdd);
            clamp_rails(&mut c, wl, bl, blb, rwl)?;
        }
        HarnessKind::Vtc { mode, side } => {
            let (wl, bl, blb, rwl) = mode_clamps(mode, vdd);
            clamp_rails(&mut c, wl, bl, blb, rwl)?;
            let (input_net, output_net) = match side {
                Side::One => ("qb", "q"),
                Side::Two => ("q", "qb"),
            };
            for net in [input_net, output_net] {
                if !c.has_net(net) {
                    return Err(CircuitError::MissingNet(net.to_string()));
                }
            }
            // Sever the regenerative loop at the probed inverter's input.
            // Only the inverter pair moves to the swept net: placing the
            // noise source on a read-assist gate as well would switch that
            // branch on mid-transition and corrupt the hold margin.
            c.rename_inverter_gates(input_net, output_net, SWEPT_NET);
            c.add_vsource(SWEPT_SOURCE, SWEPT_NET, GROUND, 0.0)?;
        }
        HarnessKind::NCurveRead | HarnessKind::NCurveWrite => {
            if !c.has_net("qb") {
                return Err(CircuitError::IncompatibleHarness(
                    "N-curve harness probes storage node 'qb'".to_string(),
                ));
            }
            let (wl, mut bl, blb, rwl) = mode_clamps(CellMode::Read, vdd);
            if harness.kind == HarnessKind::NCurveWrite {
                // Write condition: the opposite-side bit line goes to ground
                // so the flipped state can hold; grounding the probed node's
                // own line would fight the flip and erase the negative lobe.
                bl = 0.0;
            }
            clamp_rails(&mut c, wl, bl, blb, rwl)?;
            c.add_vsource(SWEPT_SOURCE, "qb", GROUND, 0.0)?;
        }
        HarnessKind::Leakage => {
            c.add_net("vddraw");
            c.add_vsource("vdd", "vddraw", GROUND, vdd)?;
            c.add_vsource(AMMETER_SOURCE, "vddraw", "vdd", 0.0)?;
            c.add_vsource("vwl", "wl", GROUND, 0.0)?;
            c.add_vsource("vbl", "bl", GROUND, 0.0)?;
            c.add_vsource("vblb", "blb", GROUND, 0.0)?;
            if has_rwl {
                c.add_vsource("vrwl", "rwl", GROUND, 0.0)?;
            }
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Polarity;

    fn geom6() -> CellGeometry {
        CellGeometry::new(Topology::SixT)
    }

    fn geom9() -> CellGeometry {
        CellGeometry::new(Topology::NineT)
    }

    #[test]
    fn six_t_structure() {
        let c = build_cell(&geom6()).unwrap();
        assert_eq!(c.mosfets.len(), 6);
        for net in ["q", "qb", "bl", "blb", "wl", "vdd", "0"] {
            assert!(c.has_net(net), "missing {net}");
        }
        assert!(!c.has_net("rwl"));
        let mn1 = c.mosfets.iter().find(|m| m.name == "mn1").unwrap();
        assert_eq!(mn1.w, 1.5 * 90e-9);
        let mp1 = c.mosfets.iter().find(|m| m.name == "mp1").unwrap();
        assert_eq!(mp1.w, 1.5 * 90e-9);
        assert_eq!(mp1.model, "pmos");
    }

    #[test]
    fn nine_t_structure() {
        let c = build_cell(&geom9()).unwrap();
        assert_eq!(c.mosfets.len(), 9);
        assert!(c.has_net("rwl") && c.has_net("x"));
        let mn7 = c.mosfets.iter().find(|m| m.name == "mn7").unwrap();
        assert_eq!(mn7.gate, "rwl");
        assert_eq!(mn7.source, "0");
        let mn5 = c.mosfets.iter().find(|m| m.name == "mn5").unwrap();
        assert_eq!((mn5.drain.as_str(), mn5.gate.as_str(), mn5.source.as_str()), ("q", "qb", "x"));
    }

    #[test]
    fn invalid_geometry_rejected() {
        let mut g = geom6();
        g.cell_ratio = 0.0;
        assert!(matches!(build_cell(&g), Err(CircuitError::InvalidGeometry(_))));
    }

    #[test]
    fn hold_harness_clamps() {
        let cell = build_cell(&geom6()).unwrap();
        let h = Harness { kind: HarnessKind::Hold, vdd: 1.0, temperature: 27.0 };
        let c = apply_harness(&cell, &h).unwrap();
        let src = |n: &str| c.vsources.iter().find(|v| v.name == n).unwrap();
        assert_eq!(src("vwl").volts, 0.0);
        assert_eq!(src("vbl").volts, 1.0);
        assert_eq!(src("vblb").volts, 1.0);
        assert_eq!(src("vdd").volts, 1.0);
        assert_eq!(c.mosfets.len(), cell.mosfets.len());
    }

    #[test]
    fn nine_t_write_deactivates_read_word_line() {
        let cell = build_cell(&geom9()).unwrap();
        for kind in [HarnessKind::Write0, HarnessKind::Write1, HarnessKind::Hold] {
            let c = apply_harness(&cell, &Harness { kind, vdd: 1.0, temperature: 27.0 }).unwrap();
            let rwl = c.vsources.iter().find(|v| v.name == "vrwl").unwrap();
            assert_eq!(rwl.volts, 0.0, "rwl must be off for {kind:?}");
        }
        let c = apply_harness(&cell, &Harness { kind: HarnessKind::Read, vdd: 1.0, temperature: 27.0 }).unwrap();
        assert_eq!(c.vsources.iter().find(|v| v.name == "vrwl").unwrap().volts, 1.0);
    }

    #[test]
    fn vtc_harness_moves_gates_only() {
        let cell = build_cell(&geom6()).unwrap();
        let h = Harness {
            kind: HarnessKind::Vtc { mode: CellMode::Read, side: Side::One },
            vdd: 1.0,
            temperature: 27.0,
        };
        let c = apply_harness(&cell, &h).unwrap();
        let by_name = |n: &str| c.mosfets.iter().find(|m| m.name == n).unwrap();
        assert_eq!(by_name("mp1").gate, "vin");
        assert_eq!(by_name("mn1").gate, "vin");
        // Access transistor stays attached to the storage node.
        assert_eq!(by_name("mn3").drain, "q");
        assert_eq!(by_name("mn4").drain, "qb");
        // Inverter 2 keeps its gates on q.
        assert_eq!(by_name("mp2").gate, "q");
        assert_eq!(c.mosfets.len(), 6);
    }

    #[test]
    fn vtc_harness_nine_t_keeps_assist_gates_on_storage_nets() {
        let cell = build_cell(&geom9()).unwrap();
        let h = Harness {
            kind: HarnessKind::Vtc { mode: CellMode::Read, side: Side::One },
            vdd: 1.0,
            temperature: 27.0,
        };
        let c = apply_harness(&cell, &h).unwrap();
        // The inverter pair is severed; the read-assist branch still follows
        // the storage nodes.
        let by_name = |n: &str| c.mosfets.iter().find(|m| m.name == n).unwrap();
        assert_eq!(by_name("mp1").gate, "vin");
        assert_eq!(by_name("mn1").gate, "vin");
        assert_eq!(by_name("mn5").gate, "qb");
        assert_eq!(by_name("mn6").gate, "q");
    }

    #[test]
    fn ncurve_write_grounds_one_bit_line() {
        let cell = build_cell(&geom6()).unwrap();
        let read = apply_harness(&cell, &Harness { kind: HarnessKind::NCurveRead, vdd: 1.0, temperature: 27.0 }).unwrap();
        let write = apply_harness(&cell, &Harness { kind: HarnessKind::NCurveWrite, vdd: 1.0, temperature: 27.0 }).unwrap();
        let volts = |c: &Circuit, n: &str| c.vsources.iter().find(|v| v.name == n).unwrap().volts;
        assert_eq!(volts(&read, "vbl"), 1.0);
        assert_eq!(volts(&write, "vbl"), 0.0);
        assert_eq!(volts(&write, "vblb"), 1.0);
        let probe = write.vsources.iter().find(|v| v.name == "vin").unwrap();
        assert_eq!(probe.pos, "qb");
    }

    #[test]
    fn leakage_harness_has_series_ammeter() {
        let cell = build_cell(&geom9()).unwrap();
        let c = apply_harness(&cell, &Harness { kind: HarnessKind::Leakage, vdd: 1.0, temperature: 27.0 }).unwrap();
        let meter = c.vsources.iter().find(|v| v.name == AMMETER_SOURCE).unwrap();
        assert_eq!(meter.volts, 0.0);
        assert_eq!(meter.pos, "vddraw");
        assert_eq!(meter.neg, "vdd");
        for n in ["vwl", "vbl", "vblb", "vrwl"] {
            assert_eq!(c.vsources.iter().find(|v| v.name == n).unwrap().volts, 0.0);
        }
    }

    #[test]
    fn harness_rejects_missing_external_net() {
        let mut c = Circuit::new();
        c.add_model("nmos", DeviceParams::default_nmos());
        c.add_mosfet("m1", "a", "b", "0", "0", "nmos", 1e-7, 1e-7).unwrap();
        let err = apply_harness(&c, &Harness { kind: HarnessKind::Hold, vdd: 1.0, temperature: 27.0 });
        assert!(matches!(err, Err(CircuitError::MissingNet(_))));
    }

    #[test]
    fn duplicate_instance_rejected() {
        let mut c = Circuit::new();
        c.add_vsource("v1", "a", "0", 1.0).unwrap();
        assert!(matches!(
            c.add_vsource("v1", "b", "0", 2.0),
            Err(CircuitError::DuplicateInstance(_))
        ));
    }

    #[test]
    fn unknown_model_rejected() {
        let mut c = Circuit::new();
        let err = c.add_mosfet("m1", "a", "b", "0", "0", "nmos", 1e-7, 1e-7);
        assert!(matches!(err, Err(CircuitError::UnknownModel { .. })));
    }

    #[test]
    fn polarity_display_used_by_netlist() {
        assert_eq!(Polarity::Nmos.to_string(), "nmos");
        assert_eq!(Polarity::Pmos.to_string(), "pmos");
    }
}
