//! SPICE-subset netlist parser and serializer.
//!
//! Supported cards (case-insensitive):
//!
//! ```text
//! * comment
//! M<name> <d> <g> <s> <b> <model> W=<num> L=<num>
//! V<name> <n+> <n-> <volts>
//! R<name> <n+> <n-> <ohms>
//! .model <name> <nmos|pmos> (vto=.. kp=.. lambda=.. n=.. i0=.. gamma=.. phi=.. tcv=..)
//! .temp <celsius>
//! .end
//! + continuation of the previous card
//! ```
//!
//! Numeric literals are plain decimals (scientific notation allowed) with an
//! optional engineering suffix f/p/n/u/m/k/meg. Serialization emits canonical
//! scientific notation and round-trips to an equivalent circuit.

use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError};
use crate::device::{DeviceParams, Polarity};

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("line {line}: {message} (at '{token}')")]
    Parse {
        line: usize,
        token: String,
        message: String,
    },
    #[error("line {line}: {source}")]
    Circuit {
        line: usize,
        source: CircuitError,
    },
}

impl NetlistError {
    fn parse(line: usize, token: &str, message: impl Into<String>) -> Self {
        NetlistError::Parse { line, token: token.to_string(), message: message.into() }
    }
}

/// Parse a numeric literal with optional engineering suffix.
fn parse_number(token: &str) -> Option<f64> {
    if let Ok(v) = token.parse::<f64>() {
        return Some(v);
    }
    let lower = token.to_ascii_lowercase();
    const SUFFIXES: [(&str, f64); 7] = [
        ("meg", 1e6),
        ("f", 1e-15),
        ("p", 1e-12),
        ("n", 1e-9),
        ("u", 1e-6),
        ("m", 1e-3),
        ("k", 1e3),
    ];
    for (suffix, mult) in SUFFIXES {
        if let Some(body) = lower.strip_suffix(suffix) {
            if let Ok(v) = body.parse::<f64>() {
                return Some(v * mult);
            }
        }
    }
    None
}

/// Join `+` continuations into logical lines tagged with the line number of
/// their first physical line. Comment and blank lines are dropped.
fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('+') {
            if let Some(last) = out.last_mut() {
                last.1.push(' ');
                last.1.push_str(rest);
                continue;
            }
        }
        out.push((i + 1, line.to_string()));
    }
    out
}

/// Parse a netlist into a [`Circuit`].
pub fn parse_netlist(text: &str) -> Result<Circuit, NetlistError> {
    let mut circuit = Circuit::new();
    // MOSFET cards may precede their model card; resolve them at the end.
    let mut pending_mosfets: Vec<(usize, Vec<String>)> = Vec::new();

    for (line, content) in logical_lines(text) {
        let tokens: Vec<String> = content.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
        let head = &tokens[0];
        match head.chars().next().unwrap() {
            '.' => match head.as_str() {
                ".end" => break,
                ".model" => parse_model(&mut circuit, line, &tokens)?,
                ".temp" => {
                    let tok = tokens
                        .get(1)
                        .ok_or_else(|| NetlistError::parse(line, head, "missing temperature"))?;
                    circuit.temperature = parse_number(tok)
                        .ok_or_else(|| NetlistError::parse(line, tok, "bad temperature"))?;
                }
                _ => return Err(NetlistError::parse(line, head, "unknown dot card")),
            },
            'm' => pending_mosfets.push((line, tokens)),
            'v' => {
                if tokens.len() != 4 {
                    return Err(NetlistError::parse(line, &content, "expected V<name> <n+> <n-> <volts>"));
                }
                let volts = parse_number(&tokens[3])
                    .ok_or_else(|| NetlistError::parse(line, &tokens[3], "bad voltage"))?;
                circuit
                    .add_vsource(&tokens[0], &tokens[1], &tokens[2], volts)
                    .map_err(|source| NetlistError::Circuit { line, source })?;
            }
            'r' => {
                if tokens.len() != 4 {
                    return Err(NetlistError::parse(line, &content, "expected R<name> <n+> <n-> <ohms>"));
                }
                let ohms = parse_number(&tokens[3])
                    .ok_or_else(|| NetlistError::parse(line, &tokens[3], "bad resistance"))?;
                circuit
                    .add_resistor(&tokens[0], &tokens[1], &tokens[2], ohms)
                    .map_err(|source| NetlistError::Circuit { line, source })?;
            }
            _ => return Err(NetlistError::parse(line, head, "unknown card")),
        }
    }

    for (line, tokens) in pending_mosfets {
        parse_mosfet(&mut circuit, line, &tokens)?;
    }
    Ok(circuit)
}

fn parse_mosfet(circuit: &mut Circuit, line: usize, tokens: &[String]) -> Result<(), NetlistError> {
    if tokens.len() != 8 {
        return Err(NetlistError::parse(
            line,
            &tokens.join(" "),
            "expected M<name> <d> <g> <s> <b> <model> W=<num> L=<num>",
        ));
    }
    let mut w = None;
    let mut l = None;
    for tok in &tokens[6..8] {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| NetlistError::parse(line, tok, "expected W=<num> or L=<num>"))?;
        let value = parse_number(value).ok_or_else(|| NetlistError::parse(line, tok, "bad number"))?;
        match key {
            "w" => w = Some(value),
            "l" => l = Some(value),
            _ => return Err(NetlistError::parse(line, tok, "unknown device parameter")),
        }
    }
    let (w, l) = match (w, l) {
        (Some(w), Some(l)) => (w, l),
        _ => return Err(NetlistError::parse(line, &tokens.join(" "), "both W and L are required")),
    };
    circuit
        .add_mosfet(&tokens[0], &tokens[1], &tokens[2], &tokens[3], &tokens[4], &tokens[5], w, l)
        .map_err(|source| NetlistError::Circuit { line, source })
}

fn parse_model(circuit: &mut Circuit, line: usize, tokens: &[String]) -> Result<(), NetlistError> {
    if tokens.len() < 3 {
        return Err(NetlistError::parse(line, &tokens.join(" "), "expected .model <name> <nmos|pmos> (...)"));
    }
    let name = &tokens[1];
    let mut params = match tokens[2].as_str() {
        "nmos" => DeviceParams::default_nmos(),
        "pmos" => DeviceParams::default_pmos(),
        other => return Err(NetlistError::parse(line, other, "model type must be nmos or pmos")),
    };
    for tok in &tokens[3..] {
        let tok = tok.trim_matches(|c| c == '(' || c == ')');
        if tok.is_empty() {
            continue;
        }
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| NetlistError::parse(line, tok, "expected key=value"))?;
        let value = parse_number(value).ok_or_else(|| NetlistError::parse(line, tok, "bad number"))?;
        match key {
            "vto" => params.vto = value,
            "kp" => params.kp = value,
            "lambda" => params.lambda = value,
            "n" => params.n_sub = value,
            "i0" => params.i0 = value,
            "gamma" => params.gamma = value,
            "phi" => params.phi = value,
            "tcv" => params.tcv = value,
            _ => return Err(NetlistError::parse(line, tok, "unknown model parameter")),
        }
    }
    params
        .validate()
        .map_err(|e| NetlistError::parse(line, name, e.to_string()))?;
    circuit.add_model(name, params);
    Ok(())
}

/// Serialize a circuit; `parse_netlist` maps the output back to an
/// equivalent circuit.
pub fn serialize_netlist(circuit: &Circuit) -> String {
    let mut out = String::new();
    for (name, p) in &circuit.models {
        let polarity = match p.polarity {
            Polarity::Nmos => "nmos",
            Polarity::Pmos => "pmos",
        };
        writeln!(
            out,
            ".model {name} {polarity} (vto={:e} kp={:e} lambda={:e} n={:e} i0={:e} gamma={:e} phi={:e} tcv={:e})",
            p.vto, p.kp, p.lambda, p.n_sub, p.i0, p.gamma, p.phi, p.tcv
        )
        .unwrap();
    }
    for m in &circuit.mosfets {
        writeln!(
            out,
            "{} {} {} {} {} {} w={:e} l={:e}",
            m.name, m.drain, m.gate, m.source, m.bulk, m.model, m.w, m.l
        )
        .unwrap();
    }
    for v in &circuit.vsources {
        writeln!(out, "{} {} {} {:e}", v.name, v.pos, v.neg, v.volts).unwrap();
    }
    for r in &circuit.resistors {
        writeln!(out, "{} {} {} {:e}", r.name, r.pos, r.neg, r.ohms).unwrap();
    }
    if circuit.temperature != 27.0 {
        writeln!(out, ".temp {:e}", circuit.temperature).unwrap();
    }
    out.push_str(".end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_cell, CellGeometry, Topology};

    #[test]
    fn minimal_source() {
        let c = parse_netlist("V1 vdd 0 1.0\n.end\n").unwrap();
        assert_eq!(c.vsources.len(), 1);
        assert!(c.has_net("vdd") && c.has_net("0"));
        assert_eq!(c.vsources[0].volts, 1.0);
    }

    #[test]
    fn unit_suffixes() {
        let text = "\
.model nmos nmos (vto=0.4)
M1 q qb 0 0 nmos W=90n L=45n
.end
";
        let c = parse_netlist(text).unwrap();
        let m = &c.mosfets[0];
        assert!((m.w - 9.0e-8).abs() < 1e-20);
        assert!((m.l - 4.5e-8).abs() < 1e-20);
        assert_eq!(parse_number("10meg"), Some(1e7));
        assert_eq!(parse_number("2k"), Some(2e3));
        assert_eq!(parse_number("1.5e-3"), Some(1.5e-3));
        assert_eq!(parse_number("3f"), Some(3e-15));
        assert_eq!(parse_number("bogus"), None);
    }

    #[test]
    fn missing_bulk_is_parse_error() {
        let err = parse_netlist("M1 q qb 0 nmos W=90n\n.end\n").unwrap_err();
        match err {
            NetlistError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_model_reference() {
        let err = parse_netlist("M1 q qb 0 0 ghost W=90n L=45n\n.end\n").unwrap_err();
        assert!(matches!(err, NetlistError::Circuit { .. }));
    }

    #[test]
    fn duplicate_instance_name() {
        let text = "V1 a 0 1.0\nV1 b 0 2.0\n.end\n";
        assert!(matches!(parse_netlist(text), Err(NetlistError::Circuit { .. })));
    }

    #[test]
    fn continuation_lines() {
        let text = "\
.model nmos nmos (vto=0.4
+ kp=200u)
M1 a b 0 0 nmos
+ W=90n L=45n
.end
";
        let c = parse_netlist(text).unwrap();
        assert_eq!(c.mosfets.len(), 1);
        assert!((c.models["nmos"].kp - 200e-6).abs() < 1e-18);
    }

    #[test]
    fn empty_circuit_serializes_to_end_only() {
        assert_eq!(serialize_netlist(&Circuit::new()), ".end\n");
    }

    #[test]
    fn resistor_scientific_notation() {
        let mut c = Circuit::new();
        c.add_resistor("r1", "a", "0", 4700.0).unwrap();
        let text = serialize_netlist(&c);
        assert!(text.contains("r1 a 0 4.7e3"), "got: {text}");
        let back = parse_netlist(&text).unwrap();
        assert!(back.equivalent(&c));
    }

    #[test]
    fn builder_output_round_trips() {
        for topology in [Topology::SixT, Topology::NineT] {
            let cell = build_cell(&CellGeometry::new(topology)).unwrap();
            let text = serialize_netlist(&cell);
            let back = parse_netlist(&text).unwrap();
            assert!(back.equivalent(&cell), "{topology} round-trip mismatch:\n{text}");
        }
    }

    #[test]
    fn temperature_round_trips() {
        let mut c = Circuit::new();
        c.temperature = 85.0;
        c.add_resistor("r1", "a", "0", 10.0).unwrap();
        let back = parse_netlist(&serialize_netlist(&c)).unwrap();
        assert_eq!(back.temperature, 85.0);
    }

    #[test]
    fn model_defaults_fill_missing_keys() {
        let c = parse_netlist(".model m1 pmos (vto=-0.5)\n.end\n").unwrap();
        let p = &c.models["m1"];
        assert_eq!(p.vto, -0.5);
        assert_eq!(p.kp, DeviceParams::default_pmos().kp);
    }
}
