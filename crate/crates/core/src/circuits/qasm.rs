//! OpenQASM 2.0 export over the gate set `x, h, t, rz, rx, cx`, and a
//! parser for the same subset.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write;

use super::{Circuit, Gate, GateKind, TargetKind};
use crate::error::{CsbError, Result};
use crate::qcore::linalg::CMatrix;

/// `m ≅ R_Z(a) R_Y(b) R_Z(c)` up to a global phase.
fn zyz(m: &CMatrix) -> (f64, f64, f64) {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let v = m.map(|x| x / det.sqrt());
    let (cos, sin) = (v[(1, 1)].norm(), v[(1, 0)].norm());
    let b = 2.0 * sin.atan2(cos);
    let sum = if cos > 1e-12 { v[(1, 1)].arg() } else { 0.0 };
    let diff = if sin > 1e-12 { v[(1, 0)].arg() } else { 0.0 };
    (sum + diff, b, sum - diff)
}

enum Prim {
    X(usize),
    H(usize),
    T(usize),
    Rz(f64, usize),
    Rx(f64, usize),
    Cx(usize, usize),
}

fn ry(theta: f64, q: usize, out: &mut Vec<Prim>) {
    out.extend([Prim::Rz(-FRAC_PI_2, q), Prim::Rx(theta, q), Prim::Rz(FRAC_PI_2, q)]);
}

fn zz(theta: f64, a: usize, b: usize, out: &mut Vec<Prim>) {
    out.extend([Prim::Cx(a, b), Prim::Rz(theta, b), Prim::Cx(a, b)]);
}

fn lower(g: &Gate, out: &mut Vec<Prim>) {
    let q = g.qubits[0];
    match &g.kind {
        GateKind::X => out.push(Prim::X(q)),
        GateKind::H => out.push(Prim::H(q)),
        GateKind::T => out.push(Prim::T(q)),
        GateKind::Z => out.push(Prim::Rz(PI, q)),
        GateKind::S => out.push(Prim::Rz(FRAC_PI_2, q)),
        GateKind::Sdg => out.push(Prim::Rz(-FRAC_PI_2, q)),
        GateKind::Tdg => out.push(Prim::Rz(-FRAC_PI_4, q)),
        GateKind::Rz(a) => out.push(Prim::Rz(*a, q)),
        GateKind::Rx(a) => out.push(Prim::Rx(*a, q)),
        GateKind::Ry(a) => ry(*a, q, out),
        GateKind::Y | GateKind::U(_) => {
            let (a, b, c) = zyz(&g.matrix());
            out.extend([Prim::Rz(c - FRAC_PI_2, q), Prim::Rx(b, q), Prim::Rz(a + FRAC_PI_2, q)]);
        }
        GateKind::Cx => out.push(Prim::Cx(q, g.qubits[1])),
        GateKind::Cz => {
            let t = g.qubits[1];
            out.extend([Prim::H(t), Prim::Cx(q, t), Prim::H(t)]);
        }
        GateKind::Zz(theta) => zz(*theta, q, g.qubits[1], out),
        GateKind::Fsim { theta, phi } => {
            let b = g.qubits[1];
            // Controlled phase, then the XX and YY halves of the swap block.
            out.extend([Prim::Rz(phi / 2.0, q), Prim::Rz(phi / 2.0, b)]);
            zz(-phi / 2.0, q, b, out);
            out.extend([Prim::H(q), Prim::H(b)]);
            zz(*theta, q, b, out);
            out.extend([Prim::H(q), Prim::H(b)]);
            out.extend([Prim::Rx(FRAC_PI_2, q), Prim::Rx(FRAC_PI_2, b)]);
            zz(*theta, q, b, out);
            out.extend([Prim::Rx(-FRAC_PI_2, q), Prim::Rx(-FRAC_PI_2, b)]);
        }
    }
}

/// Serialises a circuit, optionally followed by a measurement of every qubit.
pub fn to_qasm(circ: &Circuit, measure: bool) -> String {
    let n = circ.width();
    let mut prims = Vec::new();
    for g in circ.gates() {
        lower(g, &mut prims);
    }
    let mut s = String::new();
    s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(s, "qreg q[{n}];");
    if measure {
        let _ = writeln!(s, "creg c[{n}];");
    }
    for p in prims {
        let _ = match p {
            Prim::X(q) => writeln!(s, "x q[{q}];"),
            Prim::H(q) => writeln!(s, "h q[{q}];"),
            Prim::T(q) => writeln!(s, "t q[{q}];"),
            Prim::Rz(a, q) => writeln!(s, "rz({a}) q[{q}];"),
            Prim::Rx(a, q) => writeln!(s, "rx({a}) q[{q}];"),
            Prim::Cx(a, b) => writeln!(s, "cx q[{a}],q[{b}];"),
        };
    }
    if measure {
        for q in 0..n {
            let _ = writeln!(s, "measure q[{q}] -> c[{q}];");
        }
    }
    s
}

fn parse_angle(text: &str, line: usize) -> Result<f64> {
    let err = || CsbError::Qasm {
        line,
        reason: format!("cannot parse angle `{text}`"),
    };
    let t = text.trim();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, t),
    };
    let value = if let Some(rest) = body.strip_prefix("pi") {
        let rest = rest.trim();
        if rest.is_empty() {
            PI
        } else if let Some(den) = rest.strip_prefix('/') {
            PI / den.trim().parse::<f64>().map_err(|_| err())?
        } else {
            return Err(err());
        }
    } else if let Some(num) = body.strip_suffix("*pi") {
        num.trim().parse::<f64>().map_err(|_| err())? * PI
    } else {
        body.parse::<f64>().map_err(|_| err())?
    };
    Ok(sign * value)
}

fn parse_qubit(text: &str, line: usize) -> Result<usize> {
    text.trim()
        .strip_prefix("q[")
        .and_then(|r| r.strip_suffix(']'))
        .and_then(|i| i.parse().ok())
        .ok_or_else(|| CsbError::Qasm {
            line,
            reason: format!("bad qubit reference `{text}`"),
        })
}

/// Parses the subset written by [`to_qasm`]. Gates are packed greedily into
/// layers; measurements and barriers are skipped.
pub fn from_qasm(text: &str) -> Result<Circuit> {
    let mut width = None;
    let mut gates: Vec<(usize, Gate)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stmt = raw.split("//").next().unwrap_or("").trim();
        if stmt.is_empty() {
            continue;
        }
        let stmt = stmt.strip_suffix(';').ok_or_else(|| CsbError::Qasm {
            line,
            reason: "missing `;`".into(),
        })?;
        let (head, args) = match stmt.find([' ', '(']) {
            Some(p) if stmt[p..].starts_with('(') => {
                let close = stmt.find(')').ok_or_else(|| CsbError::Qasm {
                    line,
                    reason: "unclosed parameter list".into(),
                })?;
                (&stmt[..close + 1], stmt[close + 1..].trim())
            }
            Some(p) => (&stmt[..p], stmt[p..].trim()),
            None => (stmt, ""),
        };
        let (name, param) = match head.find('(') {
            Some(p) => (&head[..p], Some(parse_angle(&head[p + 1..head.len() - 1], line)?)),
            None => (head, None),
        };
        let kind = match (name, param) {
            ("OPENQASM", _) | ("include", _) | ("creg", _) | ("measure", _) | ("barrier", _) => continue,
            ("qreg", _) => {
                let n = args
                    .strip_prefix("q[")
                    .and_then(|r| r.strip_suffix(']'))
                    .and_then(|i| i.parse::<usize>().ok())
                    .ok_or_else(|| CsbError::Qasm {
                        line,
                        reason: format!("bad register `{args}`"),
                    })?;
                width = Some(n);
                continue;
            }
            ("x", None) => GateKind::X,
            ("h", None) => GateKind::H,
            ("t", None) => GateKind::T,
            ("tdg", None) => GateKind::Tdg,
            ("cx", None) => GateKind::Cx,
            ("rz", Some(a)) => GateKind::Rz(a),
            ("rx", Some(a)) => GateKind::Rx(a),
            ("ry", Some(a)) => GateKind::Ry(a),
            _ => {
                return Err(CsbError::Qasm {
                    line,
                    reason: format!("unsupported statement `{name}`"),
                })
            }
        };
        let qubits = args
            .split(',')
            .map(|a| parse_qubit(a, line))
            .collect::<Result<Vec<_>>>()?;
        gates.push((line, Gate::new(kind, &qubits)));
    }
    let n = width.ok_or(CsbError::Qasm {
        line: 0,
        reason: "no qreg declaration".into(),
    })?;
    let mut circ = Circuit::new(n, TargetKind::Custom);
    let mut layer: Vec<Gate> = Vec::new();
    for (line, g) in gates {
        if let Some(&q) = g.qubits.iter().find(|&&q| q >= n) {
            return Err(CsbError::Qasm {
                line,
                reason: format!("qubit {q} outside register of {n}"),
            });
        }
        if layer.iter().any(|e| e.qubits.iter().any(|q| g.qubits.contains(q))) {
            circ.push_layer(std::mem::take(&mut layer))?;
        }
        layer.push(g);
    }
    if !layer.is_empty() {
        circ.push_layer(layer)?;
    }
    Ok(circ)
}
