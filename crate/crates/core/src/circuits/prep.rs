//! Initial-state preparation circuits.

use super::{Circuit, Gate, GateKind, TargetKind};
use crate::error::{invalid, Result};
use crate::qcore::linalg::C64;

fn bit(x: usize, n: usize, q: usize) -> bool {
    (x >> (n - 1 - q)) & 1 == 1
}

/// `|x⟩` from `|0…0⟩` with X gates.
pub fn prepare_basis_state(n: usize, x: usize) -> Result<Circuit> {
    prepare_pair_state(n, x, x)
}

/// Circuit mapping `|0…0⟩` to `(|x⟩ + |y⟩)/√2`, or to `|x⟩` when `x = y`.
///
/// Basis indices use qubit 0 as the most significant bit.
pub fn prepare_pair_state(n: usize, x: usize, y: usize) -> Result<Circuit> {
    if n == 0 || n >= usize::BITS as usize || x >> n != 0 || y >> n != 0 {
        return Err(invalid("x/y", format!("basis indices must fit in {n} qubits")));
    }
    let mut c = Circuit::new(n, TargetKind::Preparation);
    let diff: Vec<usize> = (0..n).filter(|&q| bit(x, n, q) != bit(y, n, q)).collect();
    // Orient so that the first differing qubit is 0 in x.
    let (x, _) = match diff.first() {
        Some(&d0) if bit(x, n, d0) => (y, x),
        _ => (x, y),
    };
    let mut first: Vec<Gate> = (0..n)
        .filter(|&q| !diff.contains(&q) && bit(x, n, q))
        .map(|q| Gate::new(GateKind::X, &[q]))
        .collect();
    if let Some(&d0) = diff.first() {
        first.push(Gate::new(GateKind::H, &[d0]));
    }
    first.sort_by_key(|g| g.qubits[0]);
    if !first.is_empty() {
        c.push_layer(first)?;
    }
    for w in diff.windows(2) {
        c.push_layer(vec![Gate::new(GateKind::Cx, &[w[0], w[1]])])?;
    }
    let flips: Vec<Gate> = diff
        .iter()
        .skip(1)
        .filter(|&&q| bit(x, n, q))
        .map(|&q| Gate::new(GateKind::X, &[q]))
        .collect();
    if !flips.is_empty() {
        c.push_layer(flips)?;
    }
    Ok(c)
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Uniformly controlled rotation: for each control pattern `c` (first
/// control is the most significant bit) applies `R(angles[c])` on `target`.
fn uniformly_controlled(
    c: &mut Circuit,
    controls: &[usize],
    target: usize,
    angles: &[f64],
    rot: fn(f64) -> GateKind,
) -> Result<()> {
    let k = controls.len();
    let m = 1usize << k;
    if angles.iter().all(|a| a.abs() < 1e-14) {
        return Ok(());
    }
    if k == 0 {
        return c.push_layer(vec![Gate::new(rot(angles[0]), &[target])]);
    }
    // φ = Mᵀ θ / 2^k with M[c][i] = (-1)^{popcount(c & gray(i))}.
    let phi: Vec<f64> = (0..m)
        .map(|i| {
            (0..m)
                .map(|cc| {
                    let sign = if (cc & gray(i)).count_ones().is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    sign * angles[cc]
                })
                .sum::<f64>()
                / m as f64
        })
        .collect();
    for (i, &p) in phi.iter().enumerate() {
        if p.abs() > 1e-14 {
            c.push_layer(vec![Gate::new(rot(p), &[target])])?;
        }
        let changed = gray(i) ^ gray((i + 1) % m);
        let b = changed.trailing_zeros() as usize;
        c.push_layer(vec![Gate::new(GateKind::Cx, &[controls[k - 1 - b], target])])?;
    }
    Ok(())
}

/// Exact preparation of an arbitrary state, up to global phase, by
/// uniformly controlled rotations. Gate count grows as `2^n`.
pub fn synthesize_state(psi: &[C64]) -> Result<Circuit> {
    let d = psi.len();
    if d < 2 || !d.is_power_of_two() {
        return Err(invalid("psi", "length must be a power of two"));
    }
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return Err(invalid("psi", "zero or non-finite state"));
    }
    let n = d.trailing_zeros() as usize;
    let mut c = Circuit::new(n, TargetKind::Preparation);
    let prob: Vec<f64> = psi.iter().map(|a| a.norm_sqr() / (norm * norm)).collect();

    // Magnitudes, qubit by qubit from the most significant.
    for q in 0..n {
        let rest = n - q;
        let angles: Vec<f64> = (0..1usize << q)
            .map(|prefix| {
                let block = &prob[prefix << rest..(prefix + 1) << rest];
                let half = block.len() / 2;
                let m0: f64 = block[..half].iter().sum::<f64>().sqrt();
                let m1: f64 = block[half..].iter().sum::<f64>().sqrt();
                2.0 * m1.atan2(m0)
            })
            .collect();
        let controls: Vec<usize> = (0..q).collect();
        uniformly_controlled(&mut c, &controls, q, &angles, GateKind::Ry)?;
    }

    // Phases: peel a uniformly controlled Rz off the last qubit at each level.
    let mut omega: Vec<f64> = psi
        .iter()
        .map(|a| if a.norm() > 1e-14 { a.arg() } else { 0.0 })
        .collect();
    let mut stages = Vec::new();
    for q in (0..n).rev() {
        let half = omega.len() / 2;
        let beta: Vec<f64> = (0..half).map(|p| omega[2 * p + 1] - omega[2 * p]).collect();
        omega = (0..half).map(|p| 0.5 * (omega[2 * p] + omega[2 * p + 1])).collect();
        stages.push((q, beta));
    }
    for (q, beta) in stages {
        let controls: Vec<usize> = (0..q).collect();
        uniformly_controlled(&mut c, &controls, q, &beta, GateKind::Rz)?;
    }
    Ok(c)
}
