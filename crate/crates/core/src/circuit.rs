//! The layered generator ansatz.
//!
//! Rotation layers `l = 0..=depth` alternate with `depth` CNOT entangler
//! layers. Each rotation slot is `Rz(a) Rx(b) Rz(c)` as an operator product:
//! `Rz(c)` acts first. Layer 0 drops its first-applied `Rz` (a phase on `|0>`)
//! and layer `depth` drops its last-applied `Rz` (invisible to Z-basis
//! measurement), leaving `(3 * depth + 1) * n_qubits` parameters.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;

use crate::error::{check_index, Error, Result};
use crate::qsim::{rotation_matrix, Axis, StateVector};

/// One rotation gate position inside a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Param(usize),
    Pruned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationSlot {
    pub axis: Axis,
    pub slot: Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Rotation { qubit: usize, axis: Axis, param: usize },
    Cnot { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCircuit {
    rows: usize,
    cols: usize,
    depth: usize,
    entanglers: Vec<(usize, usize)>,
    /// `layout[l][q]` lists the three slots of qubit `q` in layer `l`, in
    /// application order.
    layout: Vec<Vec<[RotationSlot; 3]>>,
    ops: Vec<Op>,
    n_params: usize,
}

/// Nearest-neighbour CNOT pairs on the periodic `rows x cols` grid.
///
/// Horizontal cycles row by row, then vertical cycles column by column.
/// Self loops and repeated undirected edges (from dimensions of length <= 2)
/// are dropped, keeping the first occurrence.
pub fn entangler_pairs(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut push = |a: usize, b: usize| {
        if a != b && !pairs.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            pairs.push((a, b));
        }
    };
    for r in 0..rows {
        for c in 0..cols {
            push(r * cols + c, r * cols + (c + 1) % cols);
        }
    }
    for c in 0..cols {
        for r in 0..rows {
            push(r * cols + c, ((r + 1) % rows) * cols + c);
        }
    }
    pairs
}

impl ParamCircuit {
    pub fn new(rows: usize, cols: usize, depth: usize) -> Result<Self> {
        let n = rows * cols;
        if rows == 0 || cols == 0 {
            return Err(Error::Argument(format!("grid {rows}x{cols} is empty")));
        }
        if n > crate::qsim::MAX_QUBITS {
            return Err(Error::Size(n));
        }
        let entanglers = entangler_pairs(rows, cols);
        let mut layout = Vec::with_capacity(depth + 1);
        let mut ops = Vec::new();
        let mut next = 0usize;
        for layer in 0..=depth {
            let mut per_qubit = Vec::with_capacity(n);
            for qubit in 0..n {
                let axes = [Axis::Z, Axis::X, Axis::Z];
                let mut slots = [RotationSlot { axis: Axis::Z, slot: Slot::Pruned }; 3];
                for (pos, axis) in axes.into_iter().enumerate() {
                    let pruned = (layer == 0 && pos == 0) || (layer == depth && pos == 2);
                    let slot = if pruned {
                        Slot::Pruned
                    } else {
                        ops.push(Op::Rotation { qubit, axis, param: next });
                        next += 1;
                        Slot::Param(next - 1)
                    };
                    slots[pos] = RotationSlot { axis, slot };
                }
                per_qubit.push(slots);
            }
            layout.push(per_qubit);
            if layer < depth {
                ops.extend(
                    entanglers
                        .iter()
                        .map(|&(control, target)| Op::Cnot { control, target }),
                );
            }
        }
        Ok(Self {
            rows,
            cols,
            depth,
            entanglers,
            layout,
            ops,
            n_params: next,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_qubits(&self) -> usize {
        self.rows * self.cols
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn entanglers(&self) -> &[(usize, usize)] {
        &self.entanglers
    }

    pub fn rotation_layout(&self) -> &[Vec<[RotationSlot; 3]>] {
        &self.layout
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::Argument(format!(
                "circuit takes {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        Ok(())
    }

    /// Applies the circuit unitary to `state` in place.
    pub fn apply(&self, state: &mut StateVector, params: &ParamVector) -> Result<()> {
        self.check_params(params)?;
        self.check_register(state)?;
        for op in &self.ops {
            apply_op(state, op, params, false);
        }
        Ok(())
    }

    /// Applies the inverse circuit unitary to `state` in place.
    pub fn apply_inverse(&self, state: &mut StateVector, params: &ParamVector) -> Result<()> {
        self.check_params(params)?;
        self.check_register(state)?;
        for op in self.ops.iter().rev() {
            apply_op(state, op, params, true);
        }
        Ok(())
    }

    fn check_register(&self, state: &StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits() {
            return Err(Error::Argument(format!(
                "state has {} qubits, circuit has {}",
                state.n_qubits(),
                self.n_qubits()
            )));
        }
        Ok(())
    }

    /// `U_theta |0...0>`.
    pub fn forward(&self, params: &ParamVector) -> Result<StateVector> {
        let mut state = StateVector::zero(self.n_qubits())?;
        self.apply(&mut state, params)?;
        Ok(state)
    }

    pub fn probabilities(&self, params: &ParamVector) -> Result<Vec<f64>> {
        Ok(self.forward(params)?.probabilities())
    }

    /// Parameter-shift gradient of every output probability with respect to
    /// parameter `index`: `(p(theta+) - p(theta-)) / 2`.
    pub fn born_gradient(&self, params: &ParamVector, index: usize) -> Result<Vec<f64>> {
        self.check_params(params)?;
        let plus = self.probabilities(&params.shifted(index, 1.0)?)?;
        let minus = self.probabilities(&params.shifted(index, -1.0)?)?;
        Ok(plus
            .iter()
            .zip(&minus)
            .map(|(p, m)| 0.5 * (p - m))
            .collect())
    }

    /// Gradient of `sum_x observable[x] * p_theta(x)` for every parameter in a
    /// single reverse sweep (adjoint differentiation). Agrees with the
    /// parameter-shift route to rounding.
    pub fn expectation_gradient(&self, params: &ParamVector, observable: &[f64]) -> Result<Vec<f64>> {
        let mut psi = self.forward(params)?;
        if observable.len() != psi.dim() {
            return Err(Error::Argument(format!(
                "observable has {} entries, state has {}",
                observable.len(),
                psi.dim()
            )));
        }
        let mut lambda = psi.clone();
        for (a, &o) in lambda.amplitudes_mut().iter_mut().zip(observable) {
            *a *= o;
        }
        let mut grad = vec![0.0; self.n_params];
        for op in self.ops.iter().rev() {
            if let Op::Rotation { qubit, axis, param } = *op {
                // d<O>/dtheta = Im <lambda| sigma |psi>, both taken after this gate
                grad[param] = pauli_overlap_im(&lambda, &psi, qubit, axis);
            }
            apply_op(&mut psi, op, params, true);
            apply_op(&mut lambda, op, params, true);
        }
        Ok(grad)
    }
}

fn apply_op(state: &mut StateVector, op: &Op, params: &ParamVector, inverse: bool) {
    match *op {
        Op::Rotation { qubit, axis, param } => {
            let angle = params.0[param];
            let u = rotation_matrix(axis, if inverse { -angle } else { angle })
                .expect("parameter vectors hold finite angles");
            state.apply_1q_in_place(qubit, &u);
        }
        Op::Cnot { control, target } => state.cnot_in_place(control, target),
    }
}

fn pauli_overlap_im(lambda: &StateVector, psi: &StateVector, qubit: usize, axis: Axis) -> f64 {
    let bit = 1usize << qubit;
    let (l, p) = (lambda.amplitudes(), psi.amplitudes());
    let mut acc = 0.0;
    match axis {
        Axis::Z => {
            for i in 0..l.len() {
                let v = (l[i].conj() * p[i]).im;
                acc += if i & bit == 0 { v } else { -v };
            }
        }
        Axis::X => {
            for i in 0..l.len() {
                acc += (l[i].conj() * p[i ^ bit]).im;
            }
        }
    }
    acc
}

/// Circuit angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("parameter value {v} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Independent uniform angles in `[0, 2 pi)`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.gen_range(0.0..TAU)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with `values[index]` moved by `sign * pi / 2`.
    pub fn shifted(&self, index: usize, sign: f64) -> Result<Self> {
        check_index(index, self.0.len())?;
        let mut out = self.clone();
        out.0[index] += sign * FRAC_PI_2;
        Ok(out)
    }
}

pub fn build_circuit(rows: usize, cols: usize, depth: usize) -> Result<ParamCircuit> {
    ParamCircuit::new(rows, cols, depth)
}

pub fn shifted_params(params: &ParamVector, index: usize, sign: f64) -> Result<ParamVector> {
    params.shifted(index, sign)
}
