//! Conditional sampling from a trained circuit by amplitude amplification.
//!
//! One Grover step is the evidence oracle (sign flip on matching basis
//! states) followed by the reflection `2|psi><psi| - 1`, which is built from
//! the circuit itself as `U (2|0><0| - 1) U^dagger`. Every step scales all
//! evidence-matching amplitudes by one common factor, so post-selected
//! measurements keep following `p(q | e)`.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;

use crate::bas::BasSpec;
use crate::circuit::{ParamCircuit, ParamVector};
use crate::error::{check_index, Error, Result};
use crate::qsim::{self, StateVector};

pub const DEFAULT_MAX_REJECTS: usize = 1000;

/// Observed qubit values. Unassigned qubits form the query set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    n_qubits: usize,
    mask: usize,
    value: usize,
}

impl Evidence {
    pub fn empty(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            mask: 0,
            value: 0,
        }
    }

    pub fn new(n_qubits: usize, assignments: &[(usize, u8)]) -> Result<Self> {
        let mut ev = Self::empty(n_qubits);
        for &(qubit, bit) in assignments {
            check_index(qubit, n_qubits)?;
            if bit > 1 {
                return Err(Error::Argument(format!("evidence bit {bit} is not 0 or 1")));
            }
            if ev.mask >> qubit & 1 == 1 {
                return Err(Error::Argument(format!("qubit {qubit} assigned twice")));
            }
            ev.mask |= 1 << qubit;
            ev.value |= (bit as usize) << qubit;
        }
        Ok(ev)
    }

    /// Parses a row-major string over `{0, 1, .}` where `.` marks a missing
    /// pixel.
    pub fn parse(s: &str) -> Result<Self> {
        let assignments = s
            .chars()
            .enumerate()
            .filter_map(|(i, ch)| match ch {
                '0' => Some(Ok((i, 0))),
                '1' => Some(Ok((i, 1))),
                '.' => None,
                other => Some(Err(Error::Usage(format!(
                    "evidence character {other:?} at position {i} is not 0, 1 or '.'"
                )))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(s.chars().count(), &assignments)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn observed(&self) -> Vec<(usize, u8)> {
        (0..self.n_qubits)
            .filter(|q| self.mask >> q & 1 == 1)
            .map(|q| (q, qsim::bit_of(self.value, q)))
            .collect()
    }

    pub fn query_qubits(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|q| self.mask >> q & 1 == 0).collect()
    }

    pub fn n_observed(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn matches(&self, index: usize) -> bool {
        index & self.mask == self.value
    }

    pub(crate) fn check_register(&self, n_qubits: usize) -> Result<()> {
        if self.n_qubits != n_qubits {
            return Err(Error::Argument(format!(
                "evidence covers {} qubits, state has {n_qubits}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Row-major `{0, 1, .}` rendering.
    pub fn to_pattern(&self) -> String {
        (0..self.n_qubits)
            .map(|q| match (self.mask >> q & 1, self.value >> q & 1) {
                (0, _) => '.',
                (_, 1) => '1',
                _ => '0',
            })
            .collect()
    }
}

/// Marginal `p(e)` after each Grover step; entry `k` is after `k` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationTrace {
    pub marginals: Vec<f64>,
    pub best_step: usize,
}

impl AmplificationTrace {
    pub fn initial(&self) -> f64 {
        self.marginals[0]
    }

    pub fn best(&self) -> f64 {
        self.marginals[self.best_step]
    }

    pub fn gain(&self) -> f64 {
        self.best() / self.initial()
    }
}

/// Probability mass on basis states consistent with the evidence.
pub fn marginal_probability(state: &StateVector, evidence: &Evidence) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| evidence.matches(*i))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// `p(q | e)` over the full register: matching entries renormalized, all
/// others zero.
pub fn conditional_distribution(state: &StateVector, evidence: &Evidence) -> Result<Vec<f64>> {
    evidence.check_register(state.n_qubits())?;
    let pe = marginal_probability(state, evidence);
    if pe <= 0.0 {
        return Err(Error::Domain("evidence has zero probability".into()));
    }
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if evidence.matches(i) { a.norm_sqr() / pe } else { 0.0 })
        .collect())
}

/// `(2|psi><psi| - 1) state` with `|psi> = U|0>`, applied as
/// `U (2|0><0| - 1) U^dagger`.
pub fn reflect_about_psi(
    state: &StateVector,
    circuit: &ParamCircuit,
    params: &ParamVector,
) -> Result<StateVector> {
    let mut out = state.clone();
    reflect_in_place(&mut out, circuit, params)?;
    Ok(out)
}

fn reflect_in_place(state: &mut StateVector, circuit: &ParamCircuit, params: &ParamVector) -> Result<()> {
    circuit.apply_inverse(state, params)?;
    for a in state.amplitudes_mut().iter_mut().skip(1) {
        *a = -*a;
    }
    circuit.apply(state, params)
}

pub fn grover_step(
    state: &StateVector,
    circuit: &ParamCircuit,
    params: &ParamVector,
    evidence: &Evidence,
) -> Result<StateVector> {
    evidence.check_register(state.n_qubits())?;
    let mut out = state.clone();
    out.phase_flip_in_place(evidence);
    reflect_in_place(&mut out, circuit, params)?;
    Ok(out)
}

/// `ceil(pi/4 * sqrt(1/p0)) + 2`, or 0 when the evidence is impossible.
pub fn default_max_steps(p0: f64) -> usize {
    if p0 <= 0.0 {
        0
    } else {
        (FRAC_PI_4 * p0.recip().sqrt()).ceil() as usize + 2
    }
}

/// Runs Grover steps from `|psi>` for `k = 0..=max_steps` and returns the
/// state at the step count with the largest evidence marginal (earliest on
/// ties). `max_steps = None` uses [`default_max_steps`].
pub fn amplify(
    circuit: &ParamCircuit,
    params: &ParamVector,
    evidence: &Evidence,
    max_steps: Option<usize>,
) -> Result<(StateVector, AmplificationTrace)> {
    let psi = circuit.forward(params)?;
    evidence.check_register(psi.n_qubits())?;
    let p0 = marginal_probability(&psi, evidence);
    let max_steps = max_steps.unwrap_or_else(|| default_max_steps(p0));

    let mut marginals = vec![p0];
    let mut best_step = 0;
    let mut best_state = psi.clone();
    let mut current = psi;
    for k in 1..=max_steps {
        current = grover_step(&current, circuit, params, evidence)?;
        let p = marginal_probability(&current, evidence);
        marginals.push(p);
        if p > marginals[best_step] {
            best_step = k;
            best_state = current.clone();
        }
    }
    Ok((best_state, AmplificationTrace { marginals, best_step }))
}

/// Conditional samples obtained by measuring `state` and discarding draws
/// that disagree with the evidence. Fails once `max_rejects` consecutive
/// draws are rejected.
pub fn conditional_sample<R: Rng + ?Sized>(
    state: &StateVector,
    evidence: &Evidence,
    rng: &mut R,
    count: usize,
    max_rejects: usize,
) -> Result<Vec<usize>> {
    Ok(conditional_sample_with_rate(state, evidence, rng, count, max_rejects)?.0)
}

/// As [`conditional_sample`], also returning the observed acceptance rate.
pub fn conditional_sample_with_rate<R: Rng + ?Sized>(
    state: &StateVector,
    evidence: &Evidence,
    rng: &mut R,
    count: usize,
    max_rejects: usize,
) -> Result<(Vec<usize>, f64)> {
    evidence.check_register(state.n_qubits())?;
    if count == 0 {
        return Err(Error::Argument("sample count must be at least 1".into()));
    }
    let probs = state.probabilities();
    let dist = rand::distributions::WeightedIndex::new(&probs)
        .map_err(|e| Error::Domain(format!("cannot sample state: {e}")))?;
    let mut accepted = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let mut streak = 0usize;
    while accepted.len() < count {
        let x = rand::distributions::Distribution::sample(&dist, rng);
        attempts += 1;
        if evidence.matches(x) {
            accepted.push(x);
            streak = 0;
        } else {
            streak += 1;
            if streak >= max_rejects {
                return Err(Error::Inference {
                    accepted: accepted.len(),
                    attempts,
                    acceptance_rate: accepted.len() as f64 / attempts as f64,
                });
            }
        }
    }
    let rate = accepted.len() as f64 / attempts as f64;
    Ok((accepted, rate))
}

/// Image with missing pixels, row-major; `None` is a hole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialImage {
    pub spec: BasSpec,
    pub pixels: Vec<Option<u8>>,
}

impl PartialImage {
    pub fn parse(spec: BasSpec, s: &str) -> Result<Self> {
        let pixels = s
            .chars()
            .map(|c| match c {
                '0' => Ok(Some(0)),
                '1' => Ok(Some(1)),
                '.' => Ok(None),
                other => Err(Error::Usage(format!("invalid pixel character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if pixels.len() != spec.n_pixels() {
            return Err(Error::Usage(format!(
                "image has {} pixels, grid {}x{} needs {}",
                pixels.len(),
                spec.rows(),
                spec.cols(),
                spec.n_pixels()
            )));
        }
        Ok(Self { spec, pixels })
    }

    pub fn evidence(&self) -> Result<Evidence> {
        let assignments: Vec<(usize, u8)> = self
            .pixels
            .iter()
            .enumerate()
            .filter_map(|(q, p)| p.map(|b| (q, b)))
            .collect();
        Evidence::new(self.pixels.len(), &assignments)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inpainting {
    /// Completed image as a basis index.
    pub image: usize,
    pub trace: AmplificationTrace,
    pub acceptance_rate: f64,
}

/// Fills the holes of `partial` with one conditional sample drawn after
/// amplification.
pub fn inpaint<R: Rng + ?Sized>(
    circuit: &ParamCircuit,
    params: &ParamVector,
    partial: &PartialImage,
    rng: &mut R,
) -> Result<Inpainting> {
    let evidence = partial.evidence()?;
    if evidence.n_observed() == 0 {
        return Err(Error::Argument("image has no observed pixels".into()));
    }
    if evidence.n_observed() == evidence.n_qubits() {
        let image = evidence.value;
        let psi = circuit.forward(params)?;
        let trace = AmplificationTrace {
            marginals: vec![marginal_probability(&psi, &evidence)],
            best_step: 0,
        };
        return Ok(Inpainting {
            image,
            trace,
            acceptance_rate: 1.0,
        });
    }
    let (state, trace) = amplify(circuit, params, &evidence, None)?;
    let (samples, acceptance_rate) =
        match conditional_sample_with_rate(&state, &evidence, rng, 1, DEFAULT_MAX_REJECTS) {
            Ok(r) => r,
            // fall back to the most probable matching state so a completion is
            // always produced; the rate reports how poorly the evidence fits
            Err(Error::Inference { acceptance_rate, .. }) => {
                let best = most_likely_match(&state, &evidence);
                (vec![best], acceptance_rate)
            }
            Err(e) => return Err(e),
        };
    let query_mask: usize = evidence.query_qubits().iter().map(|q| 1 << q).sum();
    let image = (evidence.value & evidence.mask) | (samples[0] & query_mask);
    Ok(Inpainting {
        image,
        trace,
        acceptance_rate,
    })
}

fn most_likely_match(state: &StateVector, evidence: &Evidence) -> usize {
    let mut best = evidence.value;
    let mut best_p = -1.0;
    for (i, a) in state.amplitudes().iter().enumerate() {
        if evidence.matches(i) && a.norm_sqr() > best_p {
            best_p = a.norm_sqr();
            best = i;
        }
    }
    best
}
