//! Exact statevector simulation.
//!
//! Bit convention: qubit `i` is bit `i` of the basis-state integer, so qubit 0
//! is the least significant bit. Bitstrings are written with qubit 0 first,
//! which for images is row-major pixel order.

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{check_index, Error, Result};
use crate::inference::Evidence;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

const NORM_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(Error::Size(n_qubits))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Equal superposition over all basis states.
    pub fn uniform(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self {
            n_qubits,
            amps: vec![a; dim],
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two and the vector
    /// must be normalized to within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Argument(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("state norm {norm} is not 1")));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Random normalized state, for tests and property checks.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let mut amps: Vec<Complex64> = (0..1usize << n_qubits)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub(crate) fn apply_1q_in_place(&mut self, qubit: usize, u: &SingleQubitUnitary) {
        let [[u00, u01], [u10, u11]] = u.0;
        let stride = 1usize << qubit;
        if u01 == ZERO && u10 == ZERO {
            for (i, a) in self.amps.iter_mut().enumerate() {
                *a *= if i & stride == 0 { u00 } else { u11 };
            }
            return;
        }
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = u00 * x0 + u01 * x1;
                *a1 = u10 * x0 + u11 * x1;
            }
        }
    }

    pub(crate) fn cnot_in_place(&mut self, control: usize, target: usize) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amps.len() {
            // visit each swapped pair once, from its target-unset member
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
    }

    pub(crate) fn phase_flip_in_place(&mut self, evidence: &Evidence) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if evidence.matches(i) {
                *a = -*a;
            }
        }
    }
}

pub fn zero_state(n_qubits: usize) -> Result<StateVector> {
    StateVector::zero(n_qubits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Z,
}

impl Axis {
    /// The Pauli matrix generating rotations about this axis.
    pub fn pauli(self) -> SingleQubitUnitary {
        match self {
            Axis::X => SingleQubitUnitary([[ZERO, ONE], [ONE, ZERO]]),
            Axis::Z => SingleQubitUnitary([[ONE, ZERO], [ZERO, -ONE]]),
        }
    }
}

/// A 2x2 unitary, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitUnitary(pub [[Complex64; 2]; 2]);

impl SingleQubitUnitary {
    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn dagger(&self) -> Self {
        let m = self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let (a, b) = (self.0, rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }

    /// Largest entry-wise deviation of `U^dagger U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.dagger().matmul(self);
        let id = Self::identity();
        p.0.iter()
            .flatten()
            .zip(id.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `exp(-i * angle * sigma_axis / 2)`.
pub fn rotation_matrix(axis: Axis, angle: f64) -> Result<SingleQubitUnitary> {
    if !angle.is_finite() {
        return Err(Error::Domain(format!("rotation angle {angle} is not finite")));
    }
    let (s, c) = (angle / 2.0).sin_cos();
    let m = match axis {
        Axis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [
            [Complex64::new(c, -s), ZERO],
            [ZERO, Complex64::new(c, s)],
        ],
    };
    Ok(SingleQubitUnitary(m))
}

pub fn apply_single_qubit(
    state: &StateVector,
    qubit: usize,
    u: &SingleQubitUnitary,
) -> Result<StateVector> {
    check_index(qubit, state.n_qubits)?;
    let mut out = state.clone();
    out.apply_1q_in_place(qubit, u);
    Ok(out)
}

pub fn apply_cnot(state: &StateVector, control: usize, target: usize) -> Result<StateVector> {
    check_index(control, state.n_qubits)?;
    check_index(target, state.n_qubits)?;
    if control == target {
        return Err(Error::Argument(format!(
            "CNOT control and target are both qubit {control}"
        )));
    }
    let mut out = state.clone();
    out.cnot_in_place(control, target);
    Ok(out)
}

/// Negates every amplitude whose basis state agrees with `evidence`.
pub fn oracle_phase_flip(state: &StateVector, evidence: &Evidence) -> Result<StateVector> {
    evidence.check_register(state.n_qubits)?;
    let mut out = state.clone();
    out.phase_flip_in_place(evidence);
    Ok(out)
}

pub fn probabilities(state: &StateVector) -> Vec<f64> {
    state.probabilities()
}

/// Projective measurement in the computational basis, `count` times.
/// Outcomes are basis indices.
pub fn sample<R: Rng + ?Sized>(state: &StateVector, rng: &mut R, count: usize) -> Vec<usize> {
    sample_distribution(&state.probabilities(), rng, count)
        .expect("a normalized state always has a valid outcome distribution")
}

/// Draws `count` i.i.d. indices from a discrete distribution.
pub fn sample_distribution<R: Rng + ?Sized>(
    probs: &[f64],
    rng: &mut R,
    count: usize,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::Argument(format!("cannot sample distribution: {e}")))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

pub fn bit_of(index: usize, qubit: usize) -> u8 {
    ((index >> qubit) & 1) as u8
}

/// Bits in qubit order (element `i` is qubit `i`) to a basis index.
pub fn bits_to_index(bits: &[u8]) -> Result<usize> {
    if bits.len() > MAX_QUBITS {
        return Err(Error::Size(bits.len()));
    }
    bits.iter().enumerate().try_fold(0usize, |acc, (i, &b)| match b {
        0 => Ok(acc),
        1 => Ok(acc | (1 << i)),
        _ => Err(Error::Argument(format!("bit value {b} is not 0 or 1"))),
    })
}

pub fn index_to_bits(index: usize, n_qubits: usize) -> Vec<u8> {
    (0..n_qubits).map(|q| bit_of(index, q)).collect()
}

/// Renders a basis index as a `0`/`1` string, qubit 0 first.
pub fn format_bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if bit_of(index, q) == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bitstring(s: &str) -> Result<usize> {
    let bits = s
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::Argument(format!("invalid bit character {c:?}"))),
        })
        .collect::<Result<Vec<u8>>>()?;
    bits_to_index(&bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_dev(a: &StateVector, b: &StateVector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_state_layouts() {
        assert_eq!(zero_state(1).unwrap().amplitudes(), &[ONE, ZERO]);
        assert_eq!(zero_state(2).unwrap().amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        let s = zero_state(9).unwrap();
        assert_eq!(s.dim(), 512);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(matches!(zero_state(0), Err(Error::Size(0))));
        assert!(matches!(zero_state(25), Err(Error::Size(25))));
    }

    #[test]
    fn rotation_examples() {
        let id = rotation_matrix(Axis::Z, 0.0).unwrap();
        assert!(id.0 == SingleQubitUnitary::identity().0);

        let rx = rotation_matrix(Axis::X, PI).unwrap();
        let expect = [[ZERO, c(0.0, -1.0)], [c(0.0, -1.0), ZERO]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((rx.0[i][j] - expect[i][j]).norm() < 1e-15);
            }
        }

        // diagonal exponential computed entry by entry: exp(-i a s / 2) for s = +-1
        let a = PI / 2.0;
        let rz = rotation_matrix(Axis::Z, a).unwrap();
        let e0 = c(0.0, -a / 2.0).exp();
        let e1 = c(0.0, a / 2.0).exp();
        assert!((rz.0[0][0] - e0).norm() < 1e-15);
        assert!((rz.0[1][1] - e1).norm() < 1e-15);
        assert_eq!(rz.0[0][1], ZERO);

        assert!(matches!(rotation_matrix(Axis::X, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(
            rotation_matrix(Axis::Z, f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    /// Dense Kronecker-product oracle for a 2-qubit register, qubit 0 = LSB.
    fn dense_on_qubit0(u: &SingleQubitUnitary) -> [[Complex64; 4]; 4] {
        let mut m = [[ZERO; 4]; 4];
        for row in 0..4 {
            for col in 0..4 {
                // I (qubit 1) (x) U (qubit 0)
                if row >> 1 == col >> 1 {
                    m[row][col] = u.0[row & 1][col & 1];
                }
            }
        }
        m
    }

    #[test]
    fn rx_pi_on_qubit0_matches_dense_oracle() {
        let u = rotation_matrix(Axis::X, PI).unwrap();
        let s = zero_state(2).unwrap();
        let out = apply_single_qubit(&s, 0, &u).unwrap();
        let m = dense_on_qubit0(&u);
        for row in 0..4 {
            let expect: Complex64 = (0..4).map(|col| m[row][col] * s.amplitudes()[col]).sum();
            assert!((out.amplitudes()[row] - expect).norm() < 1e-15);
        }
        // -i on "10" (qubit 0 set), basis index 1
        assert!((out.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(format_bitstring(1, 2), "10");
    }

    #[test]
    fn identity_and_rz_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = StateVector::random(3, &mut rng).unwrap();
        let out = apply_single_qubit(&s, 1, &SingleQubitUnitary::identity()).unwrap();
        assert_eq!(out, s);

        let z = zero_state(1).unwrap();
        let rz = rotation_matrix(Axis::Z, 1.234).unwrap();
        let out = apply_single_qubit(&z, 0, &rz).unwrap();
        assert!((out.probabilities()[0] - 1.0).abs() < 1e-15);

        assert!(matches!(
            apply_single_qubit(&z, 1, &rz),
            Err(Error::Index { index: 1, limit: 1 })
        ));
    }

    #[test]
    fn cnot_examples() {
        let s = zero_state(2).unwrap();
        assert_eq!(apply_cnot(&s, 0, 1).unwrap(), s);

        // "10": qubit 0 set
        let mut amps = vec![ZERO; 4];
        amps[parse_bitstring("10").unwrap()] = ONE;
        let s = StateVector::from_amplitudes(amps).unwrap();
        let out = apply_cnot(&s, 0, 1).unwrap();
        assert_eq!(out.amplitudes()[parse_bitstring("11").unwrap()], ONE);

        assert!(matches!(apply_cnot(&s, 1, 1), Err(Error::Argument(_))));
        assert!(matches!(apply_cnot(&s, 0, 2), Err(Error::Index { .. })));
    }

    #[test]
    fn oracle_examples() {
        let s = StateVector::uniform(3).unwrap();
        let flipped = oracle_phase_flip(&s, &Evidence::empty(3)).unwrap();
        for (a, b) in flipped.amplitudes().iter().zip(s.amplitudes()) {
            assert_eq!(*a, -*b);
        }

        let ev = Evidence::new(3, &[(0, 1), (1, 0), (2, 0)]).unwrap();
        let out = oracle_phase_flip(&s, &ev).unwrap();
        for idx in 0..8 {
            let expect = if format_bitstring(idx, 3) == "100" { -1.0 } else { 1.0 };
            assert_eq!(out.amplitudes()[idx], s.amplitudes()[idx] * expect);
        }
        let twice = oracle_phase_flip(&out, &ev).unwrap();
        assert_eq!(twice, s);
    }

    #[test]
    fn probabilities_examples() {
        assert_eq!(probabilities(&zero_state(2).unwrap()), vec![1.0, 0.0, 0.0, 0.0]);
        let p = probabilities(&StateVector::uniform(2).unwrap());
        for v in p {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = zero_state(3).unwrap();
        assert!(sample(&z, &mut rng, 100).iter().all(|&x| x == 0));

        let plus = StateVector::uniform(1).unwrap();
        let draws = sample(&plus, &mut rng, 100_000);
        let ones = draws.iter().filter(|&&x| x == 1).count() as f64 / 1e5;
        assert!((ones - 0.5).abs() < 0.01, "frequency {ones}");

        let a = sample(&plus, &mut ChaCha8Rng::seed_from_u64(5), 64);
        let b = sample(&plus, &mut ChaCha8Rng::seed_from_u64(5), 64);
        assert_eq!(a, b);
        assert!(sample(&plus, &mut rng, 0).is_empty());
    }

    #[test]
    fn sampling_tracks_born_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let s = StateVector::random(4, &mut rng).unwrap();
            let p = s.probabilities();
            let draws = sample(&s, &mut rng, 100_000);
            let mut freq = vec![0.0; 16];
            for x in draws {
                freq[x] += 1e-5;
            }
            let tv: f64 = 0.5 * freq.iter().zip(&p).map(|(f, q)| (f - q).abs()).sum::<f64>();
            assert!(tv < 0.02, "total variation {tv}");
        }
    }

    #[test]
    fn bitstring_helpers() {
        assert_eq!(bits_to_index(&[1, 0, 1]).unwrap(), 5);
        assert_eq!(index_to_bits(5, 3), vec![1, 0, 1]);
        assert_eq!(format_bitstring(5, 4), "1010");
        assert!(bits_to_index(&[2]).is_err());
        assert!(parse_bitstring("01x").is_err());
    }

    #[test]
    fn from_amplitudes_validation() {
        assert!(StateVector::from_amplitudes(vec![ONE, ZERO, ZERO]).is_err());
        assert!(StateVector::from_amplitudes(vec![ONE, ONE]).is_err());
    }

    proptest! {
        #[test]
        fn bit_convention_round_trip(index in 0usize..(1 << 12)) {
            let bits = index_to_bits(index, 12);
            prop_assert_eq!(bits_to_index(&bits).unwrap(), index);
            prop_assert_eq!(parse_bitstring(&format_bitstring(index, 12)).unwrap(), index);
        }

        #[test]
        fn rotations_are_unitary(angle in -20.0f64..20.0, x_axis in any::<bool>()) {
            let axis = if x_axis { Axis::X } else { Axis::Z };
            prop_assert!(rotation_matrix(axis, angle).unwrap().unitarity_error() < 1e-12);
        }

        #[test]
        fn gates_preserve_norm(seed in any::<u64>(), angle in -10.0f64..10.0, q in 0usize..4, t in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = StateVector::random(4, &mut rng).unwrap();
            let u = rotation_matrix(Axis::X, angle).unwrap();
            let r = apply_single_qubit(&s, q, &u).unwrap();
            prop_assert!((r.norm_sqr() - s.norm_sqr()).abs() < 1e-10);
            if q != t {
                let r2 = apply_cnot(&r, q, t).unwrap();
                prop_assert!((r2.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn cnot_and_oracle_are_involutions(seed in any::<u64>(), c in 0usize..4, t in 0usize..4, mask in 0usize..16, value in 0usize..16) {
            prop_assume!(c != t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = StateVector::random(4, &mut rng).unwrap();
            let twice = apply_cnot(&apply_cnot(&s, c, t).unwrap(), c, t).unwrap();
            prop_assert!(max_dev(&twice, &s) < 1e-12);

            let pairs: Vec<(usize, u8)> = (0..4)
                .filter(|q| mask >> q & 1 == 1)
                .map(|q| (q, bit_of(value, q)))
                .collect();
            let ev = Evidence::new(4, &pairs).unwrap();
            let twice = oracle_phase_flip(&oracle_phase_flip(&s, &ev).unwrap(), &ev).unwrap();
            prop_assert!(max_dev(&twice, &s) < 1e-12);
        }
    }
}
