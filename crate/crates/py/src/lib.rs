use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qgan::cli::Checkpoint;
use qgan::gan::{self, GradientMode, TrainConfig, TrainRecord, Trainer};
use qgan::inference::{self, Evidence, DEFAULT_MAX_REJECTS};
use qgan::{bas, circuit, qsim, BasSpec, MlpDiscriminator, ParamCircuit, ParamVector};

fn to_py(e: qgan::Error) -> PyErr {
    match e {
        qgan::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn bitstrings(xs: impl IntoIterator<Item = usize>, n: usize) -> Vec<String> {
    xs.into_iter().map(|x| qsim::format_bitstring(x, n)).collect()
}

#[pyfunction]
fn entangler_pairs(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    circuit::entangler_pairs(rows, cols)
}

/// Valid Bars-and-Stripes patterns as row-major bitstrings.
#[pyfunction]
fn enumerate_bas(rows: usize, cols: usize) -> PyResult<Vec<String>> {
    let spec = BasSpec::new(rows, cols).map_err(to_py)?;
    Ok(bitstrings(bas::enumerate_bas(&spec), spec.n_pixels()))
}

#[pyfunction]
fn is_bas(bits: &str, rows: usize, cols: usize) -> PyResult<bool> {
    let spec = BasSpec::new(rows, cols).map_err(to_py)?;
    if bits.len() != spec.n_pixels() {
        return Err(PyValueError::new_err("bitstring length does not match the grid"));
    }
    Ok(spec.is_valid_index(qsim::parse_bitstring(bits).map_err(to_py)?))
}

#[pyfunction]
fn target_distribution(rows: usize, cols: usize) -> PyResult<Vec<f64>> {
    Ok(bas::target_distribution(&BasSpec::new(rows, cols).map_err(to_py)?))
}

#[pyfunction]
fn kl_divergence(target: Vec<f64>, model: Vec<f64>) -> PyResult<f64> {
    gan::kl_divergence(&target, &model).map_err(to_py)
}

/// The layered rotation / CNOT generator circuit.
#[pyclass(name = "Circuit")]
struct PyCircuit {
    inner: ParamCircuit,
}

impl PyCircuit {
    fn params(&self, values: Vec<f64>) -> PyResult<ParamVector> {
        let p = ParamVector::new(values).map_err(to_py)?;
        if p.len() != self.inner.n_params() {
            return Err(PyValueError::new_err(format!(
                "expected {} parameters, got {}",
                self.inner.n_params(),
                p.len()
            )));
        }
        Ok(p)
    }
}

#[pymethods]
impl PyCircuit {
    #[new]
    fn new(rows: usize, cols: usize, depth: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ParamCircuit::new(rows, cols, depth).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn entanglers(&self) -> Vec<(usize, usize)> {
        self.inner.entanglers().to_vec()
    }

    /// Uniform angles in [0, 2 pi).
    fn random_params(&self, seed: u64) -> Vec<f64> {
        ParamVector::random(self.inner.n_params(), &mut ChaCha8Rng::seed_from_u64(seed)).into_inner()
    }

    fn probabilities(&self, params: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.probabilities(&self.params(params)?).map_err(to_py)
    }

    /// Parameter-shift gradient of every output probability.
    fn born_gradient(&self, params: Vec<f64>, index: usize) -> PyResult<Vec<f64>> {
        self.inner
            .born_gradient(&self.params(params)?, index)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(rows={}, cols={}, depth={}, n_params={})",
            self.inner.rows(),
            self.inner.cols(),
            self.inner.depth(),
            self.inner.n_params()
        )
    }
}

#[pyclass(name = "Discriminator")]
struct PyDiscriminator {
    inner: MlpDiscriminator,
}

#[pymethods]
impl PyDiscriminator {
    #[new]
    fn new(input_dim: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: MlpDiscriminator::init(input_dim, seed).map_err(to_py)?,
        })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.forward(&x).map_err(to_py)
    }
}

fn record_tuple(r: &TrainRecord) -> (usize, f64, f64, f64, f64, f64) {
    (
        r.iteration,
        r.loss_d,
        r.loss_g,
        r.kl_divergence,
        r.accuracy,
        r.exact_valid_mass,
    )
}

/// A trained generator together with its discriminator.
#[pyclass(name = "Model")]
struct PyModel {
    checkpoint: Checkpoint,
    circuit: ParamCircuit,
    records: Vec<TrainRecord>,
}

impl PyModel {
    fn from_checkpoint(checkpoint: Checkpoint, records: Vec<TrainRecord>) -> PyResult<Self> {
        let circuit = checkpoint.circuit().map_err(to_py)?;
        Ok(Self {
            checkpoint,
            circuit,
            records,
        })
    }

    fn evidence(&self, evidence: &str) -> PyResult<Evidence> {
        qgan::cli::parse_evidence(evidence, self.circuit.n_qubits()).map_err(to_py)
    }
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Self::from_checkpoint(Checkpoint::load(&path).map_err(to_py)?, Vec::new())
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.checkpoint.save(&path).map_err(to_py)
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.checkpoint.params.values().to_vec()
    }

    /// `(iteration, loss_d, loss_g, kl, accuracy, exact_valid_mass)` rows.
    #[getter]
    fn records(&self) -> Vec<(usize, f64, f64, f64, f64, f64)> {
        self.records.iter().map(record_tuple).collect()
    }

    fn probabilities(&self) -> PyResult<Vec<f64>> {
        self.circuit
            .probabilities(&self.checkpoint.params)
            .map_err(to_py)
    }

    fn sample(&self, count: usize, seed: u64) -> PyResult<Vec<String>> {
        let state = self.circuit.forward(&self.checkpoint.params).map_err(to_py)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(bitstrings(
            qsim::sample(&state, &mut rng, count),
            self.circuit.n_qubits(),
        ))
    }

    /// Evidence marginal after each Grover step and the chosen step count.
    #[pyo3(signature = (evidence, max_steps=None))]
    fn amplify(&self, evidence: &str, max_steps: Option<usize>) -> PyResult<(Vec<f64>, usize)> {
        let ev = self.evidence(evidence)?;
        let (_, trace) = inference::amplify(&self.circuit, &self.checkpoint.params, &ev, max_steps)
            .map_err(to_py)?;
        Ok((trace.marginals, trace.best_step))
    }

    /// Conditional samples consistent with `evidence` (a `{0,1,.}` string).
    #[pyo3(signature = (evidence, count=1, seed=0, max_steps=None))]
    fn infer(
        &self,
        evidence: &str,
        count: usize,
        seed: u64,
        max_steps: Option<usize>,
    ) -> PyResult<Vec<String>> {
        let ev = self.evidence(evidence)?;
        let (state, _) = inference::amplify(&self.circuit, &self.checkpoint.params, &ev, max_steps)
            .map_err(to_py)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = inference::conditional_sample(&state, &ev, &mut rng, count, DEFAULT_MAX_REJECTS)
            .map_err(to_py)?;
        Ok(bitstrings(xs, self.circuit.n_qubits()))
    }

    fn kl_divergence(&self) -> PyResult<f64> {
        let spec = BasSpec::new(self.checkpoint.rows, self.checkpoint.cols).map_err(to_py)?;
        gan::kl_divergence(&bas::target_distribution(&spec), &self.probabilities()?).map_err(to_py)
    }
}

/// Adversarial training; returns the trained model with its metric records.
#[pyfunction]
#[pyo3(signature = (
    rows, cols, depth, batch_size,
    iterations=10_000, lr=1e-4, gradient_mode="sampled",
    seed_circuit=1, seed_disc=2, seed_sampling=3, metric_every=50,
))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    rows: usize,
    cols: usize,
    depth: usize,
    batch_size: usize,
    iterations: usize,
    lr: f64,
    gradient_mode: &str,
    seed_circuit: u64,
    seed_disc: u64,
    seed_sampling: u64,
    metric_every: usize,
) -> PyResult<PyModel> {
    let mut cfg = TrainConfig::new(rows, cols, depth, batch_size);
    cfg.iterations = iterations;
    cfg.lr = lr;
    cfg.gradient_mode = gradient_mode
        .parse::<GradientMode>()
        .map_err(PyValueError::new_err)?;
    cfg.seed_circuit = seed_circuit;
    cfg.seed_disc = seed_disc;
    cfg.seed_sampling = seed_sampling;
    cfg.metric_every = metric_every;
    let outcome = py
        .detach(|| Trainer::new(cfg.clone())?.run(|_| {}))
        .map_err(to_py)?;
    let checkpoint = Checkpoint {
        rows,
        cols,
        depth,
        seed_circuit,
        seed_disc,
        seed_sampling,
        iteration: iterations,
        params: outcome.params,
        discriminator: outcome.discriminator,
    };
    PyModel::from_checkpoint(checkpoint, outcome.records)
}

#[pymodule]
fn pyqgan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(entangler_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_bas, m)?)?;
    m.add_function(wrap_pyfunction!(is_bas, m)?)?;
    m.add_function(wrap_pyfunction!(target_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyDiscriminator>()?;
    m.add_class::<PyModel>()?;
    Ok(())
}
