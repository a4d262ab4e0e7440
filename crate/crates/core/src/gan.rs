//! Adversarial training of the circuit generator against the MLP
//! discriminator, plus the evaluation metrics.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bas::{self, BasSpec};
use crate::circuit::{ParamCircuit, ParamVector};
use crate::discriminator::{AdamState, MlpDiscriminator};
use crate::error::{Error, Result};
use crate::qsim;

/// Samples drawn for the accuracy metric at each evaluation.
pub const ACCURACY_SAMPLES: usize = 4096;
/// Floor applied to model probabilities inside the KL divergence.
pub const KL_FLOOR: f64 = 1e-12;
/// Registers up to this size get a precomputed `ln D` lookup table.
const LOG_TABLE_MAX_QUBITS: usize = 16;

/// How the generator gradient is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// Batch means over samples measured at the shifted parameters.
    Sampled,
    /// Exact expectations over the shifted circuits' probabilities.
    Exact,
    /// Same quantity as `Exact`, computed for all parameters in one reverse
    /// sweep over the statevector.
    Adjoint,
}

impl fmt::Display for GradientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradientMode::Sampled => "sampled",
            GradientMode::Exact => "exact",
            GradientMode::Adjoint => "adjoint",
        })
    }
}

impl FromStr for GradientMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sampled" => Ok(GradientMode::Sampled),
            "exact" => Ok(GradientMode::Exact),
            "adjoint" => Ok(GradientMode::Adjoint),
            other => Err(format!(
                "unknown gradient mode {other:?} (expected sampled, exact or adjoint)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub rows: usize,
    pub cols: usize,
    pub depth: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub iterations: usize,
    pub gradient_mode: GradientMode,
    pub seed_circuit: u64,
    pub seed_disc: u64,
    pub seed_sampling: u64,
    pub metric_every: usize,
}

impl TrainConfig {
    pub fn new(rows: usize, cols: usize, depth: usize, batch_size: usize) -> Self {
        Self {
            rows,
            cols,
            depth,
            batch_size,
            lr: 1e-4,
            iterations: 10_000,
            gradient_mode: GradientMode::Sampled,
            seed_circuit: 1,
            seed_disc: 2,
            seed_sampling: 3,
            metric_every: 50,
        }
    }

    /// Same setup with all three seeds derived from one number.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed_circuit = seed.wrapping_mul(3).wrapping_add(1);
        self.seed_disc = seed.wrapping_mul(3).wrapping_add(2);
        self.seed_sampling = seed.wrapping_mul(3).wrapping_add(3);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(Error::Config {
                key: key.into(),
                reason: reason.into(),
            })
        };
        if self.rows == 0 {
            return bad("rows", "must be at least 1");
        }
        if self.cols == 0 {
            return bad("cols", "must be at least 1");
        }
        if self.rows * self.cols > qsim::MAX_QUBITS {
            return bad("rows", "grid exceeds the simulator's qubit limit");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        if self.iterations == 0 {
            return bad("iterations", "must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr", "must be a positive finite number");
        }
        if self.metric_every == 0 {
            return bad("metric_every", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub iteration: usize,
    pub loss_d: f64,
    pub loss_g: f64,
    pub kl_divergence: f64,
    pub accuracy: f64,
    pub exact_valid_mass: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub circuit: ParamCircuit,
    pub params: ParamVector,
    pub discriminator: MlpDiscriminator,
    pub records: Vec<TrainRecord>,
}

pub fn loss_d(d: &MlpDiscriminator, real: &[usize], fake: &[usize]) -> Result<f64> {
    if real.is_empty() || fake.is_empty() {
        return Err(Error::Argument("loss batches must be non-empty".into()));
    }
    let real_term = mean(real, |x| d.forward_index(x).ln());
    let fake_term = mean(fake, |x| (1.0 - d.forward_index(x)).ln());
    Ok(-real_term - fake_term)
}

/// Non-saturating generator loss, `-mean ln D(fake)`.
pub fn loss_g(d: &MlpDiscriminator, fake: &[usize]) -> Result<f64> {
    if fake.is_empty() {
        return Err(Error::Argument("loss batch must be non-empty".into()));
    }
    Ok(-mean(fake, |x| d.forward_index(x).ln()))
}

fn mean(batch: &[usize], f: impl Fn(usize) -> f64) -> f64 {
    batch.iter().map(|&x| f(x)).sum::<f64>() / batch.len() as f64
}

enum LogD<'a> {
    Table(Vec<f64>),
    Direct(&'a MlpDiscriminator),
}

impl LogD<'_> {
    fn get(&self, x: usize) -> f64 {
        match self {
            LogD::Table(t) => t[x],
            LogD::Direct(d) => d.forward_index(x).ln(),
        }
    }
}

/// Gradient of the generator loss with respect to every circuit parameter,
/// from the parameter-shift rule:
/// `dL/dtheta_k = E_{theta_k-}[ln D] / 2 - E_{theta_k+}[ln D] / 2`.
pub fn generator_gradient<R: Rng + ?Sized>(
    circuit: &ParamCircuit,
    params: &ParamVector,
    d: &MlpDiscriminator,
    batch_size: usize,
    rng: &mut R,
    mode: GradientMode,
) -> Result<Vec<f64>> {
    if params.len() != circuit.n_params() {
        return Err(Error::Argument(format!(
            "circuit takes {} parameters, got {}",
            circuit.n_params(),
            params.len()
        )));
    }
    if d.input_dim() != circuit.n_qubits() {
        return Err(Error::Argument(format!(
            "discriminator reads {} bits, circuit has {} qubits",
            d.input_dim(),
            circuit.n_qubits()
        )));
    }
    let log_d = if mode != GradientMode::Sampled || circuit.n_qubits() <= LOG_TABLE_MAX_QUBITS {
        LogD::Table(d.log_output_table())
    } else {
        LogD::Direct(d)
    };
    match mode {
        GradientMode::Adjoint => {
            let LogD::Table(table) = &log_d else { unreachable!() };
            let observable: Vec<f64> = table.iter().map(|v| -v).collect();
            circuit.expectation_gradient(params, &observable)
        }
        GradientMode::Exact => (0..circuit.n_params())
            .map(|k| {
                let expect = |sign: f64| -> Result<f64> {
                    let p = circuit.probabilities(&params.shifted(k, sign)?)?;
                    Ok(p.iter().enumerate().map(|(x, px)| px * log_d.get(x)).sum())
                };
                Ok(0.5 * (expect(-1.0)? - expect(1.0)?))
            })
            .collect(),
        GradientMode::Sampled => {
            if batch_size == 0 {
                return Err(Error::Argument("batch size must be at least 1".into()));
            }
            (0..circuit.n_params())
                .map(|k| {
                    let mut batch_mean = |sign: f64| -> Result<f64> {
                        let p = circuit.probabilities(&params.shifted(k, sign)?)?;
                        let xs = qsim::sample_distribution(&p, rng, batch_size)?;
                        Ok(mean(&xs, |x| log_d.get(x)))
                    };
                    let plus = batch_mean(1.0)?;
                    let minus = batch_mean(-1.0)?;
                    Ok(0.5 * (minus - plus))
                })
                .collect()
        }
    }
}

/// `sum_x pi(x) ln(pi(x) / max(p(x), 1e-12))` over the support of `pi`.
pub fn kl_divergence(target: &[f64], model: &[f64]) -> Result<f64> {
    if target.len() != model.len() {
        return Err(Error::Argument(format!(
            "distributions have sizes {} and {}",
            target.len(),
            model.len()
        )));
    }
    let kl: f64 = target
        .iter()
        .zip(model)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, p)| t * (t / p.max(KL_FLOOR)).ln())
        .sum();
    Ok(kl.max(0.0))
}

/// Fraction of samples that are valid Bars-and-Stripes images.
pub fn accuracy(samples: &[usize], spec: &BasSpec) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("accuracy needs at least one sample".into()));
    }
    let valid = samples.iter().filter(|&&x| spec.is_valid_index(x)).count();
    Ok(valid as f64 / samples.len() as f64)
}

/// Exact probability mass the model puts on valid images.
pub fn valid_mass(probs: &[f64], spec: &BasSpec) -> f64 {
    bas::enumerate_bas(spec).into_iter().map(|x| probs[x]).sum()
}

/// Stepwise driver for the alternating discriminator / generator updates.
pub struct Trainer {
    config: TrainConfig,
    spec: BasSpec,
    circuit: ParamCircuit,
    target: Vec<f64>,
    params: ParamVector,
    disc: MlpDiscriminator,
    adam_g: AdamState,
    adam_d: AdamState,
    rng: ChaCha8Rng,
    metrics_rng: ChaCha8Rng,
    iteration: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let spec = BasSpec::new(config.rows, config.cols)?;
        let circuit = ParamCircuit::new(config.rows, config.cols, config.depth)?;
        let params = ParamVector::random(
            circuit.n_params(),
            &mut ChaCha8Rng::seed_from_u64(config.seed_circuit),
        );
        let disc = MlpDiscriminator::init(circuit.n_qubits(), config.seed_disc)?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed_sampling);
        let mut metrics_rng = ChaCha8Rng::seed_from_u64(config.seed_sampling);
        metrics_rng.set_stream(1);
        Ok(Self {
            adam_g: AdamState::new(circuit.n_params()),
            adam_d: AdamState::new(disc.params().len()),
            target: bas::target_distribution(&spec),
            config,
            spec,
            circuit,
            params,
            disc,
            rng,
            metrics_rng,
            iteration: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn circuit(&self) -> &ParamCircuit {
        &self.circuit
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn discriminator(&self) -> &MlpDiscriminator {
        &self.disc
    }

    /// One discriminator update followed by one generator update.
    pub fn step(&mut self) -> Result<()> {
        let b = self.config.batch_size;
        let real = bas::sample_dataset(&self.spec, b, &mut self.rng);
        let probs = self.circuit.probabilities(&self.params)?;
        let fake = qsim::sample_distribution(&probs, &mut self.rng, b)?;
        let (_, grad_d) = self.disc.loss_and_gradient(&real, &fake)?;
        self.adam_d.step(self.disc.params_mut(), &grad_d, self.config.lr)?;

        let grad_g = generator_gradient(
            &self.circuit,
            &self.params,
            &self.disc,
            b,
            &mut self.rng,
            self.config.gradient_mode,
        )?;
        self.adam_g.step(self.params.values_mut(), &grad_g, self.config.lr)?;
        self.iteration += 1;
        Ok(())
    }

    /// Metrics for the current parameters. Uses its own random stream so the
    /// training trajectory does not depend on the evaluation cadence.
    pub fn evaluate(&mut self) -> Result<TrainRecord> {
        let b = self.config.batch_size;
        let probs = self.circuit.probabilities(&self.params)?;
        let real = bas::sample_dataset(&self.spec, b, &mut self.metrics_rng);
        let fake = qsim::sample_distribution(&probs, &mut self.metrics_rng, b)?;
        let draws = qsim::sample_distribution(&probs, &mut self.metrics_rng, ACCURACY_SAMPLES)?;
        Ok(TrainRecord {
            iteration: self.iteration,
            loss_d: loss_d(&self.disc, &real, &fake)?,
            loss_g: loss_g(&self.disc, &fake)?,
            kl_divergence: kl_divergence(&self.target, &probs)?,
            accuracy: accuracy(&draws, &self.spec)?,
            exact_valid_mass: valid_mass(&probs, &self.spec),
        })
    }

    /// Runs the configured number of iterations, recording metrics at
    /// iteration 0, every `metric_every` iterations and at the end. Each
    /// record is passed to `observer` as it is produced.
    pub fn run(mut self, mut observer: impl FnMut(&TrainRecord)) -> Result<TrainOutcome> {
        let mut records = Vec::new();
        let mut record = |t: &mut Self, records: &mut Vec<TrainRecord>| -> Result<()> {
            let r = t.evaluate()?;
            observer(&r);
            records.push(r);
            Ok(())
        };
        record(&mut self, &mut records)?;
        while self.iteration < self.config.iterations {
            self.step()?;
            if self.iteration.is_multiple_of(self.config.metric_every)
                || self.iteration == self.config.iterations
            {
                record(&mut self, &mut records)?;
            }
        }
        Ok(TrainOutcome {
            circuit: self.circuit,
            params: self.params,
            discriminator: self.disc,
            records,
        })
    }
}

pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    Trainer::new(config.clone())?.run(|_| {})
}
