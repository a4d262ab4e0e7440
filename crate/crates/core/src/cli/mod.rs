//! Command implementations behind the `qgan` binary. Each command writes its
//! report to the supplied writer so it can be driven from tests.

pub mod checkpoint;
pub mod config;

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bas::{self, BasSpec};
use crate::error::{Error, Result};
use crate::gan::{self, TrainConfig, TrainRecord, Trainer};
use crate::inference::{self, Evidence, DEFAULT_MAX_REJECTS};
use crate::qsim;

pub use checkpoint::Checkpoint;
pub use config::{parse_config, render_config};

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const METRICS_HEADER: &str = "iteration,loss_d,loss_g,kl,accuracy,exact_valid_mass";
/// Largest register for which `eval` prints the full probability table.
pub const EVAL_TABLE_MAX_QUBITS: usize = 12;

pub fn metrics_row(r: &TrainRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.iteration, r.loss_d, r.loss_g, r.kl_divergence, r.accuracy, r.exact_valid_mass
    )
}

pub fn metrics_csv(records: &[TrainRecord]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&metrics_row(r));
        s.push('\n');
    }
    s
}

/// Trains from a config file and writes checkpoint, metrics and manifest
/// into `out_dir`. Progress lines go to `log`.
pub fn cmd_train(config_path: &Path, out_dir: &Path, log: &mut dyn Write) -> Result<()> {
    let cfg = parse_config(&std::fs::read_to_string(config_path)?)?;
    let outcome = train_logged(&cfg, log)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(MANIFEST_FILE), render_config(&cfg))?;
    std::fs::write(out_dir.join(METRICS_FILE), metrics_csv(&outcome.records))?;
    let ck = Checkpoint {
        rows: cfg.rows,
        cols: cfg.cols,
        depth: cfg.depth,
        seed_circuit: cfg.seed_circuit,
        seed_disc: cfg.seed_disc,
        seed_sampling: cfg.seed_sampling,
        iteration: cfg.iterations,
        params: outcome.params,
        discriminator: outcome.discriminator,
    };
    ck.save(&out_dir.join(CHECKPOINT_FILE))?;
    writeln!(
        log,
        "wrote {} ({} circuit parameters)",
        out_dir.join(CHECKPOINT_FILE).display(),
        ck.params.len()
    )?;
    Ok(())
}

fn train_logged(cfg: &TrainConfig, log: &mut dyn Write) -> Result<gan::TrainOutcome> {
    // the observer cannot return errors, so log failures are dropped
    Trainer::new(cfg.clone())?.run(|r| {
        let _ = writeln!(
            log,
            "iter {:>6}  loss_d {:.4}  loss_g {:.4}  kl {:.4}  acc {:.4}",
            r.iteration, r.loss_d, r.loss_g, r.kl_divergence, r.accuracy
        );
    })
}

/// Prints `count` measured bitstrings, one per line.
pub fn cmd_sample(checkpoint_path: &Path, count: usize, seed: u64, out: &mut dyn Write) -> Result<()> {
    let ck = Checkpoint::load(checkpoint_path)?;
    let circuit = ck.circuit()?;
    let state = circuit.forward(&ck.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in qsim::sample(&state, &mut rng, count) {
        writeln!(out, "{}", qsim::format_bitstring(x, circuit.n_qubits()))?;
    }
    Ok(())
}

/// Parses and checks an evidence string against a grid: correct length, at
/// least one observed and one missing pixel.
pub fn parse_evidence(s: &str, n_pixels: usize) -> Result<Evidence> {
    if s.chars().count() != n_pixels {
        return Err(Error::Usage(format!(
            "evidence {s:?} has {} pixels, the model has {n_pixels}",
            s.chars().count()
        )));
    }
    let ev = Evidence::parse(s).map_err(|e| match e {
        Error::Usage(m) => Error::Usage(m),
        other => Error::Usage(other.to_string()),
    })?;
    if ev.n_observed() == 0 {
        return Err(Error::Usage("evidence observes no pixels".into()));
    }
    if ev.n_observed() == n_pixels {
        return Err(Error::Usage("evidence leaves no pixel to infer".into()));
    }
    Ok(ev)
}

/// Amplifies the evidence, prints the trace and `samples` completions, then
/// the most probable completion with its conditional probability.
pub fn cmd_infer(
    checkpoint_path: &Path,
    evidence: &str,
    samples: usize,
    seed: u64,
    max_steps: Option<usize>,
    out: &mut dyn Write,
) -> Result<()> {
    let ck = Checkpoint::load(checkpoint_path)?;
    let circuit = ck.circuit()?;
    let n = circuit.n_qubits();
    let ev = parse_evidence(evidence, n)?;
    let (state, trace) = inference::amplify(&circuit, &ck.params, &ev, max_steps)?;

    writeln!(out, "step,p_evidence")?;
    for (k, p) in trace.marginals.iter().enumerate() {
        writeln!(out, "{k},{p}")?;
    }
    writeln!(out, "best_step,{}", trace.best_step)?;
    writeln!(out, "amplification,{}", trace.gain())?;

    if samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (xs, rate) =
            inference::conditional_sample_with_rate(&state, &ev, &mut rng, samples, DEFAULT_MAX_REJECTS)?;
        writeln!(out, "acceptance_rate,{rate}")?;
        for x in xs {
            writeln!(out, "completion,{}", qsim::format_bitstring(x, n))?;
        }
    }
    let cond = inference::conditional_distribution(&state, &ev)?;
    let (best, p) = cond
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
    writeln!(out, "dominant,{},{}", qsim::format_bitstring(best, n), p)?;
    Ok(())
}

/// KL divergence, exact valid mass, and (for small grids) the full
/// probability table.
pub fn cmd_eval(checkpoint_path: &Path, out: &mut dyn Write) -> Result<()> {
    let ck = Checkpoint::load(checkpoint_path)?;
    let circuit = ck.circuit()?;
    let spec = BasSpec::new(ck.rows, ck.cols)?;
    let probs = circuit.probabilities(&ck.params)?;
    let target = bas::target_distribution(&spec);
    writeln!(out, "kl,{}", gan::kl_divergence(&target, &probs)?)?;
    writeln!(out, "valid_mass,{}", gan::valid_mass(&probs, &spec))?;
    let n = circuit.n_qubits();
    if n > EVAL_TABLE_MAX_QUBITS {
        writeln!(out, "# table suppressed for {n} qubits")?;
        return Ok(());
    }
    writeln!(out, "index,bitstring,target,model")?;
    for (i, (t, p)) in target.iter().zip(&probs).enumerate() {
        writeln!(out, "{i},{},{t},{p}", qsim::format_bitstring(i, n))?;
    }
    Ok(())
}

pub fn cmd_patterns(rows: usize, cols: usize, out: &mut dyn Write) -> Result<()> {
    out.write_all(bas::dump_patterns(&BasSpec::new(rows, cols)?).as_bytes())?;
    Ok(())
}
