use std::io::Write;
use std::path::Path;

use epl_core::data::simulate_dataset;
use epl_core::estimators::{estimate_from, initialize, EstimateResult, Initialization, Method};
use epl_core::game::{GameConfig, Theta};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::record::KSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub reps: usize,
    pub base_seed: u64,
    pub game: GameConfig,
    pub theta_true: Theta,
    pub n_obs: usize,
    pub methods: Vec<Method>,
    pub k_list: Vec<KSpec>,
}

impl MonteCarloConfig {
    pub fn from_experiment(cfg: &ExperimentConfig, reps: usize) -> Self {
        MonteCarloConfig {
            reps,
            base_seed: cfg.seed,
            game: cfg.game.clone(),
            theta_true: cfg.theta.clone(),
            n_obs: cfg.n_obs,
            methods: cfg.methods.clone(),
            k_list: cfg.k_list.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(HarnessError::Usage("at least one replication is required".into()));
        }
        if self.methods.is_empty() || self.k_list.is_empty() {
            return Err(HarnessError::Usage("methods and k_list must not be empty".into()));
        }
        Ok(())
    }

    /// The `(method, k)` pairs run in every replication. The nested fixed
    /// point has no iteration budget and appears once, as `inf`.
    pub fn jobs(&self) -> Vec<(Method, KSpec)> {
        let mut ks = self.k_list.clone();
        ks.sort();
        ks.dedup();
        let mut jobs = Vec::new();
        for &m in &self.methods {
            match m {
                Method::Nfxp => jobs.push((m, KSpec::Converged)),
                Method::Epl(_) => jobs.extend(ks.iter().map(|&k| (m, k))),
            }
        }
        jobs.dedup();
        jobs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub method: String,
    pub k: KSpec,
    pub converged: bool,
    pub iterations: usize,
    pub time_total_sec: f64,
    pub loglik: f64,
    pub theta: Vec<f64>,
}

impl ReplicationRecord {
    fn from_result(rep: usize, k: KSpec, r: &EstimateResult) -> Self {
        ReplicationRecord {
            rep,
            method: r.method.clone(),
            k,
            converged: r.converged,
            iterations: r.iterations,
            time_total_sec: r.timings.total,
            loglik: r.loglik,
            theta: r.theta.to_vec(),
        }
    }

    fn failed(rep: usize, method: Method, k: KSpec, n_params: usize) -> Self {
        ReplicationRecord {
            rep,
            method: method.name().to_string(),
            k,
            converged: false,
            iterations: 0,
            time_total_sec: 0.0,
            loglik: f64::NAN,
            theta: vec![f64::NAN; n_params],
        }
    }
}

/// Runs one replication: simulate with seed `base_seed + rep`, initialize
/// once, then every job from that initialization. Failures become
/// non-converged records.
pub fn run_replication(cfg: &MonteCarloConfig, rep: usize) -> Vec<ReplicationRecord> {
    let jobs = cfg.jobs();
    let k = cfg.game.n_params();
    let seed = cfg.base_seed.wrapping_add(rep as u64);
    let init: Option<Initialization> = simulate_dataset(&cfg.game, &cfg.theta_true, cfg.n_obs, seed)
        .and_then(|ds| initialize(&cfg.game, &ds))
        .ok();
    jobs.into_iter()
        .map(|(method, kspec)| {
            init.as_ref()
                .and_then(|init| estimate_from(&cfg.game, init, method, kspec.k_fixed()).ok())
                .map(|r| ReplicationRecord::from_result(rep, kspec, &r))
                .unwrap_or_else(|| ReplicationRecord::failed(rep, method, kspec, k))
        })
        .collect()
}

/// Replications fan out over a pool of `threads` workers (all cores when
/// `None`). Records come back ordered by replication, then job.
pub fn run_monte_carlo(cfg: &MonteCarloConfig, threads: Option<usize>) -> Result<Vec<ReplicationRecord>> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(HarnessError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start worker pool: {e}")))?;
    let per_rep: Vec<Vec<ReplicationRecord>> =
        pool.install(|| (0..cfg.reps).into_par_iter().map(|rep| run_replication(cfg, rep)).collect());
    Ok(per_rep.into_iter().flatten().collect())
}

pub fn records_header(n_params: usize) -> Vec<String> {
    let mut h: Vec<String> = ["rep", "method", "k", "converged", "iterations", "time_total_sec", "loglik"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n_params).map(|i| format!("theta_{i}")));
    h
}

pub fn write_records<W: Write>(out: W, records: &[ReplicationRecord]) -> Result<()> {
    let n_params = records.first().map_or(0, |r| r.theta.len());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let err = |e: csv::Error| HarnessError::io("<records>", e.into());
    w.write_record(records_header(n_params)).map_err(err)?;
    for r in records {
        if r.theta.len() != n_params {
            return Err(HarnessError::Usage("records have differing parameter counts".into()));
        }
        let mut row = vec![
            r.rep.to_string(),
            r.method.clone(),
            r.k.to_string(),
            r.converged.to_string(),
            r.iterations.to_string(),
            r.time_total_sec.to_string(),
            r.loglik.to_string(),
        ];
        row.extend(r.theta.iter().map(|t| t.to_string()));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::io("<records>", e))?;
    Ok(())
}

pub fn write_records_file(path: &Path, records: &[ReplicationRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records).map_err(|e| match e {
        HarnessError::Io { source, .. } => HarnessError::io(path, source),
        other => other,
    })
}

pub fn read_records_file(path: &Path) -> Result<Vec<ReplicationRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    read_records(&text, &path.display().to_string())
}

pub fn read_records(text: &str, source: &str) -> Result<Vec<ReplicationRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| HarnessError::parse(source, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let n_params = headers.len().saturating_sub(7);
    let expected = records_header(n_params);
    if headers != expected {
        let missing = expected.iter().find(|h| !headers.contains(h));
        let message = match missing {
            Some(m) => format!("missing column `{m}`"),
            None => format!("header must be `{}`", expected.join(",")),
        };
        return Err(HarnessError::parse(source, 1, message));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| HarnessError::parse(source, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, source: &str, line: usize) -> Result<T> {
            let raw = rec.get(i).unwrap_or("");
            raw.parse()
                .map_err(|_| HarnessError::parse(source, line, format!("column `{name}`: invalid value `{raw}`")))
        }
        let theta = (0..n_params)
            .map(|i| field(&rec, 7 + i, &expected[7 + i], source, line))
            .collect::<Result<Vec<f64>>>()?;
        out.push(ReplicationRecord {
            rep: field(&rec, 0, "rep", source, line)?,
            method: field(&rec, 1, "method", source, line)?,
            k: field(&rec, 2, "k", source, line)?,
            converged: field(&rec, 3, "converged", source, line)?,
            iterations: field(&rec, 4, "iterations", source, line)?,
            time_total_sec: field(&rec, 5, "time_total_sec", source, line)?,
            loglik: field(&rec, 6, "loglik", source, line)?,
            theta,
        });
    }
    Ok(out)
}
