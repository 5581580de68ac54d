//! Dataset CSV files.
//!
//! Header `obs_id,s,a_prev_1..a_prev_J,a_1..a_J`, one integer row per
//! observation, LF line endings. Generated files start with `# key=value`
//! lines carrying the seed, the configuration fingerprint and the true
//! parameters; readers skip any line beginning with `#`.

use std::io::Write;
use std::path::Path;

use epl_core::data::{Dataset, Observation};
use epl_core::game::{GameConfig, State, Theta};

use crate::error::{HarnessError, Result};

pub fn header(n_firms: usize) -> Vec<String> {
    let mut h = vec!["obs_id".to_string(), "s".to_string()];
    h.extend((1..=n_firms).map(|j| format!("a_prev_{j}")));
    h.extend((1..=n_firms).map(|j| format!("a_{j}")));
    h
}

pub fn write_dataset<W: Write>(out: W, cfg: &GameConfig, ds: &Dataset) -> Result<()> {
    ds.validate(cfg)?;
    let mut out = out;
    let io = |e| HarnessError::io("<dataset>", e);
    if let Some(seed) = ds.seed {
        writeln!(out, "# seed={seed}").map_err(io)?;
    }
    if let Some(fp) = ds.fingerprint {
        writeln!(out, "# fingerprint={fp:016x}").map_err(io)?;
    }
    if let Some(theta) = &ds.theta_true {
        let t: Vec<String> = theta.to_vec().iter().map(|v| v.to_string()).collect();
        writeln!(out, "# theta_true={}", t.join(",")).map_err(io)?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let csv_err = |e: csv::Error| HarnessError::io("<dataset>", e.into());
    w.write_record(header(cfg.n_firms)).map_err(csv_err)?;
    let mut row = Vec::with_capacity(2 + 2 * cfg.n_firms);
    for (i, obs) in ds.observations.iter().enumerate() {
        let state = State::from_index(cfg, obs.x)?;
        row.clear();
        row.push((i + 1).to_string());
        row.push(state.s.to_string());
        row.extend((0..cfg.n_firms).map(|j| state.a_prev_of(j).to_string()));
        row.extend((0..cfg.n_firms).map(|j| obs.action(j).to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io("<dataset>", e))?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, cfg: &GameConfig, ds: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_dataset(std::io::BufWriter::new(file), cfg, ds).map_err(|e| match e {
        HarnessError::Io { source, .. } => HarnessError::io(path, source),
        other => other,
    })
}

pub fn read_dataset_file(path: &Path, cfg: &GameConfig) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    read_dataset(&text, &path.display().to_string(), cfg)
}

/// Parses dataset text against `cfg`; errors name `source` and the 1-based line.
pub fn read_dataset(text: &str, source: &str, cfg: &GameConfig) -> Result<Dataset> {
    let mut seed = None;
    let mut fingerprint = None;
    let mut theta_true = None;
    for (i, line) in text.lines().enumerate() {
        let Some(meta) = line.strip_prefix('#') else { continue };
        let Some((key, value)) = meta.trim().split_once('=') else { continue };
        let bad = || HarnessError::parse(source, i + 1, format!("invalid metadata value `{value}` for `{key}`"));
        match key.trim() {
            "seed" => seed = Some(value.trim().parse().map_err(|_| bad())?),
            "fingerprint" => fingerprint = Some(u64::from_str_radix(value.trim(), 16).map_err(|_| bad())?),
            "theta_true" => {
                let t: Vec<f64> = value.split(',').map(|v| v.trim().parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
                theta_true = Some(Theta::from_slice(cfg.n_firms, &t).map_err(|_| bad())?);
            }
            _ => {}
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header_line = text.lines().position(|l| !l.starts_with('#')).map_or(1, |p| p + 1);
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| HarnessError::parse(source, header_line, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let expected = header(cfg.n_firms);
    let mut position = Vec::with_capacity(expected.len());
    for name in &expected {
        match found.iter().position(|f| f == name) {
            Some(p) => position.push(p),
            None => {
                return Err(HarnessError::parse(source, header_line, format!("missing column `{name}`")));
            }
        }
    }
    if let Some(extra) = found.iter().find(|f| !expected.contains(f)) {
        return Err(HarnessError::parse(source, header_line, format!("unexpected column `{extra}` for {} firms", cfg.n_firms)));
    }

    let j = cfg.n_firms;
    let mut observations = Vec::new();
    let mut a_prev = vec![0u8; j];
    let mut actions = vec![0u8; j];
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            HarnessError::parse(source, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |col: usize| -> Result<i64> {
            let raw = rec.get(position[col]).unwrap_or("").trim();
            raw.parse::<i64>()
                .map_err(|_| HarnessError::parse(source, line, format!("column `{}`: `{raw}` is not an integer", expected[col])))
        };
        let binary = |col: usize| -> Result<u8> {
            match field(col)? {
                v @ (0 | 1) => Ok(v as u8),
                v => Err(HarnessError::parse(source, line, format!("column `{}`: {v} is not 0 or 1", expected[col]))),
            }
        };
        field(0)?;
        let s = field(1)?;
        if s < 1 || s as usize > cfg.n_sizes {
            return Err(HarnessError::parse(source, line, format!("column `s`: {s} is outside 1..={}", cfg.n_sizes)));
        }
        for f in 0..j {
            a_prev[f] = binary(2 + f)?;
            actions[f] = binary(2 + j + f)?;
        }
        let obs = Observation::new(cfg, State::new(s as usize, &a_prev), &actions)
            .map_err(|e| HarnessError::parse(source, line, e.to_string()))?;
        observations.push(obs);
    }
    if observations.is_empty() {
        return Err(HarnessError::parse(source, header_line, "dataset has no observations"));
    }
    let mut ds = Dataset::new(cfg, observations)?;
    ds.seed = seed;
    ds.fingerprint = fingerprint;
    ds.theta_true = theta_true;
    Ok(ds)
}
