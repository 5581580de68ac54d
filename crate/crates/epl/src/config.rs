//! Line-oriented `key = value` experiment configuration.
//!
//! ```text
//! # default design
//! n_firms = 5
//! n_sizes = 5
//! beta = 0.95
//! theta_fc_1 = -1.9
//! theta_rs = 1.0
//! size_transition_row_1 = 0.8, 0.2, 0, 0, 0
//! ```
//!
//! Every key is optional and falls back to the default design. Besides the
//! game keys, `include_euler`, `methods` and `k_list` configure the Monte
//! Carlo runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use epl_core::estimators::{EplMode, Method};
use epl_core::game::{default_size_transition, GameConfig, Theta};

use crate::error::{HarnessError, Result};
use crate::record::KSpec;

pub const DEFAULT_N_OBS: usize = 1600;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    pub theta: Theta,
    pub n_obs: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub k_list: Vec<KSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            game: GameConfig::default_design(),
            theta: Theta::default_design(5),
            n_obs: DEFAULT_N_OBS,
            seed: DEFAULT_SEED,
            methods: vec![
                Method::Epl(EplMode::Analytic),
                Method::Epl(EplMode::AnalyticKrylov),
                Method::Epl(EplMode::JacobianFree),
            ],
            k_list: vec![KSpec::Fixed(1), KSpec::Fixed(2), KSpec::Fixed(3), KSpec::Converged],
        }
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Entries<'a> {
    source: &'a str,
    map: BTreeMap<String, Entry>,
}

impl Entries<'_> {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let source = self.source;
        match self.map.get_mut(key) {
            None => Ok(None),
            Some(e) => {
                e.used = true;
                e.value
                    .parse()
                    .map(Some)
                    .map_err(|_| HarnessError::parse(source, e.line, format!("invalid value `{}` for `{key}`", e.value)))
            }
        }
    }

    fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        let source = self.source;
        match self.map.get_mut(key) {
            None => Ok(None),
            Some(e) => {
                e.used = true;
                let line = e.line;
                e.value
                    .split(',')
                    .map(|item| {
                        let item = item.trim();
                        item.parse()
                            .map_err(|_| HarnessError::parse(source, line, format!("invalid entry `{item}` in `{key}`")))
                    })
                    .collect::<Result<Vec<T>>>()
                    .map(Some)
            }
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.line)
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// `source` names the input in error messages.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| HarnessError::parse(source, line, format!("expected `key = value`, found `{content}`")))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(HarnessError::parse(source, line, "missing key before `=`"));
            }
            if let Some(prev) = map.get(&key) {
                let prev: &Entry = prev;
                return Err(HarnessError::parse(
                    source,
                    line,
                    format!("duplicate key `{key}` (first set on line {})", prev.line),
                ));
            }
            map.insert(
                key,
                Entry {
                    line,
                    value: value.trim().to_string(),
                    used: false,
                },
            );
        }
        let mut e = Entries { source, map };
        let d = ExperimentConfig::default();

        let n_firms: usize = e.take("n_firms")?.unwrap_or(d.game.n_firms);
        let n_sizes: usize = e.take("n_sizes")?.unwrap_or(d.game.n_sizes);
        let beta: f64 = e.take("beta")?.unwrap_or(d.game.beta);

        let mut rows = Vec::new();
        let mut missing = Vec::new();
        for k in 1..=n_sizes {
            let key = format!("size_transition_row_{k}");
            match e.take_list::<f64>(&key)? {
                Some(row) if row.len() != n_sizes => {
                    return Err(HarnessError::parse(
                        source,
                        e.line_of(&key),
                        format!("`{key}` has {} entries, expected {n_sizes}", row.len()),
                    ));
                }
                Some(row) => rows.push(row),
                None => missing.push(key),
            }
        }
        let transition = if rows.is_empty() {
            default_size_transition(n_sizes)
        } else if let Some(key) = missing.first() {
            return Err(HarnessError::parse(source, 0, format!("`{key}` is missing; give every row of the size transition or none")));
        } else {
            rows.concat()
        };
        let mut game = GameConfig::new(n_firms, n_sizes, beta, transition)?;
        if let Some(flag) = e.take::<bool>("include_euler")? {
            game.include_euler = flag;
        }

        let default_theta = Theta::default_design(n_firms).to_vec();
        let mut theta = Vec::with_capacity(n_firms + 3);
        for j in 1..=n_firms {
            theta.push(e.take(&format!("theta_fc_{j}"))?.unwrap_or(default_theta[j - 1]));
        }
        for (i, key) in ["theta_rs", "theta_rn", "theta_ec"].into_iter().enumerate() {
            theta.push(e.take(key)?.unwrap_or(default_theta[n_firms + i]));
        }
        let theta = Theta::from_slice(n_firms, &theta)?;

        let n_obs = e.take("n_obs")?.unwrap_or(d.n_obs);
        if n_obs == 0 {
            return Err(HarnessError::parse(source, e.line_of("n_obs"), "`n_obs` must be positive"));
        }
        let seed = e.take("seed")?.unwrap_or(d.seed);
        let methods = e.take_list::<Method>("methods")?.unwrap_or(d.methods);
        let k_list = e.take_list::<KSpec>("k_list")?.unwrap_or(d.k_list);
        if methods.is_empty() || k_list.is_empty() {
            return Err(HarnessError::parse(source, 0, "`methods` and `k_list` must not be empty"));
        }

        if let Some((key, entry)) = e.map.iter().find(|(_, v)| !v.used) {
            return Err(HarnessError::parse(source, entry.line, format!("unknown key `{key}`")));
        }
        Ok(ExperimentConfig {
            game,
            theta,
            n_obs,
            seed,
            methods,
            k_list,
        })
    }

    /// Serializes to text that [`ExperimentConfig::parse`] reads back unchanged.
    pub fn to_text(&self) -> String {
        let g = &self.game;
        let t = self.theta.to_vec();
        let mut s = String::new();
        let _ = writeln!(s, "n_firms = {}", g.n_firms);
        let _ = writeln!(s, "n_sizes = {}", g.n_sizes);
        let _ = writeln!(s, "beta = {}", g.beta);
        let _ = writeln!(s, "include_euler = {}", g.include_euler);
        for (j, fc) in t[..g.n_firms].iter().enumerate() {
            let _ = writeln!(s, "theta_fc_{} = {fc}", j + 1);
        }
        let _ = writeln!(s, "theta_rs = {}", t[g.n_firms]);
        let _ = writeln!(s, "theta_rn = {}", t[g.n_firms + 1]);
        let _ = writeln!(s, "theta_ec = {}", t[g.n_firms + 2]);
        let _ = writeln!(s, "n_obs = {}", self.n_obs);
        let _ = writeln!(s, "seed = {}", self.seed);
        for (k, row) in g.size_transition.chunks(g.n_sizes).enumerate() {
            let row: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(s, "size_transition_row_{} = {}", k + 1, row.join(", "));
        }
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let _ = writeln!(s, "methods = {}", methods.join(", "));
        let ks: Vec<String> = self.k_list.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "k_list = {}", ks.join(", "));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_default_design() {
        assert_eq!(ExperimentConfig::parse("", "t").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn text_round_trips() {
        let cfg = ExperimentConfig::parse(
            "n_firms = 2\nn_sizes = 2\nbeta=0.5 # comment\ntheta_rn = 1\nsize_transition_row_1 = 0.3, 0.7\nsize_transition_row_2 = 1, 0\nk_list = 1, inf\nmethods = epl-jf\n",
            "t",
        )
        .unwrap();
        assert_eq!(cfg.game.size_transition, vec![0.3, 0.7, 1.0, 0.0]);
        assert_eq!(cfg.theta.to_vec(), vec![-1.9, -1.8, 1.0, 1.0, 1.0]);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text(), "t").unwrap(), cfg);
    }

    #[test]
    fn errors_point_at_the_line() {
        let err = ExperimentConfig::parse("n_firms = 2\n\nbogus = 1\n", "c.txt").unwrap_err();
        assert_eq!(err.to_string(), "c.txt:3: unknown key `bogus`");
        let err = ExperimentConfig::parse("beta = x\n", "c.txt").unwrap_err();
        assert!(err.to_string().starts_with("c.txt:1:"));
        let err = ExperimentConfig::parse("seed = 1\nseed = 2\n", "c.txt").unwrap_err();
        assert!(err.to_string().contains("duplicate key `seed`"));
        // theta_fc_3 does not exist for two firms.
        assert!(ExperimentConfig::parse("n_firms = 2\ntheta_fc_3 = 1\n", "c.txt").is_err());
        assert!(ExperimentConfig::parse("n_sizes = 2\nsize_transition_row_1 = 0.5, 0.5\n", "c.txt").is_err());
        assert!(ExperimentConfig::parse("beta = 1.5\n", "c.txt").is_err());
    }
}
