use std::fmt;
use std::str::FromStr;

use epl_core::estimators::EstimateResult;

use crate::error::{HarnessError, Result};

/// Iteration budget of one EPL run: exactly `k` iterations, or iterate to
/// convergence (written `inf`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KSpec {
    Fixed(usize),
    Converged,
}

impl KSpec {
    pub fn k_fixed(self) -> Option<usize> {
        match self {
            KSpec::Fixed(k) => Some(k),
            KSpec::Converged => None,
        }
    }
}

impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KSpec::Fixed(k) => write!(f, "{k}"),
            KSpec::Converged => f.write_str("inf"),
        }
    }
}

impl FromStr for KSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "∞" => Ok(KSpec::Converged),
            _ => match s.parse::<usize>() {
                Ok(k) if k > 0 => Ok(KSpec::Fixed(k)),
                _ => Err(HarnessError::Usage(format!("invalid iteration count `{s}` (positive integer or `inf`)"))),
            },
        }
    }
}

/// Flat key-value summary of one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub time_total_sec: f64,
    pub time_linear_sec: f64,
    pub time_theta_sec: f64,
    pub loglik: f64,
    pub theta: Vec<f64>,
}

impl From<&EstimateResult> for ResultRecord {
    fn from(r: &EstimateResult) -> Self {
        ResultRecord {
            method: r.method.clone(),
            converged: r.converged,
            iterations: r.iterations,
            time_total_sec: r.timings.total,
            time_linear_sec: r.timings.linear,
            time_theta_sec: r.timings.theta,
            loglik: r.loglik,
            theta: r.theta.to_vec(),
        }
    }
}

impl ResultRecord {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "method = {}\nconverged = {}\niterations = {}\ntime_total_sec = {}\ntime_linear_sec = {}\ntime_theta_sec = {}\nloglik = {}\n",
            self.method,
            self.converged,
            self.iterations,
            self.time_total_sec,
            self.time_linear_sec,
            self.time_theta_sec,
            self.loglik
        );
        for (i, t) in self.theta.iter().enumerate() {
            s.push_str(&format!("theta_{} = {t}\n", i + 1));
        }
        s
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut fields: Vec<(usize, &str, &str)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::parse(source, line_no, format!("expected `key = value`, found `{line}`")))?;
            fields.push((line_no, k.trim(), v.trim()));
        }
        fn get<T: FromStr>(fields: &[(usize, &str, &str)], source: &str, key: &str) -> Result<T> {
            let (line, _, v) = fields
                .iter()
                .find(|(_, k, _)| *k == key)
                .ok_or_else(|| HarnessError::parse(source, 0, format!("missing key `{key}`")))?;
            v.parse()
                .map_err(|_| HarnessError::parse(source, *line, format!("invalid value `{v}` for `{key}`")))
        }
        let mut theta = Vec::new();
        while fields.iter().any(|(_, k, _)| *k == format!("theta_{}", theta.len() + 1)) {
            theta.push(get(&fields, source, &format!("theta_{}", theta.len() + 1))?);
        }
        if theta.is_empty() {
            return Err(HarnessError::parse(source, 0, "missing key `theta_1`"));
        }
        Ok(ResultRecord {
            method: get(&fields, source, "method")?,
            converged: get(&fields, source, "converged")?,
            iterations: get(&fields, source, "iterations")?,
            time_total_sec: get(&fields, source, "time_total_sec")?,
            time_linear_sec: get(&fields, source, "time_linear_sec")?,
            time_theta_sec: get(&fields, source, "time_theta_sec")?,
            loglik: get(&fields, source, "loglik")?,
            theta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_spec_orders_converged_last() {
        let mut ks: Vec<KSpec> = ["inf", "3", "1"].iter().map(|s| s.parse().unwrap()).collect();
        ks.sort();
        assert_eq!(ks, vec![KSpec::Fixed(1), KSpec::Fixed(3), KSpec::Converged]);
        assert!("0".parse::<KSpec>().is_err());
        assert_eq!(KSpec::Converged.to_string(), "inf");
    }

    #[test]
    fn record_round_trips() {
        let r = ResultRecord {
            method: "epl-jf".into(),
            converged: true,
            iterations: 5,
            time_total_sec: 0.125,
            time_linear_sec: 0.0625,
            time_theta_sec: 1e-3,
            loglik: -4321.123456789,
            theta: vec![-1.9, 0.1 + 0.2, 4.0],
        };
        assert_eq!(ResultRecord::parse(&r.to_text(), "r").unwrap(), r);
        let err = ResultRecord::parse("method = x\n", "r.txt").unwrap_err();
        assert!(err.to_string().contains("theta_1"));
    }
}
