//! Replication summaries.
//!
//! Two layouts are produced from the same records:
//!
//! * [`Table::Performance`] compares every EPL `(method, k)` group to
//!   `epl-anal` at the same `k` and reports accuracy, iteration counts and
//!   timing.
//! * [`Table::Baseline`] compares converged EPL runs to `nfxp-jf`.
//!
//! Accuracy is `log10 ‖θ̂ − θ̂_base‖∞` per replication. Identical estimates
//! give `-inf`; any value below [`LOG10_FLOOR`] prints as `< -15`. The CSV
//! keeps the raw numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use epl_core::estimators::{EplMode, Method};

use crate::error::{HarnessError, Result};
use crate::montecarlo::ReplicationRecord;
use crate::record::KSpec;

pub const LOG10_FLOOR: f64 = -15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Performance,
    Baseline,
}

impl Table {
    pub fn baseline(self) -> Method {
        match self {
            Table::Performance => Method::Epl(EplMode::Analytic),
            Table::Baseline => Method::Nfxp,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Table::Performance => "EPL performance (difference vs epl-anal at the same k)",
            Table::Baseline => "EPL vs nested fixed point (difference vs nfxp-jf)",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub k: KSpec,
    pub stat: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub table: Table,
    pub rows: Vec<SummaryRow>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Midpoint of the two central values for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample standard deviation (`n − 1` denominator); zero for one value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn log10_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max).log10()
}

pub fn format_value(stat: &str, v: f64) -> String {
    if stat.starts_with("log10") && v < LOG10_FLOOR {
        "< -15".to_string()
    } else if v.is_nan() {
        "-".to_string()
    } else if stat.starts_with("iter") {
        format!("{v}")
    } else if stat == "nonconv_pct" {
        format!("{v:.0}%")
    } else {
        format!("{v:.3}")
    }
}

fn method_order(name: &str) -> usize {
    Method::ALL.iter().position(|m| m.name() == name).unwrap_or(Method::ALL.len())
}

type Groups<'a> = BTreeMap<(usize, String, KSpec), Vec<&'a ReplicationRecord>>;

fn group(records: &[ReplicationRecord]) -> Groups<'_> {
    let mut groups: Groups = BTreeMap::new();
    for r in records {
        groups.entry((method_order(&r.method), r.method.clone(), r.k)).or_default().push(r);
    }
    groups
}

fn diffs(group: &[&ReplicationRecord], base: &BTreeMap<usize, &ReplicationRecord>) -> Vec<f64> {
    group
        .iter()
        .filter_map(|r| {
            let b = base.get(&r.rep)?;
            let finite = |t: &[f64]| t.iter().all(|x| x.is_finite());
            (finite(&r.theta) && finite(&b.theta) && r.theta.len() == b.theta.len()).then(|| log10_diff(&r.theta, &b.theta))
        })
        .collect()
}

pub fn summarize(records: &[ReplicationRecord], table: Table) -> Result<Summary> {
    let base_name = table.baseline().name();
    if !records.iter().any(|r| r.method == base_name) {
        return Err(HarnessError::Summary(format!(
            "baseline method {base_name} is missing from the records; include it in the run"
        )));
    }
    let groups = group(records);
    let mut rows = Vec::new();
    let mut push = |method: &str, k: KSpec, stat: &'static str, value: f64| {
        rows.push(SummaryRow {
            method: method.to_string(),
            k,
            stat,
            value,
        })
    };
    for ((_, method, k), recs) in &groups {
        let is_nfxp = method == Method::Nfxp.name();
        let included = match table {
            Table::Performance => !is_nfxp,
            Table::Baseline => is_nfxp || *k == KSpec::Converged,
        };
        if !included {
            continue;
        }
        let base_k = match table {
            Table::Performance => *k,
            Table::Baseline => KSpec::Converged,
        };
        if method != base_name {
            let base: BTreeMap<usize, &ReplicationRecord> = groups
                .iter()
                .filter(|((_, m, bk), _)| m == base_name && *bk == base_k)
                .flat_map(|(_, v)| v.iter().map(|r| (r.rep, *r)))
                .collect();
            if base.is_empty() {
                return Err(HarnessError::Summary(format!(
                    "no {base_name} records at k={base_k} to compare {method} against"
                )));
            }
            let d = diffs(recs, &base);
            push(method, *k, "log10_diff_mean", if d.is_empty() { f64::NAN } else { mean(&d) });
            push(method, *k, "log10_diff_max", if d.is_empty() { f64::NAN } else { max(&d) });
        }
        let times: Vec<f64> = recs.iter().map(|r| r.time_total_sec).collect();
        match table {
            Table::Performance => {
                let iters: Vec<f64> = recs.iter().map(|r| r.iterations as f64).collect();
                let nonconv = recs.iter().filter(|r| !r.converged).count() as f64 / recs.len() as f64;
                let per_iter = match k {
                    KSpec::Fixed(k) => median(&times) / *k as f64,
                    KSpec::Converged => median(&times) / median(&iters),
                };
                push(method, *k, "iter_median", median(&iters));
                push(method, *k, "iter_max", max(&iters));
                push(method, *k, "nonconv_pct", 100.0 * nonconv);
                push(method, *k, "time_total", times.iter().sum());
                push(method, *k, "time_mean", mean(&times));
                push(method, *k, "time_median", median(&times));
                push(method, *k, "time_med_per_iter", per_iter);
            }
            Table::Baseline => {
                push(method, *k, "time_mean", mean(&times));
                push(method, *k, "time_std", std_dev(&times));
            }
        }
    }
    Ok(Summary { table, rows })
}

/// Summaries that the records support: the performance table when any EPL
/// method ran, the baseline table when `nfxp-jf` ran.
pub fn summarize_all(records: &[ReplicationRecord]) -> Result<Vec<Summary>> {
    let has_epl = records.iter().any(|r| r.method.starts_with("epl-"));
    let has_nfxp = records.iter().any(|r| r.method == Method::Nfxp.name());
    let mut out = Vec::new();
    if has_epl {
        out.push(summarize(records, Table::Performance)?);
    }
    if has_nfxp {
        out.push(summarize(records, Table::Baseline)?);
    }
    if out.is_empty() {
        return Err(HarnessError::Summary("no records to summarize".into()));
    }
    Ok(out)
}

fn stat_label(stat: &str) -> &'static str {
    match stat {
        "log10_diff_mean" => "log10(Difference in θ) Mean",
        "log10_diff_max" => "log10(Difference in θ) Max",
        "iter_median" => "Iterations Median",
        "iter_max" => "Iterations Max",
        "nonconv_pct" => "Iterations Non-Conv.",
        "time_total" => "Time(secs) Total",
        "time_mean" => "Time(secs) Mean",
        "time_median" => "Time(secs) Median",
        "time_med_per_iter" => "Time(secs) Med/Iter",
        "time_std" => "Time(secs) Std",
        _ => "?",
    }
}

impl Summary {
    pub fn write_csv<W: Write>(summaries: &[Summary], out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let err = |e: csv::Error| HarnessError::io("<summary>", e.into());
        w.write_record(["method", "k", "stat", "value"]).map_err(err)?;
        for s in summaries {
            for r in &s.rows {
                w.write_record([r.method.clone(), r.k.to_string(), r.stat.to_string(), r.value.to_string()])
                    .map_err(err)?;
            }
        }
        w.flush().map_err(|e| HarnessError::io("<summary>", e))?;
        Ok(())
    }

    /// Statistics down the rows, one column per `(method, k)` group.
    pub fn to_text(&self) -> String {
        let mut columns: Vec<(String, KSpec)> = Vec::new();
        let mut stats: Vec<&'static str> = Vec::new();
        for r in &self.rows {
            if !columns.iter().any(|(m, k)| *m == r.method && *k == r.k) {
                columns.push((r.method.clone(), r.k));
            }
            if !stats.contains(&r.stat) {
                stats.push(r.stat);
            }
        }
        stats.sort_by_key(|s| {
            ["log10_diff_mean", "log10_diff_max", "iter_median", "iter_max", "nonconv_pct", "time_total", "time_mean", "time_median", "time_med_per_iter", "time_std"]
                .iter()
                .position(|x| x == s)
        });
        let headers: Vec<String> = columns.iter().map(|(m, k)| format!("{m} k={k}")).collect();
        let label_w = stats.iter().map(|s| stat_label(s).chars().count()).max().unwrap_or(0);
        let col_w: Vec<usize> = headers.iter().map(|h| h.len().max(9)).collect();

        let mut s = String::new();
        let _ = writeln!(s, "{}", self.table.title());
        let _ = write!(s, "{:label_w$}", "");
        for (h, w) in headers.iter().zip(&col_w) {
            let _ = write!(s, "  {h:>w$}");
        }
        s.push('\n');
        for stat in &stats {
            let label = stat_label(stat);
            let pad = label_w - label.chars().count();
            let _ = write!(s, "{label}{}", " ".repeat(pad));
            for ((m, k), w) in columns.iter().zip(&col_w) {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| r.method == *m && r.k == *k && r.stat == *stat)
                    .map_or(String::new(), |r| format_value(stat, r.value));
                let _ = write!(s, "  {cell:>w$}");
            }
            s.push('\n');
        }
        s
    }
}
