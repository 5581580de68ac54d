use std::path::Path;
use std::process::{Command, Output};

use epl::record::ResultRecord;

fn epl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epl")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("c.txt");
    std::fs::write(
        &path,
        "n_firms = 2\nn_sizes = 3\nbeta = 0.9\ntheta_fc_1 = -1.5\ntheta_fc_2 = -1.2\ntheta_rs = 0.8\ntheta_rn = 1.5\ntheta_ec = 1.0\nn_obs = 600\nseed = 3\nk_list = 1, inf\nmethods = epl-anal, epl-jf\n",
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let data = dir.path().join("d.csv").display().to_string();
    let out = epl(&["simulate", "--config", &cfg, "--out", &data]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(&data).unwrap();
    assert!(csv.contains("# seed=3\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 601);

    let again = epl(&["simulate", "--config", &cfg, "--seed", "3"]);
    assert_eq!(text(&again.stdout), csv);
    let other = epl(&["simulate", "--config", &cfg, "--seed", "4"]);
    assert_ne!(text(&other.stdout), csv);

    let record = dir.path().join("r.txt");
    let out = epl(&["estimate", "--config", &cfg, "--method", "epl-jf", "--data", &data, "--out", record.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let r = ResultRecord::parse(&std::fs::read_to_string(&record).unwrap(), "r.txt").unwrap();
    assert_eq!(r.method, "epl-jf");
    assert!(r.converged);
    assert_eq!(r.theta.len(), 5);

    let out = epl(&["estimate", "--config", &cfg, "--method", "nfxp-jf", "--data", &data]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let n = ResultRecord::parse(&text(&out.stdout), "stdout").unwrap();
    let d = n.theta.iter().zip(&r.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-3, "{d}");
}

#[test]
fn usage_errors_exit_with_one() {
    let out = epl(&["simulate", "--bogus-flag", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("--bogus-flag"));

    let out = epl(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("frobnicate"));

    let out = epl(&["estimate", "--method", "epl-fast", "--data", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("epl-fast"));

    let out = epl(&["estimate", "--data", "/nonexistent/d.csv"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "n_firms = 2\nwhat = 1\n").unwrap();
    let out = epl(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains(":2: unknown key `what`"));

    let out = epl(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_every_flag() {
    let out = epl(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let top = text(&out.stdout);
    for cmd in ["simulate", "estimate", "montecarlo", "diagnose", "summarize"] {
        assert!(top.contains(cmd), "{cmd}");
    }
    let out = epl(&["montecarlo", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let mc = text(&out.stdout);
    for flag in ["--config", "--out", "--seed", "--method", "--reps", "--threads"] {
        assert!(mc.contains(flag), "{flag}");
    }
    let est = text(&epl(&["estimate", "--help"]).stdout);
    assert!(est.contains("--data"));
}

#[test]
fn montecarlo_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let results = dir.path().join("results");
    let res = results.to_str().unwrap();
    let out = epl(&["montecarlo", "--config", &cfg, "--reps", "3", "--threads", "2", "--out", res]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let records = std::fs::read_to_string(results.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 3 * 2 * 2);
    assert!(records.starts_with("rep,method,k,converged,iterations,time_total_sec,loglik,theta_1,"));
    for f in ["summary.csv", "summary.txt", "config.txt"] {
        assert!(results.join(f).exists(), "{f}");
    }
    let printed = text(&out.stdout);
    assert!(printed.contains("log10(Difference in θ) Mean"));
    assert!(printed.contains("Time(secs) Med/Iter"));

    std::fs::remove_file(results.join("summary.csv")).unwrap();
    let out = epl(&["summarize", res]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout), printed);
    let summary = std::fs::read_to_string(results.join("summary.csv")).unwrap();
    assert!(summary.starts_with("method,k,stat,value\n"));
    assert!(summary.contains("epl-jf,inf,log10_diff_max,"));

    // Without the baseline method the difference columns cannot be formed.
    let only_jf: String = records.lines().filter(|l| !l.contains("epl-anal")).map(|l| format!("{l}\n")).collect();
    let path = dir.path().join("jf.csv");
    std::fs::write(&path, only_jf).unwrap();
    let out = epl(&["summarize", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("epl-anal"));
}

#[test]
fn diagnose_prints_the_bound_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = epl(&["diagnose", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report = text(&out.stdout);
    for label in ["h_fc_1", "h_fc_2", "h_rs", "h_rn", "h_ec", "z"] {
        assert!(report.contains(label), "{label}\n{report}");
    }

    let big = dir.path().join("big.txt");
    std::fs::write(&big, "n_firms = 8\nn_sizes = 3\n").unwrap();
    let out = epl(&["diagnose", "--config", big.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("smaller game"));
}
