use epl::montecarlo::{read_records, write_records, ReplicationRecord};
use epl::record::KSpec;
use epl::summary::{format_value, median, std_dev, summarize, summarize_all, Summary, Table};

fn rec(rep: usize, method: &str, k: KSpec, iterations: usize, time: f64, theta: Vec<f64>) -> ReplicationRecord {
    ReplicationRecord {
        rep,
        method: method.to_string(),
        k,
        converged: iterations < 100,
        iterations,
        time_total_sec: time,
        loglik: -1000.0,
        theta,
    }
}

fn value(s: &Summary, method: &str, k: KSpec, stat: &str) -> f64 {
    s.rows
        .iter()
        .find(|r| r.method == method && r.k == k && r.stat == stat)
        .unwrap_or_else(|| panic!("no {stat} for {method}"))
        .value
}

fn hand_records() -> Vec<ReplicationRecord> {
    let inf = KSpec::Converged;
    vec![
        rec(0, "epl-anal", inf, 5, 2.0, vec![1.0, 2.0]),
        rec(0, "epl-jf", inf, 5, 0.5, vec![1.0 + 1e-6, 2.0]),
        rec(1, "epl-anal", inf, 4, 3.0, vec![0.5, 0.5]),
        rec(1, "epl-jf", inf, 7, 0.7, vec![0.5, 0.5 - 1e-4]),
        rec(2, "epl-anal", inf, 6, 2.5, vec![0.0, 0.0]),
        rec(2, "epl-jf", inf, 100, 1.9, vec![0.0, 0.0]),
        rec(3, "epl-anal", inf, 5, 2.2, vec![3.0, 3.0]),
        rec(3, "epl-jf", inf, 6, 0.6, vec![3.0, 3.0 + 1e-5]),
    ]
}

#[test]
fn statistics_match_hand_computation() {
    let s = summarize(&hand_records(), Table::Performance).unwrap();
    let inf = KSpec::Converged;
    // log10 differences per rep: -6, -4, -inf, -5
    assert_eq!(value(&s, "epl-jf", inf, "log10_diff_mean"), f64::NEG_INFINITY);
    assert!((value(&s, "epl-jf", inf, "log10_diff_max") + 4.0).abs() < 1e-9);
    // iterations 5, 7, 100, 6
    assert_eq!(value(&s, "epl-jf", inf, "iter_median"), 6.5);
    assert_eq!(value(&s, "epl-jf", inf, "iter_max"), 100.0);
    assert_eq!(value(&s, "epl-jf", inf, "nonconv_pct"), 25.0);
    // times 0.5, 0.7, 1.9, 0.6
    assert!((value(&s, "epl-jf", inf, "time_total") - 3.7).abs() < 1e-12);
    assert!((value(&s, "epl-jf", inf, "time_mean") - 0.925).abs() < 1e-12);
    assert!((value(&s, "epl-jf", inf, "time_median") - 0.65).abs() < 1e-12);
    assert!((value(&s, "epl-jf", inf, "time_med_per_iter") - 0.1).abs() < 1e-12);
    // anal: iterations 5, 4, 6, 5 and no difference row against itself
    assert_eq!(value(&s, "epl-anal", inf, "iter_median"), 5.0);
    assert!(!s.rows.iter().any(|r| r.method == "epl-anal" && r.stat.starts_with("log10")));
    assert!((value(&s, "epl-anal", inf, "time_med_per_iter") - 2.35 / 5.0).abs() < 1e-12);
}

#[test]
fn fixed_k_time_per_iteration_divides_by_k() {
    let k = KSpec::Fixed(2);
    let records = vec![
        rec(0, "epl-anal", k, 2, 1.0, vec![1.0]),
        rec(1, "epl-anal", k, 2, 3.0, vec![1.0]),
        rec(2, "epl-anal", k, 2, 2.0, vec![1.0]),
    ];
    let s = summarize(&records, Table::Performance).unwrap();
    assert_eq!(value(&s, "epl-anal", k, "time_med_per_iter"), 1.0);
}

#[test]
fn identical_estimates_print_below_the_floor() {
    let inf = KSpec::Converged;
    let records = vec![rec(0, "epl-anal", inf, 3, 1.0, vec![1.0, 2.0]), rec(0, "epl-jf", inf, 3, 1.0, vec![1.0, 2.0])];
    let s = summarize(&records, Table::Performance).unwrap();
    let v = value(&s, "epl-jf", inf, "log10_diff_mean");
    assert_eq!(v, f64::NEG_INFINITY);
    assert_eq!(format_value("log10_diff_mean", v), "< -15");
    assert_eq!(format_value("log10_diff_max", -16.2), "< -15");
    assert_eq!(format_value("log10_diff_max", -4.5), "-4.500");
    assert!(s.to_text().contains("< -15"));
}

#[test]
fn missing_baseline_is_an_error() {
    let inf = KSpec::Converged;
    let records = vec![rec(0, "epl-jf", inf, 3, 1.0, vec![1.0])];
    let err = summarize(&records, Table::Performance).unwrap_err();
    assert!(err.to_string().contains("epl-anal"));
    assert!(summarize(&records, Table::Baseline).unwrap_err().to_string().contains("nfxp-jf"));
    assert!(summarize_all(&records).is_err());

    // The baseline ran, but never at k = 2.
    let records = vec![rec(0, "epl-anal", inf, 3, 1.0, vec![1.0]), rec(0, "epl-jf", KSpec::Fixed(2), 2, 1.0, vec![1.0])];
    assert!(summarize(&records, Table::Performance).is_err());
}

#[test]
fn baseline_table_compares_against_nested_fixed_point() {
    let inf = KSpec::Converged;
    let records = vec![
        rec(0, "epl-jf", KSpec::Fixed(1), 1, 0.1, vec![9.0]),
        rec(0, "epl-jf", inf, 4, 1.0, vec![1.001]),
        rec(0, "nfxp-jf", inf, 30, 10.0, vec![1.0]),
        rec(1, "epl-jf", inf, 4, 3.0, vec![2.0]),
        rec(1, "nfxp-jf", inf, 30, 14.0, vec![2.01]),
    ];
    let s = summarize(&records, Table::Baseline).unwrap();
    assert!((value(&s, "epl-jf", inf, "log10_diff_mean") - (-2.5)).abs() < 1e-6);
    assert!((value(&s, "epl-jf", inf, "log10_diff_max") - (-2.0)).abs() < 1e-6);
    assert_eq!(value(&s, "epl-jf", inf, "time_mean"), 2.0);
    assert!((value(&s, "epl-jf", inf, "time_std") - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(value(&s, "nfxp-jf", inf, "time_mean"), 12.0);
    assert!(!s.rows.iter().any(|r| r.k == KSpec::Fixed(1)));
}

#[test]
fn summary_can_be_recomputed_from_the_records_csv() {
    let mut buf = Vec::new();
    write_records(&mut buf, &hand_records()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("rep,method,k,converged,iterations,time_total_sec,loglik,theta_1,theta_2\n"));
    let back = read_records(&text, "records.csv").unwrap();
    assert_eq!(back, hand_records());

    // Independent recomputation straight from the CSV text.
    let mut jf_times = Vec::new();
    let mut iters = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[1] == "epl-jf" {
            jf_times.push(f[5].parse::<f64>().unwrap());
            iters.push(f[4].parse::<f64>().unwrap());
        }
    }
    let s = summarize(&back, Table::Performance).unwrap();
    assert_eq!(value(&s, "epl-jf", KSpec::Converged, "time_median"), median(&jf_times));
    assert_eq!(value(&s, "epl-jf", KSpec::Converged, "iter_median"), median(&iters));

    let mut csv = Vec::new();
    Summary::write_csv(&[s.clone()], &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.starts_with("method,k,stat,value\n"));
    let cell = csv.lines().find(|l| l.starts_with("epl-jf,inf,time_median,")).unwrap();
    assert_eq!(cell.rsplit(',').next().unwrap().parse::<f64>().unwrap(), median(&jf_times));
    assert_eq!(csv.lines().count(), 1 + s.rows.len());
}

#[test]
fn helper_statistics() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    assert_eq!(std_dev(&[1.0]), 0.0);
    assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
}
