use epl::config::ExperimentConfig;
use epl::dataset_io::{read_dataset, read_dataset_file, write_dataset, write_dataset_file};
use epl::HarnessError;
use epl_core::data::simulate_dataset;
use epl_core::game::{GameConfig, Theta};

fn small() -> (GameConfig, Theta) {
    let cfg = GameConfig::with_default_transition(2, 3, 0.9).unwrap();
    let theta = Theta::from_slice(2, &[-1.5, -1.2, 0.8, 1.5, 1.0]).unwrap();
    (cfg, theta)
}

#[test]
fn dataset_round_trips_through_csv() {
    let (cfg, theta) = small();
    let ds = simulate_dataset(&cfg, &theta, 300, 17).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_dataset_file(&path, &cfg, &ds).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let first_row = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(first_row, "obs_id,s,a_prev_1,a_prev_2,a_1,a_2");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 301);
    let back = read_dataset_file(&path, &cfg).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn hand_written_rows_decode_to_states() {
    let (cfg, _) = small();
    let text = "obs_id,s,a_prev_1,a_prev_2,a_1,a_2\n1,3,1,0,1,1\n2,1,0,0,0,1\n";
    let ds = read_dataset(text, "d.csv", &cfg).unwrap();
    assert_eq!(ds.len(), 2);
    let mut buf = Vec::new();
    write_dataset(&mut buf, &cfg, &ds).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), text);
}

#[test]
fn columns_may_be_reordered() {
    let (cfg, _) = small();
    let a = read_dataset("obs_id,s,a_prev_1,a_prev_2,a_1,a_2\n1,2,1,0,0,1\n", "d", &cfg).unwrap();
    let b = read_dataset("a_2,a_1,a_prev_2,a_prev_1,s,obs_id\n1,0,0,1,2,1\n", "d", &cfg).unwrap();
    assert_eq!(a, b);
}

fn parse_err(text: &str) -> (usize, String) {
    let (cfg, _) = small();
    match read_dataset(text, "d.csv", &cfg).unwrap_err() {
        HarnessError::Parse { line, message, .. } => (line, message),
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn malformed_files_report_line_and_column() {
    let header = "obs_id,s,a_prev_1,a_prev_2,a_1,a_2\n";
    let (line, msg) = parse_err("obs_id,s,a_prev_1,a_1,a_2\n1,1,0,0,0\n");
    assert_eq!(line, 1);
    assert!(msg.contains("missing column `a_prev_2`"), "{msg}");

    let (line, msg) = parse_err(&format!("# seed=3\n{header}1,1,0,0,0,0\n2,1,0,2,0,0\n"));
    assert_eq!(line, 4);
    assert!(msg.contains("a_prev_2"), "{msg}");

    let (line, msg) = parse_err(&format!("{header}1,4,0,0,0,0\n"));
    assert_eq!(line, 2);
    assert!(msg.contains("outside"), "{msg}");

    let (line, msg) = parse_err(&format!("{header}1,1,0,0,0,0.5\n"));
    assert_eq!(line, 2);
    assert!(msg.contains("not an integer"), "{msg}");

    let (_, msg) = parse_err(&format!("{header}1,1,0,0,0\n"));
    assert!(!msg.is_empty());

    let (_, msg) = parse_err(header);
    assert!(msg.contains("no observations"));

    let (_, msg) = parse_err("obs_id,s,a_prev_1,a_prev_2,a_1,a_2,a_3\n1,1,0,0,0,0,0\n");
    assert!(msg.contains("unexpected column `a_3`"), "{msg}");
}

#[test]
fn config_file_drives_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    std::fs::write(&path, "n_firms = 2\nn_sizes = 3\nbeta = 0.9\nn_obs = 50\nseed = 4\n").unwrap();
    let cfg = ExperimentConfig::from_path(&path).unwrap();
    assert_eq!(cfg.game, GameConfig::with_default_transition(2, 3, 0.9).unwrap());
    assert_eq!((cfg.n_obs, cfg.seed), (50, 4));
    let err = ExperimentConfig::from_path(&dir.path().join("absent.txt")).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
}
