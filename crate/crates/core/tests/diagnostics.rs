mod common;

use common::*;
use epl_core::data::{simulate_dataset, solve_equilibrium};
use epl_core::diagnostics::*;
use epl_core::estimators::initialize;
use epl_core::game::*;
use epl_core::numerics::GmresOptions;
use epl_core::Error;

#[test]
fn identity_jacobian_has_unit_condition_number() {
    let cfg = GameConfig::with_default_transition(1, 3, 0.0).unwrap();
    let theta = Theta::from_slice(1, &[-1.0, 1.0, 2.0, 1.0]).unwrap();
    let mut r = rng(61);
    let v = random_values(&mut r, &cfg, 1.0);
    let report = error_bound_report(&cfg, &theta, &v, &RhsColumn::all(4), &ErrorBoundOptions::default()).unwrap();
    assert!((report.cond - 1.0).abs() < 1e-8, "{}", report.cond);
    assert_eq!(report.columns.len(), 5);
    for c in &report.columns {
        assert!(c.gmres_iterations <= 1);
        assert!(c.actual < 1e-8);
    }
    assert!(report.holds());
}

#[test]
fn bound_holds_on_the_default_design() {
    let cfg = GameConfig::default_design();
    let theta = Theta::default_design(5);
    let ds = simulate_dataset(&cfg, &theta, 1600, 1000).unwrap();
    let init = initialize(&cfg, &ds).unwrap();
    let columns = [RhsColumn::H(0), RhsColumn::H(5), RhsColumn::Z];
    let report = error_bound_report(&cfg, &init.npl.theta, &init.npl.v, &columns, &ErrorBoundOptions::default()).unwrap();
    assert!(report.cond > 1.0);
    assert!(report.holds(), "{report}");
    let labels: Vec<_> = report.columns.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, ["h_fc_1", "h_rs", "z"]);

    let tight = ErrorBoundOptions {
        gmres: GmresOptions::with_tol(1e-10),
        ..ErrorBoundOptions::default()
    };
    let sharper = error_bound_report(&cfg, &init.npl.theta, &init.npl.v, &columns, &tight).unwrap();
    assert!(sharper.holds(), "{sharper}");
    for (a, b) in report.columns.iter().zip(&sharper.columns) {
        assert!(b.gmres_iterations >= a.gmres_iterations);
        assert!(b.eps_gmres <= a.eps_gmres);
    }
    let text = sharper.to_string();
    assert!(text.contains("h_rs") && text.contains("cond"));
}

#[test]
fn bound_holds_at_an_equilibrium_of_a_small_game() {
    let mut r = rng(62);
    let cfg = small_game(&mut r, 3, 2, 0.9);
    let theta = Theta::from_slice(3, &[-1.5, -1.5, -1.5, 1.0, 2.0, 1.0]).unwrap();
    let v = solve_equilibrium(&cfg, &theta, &ValueFunction::zeros(&cfg)).unwrap();
    let report = error_bound_report(&cfg, &theta, &v, &RhsColumn::all(6), &ErrorBoundOptions::default()).unwrap();
    assert!(report.holds(), "{report}");
}

#[test]
fn oversized_games_are_refused() {
    let cfg = GameConfig::with_default_transition(7, 3, 0.9).unwrap();
    assert!(cfg.n_values() > DENSE_LIMIT);
    let theta = Theta::default_design(7);
    let v = ValueFunction::zeros(&cfg);
    let err = error_bound_report(&cfg, &theta, &v, &[RhsColumn::Z], &ErrorBoundOptions::default()).unwrap_err();
    assert!(matches!(err, Error::TooLarge { .. }));
}

#[test]
fn unknown_columns_are_rejected() {
    let cfg = GameConfig::with_default_transition(1, 2, 0.5).unwrap();
    let theta = Theta::zeros(1);
    let v = ValueFunction::zeros(&cfg);
    assert!(error_bound_report(&cfg, &theta, &v, &[RhsColumn::H(4)], &ErrorBoundOptions::default()).is_err());
}
