mod common;

use common::*;
use epl_core::data::*;
use epl_core::game::*;
use epl_core::numerics::Matrix;

#[test]
fn equilibrium_closed_form_without_interaction() {
    let mut r = rng(41);
    let cfg = small_game(&mut r, 3, 4, 0.0);
    let theta = Theta::from_slice(3, &[-1.0, 0.5, 0.2, 0.8, 0.0, 1.3]).unwrap();
    let v = solve_equilibrium(&cfg, &theta, &ValueFunction::zeros(&cfg)).unwrap();
    for j in 0..3 {
        for x in 0..cfg.n_states() {
            let st = State::from_index(&cfg, x).unwrap();
            let want = theta.fc[j] + theta.rs * st.s as f64 - theta.ec * (1.0 - f64::from(st.a_prev_of(j)));
            assert!((v.get(j, x, 1) - want).abs() < 1e-13);
            assert_eq!(v.get(j, x, 0), 0.0);
        }
    }
    let zero = solve_equilibrium(&cfg, &Theta::zeros(3), &ValueFunction::zeros(&cfg)).unwrap();
    assert!(zero.as_slice().iter().all(|&x| x == 0.0));
}

#[test]
fn default_equilibrium_residual_and_monotone_entry() {
    let cfg = GameConfig::default_design();
    let theta = Theta::default_design(5);
    let v = solve_equilibrium(&cfg, &theta, &ValueFunction::zeros(&cfg)).unwrap();
    let g = constraint_g(&cfg, &theta, &v).unwrap();
    assert!(norm_inf(&g) <= 1e-12);
    let p = choice_probs(&v).unwrap();
    for j in 0..5 {
        for mask in 0..32u32 {
            for s in 1..5 {
                let lo = State { s, a_prev: mask }.index(&cfg).unwrap();
                let hi = State { s: s + 1, a_prev: mask }.index(&cfg).unwrap();
                assert!(p.get(j, hi, 1) > p.get(j, lo, 1));
            }
        }
    }
}

#[test]
fn two_state_chain_matches_closed_form() {
    let (p, q) = (0.3, 0.05);
    let k = Matrix::from_row_major(2, 2, vec![1.0 - p, p, q, 1.0 - q]).unwrap();
    let pi = kernel_stationary_distribution(&k, &[0.5, 0.5], 1e-15, 100_000).unwrap();
    assert!((pi[0] - q / (p + q)).abs() < 1e-10);
    assert!((pi[1] - p / (p + q)).abs() < 1e-10);
}

#[test]
fn degenerate_kernels() {
    let start = [0.2, 0.3, 0.5];
    let pi = kernel_stationary_distribution(&Matrix::identity(3), &start, 1e-12, 10).unwrap();
    assert!(max_abs_diff(&pi, &start) < 1e-15);
    let uniform = Matrix::from_fn(3, 3, |_, _| 1.0 / 3.0);
    let pi = kernel_stationary_distribution(&uniform, &start, 1e-12, 10).unwrap();
    assert!(max_abs_diff(&pi, &[1.0 / 3.0; 3]) < 1e-15);
}

#[test]
fn stationary_distribution_is_invariant() {
    let cfg = GameConfig::default_design();
    let theta = Theta::default_design(5);
    let v = solve_equilibrium(&cfg, &theta, &ValueFunction::zeros(&cfg)).unwrap();
    let ccps = choice_probs(&v).unwrap();
    let pi = stationary_distribution(&ccps, &cfg).unwrap();
    assert!(pi.iter().all(|&p| p >= 0.0));
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let k = state_kernel(&cfg, &ccps);
    let mut next = vec![0.0; pi.len()];
    k.transpose_matvec(&pi, &mut next);
    assert!(max_abs_diff(&pi, &next) < 1e-10);
    for x in 0..cfg.n_states() {
        assert!((k.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn simulation_is_deterministic_and_sized() {
    let cfg = GameConfig::default_design();
    let theta = Theta::default_design(5);
    let a = simulate_dataset(&cfg, &theta, 1600, 7).unwrap();
    let b = simulate_dataset(&cfg, &theta, 1600, 7).unwrap();
    let c = simulate_dataset(&cfg, &theta, 1600, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.observations, c.observations);
    assert_eq!(a.len(), 1600);
    assert_eq!(a.n_firms, 5);
    assert_eq!(a.seed, Some(7));
    assert_eq!(a.fingerprint, Some(config_fingerprint(&cfg, &theta)));
    assert!(simulate_dataset(&cfg, &theta, 0, 7).is_err());
}

#[test]
fn simulated_frequencies_pass_chi_square() {
    let mut r = rng(42);
    let cfg = small_game(&mut r, 2, 2, 0.9);
    let theta = Theta::from_slice(2, &[-0.5, 0.2, 0.6, 1.0, 0.8]).unwrap();
    let n = 200_000;
    let ds = simulate_dataset(&cfg, &theta, n, 99).unwrap();
    let v = solve_equilibrium(&cfg, &theta, &ValueFunction::zeros(&cfg)).unwrap();
    let ccps = choice_probs(&v).unwrap();
    let pi = stationary_distribution(&ccps, &cfg).unwrap();
    let cells = cfg.n_states() * 4;
    let mut counts = vec![0.0; cells];
    for o in &ds.observations {
        counts[o.x * 4 + o.actions as usize] += 1.0;
    }
    let mut chi2 = 0.0;
    for x in 0..cfg.n_states() {
        for a in 0..4usize {
            let p = pi[x] * (0..2).map(|j| ccps.get(j, x, (a >> j) & 1)).product::<f64>();
            let e = p * n as f64;
            chi2 += (counts[x * 4 + a] - e).powi(2) / e;
            // Every cell within 4 standard errors.
            assert!((counts[x * 4 + a] - e).abs() <= 4.0 * (e * (1.0 - p)).sqrt() + 1.0);
        }
    }
    // 31 degrees of freedom; the 0.1% critical value is 61.10.
    assert!(chi2 < 61.10, "chi2 = {chi2}");
}

#[test]
fn dataset_validation_catches_mismatches() {
    let cfg = GameConfig::with_default_transition(2, 2, 0.9).unwrap();
    let o = Observation::new(&cfg, State::new(2, &[1, 0]), &[0, 1]).unwrap();
    assert_eq!(o.x, State::new(2, &[1, 0]).index(&cfg).unwrap());
    assert_eq!((o.action(0), o.action(1)), (0, 1));
    assert!(Observation::new(&cfg, State::new(3, &[1, 0]), &[0, 1]).is_err());
    assert!(Observation::new(&cfg, State::new(1, &[1, 0]), &[0, 2]).is_err());
    assert!(Observation::new(&cfg, State::new(1, &[1, 0]), &[0]).is_err());
    let ds = Dataset::new(&cfg, vec![o]).unwrap();
    let other = GameConfig::with_default_transition(3, 2, 0.9).unwrap();
    assert!(ds.validate(&other).is_err());
    assert!(Dataset::new(&cfg, vec![]).is_err());
}
