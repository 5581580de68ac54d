#![allow(dead_code)]

use epl_core::game::{GameConfig, Theta, ValueFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EULER_GAMMA_REF: f64 = 0.577_215_664_901_532_9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_transition(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(n * n);
    for _ in 0..n {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = row.iter().sum();
        f.extend(row.iter().map(|r| r / total));
    }
    f
}

pub fn small_game(rng: &mut ChaCha8Rng, n_firms: usize, n_sizes: usize, beta: f64) -> GameConfig {
    GameConfig::new(n_firms, n_sizes, beta, random_transition(rng, n_sizes)).unwrap()
}

pub fn random_theta(rng: &mut ChaCha8Rng, n_firms: usize) -> Theta {
    let v: Vec<f64> = (0..n_firms + 3).map(|_| rng.gen_range(-2.0..2.0)).collect();
    Theta::from_slice(n_firms, &v).unwrap()
}

pub fn random_values(rng: &mut ChaCha8Rng, cfg: &GameConfig, scale: f64) -> ValueFunction {
    let v: Vec<f64> = (0..cfg.n_values()).map(|_| rng.gen_range(-scale..scale)).collect();
    ValueFunction::from_flat(cfg, v).unwrap()
}

pub fn logit1(v0: f64, v1: f64) -> f64 {
    1.0 / (1.0 + (v0 - v1).exp())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Central-difference Jacobian of `g`, column by column, with a fixed step.
pub fn fd_jacobian(g: impl Fn(&[f64]) -> Vec<f64>, y: &[f64], h: f64) -> Vec<Vec<f64>> {
    let mut cols = Vec::with_capacity(y.len());
    let mut p = y.to_vec();
    for i in 0..y.len() {
        p[i] = y[i] + h;
        let gp = g(&p);
        p[i] = y[i] - h;
        let gm = g(&p);
        p[i] = y[i];
        cols.push(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    cols
}
