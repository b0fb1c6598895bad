#![allow(dead_code)]

use freebound::{Grid64, JumpLaw64, MarketParams64};

pub fn no_jumps() -> MarketParams64 {
    MarketParams64::constant(0.05, 0.0, 0.0, 100.0, 1.0, 0.2).unwrap()
}

pub fn merton_market() -> MarketParams64 {
    MarketParams64::constant(0.05, 0.0, 0.3, 100.0, 1.0, 0.2).unwrap()
}

pub fn merton_law() -> JumpLaw64 {
    JumpLaw64::Merton { mean: -0.1, std: 0.2 }
}

pub fn grid(p: &MarketParams64, law: &JumpLaw64, nx: usize, nt: usize) -> Grid64 {
    Grid64::for_model(p, law, nx, nt).unwrap()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
