mod common;

use common::*;
use freebound::boundary::extract_boundary;
use freebound::mc_oracle::{default_steps, log_return_moments, martingale_check, policy_value, policy_value_with, price_european, simulate};
use freebound::reference::bs_put;
use freebound::solver::solve_pide;
use freebound::{ExtractionMethod, Scheme, SolverOptions64};

const SEED: u64 = 42;

#[test]
fn log_returns_are_gaussian_without_jumps() {
    let p = no_jumps();
    let b = simulate(&p, &merton_law(), 100.0, 200_000, default_steps(1.0), SEED).unwrap();
    let m = log_return_moments(&b).unwrap();
    let mean = 0.05 - 0.02;
    assert!((m.mean - mean).abs() <= 4.0 * m.mean_se, "{m:?}");
    assert!((m.variance - 0.04).abs() <= 4.0 * m.variance_se, "{m:?}");
    assert!(b.jump_counts.iter().all(|c| *c == 0));
}

#[test]
fn discounted_prices_are_martingales_with_merton_jumps() {
    let (p, law) = (merton_market(), merton_law());
    let b = simulate(&p, &law, 100.0, 1_000_000, default_steps(1.0), SEED).unwrap();
    let m = martingale_check(&b, p.r, p.q).unwrap();
    assert!((m.value - 1.0).abs() <= 4.0 * m.std_error, "{m:?}");
}

#[test]
fn european_price_matches_black_scholes() {
    let p = no_jumps();
    let b = simulate(&p, &merton_law(), 100.0, 200_000, default_steps(1.0), SEED).unwrap();
    let e = price_european(&b, 100.0, 0.05).unwrap();
    let bs = bs_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0);
    assert!((e.value - bs).abs() <= 3.0 * e.std_error, "{e:?} vs {bs}");
}

#[test]
fn european_price_limits() {
    let (p, law) = (merton_market(), merton_law());
    let b = simulate(&p, &law, 100.0, 100_000, default_steps(1.0), SEED).unwrap();
    assert!(price_european(&b, 1e-6, p.r).unwrap().value <= 1e-6);
    let deep = price_european(&b, 1e4, p.r).unwrap();
    let parity = (-p.r).exp() * 1e4 - (-p.q).exp() * 100.0;
    assert!((deep.value - parity).abs() <= 3.0 * deep.std_error, "{deep:?} vs {parity}");
}

#[test]
fn never_stopping_reproduces_the_european_price() {
    let (p, law) = (merton_market(), merton_law());
    let n = default_steps(1.0);
    let b = simulate(&p, &law, 100.0, 50_000, n, SEED).unwrap();
    let e = price_european(&b, p.strike, p.r).unwrap();
    let v = policy_value_with(&p, &law, 100.0, |_| f64::NEG_INFINITY, 50_000, n, SEED).unwrap();
    assert!((e.value - v.value).abs() <= 1e-12 * e.value, "{e:?} vs {v:?}");
}

#[test]
fn extracted_policy_is_a_tight_lower_bound_without_jumps() {
    let (p, law) = (no_jumps(), merton_law());
    let s = solve_pide(&p, &law, &grid(&p, &law, 400, 400), Scheme::Penalty, &SolverOptions64::default()).unwrap();
    let v = s.price_at_maturity(100.0);
    let c = extract_boundary(&s, ExtractionMethod::SmoothfitCross).unwrap();
    let pol = policy_value(&p, &law, 100.0, &c, 1_000_000, default_steps(1.0), SEED).unwrap();
    assert!(pol.value <= v + 3.0 * pol.std_error, "{pol:?} vs {v}");
    assert!(v - pol.value <= 0.01 * v + 3.0 * pol.std_error, "{pol:?} vs {v}");
}

#[test]
fn extracted_policy_beats_a_constant_policy() {
    let (p, law) = (merton_market(), merton_law());
    let s = solve_pide(&p, &law, &grid(&p, &law, 400, 400), Scheme::Penalty, &SolverOptions64::default()).unwrap();
    let v = s.price_at_maturity(100.0);
    let c = extract_boundary(&s, ExtractionMethod::SmoothfitCross).unwrap();
    let n = default_steps(1.0);
    let pol = policy_value(&p, &law, 100.0, &c, 200_000, n, SEED).unwrap();
    let b_t = *c.b.last().unwrap();
    let crude = policy_value_with(&p, &law, 100.0, |_| b_t, 200_000, n, SEED).unwrap();
    assert!(pol.value <= v + 3.0 * pol.std_error, "{pol:?} vs {v}");
    assert!(pol.value > crude.value, "{pol:?} vs constant {crude:?}");
}
