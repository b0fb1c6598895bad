mod common;

use common::*;
use freebound::reference::{bs_put, crr_american_put, merton_put};
use freebound::solver::{penalty_constant, solve_european_pide, solve_pide, TailExtension};
use freebound::{Grid64, JumpOperator, MarketParams64, Scheme, SolverOptions64};

fn opts() -> SolverOptions64 {
    SolverOptions64::default()
}

#[test]
fn american_price_matches_binomial_tree() {
    let (p, law) = (no_jumps(), merton_law());
    let tree = crr_american_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, 2000).price;
    for scheme in [Scheme::Penalty, Scheme::Psor] {
        let s = solve_pide(&p, &law, &grid(&p, &law, 400, 400), scheme, &opts()).unwrap();
        let v = s.price_at_maturity(100.0);
        assert!(((v - tree) / tree).abs() <= 5e-3, "{scheme:?}: {v} vs tree {tree}");
    }
}

#[test]
fn european_matches_black_scholes_at_the_money() {
    let (p, law) = (no_jumps(), merton_law());
    let s = solve_european_pide(&p, &law, &grid(&p, &law, 400, 400), &opts()).unwrap();
    let bs = bs_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0);
    let v = s.price_at_maturity(100.0);
    assert!(((v - bs) / bs).abs() <= 2e-3, "{v} vs {bs}");
}

#[test]
fn merton_european_matches_series() {
    let (p, law) = (merton_market(), merton_law());
    let s = solve_european_pide(&p, &law, &grid(&p, &law, 400, 400), &opts()).unwrap();
    let exact = merton_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, 0.3, -0.1, 0.2);
    let v = s.price_at_maturity(100.0);
    assert!(((v - exact) / exact).abs() <= 2e-3, "{v} vs {exact}");
}

#[test]
fn initial_row_is_payoff_and_left_edge_is_stopping_value() {
    let (p, law) = (merton_market(), merton_law());
    let g = grid(&p, &law, 200, 100);
    let am = solve_pide(&p, &law, &g, Scheme::Penalty, &opts()).unwrap();
    let eu = solve_european_pide(&p, &law, &g, &opts()).unwrap();
    let payoff = am.payoff_row();
    assert_eq!(am.row(0), payoff.as_slice());
    assert_eq!(eu.row(0), payoff.as_slice());
    let left = 100.0 - g.x_min.exp();
    for n in 0..=g.nt {
        assert_eq!(am.value(n, 0), left);
    }
}

#[test]
fn american_surface_respects_bounds_and_dominates_european() {
    let (p, law) = (merton_market(), merton_law());
    let g = grid(&p, &law, 200, 100);
    let am = solve_pide(&p, &law, &g, Scheme::Psor, &opts()).unwrap();
    let eu = solve_european_pide(&p, &law, &g, &opts()).unwrap();
    let payoff = am.payoff_row();
    for n in 0..=g.nt {
        for (i, (&a, &e)) in am.row(n).iter().zip(eu.row(n)).enumerate() {
            assert!(a >= payoff[i] && (0.0..=100.0).contains(&a), "level {n} node {i}: {a}");
            assert!(a >= e - 1e-9, "level {n} node {i}: american {a} < european {e}");
        }
    }
}

#[test]
fn schemes_agree_with_jumps() {
    let (p, law) = (merton_market(), merton_law());
    let g = grid(&p, &law, 400, 400);
    let a = solve_pide(&p, &law, &g, Scheme::Penalty, &opts()).unwrap();
    let b = solve_pide(&p, &law, &g, Scheme::Psor, &opts()).unwrap();
    let tol = (5e-3 * 100.0f64).max(3.0 * g.dx * 100.0);
    let d = sup_diff(&a.u, &b.u);
    assert!(d <= tol, "sup difference {d} > {tol}");
}

#[test]
fn penalty_constant_examples() {
    let p = MarketParams64::constant(0.05, 0.0, 0.3, 100.0, 1.0, 0.2).unwrap();
    assert!((penalty_constant(&p, 0.01, 0.0) - 35.0005).abs() < 1e-12);
    let p0 = no_jumps();
    assert!((penalty_constant(&p0, 0.01, 1.0) - (5.0 + 0.0005 + 1.0)).abs() < 1e-12);
}

#[test]
fn raising_the_obstacle_raises_the_solution() {
    // a larger strike lifts the payoff row everywhere
    let law = merton_law();
    let lo = MarketParams64::constant(0.05, 0.0, 0.3, 100.0, 1.0, 0.2).unwrap();
    let hi = MarketParams64::constant(0.05, 0.0, 0.3, 105.0, 1.0, 0.2).unwrap();
    let g = grid(&lo, &law, 200, 100);
    let a = solve_pide(&lo, &law, &g, Scheme::Psor, &opts()).unwrap();
    let b = solve_pide(&hi, &law, &g, Scheme::Psor, &opts()).unwrap();
    assert!(a.u.iter().zip(&b.u).all(|(x, y)| y >= x));
}

#[test]
fn refinement_contracts() {
    let (p, law) = (merton_market(), merton_law());
    let price = |n: usize| solve_pide(&p, &law, &grid(&p, &law, n, n), Scheme::Penalty, &opts()).unwrap().price_at_maturity(100.0);
    let (a, b, c) = (price(100), price(200), price(400));
    let ratio = (c - b).abs() / (b - a).abs();
    assert!(ratio <= 0.65, "successive-refinement ratio {ratio} ({a}, {b}, {c})");
}

/// Implicit-Euler residual `L u` of the discrete equation at level `n`.
fn residual_row(s: &freebound::SolutionSurface64, op: Option<&JumpOperator<f64>>, n: usize) -> Vec<f64> {
    let (g, p) = (&s.grid, &s.params);
    let mu = freebound::model::drift_mu(p, &s.law).unwrap();
    let (a, c) = (0.5 * 0.04, mu - 0.02);
    let (u, v) = (s.row(n), s.row(n - 1));
    let jump = op.map(|o| o.apply_vec(u, g.t(n)));
    (1..=g.nx)
        .map(|i| {
            let uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (g.dx * g.dx);
            let ux = (u[i + 1] - u[i - 1]) / (2.0 * g.dx);
            let j = jump.as_ref().map_or(0.0, |j| j[i]);
            (u[i] - v[i]) / g.dt - a * uxx - c * ux + (p.r + p.lambda) * u[i] - p.lambda * j
        })
        .collect()
}

#[test]
fn variational_inequality_holds_on_the_grid() {
    let (p, law) = (merton_market(), merton_law());
    let g: Grid64 = grid(&p, &law, 200, 100);
    let o = opts();
    let s = solve_pide(&p, &law, &g, Scheme::Psor, &o).unwrap();
    let op = JumpOperator::new(&g, &law, o.n_quad, o.tail_width, p.strike).unwrap().with_tail(TailExtension::Put { strike: p.strike });
    let payoff = s.payoff_row();
    let tol = 1e-5 * p.strike;
    for n in 1..=g.nt {
        let res = residual_row(&s, Some(&op), n);
        for (k, r) in res.iter().enumerate() {
            let i = k + 1;
            assert!(*r >= -tol, "level {n} node {i}: L u = {r}");
            if s.row(n)[i] - payoff[i] > 1e-6 * p.strike {
                assert!(r.abs() <= tol, "continuation level {n} node {i}: L u = {r}");
            }
        }
    }
}

#[test]
fn value_is_nondecreasing_in_time_to_maturity() {
    let (p, law) = (merton_market(), merton_law());
    let g = grid(&p, &law, 200, 200);
    let s = solve_pide(&p, &law, &g, Scheme::Penalty, &opts()).unwrap();
    let payoff = s.payoff_row();
    for n in 1..=g.nt {
        for i in 1..=g.nx {
            let dt_u = s.value(n, i) - s.value(n - 1, i);
            assert!(dt_u >= -1e-9 * p.strike, "level {n} node {i}: {dt_u}");
            if n >= 10 && !s.mask_row(n)[i] && s.value(n, i) - payoff[i] > 1e-6 && i < g.nx - 5 && s.value(n, i) > 1e-6 {
                assert!(dt_u > 0.0, "continuation level {n} node {i} does not increase");
            }
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    use freebound::{Grid32, JumpLaw32, MarketParams32, SolverOptions};
    let p = MarketParams32::constant(0.05, 0.0, 0.3, 100.0, 1.0, 0.2).unwrap();
    let law = JumpLaw32::Merton { mean: -0.1, std: 0.2 };
    let o = SolverOptions { jump_tol: 1e-6, psor_tol: 1e-6, penalty_epsilon: 1e-4, ..SolverOptions::default() };
    let s = solve_pide(&p, &law, &Grid32::for_model(&p, &law, 200, 100).unwrap(), Scheme::Penalty, &o).unwrap();
    let (p64, law64) = (merton_market(), merton_law());
    let d = solve_pide(&p64, &law64, &grid(&p64, &law64, 200, 100), Scheme::Penalty, &opts()).unwrap();
    let (a, b) = (f64::from(s.price_at_maturity(100.0)), d.price_at_maturity(100.0));
    assert!(((a - b) / b).abs() <= 1e-3, "{a} vs {b}");
}
