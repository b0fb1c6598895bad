mod common;

use common::*;
use freebound::boundary::{bprime_identity, default_fd_half_width, extract_boundary, j0_eval, level_curve_b, solve_b0, time_derivative_row, uxx_gap, AuxiliaryJ};
use freebound::model::compute_xi;
use freebound::reference::{crr_american_put, tree_boundary_at_maturity};
use freebound::solver::solve_pide;
use freebound::{ExtractionMethod, JumpLaw64, MarketParams64, Scheme, SolutionSurface64, SolverOptions64};

fn solved(p: &MarketParams64, law: &JumpLaw64, n: usize) -> SolutionSurface64 {
    solve_pide(p, law, &grid(p, law, n, n), Scheme::Penalty, &SolverOptions64::default()).unwrap()
}

#[test]
fn boundary_starts_at_the_strike() {
    let s = solved(&merton_market(), &merton_law(), 200);
    for m in [ExtractionMethod::MaskEdge, ExtractionMethod::SmoothfitCross] {
        let c = extract_boundary(&s, m).unwrap();
        assert_eq!(c.levels[0], 0);
        assert_eq!(c.b[0], 100f64.ln());
    }
}

#[test]
fn maturity_boundary_matches_tree() {
    let (p, law) = (no_jumps(), merton_law());
    let s = solved(&p, &law, 400);
    let b = extract_boundary(&s, ExtractionMethod::MaskEdge).unwrap().at_level(400).unwrap();
    let tree = crr_american_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, 2000);
    let bt = tree_boundary_at_maturity(&tree, 1.0, 0.05).unwrap();
    assert!((b - bt).abs() <= 2.0 * s.grid.dx, "b(T) {b} vs tree {bt}, dx {}", s.grid.dx);
}

#[test]
fn extraction_methods_agree() {
    let s = solved(&merton_market(), &merton_law(), 400);
    let a = extract_boundary(&s, ExtractionMethod::MaskEdge).unwrap();
    let b = extract_boundary(&s, ExtractionMethod::SmoothfitCross).unwrap();
    for n in 10..=400 {
        let (x, y) = (a.at_level(n).unwrap(), b.at_level(n).unwrap());
        assert!((x - y).abs() <= 2.0 * s.grid.dx, "level {n}: {x} vs {y}");
    }
}

#[test]
fn boundary_below_strike_and_decreasing() {
    let s = solved(&merton_market(), &merton_law(), 400);
    let c = extract_boundary(&s, ExtractionMethod::MaskEdge).unwrap();
    let lk = 100f64.ln();
    for k in 1..c.len() {
        assert!(c.b[k] < lk, "level {}: {}", c.levels[k], c.b[k]);
        assert!(c.b[k] <= c.b[k - 1] + s.grid.dx);
    }
}

#[test]
fn b0_examples() {
    let law = merton_law();
    let at = |r: f64, q: f64| solve_b0(&MarketParams64::constant(r, q, 0.0, 100.0, 1.0, 0.2).unwrap(), &law).unwrap();
    assert!((at(0.04, 0.04) - 100f64.ln()).abs() < 1e-9);
    assert!((at(0.05, 0.02) - 250f64.ln()).abs() < 1e-9);
}

/// `J0` with `E[(e^{x+Z} - K)^+]` by composite Simpson against the Kou density.
fn kou_j0_dense(x: f64, r: f64, k: f64, lambda: f64, p: f64, eta1: f64, eta2: f64) -> f64 {
    let density = |z: f64| if z >= 0.0 { p * eta1 * (-eta1 * z).exp() } else { (1.0 - p) * eta2 * (eta2 * z).exp() };
    let f = |z: f64| ((x + z).exp() - k).max(0.0) * density(z);
    let simpson = |a: f64, b: f64| {
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let z0 = k.ln() - x;
    // split at the kink of the payoff and at the density kink z = 0
    let up = simpson(z0.max(0.0), z0.max(0.0) + 60.0 / eta1);
    let down = if z0 < 0.0 { simpson(z0, 0.0) } else { 0.0 };
    -r * k + lambda * (up + down)
}

#[test]
fn kou_b0_matches_dense_quadrature_root() {
    let law = JumpLaw64::Kou { p: 0.5, eta1: 10.0, eta2: 5.0 };
    let p = MarketParams64::constant(0.03, 0.0, 0.3, 100.0, 1.0, 0.2).unwrap();
    let b0 = solve_b0(&p, &law).unwrap();
    let f = |x: f64| kou_j0_dense(x, 0.03, 100.0, 0.3, 0.5, 10.0, 5.0);
    let (mut lo, mut hi) = (2.0, 8.0);
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    assert!((b0 - lo).abs() < 1e-6, "{b0} vs {lo}");
    assert!(j0_eval(b0, &p, &law).abs() < 1e-8);
}

#[test]
fn level_curve_without_jumps_is_constant() {
    let law = merton_law();
    let p = MarketParams64::constant(0.05, 0.02, 0.0, 100.0, 1.0, 0.2).unwrap();
    let s = solved(&p, &law, 100);
    for (_, b) in level_curve_b(&s, &SolverOptions64::default()).unwrap() {
        assert!((b.unwrap() - 250f64.ln()).abs() < 1e-9);
    }
}

#[test]
fn j_bounded_below_and_level_curve_nonincreasing() {
    let (p, law) = (merton_market(), merton_law());
    let s = solved(&p, &law, 200);
    let o = SolverOptions64::default();
    let aux = AuxiliaryJ::new(&s, &o).unwrap();
    let xi = compute_xi(&law).unwrap();
    for n in (0..=200).step_by(20) {
        for i in 0..s.grid.n_cols() {
            // chord error of the interpolated K - e^y under the jump integral
            let x = s.grid.x(i);
            let chord = p.lambda * xi * (x + s.grid.dx).exp() * s.grid.dx * s.grid.dx / 8.0;
            let j = aux.eval(x, n);
            assert!(j >= -p.r * p.strike - chord - 1e-9, "level {n} x {}: J + rK = {}", s.grid.x(i), j + p.r * p.strike);
        }
    }
    let big_b = level_curve_b(&s, &o).unwrap();
    let mut prev = f64::INFINITY;
    for (t, b) in big_b {
        let b = b.unwrap_or(f64::INFINITY);
        assert!(b <= prev + s.grid.dx, "t {t}: B rises to {b} from {prev}");
        prev = b;
    }
}

#[test]
fn bprime_denominator_is_half_sigma_squared_gap() {
    let s = solved(&merton_market(), &merton_law(), 400);
    let c = extract_boundary(&s, ExtractionMethod::SmoothfitCross).unwrap();
    let o = SolverOptions64::default();
    let samples = bprime_identity(&s, &c, &o, default_fd_half_width(400)).unwrap();
    let gaps = uxx_gap(&s, &c);
    let mut worst: f64 = 0.0;
    for smp in samples.iter().filter(|x| x.t >= 0.2) {
        let (_, _, gap) = gaps.iter().find(|g| g.0 == smp.level).copied().unwrap();
        assert!(smp.denominator > 0.0 && gap > 0.0);
        worst = worst.max((smp.denominator / (0.02 * gap) - 1.0).abs());
        assert!(smp.formula < 0.0, "level {}: b' = {}", smp.level, smp.formula);
    }
    assert!(worst <= 0.10, "worst mismatch {worst}");
}

#[test]
fn time_derivative_vanishes_far_right_and_at_the_boundary() {
    let (p, law) = (merton_market(), merton_law());
    let first_node = |n: usize| {
        let s = solved(&p, &law, n);
        let c = extract_boundary(&s, ExtractionMethod::MaskEdge).unwrap();
        let w = time_derivative_row(&s, n);
        assert!(w[s.grid.n_cols() - 1].abs() <= 1e-9);
        let j = s.grid.nearest(c.at_level(n).unwrap()) + 1;
        (w[j], s.grid.dx)
    };
    let (w1, dx1) = first_node(200);
    let (w2, dx2) = first_node(800);
    // C dx^{1/2} with C fixed by the coarse grid
    assert!(w2 <= 1.3 * w1 * (dx2 / dx1).sqrt(), "{w1} at dx {dx1}, {w2} at dx {dx2}");
}
