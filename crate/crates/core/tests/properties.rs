mod common;

use common::*;
use freebound::boundary::extract_boundary;
use freebound::model::{check_yang_condition, compute_xi, drift_mu};
use freebound::solver::{solve_pide, TailExtension};
use freebound::{ExtractionMethod, Grid64, JumpLaw64, JumpOperator, MarketParams64, Scheme, SolverOptions64};
use proptest::prelude::*;

/// `\int_a^b f`, composite Simpson.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn merton() -> impl Strategy<Value = JumpLaw64> {
    (-0.3..0.3f64, 0.05..0.5f64).prop_map(|(mean, std)| JumpLaw64::Merton { mean, std })
}

fn kou() -> impl Strategy<Value = JumpLaw64> {
    (0.0..=1.0f64, 1.5..30.0f64, 0.5..30.0f64).prop_map(|(p, eta1, eta2)| JumpLaw64::Kou { p, eta1, eta2 })
}

fn discrete() -> impl Strategy<Value = JumpLaw64> {
    prop::collection::vec((-0.5..0.5f64, 0.01..1.0f64), 1..6).prop_map(|pts| {
        let total: f64 = pts.iter().map(|p| p.1).sum();
        JumpLaw64::Discrete { points: pts.into_iter().map(|(z, w)| (z, w / total)).collect() }
    })
}

fn any_law() -> impl Strategy<Value = JumpLaw64> {
    prop_oneof![merton(), kou(), discrete()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn xi_matches_dense_quadrature(law in prop_oneof![merton(), kou()]) {
        let xi = compute_xi(&law).unwrap();
        let dense = match law {
            JumpLaw64::Merton { mean, std } => {
                let phi = |z: f64| (-(z - mean) * (z - mean) / (2.0 * std * std)).exp() / (std * (2.0 * std::f64::consts::PI).sqrt());
                simpson(|z| z.exp() * phi(z), mean - 14.0 * std, mean + 14.0 * std, 20_000)
            }
            JumpLaw64::Kou { p, eta1, eta2 } => {
                let up = simpson(|z| p * eta1 * ((1.0 - eta1) * z).exp(), 0.0, 80.0 / (eta1 - 1.0), 400_000);
                let down = simpson(|z| (1.0 - p) * eta2 * ((1.0 + eta2) * z).exp(), -80.0 / (1.0 + eta2), 0.0, 400_000);
                up + down
            }
            JumpLaw64::Discrete { .. } => unreachable!(),
        };
        prop_assert!((dense / xi - 1.0).abs() <= 1e-8, "{law:?}: {dense} vs {xi}");
    }

    #[test]
    fn xi_is_exact_for_discrete_laws(law in discrete()) {
        let JumpLaw64::Discrete { points } = &law else { unreachable!() };
        let sum: f64 = points.iter().map(|(z, w)| w * z.exp()).sum();
        prop_assert_eq!(compute_xi(&law).unwrap(), sum);
    }

    #[test]
    fn drift_identity(r in 0.001..0.2f64, q in 0.0..0.2f64, lambda in 0.0..2.0f64, law in any_law()) {
        let p = MarketParams64::constant(r, q, lambda, 100.0, 1.0, 0.2).unwrap();
        let mu = drift_mu(&p, &law).unwrap();
        let xi = compute_xi(&law).unwrap();
        prop_assert!((mu + q - r - lambda * (1.0 - xi)).abs() <= 1e-14);
    }

    #[test]
    fn up_gain_is_nonnegative_and_drives_the_condition(r in 0.001..0.2f64, q in 0.0..0.2f64, lambda in 0.0..2.0f64, law in any_law()) {
        let p = MarketParams64::constant(r, q, lambda, 100.0, 1.0, 0.2).unwrap();
        let (holds, gain) = check_yang_condition(&p, &law).unwrap();
        prop_assert!(gain >= 0.0);
        prop_assert_eq!(holds, r >= q + lambda * gain);
        if let JumpLaw64::Discrete { points } = &law {
            let charges_up = points.iter().any(|(z, w)| *z > 0.0 && *w > 0.0);
            prop_assert_eq!(gain > 0.0, charges_up);
        }
    }

    #[test]
    fn jump_operator_preserves_mass(law in any_law(), nx in 100usize..400) {
        let g = Grid64::new(1.0, 8.0, nx, 1.0, 16).unwrap();
        let o = SolverOptions64::default();
        let op = JumpOperator::new(&g, &law, o.n_quad, o.tail_width, 100.0).unwrap().with_tail(TailExtension::Zero);
        let total: f64 = op.stencil().map(|(_, w)| w).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(op.stencil().all(|(_, w)| w >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn surface_obeys_put_bounds(r in 0.01..0.1f64, q in 0.0..0.05f64, lambda in 0.0..0.5f64, sigma in 0.15..0.4f64, law in prop_oneof![merton(), kou()]) {
        let p = MarketParams64::constant(r, q, lambda, 100.0, 1.0, sigma).unwrap();
        let g = grid(&p, &law, 120, 60);
        let s = solve_pide(&p, &law, &g, Scheme::Penalty, &SolverOptions64::default()).unwrap();
        let payoff = s.payoff_row();
        for n in 0..=g.nt {
            for i in 0..g.n_cols() {
                let u = s.value(n, i);
                prop_assert!(u >= payoff[i] && u <= 100.0);
                if n > 0 {
                    prop_assert!(u >= s.value(n - 1, i) - 1e-9 * 100.0);
                }
            }
        }
    }

    #[test]
    fn boundary_scales_with_the_strike(c in 0.2..5.0f64, lambda in 0.0..0.5f64) {
        let law = merton_law();
        let base = MarketParams64::constant(0.05, 0.01, lambda, 100.0, 1.0, 0.2).unwrap();
        let scaled = MarketParams64::constant(0.05, 0.01, lambda, 100.0 * c, 1.0, 0.2).unwrap();
        let solve = |p: &MarketParams64| {
            let s = solve_pide(p, &law, &grid(p, &law, 200, 100), Scheme::Penalty, &SolverOptions64::default()).unwrap();
            let dx = s.grid.dx;
            (extract_boundary(&s, ExtractionMethod::MaskEdge).unwrap(), dx)
        };
        let (a, dx) = solve(&base);
        let (b, _) = solve(&scaled);
        for n in 1..=100 {
            let (x, y) = (a.at_level(n).unwrap(), b.at_level(n).unwrap());
            prop_assert!((y - c.ln() - x).abs() <= dx, "level {n}: {x} vs {}", y - c.ln());
        }
    }
}
