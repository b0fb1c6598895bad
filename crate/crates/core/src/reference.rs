//! Closed-form and lattice reference prices used as independent oracles.

use crate::scalar::norm_cdf;

/// Black-Scholes European put with continuous dividend yield.
pub fn bs_put(spot: f64, strike: f64, r: f64, q: f64, sigma: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return (strike - spot).max(0.0);
    }
    let sq = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + (r - q + 0.5 * sigma * sigma) * tau) / sq;
    let d2 = d1 - sq;
    strike * (-r * tau).exp() * norm_cdf(-d2) - spot * (-q * tau).exp() * norm_cdf(-d1)
}

/// Merton jump-diffusion European put as a Poisson mixture of Black-Scholes prices.
#[allow(clippy::too_many_arguments)]
pub fn merton_put(spot: f64, strike: f64, r: f64, q: f64, sigma: f64, tau: f64, lambda: f64, m: f64, s: f64) -> f64 {
    let xi = (m + 0.5 * s * s).exp();
    let lt = lambda * xi * tau;
    let mut weight = (-lt).exp();
    let mut total = 0.0;
    for n in 0..200 {
        if n > 0 {
            weight *= lt / n as f64;
        }
        let nf = n as f64;
        let sig_n = (sigma * sigma + nf * s * s / tau).sqrt();
        let r_n = r - lambda * (xi - 1.0) + nf * xi.ln() / tau;
        total += weight * bs_put(spot, strike, r_n, q, sig_n, tau);
        if n > 10 && weight < 1e-18 {
            break;
        }
    }
    total
}

/// Result of a Cox-Ross-Rubinstein American put tree.
#[derive(Debug, Clone)]
pub struct TreeResult {
    pub price: f64,
    /// `(time to maturity, log exercise boundary)` for every step with both regions present.
    pub boundary: Vec<(f64, f64)>,
}

/// CRR American put with `steps` steps. The boundary at each step is the log
/// midpoint between the highest exercised node and the next node up.
pub fn crr_american_put(spot: f64, strike: f64, r: f64, q: f64, sigma: f64, tau: f64, steps: usize) -> TreeResult {
    let dt = tau / steps as f64;
    let up = (sigma * dt.sqrt()).exp();
    let down = 1.0 / up;
    let p = (((r - q) * dt).exp() - down) / (up - down);
    let disc = (-r * dt).exp();
    let ln_s = spot.ln();
    let lu = up.ln();
    let node = |i: usize, j: usize| ln_s + (2.0 * j as f64 - i as f64) * lu;
    let mut v: Vec<f64> = (0..=steps).map(|j| (strike - node(steps, j).exp()).max(0.0)).collect();
    let mut boundary = Vec::new();
    for i in (0..steps).rev() {
        let mut top_exercised: Option<usize> = None;
        for j in 0..=i {
            let cont = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
            let ex = strike - node(i, j).exp();
            if ex > cont {
                v[j] = ex;
                top_exercised = Some(j);
            } else {
                v[j] = cont;
            }
        }
        if let Some(j) = top_exercised {
            if j < i {
                boundary.push((tau - i as f64 * dt, node(i, j) + lu));
            }
        }
    }
    boundary.reverse();
    TreeResult { price: v[0], boundary }
}

/// Boundary at time to maturity `tau_full` from a tree: a least-squares line
/// through the per-step boundary estimates with time to maturity in
/// `[tau_full - window, tau_full]`, evaluated at `tau_full`.
pub fn tree_boundary_at_maturity(tree: &TreeResult, tau_full: f64, window: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = tree.boundary.iter().copied().filter(|(t, _)| *t >= tau_full - window).collect();
    if pts.len() < 5 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mb)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Some(mb + slope * (tau_full - mt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bs_put_reference_value() {
        // textbook value for S=K=100, r=5%, sigma=20%, T=1
        assert!((bs_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0) - 5.573_526_022_256_971).abs() < 1e-9);
    }

    #[test]
    fn merton_without_jumps_is_black_scholes() {
        let a = merton_put(95.0, 100.0, 0.05, 0.01, 0.2, 0.7, 0.0, -0.1, 0.2);
        let b = bs_put(95.0, 100.0, 0.05, 0.01, 0.2, 0.7);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn crr_converges_to_known_american_value() {
        // widely quoted American put value for these inputs is about 6.090
        let t = crr_american_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, 2000);
        assert!((t.price - 6.0904).abs() < 2e-3, "{}", t.price);
        let b = tree_boundary_at_maturity(&t, 1.0, 0.1).unwrap();
        assert!(b < 100f64.ln() && b > 80f64.ln(), "{b}");
    }
}
