//! Independent verification oracles.
//!
//! Everything here is deliberately brute-force and kept separate from the
//! implementation paths it checks: unit, property, and acceptance tests
//! compare the fast implementations against these.

use rand::Rng;

use crate::env::TabularMdp;
use crate::rl::tabular::TabularPolicy;

/// KL-regularized linear objective on the probability simplex:
/// f(p) = ⟨−ηq, p⟩ + KL(p ‖ π).
pub fn kl_tilt_objective(p: &[f64], prior: &[f64], q: &[f64], eta: f64) -> f64 {
    let mut v = 0.0;
    for i in 0..p.len() {
        if p[i] > 0.0 {
            v += -eta * q[i] * p[i] + p[i] * (p[i] / prior[i]).ln();
        }
    }
    v
}

/// Minimizes [`kl_tilt_objective`] by multi-resolution grid search over the
/// simplex (no closed form involved). Accurate to ~1e-7 total variation.
pub fn brute_force_kl_minimizer(prior: &[f64], q: &[f64], eta: f64) -> Vec<f64> {
    let n = prior.len();
    assert!(n >= 2);
    let mut center = prior.to_vec();
    let mut width = 1.0_f64;
    const GRID: usize = 9;
    const LEVELS: usize = 40;
    for _ in 0..LEVELS {
        let mut best = center.clone();
        let mut best_val = f64::INFINITY;
        // Enumerate the first n−1 coordinates on the local grid.
        let mut idx = vec![0usize; n - 1];
        loop {
            let mut p = vec![0.0; n];
            let mut sum = 0.0;
            let mut valid = true;
            for i in 0..n - 1 {
                let frac = idx[i] as f64 / (GRID - 1) as f64 - 0.5;
                let v = (center[i] + frac * width).clamp(0.0, 1.0);
                p[i] = v;
                sum += v;
                if sum > 1.0 + 1e-15 {
                    valid = false;
                    break;
                }
            }
            if valid {
                p[n - 1] = (1.0 - sum).max(0.0);
                let val = kl_tilt_objective(&p, prior, q, eta);
                if val < best_val {
                    best_val = val;
                    best = p;
                }
            }
            // advance mixed-radix counter
            let mut carry = true;
            for slot in idx.iter_mut() {
                if carry {
                    *slot += 1;
                    if *slot >= GRID {
                        *slot = 0;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
        center = best;
        width *= 0.6;
    }
    center
}

/// Total variation distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Long-horizon Monte-Carlo estimate of the average reward of a policy.
pub fn mc_gain(mdp: &TabularMdp, policy: &TabularPolicy, steps: usize, rng: &mut impl Rng) -> f64 {
    let mut s = 0usize;
    let mut total = 0.0;
    for _ in 0..steps {
        let a = sample_index(&policy.probs[s], rng);
        total += mdp.r[s][a];
        s = sample_index(&mdp.p[s][a], rng);
    }
    total / steps as f64
}

/// Samples an index from a probability row.
pub fn sample_index(row: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// Exhaustive enumeration of all deterministic policies of a small MDP,
/// returning the one with the best exact gain (brute-force optimality
/// oracle; only feasible for a handful of states).
pub fn brute_force_optimal_gain(mdp: &TabularMdp) -> (Vec<usize>, f64) {
    let n = mdp.n_states;
    let a = mdp.n_actions;
    let total = (a as u64).pow(n as u32);
    assert!(total <= 20_000_000, "brute force too large");
    let mut best_gain = f64::NEG_INFINITY;
    let mut best = vec![0usize; n];
    for code in 0..total {
        let mut actions = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            actions.push((c % a as u64) as usize);
            c /= a as u64;
        }
        let policy = TabularPolicy::deterministic(&actions, a);
        if let Ok((gain, _)) = crate::rl::tabular::avg_eval_exact(mdp, &policy) {
            if gain > best_gain + 1e-12 {
                best_gain = gain;
                best = actions;
            }
        }
    }
    (best, best_gain)
}

/// Random unichain tabular MDP: strictly positive transition kernels make
/// every policy's chain irreducible.
pub fn random_unichain_mdp(
    n_states: usize,
    n_actions: usize,
    rng: &mut impl Rng,
) -> TabularMdp {
    let mut mdp = TabularMdp::zeros(n_states, n_actions);
    for s in 0..n_states {
        for a in 0..n_actions {
            let mut row: Vec<f64> = (0..n_states)
                .map(|_| 0.05 + rng.random_range(0.0..1.0))
                .collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
            mdp.p[s][a] = row;
            mdp.r[s][a] = rng.random_range(-1.0..1.0);
        }
    }
    mdp
}

/// One-sided paired t-test: returns the p-value for the alternative
/// "mean(a − b) > 0" using a normal approximation of the t distribution
/// tail (adequate for the seed counts used here, and conservative-checked
/// against the exact t for small n via Hill's approximation).
pub fn paired_t_pvalue_greater(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    assert!(n >= 2);
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        return if mean > 0.0 { 0.0 } else { 1.0 };
    }
    let t = mean / (var / n as f64).sqrt();
    1.0 - student_t_cdf(t, (n - 1) as f64)
}

/// Student-t CDF via the regularized incomplete beta function.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    let ib = 0.5 * inc_beta(0.5 * dof, 0.5, x);
    if t > 0.0 {
        1.0 - ib
    } else {
        ib
    }
}

/// Regularized incomplete beta I_x(a, b) by continued fraction (Lentz).
fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta).exp() / a;
    // Continued fraction.
    let mut f = 1.0_f64;
    let mut c = 1.0_f64;
    let mut d = 0.0_f64;
    for i in 0..200 {
        let m = i / 2;
        let numerator = if i == 0 {
            1.0
        } else if i % 2 == 0 {
            let m = m as f64;
            m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m))
        } else {
            let m = m as f64;
            -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0))
        };
        d = 1.0 + numerator * d;
        if d.abs() < 1e-30 {
            d = 1e-30;
        }
        d = 1.0 / d;
        c = 1.0 + numerator / c;
        if c.abs() < 1e-30 {
            c = 1e-30;
        }
        let cd = c * d;
        f *= cd;
        if (1.0 - cd).abs() < 1e-12 {
            break;
        }
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        front * (f - 1.0)
    } else {
        1.0 - inc_beta(b, a, 1.0 - x)
    }
}

/// Lanczos log-gamma.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = G[0];
        let t = x + 7.5;
        for (i, &g) in G.iter().enumerate().skip(1) {
            a += g / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilt_minimizer_matches_hand_case() {
        // Uniform prior over 2 actions, q = (1, 0), η = 1 → (e/(e+1), 1/(e+1)).
        let p = brute_force_kl_minimizer(&[0.5, 0.5], &[1.0, 0.0], 1.0);
        let e = std::f64::consts::E;
        let expect = [e / (e + 1.0), 1.0 / (e + 1.0)];
        assert!(total_variation(&p, &expect) <= 1e-6, "{p:?}");
    }

    #[test]
    fn student_t_matches_table_values() {
        // Two-sided 95% critical value for 4 dof is 2.776.
        let p = 1.0 - student_t_cdf(2.776, 4.0);
        assert!((p - 0.025).abs() < 5e-4, "tail {p}");
        // Symmetric.
        assert!((student_t_cdf(0.0, 7.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn paired_t_direction() {
        let a = [1.0, 1.2, 0.9, 1.1, 1.3];
        let b = [0.2, 0.3, 0.1, 0.4, 0.2];
        assert!(paired_t_pvalue_greater(&a, &b) < 0.01);
        assert!(paired_t_pvalue_greater(&b, &a) > 0.95);
    }
}
