//! Exact average-reward machinery for tabular MDPs: gain/bias evaluation by
//! linear solve and Howard policy iteration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::TabularMdp;
use crate::error::{Error, Result};

/// Row-stochastic policy over a finite MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    pub probs: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        TabularPolicy {
            probs: vec![vec![1.0 / n_actions as f64; n_actions]; n_states],
        }
    }

    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        TabularPolicy {
            probs: actions
                .iter()
                .map(|&a| {
                    let mut row = vec![0.0; n_actions];
                    row[a] = 1.0;
                    row
                })
                .collect(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    /// Greedy action per state (lowest index wins ties).
    pub fn greedy_actions(&self) -> Vec<usize> {
        self.probs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|(i, a), (j, b)| a.partial_cmp(b).unwrap().then(j.cmp(i)))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (s, row) in self.probs.iter().enumerate() {
            if row.iter().any(|&p| p < 0.0) {
                return Err(Error::invalid(format!("negative probability in state {s}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "policy row {s} sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 {
            return Err(Error::DegenerateChain {
                context: "linear solve".into(),
                detail: format!("singular system at column {col}"),
            });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

fn policy_kernel(mdp: &TabularMdp, policy: &TabularPolicy) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = mdp.n_states;
    let mut p_pi = vec![vec![0.0; n]; n];
    let mut r_pi = vec![0.0; n];
    for s in 0..n {
        for a in 0..mdp.n_actions {
            let w = policy.probs[s][a];
            if w == 0.0 {
                continue;
            }
            r_pi[s] += w * mdp.r[s][a];
            for s2 in 0..n {
                p_pi[s][s2] += w * mdp.p[s][a][s2];
            }
        }
    }
    (p_pi, r_pi)
}

/// Number of recurrent classes of a finite chain (support reachability).
fn recurrent_class_count(p_pi: &[Vec<f64>]) -> usize {
    let n = p_pi.len();
    let mut reach = vec![vec![false; n]; n];
    for s in 0..n {
        reach[s][s] = true;
        for s2 in 0..n {
            if p_pi[s][s2] > 1e-14 {
                reach[s][s2] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let recurrent: Vec<usize> = (0..n)
        .filter(|&s| (0..n).all(|t| !reach[s][t] || reach[t][s]))
        .collect();
    let mut classes = 0usize;
    let mut assigned = vec![false; n];
    for &s in &recurrent {
        if assigned[s] {
            continue;
        }
        classes += 1;
        for &t in &recurrent {
            if reach[s][t] && reach[t][s] {
                assigned[t] = true;
            }
        }
    }
    classes
}

/// Exact gain and bias of a policy: solves
/// h(s) + ρ = r_π(s) + Σ_{s'} P_π(s'|s)·h(s') with the normalization h(0) = 0.
/// Faults on multichain (or otherwise singular) chains.
pub fn avg_eval_exact(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<(f64, Vec<f64>)> {
    policy.validate()?;
    if policy.n_states() != mdp.n_states {
        return Err(Error::ShapeMismatch {
            context: "policy vs mdp".into(),
            expected: mdp.n_states,
            actual: policy.n_states(),
        });
    }
    let n = mdp.n_states;
    let (p_pi, r_pi) = policy_kernel(mdp, policy);
    let classes = recurrent_class_count(&p_pi);
    if classes != 1 {
        return Err(Error::DegenerateChain {
            context: "avg_eval_exact".into(),
            detail: format!("{classes} recurrent classes (need unichain)"),
        });
    }
    // Unknowns: x = [ρ, h(1), …, h(n−1)], with h(0) ≡ 0.
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        a[s][0] = 1.0; // ρ
        if s >= 1 {
            a[s][s] += 1.0; // h(s)
        }
        for s2 in 1..n {
            a[s][s2] -= p_pi[s][s2];
        }
        b[s] = r_pi[s];
    }
    let x = solve_linear(a, b)?;
    let rho = x[0];
    let mut h = vec![0.0; n];
    h[1..n].copy_from_slice(&x[1..n]);
    Ok((rho, h))
}

/// Residual of the evaluation equations for (ρ, h) under a policy.
pub fn bellman_residual(mdp: &TabularMdp, policy: &TabularPolicy, rho: f64, h: &[f64]) -> f64 {
    let (p_pi, r_pi) = policy_kernel(mdp, policy);
    let mut worst = 0.0_f64;
    for s in 0..mdp.n_states {
        let rhs: f64 = r_pi[s] + p_pi[s].iter().zip(h).map(|(p, hv)| p * hv).sum::<f64>();
        worst = worst.max((h[s] + rho - rhs).abs());
    }
    worst
}

/// Howard policy iteration on (ρ, h). Ties break to the lowest action index
/// and the incumbent action is kept unless strictly improved, which
/// guarantees termination.
pub fn avg_policy_iteration(mdp: &TabularMdp) -> Result<(TabularPolicy, f64)> {
    let n = mdp.n_states;
    // Start from the reward-greedy policy.
    let mut actions: Vec<usize> = (0..n)
        .map(|s| {
            (0..mdp.n_actions)
                .max_by(|&i, &j| {
                    mdp.r[s][i]
                        .partial_cmp(&mdp.r[s][j])
                        .unwrap()
                        .then(j.cmp(&i))
                })
                .unwrap()
        })
        .collect();
    let max_iters = 64 + n * mdp.n_actions;
    for _ in 0..max_iters {
        let policy = TabularPolicy::deterministic(&actions, mdp.n_actions);
        let (rho, h) = avg_eval_exact(mdp, &policy)?;
        let gain = rho;
        let mut changed = false;
        for s in 0..n {
            let q = |a: usize| -> f64 {
                mdp.r[s][a]
                    + mdp.p[s][a]
                        .iter()
                        .zip(&h)
                        .map(|(p, hv)| p * hv)
                        .sum::<f64>()
            };
            // Ascending scan: the first strict improver is the lowest-index
            // one; the incumbent survives ties.
            let mut best_a = actions[s];
            let mut best_q = q(actions[s]);
            for a in 0..mdp.n_actions {
                let qa = q(a);
                if qa > best_q + 1e-10 {
                    best_q = qa;
                    best_a = a;
                }
            }
            if best_a != actions[s] {
                actions[s] = best_a;
                changed = true;
            }
        }
        if !changed {
            return Ok((TabularPolicy::deterministic(&actions, mdp.n_actions), gain));
        }
    }
    Err(Error::DegenerateChain {
        context: "avg_policy_iteration".into(),
        detail: "failed to terminate (tie cycle?)".into(),
    })
}

/// Samples a trajectory of (s, a, r, s') tuples under a policy.
pub fn mdp_rollout(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    steps: usize,
    start: usize,
    rng: &mut impl Rng,
) -> Vec<(usize, usize, f64, usize)> {
    let mut out = Vec::with_capacity(steps);
    let mut s = start;
    for _ in 0..steps {
        let a = crate::testkit::sample_index(&policy.probs[s], rng);
        let s2 = crate::testkit::sample_index(&mdp.p[s][a], rng);
        out.push((s, a, mdp.r[s][a], s2));
        s = s2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::gridworld_build;
    use crate::rng::stream;
    use crate::testkit;

    /// Two-state deterministic cycle with rewards (1, 0).
    fn two_cycle() -> TabularMdp {
        let mut mdp = TabularMdp::zeros(2, 1);
        mdp.p[0][0][1] = 1.0;
        mdp.p[1][0][0] = 1.0;
        mdp.r[0][0] = 1.0;
        mdp.r[1][0] = 0.0;
        mdp
    }

    #[test]
    fn two_state_cycle_gain_and_bias() {
        let mdp = two_cycle();
        let policy = TabularPolicy::deterministic(&[0, 0], 1);
        let (rho, h) = avg_eval_exact(&mdp, &policy).unwrap();
        assert!((rho - 0.5).abs() < 1e-12);
        assert!((h[0] - 0.0).abs() < 1e-12);
        assert!((h[1] - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn constant_reward_gives_constant_gain_zero_bias() {
        let mut rng = stream(1, &["tabular"], 0);
        let mut mdp = testkit::random_unichain_mdp(6, 3, &mut rng);
        for s in 0..6 {
            for a in 0..3 {
                mdp.r[s][a] = 0.7;
            }
        }
        let policy = TabularPolicy::uniform(6, 3);
        let (rho, h) = avg_eval_exact(&mdp, &policy).unwrap();
        assert!((rho - 0.7).abs() < 1e-12);
        assert!(h.iter().all(|v| v.abs() < 1e-9), "{h:?}");
    }

    #[test]
    fn evaluation_satisfies_bellman_system() {
        let mut rng = stream(2, &["tabular"], 0);
        for i in 0..20 {
            let mdp = testkit::random_unichain_mdp(5 + i % 5, 2 + i % 3, &mut rng);
            let policy = TabularPolicy::uniform(mdp.n_states, mdp.n_actions);
            let (rho, h) = avg_eval_exact(&mdp, &policy).unwrap();
            let res = bellman_residual(&mdp, &policy, rho, &h);
            assert!(res <= 1e-10, "residual {res}");
        }
    }

    #[test]
    fn gain_matches_monte_carlo() {
        let mut rng = stream(3, &["tabular"], 0);
        let mdp = testkit::random_unichain_mdp(6, 3, &mut rng);
        let policy = TabularPolicy::uniform(6, 3);
        let (rho, _) = avg_eval_exact(&mdp, &policy).unwrap();
        let mc = testkit::mc_gain(&mdp, &policy, 1_000_000, &mut rng);
        assert!((rho - mc).abs() <= 1e-2, "exact {rho} vs mc {mc}");
    }

    #[test]
    fn multichain_policy_is_rejected() {
        // Two disconnected self-loops.
        let mut mdp = TabularMdp::zeros(2, 1);
        mdp.p[0][0][0] = 1.0;
        mdp.p[1][0][1] = 1.0;
        let policy = TabularPolicy::deterministic(&[0, 0], 1);
        match avg_eval_exact(&mdp, &policy) {
            Err(Error::DegenerateChain { .. }) => {}
            other => panic!("expected degenerate chain, got {other:?}"),
        }
    }

    #[test]
    fn policy_iteration_beats_brute_force_on_3x3_grid() {
        let mdp = gridworld_build(3, 3, &[8], 0.05).unwrap();
        let (pi, gain) = avg_policy_iteration(&mdp).unwrap();
        let (_, best_gain) = testkit::brute_force_optimal_gain(&mdp);
        assert!(
            (gain - best_gain).abs() <= 1e-9,
            "pi gain {gain} vs brute force {best_gain}"
        );
        pi.validate().unwrap();
    }

    #[test]
    fn constant_reward_shift_shifts_gain_only() {
        let mut rng = stream(4, &["tabular"], 0);
        let mdp = testkit::random_unichain_mdp(5, 3, &mut rng);
        let (pi_a, gain_a) = avg_policy_iteration(&mdp).unwrap();
        let mut shifted = mdp.clone();
        for s in 0..5 {
            for a in 0..3 {
                shifted.r[s][a] += 2.5;
            }
        }
        let (pi_b, gain_b) = avg_policy_iteration(&shifted).unwrap();
        assert_eq!(pi_a.greedy_actions(), pi_b.greedy_actions());
        assert!((gain_b - gain_a - 2.5).abs() < 1e-9);
    }

    #[test]
    fn all_zero_reward_gain_zero() {
        let mut rng = stream(5, &["tabular"], 0);
        let mut mdp = testkit::random_unichain_mdp(4, 2, &mut rng);
        for s in 0..4 {
            for a in 0..2 {
                mdp.r[s][a] = 0.0;
            }
        }
        let (_, gain) = avg_policy_iteration(&mdp).unwrap();
        assert!(gain.abs() < 1e-12);
    }

    #[test]
    fn policy_iteration_beats_100_random_policies() {
        let mut rng = stream(6, &["tabular"], 0);
        let mdp = testkit::random_unichain_mdp(7, 3, &mut rng);
        let (_, gain) = avg_policy_iteration(&mdp).unwrap();
        for _ in 0..100 {
            let actions: Vec<usize> = (0..7).map(|_| rng.random_range(0..3)).collect();
            let policy = TabularPolicy::deterministic(&actions, 3);
            let (rho, _) = avg_eval_exact(&mdp, &policy).unwrap();
            assert!(gain >= rho - 1e-9, "random policy gain {rho} > optimal {gain}");
        }
    }
}
