//! Tabular MDP with explicit transition and reward arrays, plus the slippery
//! gridworld used as the oracle environment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Explicit finite MDP: `p[s][a][s']` transition probabilities and `r[s][a]`
/// rewards.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub p: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
}

impl TabularMdp {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        TabularMdp {
            n_states,
            n_actions,
            p: vec![vec![vec![0.0; n_states]; n_actions]; n_states],
            r: vec![vec![0.0; n_actions]; n_states],
        }
    }

    /// Every `p[s][a]` row must sum to 1 within `tol` with nonnegative entries.
    pub fn check_stochastic(&self, tol: f64) -> Result<()> {
        for (s, per_action) in self.p.iter().enumerate() {
            for (a, row) in per_action.iter().enumerate() {
                if row.iter().any(|&q| q < 0.0) {
                    return Err(Error::invalid(format!(
                        "negative transition probability at state {s} action {a}"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > tol {
                    return Err(Error::invalid(format!(
                        "transition row for state {s} action {a} sums to {sum}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// 4-action gridworld (up, right, down, left), row-major cell indexing.
///
/// Moves succeed with probability `1 − slip`; the remaining mass splits
/// evenly between the two lateral directions. Bumping a wall stays put. Goal
/// cells pay +1 and teleport uniformly over all cells (the task is
/// continuing, as the average-reward criterion requires, and the scatter
/// keeps every state visited); all other steps cost `step_cost`.
pub fn gridworld_build(
    width: usize,
    height: usize,
    goal_cells: &[usize],
    step_cost: f64,
) -> Result<TabularMdp> {
    gridworld_build_with(width, height, goal_cells, step_cost, 0.1)
}

/// [`gridworld_build`] with an explicit slip probability.
pub fn gridworld_build_with(
    width: usize,
    height: usize,
    goal_cells: &[usize],
    step_cost: f64,
    slip: f64,
) -> Result<TabularMdp> {
    if width < 2 || height < 2 {
        return Err(Error::invalid(format!(
            "grid dimensions must be at least 2×2, got {width}×{height}"
        )));
    }
    let n = width * height;
    if let Some(&g) = goal_cells.iter().find(|&&g| g >= n) {
        return Err(Error::invalid(format!(
            "goal cell {g} outside the {width}×{height} grid ({n} cells)"
        )));
    }
    if !(0.0..1.0).contains(&slip) {
        return Err(Error::invalid(format!("slip must be in [0,1), got {slip}")));
    }

    // Displacements per action; lateral slips are the two perpendicular moves.
    const MOVES: [(isize, isize); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];
    let neighbor = |cell: usize, m: (isize, isize)| -> usize {
        let (cx, cy) = ((cell % width) as isize, (cell / width) as isize);
        let (nx, ny) = (cx + m.0, cy + m.1);
        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
            cell
        } else {
            (ny as usize) * width + nx as usize
        }
    };

    let mut mdp = TabularMdp::zeros(n, 4);
    for s in 0..n {
        let is_goal = goal_cells.contains(&s);
        for a in 0..4 {
            if is_goal {
                for s2 in 0..n {
                    mdp.p[s][a][s2] = 1.0 / n as f64;
                }
                mdp.r[s][a] = 1.0;
                continue;
            }
            mdp.r[s][a] = -step_cost;
            let lateral = [(a + 1) % 4, (a + 3) % 4];
            mdp.p[s][a][neighbor(s, MOVES[a])] += 1.0 - slip;
            for la in lateral {
                mdp.p[s][a][neighbor(s, MOVES[la])] += slip / 2.0;
            }
        }
    }
    mdp.check_stochastic(1e-12)?;
    Ok(mdp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sum_to_one() {
        let mdp = gridworld_build(5, 5, &[24], 0.01).unwrap();
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let sum: f64 = mdp.p[s][a].iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn two_by_two_has_four_states_four_actions() {
        let mdp = gridworld_build(2, 2, &[3], 0.0).unwrap();
        assert_eq!(mdp.n_states, 4);
        assert_eq!(mdp.n_actions, 4);
    }

    #[test]
    fn zero_slip_is_deterministic() {
        let mdp = gridworld_build_with(3, 3, &[8], 0.01, 0.0).unwrap();
        for s in 0..mdp.n_states {
            if s == 8 {
                continue; // goal rows scatter uniformly by construction
            }
            for a in 0..mdp.n_actions {
                let ones = mdp.p[s][a].iter().filter(|&&q| q == 1.0).count();
                let zeros = mdp.p[s][a].iter().filter(|&&q| q == 0.0).count();
                assert_eq!(ones, 1);
                assert_eq!(zeros, mdp.n_states - 1);
            }
        }
    }

    #[test]
    fn goal_outside_grid_is_rejected() {
        assert!(gridworld_build(3, 3, &[9], 0.01).is_err());
    }

    #[test]
    fn tiny_dimensions_are_rejected() {
        assert!(gridworld_build(1, 5, &[0], 0.01).is_err());
    }
}
