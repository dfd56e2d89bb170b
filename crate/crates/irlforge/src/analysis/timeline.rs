//! Per-step attribution timelines and feature ranking.

use super::ig::integrated_gradients;
use super::vdn::VdnModel;
use super::{feature_extract, FEATURE_NAMES};
use crate::env::{idx, Trajectory};
use crate::error::{Error, Result};

/// One timeline row: step index, gait clock, contact event, attributions in
/// canonical feature order.
#[derive(Debug, Clone)]
pub struct TimelineRow {
    pub step: usize,
    pub clock: f64,
    /// "" | "td" (touchdown) | "to" (takeoff).
    pub event: String,
    pub attributions: Vec<f64>,
}

/// Attribution per feature per step against the per-trajectory mean feature
/// vector (zero is off-manifold for heights and lengths). Overridable with
/// [`importance_timeline_with_baseline`].
pub fn importance_timeline(
    trajectory: &Trajectory,
    model: &VdnModel,
    ig_steps: usize,
) -> Result<Vec<TimelineRow>> {
    let features: Vec<Vec<f64>> = trajectory
        .transitions
        .iter()
        .map(|t| feature_extract(t).values)
        .collect();
    if features.is_empty() {
        return Err(Error::invalid("timeline needs a nonempty trajectory"));
    }
    let dim = features[0].len();
    let mut baseline = vec![0.0; dim];
    for f in &features {
        for i in 0..dim {
            baseline[i] += f[i];
        }
    }
    baseline.iter_mut().for_each(|v| *v /= features.len() as f64);
    importance_timeline_with_baseline(trajectory, model, &baseline, ig_steps)
}

pub fn importance_timeline_with_baseline(
    trajectory: &Trajectory,
    model: &VdnModel,
    baseline: &[f64],
    ig_steps: usize,
) -> Result<Vec<TimelineRow>> {
    let mut rows = Vec::with_capacity(trajectory.len());
    for (step, t) in trajectory.transitions.iter().enumerate() {
        let features = feature_extract(t);
        let rec = integrated_gradients(model, &features.values, baseline, ig_steps)?;
        let event = match (t.s.x[idx::CONTACT] as i32, t.s_next.x[idx::CONTACT] as i32) {
            (0, 1) => "td",
            (1, 0) => "to",
            _ => "",
        };
        rows.push(TimelineRow {
            step,
            clock: t.s.clock,
            event: event.to_string(),
            attributions: rec.attributions,
        });
    }
    Ok(rows)
}

/// Timeline CSV: step, clock, event, then one column per feature attribution
/// in canonical order. Header row mandatory.
pub fn timeline_to_csv(rows: &[TimelineRow]) -> String {
    let mut out = String::from("step,clock,event");
    for name in FEATURE_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{},{:?},{}", row.step, row.clock, row.event));
        for a in &row.attributions {
            out.push_str(&format!(",{a:?}"));
        }
        out.push('\n');
    }
    out
}

/// Features ordered by descending mean absolute attribution; ties break by
/// feature name.
pub fn rank_features(rows: &[TimelineRow]) -> Result<Vec<(String, f64)>> {
    if rows.is_empty() {
        return Err(Error::invalid("ranking needs a nonempty timeline"));
    }
    let dim = rows[0].attributions.len();
    let mut scores = vec![0.0; dim];
    for row in rows {
        for (i, a) in row.attributions.iter().enumerate() {
            scores[i] += a.abs();
        }
    }
    let n = rows.len() as f64;
    let mut ranked: Vec<(String, f64)> = scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let name = FEATURE_NAMES
                .get(i)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("feature_{i}"));
            (name, s / n)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::FEATURE_DIM;
    use crate::env::{ObservedState, StepInfo, Transition};

    fn synthetic_rows() -> Vec<TimelineRow> {
        (0..10)
            .map(|step| {
                let mut attributions = vec![0.0; FEATURE_DIM];
                attributions[3] = if step % 2 == 0 { 1.0 } else { -1.0 };
                attributions[5] = 0.1;
                TimelineRow {
                    step,
                    clock: step as f64 / 10.0,
                    event: String::new(),
                    attributions,
                }
            })
            .collect()
    }

    #[test]
    fn single_dominant_feature_ranks_first() {
        let ranked = rank_features(&synthetic_rows()).unwrap();
        assert_eq!(ranked[0].0, FEATURE_NAMES[3]);
        assert!((ranked[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_columns_tie_with_equal_scores() {
        let mut rows = synthetic_rows();
        for row in &mut rows {
            row.attributions[7] = row.attributions[3];
        }
        let ranked = rank_features(&rows).unwrap();
        assert!((ranked[0].1 - ranked[1].1).abs() < 1e-12);
        // Ties sort by name.
        assert!(ranked[0].0 <= ranked[1].0);
    }

    #[test]
    fn csv_row_count_and_header() {
        let rows = synthetic_rows();
        let csv = timeline_to_csv(&rows);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("step,clock,event,s_x,"));
        assert_eq!(lines.count(), rows.len());
    }

    #[test]
    fn events_mark_contact_changes() {
        let mk = |c0: f64, c1: f64, clock: f64| -> Transition {
            let mut x = vec![0.0; crate::env::STATE_DIM];
            x[idx::LEG_LEN] = 1.0;
            x[idx::CONTACT] = c0;
            let mut xn = x.clone();
            xn[idx::CONTACT] = c1;
            Transition {
                s: ObservedState {
                    x,
                    xhat: vec![0.0; crate::env::STATE_DIM],
                    clock,
                },
                a: vec![0.0, 0.0],
                s_next: ObservedState {
                    x: xn,
                    xhat: vec![0.0; crate::env::STATE_DIM],
                    clock,
                },
                done: false,
                info: StepInfo {
                    grf: 0.0,
                    tau: 0.0,
                    terrain_h: 0.0,
                    x_abs: 0.0,
                },
            }
        };
        let trajectory = Trajectory {
            transitions: vec![mk(0.0, 0.0, 0.0), mk(0.0, 1.0, 0.1), mk(1.0, 0.0, 0.2)],
            seed: 0,
            terrain_id: "flat-0".into(),
        };
        // Identity-ish monotone model over the features.
        let dataset: Vec<(super::super::FeatureVector, f64)> = (0..120)
            .map(|i| {
                let mut v = vec![0.0; FEATURE_DIM];
                v[0] = i as f64 / 120.0;
                v[14] = (i % 7) as f64;
                (super::super::FeatureVector { values: v.clone() }, v[0] + 0.1 * v[14])
            })
            .collect();
        let (model, _) = super::super::vdn_fit(&dataset, &[8], 30, 3e-3, 9).unwrap();
        let rows = importance_timeline(&trajectory, &model, 8).unwrap();
        assert_eq!(rows[0].event, "");
        assert_eq!(rows[1].event, "td");
        assert_eq!(rows[2].event, "to");
    }

    #[test]
    fn flight_steps_with_zero_force_baseline_get_zero_force_attribution() {
        // Baseline foot_force equals the flight value (0) → factor x−x0 = 0.
        let mk_flight = |clock: f64| -> Transition {
            let mut x = vec![0.0; crate::env::STATE_DIM];
            x[idx::LEG_LEN] = 1.0;
            Transition {
                s: ObservedState {
                    x: x.clone(),
                    xhat: vec![0.0; crate::env::STATE_DIM],
                    clock,
                },
                a: vec![0.0, 0.0],
                s_next: ObservedState {
                    x,
                    xhat: vec![0.0; crate::env::STATE_DIM],
                    clock,
                },
                done: false,
                info: StepInfo {
                    grf: 0.0,
                    tau: 0.0,
                    terrain_h: 0.0,
                    x_abs: 0.0,
                },
            }
        };
        let trajectory = Trajectory {
            transitions: (0..5).map(|i| mk_flight(i as f64 / 5.0)).collect(),
            seed: 0,
            terrain_id: "flat-0".into(),
        };
        let dataset: Vec<(super::super::FeatureVector, f64)> = (0..120)
            .map(|i| {
                let mut v = vec![0.0; FEATURE_DIM];
                v[14] = (i % 9) as f64;
                v[1] = i as f64 * 0.01;
                (super::super::FeatureVector { values: v.clone() }, v[14])
            })
            .collect();
        let (model, _) = super::super::vdn_fit(&dataset, &[8], 30, 3e-3, 10).unwrap();
        let force_idx = FEATURE_NAMES.iter().position(|&n| n == "foot_force").unwrap();
        let baseline = vec![0.0; FEATURE_DIM];
        let rows =
            importance_timeline_with_baseline(&trajectory, &model, &baseline, 16).unwrap();
        for row in rows {
            assert_eq!(row.attributions[force_idx], 0.0);
        }
    }
}
