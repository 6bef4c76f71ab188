//! Per-episode and per-pipeline metrics, computed from traces alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::audit::lane_change_spans;
use crate::error::{Error, Result};
use crate::switcher::SwitchMode;
use crate::trace::{EventRecord, Payload, TraceRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub pipeline: String,
    pub seed: u64,
    pub success: bool,
    pub collision: Option<usize>,
    /// Ego longitudinal displacement at episode end or collision [m].
    pub travel: f64,
    pub control_steps: usize,
    pub planning_steps: usize,
    pub lane_change_decisions: usize,
    /// Lane-change decisions that went through at least one intermediate OCP
    /// and were never reverted.
    pub assisted: usize,
    /// Lane-change decisions reverted by the switcher.
    pub rejected: usize,
    /// Executed lane-change maneuvers seen by the audit.
    pub lane_changes: usize,
    pub safe_lane_changes: usize,
    pub completed_lane_changes: usize,
}

#[derive(Default)]
struct Tally {
    lane_change: bool,
    intermediate: bool,
    reverted: bool,
}

pub fn episode_metrics(records: &[TraceRecord]) -> Result<EpisodeMetrics> {
    let header = records
        .iter()
        .find_map(|r| match &r.payload {
            Payload::Event(EventRecord::EpisodeStart(h)) => Some(h),
            _ => None,
        })
        .ok_or_else(|| Error::MalformedTrace("no episode_start record".into()))?;
    let mut m = EpisodeMetrics {
        pipeline: header.pipeline.clone(),
        seed: header.seed,
        success: true,
        collision: None,
        travel: 0.0,
        control_steps: 0,
        planning_steps: 0,
        lane_change_decisions: 0,
        assisted: 0,
        rejected: 0,
        lane_changes: 0,
        safe_lane_changes: 0,
        completed_lane_changes: 0,
    };
    let x0 = header.ego.x;
    let mut tally: Option<Tally> = None;
    let close = |t: Option<Tally>, m: &mut EpisodeMetrics| {
        if let Some(t) = t.filter(|t| t.lane_change) {
            if t.reverted {
                m.rejected += 1;
            } else if t.intermediate {
                m.assisted += 1;
            }
        }
    };
    let mut end_travel = None;
    for r in records {
        match &r.payload {
            Payload::Plan(p) => {
                close(tally.take(), &mut m);
                m.planning_steps += 1;
                let lc = p.command.is_lane_change();
                m.lane_change_decisions += lc as usize;
                tally = Some(Tally { lane_change: lc, ..Tally::default() });
            }
            Payload::Switch(s) => {
                if let Some(t) = &mut tally {
                    t.intermediate |= s.mode == SwitchMode::Intermediate;
                    t.reverted |= s.mode == SwitchMode::Reverted;
                }
            }
            Payload::World(w) => {
                m.control_steps += 1;
                m.travel = w.ego.x - x0;
            }
            Payload::Event(EventRecord::Collision { vehicle }) => {
                m.success = false;
                m.collision = Some(*vehicle);
            }
            Payload::Event(EventRecord::EpisodeEnd { travel, .. }) => end_travel = Some(*travel),
            _ => {}
        }
    }
    close(tally.take(), &mut m);
    if let Some(t) = end_travel {
        m.travel = t;
    }
    let spans = lane_change_spans(records)?;
    m.lane_changes = spans.len();
    m.safe_lane_changes = spans.iter().filter(|s| s.safe).count();
    m.completed_lane_changes = spans.iter().filter(|s| s.completed).count();
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineMetrics {
    pub pipeline: String,
    pub episodes: usize,
    pub successes: usize,
    pub planning_steps: usize,
    pub lane_change_decisions: usize,
    pub assisted: usize,
    pub rejected: usize,
    pub lane_changes: usize,
    pub safe_lane_changes: usize,
    pub mean_travel: f64,
    /// Per-episode travel distance, by seed.
    pub travel: Vec<(u64, f64)>,
}

impl PipelineMetrics {
    pub fn success_rate(&self) -> String {
        format!("{}/{}", self.successes, self.episodes)
    }

    /// Safe share of executed lane changes [%]; 100 when there were none.
    pub fn safe_rate(&self) -> f64 {
        if self.lane_changes == 0 {
            100.0
        } else {
            100.0 * self.safe_lane_changes as f64 / self.lane_changes as f64
        }
    }
}

/// Groups episodes by pipeline label and sums them in seed order.
pub fn aggregate(episodes: &[EpisodeMetrics]) -> Vec<PipelineMetrics> {
    let mut groups: BTreeMap<&str, Vec<&EpisodeMetrics>> = BTreeMap::new();
    for e in episodes {
        groups.entry(&e.pipeline).or_default().push(e);
    }
    groups
        .into_iter()
        .map(|(name, mut eps)| {
            eps.sort_by_key(|e| e.seed);
            let sum = |f: fn(&EpisodeMetrics) -> usize| eps.iter().map(|e| f(e)).sum::<usize>();
            let travel: Vec<(u64, f64)> = eps.iter().map(|e| (e.seed, e.travel)).collect();
            PipelineMetrics {
                pipeline: name.to_string(),
                episodes: eps.len(),
                successes: eps.iter().filter(|e| e.success).count(),
                planning_steps: sum(|e| e.planning_steps),
                lane_change_decisions: sum(|e| e.lane_change_decisions),
                assisted: sum(|e| e.assisted),
                rejected: sum(|e| e.rejected),
                lane_changes: sum(|e| e.lane_changes),
                safe_lane_changes: sum(|e| e.safe_lane_changes),
                mean_travel: travel.iter().map(|t| t.1).sum::<f64>() / eps.len() as f64,
                travel,
            }
        })
        .collect()
}
