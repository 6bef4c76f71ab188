//! Lane-change safety audit over recorded traces.

use serde::{Deserialize, Serialize};

use crate::assigner::LateralGoal;
use crate::error::{Error, Result};
use crate::trace::{EventRecord, Payload, TraceRecord, WorldRecord};

/// One executed lane change: from the step its OCP became active until the
/// ego reached the target lane center or the maneuver was dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeSpan {
    pub start_step: usize,
    pub end_step: usize,
    pub from: usize,
    pub to: usize,
    /// Ego reached the target lane center within tolerance.
    pub completed: bool,
    /// Both target-lane neighbors kept at least `d_safe_acc` at every step.
    pub safe: bool,
    /// Smallest gap to the target-lane vehicle ahead, if there ever was one.
    pub min_gap_ahead: Option<f64>,
    pub min_gap_behind: Option<f64>,
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Center gaps to the nearest vehicles ahead of and at-or-behind the ego in
/// `lane`.
fn neighbor_gaps(w: &WorldRecord, lane: usize) -> (Option<f64>, Option<f64>) {
    let x = w.ego.x;
    let mut ahead: Option<f64> = None;
    let mut behind: Option<f64> = None;
    for v in w.vehicles.iter().filter(|v| v.lane == lane) {
        let d = v.x - x;
        if d > 0.0 {
            ahead = min_opt(ahead, Some(d));
        } else {
            behind = min_opt(behind, Some(-d));
        }
    }
    (ahead, behind)
}

/// Labels every lane change in a trace as safe or unsafe.
pub fn lane_change_spans(records: &[TraceRecord]) -> Result<Vec<LaneChangeSpan>> {
    let header = records
        .iter()
        .find_map(|r| match &r.payload {
            Payload::Event(EventRecord::EpisodeStart(h)) => Some(h),
            _ => None,
        })
        .ok_or_else(|| Error::MalformedTrace("no episode_start record".into()))?;
    let d_safe = header.d_safe_acc;
    let tol = header.lane_tolerance;
    let road = header.road;

    let mut spans = Vec::new();
    let mut open: Option<LaneChangeSpan> = None;
    for r in records {
        let Payload::World(w) = &r.payload else { continue };
        let change = match w.executing {
            Some(LateralGoal::Change { from, to }) => Some((from, to)),
            _ => None,
        };
        if let Some(s) = &open {
            if change.map(|c| c.1) != Some(s.to) {
                spans.extend(open.take());
            }
        }
        let Some((from, to)) = change else { continue };
        if to >= road.lane_count {
            return Err(Error::MalformedTrace(format!("step {}: lane {to} outside the road", r.step)));
        }
        let s = open.get_or_insert(LaneChangeSpan {
            start_step: r.step,
            end_step: r.step,
            from,
            to,
            completed: false,
            safe: true,
            min_gap_ahead: None,
            min_gap_behind: None,
        });
        let (ahead, behind) = neighbor_gaps(w, to);
        s.end_step = r.step;
        s.min_gap_ahead = min_opt(s.min_gap_ahead, ahead);
        s.min_gap_behind = min_opt(s.min_gap_behind, behind);
        if ahead.is_some_and(|g| g < d_safe) || behind.is_some_and(|g| g < d_safe) {
            s.safe = false;
        }
        if (w.ego.y - road.center(to)).abs() <= tol {
            s.completed = true;
            spans.extend(open.take());
        }
    }
    spans.extend(open);
    Ok(spans)
}
