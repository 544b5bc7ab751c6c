//! Split-time sampling.
//!
//! Candidate positions are the gaps between consecutive distinct note
//! timestamps that leave at least `min_context_notes` notes before the split
//! and `min_future_notes` after it. One gap is chosen uniformly per
//! `(trajectory, seed, split_index)`, and the split time is the midpoint of
//! that gap at second resolution, so it never coincides with the later
//! note's timestamp.

use chrono::Duration;
use rand::RngExt;

use crate::corpus::Trajectory;
use crate::rng::derive_rng;

use super::{ForgeError, SplitPoint};

#[derive(Debug, Clone)]
pub struct SplitOptions {
    pub min_context_notes: usize,
    pub min_future_notes: usize,
    /// Which of several splits per trajectory this is; 0 unless the multi-
    /// split mode is enabled.
    pub split_index: usize,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            min_context_notes: 3,
            min_future_notes: 1,
            split_index: 0,
        }
    }
}

/// Sample a split point; deterministic per `(trajectory, seed, split_index)`.
pub fn sample_split(
    trajectory: &Trajectory,
    seed: u64,
    opts: &SplitOptions,
) -> Result<SplitPoint, ForgeError> {
    if opts.min_context_notes < 1 || opts.min_future_notes < 1 {
        return Err(ForgeError::InvalidOptions(
            "min_context_notes and min_future_notes must be >= 1".into(),
        ));
    }
    let n = trajectory.n_notes();
    let timestamps: Vec<_> = trajectory.notes.iter().map(|n| n.timestamp).collect();

    // k = number of context notes; the split falls in (ts[k-1], ts[k]).
    let candidates: Vec<usize> = (opts.min_context_notes..=n.saturating_sub(opts.min_future_notes))
        .filter(|&k| k >= 1 && k < n && timestamps[k - 1] < timestamps[k])
        .collect();

    if candidates.is_empty() {
        return Err(ForgeError::NoValidSplit {
            admission_id: trajectory.admission_id.clone(),
            reason: format!(
                "{n} notes leave no gap with >= {} before and >= {} after",
                opts.min_context_notes, opts.min_future_notes
            ),
        });
    }

    let mut rng = derive_rng(
        seed,
        &[
            "split",
            &trajectory.admission_id,
            &opts.split_index.to_string(),
        ],
    );
    let k = candidates[rng.random_range(0..candidates.len())];

    let gap_seconds = (timestamps[k] - timestamps[k - 1]).num_seconds();
    let split_time = timestamps[k - 1] + Duration::seconds(gap_seconds / 2);
    debug_assert!(split_time < timestamps[k]);
    debug_assert!(split_time < trajectory.discharge_time);

    let context_note_ids = trajectory.notes[..k]
        .iter()
        .map(|n| n.note_id.clone())
        .collect();
    let future_note_ids = trajectory.notes[k..]
        .iter()
        .map(|n| n.note_id.clone())
        .collect();

    Ok(SplitPoint {
        admission_id: trajectory.admission_id.clone(),
        split_time,
        context_note_ids,
        future_note_ids,
    })
}
