//! Admission trajectories: ingestion, validation, and synthesis.
//!
//! A [`Trajectory`] is the chronologically ordered sequence of all narrative
//! [`Note`]s for one hospital admission, together with the discharge time
//! that closes the record. Notes are sorted by timestamp with ties broken by
//! `note_id`, so every downstream split is reproducible.

mod ingest;
pub mod synth;

pub use ingest::{export_corpus, ingest_corpus, ingest_corpus_reader, IngestReport};
pub use synth::{
    generate_synthetic_cohort, EventKind, GeneratorConfig, LatentEventTrack, SyntheticCohort,
};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    InvalidNote { line: usize, reason: String },
    #[error("admission {admission_id}: {reason}")]
    InvalidTrajectory {
        admission_id: String,
        reason: String,
    },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Narrative record category, mirroring the note types found in critical-care
/// documentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoteCategory {
    Nursing,
    Physician,
    Radiology,
    Consult,
    Discharge,
    Other,
}

/// One timestamped narrative record within an admission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub note_id: String,
    pub admission_id: String,
    pub patient_id: String,
    /// UTC, second resolution.
    pub timestamp: DateTime<Utc>,
    pub category: NoteCategory,
    pub text: String,
}

/// Chronologically ordered notes for one admission.
///
/// Invariants, enforced on every construction path:
/// - notes sorted non-decreasing by timestamp, ties broken by `note_id`;
/// - every note timestamp ≤ `discharge_time`;
/// - all notes share `admission_id` and `patient_id`;
/// - at least one note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub admission_id: String,
    pub patient_id: String,
    pub notes: Vec<Note>,
    pub discharge_time: DateTime<Utc>,
    /// True when an explicit discharge record supplied `discharge_time`
    /// (rather than it defaulting to the last note timestamp).
    pub discharge_recorded: bool,
    /// Synthetic ground truth only; false for ingested data.
    pub death_flag: bool,
}

impl Trajectory {
    /// Build a trajectory from the notes of a single admission.
    ///
    /// Sorts by `(timestamp, note_id)`. If any note has category
    /// `discharge`, the latest such note supplies the discharge time;
    /// otherwise discharge defaults to the last note timestamp and
    /// `discharge_recorded` is false.
    pub fn from_notes(mut notes: Vec<Note>) -> Result<Self, CorpusError> {
        let first = notes
            .first()
            .ok_or_else(|| CorpusError::InvalidTrajectory {
                admission_id: "<unknown>".into(),
                reason: "admission has zero notes".into(),
            })?;
        let admission_id = first.admission_id.clone();
        let patient_id = first.patient_id.clone();

        for note in &notes {
            if note.admission_id != admission_id {
                return Err(CorpusError::InvalidTrajectory {
                    admission_id,
                    reason: format!("note {} belongs to a different admission", note.note_id),
                });
            }
            if note.patient_id != patient_id {
                return Err(CorpusError::InvalidTrajectory {
                    admission_id,
                    reason: format!("note {} belongs to a different patient", note.note_id),
                });
            }
            if note.text.is_empty() {
                return Err(CorpusError::InvalidTrajectory {
                    admission_id,
                    reason: format!("note {} has empty text", note.note_id),
                });
            }
        }

        notes.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.note_id.cmp(&b.note_id))
        });

        let last_ts = notes.last().unwrap().timestamp;
        let discharge_note_ts = notes
            .iter()
            .filter(|n| n.category == NoteCategory::Discharge)
            .map(|n| n.timestamp)
            .max();

        let (discharge_time, discharge_recorded) = match discharge_note_ts {
            Some(ts) if ts < last_ts => {
                return Err(CorpusError::InvalidTrajectory {
                    admission_id,
                    reason: "notes dated after the discharge record".into(),
                });
            }
            Some(ts) => (ts, true),
            None => (last_ts, false),
        };

        Ok(Trajectory {
            admission_id,
            patient_id,
            notes,
            discharge_time,
            discharge_recorded,
            death_flag: false,
        })
    }

    pub fn n_notes(&self) -> usize {
        self.notes.len()
    }

    pub fn admit_time(&self) -> DateTime<Utc> {
        self.notes[0].timestamp
    }

    /// Debug-checkable statement of the structural invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.notes.is_empty() {
            return Err("empty trajectory".into());
        }
        for pair in self.notes.windows(2) {
            if pair[0].timestamp > pair[1].timestamp {
                return Err("notes out of timestamp order".into());
            }
            if pair[0].timestamp == pair[1].timestamp && pair[0].note_id >= pair[1].note_id {
                return Err("timestamp tie not broken by ascending note_id".into());
            }
        }
        for note in &self.notes {
            if note.timestamp > self.discharge_time {
                return Err(format!("note {} dated after discharge", note.note_id));
            }
            if note.admission_id != self.admission_id || note.patient_id != self.patient_id {
                return Err(format!("note {} has mismatched identity", note.note_id));
            }
        }
        Ok(())
    }
}

/// Keep trajectories with at least `min_notes` timestamped notes and a
/// recorded discharge time. Filtering is total: no errors, no warnings.
pub fn filter_eligible(trajectories: Vec<Trajectory>, min_notes: usize) -> Vec<Trajectory> {
    trajectories
        .into_iter()
        .filter(|t| t.n_notes() >= min_notes && t.discharge_recorded)
        .collect()
}
