//! JSONL ingestion and export for note corpora.
//!
//! Wire schema: one JSON object per line with keys `note_id`, `admission_id`,
//! `patient_id`, `timestamp` (RFC 3339), `category`, `text`.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{CorpusError, Note, Trajectory};

/// Result of ingesting a corpus: trajectories plus per-admission warnings for
/// records that were skipped rather than rejected.
#[derive(Debug)]
pub struct IngestReport {
    pub trajectories: Vec<Trajectory>,
    pub warnings: Vec<String>,
}

/// Read a notes JSONL file and group it into trajectories.
///
/// Malformed lines reject the ingest with the offending line number.
/// Admissions that cannot form a valid trajectory (for example notes dated
/// after their discharge record) are skipped with a warning.
pub fn ingest_corpus(path: &Path) -> Result<IngestReport, CorpusError> {
    let file = std::fs::File::open(path)?;
    ingest_corpus_reader(file)
}

/// [`ingest_corpus`] over any reader; trajectories come back ordered by
/// admission id.
pub fn ingest_corpus_reader<R: Read>(reader: R) -> Result<IngestReport, CorpusError> {
    let reader = BufReader::new(reader);
    let mut by_admission: BTreeMap<String, Vec<Note>> = BTreeMap::new();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let note: Note = serde_json::from_str(&line).map_err(|e| CorpusError::InvalidNote {
            line: line_no,
            reason: e.to_string(),
        })?;
        if note.text.is_empty() {
            return Err(CorpusError::InvalidNote {
                line: line_no,
                reason: format!("note {} has empty text", note.note_id),
            });
        }
        if !seen_ids.insert(note.note_id.clone()) {
            return Err(CorpusError::InvalidNote {
                line: line_no,
                reason: format!("duplicate note_id {}", note.note_id),
            });
        }
        by_admission
            .entry(note.admission_id.clone())
            .or_default()
            .push(note);
    }

    let mut trajectories = Vec::new();
    let mut warnings = Vec::new();
    for (admission_id, notes) in by_admission {
        match Trajectory::from_notes(notes) {
            Ok(t) => {
                debug_assert!(t.check_invariants().is_ok());
                trajectories.push(t);
            }
            Err(e) => warnings.push(format!("skipped admission {admission_id}: {e}")),
        }
    }

    Ok(IngestReport {
        trajectories,
        warnings,
    })
}

/// Write trajectories back out as notes JSONL, one note per line in
/// trajectory order.
pub fn export_corpus<W: Write>(
    trajectories: &[Trajectory],
    mut writer: W,
) -> Result<(), CorpusError> {
    for trajectory in trajectories {
        for note in &trajectory.notes {
            let line = serde_json::to_string(note).expect("note serializes");
            writeln!(writer, "{line}")?;
        }
    }
    Ok(())
}
