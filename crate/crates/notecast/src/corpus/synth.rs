//! Deterministic synthetic cohort generator.
//!
//! Real critical-care text cannot ship with the repo, so the generator
//! produces template-based English admissions with a known latent event
//! schedule. The construction makes labels exactly checkable:
//!
//! - each scheduled event has exactly one *confirming note*, and the event's
//!   `occurrence_time` equals that note's timestamp, so "confirmation phrase
//!   appears in post-split notes" and "event occurs after the split" are the
//!   same condition for every split that falls strictly between notes;
//! - precursor phrases are injected only into notes strictly before the
//!   confirming note, scaled by the track's `precursor_strength`;
//! - later notes may carry follow-up wording from a separate bank that the
//!   resolver never matches, so documentation of a past event cannot flip a
//!   label.
//!
//! All randomness is drawn from streams derived from the integer seed; for a
//! fixed seed the output is byte-identical across runs and platforms.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::RngExt;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Note, NoteCategory, Trajectory};
use crate::forge::QuestionCategory;
use crate::rng::derive_rng;

/// Future clinical events the synthetic cohort can schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    VasopressorStart,
    Transfusion,
    Dialysis,
    Intubation,
    PositiveCulture,
    InHospitalDeath,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::VasopressorStart,
        EventKind::Transfusion,
        EventKind::Dialysis,
        EventKind::Intubation,
        EventKind::PositiveCulture,
        EventKind::InHospitalDeath,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::VasopressorStart => "vasopressor_start",
            EventKind::Transfusion => "transfusion",
            EventKind::Dialysis => "dialysis",
            EventKind::Intubation => "intubation",
            EventKind::PositiveCulture => "positive_culture",
            EventKind::InHospitalDeath => "in_hospital_death",
        }
    }

    /// Fixed question phrasing for this event.
    pub fn question(&self) -> &'static str {
        match self {
            EventKind::VasopressorStart => {
                "Will the patient be started on intravenous vasopressors during this admission?"
            }
            EventKind::Transfusion => {
                "Will the patient receive a blood transfusion of packed red blood cells during this admission?"
            }
            EventKind::Dialysis => {
                "Will the patient receive renal replacement therapy (dialysis) during this admission?"
            }
            EventKind::Intubation => {
                "Will the patient require endotracheal intubation for mechanical ventilation during this admission?"
            }
            EventKind::PositiveCulture => {
                "Will the patient's sputum culture return positive for a pathogenic bacterial or fungal organism during this admission?"
            }
            EventKind::InHospitalDeath => {
                "Will the patient be declared dead during this hospital admission?"
            }
        }
    }

    pub fn category(&self) -> QuestionCategory {
        match self {
            EventKind::VasopressorStart => QuestionCategory::Medication,
            EventKind::Transfusion => QuestionCategory::Procedure,
            EventKind::Dialysis | EventKind::Intubation => QuestionCategory::OrganSupport,
            EventKind::PositiveCulture => QuestionCategory::Microbiology,
            EventKind::InHospitalDeath => QuestionCategory::Mortality,
        }
    }

    /// The single phrase whose presence in a note documents the event
    /// happening at that note's timestamp. Appears in exactly one note per
    /// scheduled event.
    pub fn confirmation_phrase(&self) -> &'static str {
        match self {
            EventKind::VasopressorStart => {
                "A continuous norepinephrine infusion was initiated for hemodynamic support."
            }
            EventKind::Transfusion => {
                "One unit of packed red blood cells was transfused at bedside."
            }
            EventKind::Dialysis => {
                "Continuous renal replacement therapy was initiated via a temporary dialysis catheter."
            }
            EventKind::Intubation => {
                "The patient was intubated and placed on invasive mechanical ventilation."
            }
            EventKind::PositiveCulture => {
                "Sputum culture has returned positive for a pathogenic organism."
            }
            EventKind::InHospitalDeath => {
                "The patient was pronounced dead after resuscitative efforts were discontinued."
            }
        }
    }

    /// Early-warning phrases injected strictly before the confirming note.
    pub fn precursor_bank(&self) -> &'static [&'static str] {
        match self {
            EventKind::VasopressorStart => &[
                "Blood pressure remains marginal despite repeated fluid boluses.",
                "Mean arterial pressure has been trending down over the shift.",
                "Persistent hypotension noted on repeat vital sign checks.",
            ],
            EventKind::Transfusion => &[
                "Hemoglobin continues to drift downward on serial checks.",
                "Guaiac-positive stools raise concern for ongoing blood loss.",
                "Hematocrit is low this morning and a type and screen was updated.",
            ],
            EventKind::Dialysis => &[
                "Urine output remains poor despite escalating diuretics.",
                "Creatinine is rising on consecutive morning labs.",
                "Worsening metabolic acidosis with signs of volume overload.",
            ],
            EventKind::Intubation => &[
                "Increasing work of breathing with accessory muscle use.",
                "Oxygen requirements are escalating despite high-flow support.",
                "Persistent hypoxemia despite supplemental oxygen.",
            ],
            EventKind::PositiveCulture => &[
                "Febrile overnight with increasing respiratory secretions.",
                "White blood cell count is climbing and cultures were drawn.",
                "A new infiltrate is suspected on bedside imaging.",
            ],
            EventKind::InHospitalDeath => &[
                "Goals of care discussion held with the family at bedside.",
                "Clinical status continues to decline despite maximal therapy.",
                "Progressive multiorgan dysfunction documented overnight.",
            ],
        }
    }

    /// Status wording used in notes after the confirming note. Never matched
    /// by the rule resolver.
    fn followup_phrase(&self) -> Option<&'static str> {
        match self {
            EventKind::VasopressorStart => {
                Some("Vasopressor requirements stable on current infusion rates.")
            }
            EventKind::Transfusion => {
                Some("Post-transfusion counts reviewed; no further products given this shift.")
            }
            EventKind::Dialysis => {
                Some("Tolerating renal replacement therapy; electrolytes improving.")
            }
            EventKind::Intubation => Some("Remains on ventilator support with stable settings."),
            EventKind::PositiveCulture => {
                Some("Antibiotics narrowed based on culture susceptibilities.")
            }
            EventKind::InHospitalDeath => None,
        }
    }
}

const FILLER_SENTENCES: [&str; 12] = [
    "Patient resting comfortably between assessments.",
    "Vital signs reviewed and documented per protocol.",
    "Plan of care discussed on interdisciplinary rounds.",
    "Family at bedside and questions answered.",
    "Telemetry monitored without acute findings overnight.",
    "Skin intact; repositioning performed per schedule.",
    "Pain controlled with the current regimen.",
    "Diet advanced as tolerated.",
    "Physical therapy evaluation in progress.",
    "Medication list reconciled with the admission record.",
    "Morning labs pending at the time of this note.",
    "No acute distress observed at this time.",
];

fn category_opener(category: NoteCategory) -> &'static str {
    match category {
        NoteCategory::Nursing => "Nursing assessment:",
        NoteCategory::Physician => "Progress note:",
        NoteCategory::Radiology => "Imaging review:",
        NoteCategory::Consult => "Consult note:",
        NoteCategory::Discharge => "Discharge summary:",
        NoteCategory::Other => "Note:",
    }
}

/// Ground truth for one (admission, event kind) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentEventTrack {
    pub admission_id: String,
    pub event_kind: EventKind,
    /// Present iff the event is scheduled; always within
    /// [admission start, discharge_time].
    pub occurrence_time: Option<DateTime<Utc>>,
    pub precursor_strength: f64,
}

/// Generator parameters. Defaults target a ≈25% positive rate across the
/// questions produced by one split per trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Inclusive range of notes per admission.
    pub notes_range: (usize, usize),
    /// Per-kind probability that the event is scheduled for an admission.
    pub event_probabilities: BTreeMap<EventKind, f64>,
    /// Inclusive range the per-track precursor strength is drawn from.
    pub precursor_strength_range: (f64, f64),
    /// Probability that an unscheduled track still plants one of its
    /// precursor phrases (keeps precursors informative but not definitive).
    pub distractor_precursor_rate: f64,
    /// Probability an admission belongs to a previously seen patient.
    pub readmission_rate: f64,
    /// Inclusive range, in seconds, of the gap between consecutive notes.
    pub note_gap_seconds: (i64, i64),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let mut event_probabilities = BTreeMap::new();
        event_probabilities.insert(EventKind::VasopressorStart, 0.60);
        event_probabilities.insert(EventKind::Transfusion, 0.55);
        event_probabilities.insert(EventKind::Dialysis, 0.40);
        event_probabilities.insert(EventKind::Intubation, 0.55);
        event_probabilities.insert(EventKind::PositiveCulture, 0.60);
        event_probabilities.insert(EventKind::InHospitalDeath, 0.20);
        GeneratorConfig {
            notes_range: (9, 30),
            event_probabilities,
            precursor_strength_range: (0.6, 1.0),
            distractor_precursor_rate: 0.15,
            readmission_rate: 0.15,
            note_gap_seconds: (1_800, 28_800),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let (lo, hi) = self.notes_range;
        if lo < 5 || lo > hi {
            return Err(CorpusError::InvalidConfig(format!(
                "notes_range must satisfy 5 <= lo <= hi, got ({lo}, {hi})"
            )));
        }
        for (kind, p) in &self.event_probabilities {
            if !(0.0..=1.0).contains(p) {
                return Err(CorpusError::InvalidConfig(format!(
                    "event probability for {} out of [0,1]: {p}",
                    kind.as_str()
                )));
            }
        }
        let (slo, shi) = self.precursor_strength_range;
        if !(0.0..=1.0).contains(&slo) || !(0.0..=1.0).contains(&shi) || slo > shi {
            return Err(CorpusError::InvalidConfig(format!(
                "precursor_strength_range out of order or out of [0,1]: ({slo}, {shi})"
            )));
        }
        if !(0.0..=1.0).contains(&self.distractor_precursor_rate) {
            return Err(CorpusError::InvalidConfig(
                "distractor_precursor_rate out of [0,1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.readmission_rate) {
            return Err(CorpusError::InvalidConfig(
                "readmission_rate out of [0,1]".into(),
            ));
        }
        let (glo, ghi) = self.note_gap_seconds;
        if glo < 1 || glo > ghi {
            return Err(CorpusError::InvalidConfig(format!(
                "note_gap_seconds must satisfy 1 <= lo <= hi, got ({glo}, {ghi})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub trajectories: Vec<Trajectory>,
    /// admission_id -> one track per event kind.
    pub tracks: BTreeMap<String, Vec<LatentEventTrack>>,
}

fn uniform_in(rng: &mut ChaCha12Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        range.0 + rng.random::<f64>() * (range.1 - range.0)
    }
}

/// Generate `n_admissions` synthetic trajectories plus their latent tracks.
pub fn generate_synthetic_cohort(
    seed: u64,
    n_admissions: usize,
    config: &GeneratorConfig,
) -> Result<SyntheticCohort, CorpusError> {
    if n_admissions == 0 {
        return Err(CorpusError::InvalidConfig(
            "n_admissions must be >= 1".into(),
        ));
    }
    config.validate()?;

    let base = Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap();
    let mut patients: Vec<String> = Vec::new();
    let mut trajectories = Vec::with_capacity(n_admissions);
    let mut tracks: BTreeMap<String, Vec<LatentEventTrack>> = BTreeMap::new();

    for adm_index in 0..n_admissions {
        let mut rng = derive_rng(seed, &["synth", &adm_index.to_string()]);
        let admission_id = format!("adm-{adm_index:05}");

        let patient_id = if !patients.is_empty() && rng.random::<f64>() < config.readmission_rate {
            patients[rng.random_range(0..patients.len())].clone()
        } else {
            let id = format!("pat-{:05}", patients.len());
            patients.push(id.clone());
            id
        };

        let n_notes = rng.random_range(config.notes_range.0..=config.notes_range.1);

        // Note timestamps: strictly increasing, second resolution.
        let admit = base + Duration::hours(adm_index as i64 * 36);
        let mut timestamps = Vec::with_capacity(n_notes);
        let mut t = admit;
        for _ in 0..n_notes {
            timestamps.push(t);
            let gap = rng.random_range(config.note_gap_seconds.0..=config.note_gap_seconds.1);
            t += Duration::seconds(gap);
        }

        // Event schedule. The confirming note index for death is the final
        // (discharge) note; other kinds confirm strictly before it.
        let mut admission_tracks = Vec::with_capacity(EventKind::ALL.len());
        // injections[note_idx] collects extra sentences for that note.
        let mut injections: Vec<Vec<&'static str>> = vec![Vec::new(); n_notes];
        let mut death_flag = false;

        for kind in EventKind::ALL {
            let p = *config.event_probabilities.get(&kind).unwrap_or(&0.0);
            let scheduled = rng.random::<f64>() < p;
            if !scheduled {
                if rng.random::<f64>() < config.distractor_precursor_rate {
                    let bank = kind.precursor_bank();
                    let idx = rng.random_range(1..=n_notes - 3);
                    let phrase = bank[rng.random_range(0..bank.len())];
                    injections[idx].push(phrase);
                }
                admission_tracks.push(LatentEventTrack {
                    admission_id: admission_id.clone(),
                    event_kind: kind,
                    occurrence_time: None,
                    precursor_strength: 0.0,
                });
                continue;
            }

            let conf_idx = if kind == EventKind::InHospitalDeath {
                death_flag = true;
                n_notes - 1
            } else {
                rng.random_range(2..=n_notes - 2)
            };
            let strength = uniform_in(&mut rng, config.precursor_strength_range);

            injections[conf_idx].push(kind.confirmation_phrase());

            // Precursors in a window of up to 5 notes before the confirming
            // note, each injected with probability scaled by strength.
            let bank = kind.precursor_bank();
            let window_start = conf_idx.saturating_sub(5);
            let mut bank_cursor = rng.random_range(0..bank.len());
            for injection in injections[window_start..conf_idx].iter_mut() {
                if rng.random::<f64>() < strength * 0.7 {
                    injection.push(bank[bank_cursor % bank.len()]);
                    bank_cursor += 1;
                }
            }

            // Follow-up status wording after the event; never confirmation.
            if let Some(followup) = kind.followup_phrase() {
                let end = (conf_idx + 3).min(n_notes);
                for injection in injections[conf_idx + 1..end].iter_mut() {
                    if rng.random::<f64>() < 0.5 {
                        injection.push(followup);
                    }
                }
            }

            admission_tracks.push(LatentEventTrack {
                admission_id: admission_id.clone(),
                event_kind: kind,
                occurrence_time: Some(timestamps[conf_idx]),
                precursor_strength: strength,
            });
        }

        // Assemble notes.
        let mut notes = Vec::with_capacity(n_notes);
        for (idx, ts) in timestamps.iter().enumerate() {
            let category = if idx == n_notes - 1 {
                NoteCategory::Discharge
            } else {
                match rng.random_range(0..10u32) {
                    0..=4 => NoteCategory::Nursing,
                    5..=7 => NoteCategory::Physician,
                    8 => NoteCategory::Radiology,
                    _ => NoteCategory::Consult,
                }
            };
            let mut sentences = vec![category_opener(category).to_string()];
            let n_filler = rng.random_range(2..=4usize);
            for _ in 0..n_filler {
                sentences.push(
                    FILLER_SENTENCES[rng.random_range(0..FILLER_SENTENCES.len())].to_string(),
                );
            }
            for phrase in &injections[idx] {
                sentences.push((*phrase).to_string());
            }
            notes.push(Note {
                note_id: format!("{admission_id}-n{idx:03}"),
                admission_id: admission_id.clone(),
                patient_id: patient_id.clone(),
                timestamp: *ts,
                category,
                text: sentences.join(" "),
            });
        }

        let mut trajectory = Trajectory::from_notes(notes).map_err(|e| {
            CorpusError::InvalidConfig(format!("generator produced invalid trajectory: {e}"))
        })?;
        trajectory.death_flag = death_flag;
        debug_assert!(trajectory.check_invariants().is_ok());
        debug_assert!(trajectory.discharge_recorded);

        tracks.insert(admission_id, admission_tracks);
        trajectories.push(trajectory);
    }

    Ok(SyntheticCohort {
        trajectories,
        tracks,
    })
}

/// Serialize latent tracks as ground-truth JSONL
/// (`admission_id`, `event_kind`, `occurrence_time` nullable,
/// `precursor_strength`).
pub fn write_ground_truth<W: std::io::Write>(
    tracks: &BTreeMap<String, Vec<LatentEventTrack>>,
    mut writer: W,
) -> Result<(), CorpusError> {
    for admission_tracks in tracks.values() {
        for track in admission_tracks {
            let line = serde_json::to_string(track).expect("track serializes");
            writeln!(writer, "{line}")?;
        }
    }
    Ok(())
}

/// Read ground-truth JSONL back into the per-admission map.
pub fn read_ground_truth<R: std::io::Read>(
    reader: R,
) -> Result<BTreeMap<String, Vec<LatentEventTrack>>, CorpusError> {
    let reader = std::io::BufReader::new(reader);
    let mut tracks: BTreeMap<String, Vec<LatentEventTrack>> = BTreeMap::new();
    for (idx, line) in std::io::BufRead::lines(reader).enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let track: LatentEventTrack =
            serde_json::from_str(&line).map_err(|e| CorpusError::InvalidNote {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        tracks
            .entry(track.admission_id.clone())
            .or_default()
            .push(track);
    }
    Ok(tracks)
}
