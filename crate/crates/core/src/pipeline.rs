//! End-to-end sentence disambiguation: classification, candidate
//! generation, scoring, and selection, over a manifest of frame encodings
//! or precomputed per-candidate distance matrices.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::alignment::{DistanceMatrix, EncodingMatrix, EncodingTable};
use crate::dataset::{LabeledSample, SlotLabel};
use crate::io::{read_matrix, IoError, Manifest, ManifestRecord};
use crate::lexicon::{
    classify, mask_oov, resolve_ambiguous, tokenize, AmbiguousPolicy,
    HeteronymInventory, MixedSequence, PronLexicon,
};
use crate::scoring::{
    generate_candidates, score_candidate_from_distances, score_candidates,
    select, slot_specs, DisambiguationResult, ScoreError, DEFAULT_CANDIDATE_CAP,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sentence {id}: {source}")]
    Sentence { id: String, source: ScoreError },
    #[error("sentence {id}: no distance matrix for candidate {candidate}")]
    MissingCandidate { id: String, candidate: String },
    #[error("sentence {id}: frame matrix required but record has candidates")]
    NoFrames { id: String },
    #[error("no encoding table given and record {id} has no precomputed candidates")]
    NoTable { id: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    pub ambiguous: AmbiguousPolicy,
    pub candidate_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ambiguous: AmbiguousPolicy::Mask,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }
}

/// Build the mixed grapheme/phoneme sequence for a sentence.
pub fn build_sequence(
    text: &str,
    lexicon: &PronLexicon,
    inventory: &HeteronymInventory,
    config: &PipelineConfig,
) -> MixedSequence {
    let tokens = tokenize(text);
    let seq = MixedSequence { items: classify(&tokens, lexicon, inventory) };
    resolve_ambiguous(seq, lexicon, config.ambiguous)
}

/// Disambiguate one sentence against its frame encodings.
pub fn disambiguate_with_frames(
    sentence_id: &str,
    seq: &MixedSequence,
    inventory: &HeteronymInventory,
    table: &EncodingTable,
    frame_encs: &EncodingMatrix,
    config: &PipelineConfig,
) -> Result<DisambiguationResult, ScoreError> {
    let candidates = generate_candidates(seq, inventory, config.candidate_cap)?;
    let scores = score_candidates(&candidates, frame_encs, table)?;
    let slots = slot_specs(seq, inventory);
    Ok(select(sentence_id, &slots, &candidates, &scores))
}

/// Disambiguate one sentence from precomputed per-candidate distance
/// matrices keyed by candidate id (`c000`, `c001`, ... in canonical
/// generation order).
pub fn disambiguate_with_distances(
    sentence_id: &str,
    seq: &MixedSequence,
    inventory: &HeteronymInventory,
    distances: &BTreeMap<String, DistanceMatrix>,
    config: &PipelineConfig,
) -> Result<DisambiguationResult, PipelineError> {
    let candidates = generate_candidates(seq, inventory, config.candidate_cap)
        .map_err(|source| PipelineError::Sentence { id: sentence_id.into(), source })?;
    let scores = candidates
        .iter()
        .map(|cand| {
            let dist = distances.get(&cand.candidate_id).ok_or_else(|| {
                PipelineError::MissingCandidate {
                    id: sentence_id.into(),
                    candidate: cand.candidate_id.clone(),
                }
            })?;
            score_candidate_from_distances(cand, dist)
                .map_err(|source| PipelineError::Sentence { id: sentence_id.into(), source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let slots = slot_specs(seq, inventory);
    Ok(select(sentence_id, &slots, &candidates, &scores))
}

/// Attach disambiguation outcomes to a sequence, producing an
/// emission-ready sample with OOV masking applied.
pub fn label_sample(
    record_id: &str,
    text: &str,
    seq: MixedSequence,
    result: &DisambiguationResult,
    config: &PipelineConfig,
) -> LabeledSample {
    let slots = result
        .slots
        .iter()
        .map(|s| SlotLabel {
            word: s.word.clone(),
            form_id: s.chosen_form.clone(),
            confidence: s.confidence,
        })
        .collect();
    LabeledSample {
        sentence_id: record_id.to_string(),
        text: text.to_string(),
        slots,
        sequence: mask_oov(seq, config.ambiguous),
    }
}

fn process_record(
    record: &ManifestRecord,
    base_dir: &Path,
    lexicon: &PronLexicon,
    inventory: &HeteronymInventory,
    table: Option<&EncodingTable>,
    config: &PipelineConfig,
) -> Result<(DisambiguationResult, LabeledSample), PipelineError> {
    let seq = build_sequence(&record.text, lexicon, inventory, config);
    let result = match (&record.frames, &record.candidates) {
        (Some(frames), None) => {
            let table = table.ok_or_else(|| PipelineError::NoTable {
                id: record.id.clone(),
            })?;
            let path = resolve_path(base_dir, frames);
            let frame_encs = read_matrix(&path)?.to_encoding_matrix();
            disambiguate_with_frames(&record.id, &seq, inventory, table, &frame_encs, config)
                .map_err(|source| PipelineError::Sentence { id: record.id.clone(), source })?
        }
        (None, Some(candidates)) => {
            let mut distances = BTreeMap::new();
            for (cand_id, path) in candidates {
                let raw = read_matrix(&resolve_path(base_dir, path))?;
                let data: Vec<f64> = raw.data.iter().map(|&v| f64::from(v)).collect();
                let dist = DistanceMatrix::new(raw.rows as usize, raw.cols as usize, data)
                    .map_err(|source| PipelineError::Sentence {
                        id: record.id.clone(),
                        source: source.into(),
                    })?;
                distances.insert(cand_id.clone(), dist);
            }
            disambiguate_with_distances(&record.id, &seq, inventory, &distances, config)?
        }
        _ => return Err(PipelineError::NoFrames { id: record.id.clone() }),
    };
    let sample = label_sample(&record.id, &record.text, seq, &result, config);
    Ok((result, sample))
}

fn resolve_path(base_dir: &Path, path: &Path) -> std::path::PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

/// Disambiguate every manifest record. Work fans out over `jobs` threads;
/// results come back in sentence-id order regardless of parallelism.
pub fn run_disambiguate(
    manifest: &Manifest,
    base_dir: &Path,
    lexicon: &PronLexicon,
    inventory: &HeteronymInventory,
    table: Option<&EncodingTable>,
    config: &PipelineConfig,
    jobs: usize,
) -> Result<Vec<(DisambiguationResult, LabeledSample)>, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let mut results: Vec<(DisambiguationResult, LabeledSample)> = pool.install(|| {
        manifest
            .records
            .par_iter()
            .map(|record| {
                process_record(record, base_dir, lexicon, inventory, table, config)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    results.sort_by(|a, b| a.0.sentence_id.cmp(&b.0.sentence_id));
    Ok(results)
}
