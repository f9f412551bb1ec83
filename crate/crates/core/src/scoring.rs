//! Candidate generation over heteronym form combinations, per-word average
//! alignment distance, minimum-score form selection, and the confidence
//! score used for threshold filtering.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{
    compute_distance_matrix, viterbi_align, AlignError, DistanceMatrix,
    EncodingMatrix, EncodingTable, HardAlignment,
};
use crate::lexicon::{HeteronymInventory, MixedSequence, Pronunciation, TokenKind};

pub const DEFAULT_CANDIDATE_CAP: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("sentence contains no heteronym slot")]
    NoHeteronym,
    #[error("{count} candidates exceed the cap of {cap}")]
    TooManyCandidates { count: usize, cap: usize },
    #[error("no encoding for symbol {0:?}")]
    MissingSymbol(String),
    #[error("empty token span")]
    EmptySpan,
    #[error(transparent)]
    Align(#[from] AlignError),
}

/// One heteronym slot of a sentence: the word and its forms in canonical
/// (inventory file) order.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSpec {
    pub word: String,
    pub forms: Vec<(String, Pronunciation)>,
}

/// Heteronym slots of a mixed sequence, left to right, each with the
/// inventory's canonical form order.
pub fn slot_specs(seq: &MixedSequence, inventory: &HeteronymInventory) -> Vec<SlotSpec> {
    seq.heteronym_slots()
        .map(|(_, word)| {
            let forms = inventory
                .get(word)
                .map(|forms| {
                    forms
                        .iter()
                        .map(|(id, pron)| (id.clone(), pron.clone()))
                        .collect()
                })
                .unwrap_or_default();
            SlotSpec { word: word.to_string(), forms }
        })
        .collect()
}

/// One fully substituted sentence variant: a flat alignment-token sequence
/// with phoneme symbols for substituted words and grapheme tokens elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub candidate_id: String,
    pub tokens: Vec<String>,
    /// Half-open token range each heteronym slot occupies.
    pub slot_spans: Vec<(usize, usize)>,
    /// Chosen form id per slot, parallel to `slot_spans`.
    pub slot_forms: Vec<String>,
}

enum Segment {
    Fixed(Vec<String>),
    Slot(usize),
}

fn grapheme_tokens(surface: &str) -> Vec<String> {
    surface.to_lowercase().chars().map(|c| c.to_string()).collect()
}

/// Cross product of all heteronym form combinations, one candidate per
/// combination. Candidates are emitted in canonical order with the
/// rightmost slot varying fastest; ids are `c000`, `c001`, ...
pub fn generate_candidates(
    seq: &MixedSequence,
    inventory: &HeteronymInventory,
    cap: usize,
) -> Result<Vec<Candidate>, ScoreError> {
    let slots = slot_specs(seq, inventory);
    if slots.is_empty() {
        return Err(ScoreError::NoHeteronym);
    }
    let count: usize = slots.iter().map(|s| s.forms.len()).product();
    if count > cap {
        return Err(ScoreError::TooManyCandidates { count, cap });
    }

    let mut segments = Vec::new();
    let mut slot_no = 0usize;
    for item in &seq.items {
        match &item.kind {
            TokenKind::KnownUnambiguous(pron) => segments.push(Segment::Fixed(
                pron.phonemes().iter().map(|p| p.as_str().to_string()).collect(),
            )),
            TokenKind::HeteronymSlot(_) => {
                segments.push(Segment::Slot(slot_no));
                slot_no += 1;
            }
            TokenKind::AmbiguousNonHeteronym | TokenKind::Oov | TokenKind::Masked => {
                segments.push(Segment::Fixed(grapheme_tokens(&item.surface)));
            }
            TokenKind::Punctuation => {
                segments.push(Segment::Fixed(vec![item.surface.clone()]));
            }
        }
    }

    let mut candidates = Vec::with_capacity(count);
    let mut combo = vec![0usize; slots.len()];
    for cand_no in 0..count {
        let mut tokens = Vec::new();
        let mut spans = Vec::with_capacity(slots.len());
        let mut forms = Vec::with_capacity(slots.len());
        for segment in &segments {
            match segment {
                Segment::Fixed(toks) => tokens.extend(toks.iter().cloned()),
                Segment::Slot(s) => {
                    let (form_id, pron) = &slots[*s].forms[combo[*s]];
                    let start = tokens.len();
                    tokens.extend(
                        pron.phonemes().iter().map(|p| p.as_str().to_string()),
                    );
                    spans.push((start, tokens.len()));
                    forms.push(form_id.clone());
                }
            }
        }
        candidates.push(Candidate {
            candidate_id: format!("c{cand_no:03}"),
            tokens,
            slot_spans: spans,
            slot_forms: forms,
        });
        // odometer: rightmost slot varies fastest
        for s in (0..slots.len()).rev() {
            combo[s] += 1;
            if combo[s] < slots[s].forms.len() {
                break;
            }
            combo[s] = 0;
        }
    }
    Ok(candidates)
}

/// Average L2 distance between a token span and its aligned frames: the sum
/// of distances over all (token, aligned frame) pairs in the span divided by
/// the number of frames assigned to the span.
pub fn word_avg_distance(
    dist: &DistanceMatrix,
    align: &HardAlignment,
    span: (usize, usize),
) -> Result<f64, ScoreError> {
    let (start, end) = span;
    if start >= end || end > dist.n_tokens() {
        return Err(ScoreError::EmptySpan);
    }
    let mut sum = 0.0;
    let mut frames = 0usize;
    for (j, &i) in align.assignment().iter().enumerate() {
        if i >= start && i < end {
            sum += dist.get(i, j);
            frames += 1;
        }
    }
    debug_assert!(frames > 0, "valid alignments assign every token a frame");
    Ok(sum / frames as f64)
}

/// Per-candidate scores: one average distance per heteronym slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate_id: String,
    pub slot_d_avg: Vec<f64>,
    pub total: f64,
}

/// Score a candidate against a precomputed distance matrix.
pub fn score_candidate_from_distances(
    candidate: &Candidate,
    dist: &DistanceMatrix,
) -> Result<CandidateScore, ScoreError> {
    let align = viterbi_align(dist)?;
    let slot_d_avg = candidate
        .slot_spans
        .iter()
        .map(|&span| word_avg_distance(dist, &align, span))
        .collect::<Result<Vec<_>, _>>()?;
    let total = slot_d_avg.iter().sum();
    Ok(CandidateScore {
        candidate_id: candidate.candidate_id.clone(),
        slot_d_avg,
        total,
    })
}

fn token_encodings(
    tokens: &[String],
    table: &EncodingTable,
) -> Result<EncodingMatrix, ScoreError> {
    let mut data = Vec::with_capacity(tokens.len() * table.dim());
    for token in tokens {
        let vec = table
            .get(token)
            .ok_or_else(|| ScoreError::MissingSymbol(token.clone()))?;
        data.extend_from_slice(vec);
    }
    Ok(EncodingMatrix::new(tokens.len(), table.dim(), data)?)
}

/// Score every candidate by building its distance matrix from the encoding
/// table and Viterbi-aligning it against the frame encodings. Output order
/// matches input order.
pub fn score_candidates(
    candidates: &[Candidate],
    frame_encs: &EncodingMatrix,
    table: &EncodingTable,
) -> Result<Vec<CandidateScore>, ScoreError> {
    candidates
        .iter()
        .map(|cand| {
            let token_encs = token_encodings(&cand.tokens, table)?;
            let dist = compute_distance_matrix(&token_encs, frame_encs)?;
            score_candidate_from_distances(cand, &dist)
        })
        .collect()
}

/// Outcome for one heteronym slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub word: String,
    pub chosen_form: String,
    /// Marginal average distance per form, canonical order.
    pub marginals: IndexMap<String, f64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationResult {
    pub sentence_id: String,
    pub slots: Vec<SlotOutcome>,
}

/// Confidence of a disambiguation: the spread between the highest and
/// lowest candidate distances divided by their midpoint. Zero when they
/// coincide. Always within [0, 2] for non-negative distances.
pub fn confidence_score(min_d: f64, max_d: f64) -> f64 {
    if max_d == min_d {
        0.0
    } else {
        (max_d - min_d) / ((max_d + min_d) / 2.0)
    }
}

/// Select the minimum-marginal form per slot.
///
/// The marginal of form f at slot s is the minimum d_avg over all candidates
/// that assign f to s. Ties go to the form earliest in canonical order with
/// confidence forced to zero.
pub fn select(
    sentence_id: &str,
    slots: &[SlotSpec],
    candidates: &[Candidate],
    scores: &[CandidateScore],
) -> DisambiguationResult {
    assert_eq!(candidates.len(), scores.len());
    let outcomes = slots
        .iter()
        .enumerate()
        .map(|(s, slot)| {
            let mut marginals: IndexMap<String, f64> = IndexMap::new();
            for (form_id, _) in &slot.forms {
                let marginal = candidates
                    .iter()
                    .zip(scores)
                    .filter(|(c, _)| &c.slot_forms[s] == form_id)
                    .map(|(_, score)| score.slot_d_avg[s])
                    .fold(f64::INFINITY, f64::min);
                if marginal.is_finite() {
                    marginals.insert(form_id.clone(), marginal);
                }
            }
            let min_d = marginals.values().copied().fold(f64::INFINITY, f64::min);
            let max_d = marginals.values().copied().fold(f64::NEG_INFINITY, f64::max);
            let tied = marginals.values().filter(|&&v| v == min_d).count() > 1;
            let chosen_form = marginals
                .iter()
                .find(|(_, &v)| v == min_d)
                .map(|(f, _)| f.clone())
                .unwrap_or_default();
            let confidence = if tied { 0.0 } else { confidence_score(min_d, max_d) };
            SlotOutcome { word: slot.word.clone(), chosen_form, marginals, confidence }
        })
        .collect();
    DisambiguationResult { sentence_id: sentence_id.to_string(), slots: outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::HardAlignment;
    use crate::lexicon::{
        classify, parse_heteronym_inventory, parse_pron_lexicon, tokenize,
        MixedSequence,
    };

    fn fixture() -> (crate::lexicon::PronLexicon, HeteronymInventory) {
        let lex = parse_pron_lexicon("I  aɪ\nWILL  w ɪ l\n").unwrap();
        let inv = parse_heteronym_inventory(
            "read\tread_present\tɹ i d\nread\tread_past\tɹ ɛ d\nbass\tbass_fish\tb æ s\nbass\tbass_music\tb eɪ s\nbass\tbass_low\tb ɑ s\n",
        )
        .unwrap();
        (lex, inv)
    }

    fn seq(text: &str) -> MixedSequence {
        let (lex, inv) = fixture();
        MixedSequence { items: classify(&tokenize(text), &lex, &inv) }
    }

    #[test]
    fn single_slot_two_forms_two_candidates() {
        let (_, inv) = fixture();
        let cands = generate_candidates(&seq("I will read"), &inv, 64).unwrap();
        assert_eq!(cands.len(), 2);
        // canonical order: read_present first
        assert_eq!(cands[0].slot_forms, ["read_present"]);
        assert_eq!(cands[1].slot_forms, ["read_past"]);
        // aɪ w ɪ l ɹ i d
        assert_eq!(cands[0].tokens.len(), 7);
        assert_eq!(cands[0].slot_spans, [(4, 7)]);
    }

    #[test]
    fn two_slots_cross_product() {
        let (_, inv) = fixture();
        let cands = generate_candidates(&seq("read bass"), &inv, 64).unwrap();
        assert_eq!(cands.len(), 6);
        let combos: Vec<(String, String)> = cands
            .iter()
            .map(|c| (c.slot_forms[0].clone(), c.slot_forms[1].clone()))
            .collect();
        assert_eq!(combos[0], ("read_present".into(), "bass_fish".into()));
        assert_eq!(combos[1], ("read_present".into(), "bass_music".into()));
        assert_eq!(combos[5], ("read_past".into(), "bass_low".into()));
    }

    #[test]
    fn no_slot_is_an_error() {
        let (_, inv) = fixture();
        assert_eq!(
            generate_candidates(&seq("I will"), &inv, 64),
            Err(ScoreError::NoHeteronym)
        );
    }

    #[test]
    fn candidate_cap_is_enforced() {
        let (_, inv) = fixture();
        assert_eq!(
            generate_candidates(&seq("read bass"), &inv, 4),
            Err(ScoreError::TooManyCandidates { count: 6, cap: 4 })
        );
    }

    #[test]
    fn avg_distance_single_pair() {
        let dist = DistanceMatrix::new(1, 1, vec![5.0]).unwrap();
        let align = HardAlignment::new(vec![0], 1);
        assert_eq!(word_avg_distance(&dist, &align, (0, 1)).unwrap(), 5.0);
    }

    #[test]
    fn avg_distance_over_span() {
        // t0 -> frames 0,1 at distances 1,3; t1 -> frame 2 at distance 2
        let dist =
            DistanceMatrix::new(2, 3, vec![1.0, 3.0, 9.0, 9.0, 9.0, 2.0]).unwrap();
        let align = HardAlignment::new(vec![0, 0, 1], 2);
        assert_eq!(word_avg_distance(&dist, &align, (0, 2)).unwrap(), 2.0);
    }

    #[test]
    fn avg_distance_zero() {
        let dist = DistanceMatrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        let align = HardAlignment::new(vec![0, 0], 1);
        assert_eq!(word_avg_distance(&dist, &align, (0, 1)).unwrap(), 0.0);
    }

    #[test]
    fn empty_span_is_rejected() {
        let dist = DistanceMatrix::new(1, 1, vec![0.0]).unwrap();
        let align = HardAlignment::new(vec![0], 1);
        assert_eq!(
            word_avg_distance(&dist, &align, (1, 1)),
            Err(ScoreError::EmptySpan)
        );
    }

    fn two_form_slot() -> Vec<SlotSpec> {
        vec![SlotSpec {
            word: "read".into(),
            forms: vec![
                ("read_past".into(), Pronunciation::parse("ɹ ɛ d").unwrap()),
                ("read_present".into(), Pronunciation::parse("ɹ i d").unwrap()),
            ],
        }]
    }

    fn cand(id: &str, form: &str) -> Candidate {
        Candidate {
            candidate_id: id.into(),
            tokens: vec![],
            slot_spans: vec![(0, 1)],
            slot_forms: vec![form.into()],
        }
    }

    fn score(id: &str, d: f64) -> CandidateScore {
        CandidateScore { candidate_id: id.into(), slot_d_avg: vec![d], total: d }
    }

    #[test]
    fn two_candidate_selection() {
        let slots = two_form_slot();
        let cands = vec![cand("c000", "read_past"), cand("c001", "read_present")];
        let scores = vec![score("c000", 452.9), score("c001", 403.3)];
        let result = select("s1", &slots, &cands, &scores);
        let slot = &result.slots[0];
        assert_eq!(slot.chosen_form, "read_present");
        assert!((slot.confidence - 0.116).abs() < 5e-4);
    }

    #[test]
    fn tie_goes_to_canonical_order_with_zero_confidence() {
        let slots = two_form_slot();
        let cands = vec![cand("c000", "read_past"), cand("c001", "read_present")];
        let scores = vec![score("c000", 7.0), score("c001", 7.0)];
        let result = select("s1", &slots, &cands, &scores);
        assert_eq!(result.slots[0].chosen_form, "read_past");
        assert_eq!(result.slots[0].confidence, 0.0);
    }

    #[test]
    fn three_form_confidence_uses_extremes() {
        let slots = vec![SlotSpec {
            word: "x".into(),
            forms: vec![
                ("a".into(), Pronunciation::parse("p").unwrap()),
                ("b".into(), Pronunciation::parse("q").unwrap()),
                ("c".into(), Pronunciation::parse("r").unwrap()),
            ],
        }];
        let cands = vec![cand("c0", "a"), cand("c1", "b"), cand("c2", "c")];
        let scores = vec![score("c0", 10.0), score("c1", 20.0), score("c2", 30.0)];
        let result = select("s1", &slots, &cands, &scores);
        assert_eq!(result.slots[0].chosen_form, "a");
        assert_eq!(result.slots[0].confidence, 1.0);
    }

    #[test]
    fn candidate_order_does_not_matter() {
        let slots = two_form_slot();
        let a = select(
            "s1",
            &slots,
            &[cand("c000", "read_past"), cand("c001", "read_present")],
            &[score("c000", 452.9), score("c001", 403.3)],
        );
        let b = select(
            "s1",
            &slots,
            &[cand("c001", "read_present"), cand("c000", "read_past")],
            &[score("c001", 403.3), score("c000", 452.9)],
        );
        assert_eq!(a, b);
    }

    #[test]
    fn zero_distances_give_zero_confidence() {
        assert_eq!(confidence_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn duplicate_scores_are_deterministic() {
        let dist =
            DistanceMatrix::new(3, 4, vec![0.5; 12]).unwrap();
        let cand = Candidate {
            candidate_id: "c000".into(),
            tokens: vec![],
            slot_spans: vec![(1, 2)],
            slot_forms: vec!["f".into()],
        };
        let a = score_candidate_from_distances(&cand, &dist).unwrap();
        let b = score_candidate_from_distances(&cand, &dist).unwrap();
        assert_eq!(a, b);
    }
}
