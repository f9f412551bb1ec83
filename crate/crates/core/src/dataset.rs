//! Confidence-threshold filtering, balanced-subset construction, training
//! record emission, per-form statistics, and the TP/FP evaluation harness.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lexicon::{HeteronymInventory, MixedSequence, TokenKind, UNK_TOKEN};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("unresolved heteronym slot in sentence {0:?}")]
    UnresolvedSlot(String),
    #[error("no gold label for sentence {0:?} slot {1}")]
    MissingGold(String, usize),
}

/// Per-slot disambiguation label on a sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotLabel {
    pub word: String,
    pub form_id: String,
    pub confidence: f64,
}

/// A disambiguated sentence ready for emission.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sentence_id: String,
    pub text: String,
    pub slots: Vec<SlotLabel>,
    pub sequence: MixedSequence,
}

impl LabeledSample {
    /// Worst slot confidence; used as the greedy balancing priority.
    pub fn min_confidence(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| s.confidence)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Keep samples whose every slot passes the confidence threshold. Order is
/// preserved, so ascending thresholds give nested subsets.
pub fn filter_threshold(samples: &[LabeledSample], tau: f64) -> Vec<LabeledSample> {
    samples
        .iter()
        .filter(|s| s.slots.iter().all(|slot| slot.confidence >= tau))
        .cloned()
        .collect()
}

/// Occurrence counts per (word, form_id).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormCounts {
    counts: BTreeMap<(String, String), u64>,
}

impl FormCounts {
    pub fn get(&self, word: &str, form: &str) -> u64 {
        self.counts
            .get(&(word.to_string(), form.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn set(&mut self, word: &str, form: &str, count: u64) {
        self.counts.insert((word.to_string(), form.to_string()), count);
    }

    pub fn bump(&mut self, word: &str, form: &str) {
        *self
            .counts
            .entry((word.to_string(), form.to_string()))
            .or_insert(0) += 1;
    }

    pub fn add_sample(&mut self, sample: &LabeledSample) {
        for slot in &sample.slots {
            self.bump(&slot.word, &slot.form_id);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

type FormUniverse = BTreeMap<String, BTreeSet<String>>;

fn form_universe(base: &FormCounts, pool: &[LabeledSample]) -> FormUniverse {
    let mut universe: FormUniverse = BTreeMap::new();
    for ((word, form), _) in base.iter() {
        universe.entry(word.clone()).or_default().insert(form.clone());
    }
    for sample in pool {
        for slot in &sample.slots {
            universe
                .entry(slot.word.clone())
                .or_default()
                .insert(slot.form_id.clone());
        }
    }
    universe
}

/// Sum over words of (max form count - min form count).
fn total_imbalance(counts: &FormCounts, universe: &FormUniverse) -> u64 {
    universe
        .iter()
        .map(|(word, forms)| {
            let vals: Vec<u64> = forms.iter().map(|f| counts.get(word, f)).collect();
            let max = vals.iter().copied().max().unwrap_or(0);
            let min = vals.iter().copied().min().unwrap_or(0);
            max - min
        })
        .sum()
}

/// Greedy balanced-subset selection. Samples are considered in descending
/// confidence (then ascending sentence id) and added only when they strictly
/// reduce the total per-word form-count imbalance of base + selected.
/// Passes repeat until a full pass adds nothing. Returns the selection in
/// sentence-id order.
pub fn balance(pool: &[LabeledSample], base: &FormCounts) -> Vec<LabeledSample> {
    let universe = form_universe(base, pool);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        pool[b]
            .min_confidence()
            .partial_cmp(&pool[a].min_confidence())
            .unwrap()
            .then_with(|| pool[a].sentence_id.cmp(&pool[b].sentence_id))
    });

    let mut counts = base.clone();
    let mut selected = vec![false; pool.len()];
    let mut imbalance = total_imbalance(&counts, &universe);
    loop {
        let mut added = false;
        for &idx in &order {
            if selected[idx] {
                continue;
            }
            let mut tentative = counts.clone();
            tentative.add_sample(&pool[idx]);
            let new_imbalance = total_imbalance(&tentative, &universe);
            if new_imbalance < imbalance {
                counts = tentative;
                imbalance = new_imbalance;
                selected[idx] = true;
                added = true;
            }
        }
        if !added {
            break;
        }
    }

    let mut picked: Vec<LabeledSample> = pool
        .iter()
        .zip(&selected)
        .filter(|(_, &sel)| sel)
        .map(|(s, _)| s.clone())
        .collect();
    picked.sort_by(|a, b| a.sentence_id.cmp(&b.sentence_id));
    picked
}

/// What to do with sentences containing masked (OOV/unresolved) words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskPolicy {
    /// Emit the `<unk>` token in the phoneme target.
    #[default]
    Mask,
    /// Drop the whole sample.
    Drop,
}

/// One sentence-level G2P training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingRecord {
    pub grapheme_input: String,
    pub phoneme_target: String,
}

impl TrainingRecord {
    pub fn tsv_line(&self) -> String {
        format!("{}\t{}", self.grapheme_input, self.phoneme_target)
    }
}

/// Emit training records: lexicon phonemes for known words, the chosen form
/// for each heteronym slot, `<unk>` (or a drop) for masked words, literal
/// punctuation. Target words are separated by `|`; the field count equals
/// the sentence token count.
pub fn emit_records(
    samples: &[LabeledSample],
    inventory: &HeteronymInventory,
    policy: MaskPolicy,
) -> Result<Vec<TrainingRecord>, DatasetError> {
    let mut records = Vec::new();
    'samples: for sample in samples {
        let mut fields: Vec<String> = Vec::with_capacity(sample.sequence.items.len());
        let mut slot_no = 0usize;
        for item in &sample.sequence.items {
            match &item.kind {
                TokenKind::KnownUnambiguous(pron) => fields.push(pron.to_string()),
                TokenKind::HeteronymSlot(word) => {
                    let label = sample
                        .slots
                        .get(slot_no)
                        .filter(|l| &l.word == word && !l.form_id.is_empty())
                        .ok_or_else(|| {
                            DatasetError::UnresolvedSlot(sample.sentence_id.clone())
                        })?;
                    let pron = inventory
                        .get(word)
                        .and_then(|forms| forms.get(&label.form_id))
                        .ok_or_else(|| {
                            DatasetError::UnresolvedSlot(sample.sentence_id.clone())
                        })?;
                    fields.push(pron.to_string());
                    slot_no += 1;
                }
                TokenKind::Oov | TokenKind::Masked | TokenKind::AmbiguousNonHeteronym => {
                    match policy {
                        MaskPolicy::Mask => fields.push(UNK_TOKEN.to_string()),
                        MaskPolicy::Drop => continue 'samples,
                    }
                }
                TokenKind::Punctuation => fields.push(item.surface.clone()),
            }
        }
        records.push(TrainingRecord {
            grapheme_input: sample.text.clone(),
            phoneme_target: fields.join(" | "),
        });
    }
    Ok(records)
}

/// Kept-sample count and chosen-form counts at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdStats {
    pub tau: f64,
    pub kept: usize,
    pub counts: FormCounts,
}

/// Per-threshold statistics over an ascending threshold grid. Kept counts
/// are non-increasing along the grid.
pub fn stats(samples: &[LabeledSample], tau_grid: &[f64]) -> Vec<ThresholdStats> {
    tau_grid
        .iter()
        .map(|&tau| {
            let kept = filter_threshold(samples, tau);
            let mut counts = FormCounts::default();
            for sample in &kept {
                counts.add_sample(sample);
            }
            ThresholdStats { tau, kept: kept.len(), counts }
        })
        .collect()
}

/// TP/FP per (word, form) per threshold, plus per-threshold totals.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTable {
    pub thresholds: Vec<f64>,
    /// Row order: (word, form_id) ascending.
    pub forms: Vec<(String, String)>,
    pub tp: Vec<Vec<u64>>,
    pub fp: Vec<Vec<u64>>,
    pub totals: Vec<u64>,
}

impl EvalTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("word\tform\tmetric");
        for tau in &self.thresholds {
            out.push_str(&format!("\t{tau}"));
        }
        out.push('\n');
        for (row, (word, form)) in self.forms.iter().enumerate() {
            out.push_str(&format!("{word}\t{form}\tTP"));
            for v in &self.tp[row] {
                out.push_str(&format!("\t{v}"));
            }
            out.push('\n');
            out.push_str(&format!("{word}\t{form}\tFP"));
            for v in &self.fp[row] {
                out.push_str(&format!("\t{v}"));
            }
            out.push('\n');
        }
        out.push_str("Total\t\t");
        for v in &self.totals {
            out.push_str(&format!("\t{v}"));
        }
        out.push('\n');
        out
    }
}

/// Score chosen forms against gold labels keyed by (sentence_id, slot
/// index), at every threshold of the grid.
pub fn evaluate(
    gold: &BTreeMap<(String, usize), String>,
    samples: &[LabeledSample],
    tau_grid: &[f64],
) -> Result<EvalTable, DatasetError> {
    let mut forms: BTreeSet<(String, String)> = BTreeSet::new();
    for sample in samples {
        for slot in &sample.slots {
            forms.insert((slot.word.clone(), slot.form_id.clone()));
        }
    }
    let forms: Vec<(String, String)> = forms.into_iter().collect();
    let row_of: BTreeMap<&(String, String), usize> =
        forms.iter().enumerate().map(|(i, k)| (k, i)).collect();

    let mut tp = vec![vec![0u64; tau_grid.len()]; forms.len()];
    let mut fp = vec![vec![0u64; tau_grid.len()]; forms.len()];
    let mut totals = vec![0u64; tau_grid.len()];
    for (t, &tau) in tau_grid.iter().enumerate() {
        for sample in filter_threshold(samples, tau) {
            for (slot_no, slot) in sample.slots.iter().enumerate() {
                let key = (sample.sentence_id.clone(), slot_no);
                let gold_form = gold.get(&key).ok_or_else(|| {
                    DatasetError::MissingGold(sample.sentence_id.clone(), slot_no)
                })?;
                let row = row_of[&(slot.word.clone(), slot.form_id.clone())];
                if gold_form == &slot.form_id {
                    tp[row][t] += 1;
                } else {
                    fp[row][t] += 1;
                }
                totals[t] += 1;
            }
        }
    }
    Ok(EvalTable { thresholds: tau_grid.to_vec(), forms, tp, fp, totals })
}
