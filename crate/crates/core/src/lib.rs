//! Automatic heteronym disambiguation for transcribed-speech corpora.
//!
//! Candidate pronunciations are scored against acoustic frame encodings by
//! Viterbi-aligning each candidate and averaging the L2 distances over the
//! aligned frames; the lowest-scoring form wins. Filtered and balanced
//! sentence-level G2P training datasets are built from the labels, with
//! OOV words masked by `<unk>`.

pub mod alignment;
pub mod cli;
pub mod dataset;
pub mod io;
pub mod lexicon;
pub mod pipeline;
pub mod scoring;

pub use alignment::{
    compute_distance_matrix, soft_alignment, viterbi_align, DistanceMatrix,
    EncodingMatrix, EncodingTable, HardAlignment,
};
pub use dataset::{
    balance, emit_records, evaluate, filter_threshold, stats, FormCounts,
    LabeledSample, MaskPolicy, TrainingRecord,
};
pub use lexicon::{
    classify, mask_oov, parse_heteronym_inventory, parse_pron_lexicon, tokenize,
    AmbiguousPolicy, HeteronymInventory, MixedSequence, PronLexicon,
    Pronunciation, UNK_TOKEN,
};
pub use scoring::{
    confidence_score, generate_candidates, score_candidates, select,
    word_avg_distance, Candidate, CandidateScore, DisambiguationResult,
};
