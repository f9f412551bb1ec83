//! File formats: the ALNF binary matrix container, the plain-text encoding
//! table, the JSONL manifest, and the deterministic synthetic-corpus
//! generator used as the end-to-end oracle in place of a trained aligner.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{EncodingMatrix, EncodingTable};
use crate::lexicon::{
    classify, tokenize, HeteronymInventory, MixedSequence, PronLexicon, TokenKind,
};

const MAGIC: &[u8; 4] = b"ALNF";
const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic in {0}")]
    BadMagic(PathBuf),
    #[error("unsupported version {1} in {0}")]
    BadVersion(PathBuf, u8),
    #[error("truncated payload in {0}")]
    TruncatedPayload(PathBuf),
    #[error("non-finite value in {0}")]
    NonFiniteValue(PathBuf),
    #[error("{path}:{line}: expected {expected} values, got {got}")]
    DimMismatch { path: String, line: usize, expected: usize, got: usize },
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("{path}:{line}: malformed line")]
    Malformed { path: String, line: usize },
    #[error("duplicate manifest id {0:?}")]
    DuplicateId(String),
    #[error("manifest record {0:?} must have exactly one of frames/candidates")]
    BadRecord(String),
    #[error("unknown form {form:?} for word {word:?}")]
    UnknownForm { word: String, form: String },
    #[error("sentence {0:?}: planted form count does not match heteronym slots")]
    PlantedMismatch(String),
    #[error("invalid synth spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Raw matrix as stored on disk: rows x cols of f32, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub rows: u32,
    pub cols: u32,
    pub data: Vec<f32>,
}

impl RawMatrix {
    pub fn to_encoding_matrix(&self) -> EncodingMatrix {
        EncodingMatrix::new(self.rows as usize, self.cols as usize, self.data.clone())
            .expect("values validated on read")
    }
}

/// Write a matrix in the ALNF container: magic, version byte, u32-LE rows,
/// u32-LE cols, f32-LE payload.
pub fn write_matrix(path: &Path, rows: u32, cols: u32, data: &[f32]) -> Result<(), IoError> {
    assert_eq!(data.len(), rows as usize * cols as usize);
    let mut buf = Vec::with_capacity(13 + data.len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<RawMatrix, IoError> {
    let mut file = fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.len() < 13 {
        return Err(IoError::TruncatedPayload(path.to_path_buf()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(IoError::BadMagic(path.to_path_buf()));
    }
    if bytes[4] != VERSION {
        return Err(IoError::BadVersion(path.to_path_buf(), bytes[4]));
    }
    let rows = u32::from_le_bytes(bytes[5..9].try_into().unwrap());
    let cols = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    let expected = rows as usize * cols as usize * 4;
    if bytes.len() != 13 + expected {
        return Err(IoError::TruncatedPayload(path.to_path_buf()));
    }
    let data: Vec<f32> = bytes[13..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(IoError::NonFiniteValue(path.to_path_buf()));
    }
    Ok(RawMatrix { rows, cols, data })
}

/// Parse the text encoding-table format: a `dim <d>` header line followed by
/// `<symbol> <f1> ... <fd>` lines. "#" comments and blank lines are skipped.
pub fn parse_encoding_table(text: &str) -> Result<EncodingTable, IoError> {
    let path = "<table>";
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| IoError::Malformed { path: path.into(), line: 1 })?;
    let dim: usize = header
        .strip_prefix("dim ")
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or(IoError::Malformed { path: path.into(), line: header_no + 1 })?;
    let mut table = EncodingTable::new(dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let mut fields = line.split_whitespace();
        let symbol = fields
            .next()
            .ok_or(IoError::Malformed { path: path.into(), line: line_no })?;
        let values: Vec<f32> = fields
            .map(|f| f.parse::<f32>())
            .collect::<Result<_, _>>()
            .map_err(|_| IoError::Malformed { path: path.into(), line: line_no })?;
        if values.len() != dim {
            return Err(IoError::DimMismatch {
                path: path.into(),
                line: line_no,
                expected: dim,
                got: values.len(),
            });
        }
        if table.get(symbol).is_some() {
            return Err(IoError::DuplicateSymbol(symbol.to_string()));
        }
        table.insert(symbol, values);
    }
    Ok(table)
}

pub fn format_encoding_table(table: &EncodingTable) -> String {
    let mut out = format!("dim {}\n", table.dim());
    for (symbol, vector) in table.iter() {
        out.push_str(symbol);
        for v in vector {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
    }
    out
}

/// One manifest record: a transcript with either a frame-encoding matrix or
/// precomputed per-candidate distance matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<BTreeMap<String, PathBuf>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

/// Parse a line-delimited JSON manifest: ids must be unique and every
/// record carries exactly one of `frames` or `candidates`.
pub fn parse_manifest(text: &str) -> Result<Manifest, IoError> {
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let record: ManifestRecord = serde_json::from_str(line)?;
        if record.frames.is_some() == record.candidates.is_some() {
            return Err(IoError::BadRecord(record.id.clone()));
        }
        if !seen.insert(record.id.clone()) {
            return Err(IoError::DuplicateId(record.id.clone()));
        }
        records.push(record);
    }
    Ok(Manifest { records })
}

pub fn format_manifest(manifest: &Manifest) -> Result<String, IoError> {
    let mut out = String::new();
    for record in &manifest.records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}

/// Synthetic corpus description. Deterministic given the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dim: usize,
    pub frames_per_token: usize,
    pub noise: f64,
    pub seed: u64,
    pub sentences: Vec<SynthSentence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSentence {
    #[serde(default)]
    pub id: Option<String>,
    pub text: String,
    /// Planted form ids, one per heteronym slot, left to right.
    pub planted: Vec<String>,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), IoError> {
        if self.dim < 2 {
            return Err(IoError::BadSpec("dim must be >= 2".into()));
        }
        if self.frames_per_token < 1 {
            return Err(IoError::BadSpec("frames_per_token must be >= 1".into()));
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(IoError::BadSpec("noise must be >= 0".into()));
        }
        Ok(())
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.iter().map(|x| (x / norm) as f32).collect();
        }
    }
}

/// Alignment tokens of the true (planted) candidate of a sentence, and the
/// symbols the encoding table must cover.
fn true_tokens(
    seq: &MixedSequence,
    planted: &[String],
    inventory: &HeteronymInventory,
    sentence_id: &str,
) -> Result<Vec<String>, IoError> {
    let slot_count = seq.heteronym_slots().count();
    if slot_count != planted.len() {
        return Err(IoError::PlantedMismatch(sentence_id.to_string()));
    }
    let mut tokens = Vec::new();
    let mut slot_no = 0usize;
    for item in &seq.items {
        match &item.kind {
            TokenKind::KnownUnambiguous(pron) => {
                tokens.extend(pron.phonemes().iter().map(|p| p.as_str().to_string()));
            }
            TokenKind::HeteronymSlot(word) => {
                let form_id = &planted[slot_no];
                let pron = inventory
                    .get(word)
                    .and_then(|forms| forms.get(form_id))
                    .ok_or_else(|| IoError::UnknownForm {
                        word: word.clone(),
                        form: form_id.clone(),
                    })?;
                tokens.extend(pron.phonemes().iter().map(|p| p.as_str().to_string()));
                slot_no += 1;
            }
            TokenKind::AmbiguousNonHeteronym | TokenKind::Oov | TokenKind::Masked => {
                tokens.extend(
                    item.surface.to_lowercase().chars().map(|c| c.to_string()),
                );
            }
            TokenKind::Punctuation => tokens.push(item.surface.clone()),
        }
    }
    Ok(tokens)
}

/// Generated corpus: manifest, table, and frame matrix files on disk.
#[derive(Debug)]
pub struct SynthOutput {
    pub manifest_path: PathBuf,
    pub table_path: PathBuf,
    pub frames_dir: PathBuf,
}

/// Generate a deterministic synthetic corpus: every symbol gets a distinct
/// random unit vector, and each sentence's frame matrix repeats the true
/// candidate's token vectors `frames_per_token` times plus spherical
/// Gaussian noise.
pub fn gen_synthetic(
    spec: &SynthSpec,
    inventory: &HeteronymInventory,
    lexicon: &PronLexicon,
    out_dir: &Path,
) -> Result<SynthOutput, IoError> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let frames_dir = out_dir.join("frames");
    fs::create_dir_all(&frames_dir)?;

    // Collect every symbol any candidate of any sentence may use: all
    // inventory pronunciations, lexicon pronunciations of words present,
    // grapheme characters, punctuation.
    let mut symbols: BTreeSet<String> = BTreeSet::new();
    let mut sequences = Vec::with_capacity(spec.sentences.len());
    for (idx, sentence) in spec.sentences.iter().enumerate() {
        let id = sentence
            .id
            .clone()
            .unwrap_or_else(|| format!("s{idx:04}"));
        let tokens = tokenize(&sentence.text);
        let seq = MixedSequence { items: classify(&tokens, lexicon, inventory) };
        for item in &seq.items {
            match &item.kind {
                TokenKind::KnownUnambiguous(pron) => {
                    symbols.extend(
                        pron.phonemes().iter().map(|p| p.as_str().to_string()),
                    );
                }
                TokenKind::HeteronymSlot(word) => {
                    if let Some(forms) = inventory.get(word) {
                        for pron in forms.values() {
                            symbols.extend(
                                pron.phonemes().iter().map(|p| p.as_str().to_string()),
                            );
                        }
                    }
                }
                TokenKind::AmbiguousNonHeteronym | TokenKind::Oov | TokenKind::Masked => {
                    symbols.extend(
                        item.surface.to_lowercase().chars().map(|c| c.to_string()),
                    );
                }
                TokenKind::Punctuation => {
                    symbols.insert(item.surface.clone());
                }
            }
        }
        sequences.push((id, seq));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut table = EncodingTable::new(spec.dim);
    for symbol in &symbols {
        table.insert(symbol, unit_vector(&mut rng, spec.dim));
    }

    let mut manifest = Manifest::default();
    for ((id, seq), sentence) in sequences.iter().zip(&spec.sentences) {
        let tokens = true_tokens(seq, &sentence.planted, inventory, id)?;
        let n_frames = tokens.len() * spec.frames_per_token;
        let mut data = Vec::with_capacity(n_frames * spec.dim);
        for token in &tokens {
            let vec = table.get(token).expect("symbol collected above");
            for _ in 0..spec.frames_per_token {
                for &v in vec {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    data.push(v + (spec.noise * z) as f32);
                }
            }
        }
        let frame_path = frames_dir.join(format!("{id}.alnf"));
        write_matrix(&frame_path, n_frames as u32, spec.dim as u32, &data)?;
        manifest.records.push(ManifestRecord {
            id: id.clone(),
            text: sentence.text.clone(),
            frames: Some(frame_path),
            candidates: None,
        });
    }

    let manifest_path = out_dir.join("manifest.jsonl");
    fs::write(&manifest_path, format_manifest(&manifest)?)?;
    let table_path = out_dir.join("table.txt");
    fs::write(&table_path, format_encoding_table(&table))?;
    Ok(SynthOutput { manifest_path, table_path, frames_dir })
}
