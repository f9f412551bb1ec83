//! L2 distance matrices between token and frame encodings, soft alignments,
//! and monotonic surjective hard alignment via Viterbi dynamic programming.
//!
//! Token indices are 0-based throughout. The DP runs in f64 regardless of
//! the storage precision of the encodings.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignError {
    #[error("encoding dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("cannot align {n_tokens} tokens to {n_frames} frames")]
    TooFewFrames { n_tokens: usize, n_frames: usize },
    #[error("empty token span")]
    EmptySpan,
    #[error("non-finite value in matrix")]
    NonFinite,
}

/// Context-free token-side encodings: one vector per phoneme or grapheme
/// symbol. Stands in for a contextual text encoder; precomputed distance
/// matrices bypass it entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingTable {
    dim: usize,
    vectors: indexmap::IndexMap<String, Vec<f32>>,
}

impl EncodingTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Self { dim, vectors: indexmap::IndexMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, symbol: &str) -> Option<&[f32]> {
        self.vectors.get(symbol).map(Vec::as_slice)
    }

    /// Insert a vector; false when the symbol is already present or the
    /// dimension is wrong.
    pub fn insert(&mut self, symbol: &str, vector: Vec<f32>) -> bool {
        if vector.len() != self.dim || self.vectors.contains_key(symbol) {
            return false;
        }
        self.vectors.insert(symbol.to_string(), vector);
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vectors.iter().map(|(s, v)| (s.as_str(), v.as_slice()))
    }
}

/// Dense row-major matrix of f32 encodings, one vector per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EncodingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self, AlignError> {
        assert_eq!(data.len(), rows * dim, "data length must be rows * dim");
        if data.iter().any(|v| !v.is_finite()) {
            return Err(AlignError::NonFinite);
        }
        Ok(Self { rows, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// N-token x M-frame matrix of L2 distances, row-major, f64.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n_tokens: usize,
    n_frames: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n_tokens: usize, n_frames: usize, data: Vec<f64>) -> Result<Self, AlignError> {
        assert_eq!(data.len(), n_tokens * n_frames);
        assert!(n_tokens > 0 && n_frames > 0, "dimensions must be positive");
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(AlignError::NonFinite);
        }
        Ok(Self { n_tokens, n_frames, data })
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn get(&self, token: usize, frame: usize) -> f64 {
        self.data[token * self.n_frames + frame]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Monotonic surjective frame-to-token assignment: entry j is the 0-based
/// token index aligned to frame j. Non-decreasing, starts at token 0, ends
/// at the last token, and every token receives at least one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardAlignment {
    assignment: Vec<usize>,
    n_tokens: usize,
}

impl HardAlignment {
    pub fn new(assignment: Vec<usize>, n_tokens: usize) -> Self {
        debug_assert!(is_valid_assignment(&assignment, n_tokens));
        Self { assignment, n_tokens }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn n_frames(&self) -> usize {
        self.assignment.len()
    }

    /// Frames assigned to each token (the M_i counts); sums to the frame
    /// count, every entry >= 1.
    pub fn frames_per_token(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_tokens];
        for &t in &self.assignment {
            counts[t] += 1;
        }
        counts
    }

    /// Total distance along the assignment.
    pub fn cost(&self, dist: &DistanceMatrix) -> f64 {
        self.assignment
            .iter()
            .enumerate()
            .map(|(j, &i)| dist.get(i, j))
            .sum()
    }
}

pub fn is_valid_assignment(assignment: &[usize], n_tokens: usize) -> bool {
    if assignment.is_empty() || n_tokens == 0 {
        return false;
    }
    if assignment[0] != 0 || *assignment.last().unwrap() != n_tokens - 1 {
        return false;
    }
    assignment.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1)
}

/// Pairwise Euclidean distances between token and frame encodings,
/// accumulated in f64.
pub fn compute_distance_matrix(
    token_encs: &EncodingMatrix,
    frame_encs: &EncodingMatrix,
) -> Result<DistanceMatrix, AlignError> {
    if token_encs.dim() != frame_encs.dim() {
        return Err(AlignError::DimMismatch {
            left: token_encs.dim(),
            right: frame_encs.dim(),
        });
    }
    let n = token_encs.rows();
    let m = frame_encs.rows();
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        let t = token_encs.row(i);
        for j in 0..m {
            let a = frame_encs.row(j);
            let sq: f64 = t
                .iter()
                .zip(a)
                .map(|(x, y)| {
                    let d = f64::from(*x) - f64::from(*y);
                    d * d
                })
                .sum();
            data.push(sq.sqrt());
        }
    }
    DistanceMatrix::new(n, m, data)
}

/// Minimum-total-distance monotonic surjective alignment.
///
/// Ties are broken toward the lexicographically smallest assignment
/// sequence, i.e. token advances happen as late as possible.
pub fn viterbi_align(dist: &DistanceMatrix) -> Result<HardAlignment, AlignError> {
    let n = dist.n_tokens();
    let m = dist.n_frames();
    if m < n {
        return Err(AlignError::TooFewFrames { n_tokens: n, n_frames: m });
    }
    // cost_to_end[i][j]: minimal cost of frames j..M with frame j on token i,
    // ending at token N-1 on the last frame. Infeasible cells stay infinite.
    let mut cost_to_end = vec![f64::INFINITY; n * m];
    let idx = |i: usize, j: usize| i * m + j;
    // the last frame must land on the last token
    cost_to_end[idx(n - 1, m - 1)] = dist.get(n - 1, m - 1);
    // advance[i][j]: the optimal continuation from (i, j) moves to token i+1
    // at frame j+1. Staying is preferred on cost ties.
    let mut advance = vec![false; n * m];
    for j in (0..m - 1).rev() {
        for i in 0..n {
            if i > j || m - j < n - i {
                continue;
            }
            let stay_cost = cost_to_end[idx(i, j + 1)];
            let advance_cost = if i + 1 < n {
                cost_to_end[idx(i + 1, j + 1)]
            } else {
                f64::INFINITY
            };
            let best = stay_cost.min(advance_cost);
            if best.is_finite() {
                cost_to_end[idx(i, j)] = dist.get(i, j) + best;
                advance[idx(i, j)] = advance_cost < stay_cost;
            }
        }
    }
    debug_assert!(cost_to_end[idx(0, 0)].is_finite());
    let mut assignment = Vec::with_capacity(m);
    let mut token = 0usize;
    assignment.push(0);
    for j in 0..m - 1 {
        if advance[idx(token, j)] {
            token += 1;
        }
        assignment.push(token);
    }
    Ok(HardAlignment::new(assignment, n))
}

/// Per-frame probability distribution over tokens: column j is the softmax
/// of the negated distances in column j.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAlignment {
    n_tokens: usize,
    n_frames: usize,
    data: Vec<f64>,
}

impl SoftAlignment {
    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn get(&self, token: usize, frame: usize) -> f64 {
        self.data[token * self.n_frames + frame]
    }
}

pub fn soft_alignment(dist: &DistanceMatrix) -> SoftAlignment {
    let n = dist.n_tokens();
    let m = dist.n_frames();
    let mut data = vec![0.0; n * m];
    for j in 0..m {
        // max-shifted softmax of -dist over the column
        let min_d = (0..n).map(|i| dist.get(i, j)).fold(f64::INFINITY, f64::min);
        let mut denom = 0.0;
        for i in 0..n {
            denom += (-(dist.get(i, j) - min_d)).exp();
        }
        for i in 0..n {
            data[i * m + j] = (-(dist.get(i, j) - min_d)).exp() / denom;
        }
    }
    SoftAlignment { n_tokens: n, n_frames: m, data }
}
