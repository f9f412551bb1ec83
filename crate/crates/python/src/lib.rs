//! Python bindings for the core disambiguation operations.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use g2paug::alignment::{
    compute_distance_matrix as core_distance, soft_alignment as core_soft,
    viterbi_align as core_viterbi, DistanceMatrix, EncodingMatrix, HardAlignment,
};
use g2paug::io::parse_encoding_table;
use g2paug::lexicon::{
    parse_heteronym_inventory, parse_pron_lexicon, tokenize as core_tokenize,
    HeteronymInventory as CoreInventory, PronLexicon as CorePronLexicon,
};
use g2paug::pipeline::{build_sequence, disambiguate_with_frames, PipelineConfig};
use g2paug::scoring::{confidence_score as core_confidence, word_avg_distance};

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn encoding_matrix(rows: Vec<Vec<f32>>) -> PyResult<EncodingMatrix> {
    let n = rows.len();
    let dim = rows.first().map(Vec::len).unwrap_or(0);
    if n == 0 || dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(value_err("expected a non-empty rectangular matrix"));
    }
    let data = rows.into_iter().flatten().collect();
    EncodingMatrix::new(n, dim, data).map_err(value_err)
}

fn distance_matrix(rows: Vec<Vec<f64>>) -> PyResult<DistanceMatrix> {
    let n = rows.len();
    let m = rows.first().map(Vec::len).unwrap_or(0);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(value_err("expected a non-empty rectangular matrix"));
    }
    let data = rows.into_iter().flatten().collect();
    DistanceMatrix::new(n, m, data).map_err(value_err)
}

/// Word -> pronunciations dictionary in CMUdict text format.
#[pyclass(name = "PronLexicon")]
struct PyPronLexicon {
    inner: CorePronLexicon,
}

#[pymethods]
impl PyPronLexicon {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_pron_lexicon(text).map_err(value_err)? })
    }

    fn lookup(&self, word: &str) -> Option<Vec<Vec<String>>> {
        self.inner.get(word).map(|prons| {
            prons
                .iter()
                .map(|p| p.phonemes().iter().map(|s| s.as_str().to_string()).collect())
                .collect()
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Heteronym word -> ordered form/pronunciation table.
#[pyclass(name = "HeteronymInventory")]
struct PyInventory {
    inner: CoreInventory,
}

#[pymethods]
impl PyInventory {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_heteronym_inventory(text).map_err(value_err)? })
    }

    fn forms(&self, word: &str) -> Option<Vec<String>> {
        self.inner.get(word).map(|forms| forms.keys().cloned().collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Disambiguation outcome for one heteronym slot.
#[pyclass(name = "SlotResult")]
struct PySlotResult {
    #[pyo3(get)]
    word: String,
    #[pyo3(get)]
    chosen_form: String,
    #[pyo3(get)]
    confidence: f64,
    #[pyo3(get)]
    marginals: Vec<(String, f64)>,
}

#[pyfunction]
fn tokenize(sentence: &str) -> Vec<String> {
    core_tokenize(sentence).into_iter().map(|t| t.surface).collect()
}

#[pyfunction]
fn l2_distance_matrix(tokens: Vec<Vec<f32>>, frames: Vec<Vec<f32>>) -> PyResult<Vec<Vec<f64>>> {
    let dist = core_distance(&encoding_matrix(tokens)?, &encoding_matrix(frames)?)
        .map_err(value_err)?;
    Ok((0..dist.n_tokens())
        .map(|i| (0..dist.n_frames()).map(|j| dist.get(i, j)).collect())
        .collect())
}

/// Monotonic surjective minimum-distance alignment; returns the 0-based
/// token index per frame.
#[pyfunction]
fn viterbi_align(distances: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
    let dist = distance_matrix(distances)?;
    Ok(core_viterbi(&dist).map_err(value_err)?.assignment().to_vec())
}

#[pyfunction]
fn soft_alignment(distances: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let dist = distance_matrix(distances)?;
    let soft = core_soft(&dist);
    Ok((0..soft.n_tokens())
        .map(|i| (0..soft.n_frames()).map(|j| soft.get(i, j)).collect())
        .collect())
}

/// Average distance of a token span (start..end, exclusive) over its
/// aligned frames.
#[pyfunction]
fn avg_span_distance(
    distances: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    start: usize,
    end: usize,
) -> PyResult<f64> {
    let dist = distance_matrix(distances)?;
    let align = HardAlignment::new(assignment, dist.n_tokens());
    word_avg_distance(&dist, &align, (start, end)).map_err(value_err)
}

#[pyfunction]
fn confidence_score(min_distance: f64, max_distance: f64) -> f64 {
    core_confidence(min_distance, max_distance)
}

/// Disambiguate one sentence against its frame encodings using a text
/// encoding table (the `dim <d>` / `symbol v1 ... vd` format).
#[pyfunction]
fn disambiguate(
    text: &str,
    lexicon: &PyPronLexicon,
    inventory: &PyInventory,
    table_text: &str,
    frames: Vec<Vec<f32>>,
) -> PyResult<Vec<PySlotResult>> {
    let table = parse_encoding_table(table_text).map_err(value_err)?;
    let frames = encoding_matrix(frames)?;
    let config = PipelineConfig::default();
    let seq = build_sequence(text, &lexicon.inner, &inventory.inner, &config);
    let result =
        disambiguate_with_frames("py", &seq, &inventory.inner, &table, &frames, &config)
            .map_err(value_err)?;
    Ok(result
        .slots
        .into_iter()
        .map(|s| PySlotResult {
            word: s.word,
            chosen_form: s.chosen_form,
            confidence: s.confidence,
            marginals: s.marginals.into_iter().collect(),
        })
        .collect())
}

#[pymodule]
fn g2paug_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPronLexicon>()?;
    m.add_class::<PyInventory>()?;
    m.add_class::<PySlotResult>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(l2_distance_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(viterbi_align, m)?)?;
    m.add_function(wrap_pyfunction!(soft_alignment, m)?)?;
    m.add_function(wrap_pyfunction!(avg_span_distance, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_score, m)?)?;
    m.add_function(wrap_pyfunction!(disambiguate, m)?)?;
    Ok(())
}
