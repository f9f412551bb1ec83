//! Pronunciation lexicon and heteronym inventory parsing, sentence
//! tokenization, and token classification into the classes the pipeline
//! distinguishes: known unambiguous words, heteronym slots, ambiguous
//! non-heteronyms, OOV words, and punctuation.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Token emitted in place of masked words.
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("malformed line {0}")]
    MalformedLine(usize),
    #[error("word {0:?} has only one heteronym form")]
    SingleFormWord(String),
    #[error("duplicate form {form:?} for word {word:?}")]
    DuplicateForm { word: String, form: String },
}

/// A single phoneme symbol (IPA or ARPABET), non-empty and whitespace-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhonemeSymbol(String);

impl PhonemeSymbol {
    pub fn new(symbol: &str) -> Option<Self> {
        if symbol.is_empty() || symbol.chars().any(char::is_whitespace) {
            None
        } else {
            Some(Self(symbol.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PhonemeSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered, non-empty sequence of phoneme symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pronunciation(Vec<PhonemeSymbol>);

impl Pronunciation {
    pub fn new(phonemes: Vec<PhonemeSymbol>) -> Option<Self> {
        if phonemes.is_empty() {
            None
        } else {
            Some(Self(phonemes))
        }
    }

    /// Parse a space-separated phoneme string. Returns None when empty or a
    /// symbol is invalid.
    pub fn parse(text: &str) -> Option<Self> {
        let phonemes: Option<Vec<_>> =
            text.split_whitespace().map(PhonemeSymbol::new).collect();
        Self::new(phonemes?)
    }

    pub fn phonemes(&self) -> &[PhonemeSymbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Pronunciation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for p in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            f.write_str(p.as_str())?;
        }
        Ok(())
    }
}

/// Word (case-folded) to pronunciation list, CMUdict-style.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PronLexicon {
    entries: BTreeMap<String, Vec<Pronunciation>>,
}

impl PronLexicon {
    pub fn get(&self, word: &str) -> Option<&[Pronunciation]> {
        self.entries.get(&fold_case(word)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Pronunciation])> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p.as_slice()))
    }

    pub fn insert(&mut self, word: &str, pron: Pronunciation) {
        self.entries.entry(fold_case(word)).or_default().push(pron);
    }

    /// Canonical CMUdict-style text form: uppercase words, variant markers,
    /// two spaces before the phonemes. Reparsing the output yields an equal
    /// lexicon.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        for (word, prons) in &self.entries {
            for (i, pron) in prons.iter().enumerate() {
                let upper = word.to_uppercase();
                if i == 0 {
                    out.push_str(&format!("{upper}  {pron}\n"));
                } else {
                    out.push_str(&format!("{upper}({i})  {pron}\n"));
                }
            }
        }
        out
    }
}

/// Word to ordered (form_id -> pronunciation) map; file order is the
/// canonical form order used for tie-breaking.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeteronymInventory {
    entries: IndexMap<String, IndexMap<String, Pronunciation>>,
}

impl HeteronymInventory {
    pub fn get(&self, word: &str) -> Option<&IndexMap<String, Pronunciation>> {
        self.entries.get(&fold_case(word))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&fold_case(word))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(
        &self,
    ) -> impl Iterator<Item = (&str, &IndexMap<String, Pronunciation>)> {
        self.entries.iter().map(|(w, f)| (w.as_str(), f))
    }
}

fn fold_case(word: &str) -> String {
    word.to_lowercase()
}

/// Parse a CMUdict-format pronunciation dictionary.
///
/// Lines starting with ";;;" and blank lines are skipped. Entries look like
/// `WORD  PH1 PH2 ...`; variant markers `WORD(1)`, `WORD(2)` append to the
/// base word's list in file order.
pub fn parse_pron_lexicon(text: &str) -> Result<PronLexicon, LexiconError> {
    let mut lexicon = PronLexicon::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.starts_with(";;;") || line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let head = fields.next().ok_or(LexiconError::MalformedLine(line_no))?;
        let word = strip_variant_marker(head)
            .ok_or(LexiconError::MalformedLine(line_no))?;
        let rest: Vec<&str> = fields.collect();
        if rest.is_empty() {
            return Err(LexiconError::MalformedLine(line_no));
        }
        let pron = Pronunciation::parse(&rest.join(" "))
            .ok_or(LexiconError::MalformedLine(line_no))?;
        lexicon.insert(word, pron);
    }
    Ok(lexicon)
}

/// Strip a trailing `(N)` variant marker. Returns None when a parenthesis is
/// present but the marker is not of that form.
fn strip_variant_marker(head: &str) -> Option<&str> {
    match head.find('(') {
        None => Some(head),
        Some(pos) => {
            let marker = &head[pos..];
            let inner = marker.strip_prefix('(')?.strip_suffix(')')?;
            if pos == 0 || inner.is_empty() || !inner.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            Some(&head[..pos])
        }
    }
}

/// Parse a heteronym inventory: tab-separated `word<TAB>form_id<TAB>phonemes`
/// lines, "#" comments ignored. Every word must end up with at least two
/// forms.
pub fn parse_heteronym_inventory(
    text: &str,
) -> Result<HeteronymInventory, LexiconError> {
    let mut inventory = HeteronymInventory::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(LexiconError::MalformedLine(line_no));
        }
        let word = fold_case(fields[0].trim());
        let form_id = fields[1].trim().to_string();
        if word.is_empty() || form_id.is_empty() {
            return Err(LexiconError::MalformedLine(line_no));
        }
        let pron = Pronunciation::parse(fields[2])
            .ok_or(LexiconError::MalformedLine(line_no))?;
        let forms = inventory.entries.entry(word.clone()).or_default();
        if forms.insert(form_id.clone(), pron).is_some() {
            return Err(LexiconError::DuplicateForm { word, form: form_id });
        }
    }
    for (word, forms) in &inventory.entries {
        if forms.len() < 2 {
            return Err(LexiconError::SingleFormWord(word.clone()));
        }
    }
    Ok(inventory)
}

/// A raw sentence token: a word or a single punctuation character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub is_punctuation: bool,
}

impl Token {
    fn word(surface: &str) -> Self {
        Self { surface: surface.to_string(), is_punctuation: false }
    }

    fn punct(c: char) -> Self {
        Self { surface: c.to_string(), is_punctuation: true }
    }

    /// Case-folded lookup key.
    pub fn key(&self) -> String {
        fold_case(&self.surface)
    }
}

/// Whitespace tokenization with leading/trailing punctuation split off into
/// their own tokens. Word surfaces are preserved; lookups use `Token::key`.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    for chunk in sentence.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && !chars[start].is_alphanumeric() {
            start += 1;
        }
        while end > start && !chars[end - 1].is_alphanumeric() {
            end -= 1;
        }
        for &c in &chars[..start] {
            tokens.push(Token::punct(c));
        }
        if start < end {
            tokens.push(Token::word(&chars[start..end].iter().collect::<String>()));
        }
        for &c in &chars[end..] {
            tokens.push(Token::punct(c));
        }
    }
    tokens
}

/// Classification of a token against the lexicon and inventory.
#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Exactly one lexicon pronunciation; substituted with it.
    KnownUnambiguous(Pronunciation),
    /// Word present in the heteronym inventory; kept as graphemes until a
    /// form is chosen.
    HeteronymSlot(String),
    /// Multiple lexicon pronunciations but not a listed heteronym.
    AmbiguousNonHeteronym,
    /// Absent from both lexicon and inventory.
    Oov,
    Punctuation,
    /// Emission form replaced by the `<unk>` token.
    Masked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedToken {
    pub surface: String,
    pub kind: TokenKind,
}

/// Sentence tokens with substitutions applied, in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSequence {
    pub items: Vec<ClassifiedToken>,
}

impl MixedSequence {
    pub fn heteronym_slots(&self) -> impl Iterator<Item = (usize, &str)> {
        self.items.iter().enumerate().filter_map(|(i, t)| match &t.kind {
            TokenKind::HeteronymSlot(word) => Some((i, word.as_str())),
            _ => None,
        })
    }
}

/// Classify tokens in priority order: punctuation, inventory heteronym,
/// single-pronunciation lexicon word, multi-pronunciation lexicon word, OOV.
pub fn classify(
    tokens: &[Token],
    lexicon: &PronLexicon,
    inventory: &HeteronymInventory,
) -> Vec<ClassifiedToken> {
    tokens
        .iter()
        .map(|token| {
            let kind = if token.is_punctuation {
                TokenKind::Punctuation
            } else {
                let key = token.key();
                if inventory.contains(&key) {
                    TokenKind::HeteronymSlot(key)
                } else {
                    match lexicon.get(&key) {
                        Some([only]) => TokenKind::KnownUnambiguous(only.clone()),
                        Some(_) => TokenKind::AmbiguousNonHeteronym,
                        None => TokenKind::Oov,
                    }
                }
            };
            ClassifiedToken { surface: token.surface.clone(), kind }
        })
        .collect()
}

/// How multi-pronunciation non-heteronym words are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmbiguousPolicy {
    /// Keep as graphemes for alignment, mask as `<unk>` at emission.
    #[default]
    Mask,
    /// Substitute the first lexicon pronunciation.
    First,
}

/// Resolve ambiguous non-heteronym tokens per policy. Under `First` they
/// become known words with the first lexicon pronunciation.
pub fn resolve_ambiguous(
    seq: MixedSequence,
    lexicon: &PronLexicon,
    policy: AmbiguousPolicy,
) -> MixedSequence {
    if policy == AmbiguousPolicy::Mask {
        return seq;
    }
    let items = seq
        .items
        .into_iter()
        .map(|t| match t.kind {
            TokenKind::AmbiguousNonHeteronym => {
                let pron = lexicon
                    .get(&fold_case(&t.surface))
                    .and_then(|prons| prons.first())
                    .expect("ambiguous token must be in lexicon")
                    .clone();
                ClassifiedToken { surface: t.surface, kind: TokenKind::KnownUnambiguous(pron) }
            }
            kind => ClassifiedToken { surface: t.surface, kind },
        })
        .collect();
    MixedSequence { items }
}

/// Replace the emission form of OOV tokens (and ambiguous non-heteronyms
/// under the default policy) with the `<unk>` token. Token count and the
/// positions of untouched tokens are preserved.
pub fn mask_oov(seq: MixedSequence, policy: AmbiguousPolicy) -> MixedSequence {
    let items = seq
        .items
        .into_iter()
        .map(|t| {
            let masked = match t.kind {
                TokenKind::Oov => true,
                TokenKind::AmbiguousNonHeteronym => policy == AmbiguousPolicy::Mask,
                _ => false,
            };
            if masked {
                ClassifiedToken { surface: t.surface, kind: TokenKind::Masked }
            } else {
                t
            }
        })
        .collect();
    MixedSequence { items }
}
