//! Shared fixtures for the integration suites.

use g2paug::io::{SynthSentence, SynthSpec};

pub const LEXICON: &str = "\
I  aɪ
WILL  w ɪ l
NOW  n aʊ
SWIM  s w ɪ m
THEY  ð eɪ
TODAY  t ə d eɪ
SOON  s u n
CAN  k æ n
WE  w i
YESTERDAY  j ɛ s t ɚ d eɪ
";

pub const INVENTORY: &str = "\
read\tread_present\tɹ i d
read\tread_past\tɹ ɛ d
bass\tbass_fish\tb æ s
bass\tbass_music\tb eɪ s
lead\tlead_guide\tl i d
lead\tlead_metal\tl ɛ d
tear\ttear_rip\tt ɛ ɹ
tear\ttear_cry\tt ɪ ɹ
bow\tbow_knot\tb oʊ
bow\tbow_bend\tb aʊ
live\tlive_verb\tl ɪ v
live\tlive_adj\tl aɪ v
";

pub const HETERONYMS: [(&str, [&str; 2]); 6] = [
    ("read", ["read_present", "read_past"]),
    ("bass", ["bass_fish", "bass_music"]),
    ("lead", ["lead_guide", "lead_metal"]),
    ("tear", ["tear_rip", "tear_cry"]),
    ("bow", ["bow_knot", "bow_bend"]),
    ("live", ["live_verb", "live_adj"]),
];

const TEMPLATES: [&str; 4] = [
    "I will {} now.",
    "they can {} today",
    "we will {} soon",
    "I {} yesterday.",
];

/// A deterministic corpus cycling through heteronyms, forms, and sentence
/// templates.
pub fn synth_spec(sentences: usize, dim: usize, k: usize, noise: f64, seed: u64) -> SynthSpec {
    let sentences = (0..sentences)
        .map(|i| {
            let (word, forms) = HETERONYMS[i % HETERONYMS.len()];
            let form = forms[(i / HETERONYMS.len()) % 2];
            let template = TEMPLATES[(i / 12) % TEMPLATES.len()];
            SynthSentence {
                id: Some(format!("s{i:04}")),
                text: template.replace("{}", word),
                planted: vec![form.to_string()],
            }
        })
        .collect();
    SynthSpec { dim, frames_per_token: k, noise, seed, sentences }
}

/// Planted form of sentence i, matching `synth_spec`.
pub fn planted_form(i: usize) -> &'static str {
    let (_, forms) = HETERONYMS[i % HETERONYMS.len()];
    forms[(i / HETERONYMS.len()) % 2]
}
