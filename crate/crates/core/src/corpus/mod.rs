//! Tokenization, word maps, feature grids and caption datasets.

mod dataset;
mod features;
mod synth;
mod wordmap;

pub use dataset::{read_dataset, write_dataset, CaptionRecord, DatasetError};
pub use features::{load_features, save_features, FeatureError, FeatureGrid, ABFT_MAGIC};
pub use synth::{gen_synthetic, synthetic_word};
pub use wordmap::{
    build_wordmap, decode_ids, encode, EncodeError, WordMap, WordMapError, END, END_ID, PAD,
    PAD_ID, RESERVED, START, START_ID, UNK, UNK_ID,
};

/// Characters stripped from both ends of every token.
const EDGE_PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '"', '\'', '(', ')'];

/// Lowercases `text`, splits on whitespace and strips edge punctuation from
/// each token. Tokens that become empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| raw.to_lowercase())
        .filter_map(|tok| {
            let trimmed = tok.trim_matches(EDGE_PUNCT);
            (!trimmed.is_empty()).then(|| trimmed.to_string())
        })
        .collect()
}

/// Joins tokens back into a single space separated string.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ")
}
