use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::TokenId;

pub const PAD: &str = "<pad>";
pub const START: &str = "<start>";
pub const END: &str = "<end>";
pub const UNK: &str = "<unk>";

pub const PAD_ID: TokenId = 0;
pub const START_ID: TokenId = 1;
pub const END_ID: TokenId = 2;
pub const UNK_ID: TokenId = 3;

/// Reserved tokens in id order.
pub const RESERVED: [&str; 4] = [PAD, START, END, UNK];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordMapError {
    #[error("reserved token {token} must have id {expected}")]
    MissingReserved { token: &'static str, expected: TokenId },
    #[error("ids are not contiguous: no token has id {0}")]
    Gap(TokenId),
    #[error("id {id} assigned to both {first:?} and {second:?}")]
    DuplicateId {
        id: TokenId,
        first: String,
        second: String,
    },
    #[error("token {0:?} is empty or contains whitespace")]
    BadToken(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("caption of {tokens} tokens needs {needed} slots but max_len is {max_len}")]
    LengthExceeded {
        tokens: usize,
        needed: usize,
        max_len: usize,
    },
}

/// Bidirectional token/id vocabulary with the four reserved tokens at ids 0..=3.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, TokenId>", into = "BTreeMap<String, TokenId>")]
pub struct WordMap {
    token_to_id: HashMap<String, TokenId>,
    id_to_token: Vec<String>,
}

impl WordMap {
    /// A map holding only the reserved tokens.
    pub fn reserved_only() -> Self {
        let id_to_token: Vec<String> = RESERVED.iter().map(|t| t.to_string()).collect();
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Self {
            token_to_id,
            id_to_token,
        }
    }

    /// Builds a map from an explicit `token -> id` assignment, checking every invariant.
    pub fn from_assignment(map: BTreeMap<String, TokenId>) -> Result<Self, WordMapError> {
        let mut slots: Vec<Option<String>> = vec![None; map.len()];
        for (token, &id) in &map {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(WordMapError::BadToken(token.clone()));
            }
            let slot = slots
                .get_mut(id as usize)
                .ok_or(WordMapError::Gap(map.len() as TokenId))?;
            if let Some(first) = slot {
                return Err(WordMapError::DuplicateId {
                    id,
                    first: first.clone(),
                    second: token.clone(),
                });
            }
            *slot = Some(token.clone());
        }
        let mut id_to_token = Vec::with_capacity(slots.len());
        for (id, slot) in slots.into_iter().enumerate() {
            id_to_token.push(slot.ok_or(WordMapError::Gap(id as TokenId))?);
        }
        for (id, reserved) in RESERVED.iter().enumerate() {
            if id_to_token.get(id).map(String::as_str) != Some(*reserved) {
                return Err(WordMapError::MissingReserved {
                    token: reserved,
                    expected: id as TokenId,
                });
            }
        }
        let token_to_id = map.into_iter().collect();
        Ok(Self {
            token_to_id,
            id_to_token,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.token_to_id.get(token).copied()
    }

    /// Id of `token`, falling back to `<unk>`.
    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn is_reserved(id: TokenId) -> bool {
        (id as usize) < RESERVED.len()
    }

    /// Tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    fn push(&mut self, token: String) {
        let id = self.id_to_token.len() as TokenId;
        self.token_to_id.insert(token.clone(), id);
        self.id_to_token.push(token);
    }
}

impl TryFrom<BTreeMap<String, TokenId>> for WordMap {
    type Error = WordMapError;

    fn try_from(map: BTreeMap<String, TokenId>) -> Result<Self, Self::Error> {
        Self::from_assignment(map)
    }
}

impl From<WordMap> for BTreeMap<String, TokenId> {
    fn from(wm: WordMap) -> Self {
        wm.token_to_id.into_iter().collect()
    }
}

/// Builds a vocabulary from tokenized captions. Tokens seen at least
/// `min_count` times get ids from 4 upward in descending frequency, ties
/// broken by lexicographic order. A `min_count` of 0 is treated as 1.
pub fn build_wordmap<S: AsRef<str>>(corpus: &[Vec<S>], min_count: usize) -> WordMap {
    let min_count = min_count.max(1);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for caption in corpus {
        for tok in caption {
            *counts.entry(tok.as_ref()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(tok, n)| n >= min_count && !RESERVED.contains(&tok))
        .collect();
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut wm = WordMap::reserved_only();
    for (tok, _) in kept {
        wm.push(tok.to_string());
    }
    wm
}

/// `<start> ids... <end>` padded with `<pad>` up to `max_len`.
pub fn encode<S: AsRef<str>>(
    tokens: &[S],
    wm: &WordMap,
    max_len: usize,
) -> Result<Vec<TokenId>, EncodeError> {
    let needed = tokens.len() + 2;
    if needed > max_len {
        return Err(EncodeError::LengthExceeded {
            tokens: tokens.len(),
            needed,
            max_len,
        });
    }
    let mut out = Vec::with_capacity(max_len);
    out.push(START_ID);
    out.extend(tokens.iter().map(|t| wm.id_or_unk(t.as_ref())));
    out.push(END_ID);
    out.resize(max_len, PAD_ID);
    Ok(out)
}

/// Maps ids back to tokens, dropping reserved ids and ids outside the map.
pub fn decode_ids(ids: &[TokenId], wm: &WordMap) -> Vec<String> {
    ids.iter()
        .filter(|&&id| !WordMap::is_reserved(id))
        .filter_map(|&id| wm.token(id).map(str::to_string))
        .collect()
}
