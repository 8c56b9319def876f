//! Cas9 sgRNA validation and one-hot encoding.
//!
//! A guide is 23 nucleotides: a 20-nt protospacer followed by the NGG
//! PAM. The encoded layout is position-major with channel order A, C, G, T,
//! so entry `4 * p + c` (0-based position `p`, channel `c`) is 1 exactly
//! when base `p` equals channel `c`. See `docs/encoding.md`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SEQUENCE_LEN: usize = 23;
pub const CHANNELS: usize = 4;
pub const FEATURE_DIM: usize = SEQUENCE_LEN * CHANNELS;
pub const ALPHABET: [u8; CHANNELS] = *b"ACGT";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("sequence has length {0}, expected {SEQUENCE_LEN}")]
    Length(usize),
    #[error("invalid base {base:?} at position {position} (1-based)")]
    Alphabet { position: usize, base: char },
    #[error("PAM must be NGG, found {0:?}")]
    Pam(String),
    #[error("malformed feature vector: {0}")]
    Malformed(String),
}

/// A 23-nt guide over {A,C,G,T} ending in GG, stored upper-case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValidatedSgRna([u8; SEQUENCE_LEN]);

impl ValidatedSgRna {
    pub fn as_str(&self) -> &str {
        // only ASCII ACGT is ever stored
        std::str::from_utf8(&self.0).expect("ascii bases")
    }

    pub fn bases(&self) -> &[u8; SEQUENCE_LEN] {
        &self.0
    }
}

impl fmt::Display for ValidatedSgRna {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValidatedSgRna {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        validate(s)
    }
}

impl Serialize for ValidatedSgRna {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ValidatedSgRna {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        validate(&s).map_err(serde::de::Error::custom)
    }
}

/// Checks length, alphabet (case-insensitive) and the NGG PAM, in that order.
pub fn validate(seq: &str) -> Result<ValidatedSgRna, EncodingError> {
    let chars: Vec<char> = seq.chars().collect();
    if chars.len() != SEQUENCE_LEN {
        return Err(EncodingError::Length(chars.len()));
    }
    let mut bases = [0u8; SEQUENCE_LEN];
    for (i, ch) in chars.iter().enumerate() {
        let up = ch.to_ascii_uppercase();
        if !matches!(up, 'A' | 'C' | 'G' | 'T') {
            return Err(EncodingError::Alphabet {
                position: i + 1,
                base: *ch,
            });
        }
        bases[i] = up as u8;
    }
    if &bases[SEQUENCE_LEN - 2..] != b"GG" {
        let tail = String::from_utf8_lossy(&bases[SEQUENCE_LEN - 3..]).into_owned();
        return Err(EncodingError::Pam(tail));
    }
    Ok(ValidatedSgRna(bases))
}

fn channel(base: u8) -> usize {
    match base {
        b'A' => 0,
        b'C' => 1,
        b'G' => 2,
        b'T' => 3,
        _ => unreachable!("validated sequences only hold ACGT"),
    }
}

/// One-hot encoded guide: 92 binary values, one 1 per position block.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Wraps raw values; call [`decode`] to check the invariants.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

pub fn one_hot(s: &ValidatedSgRna) -> FeatureVector {
    let mut v = vec![0.0; FEATURE_DIM];
    for (p, &b) in s.0.iter().enumerate() {
        v[CHANNELS * p + channel(b)] = 1.0;
    }
    FeatureVector(v)
}

pub fn decode(v: &FeatureVector) -> Result<ValidatedSgRna, EncodingError> {
    if v.0.len() != FEATURE_DIM {
        return Err(EncodingError::Malformed(format!(
            "length {} instead of {FEATURE_DIM}",
            v.0.len()
        )));
    }
    let mut bases = [0u8; SEQUENCE_LEN];
    for (p, block) in v.0.chunks_exact(CHANNELS).enumerate() {
        let mut hot = None;
        for (c, &x) in block.iter().enumerate() {
            if x == 1.0 {
                if hot.is_some() {
                    return Err(EncodingError::Malformed(format!(
                        "position {} has more than one hot channel",
                        p + 1
                    )));
                }
                hot = Some(c);
            } else if x != 0.0 {
                return Err(EncodingError::Malformed(format!(
                    "non-binary value {x} at position {}",
                    p + 1
                )));
            }
        }
        match hot {
            Some(c) => bases[p] = ALPHABET[c],
            None => {
                return Err(EncodingError::Malformed(format!(
                    "position {} has no hot channel",
                    p + 1
                )))
            }
        }
    }
    let s = std::str::from_utf8(&bases).expect("ascii");
    validate(s).map_err(|e| EncodingError::Malformed(e.to_string()))
}

/// Encodes a batch of guides into an `n x 92` matrix.
pub fn encode_all(seqs: &[ValidatedSgRna]) -> crate::Matrix {
    let mut data = Vec::with_capacity(seqs.len() * FEATURE_DIM);
    for s in seqs {
        data.extend(one_hot(s).0);
    }
    crate::Matrix::new(seqs.len(), FEATURE_DIM, data)
}
