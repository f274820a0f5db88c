use super::{to_unit_f32, EmbeddingVector, Encoder, VectorKind};
use crate::error::{Error, Result};

pub const MIN_MOCK_DIM: usize = 8;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    seed.to_le_bytes()
        .iter()
        .chain(bytes)
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn hashed_counts(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let mut counts = vec![0.0; dim];
    let mut add = |gram: &[char]| {
        let s: String = gram.iter().collect();
        let h = fnv1a(seed, s.as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        counts[(h % dim as u64) as usize] += sign;
    };
    if chars.len() < 3 {
        add(&chars);
    } else {
        chars.windows(3).for_each(&mut add);
    }
    counts
}

/// Signed feature hashing of lowercased character 3-grams into `d` buckets,
/// then L2 normalization. Texts sharing many 3-grams get high cosine.
pub fn mock_embed(text: &str, d: usize, seed: u64) -> Result<EmbeddingVector> {
    if d < MIN_MOCK_DIM {
        return Err(Error::InvalidConfig(format!("mock encoder needs d >= {MIN_MOCK_DIM}, got {d}")));
    }
    if text.is_empty() {
        return Err(Error::EmptyInput("mock_embed text".into()));
    }
    Ok(EmbeddingVector {
        id: String::new(),
        kind: VectorKind::Query,
        values: to_unit_f32(&hashed_counts(text, d, seed))?,
        model_id: mock_model_id(d, seed),
    })
}

fn mock_model_id(d: usize, seed: u64) -> String {
    format!("mock-trigram-d{d}-s{seed}")
}

#[derive(Debug, Clone)]
pub struct MockEncoder {
    dim: usize,
    seed: u64,
    model_id: String,
}

impl MockEncoder {
    pub fn new(dim: usize, seed: u64) -> Self {
        MockEncoder { dim, seed, model_id: mock_model_id(dim, seed) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Encoder for MockEncoder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn encode_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        if self.dim < MIN_MOCK_DIM {
            return Err(Error::InvalidConfig(format!("mock encoder needs d >= {MIN_MOCK_DIM}, got {}", self.dim)));
        }
        Ok(texts.iter().map(|t| hashed_counts(t, self.dim, self.seed)).collect())
    }
}
