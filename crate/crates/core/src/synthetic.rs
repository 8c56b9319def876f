//! Seeded synthetic sgRNA efficacy data.
//!
//! Sequences are uniform random 21-mers followed by `GG`. The efficacy of a
//! sequence is `sigmoid(bias + sum_p w[p][s_p] + sum_k v_k [s_a = u, s_b = u'])`
//! with Gaussian position weights `w`, a few pairwise interaction terms,
//! plus scaled Student-t noise, clipped to `[0, 1]`. Every random draw comes
//! from one ChaCha stream seeded by `SyntheticSpec::seed`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, DatasetSchema, Provenance, Record, Scale};
use crate::encoding::{self, ALPHABET, SEQUENCE_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub seed: u64,
    /// Standard deviation of the position weights.
    pub weight_scale: f64,
    pub interactions: usize,
    pub noise_scale: f64,
    /// Degrees of freedom of the Student-t noise; small means heavy tails.
    pub noise_df: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 200,
            seed: 0,
            weight_scale: 0.35,
            interactions: 6,
            noise_scale: 0.05,
            noise_df: 3.0,
        }
    }
}

/// The hidden scoring function; kept separate from the sampled sequences so
/// train and test sets can share it.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bias: f64,
    pub weights: [[f64; 4]; SEQUENCE_LEN],
    /// `(pos_a, base_a, pos_b, base_b, weight)`.
    pub pairs: Vec<(usize, usize, usize, usize, f64)>,
}

impl Generator {
    pub fn new(spec: &SyntheticSpec, rng: &mut impl Rng) -> Self {
        let normal = Normal::new(0.0, spec.weight_scale).expect("finite scale");
        let mut weights = [[0.0; 4]; SEQUENCE_LEN];
        // the fixed PAM positions carry no signal
        for row in weights.iter_mut().take(SEQUENCE_LEN - 2) {
            for w in row.iter_mut() {
                *w = normal.sample(rng);
            }
        }
        let pairs = (0..spec.interactions)
            .map(|_| {
                let a = rng.random_range(0..SEQUENCE_LEN - 2);
                let b = rng.random_range(0..SEQUENCE_LEN - 2);
                (a, rng.random_range(0..4), b, rng.random_range(0..4), 2.0 * normal.sample(rng))
            })
            .collect();
        Self { bias: 0.0, weights, pairs }
    }

    pub fn logit(&self, idx: &[usize; SEQUENCE_LEN]) -> f64 {
        let mut s = self.bias;
        for (p, &c) in idx.iter().enumerate() {
            s += self.weights[p][c];
        }
        for &(a, ba, b, bb, v) in &self.pairs {
            if idx[a] == ba && idx[b] == bb {
                s += v;
            }
        }
        s
    }

    pub fn efficacy(&self, idx: &[usize; SEQUENCE_LEN]) -> f64 {
        1.0 / (1.0 + (-self.logit(idx)).exp())
    }
}

fn random_guide(rng: &mut impl Rng) -> [usize; SEQUENCE_LEN] {
    let mut idx = [2usize; SEQUENCE_LEN];
    for v in idx.iter_mut().take(SEQUENCE_LEN - 2) {
        *v = rng.random_range(0..4);
    }
    idx
}

/// `spec.n` labelled records from a fresh generator.
pub fn generate(spec: &SyntheticSpec) -> Dataset {
    generate_split(spec, &[spec.n]).remove(0)
}

/// Several datasets drawn from one shared generator, e.g. `&[2000, 600]`
/// for a train/test pair.
pub fn generate_split(spec: &SyntheticSpec, sizes: &[usize]) -> Vec<Dataset> {
    let mut rng = crate::seed::rng(spec.seed);
    let generator = Generator::new(spec, &mut rng);
    let noise = StudentT::new(spec.noise_df).expect("positive degrees of freedom");
    let schema = DatasetSchema::new("sequence", "efficacy", Scale::Unit);
    sizes
        .iter()
        .map(|&n| {
            let records = (0..n)
                .map(|_| {
                    let idx = random_guide(&mut rng);
                    let text: String = idx.iter().map(|&c| ALPHABET[c] as char).collect();
                    let label = (generator.efficacy(&idx) + spec.noise_scale * noise.sample(&mut rng))
                        .clamp(0.0, 1.0);
                    Record {
                        sequence: encoding::validate(&text).expect("generated guide is valid"),
                        label,
                        baselines: BTreeMap::new(),
                        spacer: None,
                    }
                })
                .collect();
            Dataset {
                records,
                provenance: Provenance {
                    source: PathBuf::from(format!("synthetic:seed={}", spec.seed)),
                    schema: schema.clone(),
                },
            }
        })
        .collect()
}
