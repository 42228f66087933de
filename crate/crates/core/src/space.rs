//! Feature-space metadata: the comparison frame for every tree distance.
//!
//! Numeric features carry a closed range `[lower, upper]`, categorical
//! features carry a category count. Both distance terms are normalized by
//! these values, so two trees are only comparable when they were built
//! against the same space (checked through [`SpaceDigest`]).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric { lower: f64, upper: f64 },
    Categorical { cardinality: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl Feature {
    pub fn numeric(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Numeric { lower, upper },
        }
    }

    pub fn categorical(name: impl Into<String>, cardinality: usize) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Categorical { cardinality },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, FeatureKind::Numeric { .. })
    }
}

/// Hex-encoded SHA-256 of the canonical space serialization.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpaceDigest(pub String);

impl SpaceDigest {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for SpaceDigest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered list of features; the feature id is the position in the list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureSpace {
    features: Vec<Feature>,
    #[serde(skip)]
    digest: SpaceDigest,
}

impl FeatureSpace {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Config("feature space has no features".into()));
        }
        for (id, f) in features.iter().enumerate() {
            match f.kind {
                FeatureKind::Numeric { lower, upper } => {
                    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                        return Err(Error::Config(format!(
                            "feature {id} ('{}'): need finite lower < upper, got [{lower}, {upper}]",
                            f.name
                        )));
                    }
                }
                FeatureKind::Categorical { cardinality } => {
                    if cardinality < 2 {
                        return Err(Error::Config(format!(
                            "feature {id} ('{}'): categorical cardinality must be >= 2, got {cardinality}",
                            f.name
                        )));
                    }
                }
            }
        }
        let digest = compute_digest(&features);
        Ok(FeatureSpace { features, digest })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, id: usize) -> &Feature {
        &self.features[id]
    }

    pub fn digest(&self) -> &SpaceDigest {
        &self.digest
    }

    pub fn numeric_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_numeric())
            .map(|(i, _)| i)
    }

    pub fn categorical_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_numeric())
            .map(|(i, _)| i)
    }

    /// `(lower, upper)` of a numeric feature, `None` for categorical ones.
    pub fn bounds(&self, id: usize) -> Option<(f64, f64)> {
        match self.features[id].kind {
            FeatureKind::Numeric { lower, upper } => Some((lower, upper)),
            FeatureKind::Categorical { .. } => None,
        }
    }

    pub fn cardinality(&self, id: usize) -> Option<usize> {
        match self.features[id].kind {
            FeatureKind::Categorical { cardinality } => Some(cardinality),
            FeatureKind::Numeric { .. } => None,
        }
    }
}

impl<'de> Deserialize<'de> for FeatureSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            features: Vec<Feature>,
        }
        let raw = Raw::deserialize(d)?;
        FeatureSpace::new(raw.features).map_err(serde::de::Error::custom)
    }
}

fn compute_digest(features: &[Feature]) -> SpaceDigest {
    let mut h = Sha256::new();
    for f in features {
        h.update(f.name.as_bytes());
        h.update([0u8]);
        match f.kind {
            FeatureKind::Numeric { lower, upper } => {
                h.update(b"n");
                h.update(lower.to_bits().to_le_bytes());
                h.update(upper.to_bits().to_le_bytes());
            }
            FeatureKind::Categorical { cardinality } => {
                h.update(b"c");
                h.update((cardinality as u64).to_le_bytes());
            }
        }
    }
    SpaceDigest(hex::encode(h.finalize()))
}
