use serde::{Deserialize, Serialize};

/// Fixed-length bit set over the categories of one categorical feature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CategoryMask {
    len: usize,
    words: Vec<u64>,
}

impl CategoryMask {
    pub fn empty(len: usize) -> Self {
        CategoryMask {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut m = Self::empty(len);
        for i in 0..len {
            m.insert(i);
        }
        m
    }

    /// Panics if an index is out of range.
    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(len);
        for i in indices {
            m.insert(i);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn insert(&mut self, i: usize) {
        assert!(
            i < self.len,
            "category {i} out of range for mask of length {}",
            self.len
        );
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersect(&self, other: &CategoryMask) -> CategoryMask {
        debug_assert_eq!(self.len, other.len);
        CategoryMask {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn complement(&self) -> CategoryMask {
        let mut out = CategoryMask::full(self.len);
        for (w, o) in out.words.iter_mut().zip(&self.words) {
            *w &= !o;
        }
        out
    }

    /// L1 distance between the two indicator vectors.
    #[inline]
    pub fn hamming(&self, other: &CategoryMask) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.contains(i))
    }
}

/// Serialized as `{"len": c, "members": [...]}`.
impl Serialize for CategoryMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            len: usize,
            members: Vec<usize>,
        }
        Repr {
            len: self.len,
            members: self.iter().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CategoryMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            len: usize,
            members: Vec<usize>,
        }
        let r = Repr::deserialize(d)?;
        if let Some(bad) = r.members.iter().find(|&&i| i >= r.len) {
            return Err(serde::de::Error::custom(format!(
                "category {bad} out of range for mask of length {}",
                r.len
            )));
        }
        Ok(CategoryMask::from_indices(r.len, r.members))
    }
}
