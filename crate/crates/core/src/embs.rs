//! EMBS v1: the binary embedding-dataset interchange format.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! offset  size      field
//! 0       4         magic "EMBS"
//! 4       4         version u32 = 1
//! 8       8         n u64
//! 16      4         dim u32
//! 20      4         class_count u32
//! 24      4         group_count u32
//! 28      4         reserved u32 = 0
//! 32      n*dim*4   embeddings, f32, row-major
//! ..      n*4       labels u32
//! ..      n*4       groups u32
//! ..      n         splits u8 (0 = train, 1 = validation, 2 = test)
//! ```
//!
//! A single file holds all three splits. Group ids are opaque; the synthetic
//! generator and the Waterbirds metadata both use `group = 2 * label + background`,
//! but nothing here enforces that.

use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"EMBS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum EmbsError {
    #[error("bad magic {found:?} at offset {offset}")]
    BadMagic { offset: u64, found: [u8; 4] },
    #[error("unsupported version {found} at offset {offset}")]
    UnsupportedVersion { offset: u64, found: u32 },
    #[error("bad header field {field} = {value} at offset {offset}")]
    BadHeader {
        offset: u64,
        field: &'static str,
        value: u64,
    },
    #[error("truncated stream: expected {expected} bytes, got {actual} (payload ends at offset {actual})")]
    Truncated { expected: u64, actual: u64 },
    #[error("{extra} trailing bytes after payload at offset {offset}")]
    TrailingBytes { offset: u64, extra: u64 },
    #[error("non-finite embedding value {value} for example {index} at offset {offset}")]
    NonFinite { offset: u64, index: usize, value: f32 },
    #[error("label {value} of example {index} out of range (class_count {limit}) at offset {offset}")]
    LabelOutOfRange {
        offset: u64,
        index: usize,
        value: u32,
        limit: u32,
    },
    #[error("group {value} of example {index} out of range (group_count {limit}) at offset {offset}")]
    GroupOutOfRange {
        offset: u64,
        index: usize,
        value: u32,
        limit: u32,
    },
    #[error("split {value} of example {index} out of range at offset {offset}")]
    SplitOutOfRange { offset: u64, index: usize, value: u8 },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Split {
    Train = 0,
    Validation = 1,
    Test = 2,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn from_u8(v: u8) -> Option<Split> {
        match v {
            0 => Some(Split::Train),
            1 => Some(Split::Validation),
            2 => Some(Split::Test),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// N embedding vectors with class labels, group ids and split ids.
///
/// Immutable once constructed; every constructor validates the invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    dim: usize,
    class_count: u32,
    group_count: u32,
    embeddings: Vec<f32>,
    labels: Vec<u32>,
    groups: Vec<u32>,
    splits: Vec<Split>,
}

impl EmbeddingDataset {
    pub fn new(
        dim: usize,
        class_count: u32,
        group_count: u32,
        embeddings: Vec<f32>,
        labels: Vec<u32>,
        groups: Vec<u32>,
        splits: Vec<Split>,
    ) -> Result<Self, EmbsError> {
        let n = labels.len();
        if n == 0 {
            return Err(EmbsError::Invalid("dataset must contain at least one example".into()));
        }
        if dim == 0 || dim > u32::MAX as usize {
            return Err(EmbsError::Invalid(format!("dim must be in 1..=u32::MAX, got {dim}")));
        }
        if class_count < 2 {
            return Err(EmbsError::Invalid(format!("class_count must be >= 2, got {class_count}")));
        }
        if group_count < 1 {
            return Err(EmbsError::Invalid("group_count must be >= 1".into()));
        }
        if groups.len() != n || splits.len() != n {
            return Err(EmbsError::Invalid(format!(
                "length mismatch: {n} labels, {} groups, {} splits",
                groups.len(),
                splits.len()
            )));
        }
        if embeddings.len() != n * dim {
            return Err(EmbsError::Invalid(format!(
                "expected {} embedding values ({n} x {dim}), got {}",
                n * dim,
                embeddings.len()
            )));
        }
        let emb_base = HEADER_LEN as u64;
        if let Some(pos) = embeddings.iter().position(|v| !v.is_finite()) {
            return Err(EmbsError::NonFinite {
                offset: emb_base + 4 * pos as u64,
                index: pos / dim,
                value: embeddings[pos],
            });
        }
        let label_base = emb_base + 4 * (n * dim) as u64;
        if let Some(i) = labels.iter().position(|&l| l >= class_count) {
            return Err(EmbsError::LabelOutOfRange {
                offset: label_base + 4 * i as u64,
                index: i,
                value: labels[i],
                limit: class_count,
            });
        }
        let group_base = label_base + 4 * n as u64;
        if let Some(i) = groups.iter().position(|&g| g >= group_count) {
            return Err(EmbsError::GroupOutOfRange {
                offset: group_base + 4 * i as u64,
                index: i,
                value: groups[i],
                limit: group_count,
            });
        }
        Ok(Self {
            dim,
            class_count,
            group_count,
            embeddings,
            labels,
            groups,
            splits,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_count(&self) -> u32 {
        self.class_count
    }

    pub fn group_count(&self) -> u32 {
        self.group_count
    }

    pub fn embeddings(&self) -> &[f32] {
        &self.embeddings
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.embeddings[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn groups(&self) -> &[u32] {
        &self.groups
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    /// Non-fatal findings: a split that is present but lacks some class.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for split in Split::ALL {
            let mut seen = vec![false; self.class_count as usize];
            let mut present = false;
            for (l, s) in self.labels.iter().zip(&self.splits) {
                if *s == split {
                    present = true;
                    seen[*l as usize] = true;
                }
            }
            if present {
                for (c, _) in seen.iter().enumerate().filter(|(_, s)| !**s) {
                    out.push(format!("{split} split has no examples of class {c}"));
                }
            }
        }
        out
    }

    /// Example counts indexed `[split][group]`.
    pub fn histogram(&self) -> [Vec<u64>; 3] {
        let mut h: [Vec<u64>; 3] = std::array::from_fn(|_| vec![0; self.group_count as usize]);
        for (g, s) in self.groups.iter().zip(&self.splits) {
            h[*s as usize][*g as usize] += 1;
        }
        h
    }

    pub fn encoded_len(&self) -> usize {
        let n = self.len();
        HEADER_LEN + n * self.dim * 4 + n * 9
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.encoded_len());
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&self.class_count.to_le_bytes());
        buf.extend_from_slice(&self.group_count.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        for v in &self.embeddings {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for l in &self.labels {
            buf.extend_from_slice(&l.to_le_bytes());
        }
        for g in &self.groups {
            buf.extend_from_slice(&g.to_le_bytes());
        }
        buf.extend(self.splits.iter().map(|s| *s as u8));
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbsError> {
        let actual = bytes.len() as u64;
        if bytes.len() < HEADER_LEN {
            if bytes.len() >= 4 && bytes[..4] != MAGIC {
                return Err(bad_magic(bytes));
            }
            return Err(EmbsError::Truncated {
                expected: HEADER_LEN as u64,
                actual,
            });
        }
        if bytes[..4] != MAGIC {
            return Err(bad_magic(bytes));
        }
        let version = u32_at(bytes, 4);
        if version != VERSION {
            return Err(EmbsError::UnsupportedVersion {
                offset: 4,
                found: version,
            });
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let dim = u32_at(bytes, 16);
        let class_count = u32_at(bytes, 20);
        let group_count = u32_at(bytes, 24);
        let reserved = u32_at(bytes, 28);
        let header_checks: [(bool, u64, &'static str, u64); 5] = [
            (n == 0, 8, "n", n),
            (dim == 0, 16, "dim", dim as u64),
            (class_count < 2, 20, "class_count", class_count as u64),
            (group_count == 0, 24, "group_count", group_count as u64),
            (reserved != 0, 28, "reserved", reserved as u64),
        ];
        if let Some(&(_, offset, field, value)) = header_checks.iter().find(|c| c.0) {
            return Err(EmbsError::BadHeader { offset, field, value });
        }

        // Lengths are checked in u128 so hostile headers cannot overflow.
        let expected = HEADER_LEN as u128 + n as u128 * dim as u128 * 4 + n as u128 * 9;
        if (actual as u128) < expected {
            return Err(EmbsError::Truncated {
                expected: u64::try_from(expected).unwrap_or(u64::MAX),
                actual,
            });
        }
        if (actual as u128) > expected {
            return Err(EmbsError::TrailingBytes {
                offset: expected as u64,
                extra: actual - expected as u64,
            });
        }
        let n = n as usize;
        let dim = dim as usize;

        let mut pos = HEADER_LEN;
        let emb_end = pos + n * dim * 4;
        let embeddings: Vec<f32> = bytes[pos..emb_end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos = emb_end;
        let labels: Vec<u32> = bytes[pos..pos + 4 * n]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos += 4 * n;
        let groups: Vec<u32> = bytes[pos..pos + 4 * n]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos += 4 * n;
        let mut splits = Vec::with_capacity(n);
        for (i, &b) in bytes[pos..pos + n].iter().enumerate() {
            match Split::from_u8(b) {
                Some(s) => splits.push(s),
                None => {
                    return Err(EmbsError::SplitOutOfRange {
                        offset: (pos + i) as u64,
                        index: i,
                        value: b,
                    })
                }
            }
        }
        Self::new(dim, class_count, group_count, embeddings, labels, groups, splits)
    }

    /// Examples belonging to `split`, in file order.
    pub fn split_view(&self, split: Split) -> SplitView<'_> {
        let indices = self
            .splits
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == split)
            .map(|(i, _)| i)
            .collect();
        SplitView {
            dataset: self,
            split,
            indices,
        }
    }
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn bad_magic(bytes: &[u8]) -> EmbsError {
    EmbsError::BadMagic {
        offset: 0,
        found: bytes[..4].try_into().unwrap(),
    }
}

/// Serializes `dataset` to `sink`. The dataset type cannot hold an invalid
/// value, so nothing reaches the sink unless the invariants hold.
pub fn write_embs<W: Write>(dataset: &EmbeddingDataset, mut sink: W) -> Result<(), EmbsError> {
    sink.write_all(&dataset.to_bytes())?;
    sink.flush()?;
    Ok(())
}

pub fn read_embs<R: Read>(mut source: R) -> Result<EmbeddingDataset, EmbsError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    EmbeddingDataset::from_bytes(&bytes)
}

/// A subset of one split: strictly increasing indices into the parent dataset.
#[derive(Debug, Clone)]
pub struct SplitView<'a> {
    dataset: &'a EmbeddingDataset,
    split: Split,
    indices: Vec<usize>,
}

impl<'a> SplitView<'a> {
    /// Narrows the view to `indices`, which must be a sorted subset of the
    /// current indices.
    pub fn with_indices(&self, indices: Vec<usize>) -> SplitView<'a> {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.iter().all(|i| self.dataset.splits[*i] == self.split));
        SplitView {
            dataset: self.dataset,
            split: self.split,
            indices,
        }
    }

    pub fn dataset(&self) -> &'a EmbeddingDataset {
        self.dataset
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Embedding of the `k`-th example of the view.
    pub fn row(&self, k: usize) -> &'a [f32] {
        self.dataset.row(self.indices[k])
    }

    pub fn labels(&self) -> Vec<u32> {
        self.indices.iter().map(|&i| self.dataset.labels[i]).collect()
    }

    pub fn groups(&self) -> Vec<u32> {
        self.indices.iter().map(|&i| self.dataset.groups[i]).collect()
    }

    pub fn group_counts(&self) -> Vec<u64> {
        let mut c = vec![0; self.dataset.group_count as usize];
        for &i in &self.indices {
            c[self.dataset.groups[i] as usize] += 1;
        }
        c
    }
}
