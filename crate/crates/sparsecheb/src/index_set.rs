//! Multi-indices, search spaces and the candidate-set algebra of the
//! dimension-incremental detection.

use std::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("dimension {dim} is outside 0..{ambient}")]
    InvalidDimension { dim: usize, ambient: usize },
    #[error("dimension list must be strictly increasing: {0:?}")]
    UnsortedDims(Vec<usize>),
    #[error("dimension lists overlap: {left:?} and {right:?}")]
    DimensionOverlap { left: Vec<usize>, right: Vec<usize> },
    #[error("member of length {found} in a set over {expected} dimensions")]
    LengthMismatch { expected: usize, found: usize },
    #[error("dimension list must not be empty")]
    EmptyDims,
    #[error("invalid search space: {0}")]
    InvalidSpace(&'static str),
}

/// Degrees of one product-basis function, one entry per dimension.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn unit(len: usize, pos: usize) -> Self {
        let mut e = vec![0; len];
        e[pos] = 1;
        Self(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of non-zero entries.
    pub fn nz(&self) -> usize {
        self.0.iter().filter(|&&k| k != 0).count()
    }

    pub fn max_entry(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut e = Vec::with_capacity(self.len() + other.len());
        e.extend_from_slice(&self.0);
        e.extend_from_slice(&other.0);
        MultiIndex(e)
    }

    /// Sub-index made of the entries at `positions`.
    pub fn select(&self, positions: &[usize]) -> MultiIndex {
        MultiIndex(positions.iter().map(|&p| self.0[p]).collect())
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// Full grid `[0, N]^dim`, optionally limited to indices with at most `d_s`
/// non-zero entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchSpace {
    pub dim: usize,
    pub extension: u32,
    pub superposition: Option<usize>,
}

impl SearchSpace {
    pub fn new(dim: usize, extension: u32, superposition: Option<usize>) -> Result<Self, IndexError> {
        if dim == 0 {
            return Err(IndexError::InvalidSpace("dimension must be positive"));
        }
        if extension == 0 {
            return Err(IndexError::InvalidSpace("extension must be positive"));
        }
        if superposition == Some(0) {
            return Err(IndexError::InvalidSpace("superposition dimension must be positive"));
        }
        Ok(Self {
            dim,
            extension,
            superposition,
        })
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        k.len() == self.dim && self.admits_partial(k)
    }

    /// Membership of a sub-index in the projection of the space onto any
    /// dimension list of matching length.
    pub fn admits_partial(&self, k: &MultiIndex) -> bool {
        k.entries().iter().all(|&e| e <= self.extension)
            && self.superposition.map_or(true, |ds| k.nz() <= ds)
    }

    fn check_dims(&self, dims: &[usize]) -> Result<(), IndexError> {
        if dims.is_empty() {
            return Err(IndexError::EmptyDims);
        }
        if let Some(&d) = dims.iter().find(|&&d| d >= self.dim) {
            return Err(IndexError::InvalidDimension {
                dim: d,
                ambient: self.dim,
            });
        }
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IndexError::UnsortedDims(dims.to_vec()));
        }
        Ok(())
    }

    /// All sub-indices over `dims` realized by some member of the space.
    pub fn project(&self, dims: &[usize]) -> Result<IndexSet, IndexError> {
        self.check_dims(dims)?;
        let n = dims.len();
        let mut members = Vec::new();
        let mut cur = vec![0u32; n];
        'outer: loop {
            let k = MultiIndex(cur.clone());
            if self.admits_partial(&k) {
                members.push(k);
            }
            for pos in (0..n).rev() {
                if cur[pos] < self.extension {
                    cur[pos] += 1;
                    for c in cur.iter_mut().skip(pos + 1) {
                        *c = 0;
                    }
                    continue 'outer;
                }
            }
            break;
        }
        Ok(IndexSet {
            dims: dims.to_vec(),
            members,
        })
    }
}

/// Sorted, duplicate-free set of multi-indices over a list of dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    dims: Vec<usize>,
    members: Vec<MultiIndex>,
}

impl IndexSet {
    pub fn new(dims: Vec<usize>, mut members: Vec<MultiIndex>) -> Result<Self, IndexError> {
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IndexError::UnsortedDims(dims));
        }
        if let Some(m) = members.iter().find(|m| m.len() != dims.len()) {
            return Err(IndexError::LengthMismatch {
                expected: dims.len(),
                found: m.len(),
            });
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self { dims, members })
    }

    pub fn empty(dims: Vec<usize>) -> Self {
        Self {
            dims,
            members: Vec::new(),
        }
    }

    /// Dimension list `0..dim`.
    pub fn over_first(dim: usize, members: Vec<MultiIndex>) -> Result<Self, IndexError> {
        Self::new((0..dim).collect(), members)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.members.iter()
    }

    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        self.members.binary_search(k).ok()
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        self.position(k).is_some()
    }

    pub fn union(&self, other: &IndexSet) -> Result<IndexSet, IndexError> {
        if self.dims != other.dims {
            return Err(IndexError::DimensionOverlap {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        let mut members = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            match self.members[i].cmp(&other.members[j]) {
                Ordering::Less => {
                    members.push(self.members[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    members.push(other.members[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    members.push(self.members[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        members.extend_from_slice(&self.members[i..]);
        members.extend_from_slice(&other.members[j..]);
        Ok(IndexSet {
            dims: self.dims.clone(),
            members,
        })
    }

    /// Distinct sub-indices at the given positions of the dimension list.
    pub fn project_positions(&self, positions: &[usize]) -> IndexSet {
        let dims = positions.iter().map(|&p| self.dims[p]).collect();
        let mut members: Vec<MultiIndex> = self.members.iter().map(|k| k.select(positions)).collect();
        members.sort_unstable();
        members.dedup();
        IndexSet { dims, members }
    }

    /// Largest degree per position of the dimension list (0 for an empty set).
    pub fn max_degrees(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.dims.len()];
        for k in &self.members {
            for (o, &e) in out.iter_mut().zip(k.entries()) {
                *o = (*o).max(e);
            }
        }
        out
    }
}

/// `(left x right) ∩ P(Γ)` for disjoint dimension lists.
pub fn candidate_product(
    left: &IndexSet,
    right: &IndexSet,
    space: &SearchSpace,
) -> Result<IndexSet, IndexError> {
    if left.dims.iter().any(|d| right.dims.contains(d)) {
        return Err(IndexError::DimensionOverlap {
            left: left.dims.clone(),
            right: right.dims.clone(),
        });
    }
    for &d in left.dims.iter().chain(&right.dims) {
        if d >= space.dim {
            return Err(IndexError::InvalidDimension {
                dim: d,
                ambient: space.dim,
            });
        }
    }
    let mut dims: Vec<usize> = left.dims.iter().chain(&right.dims).copied().collect();
    dims.sort_unstable();
    // source of each output position: (from_left, position in that set)
    let source: Vec<(bool, usize)> = dims
        .iter()
        .map(|d| match left.dims.iter().position(|x| x == d) {
            Some(p) => (true, p),
            None => (false, right.dims.iter().position(|x| x == d).unwrap()),
        })
        .collect();
    let mut members = Vec::with_capacity(left.len() * right.len());
    for l in &left.members {
        for r in &right.members {
            let k = MultiIndex(
                source
                    .iter()
                    .map(|&(from_left, p)| if from_left { l.0[p] } else { r.0[p] })
                    .collect(),
            );
            if space.admits_partial(&k) {
                members.push(k);
            }
        }
    }
    IndexSet::new(dims, members)
}

/// Adds the (at most) `s` highest-magnitude indices with magnitude at least
/// `delta` to `accum`. Equal magnitudes favour the lexicographically smaller index.
pub fn top_s_union(
    accum: &IndexSet,
    scored: &[(MultiIndex, f64)],
    s: usize,
    delta: f64,
) -> Result<IndexSet, IndexError> {
    let mut kept: Vec<&(MultiIndex, f64)> = scored.iter().filter(|(_, m)| *m >= delta).collect();
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    kept.truncate(s);
    let chosen = IndexSet::new(accum.dims.clone(), kept.into_iter().map(|(k, _)| k.clone()).collect())?;
    accum.union(&chosen)
}
