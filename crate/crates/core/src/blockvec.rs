//! Block-structured vectors.
//!
//! A [`BlockVector`] stores the blocks of a point contiguously, in block order.
//! Block indices are zero-based throughout the crate.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

/// Sizes and offsets of the blocks `n_1, ..., n_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl BlockLayout {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidLayout);
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0;
        for &s in &sizes {
            offsets.push(total);
            total += s;
        }
        Ok(Self { sizes, offsets, total })
    }

    /// `m` blocks of equal size `l`.
    pub fn uniform(l: usize, m: usize) -> Result<Self> {
        Self::new(vec![l; m])
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn block_size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Coordinate range of block `i`. Panics if `i` is out of range.
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i] + self.sizes[i]
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.num_blocks() {
            Ok(())
        } else {
            Err(Error::BlockIndexOutOfRange { index: i, blocks: self.num_blocks() })
        }
    }

    /// `Some(l)` when every block has size `l`.
    pub fn uniform_block_size(&self) -> Option<usize> {
        let first = self.sizes[0];
        self.sizes.iter().all(|&s| s == first).then_some(first)
    }
}

/// A point (or gradient) living in a block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    layout: BlockLayout,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn new(layout: BlockLayout, data: Vec<f64>) -> Result<Self> {
        if data.len() != layout.total() {
            return Err(Error::LengthMismatch { expected: layout.total(), found: data.len() });
        }
        Ok(Self { layout, data })
    }

    pub fn zeros(layout: BlockLayout) -> Self {
        let data = vec![0.0; layout.total()];
        Self { layout, data }
    }

    /// Rebuilds a vector from its blocks, in order.
    pub fn assemble<B: AsRef<[f64]>>(layout: BlockLayout, blocks: &[B]) -> Result<Self> {
        if blocks.len() != layout.num_blocks() {
            return Err(Error::LayoutMismatch);
        }
        let mut data = Vec::with_capacity(layout.total());
        for (i, b) in blocks.iter().enumerate() {
            let b = b.as_ref();
            if b.len() != layout.block_size(i) {
                return Err(Error::LengthMismatch { expected: layout.block_size(i), found: b.len() });
            }
            data.extend_from_slice(b);
        }
        Ok(Self { layout, data })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.layout.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.layout.range(i);
        &mut self.data[r]
    }

    /// Checked access to block `i`.
    pub fn block_slice(&self, i: usize) -> Result<&[f64]> {
        self.layout.check_index(i)?;
        Ok(self.block(i))
    }

    /// Inner product restricted to block `i`.
    pub fn block_dot(&self, other: &BlockVector, i: usize) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        self.layout.check_index(i)?;
        Ok(dot(self.block(i), other.block(i)))
    }

    pub fn dot(&self, other: &BlockVector) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm_squared(&self) -> f64 {
        dot(&self.data, &self.data)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}
