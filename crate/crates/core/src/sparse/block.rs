use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{CsrMatrix, Triplets};
use crate::{Error, Result};

/// Named unknown groups in the order they appear in the monolithic vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    names: Vec<&'static str>,
    sizes: Vec<usize>,
}

impl BlockLayout {
    pub fn new(groups: &[(&'static str, usize)]) -> Self {
        Self {
            names: groups.iter().map(|g| g.0).collect(),
            sizes: groups.iter().map(|g| g.1).collect(),
        }
    }

    pub fn n_groups(&self) -> usize {
        self.names.len()
    }

    pub fn size(&self, group: usize) -> usize {
        self.sizes[group]
    }

    pub fn name(&self, group: usize) -> &'static str {
        self.names[group]
    }

    pub fn offset(&self, group: usize) -> usize {
        self.sizes[..group].iter().sum()
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Slices a monolithic vector into per-group segments.
    pub fn split<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.sizes.len());
        let mut start = 0;
        for &s in &self.sizes {
            out.push(&x[start..start + s]);
            start += s;
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Block {
    Matrix(CsrMatrix),
    Zero,
}

/// A block-structured linear system. Every `(row, col)` block must be either
/// set or explicitly declared zero before assembly.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    layout: BlockLayout,
    blocks: BTreeMap<(usize, usize), Block>,
    rhs: Vec<Option<Vec<f64>>>,
}

impl BlockSystem {
    pub fn new(layout: BlockLayout) -> Self {
        let n = layout.n_groups();
        Self {
            layout,
            blocks: BTreeMap::new(),
            rhs: vec![None; n],
        }
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn set_block(&mut self, row: usize, col: usize, m: CsrMatrix) -> Result<()> {
        let expected = (self.layout.size(row), self.layout.size(col));
        if m.shape() != expected {
            return Err(Error::DimensionMismatch {
                what: "block shape",
                expected: expected.0 * expected.1,
                found: m.nrows() * m.ncols(),
            });
        }
        self.blocks.insert((row, col), Block::Matrix(m));
        Ok(())
    }

    pub fn set_zero(&mut self, row: usize, col: usize) {
        self.blocks.insert((row, col), Block::Zero);
    }

    pub fn set_rhs(&mut self, row: usize, b: Vec<f64>) -> Result<()> {
        if b.len() != self.layout.size(row) {
            return Err(Error::DimensionMismatch {
                what: "right-hand side segment",
                expected: self.layout.size(row),
                found: b.len(),
            });
        }
        self.rhs[row] = Some(b);
        Ok(())
    }

    /// Monolithic matrix in layout order.
    pub fn assemble_matrix(&self) -> Result<CsrMatrix> {
        let n = self.layout.n_groups();
        let total = self.layout.total();
        let mut nnz = 0;
        for r in 0..n {
            for c in 0..n {
                match self.blocks.get(&(r, c)) {
                    None => {
                        return Err(Error::MissingBlock {
                            row: self.layout.name(r),
                            col: self.layout.name(c),
                        })
                    }
                    Some(Block::Matrix(m)) => nnz += m.nnz(),
                    Some(Block::Zero) => {}
                }
            }
        }
        let mut t = Triplets::with_capacity(total, total, nnz);
        for (&(r, c), block) in &self.blocks {
            if let Block::Matrix(m) = block {
                let (ro, co) = (self.layout.offset(r), self.layout.offset(c));
                for i in 0..m.nrows() {
                    let (cols, vals) = m.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        t.push(ro + i, co + j, v);
                    }
                }
            }
        }
        Ok(t.into_csr())
    }

    /// Concatenated right-hand side; unset segments are zero.
    pub fn assemble_rhs(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.layout.total());
        for (g, seg) in self.rhs.iter().enumerate() {
            match seg {
                Some(s) => b.extend_from_slice(s),
                None => b.extend(core::iter::repeat(0.0).take(self.layout.size(g))),
            }
        }
        b
    }
}

/// Monolithic CSR of `system` in its declared ordering.
pub fn assemble_block_matrix(system: &BlockSystem) -> Result<CsrMatrix> {
    system.assemble_matrix()
}
