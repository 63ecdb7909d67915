use std::collections::BTreeMap;

use super::{GridBuffer, RuntimeError};
use crate::lowering::KernelIR;

/// Host-side arrays of one off-grid point set.
#[derive(Debug)]
pub struct SparseBuffers {
    /// `rows x npoints` samples.
    pub data: GridBuffer,
    /// `npoints x ncorners x ndim` grid indices into the padded grid.
    pub indices: Vec<i64>,
    /// `npoints x ncorners` interpolation weights.
    pub weights: Vec<f64>,
    pub ncorners: usize,
}

impl SparseBuffers {
    pub fn new(
        rows: usize,
        npoints: usize,
        ncorners: usize,
        ndim: usize,
    ) -> Result<Self, RuntimeError> {
        Ok(SparseBuffers {
            data: GridBuffer::new(&[rows, npoints])?,
            indices: vec![0; npoints * ncorners * ndim],
            weights: vec![0.0; npoints * ncorners],
            ncorners,
        })
    }

    pub fn rows(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn npoints(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn duplicate(&self) -> Result<Self, RuntimeError> {
        Ok(SparseBuffers {
            data: self.data.duplicate()?,
            indices: self.indices.clone(),
            weights: self.weights.clone(),
            ncorners: self.ncorners,
        })
    }
}

/// Every buffer a kernel reads or writes, by name.
#[derive(Debug, Default)]
pub struct Workspace {
    pub grids: BTreeMap<String, GridBuffer>,
    pub sparse: BTreeMap<String, SparseBuffers>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Allocates zeroed buffers for every argument of `ir`.
    pub fn for_ir(ir: &KernelIR) -> Result<Self, RuntimeError> {
        let mut ws = Workspace::new();
        for g in &ir.grids {
            ws.grids.insert(
                g.name.clone(),
                GridBuffer::new(&ir.grid_shape(&g.name).unwrap())?,
            );
        }
        for sp in &ir.sparse {
            ws.sparse.insert(
                sp.name.clone(),
                SparseBuffers::new(sp.rows, sp.npoints, sp.ncorners, ir.ndim)?,
            );
        }
        Ok(ws)
    }

    pub fn insert_grid(&mut self, name: &str, buf: GridBuffer) {
        self.grids.insert(name.to_string(), buf);
    }

    pub fn grid(&self, name: &str) -> Result<&GridBuffer, RuntimeError> {
        self.grids
            .get(name)
            .ok_or_else(|| RuntimeError::MissingBuffer(name.into()))
    }

    pub fn grid_mut(&mut self, name: &str) -> Result<&mut GridBuffer, RuntimeError> {
        self.grids
            .get_mut(name)
            .ok_or_else(|| RuntimeError::MissingBuffer(name.into()))
    }

    pub fn sparse(&self, name: &str) -> Result<&SparseBuffers, RuntimeError> {
        self.sparse
            .get(name)
            .ok_or_else(|| RuntimeError::MissingBuffer(name.into()))
    }

    pub fn sparse_mut(&mut self, name: &str) -> Result<&mut SparseBuffers, RuntimeError> {
        self.sparse
            .get_mut(name)
            .ok_or_else(|| RuntimeError::MissingBuffer(name.into()))
    }

    /// Checks that every buffer `ir` needs is present with the right shape.
    pub fn check(&self, ir: &KernelIR) -> Result<(), RuntimeError> {
        for g in &ir.grids {
            let expected = ir.grid_shape(&g.name).unwrap();
            let buf = self.grid(&g.name)?;
            if buf.shape() != expected.as_slice() {
                return Err(RuntimeError::ShapeMismatch {
                    name: g.name.clone(),
                    expected,
                    found: buf.shape().to_vec(),
                });
            }
        }
        for sp in &ir.sparse {
            let buf = self.sparse(&sp.name)?;
            let mismatch = |expected: Vec<usize>, found: Vec<usize>| RuntimeError::ShapeMismatch {
                name: sp.name.clone(),
                expected,
                found,
            };
            if buf.data.shape() != [sp.rows, sp.npoints] {
                return Err(mismatch(
                    vec![sp.rows, sp.npoints],
                    buf.data.shape().to_vec(),
                ));
            }
            if buf.indices.len() != sp.npoints * sp.ncorners * ir.ndim {
                return Err(mismatch(
                    vec![sp.npoints, sp.ncorners, ir.ndim],
                    vec![buf.indices.len()],
                ));
            }
            if buf.weights.len() != sp.npoints * sp.ncorners {
                return Err(mismatch(
                    vec![sp.npoints, sp.ncorners],
                    vec![buf.weights.len()],
                ));
            }
            let bounds = ir.shape.iter().map(|&n| n as i64);
            let ndim = ir.ndim;
            for (k, &i) in buf.indices.iter().enumerate() {
                let n = bounds.clone().nth(k % ndim).unwrap();
                if i < 0 || i >= n {
                    return Err(mismatch(ir.shape.clone(), vec![i as usize]));
                }
            }
        }
        Ok(())
    }

    /// Deep copy of every buffer.
    pub fn duplicate(&self) -> Result<Self, RuntimeError> {
        let mut ws = Workspace::new();
        for (k, v) in &self.grids {
            ws.grids.insert(k.clone(), v.duplicate()?);
        }
        for (k, v) in &self.sparse {
            ws.sparse.insert(k.clone(), v.duplicate()?);
        }
        Ok(ws)
    }
}
