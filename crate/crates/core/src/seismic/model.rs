use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SeismicError;
use crate::runtime::{read_blob, write_blob};

/// Squared slowness on a regular grid with an absorbing layer.
///
/// Units: `h` in metres, velocity in km/s, so `m` is in ms²/m² and times
/// are in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    /// Interior (physical) grid points per dimension.
    pub shape: Vec<usize>,
    pub h: f64,
    pub nbpml: usize,
    /// Squared slowness on the interior, row-major.
    pub m: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    shape: Vec<usize>,
    h: f64,
    nbpml: usize,
}

impl Model {
    pub fn new(shape: &[usize], h: f64, nbpml: usize, m: Vec<f64>) -> Result<Self, SeismicError> {
        if !(2..=3).contains(&shape.len()) || shape.iter().any(|&n| n < 2) {
            return Err(SeismicError::InvalidModel(format!(
                "unsupported shape {shape:?}"
            )));
        }
        if h.is_nan() || h <= 0.0 {
            return Err(SeismicError::InvalidModel(format!(
                "spacing {h} must be positive"
            )));
        }
        if m.len() != shape.iter().product::<usize>() {
            return Err(SeismicError::InvalidModel(format!(
                "{} values for shape {shape:?}",
                m.len()
            )));
        }
        if let Some(bad) = m.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(SeismicError::InvalidModel(format!(
                "squared slowness {bad} must be positive"
            )));
        }
        Ok(Model {
            shape: shape.to_vec(),
            h,
            nbpml,
            m,
        })
    }

    pub fn from_velocity(
        shape: &[usize],
        h: f64,
        nbpml: usize,
        velocity: &[f64],
    ) -> Result<Self, SeismicError> {
        Self::new(
            shape,
            h,
            nbpml,
            velocity.iter().map(|c| 1.0 / (c * c)).collect(),
        )
    }

    pub fn homogeneous(
        shape: &[usize],
        h: f64,
        nbpml: usize,
        velocity: f64,
    ) -> Result<Self, SeismicError> {
        let n = shape.iter().product();
        Self::from_velocity(shape, h, nbpml, &vec![velocity; n])
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn m_min(&self) -> f64 {
        self.m.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn vmax(&self) -> f64 {
        1.0 / self.m_min().sqrt()
    }

    /// Physical extent `(n - 1) * h` per dimension.
    pub fn extent(&self) -> Vec<f64> {
        self.shape
            .iter()
            .map(|&n| (n - 1) as f64 * self.h)
            .collect()
    }

    /// Grid index offset of physical node 0 in the padded grid.
    pub fn offset(&self, halo: usize) -> usize {
        self.nbpml + halo
    }

    pub fn padded_shape(&self, halo: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&n| n + 2 * (self.nbpml + halo))
            .collect()
    }

    /// `m` on the padded grid with edge values replicated outward.
    pub fn padded_m(&self, halo: usize) -> Vec<f64> {
        let pshape = self.padded_shape(halo);
        let off = self.offset(halo);
        let mut out = Vec::with_capacity(pshape.iter().product());
        for_each_index(&pshape, |idx| {
            let src: Vec<usize> = idx
                .iter()
                .zip(&self.shape)
                .map(|(&p, &n)| p.saturating_sub(off).min(n - 1))
                .collect();
            out.push(self.m[linear(&src, &self.shape)]);
        });
        out
    }

    /// Adjoint of [`Model::padded_m`]: sums every padded value onto the
    /// interior node it was replicated from.
    pub fn fold_padded(&self, halo: usize, padded: &[f64]) -> Vec<f64> {
        let pshape = self.padded_shape(halo);
        let off = self.offset(halo);
        let mut out = vec![0.0; self.m.len()];
        let mut k = 0;
        for_each_index(&pshape, |idx| {
            let src: Vec<usize> = idx
                .iter()
                .zip(&self.shape)
                .map(|(&p, &n)| p.saturating_sub(off).min(n - 1))
                .collect();
            out[linear(&src, &self.shape)] += padded[k];
            k += 1;
        });
        out
    }

    pub fn save(&self, base: &Path) -> Result<(), SeismicError> {
        let header = ModelHeader {
            shape: self.shape.clone(),
            h: self.h,
            nbpml: self.nbpml,
        };
        Ok(write_blob(base, &self.m, &header)?)
    }

    pub fn load(base: &Path) -> Result<Self, SeismicError> {
        let (m, header): (Vec<f64>, ModelHeader) = read_blob(base)?;
        Self::new(&header.shape, header.h, header.nbpml, m)
    }
}

pub(crate) fn linear(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// Visits every multi-index of `shape` in row-major order.
pub(crate) fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize])) {
    if shape.contains(&0) {
        return;
    }
    let mut idx = vec![0; shape.len()];
    loop {
        f(&idx);
        let mut d = shape.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}
