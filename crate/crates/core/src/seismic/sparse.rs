use super::model::linear;
use super::{Model, SeismicError};

/// Multilinear interpolation weights of `coord` on a grid of `shape` nodes
/// starting at `origin` with spacing `h`.
///
/// Returns the enclosing nodes with nonzero weight; a point on a node has a
/// single weight of 1.
pub fn interp_weights(
    coord: &[f64],
    origin: &[f64],
    h: f64,
    shape: &[usize],
) -> Result<Vec<(Vec<i64>, f64)>, SeismicError> {
    let mut base = Vec::with_capacity(coord.len());
    let mut frac = Vec::with_capacity(coord.len());
    for ((&c, &o), &n) in coord.iter().zip(origin).zip(shape) {
        let pos = (c - o) / h;
        if !(pos >= 0.0 && pos <= (n - 1) as f64) {
            return Err(SeismicError::OutsideDomain(coord.to_vec()));
        }
        let mut b = pos.floor();
        let mut a = pos - b;
        // Snap positions within rounding of a node onto it.
        if a > 1.0 - 1e-12 {
            b += 1.0;
            a = 0.0;
        } else if a < 1e-12 {
            a = 0.0;
        }
        base.push(b as i64);
        frac.push(a);
    }
    let ndim = coord.len();
    let mut out = Vec::with_capacity(1 << ndim);
    for corner in 0..1usize << ndim {
        let mut w = 1.0;
        let mut idx = Vec::with_capacity(ndim);
        for d in 0..ndim {
            let up = (corner >> (ndim - 1 - d)) & 1 == 1;
            w *= if up { frac[d] } else { 1.0 - frac[d] };
            idx.push(base[d] + i64::from(up));
        }
        if w != 0.0 {
            out.push((idx, w));
        }
    }
    Ok(out)
}

/// Off-grid points located on a padded model grid, with `2^ndim` corner
/// slots each (unused slots carry weight 0 at the base node).
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePointSet {
    pub coords: Vec<Vec<f64>>,
    pub ndim: usize,
    pub ncorners: usize,
    /// `npoints x ncorners x ndim` indices into the padded grid.
    pub indices: Vec<i64>,
    /// `npoints x ncorners`.
    pub weights: Vec<f64>,
}

impl SparsePointSet {
    /// Locates physical `coords` (metres from the first interior node).
    pub fn locate(coords: &[Vec<f64>], model: &Model, halo: usize) -> Result<Self, SeismicError> {
        let ndim = model.ndim();
        let ncorners = 1 << ndim;
        let off = model.offset(halo) as i64;
        let origin = vec![0.0; ndim];
        let mut indices = Vec::with_capacity(coords.len() * ncorners * ndim);
        let mut weights = Vec::with_capacity(coords.len() * ncorners);
        for c in coords {
            if c.len() != ndim {
                return Err(SeismicError::OutsideDomain(c.clone()));
            }
            let pairs = interp_weights(c, &origin, model.h, &model.shape)?;
            let base = pairs[0].0.clone();
            for k in 0..ncorners {
                let (idx, w) = pairs.get(k).cloned().unwrap_or((base.clone(), 0.0));
                indices.extend(idx.iter().map(|i| i + off));
                weights.push(w);
            }
        }
        Ok(SparsePointSet {
            coords: coords.to_vec(),
            ndim,
            ncorners,
            indices,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn corners(&self, p: usize) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        (0..self.ncorners).map(move |c| {
            let k = p * self.ncorners + c;
            (
                &self.indices[k * self.ndim..(k + 1) * self.ndim],
                self.weights[k],
            )
        })
    }
}

fn flat(idx: &[i64], shape: &[usize]) -> usize {
    let u: Vec<usize> = idx.iter().map(|&i| i as usize).collect();
    linear(&u, shape)
}

/// `field[node] += weight * value * scale` for every point and corner.
pub fn inject(
    field: &mut [f64],
    shape: &[usize],
    points: &SparsePointSet,
    values: &[f64],
    scale: f64,
) {
    for (p, &v) in values.iter().enumerate() {
        for (idx, w) in points.corners(p) {
            field[flat(idx, shape)] += w * v * scale;
        }
    }
}

/// Interpolated value of `field` at every point; the transpose of [`inject`].
pub fn sample(field: &[f64], shape: &[usize], points: &SparsePointSet) -> Vec<f64> {
    (0..points.len())
        .map(|p| {
            points
                .corners(p)
                .map(|(idx, w)| w * field[flat(idx, shape)])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_and_midpoint() {
        let w = interp_weights(&[20.0, 30.0], &[0.0, 0.0], 10.0, &[5, 5]).unwrap();
        assert_eq!(w, vec![(vec![2, 3], 1.0)]);
        let w = interp_weights(&[25.0, 35.0], &[0.0, 0.0], 10.0, &[5, 5]).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.iter().all(|(_, v)| *v == 0.25));
        assert!(interp_weights(&[41.0, 0.0], &[0.0, 0.0], 10.0, &[5, 5]).is_err());
        assert!(interp_weights(&[-1.0, 0.0], &[0.0, 0.0], 10.0, &[5, 5]).is_err());
    }

    #[test]
    fn uniform_field_samples_to_its_value() {
        let model = Model::homogeneous(&[6, 6], 10.0, 2, 1.5).unwrap();
        let pts = SparsePointSet::locate(&[vec![12.5, 33.0], vec![50.0, 0.0]], &model, 1).unwrap();
        let shape = model.padded_shape(1);
        let field = vec![2.5; shape.iter().product()];
        for v in sample(&field, &shape, &pts) {
            assert!((v - 2.5).abs() < 1e-15);
        }
    }
}
