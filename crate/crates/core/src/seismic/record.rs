use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SeismicError;
use crate::runtime::{read_blob, write_blob};

/// Time series at a set of points: `nt x npoints`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub coords: Vec<Vec<f64>>,
    pub nt: usize,
    pub dt: f64,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RecordHeader {
    nt: usize,
    dt: f64,
    coordinates: Vec<Vec<f64>>,
}

impl ShotRecord {
    pub fn zeros(coords: &[Vec<f64>], nt: usize, dt: f64) -> Self {
        ShotRecord {
            coords: coords.to_vec(),
            nt,
            dt,
            data: vec![0.0; nt * coords.len()],
        }
    }

    pub fn new(
        coords: &[Vec<f64>],
        nt: usize,
        dt: f64,
        data: Vec<f64>,
    ) -> Result<Self, SeismicError> {
        if data.len() != nt * coords.len() {
            return Err(SeismicError::ShapeMismatch(format!(
                "{} samples for {nt} steps x {} points",
                data.len(),
                coords.len()
            )));
        }
        Ok(ShotRecord {
            coords: coords.to_vec(),
            nt,
            dt,
            data,
        })
    }

    pub fn npoints(&self) -> usize {
        self.coords.len()
    }

    /// Samples of point `p` over time.
    pub fn trace(&self, p: usize) -> Vec<f64> {
        (0..self.nt)
            .map(|t| self.data[t * self.npoints() + p])
            .collect()
    }

    pub fn dot(&self, other: &ShotRecord) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn save(&self, base: &Path) -> Result<(), SeismicError> {
        let header = RecordHeader {
            nt: self.nt,
            dt: self.dt,
            coordinates: self.coords.clone(),
        };
        Ok(write_blob(base, &self.data, &header)?)
    }

    pub fn load(base: &Path) -> Result<Self, SeismicError> {
        let (data, h): (Vec<f64>, RecordHeader) = read_blob(base)?;
        Self::new(&h.coordinates, h.nt, h.dt, data)
    }
}

/// `Phi = 1/2 sum (syn - obs)^2` and the residual `syn - obs`.
pub fn objective(
    synthetic: &ShotRecord,
    observed: &ShotRecord,
) -> Result<(f64, ShotRecord), SeismicError> {
    if synthetic.nt != observed.nt || synthetic.npoints() != observed.npoints() {
        return Err(SeismicError::ShapeMismatch(format!(
            "records {}x{} and {}x{}",
            synthetic.nt,
            synthetic.npoints(),
            observed.nt,
            observed.npoints()
        )));
    }
    let data: Vec<f64> = synthetic
        .data
        .iter()
        .zip(&observed.data)
        .map(|(s, o)| s - o)
        .collect();
    let phi = 0.5 * data.iter().map(|r| r * r).sum::<f64>();
    Ok((
        phi,
        ShotRecord {
            data,
            ..synthetic.clone()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_is_quadratic() {
        let c = vec![vec![0.0, 0.0]];
        let syn = ShotRecord::new(&c, 3, 1.0, vec![1.0, 2.0, 3.0]).unwrap();
        let zero = ShotRecord::zeros(&c, 3, 1.0);
        let (phi, r) = objective(&syn, &syn).unwrap();
        assert_eq!(phi, 0.0);
        assert!(r.data.iter().all(|&v| v == 0.0));
        let (phi, _) = objective(&syn, &zero).unwrap();
        assert_eq!(phi, 7.0);
        let double = ShotRecord::new(&c, 3, 1.0, vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(objective(&double, &zero).unwrap().0, 4.0 * phi);
        assert!(objective(&syn, &ShotRecord::zeros(&c, 4, 1.0)).is_err());
    }
}
