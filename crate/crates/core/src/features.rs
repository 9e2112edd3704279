//! Complex CIRs to real network inputs, standardized per dimension.

use crate::channel::CirRecord;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// How a complex CIR becomes a real vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// `|X|` per tap; dimension `D`.
    #[default]
    Magnitude,
    /// Real parts followed by imaginary parts; dimension `2D`.
    RealImag,
}

impl FeatureMode {
    pub fn dim(self, cir_dim: usize) -> usize {
        match self {
            FeatureMode::Magnitude => cir_dim,
            FeatureMode::RealImag => 2 * cir_dim,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::Magnitude => "magnitude",
            FeatureMode::RealImag => "real_imag",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "magnitude" => Some(FeatureMode::Magnitude),
            "real_imag" => Some(FeatureMode::RealImag),
            _ => None,
        }
    }
}

/// Raw feature matrix, one record per column.
pub fn feature_matrix<'a>(
    records: impl IntoIterator<Item = &'a CirRecord>,
    mode: FeatureMode,
) -> Result<Matrix> {
    let columns: Vec<Vec<f64>> = records
        .into_iter()
        .map(|r| match mode {
            FeatureMode::Magnitude => r.cir.iter().map(|c| c.norm()).collect(),
            FeatureMode::RealImag => r
                .cir
                .iter()
                .map(|c| c.re)
                .chain(r.cir.iter().map(|c| c.im))
                .collect(),
        })
        .collect();
    if columns.is_empty() {
        return Err(Error::Domain(
            "cannot build features from zero records".into(),
        ));
    }
    Matrix::from_columns(&columns)
}

/// Per-dimension mean and standard deviation of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mode: FeatureMode,
    pub mean: Vec<f64>,
    /// `None` marks a zero-variance dimension, which is only mean-centred.
    pub std: Vec<Option<f64>>,
}

impl NormStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Indices of dimensions that had no spread in the training set.
    pub fn zero_variance_dims(&self) -> Vec<usize> {
        self.std
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.is_none().then_some(i))
            .collect()
    }

    pub fn has_zero_variance(&self) -> bool {
        self.std.iter().any(Option::is_none)
    }

    pub fn fit(raw: &Matrix, mode: FeatureMode) -> Self {
        let n = raw.cols() as f64;
        let mut mean = Vec::with_capacity(raw.rows());
        let mut std = Vec::with_capacity(raw.rows());
        for r in 0..raw.rows() {
            let row = raw.row(r);
            let m = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(m);
            // Spread indistinguishable from rounding noise counts as none.
            std.push((sd > 1e-12 * m.abs() && sd > 1e-300).then_some(sd));
        }
        Self { mode, mean, std }
    }

    /// Standardizes a raw feature matrix with these statistics.
    pub fn transform(&self, raw: &Matrix) -> Result<Matrix> {
        if raw.rows() != self.dim() {
            return Err(crate::error::shape_err(
                "NormStats::transform",
                format!("{} feature rows", self.dim()),
                format!("{} rows", raw.rows()),
            ));
        }
        let mut out = raw.clone();
        let cols = out.cols();
        let data = out.data_mut();
        for r in 0..self.dim() {
            let (m, s) = (self.mean[r], self.std[r]);
            for v in &mut data[r * cols..(r + 1) * cols] {
                *v = match s {
                    Some(s) => (*v - m) / s,
                    None => *v - m,
                };
            }
        }
        Ok(out)
    }

    pub fn apply<'a>(&self, records: impl IntoIterator<Item = &'a CirRecord>) -> Result<Matrix> {
        self.transform(&feature_matrix(records, self.mode)?)
    }
}

/// Fits statistics on `records` and returns their standardized features.
pub fn normalize<'a>(
    records: impl IntoIterator<Item = &'a CirRecord>,
    mode: FeatureMode,
) -> Result<(Matrix, NormStats)> {
    let raw = feature_matrix(records, mode)?;
    let stats = NormStats::fit(&raw, mode);
    Ok((stats.transform(&raw)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn rec(v: &[(f64, f64)]) -> CirRecord {
        CirRecord {
            node_id: 1,
            time_index: 0,
            cir: v.iter().map(|&(a, b)| Complex64::new(a, b)).collect(),
            is_alice: true,
        }
    }

    #[test]
    fn constant_input_maps_to_zero() {
        let rs = vec![rec(&[(1.0, 1.0), (0.0, 2.0)]); 5];
        let (x, stats) = normalize(&rs, FeatureMode::Magnitude).unwrap();
        assert!(x.data().iter().all(|&v| v.abs() < 1e-15));
        assert_eq!(stats.zero_variance_dims(), vec![0, 1]);
    }

    #[test]
    fn unit_moments_on_training_set() {
        let rs: Vec<_> = (0..7)
            .map(|i| rec(&[(i as f64, 1.0), (3.0, -(i * i) as f64), (0.5, 0.5)]))
            .collect();
        for mode in [FeatureMode::Magnitude, FeatureMode::RealImag] {
            let (x, stats) = normalize(&rs, mode).unwrap();
            assert_eq!(x.rows(), mode.dim(3));
            for r in 0..x.rows() {
                let row = x.row(r);
                let m = row.iter().sum::<f64>() / 7.0;
                let v = row.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 7.0;
                assert!(m.abs() < 1e-9);
                if stats.std[r].is_some() {
                    assert!((v - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn held_out_data_is_shifted() {
        let train: Vec<_> = (0..4).map(|i| rec(&[(i as f64, 0.0)])).collect();
        let (_, stats) = normalize(&train, FeatureMode::Magnitude).unwrap();
        let test = stats.apply(&[rec(&[(10.0, 0.0)])]).unwrap();
        assert!(test.get(0, 0) > 1.0);
        assert!(normalize(&[], FeatureMode::Magnitude).is_err());
    }
}
