use crate::error::{Error, Result};

/// One spatial (or serial) regression dataset: responses `y`, an `n x d`
/// covariate matrix stored row-major, and a location per observation.
/// Locations are 1- or 2-dimensional; a time index is a 1-d location.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDataset {
    pub y: Vec<f64>,
    covariates: Vec<f64>,
    n_features: usize,
    pub locations: Vec<Location>,
}

/// A point in the spatial (or temporal) domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    One(f64),
    Two(f64, f64),
}

impl Location {
    pub fn dist(&self, other: &Location) -> f64 {
        match (self, other) {
            (Location::One(a), Location::One(b)) => (a - b).abs(),
            (Location::Two(ax, ay), Location::Two(bx, by)) => {
                ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
            }
            _ => f64::NAN,
        }
    }

    pub fn coords(&self) -> (f64, f64) {
        match *self {
            Location::One(a) => (a, 0.0),
            Location::Two(a, b) => (a, b),
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            Location::One(a) => a.is_finite(),
            Location::Two(a, b) => a.is_finite() && b.is_finite(),
        }
    }
}

impl SpatialDataset {
    pub fn new(y: Vec<f64>, covariates: Vec<f64>, n_features: usize, locations: Vec<Location>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        if covariates.len() != n * n_features {
            return Err(Error::InvalidInput(format!(
                "covariate matrix has {} entries, expected {} ({} rows x {} features)",
                covariates.len(),
                n * n_features,
                n,
                n_features
            )));
        }
        if locations.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} locations for {} responses",
                locations.len(),
                n
            )));
        }
        if y.iter().any(|v| !v.is_finite())
            || covariates.iter().any(|v| !v.is_finite())
            || locations.iter().any(|l| !l.is_finite())
        {
            return Err(Error::InvalidInput("non-finite value in dataset".into()));
        }
        Ok(SpatialDataset { y, covariates, n_features, locations })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Covariate row for observation `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Value of feature `d` for observation `i`.
    pub fn x(&self, i: usize, d: usize) -> f64 {
        self.covariates[i * self.n_features + d]
    }

    /// Reordered copy following `perm` (new index k holds old row perm[k]).
    pub fn permuted(&self, perm: &[usize]) -> SpatialDataset {
        assert_eq!(perm.len(), self.len(), "permutation length mismatch");
        self.subset(perm)
    }

    /// Copy holding the given (old) rows, in order.
    pub fn subset(&self, idx: &[usize]) -> SpatialDataset {
        let mut y = Vec::with_capacity(idx.len());
        let mut covariates = Vec::with_capacity(idx.len() * self.n_features);
        let mut locations = Vec::with_capacity(idx.len());
        for &old in idx {
            y.push(self.y[old]);
            covariates.extend_from_slice(self.row(old));
            locations.push(self.locations[old]);
        }
        SpatialDataset { y, covariates, n_features: self.n_features, locations }
    }
}
