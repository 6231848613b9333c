//! Dissimilarities between observation vectors.
//!
//! [`DissimilarityKind::Wasserstein`] is the squared L2 Wasserstein distance.
//! The other kinds keep only part of the information in a histogram and
//! exist for comparison runs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{center_radius_sq, check_dims, wasserstein_parts_unchecked, ObservationVector, QuantileProfile};

/// A squared-distance-like dissimilarity between two observations of the
/// same dimension.
///
/// Callers validate dimensions beforehand; implementations may assume them
/// equal.
pub trait Dissimilarity {
    fn dissimilarity(&self, a: &ObservationVector, b: &ObservationVector) -> f64;
}

impl<T: Dissimilarity + ?Sized> Dissimilarity for &T {
    fn dissimilarity(&self, a: &ObservationVector, b: &ObservationVector) -> f64 {
        (**self).dissimilarity(a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DissimilarityKind {
    /// Squared L2 Wasserstein distance.
    #[serde(rename = "dW")]
    Wasserstein,
    /// Center component only: `sum w (dc)^2`.
    #[serde(rename = "dC")]
    Center,
    /// Radius component only: `sum w (dr)^2`, without the 1/3 factor.
    #[serde(rename = "dR")]
    Radius,
    /// Squared difference of histogram means.
    #[serde(rename = "dM")]
    Mean,
    /// Squared difference of histogram standard deviations.
    #[serde(rename = "dS")]
    StdDev,
    /// Interval distance between `[min, max]` supports.
    #[serde(rename = "dI1")]
    IntervalMinMax,
    /// Interval distance between `[mean - std, mean + std]`.
    #[serde(rename = "dI2")]
    IntervalMeanStd,
}

impl DissimilarityKind {
    pub const ALL: [DissimilarityKind; 7] = [
        DissimilarityKind::Wasserstein,
        DissimilarityKind::Center,
        DissimilarityKind::Radius,
        DissimilarityKind::Mean,
        DissimilarityKind::StdDev,
        DissimilarityKind::IntervalMinMax,
        DissimilarityKind::IntervalMeanStd,
    ];

    pub fn code(self) -> &'static str {
        match self {
            DissimilarityKind::Wasserstein => "dW",
            DissimilarityKind::Center => "dC",
            DissimilarityKind::Radius => "dR",
            DissimilarityKind::Mean => "dM",
            DissimilarityKind::StdDev => "dS",
            DissimilarityKind::IntervalMinMax => "dI1",
            DissimilarityKind::IntervalMeanStd => "dI2",
        }
    }

    /// Dimension-checked evaluation.
    pub fn compute(self, a: &ObservationVector, b: &ObservationVector) -> Result<f64> {
        check_dims(a, b)?;
        Ok(self.dissimilarity(a, b))
    }

    fn per_variable(self, a: &QuantileProfile, b: &QuantileProfile) -> f64 {
        match self {
            DissimilarityKind::Wasserstein => {
                let (c, r) = center_radius_sq(a, b);
                c + r / 3.0
            }
            DissimilarityKind::Center => center_radius_sq(a, b).0,
            DissimilarityKind::Radius => center_radius_sq(a, b).1,
            DissimilarityKind::Mean => sq(a.mean() - b.mean()),
            DissimilarityKind::StdDev => sq(a.std_dev() - b.std_dev()),
            DissimilarityKind::IntervalMinMax => interval_sq(a.support(), b.support()),
            DissimilarityKind::IntervalMeanStd => interval_sq(mean_std_interval(a), mean_std_interval(b)),
        }
    }
}

fn sq(x: f64) -> f64 {
    x * x
}

fn mean_std_interval(p: &QuantileProfile) -> (f64, f64) {
    let (m, s) = (p.mean(), p.std_dev());
    (m - s, m + s)
}

/// Squared L2 distance between intervals, `(dlower^2 + dupper^2) / 2`.
///
/// Equals `(dmid)^2 + (dhalfwidth)^2` and reduces to the squared Euclidean
/// distance on degenerate intervals.
pub fn interval_sq(a: (f64, f64), b: (f64, f64)) -> f64 {
    (sq(a.0 - b.0) + sq(a.1 - b.1)) / 2.0
}

impl Dissimilarity for DissimilarityKind {
    fn dissimilarity(&self, a: &ObservationVector, b: &ObservationVector) -> f64 {
        debug_assert_eq!(a.dim(), b.dim());
        if *self == DissimilarityKind::Wasserstein {
            return wasserstein_parts_unchecked(a, b).total();
        }
        a.profiles()
            .iter()
            .zip(b.profiles())
            .map(|(pa, pb)| self.per_variable(pa, pb))
            .sum()
    }
}

impl fmt::Display for DissimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for DissimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DissimilarityKind::ALL
            .into_iter()
            .find(|k| k.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown dissimilarity '{s}'")))
    }
}

/// Dimension-checked evaluation of any [`DissimilarityKind`].
pub fn alt_dissimilarity(kind: DissimilarityKind, a: &ObservationVector, b: &ObservationVector) -> Result<f64> {
    kind.compute(a, b)
}
