//! Synthetic histogram datasets with known cluster structure.
//!
//! Every histogram summarizes raw draws from a location-shifted Gamma
//! distribution with prescribed mean, standard deviation and shape. Within a
//! dataset the clusters differ in the Normal law of exactly one of those
//! three parameters. Each histogram variable gets its own Normal means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{build_equidepth, ObservationVector};

/// Spread of every per-observation parameter around its Normal mean.
pub const PARAMETER_SPREAD: f64 = 0.1;
/// Lower bound of the truncated Normals used for the std and shape.
pub const TRUNCATION_FLOOR: f64 = 0.05;
/// Minimum pairwise gap between the cluster means of the varying parameter.
pub const MIN_CLUSTER_GAP: f64 = 0.5;
/// Normal means are drawn uniformly from `[0, PARAMETER_RANGE]`.
pub const PARAMETER_RANGE: f64 = 5.0;

/// The Gamma parameter whose law differs between clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VaryingParameter {
    Mean,
    Std,
    Shape,
}

impl std::str::FromStr for VaryingParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" | "m" => Ok(VaryingParameter::Mean),
            "std" | "s" => Ok(VaryingParameter::Std),
            "shape" | "h" => Ok(VaryingParameter::Shape),
            _ => Err(Error::InvalidSpec(format!("unknown varying parameter '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub dimension: usize,
    pub n_clusters: usize,
    pub varying: VaryingParameter,
    pub n_per_cluster: usize,
    pub samples_per_histogram: usize,
    pub bins: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(dimension: usize, n_clusters: usize, varying: VaryingParameter, seed: u64) -> Self {
        Self {
            dimension,
            n_clusters,
            varying,
            n_per_cluster: 100,
            samples_per_histogram: 1000,
            bins: 10,
            seed,
        }
    }

    /// The six benchmark configurations.
    ///
    /// | preset | d  | k | varying |
    /// |--------|----|---|---------|
    /// | 1      | 2  | 3 | mean    |
    /// | 2      | 10 | 5 | mean    |
    /// | 3      | 2  | 3 | shape   |
    /// | 4      | 10 | 5 | shape   |
    /// | 5      | 2  | 3 | std     |
    /// | 6      | 10 | 5 | std     |
    pub fn preset(db: u8, seed: u64) -> Result<Self> {
        let (d, k, varying) = match db {
            1 => (2, 3, VaryingParameter::Mean),
            2 => (10, 5, VaryingParameter::Mean),
            3 => (2, 3, VaryingParameter::Shape),
            4 => (10, 5, VaryingParameter::Shape),
            5 => (2, 3, VaryingParameter::Std),
            6 => (10, 5, VaryingParameter::Std),
            _ => return Err(Error::InvalidSpec(format!("unknown preset DB{db}; expected 1 to 6"))),
        };
        Ok(Self::new(d, k, varying, seed))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        if self.n_clusters < 2 {
            return Err(Error::InvalidSpec("at least two clusters are required".into()));
        }
        if self.n_per_cluster == 0 || self.samples_per_histogram == 0 || self.bins == 0 {
            return Err(Error::InvalidSpec(
                "cluster size, sample count and bin count must be positive".into(),
            ));
        }
        // k points spaced MIN_CLUSTER_GAP apart must fit in the range.
        if (self.n_clusters - 1) as f64 * MIN_CLUSTER_GAP > PARAMETER_RANGE {
            return Err(Error::InvalidSpec(format!(
                "{} clusters cannot be separated by {MIN_CLUSTER_GAP} within [0, {PARAMETER_RANGE}]",
                self.n_clusters
            )));
        }
        Ok(())
    }
}

/// Normal means behind one histogram variable of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableParams {
    /// Mean of the varying parameter in each cluster.
    pub cluster_means: Vec<f64>,
    /// Dataset-wide means of (mean, std, shape); the varying entry is unused.
    pub global_means: [f64; 3],
}

/// Normal means behind a generated dataset, one entry per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub variables: Vec<VariableParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub observations: Vec<ObservationVector>,
    pub labels: Vec<usize>,
    pub spec: DatasetSpec,
    pub params: GenerationParams,
}

/// `n` draws with mean `m`, standard deviation `s` and skewness
/// `2 / sqrt(shape)`: a Gamma with the given shape and scale
/// `s / sqrt(shape)`, shifted to mean `m`.
pub fn sample_gamma3<R: Rng + ?Sized>(m: f64, s: f64, shape: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidSpec(format!("standard deviation must be positive, got {s}")));
    }
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::InvalidSpec(format!("shape must be positive, got {shape}")));
    }
    let scale = s / shape.sqrt();
    let location = m - shape * scale;
    let gamma = Gamma::new(shape, scale).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    Ok((0..n).map(|_| location + gamma.sample(rng)).collect())
}

fn truncated_normal<R: Rng + ?Sized>(normal: &Normal<f64>, floor: f64, rng: &mut R) -> f64 {
    loop {
        let x = normal.sample(rng);
        if x > floor {
            return x;
        }
    }
}

fn separated_means<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let means: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..=PARAMETER_RANGE)).collect();
        let separated = means
            .iter()
            .enumerate()
            .all(|(i, a)| means[i + 1..].iter().all(|b| (a - b).abs() >= MIN_CLUSTER_GAP));
        if separated {
            return means;
        }
    }
}

fn slot(varying: VaryingParameter) -> usize {
    match varying {
        VaryingParameter::Mean => 0,
        VaryingParameter::Std => 1,
        VaryingParameter::Shape => 2,
    }
}

/// Generates a labeled dataset, cluster by cluster.
///
/// Observation `i` draws from its own ChaCha stream `i + 1` of the seed, so
/// any observation can be regenerated independently.
pub fn generate(spec: &DatasetSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let variables: Vec<VariableParams> = (0..spec.dimension)
        .map(|_| VariableParams {
            cluster_means: separated_means(spec.n_clusters, &mut master),
            global_means: std::array::from_fn(|_| master.random_range(0.0..=PARAMETER_RANGE)),
        })
        .collect();
    let varying = slot(spec.varying);

    let total = spec.n_clusters * spec.n_per_cluster;
    let mut observations = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for c in 0..spec.n_clusters {
        // laws[v] = Normal laws of (mean, std, shape) for variable v in cluster c.
        let laws: Vec<[Normal<f64>; 3]> = variables
            .iter()
            .map(|p| {
                let mut mus = p.global_means;
                mus[varying] = p.cluster_means[c];
                mus.map(|mu| Normal::new(mu, PARAMETER_SPREAD).expect("finite spread"))
            })
            .collect();
        for _ in 0..spec.n_per_cluster {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(observations.len() as u64 + 1);
            let histograms = laws
                .iter()
                .map(|[m_law, s_law, h_law]| {
                    let m = m_law.sample(&mut rng);
                    let s = truncated_normal(s_law, TRUNCATION_FLOOR, &mut rng);
                    let h = truncated_normal(h_law, TRUNCATION_FLOOR, &mut rng);
                    let samples = sample_gamma3(m, s, h, spec.samples_per_histogram, &mut rng)?;
                    build_equidepth(&samples, spec.bins)
                })
                .collect::<Result<Vec<_>>>()?;
            observations.push(ObservationVector::new(histograms)?);
            labels.push(c);
        }
    }
    Ok(LabeledDataset {
        observations,
        labels,
        spec: *spec,
        params: GenerationParams { variables },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let third = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        (mean, var.sqrt(), third / var.powf(1.5))
    }

    #[test]
    fn gamma3_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs = sample_gamma3(3.0, 1.0, 4.0, 1_000_000, &mut rng).unwrap();
        let (mean, std, _) = moments(&xs);
        assert!((mean - 3.0).abs() < 0.01, "mean {mean}");
        assert!((std - 1.0).abs() < 0.01, "std {std}");
    }

    #[test]
    fn gamma3_skewness_for_large_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xs = sample_gamma3(0.0, 2.0, 400.0, 1_000_000, &mut rng).unwrap();
        let (_, _, skew) = moments(&xs);
        assert!((skew - 0.1).abs() < 0.05, "skewness {skew}");
    }

    #[test]
    fn gamma3_single_draw_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let one = sample_gamma3(1.0, 0.5, 2.0, 1, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].is_finite());
        assert!(sample_gamma3(1.0, 0.0, 2.0, 5, &mut rng).is_err());
        assert!(sample_gamma3(1.0, 1.0, -2.0, 5, &mut rng).is_err());
    }

    #[test]
    fn presets() {
        let db1 = DatasetSpec::preset(1, 7).unwrap();
        assert_eq!((db1.dimension, db1.n_clusters, db1.varying), (2, 3, VaryingParameter::Mean));
        let db6 = DatasetSpec::preset(6, 7).unwrap();
        assert_eq!((db6.dimension, db6.n_clusters), (10, 5));
        assert!(DatasetSpec::preset(0, 1).is_err());
        assert!(DatasetSpec::preset(9, 1).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = DatasetSpec::new(2, 1, VaryingParameter::Mean, 0);
        assert!(spec.validate().is_err());
        spec.n_clusters = 12;
        assert!(spec.validate().is_err());
        spec.n_clusters = 3;
        spec.dimension = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn db1_shape_and_bins() {
        let mut spec = DatasetSpec::preset(1, 3).unwrap();
        spec.n_per_cluster = 10;
        let data = generate(&spec).unwrap();
        assert_eq!(data.observations.len(), 30);
        assert_eq!(data.labels.len(), 30);
        for c in 0..3 {
            assert_eq!(data.labels.iter().filter(|&&l| l == c).count(), 10);
        }
        for x in &data.observations {
            assert_eq!(x.dim(), 2);
            for h in x.histograms() {
                assert_eq!(h.len(), 10);
                assert!(h.bins().iter().all(|b| b.weight == 0.1));
            }
        }
        assert_eq!(data.params.variables.len(), 2);
        for p in &data.params.variables {
            let means = &p.cluster_means;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    assert!((means[i] - means[j]).abs() >= MIN_CLUSTER_GAP);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let mut spec = DatasetSpec::preset(6, 7).unwrap();
        spec.n_per_cluster = 3;
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }
}
