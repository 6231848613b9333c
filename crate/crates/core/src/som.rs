//! Batch self-organizing map whose prototypes are histograms.
//!
//! Each iteration assigns every observation to its best matching unit and
//! then replaces every prototype by the kernel-weighted barycenter of the
//! data, the weight of datum `k` for neuron `j` being `K(j, bmu(k))`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dissimilarity::{Dissimilarity, DissimilarityKind};
use crate::error::{Error, Result};
use crate::histogram::{barycenter_of_refs, check_dims, homogenize_dataset, ObservationVector};

/// Rectangular grid; neuron `i` sits at `(i / cols, i % cols)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridTopology {
    rows: usize,
    cols: usize,
}

impl GridTopology {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::InvalidConfig(format!(
                "a {rows}x{cols} grid needs at least two neurons"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of neurons.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i / self.cols, i % self.cols)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                size: self.len(),
            });
        }
        Ok(())
    }

    /// Manhattan distance between two neurons on the grid.
    pub fn grid_distance(&self, i: usize, j: usize) -> Result<usize> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.manhattan(i, j))
    }

    fn manhattan(&self, i: usize, j: usize) -> usize {
        let (ri, ci) = self.coords(i);
        let (rj, cj) = self.coords(j);
        ri.abs_diff(rj) + ci.abs_diff(cj)
    }
}

pub fn grid_distance(i: usize, j: usize, topo: &GridTopology) -> Result<usize> {
    topo.grid_distance(i, j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SomConfig {
    pub topology: GridTopology,
    pub lambda_initial: f64,
    pub lambda_final: f64,
    pub t_max: usize,
    pub dissimilarity: DissimilarityKind,
    pub rng_seed: u64,
}

impl SomConfig {
    /// Defaults for a dataset of `n` observations: a 10x10 map from 200
    /// observations on, otherwise a square of side `ceil(sqrt(5 sqrt(n)))`;
    /// the initial temperature is half the grid diagonal in Manhattan units,
    /// the final one 0.3, with 50 iterations.
    pub fn default_for(n: usize, dissimilarity: DissimilarityKind, rng_seed: u64) -> Self {
        let side = if n >= 200 {
            10
        } else {
            (5.0 * (n.max(1) as f64).sqrt()).sqrt().ceil() as usize
        };
        let topology = GridTopology::new(side, side).expect("side >= 3");
        Self {
            topology,
            lambda_initial: half_diagonal(&topology),
            lambda_final: 0.3,
            t_max: 50,
            dissimilarity,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        GridTopology::new(self.topology.rows, self.topology.cols)?;
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !finite_pos(self.lambda_initial) || !finite_pos(self.lambda_final) {
            return Err(Error::InvalidConfig("temperatures must be positive".into()));
        }
        if self.lambda_final > self.lambda_initial {
            return Err(Error::InvalidConfig(
                "final temperature exceeds initial temperature".into(),
            ));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidConfig("t_max must be at least 1".into()));
        }
        Ok(())
    }

    /// `lambda(t) = lambda_i (lambda_f / lambda_i)^(t / t_max)`.
    pub fn temperature(&self, t: usize) -> Result<f64> {
        if t > self.t_max {
            return Err(Error::TimeOutOfRange { t, t_max: self.t_max });
        }
        Ok(self.temperature_unchecked(t))
    }

    fn temperature_unchecked(&self, t: usize) -> f64 {
        if t == 0 {
            return self.lambda_initial;
        }
        if t == self.t_max {
            return self.lambda_final;
        }
        let ratio = self.lambda_final / self.lambda_initial;
        self.lambda_initial * ratio.powf(t as f64 / self.t_max as f64)
    }

    /// `K_ij = exp(-d1(i, j)^2 / lambda^2) / lambda` at step `t`.
    pub fn kernel(&self, i: usize, j: usize, t: usize) -> Result<f64> {
        let d = self.topology.grid_distance(i, j)?;
        let lambda = self.temperature(t)?;
        Ok(kernel_value(d, lambda))
    }
}

/// Half the grid diagonal in Manhattan units, floored at 1.
pub fn half_diagonal(topo: &GridTopology) -> f64 {
    (((topo.rows - 1) + (topo.cols - 1)) as f64 / 2.0).max(1.0)
}

fn kernel_value(grid_dist: usize, lambda: f64) -> f64 {
    let d = grid_dist as f64;
    (-(d * d) / (lambda * lambda)).exp() / lambda
}

pub fn temperature(t: usize, cfg: &SomConfig) -> Result<f64> {
    cfg.temperature(t)
}

pub fn kernel(i: usize, j: usize, t: usize, cfg: &SomConfig) -> Result<f64> {
    cfg.kernel(i, j, t)
}

/// Index of the prototype with minimal dissimilarity to `x`; ties go to the
/// lowest index.
pub fn nearest_prototype<D: Dissimilarity + ?Sized>(x: &ObservationVector, prototypes: &[ObservationVector], dis: &D) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, w) in prototypes.iter().enumerate() {
        let d = dis.dissimilarity(x, w);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomMap {
    config: SomConfig,
    prototypes: Vec<ObservationVector>,
    bmu_of: Vec<usize>,
    step: usize,
}

impl SomMap {
    /// Builds a map from explicit prototypes, one per neuron.
    pub fn from_prototypes(config: SomConfig, prototypes: Vec<ObservationVector>) -> Result<Self> {
        config.validate()?;
        if prototypes.len() != config.topology.len() {
            return Err(Error::DimensionMismatch {
                expected: config.topology.len(),
                found: prototypes.len(),
            });
        }
        for w in &prototypes {
            check_dims(&prototypes[0], w)?;
        }
        Ok(Self {
            config,
            prototypes,
            bmu_of: Vec::new(),
            step: 0,
        })
    }

    /// Seeded initialization: `M` distinct observations drawn without
    /// replacement. When the map has more neurons than there are
    /// observations, the extra prototypes are copies of random observations
    /// translated by up to 1% of the variable's range.
    pub fn initialize(data: &[ObservationVector], config: SomConfig) -> Result<Self> {
        config.validate()?;
        validate_data(data)?;
        let m = config.topology.len();
        let n = data.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let prototypes = if m <= n {
            index::sample(&mut rng, n, m).into_iter().map(|k| data[k].clone()).collect()
        } else {
            let ranges = variable_ranges(data);
            let mut protos: Vec<ObservationVector> =
                index::sample(&mut rng, n, n).into_iter().map(|k| data[k].clone()).collect();
            while protos.len() < m {
                let source = &data[rng.random_range(0..n)];
                let profiles = source
                    .profiles()
                    .iter()
                    .zip(&ranges)
                    .map(|(p, range)| p.translated(rng.random_range(-0.01..=0.01) * range))
                    .collect();
                protos.push(ObservationVector::from_profiles(profiles)?);
            }
            protos
        };
        Self::from_prototypes(config, prototypes)
    }

    pub fn config(&self) -> &SomConfig {
        &self.config
    }

    pub fn topology(&self) -> &GridTopology {
        &self.config.topology
    }

    pub fn prototypes(&self) -> &[ObservationVector] {
        &self.prototypes
    }

    /// BMU of every observation from the last assignment.
    pub fn bmu_of(&self) -> &[usize] {
        &self.bmu_of
    }

    /// Iteration whose temperature produced the current prototypes.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn len(&self) -> usize {
        self.prototypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.is_empty()
    }

    /// Number of observations assigned to each neuron.
    pub fn hit_counts(&self) -> Vec<usize> {
        let mut hits = vec![0; self.len()];
        for &b in &self.bmu_of {
            hits[b] += 1;
        }
        hits
    }

    /// BMU under the configured dissimilarity.
    pub fn find_bmu(&self, x: &ObservationVector) -> Result<usize> {
        if self.prototypes.is_empty() {
            return Err(Error::EmptyInput);
        }
        check_dims(&self.prototypes[0], x)?;
        Ok(nearest_prototype(x, &self.prototypes, &self.config.dissimilarity))
    }

    pub fn find_bmu_with<D: Dissimilarity + ?Sized>(&self, x: &ObservationVector, dis: &D) -> usize {
        nearest_prototype(x, &self.prototypes, dis)
    }

    /// Recomputes the BMU of every observation.
    pub fn assign_bmus(&mut self, data: &[ObservationVector]) -> Result<()> {
        self.check_data(data)?;
        let dis = self.config.dissimilarity;
        self.assign_bmus_with(data, &dis);
        Ok(())
    }

    pub fn assign_bmus_with<D: Dissimilarity + ?Sized>(&mut self, data: &[ObservationVector], dis: &D) {
        self.bmu_of = data.iter().map(|x| nearest_prototype(x, &self.prototypes, dis)).collect();
    }

    fn check_data(&self, data: &[ObservationVector]) -> Result<()> {
        validate_data(data)?;
        check_dims(&self.prototypes[0], &data[0])
    }

    fn check_assigned(&self, data: &[ObservationVector]) -> Result<()> {
        self.check_data(data)?;
        if self.bmu_of.len() != data.len() {
            return Err(Error::InvalidConfig(
                "best matching units are not assigned for this dataset".into(),
            ));
        }
        Ok(())
    }

    /// One adaptation step at iteration `t`, using the current BMUs.
    ///
    /// A neuron whose kernel weights all underflow keeps its prototype.
    pub fn batch_update(&self, data: &[ObservationVector], t: usize) -> Result<SomMap> {
        self.check_assigned(data)?;
        let lambda = self.config.temperature(t)?;
        let m = self.len();
        let topo = self.config.topology;

        let mut members: Vec<Vec<&ObservationVector>> = vec![Vec::new(); m];
        for (x, &b) in data.iter().zip(&self.bmu_of) {
            members[b].push(x);
        }
        let mut cells = Vec::new();
        let mut cell_neuron = Vec::new();
        let mut cell_size = Vec::new();
        for (u, xs) in members.iter().enumerate() {
            if xs.is_empty() {
                continue;
            }
            cells.push(barycenter_of_refs(xs, &vec![1.0; xs.len()])?);
            cell_neuron.push(u);
            cell_size.push(xs.len() as f64);
        }
        let cell_refs: Vec<&ObservationVector> = cells.iter().collect();

        let mut prototypes = Vec::with_capacity(m);
        for j in 0..m {
            let weights: Vec<f64> = cell_neuron
                .iter()
                .zip(&cell_size)
                .map(|(&u, &n)| kernel_value(topo.manhattan(j, u), lambda) * n)
                .collect();
            if weights.iter().all(|&w| w == 0.0) {
                prototypes.push(self.prototypes[j].clone());
            } else {
                prototypes.push(barycenter_of_refs(&cell_refs, &weights)?);
            }
        }
        Ok(SomMap {
            config: self.config,
            prototypes,
            bmu_of: self.bmu_of.clone(),
            step: t,
        })
    }

    /// `R(w) = sum_k sum_i K(i, bmu(k)) d(w_i, x_k)` at the current step's
    /// temperature, under the configured dissimilarity.
    pub fn cost(&self, data: &[ObservationVector]) -> Result<f64> {
        self.check_assigned(data)?;
        let dis = self.config.dissimilarity;
        Ok(self.cost_with(data, &dis))
    }

    pub fn cost_with<D: Dissimilarity + ?Sized>(&self, data: &[ObservationVector], dis: &D) -> f64 {
        let lambda = self.config.temperature_unchecked(self.step);
        let topo = self.config.topology;
        let mut total = 0.0;
        for (x, &b) in data.iter().zip(&self.bmu_of) {
            for (i, w) in self.prototypes.iter().enumerate() {
                total += kernel_value(topo.manhattan(i, b), lambda) * dis.dissimilarity(w, x);
            }
        }
        total
    }
}

fn validate_data(data: &[ObservationVector]) -> Result<()> {
    let first = data.first().ok_or(Error::EmptyInput)?;
    for x in data {
        check_dims(first, x)?;
    }
    Ok(())
}

fn variable_ranges(data: &[ObservationVector]) -> Vec<f64> {
    (0..data[0].dim())
        .map(|var| {
            let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                let (a, b) = x.profile(var).support();
                (lo.min(a), hi.max(b))
            });
            hi - lo
        })
        .collect()
}

/// Trains a map with the configured dissimilarity.
pub fn train(data: &[ObservationVector], cfg: &SomConfig) -> Result<SomMap> {
    let dis = cfg.dissimilarity;
    train_with(data, cfg, &dis)
}

/// Trains a map using `dis` for every BMU search.
pub fn train_with<D: Dissimilarity + ?Sized>(data: &[ObservationVector], cfg: &SomConfig, dis: &D) -> Result<SomMap> {
    train_traced(data, cfg, dis).map(|(map, _)| map)
}

/// Like [`train_with`], also returning the cost after each adaptation step
/// (evaluated with the BMUs of the following competition step).
pub fn train_traced<D: Dissimilarity + ?Sized>(
    data: &[ObservationVector],
    cfg: &SomConfig,
    dis: &D,
) -> Result<(SomMap, Vec<f64>)> {
    let data = homogenize_dataset(data)?;
    let mut map = SomMap::initialize(&data, *cfg)?;
    let mut costs = Vec::with_capacity(cfg.t_max);
    map.assign_bmus_with(&data, dis);
    for t in 1..=cfg.t_max {
        map = map.batch_update(&data, t)?;
        map.assign_bmus_with(&data, dis);
        costs.push(map.cost_with(&data, dis));
    }
    Ok((map, costs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::Histogram;
    use approx::assert_relative_eq;

    fn point(c: f64) -> ObservationVector {
        ObservationVector::new(vec![Histogram::uniform(c - 0.5, c + 0.5).unwrap()]).unwrap()
    }

    fn config(rows: usize, cols: usize) -> SomConfig {
        SomConfig {
            topology: GridTopology::new(rows, cols).unwrap(),
            lambda_initial: 4.0,
            lambda_final: 1.0,
            t_max: 2,
            dissimilarity: DissimilarityKind::Wasserstein,
            rng_seed: 3,
        }
    }

    #[test]
    fn topology_validation() {
        assert!(GridTopology::new(1, 1).is_err());
        assert!(GridTopology::new(0, 5).is_err());
        let topo = GridTopology::new(1, 2).unwrap();
        assert_eq!(topo.len(), 2);
    }

    #[test]
    fn grid_distance_examples() {
        let topo = GridTopology::new(3, 3).unwrap();
        assert_eq!(grid_distance(4, 4, &topo).unwrap(), 0);
        assert_eq!(grid_distance(topo.index(0, 0), topo.index(1, 2), &topo).unwrap(), 3);
        assert!(grid_distance(9, 0, &topo).is_err());
    }

    #[test]
    fn grid_distance_is_symmetric_on_5x4() {
        let topo = GridTopology::new(5, 4).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let (ri, ci) = (i / 4, i % 4);
                let (rj, cj) = (j / 4, j % 4);
                let brute = (ri as i64 - rj as i64).unsigned_abs() + (ci as i64 - cj as i64).unsigned_abs();
                assert_eq!(topo.grid_distance(i, j).unwrap() as u64, brute);
                assert_eq!(topo.grid_distance(i, j).unwrap(), topo.grid_distance(j, i).unwrap());
            }
        }
    }

    #[test]
    fn temperature_schedule() {
        let cfg = config(2, 2);
        assert_eq!(temperature(0, &cfg).unwrap(), 4.0);
        assert_eq!(temperature(2, &cfg).unwrap(), 1.0);
        assert_relative_eq!(temperature(1, &cfg).unwrap(), 2.0, epsilon = 1e-15);
        assert!(temperature(3, &cfg).is_err());
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_value(0, 2.0), 0.5);
        assert_relative_eq!(kernel_value(1, 1.0), (-1.0f64).exp());
        let cfg = config(4, 4);
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(kernel(i, j, 0, &cfg).unwrap(), kernel(j, i, 0, &cfg).unwrap());
                assert!(kernel(i, i, 0, &cfg).unwrap() >= kernel(i, j, 0, &cfg).unwrap());
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(2, 2);
        cfg.lambda_final = 5.0;
        assert!(cfg.validate().is_err());
        cfg.lambda_final = 1.0;
        cfg.t_max = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_hyperparameters() {
        let big = SomConfig::default_for(300, DissimilarityKind::Wasserstein, 0);
        assert_eq!((big.topology.rows(), big.topology.cols()), (10, 10));
        assert_eq!(big.lambda_initial, 9.0);
        assert_eq!(big.lambda_final, 0.3);
        assert_eq!(big.t_max, 50);
        // ceil(sqrt(5 * sqrt(100))) = ceil(sqrt(50)) = 8
        let small = SomConfig::default_for(100, DissimilarityKind::Wasserstein, 0);
        assert_eq!((small.topology.rows(), small.topology.cols()), (8, 8));
    }

    #[test]
    fn bmu_prefers_exact_match_and_lowest_index() {
        let cfg = config(3, 4);
        let protos: Vec<_> = (0..12).map(|i| point(i as f64 * 10.0)).collect();
        let map = SomMap::from_prototypes(cfg, protos).unwrap();
        assert_eq!(map.find_bmu(&point(70.0)).unwrap(), 7);

        let same = SomMap::from_prototypes(cfg, vec![point(1.0); 12]).unwrap();
        assert_eq!(same.find_bmu(&point(5.0)).unwrap(), 0);
    }

    #[test]
    fn shared_bmu_update_is_plain_barycenter() {
        let cfg = config(1, 2);
        let data = vec![point(0.0), point(2.0), point(7.0)];
        let mut map = SomMap::from_prototypes(cfg, vec![point(0.0), point(100.0)]).unwrap();
        map.assign_bmus(&data).unwrap();
        assert_eq!(map.bmu_of(), &[0, 0, 0]);
        let updated = map.batch_update(&data, 2).unwrap();
        // All data share one BMU, so every neuron gets the same barycenter.
        for w in updated.prototypes() {
            assert_relative_eq!(w.profile(0).centers()[0], 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_identical_data_pull_both_neurons() {
        let cfg = config(1, 2);
        let data = vec![point(10.0), point(10.0)];
        let mut map = SomMap::from_prototypes(cfg, vec![point(8.0), point(0.0)]).unwrap();
        map.assign_bmus(&data).unwrap();
        let updated = map.batch_update(&data, 1).unwrap();
        // Any positive weighting of identical data is that datum, so both
        // prototypes land on it regardless of their kernel weight.
        for w in updated.prototypes() {
            assert_eq!(w.profile(0).centers(), &[10.0]);
            assert_eq!(w.profile(0).radii(), &[0.5]);
        }
    }

    #[test]
    fn update_requires_assignment() {
        let cfg = config(1, 2);
        let map = SomMap::from_prototypes(cfg, vec![point(0.0), point(1.0)]).unwrap();
        assert!(map.batch_update(&[point(0.0)], 1).is_err());
    }

    #[test]
    fn cost_is_zero_when_everything_coincides() {
        let cfg = config(2, 2);
        let data = vec![point(1.0); 5];
        let mut map = SomMap::from_prototypes(cfg, vec![point(1.0); 4]).unwrap();
        map.assign_bmus(&data).unwrap();
        assert_eq!(map.cost(&data).unwrap(), 0.0);
    }

    #[test]
    fn training_is_reproducible() {
        let data: Vec<_> = (0..30).map(|i| point((i % 7) as f64 * 1.3)).collect();
        let cfg = config(2, 3);
        assert_eq!(train(&data, &cfg).unwrap(), train(&data, &cfg).unwrap());
    }

    #[test]
    fn more_neurons_than_data() {
        let data = vec![point(0.0), point(5.0)];
        let cfg = config(3, 3);
        let map = train(&data, &cfg).unwrap();
        assert_eq!(map.len(), 9);
        assert_eq!(map.bmu_of().len(), 2);
    }

    #[test]
    fn train_rejects_empty_data() {
        assert_eq!(train(&[], &config(1, 2)), Err(Error::EmptyInput));
    }
}
