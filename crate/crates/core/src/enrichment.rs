//! Per-neuron local density and pairwise connectivity of a trained map.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::dissimilarity::Dissimilarity;
use crate::error::{Error, Result};
use crate::histogram::check_dims;
use crate::histogram::ObservationVector;
use crate::som::SomMap;

/// Bandwidth used when every prototype coincides.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

/// Sparse symmetric matrix of pair counts with a zero diagonal.
///
/// `v(i, j)` is the number of observations whose two closest prototypes
/// are `i` and `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    size: usize,
    counts: BTreeMap<(usize, usize), u64>,
}

impl Connectivity {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            counts: BTreeMap::new(),
        }
    }

    /// Builds a matrix from `(i, j, count)` triples; repeated pairs add up.
    pub fn from_pairs<I>(size: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let mut conn = Self::new(size);
        for (i, j, count) in pairs {
            conn.add(i, j, count)?;
        }
        Ok(conn)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn key(i: usize, j: usize) -> (usize, usize) {
        if i < j {
            (i, j)
        } else {
            (j, i)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        if i == j {
            return 0;
        }
        self.counts.get(&Self::key(i, j)).copied().unwrap_or(0)
    }

    pub fn add(&mut self, i: usize, j: usize, count: u64) -> Result<()> {
        for idx in [i, j] {
            if idx >= self.size {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    size: self.size,
                });
            }
        }
        if i == j {
            return Err(Error::InvalidConfig("connectivity diagonal must stay zero".into()));
        }
        if count > 0 {
            *self.counts.entry(Self::key(i, j)).or_insert(0) += count;
        }
        Ok(())
    }

    /// Non-zero entries as `(i, j, count)` with `i < j`, in index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    /// Sum over unordered pairs.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Neighbor lists: `j` is a neighbor of `i` when `v(i, j) > threshold`.
    pub fn adjacency(&self, threshold: u64) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.size];
        for (i, j, c) in self.pairs() {
            if c > threshold {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let mut dense = vec![vec![0; self.size]; self.size];
        for (i, j, c) in self.pairs() {
            dense[i][j] = c;
            dense[j][i] = c;
        }
        dense
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self {
            size: self.size,
            counts: self.counts.iter().map(|(&k, &c)| (k, c * factor)).collect(),
        }
    }
}

/// A trained map with local densities and connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedMap {
    pub map: SomMap,
    pub densities: Vec<f64>,
    pub connectivity: Connectivity,
    pub bandwidth: f64,
}

impl EnrichedMap {
    pub fn from_parts(map: SomMap, densities: Vec<f64>, connectivity: Connectivity, bandwidth: f64) -> Result<Self> {
        if densities.len() != map.len() || connectivity.size() != map.len() {
            return Err(Error::DimensionMismatch {
                expected: map.len(),
                found: densities.len(),
            });
        }
        if let Some(&d) = densities.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(Error::NonPositiveDensity(d));
        }
        Ok(Self {
            map,
            densities,
            connectivity,
            bandwidth,
        })
    }
}

fn check_map(map: &SomMap) -> Result<()> {
    if map.len() < 2 {
        return Err(Error::InvalidConfig("enrichment needs at least two prototypes".into()));
    }
    Ok(())
}

fn check_data(map: &SomMap, data: &[ObservationVector]) -> Result<()> {
    let first = data.first().ok_or(Error::EmptyInput)?;
    for x in data {
        check_dims(&map.prototypes()[0], x)?;
        check_dims(first, x)?;
    }
    Ok(())
}

/// Mean over prototypes of the distance to the nearest other prototype,
/// i.e. the square root of the dissimilarity. Falls back to
/// [`BANDWIDTH_FLOOR`] when that mean is zero.
pub fn default_bandwidth(map: &SomMap) -> Result<f64> {
    let dis = map.config().dissimilarity;
    default_bandwidth_with(map, &dis)
}

pub fn default_bandwidth_with<D: Dissimilarity + ?Sized>(map: &SomMap, dis: &D) -> Result<f64> {
    check_map(map)?;
    let protos = map.prototypes();
    let m = protos.len();
    let mut nearest = vec![f64::INFINITY; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d = dis.dissimilarity(&protos[i], &protos[j]);
            nearest[i] = nearest[i].min(d);
            nearest[j] = nearest[j].min(d);
        }
    }
    let mean = nearest.iter().map(|d| d.max(0.0).sqrt()).sum::<f64>() / m as f64;
    Ok(if mean > 0.0 { mean } else { BANDWIDTH_FLOOR })
}

/// Gaussian-kernel density around every prototype:
/// `D_i = (1/N) sum_k exp(-d(w_i, x_k) / (2 sigma^2)) / (sigma sqrt(2 pi))`.
pub fn local_density(map: &SomMap, data: &[ObservationVector], sigma: f64) -> Result<Vec<f64>> {
    let dis = map.config().dissimilarity;
    local_density_with(map, data, sigma, &dis)
}

pub fn local_density_with<D: Dissimilarity + ?Sized>(
    map: &SomMap,
    data: &[ObservationVector],
    sigma: f64,
    dis: &D,
) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidBandwidth(sigma));
    }
    check_data(map, data)?;
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let denom = 2.0 * sigma * sigma;
    let n = data.len() as f64;
    Ok(map
        .prototypes()
        .iter()
        .map(|w| {
            let sum: f64 = data.iter().map(|x| (-dis.dissimilarity(w, x) / denom).exp()).sum();
            norm * sum / n
        })
        .collect())
}

/// First and second closest prototypes, ties to the lower index.
pub fn two_nearest<D: Dissimilarity + ?Sized>(x: &ObservationVector, prototypes: &[ObservationVector], dis: &D) -> (usize, usize) {
    let mut first = (f64::INFINITY, usize::MAX);
    let mut second = (f64::INFINITY, usize::MAX);
    for (i, w) in prototypes.iter().enumerate() {
        let d = dis.dissimilarity(x, w);
        if d < first.0 {
            second = first;
            first = (d, i);
        } else if d < second.0 {
            second = (d, i);
        }
    }
    (first.1, second.1)
}

pub fn compute_connectivity(map: &SomMap, data: &[ObservationVector]) -> Result<Connectivity> {
    let dis = map.config().dissimilarity;
    compute_connectivity_with(map, data, &dis)
}

pub fn compute_connectivity_with<D: Dissimilarity + ?Sized>(
    map: &SomMap,
    data: &[ObservationVector],
    dis: &D,
) -> Result<Connectivity> {
    check_map(map)?;
    check_data(map, data)?;
    let mut conn = Connectivity::new(map.len());
    for x in data {
        let (a, b) = two_nearest(x, map.prototypes(), dis);
        conn.add(a, b, 1)?;
    }
    Ok(conn)
}

/// Densities and connectivity for a trained map. `sigma` defaults to
/// [`default_bandwidth`].
pub fn enrich(map: &SomMap, data: &[ObservationVector], sigma: Option<f64>) -> Result<EnrichedMap> {
    let dis = map.config().dissimilarity;
    enrich_with(map, data, sigma, &dis)
}

pub fn enrich_with<D: Dissimilarity + ?Sized>(
    map: &SomMap,
    data: &[ObservationVector],
    sigma: Option<f64>,
    dis: &D,
) -> Result<EnrichedMap> {
    let bandwidth = match sigma {
        Some(s) => s,
        None => default_bandwidth_with(map, dis)?,
    };
    let densities = local_density_with(map, data, bandwidth, dis)?;
    let connectivity = compute_connectivity_with(map, data, dis)?;
    EnrichedMap::from_parts(map.clone(), densities, connectivity, bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissimilarity::DissimilarityKind;
    use crate::histogram::Histogram;
    use crate::som::{GridTopology, SomConfig};
    use approx::assert_relative_eq;

    fn point(c: f64) -> ObservationVector {
        ObservationVector::new(vec![Histogram::uniform(c, c).unwrap()]).unwrap()
    }

    fn map_of(rows: usize, cols: usize, centers: &[f64]) -> SomMap {
        let cfg = SomConfig {
            topology: GridTopology::new(rows, cols).unwrap(),
            lambda_initial: 2.0,
            lambda_final: 0.5,
            t_max: 5,
            dissimilarity: DissimilarityKind::Wasserstein,
            rng_seed: 0,
        };
        SomMap::from_prototypes(cfg, centers.iter().map(|&c| point(c)).collect()).unwrap()
    }

    #[test]
    fn bandwidth_of_two_prototypes() {
        let map = map_of(1, 2, &[0.0, 2.0]);
        assert_relative_eq!(default_bandwidth(&map).unwrap(), 2.0);
    }

    #[test]
    fn bandwidth_floor_for_identical_prototypes() {
        let map = map_of(2, 2, &[1.0; 4]);
        assert_eq!(default_bandwidth(&map).unwrap(), BANDWIDTH_FLOOR);
    }

    #[test]
    fn density_of_a_datum_on_a_prototype() {
        let map = map_of(1, 2, &[0.0, 100.0]);
        let sigma = 0.5;
        let d = local_density(&map, &[point(0.0)], sigma).unwrap();
        assert_relative_eq!(d[0], 1.0 / (sigma * (2.0 * PI).sqrt()), epsilon = 1e-15);
        assert!(d[1] < 1e-300);
    }

    #[test]
    fn density_decreases_as_data_move_away() {
        let map = map_of(1, 2, &[0.0, 50.0]);
        let near = local_density(&map, &[point(1.0), point(-1.0)], 1.0).unwrap();
        let far = local_density(&map, &[point(2.0), point(-2.0)], 1.0).unwrap();
        assert!(far[0] < near[0]);
    }

    #[test]
    fn density_rejects_bad_sigma() {
        let map = map_of(1, 2, &[0.0, 1.0]);
        assert_eq!(local_density(&map, &[point(0.0)], 0.0), Err(Error::InvalidBandwidth(0.0)));
        assert!(local_density(&map, &[point(0.0)], -1.0).is_err());
    }

    #[test]
    fn equidistant_data_count_at_first_pair() {
        let map = map_of(2, 2, &[3.0; 4]);
        let data = vec![point(0.0); 6];
        let conn = compute_connectivity(&map, &data).unwrap();
        assert_eq!(conn.get(0, 1), 6);
        assert_eq!(conn.get(1, 0), 6);
        assert_eq!(conn.total(), 6);
    }

    #[test]
    fn datum_on_prototype_counts_with_runner_up() {
        let map = map_of(2, 3, &[0.0, 10.0, 20.0, 30.0, 40.0, 32.0]);
        let conn = compute_connectivity(&map, &[point(30.0)]).unwrap();
        assert_eq!(conn.get(3, 5), 1);
        assert_eq!(conn.total(), 1);
    }

    #[test]
    fn two_nearest_tie_breaks() {
        let protos: Vec<_> = [5.0, 1.0, 1.0, 1.0].iter().map(|&c| point(c)).collect();
        let dis = DissimilarityKind::Wasserstein;
        assert_eq!(two_nearest(&point(0.0), &protos, &dis), (1, 2));
        let protos: Vec<_> = [1.0, 1.0].iter().map(|&c| point(c)).collect();
        assert_eq!(two_nearest(&point(0.0), &protos, &dis), (0, 1));
        let protos: Vec<_> = [1.0, 5.0, 5.0].iter().map(|&c| point(c)).collect();
        assert_eq!(two_nearest(&point(0.0), &protos, &dis), (0, 1));
    }

    #[test]
    fn connectivity_rejects_diagonal_and_out_of_range() {
        let mut conn = Connectivity::new(3);
        assert!(conn.add(1, 1, 1).is_err());
        assert!(conn.add(0, 3, 1).is_err());
        conn.add(2, 0, 4).unwrap();
        assert_eq!(conn.to_dense()[0][2], 4);
        assert_eq!(conn.to_dense()[2][0], 4);
        assert_eq!(conn.adjacency(0), vec![vec![2], vec![], vec![0]]);
        assert_eq!(conn.adjacency(4), vec![Vec::<usize>::new(); 3]);
    }

    #[test]
    fn enrich_defaults_bandwidth() {
        let map = map_of(1, 2, &[0.0, 2.0]);
        let data = vec![point(0.1), point(1.9)];
        let e = enrich(&map, &data, None).unwrap();
        assert_eq!(e.bandwidth, default_bandwidth(&map).unwrap());
        assert_eq!(e.connectivity.get(0, 1), 2);
        assert!(e.densities.iter().all(|&d| d > 0.0));
    }
}
