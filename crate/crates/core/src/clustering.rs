//! Segmentation of enriched prototypes into clusters.
//!
//! Neurons linked by a connectivity count above the threshold are
//! neighbors. Each connected set of neurons is split into micro-clusters by
//! following the ascending density gradient to a local maximum. Adjacent
//! micro-clusters are then merged when the densities on both sides of their
//! border exceed the harmonic combination of the two peak densities.

use std::collections::BTreeMap;

use crate::enrichment::{Connectivity, EnrichedMap};
use crate::error::{Error, Result};

/// Densities plus neighbor lists derived from a connectivity matrix.
#[derive(Debug, Clone)]
pub struct DensityGraph<'a> {
    densities: &'a [f64],
    neighbors: Vec<Vec<usize>>,
}

impl<'a> DensityGraph<'a> {
    pub fn new(densities: &'a [f64], connectivity: &Connectivity, threshold: u64) -> Result<Self> {
        if densities.len() != connectivity.size() {
            return Err(Error::DimensionMismatch {
                expected: connectivity.size(),
                found: densities.len(),
            });
        }
        Ok(Self {
            densities,
            neighbors: connectivity.adjacency(threshold),
        })
    }

    pub fn from_enriched(e: &'a EnrichedMap, threshold: u64) -> Self {
        Self::new(&e.densities, &e.connectivity, threshold).expect("enriched map sizes agree")
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn density(&self, i: usize) -> f64 {
        self.densities[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// The smaller root becomes the representative.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected sets of neurons, each sorted, ordered by smallest member.
/// Neurons without any neighbor form singletons.
pub fn connected_components(graph: &DensityGraph<'_>) -> Vec<Vec<usize>> {
    let n = graph.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for &j in graph.neighbors(i) {
            uf.union(i, j);
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = uf.find(i);
        if slot[root] == usize::MAX {
            slot[root] = components.len();
            components.push(Vec::new());
        }
        components[slot[root]].push(i);
    }
    components
}

/// Neurons of `component` whose density is at least that of every neighbor.
pub fn density_maxima(component: &[usize], graph: &DensityGraph<'_>) -> Vec<usize> {
    component
        .iter()
        .copied()
        .filter(|&i| graph.neighbors(i).iter().all(|&j| graph.density(i) >= graph.density(j)))
        .collect()
}

/// `S = (1/di + 1/dj)^-1`.
pub fn merge_threshold(di: f64, dj: f64) -> Result<f64> {
    for d in [di, dj] {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NonPositiveDensity(d));
        }
    }
    Ok(harmonic(di, dj))
}

/// Harmonic combination extended by continuity to zero densities.
fn harmonic(di: f64, dj: f64) -> f64 {
    if di <= 0.0 || dj <= 0.0 {
        0.0
    } else {
        1.0 / (1.0 / di + 1.0 / dj)
    }
}

/// Highest-density neighbor strictly denser than `i`, ties to the lower index.
fn ascent_step(i: usize, graph: &DensityGraph<'_>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &j in graph.neighbors(i) {
        if graph.density(j) > graph.density(i) {
            match best {
                Some(b) if graph.density(j) <= graph.density(b) => {}
                _ => best = Some(j),
            }
        }
    }
    best
}

/// Label of every neuron in `component` (same order): the density maximum
/// reached by repeated steps to the densest strictly-higher neighbor.
pub fn gradient_labeling(component: &[usize], graph: &DensityGraph<'_>) -> Vec<usize> {
    component
        .iter()
        .map(|&start| {
            let mut i = start;
            while let Some(next) = ascent_step(i, graph) {
                i = next;
            }
            i
        })
        .collect()
}

/// Components, maxima and gradient labels for every neuron.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroClusterState {
    /// Component index of every neuron.
    pub component_of: Vec<usize>,
    /// Density maximum labelling every neuron.
    pub label_of: Vec<usize>,
    /// Density maxima of every component.
    pub maxima: Vec<Vec<usize>>,
}

impl MicroClusterState {
    pub fn build(graph: &DensityGraph<'_>) -> Self {
        let n = graph.len();
        let mut component_of = vec![0; n];
        let mut label_of = vec![0; n];
        let mut maxima = Vec::new();
        for (c, component) in connected_components(graph).into_iter().enumerate() {
            for (&i, label) in component.iter().zip(gradient_labeling(&component, graph)) {
                component_of[i] = c;
                label_of[i] = label;
            }
            maxima.push(density_maxima(&component, graph));
        }
        Self {
            component_of,
            label_of,
            maxima,
        }
    }

    /// Number of distinct micro-cluster labels.
    pub fn micro_cluster_count(&self) -> usize {
        let mut labels = self.label_of.clone();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }
}

/// Representative micro-cluster of every neuron after merging.
///
/// For each neighboring pair `(i, j)` with different labels, the
/// micro-clusters merge when both `D_i` and `D_j` exceed the harmonic
/// combination of the two peak densities. All pairs are tested against the
/// peak densities of the initial labels, and merges are closed
/// transitively.
pub fn merge_microclusters(state: &MicroClusterState, graph: &DensityGraph<'_>) -> Vec<usize> {
    let n = graph.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for &j in graph.neighbors(i) {
            if j <= i {
                continue;
            }
            let (li, lj) = (state.label_of[i], state.label_of[j]);
            if li == lj {
                continue;
            }
            let s = harmonic(graph.density(li), graph.density(lj));
            if graph.density(i) > s && graph.density(j) > s {
                uf.union(li, lj);
            }
        }
    }
    (0..n).map(|i| uf.find(state.label_of[i])).collect()
}

/// Final labels of the map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterResult {
    /// Cluster of every neuron; `None` for neurons whose cluster holds no data.
    pub neuron_label: Vec<Option<usize>>,
    /// Cluster of every observation, through its BMU.
    pub data_label: Vec<usize>,
    pub n_clusters: usize,
    pub micro: MicroClusterState,
}

/// Contiguous cluster ids, numbered by the first data-holding neuron of
/// each group. Groups without data stay unlabeled.
pub fn relabel(groups: &[usize], hits: &[usize]) -> (Vec<Option<usize>>, usize) {
    let mut id_of = BTreeMap::new();
    for (&g, &h) in groups.iter().zip(hits) {
        if h > 0 {
            let next = id_of.len();
            id_of.entry(g).or_insert(next);
        }
    }
    (groups.iter().map(|g| id_of.get(g).copied()).collect(), id_of.len())
}

/// Full prototype clustering with the connectivity threshold at zero.
pub fn cluster_prototypes(e: &EnrichedMap) -> ClusterResult {
    cluster_prototypes_with_threshold(e, 0)
}

pub fn cluster_prototypes_with_threshold(e: &EnrichedMap, threshold: u64) -> ClusterResult {
    let graph = DensityGraph::from_enriched(e, threshold);
    let micro = MicroClusterState::build(&graph);
    let groups = merge_microclusters(&micro, &graph);
    let (neuron_label, n_clusters) = relabel(&groups, &e.map.hit_counts());
    let data_label = e
        .map
        .bmu_of()
        .iter()
        .map(|&b| neuron_label[b].expect("a BMU holds data"))
        .collect();
    ClusterResult {
        neuron_label,
        data_label,
        n_clusters,
        micro,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(densities: &[f64], links: &[u64]) -> (Vec<f64>, Connectivity) {
        let n = densities.len();
        let conn = Connectivity::from_pairs(n, links.iter().enumerate().map(|(i, &c)| (i, i + 1, c))).unwrap();
        (densities.to_vec(), conn)
    }

    #[test]
    fn no_edges_gives_singletons() {
        let (d, conn) = chain(&[1.0, 2.0, 3.0], &[0, 0]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        assert_eq!(connected_components(&g), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn chain_is_one_component() {
        let (d, conn) = chain(&[1.0, 2.0, 3.0, 1.0], &[3, 1, 0]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        assert_eq!(connected_components(&g), vec![vec![0, 1, 2], vec![3]]);
        let g1 = DensityGraph::new(&d, &conn, 1).unwrap();
        assert_eq!(connected_components(&g1), vec![vec![0, 1], vec![2], vec![3]]);
    }

    #[test]
    fn maxima_examples() {
        let (d, conn) = chain(&[4.0], &[]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        assert_eq!(density_maxima(&[0], &g), vec![0]);

        let (d, conn) = chain(&[1.0, 5.0, 2.0], &[1, 1]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        assert_eq!(density_maxima(&[0, 1, 2], &g), vec![1]);

        let (d, conn) = chain(&[3.0, 3.0], &[2]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        assert_eq!(density_maxima(&[0, 1], &g), vec![0, 1]);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(merge_threshold(2.0, 2.0).unwrap(), 1.0);
        assert!((merge_threshold(3.0, 6.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(merge_threshold(0.0, 1.0).is_err());
        assert!(merge_threshold(1.0, -2.0).is_err());
    }

    #[test]
    fn watershed_on_a_chain() {
        let (d, conn) = chain(&[1.0, 5.0, 2.0, 1.0, 4.0], &[1, 1, 1, 1]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        assert_eq!(gradient_labeling(&[0, 1, 2, 3, 4], &g), vec![1, 1, 1, 4, 4]);
    }

    #[test]
    fn single_basin_labels_everything_with_its_peak() {
        let (d, conn) = chain(&[1.0, 2.0, 3.0, 9.0, 2.0], &[1, 1, 1, 1]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        assert_eq!(gradient_labeling(&[0, 1, 2, 3, 4], &g), vec![3; 5]);
    }

    #[test]
    fn plateau_members_label_themselves() {
        let (d, conn) = chain(&[3.0, 3.0], &[1]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        assert_eq!(gradient_labeling(&[0, 1], &g), vec![0, 1]);
        // Border densities 3 > S = 1.5, so the plateau merges.
        let state = MicroClusterState::build(&g);
        let groups = merge_microclusters(&state, &g);
        assert_eq!(groups[0], groups[1]);
    }

    #[test]
    fn merge_fires_on_dense_border() {
        // Peaks 10 and 10 give S = 5; border pair (1, 2) has densities 8, 7.
        let (d, conn) = chain(&[10.0, 8.0, 7.0, 10.0], &[1, 1, 1]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        let state = MicroClusterState::build(&g);
        assert_eq!(state.label_of, vec![0, 0, 3, 3]);
        let groups = merge_microclusters(&state, &g);
        assert!(groups.iter().all(|&r| r == groups[0]));
    }

    #[test]
    fn merge_blocked_by_sparse_border() {
        // S = 5; the border pair (1, 2) has density 4 on one side.
        let (d, conn) = chain(&[10.0, 4.0, 7.0, 10.0], &[1, 1, 1]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        let state = MicroClusterState::build(&g);
        let groups = merge_microclusters(&state, &g);
        assert_ne!(groups[0], groups[3]);
    }

    #[test]
    fn merges_close_transitively() {
        // Three basins A (peak 0), B (peak 3), C (peak 6); A-B and B-C fire.
        let d = [10.0, 8.0, 8.5, 10.0, 8.5, 8.0, 10.0];
        let (d, conn) = chain(&d, &[1; 6]);
        let g = DensityGraph::new(&d, &conn, 0).unwrap();
        let state = MicroClusterState::build(&g);
        assert_eq!(state.micro_cluster_count(), 3);
        let groups = merge_microclusters(&state, &g);
        assert!(groups.iter().all(|&r| r == groups[0]));
    }

    #[test]
    fn relabel_is_contiguous_and_skips_empty_groups() {
        let groups = [4, 4, 2, 2, 7];
        let hits = [0, 3, 1, 0, 0];
        let (labels, n) = relabel(&groups, &hits);
        assert_eq!(n, 2);
        assert_eq!(labels, vec![Some(0), Some(0), Some(1), Some(1), None]);
    }
}
