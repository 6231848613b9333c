mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use common::*;
use dhsom::enrichment::{compute_connectivity, default_bandwidth, local_density};
use dhsom::{enrich, train, wasserstein_sq, DissimilarityKind, GridTopology, ObservationVector, SomConfig, SomMap};

fn config(seed: u64) -> SomConfig {
    SomConfig {
        topology: GridTopology::new(3, 3).unwrap(),
        lambda_initial: 2.0,
        lambda_final: 0.3,
        t_max: 8,
        dissimilarity: DissimilarityKind::Wasserstein,
        rng_seed: seed,
    }
}

fn instance(seed: u64) -> (SomMap, Vec<ObservationVector>) {
    let mut r = rng(seed);
    let data = random_dataset(&mut r, 40, 2, 4);
    let map = train(&data, &config(seed)).unwrap();
    (map, data)
}

fn density_oracle(map: &SomMap, data: &[ObservationVector], sigma: f64) -> Vec<f64> {
    let n = data.len() as f64;
    let mut out = Vec::new();
    for w in map.prototypes() {
        let mut acc = 0.0;
        for x in data {
            let d = wasserstein_sq(w, x).unwrap();
            acc += (-d / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
        }
        out.push(acc / n);
    }
    out
}

fn connectivity_oracle(map: &SomMap, data: &[ObservationVector]) -> BTreeMap<(usize, usize), u64> {
    let mut counts = BTreeMap::new();
    for x in data {
        let mut order: Vec<(f64, usize)> =
            map.prototypes().iter().enumerate().map(|(i, w)| (wasserstein_sq(w, x).unwrap(), i)).collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (i, j) = (order[0].1.min(order[1].1), order[0].1.max(order[1].1));
        *counts.entry((i, j)).or_insert(0) += 1;
    }
    counts
}

#[test]
fn density_matches_double_loop() {
    for seed in 0..10 {
        let (map, data) = instance(seed);
        let sigma = default_bandwidth(&map).unwrap();
        let got = local_density(&map, &data, sigma).unwrap();
        let want = density_oracle(&map, &data, sigma);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * w.max(1.0), "seed {seed}: {g} vs {w}");
        }
    }
}

#[test]
fn connectivity_matches_pair_scan() {
    for seed in 0..10 {
        let (map, data) = instance(seed);
        let conn = compute_connectivity(&map, &data).unwrap();
        let got: BTreeMap<(usize, usize), u64> = conn.pairs().map(|(i, j, v)| ((i, j), v)).collect();
        assert_eq!(got, connectivity_oracle(&map, &data), "seed {seed}");
        assert_eq!(conn.total(), data.len() as u64);
        let dense = conn.to_dense();
        for i in 0..dense.len() {
            assert_eq!(dense[i][i], 0);
            for j in 0..dense.len() {
                assert_eq!(dense[i][j], dense[j][i]);
            }
        }
    }
}

#[test]
fn bandwidth_matches_nearest_neighbour_scan() {
    for seed in 0..5 {
        let (map, _) = instance(seed);
        let protos = map.prototypes();
        let mut total = 0.0;
        for (i, a) in protos.iter().enumerate() {
            let nearest = protos
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| wasserstein_sq(a, b).unwrap().sqrt())
                .fold(f64::INFINITY, f64::min);
            total += nearest;
        }
        let want = total / protos.len() as f64;
        let got = default_bandwidth(&map).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn density_respects_the_kernel_bound() {
    for seed in 0..5 {
        let (map, data) = instance(seed);
        let sigma = default_bandwidth(&map).unwrap();
        for s in [sigma, 2.0 * sigma] {
            let bound = 1.0 / (s * (2.0 * PI).sqrt());
            assert!(local_density(&map, &data, s).unwrap().iter().all(|&d| d <= bound * (1.0 + 1e-12)));
        }
    }
}

// Each kernel term grows with sigma while sigma^2 < d^2, so the peak only
// drops for data concentrated around their prototypes.
#[test]
fn wider_bandwidth_lowers_the_peak_of_tight_clusters() {
    let mut r = rng(8);
    let data: Vec<ObservationVector> = (0..40)
        .map(|k| ObservationVector::new(vec![blob(&mut r, if k % 2 == 0 { -10.0 } else { 10.0 }, 4)]).unwrap())
        .collect();
    let mut cfg = config(2);
    cfg.topology = GridTopology::new(1, 2).unwrap();
    let map = train(&data, &cfg).unwrap();
    let sigma = default_bandwidth(&map).unwrap();
    let narrow = local_density(&map, &data, sigma).unwrap();
    let wide = local_density(&map, &data, 2.0 * sigma).unwrap();
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    assert!(max(&wide) <= max(&narrow));
}

#[test]
fn density_falls_as_data_move_away() {
    let (map, data) = instance(3);
    let sigma = default_bandwidth(&map).unwrap();
    let base = local_density(&map, &data, sigma).unwrap();
    // Shifting everything far to the right moves data away from every prototype
    // whose mass sits left of the data.
    let far: Vec<ObservationVector> = data.iter().map(|x| x.translated(50.0)).collect();
    let farther: Vec<ObservationVector> = data.iter().map(|x| x.translated(100.0)).collect();
    let d1 = local_density(&map, &far, sigma).unwrap();
    let d2 = local_density(&map, &farther, sigma).unwrap();
    for i in 0..base.len() {
        assert!(d2[i] <= d1[i]);
        assert!(d1[i] <= base[i]);
    }
}

#[test]
fn enrichment_defaults_to_the_heuristic_bandwidth() {
    let (map, data) = instance(4);
    let e = enrich(&map, &data, None).unwrap();
    assert_eq!(e.bandwidth, default_bandwidth(&map).unwrap());
    assert!(e.densities.iter().all(|&d| d >= 0.0 && d.is_finite()));
    assert_eq!(e.connectivity.total(), data.len() as u64);
    assert!(enrich(&map, &data, Some(0.0)).is_err());
}
