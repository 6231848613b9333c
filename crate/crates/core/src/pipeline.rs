//! Train, enrich and cluster in one call.

use crate::clustering::{cluster_prototypes, ClusterResult};
use crate::dissimilarity::Dissimilarity;
use crate::enrichment::{enrich_with, EnrichedMap};
use crate::error::Result;
use crate::histogram::{homogenize_dataset, ObservationVector};
use crate::som::{train_with, SomConfig};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub enriched: EnrichedMap,
    pub clusters: ClusterResult,
}

/// Runs the whole pipeline with the dissimilarity named in `cfg`.
pub fn run(data: &[ObservationVector], cfg: &SomConfig, sigma: Option<f64>) -> Result<PipelineOutput> {
    let dis = cfg.dissimilarity;
    run_with(data, cfg, sigma, &dis)
}

/// Runs the whole pipeline with a caller-supplied dissimilarity.
pub fn run_with<D: Dissimilarity + ?Sized>(
    data: &[ObservationVector],
    cfg: &SomConfig,
    sigma: Option<f64>,
    dis: &D,
) -> Result<PipelineOutput> {
    let data = homogenize_dataset(data)?;
    let map = train_with(&data, cfg, dis)?;
    let enriched = enrich_with(&map, &data, sigma, dis)?;
    let clusters = cluster_prototypes(&enriched);
    Ok(PipelineOutput { enriched, clusters })
}
