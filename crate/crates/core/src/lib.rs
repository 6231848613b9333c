//! Two-level clustering of histogram-valued data.
//!
//! Observations are vectors of histograms compared with the L2 Wasserstein
//! distance. A batch self-organizing map reduces the data to prototypes, the
//! map is enriched with local densities and neighbour connectivity, and the
//! prototypes are then grouped by density-driven watershed labeling.

pub mod clustering;
pub mod datagen;
pub mod dissimilarity;
pub mod enrichment;
pub mod error;
pub mod histogram;
pub mod metrics;
pub mod pipeline;
pub mod som;

pub use clustering::{cluster_prototypes, cluster_prototypes_with_threshold, ClusterResult};
pub use datagen::{generate, DatasetSpec, LabeledDataset, VaryingParameter};
pub use dissimilarity::{alt_dissimilarity, Dissimilarity, DissimilarityKind};
pub use enrichment::{enrich, enrich_with, Connectivity, EnrichedMap};
pub use error::{Error, Result};
pub use histogram::{
    barycenter, build_equidepth, homogenize, total_inertia, wasserstein_sq, Bin, Histogram,
    ObservationVector, QuantileProfile,
};
pub use metrics::{adjusted_rand, nmi, score, v_measure, Scores};
pub use som::{train, train_with, GridTopology, SomConfig, SomMap};
