//! Localization metrics, region characterization and sprite-embedding
//! clustering.

mod cluster;
mod metrics;
mod region;
mod report;

pub use cluster::{cluster_sprite_embeddings, Dendrogram, Linkage, Merge};
pub use metrics::{
    ap_at_thresholds, auprc, best_threshold_metrics, default_thresholds, threshold_metrics, Confusion,
    ThresholdMetrics,
};
pub use region::{region_dispersion, region_prevalence};
pub use report::{evaluate_datum, DatumEvaluation, EvalReport, Summary};
