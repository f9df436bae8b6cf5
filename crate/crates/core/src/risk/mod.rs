//! Disclosure-risk metrics: equivalence classes and k-anonymity singling
//! out, subset risk, l-diversity, and distance-based record linkage.

mod kanon;
mod keys;
mod linkage;
mod matrix;
mod scenario;

pub use kanon::{
    k_anonymity_risk, l_diversity, partition, subset_risk, ClassDiversity, EquivalenceClass,
    EquivalenceClassPartition, LDiversity, RiskResult,
};
pub use linkage::{record_distance, record_linkage, ColumnRule, DistanceSpec, LinkageResult, MatchKind};
pub use matrix::{assess_matrix, assess_scenario, select_metric, Assessment, Metric};
pub use scenario::Scenario;
pub(crate) use keys::keys_for_rows;
