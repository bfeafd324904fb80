//! Is-a probing: ontology and property ingestion, relation queries, and the
//! retrieval, asymmetry, transitivity and property-inheritance scores.

mod data;
mod metrics;
mod query;
pub mod report;

pub use data::{
    load_ontology, load_triplets, parse_triplets, Direction, IsARelation, Ontology, OntologyEntry,
    PropertyTriplet,
};
pub use metrics::*;
pub use query::{isa_query_text, retrieval_at_k, Prober, QueryMode, QueryOutcome, RelationOutcome};
