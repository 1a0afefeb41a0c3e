//! Soccer knowledge-graph engine: ingest structured match data, build two
//! property graphs (match events and lineups/facts), query them with a
//! Cypher-style subset, and answer natural-language questions through a
//! translate → query → retrieve → synthesize pipeline, with an evaluation
//! harness for density, latency, and accuracy reporting.

pub mod builder;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod nl;
pub mod query;
pub mod snapshot;
pub mod util;

pub use builder::{build_all, BuildOutput, EntityDictionary};
pub use graph::{Direction, Graph, GraphError, Node, NodeId, PropertyValue};
pub use ingest::{load_dataset, validate_dataset, Dataset};
pub use nl::{ask, AskConfig, AskOutcome, Backend};
pub use query::{execute, parse_query, plan, reference_execute, QueryAst, ResultTable};
pub use snapshot::{snapshot_load, snapshot_save};
