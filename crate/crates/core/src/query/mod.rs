//! Cypher-style query subset: lexer, parser, planner, executor, and a
//! brute-force reference executor used as a testing oracle.

pub mod ast;
mod exec;
mod plan;
mod reference;
pub mod token;

mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, PropertyValue};

pub use ast::{Expr, Literal, QueryAst, ReturnExpr};
pub use exec::execute;
pub use parser::{parse_query, parse_tokens};
pub use plan::{plan, plan_with_mode, Plan, PlanMode};
pub use reference::{reference_execute, REFERENCE_NODE_LIMIT};
pub use token::tokenize;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("lex error at offset {offset}: {detail}")]
    Lex { offset: usize, detail: String },
    #[error("parse error at offset {offset}: expected {}, found {found}", expected.join(" or "))]
    Parse {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("semantic error: {detail}{}", suggestion.as_ref().map(|s| format!(" (did you mean {s}?)")).unwrap_or_default())]
    Semantic {
        detail: String,
        suggestion: Option<String>,
    },
    #[error("graph too large for the reference executor: {nodes} nodes (limit {limit})")]
    SizeGuard { nodes: usize, limit: usize },
}

/// Execution statistics attached to every result.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExecStats {
    /// Number of pattern matches consumed by projection (post-WHERE).
    pub matched: usize,
    /// Wall-clock execution time, measured monotonically.
    pub duration_ms: f64,
}

/// Tabular query result; every row has one cell per column, null allowed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<PropertyValue>>>,
    pub stats: ExecStats,
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The single cell of a 1x1 result, if the table has that shape.
    pub fn single_cell(&self) -> Option<&PropertyValue> {
        if self.rows.len() == 1 && self.rows[0].len() == 1 {
            self.rows[0][0].as_ref()
        } else {
            None
        }
    }

    /// Renders the table as aligned text.
    pub fn to_aligned_text(&self) -> String {
        let render = |cell: &Option<PropertyValue>| match cell {
            None => "null".to_string(),
            Some(v) => v.to_string(),
        };
        let mut widths: Vec<usize> = self.columns.iter().map(String::len).collect();
        let rendered: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(render).collect())
            .collect();
        for row in &rendered {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::from("|");
            for (i, c) in cells.iter().enumerate() {
                s.push_str(&format!(" {:<width$} |", c, width = widths[i]));
            }
            s.push('\n');
            s
        };
        let mut out = line(&self.columns.to_vec());
        let sep: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&line(&sep).replace(' ', "-"));
        for row in &rendered {
            out.push_str(&line(row));
        }
        out.push_str(&format!(
            "({} row{}, {} match{}, {:.3} ms)\n",
            self.rows.len(),
            if self.rows.len() == 1 { "" } else { "s" },
            self.stats.matched,
            if self.stats.matched == 1 { "" } else { "es" },
            self.stats.duration_ms
        ));
        out
    }
}

impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_aligned_text())
    }
}

/// Schema summary handed to the planner: known labels with node counts,
/// known edge types, and the union of known property keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphSchema {
    pub labels: BTreeMap<String, usize>,
    pub etypes: BTreeSet<String>,
    pub prop_keys: BTreeSet<String>,
    pub total_nodes: usize,
}

impl GraphSchema {
    pub fn of(g: &Graph) -> GraphSchema {
        let mut prop_keys = BTreeSet::new();
        for n in g.nodes() {
            prop_keys.extend(n.props.keys().cloned());
        }
        for e in g.edges() {
            prop_keys.extend(e.props.keys().cloned());
        }
        GraphSchema {
            labels: g.label_counts(),
            etypes: g.etype_counts().into_keys().collect(),
            prop_keys,
            total_nodes: g.node_count(),
        }
    }
}

/// Convenience pipeline: parse, plan, and execute `text` against `g`.
pub fn run_query(g: &Graph, text: &str) -> Result<ResultTable, QueryError> {
    let ast = parse_query(text)?;
    let schema = GraphSchema::of(g);
    let plan = plan(&ast, &schema)?;
    Ok(execute(g, &plan))
}
