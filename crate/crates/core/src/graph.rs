//! Embedded directed labeled property graph with label and property indices.
//!
//! Nodes and edges live in append-only arenas with dense integer ids.
//! Deletion is unsupported; updates happen by rebuild or append. After
//! [`Graph::freeze`] the graph is immutable and safe to read from any
//! number of threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node identifier (index into the node arena).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

/// Dense edge identifier (index into the edge arena).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Attribute value stored on nodes and edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Text(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl PropertyValue {
    pub fn text(s: impl Into<String>) -> Self {
        PropertyValue::Text(s.into())
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            PropertyValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            PropertyValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Key form used by the property index: total order, floats by bit pattern.
    pub fn index_key(&self) -> IndexKey {
        match self {
            PropertyValue::Text(s) => IndexKey::Text(s.clone()),
            PropertyValue::Int(i) => IndexKey::Int(*i),
            PropertyValue::Float(f) => IndexKey::Float(f.to_bits()),
            PropertyValue::Bool(b) => IndexKey::Bool(*b),
        }
    }

    /// The numerically-equal twin under Int/Float promotion, if one exists.
    /// `Int(1)` pairs with `Float(1.0)` and vice versa.
    pub fn promoted_twin(&self) -> Option<PropertyValue> {
        match self {
            PropertyValue::Int(i) => Some(PropertyValue::Float(*i as f64)),
            PropertyValue::Float(f) => {
                if f.fract() == 0.0 && *f >= i64::MIN as f64 && *f <= i64::MAX as f64 {
                    Some(PropertyValue::Int(*f as i64))
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Text(s) => write!(f, "{s}"),
            PropertyValue::Int(i) => write!(f, "{i}"),
            PropertyValue::Float(x) => write!(f, "{x}"),
            PropertyValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Hashable/orderable form of a property value, used as an index key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexKey {
    Text(String),
    Int(i64),
    Float(u64),
    Bool(bool),
}

pub type PropertyMap = BTreeMap<String, PropertyValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub props: PropertyMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub etype: String,
    pub props: PropertyMap,
}

/// Direction selector for [`Graph::neighbors`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph is frozen; mutation rejected")]
    FrozenGraph,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("density undefined: graph has {0} node(s), needs at least 2")]
    DegenerateGraph(usize),
}

/// Index-consistency finding reported by [`Graph::audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub kind: FindingKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingKind {
    LabelIndexMismatch,
    PropIndexMismatch,
    AdjacencyMismatch,
    DanglingEndpoint,
    DensityExceedsSimpleBound,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

/// In-memory property graph. Build single-threaded, then [`freeze`](Self::freeze).
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    label_index: BTreeMap<String, BTreeSet<NodeId>>,
    prop_index: BTreeMap<(String, String, IndexKey), BTreeSet<NodeId>>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    frozen: bool,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id.index())
    }

    /// Distinct node labels present, in sorted order.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.label_index.keys().map(|s| s.as_str())
    }

    /// Node count per label, in sorted label order.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        self.label_index
            .iter()
            .map(|(l, s)| (l.clone(), s.len()))
            .collect()
    }

    /// Edge count per type, in sorted type order.
    pub fn etype_counts(&self) -> BTreeMap<String, usize> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for e in &self.edges {
            *counts.entry(e.etype.clone()).or_default() += 1;
        }
        counts
    }

    pub fn add_node(
        &mut self,
        label: impl Into<String>,
        props: PropertyMap,
    ) -> Result<NodeId, GraphError> {
        if self.frozen {
            return Err(GraphError::FrozenGraph);
        }
        let id = NodeId(self.nodes.len() as u32);
        let label = label.into();
        self.label_index.entry(label.clone()).or_default().insert(id);
        for (k, v) in &props {
            self.prop_index
                .entry((label.clone(), k.clone(), v.index_key()))
                .or_default()
                .insert(id);
        }
        self.nodes.push(Node { id, label, props });
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        Ok(id)
    }

    pub fn add_edge(
        &mut self,
        src: NodeId,
        dst: NodeId,
        etype: impl Into<String>,
        props: PropertyMap,
    ) -> Result<EdgeId, GraphError> {
        if self.frozen {
            return Err(GraphError::FrozenGraph);
        }
        if src.index() >= self.nodes.len() {
            return Err(GraphError::UnknownNode(src));
        }
        if dst.index() >= self.nodes.len() {
            return Err(GraphError::UnknownNode(dst));
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge {
            id,
            src,
            dst,
            etype: etype.into(),
            props,
        });
        self.out_adj[src.index()].push(id);
        self.in_adj[dst.index()].push(id);
        Ok(id)
    }

    /// Makes the graph immutable. Idempotent.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Nodes carrying `label`, optionally filtered to `key = value`.
    ///
    /// With a key the property index is probed (never a scan); numeric values
    /// also probe their Int/Float promoted twin. Unknown labels yield an
    /// empty set.
    pub fn nodes_by_label_prop(
        &self,
        label: &str,
        key: Option<&str>,
        value: Option<&PropertyValue>,
    ) -> BTreeSet<NodeId> {
        match (key, value) {
            (Some(k), Some(v)) => {
                let mut out = self
                    .prop_index
                    .get(&(label.to_string(), k.to_string(), v.index_key()))
                    .cloned()
                    .unwrap_or_default();
                if let Some(twin) = v.promoted_twin() {
                    if let Some(more) =
                        self.prop_index
                            .get(&(label.to_string(), k.to_string(), twin.index_key()))
                    {
                        out.extend(more.iter().copied());
                    }
                }
                out
            }
            _ => self.label_index.get(label).cloned().unwrap_or_default(),
        }
    }

    /// Incident edges of `n` filtered by type and direction, ordered by edge id.
    /// With `Direction::Both` a self-loop is reported once.
    pub fn neighbors(
        &self,
        n: NodeId,
        etype: Option<&str>,
        direction: Direction,
    ) -> Result<Vec<(EdgeId, NodeId)>, GraphError> {
        if n.index() >= self.nodes.len() {
            return Err(GraphError::UnknownNode(n));
        }
        let mut hits: Vec<(EdgeId, NodeId)> = Vec::new();
        let want = |e: &Edge| etype.is_none_or(|t| e.etype == t);
        if matches!(direction, Direction::Out | Direction::Both) {
            for &eid in &self.out_adj[n.index()] {
                let e = &self.edges[eid.index()];
                if want(e) {
                    hits.push((eid, e.dst));
                }
            }
        }
        if matches!(direction, Direction::In | Direction::Both) {
            for &eid in &self.in_adj[n.index()] {
                let e = &self.edges[eid.index()];
                // skip self-loops already collected on the out side
                if want(e) && !(direction == Direction::Both && e.src == e.dst) {
                    hits.push((eid, e.src));
                }
            }
        }
        hits.sort_by_key(|(eid, _)| *eid);
        Ok(hits)
    }

    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.out_adj[n.index()]
    }

    pub fn in_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.in_adj[n.index()]
    }

    /// Directed density D(G) = |E| / (|V| * (|V| - 1)).
    ///
    /// Parallel edges count toward |E|, so the value can exceed 1 for
    /// multigraphs; [`audit`](Self::audit) flags that case.
    pub fn density(&self) -> Result<f64, GraphError> {
        let v = self.nodes.len();
        if v < 2 {
            return Err(GraphError::DegenerateGraph(v));
        }
        Ok(self.edges.len() as f64 / (v as f64 * (v as f64 - 1.0)))
    }

    /// Verifies index invariants; returns an empty list iff they all hold.
    pub fn audit(&self) -> Vec<Finding> {
        let mut findings = Vec::new();

        let mut expect_label: BTreeMap<String, BTreeSet<NodeId>> = BTreeMap::new();
        let mut expect_prop: BTreeMap<(String, String, IndexKey), BTreeSet<NodeId>> =
            BTreeMap::new();
        for n in &self.nodes {
            expect_label.entry(n.label.clone()).or_default().insert(n.id);
            for (k, v) in &n.props {
                expect_prop
                    .entry((n.label.clone(), k.clone(), v.index_key()))
                    .or_default()
                    .insert(n.id);
            }
        }
        if expect_label != self.label_index {
            findings.push(Finding {
                kind: FindingKind::LabelIndexMismatch,
                detail: "label index disagrees with node contents".into(),
            });
        }
        if expect_prop != self.prop_index {
            findings.push(Finding {
                kind: FindingKind::PropIndexMismatch,
                detail: "property index disagrees with node contents".into(),
            });
        }

        let out_total: usize = self.out_adj.iter().map(Vec::len).sum();
        let in_total: usize = self.in_adj.iter().map(Vec::len).sum();
        if out_total != self.edges.len() || in_total != self.edges.len() {
            findings.push(Finding {
                kind: FindingKind::AdjacencyMismatch,
                detail: format!(
                    "adjacency totals out={out_total} in={in_total} vs |E|={}",
                    self.edges.len()
                ),
            });
        }
        for e in &self.edges {
            if e.src.index() >= self.nodes.len() || e.dst.index() >= self.nodes.len() {
                findings.push(Finding {
                    kind: FindingKind::DanglingEndpoint,
                    detail: format!("edge {} references a missing node", e.id),
                });
            }
        }
        if let Ok(d) = self.density() {
            if d > 1.0 {
                findings.push(Finding {
                    kind: FindingKind::DensityExceedsSimpleBound,
                    detail: format!("density {d} exceeds the simple-digraph bound"),
                });
            }
        }
        findings
    }

    #[cfg(test)]
    pub(crate) fn corrupt_label_index_for_test(&mut self) {
        self.label_index
            .entry("__phantom".into())
            .or_default()
            .insert(NodeId(0));
    }
}
