//! Backtracking pattern executor.
//!
//! Matching uses the graph's label/property indices for anchor selection
//! (as chosen by the planner) and adjacency lists for expansion. Edge
//! uniqueness is enforced across the whole MATCH clause: no edge is bound
//! twice within one result row. Comparison semantics are three-valued;
//! WHERE keeps only rows whose predicate is strictly true.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use super::ast::*;
use super::plan::{AnchorSource, OrderTarget, Plan};
use super::{ExecStats, ResultTable};
use crate::graph::{Edge, EdgeId, Graph, NodeId, PropertyValue};

#[derive(Debug, Clone, Default)]
pub(crate) struct Frame {
    pub nodes: BTreeMap<String, NodeId>,
    pub edges: BTreeMap<String, EdgeId>,
    pub used: BTreeSet<EdgeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tv {
    True,
    False,
    Null,
}

pub(crate) fn lit_value(l: &Literal) -> PropertyValue {
    match l {
        Literal::Str(s) => PropertyValue::Text(s.clone()),
        Literal::Int(i) => PropertyValue::Int(*i),
        Literal::Float(f) => PropertyValue::Float(*f),
        Literal::Bool(b) => PropertyValue::Bool(*b),
    }
}

/// Three-valued comparison. Int/Float promote to f64; other mixed-tag
/// comparisons (and CONTAINS on non-text) yield Null.
pub(crate) fn compare(op: CmpOp, a: &PropertyValue, b: &PropertyValue) -> Tv {
    use PropertyValue::*;
    if op == CmpOp::Contains {
        return match (a, b) {
            (Text(x), Text(y)) => Tv::from(x.contains(y.as_str())),
            _ => Tv::Null,
        };
    }
    let ord = match (a, b) {
        (Int(x), Int(y)) => Some(x.cmp(y)),
        (Int(x), Float(y)) => (*x as f64).partial_cmp(y),
        (Float(x), Int(y)) => x.partial_cmp(&(*y as f64)),
        (Float(x), Float(y)) => x.partial_cmp(y),
        (Text(x), Text(y)) => Some(x.cmp(y)),
        (Bool(x), Bool(y)) => Some(x.cmp(y)),
        _ => None,
    };
    let Some(ord) = ord else { return Tv::Null };
    Tv::from(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
        CmpOp::Contains => unreachable!(),
    })
}

impl From<bool> for Tv {
    fn from(b: bool) -> Tv {
        if b {
            Tv::True
        } else {
            Tv::False
        }
    }
}

/// Renders a node as "Label {key: value, ...}" with sorted keys.
pub fn render_node(g: &Graph, id: NodeId) -> String {
    let n = g.node(id).expect("node exists");
    let props: Vec<String> = n.props.iter().map(|(k, v)| format!("{k}: {v}")).collect();
    format!("{} {{{}}}", n.label, props.join(", "))
}

pub fn render_edge(g: &Graph, id: EdgeId) -> String {
    let e = g.edge(id).expect("edge exists");
    let props: Vec<String> = e.props.iter().map(|(k, v)| format!("{k}: {v}")).collect();
    format!("{} {{{}}}", e.etype, props.join(", "))
}

fn eval(g: &Graph, frame: &Frame, expr: &Expr) -> Option<PropertyValue> {
    match expr {
        Expr::Literal(l) => Some(lit_value(l)),
        Expr::Prop { var, key } => {
            if let Some(&id) = frame.nodes.get(var) {
                g.node(id)?.props.get(key).cloned()
            } else if let Some(&id) = frame.edges.get(var) {
                g.edge(id)?.props.get(key).cloned()
            } else {
                None
            }
        }
        Expr::Var(v) => {
            if let Some(&id) = frame.nodes.get(v) {
                Some(PropertyValue::Text(render_node(g, id)))
            } else if let Some(&id) = frame.edges.get(v) {
                Some(PropertyValue::Text(render_edge(g, id)))
            } else {
                None
            }
        }
        Expr::Cmp { .. } | Expr::And(..) | Expr::Or(..) | Expr::Not(..) => {
            match truth(g, frame, expr) {
                Tv::True => Some(PropertyValue::Bool(true)),
                Tv::False => Some(PropertyValue::Bool(false)),
                Tv::Null => None,
            }
        }
    }
}

fn truth(g: &Graph, frame: &Frame, expr: &Expr) -> Tv {
    match expr {
        Expr::Cmp { op, lhs, rhs } => {
            let (Some(a), Some(b)) = (eval(g, frame, lhs), eval(g, frame, rhs)) else {
                return Tv::Null;
            };
            compare(*op, &a, &b)
        }
        Expr::And(a, b) => match (truth(g, frame, a), truth(g, frame, b)) {
            (Tv::False, _) | (_, Tv::False) => Tv::False,
            (Tv::True, Tv::True) => Tv::True,
            _ => Tv::Null,
        },
        Expr::Or(a, b) => match (truth(g, frame, a), truth(g, frame, b)) {
            (Tv::True, _) | (_, Tv::True) => Tv::True,
            (Tv::False, Tv::False) => Tv::False,
            _ => Tv::Null,
        },
        Expr::Not(inner) => match truth(g, frame, inner) {
            Tv::True => Tv::False,
            Tv::False => Tv::True,
            Tv::Null => Tv::Null,
        },
        other => match eval(g, frame, other) {
            Some(PropertyValue::Bool(b)) => Tv::from(b),
            Some(_) => Tv::Null,
            None => Tv::Null,
        },
    }
}

fn node_ok(g: &Graph, id: NodeId, np: &NodePattern) -> bool {
    let Some(node) = g.node(id) else { return false };
    if let Some(l) = &np.label {
        if &node.label != l {
            return false;
        }
    }
    np.props.iter().all(|(k, lit)| {
        node.props
            .get(k)
            .is_some_and(|v| compare(CmpOp::Eq, v, &lit_value(lit)) == Tv::True)
    })
}

fn edge_ok(e: &Edge, rel: &RelPattern) -> bool {
    if e.etype != rel.etype {
        return false;
    }
    rel.props.iter().all(|(k, lit)| {
        e.props
            .get(k)
            .is_some_and(|v| compare(CmpOp::Eq, v, &lit_value(lit)) == Tv::True)
    })
}

/// Incident (edge, other-endpoint) candidates of `known` for one
/// relationship step, honoring the pattern's direction. `rightward` says
/// whether `known` is the step's left endpoint. Undirected steps take both
/// adjacency lists, with self-loops reported once.
fn edge_candidates(
    g: &Graph,
    known: NodeId,
    rel: &RelPattern,
    rightward: bool,
) -> Vec<(EdgeId, NodeId)> {
    let outward = |out: &mut Vec<(EdgeId, NodeId)>| {
        for &eid in g.out_edges(known) {
            let e = g.edge(eid).expect("edge exists");
            out.push((eid, e.dst));
        }
    };
    let inward = |out: &mut Vec<(EdgeId, NodeId)>, skip_loops: bool| {
        for &eid in g.in_edges(known) {
            let e = g.edge(eid).expect("edge exists");
            if skip_loops && e.src == e.dst {
                continue;
            }
            out.push((eid, e.src));
        }
    };
    let mut cands = Vec::new();
    let follow_out = match rel.dir {
        RelDir::Out => rightward,
        RelDir::In => !rightward,
        RelDir::Undirected => {
            outward(&mut cands);
            inward(&mut cands, true);
            return cands;
        }
    };
    if follow_out {
        outward(&mut cands);
    } else {
        inward(&mut cands, false);
    }
    cands
}

fn match_path(
    g: &Graph,
    base: &Frame,
    path: &PathPattern,
    anchor: usize,
    source: &AnchorSource,
    out: &mut Vec<Frame>,
) {
    let anchor_np = path.node_at(anchor);
    let candidates: Vec<NodeId> = if let Some(&id) =
        anchor_np.var.as_ref().and_then(|v| base.nodes.get(v))
    {
        vec![id]
    } else {
        match source {
            AnchorSource::Bound => Vec::new(), // bound var missing: no match
            AnchorSource::IndexProbe { key, value } => {
                let label = anchor_np.label.as_deref().unwrap_or_default();
                g.nodes_by_label_prop(label, Some(key), Some(&lit_value(value)))
                    .into_iter()
                    .collect()
            }
            AnchorSource::LabelScan(label) => {
                g.nodes_by_label_prop(label, None, None).into_iter().collect()
            }
            AnchorSource::AllNodes => g.nodes().map(|n| n.id).collect(),
        }
    };

    // expansion order: leftward from the anchor, then rightward
    let mut order: Vec<(usize, bool)> = Vec::new();
    for sidx in (0..anchor).rev() {
        order.push((sidx, false));
    }
    for sidx in anchor..path.steps.len() {
        order.push((sidx, true));
    }

    let mut pos_nodes: Vec<Option<NodeId>> = vec![None; path.len()];
    for cand in candidates {
        if !node_ok(g, cand, anchor_np) {
            continue;
        }
        let mut frame = base.clone();
        if let Some(var) = &anchor_np.var {
            if let Some(&bound) = frame.nodes.get(var) {
                if bound != cand {
                    continue;
                }
            }
            frame.nodes.insert(var.clone(), cand);
        }
        pos_nodes[anchor] = Some(cand);
        expand(g, path, &order, 0, frame, &mut pos_nodes, out);
        pos_nodes[anchor] = None;
    }
}

fn expand(
    g: &Graph,
    path: &PathPattern,
    order: &[(usize, bool)],
    k: usize,
    frame: Frame,
    pos_nodes: &mut Vec<Option<NodeId>>,
    out: &mut Vec<Frame>,
) {
    if k == order.len() {
        out.push(frame);
        return;
    }
    let (sidx, rightward) = order[k];
    let (rel, _) = &path.steps[sidx];
    let (known_pos, target_pos) = if rightward { (sidx, sidx + 1) } else { (sidx + 1, sidx) };
    let known = pos_nodes[known_pos].expect("expansion source is bound");
    let target_np = path.node_at(target_pos);

    for (eid, other) in edge_candidates(g, known, rel, rightward) {
        let e = g.edge(eid).expect("edge exists");
        if !edge_ok(e, rel) || frame.used.contains(&eid) {
            continue;
        }
        if let Some(var) = &rel.var {
            if frame.edges.get(var).is_some_and(|&b| b != eid) {
                continue;
            }
        }
        if !node_ok(g, other, target_np) {
            continue;
        }
        if let Some(var) = &target_np.var {
            if frame.nodes.get(var).is_some_and(|&b| b != other) {
                continue;
            }
        }
        let mut next = frame.clone();
        next.used.insert(eid);
        if let Some(var) = &rel.var {
            next.edges.insert(var.clone(), eid);
        }
        if let Some(var) = &target_np.var {
            next.nodes.insert(var.clone(), other);
        }
        pos_nodes[target_pos] = Some(other);
        expand(g, path, order, k + 1, next, pos_nodes, out);
        pos_nodes[target_pos] = None;
    }
}

// --- projection, grouping, ordering ---

/// Grouping key with numeric normalization: an integral Float groups with
/// the equal Int.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum GroupKey {
    Null,
    Bool(bool),
    Int(i64),
    Float(u64),
    Text(String),
}

pub(crate) fn group_key(cell: &Option<PropertyValue>) -> GroupKey {
    match cell {
        None => GroupKey::Null,
        Some(PropertyValue::Bool(b)) => GroupKey::Bool(*b),
        Some(PropertyValue::Int(i)) => GroupKey::Int(*i),
        Some(PropertyValue::Float(f)) => {
            if f.fract() == 0.0 && *f >= i64::MIN as f64 && *f <= i64::MAX as f64 {
                GroupKey::Int(*f as i64)
            } else {
                GroupKey::Float(f.to_bits())
            }
        }
        Some(PropertyValue::Text(s)) => GroupKey::Text(s.clone()),
    }
}

/// Total order on result cells for ORDER BY: Bool < numbers < Text < Null.
pub(crate) fn cmp_cells(a: &Option<PropertyValue>, b: &Option<PropertyValue>) -> Ordering {
    use PropertyValue::*;
    fn rank(c: &Option<PropertyValue>) -> u8 {
        match c {
            Some(Bool(_)) => 0,
            Some(Int(_)) | Some(Float(_)) => 1,
            Some(Text(_)) => 2,
            None => 3,
        }
    }
    match (rank(a), rank(b)) {
        (x, y) if x != y => x.cmp(&y),
        (0, _) => {
            let (Some(Bool(x)), Some(Bool(y))) = (a, b) else { unreachable!() };
            x.cmp(y)
        }
        (1, _) => {
            let to_f = |c: &Option<PropertyValue>| match c {
                Some(Int(i)) => *i as f64,
                Some(Float(f)) => *f,
                _ => unreachable!(),
            };
            to_f(a).total_cmp(&to_f(b))
        }
        (2, _) => {
            let (Some(Text(x)), Some(Text(y))) = (a, b) else { unreachable!() };
            x.cmp(y)
        }
        _ => Ordering::Equal,
    }
}

enum AggAcc {
    Count(usize),
    CountDistinct(BTreeSet<GroupKey>),
    Sum {
        int: i128,
        floats: Vec<f64>,
        bad: bool,
    },
    Collect(Vec<PropertyValue>),
}

/// Order-independent float summation: summands sorted by total order first.
/// Keeps sums bit-exact regardless of match enumeration order.
pub(crate) fn sum_cells(int: i128, mut floats: Vec<f64>) -> PropertyValue {
    if floats.is_empty() {
        return i64::try_from(int)
            .map(PropertyValue::Int)
            .unwrap_or(PropertyValue::Float(int as f64));
    }
    floats.sort_by(f64::total_cmp);
    let float_sum: f64 = floats.iter().sum();
    PropertyValue::Float(float_sum + int as f64)
}

impl AggAcc {
    fn new(func: AggFunc, distinct: bool) -> AggAcc {
        match (func, distinct) {
            (AggFunc::Count, false) => AggAcc::Count(0),
            (AggFunc::Count, true) => AggAcc::CountDistinct(BTreeSet::new()),
            (AggFunc::Sum, _) => AggAcc::Sum {
                int: 0,
                floats: Vec::new(),
                bad: false,
            },
            (AggFunc::Collect, _) => AggAcc::Collect(Vec::new()),
        }
    }

    fn feed(&mut self, cell: Option<PropertyValue>) {
        match self {
            AggAcc::Count(n) => {
                if cell.is_some() {
                    *n += 1;
                }
            }
            AggAcc::CountDistinct(set) => {
                if cell.is_some() {
                    set.insert(group_key(&cell));
                }
            }
            AggAcc::Sum { int, floats, bad } => match cell {
                None => {}
                Some(PropertyValue::Int(i)) => *int += i as i128,
                Some(PropertyValue::Float(f)) => floats.push(f),
                Some(_) => *bad = true,
            },
            AggAcc::Collect(parts) => {
                if let Some(v) = cell {
                    parts.push(v);
                }
            }
        }
    }

    fn feed_row(&mut self) {
        if let AggAcc::Count(n) = self {
            *n += 1;
        }
    }

    fn finish(self) -> Option<PropertyValue> {
        match self {
            AggAcc::Count(n) => Some(PropertyValue::Int(n as i64)),
            AggAcc::CountDistinct(set) => Some(PropertyValue::Int(set.len() as i64)),
            AggAcc::Sum { int, floats, bad } => {
                if bad {
                    None
                } else {
                    Some(sum_cells(int, floats))
                }
            }
            AggAcc::Collect(parts) => Some(PropertyValue::Text(join_collected(parts))),
        }
    }
}

/// Collected values render joined by ", " in ascending cell order, making
/// the output independent of match enumeration order.
pub(crate) fn join_collected(mut parts: Vec<PropertyValue>) -> String {
    parts.sort_by(|a, b| cmp_cells(&Some(a.clone()), &Some(b.clone())));
    parts
        .iter()
        .map(PropertyValue::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn column_names(ast: &QueryAst) -> Vec<String> {
    ast.return_items
        .iter()
        .map(|it| it.alias.clone().unwrap_or_else(|| it.expr.to_string()))
        .collect()
}

fn project(
    g: &Graph,
    ast: &QueryAst,
    frames: &[Frame],
    order: &Option<OrderTarget>,
) -> Vec<Vec<Option<PropertyValue>>> {
    let descending = ast.order_by.as_ref().is_some_and(|o| o.descending);
    let mut rows: Vec<Vec<Option<PropertyValue>>>;

    if !ast.has_aggregates() {
        let mut keyed: Vec<(Option<PropertyValue>, Vec<Option<PropertyValue>>)> = frames
            .iter()
            .map(|f| {
                let row: Vec<Option<PropertyValue>> = ast
                    .return_items
                    .iter()
                    .map(|it| match &it.expr {
                        ReturnExpr::Value(e) => eval(g, f, e),
                        ReturnExpr::Aggregate { .. } => unreachable!(),
                    })
                    .collect();
                let sort_cell = match order {
                    Some(OrderTarget::FrameExpr) => {
                        eval(g, f, &ast.order_by.as_ref().expect("order target").expr)
                    }
                    _ => None,
                };
                (sort_cell, row)
            })
            .collect();
        match order {
            Some(OrderTarget::FrameExpr) => {
                keyed.sort_by(|(a, _), (b, _)| {
                    let ord = cmp_cells(a, b);
                    if descending {
                        ord.reverse()
                    } else {
                        ord
                    }
                });
            }
            Some(OrderTarget::Column(idx)) => {
                keyed.sort_by(|(_, ra), (_, rb)| {
                    let ord = cmp_cells(&ra[*idx], &rb[*idx]);
                    if descending {
                        ord.reverse()
                    } else {
                        ord
                    }
                });
            }
            None => {}
        }
        rows = keyed.into_iter().map(|(_, row)| row).collect();
    } else {
        let group_positions: Vec<usize> = ast
            .return_items
            .iter()
            .enumerate()
            .filter(|(_, it)| matches!(it.expr, ReturnExpr::Value(_)))
            .map(|(i, _)| i)
            .collect();

        let mut groups: BTreeMap<Vec<GroupKey>, (Vec<Option<PropertyValue>>, Vec<AggAcc>)> =
            BTreeMap::new();
        let make_accs = |ast: &QueryAst| -> Vec<AggAcc> {
            ast.return_items
                .iter()
                .filter_map(|it| match &it.expr {
                    ReturnExpr::Aggregate { func, distinct, .. } => {
                        Some(AggAcc::new(*func, *distinct))
                    }
                    ReturnExpr::Value(_) => None,
                })
                .collect()
        };
        if group_positions.is_empty() {
            groups.insert(Vec::new(), (Vec::new(), make_accs(ast)));
        }
        for f in frames {
            let cells: Vec<Option<PropertyValue>> = group_positions
                .iter()
                .map(|&i| match &ast.return_items[i].expr {
                    ReturnExpr::Value(e) => eval(g, f, e),
                    ReturnExpr::Aggregate { .. } => unreachable!(),
                })
                .collect();
            let key: Vec<GroupKey> = cells.iter().map(group_key).collect();
            let entry = groups
                .entry(key)
                .or_insert_with(|| (cells.clone(), make_accs(ast)));
            let mut agg_idx = 0;
            for it in &ast.return_items {
                if let ReturnExpr::Aggregate { arg, .. } = &it.expr {
                    match arg {
                        AggArg::Star => entry.1[agg_idx].feed_row(),
                        AggArg::Expr(e) => entry.1[agg_idx].feed(eval(g, f, e)),
                    }
                    agg_idx += 1;
                }
            }
        }
        rows = groups
            .into_values()
            .map(|(cells, accs)| {
                let mut finished = accs.into_iter().map(AggAcc::finish);
                let mut cell_iter = cells.into_iter();
                ast.return_items
                    .iter()
                    .map(|it| match it.expr {
                        ReturnExpr::Value(_) => cell_iter.next().expect("group cell"),
                        ReturnExpr::Aggregate { .. } => finished.next().expect("agg cell"),
                    })
                    .collect()
            })
            .collect();
        if let Some(OrderTarget::Column(idx)) = order {
            rows.sort_by(|ra, rb| {
                let ord = cmp_cells(&ra[*idx], &rb[*idx]);
                if descending {
                    ord.reverse()
                } else {
                    ord
                }
            });
        }
    }

    if let Some(limit) = ast.limit {
        rows.truncate(limit as usize);
    }
    rows
}

/// Runs a plan against a graph. Read-only; safe to call concurrently on a
/// frozen graph.
pub fn execute(g: &Graph, plan: &Plan) -> ResultTable {
    let started = Instant::now();
    let ast = &plan.ast;

    let mut frames = vec![Frame::default()];
    for pp in &plan.paths {
        let mut next = Vec::new();
        for frame in &frames {
            match_path(g, frame, &ast.patterns[pp.path], pp.anchor, &pp.source, &mut next);
        }
        frames = next;
        if frames.is_empty() {
            break;
        }
    }
    if let Some(w) = &ast.where_clause {
        frames.retain(|f| truth(g, f, w) == Tv::True);
    }
    let matched = frames.len();
    let rows = project(g, ast, &frames, &plan.order);

    ResultTable {
        columns: column_names(ast),
        rows,
        stats: ExecStats {
            matched,
            duration_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    }
}
