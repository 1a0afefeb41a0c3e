//! Brute-force reference executor.
//!
//! Exhaustively enumerates variable bindings with no indices and no
//! planning: paths are matched in source order, node candidates come from a
//! full node scan and relationship candidates from a full edge scan. Serves
//! as the testing oracle for [`execute`](super::execute); result row
//! multisets must agree. Guarded to small graphs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use super::ast::*;
use super::{ExecStats, QueryError, ResultTable};
use crate::graph::{Graph, NodeId, PropertyValue};

pub const REFERENCE_NODE_LIMIT: usize = 200;

#[derive(Debug, Clone, Default)]
struct Env {
    nodes: BTreeMap<String, NodeId>,
    edges: BTreeMap<String, u32>,
    consumed: BTreeSet<u32>,
}

fn lit(l: &Literal) -> PropertyValue {
    match l {
        Literal::Str(s) => PropertyValue::Text(s.clone()),
        Literal::Int(i) => PropertyValue::Int(*i),
        Literal::Float(f) => PropertyValue::Float(*f),
        Literal::Bool(b) => PropertyValue::Bool(*b),
    }
}

// Three-valued comparison, written out by case.
fn cmp3(op: CmpOp, a: &PropertyValue, b: &PropertyValue) -> Option<bool> {
    use PropertyValue as V;
    if op == CmpOp::Contains {
        if let (V::Text(x), V::Text(y)) = (a, b) {
            return Some(x.contains(y.as_str()));
        }
        return None;
    }
    let numeric = |v: &V| -> Option<f64> {
        match v {
            V::Int(i) => Some(*i as f64),
            V::Float(f) => Some(*f),
            _ => None,
        }
    };
    let ord: Ordering = match (a, b) {
        (V::Int(x), V::Int(y)) => x.cmp(y),
        (V::Text(x), V::Text(y)) => x.cmp(y),
        (V::Bool(x), V::Bool(y)) => x.cmp(y),
        _ => {
            let (x, y) = (numeric(a)?, numeric(b)?);
            x.partial_cmp(&y)?
        }
    };
    Some(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
        CmpOp::Contains => unreachable!(),
    })
}

fn node_summary(g: &Graph, id: NodeId) -> String {
    let n = g.node(id).expect("node exists");
    let mut parts = Vec::new();
    for (k, v) in &n.props {
        parts.push(format!("{k}: {v}"));
    }
    format!("{} {{{}}}", n.label, parts.join(", "))
}

fn edge_summary(g: &Graph, id: u32) -> String {
    let e = g.edge(crate::graph::EdgeId(id)).expect("edge exists");
    let mut parts = Vec::new();
    for (k, v) in &e.props {
        parts.push(format!("{k}: {v}"));
    }
    format!("{} {{{}}}", e.etype, parts.join(", "))
}

fn value_of(g: &Graph, env: &Env, e: &Expr) -> Option<PropertyValue> {
    match e {
        Expr::Literal(l) => Some(lit(l)),
        Expr::Prop { var, key } => {
            if let Some(id) = env.nodes.get(var) {
                return g.node(*id).and_then(|n| n.props.get(key).cloned());
            }
            if let Some(id) = env.edges.get(var) {
                return g
                    .edge(crate::graph::EdgeId(*id))
                    .and_then(|e| e.props.get(key).cloned());
            }
            None
        }
        Expr::Var(v) => {
            if let Some(id) = env.nodes.get(v) {
                return Some(PropertyValue::Text(node_summary(g, *id)));
            }
            if let Some(id) = env.edges.get(v) {
                return Some(PropertyValue::Text(edge_summary(g, *id)));
            }
            None
        }
        _ => holds(g, env, e).map(PropertyValue::Bool),
    }
}

/// Kleene evaluation; None is the null truth value.
fn holds(g: &Graph, env: &Env, e: &Expr) -> Option<bool> {
    match e {
        Expr::And(a, b) => match (holds(g, env, a), holds(g, env, b)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Expr::Or(a, b) => match (holds(g, env, a), holds(g, env, b)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Expr::Not(x) => holds(g, env, x).map(|b| !b),
        Expr::Cmp { op, lhs, rhs } => {
            let a = value_of(g, env, lhs)?;
            let b = value_of(g, env, rhs)?;
            cmp3(*op, &a, &b)
        }
        other => match value_of(g, env, other)? {
            PropertyValue::Bool(b) => Some(b),
            _ => None,
        },
    }
}

fn node_matches(g: &Graph, id: NodeId, np: &NodePattern) -> bool {
    let Some(n) = g.node(id) else { return false };
    if let Some(want) = &np.label {
        if &n.label != want {
            return false;
        }
    }
    for (k, l) in &np.props {
        let Some(v) = n.props.get(k) else { return false };
        if cmp3(CmpOp::Eq, v, &lit(l)) != Some(true) {
            return false;
        }
    }
    true
}

fn bind_node(env: &Env, np: &NodePattern, id: NodeId) -> Option<Env> {
    if let Some(var) = &np.var {
        if let Some(&existing) = env.nodes.get(var) {
            if existing != id {
                return None;
            }
            return Some(env.clone());
        }
        let mut next = env.clone();
        next.nodes.insert(var.clone(), id);
        return Some(next);
    }
    Some(env.clone())
}

/// All (env) extensions matching `path` starting from `env`, scanning every
/// node and every edge.
fn enumerate_path(g: &Graph, env: Env, path: &PathPattern) -> Vec<Env> {
    let mut current: Vec<(Env, NodeId)> = Vec::new();
    for n in g.nodes() {
        if node_matches(g, n.id, &path.start) {
            if let Some(e2) = bind_node(&env, &path.start, n.id) {
                current.push((e2, n.id));
            }
        }
    }
    for (rel, right_np) in &path.steps {
        let mut next: Vec<(Env, NodeId)> = Vec::new();
        for (env, left) in &current {
            for e in g.edges() {
                if e.etype != rel.etype {
                    continue;
                }
                let mut prop_ok = true;
                for (k, l) in &rel.props {
                    match e.props.get(k) {
                        Some(v) if cmp3(CmpOp::Eq, v, &lit(l)) == Some(true) => {}
                        _ => {
                            prop_ok = false;
                            break;
                        }
                    }
                }
                if !prop_ok {
                    continue;
                }
                // endpoint orientations this edge can satisfy
                let mut rights: Vec<NodeId> = Vec::new();
                match rel.dir {
                    RelDir::Out => {
                        if e.src == *left {
                            rights.push(e.dst);
                        }
                    }
                    RelDir::In => {
                        if e.dst == *left {
                            rights.push(e.src);
                        }
                    }
                    RelDir::Undirected => {
                        if e.src == *left {
                            rights.push(e.dst);
                        }
                        if e.dst == *left && e.src != e.dst {
                            rights.push(e.src);
                        }
                    }
                }
                for right in rights {
                    if env.consumed.contains(&e.id.0) {
                        continue;
                    }
                    if let Some(var) = &rel.var {
                        if env.edges.get(var).is_some_and(|&b| b != e.id.0) {
                            continue;
                        }
                    }
                    if !node_matches(g, right, right_np) {
                        continue;
                    }
                    let Some(mut env2) = bind_node(env, right_np, right) else {
                        continue;
                    };
                    env2.consumed.insert(e.id.0);
                    if let Some(var) = &rel.var {
                        env2.edges.insert(var.clone(), e.id.0);
                    }
                    next.push((env2, right));
                }
            }
        }
        current = next;
    }
    current.into_iter().map(|(env, _)| env).collect()
}

// normalized grouping key: integral floats collapse to ints
#[derive(PartialEq, Eq, PartialOrd, Ord, Clone)]
enum RKey {
    Null,
    Bool(bool),
    Int(i64),
    FloatBits(u64),
    Text(String),
}

fn rkey(cell: &Option<PropertyValue>) -> RKey {
    match cell {
        None => RKey::Null,
        Some(PropertyValue::Bool(b)) => RKey::Bool(*b),
        Some(PropertyValue::Int(i)) => RKey::Int(*i),
        Some(PropertyValue::Float(f)) => {
            let integral = f.fract() == 0.0 && *f >= i64::MIN as f64 && *f <= i64::MAX as f64;
            if integral {
                RKey::Int(*f as i64)
            } else {
                RKey::FloatBits(f.to_bits())
            }
        }
        Some(PropertyValue::Text(s)) => RKey::Text(s.clone()),
    }
}

// ORDER BY cell order: Bool < numbers < Text < Null
fn cell_order(a: &Option<PropertyValue>, b: &Option<PropertyValue>) -> Ordering {
    use PropertyValue as V;
    let class = |c: &Option<V>| match c {
        Some(V::Bool(_)) => 0u8,
        Some(V::Int(_)) | Some(V::Float(_)) => 1,
        Some(V::Text(_)) => 2,
        None => 3,
    };
    let (ca, cb) = (class(a), class(b));
    if ca != cb {
        return ca.cmp(&cb);
    }
    match (a, b) {
        (Some(V::Bool(x)), Some(V::Bool(y))) => x.cmp(y),
        (Some(V::Text(x)), Some(V::Text(y))) => x.cmp(y),
        (Some(x), Some(y)) => {
            let f = |v: &V| match v {
                V::Int(i) => *i as f64,
                V::Float(f) => *f,
                _ => unreachable!(),
            };
            f(x).total_cmp(&f(y))
        }
        _ => Ordering::Equal,
    }
}

fn sum_values(values: &[PropertyValue]) -> Option<PropertyValue> {
    let mut int_total: i128 = 0;
    let mut floats: Vec<f64> = Vec::new();
    for v in values {
        match v {
            PropertyValue::Int(i) => int_total += *i as i128,
            PropertyValue::Float(f) => floats.push(*f),
            _ => return None,
        }
    }
    if floats.is_empty() {
        return Some(match i64::try_from(int_total) {
            Ok(i) => PropertyValue::Int(i),
            Err(_) => PropertyValue::Float(int_total as f64),
        });
    }
    floats.sort_by(f64::total_cmp);
    let s: f64 = floats.iter().sum();
    Some(PropertyValue::Float(s + int_total as f64))
}

/// Exhaustive executor. Errors with [`QueryError::SizeGuard`] above
/// [`REFERENCE_NODE_LIMIT`] nodes.
pub fn reference_execute(g: &Graph, ast: &QueryAst) -> Result<ResultTable, QueryError> {
    if g.node_count() > REFERENCE_NODE_LIMIT {
        return Err(QueryError::SizeGuard {
            nodes: g.node_count(),
            limit: REFERENCE_NODE_LIMIT,
        });
    }
    let started = Instant::now();

    let mut envs = vec![Env::default()];
    for path in &ast.patterns {
        let mut next = Vec::new();
        for env in envs {
            next.extend(enumerate_path(g, env, path));
        }
        envs = next;
    }
    if let Some(w) = &ast.where_clause {
        envs.retain(|env| holds(g, env, w) == Some(true));
    }
    let matched = envs.len();

    let columns: Vec<String> = ast
        .return_items
        .iter()
        .map(|it| it.alias.clone().unwrap_or_else(|| it.expr.to_string()))
        .collect();

    let has_aggs = ast.has_aggregates();
    let mut rows: Vec<Vec<Option<PropertyValue>>>;
    let mut order_cells: Vec<Option<PropertyValue>> = Vec::new();

    if !has_aggs {
        rows = Vec::new();
        for env in &envs {
            let row: Vec<Option<PropertyValue>> = ast
                .return_items
                .iter()
                .map(|it| match &it.expr {
                    ReturnExpr::Value(e) => value_of(g, env, e),
                    ReturnExpr::Aggregate { .. } => unreachable!(),
                })
                .collect();
            if let Some(o) = &ast.order_by {
                order_cells.push(value_of(g, env, &o.expr));
            }
            rows.push(row);
        }
    } else {
        // group rows by the non-aggregate return values
        let mut groups: Vec<(Vec<RKey>, Vec<Option<PropertyValue>>, Vec<&Env>)> = Vec::new();
        for env in &envs {
            let mut cells = Vec::new();
            for it in &ast.return_items {
                if let ReturnExpr::Value(e) = &it.expr {
                    cells.push(value_of(g, env, e));
                }
            }
            let key: Vec<RKey> = cells.iter().map(rkey).collect();
            match groups.iter_mut().find(|(k, _, _)| *k == key) {
                Some((_, _, members)) => members.push(env),
                None => groups.push((key, cells, vec![env])),
            }
        }
        let grouped = ast
            .return_items
            .iter()
            .any(|it| matches!(it.expr, ReturnExpr::Value(_)));
        if !grouped && groups.is_empty() {
            groups.push((Vec::new(), Vec::new(), Vec::new()));
        }
        groups.sort_by(|(ka, _, _), (kb, _, _)| ka.cmp(kb));

        rows = Vec::new();
        for (_, cells, members) in &groups {
            let mut row: Vec<Option<PropertyValue>> = Vec::new();
            let mut cell_iter = cells.iter().cloned();
            for it in &ast.return_items {
                match &it.expr {
                    ReturnExpr::Value(_) => row.push(cell_iter.next().expect("group cell")),
                    ReturnExpr::Aggregate {
                        func,
                        distinct,
                        arg,
                    } => {
                        let gathered: Vec<Option<PropertyValue>> = members
                            .iter()
                            .map(|env| match arg {
                                AggArg::Star => Some(PropertyValue::Bool(true)),
                                AggArg::Expr(e) => value_of(g, env, e),
                            })
                            .collect();
                        let cell = match func {
                            AggFunc::Count => {
                                if *distinct {
                                    let set: BTreeSet<RKey> = gathered
                                        .iter()
                                        .filter(|c| c.is_some())
                                        .map(rkey)
                                        .collect();
                                    Some(PropertyValue::Int(set.len() as i64))
                                } else {
                                    let n = match arg {
                                        AggArg::Star => members.len(),
                                        AggArg::Expr(_) => {
                                            gathered.iter().filter(|c| c.is_some()).count()
                                        }
                                    };
                                    Some(PropertyValue::Int(n as i64))
                                }
                            }
                            AggFunc::Sum => {
                                let vals: Vec<PropertyValue> =
                                    gathered.into_iter().flatten().collect();
                                sum_values(&vals)
                            }
                            AggFunc::Collect => {
                                let mut vals: Vec<PropertyValue> =
                                    gathered.into_iter().flatten().collect();
                                vals.sort_by(|a, b| {
                                    cell_order(&Some(a.clone()), &Some(b.clone()))
                                });
                                Some(PropertyValue::Text(
                                    vals.iter()
                                        .map(|v| v.to_string())
                                        .collect::<Vec<_>>()
                                        .join(", "),
                                ))
                            }
                        };
                        row.push(cell);
                    }
                }
            }
            rows.push(row);
        }
    }

    // ORDER BY: alias or structural column match, else per-match expression
    if let Some(order) = &ast.order_by {
        let col = ast
            .return_items
            .iter()
            .position(|it| {
                (matches!(&order.expr, Expr::Var(n) if it.alias.as_deref() == Some(n.as_str())))
                    || matches!(&it.expr, ReturnExpr::Value(e) if e == &order.expr)
            });
        let mut indices: Vec<usize> = (0..rows.len()).collect();
        match col {
            Some(c) => indices.sort_by(|&i, &j| {
                let ord = cell_order(&rows[i][c], &rows[j][c]);
                if order.descending { ord.reverse() } else { ord }
            }),
            None => {
                if !has_aggs {
                    indices.sort_by(|&i, &j| {
                        let ord = cell_order(&order_cells[i], &order_cells[j]);
                        if order.descending { ord.reverse() } else { ord }
                    });
                }
            }
        }
        rows = indices.into_iter().map(|i| rows[i].clone()).collect();
    }
    if let Some(limit) = ast.limit {
        rows.truncate(limit as usize);
    }

    Ok(ResultTable {
        columns,
        rows,
        stats: ExecStats {
            matched,
            duration_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    })
}
