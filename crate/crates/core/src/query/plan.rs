//! Query planner: semantic validation plus a greedy join order that starts
//! each path at its most selective node pattern.
//!
//! Unknown labels/types/keys are only rejected when the schema actually
//! carries that dimension (an empty graph has no schema to contradict, and
//! every query over it simply matches nothing).

use std::collections::BTreeSet;

use super::ast::*;
use super::{GraphSchema, QueryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    /// Most selective anchors first.
    Best,
    /// Deliberately worst anchors and path order; results must not change.
    ForcedWorst,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnchorSource {
    /// Anchor variable is already bound by an earlier path.
    Bound,
    /// Property-index probe on (label, key, value).
    IndexProbe { key: String, value: Literal },
    LabelScan(String),
    AllNodes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPlan {
    pub path: usize,
    pub anchor: usize,
    pub source: AnchorSource,
}

/// Where the executor finds the ORDER BY sort key.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderTarget {
    /// Sort by an output column (alias or structurally equal return item).
    Column(usize),
    /// Evaluate the expression per match (only valid without aggregates).
    FrameExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub ast: QueryAst,
    pub paths: Vec<PathPlan>,
    pub order: Option<OrderTarget>,
    pub cross_product_warning: bool,
}

fn suggest<'a>(
    name: &str,
    known: impl Iterator<Item = &'a str>,
) -> Option<String> {
    let mut best: Option<(usize, &str)> = None;
    for cand in known {
        let d = crate::util::levenshtein(&name.to_lowercase(), &cand.to_lowercase());
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, cand));
        }
    }
    best.filter(|(d, _)| *d <= 2).map(|(_, c)| c.to_string())
}

fn semantic(detail: impl Into<String>, suggestion: Option<String>) -> QueryError {
    QueryError::Semantic {
        detail: detail.into(),
        suggestion,
    }
}

pub fn plan(ast: &QueryAst, schema: &GraphSchema) -> Result<Plan, QueryError> {
    plan_with_mode(ast, schema, PlanMode::Best)
}

pub fn plan_with_mode(
    ast: &QueryAst,
    schema: &GraphSchema,
    mode: PlanMode,
) -> Result<Plan, QueryError> {
    validate(ast, schema)?;

    let order = resolve_order(ast)?;

    // greedy path ordering
    let mut remaining: Vec<usize> = (0..ast.patterns.len()).collect();
    let mut ordered: Vec<PathPlan> = Vec::new();
    let mut bound: BTreeSet<&str> = BTreeSet::new();
    let mut cross_product_warning = false;

    while !remaining.is_empty() {
        let connected: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&p| shares_var(&ast.patterns[p], &bound))
            .collect();
        let pool = if connected.is_empty() {
            if !ordered.is_empty() {
                cross_product_warning = true;
            }
            remaining.clone()
        } else {
            connected
        };

        let pick = *pool
            .iter()
            .min_by_key(|&&p| {
                let (est, _, _) = best_anchor(&ast.patterns[p], schema, &bound, mode);
                match mode {
                    PlanMode::Best => (est, p),
                    PlanMode::ForcedWorst => (usize::MAX - est, p),
                }
            })
            .expect("pool is nonempty");
        let (_, anchor, source) = best_anchor(&ast.patterns[pick], schema, &bound, mode);
        ordered.push(PathPlan {
            path: pick,
            anchor,
            source,
        });
        for np in ast.patterns[pick].node_patterns() {
            if let Some(v) = &np.var {
                bound.insert(v);
            }
        }
        remaining.retain(|&p| p != pick);
    }

    Ok(Plan {
        ast: ast.clone(),
        paths: ordered,
        order,
        cross_product_warning,
    })
}

fn shares_var(path: &PathPattern, bound: &BTreeSet<&str>) -> bool {
    path.node_patterns()
        .any(|np| np.var.as_deref().is_some_and(|v| bound.contains(v)))
}

/// Returns (estimate, anchor position, source) for the path under `mode`.
fn best_anchor(
    path: &PathPattern,
    schema: &GraphSchema,
    bound: &BTreeSet<&str>,
    mode: PlanMode,
) -> (usize, usize, AnchorSource) {
    let mut choices: Vec<(usize, usize, AnchorSource)> = Vec::new();
    for (pos, np) in path.node_patterns().enumerate() {
        let (est, source) = if np.var.as_deref().is_some_and(|v| bound.contains(v)) {
            (0usize, AnchorSource::Bound)
        } else if let (Some(_), Some((key, value))) = (&np.label, np.props.first()) {
            (
                1,
                AnchorSource::IndexProbe {
                    key: key.clone(),
                    value: value.clone(),
                },
            )
        } else if let Some(label) = &np.label {
            (
                schema.labels.get(label).copied().unwrap_or(0),
                AnchorSource::LabelScan(label.clone()),
            )
        } else {
            (schema.total_nodes, AnchorSource::AllNodes)
        };
        choices.push((est, pos, source));
    }
    match mode {
        PlanMode::Best => choices
            .into_iter()
            .min_by_key(|(est, pos, _)| (*est, *pos))
            .expect("path has at least one node pattern"),
        PlanMode::ForcedWorst => {
            // still anchor on bound vars (correct joins never re-scan), but
            // otherwise pick the widest scan available
            let bound_choice = choices
                .iter()
                .find(|(_, _, s)| *s == AnchorSource::Bound)
                .cloned();
            bound_choice.unwrap_or_else(|| {
                choices
                    .into_iter()
                    .max_by_key(|(est, pos, _)| (*est, usize::MAX - *pos))
                    .expect("path has at least one node pattern")
            })
        }
    }
}

fn validate(ast: &QueryAst, schema: &GraphSchema) -> Result<(), QueryError> {
    let (node_vars, rel_vars) = ast.bound_vars();
    let node_set: BTreeSet<&str> = node_vars.iter().copied().collect();
    let rel_set: BTreeSet<&str> = rel_vars.iter().copied().collect();

    if let Some(clash) = node_set.intersection(&rel_set).next() {
        return Err(semantic(
            format!("variable {clash:?} is used as both a node and a relationship"),
            None,
        ));
    }

    let check_label = |label: &str| -> Result<(), QueryError> {
        if !schema.labels.is_empty() && !schema.labels.contains_key(label) {
            return Err(semantic(
                format!("unknown label {label:?}"),
                suggest(label, schema.labels.keys().map(String::as_str)),
            ));
        }
        Ok(())
    };
    let check_etype = |etype: &str| -> Result<(), QueryError> {
        if !schema.etypes.is_empty() && !schema.etypes.contains(etype) {
            return Err(semantic(
                format!("unknown edge type {etype:?}"),
                suggest(etype, schema.etypes.iter().map(String::as_str)),
            ));
        }
        Ok(())
    };
    let check_key = |key: &str| -> Result<(), QueryError> {
        if !schema.prop_keys.is_empty() && !schema.prop_keys.contains(key) {
            return Err(semantic(
                format!("unknown property key {key:?}"),
                suggest(key, schema.prop_keys.iter().map(String::as_str)),
            ));
        }
        Ok(())
    };

    for path in &ast.patterns {
        for np in path.node_patterns() {
            if let Some(label) = &np.label {
                check_label(label)?;
            }
            for (k, _) in &np.props {
                check_key(k)?;
            }
        }
        for (rel, _) in &path.steps {
            check_etype(&rel.etype)?;
            for (k, _) in &rel.props {
                check_key(k)?;
            }
        }
    }

    let all_vars: BTreeSet<&str> = node_set.union(&rel_set).copied().collect();
    let check_expr_vars = |e: &Expr, aliases: &BTreeSet<&str>| -> Result<(), QueryError> {
        let mut stack = vec![e];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Prop { var, key } => {
                    if !all_vars.contains(var.as_str()) {
                        return Err(semantic(format!("unbound variable {var:?}"), None));
                    }
                    check_key(key)?;
                }
                Expr::Var(v) => {
                    if !all_vars.contains(v.as_str()) && !aliases.contains(v.as_str()) {
                        return Err(semantic(format!("unbound variable {v:?}"), None));
                    }
                }
                Expr::Cmp { lhs, rhs, .. } => {
                    stack.push(lhs);
                    stack.push(rhs);
                }
                Expr::And(a, b) | Expr::Or(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                Expr::Not(inner) => stack.push(inner),
                Expr::Literal(_) => {}
            }
        }
        Ok(())
    };

    let no_aliases = BTreeSet::new();
    if let Some(w) = &ast.where_clause {
        check_expr_vars(w, &no_aliases)?;
    }
    for item in &ast.return_items {
        match &item.expr {
            ReturnExpr::Value(e) => check_expr_vars(e, &no_aliases)?,
            ReturnExpr::Aggregate { arg: AggArg::Expr(e), .. } => check_expr_vars(e, &no_aliases)?,
            ReturnExpr::Aggregate { arg: AggArg::Star, .. } => {}
        }
    }
    let aliases: BTreeSet<&str> = ast
        .return_items
        .iter()
        .filter_map(|it| it.alias.as_deref())
        .collect();
    if let Some(o) = &ast.order_by {
        check_expr_vars(&o.expr, &aliases)?;
    }
    Ok(())
}

fn resolve_order(ast: &QueryAst) -> Result<Option<OrderTarget>, QueryError> {
    let Some(order) = &ast.order_by else {
        return Ok(None);
    };
    // alias reference
    if let Expr::Var(name) = &order.expr {
        if let Some(idx) = ast
            .return_items
            .iter()
            .position(|it| it.alias.as_deref() == Some(name.as_str()))
        {
            return Ok(Some(OrderTarget::Column(idx)));
        }
    }
    // structural match with a return item
    if let Some(idx) = ast.return_items.iter().position(|it| match &it.expr {
        ReturnExpr::Value(e) => e == &order.expr,
        ReturnExpr::Aggregate { .. } => false,
    }) {
        return Ok(Some(OrderTarget::Column(idx)));
    }
    if ast.has_aggregates() {
        return Err(semantic(
            "ORDER BY must reference a returned column when aggregates are present",
            None,
        ));
    }
    Ok(Some(OrderTarget::FrameExpr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    fn schema() -> GraphSchema {
        let mut s = GraphSchema::default();
        s.labels.insert("Game".into(), 4);
        s.labels.insert("Team".into(), 6);
        s.labels.insert("Event".into(), 40);
        s.etypes.insert("PLAYS_FOR".into());
        s.etypes.insert("HOME_TEAM".into());
        s.etypes.insert("IS_PART_OF".into());
        s.prop_keys.insert("season".into());
        s.prop_keys.insert("name".into());
        s.total_nodes = 50;
        s
    }

    #[test]
    fn index_probe_preferred() {
        let ast = parse_query(
            "MATCH (t:Team)-[:HOME_TEAM]->(g:Game {season: '2014-2015'}) RETURN count(g)",
        )
        .unwrap();
        let plan = plan(&ast, &schema()).unwrap();
        assert_eq!(plan.paths[0].anchor, 1);
        assert!(matches!(
            plan.paths[0].source,
            AnchorSource::IndexProbe { .. }
        ));
    }

    #[test]
    fn unknown_edge_type_suggests() {
        let ast = parse_query("MATCH (a)-[:PLAYZ_FOR]->(b) RETURN a").unwrap();
        let err = plan(&ast, &schema()).unwrap_err();
        match err {
            QueryError::Semantic { suggestion, .. } => {
                assert_eq!(suggestion.as_deref(), Some("PLAYS_FOR"));
            }
            other => panic!("expected semantic error, got {other}"),
        }
    }

    #[test]
    fn unknown_label_rejected_nonempty_schema() {
        let ast = parse_query("MATCH (x:Nonexistent) RETURN x").unwrap();
        assert!(plan(&ast, &schema()).is_err());
        // empty schema: accepted, matches nothing at run time
        assert!(plan(&ast, &GraphSchema::default()).is_ok());
    }

    #[test]
    fn disconnected_patterns_flagged() {
        let ast = parse_query("MATCH (a:Team), (b:Game) RETURN a, b").unwrap();
        let crossed = plan(&ast, &schema()).unwrap();
        assert!(crossed.cross_product_warning);
        let ast = parse_query("MATCH (a:Team)-[:HOME_TEAM]->(g:Game), (a)-[:PLAYS_FOR]->(x) RETURN g, x")
            .unwrap();
        let joined = plan(&ast, &schema()).unwrap();
        assert!(!joined.cross_product_warning);
    }

    #[test]
    fn unbound_variable_rejected() {
        let ast = parse_query("MATCH (a:Team) WHERE b.name = 'x' RETURN a").unwrap();
        assert!(matches!(
            plan(&ast, &schema()),
            Err(QueryError::Semantic { .. })
        ));
        let ast = parse_query("MATCH (a:Team) RETURN ghost").unwrap();
        assert!(plan(&ast, &schema()).is_err());
    }

    #[test]
    fn order_by_alias_and_structural() {
        let ast = parse_query("MATCH (t:Team) RETURN t.name AS n ORDER BY n").unwrap();
        let p = plan(&ast, &schema()).unwrap();
        assert_eq!(p.order, Some(OrderTarget::Column(0)));
        let ast = parse_query("MATCH (t:Team) RETURN t.name ORDER BY t.name").unwrap();
        let p = plan(&ast, &schema()).unwrap();
        assert_eq!(p.order, Some(OrderTarget::Column(0)));
        let ast = parse_query("MATCH (t:Team) RETURN count(t) ORDER BY t.name").unwrap();
        assert!(plan(&ast, &schema()).is_err());
    }

    #[test]
    fn var_node_rel_clash() {
        let ast = parse_query("MATCH (x)-[x:PLAYS_FOR]->(b) RETURN b").unwrap();
        assert!(plan(&ast, &schema()).is_err());
    }
}
