//! Query AST and its canonical pretty-printer. Printing then reparsing
//! yields a structurally identical tree.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => write!(f, "'{}'", s.replace('\\', "\\\\").replace('\'', "\\'")),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelDir {
    Out,
    In,
    Undirected,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePattern {
    pub var: Option<String>,
    pub label: Option<String>,
    pub props: Vec<(String, Literal)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelPattern {
    pub var: Option<String>,
    pub etype: String,
    pub dir: RelDir,
    pub props: Vec<(String, Literal)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPattern {
    pub start: NodePattern,
    pub steps: Vec<(RelPattern, NodePattern)>,
}

impl PathPattern {
    pub fn node_patterns(&self) -> impl Iterator<Item = &NodePattern> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|(_, n)| n))
    }

    pub fn node_at(&self, pos: usize) -> &NodePattern {
        if pos == 0 {
            &self.start
        } else {
            &self.steps[pos - 1].1
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Contains => "CONTAINS",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Literal),
    Prop { var: String, key: String },
    Var(String),
    Cmp { op: CmpOp, lhs: Box<Expr>, rhs: Box<Expr> },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFunc {
    Count,
    Sum,
    Collect,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Sum => "sum",
            AggFunc::Collect => "collect",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggArg {
    Star,
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReturnExpr {
    Value(Expr),
    Aggregate {
        func: AggFunc,
        distinct: bool,
        arg: AggArg,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: ReturnExpr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderBy {
    pub expr: Expr,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub patterns: Vec<PathPattern>,
    pub where_clause: Option<Expr>,
    pub return_items: Vec<ReturnItem>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
}

impl QueryAst {
    /// Node and relationship variables bound by the MATCH clause.
    pub fn bound_vars(&self) -> (Vec<&str>, Vec<&str>) {
        let mut nodes = Vec::new();
        let mut rels = Vec::new();
        for path in &self.patterns {
            if let Some(v) = &path.start.var {
                nodes.push(v.as_str());
            }
            for (rel, node) in &path.steps {
                if let Some(v) = &rel.var {
                    rels.push(v.as_str());
                }
                if let Some(v) = &node.var {
                    nodes.push(v.as_str());
                }
            }
        }
        (nodes, rels)
    }

    pub fn has_aggregates(&self) -> bool {
        self.return_items
            .iter()
            .any(|it| matches!(it.expr, ReturnExpr::Aggregate { .. }))
    }
}

fn ident(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    let plain = !name.is_empty()
        && name.chars().next().unwrap().is_ascii_alphabetic()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        write!(f, "{name}")
    } else {
        write!(f, "`{name}`")
    }
}

struct PropsFmt<'a>(&'a [(String, Literal)]);

impl fmt::Display for PropsFmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            ident(f, k)?;
            write!(f, ": {v}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for NodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        if let Some(v) = &self.var {
            ident(f, v)?;
        }
        if let Some(l) = &self.label {
            write!(f, ":")?;
            ident(f, l)?;
        }
        if !self.props.is_empty() {
            if self.var.is_some() || self.label.is_some() {
                write!(f, " ")?;
            }
            write!(f, "{}", PropsFmt(&self.props))?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for RelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dir == RelDir::In {
            write!(f, "<-[")?;
        } else {
            write!(f, "-[")?;
        }
        if let Some(v) = &self.var {
            ident(f, v)?;
        }
        write!(f, ":")?;
        ident(f, &self.etype)?;
        if !self.props.is_empty() {
            write!(f, " {}", PropsFmt(&self.props))?;
        }
        match self.dir {
            RelDir::Out => write!(f, "]->"),
            RelDir::In => write!(f, "]-"),
            RelDir::Undirected => write!(f, "]-"),
        }
    }
}

impl fmt::Display for PathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (rel, node) in &self.steps {
            write!(f, "{rel}{node}")?;
        }
        Ok(())
    }
}

// precedence: Or(0) < And(1) < Not(2) < Cmp(3) < atom(4)
fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => 0,
        Expr::And(..) => 1,
        Expr::Not(..) => 2,
        Expr::Cmp { .. } => 3,
        _ => 4,
    }
}

fn fmt_expr(e: &Expr, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
    let prec = expr_prec(e);
    let parens = prec < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match e {
        Expr::Literal(l) => write!(f, "{l}")?,
        Expr::Prop { var, key } => {
            ident(f, var)?;
            write!(f, ".")?;
            ident(f, key)?;
        }
        Expr::Var(v) => ident(f, v)?,
        Expr::Cmp { op, lhs, rhs } => {
            fmt_expr(lhs, f, 4)?;
            write!(f, " {} ", op.symbol())?;
            fmt_expr(rhs, f, 4)?;
        }
        Expr::And(a, b) => {
            fmt_expr(a, f, 1)?;
            write!(f, " AND ")?;
            fmt_expr(b, f, 2)?; // left-assoc: parenthesize a right And
        }
        Expr::Or(a, b) => {
            fmt_expr(a, f, 0)?;
            write!(f, " OR ")?;
            fmt_expr(b, f, 1)?;
        }
        Expr::Not(inner) => {
            write!(f, "NOT ")?;
            fmt_expr(inner, f, 2)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f, 0)
    }
}

impl fmt::Display for ReturnExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnExpr::Value(e) => write!(f, "{e}"),
            ReturnExpr::Aggregate { func, distinct, arg } => {
                write!(f, "{}(", func.name())?;
                if *distinct {
                    write!(f, "DISTINCT ")?;
                }
                match arg {
                    AggArg::Star => write!(f, "*")?,
                    AggArg::Expr(e) => write!(f, "{e}")?,
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MATCH ")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        if let Some(w) = &self.where_clause {
            write!(f, " WHERE {w}")?;
        }
        write!(f, " RETURN ")?;
        for (i, item) in self.return_items.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", item.expr)?;
            if let Some(a) = &item.alias {
                write!(f, " AS ")?;
                ident(f, a)?;
            }
        }
        if let Some(o) = &self.order_by {
            write!(f, " ORDER BY {}", o.expr)?;
            if o.descending {
                write!(f, " DESC")?;
            }
        }
        if let Some(l) = self.limit {
            write!(f, " LIMIT {l}")?;
        }
        Ok(())
    }
}
