//! Recursive-descent parser for the query subset.
//!
//! Grammar (EBNF in docs/grammar.ebnf): one MATCH clause with
//! comma-separated paths, optional WHERE, a RETURN list with optional
//! aliases and count/sum/collect aggregates, optional ORDER BY and LIMIT.

use super::ast::*;
use super::token::{tokenize, Kw, TokKind, Token};
use super::QueryError;

pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let tokens = tokenize(text)?;
    parse_tokens(tokens, text.len())
}

/// Parses an already-tokenized query. `end_offset` positions errors at
/// end-of-input.
pub fn parse_tokens(tokens: Vec<Token>, end_offset: usize) -> Result<QueryAst, QueryError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        end_offset,
    };
    p.query()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end_offset: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek2(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos + 1).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.offset)
            .unwrap_or(self.end_offset)
    }

    fn found(&self) -> String {
        self.tokens
            .get(self.pos)
            .map(|t| t.kind.describe())
            .unwrap_or_else(|| "end of input".into())
    }

    fn error(&self, expected: &[&str]) -> QueryError {
        QueryError::Parse {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.found(),
        }
    }

    fn eat(&mut self, kind: &TokKind, expected: &str) -> Result<(), QueryError> {
        if self.peek() == Some(kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&[expected]))
        }
    }

    fn eat_kw(&mut self, kw: Kw) -> Result<(), QueryError> {
        self.eat(&TokKind::Keyword(kw), &format!("{kw:?}").to_uppercase())
    }

    fn try_kw(&mut self, kw: Kw) -> bool {
        if self.peek() == Some(&TokKind::Keyword(kw)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, QueryError> {
        match self.peek() {
            Some(TokKind::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.error(&[expected])),
        }
    }

    fn query(&mut self) -> Result<QueryAst, QueryError> {
        self.eat_kw(Kw::Match)?;
        let mut patterns = vec![self.path()?];
        while self.peek() == Some(&TokKind::Comma) {
            self.pos += 1;
            patterns.push(self.path()?);
        }
        let where_clause = if self.try_kw(Kw::Where) {
            Some(self.expr()?)
        } else {
            None
        };
        self.eat_kw(Kw::Return)?;
        let mut return_items = vec![self.return_item()?];
        while self.peek() == Some(&TokKind::Comma) {
            self.pos += 1;
            return_items.push(self.return_item()?);
        }
        let order_by = if self.try_kw(Kw::Order) {
            self.eat_kw(Kw::By)?;
            let expr = self.expr()?;
            let descending = if self.try_kw(Kw::Desc) {
                true
            } else {
                self.try_kw(Kw::Asc);
                false
            };
            Some(OrderBy { expr, descending })
        } else {
            None
        };
        let limit = if self.try_kw(Kw::Limit) {
            match self.peek() {
                Some(&TokKind::Int(n)) if n > 0 => {
                    self.pos += 1;
                    Some(n as u64)
                }
                _ => return Err(self.error(&["positive integer"])),
            }
        } else {
            None
        };
        if self.pos != self.tokens.len() {
            return Err(self.error(&["end of query"]));
        }
        Ok(QueryAst {
            patterns,
            where_clause,
            return_items,
            order_by,
            limit,
        })
    }

    fn path(&mut self) -> Result<PathPattern, QueryError> {
        let start = self.node_pattern()?;
        let mut steps = Vec::new();
        loop {
            match self.peek() {
                Some(TokKind::Minus) | Some(TokKind::Lt) => {
                    let rel = self.rel_pattern()?;
                    let node = self.node_pattern()?;
                    steps.push((rel, node));
                }
                _ => break,
            }
        }
        Ok(PathPattern { start, steps })
    }

    fn node_pattern(&mut self) -> Result<NodePattern, QueryError> {
        self.eat(&TokKind::LParen, "'('")?;
        let mut pat = NodePattern::default();
        if let Some(TokKind::Ident(_)) = self.peek() {
            pat.var = Some(self.ident("variable")?);
        }
        if self.peek() == Some(&TokKind::Colon) {
            self.pos += 1;
            pat.label = Some(self.ident("label")?);
        }
        if self.peek() == Some(&TokKind::LBrace) {
            pat.props = self.prop_map()?;
        }
        self.eat(&TokKind::RParen, "')'")?;
        Ok(pat)
    }

    fn rel_pattern(&mut self) -> Result<RelPattern, QueryError> {
        // "<-[" ... "]-" | "-[" ... "]->" | "-[" ... "]-"
        let inbound = if self.peek() == Some(&TokKind::Lt) {
            self.pos += 1;
            self.eat(&TokKind::Minus, "'-'")?;
            true
        } else {
            self.eat(&TokKind::Minus, "'-' or '<-'")?;
            false
        };
        self.eat(&TokKind::LBracket, "'['")?;
        let var = if let Some(TokKind::Ident(_)) = self.peek() {
            Some(self.ident("variable")?)
        } else {
            None
        };
        self.eat(&TokKind::Colon, "':' (relationship type is required)")?;
        let etype = self.ident("relationship type")?;
        let props = if self.peek() == Some(&TokKind::LBrace) {
            self.prop_map()?
        } else {
            Vec::new()
        };
        self.eat(&TokKind::RBracket, "']'")?;
        self.eat(&TokKind::Minus, "'-'")?;
        let dir = if inbound {
            RelDir::In
        } else if self.peek() == Some(&TokKind::Gt) {
            self.pos += 1;
            RelDir::Out
        } else {
            RelDir::Undirected
        };
        Ok(RelPattern {
            var,
            etype,
            dir,
            props,
        })
    }

    fn prop_map(&mut self) -> Result<Vec<(String, Literal)>, QueryError> {
        self.eat(&TokKind::LBrace, "'{'")?;
        let mut props = Vec::new();
        if self.peek() != Some(&TokKind::RBrace) {
            loop {
                let key = self.ident("property key")?;
                self.eat(&TokKind::Colon, "':'")?;
                let value = self.literal()?;
                props.push((key, value));
                if self.peek() == Some(&TokKind::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.eat(&TokKind::RBrace, "'}'")?;
        Ok(props)
    }

    fn literal(&mut self) -> Result<Literal, QueryError> {
        let lit = match self.peek() {
            Some(TokKind::Str(s)) => Literal::Str(s.clone()),
            Some(&TokKind::Int(i)) => Literal::Int(i),
            Some(&TokKind::Float(f)) => Literal::Float(f),
            Some(TokKind::Keyword(Kw::True)) => Literal::Bool(true),
            Some(TokKind::Keyword(Kw::False)) => Literal::Bool(false),
            Some(&TokKind::Minus) => {
                self.pos += 1;
                return match self.peek() {
                    Some(&TokKind::Int(i)) => {
                        self.pos += 1;
                        Ok(Literal::Int(-i))
                    }
                    Some(&TokKind::Float(f)) => {
                        self.pos += 1;
                        Ok(Literal::Float(-f))
                    }
                    _ => Err(self.error(&["number"])),
                };
            }
            _ => return Err(self.error(&["literal"])),
        };
        self.pos += 1;
        Ok(lit)
    }

    fn return_item(&mut self) -> Result<ReturnItem, QueryError> {
        let expr = self.return_expr()?;
        let alias = if self.try_kw(Kw::As) {
            Some(self.ident("alias")?)
        } else {
            None
        };
        Ok(ReturnItem { expr, alias })
    }

    fn return_expr(&mut self) -> Result<ReturnExpr, QueryError> {
        if let Some(TokKind::Ident(name)) = self.peek() {
            let func = match name.to_ascii_lowercase().as_str() {
                "count" => Some(AggFunc::Count),
                "sum" => Some(AggFunc::Sum),
                "collect" => Some(AggFunc::Collect),
                _ => None,
            };
            if let (Some(func), Some(&TokKind::LParen)) = (func, self.peek2()) {
                self.pos += 2;
                let distinct = self.try_kw(Kw::Distinct);
                if distinct && func != AggFunc::Count {
                    return Err(self.error(&["expression (DISTINCT is only valid with count)"]));
                }
                let arg = if self.peek() == Some(&TokKind::Star) {
                    if func != AggFunc::Count || distinct {
                        return Err(self.error(&["expression ('*' is only valid in count(*))"]));
                    }
                    self.pos += 1;
                    AggArg::Star
                } else {
                    AggArg::Expr(self.expr()?)
                };
                self.eat(&TokKind::RParen, "')'")?;
                return Ok(ReturnExpr::Aggregate {
                    func,
                    distinct,
                    arg,
                });
            }
        }
        Ok(ReturnExpr::Value(self.expr()?))
    }

    // expr := or_expr
    fn expr(&mut self) -> Result<Expr, QueryError> {
        let mut lhs = self.and_expr()?;
        while self.try_kw(Kw::Or) {
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, QueryError> {
        let mut lhs = self.not_expr()?;
        while self.try_kw(Kw::And) {
            let rhs = self.not_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, QueryError> {
        if self.try_kw(Kw::Not) {
            Ok(Expr::Not(Box::new(self.not_expr()?)))
        } else {
            self.cmp_expr()
        }
    }

    fn cmp_expr(&mut self) -> Result<Expr, QueryError> {
        let lhs = self.atom()?;
        let op = match self.peek() {
            Some(TokKind::Eq) => CmpOp::Eq,
            Some(TokKind::Neq) => CmpOp::Ne,
            Some(TokKind::Lt) => CmpOp::Lt,
            Some(TokKind::Le) => CmpOp::Le,
            Some(TokKind::Gt) => CmpOp::Gt,
            Some(TokKind::Ge) => CmpOp::Ge,
            Some(TokKind::Keyword(Kw::Contains)) => CmpOp::Contains,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.atom()?;
        Ok(Expr::Cmp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }

    fn atom(&mut self) -> Result<Expr, QueryError> {
        match self.peek() {
            Some(TokKind::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.eat(&TokKind::RParen, "')'")?;
                Ok(e)
            }
            Some(TokKind::Ident(_)) => {
                let var = self.ident("variable")?;
                if self.peek() == Some(&TokKind::Dot) {
                    self.pos += 1;
                    let key = self.ident("property key")?;
                    Ok(Expr::Prop { var, key })
                } else {
                    Ok(Expr::Var(var))
                }
            }
            _ => Ok(Expr::Literal(self.literal()?)),
        }
    }
}
