//! Tokenizer for the query subset. Keywords are case-insensitive; string
//! literals take single or double quotes; identifiers may be backtick-quoted.

use super::QueryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    Match,
    Where,
    Return,
    Order,
    By,
    Limit,
    And,
    Or,
    Not,
    Contains,
    As,
    Distinct,
    Asc,
    Desc,
    True,
    False,
}

impl Kw {
    fn from_word(word: &str) -> Option<Kw> {
        Some(match word.to_ascii_uppercase().as_str() {
            "MATCH" => Kw::Match,
            "WHERE" => Kw::Where,
            "RETURN" => Kw::Return,
            "ORDER" => Kw::Order,
            "BY" => Kw::By,
            "LIMIT" => Kw::Limit,
            "AND" => Kw::And,
            "OR" => Kw::Or,
            "NOT" => Kw::Not,
            "CONTAINS" => Kw::Contains,
            "AS" => Kw::As,
            "DISTINCT" => Kw::Distinct,
            "ASC" => Kw::Asc,
            "DESC" => Kw::Desc,
            "TRUE" => Kw::True,
            "FALSE" => Kw::False,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Keyword(Kw),
    Ident(String),
    Str(String),
    Int(i64),
    Float(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Dot,
    Star,
    Minus,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl TokKind {
    pub fn describe(&self) -> String {
        match self {
            TokKind::Keyword(k) => format!("{k:?}").to_uppercase(),
            TokKind::Ident(s) => format!("identifier {s:?}"),
            TokKind::Str(_) => "string literal".into(),
            TokKind::Int(i) => format!("integer {i}"),
            TokKind::Float(f) => format!("number {f}"),
            TokKind::LParen => "'('".into(),
            TokKind::RParen => "')'".into(),
            TokKind::LBrace => "'{'".into(),
            TokKind::RBrace => "'}'".into(),
            TokKind::LBracket => "'['".into(),
            TokKind::RBracket => "']'".into(),
            TokKind::Colon => "':'".into(),
            TokKind::Comma => "','".into(),
            TokKind::Dot => "'.'".into(),
            TokKind::Star => "'*'".into(),
            TokKind::Minus => "'-'".into(),
            TokKind::Eq => "'='".into(),
            TokKind::Neq => "'<>'".into(),
            TokKind::Lt => "'<'".into(),
            TokKind::Le => "'<='".into(),
            TokKind::Gt => "'>'".into(),
            TokKind::Ge => "'>='".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokKind,
    pub offset: usize,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, QueryError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
            }
            '(' => push(&mut tokens, TokKind::LParen, start, &mut i),
            ')' => push(&mut tokens, TokKind::RParen, start, &mut i),
            '{' => push(&mut tokens, TokKind::LBrace, start, &mut i),
            '}' => push(&mut tokens, TokKind::RBrace, start, &mut i),
            '[' => push(&mut tokens, TokKind::LBracket, start, &mut i),
            ']' => push(&mut tokens, TokKind::RBracket, start, &mut i),
            ':' => push(&mut tokens, TokKind::Colon, start, &mut i),
            ',' => push(&mut tokens, TokKind::Comma, start, &mut i),
            '.' => push(&mut tokens, TokKind::Dot, start, &mut i),
            '*' => push(&mut tokens, TokKind::Star, start, &mut i),
            '-' => push(&mut tokens, TokKind::Minus, start, &mut i),
            '=' => push(&mut tokens, TokKind::Eq, start, &mut i),
            '<' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push(Token { kind: TokKind::Neq, offset: start });
                    i += 2;
                } else if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token { kind: TokKind::Le, offset: start });
                    i += 2;
                } else {
                    push(&mut tokens, TokKind::Lt, start, &mut i);
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token { kind: TokKind::Ge, offset: start });
                    i += 2;
                } else {
                    push(&mut tokens, TokKind::Gt, start, &mut i);
                }
            }
            '\'' | '"' => {
                let quote = c;
                let mut value = String::new();
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => {
                            return Err(QueryError::Lex {
                                offset: start,
                                detail: "unterminated string literal".into(),
                            })
                        }
                        Some(&b) if b as char == quote => {
                            j += 1;
                            break;
                        }
                        Some(&b'\\') => {
                            let escaped = bytes.get(j + 1).ok_or(QueryError::Lex {
                                offset: start,
                                detail: "unterminated string literal".into(),
                            })?;
                            value.push(match *escaped as char {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                            j += 2;
                        }
                        Some(&b) => {
                            // byte-wise copy keeps multi-byte UTF-8 intact
                            value.push(b as char);
                            if b < 0x80 {
                                j += 1;
                            } else {
                                let ch_len = utf8_len(b);
                                value.pop();
                                value.push_str(
                                    std::str::from_utf8(&bytes[j..j + ch_len]).map_err(|_| {
                                        QueryError::Lex {
                                            offset: j,
                                            detail: "invalid UTF-8 in string".into(),
                                        }
                                    })?,
                                );
                                j += ch_len;
                            }
                        }
                    }
                }
                tokens.push(Token {
                    kind: TokKind::Str(value),
                    offset: start,
                });
                i = j;
            }
            '`' => {
                let end = text[i + 1..].find('`').ok_or(QueryError::Lex {
                    offset: start,
                    detail: "unterminated backtick identifier".into(),
                })?;
                let name = text[i + 1..i + 1 + end].to_string();
                tokens.push(Token {
                    kind: TokKind::Ident(name),
                    offset: start,
                });
                i += end + 2;
            }
            '0'..='9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let mut is_float = false;
                if j < bytes.len() && bytes[j] == b'.' && bytes.get(j + 1).is_some_and(u8::is_ascii_digit) {
                    is_float = true;
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        is_float = true;
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let raw = &text[i..j];
                let kind = if is_float {
                    TokKind::Float(raw.parse().map_err(|_| QueryError::Lex {
                        offset: start,
                        detail: format!("bad number {raw:?}"),
                    })?)
                } else {
                    TokKind::Int(raw.parse().map_err(|_| QueryError::Lex {
                        offset: start,
                        detail: format!("integer {raw:?} out of range"),
                    })?)
                };
                tokens.push(Token { kind, offset: start });
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let word = &text[i..j];
                let kind = match Kw::from_word(word) {
                    Some(kw) => TokKind::Keyword(kw),
                    None => TokKind::Ident(word.to_string()),
                };
                tokens.push(Token { kind, offset: start });
                i = j;
            }
            other => {
                return Err(QueryError::Lex {
                    offset: start,
                    detail: format!("illegal character {other:?}"),
                })
            }
        }
    }
    Ok(tokens)
}

fn utf8_len(first: u8) -> usize {
    match first {
        0xF0..=0xF7 => 4,
        0xE0..=0xEF => 3,
        0xC0..=0xDF => 2,
        _ => 1,
    }
}

fn push(tokens: &mut Vec<Token>, kind: TokKind, offset: usize, i: &mut usize) {
    tokens.push(Token { kind, offset });
    *i += 1;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_pattern_tokens() {
        let toks = tokenize("MATCH (g:Game)").unwrap();
        let kinds: Vec<&TokKind> = toks.iter().map(|t| &t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                &TokKind::Keyword(Kw::Match),
                &TokKind::LParen,
                &TokKind::Ident("g".into()),
                &TokKind::Colon,
                &TokKind::Ident("Game".into()),
                &TokKind::RParen,
            ]
        );
    }

    #[test]
    fn string_literal_single_token() {
        let toks = tokenize("'2014-2015'").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokKind::Str("2014-2015".into()));
        let toks = tokenize("\"double\"").unwrap();
        assert_eq!(toks[0].kind, TokKind::Str("double".into()));
    }

    #[test]
    fn unterminated_string_errors_at_quote() {
        let text = "MATCH (g:Game";
        let bad = format!("{text} 'abc");
        let err = tokenize(&bad).unwrap_err();
        match err {
            QueryError::Lex { offset, .. } => assert_eq!(offset, text.len() + 1),
            other => panic!("expected lex error, got {other}"),
        }
    }

    #[test]
    fn keywords_case_insensitive() {
        let toks = tokenize("match WHERE ReTuRn").unwrap();
        assert_eq!(toks[0].kind, TokKind::Keyword(Kw::Match));
        assert_eq!(toks[1].kind, TokKind::Keyword(Kw::Where));
        assert_eq!(toks[2].kind, TokKind::Keyword(Kw::Return));
    }

    #[test]
    fn numbers_and_unicode_strings() {
        let toks = tokenize("42 1.5 2e3 'Bernabéu'").unwrap();
        assert_eq!(toks[0].kind, TokKind::Int(42));
        assert_eq!(toks[1].kind, TokKind::Float(1.5));
        assert_eq!(toks[2].kind, TokKind::Float(2000.0));
        assert_eq!(toks[3].kind, TokKind::Str("Bernabéu".into()));
    }

    #[test]
    fn backtick_identifier() {
        let toks = tokenize("`weird name`").unwrap();
        assert_eq!(toks[0].kind, TokKind::Ident("weird name".into()));
    }

    #[test]
    fn illegal_character() {
        assert!(matches!(tokenize("MATCH ;"), Err(QueryError::Lex { offset: 6, .. })));
    }
}
