use thiserror::Error;

use super::{BinaryOp, Forest, Node, NodeKind, Operand, Tree, UnaryOp};

/// Failure to read a computable string. Positions are character offsets.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected end of input at position {pos}")]
    UnexpectedEnd { pos: usize },
    #[error("unexpected `{found}` at position {pos}")]
    Unexpected { pos: usize, found: String },
    #[error("unknown symbol `{symbol}` at position {pos}")]
    UnknownSymbol { pos: usize, symbol: String },
    #[error("operator `{op}` at position {pos} takes {expected} argument(s), found {found}")]
    Arity {
        pos: usize,
        op: String,
        expected: usize,
        found: usize,
    },
    #[error(
        "bracket `{open}` opened at position {open_pos} closed by `{close}` at position {pos}"
    )]
    MismatchedBracket {
        open_pos: usize,
        open: char,
        pos: usize,
        close: char,
    },
    #[error("trailing input at position {pos}")]
    Trailing { pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::UnexpectedEnd { pos }
            | ParseError::Unexpected { pos, .. }
            | ParseError::UnknownSymbol { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::MismatchedBracket { pos, .. }
            | ParseError::Trailing { pos } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open(char),
    Close(char),
    Sym(String),
}

fn is_bracket(c: char) -> bool {
    matches!(c, '{' | '}' | '[' | ']' | '(' | ')')
}

fn tokenize(s: &str) -> Vec<(usize, Tok)> {
    let chars: Vec<char> = s.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if matches!(c, '{' | '[' | '(') {
            toks.push((i, Tok::Open(c)));
            i += 1;
        } else if matches!(c, '}' | ']' | ')') {
            toks.push((i, Tok::Close(c)));
            i += 1;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && !is_bracket(chars[i]) {
                i += 1;
            }
            toks.push((start, Tok::Sym(chars[start..i].iter().collect())));
        }
    }
    toks
}

fn symbol_kind(s: &str) -> Option<NodeKind> {
    Some(match s {
        "u" => NodeKind::Operand(Operand::U),
        "x" => NodeKind::Operand(Operand::X),
        "ux" | "u_x" => NodeKind::Operand(Operand::Ux),
        "0" => NodeKind::Operand(Operand::Zero),
        "^2" | "²" => NodeKind::Unary(UnaryOp::Square),
        "^3" | "³" => NodeKind::Unary(UnaryOp::Cube),
        "+" => NodeKind::Binary(BinaryOp::Add),
        "-" => NodeKind::Binary(BinaryOp::Sub),
        "*" | "×" => NodeKind::Binary(BinaryOp::Mul),
        "/" | "÷" => NodeKind::Binary(BinaryOp::Div),
        "d" | "∂" => NodeKind::Binary(BinaryOp::D1),
        "d2" | "∂2" | "∂²" => NodeKind::Binary(BinaryOp::D2),
        _ => return None,
    })
}

fn closing_for(open: char) -> char {
    match open {
        '{' => '}',
        '[' => ']',
        _ => ')',
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        let t = self
            .toks
            .get(self.at)
            .cloned()
            .ok_or(ParseError::UnexpectedEnd { pos: self.end })?;
        self.at += 1;
        Ok(t)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        match self.next()? {
            (pos, Tok::Sym(s)) => match symbol_kind(&s) {
                Some(NodeKind::Operand(o)) => Ok(Node::Leaf(o)),
                Some(_) => Err(ParseError::Unexpected { pos, found: s }),
                None => Err(ParseError::UnknownSymbol { pos, symbol: s }),
            },
            (pos, Tok::Open(open)) => {
                let node = self.unit()?;
                match self.next()? {
                    (_, Tok::Close(close)) if close == closing_for(open) => Ok(node),
                    (cpos, Tok::Close(close)) => Err(ParseError::MismatchedBracket {
                        open_pos: pos,
                        open,
                        pos: cpos,
                        close,
                    }),
                    (cpos, Tok::Sym(s)) => Err(ParseError::Unexpected {
                        pos: cpos,
                        found: s,
                    }),
                    (cpos, Tok::Open(c)) => Err(ParseError::Unexpected {
                        pos: cpos,
                        found: c.to_string(),
                    }),
                }
            }
            (pos, Tok::Close(c)) => Err(ParseError::Unexpected {
                pos,
                found: c.to_string(),
            }),
        }
    }

    /// Head symbol plus its arguments, up to (not including) the closing bracket.
    fn unit(&mut self) -> Result<Node, ParseError> {
        let (pos, head) = match self.next()? {
            (pos, Tok::Sym(s)) => (pos, s),
            (pos, Tok::Open(c)) | (pos, Tok::Close(c)) => {
                return Err(ParseError::Unexpected {
                    pos,
                    found: c.to_string(),
                })
            }
        };
        let kind = symbol_kind(&head).ok_or_else(|| ParseError::UnknownSymbol {
            pos,
            symbol: head.clone(),
        })?;
        let mut args = Vec::new();
        while let Some((_, t)) = self.peek() {
            if matches!(t, Tok::Close(_)) {
                break;
            }
            args.push(self.expr()?);
        }
        if args.len() != kind.arity() {
            return Err(ParseError::Arity {
                pos,
                op: head,
                expected: kind.arity(),
                found: args.len(),
            });
        }
        let mut args = args.into_iter();
        Ok(match kind {
            NodeKind::Operand(o) => Node::Leaf(o),
            NodeKind::Unary(op) => Node::unary(op, args.next().unwrap()),
            NodeKind::Binary(op) => {
                let l = args.next().unwrap();
                let r = args.next().unwrap();
                Node::binary(op, l, r)
            }
        })
    }
}

/// Reads the prefix notation produced by [`to_computable_string`](super::to_computable_string).
///
/// `{ }`, `[ ]` and `( )` are interchangeable but must pair up. The Unicode
/// spellings `∂`, `×`, `÷` are accepted as aliases.
pub fn parse_computable_string(s: &str) -> Result<Tree, ParseError> {
    let toks = tokenize(s);
    let mut p = Parser {
        toks,
        at: 0,
        end: s.chars().count(),
    };
    let root = p.expr()?;
    if let Some((pos, _)) = p.peek() {
        return Err(ParseError::Trailing { pos: *pos });
    }
    Ok(Tree::new(root))
}

/// Reads `&`-separated trees. Error positions are relative to the whole input.
pub fn parse_forest(s: &str) -> Result<Forest, ParseError> {
    let mut trees = Vec::new();
    let mut offset = 0;
    for part in s.split('&') {
        let tree = parse_computable_string(part).map_err(|e| shift(e, offset))?;
        trees.push(tree);
        offset += part.chars().count() + 1;
    }
    Ok(Forest::new(trees))
}

fn shift(e: ParseError, by: usize) -> ParseError {
    match e {
        ParseError::UnexpectedEnd { pos } => ParseError::UnexpectedEnd { pos: pos + by },
        ParseError::Unexpected { pos, found } => ParseError::Unexpected {
            pos: pos + by,
            found,
        },
        ParseError::UnknownSymbol { pos, symbol } => ParseError::UnknownSymbol {
            pos: pos + by,
            symbol,
        },
        ParseError::Arity {
            pos,
            op,
            expected,
            found,
        } => ParseError::Arity {
            pos: pos + by,
            op,
            expected,
            found,
        },
        ParseError::MismatchedBracket {
            open_pos,
            open,
            pos,
            close,
        } => ParseError::MismatchedBracket {
            open_pos: open_pos + by,
            open,
            pos: pos + by,
            close,
        },
        ParseError::Trailing { pos } => ParseError::Trailing { pos: pos + by },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{random_tree, to_computable_string, GenConfig};

    #[test]
    fn parses_table_strings() {
        let t = parse_computable_string("{ / u x }").unwrap();
        assert_eq!(
            t.root(),
            &Node::binary(
                BinaryOp::Div,
                Node::leaf(Operand::U),
                Node::leaf(Operand::X)
            )
        );
        let unicode = parse_computable_string("{ ∂ [+ (∂ u x) (× u u)] x }").unwrap();
        let ascii = parse_computable_string("{ d [+ (d u x) (* u u)] x }").unwrap();
        assert_eq!(unicode, ascii);
    }

    #[test]
    fn brackets_are_interchangeable() {
        let a = parse_computable_string("{ d (d u x) x }").unwrap();
        let b = parse_computable_string("( d [d u x] x )").unwrap();
        let c = parse_computable_string("[d {d u x} x]").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(parse_computable_string("u").unwrap(), Tree::u());
    }

    #[test]
    fn missing_child_is_arity_error() {
        let err = parse_computable_string("{ + u }").unwrap_err();
        assert!(
            matches!(
                err,
                ParseError::Arity {
                    expected: 2,
                    found: 1,
                    pos: 2,
                    ..
                }
            ),
            "{err:?}"
        );
        let err = parse_computable_string("{ u x }").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Arity {
                expected: 0,
                found: 1,
                ..
            }
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(
            parse_computable_string("{ / u x ]").unwrap_err(),
            ParseError::MismatchedBracket {
                open_pos: 0,
                open: '{',
                pos: 8,
                close: ']'
            }
        );
        assert_eq!(
            parse_computable_string("{ / u q }").unwrap_err(),
            ParseError::UnknownSymbol {
                pos: 6,
                symbol: "q".into()
            }
        );
        assert_eq!(
            parse_computable_string("{ / u x").unwrap_err(),
            ParseError::UnexpectedEnd { pos: 7 }
        );
        assert_eq!(
            parse_computable_string("{ u } x").unwrap_err(),
            ParseError::Trailing { pos: 6 }
        );
        assert!(parse_computable_string("").is_err());
        assert!(parse_computable_string("+").is_err());
    }

    #[test]
    fn forest_split_on_ampersand() {
        let f = parse_forest("{ / u x } & { d (d u x) x } & { d [+ (d u x) (* u u)] x }").unwrap();
        assert_eq!(f.len(), 3);
        let err = parse_forest("{ u } & { + u }").unwrap_err();
        assert_eq!(err.position(), 10);
    }

    #[test]
    fn round_trips_random_trees() {
        let cfg = GenConfig {
            rng_seed: 3,
            max_depth: 6,
            ..GenConfig::default()
        };
        let mut rng = cfg.rng();
        for _ in 0..10_000 {
            let t = random_tree(&cfg, &mut rng);
            let s = to_computable_string(&t);
            assert_eq!(parse_computable_string(&s).unwrap(), t, "{s}");
        }
    }
}
