//! Scalar arithmetic expressions over action variables `x1 .. xn`.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := '-'? integer ('^' exponent)?
//! atom     := number | var | '(' expr ')'
//! var      := 'x' positive-integer
//! ```
//!
//! `^` binds tighter than unary minus, so `-x1^2` is `-(x1^2)`. Exponents are
//! integer literals only; `x1^2^3` is `x1^(2^3)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown token {token:?} at offset {offset}")]
    UnknownToken { offset: usize, token: String },
    #[error("non-integer exponent at offset {offset}")]
    NonIntegerExponent { offset: usize },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    /// 1-based variable index: `Var(2)` is `x2`.
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

/// A parsed, immutable expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    source: String,
}

/// Parses `text` into an [`Expression`].
pub fn parse_expression(text: &str) -> Result<Expression, ExprError> {
    Expression::parse(text)
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let tokens = lex(text)?;
        if tokens.is_empty() {
            return Err(ExprError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end: text.len(),
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Self {
            root,
            source: text.to_string(),
        })
    }

    /// Text the expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates with named bindings (`"x1" -> 0.5`).
    pub fn evaluate(&self, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
        let width = self.max_variable().unwrap_or(0);
        let mut values = vec![f64::NAN; width];
        for k in self.variable_indices() {
            let name = format!("x{k}");
            match bindings.get(&name) {
                Some(v) => values[k - 1] = *v,
                None => return Err(ExprError::UnboundVariable(name)),
            }
        }
        self.eval_at(&values)
    }

    /// Evaluates with positional bindings: `x[k - 1]` is the value of `xk`.
    pub fn eval_at(&self, x: &[f64]) -> Result<f64, ExprError> {
        let v = eval_node(&self.root, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        self.variable_indices()
            .into_iter()
            .map(|k| format!("x{k}"))
            .collect()
    }

    /// 1-based indices of the variables that appear.
    pub fn variable_indices(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        collect_vars(&self.root, &mut out);
        out
    }

    pub fn max_variable(&self) -> Option<usize> {
        self.variable_indices().into_iter().next_back()
    }

    /// Polynomial degree in `x{var}`, or `None` if the expression is not a
    /// polynomial in that variable (division by an expression in it, or a
    /// negative power of it).
    pub fn degree_in(&self, var: usize) -> Option<u32> {
        degree(&self.root, var)
    }
}

fn collect_vars(node: &Node, out: &mut BTreeSet<usize>) {
    match node {
        Node::Num(_) => {}
        Node::Var(k) => {
            out.insert(*k);
        }
        Node::Neg(a) | Node::Pow(a, _) => collect_vars(a, out),
        Node::Bin(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

fn degree(node: &Node, var: usize) -> Option<u32> {
    match node {
        Node::Num(_) => Some(0),
        Node::Var(k) => Some(u32::from(*k == var)),
        Node::Neg(a) => degree(a, var),
        Node::Bin(BinOp::Add | BinOp::Sub, a, b) => Some(degree(a, var)?.max(degree(b, var)?)),
        Node::Bin(BinOp::Mul, a, b) => Some(degree(a, var)? + degree(b, var)?),
        Node::Bin(BinOp::Div, a, b) => match degree(b, var)? {
            0 => degree(a, var),
            _ => None,
        },
        Node::Pow(a, e) => {
            let d = degree(a, var)?;
            if d == 0 {
                Some(0)
            } else if *e >= 0 {
                Some(d * (*e as u32))
            } else {
                None
            }
        }
    }
}

fn eval_node(node: &Node, x: &[f64]) -> Result<f64, ExprError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Var(k) => match x.get(k - 1) {
            Some(v) if !v.is_nan() => *v,
            _ => return Err(ExprError::UnboundVariable(format!("x{k}"))),
        },
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Bin(op, a, b) => {
            let l = eval_node(a, x)?;
            let r = eval_node(b, x)?;
            match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r == 0.0 {
                        return Err(ExprError::DivisionByZero);
                    }
                    l / r
                }
            }
        }
        Node::Pow(a, e) => {
            let base = eval_node(a, x)?;
            if base == 0.0 && *e < 0 {
                return Err(ExprError::DivisionByZero);
            }
            base.powi(*e)
        }
    })
}

impl fmt::Display for Expression {
    /// Fully parenthesized form; re-parses to an equivalent tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn write_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        // `{:?}` keeps full precision and always includes a decimal point
        // or exponent, both of which the lexer accepts.
        Node::Num(v) => write!(f, "{v:?}"),
        Node::Var(k) => write!(f, "x{k}"),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(a, f)?;
            f.write_str(")")
        }
        Node::Bin(op, a, b) => {
            f.write_str("(")?;
            write_node(a, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(b, f)?;
            f.write_str(")")
        }
        Node::Pow(a, e) => {
            f.write_str("(")?;
            write_node(a, f)?;
            write!(f, "^{e})")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Var(k) => format!("variable x{k}"),
            TokenKind::Plus => "'+'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Slash => "'/'".into(),
            TokenKind::Caret => "'^'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
    /// Raw text, kept so exponents can be checked for integrality.
    text: String,
}

fn lex(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |kind| Token {
            kind,
            offset: start,
            text: (c as char).to_string(),
        };
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push(single(TokenKind::Plus)),
            b'-' => out.push(single(TokenKind::Minus)),
            b'*' => {
                if bytes.get(i + 1) == Some(&b'*') {
                    return Err(ExprError::Syntax {
                        offset: start,
                        message: "'**' is not an operator; use '^'".into(),
                    });
                }
                out.push(single(TokenKind::Star))
            }
            b'/' => out.push(single(TokenKind::Slash)),
            b'^' => out.push(single(TokenKind::Caret)),
            b'(' => out.push(single(TokenKind::LParen)),
            b')' => out.push(single(TokenKind::RParen)),
            b'0'..=b'9' | b'.' => {
                let end = scan_number(bytes, i);
                let raw = &text[start..end];
                let value: f64 = raw.parse().map_err(|_| ExprError::UnknownToken {
                    offset: start,
                    token: raw.to_string(),
                })?;
                out.push(Token {
                    kind: TokenKind::Num(value),
                    offset: start,
                    text: raw.to_string(),
                });
                i = end;
                continue;
            }
            b'x' => {
                let mut end = i + 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                let ident_end = scan_ident(bytes, i);
                let raw = &text[start..ident_end];
                let digits = &text[i + 1..end];
                let index = if ident_end == end && !digits.is_empty() && !digits.starts_with('0') {
                    digits.parse::<usize>().ok()
                } else {
                    None
                };
                match index {
                    Some(k) => out.push(Token {
                        kind: TokenKind::Var(k),
                        offset: start,
                        text: raw.to_string(),
                    }),
                    None => {
                        return Err(ExprError::UnknownToken {
                            offset: start,
                            token: raw.to_string(),
                        })
                    }
                }
                i = ident_end;
                continue;
            }
            _ => {
                let end = if c.is_ascii_alphabetic() || c == b'_' {
                    scan_ident(bytes, i)
                } else {
                    start + text[start..].chars().next().map_or(1, char::len_utf8)
                };
                return Err(ExprError::UnknownToken {
                    offset: start,
                    token: text[start..end].to_string(),
                });
            }
        }
        i += 1;
    }
    Ok(out)
}

fn scan_ident(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
        i += 1;
    }
    i
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&Token> {
        let tok = self.tokens.get(self.pos);
        self.pos += 1;
        tok
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Minus)) {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Caret)) {
            self.pos += 1;
            let e = self.exponent()?;
            return Ok(Node::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ExprError> {
        let offset = self.offset();
        let negative = matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Minus));
        if negative {
            self.pos += 1;
        }
        let offset_lit = self.offset();
        let tok = self.next().cloned();
        let magnitude = match tok {
            Some(Token {
                kind: TokenKind::Num(_),
                text,
                ..
            }) => text
                .parse::<i32>()
                .map_err(|_| ExprError::NonIntegerExponent { offset: offset_lit })?,
            Some(_) => return Err(ExprError::NonIntegerExponent { offset: offset_lit }),
            None => {
                return Err(ExprError::Syntax {
                    offset,
                    message: "missing exponent".into(),
                })
            }
        };
        let mut e = if negative { -magnitude } else { magnitude };
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Caret)) {
            self.pos += 1;
            let inner = self.exponent()?;
            let raised = u32::try_from(inner)
                .ok()
                .and_then(|p| e.checked_pow(p))
                .ok_or(ExprError::NonIntegerExponent { offset: offset_lit })?;
            e = raised;
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let offset = self.offset();
        match self.next().map(|t| t.kind.clone()) {
            Some(TokenKind::Num(v)) => Ok(Node::Num(v)),
            Some(TokenKind::Var(k)) => Ok(Node::Var(k)),
            Some(TokenKind::LParen) => {
                let inner = self.expr()?;
                match self.next().map(|t| &t.kind) {
                    Some(TokenKind::RParen) => Ok(inner),
                    _ => Err(ExprError::Syntax {
                        offset: self.tokens.get(self.pos - 1).map_or(self.end, |t| t.offset),
                        message: "expected ')'".into(),
                    }),
                }
            }
            Some(other) => Err(ExprError::Syntax {
                offset,
                message: format!("unexpected {}", other.describe()),
            }),
            None => Err(ExprError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval2(src: &str, x1: f64, x2: f64) -> f64 {
        Expression::parse(src).unwrap().eval_at(&[x1, x2]).unwrap()
    }

    #[test]
    fn parses_example_payoff() {
        let e = parse_expression("(1.6 - 0.6*x1 - x2)*x1").unwrap();
        let vars: Vec<_> = e.free_variables().into_iter().collect();
        assert_eq!(vars, ["x1", "x2"]);
        assert_eq!(eval2("(1.6 - 0.6*x1 - x2)*x1", 1.0, 0.0), 1.0);
    }

    #[test]
    fn power_node() {
        let e = parse_expression("x1 ^ 2").unwrap();
        assert!(matches!(e.root, Node::Pow(_, 2)));
        assert_eq!(e.eval_at(&[-3.0]).unwrap(), 9.0);
    }

    #[test]
    fn double_star_is_rejected_at_its_offset() {
        assert_eq!(
            parse_expression("x1 ** 2").unwrap_err(),
            ExprError::Syntax {
                offset: 3,
                message: "'**' is not an operator; use '^'".into()
            }
        );
    }

    #[test]
    fn non_integer_exponents() {
        assert!(matches!(
            parse_expression("x1^2.5"),
            Err(ExprError::NonIntegerExponent { offset: 3 })
        ));
        assert!(matches!(
            parse_expression("x1^x2"),
            Err(ExprError::NonIntegerExponent { offset: 3 })
        ));
    }

    #[test]
    fn unknown_tokens() {
        assert!(matches!(
            parse_expression("a*x1"),
            Err(ExprError::UnknownToken { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expression("x0 + 1"),
            Err(ExprError::UnknownToken { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expression("1 + x1y"),
            Err(ExprError::UnknownToken { offset: 4, .. })
        ));
        assert!(matches!(
            parse_expression("1 # 2"),
            Err(ExprError::UnknownToken { offset: 2, .. })
        ));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_expression(""), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            parse_expression("(x1 + 1"),
            Err(ExprError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expression("x1 +"),
            Err(ExprError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(
            parse_expression("x1 x2"),
            Err(ExprError::Syntax { offset: 3, .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval2("-x1^2", 3.0, 0.0), -9.0);
        assert_eq!(eval2("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval2("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(eval2("8-4-2", 0.0, 0.0), 2.0);
        assert_eq!(eval2("1+2*3", 0.0, 0.0), 7.0);
        assert_eq!(eval2("2*-x1", 3.0, 0.0), -6.0);
        assert_eq!(eval2("x1^-1", 4.0, 0.0), 0.25);
        assert_eq!(eval2("1.5e1 + 2E-1", 0.0, 0.0), 15.2);
    }

    #[test]
    fn evaluation_errors() {
        let e = parse_expression("1/x1").unwrap();
        assert_eq!(e.eval_at(&[0.0]), Err(ExprError::DivisionByZero));
        let e = parse_expression("x1^-2").unwrap();
        assert_eq!(e.eval_at(&[0.0]), Err(ExprError::DivisionByZero));
        let e = parse_expression("x1 + x2").unwrap();
        assert_eq!(
            e.eval_at(&[1.0]),
            Err(ExprError::UnboundVariable("x2".into()))
        );
        let mut b = HashMap::new();
        b.insert("x1".to_string(), 1.0);
        assert_eq!(
            e.evaluate(&b),
            Err(ExprError::UnboundVariable("x2".into()))
        );
        b.insert("x2".to_string(), 2.0);
        assert_eq!(e.evaluate(&b), Ok(3.0));
        let e = parse_expression("x1^400").unwrap();
        assert_eq!(e.eval_at(&[10.0]), Err(ExprError::NonFinite));
    }

    #[test]
    fn free_variable_sets() {
        assert!(parse_expression("3.5").unwrap().free_variables().is_empty());
        let v: Vec<_> = parse_expression("x2 + x2")
            .unwrap()
            .free_variables()
            .into_iter()
            .collect();
        assert_eq!(v, ["x2"]);
    }

    #[test]
    fn polynomial_degree() {
        let e = parse_expression("(1 + 0.1*(1-x1) - x2)*x1").unwrap();
        assert_eq!(e.degree_in(1), Some(2));
        assert_eq!(e.degree_in(2), Some(1));
        assert_eq!(e.degree_in(3), Some(0));
        assert_eq!(parse_expression("x1/(1+x1)").unwrap().degree_in(1), None);
        assert_eq!(parse_expression("x1/(1+x2)").unwrap().degree_in(1), Some(1));
        assert_eq!(parse_expression("(x1*x1)^3").unwrap().degree_in(1), Some(6));
        assert_eq!(parse_expression("x1^-1").unwrap().degree_in(1), None);
    }

    #[test]
    fn display_reparses() {
        let e = parse_expression("-(x1 - 2.5)^2 / 3 + x2*0.1").unwrap();
        let again = parse_expression(&e.to_string()).unwrap();
        assert_eq!(e.root, again.root);
    }
}
