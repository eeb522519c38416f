//! A small arithmetic expression language over the single variable `t`.
//!
//! Grammar: decimal literals, `t`, binary `+ - * / ^`, unary `-`, and the
//! functions `exp`, `log`, `sqrt`, `sin`, `cos`. Precedence is
//! `^` > unary `-` > `* /` > `+ -`, with `^` right-associative. Function
//! application requires parentheses.
//!
//! Derivatives are taken symbolically, so custom growth rates keep
//! quadrature-grade derivative accuracy instead of finite differences.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
}

impl Func {
    fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Apply(Func, Box<Node>),
}

/// A parsed expression in the variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Expression> {
        if text.trim().is_empty() {
            return Err(Error::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let tokens = lex(text)?;
        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            len: text.len(),
        };
        let root = p.expr()?;
        if p.pos < p.tokens.len() {
            return Err(Error::Syntax {
                offset: p.tokens[p.pos].offset,
                message: format!("unexpected trailing input `{}`", p.tokens[p.pos].text),
            });
        }
        Ok(Expression { root })
    }

    pub fn constant(c: f64) -> Expression {
        Expression {
            root: Node::Const(c),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval_node(&self.root, t)
    }

    /// Symbolic derivative with light constant folding.
    pub fn derivative(&self) -> Expression {
        Expression {
            root: diff(&self.root),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root)
    }
}

impl Serialize for Expression {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Expression::parse(&text).map_err(serde::de::Error::custom)
    }
}

fn eval_node(n: &Node, t: f64) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var => t,
        Node::Neg(a) => -eval_node(a, t),
        Node::Add(a, b) => eval_node(a, t) + eval_node(b, t),
        Node::Sub(a, b) => eval_node(a, t) - eval_node(b, t),
        Node::Mul(a, b) => eval_node(a, t) * eval_node(b, t),
        Node::Div(a, b) => eval_node(a, t) / eval_node(b, t),
        Node::Pow(a, b) => eval_node(a, t).powf(eval_node(b, t)),
        Node::Apply(f, a) => f.apply(eval_node(a, t)),
    }
}

// ── Symbolic differentiation ─────────────────────────────────────────

fn diff(n: &Node) -> Node {
    match n {
        Node::Const(_) => Node::Const(0.0),
        Node::Var => Node::Const(1.0),
        Node::Neg(a) => neg(diff(a)),
        Node::Add(a, b) => add(diff(a), diff(b)),
        Node::Sub(a, b) => sub(diff(a), diff(b)),
        Node::Mul(a, b) => add(mul(diff(a), (**b).clone()), mul((**a).clone(), diff(b))),
        Node::Div(a, b) => div(
            sub(mul(diff(a), (**b).clone()), mul((**a).clone(), diff(b))),
            pow((**b).clone(), Node::Const(2.0)),
        ),
        Node::Pow(a, b) => match &**b {
            // f^c with constant exponent: c f^(c-1) f'
            Node::Const(c) => mul(
                mul(Node::Const(*c), pow((**a).clone(), Node::Const(c - 1.0))),
                diff(a),
            ),
            // general f^g: f^g (g' log f + g f'/f)
            _ => mul(
                pow((**a).clone(), (**b).clone()),
                add(
                    mul(diff(b), Node::Apply(Func::Log, a.clone())),
                    mul((**b).clone(), div(diff(a), (**a).clone())),
                ),
            ),
        },
        Node::Apply(f, a) => {
            let inner = diff(a);
            let outer = match f {
                Func::Exp => Node::Apply(Func::Exp, a.clone()),
                Func::Log => return div(inner, (**a).clone()),
                Func::Sqrt => {
                    return div(
                        inner,
                        mul(Node::Const(2.0), Node::Apply(Func::Sqrt, a.clone())),
                    )
                }
                Func::Sin => Node::Apply(Func::Cos, a.clone()),
                Func::Cos => neg(Node::Apply(Func::Sin, a.clone())),
            };
            mul(outer, inner)
        }
    }
}

fn as_const(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if (x + y).is_finite() => return Node::Const(x + y),
        (Some(0.0), _) => return b,
        (_, Some(0.0)) => return a,
        _ => {}
    }
    Node::Add(Box::new(a), Box::new(b))
}

fn sub(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if (x - y).is_finite() => return Node::Const(x - y),
        (Some(0.0), _) => return neg(b),
        (_, Some(0.0)) => return a,
        _ => {}
    }
    Node::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) if (x * y).is_finite() => return Node::Const(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => return Node::Const(0.0),
        (Some(1.0), _) => return b,
        (_, Some(1.0)) => return a,
        _ => {}
    }
    Node::Mul(Box::new(a), Box::new(b))
}

fn div(a: Node, b: Node) -> Node {
    if let (Some(x), Some(y)) = (as_const(&a), as_const(&b)) {
        if y != 0.0 && (x / y).is_finite() {
            return Node::Const(x / y);
        }
    }
    if as_const(&a) == Some(0.0) {
        return Node::Const(0.0);
    }
    if as_const(&b) == Some(1.0) {
        return a;
    }
    Node::Div(Box::new(a), Box::new(b))
}

fn pow(a: Node, b: Node) -> Node {
    match as_const(&b) {
        Some(0.0) => return Node::Const(1.0),
        Some(1.0) => return a,
        _ => {}
    }
    if let (Some(x), Some(y)) = (as_const(&a), as_const(&b)) {
        let v = x.powf(y);
        if v.is_finite() {
            return Node::Const(v);
        }
    }
    Node::Pow(Box::new(a), Box::new(b))
}

// ── Printing ─────────────────────────────────────────────────────────
//
// Precedence levels: + - are 1, * / are 2, unary - is 3, ^ is 4, atoms 5.
// Parenthesization is chosen so that parsing the printed form rebuilds the
// identical tree.

fn prec(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::Pow(..) => 4,
        Node::Const(c) if c.is_sign_negative() => 3, // prints with a leading minus
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, n: &Node, min_prec: u8) -> fmt::Result {
    if prec(n) < min_prec {
        write!(f, "(")?;
        write_node(f, n)?;
        write!(f, ")")
    } else {
        write_node(f, n)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, n: &Node) -> fmt::Result {
    match n {
        Node::Const(c) => write!(f, "{}", c),
        Node::Var => write!(f, "t"),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_child(f, a, 3)
        }
        Node::Add(a, b) => {
            write_child(f, a, 1)?;
            write!(f, " + ")?;
            write_child(f, b, 2)
        }
        Node::Sub(a, b) => {
            write_child(f, a, 1)?;
            write!(f, " - ")?;
            write_child(f, b, 2)
        }
        Node::Mul(a, b) => {
            write_child(f, a, 2)?;
            write!(f, " * ")?;
            write_child(f, b, 3)
        }
        Node::Div(a, b) => {
            write_child(f, a, 2)?;
            write!(f, " / ")?;
            write_child(f, b, 3)
        }
        Node::Pow(a, b) => {
            // left operand of ^ must sit at atom level to survive reparsing
            write_child(f, a, 5)?;
            write!(f, "^")?;
            write_child(f, b, 3)
        }
        Node::Apply(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a)?;
            write!(f, ")")
        }
    }
}

// ── Lexer ────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token<'a> {
    tok: Tok,
    text: &'a str,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token<'_>>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some((Tok::Plus, 1)),
            b'-' => Some((Tok::Minus, 1)),
            b'*' => Some((Tok::Star, 1)),
            b'/' => Some((Tok::Slash, 1)),
            b'^' => Some((Tok::Caret, 1)),
            b'(' => Some((Tok::LParen, 1)),
            b')' => Some((Tok::RParen, 1)),
            _ => None,
        };
        if let Some((tok, len)) = tok {
            out.push(Token {
                tok,
                text: &text[i..i + len],
                offset: i,
            });
            i += len;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent suffix like 1e-3
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let slice = &text[start..i];
            let value: f64 = slice.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{}`", slice),
            })?;
            out.push(Token {
                tok: Tok::Num(value),
                text: slice,
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident,
                text: &text[start..i],
                offset: start,
            });
            continue;
        }
        return Err(Error::Syntax {
            offset: i,
            message: format!("unexpected character `{}`", &text[i..i + 1]),
        });
    }
    Ok(out)
}

// ── Parser ───────────────────────────────────────────────────────────

struct Parser<'a, 'b> {
    tokens: &'a [Token<'b>],
    pos: usize,
    len: usize,
}

impl<'a, 'b> Parser<'a, 'b> {
    fn peek(&self) -> Option<&'a Token<'b>> {
        self.tokens.get(self.pos)
    }

    fn eof_offset(&self) -> usize {
        self.len
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(Error::Syntax {
                offset: t.offset,
                message: format!("expected {}, found `{}`", what, t.text),
            }),
            None => Err(Error::Syntax {
                offset: self.eof_offset(),
                message: format!("expected {}, found end of input", what),
            }),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            let op = t.tok;
            if op != Tok::Plus && op != Tok::Minus {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == Tok::Plus {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            let op = t.tok;
            if op != Tok::Star && op != Tok::Slash {
                break;
            }
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == Tok::Star {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(t) = self.peek() {
            if t.tok == Tok::Minus {
                self.pos += 1;
                let inner = self.unary()?;
                // fold a negated literal so -4 round-trips as a constant
                return Ok(match inner {
                    Node::Const(c) => Node::Const(-c),
                    other => Node::Neg(Box::new(other)),
                });
            }
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(t) = self.peek() {
            if t.tok == Tok::Caret {
                self.pos += 1;
                // right-associative: the exponent re-enters at unary level
                let exponent = self.unary()?;
                return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => {
                return Err(Error::Syntax {
                    offset: self.eof_offset(),
                    message: "expected expression, found end of input".into(),
                })
            }
        };
        match t.tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident => {
                self.pos += 1;
                if t.text == "t" {
                    return Ok(Node::Var);
                }
                if let Some(func) = Func::from_name(t.text) {
                    self.expect(
                        Tok::LParen,
                        "`(` (function application requires parentheses)",
                    )?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Node::Apply(func, Box::new(arg)));
                }
                Err(Error::UnknownIdentifier {
                    name: t.text.to_string(),
                    offset: t.offset,
                })
            }
            _ => Err(Error::Syntax {
                offset: t.offset,
                message: format!("expected expression, found `{}`", t.text),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(text: &str, t: f64) -> f64 {
        Expression::parse(text).unwrap().eval(t)
    }

    #[test]
    fn sqrt_shift_rate_at_one() {
        let v = eval("t + sqrt(t^2 + 1)", 1.0);
        assert!((v - (1.0 + 2f64.sqrt())).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn exp_of_zero() {
        assert_eq!(eval("exp(0)", 0.0), 1.0);
    }

    #[test]
    fn caret_is_right_associative() {
        assert_eq!(eval("2^3^2", 0.0), 512.0);
    }

    #[test]
    fn unary_minus_binds_below_caret() {
        assert_eq!(eval("-2^2", 0.0), -4.0);
        assert_eq!(eval("(-2)^2", 0.0), 4.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
    }

    #[test]
    fn left_associative_subtraction() {
        assert_eq!(eval("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(eval("12 / 2 / 3", 0.0), 2.0);
    }

    #[test]
    fn syntax_error_carries_offset() {
        match Expression::parse("1 + ") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match Expression::parse("2 @ 3") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_reported() {
        match Expression::parse("2 * foo(1)") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "foo");
                assert_eq!(offset, 4);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn function_requires_parentheses() {
        assert!(Expression::parse("sin t").is_err());
    }

    #[test]
    fn derivative_of_sqrt_shift_matches_finite_difference() {
        let e = Expression::parse("t + sqrt(t^2 + 1)").unwrap();
        let d = e.derivative();
        for &t in &[0.0f64, 0.5, 1.0, 3.0, 10.0] {
            let analytic = 1.0 + t / (t * t + 1.0).sqrt();
            assert!((d.eval(t) - analytic).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn derivative_rules() {
        let d = Expression::parse("exp(2*t)").unwrap().derivative();
        assert!((d.eval(1.0) - 2.0 * 2f64.exp()).abs() < 1e-12);

        let d = Expression::parse("t^3").unwrap().derivative();
        assert_eq!(d.eval(2.0), 12.0);

        let d = Expression::parse("sin(t) / cos(t)").unwrap().derivative();
        let sec2 = 1.0 / 0.5f64.cos().powi(2);
        assert!((d.eval(0.5) - sec2).abs() < 1e-12);

        // general power rule, f(t)^g(t)
        let d = Expression::parse("t^t").unwrap().derivative();
        let expect = 2f64.powf(2.0) * (2f64.ln() + 1.0);
        assert!((d.eval(2.0) - expect).abs() < 1e-12);
    }

    // Strategy for random expression trees. Constants are kept positive and
    // simple; the printer/parser round trip is what matters here.
    fn node_strategy() -> impl Strategy<Value = Node> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|n| Node::Const(n as f64 / 8.0)),
            Just(Node::Var),
        ];
        leaf.prop_recursive(6, 48, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Div(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Node::Pow(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
                inner
                    .clone()
                    .prop_map(|a| Node::Apply(Func::Exp, Box::new(a))),
                inner
                    .clone()
                    .prop_map(|a| Node::Apply(Func::Sin, Box::new(a))),
                inner.prop_map(|a| Node::Apply(Func::Sqrt, Box::new(a))),
            ]
        })
    }

    // The parser folds a unary minus on a literal into the constant itself,
    // so canonical trees never contain Neg(Const(..)).
    fn normalize(n: Node) -> Node {
        match n {
            Node::Neg(a) => match normalize(*a) {
                Node::Const(c) => Node::Const(-c),
                other => Node::Neg(Box::new(other)),
            },
            Node::Add(a, b) => Node::Add(Box::new(normalize(*a)), Box::new(normalize(*b))),
            Node::Sub(a, b) => Node::Sub(Box::new(normalize(*a)), Box::new(normalize(*b))),
            Node::Mul(a, b) => Node::Mul(Box::new(normalize(*a)), Box::new(normalize(*b))),
            Node::Div(a, b) => Node::Div(Box::new(normalize(*a)), Box::new(normalize(*b))),
            Node::Pow(a, b) => Node::Pow(Box::new(normalize(*a)), Box::new(normalize(*b))),
            Node::Apply(f, a) => Node::Apply(f, Box::new(normalize(*a))),
            leaf => leaf,
        }
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(root in node_strategy()) {
            let expr = Expression { root: normalize(root) };
            let printed = expr.to_string();
            let reparsed = Expression::parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &expr, "printed form: {}", printed);
            // and the printed form is a fixed point
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
