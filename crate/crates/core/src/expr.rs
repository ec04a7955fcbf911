//! A small arithmetic-expression parser for one-variable coefficient
//! functions supplied in configuration documents (`sigma_expr`, `phi_expr`).
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, the variable `x`,
//! numeric literals, and the functions `sqrt`, `exp`, `log`, `abs`,
//! `min(a,b)`, `max(a,b)`, `pow(a,b)`.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call1(Func1, Box<Node>),
    Call2(Func2, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func1 {
    Sqrt,
    Exp,
    Log,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func2 {
    Min,
    Max,
    Pow,
}

/// A parsed one-variable expression.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    text: String,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr {
            root,
            text: text.to_string(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_node(&self.root, x)
    }
}

fn eval_node(n: &Node, x: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var => x,
        Node::Neg(a) => -eval_node(a, x),
        Node::Add(a, b) => eval_node(a, x) + eval_node(b, x),
        Node::Sub(a, b) => eval_node(a, x) - eval_node(b, x),
        Node::Mul(a, b) => eval_node(a, x) * eval_node(b, x),
        Node::Div(a, b) => eval_node(a, x) / eval_node(b, x),
        Node::Pow(a, b) => eval_node(a, x).powf(eval_node(b, x)),
        Node::Call1(f, a) => {
            let v = eval_node(a, x);
            match f {
                Func1::Sqrt => v.sqrt(),
                Func1::Exp => v.exp(),
                Func1::Log => v.ln(),
                Func1::Abs => v.abs(),
            }
        }
        Node::Call2(f, a, b) => {
            let u = eval_node(a, x);
            let v = eval_node(b, x);
            match f {
                Func2::Min => u.min(v),
                Func2::Max => u.max(v),
                Func2::Pow => u.powf(v),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Config(format!(
            "expression parse error at byte {}: {msg}",
            self.pos
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn accept(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.accept(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.accept(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.accept(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.accept(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.accept(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.accept(b'^') {
            // Right-associative exponent; allow a unary minus there.
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                if !self.accept(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.err("expected a number, 'x', a function call or '('")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && self.pos > start {
                self.pos += 1;
                if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(&format!("bad numeric literal '{text}'")))?;
        self.skip_ws();
        Ok(Node::Num(v))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string();
        self.skip_ws();
        if name == "x" {
            return Ok(Node::Var);
        }
        if !self.accept(b'(') {
            return Err(self.err(&format!("unknown identifier '{name}' (only 'x' is a variable)")));
        }
        let first = self.expr()?;
        let two_args = self.accept(b',');
        let second = if two_args { Some(self.expr()?) } else { None };
        if !self.accept(b')') {
            return Err(self.err("expected ')' after function arguments"));
        }
        match (name.as_str(), second) {
            ("sqrt", None) => Ok(Node::Call1(Func1::Sqrt, Box::new(first))),
            ("exp", None) => Ok(Node::Call1(Func1::Exp, Box::new(first))),
            ("log", None) => Ok(Node::Call1(Func1::Log, Box::new(first))),
            ("abs", None) => Ok(Node::Call1(Func1::Abs, Box::new(first))),
            ("min", Some(b)) => Ok(Node::Call2(Func2::Min, Box::new(first), Box::new(b))),
            ("max", Some(b)) => Ok(Node::Call2(Func2::Max, Box::new(first), Box::new(b))),
            ("pow", Some(b)) => Ok(Node::Call2(Func2::Pow, Box::new(first), Box::new(b))),
            (_, Some(_)) => Err(self.err(&format!("unknown two-argument function '{name}'"))),
            (_, None) => Err(self.err(&format!("unknown function '{name}'"))),
        }
    }
}
