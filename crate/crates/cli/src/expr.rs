//! Closed-form coefficient expressions for inline model definitions.
//!
//! Grammar: decimal constants, state variables (`x` or `x1`..`xd`), the
//! four arithmetic operators with unary minus, parentheses, and the
//! functions `sin`, `cos`, `tanh`, `exp`.  `exp` clamps its argument to
//! `[-60, 60]` so a misconfigured coefficient cannot overflow a run.
//! Arbitrary code is deliberately out: presets plus this grammar cover the
//! models of interest and keep runs reproducible.

use std::fmt;

#[derive(Debug, Clone)]
pub enum ExprError {
    Parse { pos: usize, message: String },
    UnknownVariable { name: String, dim: usize },
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprError::Parse { pos, message } => {
                write!(f, "parse error at byte {pos}: {message}")
            }
            ExprError::UnknownVariable { name, dim } => {
                write!(f, "unknown variable {name:?} (dimension is {dim})")
            }
        }
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Tanh(Box<Node>),
    Exp(Box<Node>),
}

/// A compiled coefficient expression over `dim` state variables.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
}

impl Expr {
    pub fn parse(source: &str, dim: usize) -> Result<Expr, ExprError> {
        let mut p = Parser {
            bytes: source.as_bytes(),
            pos: 0,
            dim,
        };
        p.skip_ws();
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(ExprError::Parse {
                pos: p.pos,
                message: format!("unexpected trailing input {:?}", &source[p.pos..]),
            });
        }
        Ok(Expr { root })
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        eval_node(&self.root, vars)
    }
}

fn eval_node(node: &Node, vars: &[f64]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Var(i) => vars[*i],
        Node::Add(a, b) => eval_node(a, vars) + eval_node(b, vars),
        Node::Sub(a, b) => eval_node(a, vars) - eval_node(b, vars),
        Node::Mul(a, b) => eval_node(a, vars) * eval_node(b, vars),
        Node::Div(a, b) => eval_node(a, vars) / eval_node(b, vars),
        Node::Neg(a) => -eval_node(a, vars),
        Node::Sin(a) => eval_node(a, vars).sin(),
        Node::Cos(a) => eval_node(a, vars).cos(),
        Node::Tanh(a) => eval_node(a, vars).tanh(),
        Node::Exp(a) => eval_node(a, vars).clamp(-60.0, 60.0).exp(),
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut node = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut node = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    node = Node::Mul(Box::new(node), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    node = Node::Div(Box::new(node), Box::new(self.factor()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(ExprError::Parse {
                        pos: self.pos,
                        message: "expected ')'".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            _ => Err(ExprError::Parse {
                pos: self.pos,
                message: "expected a number, variable, function or '('".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' {
                self.pos += 1;
            } else if (c == b'+' || c == b'-')
                && self.pos > start
                && matches!(self.bytes[self.pos - 1], b'e' | b'E')
            {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| ExprError::Parse {
                pos: start,
                message: format!("bad number literal {text:?}"),
            })
    }

    fn identifier(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .to_string();
        match name.as_str() {
            "sin" | "cos" | "tanh" | "exp" => {
                self.skip_ws();
                if self.peek() != Some(b'(') {
                    return Err(ExprError::Parse {
                        pos: self.pos,
                        message: format!("function {name} needs '('"),
                    });
                }
                self.pos += 1;
                let arg = Box::new(self.expr()?);
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(ExprError::Parse {
                        pos: self.pos,
                        message: "expected ')'".into(),
                    });
                }
                self.pos += 1;
                Ok(match name.as_str() {
                    "sin" => Node::Sin(arg),
                    "cos" => Node::Cos(arg),
                    "tanh" => Node::Tanh(arg),
                    _ => Node::Exp(arg),
                })
            }
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "x" => Ok(Node::Var(0)),
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(k) = rest.parse::<usize>() {
                        if k >= 1 && k <= self.dim {
                            return Ok(Node::Var(k - 1));
                        }
                    }
                }
                Err(ExprError::UnknownVariable {
                    name,
                    dim: self.dim,
                })
            }
        }
    }
}
