//! Arithmetic expressions over `t` (alias `tau`) and `z`.
//!
//! Grammar: numbers, `t`, `tau`, `z`, `pi`, `+ - * / ^`, parentheses and the
//! functions `sin cos exp log sqrt`. `^` is right-associative and binds tighter
//! than unary minus, so `-t^2 = -(t^2)`.

use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at position {position} in `{text}`")]
pub struct ParseError {
    pub text: String,
    /// Byte offset of the offending token.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    T,
    Z,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    text: String,
    root: Node,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let err = |position: usize, message: String| ParseError { text: text.to_string(), position, message };
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut k = i + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    i = k;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let v = s.parse::<f64>().map_err(|_| err(start, format!("malformed number `{s}`")))?;
            out.push((Token::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Token::Ident(text[start..i].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Token::Op(c), i));
            i += 1;
        } else {
            return Err(err(i, format!("unexpected character `{c}`")));
        }
    }
    out.push((Token::End, text.len()));
    Ok(out)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { text: self.text.to_string(), position: self.offset(), message: message.into() }
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Token::Op(c) {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Token::Op('+') => {
                    self.next();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Token::Op('-') => {
                    self.next();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Token::Op('*') => {
                    self.next();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Token::Op('/') => {
                    self.next();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Token::Op('-') => {
                self.next();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Token::Op('+') => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Token::Op('^') {
            self.next();
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let at = self.offset();
        match self.next() {
            Token::Num(v) => Ok(Node::Num(v)),
            Token::Op('(') => {
                let inner = self.sum()?;
                self.expect(')')?;
                Ok(inner)
            }
            Token::Ident(name) => {
                let func = match name.as_str() {
                    "t" | "tau" => return Ok(Node::T),
                    "z" => return Ok(Node::Z),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "sqrt" => Func::Sqrt,
                    _ => {
                        return Err(ParseError {
                            text: self.text.to_string(),
                            position: at,
                            message: format!("unknown identifier `{name}`"),
                        })
                    }
                };
                self.expect('(')?;
                let arg = self.sum()?;
                self.expect(')')?;
                Ok(Node::Call(func, Box::new(arg)))
            }
            Token::End => Err(ParseError { text: self.text.to_string(), position: at, message: "unexpected end of input".into() }),
            Token::Op(c) => Err(ParseError { text: self.text.to_string(), position: at, message: format!("unexpected `{c}`") }),
        }
    }
}

/// Parses `text` into an evaluable expression.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { text, tokens: tokenize(text)?, pos: 0 };
    let root = p.sum()?;
    if *p.peek() != Token::End {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(Expr { text: text.to_string(), root })
}

fn eval(node: &Node, t: f64, z: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::T => t,
        Node::Z => z,
        Node::Neg(a) => -eval(a, t, z),
        Node::Add(a, b) => eval(a, t, z) + eval(b, t, z),
        Node::Sub(a, b) => eval(a, t, z) - eval(b, t, z),
        Node::Mul(a, b) => eval(a, t, z) * eval(b, t, z),
        Node::Div(a, b) => eval(a, t, z) / eval(b, t, z),
        Node::Pow(a, b) => {
            let (x, y) = (eval(a, t, z), eval(b, t, z));
            if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
                x.powi(y as i32)
            } else {
                x.powf(y)
            }
        }
        Node::Call(f, a) => {
            let x = eval(a, t, z);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Sqrt => x.sqrt(),
            }
        }
    }
}

/// Truncated Taylor series `sum c_k t^k` around a fixed point.
type Jet = Vec<f64>;

fn jet_mul(a: &Jet, b: &Jet) -> Jet {
    let n = a.len();
    (0..n).map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum()).collect()
}

fn jet_div(a: &Jet, b: &Jet) -> Jet {
    let n = a.len();
    let mut q = vec![0.0; n];
    for k in 0..n {
        let s: f64 = (0..k).map(|i| q[i] * b[k - i]).sum();
        q[k] = (a[k] - s) / b[0];
    }
    q
}

fn jet_exp(a: &Jet) -> Jet {
    let n = a.len();
    let mut e = vec![0.0; n];
    e[0] = a[0].exp();
    for k in 1..n {
        e[k] = (1..=k).map(|i| i as f64 * a[i] * e[k - i]).sum::<f64>() / k as f64;
    }
    e
}

fn jet_log(a: &Jet) -> Jet {
    let n = a.len();
    let mut l = vec![0.0; n];
    l[0] = a[0].ln();
    for k in 1..n {
        let s: f64 = (1..k).map(|i| i as f64 * l[i] * a[k - i]).sum();
        l[k] = (k as f64 * a[k] - s) / (k as f64 * a[0]);
    }
    l
}

fn jet_sin_cos(a: &Jet) -> (Jet, Jet) {
    let n = a.len();
    let mut s = vec![0.0; n];
    let mut c = vec![0.0; n];
    s[0] = a[0].sin();
    c[0] = a[0].cos();
    for k in 1..n {
        let kf = k as f64;
        s[k] = (1..=k).map(|i| i as f64 * a[i] * c[k - i]).sum::<f64>() / kf;
        c[k] = -(1..=k).map(|i| i as f64 * a[i] * s[k - i]).sum::<f64>() / kf;
    }
    (s, c)
}

fn jet_powi(a: &Jet, e: i32) -> Jet {
    let n = a.len();
    let mut one = vec![0.0; n];
    one[0] = 1.0;
    let mut out = one.clone();
    let mut base = a.clone();
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            out = jet_mul(&out, &base);
        }
        base = jet_mul(&base, &base);
        k >>= 1;
    }
    if e < 0 {
        jet_div(&one, &out)
    } else {
        out
    }
}

fn jet(node: &Node, t0: f64, z: f64, n: usize) -> Jet {
    let constant = |v: f64| {
        let mut j = vec![0.0; n];
        j[0] = v;
        j
    };
    match node {
        Node::Num(v) => constant(*v),
        Node::Z => constant(z),
        Node::T => {
            let mut j = constant(t0);
            if n > 1 {
                j[1] = 1.0;
            }
            j
        }
        Node::Neg(a) => jet(a, t0, z, n).iter().map(|x| -x).collect(),
        Node::Add(a, b) => jet(a, t0, z, n).iter().zip(jet(b, t0, z, n)).map(|(x, y)| x + y).collect(),
        Node::Sub(a, b) => jet(a, t0, z, n).iter().zip(jet(b, t0, z, n)).map(|(x, y)| x - y).collect(),
        Node::Mul(a, b) => jet_mul(&jet(a, t0, z, n), &jet(b, t0, z, n)),
        Node::Div(a, b) => jet_div(&jet(a, t0, z, n), &jet(b, t0, z, n)),
        Node::Pow(a, b) => {
            let (x, y) = (jet(a, t0, z, n), jet(b, t0, z, n));
            let constant_exponent = y[1..].iter().all(|c| *c == 0.0);
            if constant_exponent && y[0].fract() == 0.0 && y[0].abs() <= 64.0 {
                jet_powi(&x, y[0] as i32)
            } else {
                jet_exp(&jet_mul(&y, &jet_log(&x)))
            }
        }
        Node::Call(f, a) => {
            let x = jet(a, t0, z, n);
            match f {
                Func::Sin => jet_sin_cos(&x).0,
                Func::Cos => jet_sin_cos(&x).1,
                Func::Exp => jet_exp(&x),
                Func::Log => jet_log(&x),
                Func::Sqrt => {
                    let mut half = vec![0.0; n];
                    half[0] = 0.5;
                    jet_exp(&jet_mul(&half, &jet_log(&x)))
                }
            }
        }
    }
}

impl Expr {
    pub fn eval(&self, t: f64, z: f64) -> f64 {
        eval(&self.root, t, z)
    }

    /// Taylor coefficients `c_k = (1/k!) d_t^k e(t0, z)` for `k <= order`.
    pub fn taylor_in_t(&self, t0: f64, z: f64, order: usize) -> Vec<f64> {
        jet(&self.root, t0, z, order + 1)
    }

    pub fn uses_t(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::T => true,
                Node::Num(_) | Node::Z => false,
                Node::Neg(a) | Node::Call(_, a) => walk(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                    walk(a) || walk(b)
                }
            }
        }
        walk(&self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, t: f64, z: f64) -> f64 {
        parse_expression(s).unwrap().eval(t, z)
    }

    #[test]
    fn standard_semantics() {
        assert_eq!(ev("sin(t)", 0.0, 0.0), 0.0);
        assert_eq!(ev("1 + z*2", 0.0, 0.5), 2.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-t^2", 3.0, 0.0), -9.0);
        assert_eq!(ev("(1 - z) / 4", 0.0, 0.5), 0.125);
        assert_eq!(ev("1.5e-1 * tau", 2.0, 0.0), 0.3);
        let (t, z) = (0.7, 0.3);
        assert_eq!(ev("cos(t) + z*sin(t)", t, z), t.cos() + z * t.sin());
        assert_eq!(ev("exp(-z) * sqrt(t) - log(2)", t, z), (-z).exp() * t.sqrt() - 2f64.ln());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expression("1 + * z").unwrap_err();
        assert_eq!(e.position, 4);
        assert_eq!(parse_expression("sin(t").unwrap_err().position, 5);
        assert_eq!(parse_expression("2 $ 3").unwrap_err().position, 2);
        assert_eq!(parse_expression("foo(t)").unwrap_err().position, 0);
        assert_eq!(parse_expression("t t").unwrap_err().position, 2);
        assert!(parse_expression("").is_err());
    }

    #[test]
    fn taylor_jets() {
        let c = parse_expression("sin(t)").unwrap().taylor_in_t(0.0, 0.0, 7);
        let expect = [0.0, 1.0, 0.0, -1.0 / 6.0, 0.0, 1.0 / 120.0, 0.0, -1.0 / 5040.0];
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-16);
        }
        let e = parse_expression("exp(2*t) / (1 + t)^2 + sqrt(1 + t) * cos(z*t)").unwrap();
        let (z, h) = (0.4, 1e-3);
        let c = e.taylor_in_t(0.3, z, 3);
        assert!((c[0] - e.eval(0.3, z)).abs() < 1e-14);
        let d1 = (e.eval(0.3 + h, z) - e.eval(0.3 - h, z)) / (2.0 * h);
        let d2 = (e.eval(0.3 + h, z) - 2.0 * e.eval(0.3, z) + e.eval(0.3 - h, z)) / (h * h);
        assert!((c[1] - d1).abs() < 1e-5);
        assert!((2.0 * c[2] - d2).abs() < 1e-4);
        assert!(!parse_expression("z^2").unwrap().uses_t());
    }
}
