//! Recursive-descent parser for closed-form functions of `z`.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?          (right-associative)
//! primary := number | number "i" | "i" | "pi" | "e" | "z"
//!          | func "(" expr ")" | "(" expr ")"
//! func    := exp | log | sin | cos | tan | sinh | cosh | sqrt
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! ```
//!
//! `^` binds tighter than unary minus, so `-z^2` is `-(z^2)` and
//! `2^-z` is `2^(-z)`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    I,
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> Complex64 {
        match self {
            Constant::I => Complex64::new(0.0, 1.0),
            Constant::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Constant::E => Complex64::new(std::f64::consts::E, 0.0),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::I => "i",
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Syntax tree of a closed-form function of `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Complex64),
    Const(Constant),
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr> {
        parse(source)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn real(x: f64) -> Expr {
        Expr::Num(Complex64::new(x, 0.0))
    }

    /// True if the tree does not mention `z`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Var => false,
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var | Expr::Num(_) | Expr::Const(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Bin(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn write_real(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // Debug output of f64 is the shortest string that round-trips.
    write!(f, "{:?}", x)
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({})", e)
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => {
                if c.im == 0.0 {
                    write_real(f, c.re)
                } else if c.re == 0.0 {
                    write_real(f, c.im)?;
                    f.write_str("i")
                } else {
                    f.write_str("(")?;
                    write_real(f, c.re)?;
                    f.write_str("+")?;
                    write_real(f, c.im)?;
                    f.write_str("i)")
                }
            }
            Expr::Const(k) => f.write_str(k.name()),
            Expr::Var => f.write_str("z"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
            Expr::Bin(op, a, b) => {
                let p = self.precedence();
                if *op == BinOp::Pow {
                    write_child(f, a, a.precedence() <= 4)?;
                    write!(f, "{}", op.symbol())?;
                    write_child(f, b, b.precedence() < 3)
                } else {
                    write_child(f, a, a.precedence() < p)?;
                    write!(f, "{}", op.symbol())?;
                    write_child(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let text = &src[start..i];
            let x: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            let imaginary = i < bytes.len()
                && bytes[i] == b'i'
                && !bytes
                    .get(i + 1)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_');
            if imaginary {
                i += 1;
                out.push((Tok::Imag(x), start));
            } else {
                out.push((Tok::Num(x), start));
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!("unexpected character `{ch}`"),
                    });
                }
            };
            i += 1;
            out.push((tok, start));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected `)`"),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        self.pos += 1;
        match tok {
            Tok::Num(x) => Ok(Expr::Num(Complex64::new(x, 0.0))),
            Tok::Imag(x) => Ok(Expr::Num(Complex64::new(0.0, x))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "z" => Ok(Expr::Var),
                "i" => Ok(Expr::Const(Constant::I)),
                "pi" => Ok(Expr::Const(Constant::Pi)),
                "e" => Ok(Expr::Const(Constant::E)),
                other => match Func::from_name(other) {
                    Some(func) => {
                        if self.peek() != Some(&Tok::LParen) {
                            return self.err(format!("expected `(` after `{other}`"));
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        Ok(Expr::call(func, arg))
                    }
                    None => Err(Error::UnknownIdentifier {
                        name: other.to_string(),
                        offset,
                    }),
                },
            },
            Tok::Op(c) => {
                self.pos -= 1;
                self.err(format!("unexpected operator `{c}`"))
            }
            Tok::RParen => {
                self.pos -= 1;
                self.err("unexpected `)`")
            }
        }
    }
}

/// Parses `source` under the grammar in the module docs.
pub fn parse(source: &str) -> Result<Expr> {
    if source.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let toks = lex(source)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: source.len(),
    };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(x: f64) -> Expr {
        Expr::real(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("z^2 + 1").unwrap(),
            Expr::bin(BinOp::Add, Expr::bin(BinOp::Pow, Expr::Var, n(2.0)), n(1.0))
        );
        assert_eq!(
            parse("-z^2").unwrap(),
            Expr::Neg(Box::new(Expr::bin(BinOp::Pow, Expr::Var, n(2.0))))
        );
        assert_eq!(
            parse("2^3^z").unwrap(),
            Expr::bin(
                BinOp::Pow,
                n(2.0),
                Expr::bin(BinOp::Pow, n(3.0), Expr::Var)
            )
        );
        assert_eq!(
            parse("1-z-2").unwrap(),
            Expr::bin(BinOp::Sub, Expr::bin(BinOp::Sub, n(1.0), Expr::Var), n(2.0))
        );
        assert_eq!(
            parse("-z*2").unwrap(),
            Expr::bin(BinOp::Mul, Expr::Neg(Box::new(Expr::Var)), n(2.0))
        );
    }

    #[test]
    fn e2_tree() {
        let e = parse("exp(2*pi*i*z^2)*sin(pi*z)/pi").unwrap();
        let pi = || Expr::Const(Constant::Pi);
        let arg = Expr::bin(
            BinOp::Mul,
            Expr::bin(
                BinOp::Mul,
                Expr::bin(BinOp::Mul, n(2.0), pi()),
                Expr::Const(Constant::I),
            ),
            Expr::bin(BinOp::Pow, Expr::Var, n(2.0)),
        );
        let expected = Expr::bin(
            BinOp::Div,
            Expr::bin(
                BinOp::Mul,
                Expr::call(Func::Exp, arg),
                Expr::call(Func::Sin, Expr::bin(BinOp::Mul, pi(), Expr::Var)),
            ),
            pi(),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("sin(") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse("z + foo(z)") {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "foo");
                assert_eq!(offset, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("z $ 1"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse("(z"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse("z)"), Err(Error::Syntax { offset: 1, .. })));
        assert!(parse("").is_err());
    }

    #[test]
    fn literals() {
        assert_eq!(parse("2.5i").unwrap(), Expr::Num(Complex64::new(0.0, 2.5)));
        assert_eq!(parse("1e-5").unwrap(), n(1e-5));
        assert_eq!(parse(".5").unwrap(), n(0.5));
        assert!(parse("2e").is_err());
        assert_eq!(
            parse("2*e").unwrap(),
            Expr::bin(BinOp::Mul, n(2.0), Expr::Const(Constant::E))
        );
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "z^2 + 1",
            "exp(2*pi*i*z^2)*sin(pi*z)/pi",
            "-(z+1)*(z-1)",
            "(z^2)^3",
            "2^-z",
            "1-(z-2)",
            "1/(z/2)",
            "--z",
            "-z^2",
            "(-z)^2",
            "exp(-z)",
            "1e-20*z + 3.25i",
        ] {
            let e = parse(s).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap(), e, "{s} -> {printed}");
        }
    }
}
