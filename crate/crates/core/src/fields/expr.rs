//! Expression AST and recursive-descent parser.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | name | name '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
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
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Atan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression over the coordinate variables of a chart.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    /// Coordinate variable, stored by its position in the chart's coordinate list.
    Var {
        index: usize,
        name: String,
    },
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        arg: Box<Expr>,
    },
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(index: usize, name: impl Into<String>) -> Expr {
        Expr::Var {
            index,
            name: name.into(),
        }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call {
            func,
            arg: Box::new(arg),
        }
    }

    /// Parses `text` against the coordinate names of a chart.
    pub fn parse<S: AsRef<str>>(text: &str, coords: &[S]) -> Result<Expr, ParseError> {
        let mut p = Parser {
            src: text,
            bytes: text.as_bytes(),
            pos: 0,
            coords,
        };
        p.skip_ws();
        if p.pos == p.bytes.len() {
            return Err(p.syntax(p.pos, "empty expression"));
        }
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.syntax(p.pos, "unexpected trailing input"));
        }
        Ok(e)
    }

    /// If this node is an integer-valued literal (possibly negated), returns it.
    pub fn integer_literal(&self) -> Option<i32> {
        match self {
            Expr::Num(v) if v.fract() == 0.0 && v.abs() <= 1024.0 => Some(*v as i32),
            Expr::Neg(inner) => inner.integer_literal().map(|k| -k),
            _ => None,
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Num(_) | Expr::Const(_) => None,
            Expr::Var { index, .. } => Some(*index),
            Expr::Neg(a) | Expr::Call { arg: a, .. } => a.max_var_index(),
            Expr::Binary { lhs, rhs, .. } => match (lhs.max_var_index(), rhs.max_var_index()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

/// Fully parenthesised form; re-parsing it yields a structurally identical AST.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Neg(a) => write!(f, "(-({a}))"),
            Expr::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

struct Parser<'a, S> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    coords: &'a [S],
}

impl<S: AsRef<str>> Parser<'_, S> {
    fn syntax(&self, offset: usize, message: &str) -> ParseError {
        ParseError::Syntax {
            offset,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.factor()?;
            return Ok(Expr::binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = match self.peek() {
            None => return Err(self.syntax(self.pos, "unexpected end of input")),
            Some(_) => self.pos,
        };
        let c = self.bytes[start];
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax(self.pos, "expected `)`"));
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start + 1;
            while end < self.bytes.len()
                && (self.bytes[end].is_ascii_alphanumeric() || self.bytes[end] == b'_')
            {
                end += 1;
            }
            self.pos = end;
            let name = &self.src[start..end];
            if let Some(index) = self.coords.iter().position(|c| c.as_ref() == name) {
                return Ok(Expr::var(index, name));
            }
            if let Some(func) = Func::from_name(name) {
                if !self.eat(b'(') {
                    return Err(self.syntax(self.pos, "function application requires `(`"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax(self.pos, "expected `)`"));
                }
                return Ok(Expr::call(func, arg));
            }
            return match name {
                "pi" => Ok(Expr::Const(Constant::Pi)),
                "e" => Ok(Expr::Const(Constant::E)),
                _ => Err(ParseError::UnknownIdentifier {
                    name: name.to_string(),
                    offset: start,
                }),
            };
        }
        Err(self.syntax(start, &format!("unexpected character `{}`", c as char)))
    }

    fn number(&mut self, start: usize) -> Result<Expr, ParseError> {
        let b = self.bytes;
        let mut end = start;
        while end < b.len() && b[end].is_ascii_digit() {
            end += 1;
        }
        if end < b.len() && b[end] == b'.' {
            end += 1;
            while end < b.len() && b[end].is_ascii_digit() {
                end += 1;
            }
        }
        if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
            let mut k = end + 1;
            if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                k += 1;
            }
            if k < b.len() && b[k].is_ascii_digit() {
                while k < b.len() && b[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let v: f64 = text
            .parse()
            .map_err(|_| self.syntax(start, "malformed number"))?;
        if !v.is_finite() {
            return Err(self.syntax(start, "number out of range"));
        }
        self.pos = end;
        Ok(Expr::Num(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: [&str; 2] = ["x", "y"];

    #[test]
    fn parses_cigar_potential() {
        let e = Expr::parse("-log(1+x^2+y^2)", &XY).unwrap();
        let x2 = Expr::binary(BinOp::Pow, Expr::var(0, "x"), Expr::num(2.0));
        let y2 = Expr::binary(BinOp::Pow, Expr::var(1, "y"), Expr::num(2.0));
        let sum = Expr::binary(BinOp::Add, Expr::binary(BinOp::Add, Expr::num(1.0), x2), y2);
        assert_eq!(e, Expr::Neg(Box::new(Expr::call(Func::Log, sum))));
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ is right associative and binds tighter than unary minus
        let e = Expr::parse("-x^2^3", &XY).unwrap();
        let inner = Expr::binary(
            BinOp::Pow,
            Expr::var(0, "x"),
            Expr::binary(BinOp::Pow, Expr::num(2.0), Expr::num(3.0)),
        );
        assert_eq!(e, Expr::Neg(Box::new(inner)));
        let e = Expr::parse("x - y - 1", &XY).unwrap();
        assert_eq!(e.to_string(), "((x - y) - 1.0)");
        let e = Expr::parse("x / y * 2", &XY).unwrap();
        assert_eq!(e.to_string(), "((x / y) * 2.0)");
        let e = Expr::parse("x^-2", &XY).unwrap();
        assert_eq!(e.to_string(), "(x ^ (-(2.0)))");
        let e = Expr::parse("(-x)^2", &XY).unwrap();
        assert_eq!(Expr::parse(&e.to_string(), &XY).unwrap(), e);
    }

    #[test]
    fn trailing_operator_reports_offset() {
        let err = Expr::parse("x +", &XY).unwrap_err();
        assert!(
            matches!(err, ParseError::Syntax { offset: 3, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn unknown_identifier() {
        let err = Expr::parse("x + zeta", &XY).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "zeta".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn function_needs_parentheses() {
        assert!(matches!(
            Expr::parse("sin x", &XY),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            Expr::parse("", &XY),
            Err(ParseError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            Expr::parse("(x", &XY),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            Expr::parse("x y", &XY),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
    }

    #[test]
    fn coordinates_shadow_constants() {
        let e = Expr::parse("e", &["e"]).unwrap();
        assert_eq!(e, Expr::var(0, "e"));
        let e = Expr::parse("e", &XY).unwrap();
        assert_eq!(e, Expr::Const(Constant::E));
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(Expr::parse("1.5e-3", &XY).unwrap(), Expr::num(1.5e-3));
        assert_eq!(Expr::parse(".25", &XY).unwrap(), Expr::num(0.25));
        assert_eq!(Expr::parse("2.", &XY).unwrap(), Expr::num(2.0));
    }
}
