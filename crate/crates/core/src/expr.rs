//! Arithmetic expressions over the variables `x`, `y`, `t`.
//!
//! Problem data (initial displacement and velocity, forcing, custom damping
//! laws) is supplied as text such as `t^3*sin(pi*x)`. The grammar is the usual
//! one: `^` binds tightest and associates to the right, unary minus sits below
//! it (so `-2^2 == -4`), then `*` `/`, then `+` `-`. The function set is
//! `sin cos exp sqrt abs` and the only named constant is `pi`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::fmt;

use crate::math;

/// Independent variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    T,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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

    // (left, right) binding powers; `^` is right-associative.
    fn binding_power(self) -> (u8, u8) {
        match self {
            BinOp::Add | BinOp::Sub => (1, 2),
            BinOp::Mul | BinOp::Div => (3, 4),
            BinOp::Pow => (7, 6),
        }
    }
}

const UNARY_MINUS_BP: u8 = 5;

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Const(f64),
    Pi,
    Var(Var),
    Neg(Box<Expression>),
    Binary(BinOp, Box<Expression>, Box<Expression>),
    Call(Func, Box<Expression>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnexpectedChar(char),
    UnknownIdentifier(String),
    /// An operator with no operand after it.
    DanglingOperator,
    UnbalancedParen,
    /// A function name not followed by `(`.
    MissingCallParen(String),
    InvalidNumber,
    TrailingInput,
}

/// Syntax error located at a byte offset into the source.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::EmptyInput => f.write_str("empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::DanglingOperator => f.write_str("operator is missing an operand"),
            ParseErrorKind::UnbalancedParen => f.write_str("unbalanced parenthesis"),
            ParseErrorKind::MissingCallParen(name) => write!(f, "expected `(` after `{name}`"),
            ParseErrorKind::InvalidNumber => f.write_str("malformed number"),
            ParseErrorKind::TrailingInput => f.write_str("unexpected trailing input"),
        }
    }
}

impl core::error::Error for ParseError {}

/// Failure while evaluating a well-formed expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalError {
    DivisionByZero,
    SqrtOfNegative(f64),
    /// `a^b` with a negative base and a non-integer exponent.
    PowDomain { base: f64, exponent: f64 },
    NonFinite,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero => f.write_str("division by zero"),
            EvalError::SqrtOfNegative(v) => write!(f, "square root of negative value {v}"),
            EvalError::PowDomain { base, exponent } => {
                write!(f, "{base}^{exponent} is not a real number")
            }
            EvalError::NonFinite => f.write_str("evaluation overflowed to a non-finite value"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Parses `source` with the standard variables `x`, `y`, `t`.
pub fn parse(source: &str) -> Result<Expression, ParseError> {
    parse_with_aliases(source, &[])
}

/// Parses `source`, additionally accepting each `(name, var)` alias as a
/// spelling of `var`. Damping laws use this to write `z` for the argument.
pub fn parse_with_aliases(source: &str, aliases: &[(&str, Var)]) -> Result<Expression, ParseError> {
    let mut parser = Parser {
        src: source,
        pos: 0,
        aliases,
    };
    parser.skip_ws();
    if parser.at_end() {
        return Err(parser.error(ParseErrorKind::EmptyInput));
    }
    let expr = parser.expr(0)?;
    parser.skip_ws();
    match parser.peek() {
        None => Ok(expr),
        Some(')') => Err(parser.error(ParseErrorKind::UnbalancedParen)),
        Some(_) => Err(parser.error(ParseErrorKind::TrailingInput)),
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    aliases: &'a [(&'a str, Var)],
}

impl Parser<'_> {
    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.pos,
            kind,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_binop(&mut self) -> Option<BinOp> {
        self.skip_ws();
        Some(match self.peek()? {
            '+' => BinOp::Add,
            '-' => BinOp::Sub,
            '*' => BinOp::Mul,
            '/' => BinOp::Div,
            '^' => BinOp::Pow,
            _ => return None,
        })
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expression, ParseError> {
        let mut lhs = self.prefix()?;
        while let Some(op) = self.peek_binop() {
            let (left_bp, right_bp) = op.binding_power();
            if left_bp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(right_bp)?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Err(self.error(ParseErrorKind::DanglingOperator));
        };
        match c {
            '-' => {
                self.pos += 1;
                let operand = self.expr(UNARY_MINUS_BP)?;
                Ok(Expression::Neg(Box::new(operand)))
            }
            '(' => {
                self.pos += 1;
                let inner = self.expr(0)?;
                self.expect_close(start)?;
                Ok(inner)
            }
            c if c.is_ascii_digit() || c == '.' => self.number(),
            c if c.is_ascii_alphabetic() || c == '_' => self.identifier(),
            '+' | '*' | '/' | '^' => Err(self.error(ParseErrorKind::DanglingOperator)),
            ')' => Err(self.error(ParseErrorKind::UnbalancedParen)),
            other => Err(self.error(ParseErrorKind::UnexpectedChar(other))),
        }
    }

    fn expect_close(&mut self, open_at: usize) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(')') {
            self.pos += 1;
            Ok(())
        } else if self.at_end() {
            Err(ParseError {
                offset: open_at,
                kind: ParseErrorKind::UnbalancedParen,
            })
        } else {
            Err(self.error(ParseErrorKind::UnexpectedChar(self.peek().unwrap_or(' '))))
        }
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        // Optional exponent: e, E followed by optional sign and digits.
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = end;
                Ok(Expression::Const(v))
            }
            _ => Err(ParseError {
                offset: start,
                kind: ParseErrorKind::InvalidNumber,
            }),
        }
    }

    fn identifier(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;
        if let Some(func) = Func::from_name(name) {
            self.skip_ws();
            if self.peek() != Some('(') {
                return Err(self.error(ParseErrorKind::MissingCallParen(name.to_string())));
            }
            let open_at = self.pos;
            self.pos += 1;
            let arg = self.expr(0)?;
            self.expect_close(open_at)?;
            return Ok(Expression::Call(func, Box::new(arg)));
        }
        let var = match name {
            "pi" => return Ok(Expression::Pi),
            "x" => Var::X,
            "y" => Var::Y,
            "t" => Var::T,
            other => match self.aliases.iter().find(|(alias, _)| *alias == other) {
                Some(&(_, var)) => var,
                None => {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnknownIdentifier(other.to_string()),
                    })
                }
            },
        };
        Ok(Expression::Var(var))
    }
}

impl Expression {
    /// Evaluates the tree at `(x, y, t)` in double precision.
    pub fn eval(&self, x: f64, y: f64, t: f64) -> Result<f64, EvalError> {
        let value = match self {
            Expression::Const(c) => *c,
            Expression::Pi => core::f64::consts::PI,
            Expression::Var(Var::X) => x,
            Expression::Var(Var::Y) => y,
            Expression::Var(Var::T) => t,
            Expression::Neg(e) => -e.eval(x, y, t)?,
            Expression::Binary(op, l, r) => {
                let a = l.eval(x, y, t)?;
                let b = r.eval(x, y, t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && b != libm::trunc(b) {
                            return Err(EvalError::PowDomain {
                                base: a,
                                exponent: b,
                            });
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        math::pow(a, b)
                    }
                }
            }
            Expression::Call(func, arg) => {
                let a = arg.eval(x, y, t)?;
                match func {
                    Func::Sin => math::sin(a),
                    Func::Cos => math::cos(a),
                    Func::Exp => math::exp(a),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::SqrtOfNegative(a));
                        }
                        math::sqrt(a)
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// True when `var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expression::Const(_) | Expression::Pi => false,
            Expression::Var(v) => *v == var,
            Expression::Neg(e) | Expression::Call(_, e) => e.depends_on(var),
            Expression::Binary(_, l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }

    /// True for a literal zero constant (possibly negated), used to skip
    /// sampling of forcing terms that are identically zero.
    pub fn is_literal_zero(&self) -> bool {
        match self {
            Expression::Const(c) => *c == 0.0,
            Expression::Neg(e) => e.is_literal_zero(),
            _ => false,
        }
    }
}

// Fully parenthesised so that printing and re-parsing reproduces the tree's
// evaluation exactly.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expression::Const(c) => write!(f, "{c}"),
            Expression::Pi => f.write_str("pi"),
            Expression::Var(v) => f.write_str(v.name()),
            Expression::Neg(e) => write!(f, "(-{e})"),
            Expression::Binary(op, l, r) => write!(f, "({l}{}{r})", op.symbol()),
            Expression::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn eval_str(src: &str, x: f64, y: f64, t: f64) -> f64 {
        parse(src).unwrap().eval(x, y, t).unwrap()
    }

    #[test]
    fn sin_pi_x_parses_to_single_call() {
        let e = parse("sin(pi*x)").unwrap();
        let expected = Expression::Call(
            Func::Sin,
            Box::new(Expression::Binary(
                BinOp::Mul,
                Box::new(Expression::Pi),
                Box::new(Expression::Var(Var::X)),
            )),
        );
        assert_eq!(e, expected);
        assert_eq!(e.eval(0.5, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval_str("2^3^2", 0.0, 0.0, 0.0), 512.0);
    }

    #[test]
    fn precedence_table() {
        assert_eq!(eval_str("-2^2", 0.0, 0.0, 0.0), -4.0);
        assert_eq!(eval_str("1+2*3", 0.0, 0.0, 0.0), 7.0);
        assert_eq!(eval_str("(1+2)*3", 0.0, 0.0, 0.0), 9.0);
        assert_eq!(eval_str("8/4/2", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(eval_str("2^-1", 0.0, 0.0, 0.0), 0.5);
        assert_eq!(eval_str("-x*3", 2.0, 0.0, 0.0), -6.0);
        assert_eq!(eval_str("1 - -1", 0.0, 0.0, 0.0), 2.0);
        assert_eq!(eval_str("1.5e2 + 2E-1", 0.0, 0.0, 0.0), 150.2);
    }

    #[test]
    fn forcing_term_of_example_one() {
        assert_eq!(eval_str("t^3*sin(pi*x)", 0.5, 0.0, 2.0), 8.0);
    }

    #[test]
    fn dangling_operator_reports_offset() {
        let err = parse("x*+").unwrap_err();
        assert_eq!(err.offset, 2);
        assert_eq!(err.kind, ParseErrorKind::DanglingOperator);
        assert_eq!(parse("x+").unwrap_err().kind, ParseErrorKind::DanglingOperator);
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(parse("").unwrap_err().kind, ParseErrorKind::EmptyInput);
        assert_eq!(parse("   ").unwrap_err().kind, ParseErrorKind::EmptyInput);
        let e = parse("(x+1").unwrap_err();
        assert_eq!((e.offset, e.kind), (0, ParseErrorKind::UnbalancedParen));
        let e = parse("x+1)").unwrap_err();
        assert_eq!((e.offset, e.kind), (3, ParseErrorKind::UnbalancedParen));
        let e = parse("2*w").unwrap_err();
        assert_eq!(e.offset, 2);
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("w".into()));
        assert!(matches!(
            parse("sin x").unwrap_err().kind,
            ParseErrorKind::MissingCallParen(_)
        ));
        assert_eq!(parse("x y").unwrap_err().kind, ParseErrorKind::TrailingInput);
        assert_eq!(parse("1.2.3").unwrap_err().kind, ParseErrorKind::InvalidNumber);
        assert!(matches!(parse("x # 1").unwrap_err().kind, ParseErrorKind::TrailingInput));
        assert!(matches!(parse("$").unwrap_err().kind, ParseErrorKind::UnexpectedChar('$')));
    }

    #[test]
    fn domain_errors() {
        assert_eq!(parse("1/x").unwrap().eval(0.0, 0.0, 0.0), Err(EvalError::DivisionByZero));
        assert!(matches!(
            parse("sqrt(x)").unwrap().eval(-1.0, 0.0, 0.0),
            Err(EvalError::SqrtOfNegative(_))
        ));
        assert!(matches!(
            parse("x^0.5").unwrap().eval(-1.0, 0.0, 0.0),
            Err(EvalError::PowDomain { .. })
        ));
        assert_eq!(parse("exp(x)").unwrap().eval(1e4, 0.0, 0.0), Err(EvalError::NonFinite));
        assert_eq!(eval_str("(-2)^3", 0.0, 0.0, 0.0), -8.0);
    }

    #[test]
    fn aliases_map_onto_variables() {
        let e = parse_with_aliases("sqrt(1+z)", &[("z", Var::X)]).unwrap();
        assert_eq!(e.eval(3.0, 0.0, 0.0).unwrap(), 2.0);
        assert!(parse("sqrt(1+z)").is_err());
    }

    #[test]
    fn dependency_queries() {
        let e = parse("t^3*sin(pi*x)").unwrap();
        assert!(e.depends_on(Var::T));
        assert!(e.depends_on(Var::X));
        assert!(!e.depends_on(Var::Y));
        assert!(parse("0").unwrap().is_literal_zero());
        assert!(parse("-0.0").unwrap().is_literal_zero());
        assert!(!parse("0*x").unwrap().is_literal_zero());
    }

    #[test]
    fn display_round_trips_tricky_trees() {
        for src in ["-2^2", "2^3^2", "(1-x)*(1-y)", "1/-x", "abs(-t)*1e-7", "-(-(x))"] {
            let e = parse(src).unwrap();
            let printed = format!("{e}");
            let again = parse(&printed).unwrap();
            assert_eq!(e, again, "{src} -> {printed}");
        }
    }
}
