//! Parameter-bearing polynomial expressions.
//!
//! Grammar (whitespace insignificant, `x` and `y` reserved):
//!
//! ```text
//! expr   := term { ("+"|"-") term } ;
//! term   := factor { ("*"|"/") factor } ;
//! factor := base [ "^" unsigned-int ] | "-" factor ;
//! base   := number | ident | "(" expr ")" ;
//! number := unsigned-int [ "." digits ] | unsigned-int "/" unsigned-int ;
//! ```
//!
//! A rational literal `p/q` is only recognised as the leading factor of a
//! term and never when followed by `^`, so `x/2/3` keeps its left-associative
//! meaning and `3/2^2` reads as `3/(2^2)`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::poly::BivariatePolynomial;

/// Exact nonnegative rational literal, always stored in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den).max(1);
        Some(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(n: u64) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Number(Rational),
    Ident(String),
    Neg(Box<Expression>),
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    Pow(Box<Expression>, u32),
}

impl Expression {
    /// Identifiers other than `x` and `y`, in first-occurrence order.
    pub fn parameters(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_idents(&mut out);
        out.retain(|n| n != "x" && n != "y");
        out
    }

    fn collect_idents(&self, out: &mut Vec<String>) {
        match self {
            Expression::Number(_) => {}
            Expression::Ident(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expression::Neg(a) | Expression::Pow(a, _) => a.collect_idents(out),
            Expression::Add(a, b)
            | Expression::Sub(a, b)
            | Expression::Mul(a, b)
            | Expression::Div(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(u64),
    Decimal(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            let mut frac_part = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if fs == i {
                    return Err(syntax(tl, tc + (i - start), "expected digits after '.'"));
                }
                frac_part = chars[fs..i].iter().collect();
            }
            // Optional exponent: `e`, an optional sign, then digits.
            let mut exponent = 0i64;
            if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                let mut j = i + 1;
                let negative = j < chars.len() && chars[j] == '-';
                if j < chars.len() && matches!(chars[j], '+' | '-') {
                    j += 1;
                }
                let es = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if es < j {
                    let digits: String = chars[es..j].iter().collect();
                    let e: i64 = digits.parse().unwrap_or(i64::MAX);
                    exponent = if negative { -e } else { e };
                    i = j;
                }
            }
            col += i - start;
            let too_large = || syntax(tl, tc, "numeric literal too large");
            let tok = if frac_part.is_empty() && exponent == 0 && !chars[start..i].contains(&'.') {
                Tok::Int(int_part.parse().map_err(|_| too_large())?)
            } else {
                let digits = format!("{int_part}{frac_part}");
                let mut num: u64 = digits.parse().map_err(|_| too_large())?;
                let shift = exponent - frac_part.len() as i64;
                let pow = |k: i64| u32::try_from(k).ok().and_then(|k| 10u64.checked_pow(k)).ok_or_else(too_large);
                let mut den = 1;
                if shift >= 0 {
                    num = num.checked_mul(pow(shift)?).ok_or_else(too_large)?;
                } else {
                    den = pow(-shift)?;
                }
                Tok::Decimal(Rational::new(num, den).expect("nonzero denominator"))
            };
            tokens.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            tokens.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        return Err(syntax(tl, tc, format!("unexpected character '{c}'")));
    }
    tokens.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expression::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expression::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.factor(true)?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expression::Mul(Box::new(lhs), Box::new(self.factor(false)?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expression::Div(Box::new(lhs), Box::new(self.factor(false)?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self, leading: bool) -> Result<Expression> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expression::Neg(Box::new(self.factor(false)?)));
        }
        let base = self.base(leading)?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let (line, column) = self.here();
            return match self.bump().tok {
                Tok::Int(n) => {
                    let n = u32::try_from(n).map_err(|_| syntax(line, column, "exponent too large"))?;
                    Ok(Expression::Pow(Box::new(base), n))
                }
                _ => Err(syntax(
                    line,
                    column,
                    "exponent must be a nonnegative integer literal",
                )),
            };
        }
        Ok(base)
    }

    fn base(&mut self, leading: bool) -> Result<Expression> {
        let (line, column) = self.here();
        match self.bump().tok {
            Tok::Int(n) => {
                let rational_follows = leading
                    && *self.peek() == Tok::Slash
                    && matches!(self.peek_at(1), Tok::Int(_))
                    && *self.peek_at(2) != Tok::Caret;
                if rational_follows {
                    self.bump();
                    let (dl, dc) = self.here();
                    let Tok::Int(d) = self.bump().tok else {
                        unreachable!()
                    };
                    let r = Rational::new(n, d)
                        .ok_or_else(|| syntax(dl, dc, "zero denominator in rational literal"))?;
                    Ok(Expression::Number(r))
                } else {
                    Ok(Expression::Number(Rational::integer(n)))
                }
            }
            Tok::Decimal(r) => Ok(Expression::Number(r)),
            Tok::Ident(name) => {
                if name == "x" || name == "y" || self.params.contains(&name.as_str()) {
                    Ok(Expression::Ident(name))
                } else {
                    Err(Error::UndeclaredIdentifier(name))
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                let (l, c) = self.here();
                match self.bump().tok {
                    Tok::RParen => Ok(inner),
                    _ => Err(syntax(l, c, "expected ')'")),
                }
            }
            Tok::End => Err(syntax(line, column, "unexpected end of input")),
            other => Err(syntax(line, column, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parse `text`; every identifier must be `x`, `y` or one of `params`.
pub fn parse_expression(text: &str, params: &[&str]) -> Result<Expression> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
        params,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        let (line, column) = p.here();
        return Err(syntax(line, column, format!("unexpected token {:?}", p.peek())));
    }
    Ok(e)
}

fn prec(e: &Expression) -> u8 {
    match e {
        Expression::Add(..) | Expression::Sub(..) => 1,
        Expression::Mul(..) | Expression::Div(..) => 2,
        Expression::Neg(_) => 3,
        Expression::Pow(..) => 4,
        Expression::Number(r) if !r.is_integer() => 5,
        Expression::Number(_) | Expression::Ident(_) => 6,
    }
}

fn write_min(f: &mut fmt::Formatter<'_>, e: &Expression, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Number(r) if r.is_integer() => write!(f, "{}", r.num),
            Expression::Number(r) => write!(f, "({}/{})", r.num, r.den),
            Expression::Ident(n) => write!(f, "{n}"),
            Expression::Neg(a) => {
                write!(f, "-")?;
                write_min(f, a, 3)
            }
            Expression::Add(a, b) => {
                write_min(f, a, 1)?;
                write!(f, "+")?;
                write_min(f, b, 2)
            }
            Expression::Sub(a, b) => {
                write_min(f, a, 1)?;
                write!(f, "-")?;
                write_min(f, b, 2)
            }
            Expression::Mul(a, b) => {
                write_min(f, a, 2)?;
                write!(f, "*")?;
                write_min(f, b, 3)
            }
            Expression::Div(a, b) => {
                // an integer literal followed by `/int` would lex as a rational
                if matches!(**a, Expression::Number(r) if r.is_integer()) {
                    write!(f, "({a})")?;
                } else {
                    write_min(f, a, 2)?;
                }
                write!(f, "/")?;
                write_min(f, b, 3)
            }
            Expression::Pow(a, n) => {
                if matches!(**a, Expression::Ident(_))
                    || matches!(**a, Expression::Number(r) if r.is_integer())
                {
                    write!(f, "{a}^{n}")
                } else if prec(a) == 5 {
                    write!(f, "{a}^{n}")
                } else {
                    write!(f, "({a})^{n}")
                }
            }
        }
    }
}

/// Lookup for identifiers during instantiation.
fn instantiate_with(
    e: &Expression,
    lookup: &dyn Fn(&str) -> Option<BivariatePolynomial>,
) -> Result<BivariatePolynomial> {
    Ok(match e {
        Expression::Number(r) => BivariatePolynomial::constant(r.to_f64()),
        Expression::Ident(n) => lookup(n).ok_or_else(|| Error::UnboundParameter(n.clone()))?,
        Expression::Neg(a) => -&instantiate_with(a, lookup)?,
        Expression::Add(a, b) => &instantiate_with(a, lookup)? + &instantiate_with(b, lookup)?,
        Expression::Sub(a, b) => &instantiate_with(a, lookup)? - &instantiate_with(b, lookup)?,
        Expression::Mul(a, b) => &instantiate_with(a, lookup)? * &instantiate_with(b, lookup)?,
        Expression::Div(a, b) => {
            let num = instantiate_with(a, lookup)?;
            let den = instantiate_with(b, lookup)?;
            match den.as_constant() {
                Some(d) if d != 0.0 => num.scale(1.0 / d),
                Some(_) => return Err(Error::NotPolynomial("division by zero".into())),
                None => {
                    return Err(Error::NotPolynomial(format!(
                        "division by the non-constant polynomial {b}"
                    )))
                }
            }
        }
        Expression::Pow(a, n) => instantiate_with(a, lookup)?.pow(*n),
    })
}

/// Expand `e` into a polynomial in `x`, `y` at the given parameter values.
pub fn instantiate(e: &Expression, binding: &HashMap<String, f64>) -> Result<BivariatePolynomial> {
    instantiate_with(e, &|name| match name {
        "x" => Some(BivariatePolynomial::x()),
        "y" => Some(BivariatePolynomial::y()),
        _ => binding.get(name).map(|&v| BivariatePolynomial::constant(v)),
    })
}

/// Expand `e` as a univariate polynomial in `var`, returning increasing-degree
/// coefficients. `x` and `y` are not allowed.
pub fn instantiate_univariate(
    e: &Expression,
    var: &str,
    binding: &HashMap<String, f64>,
) -> Result<Vec<f64>> {
    let p = instantiate_with(e, &|name| {
        if name == var {
            Some(BivariatePolynomial::x())
        } else if name == "x" || name == "y" {
            None
        } else {
            binding.get(name).map(|&v| BivariatePolynomial::constant(v))
        }
    })?;
    Ok(p.restrict_y_zero())
}

/// Evaluate an expression that must reduce to a constant.
pub fn evaluate_constant(e: &Expression, binding: &HashMap<String, f64>) -> Result<f64> {
    instantiate(e, binding)?
        .as_constant()
        .ok_or_else(|| Error::NotPolynomial(format!("expected a constant, got {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAME: [&str; 5] = ["l1", "l2", "l3", "l4", "m1"];

    fn bind(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn parses_game_factor() {
        let e = parse_expression("x*(x-1)*(-1-(l3-1)*x+y)", &GAME).unwrap();
        assert_eq!(e.parameters(), vec!["l3".to_string()]);
    }

    #[test]
    fn trailing_operator_is_syntax_error() {
        match parse_expression("x+", &[]) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 3)),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_identifier_is_named() {
        let err = parse_expression("x + z", &["a"]).unwrap_err();
        assert_eq!(err, Error::UndeclaredIdentifier("z".into()));
        assert!(err.to_string().contains('z'));
    }

    #[test]
    fn exponent_literals() {
        let value = |t: &str| evaluate_constant(&parse_expression(t, &[]).unwrap(), &HashMap::new()).unwrap();
        assert_eq!(value("1e-3"), 1e-3);
        assert_eq!(value("2.5E2"), 250.0);
        assert_eq!(value("1.25e+1/5"), 2.5);
        assert!(parse_expression("1e30", &[]).is_err());
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse_expression("x +\n  * y", &[]) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rational_literals() {
        let e = parse_expression("8/27", &[]).unwrap();
        assert_eq!(e, Expression::Number(Rational::new(8, 27).unwrap()));
        let e = parse_expression("x/2/3", &[]).unwrap();
        let p = instantiate(&e, &HashMap::new()).unwrap();
        assert!((p.coefficient(1, 0) - 1.0 / 6.0).abs() < 1e-16);
        let e = parse_expression("3/2^2", &[]).unwrap();
        assert_eq!(evaluate_constant(&e, &HashMap::new()).unwrap(), 0.75);
        let e = parse_expression("2.5", &[]).unwrap();
        assert_eq!(e, Expression::Number(Rational::new(5, 2).unwrap()));
    }

    #[test]
    fn instantiate_examples() {
        let e = parse_expression("2*x^2*y - 3", &[]).unwrap();
        let p = instantiate(&e, &HashMap::new()).unwrap();
        assert_eq!(p.coefficient(2, 1), 2.0);
        assert_eq!(p.coefficient(0, 0), -3.0);
        assert_eq!(p.terms().count(), 2);

        let e = parse_expression("(x+y)^2", &[]).unwrap();
        let p = instantiate(&e, &HashMap::new()).unwrap();
        assert_eq!(
            p.terms().collect::<Vec<_>>(),
            vec![((0, 2), 1.0), ((1, 1), 2.0), ((2, 0), 1.0)]
        );
    }

    #[test]
    fn game_y_factor_at_origin() {
        let g = "l2-(l2+m1)*x-(l2-1)*y+(m1-1)*x^2+(l2-l4)*x*y";
        let e = parse_expression(g, &GAME).unwrap();
        let b = bind(&[("l1", 8.0 / 27.0), ("l2", 1.5), ("l3", 1.5), ("l4", 1.5), ("m1", 0.4)]);
        let p = instantiate(&e, &b).unwrap();
        assert_eq!(p.eval(0.0, 0.0), 1.5);
    }

    #[test]
    fn rejects_polynomial_denominator() {
        let e = parse_expression("1/x", &[]).unwrap();
        assert!(matches!(
            instantiate(&e, &HashMap::new()),
            Err(Error::NotPolynomial(_))
        ));
        let e = parse_expression("x/(a-1)", &["a"]).unwrap();
        assert!(instantiate(&e, &bind(&[("a", 1.0)])).is_err());
        assert!(matches!(
            instantiate(&e, &HashMap::new()),
            Err(Error::UnboundParameter(_))
        ));
    }

    #[test]
    fn exponent_must_be_integer_literal() {
        assert!(parse_expression("x^a", &["a"]).is_err());
        assert!(parse_expression("x^2^3", &[]).is_err());
    }

    #[test]
    fn print_round_trip_edge_cases() {
        for src in [
            "(1)/2",
            "-(1/2)",
            "x/(1/2)",
            "-x^2",
            "(-x)^2",
            "a-(b+c)",
            "x*-y",
            "(1/2)^3",
            "--x",
            "1/2/x",
        ] {
            let e = parse_expression(src, &["a", "b", "c"]).unwrap();
            let printed = e.to_string();
            let again = parse_expression(&printed, &["a", "b", "c"]).unwrap();
            assert_eq!(e, again, "{src} -> {printed}");
        }
    }

    #[test]
    fn univariate_sections() {
        let e = parse_expression("2*s + s^2/2", &["s"]).unwrap();
        let c = instantiate_univariate(&e, "s", &HashMap::new()).unwrap();
        assert_eq!(c, vec![0.0, 2.0, 0.5]);
    }
}
