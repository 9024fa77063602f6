//! Mean-function expressions over named predictor columns.
//!
//! The grammar is small: numeric literals, identifiers,
//! `+ - * / ^`, unary minus, `log`/`exp`/`sqrt`/`abs` calls and indicator
//! terms `I(var == c)` / `I(var != c)`. Precedence from tightest to loosest
//! is power, unary minus, multiplicative, additive. Power is right
//! associative, so `-x^2` parses as `-(x^2)` and `2^3^2` as `2^(3^2)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at position {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<ExprError>,
    },
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
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "log" => Some(Func::Log),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Indicator { var: String, op: CmpOp, value: f64 },
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        parse(text)
    }

    /// Distinct variable names referenced anywhere in the tree.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(name) | Expr::Indicator { var: name, .. } => {
                out.insert(name.clone());
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Top-level additive terms, with subtraction folded into the term sign.
    pub fn additive_terms(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match e {
                Expr::Bin(BinOp::Add | BinOp::Sub, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Number of coefficients in the expression read as a linear predictor:
    /// one per additive term that involves a variable, plus one for the
    /// intercept when any constant term is present. Never less than one.
    pub fn coefficient_count(&self) -> usize {
        let terms = self.additive_terms();
        let with_vars = terms
            .iter()
            .filter(|t| !t.variables().is_empty())
            .count();
        let has_const = terms.iter().any(|t| t.variables().is_empty());
        (with_vars + usize::from(has_const)).max(1)
    }

    /// Evaluate against a name lookup.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<f64, ExprError>
    where
        F: Fn(&str) -> Option<f64>,
    {
        let v = match self {
            Expr::Num(x) => *x,
            Expr::Var(name) => lookup(name).ok_or_else(|| ExprError::Unbound(name.clone()))?,
            Expr::Neg(e) => -e.eval_with(lookup)?,
            Expr::Indicator { var, op, value } => {
                let x = lookup(var).ok_or_else(|| ExprError::Unbound(var.clone()))?;
                let hit = match op {
                    CmpOp::Eq => x == *value,
                    CmpOp::Ne => x != *value,
                };
                if hit {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Call(f, e) => {
                let x = e.eval_with(lookup)?;
                match f {
                    Func::Log if x <= 0.0 => {
                        return Err(ExprError::Domain(format!("log of nonpositive value {x}")))
                    }
                    Func::Log => x.ln(),
                    Func::Sqrt if x < 0.0 => {
                        return Err(ExprError::Domain(format!("sqrt of negative value {x}")))
                    }
                    Func::Sqrt => x.sqrt(),
                    Func::Exp => x.exp(),
                    Func::Abs => x.abs(),
                }
            }
            Expr::Bin(op, a, b) => {
                let x = a.eval_with(lookup)?;
                let y = b.eval_with(lookup)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(ExprError::Domain(format!("division of {x} by zero")));
                        }
                        x / y
                    }
                    BinOp::Pow => x.powf(y),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(format!("non-finite result in `{self}`")))
        }
    }

    pub fn evaluate(&self, row: &HashMap<String, f64>) -> Result<f64, ExprError> {
        self.eval_with(&|name: &str| row.get(name).copied())
    }

    /// Evaluate once per row of `table`, preserving row order.
    pub fn evaluate_batch(&self, table: &Table) -> Result<Vec<f64>, ExprError> {
        let mut index = HashMap::new();
        for var in self.variables() {
            let col = table
                .column_index(&var)
                .ok_or_else(|| ExprError::Unbound(var.clone()))?;
            index.insert(var, col);
        }
        (0..table.nrows())
            .map(|row| {
                self.eval_with(&|name: &str| index.get(name).map(|&c| table.column(c)[row]))
                    .map_err(|e| ExprError::Row {
                        row,
                        source: Box::new(e),
                    })
            })
            .collect()
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x < 0.0 || (x == 0.0 && x.is_sign_negative()) {
        write!(f, "(-{})", -x)
    } else {
        write!(f, "{x}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write_num(f, *x),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(e) => {
                if precedence(e) < 4 {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Indicator { var, op, value } => {
                let sym = match op {
                    CmpOp::Eq => "==",
                    CmpOp::Ne => "!=",
                };
                write!(f, "I({var} {sym} {value})")
            }
            Expr::Bin(op, a, b) => {
                let p = precedence(self);
                // Left operand needs parens if looser; right operand if looser
                // or equal (left associativity). Power flips both sides.
                let (left_paren, right_paren) = if *op == BinOp::Pow {
                    (precedence(a) <= p, precedence(b) < p)
                } else {
                    (precedence(a) < p, precedence(b) <= p)
                };
                if left_paren {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if right_paren {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    EqEq,
    NotEq,
    LParen,
    RParen,
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
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
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                msg: format!("malformed number `{lit}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '=' if bytes.get(i + 1) == Some(&b'=') => {
                    i += 1;
                    Tok::EqEq
                }
                '!' if bytes.get(i + 1) == Some(&b'=') => {
                    i += 1;
                    Tok::NotEq
                }
                _ => {
                    return Err(ExprError::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            i += 1;
            out.push((tok, start));
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn additive(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            // Right associative; the exponent may carry its own unary minus.
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn signed_number(&mut self) -> Result<f64, ExprError> {
        let neg = if *self.peek() == Tok::Op('-') {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Num(v) => Ok(if neg { -v } else { v }),
            _ => {
                self.at -= 1;
                self.err("expected numeric literal in indicator")
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.additive()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::Var(name));
                }
                self.bump();
                if name == "I" {
                    let var = match self.bump() {
                        Tok::Ident(v) => v,
                        _ => {
                            self.at -= 1;
                            return self.err("expected variable name in indicator");
                        }
                    };
                    let op = match self.bump() {
                        Tok::EqEq => CmpOp::Eq,
                        Tok::NotEq => CmpOp::Ne,
                        _ => {
                            self.at -= 1;
                            return self.err("expected `==` or `!=` in indicator");
                        }
                    };
                    let value = self.signed_number()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Indicator { var, op, value });
                }
                let func = Func::from_name(&name)
                    .ok_or(ExprError::UnknownFunction { name, pos })?;
                let arg = self.additive()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::End => Err(ExprError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
            other => Err(ExprError::Syntax {
                pos,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, ExprError> {
    if text.trim().is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
    };
    let e = p.additive()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bind(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parses_paper_mean() {
        let e = parse("2*(x1 + x2)").unwrap();
        let want = Expr::Bin(
            BinOp::Mul,
            Box::new(Expr::Num(2.0)),
            Box::new(Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Var("x1".into())),
                Box::new(Expr::Var("x2".into())),
            )),
        );
        assert_eq!(e, want);
        assert_eq!(e.evaluate(&bind(&[("x1", 1.0), ("x2", 2.0)])).unwrap(), 6.0);
    }

    #[test]
    fn unary_minus() {
        let e = parse("-x1").unwrap();
        assert_eq!(e.evaluate(&bind(&[("x1", 3.0)])).unwrap(), -3.0);
        // power binds tighter than negation
        let e = parse("-x^2").unwrap();
        assert_eq!(e.evaluate(&bind(&[("x", 3.0)])).unwrap(), -9.0);
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.evaluate(&bind(&[])).unwrap(), 512.0);
        let e = parse("2^-1").unwrap();
        assert_eq!(e.evaluate(&bind(&[])).unwrap(), 0.5);
    }

    #[test]
    fn trailing_operator_is_syntax_error() {
        match parse("0.3*x1 + 0.3*x2 ++") {
            Err(ExprError::Syntax { pos, .. }) => assert!(pos >= 17),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(parse(""), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("(x1"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("x1 x2"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn unknown_function() {
        assert!(matches!(
            parse("sin(x)"),
            Err(ExprError::UnknownFunction { .. })
        ));
    }

    #[test]
    fn indicator_terms() {
        let e = parse("0.1*I(g==1)").unwrap();
        assert_eq!(e.evaluate(&bind(&[("g", 1.0)])).unwrap(), 0.1);
        assert_eq!(e.evaluate(&bind(&[("g", 0.0)])).unwrap(), 0.0);
        let e = parse("I(g != -2)").unwrap();
        assert_eq!(e.evaluate(&bind(&[("g", -2.0)])).unwrap(), 0.0);
        assert_eq!(e.evaluate(&bind(&[("g", 3.0)])).unwrap(), 1.0);
        let e = parse("0.02*RIDAGEYR + 0.1*I(RIAGENDR==1) - 0.1*URXMHP").unwrap();
        assert_eq!(e.variables().len(), 3);
    }

    #[test]
    fn zero_inputs() {
        let e = parse("0.55*a + 0.31*b + 0.2*b*c").unwrap();
        let v = e
            .evaluate(&bind(&[("a", 0.0), ("b", 0.0), ("c", 7.0)]))
            .unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(e.coefficient_count(), 3);
    }

    #[test]
    fn coefficient_counts() {
        assert_eq!(parse("0").unwrap().coefficient_count(), 1);
        assert_eq!(parse("0.3*x1 + 0.3*x2").unwrap().coefficient_count(), 2);
        assert_eq!(parse("1 + x1 - x2").unwrap().coefficient_count(), 3);
    }

    #[test]
    fn unbound_and_domain_errors() {
        let e = parse("x1 + y").unwrap();
        assert_eq!(
            e.evaluate(&bind(&[("x1", 1.0)])),
            Err(ExprError::Unbound("y".into()))
        );
        let e = parse("log(x)").unwrap();
        assert!(matches!(
            e.evaluate(&bind(&[("x", 0.0)])),
            Err(ExprError::Domain(_))
        ));
        let e = parse("sqrt(x)").unwrap();
        assert!(matches!(
            e.evaluate(&bind(&[("x", -1.0)])),
            Err(ExprError::Domain(_))
        ));
        let e = parse("1/x").unwrap();
        assert!(matches!(
            e.evaluate(&bind(&[("x", 0.0)])),
            Err(ExprError::Domain(_))
        ));
        let e = parse("(-8)^0.5").unwrap();
        assert!(matches!(e.evaluate(&bind(&[])), Err(ExprError::Domain(_))));
    }

    #[test]
    fn batch_evaluation() {
        let t = Table::from_columns(vec![("x1".into(), vec![1.0, 3.0]), ("x2".into(), vec![2.0, 4.0])])
            .unwrap();
        assert_eq!(parse("x1*x2").unwrap().evaluate_batch(&t).unwrap(), vec![2.0, 12.0]);
        let t = Table::from_columns(vec![("x1".into(), vec![-1.0, 0.0, 2.0, 5.0])]).unwrap();
        assert_eq!(parse("1.5").unwrap().evaluate_batch(&t).unwrap(), vec![1.5; 4]);
        let t3 = Table::from_columns(vec![("x1".into(), vec![-1.0, 0.0, 2.0])]).unwrap();
        assert_eq!(parse("x1").unwrap().evaluate_batch(&t3).unwrap(), vec![-1.0, 0.0, 2.0]);
        match parse("log(x1)").unwrap().evaluate_batch(&t3) {
            Err(ExprError::Row { row, .. }) => assert_eq!(row, 0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("z").unwrap().evaluate_batch(&t3),
            Err(ExprError::Unbound(_))
        ));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|k| Expr::Num(f64::from(k) / 8.0)),
            prop::sample::select(vec!["a", "b", "c_1"]).prop_map(|s| Expr::Var(s.to_string())),
            (prop::sample::select(vec!["a", "b"]), -3i32..3, any::<bool>()).prop_map(
                |(v, k, eq)| Expr::Indicator {
                    var: v.to_string(),
                    op: if eq { CmpOp::Eq } else { CmpOp::Ne },
                    value: f64::from(k),
                }
            ),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                inner
                    .clone()
                    .prop_map(|e| Expr::Call(Func::Abs, Box::new(e))),
                inner
                    .clone()
                    .prop_map(|e| Expr::Call(Func::Exp, Box::new(e))),
                (
                    prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]),
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr(), a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let text = e.to_string();
            let back = parse(&text).unwrap();
            prop_assert_eq!(&back, &e, "printed as {}", text);
            let row = bind(&[("a", a.round()), ("b", b), ("c_1", c)]);
            let x = e.evaluate(&row);
            let y = back.evaluate(&row);
            match (x, y) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
            }
        }

        #[test]
        fn polynomial_is_continuous(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let e = parse("0.3*x + 2*x*y - x^2 / 4 + abs(y)").unwrap();
            let h = 1e-7;
            let f0 = e.evaluate(&bind(&[("x", x), ("y", y)])).unwrap();
            let f1 = e.evaluate(&bind(&[("x", x + h), ("y", y)])).unwrap();
            let f2 = e.evaluate(&bind(&[("x", x), ("y", y + h)])).unwrap();
            prop_assert!((f1 - f0).abs() < 1e-4);
            prop_assert!((f2 - f0).abs() < 1e-4);
        }

        #[test]
        fn batch_matches_rowwise(vals in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 1..30)) {
            let e = parse("x1 * 0.5 - exp(x2 / 3) + I(x1 == 0)").unwrap();
            let t = Table::from_columns(vec![
                ("x1".into(), vals.iter().map(|v| v.0).collect()),
                ("x2".into(), vals.iter().map(|v| v.1).collect()),
            ]).unwrap();
            let batch = e.evaluate_batch(&t).unwrap();
            for (i, (x1, x2)) in vals.iter().enumerate() {
                prop_assert_eq!(batch[i], e.evaluate(&bind(&[("x1", *x1), ("x2", *x2)])).unwrap());
            }
        }
    }
}
