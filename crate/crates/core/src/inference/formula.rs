//! Model formulas and design matrices.
//!
//! `y ~ a + b`, interactions `a:b`, crossing `a*b` (= `a + b + a:b`),
//! grouping `a*(b + c)`, raw polynomials `poly(x, k)`, expression terms
//! `I(x^2)` / `I(g == 1)`, `.` for every predictor, and `- 1` or `+ 0` to
//! drop the intercept. Factor-typed columns expand to indicator columns for
//! every level except the first one seen.

use std::fmt;

use thiserror::Error;

use crate::expr::Expr;
use crate::table::{DType, Table};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("formula syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("formula references unknown column `{0}`")]
    UnknownColumn(String),
    #[error("poly degree must be a positive integer, got {0}")]
    PolyDegree(String),
    #[error("term `{term}`: {msg}")]
    Term { term: String, msg: String },
    #[error("formula has no terms")]
    Empty,
}

/// One factor of a term.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Var(String),
    Poly(String, u32),
    /// Expression term with its source text.
    Call(Expr, String),
}

impl Atom {
    /// Predictors this atom depends on.
    pub fn predictors(&self) -> Vec<String> {
        match self {
            Atom::Var(v) | Atom::Poly(v, _) => vec![v.clone()],
            Atom::Call(e, _) => e.variables().into_iter().collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => f.write_str(v),
            Atom::Poly(v, k) => write!(f, "poly({v}, {k})"),
            Atom::Call(_, text) => f.write_str(text),
        }
    }
}

/// Product of one or more atoms; a term with two or more atoms is an
/// interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Term(pub Vec<Atom>);

impl Term {
    pub fn is_interaction(&self) -> bool {
        self.0.len() > 1
    }

    pub fn predictors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in &self.0 {
            for p in a.predictors() {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn join(&self, other: &Term) -> Term {
        let mut atoms = self.0.clone();
        for a in &other.0 {
            if !atoms.contains(a) {
                atoms.push(a.clone());
            }
        }
        Term(atoms)
    }

    fn same_atoms(&self, other: &Term) -> bool {
        self.0.len() == other.0.len() && self.0.iter().all(|a| other.0.contains(a))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    response: Option<String>,
    intercept: bool,
    /// Terms as written; `.` is kept as a marker and expanded at design time.
    terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq)]
enum TermSpec {
    Term(Term),
    Dot,
}

/// Design matrix plus the bookkeeping needed to map coefficients back to
/// terms and predictors.
#[derive(Debug, Clone)]
pub struct Design {
    /// Column-major design matrix values.
    pub columns: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    /// Term index of each column; `None` for the intercept.
    pub column_term: Vec<Option<usize>>,
    pub terms: Vec<Term>,
    pub nrows: usize,
}

impl Design {
    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn has_intercept(&self) -> bool {
        self.column_term.iter().any(Option::is_none)
    }

    /// Predictors in order of first appearance across the terms.
    pub fn predictors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.terms {
            for p in t.predictors() {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }
}

impl Formula {
    pub fn parse(text: &str) -> Result<Formula, FormulaError> {
        Parser::new(text).formula()
    }

    /// `~ .`: intercept plus every predictor.
    pub fn all_predictors() -> Formula {
        Formula {
            response: None,
            intercept: true,
            terms: vec![TermSpec::Dot],
        }
    }

    pub fn response(&self) -> Option<&str> {
        self.response.as_deref()
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    /// Terms after expanding `.` against `names`, main effects first, then
    /// by interaction order, preserving written order within each order.
    pub fn expand_terms(&self, names: &[String]) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        let mut push = |t: Term| {
            if !out.iter().any(|u| u.same_atoms(&t)) {
                out.push(t);
            }
        };
        for spec in &self.terms {
            match spec {
                TermSpec::Term(t) => push(t.clone()),
                TermSpec::Dot => {
                    for n in names {
                        if Some(n.as_str()) != self.response.as_deref() {
                            push(Term(vec![Atom::Var(n.clone())]));
                        }
                    }
                }
            }
        }
        out.sort_by_key(|t| t.0.len());
        out
    }

    /// Column names the formula needs from the predictor table.
    pub fn check_columns(&self, table: &Table) -> Result<(), FormulaError> {
        for t in self.expand_terms(table.names()) {
            for p in t.predictors() {
                if table.column_index(&p).is_none() {
                    return Err(FormulaError::UnknownColumn(p));
                }
            }
        }
        Ok(())
    }

    pub fn design(&self, table: &Table) -> Result<Design, FormulaError> {
        let terms = self.expand_terms(table.names());
        if terms.is_empty() && !self.intercept {
            return Err(FormulaError::Empty);
        }
        let n = table.nrows();
        let mut columns = Vec::new();
        let mut labels = Vec::new();
        let mut column_term = Vec::new();
        if self.intercept {
            columns.push(vec![1.0; n]);
            labels.push("(Intercept)".to_string());
            column_term.push(None);
        }
        for (ti, term) in terms.iter().enumerate() {
            let mut acc: Vec<(String, Vec<f64>)> = vec![(String::new(), vec![1.0; n])];
            for atom in &term.0 {
                let cols = atom_columns(atom, table).map_err(|e| match e {
                    FormulaError::Term { msg, .. } => FormulaError::Term {
                        term: term.to_string(),
                        msg,
                    },
                    other => other,
                })?;
                let mut next = Vec::with_capacity(acc.len() * cols.len());
                for (la, va) in &acc {
                    for (lb, vb) in &cols {
                        let label = if la.is_empty() { lb.clone() } else { format!("{la}:{lb}") };
                        next.push((label, va.iter().zip(vb).map(|(a, b)| a * b).collect()));
                    }
                }
                acc = next;
            }
            for (label, values) in acc {
                labels.push(label);
                columns.push(values);
                column_term.push(Some(ti));
            }
        }
        Ok(Design {
            columns,
            labels,
            column_term,
            terms,
            nrows: n,
        })
    }
}

fn lookup<'a>(table: &'a Table, name: &str) -> Result<(usize, &'a [f64]), FormulaError> {
    let i = table
        .column_index(name)
        .ok_or_else(|| FormulaError::UnknownColumn(name.to_string()))?;
    Ok((i, table.column(i)))
}

fn atom_columns(atom: &Atom, table: &Table) -> Result<Vec<(String, Vec<f64>)>, FormulaError> {
    match atom {
        Atom::Var(v) => {
            let (i, col) = lookup(table, v)?;
            if table.dtype(i) == DType::Factor {
                let mut levels: Vec<f64> = Vec::new();
                for x in col {
                    if !levels.contains(x) {
                        levels.push(*x);
                    }
                }
                Ok(levels
                    .iter()
                    .skip(1)
                    .map(|lvl| {
                        (
                            format!("{v}{lvl}"),
                            col.iter().map(|x| if x == lvl { 1.0 } else { 0.0 }).collect(),
                        )
                    })
                    .collect())
            } else {
                Ok(vec![(v.clone(), col.to_vec())])
            }
        }
        Atom::Poly(v, k) => {
            let (i, col) = lookup(table, v)?;
            if table.dtype(i) == DType::Factor {
                return Err(FormulaError::Term {
                    term: atom.to_string(),
                    msg: "poly() of a factor column".into(),
                });
            }
            Ok((1..=*k)
                .map(|d| {
                    (
                        format!("poly({v}, {k}){d}"),
                        col.iter().map(|x| x.powi(d as i32)).collect(),
                    )
                })
                .collect())
        }
        Atom::Call(e, text) => {
            for var in e.variables() {
                lookup(table, &var)?;
            }
            let values = e.evaluate_batch(table).map_err(|err| FormulaError::Term {
                term: text.clone(),
                msg: err.to_string(),
            })?;
            Ok(vec![(text.clone(), values)])
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Parser<'a> {
        Parser { src, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|(i, c)| !(c.is_alphanumeric() || *c == '_' || (*c == '.' && *i > 0)))
            .map_or(rest.len(), |(i, _)| i);
        if end == 0 || !rest.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') {
            return None;
        }
        self.pos += end;
        Some(&rest[..end])
    }

    fn number(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_digit() || *c == '.'))
            .map_or(rest.len(), |(i, _)| i);
        if end == 0 || !rest.starts_with(|c: char| c.is_ascii_digit()) {
            return None;
        }
        self.pos += end;
        Some(&rest[..end])
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let mut response = None;
        if let Some(i) = self.src.find('~') {
            let lhs = self.src[..i].trim();
            if !lhs.is_empty() {
                response = Some(lhs.to_string());
            }
            self.pos = i + 1;
        }
        let mut intercept = true;
        let mut terms: Vec<TermSpec> = Vec::new();
        let mut first = true;
        loop {
            let negate = if first {
                self.eat('-')
            } else if self.eat('+') {
                false
            } else if self.eat('-') {
                true
            } else {
                break;
            };
            first = false;
            let save = self.pos;
            if let Some(num) = self.number() {
                match (num, negate) {
                    ("1", false) => intercept = true,
                    ("0", false) | ("1", true) => intercept = false,
                    _ => {
                        self.pos = save;
                        return self.err(format!("unexpected constant `{num}`"));
                    }
                }
                continue;
            }
            if negate {
                return self.err("only `- 1` may be subtracted");
            }
            terms.extend(self.product()?);
        }
        self.skip_ws();
        if !self.rest().is_empty() {
            return self.err(format!("unexpected `{}`", self.rest()));
        }
        if terms.is_empty() && !intercept {
            return Err(FormulaError::Empty);
        }
        Ok(Formula {
            response,
            intercept,
            terms,
        })
    }

    // product := interaction ('*' interaction)*
    fn product(&mut self) -> Result<Vec<TermSpec>, FormulaError> {
        let mut acc = self.interaction()?;
        while self.eat('*') {
            let rhs = self.interaction()?;
            let cross = cross(&acc, &rhs, self)?;
            let mut out = acc;
            out.extend(rhs);
            out.extend(cross);
            acc = out;
        }
        Ok(acc)
    }

    // interaction := primary (':' primary)*
    fn interaction(&mut self) -> Result<Vec<TermSpec>, FormulaError> {
        let mut acc = self.primary()?;
        while self.eat(':') {
            let rhs = self.primary()?;
            acc = cross(&acc, &rhs, self)?;
        }
        Ok(acc)
    }

    fn primary(&mut self) -> Result<Vec<TermSpec>, FormulaError> {
        if self.eat('(') {
            let mut terms = self.product()?;
            while self.eat('+') {
                terms.extend(self.product()?);
            }
            if !self.eat(')') {
                return self.err("expected `)`");
            }
            return Ok(terms);
        }
        if self.eat('.') {
            return Ok(vec![TermSpec::Dot]);
        }
        let start = self.pos;
        let Some(name) = self.ident() else {
            return self.err("expected a term");
        };
        if self.peek() != Some('(') {
            return Ok(vec![TermSpec::Term(Term(vec![Atom::Var(name.to_string())]))]);
        }
        let open = self.pos;
        let close = matching_paren(self.src, open).ok_or(FormulaError::Syntax {
            pos: open,
            msg: "unbalanced parentheses".into(),
        })?;
        let inner = &self.src[open + 1..close];
        let whole = self.src[start..close + 1].trim();
        self.pos = close + 1;
        match name {
            "poly" => {
                let mut parts = inner.splitn(2, ',');
                let var = parts.next().unwrap_or("").trim();
                let deg = parts.next().map(str::trim).unwrap_or("");
                let k: u32 = deg
                    .strip_prefix("degree")
                    .map(|d| d.trim_start().trim_start_matches('=').trim())
                    .unwrap_or(deg)
                    .parse()
                    .ok()
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| FormulaError::PolyDegree(deg.to_string()))?;
                if var.is_empty() {
                    return Err(FormulaError::Syntax {
                        pos: open,
                        msg: "poly() needs a column".into(),
                    });
                }
                Ok(vec![TermSpec::Term(Term(vec![Atom::Poly(var.to_string(), k)]))])
            }
            "I" => {
                // `I(g == 1)` is itself an indicator expression; otherwise the
                // parenthesized text is an ordinary expression.
                let expr = Expr::parse(whole).or_else(|_| Expr::parse(inner)).map_err(|e| {
                    FormulaError::Term {
                        term: whole.to_string(),
                        msg: e.to_string(),
                    }
                })?;
                Ok(vec![TermSpec::Term(Term(vec![Atom::Call(expr, whole.to_string())]))])
            }
            other => {
                let expr = Expr::parse(whole).map_err(|_| FormulaError::Syntax {
                    pos: start,
                    msg: format!("unknown formula function `{other}`"),
                })?;
                Ok(vec![TermSpec::Term(Term(vec![Atom::Call(expr, whole.to_string())]))])
            }
        }
    }
}

fn matching_paren(src: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in src[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

fn cross(a: &[TermSpec], b: &[TermSpec], p: &Parser) -> Result<Vec<TermSpec>, FormulaError> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            match (x, y) {
                (TermSpec::Term(s), TermSpec::Term(t)) => out.push(TermSpec::Term(s.join(t))),
                _ => return p.err("`.` cannot appear in an interaction"),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(ts: &[Term]) -> Vec<String> {
        ts.iter().map(Term::to_string).collect()
    }

    fn table() -> Table {
        Table::with_dtypes(
            vec![
                ("x1".into(), vec![1.0, 2.0, 3.0, 4.0]),
                ("x2".into(), vec![0.5, -1.0, 2.0, 0.0]),
                ("g".into(), vec![2.0, 1.0, 3.0, 2.0]),
            ],
            vec![DType::Numeric, DType::Numeric, DType::Factor],
        )
        .unwrap()
    }

    #[test]
    fn star_expansion_orders_terms() {
        let f = Formula::parse("y ~ a*b + c").unwrap();
        assert_eq!(f.response(), Some("y"));
        assert_eq!(names(&f.expand_terms(&[])), vec!["a", "b", "c", "a:b"]);
        let f = Formula::parse("y ~ P*(A + B)").unwrap();
        assert_eq!(names(&f.expand_terms(&[])), vec!["P", "A", "B", "P:A", "P:B"]);
        let f = Formula::parse("~ a*b*c").unwrap();
        assert_eq!(
            names(&f.expand_terms(&[])),
            vec!["a", "b", "c", "a:b", "a:c", "b:c", "a:b:c"]
        );
    }

    #[test]
    fn duplicate_terms_collapse() {
        let f = Formula::parse("y ~ a + a + a:b + b:a").unwrap();
        assert_eq!(names(&f.expand_terms(&[])), vec!["a", "a:b"]);
    }

    #[test]
    fn dot_and_intercept() {
        let cols: Vec<String> = ["x1", "x2"].iter().map(|s| s.to_string()).collect();
        let f = Formula::parse("y ~ .").unwrap();
        assert_eq!(names(&f.expand_terms(&cols)), vec!["x1", "x2"]);
        assert!(f.has_intercept());
        assert!(!Formula::parse("y ~ x1 - 1").unwrap().has_intercept());
        assert!(!Formula::parse("y ~ 0 + x1").unwrap().has_intercept());
    }

    #[test]
    fn factor_expansion_first_seen_baseline() {
        let d = Formula::parse("y ~ g").unwrap().design(&table()).unwrap();
        assert_eq!(d.labels, vec!["(Intercept)", "g1", "g3"]);
        assert_eq!(d.columns[1], vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.columns[2], vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn poly_and_indicator_terms() {
        let d = Formula::parse("y ~ poly(x1, 3) + I(g == 2) + I(x2^2)")
            .unwrap()
            .design(&table())
            .unwrap();
        assert_eq!(
            d.labels,
            vec!["(Intercept)", "poly(x1, 3)1", "poly(x1, 3)2", "poly(x1, 3)3", "I(g == 2)", "I(x2^2)"]
        );
        assert_eq!(d.columns[3], vec![1.0, 8.0, 27.0, 64.0]);
        assert_eq!(d.columns[4], vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.columns[5], vec![0.25, 1.0, 4.0, 0.0]);
        assert_eq!(d.predictors(), vec!["x1", "g", "x2"]);
    }

    #[test]
    fn interaction_columns_are_products() {
        let d = Formula::parse("y ~ x1*g").unwrap().design(&table()).unwrap();
        assert_eq!(
            d.labels,
            vec!["(Intercept)", "x1", "g1", "g3", "x1:g1", "x1:g3"]
        );
        assert_eq!(d.columns[4], vec![0.0, 2.0, 0.0, 0.0]);
        assert_eq!(d.column_term[4], Some(2));
        assert!(d.terms[2].is_interaction());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            Formula::parse("y ~ x9").unwrap().design(&table()),
            Err(FormulaError::UnknownColumn(_))
        ));
        assert!(matches!(Formula::parse("y ~ poly(x1, 0)"), Err(FormulaError::PolyDegree(_))));
        assert!(matches!(Formula::parse("y ~ (x1 + x2"), Err(FormulaError::Syntax { .. })));
        assert!(matches!(Formula::parse("y ~ x1 +"), Err(FormulaError::Syntax { .. })));
        assert!(matches!(Formula::parse("y ~ 0"), Err(FormulaError::Empty)));
        assert!(matches!(Formula::parse("y ~ x1 - x2"), Err(FormulaError::Syntax { .. })));
    }
}
