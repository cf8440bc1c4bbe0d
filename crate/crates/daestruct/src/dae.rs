//! A small text language for square DAE systems and its signature extraction.
//!
//! ```text
//! # a comment
//! vars: x1, x2, x3
//! f1 = der(x1,2) + x3 + u1(t)
//! f2 = der(x2) + x3 + u2(t)
//! f3 = x1^2 + x2^2 + u3(t)
//! ```
//!
//! One equation per line; the equation name before `=` is optional (unnamed
//! equations are called `f<position>`). Identifiers not declared in `vars:`
//! are opaque known functions or constants (forcing terms like `u1(t)`); they
//! never enter the signature matrix. `der(v)` means `der(v, 1)`; nested
//! `der(der(v))` is rejected in favor of `der(v, 2)`.

use std::collections::BTreeMap;
use std::collections::HashMap;

use thiserror::Error;

use crate::sigma::SignatureMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("undeclared variable `{name}` in der() at {line}:{col}")]
    UndeclaredVariable {
        name: String,
        line: usize,
        col: usize,
    },

    #[error("system is not square: {equations} equations for {variables} variables")]
    NonSquare { equations: usize, variables: usize },
}

/// Expression tree. Subtraction is a sum with a negated term and division a
/// product with a power of −1, so only occurrence structure remains.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    /// Reference to a declared variable, by index.
    Var(usize),
    /// Undeclared identifier: an opaque known constant.
    Opaque(String),
    /// Undeclared identifier applied to arguments: an opaque known function.
    Call(String, Vec<Expr>),
    Der {
        var: usize,
        order: u32,
    },
    Neg(Box<Expr>),
    Pow(Box<Expr>, i64),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub name: String,
    pub expr: Expr,
}

/// A parsed square DAE system.
#[derive(Debug, Clone, PartialEq)]
pub struct DaeSystem {
    vars: Vec<String>,
    equations: Vec<Equation>,
}

impl DaeSystem {
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn equation_names(&self) -> Vec<String> {
        self.equations.iter().map(|e| e.name.clone()).collect()
    }
}

/// Parses the DAE description language.
pub fn parse_dae(text: &str) -> Result<DaeSystem, ParseError> {
    let mut vars: Vec<String> = Vec::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut equations: Vec<Equation> = Vec::new();
    let mut header_seen = false;

    for (line_idx, raw_line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let tokens = lex_line(line, line_no)?;

        if !header_seen {
            parse_header(&tokens, line_no, &mut vars, &mut var_index)?;
            header_seen = true;
            continue;
        }

        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            line: line_no,
            vars: &var_index,
        };
        let name = p.take_equation_name()?;
        let expr = p.parse_expr()?;
        p.expect_end()?;
        let name = name.unwrap_or_else(|| format!("f{}", equations.len() + 1));
        equations.push(Equation { name, expr });
    }

    if !header_seen {
        return Err(ParseError::Syntax {
            line: 1,
            col: 1,
            message: "missing `vars:` header".into(),
        });
    }
    if equations.len() != vars.len() {
        return Err(ParseError::NonSquare {
            equations: equations.len(),
            variables: vars.len(),
        });
    }
    Ok(DaeSystem { vars, equations })
}

/// Builds the signature matrix: σ_ij is the highest derivative order of
/// variable j in equation i (bare occurrence counts as order 0), absent when
/// the variable does not occur. Opaque calls and constants contribute
/// nothing, but declared variables inside call arguments do occur.
pub fn signature_of(sys: &DaeSystem) -> SignatureMatrix {
    let n = sys.n();
    let mut m = SignatureMatrix::new(n);
    for (i, eq) in sys.equations.iter().enumerate() {
        let mut orders: BTreeMap<usize, i64> = BTreeMap::new();
        collect_orders(&eq.expr, &mut orders);
        for (j, order) in orders {
            m.set(i, j, order).expect("indices bounded by construction");
        }
    }
    m
}

fn collect_orders(expr: &Expr, orders: &mut BTreeMap<usize, i64>) {
    match expr {
        Expr::Number(_) | Expr::Opaque(_) => {}
        Expr::Var(j) => bump(orders, *j, 0),
        Expr::Der { var, order } => bump(orders, *var, *order as i64),
        Expr::Call(_, args) => {
            for a in args {
                collect_orders(a, orders);
            }
        }
        Expr::Neg(inner) | Expr::Pow(inner, _) => collect_orders(inner, orders),
        Expr::Sum(terms) | Expr::Product(terms) => {
            for t in terms {
                collect_orders(t, orders);
            }
        }
    }
}

fn bump(orders: &mut BTreeMap<usize, i64>, j: usize, order: i64) {
    let entry = orders.entry(j).or_insert(order);
    if order > *entry {
        *entry = order;
    }
}

fn references_declared(expr: &Expr) -> bool {
    match expr {
        Expr::Number(_) | Expr::Opaque(_) => false,
        Expr::Var(_) | Expr::Der { .. } => true,
        Expr::Call(_, args) => args.iter().any(references_declared),
        Expr::Neg(inner) | Expr::Pow(inner, _) => references_declared(inner),
        Expr::Sum(items) | Expr::Product(items) => items.iter().any(references_declared),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Assign => "`=`".into(),
        }
    }
}

fn lex_line(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
            }
            '+' => {
                tokens.push((Tok::Plus, col));
                i += 1;
            }
            '-' => {
                tokens.push((Tok::Minus, col));
                i += 1;
            }
            '*' => {
                tokens.push((Tok::Star, col));
                i += 1;
            }
            '/' => {
                tokens.push((Tok::Slash, col));
                i += 1;
            }
            '^' => {
                tokens.push((Tok::Caret, col));
                i += 1;
            }
            '(' => {
                tokens.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                tokens.push((Tok::RParen, col));
                i += 1;
            }
            ',' => {
                tokens.push((Tok::Comma, col));
                i += 1;
            }
            ':' => {
                tokens.push((Tok::Colon, col));
                i += 1;
            }
            '=' => {
                tokens.push((Tok::Assign, col));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut k = i + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        i = k;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                tokens.push((Tok::Number(chars[start..i].iter().collect()), col));
            }
            other => {
                return Err(ParseError::Syntax {
                    line: line_no,
                    col,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(tokens)
}

fn parse_header(
    tokens: &[(Tok, usize)],
    line_no: usize,
    vars: &mut Vec<String>,
    var_index: &mut HashMap<String, usize>,
) -> Result<(), ParseError> {
    let syntax = |col: usize, message: String| ParseError::Syntax {
        line: line_no,
        col,
        message,
    };
    match tokens.first() {
        Some((Tok::Ident(kw), _)) if kw == "vars" => {}
        _ => {
            return Err(syntax(
                tokens.first().map_or(1, |t| t.1),
                "expected `vars:` header before the first equation".into(),
            ))
        }
    }
    match tokens.get(1) {
        Some((Tok::Colon, _)) => {}
        other => {
            return Err(syntax(
                other.map_or(1, |t| t.1),
                "expected `:` after `vars`".into(),
            ))
        }
    }
    let mut pos = 2;
    loop {
        match tokens.get(pos) {
            Some((Tok::Ident(name), col)) => {
                if name == "der" {
                    return Err(syntax(*col, "`der` is reserved and cannot be a variable".into()));
                }
                if var_index.contains_key(name) {
                    return Err(syntax(*col, format!("variable `{name}` declared twice")));
                }
                var_index.insert(name.clone(), vars.len());
                vars.push(name.clone());
                pos += 1;
            }
            other => {
                return Err(syntax(
                    other.map_or(1, |t| t.1),
                    "expected a variable name".into(),
                ))
            }
        }
        match tokens.get(pos) {
            Some((Tok::Comma, _)) => pos += 1,
            None => break,
            Some((tok, col)) => {
                return Err(syntax(
                    *col,
                    format!("expected `,` or end of header, found {}", tok.describe()),
                ))
            }
        }
    }
    Ok(())
}

struct Parser<'a> {
    tokens: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    vars: &'a HashMap<String, usize>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map_or(1, |(_, c)| *c)
    }

    fn advance(&mut self) -> Option<&'a (Tok, usize)> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col(),
            message: message.into(),
        }
    }

    fn take_equation_name(&mut self) -> Result<Option<String>, ParseError> {
        if let (Some((Tok::Ident(name), col)), Some((Tok::Assign, _))) =
            (self.tokens.first(), self.tokens.get(1))
        {
            if name == "vars" {
                return Err(ParseError::Syntax {
                    line: self.line,
                    col: *col,
                    message: "duplicate `vars:` header".into(),
                });
            }
            self.pos = 2;
            return Ok(Some(name.clone()));
        }
        if let (Some((Tok::Ident(name), col)), Some((Tok::Colon, _))) =
            (self.tokens.first(), self.tokens.get(1))
        {
            if name == "vars" {
                return Err(ParseError::Syntax {
                    line: self.line,
                    col: *col,
                    message: "duplicate `vars:` header".into(),
                });
            }
        }
        Ok(None)
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(tok) => Err(self.syntax(format!(
                "expected end of equation, found {}",
                tok.describe()
            ))),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.parse_term()?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.advance();
                    terms.push(self.parse_term()?);
                }
                Some(Tok::Minus) => {
                    self.advance();
                    terms.push(Expr::Neg(Box::new(self.parse_term()?)));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Sum(terms)
        })
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.parse_factor()?];
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.advance();
                    factors.push(self.parse_factor()?);
                }
                Some(Tok::Slash) => {
                    self.advance();
                    factors.push(Expr::Pow(Box::new(self.parse_factor()?), -1));
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        })
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        let negated = matches!(self.peek(), Some(Tok::Minus));
        if negated {
            self.advance();
        }
        let mut atom = self.parse_atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.advance();
            let exponent = self.parse_integer("exponent")?;
            atom = Expr::Pow(Box::new(atom), exponent);
        }
        Ok(if negated { Expr::Neg(Box::new(atom)) } else { atom })
    }

    fn parse_integer(&mut self, what: &str) -> Result<i64, ParseError> {
        let negative = matches!(self.peek(), Some(Tok::Minus));
        if negative {
            self.advance();
        }
        match self.advance() {
            Some((Tok::Number(text), col)) => {
                let value: i64 = text.parse().map_err(|_| ParseError::Syntax {
                    line: self.line,
                    col: *col,
                    message: format!("{what} must be an integer, found `{text}`"),
                })?;
                Ok(if negative { -value } else { value })
            }
            other => Err(ParseError::Syntax {
                line: self.line,
                col: other.map_or_else(|| self.col(), |(_, c)| *c),
                message: format!("expected integer {what}"),
            }),
        }
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        let Some((tok, col)) = self.advance() else {
            return Err(self.syntax("unexpected end of equation"));
        };
        let col = *col;
        match tok {
            Tok::Number(text) => text.parse::<f64>().map(Expr::Number).map_err(|_| {
                ParseError::Syntax {
                    line: self.line,
                    col,
                    message: format!("invalid number `{text}`"),
                }
            }),
            Tok::LParen => {
                let inner = self.parse_expr()?;
                match self.advance() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    _ => Err(self.syntax("expected `)`")),
                }
            }
            Tok::Ident(name) if name == "der" => self.parse_der(),
            Tok::Ident(name) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.advance();
                    let mut args = Vec::new();
                    if !matches!(self.peek(), Some(Tok::RParen)) {
                        loop {
                            args.push(self.parse_expr()?);
                            match self.peek() {
                                Some(Tok::Comma) => {
                                    self.advance();
                                }
                                _ => break,
                            }
                        }
                    }
                    match self.advance() {
                        Some((Tok::RParen, _)) => {}
                        _ => return Err(self.syntax("expected `)` after call arguments")),
                    }
                    if let Some(&idx) = self.vars.get(name) {
                        // x1(t) is the variable itself; anything but opaque
                        // arguments there is ambiguous.
                        if args.iter().any(references_declared) {
                            return Err(ParseError::Syntax {
                                line: self.line,
                                col,
                                message: format!(
                                    "`{name}(...)` is declared variable `{name}`; its arguments cannot reference variables"
                                ),
                            });
                        }
                        return Ok(Expr::Var(idx));
                    }
                    Ok(Expr::Call(name.clone(), args))
                } else if let Some(&idx) = self.vars.get(name) {
                    Ok(Expr::Var(idx))
                } else {
                    Ok(Expr::Opaque(name.clone()))
                }
            }
            other => Err(ParseError::Syntax {
                line: self.line,
                col,
                message: format!("expected an operand, found {}", other.describe()),
            }),
        }
    }

    fn parse_der(&mut self) -> Result<Expr, ParseError> {
        match self.advance() {
            Some((Tok::LParen, _)) => {}
            _ => return Err(self.syntax("expected `(` after `der`")),
        }
        let (name, col) = match self.advance() {
            Some((Tok::Ident(name), col)) => (name.clone(), *col),
            other => {
                return Err(ParseError::Syntax {
                    line: self.line,
                    col: other.map_or_else(|| self.col(), |(_, c)| *c),
                    message: "der() expects a variable name".into(),
                })
            }
        };
        if name == "der" || matches!(self.peek(), Some(Tok::LParen)) {
            return Err(ParseError::Syntax {
                line: self.line,
                col,
                message: "nested der() is not supported; write der(v, k)".into(),
            });
        }
        let order = match self.peek() {
            Some(Tok::Comma) => {
                self.advance();
                let k = self.parse_integer("derivative order")?;
                if k < 1 {
                    return Err(self.syntax("derivative order must be at least 1"));
                }
                u32::try_from(k).map_err(|_| self.syntax("derivative order too large"))?
            }
            _ => 1,
        };
        match self.advance() {
            Some((Tok::RParen, _)) => {}
            _ => return Err(self.syntax("expected `)` to close der(")),
        }
        let var = *self
            .vars
            .get(&name)
            .ok_or(ParseError::UndeclaredVariable {
                name: name.clone(),
                line: self.line,
                col,
            })?;
        Ok(Expr::Der { var, order })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::test_fixtures::{e1, e6};

    const EXAMPLE1: &str = "vars: x1, x2, x3\n\
                            f1 = der(x1,2) + x3 + u1(t)\n\
                            f2 = der(x2) + x3 + u2(t)\n\
                            f3 = x1^2 + x2^2 + u3(t)\n";

    const EXAMPLE3: &str = "\
# two coupled subsystems
vars: x1, x2, x3, x4, x5, x6
f1 = der(x1,2) + x3 + u1(t)
f2 = der(x2) + x3 + u2(t)
f3 = x1^2 + x2^2 + der(x6) + u3(t)
f4 = der(x4,2) + x6 + u4(t)
f5 = der(x5) + x6 + u5(t)
f6 = x4^2 + x5^2 + u6(t)
";

    #[test]
    fn example1_parses_to_e1() {
        let sys = parse_dae(EXAMPLE1).unwrap();
        assert_eq!(sys.vars(), &["x1", "x2", "x3"]);
        assert_eq!(sys.equation_names(), vec!["f1", "f2", "f3"]);
        assert_eq!(signature_of(&sys), e1());
    }

    #[test]
    fn example3_parses_to_e6() {
        let sys = parse_dae(EXAMPLE3).unwrap();
        assert_eq!(signature_of(&sys), e6());
    }

    #[test]
    fn single_variable_system() {
        let sys = parse_dae("vars: x\nf = x\n").unwrap();
        assert_eq!(sys.n(), 1);
        let sigma = signature_of(&sys);
        assert_eq!(sigma.get(0, 0), Some(0));
    }

    #[test]
    fn undeclared_der_variable() {
        let err = parse_dae("vars: x\nf = der(y)\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::UndeclaredVariable { ref name, .. } if name == "y"
        ));
    }

    #[test]
    fn highest_order_wins() {
        let sys = parse_dae("vars: x\nf = x + der(x,3) + x^2\n").unwrap();
        let sigma = signature_of(&sys);
        assert_eq!(sigma.get(0, 0), Some(3));
        assert_eq!(sigma.num_entries(), 1);
    }

    #[test]
    fn opaque_calls_contribute_nothing_but_their_args_do() {
        let sys = parse_dae("vars: x, y\nf1 = g(der(x,2), t) + 1\nf2 = y\n").unwrap();
        let sigma = signature_of(&sys);
        assert_eq!(sigma.get(0, 0), Some(2));
        assert_eq!(sigma.get(0, 1), None);
        assert_eq!(sigma.get(1, 1), Some(0));
    }

    #[test]
    fn unnamed_equations_get_positional_names() {
        let sys = parse_dae("vars: x, y\nx + y\nder(y) - x\n").unwrap();
        assert_eq!(sys.equation_names(), vec!["f1", "f2"]);
    }

    #[test]
    fn non_square_is_rejected() {
        let err = parse_dae("vars: x, y\nf = x + y\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::NonSquare {
                equations: 1,
                variables: 2
            }
        );
    }

    #[test]
    fn nested_der_is_rejected_with_hint() {
        let err = parse_dae("vars: x\nf = der(der(x))\n").unwrap_err();
        match err {
            ParseError::Syntax { message, .. } => assert!(message.contains("der(v, k)")),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn zero_order_der_is_rejected() {
        let err = parse_dae("vars: x\nf = der(x, 0)\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn division_and_negation_only_affect_occurrence() {
        let sys = parse_dae("vars: x, y\nf1 = -x / der(y, 2)\nf2 = x - y\n").unwrap();
        let sigma = signature_of(&sys);
        assert_eq!(sigma.get(0, 0), Some(0));
        assert_eq!(sigma.get(0, 1), Some(2));
        assert_eq!(sigma.get(1, 0), Some(0));
        assert_eq!(sigma.get(1, 1), Some(0));
    }

    #[test]
    fn signature_is_invariant_under_reassociation() {
        let a = parse_dae("vars: x, y\nf1 = (x + der(y)) + x^3\nf2 = x\n").unwrap();
        let b = parse_dae("vars: x, y\nf1 = x + (der(y) + x^3)\nf2 = x\n").unwrap();
        assert_eq!(signature_of(&a), signature_of(&b));
    }

    #[test]
    fn syntax_error_carries_location() {
        let err = parse_dae("vars: x\nf = x + + x\n").unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 9);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }
}
