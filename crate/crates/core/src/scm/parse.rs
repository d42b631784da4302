//! Declarative text format for structural causal models.
//!
//! ```text
//! # comments start with '#'
//! name: c-te-se
//!
//! exo Uw ~ normal(0, 1)            # table(v: p, ...), bernoulli(p),
//!                                  # normal(m, s), uniform(a, b), exponential(r)
//! var Z : z ~ bernoulli(0.5)       # stochastic binary mechanism
//! var X : x ~ bernoulli(0.5 + 0.1*Z)
//! var W : w = X + Z + Uw           # deterministic mechanism
//! var Y : y = X + Z + X*Z
//!
//! terms W : (X) (Z)                # additive term structure (for the
//! terms Y : (X) (Z) (X Z)          # structural analyzer); `W!` marks a
//!                                  # non-linear occurrence, e.g. (X W!)
//! terms Y link=log : ...           # scale on which the terms describe p_y
//! ```
//!
//! Expressions support `+ - * / ^k`, `exp`, `log`, `logit`, `expit`,
//! `min`, `max`, `abs`, and `ind(a < b)` indicators.

use std::collections::BTreeMap;

use num::rational::BigRational;

use crate::error::{Error, Result};
use crate::numeric::rational_from_str;
use crate::scm::expr::{CmpOp, Expr};
use crate::scm::spec::{EndoVar, ExoDist, ExoVar, Mechanism, Role, ScmSpec};
use crate::shape::{Link, MechanismShape, ShapeTerm, ShapeVar};

/// Parses the SCM text format, returning the executable spec.
pub fn parse_scm(text: &str) -> Result<ScmSpec> {
    Ok(parse_scm_with_shape(text)?.0)
}

/// Parses the SCM text format, returning the spec and the mechanism shape.
///
/// Variables without a `terms` annotation get a single fully-coupled,
/// fully-non-linear term over their declared arguments: the conservative
/// reading that never hides an interaction.
pub fn parse_scm_with_shape(text: &str) -> Result<(ScmSpec, MechanismShape)> {
    let mut name = String::from("scm");
    let mut exo: Vec<ExoVar> = Vec::new();
    let mut endo: Vec<EndoVar> = Vec::new();
    let mut raw_mechs: Vec<String> = Vec::new();
    let mut term_lines: Vec<(usize, String, String)> = Vec::new(); // (line, var, rest)

    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim().to_string();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        if let Some(rest) = line.strip_prefix("name:") {
            name = rest.trim().to_string();
        } else if let Some(rest) = line.strip_prefix("exo ") {
            let (ename, dist) = parse_exo(rest, lineno)?;
            exo.push(ExoVar { name: ename, dist });
        } else if let Some(rest) = line.strip_prefix("var ") {
            let (v, raw_mech) = parse_var(rest, lineno, &exo, &endo)?;
            endo.push(v);
            raw_mechs.push(raw_mech);
        } else if let Some(rest) = line.strip_prefix("terms ") {
            let (var, spec) = rest.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "expected `terms <var> [link=..] : (..) (..)`".into(),
            })?;
            term_lines.push((lineno, var.trim().to_string(), spec.trim().to_string()));
        } else {
            return Err(Error::Parse { line: lineno, msg: format!("unrecognized line `{line}`") });
        }
    }

    let spec = ScmSpec::new(name, exo, endo)?;
    let shape = build_shape(&spec, &term_lines)?;
    Ok((spec, shape))
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_exo(rest: &str, line: usize) -> Result<(String, ExoDist)> {
    let (name, dist_str) = rest.split_once('~').ok_or_else(|| Error::Parse {
        line,
        msg: "expected `exo <name> ~ <distribution>`".into(),
    })?;
    let name = name.trim().to_string();
    let d = dist_str.trim();
    let (head, args) = split_call(d, line)?;
    let dist = match head {
        "table" => {
            let mut rows = Vec::new();
            for part in split_top_level(args, ',') {
                let (v, p) = part.split_once(':').ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("table entry `{part}` should be `value: prob`"),
                })?;
                let v = parse_rational(v, line)?;
                let p = parse_rational(p, line)?;
                rows.push((v, p));
            }
            ExoDist::Table(rows)
        }
        "bernoulli" => ExoDist::Bernoulli(parse_rational(args, line)?),
        "normal" => {
            let (m, s) = two_f64(args, line)?;
            ExoDist::Normal { mean: m, sd: s }
        }
        "uniform" => {
            let (a, b) = two_f64(args, line)?;
            ExoDist::Uniform { lo: a, hi: b }
        }
        "exponential" => {
            let r: f64 = args.trim().parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad exponential rate `{args}`"),
            })?;
            ExoDist::Exponential { rate: r }
        }
        other => {
            return Err(Error::Parse { line, msg: format!("unknown distribution `{other}`") })
        }
    };
    Ok((name, dist))
}

fn parse_var(
    rest: &str,
    line: usize,
    exo: &[ExoVar],
    endo: &[EndoVar],
) -> Result<(EndoVar, String)> {
    // var NAME : ROLE (= expr | ~ bernoulli(expr))
    let (name, tail) = rest.split_once(':').ok_or_else(|| Error::Parse {
        line,
        msg: "expected `var <name> : <role> = <expr>`".into(),
    })?;
    let name = name.trim().to_string();
    let tail = tail.trim();
    // The mechanism operator is whichever of `=` / `~` comes first; later
    // occurrences (e.g. `==` inside an indicator) belong to the expression.
    let (role_str, op, mech_str) = match (tail.find('='), tail.find('~')) {
        (Some(e), t) if t.map_or(true, |t| e < t) => (&tail[..e], '=', &tail[e + 1..]),
        (_, Some(t)) => (&tail[..t], '~', &tail[t + 1..]),
        _ => {
            return Err(Error::Parse {
                line,
                msg: "variable needs `= <expr>` or `~ bernoulli(<expr>)`".into(),
            })
        }
    };
    let role = match role_str.trim().to_ascii_lowercase().as_str() {
        "z" => Role::Z,
        "x" => Role::X,
        "w" => Role::W,
        "y" => Role::Y,
        other => return Err(Error::Parse { line, msg: format!("unknown role `{other}`") }),
    };
    let mech_str = mech_str.trim();
    let mech = if op == '~' {
        let (head, args) = split_call(mech_str, line)?;
        if head != "bernoulli" {
            return Err(Error::Parse {
                line,
                msg: format!("stochastic mechanisms must be bernoulli(..), got `{head}`"),
            });
        }
        Mechanism::Bernoulli(parse_expr(args, line, exo, endo)?)
    } else {
        Mechanism::Deterministic(parse_expr(mech_str, line, exo, endo)?)
    };
    Ok((EndoVar { name, role, mech }, mech_str.to_string()))
}

fn parse_rational(s: &str, line: usize) -> Result<BigRational> {
    rational_from_str(s)
        .ok_or_else(|| Error::Parse { line, msg: format!("bad rational literal `{}`", s.trim()) })
}

fn two_f64(args: &str, line: usize) -> Result<(f64, f64)> {
    let parts: Vec<&str> = split_top_level(args, ',');
    if parts.len() != 2 {
        return Err(Error::Parse { line, msg: format!("expected two arguments in `{args}`") });
    }
    let a = parts[0].trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad number `{}`", parts[0]),
    })?;
    let b = parts[1].trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad number `{}`", parts[1]),
    })?;
    Ok((a, b))
}

/// `head(args)` -> ("head", "args"), requiring the closing paren at the end.
fn split_call(s: &str, line: usize) -> Result<(&str, &str)> {
    let open = s.find('(').ok_or_else(|| Error::Parse {
        line,
        msg: format!("expected a call like `f(...)` in `{s}`"),
    })?;
    if !s.ends_with(')') {
        return Err(Error::Parse { line, msg: format!("missing closing paren in `{s}`") });
    }
    Ok((s[..open].trim(), &s[open + 1..s.len() - 1]))
}

/// Splits on `sep` at paren depth zero.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts.into_iter().filter(|p| !p.trim().is_empty()).collect()
}

// ---------- expression parser ----------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Cmp(CmpOp),
}

fn lex(s: &str, line: usize) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let bytes: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                toks.push(Tok::Comma);
                i += 1;
            }
            '<' | '>' | '=' | '!' => {
                let two = if i + 1 < bytes.len() && bytes[i + 1] == '=' { 2 } else { 1 };
                let op = match (c, two) {
                    ('<', 1) => CmpOp::Lt,
                    ('<', 2) => CmpOp::Le,
                    ('>', 1) => CmpOp::Gt,
                    ('>', 2) => CmpOp::Ge,
                    ('=', 2) => CmpOp::Eq,
                    ('!', 2) => CmpOp::Ne,
                    _ => {
                        return Err(Error::Parse { line, msg: format!("bad operator `{c}`") })
                    }
                };
                toks.push(Tok::Cmp(op));
                i += two;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let q = rational_from_str(&text).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("bad number `{text}`"),
                })?;
                toks.push(Tok::Num(q));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            other => return Err(Error::Parse { line, msg: format!("unexpected character `{other}`") }),
        }
    }
    Ok(toks)
}

struct ExprParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
    exo: &'a [ExoVar],
    endo: &'a [EndoVar],
}

pub(crate) fn parse_expr(s: &str, line: usize, exo: &[ExoVar], endo: &[EndoVar]) -> Result<Expr> {
    let mut p = ExprParser { toks: lex(s, line)?, pos: 0, line, exo, endo };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse { line, msg: format!("trailing tokens in expression `{s}`") });
    }
    Ok(e)
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Parse {
                line: self.line,
                msg: format!("expected {t:?}, found {got:?}"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    e = Expr::Add(Box::new(e), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    e = Expr::Sub(Box::new(e), Box::new(self.term()?));
                }
                _ => return Ok(e),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    e = Expr::Mul(Box::new(e), Box::new(self.power()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    e = Expr::Div(Box::new(e), Box::new(self.power()?));
                }
                _ => return Ok(e),
            }
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let neg = if let Some(Tok::Minus) = self.peek() {
                self.bump();
                true
            } else {
                false
            };
            match self.bump() {
                Some(Tok::Num(q)) if q.is_integer() => {
                    let k: i32 = q.to_integer().try_into().map_err(|_| Error::Parse {
                        line: self.line,
                        msg: "exponent too large".into(),
                    })?;
                    Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }))
                }
                other => Err(Error::Parse {
                    line: self.line,
                    msg: format!("exponent must be an integer literal, found {other:?}"),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Tok::Num(q)) => Ok(Expr::Const(q)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(id)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.bump();
                    let e = self.call(&id)?;
                    self.expect(Tok::RParen)?;
                    return Ok(e);
                }
                if let Some(i) = self.endo.iter().position(|v| v.name == id) {
                    Ok(Expr::Endo(i))
                } else if let Some(i) = self.exo.iter().position(|v| v.name == id) {
                    Ok(Expr::Exo(i))
                } else {
                    Err(Error::Parse {
                        line: self.line,
                        msg: format!("unknown variable `{id}` (must be declared earlier)"),
                    })
                }
            }
            other => Err(Error::Parse {
                line: self.line,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn call(&mut self, head: &str) -> Result<Expr> {
        match head {
            "exp" => Ok(Expr::Exp(Box::new(self.expr()?))),
            "log" => Ok(Expr::Ln(Box::new(self.expr()?))),
            "logit" => Ok(Expr::Logit(Box::new(self.expr()?))),
            "expit" => Ok(Expr::Expit(Box::new(self.expr()?))),
            "abs" => Ok(Expr::Abs(Box::new(self.expr()?))),
            "min" | "max" => {
                let a = self.expr()?;
                self.expect(Tok::Comma)?;
                let b = self.expr()?;
                Ok(if head == "min" {
                    Expr::Min(Box::new(a), Box::new(b))
                } else {
                    Expr::Max(Box::new(a), Box::new(b))
                })
            }
            "ind" => {
                let a = self.expr()?;
                let op = match self.bump() {
                    Some(Tok::Cmp(op)) => op,
                    other => {
                        return Err(Error::Parse {
                            line: self.line,
                            msg: format!("ind(..) needs a comparison, found {other:?}"),
                        })
                    }
                };
                let b = self.expr()?;
                Ok(Expr::Ind(Box::new(a), op, Box::new(b)))
            }
            other => Err(Error::Parse {
                line: self.line,
                msg: format!("unknown function `{other}`"),
            }),
        }
    }
}

// ---------- shape construction ----------

fn build_shape(spec: &ScmSpec, term_lines: &[(usize, String, String)]) -> Result<MechanismShape> {
    let mut declared: BTreeMap<String, (Vec<ShapeTerm>, Link)> = BTreeMap::new();
    for (line, var, rest) in term_lines {
        let mut head = var.split_whitespace();
        let var = head.next().unwrap_or_default();
        let mut link = Link::Identity;
        for tok in head {
            match tok.strip_prefix("link=") {
                Some("identity") => link = Link::Identity,
                Some("log") => link = Link::Log,
                Some("logit") => link = Link::Logit,
                _ => {
                    return Err(Error::Parse {
                        line: *line,
                        msg: format!("unexpected token `{tok}` in terms header"),
                    })
                }
            }
        }
        let idx = spec.index_of(var).ok_or_else(|| Error::Parse {
            line: *line,
            msg: format!("terms for unknown variable `{var}`"),
        })?;
        let body = rest.as_str();
        let mut terms = Vec::new();
        for group in extract_groups(body, *line)? {
            let mut args = Vec::new();
            let mut nonlinear = Vec::new();
            for tok in group.split_whitespace() {
                let (name, nl) = match tok.strip_suffix('!') {
                    Some(base) => (base, true),
                    None => (tok, false),
                };
                if spec.index_of(name).is_none() {
                    return Err(Error::Parse {
                        line: *line,
                        msg: format!("term references unknown variable `{name}`"),
                    });
                }
                args.push(name.to_string());
                if nl {
                    nonlinear.push(name.to_string());
                }
            }
            terms.push(ShapeTerm::new(args, nonlinear));
        }
        declared.insert(spec.var(idx).name.clone(), (terms, link));
    }

    let mut shape_vars = Vec::new();
    for (i, v) in spec.endogenous.iter().enumerate() {
        let mut endo_refs = Vec::new();
        v.mech.expr().endo_refs(&mut endo_refs);
        endo_refs.sort_unstable();
        endo_refs.dedup();
        let args: Vec<String> = endo_refs.iter().map(|&j| spec.var(j).name.clone()).collect();
        let (terms, link) = match declared.remove(&v.name) {
            Some(t) => t,
            // Conservative default: one fully-coupled non-linear term.
            None => (vec![ShapeTerm::new(args.clone(), args.clone())], Link::Identity),
        };
        shape_vars.push(ShapeVar {
            name: v.name.clone(),
            role: v.role,
            args: args.into_iter().collect(),
            terms,
            link,
        });
        let _ = i;
    }
    MechanismShape::new(spec.name.clone(), shape_vars)
}

/// Extracts `(...)` groups from a terms body.
fn extract_groups(body: &str, line: usize) -> Result<Vec<String>> {
    let mut groups = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for c in body.chars() {
        match c {
            '(' => {
                if depth > 0 {
                    return Err(Error::Parse { line, msg: "nested parens in terms".into() });
                }
                depth = 1;
                cur.clear();
            }
            ')' => {
                if depth == 0 {
                    return Err(Error::Parse { line, msg: "unbalanced parens in terms".into() });
                }
                depth = 0;
                groups.push(cur.clone());
            }
            c if depth == 1 => cur.push(c),
            c if c.is_whitespace() => {}
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unexpected `{other}` outside a terms group"),
                })
            }
        }
    }
    if depth != 0 {
        return Err(Error::Parse { line, msg: "unbalanced parens in terms".into() });
    }
    Ok(groups)
}
