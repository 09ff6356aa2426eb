//! Top-level model forms: reading from s-expressions and canonical printing.

use std::fmt;

use super::expr::Expr;
use super::sexpr::{read_all, SExpr, Span};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WidthRef {
    Lit(u64),
    Param(String),
    /// Bits needed to hold the value.
    Bits(Box<WidthRef>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SortRef {
    Bool,
    Nat(WidthRef),
    Named(String),
    Tuple(Vec<(String, SortRef)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: String,
    pub params: Vec<(String, SortRef)>,
    pub returns: Option<SortRef>,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeclKind {
    Param { name: String, default: u64 },
    Enum { name: String, symbols: Vec<String> },
    Record { name: String, fields: Vec<(String, SortRef)> },
    Defun(FunDecl),
    /// A state predicate; `key` names the fields kept when certifying it.
    Invariant { fun: FunDecl, key: Vec<String> },
    Measures {
        name: String,
        params: Vec<(String, SortRef)>,
        measures: Vec<(String, Vec<Expr>)>,
    },
    System(Vec<(String, String)>),
    Map { name: String, options: Vec<(String, String)> },
}

#[derive(Clone, Debug)]
pub struct Decl {
    pub kind: DeclKind,
    pub span: Span,
}

impl PartialEq for Decl {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Decl {}

/// A parsed but not yet instantiated model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSource {
    pub name: String,
    pub decls: Vec<Decl>,
}

fn syntax<T>(span: Span, msg: impl Into<String>) -> Result<T> {
    Err(Error::parse(span, msg))
}

fn ident(e: &SExpr, what: &str) -> Result<String> {
    match e.atom() {
        Some(a) if !a.starts_with(':') && a.parse::<u64>().is_err() => Ok(a.to_string()),
        _ => syntax(e.span, format!("expected {what} name")),
    }
}

fn keyword(e: &SExpr) -> Option<String> {
    e.atom()
        .and_then(|a| a.strip_prefix(':'))
        .filter(|k| !k.is_empty())
        .map(str::to_string)
}

fn expr(e: &SExpr) -> Result<Expr> {
    Expr::from_sexpr(e).map_err(|(span, message)| Error::Syntax { span, message })
}

fn width(e: &SExpr) -> Result<WidthRef> {
    if let Some(a) = e.atom() {
        return Ok(match a.parse::<u64>() {
            Ok(n) => WidthRef::Lit(n),
            Err(_) => WidthRef::Param(ident(e, "parameter")?),
        });
    }
    match e.list() {
        Some([h, x]) if h.atom() == Some("bits") => Ok(WidthRef::Bits(Box::new(width(x)?))),
        _ => syntax(e.span, "expected a width: number, parameter or (bits ...)"),
    }
}

fn sort_ref(e: &SExpr) -> Result<SortRef> {
    if let Some(a) = e.atom() {
        return Ok(match a {
            "bool" => SortRef::Bool,
            _ => SortRef::Named(ident(e, "sort")?),
        });
    }
    let items = e.list().unwrap_or_default();
    match items {
        [h, w] if h.atom() == Some("nat") => Ok(SortRef::Nat(width(w)?)),
        [h, rest @ ..] if h.atom() == Some("tuple") => {
            let mut fields = Vec::new();
            for f in rest {
                match f.list() {
                    Some([k, s]) if keyword(k).is_some() => {
                        fields.push((keyword(k).unwrap().to_ascii_lowercase(), sort_ref(s)?))
                    }
                    _ => return syntax(f.span, "expected (:key sort) in tuple sort"),
                }
            }
            Ok(SortRef::Tuple(fields))
        }
        _ => syntax(e.span, "malformed sort"),
    }
}

fn params(e: &SExpr) -> Result<Vec<(String, SortRef)>> {
    let Some(items) = e.list() else {
        return syntax(e.span, "expected a parameter list");
    };
    items
        .iter()
        .map(|p| match p.list() {
            Some([n, s]) => Ok((ident(n, "parameter")?, sort_ref(s)?)),
            _ => syntax(p.span, "expected (name sort)"),
        })
        .collect()
}

/// `(name params [:returns sort] [:key (f ...)] body)` after the head.
fn fun(span: Span, args: &[SExpr]) -> Result<(FunDecl, Vec<String>)> {
    let [name, ps, rest @ ..] = args else {
        return syntax(span, "expected name, parameter list and body");
    };
    let mut returns = None;
    let mut key = Vec::new();
    let mut rest = rest;
    while let [k, v, tail @ ..] = rest {
        match keyword(k).as_deref() {
            Some("returns") => returns = Some(sort_ref(v)?),
            Some("key") => {
                key = v
                    .list()
                    .ok_or_else(|| Error::parse(v.span, "expected a field list"))?
                    .iter()
                    .map(|f| ident(f, "field"))
                    .collect::<Result<_>>()?
            }
            Some(other) => return syntax(k.span, format!("unknown option :{other}")),
            None => break,
        }
        rest = tail;
    }
    let [body] = rest else {
        return syntax(span, "expected exactly one body expression");
    };
    Ok((
        FunDecl {
            name: ident(name, "function")?,
            params: params(ps)?,
            returns,
            body: expr(body)?,
        },
        key,
    ))
}

fn options(span: Span, args: &[SExpr]) -> Result<Vec<(String, String)>> {
    if args.len() % 2 != 0 {
        return syntax(span, "options must come in :key value pairs");
    }
    args.chunks(2)
        .map(|kv| {
            let k = keyword(&kv[0]).ok_or_else(|| Error::parse(kv[0].span, "expected :keyword"))?;
            Ok((k, ident(&kv[1], "option value")?))
        })
        .collect()
}

fn decl(e: &SExpr) -> Result<Decl> {
    let span = e.span;
    let Some(op) = e.head() else {
        return syntax(span, "expected a top-level form");
    };
    let args = &e.list().unwrap()[1..];
    let kind = match op {
        "param" => match args {
            [n, v] => DeclKind::Param {
                name: ident(n, "parameter")?,
                default: v
                    .atom()
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| Error::parse(v.span, "expected a natural default"))?,
            },
            _ => return syntax(span, "expected (param NAME default)"),
        },
        "enum" => {
            let [n, syms @ ..] = args else {
                return syntax(span, "expected (enum name symbol ...)");
            };
            DeclKind::Enum {
                name: ident(n, "enum")?,
                symbols: syms
                    .iter()
                    .map(|s| ident(s, "symbol"))
                    .collect::<Result<_>>()?,
            }
        }
        "record" => {
            let [n, fs @ ..] = args else {
                return syntax(span, "expected (record name (field sort) ...)");
            };
            DeclKind::Record {
                name: ident(n, "record")?,
                fields: fs
                    .iter()
                    .map(|f| match f.list() {
                        Some([k, s]) => Ok((ident(k, "field")?, sort_ref(s)?)),
                        _ => syntax(f.span, "expected (field sort)"),
                    })
                    .collect::<Result<_>>()?,
            }
        }
        "defun" => {
            let (f, key) = fun(span, args)?;
            if !key.is_empty() {
                return syntax(span, ":key is only allowed on invariants");
            }
            DeclKind::Defun(f)
        }
        "invariant" => {
            let (fun, key) = fun(span, args)?;
            DeclKind::Invariant { fun, key }
        }
        "measures" => {
            let [n, ps, ms @ ..] = args else {
                return syntax(span, "expected (measures name params (m expr ...) ...)");
            };
            DeclKind::Measures {
                name: ident(n, "measure family")?,
                params: params(ps)?,
                measures: ms
                    .iter()
                    .map(|m| match m.list() {
                        Some([k, es @ ..]) if !es.is_empty() => Ok((
                            ident(k, "measure")?,
                            es.iter().map(expr).collect::<Result<_>>()?,
                        )),
                        _ => syntax(m.span, "expected (measure expr ...)"),
                    })
                    .collect::<Result<_>>()?,
            }
        }
        "system" => DeclKind::System(options(span, args)?),
        "map" => {
            let [n, rest @ ..] = args else {
                return syntax(span, "expected (map name :key value ...)");
            };
            DeclKind::Map {
                name: ident(n, "map")?,
                options: options(span, rest)?,
            }
        }
        "model" => return syntax(span, "duplicate model header"),
        other => return syntax(span, format!("unknown top-level form `{other}`")),
    };
    Ok(Decl { kind, span })
}

/// Reads a model source. Never panics on malformed input.
pub fn parse_source(text: &str) -> Result<ModelSource> {
    let forms = read_all(text).map_err(|e| Error::parse(e.span, e.message))?;
    let Some((header, rest)) = forms.split_first() else {
        return syntax(Span { line: 1, col: 1 }, "expected model header");
    };
    let name = match header.list() {
        Some([h, n]) if h.atom() == Some("model") => ident(n, "model")?,
        _ => return syntax(header.span, "expected model header `(model NAME)`"),
    };
    Ok(ModelSource {
        name,
        decls: rest.iter().map(decl).collect::<Result<_>>()?,
    })
}

impl fmt::Display for WidthRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WidthRef::Lit(n) => write!(f, "{n}"),
            WidthRef::Param(p) => write!(f, "{p}"),
            WidthRef::Bits(w) => write!(f, "(bits {w})"),
        }
    }
}

impl fmt::Display for SortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SortRef::Bool => write!(f, "bool"),
            SortRef::Nat(w) => write!(f, "(nat {w})"),
            SortRef::Named(n) => write!(f, "{n}"),
            SortRef::Tuple(fs) => {
                write!(f, "(tuple")?;
                for (k, s) in fs {
                    write!(f, " (:{k} {s})")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn write_params(f: &mut fmt::Formatter<'_>, ps: &[(String, SortRef)]) -> fmt::Result {
    write!(f, "(")?;
    for (i, (n, s)) in ps.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "({n} {s})")?;
    }
    write!(f, ")")
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fun = |f: &mut fmt::Formatter<'_>, head: &str, d: &FunDecl, key: &[String]| {
            write!(f, "({head} {} ", d.name)?;
            write_params(f, &d.params)?;
            if let Some(r) = &d.returns {
                write!(f, " :returns {r}")?;
            }
            if !key.is_empty() {
                write!(f, " :key ({})", key.join(" "))?;
            }
            write!(f, "\n  {})", d.body)
        };
        match &self.kind {
            DeclKind::Param { name, default } => write!(f, "(param {name} {default})"),
            DeclKind::Enum { name, symbols } => write!(f, "(enum {name} {})", symbols.join(" ")),
            DeclKind::Record { name, fields } => {
                write!(f, "(record {name}")?;
                for (k, s) in fields {
                    write!(f, "\n  ({k} {s})")?;
                }
                write!(f, ")")
            }
            DeclKind::Defun(d) => fun(f, "defun", d, &[]),
            DeclKind::Invariant { fun: d, key } => fun(f, "invariant", d, key),
            DeclKind::Measures {
                name,
                params,
                measures,
            } => {
                write!(f, "(measures {name} ")?;
                write_params(f, params)?;
                for (m, es) in measures {
                    write!(f, "\n  ({m}")?;
                    for e in es {
                        write!(f, " {e}")?;
                    }
                    write!(f, ")")?;
                }
                write!(f, ")")
            }
            DeclKind::System(opts) => {
                write!(f, "(system")?;
                for (k, v) in opts {
                    write!(f, "\n  :{k} {v}")?;
                }
                write!(f, ")")
            }
            DeclKind::Map { name, options } => {
                write!(f, "(map {name}")?;
                for (k, v) in options {
                    write!(f, " :{k} {v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for ModelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(model {})", self.name)?;
        for d in &self.decls {
            writeln!(f)?;
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}
