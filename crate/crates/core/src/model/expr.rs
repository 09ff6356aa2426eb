//! Surface expressions: what model files and query builders write.

use std::fmt;

use super::sexpr::{SExpr, SExprKind};
use super::sort::Sort;
use super::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Nat(u64),
    Bool(bool),
    /// Enum symbol literal, written `'sym`.
    Sym(String),
    /// A constant of an explicit sort, built programmatically.
    Const(Value, Sort),
    Field(Box<Expr>, String),
    Update(Box<Expr>, Vec<(String, Expr)>),
    Make(String, Vec<(String, Expr)>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Lt(Box<Expr>, Box<Expr>),
    Le(Box<Expr>, Box<Expr>),
    /// Addition wrapping modulo `2^width`.
    AddMod(Box<Expr>, Box<Expr>),
    /// Subtraction floored at zero.
    SubGuarded(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Tuple(Vec<(String, Expr)>),
    /// Case split on a natural; the default arm is mandatory.
    Case(Box<Expr>, Vec<(Vec<u64>, Expr)>, Box<Expr>),
    Call(String, Vec<Expr>),
}

pub fn var(name: impl Into<String>) -> Expr {
    Expr::Var(name.into())
}

pub fn nat(n: u64) -> Expr {
    Expr::Nat(n)
}

pub fn field(e: Expr, f: impl Into<String>) -> Expr {
    Expr::Field(Box::new(e), f.into())
}

pub fn eq(a: Expr, b: Expr) -> Expr {
    Expr::Eq(Box::new(a), Box::new(b))
}

pub fn lt(a: Expr, b: Expr) -> Expr {
    Expr::Lt(Box::new(a), Box::new(b))
}

pub fn le(a: Expr, b: Expr) -> Expr {
    Expr::Le(Box::new(a), Box::new(b))
}

pub fn not(a: Expr) -> Expr {
    Expr::Not(Box::new(a))
}

pub fn and(es: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::And(es.into_iter().collect())
}

pub fn or(es: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::Or(es.into_iter().collect())
}

pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
    Expr::Ite(Box::new(c), Box::new(t), Box::new(e))
}

pub fn add_mod(a: Expr, b: Expr) -> Expr {
    Expr::AddMod(Box::new(a), Box::new(b))
}

pub fn sub_guarded(a: Expr, b: Expr) -> Expr {
    Expr::SubGuarded(Box::new(a), Box::new(b))
}

pub fn call(name: impl Into<String>, args: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::Call(name.into(), args.into_iter().collect())
}

pub fn constant(v: Value, sort: Sort) -> Expr {
    Expr::Const(v, sort)
}

pub fn tuple(items: impl IntoIterator<Item = (impl Into<String>, Expr)>) -> Expr {
    Expr::Tuple(items.into_iter().map(|(k, e)| (k.into(), e)).collect())
}

/// Strict lexicographic `xs < ys` over equal-length natural tuples,
/// leftmost component most significant.
pub fn lex_lt(xs: &[Expr], ys: &[Expr]) -> Expr {
    assert_eq!(xs.len(), ys.len());
    match (xs.split_first(), ys.split_first()) {
        (Some((x, xr)), Some((y, yr))) => {
            if xr.is_empty() {
                lt(x.clone(), y.clone())
            } else {
                or([
                    lt(x.clone(), y.clone()),
                    and([eq(x.clone(), y.clone()), lex_lt(xr, yr)]),
                ])
            }
        }
        _ => Expr::Bool(false),
    }
}

/// Non-strict lexicographic `xs <= ys`.
pub fn lex_le(xs: &[Expr], ys: &[Expr]) -> Expr {
    not(lex_lt(ys, xs))
}

impl Expr {
    /// Literals whose sort is decided by context.
    pub(crate) fn is_context_literal(&self) -> bool {
        matches!(self, Expr::Nat(_) | Expr::Sym(_))
    }

    /// Parses an expression. Returns a message on malformed input; callers
    /// attach the span.
    pub fn from_sexpr(e: &SExpr) -> Result<Expr, (super::sexpr::Span, String)> {
        let err = |s: &SExpr, m: String| Err((s.span, m));
        match &e.kind {
            SExprKind::Atom(a) => atom_expr(a).map_err(|m| (e.span, m)),
            SExprKind::List(items) => {
                let Some((head, args)) = items.split_first() else {
                    return err(e, "empty expression `()`".into());
                };
                let Some(op) = head.atom() else {
                    return err(head, "expected an operator symbol".into());
                };
                let sub = |i: usize| Expr::from_sexpr(&args[i]);
                let arity = |n: usize| -> Result<(), (super::sexpr::Span, String)> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err((e.span, format!("`{op}` expects {n} operands, got {}", args.len())))
                    }
                };
                let bin = |f: fn(Box<Expr>, Box<Expr>) -> Expr| -> Result<Expr, _> {
                    arity(2)?;
                    Ok(f(Box::new(sub(0)?), Box::new(sub(1)?)))
                };
                match op {
                    "if" => {
                        arity(3)?;
                        Ok(ite(sub(0)?, sub(1)?, sub(2)?))
                    }
                    "=" => bin(Expr::Eq),
                    "iff" => bin(Expr::Eq),
                    "/=" => {
                        arity(2)?;
                        Ok(not(eq(sub(0)?, sub(1)?)))
                    }
                    "<" => bin(Expr::Lt),
                    "<=" => bin(Expr::Le),
                    ">" => {
                        arity(2)?;
                        Ok(lt(sub(1)?, sub(0)?))
                    }
                    ">=" => {
                        arity(2)?;
                        Ok(le(sub(1)?, sub(0)?))
                    }
                    "add-mod" | "+%" => bin(Expr::AddMod),
                    "sub-guarded" | "-?" => bin(Expr::SubGuarded),
                    "1+" => {
                        arity(1)?;
                        Ok(add_mod(sub(0)?, nat(1)))
                    }
                    "1-" => {
                        arity(1)?;
                        Ok(sub_guarded(sub(0)?, nat(1)))
                    }
                    "not" => {
                        arity(1)?;
                        Ok(not(sub(0)?))
                    }
                    "and" => Ok(Expr::And(
                        args.iter().map(Expr::from_sexpr).collect::<Result<_, _>>()?,
                    )),
                    "or" => Ok(Expr::Or(
                        args.iter().map(Expr::from_sexpr).collect::<Result<_, _>>()?,
                    )),
                    "implies" => {
                        arity(2)?;
                        Ok(or([not(sub(0)?), sub(1)?]))
                    }
                    "get" => {
                        arity(2)?;
                        let f = args[1]
                            .atom()
                            .map(|a| a.trim_start_matches(':').to_string())
                            .ok_or((args[1].span, "expected a field name".to_string()))?;
                        Ok(field(sub(0)?, f))
                    }
                    "set" => {
                        let (base, rest) = args
                            .split_first()
                            .ok_or((e.span, "`set` needs a record operand".to_string()))?;
                        Ok(Expr::Update(
                            Box::new(Expr::from_sexpr(base)?),
                            keyword_pairs(rest, e)?,
                        ))
                    }
                    "make" => {
                        let (name, rest) = args
                            .split_first()
                            .ok_or((e.span, "`make` needs a record sort name".to_string()))?;
                        let name = name
                            .atom()
                            .ok_or((name.span, "expected a record sort name".to_string()))?;
                        Ok(Expr::Make(name.to_string(), keyword_pairs(rest, e)?))
                    }
                    "tuple" => {
                        let mut kvs = Vec::new();
                        for item in args {
                            match item.list() {
                                Some([k, v]) => {
                                    let key = k
                                        .atom()
                                        .and_then(|a| a.strip_prefix(':'))
                                        .ok_or((k.span, "expected a :keyword".to_string()))?;
                                    kvs.push((key.to_ascii_lowercase(), Expr::from_sexpr(v)?));
                                }
                                _ => return err(item, "tuple entries are `(:key expr)`".into()),
                            }
                        }
                        Ok(Expr::Tuple(kvs))
                    }
                    "case" => {
                        let (scrut, arms) = args
                            .split_first()
                            .ok_or((e.span, "`case` needs a scrutinee".to_string()))?;
                        let scrut = Expr::from_sexpr(scrut)?;
                        let mut out = Vec::new();
                        let mut default = None;
                        for arm in arms {
                            let Some([keys, body]) = arm.list() else {
                                return err(arm, "case arms are `(keys expr)`".into());
                            };
                            if default.is_some() {
                                return err(arm, "arm after the default `t` arm".into());
                            }
                            let body = Expr::from_sexpr(body)?;
                            match &keys.kind {
                                SExprKind::Atom(a) if a == "t" || a == "otherwise" => {
                                    default = Some(body)
                                }
                                SExprKind::Atom(a) => {
                                    let k = a.parse().map_err(|_| {
                                        (keys.span, format!("case key `{a}` is not a natural"))
                                    })?;
                                    out.push((vec![k], body));
                                }
                                SExprKind::List(ks) => {
                                    let mut v = Vec::new();
                                    for k in ks {
                                        v.push(k.atom().and_then(|a| a.parse().ok()).ok_or((
                                            k.span,
                                            "case key is not a natural".to_string(),
                                        ))?);
                                    }
                                    out.push((v, body));
                                }
                            }
                        }
                        let default = default
                            .ok_or((e.span, "case requires a default `t` arm".to_string()))?;
                        Ok(Expr::Case(Box::new(scrut), out, Box::new(default)))
                    }
                    name if name.starts_with(':') => {
                        err(head, format!("keyword `{name}` in operator position"))
                    }
                    name => Ok(Expr::Call(
                        name.to_string(),
                        args.iter().map(Expr::from_sexpr).collect::<Result<_, _>>()?,
                    )),
                }
            }
        }
    }
}

fn keyword_pairs(
    rest: &[SExpr],
    whole: &SExpr,
) -> Result<Vec<(String, Expr)>, (super::sexpr::Span, String)> {
    if rest.len() % 2 != 0 {
        return Err((whole.span, "expected `:field value` pairs".into()));
    }
    rest.chunks(2)
        .map(|kv| {
            let k = kv[0]
                .atom()
                .and_then(|a| a.strip_prefix(':'))
                .ok_or((kv[0].span, "expected a :field keyword".to_string()))?;
            Ok((k.to_string(), Expr::from_sexpr(&kv[1])?))
        })
        .collect()
}

fn atom_expr(a: &str) -> Result<Expr, String> {
    if let Ok(n) = a.parse::<u64>() {
        return Ok(Expr::Nat(n));
    }
    match a {
        "t" | "true" => return Ok(Expr::Bool(true)),
        "nil" | "false" => return Ok(Expr::Bool(false)),
        _ => {}
    }
    if let Some(s) = a.strip_prefix('\'') {
        if s.is_empty() {
            return Err("empty symbol literal".into());
        }
        return Ok(Expr::Sym(s.to_string()));
    }
    if a.starts_with(':') {
        return Err(format!("unexpected keyword `{a}`"));
    }
    if a.starts_with(|c: char| c.is_ascii_digit() || c == '-') && a.len() > 1 {
        if a.chars().all(|c| c.is_ascii_digit() || c == '-') {
            return Err(format!("`{a}` is not a natural literal"));
        }
    }
    let mut parts = a.split('.');
    let base = parts.next().unwrap_or_default();
    if base.is_empty() {
        return Err(format!("malformed name `{a}`"));
    }
    let mut e = Expr::Var(base.to_string());
    for p in parts {
        if p.is_empty() {
            return Err(format!("malformed field access `{a}`"));
        }
        e = field(e, p);
    }
    Ok(e)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn bin(f: &mut fmt::Formatter<'_>, op: &str, a: &Expr, b: &Expr) -> fmt::Result {
            write!(f, "({op} {a} {b})")
        }
        fn pairs(f: &mut fmt::Formatter<'_>, kvs: &[(String, Expr)]) -> fmt::Result {
            for (k, v) in kvs {
                write!(f, " :{k} {v}")?;
            }
            Ok(())
        }
        match self {
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Nat(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Sym(s) => write!(f, "'{s}"),
            Expr::Const(v, s) => const_expr(f, v, s),
            Expr::Field(e, name) => match &**e {
                Expr::Var(_) | Expr::Field(..) => write!(f, "{e}.{name}"),
                _ => write!(f, "(get {e} {name})"),
            },
            Expr::Update(e, kvs) => {
                write!(f, "(set {e}")?;
                pairs(f, kvs)?;
                write!(f, ")")
            }
            Expr::Make(name, kvs) => {
                write!(f, "(make {name}")?;
                pairs(f, kvs)?;
                write!(f, ")")
            }
            Expr::Ite(c, t, e) => write!(f, "(if {c} {t} {e})"),
            Expr::Eq(a, b) => bin(f, "=", a, b),
            Expr::Lt(a, b) => bin(f, "<", a, b),
            Expr::Le(a, b) => bin(f, "<=", a, b),
            Expr::AddMod(a, b) => bin(f, "add-mod", a, b),
            Expr::SubGuarded(a, b) => bin(f, "sub-guarded", a, b),
            Expr::Not(a) => write!(f, "(not {a})"),
            Expr::And(es) | Expr::Or(es) => {
                write!(f, "({}", if matches!(self, Expr::And(_)) { "and" } else { "or" })?;
                for e in es {
                    write!(f, " {e}")?;
                }
                write!(f, ")")
            }
            Expr::Tuple(kvs) => {
                write!(f, "(tuple")?;
                for (k, v) in kvs {
                    write!(f, " (:{k} {v})")?;
                }
                write!(f, ")")
            }
            Expr::Case(s, arms, d) => {
                write!(f, "(case {s}")?;
                for (keys, body) in arms {
                    match keys.as_slice() {
                        [k] => write!(f, " ({k} {body})")?,
                        ks => {
                            write!(f, " ((")?;
                            for (i, k) in ks.iter().enumerate() {
                                if i > 0 {
                                    write!(f, " ")?;
                                }
                                write!(f, "{k}")?;
                            }
                            write!(f, ") {body})")?;
                        }
                    }
                }
                write!(f, " (t {d}))")
            }
            Expr::Call(name, args) => {
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn const_expr(f: &mut fmt::Formatter<'_>, v: &Value, s: &Sort) -> fmt::Result {
    match (v, s) {
        (Value::Bool(b), _) => write!(f, "{b}"),
        (Value::Nat(n), _) => write!(f, "{n}"),
        (Value::Enum { symbol, .. }, _) => write!(f, "'{symbol}"),
        (Value::Tuple(kv), Sort::Tuple(t)) => {
            write!(f, "(tuple")?;
            for ((k, v), (_, s)) in kv.iter().zip(&t.fields) {
                write!(f, " (:{k} ")?;
                const_expr(f, v, s)?;
                write!(f, ")")?;
            }
            write!(f, ")")
        }
        (Value::Record(vs), Sort::Record(r)) => {
            write!(f, "(make {}", r.name)?;
            for (v, (k, s)) in vs.iter().zip(&r.fields) {
                write!(f, " :{k} ")?;
                const_expr(f, v, s)?;
            }
            write!(f, ")")
        }
        (v, _) => write!(f, "{v}"),
    }
}
