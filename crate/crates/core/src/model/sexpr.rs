//! Minimal s-expression reader with line/column tracking.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExprKind {
    Atom(String),
    List(Vec<SExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadError {
    pub span: Span,
    pub message: String,
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Atom(a) => Some(a),
            SExprKind::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match &self.kind {
            SExprKind::List(l) => Some(l),
            SExprKind::Atom(_) => None,
        }
    }

    /// Head symbol of a non-empty list whose first element is an atom.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(SExpr::atom)
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Reader<'_> {
    fn pos(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<SExpr>, ReadError> {
        self.skip_trivia();
        let span = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(ReadError {
                                span,
                                message: "unclosed '('".into(),
                            })
                        }
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => {
                            if let Some(e) = self.read()? {
                                items.push(e);
                            }
                        }
                    }
                }
                Ok(Some(SExpr {
                    kind: SExprKind::List(items),
                    span,
                }))
            }
            ')' => Err(ReadError {
                span,
                message: "unexpected ')'".into(),
            }),
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(SExpr {
                    kind: SExprKind::Atom(s),
                    span,
                }))
            }
        }
    }
}

/// Reads every top-level s-expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<SExpr>, ReadError> {
    let mut r = Reader {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(e) = r.read()? {
        out.push(e);
    }
    Ok(out)
}
