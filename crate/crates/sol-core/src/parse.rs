//! Concrete syntax: a text grammar for formulas, signature and judgment
//! files, an s-expression format for proof scripts, and pretty-printers
//! that round-trip through both.
//!
//! Identifiers starting lowercase are individual variables (or constants
//! when declared), uppercase are predicates. Connective precedence is
//! `~ > & > | > ->` with `->` right-associative; quantifier bodies extend
//! maximally right after the dot. The unicode connectives are accepted as
//! aliases of the ASCII forms.

use std::fmt;

use thiserror::Error;

use crate::kernel::Proof;
use crate::syntax::{
    pconst, pvar, Formula, PredAbstraction, PredRef, Signature, Term,
};

/// A position in an input file, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: SourceSpan, msg: String },
    #[error("{span}: arity error: {msg}")]
    Arity { span: SourceSpan, msg: String },
    #[error("{span}: unknown rule: {rule}")]
    UnknownRule { span: SourceSpan, rule: String },
    #[error("{span}: malformed payload: {msg}")]
    MalformedPayload { span: SourceSpan, msg: String },
}

impl ParseError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::Arity { span, .. }
            | ParseError::UnknownRule { span, .. }
            | ParseError::MalformedPayload { span, .. } => span,
        }
    }
}

fn syntax_err<T>(span: SourceSpan, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax { span, msg: msg.into() })
}

// ---------------------------------------------------------------------------
// Formula lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(usize),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Arrow,
    Amp,
    Pipe,
    Tilde,
    Forall,
    Exists,
    Forall2,
    Exists2,
    Bot,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier {s}"),
            Tok::Nat(n) => write!(f, "number {n}"),
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::Comma => write!(f, "','"),
            Tok::Dot => write!(f, "'.'"),
            Tok::Colon => write!(f, "':'"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::Amp => write!(f, "'&'"),
            Tok::Pipe => write!(f, "'|'"),
            Tok::Tilde => write!(f, "'~'"),
            Tok::Forall => write!(f, "'forall'"),
            Tok::Exists => write!(f, "'exists'"),
            Tok::Forall2 => write!(f, "'forall2'"),
            Tok::Exists2 => write!(f, "'exists2'"),
            Tok::Bot => write!(f, "'bot'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '\u{2032}'
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    file: String,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(file: &str, text: &'a str, line: usize, col: usize) -> Lexer<'a> {
        Lexer { chars: text.chars().peekable(), file: file.to_owned(), line, col }
    }

    fn here(&self) -> SourceSpan {
        SourceSpan { file: self.file.clone(), line: self.line, column: self.col }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if let Some(c) = c {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        c
    }

    fn tokens(mut self) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            if matches!(self.chars.peek(), Some('#')) {
                while !matches!(self.chars.peek(), None | Some('\n')) {
                    self.bump();
                }
                continue;
            }
            let span = self.here();
            let c = match self.chars.peek() {
                None => {
                    out.push((Tok::Eof, span));
                    return Ok(out);
                }
                Some(c) => *c,
            };
            let tok = match c {
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '.' => {
                    self.bump();
                    Tok::Dot
                }
                ':' => {
                    self.bump();
                    Tok::Colon
                }
                '&' | '\u{2227}' => {
                    self.bump();
                    Tok::Amp
                }
                '|' => {
                    self.bump();
                    // A '|-' would be a turnstile; not part of formulas.
                    Tok::Pipe
                }
                '\u{2228}' => {
                    self.bump();
                    Tok::Pipe
                }
                '~' | '\u{00ac}' => {
                    self.bump();
                    Tok::Tilde
                }
                '\u{2192}' => {
                    self.bump();
                    Tok::Arrow
                }
                '\u{22a5}' => {
                    self.bump();
                    Tok::Bot
                }
                '\u{2200}' | '\u{2203}' => {
                    self.bump();
                    let two = matches!(self.chars.peek(), Some('2'));
                    if two {
                        self.bump();
                    }
                    match (c, two) {
                        ('\u{2200}', false) => Tok::Forall,
                        ('\u{2200}', true) => Tok::Forall2,
                        ('\u{2203}', false) => Tok::Exists,
                        (_, true) => Tok::Exists2,
                        _ => unreachable!(),
                    }
                }
                '-' => {
                    self.bump();
                    if matches!(self.chars.peek(), Some('>')) {
                        self.bump();
                        Tok::Arrow
                    } else {
                        return syntax_err(span, "expected '>' after '-'");
                    }
                }
                d if d.is_ascii_digit() => {
                    let mut n = String::new();
                    while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                        n.push(self.bump().unwrap());
                    }
                    Tok::Nat(n.parse().expect("digits"))
                }
                a if is_ident_start(a) => {
                    let mut s = String::new();
                    while matches!(self.chars.peek(), Some(c) if is_ident_continue(*c)) {
                        let c = self.bump().unwrap();
                        s.push(if c == '\u{2032}' { '\'' } else { c });
                    }
                    match s.as_str() {
                        "forall" => Tok::Forall,
                        "exists" => Tok::Exists,
                        "forall2" => Tok::Forall2,
                        "exists2" => Tok::Exists2,
                        "bot" => Tok::Bot,
                        _ => Tok::Ident(s),
                    }
                }
                other => {
                    return syntax_err(span, format!("unexpected character {other:?}"));
                }
            };
            out.push((tok, span));
        }
    }
}

// ---------------------------------------------------------------------------
// Formula parser
// ---------------------------------------------------------------------------

struct FormulaParser<'a> {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    sig: &'a Signature,
    bound_ind: Vec<String>,
    bound_pred: Vec<(String, usize)>,
}

impl<'a> FormulaParser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1.clone()
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<SourceSpan, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            syntax_err(self.span(), format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            other => syntax_err(self.span(), format!("expected an identifier, found {other}")),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Forall | Tok::Exists => {
                let (kw, _) = self.bump();
                let (name, span) = self.ident()?;
                if starts_upper(&name) || *self.peek() == Tok::Colon {
                    // Lenient alias: a predicate binder written without the
                    // '2' suffix on the quantifier keyword.
                    if !starts_upper(&name) {
                        return syntax_err(
                            span,
                            format!("predicate binder requires an uppercase name, found {name}"),
                        );
                    }
                    self.pred_binder(kw == Tok::Forall, name)
                } else {
                    self.expect(Tok::Dot)?;
                    self.bound_ind.push(name.clone());
                    let body = self.formula()?;
                    self.bound_ind.pop();
                    Ok(if kw == Tok::Forall {
                        Formula::forall_ind(&name, body)
                    } else {
                        Formula::exists_ind(&name, body)
                    })
                }
            }
            Tok::Forall2 | Tok::Exists2 => {
                let (kw, _) = self.bump();
                let (name, span) = self.ident()?;
                if !starts_upper(&name) {
                    return syntax_err(
                        span,
                        format!("predicate binder requires an uppercase name, found {name}"),
                    );
                }
                self.pred_binder(kw == Tok::Forall2, name)
            }
            _ => self.impl_formula(),
        }
    }

    fn pred_binder(&mut self, universal: bool, name: String) -> Result<Formula, ParseError> {
        self.expect(Tok::Colon)?;
        let arity = match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                n
            }
            other => {
                return syntax_err(self.span(), format!("expected an arity, found {other}"));
            }
        };
        self.expect(Tok::Dot)?;
        self.bound_pred.push((name.clone(), arity));
        let body = self.formula()?;
        self.bound_pred.pop();
        Ok(if universal {
            Formula::forall_pred(&name, arity, body)
        } else {
            Formula::exists_pred(&name, arity, body)
        })
    }

    fn impl_formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disj()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conj()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            f = Formula::or(f, self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.neg()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            f = Formula::and(f, self.neg()?);
        }
        Ok(f)
    }

    fn neg(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Tilde {
            self.bump();
            Ok(Formula::not(self.neg()?))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Bot => {
                self.bump();
                Ok(Formula::Bot)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(name) => {
                let span = self.bump().1;
                if !starts_upper(&name) {
                    return syntax_err(
                        span,
                        format!("expected a formula, found term-level identifier {name}"),
                    );
                }
                let args = if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.term()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.term()?);
                        }
                    }
                    self.expect(Tok::RParen)?;
                    args
                } else {
                    Vec::new()
                };
                let pred = self.resolve_pred(&name, args.len(), &span)?;
                Ok(Formula::Atom { pred, args })
            }
            other => syntax_err(self.span(), format!("expected a formula, found {other}")),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let (name, span) = self.ident()?;
        if starts_upper(&name) {
            return syntax_err(
                span,
                format!("terms are individual variables or constants, found predicate {name}"),
            );
        }
        if self.bound_ind.iter().any(|b| *b == name) {
            Ok(Term::Var(name))
        } else if self.sig.has_const(&name) {
            Ok(Term::Const(name))
        } else {
            Ok(Term::Var(name))
        }
    }

    fn resolve_pred(
        &self,
        name: &str,
        used_arity: usize,
        span: &SourceSpan,
    ) -> Result<PredRef, ParseError> {
        let mut name_bound = false;
        for (b, a) in self.bound_pred.iter().rev() {
            if b == name {
                if *a == used_arity {
                    return Ok(pvar(name, used_arity));
                }
                name_bound = true;
            }
        }
        if let Some(decl) = self.sig.pred_arity(name) {
            if decl == used_arity {
                return Ok(pconst(name, used_arity));
            }
            return Err(ParseError::Arity {
                span: span.clone(),
                msg: format!("{name} is declared with arity {decl} but applied to {used_arity} argument(s)"),
            });
        }
        if name_bound {
            return Err(ParseError::Arity {
                span: span.clone(),
                msg: format!("bound predicate variable {name} is applied to {used_arity} argument(s), contradicting its binder"),
            });
        }
        Ok(pvar(name, used_arity))
    }
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

/// Parses a formula over the empty signature: every lowercase identifier is
/// a variable, every undeclared uppercase one a predicate variable.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse_formula_with(&Signature::default(), text)
}

/// Parses a formula, classifying identifiers against `sig`.
pub fn parse_formula_with(sig: &Signature, text: &str) -> Result<Formula, ParseError> {
    parse_formula_at("<input>", text, sig, 1, 1)
}

fn parse_formula_at(
    file: &str,
    text: &str,
    sig: &Signature,
    line: usize,
    col: usize,
) -> Result<Formula, ParseError> {
    let toks = Lexer::new(file, text, line, col).tokens()?;
    let mut p = FormulaParser { toks, pos: 0, sig, bound_ind: Vec::new(), bound_pred: Vec::new() };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return syntax_err(p.span(), format!("unexpected {} after formula", p.peek()));
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Formula pretty-printer
// ---------------------------------------------------------------------------

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::ForallInd { .. }
        | Formula::ExistsInd { .. }
        | Formula::ForallPred { .. }
        | Formula::ExistsPred { .. } => 0,
        Formula::Implies(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        Formula::Not(..) => 4,
        Formula::Atom { .. } | Formula::Bot => 5,
    }
}

fn print_formula(f: &Formula, min: u8, out: &mut String) {
    let needs_parens = prec(f) < min;
    if needs_parens {
        out.push('(');
    }
    match f {
        Formula::Atom { pred, args } => {
            out.push_str(pred.name());
            if !args.is_empty() {
                out.push('(');
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(t.name());
                }
                out.push(')');
            }
        }
        Formula::Bot => out.push_str("bot"),
        Formula::Not(a) => {
            out.push('~');
            print_formula(a, 4, out);
        }
        Formula::And(a, b) => {
            print_formula(a, 3, out);
            out.push_str(" & ");
            print_formula(b, 4, out);
        }
        Formula::Or(a, b) => {
            print_formula(a, 2, out);
            out.push_str(" | ");
            print_formula(b, 3, out);
        }
        Formula::Implies(a, b) => {
            print_formula(a, 2, out);
            out.push_str(" -> ");
            print_formula(b, 1, out);
        }
        Formula::ForallInd { var, body } => {
            out.push_str("forall ");
            out.push_str(var);
            out.push_str(". ");
            print_formula(body, 0, out);
        }
        Formula::ExistsInd { var, body } => {
            out.push_str("exists ");
            out.push_str(var);
            out.push_str(". ");
            print_formula(body, 0, out);
        }
        Formula::ForallPred { var, arity, body } => {
            out.push_str("forall2 ");
            out.push_str(var);
            out.push(':');
            out.push_str(&arity.to_string());
            out.push_str(". ");
            print_formula(body, 0, out);
        }
        Formula::ExistsPred { var, arity, body } => {
            out.push_str("exists2 ");
            out.push_str(var);
            out.push(':');
            out.push_str(&arity.to_string());
            out.push_str(". ");
            print_formula(body, 0, out);
        }
    }
    if needs_parens {
        out.push(')');
    }
}

/// Canonical text rendering; `parse_formula_with` maps it back to the same
/// tree.
pub fn pretty_formula(f: &Formula) -> String {
    let mut out = String::new();
    print_formula(f, 0, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Signature headers, .sol files, judgment files
// ---------------------------------------------------------------------------

fn parse_pred_decl(word: &str, span: SourceSpan) -> Result<(String, usize), ParseError> {
    let Some((name, arity)) = word.split_once(':') else {
        return syntax_err(span, format!("predicate declaration {word} must be NAME:ARITY"));
    };
    let Ok(arity) = arity.parse::<usize>() else {
        return syntax_err(span, format!("bad arity in predicate declaration {word}"));
    };
    if !starts_upper(name) {
        return syntax_err(span, format!("predicate {name} must start uppercase"));
    }
    Ok((name.to_owned(), arity))
}

/// Splits leading `const`/`pred` header lines off a text, blanking them out
/// so later spans still point into the original file.
fn split_header(file: &str, text: &str) -> Result<(Signature, String), ParseError> {
    let mut sig = Signature::default();
    let mut body = String::new();
    let mut in_header = true;
    for (idx, line) in text.lines().enumerate() {
        let stripped = line.split('#').next().unwrap_or("").trim();
        let is_decl = in_header
            && (stripped.starts_with("const ")
                || stripped.starts_with("pred ")
                || stripped == "const"
                || stripped == "pred");
        if is_decl {
            let mut words = stripped.split_whitespace();
            let kind = words.next().unwrap();
            for w in words {
                let span =
                    SourceSpan { file: file.to_owned(), line: idx + 1, column: 1 };
                match kind {
                    "const" => {
                        if starts_upper(w) {
                            return syntax_err(span, format!("constant {w} must start lowercase"));
                        }
                        sig.consts.push(w.to_owned());
                    }
                    _ => {
                        let (name, arity) = parse_pred_decl(w, span)?;
                        sig.preds.push((name, arity));
                    }
                }
            }
            body.push_str(&" ".repeat(line.chars().count()));
        } else {
            if !stripped.is_empty() {
                in_header = false;
            }
            body.push_str(line);
        }
        body.push('\n');
    }
    Ok((sig, body))
}

/// Parses a formula file: optional `const`/`pred` header lines, then one
/// formula (which may span lines). `#` starts a comment.
pub fn parse_sol_file(file: &str, text: &str) -> Result<(Signature, Formula), ParseError> {
    let (sig, body) = split_header(file, text)?;
    let f = parse_formula_at(file, &body, &sig, 1, 1)?;
    Ok((sig, f))
}

/// Parses an expected-judgment file: a signature header, zero or more
/// `hyp LABEL: formula` lines, and a final `|- formula`.
pub fn parse_judgment_file(
    file: &str,
    text: &str,
) -> Result<(Signature, crate::kernel::Judgment), ParseError> {
    let (sig, body) = split_header(file, text)?;
    let mut hyps: Vec<(String, Formula)> = Vec::new();
    let mut conclusion: Option<Formula> = None;
    for (idx, line) in body.lines().enumerate() {
        let stripped = line.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let span = SourceSpan { file: file.to_owned(), line: idx + 1, column: 1 };
        if let Some(rest) = stripped.strip_prefix("hyp ") {
            let Some((label, formula_text)) = rest.split_once(':') else {
                return syntax_err(span, "hypothesis line must be 'hyp LABEL: FORMULA'");
            };
            let f = parse_formula_at(file, formula_text, &sig, idx + 1, 1)?;
            hyps.push((label.trim().to_owned(), f));
        } else if let Some(rest) = stripped.strip_prefix("|-") {
            if conclusion.is_some() {
                return syntax_err(span, "multiple conclusions in judgment file");
            }
            conclusion = Some(parse_formula_at(file, rest, &sig, idx + 1, 1)?);
        } else {
            return syntax_err(span, format!("unexpected line in judgment file: {stripped}"));
        }
    }
    let Some(conclusion) = conclusion else {
        return syntax_err(
            SourceSpan { file: file.to_owned(), line: 1, column: 1 },
            "judgment file has no '|-' conclusion line",
        );
    };
    Ok((
        sig,
        crate::kernel::Judgment {
            hypotheses: hyps.into_iter().collect(),
            conclusion,
        },
    ))
}

// ---------------------------------------------------------------------------
// S-expressions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom { text: String, span: SourceSpan },
    List { items: Vec<Sexp>, span: SourceSpan },
}

impl Sexp {
    fn span(&self) -> &SourceSpan {
        match self {
            Sexp::Atom { span, .. } | Sexp::List { span, .. } => span,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            _ => None,
        }
    }
}

fn lex_sexp(file: &str, text: &str) -> Result<Vec<Sexp>, ParseError> {
    struct Frame {
        items: Vec<Sexp>,
        span: SourceSpan,
    }
    let mut stack: Vec<Frame> = Vec::new();
    let mut top: Vec<Sexp> = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    loop {
        let span = SourceSpan { file: file.to_owned(), line, column: col };
        let Some(c) = chars.peek().copied() else { break };
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        };
        match c {
            ';' => {
                while !matches!(chars.peek(), None | Some('\n')) {
                    bump(&mut chars);
                }
            }
            c if c.is_whitespace() => {
                bump(&mut chars);
            }
            '(' => {
                bump(&mut chars);
                stack.push(Frame { items: Vec::new(), span });
            }
            ')' => {
                bump(&mut chars);
                let Some(frame) = stack.pop() else {
                    return syntax_err(span, "unbalanced ')'");
                };
                let sexp = Sexp::List { items: frame.items, span: frame.span };
                match stack.last_mut() {
                    Some(parent) => parent.items.push(sexp),
                    None => top.push(sexp),
                }
            }
            _ => {
                let mut s = String::new();
                while matches!(chars.peek(), Some(c) if !c.is_whitespace() && *c != '(' && *c != ')' && *c != ';')
                {
                    s.push(bump(&mut chars).unwrap());
                }
                let sexp = Sexp::Atom { text: s, span };
                match stack.last_mut() {
                    Some(parent) => parent.items.push(sexp),
                    None => top.push(sexp),
                }
            }
        }
    }
    if let Some(unclosed) = stack.pop() {
        return syntax_err(unclosed.span, "unclosed '('");
    }
    Ok(top)
}

// ---------------------------------------------------------------------------
// Formulas and abstractions as s-expressions (proof-script payloads)
// ---------------------------------------------------------------------------

struct ScriptCtx {
    sig: Signature,
    hyps: Vec<(String, Formula)>,
}

impl ScriptCtx {
    fn hyp_formula(&self, label: &str) -> Option<Formula> {
        self.hyps
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, f)| f.clone())
    }
}

fn sexp_formula(s: &Sexp, ctx: &ScriptCtx, bound: &mut Vec<(String, usize)>) -> Result<Formula, ParseError> {
    match s {
        Sexp::Atom { text, span } => match text.as_str() {
            "bot" => Ok(Formula::Bot),
            name if starts_upper(name) => {
                Ok(Formula::Atom { pred: resolve_script_pred(name, 0, ctx, bound), args: vec![] })
            }
            other => syntax_err(span.clone(), format!("expected a formula, found {other}")),
        },
        Sexp::List { items, span } => {
            let Some(head) = items.first().and_then(Sexp::atom) else {
                return syntax_err(span.clone(), "formula list must start with a keyword or predicate");
            };
            let args = &items[1..];
            let need = |n: usize| -> Result<(), ParseError> {
                if args.len() == n {
                    Ok(())
                } else {
                    syntax_err(
                        span.clone(),
                        format!("{head} takes {n} argument(s), found {}", args.len()),
                    )
                }
            };
            match head {
                "and" | "or" => {
                    if args.len() < 2 {
                        return syntax_err(span.clone(), format!("{head} takes at least 2 arguments"));
                    }
                    let mut f = sexp_formula(&args[0], ctx, bound)?;
                    for a in &args[1..] {
                        let g = sexp_formula(a, ctx, bound)?;
                        f = if head == "and" { Formula::and(f, g) } else { Formula::or(f, g) };
                    }
                    Ok(f)
                }
                "->" | "imp" => {
                    need(2)?;
                    Ok(Formula::implies(
                        sexp_formula(&args[0], ctx, bound)?,
                        sexp_formula(&args[1], ctx, bound)?,
                    ))
                }
                "not" | "~" => {
                    need(1)?;
                    Ok(Formula::not(sexp_formula(&args[0], ctx, bound)?))
                }
                "forall" | "exists" => {
                    need(2)?;
                    let var = expect_lower_atom(&args[0], "individual variable")?;
                    let body = sexp_formula(&args[1], ctx, bound)?;
                    Ok(if head == "forall" {
                        Formula::forall_ind(&var, body)
                    } else {
                        Formula::exists_ind(&var, body)
                    })
                }
                "forall2" | "exists2" => {
                    need(3)?;
                    let var = expect_upper_atom(&args[0], "predicate variable")?;
                    let arity = expect_nat(&args[1])?;
                    bound.push((var.clone(), arity));
                    let body = sexp_formula(&args[2], ctx, bound)?;
                    bound.pop();
                    Ok(if head == "forall2" {
                        Formula::forall_pred(&var, arity, body)
                    } else {
                        Formula::exists_pred(&var, arity, body)
                    })
                }
                name if starts_upper(name) => {
                    let mut ts = Vec::new();
                    for a in args {
                        ts.push(sexp_term(a, ctx)?);
                    }
                    Ok(Formula::Atom {
                        pred: resolve_script_pred(name, ts.len(), ctx, bound),
                        args: ts,
                    })
                }
                other => syntax_err(span.clone(), format!("unknown formula keyword {other}")),
            }
        }
    }
}

/// Script formulas resolve a name to a predicate constant only on an exact
/// (name, arity) signature match; everything else is a variable.
fn resolve_script_pred(
    name: &str,
    arity: usize,
    ctx: &ScriptCtx,
    bound: &[(String, usize)],
) -> PredRef {
    if bound.iter().rev().any(|(b, a)| b == name && *a == arity) {
        return pvar(name, arity);
    }
    if ctx.sig.pred_arity(name) == Some(arity) {
        return pconst(name, arity);
    }
    pvar(name, arity)
}

fn sexp_term(s: &Sexp, ctx: &ScriptCtx) -> Result<Term, ParseError> {
    match s {
        Sexp::Atom { text, span } => {
            if starts_upper(text) {
                syntax_err(span.clone(), format!("terms must be lowercase, found {text}"))
            } else if ctx.sig.has_const(text) {
                Ok(Term::Const(text.clone()))
            } else {
                Ok(Term::Var(text.clone()))
            }
        }
        Sexp::List { span, .. } => syntax_err(span.clone(), "terms are plain identifiers"),
    }
}

fn expect_lower_atom(s: &Sexp, what: &str) -> Result<String, ParseError> {
    match s.atom() {
        Some(a) if !starts_upper(a) && !a.is_empty() => Ok(a.to_owned()),
        _ => syntax_err(s.span().clone(), format!("expected {what}")),
    }
}

fn expect_upper_atom(s: &Sexp, what: &str) -> Result<String, ParseError> {
    match s.atom() {
        Some(a) if starts_upper(a) => Ok(a.to_owned()),
        _ => syntax_err(s.span().clone(), format!("expected {what}")),
    }
}

fn expect_nat(s: &Sexp) -> Result<usize, ParseError> {
    s.atom()
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| ParseError::Syntax {
            span: s.span().clone(),
            msg: "expected a number".to_owned(),
        })
}

fn sexp_abstraction(s: &Sexp, ctx: &ScriptCtx) -> Result<PredAbstraction, ParseError> {
    let Sexp::List { items, span } = s else {
        return Err(ParseError::MalformedPayload {
            span: s.span().clone(),
            msg: "expected (lam (params) body)".to_owned(),
        });
    };
    if items.len() != 3 || items[0].atom() != Some("lam") {
        return Err(ParseError::MalformedPayload {
            span: span.clone(),
            msg: "expected (lam (params) body)".to_owned(),
        });
    }
    let Sexp::List { items: param_items, .. } = &items[1] else {
        return Err(ParseError::MalformedPayload {
            span: items[1].span().clone(),
            msg: "lam parameters must be a list".to_owned(),
        });
    };
    let mut params = Vec::new();
    for p in param_items {
        params.push(expect_lower_atom(p, "parameter")?);
    }
    let mut seen = std::collections::BTreeSet::new();
    for p in &params {
        if !seen.insert(p.clone()) {
            return Err(ParseError::MalformedPayload {
                span: span.clone(),
                msg: format!("duplicate lam parameter {p}"),
            });
        }
    }
    let body = sexp_formula(&items[2], ctx, &mut Vec::new())?;
    Ok(PredAbstraction::new(params.iter().map(String::as_str).collect(), body))
}

// ---------------------------------------------------------------------------
// Proof scripts
// ---------------------------------------------------------------------------

/// Parses a `.solp` proof script: either a bare rule tree, or
/// `(proof (const ...) (pred ...) (hyps ...) TREE)`.
pub fn parse_proof(text: &str) -> Result<Proof, ParseError> {
    parse_proof_in("<input>", text)
}

pub fn parse_proof_in(file: &str, text: &str) -> Result<Proof, ParseError> {
    let top = lex_sexp(file, text)?;
    let root = match top.len() {
        1 => &top[0],
        0 => {
            return syntax_err(
                SourceSpan { file: file.to_owned(), line: 1, column: 1 },
                "empty proof script",
            )
        }
        _ => {
            return syntax_err(
                top[1].span().clone(),
                "proof script must contain a single top-level term",
            )
        }
    };
    let mut ctx = ScriptCtx { sig: Signature::default(), hyps: Vec::new() };
    let tree = match root {
        Sexp::List { items, span } if items.first().and_then(Sexp::atom) == Some("proof") => {
            let mut tree = None;
            for item in &items[1..] {
                match item {
                    Sexp::List { items: decl, .. }
                        if decl.first().and_then(Sexp::atom) == Some("const") =>
                    {
                        for c in &decl[1..] {
                            ctx.sig.consts.push(expect_lower_atom(c, "constant")?);
                        }
                    }
                    Sexp::List { items: decl, .. }
                        if decl.first().and_then(Sexp::atom) == Some("pred") =>
                    {
                        for p in &decl[1..] {
                            let Sexp::List { items: pair, span } = p else {
                                return syntax_err(
                                    p.span().clone(),
                                    "pred declaration must be (NAME ARITY)",
                                );
                            };
                            if pair.len() != 2 {
                                return syntax_err(
                                    span.clone(),
                                    "pred declaration must be (NAME ARITY)",
                                );
                            }
                            let name = expect_upper_atom(&pair[0], "predicate name")?;
                            let arity = expect_nat(&pair[1])?;
                            ctx.sig.preds.push((name, arity));
                        }
                    }
                    Sexp::List { items: decl, .. }
                        if decl.first().and_then(Sexp::atom) == Some("hyps") =>
                    {
                        for h in &decl[1..] {
                            let Sexp::List { items: pair, span } = h else {
                                return syntax_err(
                                    h.span().clone(),
                                    "hypothesis declaration must be (LABEL FORMULA)",
                                );
                            };
                            if pair.len() != 2 {
                                return syntax_err(
                                    span.clone(),
                                    "hypothesis declaration must be (LABEL FORMULA)",
                                );
                            }
                            let label = expect_lower_atom(&pair[0], "hypothesis label")?;
                            let f = sexp_formula(&pair[1], &ctx, &mut Vec::new())?;
                            ctx.hyps.push((label, f));
                        }
                    }
                    other => {
                        if tree.is_some() {
                            return syntax_err(
                                other.span().clone(),
                                "proof wrapper must contain a single rule tree",
                            );
                        }
                        tree = Some(other);
                    }
                }
            }
            match tree {
                Some(t) => t,
                None => return syntax_err(span.clone(), "proof wrapper has no rule tree"),
            }
        }
        other => other,
    };
    sexp_proof(tree, &ctx)
}

fn sexp_proof(s: &Sexp, ctx: &ScriptCtx) -> Result<Proof, ParseError> {
    let Sexp::List { items, span } = s else {
        return syntax_err(s.span().clone(), "a proof node is a parenthesized rule application");
    };
    let Some(head) = items.first().and_then(Sexp::atom) else {
        return syntax_err(span.clone(), "rule application must start with a rule name");
    };
    let args = &items[1..];
    let wrong = |msg: &str| ParseError::MalformedPayload {
        span: span.clone(),
        msg: format!("{head}: {msg}"),
    };
    let label = |s: &Sexp| expect_lower_atom(s, "hypothesis label");
    let formula = |s: &Sexp| sexp_formula(s, ctx, &mut Vec::new());
    match head {
        "hyp" => match args {
            [l] => {
                let l = label(l)?;
                let formula = ctx.hyp_formula(&l);
                Ok(Proof::Hyp { label: l, formula })
            }
            [l, f] => Ok(Proof::Hyp { label: label(l)?, formula: Some(formula(f)?) }),
            _ => Err(wrong("expected (hyp LABEL) or (hyp LABEL FORMULA)")),
        },
        "andI" => match args {
            [a, b] => Ok(Proof::and_i(sexp_proof(a, ctx)?, sexp_proof(b, ctx)?)),
            _ => Err(wrong("expected (andI P Q)")),
        },
        "andEL" => match args {
            [a] => Ok(Proof::and_el(sexp_proof(a, ctx)?)),
            _ => Err(wrong("expected (andEL P)")),
        },
        "andER" => match args {
            [a] => Ok(Proof::and_er(sexp_proof(a, ctx)?)),
            _ => Err(wrong("expected (andER P)")),
        },
        "orIL" => match args {
            [p, f] => Ok(Proof::or_il(sexp_proof(p, ctx)?, formula(f)?)),
            _ => Err(wrong("expected (orIL P RIGHT-FORMULA)")),
        },
        "orIR" => match args {
            [p, f] => Ok(Proof::or_ir(sexp_proof(p, ctx)?, formula(f)?)),
            _ => Err(wrong("expected (orIR P LEFT-FORMULA)")),
        },
        "orE" => match args {
            [m, la, pa, lb, pb] => Ok(Proof::or_e(
                sexp_proof(m, ctx)?,
                &label(la)?,
                sexp_proof(pa, ctx)?,
                &label(lb)?,
                sexp_proof(pb, ctx)?,
            )),
            _ => Err(wrong("expected (orE MAJOR LA PA LB PB)")),
        },
        "impI" => match args {
            [l, p] => Ok(Proof::imp_i(&label(l)?, sexp_proof(p, ctx)?)),
            [l, f, p] => Ok(Proof::imp_i_vac(&label(l)?, formula(f)?, sexp_proof(p, ctx)?)),
            _ => Err(wrong("expected (impI LABEL [FORMULA] P)")),
        },
        "impE" => match args {
            [a, b] => Ok(Proof::imp_e(sexp_proof(a, ctx)?, sexp_proof(b, ctx)?)),
            _ => Err(wrong("expected (impE P Q)")),
        },
        "notI" => match args {
            [l, p] => Ok(Proof::not_i(&label(l)?, sexp_proof(p, ctx)?)),
            [l, f, p] => Ok(Proof::NotI {
                label: label(l)?,
                negated: Some(formula(f)?),
                body: Box::new(sexp_proof(p, ctx)?),
            }),
            _ => Err(wrong("expected (notI LABEL [FORMULA] P)")),
        },
        "notE" => match args {
            [a, b] => Ok(Proof::not_e(sexp_proof(a, ctx)?, sexp_proof(b, ctx)?)),
            _ => Err(wrong("expected (notE P-AFFIRM P-NEG)")),
        },
        "botE" => match args {
            [p, f] => Ok(Proof::bot_e(sexp_proof(p, ctx)?, formula(f)?)),
            _ => Err(wrong("expected (botE P FORMULA)")),
        },
        "raa" => match args {
            [l, p] => Ok(Proof::raa(&label(l)?, sexp_proof(p, ctx)?)),
            [l, f, p] => Ok(Proof::Raa {
                label: label(l)?,
                conclusion: Some(formula(f)?),
                body: Box::new(sexp_proof(p, ctx)?),
            }),
            _ => Err(wrong("expected (raa LABEL [FORMULA] P)")),
        },
        "forallI" => match args {
            [x, p] => Ok(Proof::forall_i(&expect_lower_atom(x, "eigenvariable")?, sexp_proof(p, ctx)?)),
            _ => Err(wrong("expected (forallI VAR P)")),
        },
        "forallE" => match args {
            [p, t] => Ok(Proof::forall_e(sexp_proof(p, ctx)?, sexp_term(t, ctx)?)),
            _ => Err(wrong("expected (forallE P TERM)")),
        },
        "existsI" => match args {
            [p, t, f] => Ok(Proof::exists_i(sexp_proof(p, ctx)?, sexp_term(t, ctx)?, formula(f)?)),
            _ => Err(wrong("expected (existsI P WITNESS TARGET)")),
        },
        "existsE" => match args {
            [m, x, l, p] => Ok(Proof::exists_e(
                sexp_proof(m, ctx)?,
                &expect_lower_atom(x, "eigenvariable")?,
                &label(l)?,
                sexp_proof(p, ctx)?,
            )),
            _ => Err(wrong("expected (existsE MAJOR EIGEN LABEL P)")),
        },
        "forall2I" => match args {
            [x, n, p] => Ok(Proof::forall2_i(
                &expect_upper_atom(x, "eigenpredicate")?,
                expect_nat(n)?,
                sexp_proof(p, ctx)?,
            )),
            _ => Err(wrong("expected (forall2I VAR ARITY P)")),
        },
        "forall2E" => match args {
            [p, lam] => Ok(Proof::forall2_e(sexp_proof(p, ctx)?, sexp_abstraction(lam, ctx)?)),
            _ => Err(wrong("expected (forall2E P LAM)")),
        },
        "exists2I" => match args {
            [p, lam, f] => Ok(Proof::exists2_i(
                sexp_proof(p, ctx)?,
                sexp_abstraction(lam, ctx)?,
                formula(f)?,
            )),
            _ => Err(wrong("expected (exists2I P LAM TARGET)")),
        },
        "exists2E" => match args {
            [m, x, l, p] => Ok(Proof::exists2_e(
                sexp_proof(m, ctx)?,
                &expect_upper_atom(x, "eigenpredicate")?,
                &label(l)?,
                sexp_proof(p, ctx)?,
            )),
            _ => Err(wrong("expected (exists2E MAJOR EIGEN LABEL P)")),
        },
        "henkinI" => match args {
            [pa, pb, pm, la, lb] => Ok(Proof::HenkinI {
                prem_team: Box::new(sexp_proof(pa, ctx)?),
                prem_board: Box::new(sexp_proof(pb, ctx)?),
                prem_matrix: Box::new(sexp_proof(pm, ctx)?),
                abs_f: sexp_abstraction(la, ctx)?,
                abs_g: sexp_abstraction(lb, ctx)?,
            }),
            _ => Err(wrong("expected (henkinI P-TEAM P-BOARD P-MATRIX LAM-F LAM-G)")),
        },
        "henkinE" => match args {
            [m, f, g, l, p] => Ok(Proof::HenkinE {
                major: Box::new(sexp_proof(m, ctx)?),
                eigen_f: expect_upper_atom(f, "eigenpredicate")?,
                eigen_g: expect_upper_atom(g, "eigenpredicate")?,
                label: label(l)?,
                minor: Box::new(sexp_proof(p, ctx)?),
            }),
            _ => Err(wrong("expected (henkinE MAJOR F G LABEL MINOR)")),
        },
        other => Err(ParseError::UnknownRule { span: span.clone(), rule: other.to_owned() }),
    }
}

// ---------------------------------------------------------------------------
// Proof pretty-printer
// ---------------------------------------------------------------------------

fn sexp_of_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Atom { pred, args } => {
            if args.is_empty() {
                out.push_str(pred.name());
            } else {
                out.push('(');
                out.push_str(pred.name());
                for t in args {
                    out.push(' ');
                    out.push_str(t.name());
                }
                out.push(')');
            }
        }
        Formula::Bot => out.push_str("bot"),
        Formula::Not(a) => {
            out.push_str("(not ");
            sexp_of_formula(a, out);
            out.push(')');
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            out.push('(');
            out.push_str(match f {
                Formula::And(..) => "and",
                Formula::Or(..) => "or",
                _ => "->",
            });
            out.push(' ');
            sexp_of_formula(a, out);
            out.push(' ');
            sexp_of_formula(b, out);
            out.push(')');
        }
        Formula::ForallInd { var, body } | Formula::ExistsInd { var, body } => {
            out.push('(');
            out.push_str(if matches!(f, Formula::ForallInd { .. }) { "forall" } else { "exists" });
            out.push(' ');
            out.push_str(var);
            out.push(' ');
            sexp_of_formula(body, out);
            out.push(')');
        }
        Formula::ForallPred { var, arity, body } | Formula::ExistsPred { var, arity, body } => {
            out.push('(');
            out.push_str(if matches!(f, Formula::ForallPred { .. }) {
                "forall2"
            } else {
                "exists2"
            });
            out.push(' ');
            out.push_str(var);
            out.push(' ');
            out.push_str(&arity.to_string());
            out.push(' ');
            sexp_of_formula(body, out);
            out.push(')');
        }
    }
}

fn sexp_of_abstraction(abs: &PredAbstraction, out: &mut String) {
    out.push_str("(lam (");
    for (i, p) in abs.params().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(p);
    }
    out.push_str(") ");
    sexp_of_formula(abs.body(), out);
    out.push(')');
}

fn collect_script_facts(
    p: &Proof,
    hyps: &mut Vec<(String, Formula)>,
    inline: &mut std::collections::BTreeSet<String>,
    sig: &mut Signature,
    consts: &mut Vec<String>,
) {
    let note_formula = |f: &Formula, sig: &mut Signature, consts: &mut Vec<String>| {
        let s = Signature::of_formula(f);
        for c in &s.consts {
            if !consts.contains(c) {
                consts.push(c.clone());
            }
        }
        sig.merge(&s);
    };
    match p {
        Proof::Hyp { label, formula } => {
            if let Some(f) = formula {
                note_formula(f, sig, consts);
                match hyps.iter().find(|(l, _)| l == label) {
                    Some((_, g)) if g != f => {
                        inline.insert(label.clone());
                    }
                    Some(_) => {}
                    None => hyps.push((label.clone(), f.clone())),
                }
            }
        }
        Proof::OrIL { right: f, .. } | Proof::OrIR { left: f, .. } | Proof::BotE { conclusion: f, .. } => {
            note_formula(f, sig, consts)
        }
        Proof::ImpI { antecedent: Some(f), .. }
        | Proof::NotI { negated: Some(f), .. }
        | Proof::Raa { conclusion: Some(f), .. } => note_formula(f, sig, consts),
        Proof::ForallIndE { witness, .. } => {
            if let Term::Const(c) = witness {
                if !consts.contains(c) {
                    consts.push(c.clone());
                }
            }
        }
        Proof::ExistsIndI { witness, target, .. } => {
            if let Term::Const(c) = witness {
                if !consts.contains(c) {
                    consts.push(c.clone());
                }
            }
            note_formula(target, sig, consts);
        }
        Proof::ForallPredE { abs, .. } => note_formula(abs.body(), sig, consts),
        Proof::ExistsPredI { abs, target, .. } => {
            note_formula(abs.body(), sig, consts);
            note_formula(target, sig, consts);
        }
        Proof::HenkinI { abs_f, abs_g, .. } => {
            note_formula(abs_f.body(), sig, consts);
            note_formula(abs_g.body(), sig, consts);
        }
        _ => {}
    }
    for q in p.premises() {
        collect_script_facts(q, hyps, inline, sig, consts);
    }
}

fn print_proof_node(
    p: &Proof,
    inline: &std::collections::BTreeSet<String>,
    indent: usize,
    out: &mut String,
) {
    let pad = "  ".repeat(indent);
    let fml = |f: &Formula| {
        let mut s = String::new();
        sexp_of_formula(f, &mut s);
        s
    };
    let lam = |a: &PredAbstraction| {
        let mut s = String::new();
        sexp_of_abstraction(a, &mut s);
        s
    };
    match p {
        Proof::Hyp { label, formula } => {
            if inline.contains(label) {
                let f = formula.as_ref().expect("inline labels carry formulas");
                out.push_str(&format!("{pad}(hyp {label} {})", fml(f)));
            } else {
                out.push_str(&format!("{pad}(hyp {label})"));
            }
        }
        _ => {
            out.push_str(&pad);
            out.push('(');
            out.push_str(p.rule());
            // Leading payloads (before subproofs).
            match p {
                Proof::OrE { left_label, .. } => {
                    let _ = left_label;
                }
                Proof::ImpI { label, antecedent, .. } => {
                    out.push(' ');
                    out.push_str(label);
                    if let Some(f) = antecedent {
                        out.push(' ');
                        out.push_str(&fml(f));
                    }
                }
                Proof::NotI { label, negated, .. } => {
                    out.push(' ');
                    out.push_str(label);
                    if let Some(f) = negated {
                        out.push(' ');
                        out.push_str(&fml(f));
                    }
                }
                Proof::Raa { label, conclusion, .. } => {
                    out.push(' ');
                    out.push_str(label);
                    if let Some(f) = conclusion {
                        out.push(' ');
                        out.push_str(&fml(f));
                    }
                }
                Proof::ForallIndI { var, .. } => {
                    out.push(' ');
                    out.push_str(var);
                }
                Proof::ForallPredI { var, arity, .. } => {
                    out.push_str(&format!(" {var} {arity}"));
                }
                _ => {}
            }
            // Subproofs and trailing payloads.
            match p {
                Proof::AndI(a, b) | Proof::ImpE(a, b) | Proof::NotE(a, b) => {
                    out.push('\n');
                    print_proof_node(a, inline, indent + 1, out);
                    out.push('\n');
                    print_proof_node(b, inline, indent + 1, out);
                }
                Proof::AndEL(a) | Proof::AndER(a) => {
                    out.push('\n');
                    print_proof_node(a, inline, indent + 1, out);
                }
                Proof::OrIL { premise, right } => {
                    out.push('\n');
                    print_proof_node(premise, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {}", fml(right)));
                }
                Proof::OrIR { premise, left } => {
                    out.push('\n');
                    print_proof_node(premise, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {}", fml(left)));
                }
                Proof::OrE { major, left_label, left_branch, right_label, right_branch } => {
                    out.push('\n');
                    print_proof_node(major, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {left_label}\n"));
                    print_proof_node(left_branch, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {right_label}\n"));
                    print_proof_node(right_branch, inline, indent + 1, out);
                }
                Proof::ImpI { body, .. } | Proof::NotI { body, .. } | Proof::Raa { body, .. } => {
                    out.push('\n');
                    print_proof_node(body, inline, indent + 1, out);
                }
                Proof::BotE { premise, conclusion } => {
                    out.push('\n');
                    print_proof_node(premise, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {}", fml(conclusion)));
                }
                Proof::ForallIndI { body, .. } | Proof::ForallPredI { body, .. } => {
                    out.push('\n');
                    print_proof_node(body, inline, indent + 1, out);
                }
                Proof::ForallIndE { premise, witness } => {
                    out.push('\n');
                    print_proof_node(premise, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {}", witness.name()));
                }
                Proof::ExistsIndI { premise, witness, target } => {
                    out.push('\n');
                    print_proof_node(premise, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {}\n", witness.name()));
                    out.push_str(&format!("{pad}  {}", fml(target)));
                }
                Proof::ExistsIndE { major, eigen, label, body } => {
                    out.push('\n');
                    print_proof_node(major, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {eigen} {label}\n"));
                    print_proof_node(body, inline, indent + 1, out);
                }
                Proof::ForallPredE { premise, abs } => {
                    out.push('\n');
                    print_proof_node(premise, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {}", lam(abs)));
                }
                Proof::ExistsPredI { premise, abs, target } => {
                    out.push('\n');
                    print_proof_node(premise, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {}\n", lam(abs)));
                    out.push_str(&format!("{pad}  {}", fml(target)));
                }
                Proof::ExistsPredE { major, eigen, label, body } => {
                    out.push('\n');
                    print_proof_node(major, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {eigen} {label}\n"));
                    print_proof_node(body, inline, indent + 1, out);
                }
                Proof::HenkinI { prem_team, prem_board, prem_matrix, abs_f, abs_g } => {
                    out.push('\n');
                    print_proof_node(prem_team, inline, indent + 1, out);
                    out.push('\n');
                    print_proof_node(prem_board, inline, indent + 1, out);
                    out.push('\n');
                    print_proof_node(prem_matrix, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {}\n", lam(abs_f)));
                    out.push_str(&format!("{pad}  {}", lam(abs_g)));
                }
                Proof::HenkinE { major, eigen_f, eigen_g, label, minor } => {
                    out.push('\n');
                    print_proof_node(major, inline, indent + 1, out);
                    out.push('\n');
                    out.push_str(&format!("{pad}  {eigen_f} {eigen_g} {label}\n"));
                    print_proof_node(minor, inline, indent + 1, out);
                }
                Proof::Hyp { .. } => unreachable!("handled above"),
            }
            out.push(')');
        }
    }
}

/// Renders a proof as a script. Hypothesis formulas are hoisted into a
/// `(hyps ...)` block unless a label is reused for different formulas, in
/// which case those leaves stay inline.
pub fn pretty_proof(p: &Proof) -> String {
    let mut hyps = Vec::new();
    let mut inline = std::collections::BTreeSet::new();
    let mut sig = Signature::default();
    let mut consts = Vec::new();
    collect_script_facts(p, &mut hyps, &mut inline, &mut sig, &mut consts);
    hyps.retain(|(l, _)| !inline.contains(l));

    let mut out = String::new();
    out.push_str("(proof\n");
    if !consts.is_empty() {
        out.push_str("  (const");
        for c in &consts {
            out.push(' ');
            out.push_str(c);
        }
        out.push_str(")\n");
    }
    if !sig.preds.is_empty() {
        out.push_str("  (pred");
        for (n, a) in &sig.preds {
            out.push_str(&format!(" ({n} {a})"));
        }
        out.push_str(")\n");
    }
    if !hyps.is_empty() {
        out.push_str("  (hyps\n");
        for (l, f) in &hyps {
            let mut s = String::new();
            sexp_of_formula(f, &mut s);
            out.push_str(&format!("    ({l} {s})\n"));
        }
        out.push_str("  )\n");
    }
    print_proof_node(p, &inline, 1, &mut out);
    out.push_str(")\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, cst, var};

    #[test]
    fn parses_nested_quantifiers() {
        let f = parse_formula("forall x. T(x) -> exists x'. F(x,x')").unwrap();
        let expected = Formula::forall_ind(
            "x",
            Formula::implies(
                Formula::atom(pvar("T", 1), vec![var("x")]),
                Formula::exists_ind(
                    "x'",
                    Formula::atom(pvar("F", 2), vec![var("x"), var("x'")]),
                ),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_second_order_binders() {
        let f = parse_formula("exists2 F:2. exists2 G:2. (F(a,b) & G(b,a))").unwrap();
        match &f {
            Formula::ExistsPred { var, arity: 2, body } => {
                assert_eq!(var, "F");
                assert!(matches!(&**body, Formula::ExistsPred { arity: 2, .. }));
            }
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn reports_column_of_unbalanced_paren() {
        let e = parse_formula("P(x").unwrap_err();
        match e {
            ParseError::Syntax { span, .. } => {
                assert_eq!(span.line, 1);
                assert_eq!(span.column, 4);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn precedence_matches_grammar() {
        let f = parse_formula("~A & B | C -> D").unwrap();
        let a = |n: &str| Formula::atom(pvar(n, 0), vec![]);
        let expected = Formula::implies(
            Formula::or(Formula::and(Formula::not(a("A")), a("B")), a("C")),
            a("D"),
        );
        assert_eq!(f, expected);
        // -> is right-associative.
        let g = parse_formula("A -> B -> C").unwrap();
        let expected_g = Formula::implies(a("A"), Formula::implies(a("B"), a("C")));
        assert_eq!(g, expected_g);
    }

    #[test]
    fn unicode_aliases() {
        let uni = parse_formula("∀x. ¬P(x) ∧ Q(x) → ⊥ ∨ (∃y. P(y))").unwrap();
        let ascii = parse_formula("forall x. ~P(x) & Q(x) -> bot | (exists y. P(y))").unwrap();
        assert_eq!(uni, ascii);
        let uni2 = parse_formula("∀2 X:1. X(x) → X(y)").unwrap();
        let ascii2 = parse_formula("forall2 X:1. X(x) -> X(y)").unwrap();
        assert_eq!(uni2, ascii2);
    }

    #[test]
    fn signature_classifies_constants() {
        let sig = Signature::new(&["a"], &[("P", 1)]);
        let f = parse_formula_with(&sig, "P(a) & P(x)").unwrap();
        let expected = Formula::and(
            Formula::atom(pconst("P", 1), vec![cst("a")]),
            Formula::atom(pconst("P", 1), vec![var("x")]),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn arity_errors() {
        let sig = Signature::new(&[], &[("P", 1)]);
        assert!(matches!(
            parse_formula_with(&sig, "P(x,y)"),
            Err(ParseError::Arity { .. })
        ));
        assert!(matches!(
            parse_formula("forall2 X:2. X(a)"),
            Err(ParseError::Arity { .. })
        ));
    }

    #[test]
    fn shadowed_pred_arities_resolve_outward() {
        let f = parse_formula("forall2 X:2. forall2 X:1. (X(a) -> X(a,b))").unwrap();
        // X(a) binds to the inner binder, X(a,b) to the outer one.
        let inner = match &f {
            Formula::ForallPred { body, .. } => match &**body {
                Formula::ForallPred { body, .. } => body,
                _ => panic!(),
            },
            _ => panic!(),
        };
        match &**inner {
            Formula::Implies(l, r) => {
                assert!(matches!(&**l, Formula::Atom { pred, .. } if pred.arity() == 1));
                assert!(matches!(&**r, Formula::Atom { pred, .. } if pred.arity() == 2));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn pretty_round_trips() {
        let texts = [
            "forall x. T(x) -> exists x'. F(x,x')",
            "(A -> B) -> ~(A & ~B)",
            "exists2 X:1. ((C | D) & X(a))",
            "forall2 X:2. (X(x,y) -> exists z. X(z,z))",
            "~~A",
            "P",
        ];
        for t in texts {
            let f = parse_formula(t).unwrap();
            let printed = pretty_formula(&f);
            let g = parse_formula(&printed).unwrap_or_else(|e| {
                panic!("failed to reparse {printed:?}: {e}")
            });
            assert_eq!(f, g, "round trip through {printed:?}");
            assert!(alpha_eq(&f, &g));
        }
    }

    #[test]
    fn sol_file_with_header() {
        let text = "# a small signature\nconst a b\npred P:2 Q:2\nP(a,b) & Q(b,a)\n";
        let (sig, f) = parse_sol_file("test.sol", text).unwrap();
        assert_eq!(sig.consts, vec!["a".to_owned(), "b".to_owned()]);
        assert_eq!(
            f,
            Formula::and(
                Formula::atom(pconst("P", 2), vec![cst("a"), cst("b")]),
                Formula::atom(pconst("Q", 2), vec![cst("b"), cst("a")]),
            )
        );
    }

    #[test]
    fn judgment_file() {
        let text = "pred A:0\nhyp h: A -> A\n|- A -> A\n";
        let (_, j) = parse_judgment_file("test.solj", text).unwrap();
        assert_eq!(j.hypotheses.len(), 1);
        assert!(j.hypotheses.contains_key("h"));
    }

    #[test]
    fn parses_hyp_and_identity_scripts() {
        let p = parse_proof("(hyp h1)").unwrap();
        assert_eq!(p, Proof::Hyp { label: "h1".into(), formula: None });
        let q = parse_proof("(proof (pred (A 0)) (hyps (h1 A)) (impI h1 (hyp h1)))").unwrap();
        let a = Formula::atom(pconst("A", 0), vec![]);
        assert_eq!(q, Proof::imp_i("h1", Proof::hyp("h1", a)));
    }

    #[test]
    fn parses_forall2e_with_abstraction_payload() {
        let script = "(forall2E (hyp h) (lam (x y) (and (P x y) (Q y a))))";
        let p = parse_proof(script).unwrap();
        match p {
            Proof::ForallPredE { abs, .. } => {
                assert_eq!(abs.arity(), 2);
                assert_eq!(abs.params(), ["x".to_owned(), "y".to_owned()]);
            }
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn unknown_rule_and_malformed_payload() {
        assert!(matches!(
            parse_proof("(frobnicate x)"),
            Err(ParseError::UnknownRule { .. })
        ));
        assert!(matches!(
            parse_proof("(forallE (hyp h))"),
            Err(ParseError::MalformedPayload { .. })
        ));
        // existsI with a missing witness is malformed.
        assert!(matches!(
            parse_proof("(existsI (hyp h))"),
            Err(ParseError::MalformedPayload { .. })
        ));
    }

    #[test]
    fn proof_round_trip_with_script_header() {
        let a = Formula::atom(pconst("A", 0), vec![]);
        let p = Proof::imp_i("h", Proof::hyp("h", a));
        let script = pretty_proof(&p);
        let q = parse_proof(&script).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn errors_carry_spans_inside_input() {
        let bad = "(impI h (hyp h (and A)))";
        let e = parse_proof(bad).unwrap_err();
        let span = e.span();
        assert_eq!(span.line, 1);
        assert!(span.column > 1 && span.column <= bad.len());
    }
}
