// SPDX-License-Identifier: MIT
//! Recursive-descent parsers for the model and pattern languages.

use std::collections::{HashMap, HashSet};

use super::lexer::{tokenize, Tok, Token};
use super::{ModelIoError, SemanticError, SourceSpan};
use crate::graph::GraphError;
use crate::patterns::{Pattern, PatternError, Role, RoleKind, TemplateEdge};
use crate::scm::{
    DeclKind, Domain, Expr, FunctionBody, NodeDecl, Scm, ScmDocument, ScmError, StructuralFunction, TableRow, BOOL,
};

pub(crate) const RESERVED: &[&str] = &[
    "model", "domain", "exo", "latent", "var", "proxy", "for", "label", "if", "then", "else", "pattern", "role", "edge",
];

/// Parses and validates a model.
pub fn parse_model(text: &str) -> Result<Scm, ModelIoError> {
    let (doc, spans) = parse_raw(text)?;
    Scm::from_document(&doc).map_err(|e| {
        let span = spans.locate(&e);
        ModelIoError::Semantic { span, error: e.into() }
    })
}

/// Parses a model without validating it.
pub fn parse_model_document(text: &str) -> Result<ScmDocument, ModelIoError> {
    parse_raw(text).map(|(doc, _)| doc)
}

#[derive(Default)]
struct Spans {
    header: Option<SourceSpan>,
    decls: HashMap<String, SourceSpan>,
    domains: HashMap<String, SourceSpan>,
    /// (declaring node, referenced word) -> first occurrence
    refs: HashMap<(String, String), SourceSpan>,
}

impl Spans {
    fn locate(&self, e: &ScmError) -> SourceSpan {
        let fallback = self.header.unwrap_or(SourceSpan { line: 1, column: 1, length: 1 });
        let reference = |node: &str, word: &str| self.refs.get(&(node.to_string(), word.to_string())).copied();
        match e {
            ScmError::UnknownParent { node, parent } | ScmError::ForwardReference { node, parent } => {
                reference(node, parent).or_else(|| self.decls.get(node).copied())
            }
            ScmError::UnknownDomain { node, domain } => reference(node, domain),
            ScmError::InvalidDomain { domain, .. } => self.domains.get(domain).copied(),
            ScmError::Graph(GraphError::Cycle(nodes)) => nodes.first().and_then(|n| self.decls.get(n).copied()),
            other => other.node().and_then(|n| self.decls.get(n).or_else(|| self.domains.get(n)).copied()),
        }
        .unwrap_or(fallback)
    }
}

struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    fn new(text: &str) -> Result<Self, ModelIoError> {
        Ok(Self { toks: tokenize(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ModelIoError {
        ModelIoError::parse(self.span(), format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<SourceSpan, ModelIoError> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn keyword(&mut self, w: &str) -> Result<SourceSpan, ModelIoError> {
        if self.is_word(w) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    /// A user-chosen name: identifier, not reserved.
    fn name(&mut self, what: &str) -> Result<(String, SourceSpan), ModelIoError> {
        match self.peek().clone() {
            Tok::Ident(s) if RESERVED.contains(&s.as_str()) => {
                Err(ModelIoError::parse(self.span(), format!("`{s}` is a keyword and cannot be used as {what}")))
            }
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => Err(self.unexpected(what)),
        }
    }

    fn value(&mut self) -> Result<(String, SourceSpan), ModelIoError> {
        match self.peek().clone() {
            Tok::Number(s) => Ok((s, self.bump().span)),
            Tok::Ident(_) => self.name("a value"),
            _ => Err(self.unexpected("a value")),
        }
    }

    fn end_of_statement(&mut self) -> Result<(), ModelIoError> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected("end of line")),
        }
    }

    fn skip_blank(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    fn label(&mut self) -> Result<Option<String>, ModelIoError> {
        if !self.is_word("label") {
            return Ok(None);
        }
        self.bump();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Some(s))
            }
            _ => Err(self.unexpected("a quoted label")),
        }
    }
}

struct ModelParser {
    cur: Cursor,
    doc: ScmDocument,
    spans: Spans,
    var_domains: HashMap<String, String>,
    values: HashSet<String>,
    current: String,
}

fn parse_raw(text: &str) -> Result<(ScmDocument, Spans), ModelIoError> {
    let mut p = ModelParser {
        cur: Cursor::new(text)?,
        doc: ScmDocument { name: String::new(), domains: Vec::new(), nodes: Vec::new() },
        spans: Spans::default(),
        var_domains: HashMap::new(),
        values: ["false", "true"].map(String::from).into(),
        current: String::new(),
    };
    p.cur.skip_blank();
    let header = p.cur.keyword("model").map_err(|_| p.cur.unexpected("`model <name>` as the first statement"))?;
    let (name, _) = p.cur.name("a model name")?;
    p.doc.name = name;
    p.spans.header = Some(header);
    p.cur.end_of_statement()?;
    loop {
        p.cur.skip_blank();
        if *p.cur.peek() == Tok::Eof {
            break;
        }
        p.statement()?;
        p.cur.end_of_statement()?;
    }
    Ok((p.doc, p.spans))
}

impl ModelParser {
    fn statement(&mut self) -> Result<(), ModelIoError> {
        let word = match self.cur.peek() {
            Tok::Ident(w) => w.clone(),
            _ => return Err(self.cur.unexpected("a declaration")),
        };
        match word.as_str() {
            "domain" => self.domain(),
            "exo" | "latent" => {
                let kind = if word == "exo" { DeclKind::Exogenous } else { DeclKind::Latent };
                self.cur.bump();
                let (name, span) = self.declare()?;
                let domain = self.domain_ref(&name)?;
                let mut decl = NodeDecl::root(name, kind, domain);
                decl.label = self.cur.label()?;
                self.push(decl, span);
                Ok(())
            }
            "var" => self.var(),
            "proxy" => {
                self.cur.bump();
                let (name, span) = self.declare()?;
                self.cur.keyword("for")?;
                let (principal, pspan) = self.cur.name("a latent variable")?;
                self.spans.refs.entry((name.clone(), principal.clone())).or_insert(pspan);
                let domain = self.var_domains.get(&principal).cloned().unwrap_or_else(|| BOOL.to_string());
                let mut decl = NodeDecl::proxy(name, principal, domain);
                decl.label = self.cur.label()?;
                self.push(decl, span);
                Ok(())
            }
            "model" => Err(ModelIoError::parse(self.cur.span(), "a file declares exactly one model")),
            _ => Err(self.cur.unexpected("`domain`, `exo`, `latent`, `var` or `proxy`")),
        }
    }

    fn declare(&mut self) -> Result<(String, SourceSpan), ModelIoError> {
        let (name, span) = self.cur.name("a variable name")?;
        self.current = name.clone();
        Ok((name, span))
    }

    fn push(&mut self, decl: NodeDecl, span: SourceSpan) {
        self.spans.decls.insert(decl.name.clone(), span);
        self.var_domains.insert(decl.name.clone(), decl.domain.clone());
        self.doc.nodes.push(decl);
    }

    fn domain_ref(&mut self, node: &str) -> Result<String, ModelIoError> {
        self.cur.expect(Tok::Colon)?;
        let (domain, span) = self.cur.name("a domain name")?;
        self.spans.refs.entry((node.to_string(), domain.clone())).or_insert(span);
        Ok(domain)
    }

    fn domain(&mut self) -> Result<(), ModelIoError> {
        self.cur.bump();
        let (name, span) = self.cur.name("a domain name")?;
        self.cur.expect(Tok::LBrace)?;
        let mut values = Vec::new();
        loop {
            let (v, _) = self.cur.value()?;
            values.push(v);
            if *self.cur.peek() == Tok::Comma {
                self.cur.bump();
                if *self.cur.peek() == Tok::RBrace {
                    break;
                }
            } else {
                break;
            }
        }
        self.cur.expect(Tok::RBrace)?;
        self.values.extend(values.iter().cloned());
        self.spans.domains.insert(name.clone(), span);
        self.doc.domains.push(Domain { name, values });
        Ok(())
    }

    fn var(&mut self) -> Result<(), ModelIoError> {
        self.cur.bump();
        let (name, span) = self.declare()?;
        let domain = self.domain_ref(&name)?;
        let function = match self.cur.peek() {
            Tok::Assign => {
                self.cur.bump();
                let expr = self.expr()?;
                StructuralFunction::expr(name.clone(), expr)
            }
            Tok::LArrow => {
                self.cur.bump();
                let mut parents = Vec::new();
                if matches!(self.cur.peek(), Tok::Ident(w) if w != "label") {
                    loop {
                        let (p, pspan) = self.cur.name("a parent variable")?;
                        self.spans.refs.entry((name.clone(), p.clone())).or_insert(pspan);
                        parents.push(p);
                        if *self.cur.peek() != Tok::Comma {
                            break;
                        }
                        self.cur.bump();
                    }
                }
                let body = if *self.cur.peek() == Tok::LBrace {
                    FunctionBody::Table { rows: self.table()? }
                } else {
                    FunctionBody::Unspecified
                };
                StructuralFunction { target: name.clone(), parents, body }
            }
            _ => return Err(self.cur.unexpected("`=` or `<-`")),
        };
        let mut decl = NodeDecl {
            name,
            kind: DeclKind::Endogenous,
            domain,
            label: None,
            function: Some(function),
            principal: None,
        };
        decl.label = self.cur.label()?;
        self.push(decl, span);
        Ok(())
    }

    fn table(&mut self) -> Result<Vec<TableRow>, ModelIoError> {
        self.cur.expect(Tok::LBrace)?;
        let mut rows = Vec::new();
        while *self.cur.peek() != Tok::RBrace {
            let mut inputs = Vec::new();
            if *self.cur.peek() != Tok::FatArrow {
                loop {
                    inputs.push(self.cur.value()?.0);
                    if *self.cur.peek() != Tok::Comma {
                        break;
                    }
                    self.cur.bump();
                }
            }
            self.cur.expect(Tok::FatArrow)?;
            let (output, _) = self.cur.value()?;
            rows.push(TableRow { inputs, output });
            match self.cur.peek() {
                Tok::Semi => {
                    self.cur.bump();
                }
                Tok::RBrace | Tok::Ident(_) | Tok::Number(_) | Tok::FatArrow => {}
                _ => return Err(self.cur.unexpected("`;` or `}`")),
            }
        }
        self.cur.bump();
        Ok(rows)
    }

    fn expr(&mut self) -> Result<Expr, ModelIoError> {
        if self.cur.is_word("if") {
            self.conditional()
        } else {
            self.or()
        }
    }

    fn conditional(&mut self) -> Result<Expr, ModelIoError> {
        self.cur.keyword("if")?;
        let cond = self.expr()?;
        self.cur.keyword("then")?;
        let then = self.expr()?;
        self.cur.keyword("else")?;
        let otherwise = self.expr()?;
        Ok(Expr::ite(cond, then, otherwise))
    }

    fn or(&mut self) -> Result<Expr, ModelIoError> {
        let mut lhs = self.and()?;
        while *self.cur.peek() == Tok::Pipe {
            self.cur.bump();
            lhs = Expr::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ModelIoError> {
        let mut lhs = self.equality()?;
        while *self.cur.peek() == Tok::Amp {
            self.cur.bump();
            lhs = Expr::and(lhs, self.equality()?);
        }
        Ok(lhs)
    }

    fn equality(&mut self) -> Result<Expr, ModelIoError> {
        let mut lhs = self.unary()?;
        while *self.cur.peek() == Tok::EqEq {
            self.cur.bump();
            lhs = Expr::eq(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ModelIoError> {
        if *self.cur.peek() == Tok::Bang {
            self.cur.bump();
            return Ok(Expr::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ModelIoError> {
        match self.cur.peek().clone() {
            Tok::LParen => {
                self.cur.bump();
                let e = self.expr()?;
                self.cur.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(w) if w == "if" => self.conditional(),
            Tok::Number(v) => {
                self.cur.bump();
                Ok(Expr::lit(v))
            }
            Tok::Ident(w) if !RESERVED.contains(&w.as_str()) => {
                let span = self.cur.bump().span;
                if !self.var_domains.contains_key(&w) && self.values.contains(&w) {
                    Ok(Expr::lit(w))
                } else {
                    self.spans.refs.entry((self.current.clone(), w.clone())).or_insert(span);
                    Ok(Expr::var(w))
                }
            }
            _ => Err(self.cur.unexpected("an expression")),
        }
    }
}

/// Parses and validates a pattern.
pub fn parse_pattern(text: &str) -> Result<Pattern, ModelIoError> {
    let mut cur = Cursor::new(text)?;
    cur.skip_blank();
    let header = cur.keyword("pattern").map_err(|_| cur.unexpected("`pattern <name>` as the first statement"))?;
    let (name, _) = cur.name("a pattern name")?;
    cur.end_of_statement()?;
    let mut roles: Vec<Role> = Vec::new();
    let mut edges: Vec<TemplateEdge> = Vec::new();
    let mut role_spans: Vec<SourceSpan> = Vec::new();
    let mut edge_spans: Vec<SourceSpan> = Vec::new();
    loop {
        cur.skip_blank();
        if *cur.peek() == Tok::Eof {
            break;
        }
        if cur.is_word("role") {
            cur.bump();
            let (role, span) = cur.name("a role name")?;
            cur.expect(Tok::Colon)?;
            let kind_span = cur.span();
            let (kind, _) = cur.name("a role kind")?;
            let kind = RoleKind::parse(&kind).ok_or_else(|| {
                let all: Vec<&str> = RoleKind::ALL.iter().map(|k| k.as_str()).collect();
                ModelIoError::parse(
                    kind_span,
                    format!("unknown role kind `{kind}`; expected one of {}", all.join(", ")),
                )
            })?;
            roles.push(Role { name: role, kind });
            role_spans.push(span);
        } else if cur.is_word("edge") {
            let span = cur.bump().span;
            let (from, _) = cur.name("a role name")?;
            cur.expect(Tok::RArrow)?;
            let (to, _) = cur.name("a role name")?;
            edges.push(TemplateEdge { from, to });
            edge_spans.push(span);
        } else if cur.is_word("pattern") {
            return Err(ModelIoError::parse(cur.span(), "a file declares exactly one pattern"));
        } else {
            return Err(cur.unexpected("`role` or `edge`"));
        }
        cur.end_of_statement()?;
    }
    let locate = |e: &PatternError| -> SourceSpan {
        let role_at = |n: &str| roles.iter().rposition(|r| r.name == n).map(|i| role_spans[i]);
        let edge_at = |pred: &dyn Fn(&TemplateEdge) -> bool| edges.iter().position(pred).map(|i| edge_spans[i]);
        match e {
            PatternError::DuplicateRole(n) => role_at(n),
            PatternError::UnknownRole(n) => edge_at(&|x| x.from == *n || x.to == *n),
            PatternError::SelfLoop(n) => edge_at(&|x| x.from == *n && x.to == *n),
            PatternError::DuplicateEdge(a, b) => {
                edges.iter().rposition(|x| x.from == *a && x.to == *b).map(|i| edge_spans[i])
            }
            PatternError::Cycle(n) => edge_at(&|x| x.to == *n),
            PatternError::TooManyRoles { kind, .. } => {
                roles.iter().rposition(|r| r.kind == *kind).map(|i| role_spans[i])
            }
            _ => None,
        }
        .unwrap_or(header)
    };
    Pattern::new(name, roles.clone(), edges.clone())
        .map_err(|e| ModelIoError::Semantic { span: locate(&e), error: SemanticError::Pattern(e) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::builtin_pattern;
    use crate::scm::Assignment;

    const TITUS: &str = "model titus\nexo I : bool\nvar TM : bool = I\nvar ED : bool = TM\nvar BD : bool = ED\n";

    #[test]
    fn titus_model() {
        let m = parse_model(TITUS).unwrap();
        assert_eq!(m.name(), "titus");
        assert_eq!(m.graph().len(), 4);
        assert_eq!(m.graph().edges().collect::<Vec<_>>(), [("I", "TM"), ("TM", "ED"), ("ED", "BD")]);
        let u: Assignment = [("I", "true")].into_iter().collect();
        assert_eq!(m.evaluate(&u).unwrap().get("BD"), Some("true"));
    }

    #[test]
    fn empty_model() {
        let m = parse_model("model empty").unwrap();
        assert_eq!(m.graph().len(), 0);
        assert!(parse_model("").is_err());
        assert!(parse_model("exo A : bool").is_err());
    }

    #[test]
    fn unknown_reference_names_it_with_span() {
        let e = parse_model("model m\nvar X : bool = Y\n").unwrap_err();
        let ModelIoError::Semantic { span, error } = &e else { panic!("{e:?}") };
        assert_eq!(*span, SourceSpan { line: 2, column: 16, length: 1 });
        assert!(error.to_string().contains("`Y`"));
        let e = parse_model("model m\nvar X : bool = Y\nexo Y : bool").unwrap_err();
        assert!(matches!(
            e,
            ModelIoError::Semantic { error: SemanticError::Model(ScmError::ForwardReference { .. }), .. }
        ));
    }

    #[test]
    fn full_grammar() {
        let text = r#"
# everything at once
model kitchen
domain level {
  low, mid,
  high
}
exo L : level label "Level"
exo B : bool
latent H : bool
var Hi : bool = L == high
var Out : level = if B & !Hi then mid else L
var T : bool <- L, B {
  low, false => true; low, true => false
  mid, false => true; mid, true => true;
  high, false => false; high, true => true;
}
var S : bool <- B, H label "Structure only"
var C : bool <- { => true }
proxy W for H
"#;
        let m = parse_model(text).unwrap();
        assert_eq!(m.graph().node("L").unwrap().label.as_deref(), Some("Level"));
        assert_eq!(m.graph().proxy_principal("W"), Some("H"));
        assert!(!m.is_fully_specified());
        assert_eq!(m.graph().parents("S").unwrap(), ["B", "H"]);
        assert_eq!(m.domain_of("Out").unwrap().name, "level");
    }

    #[test]
    fn precedence() {
        let m =
            parse_model("model p\nexo A : bool\nexo B : bool\nexo C : bool\nvar X : bool = A | B & !C == A\n").unwrap();
        let want =
            Expr::or(Expr::var("A"), Expr::and(Expr::var("B"), Expr::eq(Expr::not(Expr::var("C")), Expr::var("A"))));
        assert_eq!(m.function("X").unwrap().body, FunctionBody::Expr { expr: want });
    }

    #[test]
    fn parse_errors_have_spans() {
        for (text, line, col) in [
            ("model m\nexo A bool", 2, 7),
            ("model m\nvar X : bool = (A", 2, 18),
            ("model m\nvar if : bool = true", 2, 5),
            ("model m\nfrobnicate", 2, 1),
            ("model m\nexo A : bool extra", 2, 14),
        ] {
            let e = parse_model(text).unwrap_err();
            let ModelIoError::Parse { span, .. } = e else { panic!("{text}: {e:?}") };
            assert_eq!((span.line, span.column), (line, col), "{text}");
        }
    }

    #[test]
    fn semantic_errors_have_spans() {
        let e = parse_model("model m\nexo A : bool\nexo A : bool").unwrap_err();
        assert_eq!(e.span().unwrap().line, 3);
        let e = parse_model("model m\nexo A : colour").unwrap_err();
        assert_eq!(e.span().unwrap(), SourceSpan { line: 2, column: 9, length: 6 });
        let e = parse_model("model m\nexo A : bool\nvar B : bool = if A then true else A == A == A & 1").unwrap_err();
        assert!(matches!(e, ModelIoError::Semantic { .. }));
    }

    #[test]
    fn patterns() {
        let lindberg = "pattern lindberg\nrole Agent : Agent\nrole Mediator : Mediator\nrole Effect : Effect\nedge Agent -> Mediator\nedge Mediator -> Effect\n";
        assert_eq!(parse_pattern(lindberg).unwrap(), builtin_pattern("lindberg").unwrap());
        let two = "pattern p\nrole A : Accountable\nrole B : Accountable\nrole E : Effect\n";
        let e = parse_pattern(two).unwrap_err();
        assert!(matches!(
            e,
            ModelIoError::Semantic { error: SemanticError::Pattern(PatternError::TooManyRoles { .. }), .. }
        ));
        assert_eq!(e.span().unwrap().line, 3);
        let e = parse_pattern("pattern p\nrole A : Effect\nedge A -> A\n").unwrap_err();
        assert!(matches!(e, ModelIoError::Semantic { error: SemanticError::Pattern(PatternError::SelfLoop(_)), .. }));
        assert_eq!(e.span().unwrap().line, 3);
        assert!(matches!(parse_pattern("pattern p\nrole A : Boss\n"), Err(ModelIoError::Parse { .. })));
    }
}
