//! Recursive-descent parser for KRL text.
//!
//! Connective letters (`b a m o s d e f`) and the disjunction `v` are only
//! treated as operators in operator position, so they stay usable as names.

use crate::values::{ArithOp, CmpOp, MembershipFunction, Value};

use super::ast::*;
use super::lexer::{lex, Tok};
use super::ParseError;

pub(crate) struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

pub(crate) fn parse_source(src: &str) -> PResult<KnowledgeBase> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    p.knowledge_base()
}

pub(crate) fn parse_expr_str(src: &str) -> PResult<Expr> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

pub(crate) fn parse_temporal_str(src: &str) -> PResult<TemporalFormula> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let f = p.temporal()?;
    p.expect(&Tok::Eof)?;
    Ok(f)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::at(self.span(), expected, &self.peek().to_string())
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(&t.to_string()))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek() {
            Tok::Number(n) => {
                let n = *n;
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.error("number")),
        }
    }

    fn integer(&mut self) -> PResult<i64> {
        let span = self.span();
        let n = self.number()?;
        if n.fract() != 0.0 || n.abs() > 9.0e15 {
            return Err(ParseError::at(span, "integer", &n.to_string()));
        }
        Ok(n as i64)
    }

    fn knowledge_base(&mut self) -> PResult<KnowledgeBase> {
        let mut kb = KnowledgeBase {
            types: vec![],
            objects: vec![],
            events: vec![],
            intervals: vec![],
            rules: vec![],
            config: vec![],
        };
        loop {
            let span = self.span();
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(w) => match w.as_str() {
                    "type" => kb.types.push(self.type_decl(span)?),
                    "object" => kb.objects.push(self.object_decl(span)?),
                    "event" => kb.events.push(self.event_decl(span)?),
                    "interval" => kb.intervals.push(self.interval_decl(span)?),
                    "rule" => kb.rules.push(self.rule(span)?),
                    "config" => {
                        self.bump();
                        kb.config.extend(self.config_block()?);
                    }
                    _ => return Err(self.error("`type`, `object`, `event`, `interval`, `rule` or `config`")),
                },
                _ => return Err(self.error("declaration")),
            }
        }
        Ok(kb)
    }

    fn type_decl(&mut self, span: Span) -> PResult<TypeDecl> {
        self.bump();
        let name = self.ident()?;
        self.expect(&Tok::LBrace)?;
        let mut kind: Option<String> = None;
        let mut range = None;
        let mut values = None;
        let mut terms = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let key_span = self.span();
            let key = self.ident()?;
            match key.as_str() {
                "kind" => {
                    self.expect(&Tok::Colon)?;
                    let k = self.ident()?;
                    if !matches!(k.as_str(), "number" | "symbol" | "boolean") {
                        return Err(ParseError::at(key_span, "`number`, `symbol` or `boolean`", &k));
                    }
                    kind = Some(k);
                }
                "range" => {
                    self.expect(&Tok::Colon)?;
                    self.expect(&Tok::LBracket)?;
                    let lo = self.number()?;
                    self.expect(&Tok::Comma)?;
                    let hi = self.number()?;
                    self.expect(&Tok::RBracket)?;
                    range = Some((lo, hi));
                }
                "values" => {
                    self.expect(&Tok::Colon)?;
                    self.expect(&Tok::LBrace)?;
                    let mut vs = vec![self.ident()?];
                    while self.eat(&Tok::Comma) {
                        vs.push(self.ident()?);
                    }
                    self.expect(&Tok::RBrace)?;
                    values = Some(vs);
                }
                "term" => {
                    let t = self.ident()?;
                    self.expect(&Tok::Colon)?;
                    let mf = self.mf_literal()?;
                    terms.push((t, mf));
                }
                _ => return Err(ParseError::at(key_span, "`kind`, `range`, `values` or `term`", &key)),
            }
            self.expect(&Tok::Semi)?;
        }
        let kind = match kind.as_deref() {
            Some("number") | None if values.is_none() => TypeKind::Number { range },
            Some("symbol") | None => TypeKind::Symbol { values: values.unwrap_or_default() },
            Some("boolean") => TypeKind::Boolean,
            Some(other) => return Err(ParseError::at(span, "consistent type kind", other)),
        };
        Ok(TypeDecl { name, kind, terms, span })
    }

    fn object_decl(&mut self, span: Span) -> PResult<ObjectDecl> {
        self.bump();
        let name = self.ident()?;
        self.expect(&Tok::LBrace)?;
        let mut attrs = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let aspan = self.span();
            let output = matches!(self.peek_at(1), Tok::Ident(_)) && self.is_word("output");
            if output {
                self.bump();
            }
            let aname = self.ident()?;
            self.expect(&Tok::Colon)?;
            let ty = self.ident()?;
            self.expect(&Tok::Semi)?;
            attrs.push(AttrDecl { name: aname, ty, output, span: aspan });
        }
        Ok(ObjectDecl { name, attrs, span })
    }

    fn clause_key(&mut self, allowed: &str) -> PResult<(String, Span)> {
        let span = self.span();
        let key = match self.peek() {
            Tok::Ident(k) => k.clone(),
            _ => return Err(self.error(allowed)),
        };
        self.bump();
        self.expect(&Tok::Colon)?;
        Ok((key, span))
    }

    fn event_decl(&mut self, span: Span) -> PResult<EventDecl> {
        self.bump();
        let name = self.ident()?;
        self.expect(&Tok::LBrace)?;
        let mut origin = None;
        while !self.eat(&Tok::RBrace) {
            let (key, kspan) = self.clause_key("`origin`")?;
            if key != "origin" || origin.is_some() {
                return Err(ParseError::at(kspan, "single `origin` clause", &key));
            }
            origin = Some(self.expr()?);
            self.expect(&Tok::Semi)?;
        }
        let origin = origin.ok_or_else(|| ParseError::at(span, "`origin` clause", "`}`"))?;
        Ok(EventDecl { name, origin, span })
    }

    fn interval_decl(&mut self, span: Span) -> PResult<IntervalDecl> {
        self.bump();
        let name = self.ident()?;
        self.expect(&Tok::LBrace)?;
        let (mut open, mut close) = (None, None);
        while !self.eat(&Tok::RBrace) {
            let (key, kspan) = self.clause_key("`open` or `close`")?;
            let slot = match key.as_str() {
                "open" => &mut open,
                "close" => &mut close,
                _ => return Err(ParseError::at(kspan, "`open` or `close`", &key)),
            };
            if slot.is_some() {
                return Err(ParseError::at(kspan, "one clause per key", &key));
            }
            *slot = Some(self.expr()?);
            self.expect(&Tok::Semi)?;
        }
        match (open, close) {
            (Some(open), Some(close)) => Ok(IntervalDecl { name, open, close, span }),
            _ => Err(ParseError::at(span, "both `open` and `close` clauses", "`}`")),
        }
    }

    fn rule(&mut self, span: Span) -> PResult<Rule> {
        self.bump();
        let name = self.ident()?;
        self.expect(&Tok::LBrace)?;
        let mut rule = Rule {
            name,
            kind: RuleKind::Conventional,
            cf: 1.0,
            condition: None,
            temporal: None,
            actions: vec![],
            span,
        };
        let mut seen: Vec<String> = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let (key, kspan) = self.clause_key("`kind`, `cf`, `if`, `when` or `then`")?;
            if seen.contains(&key) {
                return Err(ParseError::at(kspan, "one clause per key", &key));
            }
            match key.as_str() {
                "kind" => {
                    let kspan = self.span();
                    let k = self.ident()?;
                    rule.kind = match k.as_str() {
                        "conventional" => RuleKind::Conventional,
                        "periodic" => {
                            let p = self.integer()?;
                            if p < 0 {
                                return Err(ParseError::at(kspan, "non-negative period", &p.to_string()));
                            }
                            RuleKind::Periodic(p as u64)
                        }
                        "response" => RuleKind::Response(self.ident()?),
                        _ => return Err(ParseError::at(kspan, "`conventional`, `periodic` or `response`", &k)),
                    };
                }
                "cf" => rule.cf = self.number()?,
                "if" => rule.condition = Some(self.expr()?),
                "when" => rule.temporal = Some(self.temporal()?),
                "then" => {
                    rule.actions.push(self.action()?);
                    while self.eat(&Tok::Comma) {
                        rule.actions.push(self.action()?);
                    }
                }
                _ => return Err(ParseError::at(kspan, "`kind`, `cf`, `if`, `when` or `then`", &key)),
            }
            seen.push(key);
            self.expect(&Tok::Semi)?;
        }
        Ok(rule)
    }

    fn action(&mut self) -> PResult<Action> {
        let target = self.attr_ref()?;
        self.expect(&Tok::Assign)?;
        let value = self.arith()?;
        let cf = if self.is_word("cf") {
            self.bump();
            Some(self.number()?)
        } else {
            None
        };
        Ok(Action { target, value, cf })
    }

    fn config_block(&mut self) -> PResult<Vec<ConfigEntry>> {
        self.expect(&Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let span = self.span();
            let key = self.ident()?;
            self.expect(&Tok::Colon)?;
            let value = match self.peek().clone() {
                Tok::Ident(w) if w == "true" || w == "false" => {
                    self.bump();
                    ConfigValue::Bool(w == "true")
                }
                Tok::Ident(w) => {
                    self.bump();
                    ConfigValue::Ident(w)
                }
                _ => ConfigValue::Number(self.number()?),
            };
            self.expect(&Tok::Semi)?;
            out.push(ConfigEntry { key, value, span });
        }
        Ok(out)
    }

    fn attr_ref(&mut self) -> PResult<AttrRef> {
        let object = self.ident()?;
        self.expect(&Tok::Dot)?;
        let attr = self.ident()?;
        Ok(AttrRef { object, attr })
    }

    // ---- static expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.conj()?;
        while self.is_word("v") {
            self.bump();
            let rhs = self.conj()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Tilde) {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        let save = self.pos;
        if let Ok(lhs) = self.arith() {
            if let Some(op) = self.cmp_op() {
                let rhs = self.arith()?;
                return Ok(Expr::Cmp { op, lhs, rhs });
            }
        }
        self.pos = save;
        if self.eat(&Tok::LParen) {
            let e = self.expr()?;
            self.expect(&Tok::RParen)?;
            return Ok(e);
        }
        if self.is_word("true") || self.is_word("false") {
            return Ok(Expr::Const(self.ident()? == "true"));
        }
        if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Dot {
            return Ok(Expr::Truthy(self.attr_ref()?));
        }
        Err(self.error("condition"))
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Gt => CmpOp::Gt,
            Tok::Lt => CmpOp::Lt,
            Tok::Eq => CmpOp::Eq,
            Tok::Ge => CmpOp::Ge,
            Tok::Le => CmpOp::Le,
            Tok::Ne => CmpOp::Ne,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn arith(&mut self) -> PResult<Arith> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Arith::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> PResult<Arith> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Arith::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> PResult<Arith> {
        let span = self.span();
        let lit = |v: Result<Value, crate::values::ValueError>| {
            v.map(Arith::Lit).map_err(|e| ParseError::at(span, "valid literal", &e.to_string()))
        };
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                Ok(match self.factor()? {
                    Arith::Lit(Value { payload: crate::values::Payload::Number(n), .. }) => {
                        Arith::Lit(Value::number(-n))
                    }
                    Arith::Lit(Value { payload: crate::values::Payload::Inexact { center, half_width }, .. }) => {
                        lit(Value::inexact(-center, half_width))?
                    }
                    other => Arith::Neg(Box::new(other)),
                })
            }
            Tok::Number(n) => {
                self.bump();
                if self.eat(&Tok::PlusMinus) {
                    let h = self.number()?;
                    lit(Value::inexact(n, h))
                } else {
                    Ok(Arith::Lit(Value::number(n)))
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Arith::Lit(Value::term(s)))
            }
            Tok::LBrace => {
                self.bump();
                let mut xs = vec![self.number()?];
                while self.eat(&Tok::Comma) {
                    xs.push(self.number()?);
                }
                self.expect(&Tok::RBrace)?;
                lit(Value::finite_set(xs))
            }
            Tok::LBracket => {
                self.bump();
                let lo = self.number()?;
                self.expect(&Tok::Comma)?;
                let hi = self.number()?;
                self.expect(&Tok::RBracket)?;
                lit(Value::range(lo, hi))
            }
            Tok::LParen => {
                self.bump();
                let a = self.arith()?;
                self.expect(&Tok::RParen)?;
                Ok(a)
            }
            Tok::Ident(w) => {
                if self.peek_at(1) == &Tok::Dot {
                    return Ok(Arith::Ref(self.attr_ref()?));
                }
                if matches!(w.as_str(), "mf" | "tri" | "trap") && self.peek_at(1) == &Tok::LParen {
                    return Ok(Arith::Lit(Value::fuzzy(self.mf_literal()?)));
                }
                self.bump();
                Ok(Arith::Lit(match w.as_str() {
                    "true" => Value::boolean(true),
                    "false" => Value::boolean(false),
                    _ => Value::term(w),
                }))
            }
            _ => Err(self.error("operand")),
        }
    }

    /// `mf((x, μ), ...)`, `tri(a, b, c)` or `trap(a, b, c, d)`.
    fn mf_literal(&mut self) -> PResult<MembershipFunction> {
        let span = self.span();
        let kind = self.ident()?;
        self.expect(&Tok::LParen)?;
        let result = match kind.as_str() {
            "mf" => {
                let mut pts = Vec::new();
                loop {
                    self.expect(&Tok::LParen)?;
                    let x = self.number()?;
                    self.expect(&Tok::Comma)?;
                    let m = self.number()?;
                    self.expect(&Tok::RParen)?;
                    pts.push((x, m));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                MembershipFunction::new(pts)
            }
            "tri" | "trap" => {
                let mut xs = vec![self.number()?];
                while self.eat(&Tok::Comma) {
                    xs.push(self.number()?);
                }
                match (kind.as_str(), xs.as_slice()) {
                    ("tri", [a, b, c]) => MembershipFunction::triangle(*a, *b, *c),
                    ("trap", [a, b, c, d]) => MembershipFunction::trapezoid(*a, *b, *c, *d),
                    _ => return Err(ParseError::at(span, "3 points for tri, 4 for trap", &format!("{}", xs.len()))),
                }
            }
            _ => return Err(ParseError::at(span, "`mf`, `tri` or `trap`", &kind)),
        };
        self.expect(&Tok::RParen)?;
        result.map_err(|e| ParseError::at(span, "valid membership function", &e.to_string()))
    }

    // ---- temporal formulas ----

    pub(crate) fn temporal(&mut self) -> PResult<TemporalFormula> {
        let mut lhs = self.t_conj()?;
        while self.is_word("v") {
            self.bump();
            let rhs = self.t_conj()?;
            lhs = TemporalFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn t_conj(&mut self) -> PResult<TemporalFormula> {
        let mut lhs = self.t_unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.t_unary()?;
            lhs = TemporalFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn t_unary(&mut self) -> PResult<TemporalFormula> {
        if self.eat(&Tok::Tilde) {
            return Ok(TemporalFormula::Not(Box::new(self.t_unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let f = self.temporal()?;
            self.expect(&Tok::RParen)?;
            return Ok(f);
        }
        let var = self.ident()?;
        if self.eat(&Tok::Dot) {
            let aspan = self.span();
            let attr = match self.ident()?.as_str() {
                "c" => TemporalAttr::Count,
                "l" => TemporalAttr::Length,
                other => return Err(ParseError::at(aspan, "`c` or `l`", other)),
            };
            let op = self.cmp_op().ok_or_else(|| self.error("comparison operator"))?;
            let value = self.integer()?;
            return Ok(TemporalFormula::Attr { var, attr, op, value });
        }
        if let Tok::Ident(w) = self.peek() {
            if let Some(rel) = AllenRel::from_letter(w) {
                self.bump();
                let rhs = self.ident()?;
                return Ok(TemporalFormula::Rel { lhs: var, rel, rhs });
            }
        }
        Ok(TemporalFormula::Var(var))
    }
}
