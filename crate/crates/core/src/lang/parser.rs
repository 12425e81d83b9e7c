//! Recursive-descent parser producing an unresolved [`SourceFile`].
//!
//! Declarations are introduced by a keyword and their bodies are
//! parenthesised. Clauses inside a body are separated by whitespace or
//! optional commas; newlines carry no meaning.

use super::ast::*;
use super::diag::{Diagnostic, Pos};
use super::lexer::{Keyword, Token, TokenKind};

pub fn parse(tokens: &[Token]) -> Result<SourceFile, Diagnostic> {
    Parser::new(tokens).source_file()
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        Self { tokens, pos: 0 }
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn here(&self) -> Pos {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| t.pos)
            .unwrap_or_default()
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        match self.peek() {
            Some(found) => Diagnostic::error(self.here(), format!("expected {expected}, found {found}")),
            None => Diagnostic::error(self.here(), format!("expected {expected}, found end of input")),
        }
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.peek() == Some(&TokenKind::Keyword(kw))
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Pos> {
        let pos = self.here();
        if self.eat_kw(kw) {
            Ok(pos)
        } else {
            Err(self.unexpected(&format!("keyword `{}`", kw.as_str())))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Pos> {
        let pos = self.here();
        if self.eat(&kind) {
            Ok(pos)
        } else {
            Err(self.unexpected(&kind.to_string()))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let pos = self.here();
                self.pos += 1;
                Ok(Ident {
                    name: name.clone(),
                    pos,
                })
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Str(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.unexpected("string literal")),
        }
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek() {
            Some(TokenKind::Str(s)) => {
                self.pos += 1;
                Ok(Literal::Str(s.clone()))
            }
            Some(TokenKind::Int(n)) => {
                self.pos += 1;
                Ok(Literal::Int(*n))
            }
            _ => Err(self.unexpected("string or integer literal")),
        }
    }

    fn source_file(&mut self) -> PResult<SourceFile> {
        let mut decls = Vec::new();
        while self.peek().is_some() {
            decls.push(self.decl()?);
        }
        Ok(SourceFile { decls })
    }

    fn decl(&mut self) -> PResult<Decl> {
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::Interface)) => self.interface().map(Decl::Interface),
            Some(TokenKind::Keyword(Keyword::Template)) => self.template().map(Decl::Template),
            Some(TokenKind::Keyword(Keyword::Component)) => {
                self.component_type().map(Decl::ComponentType)
            }
            Some(TokenKind::Keyword(Keyword::Host)) => {
                if self.peek_at(1) == Some(&TokenKind::Keyword(Keyword::Template)) {
                    self.host_template().map(Decl::HostTemplate)
                } else {
                    self.host().map(Decl::Host)
                }
            }
            Some(TokenKind::Keyword(Keyword::ConstraintSet)) => {
                self.constraint_set().map(Decl::ConstraintSet)
            }
            Some(TokenKind::Keyword(Keyword::Optimise)) => self.optimise().map(Decl::Optimise),
            Some(TokenKind::Keyword(Keyword::Deployment)) => {
                self.deployment().map(Decl::Deployment)
            }
            _ => Err(self.unexpected("a declaration")),
        }
    }

    fn interface(&mut self) -> PResult<InterfaceAst> {
        self.expect_kw(Keyword::Interface)?;
        let name = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let mut fields = Vec::new();
        while !self.eat(&TokenKind::RParen) {
            let pos = self.here();
            let key = match self.peek() {
                Some(TokenKind::Keyword(Keyword::Type)) => "type".to_string(),
                Some(TokenKind::Keyword(Keyword::Implementation)) => "implementation".to_string(),
                Some(TokenKind::Ident(s)) if s == "specification" => s.clone(),
                _ => return Err(self.unexpected("`type`, `specification` or `implementation`")),
            };
            self.pos += 1;
            self.expect(TokenKind::Eq)?;
            let value = self.string()?;
            fields.push((Ident { name: key, pos }, value));
            self.eat(&TokenKind::Comma);
        }
        Ok(InterfaceAst { name, fields })
    }

    fn provides_clause(&mut self, out: &mut Vec<Ident>) -> PResult<()> {
        self.expect_kw(Keyword::Provides)?;
        loop {
            self.expect_kw(Keyword::Interface)?;
            out.push(self.ident()?);
            if !(self.peek() == Some(&TokenKind::Comma)
                && self.peek_at(1) == Some(&TokenKind::Keyword(Keyword::Interface)))
            {
                return Ok(());
            }
            self.pos += 1;
        }
    }

    fn requires_clause(&mut self, out: &mut Vec<PortAst>) -> PResult<()> {
        self.expect_kw(Keyword::Requires)?;
        loop {
            let interface = self.ident()?;
            let port = self.ident()?;
            out.push(PortAst { interface, port });
            if !(self.peek() == Some(&TokenKind::Comma)
                && matches!(self.peek_at(1), Some(TokenKind::Ident(_))))
            {
                return Ok(());
            }
            self.pos += 1;
        }
    }

    fn template(&mut self) -> PResult<TemplateAst> {
        self.expect_kw(Keyword::Template)?;
        let name = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let mut t = TemplateAst {
            name,
            provides: Vec::new(),
            requires: Vec::new(),
            properties: Vec::new(),
        };
        while !self.eat(&TokenKind::RParen) {
            match self.peek() {
                Some(TokenKind::Keyword(Keyword::Provides)) => self.provides_clause(&mut t.provides)?,
                Some(TokenKind::Keyword(Keyword::Requires)) => self.requires_clause(&mut t.requires)?,
                Some(TokenKind::Keyword(Keyword::Properties)) => {
                    self.properties_clause(&mut t.properties)?
                }
                _ => return Err(self.unexpected("`provides`, `requires` or `properties`")),
            }
            self.eat(&TokenKind::Comma);
        }
        Ok(t)
    }

    fn properties_clause(&mut self, out: &mut Vec<PropertyAst>) -> PResult<()> {
        self.expect_kw(Keyword::Properties)?;
        self.expect(TokenKind::LParen)?;
        while !self.eat(&TokenKind::RParen) {
            out.push(self.property()?);
            self.eat(&TokenKind::Comma);
        }
        Ok(())
    }

    fn property(&mut self) -> PResult<PropertyAst> {
        let kind = if self.eat_kw(Keyword::Constant) {
            Some(PropertyKind::Constant)
        } else if self.eat_kw(Keyword::Dynamic) {
            Some(PropertyKind::Dynamic)
        } else {
            None
        };
        let value_type = if kind.is_some() {
            let ty = self.ident()?;
            match ty.name.as_str() {
                "int" => Some(ValueType::Int),
                "string" => Some(ValueType::String),
                other => {
                    return Err(Diagnostic::error(
                        ty.pos,
                        format!("expected property type `int` or `string`, found `{other}`"),
                    ))
                }
            }
        } else {
            None
        };
        let name = self.ident()?;
        let binding = if self.eat(&TokenKind::Eq) {
            Some(PropertyBindingAst::Literal(self.literal()?))
        } else if self.eat_kw(Keyword::ProvidedBy) {
            Some(PropertyBindingAst::ProvidedBy(self.method_ref()?))
        } else {
            None
        };
        if kind.is_none() && binding.is_none() {
            return Err(self.unexpected("`=` or `providedBy`"));
        }
        Ok(PropertyAst {
            name,
            kind,
            value_type,
            binding,
        })
    }

    /// `object.method()`
    fn method_ref(&mut self) -> PResult<MethodRefAst> {
        let object = self.ident()?;
        self.expect(TokenKind::Dot)?;
        let method = self.ident()?;
        self.expect(TokenKind::LParen)?;
        self.expect(TokenKind::RParen)?;
        Ok(MethodRefAst { object, method })
    }

    fn component_type(&mut self) -> PResult<ComponentTypeAst> {
        self.expect_kw(Keyword::Component)?;
        self.expect_kw(Keyword::Type)?;
        let name = self.ident()?;
        let extends = if self.eat_kw(Keyword::Extends) {
            Some(self.ident()?)
        } else {
            None
        };
        self.expect(TokenKind::LParen)?;
        let mut c = ComponentTypeAst {
            name,
            extends,
            provides: Vec::new(),
            requires: Vec::new(),
            implementation: None,
            instantiate: None,
            satisfy: Vec::new(),
            bind: Vec::new(),
            initialise: Vec::new(),
            destroy: Vec::new(),
            properties: Vec::new(),
        };
        while !self.eat(&TokenKind::RParen) {
            let pos = self.here();
            match self.peek() {
                Some(TokenKind::Keyword(Keyword::Provides)) => self.provides_clause(&mut c.provides)?,
                Some(TokenKind::Keyword(Keyword::Requires)) => self.requires_clause(&mut c.requires)?,
                Some(TokenKind::Keyword(Keyword::Properties)) => {
                    self.properties_clause(&mut c.properties)?
                }
                Some(TokenKind::Keyword(Keyword::Implementation)) => {
                    self.pos += 1;
                    let url = self.string()?;
                    if c.implementation.is_some() {
                        return Err(Diagnostic::error(pos, "duplicate `implementation` clause"));
                    }
                    c.implementation = Some((url, pos));
                }
                Some(TokenKind::Keyword(Keyword::Instantiate)) => {
                    self.pos += 1;
                    let inst = self.instantiate()?;
                    if c.instantiate.is_some() {
                        return Err(Diagnostic::error(pos, "duplicate `instantiate` clause"));
                    }
                    c.instantiate = Some(inst);
                }
                Some(TokenKind::Keyword(Keyword::Satisfy)) => {
                    self.pos += 1;
                    let interface = self.ident()?;
                    self.expect_kw(Keyword::Using)?;
                    let object = self.ident()?;
                    c.satisfy.push(SatisfyAst { interface, object });
                }
                Some(TokenKind::Keyword(Keyword::Bind)) => {
                    self.pos += 1;
                    let port = self.ident()?;
                    self.expect_kw(Keyword::With)?;
                    let setter = self.method_ref()?;
                    c.bind.push(BindAst { port, setter });
                }
                Some(TokenKind::Keyword(Keyword::Initialise)) => {
                    self.pos += 1;
                    c.initialise.push(self.method_ref()?);
                }
                Some(TokenKind::Keyword(Keyword::Destroy)) => {
                    self.pos += 1;
                    c.destroy.push(self.method_ref()?);
                }
                _ => return Err(self.unexpected("a component type clause")),
            }
            self.eat(&TokenKind::Comma);
        }
        Ok(c)
    }

    /// `obj with a.b.Class(args)`
    fn instantiate(&mut self) -> PResult<InstantiateAst> {
        let object = self.ident()?;
        self.expect_kw(Keyword::With)?;
        let mut class = vec![self.ident()?];
        while self.eat(&TokenKind::Dot) {
            class.push(self.ident()?);
        }
        self.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                args.push(self.literal()?);
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                self.expect(TokenKind::Comma)?;
            }
        }
        Ok(InstantiateAst {
            object,
            class,
            args,
        })
    }

    fn host_properties(&mut self) -> PResult<Vec<(Ident, Literal)>> {
        let mut props = Vec::new();
        if !self.eat(&TokenKind::LParen) {
            return Ok(props);
        }
        while !self.eat(&TokenKind::RParen) {
            let name = self.ident()?;
            self.expect(TokenKind::Eq)?;
            props.push((name, self.literal()?));
            self.eat(&TokenKind::Comma);
        }
        Ok(props)
    }

    fn host_template(&mut self) -> PResult<HostTemplateAst> {
        self.expect_kw(Keyword::Host)?;
        self.expect_kw(Keyword::Template)?;
        let name = self.ident()?;
        let properties = self.host_properties()?;
        Ok(HostTemplateAst { name, properties })
    }

    fn host(&mut self) -> PResult<HostAst> {
        self.expect_kw(Keyword::Host)?;
        let name = self.ident()?;
        let extends = if self.eat_kw(Keyword::Extends) {
            Some(self.ident()?)
        } else {
            None
        };
        let properties = self.host_properties()?;
        Ok(HostAst {
            name,
            extends,
            properties,
        })
    }

    fn constraint_set(&mut self) -> PResult<ConstraintSetAst> {
        self.expect_kw(Keyword::ConstraintSet)?;
        let name = self.ident()?;
        self.expect(TokenKind::LParen)?;
        if self.eat(&TokenKind::RParen) {
            return Ok(ConstraintSetAst { name, body: None });
        }
        let body = self.expr()?;
        self.expect(TokenKind::RParen)?;
        Ok(ConstraintSetAst {
            name,
            body: Some(body),
        })
    }

    fn optimise(&mut self) -> PResult<OptimiseAst> {
        let pos = self.expect_kw(Keyword::Optimise)?;
        let direction = if self.eat_kw(Keyword::Minimize) {
            Direction::Minimize
        } else if self.eat_kw(Keyword::Maximize) {
            Direction::Maximize
        } else {
            return Err(self.unexpected("`minimize` or `maximize`"));
        };
        let term = self.term()?;
        Ok(OptimiseAst {
            direction,
            term,
            pos,
        })
    }

    fn deployment(&mut self) -> PResult<DeploymentAst> {
        self.expect_kw(Keyword::Deployment)?;
        self.expect(TokenKind::LParen)?;
        let mut settings = Vec::new();
        while !self.eat(&TokenKind::RParen) {
            let name = self.ident()?;
            self.expect(TokenKind::Eq)?;
            let value = match self.peek() {
                Some(TokenKind::Int(n)) => *n,
                _ => return Err(self.unexpected("integer")),
            };
            self.pos += 1;
            settings.push((name, value));
            self.eat(&TokenKind::Comma);
        }
        Ok(DeploymentAst { settings })
    }

    // Expressions: or_expr := and_expr ("or" and_expr)*
    fn expr(&mut self) -> PResult<ExprAst> {
        let first = self.and_expr()?;
        if !self.at_kw(Keyword::Or) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_kw(Keyword::Or) {
            items.push(self.and_expr()?);
        }
        Ok(ExprAst::Or(items))
    }

    fn and_expr(&mut self) -> PResult<ExprAst> {
        let first = self.unary()?;
        if !self.at_kw(Keyword::And) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_kw(Keyword::And) {
            items.push(self.unary()?);
        }
        Ok(ExprAst::And(items))
    }

    fn unary(&mut self) -> PResult<ExprAst> {
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::Not)) => {
                self.pos += 1;
                Ok(ExprAst::Not(Box::new(self.unary()?)))
            }
            Some(TokenKind::Keyword(Keyword::Forall)) => self.forall(),
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            _ => self.comparison(),
        }
    }

    fn forall(&mut self) -> PResult<ExprAst> {
        self.expect_kw(Keyword::Forall)?;
        let quantifier = if self.eat_kw(Keyword::Host) {
            QuantifierAst::Host
        } else {
            QuantifierAst::Type(self.ident()?)
        };
        let var = self.ident()?;
        self.expect_kw(Keyword::In)?;
        self.expect_kw(Keyword::Deployment)?;
        self.expect(TokenKind::LParen)?;
        let body = self.expr()?;
        self.expect(TokenKind::RParen)?;
        Ok(ExprAst::Forall {
            quantifier,
            var,
            body: Box::new(body),
        })
    }

    fn comparison(&mut self) -> PResult<ExprAst> {
        let lhs = self.term()?;
        let pos = self.here();
        let op = match self.peek() {
            Some(TokenKind::Le) => CmpOp::Le,
            Some(TokenKind::Ge) => CmpOp::Ge,
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Gt) => CmpOp::Gt,
            Some(TokenKind::Eq) => CmpOp::Eq,
            _ => return Err(self.unexpected("comparison operator")),
        };
        self.pos += 1;
        let rhs = self.term()?;
        Ok(ExprAst::Compare { lhs, op, rhs, pos })
    }

    fn term(&mut self) -> PResult<TermAst> {
        let pos = self.here();
        match self.peek() {
            Some(TokenKind::Int(n)) => {
                self.pos += 1;
                Ok(TermAst::Int(*n, pos))
            }
            Some(TokenKind::Ident(name))
                if name == "card" && self.peek_at(1) == Some(&TokenKind::LParen) =>
            {
                self.pos += 2;
                let set = self.set_term()?;
                self.expect(TokenKind::RParen)?;
                Ok(TermAst::Card(set, pos))
            }
            Some(TokenKind::Ident(name))
                if name == "getHost" && self.peek_at(1) == Some(&TokenKind::LParen) =>
            {
                self.pos += 2;
                let var = self.ident()?;
                self.expect(TokenKind::RParen)?;
                self.expect(TokenKind::Dot)?;
                let property = self.ident()?;
                Ok(TermAst::HostOf { var, property })
            }
            Some(TokenKind::Ident(_)) => {
                let var = self.ident()?;
                self.expect(TokenKind::Dot)?;
                let property = self.ident()?;
                Ok(TermAst::Property { var, property })
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn set_term(&mut self) -> PResult<SetAst> {
        let func = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let set = match func.name.as_str() {
            "connections" => {
                let var = self.ident()?;
                self.expect(TokenKind::Dot)?;
                let member = self.ident()?;
                SetAst::Connections { var, member }
            }
            "getComponents" | "components" => SetAst::Components {
                host: self.ident()?,
            },
            "instancesOf" => {
                let type_name = self.ident()?;
                if self.eat_kw(Keyword::In) {
                    self.expect_kw(Keyword::Deployment)?;
                }
                SetAst::InstancesOf { type_name }
            }
            other => {
                return Err(Diagnostic::error(
                    func.pos,
                    format!(
                        "unknown set function `{other}`; expected `connections`, `getComponents`, `components` or `instancesOf`"
                    ),
                ))
            }
        };
        self.expect(TokenKind::RParen)?;
        Ok(set)
    }
}
