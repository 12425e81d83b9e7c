//! Unresolved syntax tree. Every name carries the position it was written at
//! so resolution errors can point back into the source.

use super::diag::Pos;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceFile {
    pub decls: Vec<Decl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Interface(InterfaceAst),
    Template(TemplateAst),
    ComponentType(ComponentTypeAst),
    HostTemplate(HostTemplateAst),
    Host(HostAst),
    ConstraintSet(ConstraintSetAst),
    Optimise(OptimiseAst),
    Deployment(DeploymentAst),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfaceAst {
    pub name: Ident,
    /// `(key, value)` pairs in source order; keys are `type`,
    /// `specification` and `implementation`.
    pub fields: Vec<(Ident, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortAst {
    pub interface: Ident,
    pub port: Ident,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropertyKind {
    Constant,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Int,
    String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodRefAst {
    pub object: Ident,
    pub method: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyBindingAst {
    Literal(Literal),
    ProvidedBy(MethodRefAst),
}

/// Either a declaration (`constant string vendor`), a binding
/// (`vendor = "x"`, `qps providedBy impl.qps()`), or both at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyAst {
    pub name: Ident,
    pub kind: Option<PropertyKind>,
    pub value_type: Option<ValueType>,
    pub binding: Option<PropertyBindingAst>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateAst {
    pub name: Ident,
    pub provides: Vec<Ident>,
    pub requires: Vec<PortAst>,
    pub properties: Vec<PropertyAst>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstantiateAst {
    pub object: Ident,
    pub class: Vec<Ident>,
    pub args: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatisfyAst {
    pub interface: Ident,
    pub object: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindAst {
    pub port: Ident,
    pub setter: MethodRefAst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentTypeAst {
    pub name: Ident,
    pub extends: Option<Ident>,
    pub provides: Vec<Ident>,
    pub requires: Vec<PortAst>,
    pub implementation: Option<(String, Pos)>,
    pub instantiate: Option<InstantiateAst>,
    pub satisfy: Vec<SatisfyAst>,
    pub bind: Vec<BindAst>,
    pub initialise: Vec<MethodRefAst>,
    pub destroy: Vec<MethodRefAst>,
    pub properties: Vec<PropertyAst>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostTemplateAst {
    pub name: Ident,
    pub properties: Vec<(Ident, Literal)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostAst {
    pub name: Ident,
    pub extends: Option<Ident>,
    pub properties: Vec<(Ident, Literal)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSetAst {
    pub name: Ident,
    pub body: Option<ExprAst>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimiseAst {
    pub direction: Direction,
    pub term: TermAst,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentAst {
    pub settings: Vec<(Ident, i64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Eq => "=",
        }
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Eq => lhs == rhs,
        }
    }

    /// The operator `op'` with `!(a op b) == (a op' b)`, if one exists.
    pub fn negated(self) -> Option<CmpOp> {
        match self {
            CmpOp::Le => Some(CmpOp::Gt),
            CmpOp::Ge => Some(CmpOp::Lt),
            CmpOp::Lt => Some(CmpOp::Ge),
            CmpOp::Gt => Some(CmpOp::Le),
            CmpOp::Eq => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuantifierAst {
    Host,
    Type(Ident),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprAst {
    And(Vec<ExprAst>),
    Or(Vec<ExprAst>),
    Not(Box<ExprAst>),
    Forall {
        quantifier: QuantifierAst,
        var: Ident,
        body: Box<ExprAst>,
    },
    Compare {
        lhs: TermAst,
        op: CmpOp,
        rhs: TermAst,
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermAst {
    Int(i64, Pos),
    Card(SetAst, Pos),
    /// `getHost(v).p`
    HostOf { var: Ident, property: Ident },
    /// `v.p`
    Property { var: Ident, property: Ident },
}

impl TermAst {
    pub fn pos(&self) -> Pos {
        match self {
            TermAst::Int(_, p) | TermAst::Card(_, p) => *p,
            TermAst::HostOf { var, .. } | TermAst::Property { var, .. } => var.pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetAst {
    /// `connections(v.I)`
    Connections { var: Ident, member: Ident },
    /// `getComponents(h)` or `components(h)`
    Components { host: Ident },
    /// `instancesOf(T in deployment)`
    InstancesOf { type_name: Ident },
}
