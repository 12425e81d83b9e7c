//! The resolved desired-state description.
//!
//! Everything here is position-free: two sources that differ only in
//! layout resolve to equal values.

use std::collections::BTreeMap;

pub use super::ast::{CmpOp, Direction, Literal, PropertyKind, ValueType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interface {
    pub name: String,
    pub impl_type: String,
    pub specification: String,
    pub implementation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Port {
    pub name: String,
    pub interface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MethodRef {
    pub object: String,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyBinding {
    /// Template declarations only.
    Unbound,
    Literal(Literal),
    ProvidedBy(MethodRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub kind: PropertyKind,
    pub value_type: ValueType,
    pub binding: PropertyBinding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    pub provides: Vec<String>,
    pub requires: Vec<Port>,
    pub properties: Vec<Property>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instantiate {
    pub object: String,
    /// Dotted class name, e.g. `com.math.MathsService`.
    pub class: String,
    pub args: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Satisfy {
    pub interface: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortBinding {
    pub port: String,
    pub setter: MethodRef,
}

/// A concrete component type with its template already merged in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentType {
    pub name: String,
    pub extends: Option<String>,
    pub provides: Vec<String>,
    pub requires: Vec<Port>,
    pub implementation: String,
    pub instantiate: Instantiate,
    pub satisfy: Vec<Satisfy>,
    pub bind: Vec<PortBinding>,
    pub initialise: Vec<MethodRef>,
    pub destroy: Vec<MethodRef>,
    pub properties: Vec<Property>,
}

impl ComponentType {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.requires.iter().find(|p| p.name == name)
    }

    pub fn provides_interface(&self, iface: &str) -> bool {
        self.provides.iter().any(|p| p == iface)
    }

    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostTemplate {
    pub name: String,
    pub properties: BTreeMap<String, Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Host {
    pub name: String,
    pub extends: Option<String>,
    /// Merged: template values overridden by the host's own.
    pub properties: BTreeMap<String, Literal>,
}

impl Host {
    pub fn int_property(&self, name: &str) -> Option<i64> {
        match self.properties.get(name) {
            Some(Literal::Int(n)) => Some(*n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
    /// Ranges over deployed instances of every concrete type in `types`.
    ForallInstances {
        type_name: String,
        types: Vec<String>,
        var: String,
        body: Box<Pred>,
    },
    ForallHosts {
        var: String,
        body: Box<Pred>,
    },
    Compare {
        lhs: Term,
        op: CmpOp,
        rhs: Term,
    },
}

impl Pred {
    /// Top-level conjuncts, with nested conjunctions flattened.
    pub fn conjuncts(&self) -> Vec<&Pred> {
        match self {
            Pred::And(items) => items.iter().flat_map(|p| p.conjuncts()).collect(),
            other => vec![other],
        }
    }

    pub fn mentions_dynamic(&self) -> bool {
        match self {
            Pred::And(items) | Pred::Or(items) => items.iter().any(Pred::mentions_dynamic),
            Pred::Not(p) => p.mentions_dynamic(),
            Pred::ForallInstances { body, .. } | Pred::ForallHosts { body, .. } => {
                body.mentions_dynamic()
            }
            Pred::Compare { lhs, rhs, .. } => lhs.is_dynamic() || rhs.is_dynamic(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnectionEnd {
    /// `v.I` names an interface `v` provides: connections into `v`.
    Incoming,
    /// `v.p` names a required port of `v`: connections out of `v`.
    Outgoing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HostRef {
    Var(String),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    Connections {
        var: String,
        member: String,
        end: ConnectionEnd,
    },
    /// `getComponents(h)`, or its synonym `components(h)`.
    HostComponents { host: HostRef },
    InstancesOf {
        type_name: String,
        types: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Int(i64),
    Card(SetExpr),
    /// `getHost(v).p` for an instance variable `v`.
    HostOf { var: String, property: String },
    /// `h.p` for a host variable `h`.
    HostProperty { var: String, property: String },
    /// `v.p` for an instance variable `v`.
    InstanceProperty {
        var: String,
        property: String,
        dynamic: bool,
    },
}

impl Term {
    pub fn is_dynamic(&self) -> bool {
        matches!(self, Term::InstanceProperty { dynamic: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    pub name: String,
    pub body: Pred,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub direction: Direction,
    pub term: Term,
}

pub const DEFAULT_MAX_INSTANCES_PER_HOST: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dsd {
    /// Identifies the description across evolutions; usually the file stem.
    pub name: String,
    pub interfaces: Vec<Interface>,
    pub templates: Vec<Template>,
    pub component_types: Vec<ComponentType>,
    pub host_templates: Vec<HostTemplate>,
    pub hosts: Vec<Host>,
    pub constraint_sets: Vec<ConstraintSet>,
    pub objective: Option<Objective>,
    pub max_instances_per_host: u32,
    /// Whether `max_instances_per_host` was written in the source.
    pub explicit_max_instances: bool,
}

/// Identifies one top-level conjunct of a constraint set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConjunctId {
    pub set: String,
    /// 1-based position among the set's flattened conjuncts.
    pub index: usize,
}

impl std::fmt::Display for ConjunctId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}[{}]", self.set, self.index)
    }
}

impl Dsd {
    pub fn component_type(&self, name: &str) -> Option<&ComponentType> {
        self.component_types.iter().find(|c| c.name == name)
    }

    pub fn host(&self, name: &str) -> Option<&Host> {
        self.hosts.iter().find(|h| h.name == name)
    }

    pub fn template(&self, name: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.name == name)
    }

    pub fn interface(&self, name: &str) -> Option<&Interface> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    /// Concrete types named by `name`: the type itself, or every type
    /// extending the template `name`.
    pub fn concrete_types(&self, name: &str) -> Vec<String> {
        if self.component_type(name).is_some() {
            return vec![name.to_string()];
        }
        self.component_types
            .iter()
            .filter(|c| c.extends.as_deref() == Some(name))
            .map(|c| c.name.clone())
            .collect()
    }

    /// All conjuncts of all constraint sets, in source order.
    pub fn conjuncts(&self) -> Vec<(ConjunctId, &Pred)> {
        self.constraint_sets
            .iter()
            .flat_map(|cs| {
                cs.body
                    .conjuncts()
                    .into_iter()
                    .enumerate()
                    .map(move |(i, p)| {
                        (
                            ConjunctId {
                                set: cs.name.clone(),
                                index: i + 1,
                            },
                            p,
                        )
                    })
            })
            .collect()
    }

    pub fn with_max_instances_per_host(mut self, n: u32) -> Self {
        self.max_instances_per_host = n;
        self.explicit_max_instances = true;
        self
    }

    pub fn without_hosts<'a>(&self, removed: impl IntoIterator<Item = &'a str>) -> Dsd {
        let removed: Vec<&str> = removed.into_iter().collect();
        let mut out = self.clone();
        out.hosts.retain(|h| !removed.contains(&h.name.as_str()));
        out
    }
}
