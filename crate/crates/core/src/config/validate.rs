//! Direct compliance checking of a configuration against a description,
//! without any solver: structure first, then every conjunct evaluated on
//! the concrete instances and connections.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::lang::model::{
    ConnectionEnd, Dsd, HostRef, Literal, Pred, PropertyBinding, SetExpr, Term,
};
use crate::lang::pretty;

use super::{Cdd, Instance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidateError {
    #[error("configuration is for `{found}`, not `{expected}`")]
    WrongDescription { expected: String, found: String },
    #[error("unknown host `{0}`")]
    UnknownHost(String),
    #[error("unknown component type `{0}`")]
    UnknownType(String),
}

/// Current values of dynamic properties, e.g. sampled by probes.
pub trait PropertySource {
    fn dynamic_property(&self, instance: &Instance, property: &str) -> Option<i64>;
}

impl PropertySource for BTreeMap<(Instance, String), i64> {
    fn dynamic_property(&self, instance: &Instance, property: &str) -> Option<i64> {
        self.get(&(instance.clone(), property.to_string())).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Depends on dynamic property values that were not supplied.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    /// `well-formedness`, `binding-completeness`, or a conjunct id such as
    /// `mathsServiceCons[4]`.
    pub check: String,
    pub predicate: String,
    pub status: Status,
    pub dynamic: bool,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplianceReport {
    pub dsd: String,
    pub checks: Vec<CheckResult>,
}

impl ComplianceReport {
    /// No check failed. Unknown (dynamic) checks do not count as failures.
    pub fn is_compliant(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    /// Structural checks and static conjuncts all pass.
    pub fn is_structurally_compliant(&self) -> bool {
        self.checks.iter().all(|c| c.dynamic || c.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for ComplianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Unknown => "unknown",
            };
            writeln!(f, "{status} {} {}", c.check, c.predicate)?;
            for w in &c.witnesses {
                writeln!(f, "  witness: {w}")?;
            }
        }
        writeln!(
            f,
            "{}",
            if self.is_compliant() { "compliant" } else { "not compliant" }
        )
    }
}

/// Checks `cdd` against `dsd`; dynamic conjuncts are reported as unknown.
pub fn validate(cdd: &Cdd, dsd: &Dsd) -> Result<ComplianceReport, ValidateError> {
    validate_with(cdd, dsd, None)
}

/// Like [`validate`], evaluating dynamic properties through `props`.
pub fn validate_with(
    cdd: &Cdd,
    dsd: &Dsd,
    props: Option<&dyn PropertySource>,
) -> Result<ComplianceReport, ValidateError> {
    if cdd.dsd != dsd.name {
        return Err(ValidateError::WrongDescription {
            expected: dsd.name.clone(),
            found: cdd.dsd.clone(),
        });
    }
    for i in &cdd.instances {
        if dsd.host(&i.host).is_none() {
            return Err(ValidateError::UnknownHost(i.host.clone()));
        }
        if dsd.component_type(&i.ctype).is_none() {
            return Err(ValidateError::UnknownType(i.ctype.clone()));
        }
    }
    let mut checks = vec![well_formedness(cdd, dsd), binding_completeness(cdd, dsd)];
    let eval = Evaluator { cdd, dsd, props };
    for (id, pred) in dsd.conjuncts() {
        let mut witnesses = Vec::new();
        let status = match eval.check(pred, &mut Vec::new(), &mut witnesses) {
            Ok(true) => Status::Pass,
            Ok(false) => Status::Fail,
            Err(Unknown) => {
                witnesses.clear();
                Status::Unknown
            }
        };
        checks.push(CheckResult {
            check: id.to_string(),
            predicate: pretty::pred(pred),
            status,
            dynamic: pred.mentions_dynamic(),
            witnesses,
        });
    }
    Ok(ComplianceReport {
        dsd: dsd.name.clone(),
        checks,
    })
}

fn structural(check: &str, predicate: &str, witnesses: Vec<String>) -> CheckResult {
    CheckResult {
        check: check.to_string(),
        predicate: predicate.to_string(),
        status: if witnesses.is_empty() { Status::Pass } else { Status::Fail },
        dynamic: false,
        witnesses,
    }
}

/// Endpoints exist, indices are contiguous from 1 and within the per-host cap.
fn well_formedness(cdd: &Cdd, dsd: &Dsd) -> CheckResult {
    let mut witnesses = Vec::new();
    let mut per_slot: BTreeMap<(&str, &str), BTreeSet<u32>> = BTreeMap::new();
    for i in &cdd.instances {
        per_slot.entry((&i.host, &i.ctype)).or_default().insert(i.index);
    }
    for ((h, t), indices) in per_slot {
        let n = indices.len() as u32;
        if indices.iter().copied().ne(1..=n) {
            witnesses.push(format!("{h}/{t}: indices {indices:?} are not contiguous from 1"));
        }
        if n > dsd.max_instances_per_host {
            witnesses.push(format!(
                "{h}/{t}: {n} instances exceed maxInstancesPerHost = {}",
                dsd.max_instances_per_host
            ));
        }
    }
    for c in &cdd.connections {
        for end in [&c.client, &c.server] {
            if !cdd.instances.contains(end) {
                witnesses.push(format!("{c}: endpoint {end} is not deployed"));
            }
        }
    }
    structural(
        "well-formedness",
        "instances are contiguous per host and type; connections join deployed instances",
        witnesses,
    )
}

/// Every required port is connected exactly once, to a provider of the
/// port's interface; no connection uses an undeclared port.
fn binding_completeness(cdd: &Cdd, dsd: &Dsd) -> CheckResult {
    let mut witnesses = Vec::new();
    let mut bound: BTreeMap<(&Instance, &str), Vec<&Instance>> = BTreeMap::new();
    for c in &cdd.connections {
        bound.entry((&c.client, &c.port)).or_default().push(&c.server);
    }
    for i in &cdd.instances {
        let ct = dsd.component_type(&i.ctype).expect("types checked");
        for port in &ct.requires {
            match bound.get(&(i, port.name.as_str())).map(Vec::as_slice) {
                None | Some([]) => witnesses.push(format!("{i}.{} is unbound", port.name)),
                Some([server]) => {
                    let provides = dsd
                        .component_type(&server.ctype)
                        .is_some_and(|s| s.provides_interface(&port.interface));
                    if !provides {
                        witnesses.push(format!(
                            "{i}.{} is bound to {server}, which does not provide {}",
                            port.name, port.interface
                        ));
                    }
                }
                Some(many) => witnesses.push(format!("{i}.{} is bound {} times", port.name, many.len())),
            }
        }
    }
    for c in &cdd.connections {
        let declared = dsd
            .component_type(&c.client.ctype)
            .is_some_and(|t| t.port(&c.port).is_some());
        if !declared {
            witnesses.push(format!("{c}: `{}` has no required port `{}`", c.client.ctype, c.port));
        }
    }
    structural(
        "binding-completeness",
        "every required port is bound exactly once to a compatible provider",
        witnesses,
    )
}

/// A dynamic property had no value.
#[derive(Debug)]
struct Unknown;

#[derive(Debug, Clone, Copy)]
enum Value<'a> {
    Instance(&'a Instance),
    Host(&'a str),
}

type Scope<'s, 'c> = Vec<(&'s str, Value<'c>)>;

struct Evaluator<'a> {
    cdd: &'a Cdd,
    dsd: &'a Dsd,
    props: Option<&'a dyn PropertySource>,
}

impl<'a> Evaluator<'a> {
    fn check<'p>(&self, p: &'p Pred, scope: &mut Scope<'p, 'a>, witnesses: &mut Vec<String>) -> Result<bool, Unknown> {
        match p {
            Pred::And(items) => {
                let mut ok = true;
                for i in items {
                    ok &= self.check(i, scope, witnesses)?;
                }
                Ok(ok)
            }
            Pred::Or(items) => {
                let mut inner = Vec::new();
                for i in items {
                    if self.check(i, scope, &mut inner)? {
                        return Ok(true);
                    }
                }
                witnesses.push(format!("no alternative holds ({})", inner.join("; ")));
                Ok(false)
            }
            Pred::Not(inner) => {
                let holds = self.check(inner, scope, &mut Vec::new())?;
                if holds {
                    witnesses.push(format!("{} holds", pretty::pred(inner)));
                }
                Ok(!holds)
            }
            Pred::ForallInstances { types, var, body, .. } => {
                let mut ok = true;
                for i in self.cdd.instances.iter().filter(|i| types.contains(&i.ctype)) {
                    scope.push((var, Value::Instance(i)));
                    let mut inner = Vec::new();
                    let r = self.check(body, scope, &mut inner);
                    scope.pop();
                    if !r? {
                        ok = false;
                        witnesses.push(format!("{var} = {i}: {}", inner.join("; ")));
                    }
                }
                Ok(ok)
            }
            Pred::ForallHosts { var, body } => {
                let mut ok = true;
                for h in &self.dsd.hosts {
                    scope.push((var, Value::Host(&h.name)));
                    let mut inner = Vec::new();
                    let r = self.check(body, scope, &mut inner);
                    scope.pop();
                    if !r? {
                        ok = false;
                        witnesses.push(format!("{var} = {}: {}", h.name, inner.join("; ")));
                    }
                }
                Ok(ok)
            }
            Pred::Compare { lhs, op, rhs } => {
                let l = self.term(lhs, scope)?;
                let r = self.term(rhs, scope)?;
                let holds = op.holds(l, r);
                if !holds {
                    witnesses.push(format!(
                        "{} = {l}, {} = {r}, {l} {} {r} is false",
                        pretty::term(lhs),
                        pretty::term(rhs),
                        op.as_str()
                    ));
                }
                Ok(holds)
            }
        }
    }

    fn instance(&self, scope: &Scope<'_, 'a>, var: &str) -> &'a Instance {
        match scope.iter().rev().find(|(n, _)| *n == var) {
            Some((_, Value::Instance(i))) => i,
            _ => panic!("`{var}` is not bound to an instance; resolution guarantees it"),
        }
    }

    fn host_value(&self, host: &str, property: &str) -> i64 {
        self.dsd
            .host(host)
            .and_then(|h| h.int_property(property))
            .unwrap_or_else(|| panic!("host `{host}` has no integer property `{property}`"))
    }

    fn term(&self, t: &Term, scope: &Scope<'_, 'a>) -> Result<i64, Unknown> {
        Ok(match t {
            Term::Int(k) => *k,
            Term::HostOf { var, property } => self.host_value(&self.instance(scope, var).host, property),
            Term::HostProperty { var, property } => match scope.iter().rev().find(|(n, _)| n == var) {
                Some((_, Value::Host(h))) => self.host_value(h, property),
                _ => panic!("`{var}` is not bound to a host"),
            },
            Term::InstanceProperty { var, property, .. } => {
                let i = self.instance(scope, var);
                let ct = self.dsd.component_type(&i.ctype).expect("types checked");
                match ct.property(property).map(|p| &p.binding) {
                    Some(PropertyBinding::Literal(Literal::Int(k))) => *k,
                    Some(PropertyBinding::ProvidedBy(_)) => self
                        .props
                        .and_then(|p| p.dynamic_property(i, property))
                        .ok_or(Unknown)?,
                    _ => panic!("`{}` has no integer property `{property}`", ct.name),
                }
            }
            Term::Card(set) => self.card(set, scope) as i64,
        })
    }

    fn card(&self, set: &SetExpr, scope: &Scope<'_, 'a>) -> usize {
        match set {
            SetExpr::Connections { var, member, end } => {
                let i = self.instance(scope, var);
                match end {
                    ConnectionEnd::Incoming => self
                        .cdd
                        .connections
                        .iter()
                        .filter(|c| {
                            &c.server == i
                                && self
                                    .dsd
                                    .component_type(&c.client.ctype)
                                    .and_then(|t| t.port(&c.port))
                                    .is_some_and(|p| &p.interface == member)
                        })
                        .count(),
                    ConnectionEnd::Outgoing => self
                        .cdd
                        .connections
                        .iter()
                        .filter(|c| &c.client == i && &c.port == member)
                        .count(),
                }
            }
            SetExpr::HostComponents { host } => {
                let name = match host {
                    HostRef::Named(n) => n.as_str(),
                    HostRef::Var(v) => match scope.iter().rev().find(|(n, _)| n == v) {
                        Some((_, Value::Host(h))) => h,
                        _ => panic!("`{v}` is not bound to a host"),
                    },
                };
                self.cdd.instances_on(name).count()
            }
            SetExpr::InstancesOf { types, .. } => self
                .cdd
                .instances
                .iter()
                .filter(|i| types.contains(&i.ctype))
                .count(),
        }
    }
}

/// Value of a closed term (no free variables) on `cdd`, e.g. an
/// optimization objective. `None` if it needs an unknown dynamic value.
pub fn evaluate_term(cdd: &Cdd, dsd: &Dsd, term: &Term) -> Option<i64> {
    Evaluator { cdd, dsd, props: None }.term(term, &Vec::new()).ok()
}
