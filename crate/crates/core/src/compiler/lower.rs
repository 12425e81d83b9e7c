//! Lowering of constraint-set predicates onto a generated model.
//!
//! Quantifiers are unrolled over potential instances and hosts. Each
//! comparison becomes one or two rows `E ≤ 0` over placement and connection
//! variables; under instance quantifiers the row must hold only if the
//! bound instances exist, which is expressed in one of three ways:
//!
//! * statically false rows forbid the bound instances outright;
//! * rows whose variables all vanish when a bound instance is absent (its
//!   own connections) need no guard at all;
//! * anything else is guarded big-M style: `E + M·Σ exist ≤ M·k`.

use std::collections::BTreeMap;

use crate::csp::{Relation, VarId};
use crate::lang::model::{CmpOp, ConnectionEnd, Dsd, HostRef, Literal, Pred, PropertyBinding, SetExpr, Term};
use crate::lang::pretty;

use super::{CompileError, ConjunctReport, Lowering, SpecializedCsp};

/// Kinds of constraint a conjunct can turn into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    /// A potential instance for which the predicate is statically false is
    /// forbidden from existing.
    Exclusion,
    /// An unguarded linear row.
    Linear,
    /// A per-instance row over the instance's own connections.
    Incident,
    /// A row guarded by the existence of the quantified instances.
    Guarded,
    /// The predicate is false regardless of the configuration.
    Contradiction,
}

impl Family {
    pub fn describe(self) -> &'static str {
        match self {
            Family::Exclusion => "existence exclusion (placement fixed to 0)",
            Family::Linear => "linear row over placement/connection sums",
            Family::Incident => "per-instance cap over its own connections",
            Family::Guarded => "row guarded by instance existence (big-M)",
            Family::Contradiction => "contradiction (model has no solutions)",
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Binding {
    Instance(usize),
    Host(usize),
}

#[derive(Debug, Clone, Default)]
struct LinExpr {
    terms: Vec<(i64, VarId)>,
    constant: i64,
}

impl LinExpr {
    fn constant(k: i64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: k,
        }
    }

    fn scaled(mut self, k: i64) -> Self {
        for t in &mut self.terms {
            t.0 *= k;
        }
        self.constant *= k;
        self
    }

    fn plus(mut self, other: LinExpr) -> Self {
        self.terms.extend(other.terms);
        self.constant += other.constant;
        self.normalize();
        self
    }

    fn normalize(&mut self) {
        self.terms.sort_by_key(|&(_, v)| v);
        let mut out: Vec<(i64, VarId)> = Vec::with_capacity(self.terms.len());
        for &(a, v) in &self.terms {
            match out.last_mut() {
                Some(last) if last.1 == v => last.0 += a,
                _ => out.push((a, v)),
            }
        }
        out.retain(|&(a, _)| a != 0);
        self.terms = out;
    }

    /// Largest value over binary variables.
    fn max(&self) -> i64 {
        self.constant + self.terms.iter().map(|&(a, _)| a.max(0)).sum::<i64>()
    }
}

struct Lowerer<'a> {
    dsd: &'a Dsd,
    csp: &'a mut SpecializedCsp,
    families: BTreeMap<Family, usize>,
}

type Scope<'s> = Vec<(&'s str, Binding)>;

pub(super) fn lower_constraints(dsd: &Dsd, csp: &mut SpecializedCsp) -> Result<(), CompileError> {
    for (id, pred) in dsd.conjuncts() {
        let text = pretty::pred(pred);
        if pred.mentions_dynamic() {
            csp.runtime_assertions.push((id.clone(), pred.clone()));
            csp.conjuncts.push(ConjunctReport {
                id,
                text,
                outcome: Lowering::RuntimeAssertion,
            });
            continue;
        }
        let nnf = negation_normal_form(pred, false).map_err(|message| CompileError {
            conjunct: id.clone(),
            message,
        })?;
        let mut lowerer = Lowerer {
            dsd,
            csp: &mut *csp,
            families: BTreeMap::new(),
        };
        lowerer
            .pred(&nnf, &mut Vec::new(), &mut Vec::new())
            .map_err(|message| CompileError {
                conjunct: id.clone(),
                message,
            })?;
        let families = lowerer.families.into_iter().collect();
        csp.conjuncts.push(ConjunctReport {
            id,
            text,
            outcome: Lowering::Compiled(families),
        });
    }
    Ok(())
}

/// Pushes negations down to comparisons. `not (a = b)` becomes
/// `a < b or a > b`; a negated quantifier is rejected.
fn negation_normal_form(p: &Pred, negate: bool) -> Result<Pred, String> {
    Ok(match p {
        Pred::Not(inner) => negation_normal_form(inner, !negate)?,
        Pred::And(items) | Pred::Or(items) => {
            let items = items
                .iter()
                .map(|i| negation_normal_form(i, negate))
                .collect::<Result<Vec<_>, _>>()?;
            if matches!(p, Pred::And(_)) != negate {
                Pred::And(items)
            } else {
                Pred::Or(items)
            }
        }
        Pred::ForallInstances { .. } | Pred::ForallHosts { .. } if negate => {
            return Err("negated `forall` (an existential) is not supported by the compiler".to_string())
        }
        Pred::ForallInstances {
            type_name,
            types,
            var,
            body,
        } => Pred::ForallInstances {
            type_name: type_name.clone(),
            types: types.clone(),
            var: var.clone(),
            body: Box::new(negation_normal_form(body, false)?),
        },
        Pred::ForallHosts { var, body } => Pred::ForallHosts {
            var: var.clone(),
            body: Box::new(negation_normal_form(body, false)?),
        },
        Pred::Compare { lhs, op, rhs } if negate => match op.negated() {
            Some(op) => Pred::Compare {
                lhs: lhs.clone(),
                op,
                rhs: rhs.clone(),
            },
            None => Pred::Or(vec![
                Pred::Compare {
                    lhs: lhs.clone(),
                    op: CmpOp::Lt,
                    rhs: rhs.clone(),
                },
                Pred::Compare {
                    lhs: lhs.clone(),
                    op: CmpOp::Gt,
                    rhs: rhs.clone(),
                },
            ]),
        },
        Pred::Compare { .. } => p.clone(),
    })
}

impl Lowerer<'_> {
    fn pred<'p>(&mut self, p: &'p Pred, scope: &mut Scope<'p>, guards: &mut Vec<usize>) -> Result<(), String> {
        match p {
            Pred::And(items) => {
                for i in items {
                    self.pred(i, scope, guards)?;
                }
            }
            Pred::Or(items) => {
                let mut live = Vec::new();
                for i in items {
                    match self.static_truth(i, scope)? {
                        Some(true) => return Ok(()),
                        Some(false) => {}
                        None => live.push(i),
                    }
                }
                match live.as_slice() {
                    [] => self.emit(LinExpr::constant(1), guards),
                    [only] => self.pred(only, scope, guards)?,
                    _ => {
                        return Err(
                            "`or` with more than one configuration-dependent alternative is not supported by the compiler"
                                .to_string(),
                        )
                    }
                }
            }
            Pred::Not(_) => unreachable!("negations are pushed into comparisons first"),
            Pred::ForallInstances { types, var, body, .. } => {
                for t in types {
                    let t = self.type_index(t)?;
                    for h in 0..self.csp.hosts.len() {
                        for i in 1..=self.csp.max_count {
                            let slot = self.csp.slot(h, t, i);
                            scope.push((var, Binding::Instance(slot)));
                            guards.push(slot);
                            let r = self.pred(body, scope, guards);
                            guards.pop();
                            scope.pop();
                            r?;
                        }
                    }
                }
            }
            Pred::ForallHosts { var, body } => {
                for h in 0..self.csp.hosts.len() {
                    scope.push((var, Binding::Host(h)));
                    let r = self.pred(body, scope, guards);
                    scope.pop();
                    r?;
                }
            }
            Pred::Compare { lhs, op, rhs } => {
                for row in self.rows(lhs, *op, rhs, scope)? {
                    self.emit(row, guards);
                }
            }
        }
        Ok(())
    }

    /// `Some(b)` if `p` is a comparison whose value does not depend on the
    /// configuration under the current bindings.
    fn static_truth(&self, p: &Pred, scope: &Scope) -> Result<Option<bool>, String> {
        match p {
            Pred::Compare { lhs, op, rhs } => {
                let l = self.term(lhs, scope)?;
                let r = self.term(rhs, scope)?;
                let d = l.plus(r.scaled(-1));
                Ok(d.terms.is_empty().then(|| op.holds(d.constant, 0)))
            }
            _ => Ok(None),
        }
    }

    /// `lhs op rhs` as rows `E ≤ 0`.
    fn rows(&self, lhs: &Term, op: CmpOp, rhs: &Term, scope: &Scope) -> Result<Vec<LinExpr>, String> {
        let d = self.term(lhs, scope)?.plus(self.term(rhs, scope)?.scaled(-1));
        let minus = |e: &LinExpr| e.clone().scaled(-1);
        Ok(match op {
            CmpOp::Le => vec![d],
            CmpOp::Ge => vec![minus(&d)],
            CmpOp::Lt => vec![d.plus(LinExpr::constant(1))],
            CmpOp::Gt => vec![minus(&d).plus(LinExpr::constant(1))],
            CmpOp::Eq => vec![d.clone(), minus(&d)],
        })
    }

    /// Adds `row ≤ 0`, required only when every instance in `guards` exists.
    fn emit(&mut self, row: LinExpr, guards: &[usize]) {
        let csp = &mut *self.csp;
        if row.max() <= 0 {
            return;
        }
        let existence = |csp: &SpecializedCsp| -> Vec<(i64, VarId)> {
            guards
                .iter()
                .flat_map(|&g| csp.existence_of_slot(g).map(|v| (1, v)))
                .collect()
        };
        let family = if row.terms.is_empty() {
            if guards.is_empty() {
                csp.model.add_false(format!("constant row {} <= 0", row.constant));
                Family::Contradiction
            } else {
                let terms = existence(csp);
                let k = guards.len() as i64;
                csp.model
                    .add_linear(&terms, Relation::Le, k - 1)
                    .expect("existence terms are non-empty");
                Family::Exclusion
            }
        } else if guards.is_empty() {
            csp.model
                .add_linear(&row.terms, Relation::Le, -row.constant)
                .expect("row has terms");
            Family::Linear
        } else if row.constant <= 0 && row.terms.iter().all(|&(_, v)| guards.iter().all(|&g| csp.incident(v, g))) {
            csp.model
                .add_linear(&row.terms, Relation::Le, -row.constant)
                .expect("row has terms");
            Family::Incident
        } else {
            let m = row.max();
            let k = guards.len() as i64;
            let mut terms = row.terms.clone();
            terms.extend(existence(csp).into_iter().map(|(_, v)| (m, v)));
            match csp.model.add_linear(&terms, Relation::Le, m * k - row.constant) {
                Ok(_) => Family::Guarded,
                // Every term cancelled: the row reduces to `0 ≤ m·k − c`,
                // which holds because m ≥ row.max() ≥ c.
                Err(_) => return,
            }
        };
        *self.families.entry(family).or_default() += 1;
    }

    fn type_index(&self, name: &str) -> Result<usize, String> {
        self.csp
            .types
            .iter()
            .position(|t| t == name)
            .ok_or_else(|| format!("unknown component type `{name}`"))
    }

    fn lookup(&self, scope: &Scope, var: &str) -> Result<Binding, String> {
        scope
            .iter()
            .rev()
            .find(|(name, _)| *name == var)
            .map(|&(_, b)| b)
            .ok_or_else(|| format!("unbound variable `{var}`"))
    }

    fn instance(&self, scope: &Scope, var: &str) -> Result<usize, String> {
        match self.lookup(scope, var)? {
            Binding::Instance(slot) => Ok(slot),
            Binding::Host(_) => Err(format!("`{var}` is a host, not a component instance")),
        }
    }

    fn host_property(&self, h: usize, property: &str) -> Result<i64, String> {
        let name = &self.csp.hosts[h];
        self.dsd
            .host(name)
            .and_then(|host| host.int_property(property))
            .ok_or_else(|| format!("host `{name}` has no integer property `{property}`"))
    }

    /// `Σ_t Σ_c c·p(h, t, c)` over the given hosts and types.
    fn count_sum(&self, hosts: &[usize], types: &[usize]) -> LinExpr {
        let mut terms = Vec::new();
        for &h in hosts {
            for &t in types {
                for c in 1..=self.csp.max_count {
                    terms.push((i64::from(c), self.csp.placement_var(h, t, c)));
                }
            }
        }
        LinExpr { terms, constant: 0 }
    }

    fn term(&self, t: &Term, scope: &Scope) -> Result<LinExpr, String> {
        let csp = &*self.csp;
        Ok(match t {
            Term::Int(k) => LinExpr::constant(*k),
            Term::HostOf { var, property } => {
                let (h, _, _) = csp.slot_parts(self.instance(scope, var)?);
                LinExpr::constant(self.host_property(h, property)?)
            }
            Term::HostProperty { var, property } => match self.lookup(scope, var)? {
                Binding::Host(h) => LinExpr::constant(self.host_property(h, property)?),
                Binding::Instance(_) => return Err(format!("`{var}` is an instance, not a host")),
            },
            Term::InstanceProperty { var, property, .. } => {
                let (_, t, _) = csp.slot_parts(self.instance(scope, var)?);
                let ct = &self.dsd.component_types[t];
                match ct.property(property).map(|p| &p.binding) {
                    Some(PropertyBinding::Literal(Literal::Int(k))) => LinExpr::constant(*k),
                    _ => {
                        return Err(format!(
                            "component type `{}` has no constant integer property `{property}`",
                            ct.name
                        ))
                    }
                }
            }
            Term::Card(SetExpr::Connections { var, member, end }) => {
                let slot = self.instance(scope, var)?;
                let ks: Vec<usize> = match end {
                    ConnectionEnd::Incoming => csp.incoming[slot]
                        .iter()
                        .copied()
                        .filter(|&k| csp.interfaces[csp.conns[k].provided] == *member)
                        .collect(),
                    ConnectionEnd::Outgoing => {
                        let (_, t, _) = csp.slot_parts(slot);
                        match csp.ports[t].iter().position(|(name, _)| name == member) {
                            Some(p) => csp.outgoing[slot][p].clone(),
                            None => Vec::new(),
                        }
                    }
                };
                LinExpr {
                    terms: ks.into_iter().map(|k| (1, csp.connection_var(k))).collect(),
                    constant: 0,
                }
            }
            Term::Card(SetExpr::HostComponents { host }) => {
                let h = match host {
                    HostRef::Var(v) => match self.lookup(scope, v)? {
                        Binding::Host(h) => Some(h),
                        Binding::Instance(_) => return Err(format!("`{v}` is an instance, not a host")),
                    },
                    // A named host that has been evolved away has no components.
                    HostRef::Named(n) => csp.hosts.iter().position(|h| h == n),
                };
                let types: Vec<usize> = (0..csp.types.len()).collect();
                match h {
                    Some(h) => self.count_sum(&[h], &types),
                    None => LinExpr::constant(0),
                }
            }
            Term::Card(SetExpr::InstancesOf { types, .. }) => {
                let types = types
                    .iter()
                    .map(|t| self.type_index(t))
                    .collect::<Result<Vec<_>, _>>()?;
                let hosts: Vec<usize> = (0..csp.hosts.len()).collect();
                self.count_sum(&hosts, &types)
            }
        })
    }
}

impl SpecializedCsp {
    /// Whether `var` is a connection variable with instance `slot` as an
    /// endpoint (so it is 0 whenever that instance does not exist).
    fn incident(&self, var: VarId, slot: usize) -> bool {
        var.checked_sub(self.num_placement_vars())
            .and_then(|k| self.conns.get(k))
            .is_some_and(|c| c.client == slot || c.server == slot)
    }
}
