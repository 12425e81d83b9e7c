//! A small finite-domain solver over linear constraints.
//!
//! Variables take values from short ordered domains (in practice `{0, 1}`),
//! constraints are linear sums compared against a bound, and the solver does
//! a complete depth-first enumeration with bounds propagation. The search
//! order is fixed (lowest variable id first, smallest value first), so the
//! sequence of solutions is reproducible and lexicographic.

mod solver;

use std::fmt::{self, Write};
use std::time::Duration;

use thiserror::Error;

pub use solver::{Conflict, Propagation, Solver};

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    /// Strictly increasing.
    pub domain: Vec<u32>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    /// `(coefficient, variable)`; each variable appears at most once and no
    /// coefficient is zero.
    pub terms: Vec<(i64, VarId)>,
    pub relation: Relation,
    pub bound: i64,
}

impl LinearConstraint {
    pub fn lhs(&self, assignment: &[u32]) -> i64 {
        self.terms.iter().map(|&(a, v)| a * i64::from(assignment[v])).sum()
    }

    pub fn is_satisfied(&self, assignment: &[u32]) -> bool {
        self.relation.holds(self.lhs(assignment), self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CspError {
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("unknown variable id {0}")]
    UnknownVariable(VarId),
    #[error("constraint has no terms")]
    NoTerms,
    #[error("zero coefficient on variable {0}")]
    ZeroCoefficient(VarId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    vars: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    /// Set by [`Model::add_false`]; such a model has no solutions.
    contradiction: Option<String>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a variable and returns its dense id. The domain is sorted
    /// and deduplicated.
    pub fn add_variable(&mut self, domain: &[u32], label: impl Into<String>) -> Result<VarId, CspError> {
        let label = label.into();
        let mut domain = domain.to_vec();
        domain.sort_unstable();
        domain.dedup();
        if domain.is_empty() {
            return Err(CspError::EmptyDomain(label));
        }
        self.vars.push(Variable { domain, label });
        Ok(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, label: impl Into<String>) -> VarId {
        self.vars.push(Variable {
            domain: vec![0, 1],
            label: label.into(),
        });
        self.vars.len() - 1
    }

    /// Records `Σ terms ⋈ bound`. Repeated variables are merged; a term list
    /// that merges to nothing is rejected like an empty one.
    pub fn add_linear(&mut self, terms: &[(i64, VarId)], relation: Relation, bound: i64) -> Result<usize, CspError> {
        if terms.is_empty() {
            return Err(CspError::NoTerms);
        }
        let mut merged: Vec<(i64, VarId)> = Vec::with_capacity(terms.len());
        for &(a, v) in terms {
            if v >= self.vars.len() {
                return Err(CspError::UnknownVariable(v));
            }
            if a == 0 {
                return Err(CspError::ZeroCoefficient(v));
            }
            merged.push((a, v));
        }
        merged.sort_by_key(|&(_, v)| v);
        merged.dedup_by(|next, prev| {
            if next.1 == prev.1 {
                prev.0 += next.0;
                true
            } else {
                false
            }
        });
        merged.retain(|&(a, _)| a != 0);
        if merged.is_empty() {
            return Err(CspError::NoTerms);
        }
        self.constraints.push(LinearConstraint {
            terms: merged,
            relation,
            bound,
        });
        Ok(self.constraints.len() - 1)
    }

    /// Marks the model unsatisfiable, e.g. for a constraint that is false
    /// independently of any variable.
    pub fn add_false(&mut self, reason: impl Into<String>) {
        if self.contradiction.is_none() {
            self.contradiction = Some(reason.into());
        }
    }

    pub fn contradiction(&self) -> Option<&str> {
        self.contradiction.as_deref()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// Direct evaluation of every constraint; independent of the solver.
    pub fn is_solution(&self, assignment: &[u32]) -> bool {
        self.contradiction.is_none()
            && assignment.len() == self.vars.len()
            && assignment
                .iter()
                .zip(&self.vars)
                .all(|(x, v)| v.domain.binary_search(x).is_ok())
            && self.constraints.iter().all(|c| c.is_satisfied(assignment))
    }

    /// Propagates `partial` to a fixpoint without searching.
    pub fn propagate(&self, partial: &[(VarId, u32)]) -> Propagation {
        let mut solver = Solver::new(self);
        let outcome = solver
            .propagate_root()
            .and_then(|()| partial.iter().try_for_each(|&(v, x)| solver.assign(v, x)));
        match outcome {
            Ok(()) => Propagation::Fixpoint(solver.fixed_values()),
            Err(c) => Propagation::Conflict(c),
        }
    }

    /// Runs a complete enumeration, calling `visitor` once per solution in
    /// lexicographic order. The visitor may stop the search early by
    /// returning `ControlFlow::Break`.
    pub fn enumerate(
        &self,
        limits: &SolveLimits,
        visitor: impl FnMut(&[u32]) -> std::ops::ControlFlow<()>,
    ) -> EnumerationResult {
        Solver::new(self).enumerate(limits, visitor)
    }

    pub fn count_exact(&self) -> u64 {
        self.enumerate(&SolveLimits::default(), |_| std::ops::ControlFlow::Continue(()))
            .solution_count
    }

    /// Line-oriented debug dump: one line per variable, then one per
    /// constraint. Byte-identical for identical models.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "variables {}", self.vars.len());
        for (i, v) in self.vars.iter().enumerate() {
            let dom: Vec<String> = v.domain.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "x{i} {} {{{}}}", v.label, dom.join(","));
        }
        let _ = writeln!(out, "constraints {}", self.constraints.len());
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, "c{i} {}", DisplayConstraint(c));
        }
        if let Some(reason) = &self.contradiction {
            let _ = writeln!(out, "false {reason}");
        }
        out
    }
}

struct DisplayConstraint<'a>(&'a LinearConstraint);

impl fmt::Display for DisplayConstraint<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, v)) in self.0.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a:+} x{v}")?;
        }
        write!(f, " {} {}", self.0.relation.as_str(), self.0.bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Capture {
    #[default]
    None,
    FirstK(usize),
    All,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveLimits {
    pub max_solutions: Option<u64>,
    pub time_budget: Option<Duration>,
    pub capture: Capture,
}

impl SolveLimits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn first(n: u64) -> Self {
        SolveLimits {
            max_solutions: Some(n),
            ..Self::default()
        }
    }

    pub fn with_capture(mut self, capture: Capture) -> Self {
        self.capture = capture;
        self
    }

    pub fn with_time_budget(mut self, budget: Duration) -> Self {
        self.time_budget = Some(budget);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationResult {
    pub solution_count: u64,
    pub captured: Vec<Vec<u32>>,
    /// The whole search space was explored, so `solution_count` is exact.
    pub exhausted: bool,
    pub elapsed: Duration,
    pub first_solution_latency: Option<Duration>,
}
