//! Compilation of a description into a placement-and-topology problem.
//!
//! Placement is encoded with *count indicators*: one binary per
//! `(host, type, c)` for `c` in `1..=max_instances_per_host`, meaning
//! "exactly `c` instances of `type` run on `host`", with at most one
//! indicator set per `(host, type)`. Instance `i` then exists iff the count
//! is at least `i`, i.e. `Σ_{c≥i} p(host, type, c) = 1`. Topology uses one
//! binary per interface-compatible `(client instance, port, server
//! instance)` triple.

mod lower;

use std::fmt::Write;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::config::{Cdd, Connection, Instance};
use crate::csp::{EnumerationResult, Model, Relation, SolveLimits, VarId};
use crate::lang::model::{ConjunctId, Dsd, Pred};

pub use lower::Family;

/// An instance that may be placed: the unit of placement variables.
pub type PotentialInstance = Instance;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PotentialConnection {
    pub client: PotentialInstance,
    pub port: String,
    pub server: PotentialInstance,
    pub provided: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{conjunct}: {message}")]
pub struct CompileError {
    pub conjunct: ConjunctId,
    pub message: String,
}

/// A potential connection in index form; see [`SpecializedCsp::connection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ConnSlot {
    client: usize,
    port: usize,
    server: usize,
    provided: usize,
}

/// How one top-level conjunct was handled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctReport {
    pub id: ConjunctId,
    pub text: String,
    pub outcome: Lowering,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lowering {
    /// Lowered into the model: number of constraints per family.
    Compiled(Vec<(Family, usize)>),
    /// Mentions a dynamic property, so it is checked at run time instead.
    RuntimeAssertion,
}

/// The compiled problem plus everything needed to read solutions back.
#[derive(Debug, Clone)]
pub struct SpecializedCsp {
    pub model: Model,
    pub dsd_name: String,
    pub hosts: Vec<String>,
    pub types: Vec<String>,
    pub max_count: u32,
    /// Per type: required ports, in declaration order.
    ports: Vec<Vec<(String, String)>>,
    interfaces: Vec<String>,
    conns: Vec<ConnSlot>,
    /// Per instance slot: indices into `conns` whose server is that slot.
    incoming: Vec<Vec<usize>>,
    /// Per instance slot, per port: indices into `conns` leaving it.
    outgoing: Vec<Vec<Vec<usize>>>,
    pub conjuncts: Vec<ConjunctReport>,
    pub runtime_assertions: Vec<(ConjunctId, Pred)>,
    pub warnings: Vec<String>,
    /// Constraints added by generation, before any conjunct was lowered.
    pub default_constraints: usize,
}

impl SpecializedCsp {
    pub fn num_placement_vars(&self) -> usize {
        self.hosts.len() * self.types.len() * self.max_count as usize
    }

    pub fn num_connection_vars(&self) -> usize {
        self.conns.len()
    }

    pub fn num_vars(&self) -> usize {
        self.model.num_vars()
    }

    fn slot(&self, host: usize, ctype: usize, index: u32) -> usize {
        (host * self.types.len() + ctype) * self.max_count as usize + (index as usize - 1)
    }

    fn slot_parts(&self, slot: usize) -> (usize, usize, u32) {
        let c = self.max_count as usize;
        let ht = slot / c;
        (ht / self.types.len(), ht % self.types.len(), (slot % c) as u32 + 1)
    }

    fn slot_instance(&self, slot: usize) -> Instance {
        let (h, t, i) = self.slot_parts(slot);
        Instance::new(&self.hosts[h], &self.types[t], i)
    }

    /// Placement variable "exactly `count` instances of `ctype` on `host`".
    pub fn placement_var(&self, host: usize, ctype: usize, count: u32) -> VarId {
        self.slot(host, ctype, count)
    }

    /// Variables whose sum is 1 iff instance `index` of `ctype` exists on `host`.
    pub fn existence(&self, host: usize, ctype: usize, index: u32) -> std::ops::Range<VarId> {
        let base = self.slot(host, ctype, 1);
        base + index as usize - 1..base + self.max_count as usize
    }

    fn existence_of_slot(&self, slot: usize) -> std::ops::Range<VarId> {
        let (h, t, i) = self.slot_parts(slot);
        self.existence(h, t, i)
    }

    fn connection_var(&self, k: usize) -> VarId {
        self.num_placement_vars() + k
    }

    pub fn connection(&self, k: usize) -> PotentialConnection {
        let c = self.conns[k];
        let (_, t, _) = self.slot_parts(c.client);
        PotentialConnection {
            client: self.slot_instance(c.client),
            port: self.ports[t][c.port].0.clone(),
            server: self.slot_instance(c.server),
            provided: self.interfaces[c.provided].clone(),
        }
    }

    pub fn connections(&self) -> impl Iterator<Item = (VarId, PotentialConnection)> + '_ {
        (0..self.conns.len()).map(|k| (self.connection_var(k), self.connection(k)))
    }

    /// Reads a solver solution back as a configuration.
    pub fn decode(&self, assignment: &[u32]) -> Cdd {
        let mut cdd = Cdd::empty(&self.dsd_name);
        for h in 0..self.hosts.len() {
            for t in 0..self.types.len() {
                for c in 1..=self.max_count {
                    if assignment[self.placement_var(h, t, c)] == 1 {
                        for i in 1..=c {
                            cdd.instances.insert(Instance::new(&self.hosts[h], &self.types[t], i));
                        }
                    }
                }
            }
        }
        for (k, slot) in self.conns.iter().enumerate() {
            if assignment[self.connection_var(k)] == 1 {
                let (_, t, _) = self.slot_parts(slot.client);
                cdd.connections.insert(Connection {
                    client: self.slot_instance(slot.client),
                    port: self.ports[t][slot.port].0.clone(),
                    server: self.slot_instance(slot.server),
                });
            }
        }
        assert!(cdd.is_closed(), "decoded configuration has a dangling connection");
        cdd
    }

    /// The inverse of [`decode`](Self::decode) for configurations over the
    /// same hosts and types. Instances or connections that have no
    /// variable are reported as `None`.
    pub fn encode(&self, cdd: &Cdd) -> Option<Vec<u32>> {
        let mut out = vec![0u32; self.num_vars()];
        let mut counts = std::collections::BTreeMap::new();
        for i in &cdd.instances {
            let h = self.hosts.iter().position(|h| *h == i.host)?;
            let t = self.types.iter().position(|t| *t == i.ctype)?;
            let n: &mut u32 = counts.entry((h, t)).or_default();
            *n = (*n).max(i.index);
        }
        for ((h, t), n) in counts {
            if n > self.max_count {
                return None;
            }
            out[self.placement_var(h, t, n)] = 1;
        }
        for c in &cdd.connections {
            let h = self.hosts.iter().position(|h| *h == c.client.host)?;
            let t = self.types.iter().position(|t| *t == c.client.ctype)?;
            if c.client.index == 0 || c.client.index > self.max_count {
                return None;
            }
            let slot = self.slot(h, t, c.client.index);
            let p = self.ports[t].iter().position(|(name, _)| *name == c.port)?;
            let k = self.outgoing[slot][p]
                .iter()
                .copied()
                .find(|&k| self.slot_instance(self.conns[k].server) == c.server)?;
            out[self.connection_var(k)] = 1;
        }
        Some(out)
    }

    /// Mapping from each conjunct to what it became, plus model totals.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "model: {} variables ({} placement = {} hosts x {} types x {} counts, {} connection)",
            self.num_vars(),
            self.num_placement_vars(),
            self.hosts.len(),
            self.types.len(),
            self.max_count,
            self.num_connection_vars()
        );
        let _ = writeln!(
            out,
            "defaults: {} constraints (count exclusivity, server existence, one binding per required port)",
            self.default_constraints
        );
        for r in &self.conjuncts {
            let _ = writeln!(out, "{} {}", r.id, r.text);
            match &r.outcome {
                Lowering::RuntimeAssertion => {
                    out.push_str("  -> runtime assertion (mentions a dynamic property)\n");
                }
                Lowering::Compiled(families) if families.is_empty() => {
                    out.push_str("  -> no constraints (always holds)\n");
                }
                Lowering::Compiled(families) => {
                    for (family, n) in families {
                        let _ = writeln!(out, "  -> {n} x {}", family.describe());
                    }
                }
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let _ = writeln!(out, "total: {} constraints", self.model.constraints().len());
        out
    }
}

/// Builds placement and connection variables and the default constraints,
/// without lowering any constraint set.
pub fn generate_model(dsd: &Dsd) -> SpecializedCsp {
    let hosts: Vec<String> = dsd.hosts.iter().map(|h| h.name.clone()).collect();
    let types: Vec<String> = dsd.component_types.iter().map(|t| t.name.clone()).collect();
    let interfaces: Vec<String> = dsd.interfaces.iter().map(|i| i.name.clone()).collect();
    let ports: Vec<Vec<(String, String)>> = dsd
        .component_types
        .iter()
        .map(|t| t.requires.iter().map(|p| (p.name.clone(), p.interface.clone())).collect())
        .collect();
    let max_count = dsd.max_instances_per_host;
    let c = max_count as usize;
    let slots = hosts.len() * types.len() * c;

    let mut model = Model::new();
    for h in &hosts {
        for t in &types {
            for k in 1..=max_count {
                model.add_binary(format!("p[{h},{t},{k}]"));
            }
        }
    }

    let mut csp = SpecializedCsp {
        model,
        dsd_name: dsd.name.clone(),
        hosts,
        types,
        max_count,
        ports,
        interfaces,
        conns: Vec::new(),
        incoming: vec![Vec::new(); slots],
        outgoing: Vec::with_capacity(slots),
        conjuncts: Vec::new(),
        runtime_assertions: Vec::new(),
        warnings: Vec::new(),
        default_constraints: 0,
    };

    // Which instance slots provide each interface, in slot order.
    let providers: Vec<Vec<usize>> = csp
        .interfaces
        .iter()
        .map(|iface| {
            (0..slots)
                .filter(|&s| dsd.component_types[csp.slot_parts(s).1].provides_interface(iface))
                .collect()
        })
        .collect();

    for client in 0..slots {
        let (_, t, _) = csp.slot_parts(client);
        let mut per_port = Vec::with_capacity(csp.ports[t].len());
        for (p, (_, iface)) in csp.ports[t].iter().enumerate() {
            let provided = csp
                .interfaces
                .iter()
                .position(|i| i == iface)
                .expect("resolved port interface");
            let mut ks = Vec::with_capacity(providers[provided].len());
            for &server in &providers[provided] {
                let k = csp.conns.len();
                csp.conns.push(ConnSlot {
                    client,
                    port: p,
                    server,
                    provided,
                });
                csp.incoming[server].push(k);
                ks.push(k);
            }
            per_port.push(ks);
        }
        csp.outgoing.push(per_port);
    }
    for k in 0..csp.conns.len() {
        let pc = csp.connection(k);
        csp.model.add_binary(format!(
            "y[{}.{}->{}]",
            pc.client, pc.port, pc.server
        ));
    }

    let mut added = 0;
    let mut add = |m: &mut Model, terms: &[(i64, VarId)], rel, bound| {
        m.add_linear(terms, rel, bound).expect("generated constraint is well formed");
        added += 1;
    };
    if max_count > 1 {
        for h in 0..csp.hosts.len() {
            for t in 0..csp.types.len() {
                let terms: Vec<(i64, VarId)> = (1..=max_count).map(|k| (1, csp.placement_var(h, t, k))).collect();
                add(&mut csp.model, &terms, Relation::Le, 1);
            }
        }
    }
    for k in 0..csp.conns.len() {
        let mut terms = vec![(1, csp.connection_var(k))];
        terms.extend(csp.existence_of_slot(csp.conns[k].server).map(|v| (-1, v)));
        add(&mut csp.model, &terms, Relation::Le, 0);
    }
    for client in 0..slots {
        let (_, t, _) = csp.slot_parts(client);
        for p in 0..csp.ports[t].len() {
            let mut terms: Vec<(i64, VarId)> =
                csp.outgoing[client][p].iter().map(|&k| (1, csp.connection_var(k))).collect();
            terms.extend(csp.existence_of_slot(client).map(|v| (-1, v)));
            add(&mut csp.model, &terms, Relation::Eq, 0);
        }
    }
    csp.default_constraints = added;

    for (t, ct) in dsd.component_types.iter().enumerate() {
        for (port, iface) in &csp.ports[t] {
            let provided = csp.interfaces.iter().position(|i| i == iface).expect("resolved");
            if providers[provided].is_empty() {
                csp.warnings.push(format!(
                    "no component type provides `{iface}` required by `{}.{port}`; `{}` can never be deployed",
                    ct.name, ct.name
                ));
            }
        }
    }
    csp
}

/// Generates the model and lowers every constraint set onto it.
pub fn compile(dsd: &Dsd) -> Result<SpecializedCsp, CompileError> {
    let mut csp = generate_model(dsd);
    lower::lower_constraints(dsd, &mut csp)?;
    Ok(csp)
}

/// Solutions of a compiled description.
#[derive(Debug, Clone)]
pub struct Configurations {
    pub variables: usize,
    pub result: EnumerationResult,
    /// One per captured solution, in enumeration order.
    pub cdds: Vec<Cdd>,
}

pub fn count_configurations(dsd: &Dsd, limits: &SolveLimits) -> Result<Configurations, CompileError> {
    let csp = compile(dsd)?;
    let result = csp.model.enumerate(limits, |_| ControlFlow::Continue(()));
    let cdds = result.captured.iter().map(|a| csp.decode(a)).collect();
    Ok(Configurations {
        variables: csp.num_vars(),
        result,
        cdds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang;

    const PAIR: &str = "
        interface I ( type = \"java\" specification = \"I\" implementation = \"u\" )
        component type S ( provides interface I implementation \"u\" instantiate s with S() satisfy I using s )
        component type C ( requires I port implementation \"u\" instantiate c with C() bind port with c.set() )
        host a
        host b
    ";

    #[test]
    fn variable_layout() {
        let dsd = lang::load(PAIR, "pair").unwrap().with_max_instances_per_host(2);
        let csp = generate_model(&dsd);
        assert_eq!(csp.num_placement_vars(), 8);
        // 4 client slots × 4 server slots.
        assert_eq!(csp.num_connection_vars(), 16);
        assert_eq!(csp.placement_var(1, 1, 2), 7);
        assert_eq!(csp.existence(1, 1, 1), 6..8);
        assert_eq!(csp.existence(1, 1, 2), 7..8);
        assert_eq!(csp.model.vars()[7].label, "p[b,C,2]");
        assert_eq!(csp.model.vars()[8].label, "y[a/C/1.port->a/S/1]");
    }

    #[test]
    fn all_zero_decodes_to_empty() {
        let dsd = lang::load(PAIR, "pair").unwrap();
        let csp = compile(&dsd).unwrap();
        let cdd = csp.decode(&vec![0; csp.num_vars()]);
        assert_eq!(cdd, Cdd::empty("pair"));
    }

    #[test]
    fn encode_inverts_decode() {
        let dsd = lang::load(PAIR, "pair").unwrap().with_max_instances_per_host(2);
        let csp = compile(&dsd).unwrap();
        let r = csp.model.enumerate(
            &SolveLimits::default().with_capture(crate::csp::Capture::All),
            |_| ControlFlow::Continue(()),
        );
        for a in &r.captured {
            assert_eq!(csp.encode(&csp.decode(a)).as_ref(), Some(a));
        }
    }

    #[test]
    fn unprovided_interface_warns_and_forbids_client() {
        let src = "
            interface I ( type = \"java\" specification = \"I\" implementation = \"u\" )
            component type C ( requires I port implementation \"u\" instantiate c with C() bind port with c.set() )
            host a
        ";
        let dsd = lang::load(src, "x").unwrap();
        let csp = compile(&dsd).unwrap();
        assert_eq!(csp.warnings.len(), 1);
        assert_eq!(csp.model.count_exact(), 1);
    }
}
