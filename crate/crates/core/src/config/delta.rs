use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{Cdd, Connection, Instance};

/// Per-action costs. All positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Weights {
    pub deploy: u64,
    pub undeploy: u64,
    pub rebind: u64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            deploy: 1,
            undeploy: 1,
            rebind: 1,
        }
    }
}

impl std::str::FromStr for Weights {
    type Err = String;

    /// `deploy,undeploy,rebind`, e.g. `1,1,1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<u64> = s
            .split(',')
            .map(|p| p.trim().parse::<u64>().map_err(|_| format!("bad weight `{p}`")))
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            [d, u, r] if *d > 0 && *u > 0 && *r > 0 => Ok(Weights {
                deploy: *d,
                undeploy: *u,
                rebind: *r,
            }),
            [_, _, _] => Err("weights must be positive".to_string()),
            _ => Err(format!("expected three comma-separated weights, found `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("configurations describe different deployments: `{0}` and `{1}`")]
pub struct DeltaError(pub String, pub String);

/// The actions turning one configuration into another, to be carried out in
/// field order: undeploys, then deploys (with their initial bindings), then
/// rebinds and unbinds of surviving instances.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeploymentDelta {
    pub undeploy: Vec<Instance>,
    pub deploy: Vec<Instance>,
    /// Bindings of newly deployed instances. Free: covered by the deploy.
    pub bind: Vec<Connection>,
    /// A surviving instance's port moves to a different (or, after a
    /// failure, a first) server.
    pub rebind: Vec<Connection>,
    /// A surviving instance's port is left unbound by the target.
    pub unbind: Vec<(Instance, String)>,
    pub cost: u64,
}

impl DeploymentDelta {
    pub fn is_empty(&self) -> bool {
        self.undeploy.is_empty()
            && self.deploy.is_empty()
            && self.bind.is_empty()
            && self.rebind.is_empty()
            && self.unbind.is_empty()
    }

    /// Every instance the delta acts on: deployed, undeployed, or with a
    /// port rebound or unbound.
    pub fn touched(&self) -> BTreeSet<&Instance> {
        self.undeploy
            .iter()
            .chain(&self.deploy)
            .chain(self.rebind.iter().map(|c| &c.client))
            .chain(self.unbind.iter().map(|(i, _)| i))
            .collect()
    }
}

impl fmt::Display for DeploymentDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.undeploy {
            writeln!(f, "undeploy {i}")?;
        }
        for i in &self.deploy {
            writeln!(f, "deploy {i}")?;
        }
        for c in &self.bind {
            writeln!(f, "bind {c}")?;
        }
        for c in &self.rebind {
            writeln!(f, "rebind {c}")?;
        }
        for (i, port) in &self.unbind {
            writeln!(f, "unbind {i}.{port}")?;
        }
        writeln!(f, "cost {}", self.cost)
    }
}

fn bindings(cdd: &Cdd) -> BTreeMap<(&Instance, &str), &Connection> {
    cdd.connections
        .iter()
        .map(|c| ((&c.client, c.port.as_str()), c))
        .collect()
}

pub fn delta(current: &Cdd, target: &Cdd, weights: &Weights) -> Result<DeploymentDelta, DeltaError> {
    if current.dsd != target.dsd {
        return Err(DeltaError(current.dsd.clone(), target.dsd.clone()));
    }
    let undeploy: Vec<Instance> = current.instances.difference(&target.instances).cloned().collect();
    let deploy: Vec<Instance> = target.instances.difference(&current.instances).cloned().collect();
    let now = bindings(current);
    let then = bindings(target);
    let mut bind = Vec::new();
    let mut rebind = Vec::new();
    for (&(client, port), &c) in &then {
        if !current.instances.contains(client) {
            bind.push(c.clone());
        } else if now.get(&(client, port)).is_none_or(|old| old.server != c.server) {
            rebind.push(c.clone());
        }
    }
    let unbind: Vec<(Instance, String)> = now
        .keys()
        .filter(|(client, _)| target.instances.contains(*client))
        .filter(|key| !then.contains_key(key))
        .map(|&(client, port)| (client.clone(), port.to_string()))
        .collect();
    let cost = undeploy.len() as u64 * weights.undeploy
        + deploy.len() as u64 * weights.deploy
        + rebind.len() as u64 * weights.rebind;
    Ok(DeploymentDelta {
        undeploy,
        deploy,
        bind,
        rebind,
        unbind,
        cost,
    })
}

/// Carries out `delta` on a copy of `current`.
pub fn apply(current: &Cdd, delta: &DeploymentDelta) -> Cdd {
    let mut out = current.clone();
    for i in &delta.undeploy {
        out.instances.remove(i);
        out.connections.retain(|c| &c.client != i && &c.server != i);
    }
    for i in &delta.deploy {
        out.instances.insert(i.clone());
    }
    for c in &delta.bind {
        out.connections.insert(c.clone());
    }
    for c in &delta.rebind {
        out.connections.retain(|old| !(old.client == c.client && old.port == c.port));
        out.connections.insert(c.clone());
    }
    for (i, port) in &delta.unbind {
        out.connections.retain(|old| !(&old.client == i && &old.port == port));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conn(client: &Instance, server: &Instance) -> Connection {
        Connection {
            client: client.clone(),
            port: "server".into(),
            server: server.clone(),
        }
    }

    #[test]
    fn three_action_case() {
        let c = Instance::new("h1", "Client", 1);
        let s2 = Instance::new("h2", "Server", 1);
        let s3 = Instance::new("h3", "Server", 1);
        let mut current = Cdd::empty("d");
        current.instances.extend([c.clone(), s2.clone()]);
        current.connections.insert(conn(&c, &s2));
        let mut target = Cdd::empty("d");
        target.instances.extend([c.clone(), s3.clone()]);
        target.connections.insert(conn(&c, &s3));
        let d = delta(&current, &target, &Weights::default()).unwrap();
        assert_eq!(d.undeploy, vec![s2]);
        assert_eq!(d.deploy, vec![s3.clone()]);
        assert_eq!(d.rebind, vec![conn(&c, &s3)]);
        assert_eq!(d.cost, 3);
        assert_eq!(apply(&current, &d), target);
    }

    #[test]
    fn identity_and_from_empty() {
        let c = Instance::new("h1", "Client", 1);
        let s = Instance::new("h2", "Server", 1);
        let mut x = Cdd::empty("d");
        x.instances.extend([c.clone(), s.clone()]);
        x.connections.insert(conn(&c, &s));
        let same = delta(&x, &x, &Weights::default()).unwrap();
        assert!(same.is_empty());
        assert_eq!(same.cost, 0);
        let w = Weights {
            deploy: 5,
            undeploy: 1,
            rebind: 7,
        };
        let fresh = delta(&Cdd::empty("d"), &x, &w).unwrap();
        assert_eq!(fresh.cost, 10);
        assert_eq!(fresh.bind.len(), 1);
        assert!(fresh.rebind.is_empty());
        assert_eq!(apply(&Cdd::empty("d"), &fresh), x);
    }

    #[test]
    fn mismatched_descriptions() {
        assert!(delta(&Cdd::empty("a"), &Cdd::empty("b"), &Weights::default()).is_err());
    }

    #[test]
    fn weights_parse() {
        assert_eq!("2, 3,4".parse::<Weights>().unwrap().rebind, 4);
        assert!("1,0,1".parse::<Weights>().is_err());
        assert!("1,1".parse::<Weights>().is_err());
    }
}
