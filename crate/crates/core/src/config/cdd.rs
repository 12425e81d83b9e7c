use std::collections::BTreeSet;
use std::fmt;

/// A component instance: the `index`-th instance of `ctype` on `host`.
/// This triple is the instance's identity across configurations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    pub host: String,
    pub ctype: String,
    pub index: u32,
}

impl Instance {
    pub fn new(host: impl Into<String>, ctype: impl Into<String>, index: u32) -> Self {
        Instance {
            host: host.into(),
            ctype: ctype.into(),
            index,
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.host, self.ctype, self.index)
    }
}

impl std::str::FromStr for Instance {
    type Err = String;

    /// Parses `host/type/index`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('/');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(h), Some(t), Some(i), None) if !h.is_empty() && !t.is_empty() => {
                let index = i.parse().map_err(|_| format!("bad instance index in `{s}`"))?;
                Ok(Instance::new(h, t, index))
            }
            _ => Err(format!("expected host/type/index, found `{s}`")),
        }
    }
}

/// A binding of `client`'s required `port` to `server`. The interface is
/// implied by the port's declaration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Connection {
    pub client: Instance,
    pub port: String,
    pub server: Instance,
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} -> {}", self.client, self.port, self.server)
    }
}

/// A concrete configuration: which instances exist where, and how they are
/// wired.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cdd {
    /// Name of the description this configuration was derived from.
    pub dsd: String,
    pub instances: BTreeSet<Instance>,
    pub connections: BTreeSet<Connection>,
}

impl Cdd {
    pub fn empty(dsd: impl Into<String>) -> Self {
        Cdd {
            dsd: dsd.into(),
            instances: BTreeSet::new(),
            connections: BTreeSet::new(),
        }
    }

    /// The connection bound to `client.port`, if any.
    pub fn binding(&self, client: &Instance, port: &str) -> Option<&Connection> {
        self.connections
            .iter()
            .find(|c| &c.client == client && c.port == port)
    }

    pub fn instances_on<'a>(&'a self, host: &'a str) -> impl Iterator<Item = &'a Instance> + 'a {
        self.instances.iter().filter(move |i| i.host == host)
    }

    /// Every connection endpoint is an instance of the configuration.
    pub fn is_closed(&self) -> bool {
        self.connections
            .iter()
            .all(|c| self.instances.contains(&c.client) && self.instances.contains(&c.server))
    }

    /// The configuration restricted to instances on hosts other than those
    /// in `hosts`; connections touching a removed instance are dropped too.
    pub fn without_hosts(&self, hosts: &[&str]) -> Cdd {
        let keep = |i: &Instance| !hosts.contains(&i.host.as_str());
        Cdd {
            dsd: self.dsd.clone(),
            instances: self.instances.iter().filter(|i| keep(i)).cloned().collect(),
            connections: self
                .connections
                .iter()
                .filter(|c| keep(&c.client) && keep(&c.server))
                .cloned()
                .collect(),
        }
    }
}
