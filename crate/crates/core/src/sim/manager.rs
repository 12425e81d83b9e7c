use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use thiserror::Error;

use super::bundle::Bundle;
use crate::config::Instance;

/// Life-cycle state of a component manager.
///
/// Live states advance strictly in declaration order; `Failed` can be
/// entered from any live state, and `Terminated` and `Failed` are final.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ManagerState {
    Verified,
    Instantiated,
    Bound,
    Running,
    Destroying,
    Terminated,
    Failed,
}

impl ManagerState {
    pub fn as_str(self) -> &'static str {
        match self {
            ManagerState::Verified => "verified",
            ManagerState::Instantiated => "instantiated",
            ManagerState::Bound => "bound",
            ManagerState::Running => "running",
            ManagerState::Destroying => "destroying",
            ManagerState::Terminated => "terminated",
            ManagerState::Failed => "failed",
        }
    }

    pub fn is_live(self) -> bool {
        self < ManagerState::Terminated
    }

    /// Instantiated, bound or running: part of the deployed configuration.
    pub fn is_deployed(self) -> bool {
        matches!(
            self,
            ManagerState::Instantiated | ManagerState::Bound | ManagerState::Running
        )
    }

    pub fn can_become(self, next: ManagerState) -> bool {
        use ManagerState::*;
        match (self, next) {
            (s, Failed) => s.is_live(),
            (Verified, Instantiated) | (Instantiated, Bound) | (Bound, Running) => true,
            // Undeploy can start from any live state short of destroying.
            (Verified | Instantiated | Bound | Running, Destroying) => true,
            (Destroying, Terminated) => true,
            _ => false,
        }
    }
}

impl fmt::Display for ManagerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal life-cycle transition {from} -> {to}")]
pub struct IllegalTransition {
    pub from: ManagerState,
    pub to: ManagerState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProxyBinding {
    Unbound,
    Bound(Instance),
    Disabled,
}

/// Stands in for a required port. Calls made while unbound wait in
/// `pending`, oldest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmartProxy {
    pub port: String,
    pub interface: String,
    pub binding: ProxyBinding,
    pub pending: VecDeque<usize>,
}

impl SmartProxy {
    pub fn new(port: impl Into<String>, interface: impl Into<String>) -> Self {
        SmartProxy {
            port: port.into(),
            interface: interface.into(),
            binding: ProxyBinding::Unbound,
            pending: VecDeque::new(),
        }
    }

    pub fn target(&self) -> Option<&Instance> {
        match &self.binding {
            ProxyBinding::Bound(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComponentManager {
    pub identity: Instance,
    pub bundle: Bundle,
    pub state: ManagerState,
    pub proxies: BTreeMap<String, SmartProxy>,
    /// Provided interface → accepting calls.
    pub endpoints: BTreeMap<String, bool>,
    /// Requests being served whose responses are still outstanding.
    pub in_flight: usize,
    /// Undeploy is waiting for `in_flight` to reach zero.
    pub draining: bool,
}

impl ComponentManager {
    pub fn new(bundle: Bundle) -> Self {
        ComponentManager {
            identity: bundle.identity.clone(),
            bundle,
            state: ManagerState::Verified,
            proxies: BTreeMap::new(),
            endpoints: BTreeMap::new(),
            in_flight: 0,
            draining: false,
        }
    }

    pub fn transition(&mut self, to: ManagerState) -> Result<(), IllegalTransition> {
        if self.state.can_become(to) {
            self.state = to;
            Ok(())
        } else {
            Err(IllegalTransition { from: self.state, to })
        }
    }

    pub fn all_bound(&self) -> bool {
        self.proxies.values().all(|p| p.target().is_some())
    }

    pub fn accepts(&self, interface: &str) -> bool {
        self.state.is_live() && self.endpoints.get(interface).copied().unwrap_or(false)
    }

    pub fn class(&self) -> &str {
        &self.bundle.descriptor.instantiate.1
    }
}
