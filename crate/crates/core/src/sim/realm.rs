use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::ControlFlow;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::behavior::{BehaviorRegistry, CallError, Request};
use super::bundle::Bundle;
use super::fault::{Fault, TimedFault};
use super::manager::{ComponentManager, ManagerState, ProxyBinding, SmartProxy};
use crate::compiler;
use crate::config::{self, Cdd, Connection, DeploymentDelta, Instance, PickerPolicy, PolicyKind};
use crate::csp::{Capture, SolveLimits};
use crate::lang::model::Dsd;

pub type CallId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealmConfig {
    pub seed: u64,
    /// Logical time between realm ticks.
    pub tick_period: u64,
    /// Logical time between dispatching a request and its response.
    pub call_latency: u64,
    /// Candidate enumeration when re-solving.
    pub max_candidates: u64,
    pub solve_budget: Duration,
    pub weights: config::Weights,
    /// Principal that signs bundles; accepted by every host unless changed.
    pub principal: String,
    /// Unoverridden dynamic properties are sampled uniformly from this range.
    pub sample_range: std::ops::Range<i64>,
}

impl Default for RealmConfig {
    fn default() -> Self {
        RealmConfig {
            seed: 0,
            tick_period: 10,
            call_latency: 1,
            max_candidates: 1000,
            solve_budget: Duration::from_secs(30),
            weights: config::Weights::default(),
            principal: "realm-manager".to_string(),
            sample_range: 0..1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HostStatus {
    Up,
    Down,
}

#[derive(Debug, Clone)]
pub struct SimHost {
    pub name: String,
    pub status: HostStatus,
    pub accepted_principals: BTreeSet<String>,
    /// Managers ever fired here, by handle.
    pub residents: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown host `{0}`")]
    UnknownHost(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(Instance),
    #[error("host `{0}` is down")]
    HostDown(String),
    #[error("bundle rejected: {0}")]
    VerificationRejected(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Route {
    /// Through a client's required port.
    Port { client: Instance, port: String },
    /// Straight at a provided endpoint, from outside the realm.
    Endpoint { server: Instance, interface: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallStatus {
    Queued,
    InFlight,
    Responded(i64),
    Rejected(String),
    Dropped(String),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub route: Route,
    pub request: Request,
    pub status: CallStatus,
    /// Manager serving the call once dispatched.
    pub handler: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub time: u64,
    pub category: String,
    pub subject: String,
    pub detail: String,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.time, self.category, self.subject)?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Event {
    Fault(Fault),
    Response { call: CallId, value: i64 },
}

/// What the realm manager observed and did in one tick.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickReport {
    pub time: u64,
    /// Failed structural checks, e.g. `binding-completeness`.
    pub violations: Vec<String>,
    /// Failed dynamic checks; reported, never repaired.
    pub dynamic_violations: Vec<String>,
    pub delta: Option<DeploymentDelta>,
    pub unresolvable: bool,
}

impl TickReport {
    pub fn is_compliant(&self) -> bool {
        self.violations.is_empty() && self.dynamic_violations.is_empty()
    }

    pub fn actions(&self) -> usize {
        self.delta.as_ref().map_or(0, |d| {
            d.undeploy.len() + d.deploy.len() + d.bind.len() + d.rebind.len() + d.unbind.len()
        })
    }
}

/// Snapshot of what the realm manager knows about the running system.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiveModel {
    pub hosts: BTreeMap<String, HostStatus>,
    pub managers: BTreeMap<Instance, ManagerState>,
    pub properties: BTreeMap<(Instance, String), i64>,
}

/// Removes hosts observed down; everything else is kept as is.
pub fn evolve_dsd(dsd: &Dsd, live: &LiveModel) -> Dsd {
    let down = live
        .hosts
        .iter()
        .filter(|(_, s)| **s == HostStatus::Down)
        .map(|(h, _)| h.as_str());
    dsd.without_hosts(down)
}

/// A deployment realm: hosts, the component managers on them, and the
/// realm manager keeping the whole compliant with its description.
pub struct Realm {
    config: RealmConfig,
    registry: BehaviorRegistry,
    /// As supplied by the administrator.
    base: Dsd,
    /// `base` evolved to the hardware currently available.
    active: Dsd,
    current: Cdd,
    hosts: BTreeMap<String, SimHost>,
    managers: Vec<ComponentManager>,
    /// Identity → most recent manager.
    index: BTreeMap<Instance, usize>,
    calls: Vec<Call>,
    queue: BTreeMap<(u64, u64), Event>,
    seq: u64,
    clock: u64,
    next_tick: u64,
    rng: ChaCha8Rng,
    overrides: BTreeMap<(Instance, String), i64>,
    samples: BTreeMap<(Instance, String), i64>,
    reported_down: BTreeSet<String>,
    log: Vec<LogEntry>,
}

impl Realm {
    pub fn new(dsd: Dsd, config: RealmConfig) -> Realm {
        let hosts = dsd
            .hosts
            .iter()
            .map(|h| {
                let host = SimHost {
                    name: h.name.clone(),
                    status: HostStatus::Up,
                    accepted_principals: BTreeSet::from([config.principal.clone()]),
                    residents: BTreeSet::new(),
                };
                (h.name.clone(), host)
            })
            .collect();
        Realm {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            registry: BehaviorRegistry::default(),
            current: Cdd::empty(dsd.name.clone()),
            active: dsd.clone(),
            base: dsd,
            hosts,
            managers: Vec::new(),
            index: BTreeMap::new(),
            calls: Vec::new(),
            queue: BTreeMap::new(),
            seq: 0,
            clock: 0,
            next_tick: 0,
            overrides: BTreeMap::new(),
            samples: BTreeMap::new(),
            reported_down: BTreeSet::new(),
            log: Vec::new(),
            config,
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn log_text(&self) -> String {
        self.log.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn active_dsd(&self) -> &Dsd {
        &self.active
    }

    /// The configuration most recently enacted.
    pub fn current_cdd(&self) -> &Cdd {
        &self.current
    }

    pub fn registry_mut(&mut self) -> &mut BehaviorRegistry {
        &mut self.registry
    }

    pub fn host(&self, name: &str) -> Option<&SimHost> {
        self.hosts.get(name)
    }

    pub fn set_accepted_principals(&mut self, host: &str, principals: &[&str]) -> Result<(), SimError> {
        let h = self.hosts.get_mut(host).ok_or_else(|| SimError::UnknownHost(host.to_string()))?;
        h.accepted_principals = principals.iter().map(|p| p.to_string()).collect();
        Ok(())
    }

    /// Current manager for an identity, if one was ever fired.
    pub fn manager(&self, instance: &Instance) -> Option<&ComponentManager> {
        self.index.get(instance).map(|&id| &self.managers[id])
    }

    pub fn managers(&self) -> &[ComponentManager] {
        &self.managers
    }

    pub fn call(&self, id: CallId) -> &Call {
        &self.calls[id]
    }

    pub fn calls(&self) -> &[Call] {
        &self.calls
    }

    pub fn live(&self) -> LiveModel {
        LiveModel {
            hosts: self.hosts.iter().map(|(n, h)| (n.clone(), h.status)).collect(),
            managers: self
                .index
                .iter()
                .map(|(i, &id)| (i.clone(), self.managers[id].state))
                .collect(),
            properties: self.samples.clone(),
        }
    }

    /// The configuration actually deployed: instances whose managers are
    /// up, and the bindings of their proxies to other such instances.
    pub fn live_cdd(&self) -> Cdd {
        let mut cdd = Cdd::empty(self.active.name.clone());
        for (i, &id) in &self.index {
            let m = &self.managers[id];
            if m.state.is_deployed() && self.host_up(&i.host) {
                cdd.instances.insert(i.clone());
            }
        }
        for i in &cdd.instances {
            for p in self.managers[self.index[i]].proxies.values() {
                if let Some(t) = p.target().filter(|t| cdd.instances.contains(*t)) {
                    cdd.connections.insert(Connection {
                        client: i.clone(),
                        port: p.port.clone(),
                        server: t.clone(),
                    });
                }
            }
        }
        cdd
    }

    fn host_up(&self, host: &str) -> bool {
        self.hosts.get(host).is_some_and(|h| h.status == HostStatus::Up)
    }

    fn emit(&mut self, category: &str, subject: impl fmt::Display, detail: impl Into<String>) {
        self.log.push(LogEntry {
            time: self.clock,
            category: category.to_string(),
            subject: subject.to_string(),
            detail: detail.into(),
        });
    }

    fn post(&mut self, time: u64, event: Event) {
        self.queue.insert((time, self.seq), event);
        self.seq += 1;
    }

    fn set_state(&mut self, id: usize, to: ManagerState) {
        self.managers[id]
            .transition(to)
            .unwrap_or_else(|e| panic!("{}: {e}", self.managers[id].identity));
    }

    // ---- events and time ----

    /// Schedules a fault. Host names are checked now; instances when the
    /// fault fires.
    pub fn schedule(&mut self, fault: TimedFault) -> Result<(), SimError> {
        if let Fault::HostCrash(h) = &fault.fault {
            if !self.hosts.contains_key(h) {
                return Err(SimError::UnknownHost(h.clone()));
            }
        }
        self.post(fault.time, Event::Fault(fault.fault));
        Ok(())
    }

    pub fn load_script(&mut self, faults: &[TimedFault]) -> Result<(), SimError> {
        faults.iter().try_for_each(|f| self.schedule(f.clone()))
    }

    fn drain(&mut self, until: u64) {
        while let Some(entry) = self.queue.first_entry() {
            if entry.key().0 > until {
                break;
            }
            let ((time, _), event) = entry.remove_entry();
            self.clock = self.clock.max(time);
            match event {
                Event::Fault(f) => {
                    if let Err(e) = self.inject_fault(f.clone()) {
                        self.emit("fault-rejected", "realm", format!("{f}: {e}"));
                    }
                }
                Event::Response { call, value } => self.respond(call, value),
            }
        }
    }

    /// Advances logical time by one unit, processing whatever falls due.
    pub fn step(&mut self) {
        self.clock += 1;
        self.drain(self.clock);
    }

    /// Processes events and realm ticks up to and including `end`.
    pub fn run_until(&mut self, end: u64) -> Vec<TickReport> {
        let mut reports = Vec::new();
        while self.next_tick <= end {
            let t = self.next_tick;
            self.drain(t);
            self.clock = self.clock.max(t);
            reports.push(self.realm_tick());
            self.next_tick = t + self.config.tick_period.max(1);
        }
        self.drain(end);
        self.clock = self.clock.max(end);
        reports
    }

    // ---- faults ----

    pub fn inject_fault(&mut self, fault: Fault) -> Result<(), SimError> {
        match fault {
            Fault::HostCrash(name) => {
                let host = self.hosts.get_mut(&name).ok_or_else(|| SimError::UnknownHost(name.clone()))?;
                host.status = HostStatus::Down;
                let residents: Vec<usize> = host.residents.iter().copied().collect();
                self.emit("fault", &name, "host-crash");
                for id in residents {
                    if self.managers[id].state.is_live() {
                        self.fail(id, "host-crash");
                    }
                }
            }
            Fault::ComponentCrash(instance) => {
                let id = self.live_manager(&instance)?;
                self.emit("fault", &instance, "component-crash");
                self.fail(id, "component-crash");
            }
            Fault::PropertySet {
                instance,
                property,
                value,
            } => {
                self.live_manager(&instance)?;
                self.emit("fault", &instance, format!("set {property} {value}"));
                self.overrides.insert((instance, property), value);
            }
        }
        Ok(())
    }

    fn live_manager(&self, instance: &Instance) -> Result<usize, SimError> {
        self.index
            .get(instance)
            .copied()
            .filter(|&id| self.managers[id].state.is_live())
            .ok_or_else(|| SimError::UnknownInstance(instance.clone()))
    }

    fn fail(&mut self, id: usize, reason: &str) {
        self.set_state(id, ManagerState::Failed);
        let who = self.managers[id].identity.clone();
        self.emit("failed", &who, reason);
        for e in self.managers[id].endpoints.values_mut() {
            *e = false;
        }
        let waiting: Vec<CallId> = self.managers[id]
            .proxies
            .values_mut()
            .flat_map(|p| p.pending.drain(..))
            .collect();
        for c in waiting {
            self.finish_call(c, CallStatus::Dropped(format!("{who} failed")));
        }
        for c in 0..self.calls.len() {
            if self.calls[c].handler == Some(id) && self.calls[c].status == CallStatus::InFlight {
                self.finish_call(c, CallStatus::Dropped(format!("{who} failed")));
            }
        }
        self.managers[id].in_flight = 0;
    }

    // ---- enactment ----

    /// Verifies `bundle` and creates a manager for it on `host`.
    pub fn fire(&mut self, host: &str, bundle: Bundle) -> Result<usize, SimError> {
        let h = self.hosts.get(host).ok_or_else(|| SimError::UnknownHost(host.to_string()))?;
        let (down, accepted) = (h.status == HostStatus::Down, h.accepted_principals.contains(&bundle.credential));
        let identity = bundle.identity.clone();
        if down {
            self.emit("delivery-failed", &identity, format!("host {host} is down"));
            return Err(SimError::HostDown(host.to_string()));
        }
        self.emit("fire", &identity, format!("host={host} principal={}", bundle.credential));
        let reason = if !accepted {
            Some(format!("principal {} not accepted by {host}", bundle.credential))
        } else if !bundle.digest_matches() {
            Some("digest mismatch".to_string())
        } else if bundle.identity.host != host {
            Some(format!("identity names host {}", bundle.identity.host))
        } else {
            None
        };
        if let Some(reason) = reason {
            self.emit("verification-rejected", &identity, reason.clone());
            return Err(SimError::VerificationRejected(reason));
        }
        let id = self.managers.len();
        self.managers.push(ComponentManager::new(bundle));
        self.hosts.get_mut(host).expect("checked").residents.insert(id);
        self.index.insert(identity.clone(), id);
        self.emit("verified", &identity, "");
        Ok(id)
    }

    fn instantiate(&mut self, id: usize) {
        let m = &mut self.managers[id];
        let d = m.bundle.descriptor.clone();
        m.transition(ManagerState::Instantiated).expect("fresh manager");
        for (port, iface) in &d.requires {
            m.proxies.insert(port.clone(), SmartProxy::new(port, iface));
        }
        for (iface, _) in &d.satisfy {
            m.endpoints.insert(iface.clone(), true);
        }
        let who = m.identity.clone();
        self.emit("instantiate", &who, format!("{} = {}()", d.instantiate.0, d.instantiate.1));
        for (iface, obj) in &d.satisfy {
            self.emit("expose", &who, format!("{iface} using {obj}"));
        }
    }

    /// Packages, fires and instantiates one instance of the active
    /// description.
    fn deploy_one(&mut self, instance: &Instance) -> Option<usize> {
        if let Ok(old) = self.live_manager(instance) {
            if self.managers[old].state != ManagerState::Destroying {
                self.emit("redeploy", instance, "");
                self.undeploy(instance);
            }
        }
        let Some(ct) = self.active.component_type(&instance.ctype) else {
            self.emit("deploy-failed", instance, "unknown component type");
            return None;
        };
        let bundle = Bundle::package(ct, instance.clone(), &self.config.principal);
        self.emit("package", instance, format!("digest={}", &bundle.digest[..16]));
        let id = self.fire(&instance.host, bundle).ok()?;
        self.instantiate(id);
        Some(id)
    }

    /// Injects `server` into the client's proxy for `port`, then releases
    /// calls that were waiting on it.
    fn inject(&mut self, client: &Instance, port: &str, server: &Instance) -> bool {
        let Ok(cid) = self.live_manager(client) else {
            self.emit("bind-failed", client, format!("{port}: client is not live"));
            return false;
        };
        let iface = match self.managers[cid].proxies.get(port) {
            Some(p) if p.binding != ProxyBinding::Disabled => p.interface.clone(),
            _ => {
                self.emit("bind-failed", client, format!("{port}: no usable proxy"));
                return false;
            }
        };
        if !self.live_manager(server).is_ok_and(|s| self.managers[s].accepts(&iface)) {
            self.emit("bind-failed", client, format!("{port}: {server} is not serving {iface}"));
            return false;
        }
        let setter = self.managers[cid]
            .bundle
            .descriptor
            .bind
            .iter()
            .find(|(p, _, _)| p == port)
            .map(|(_, o, m)| format!(" via {o}.{m}"))
            .unwrap_or_default();
        let proxy = self.managers[cid].proxies.get_mut(port).expect("checked");
        proxy.binding = ProxyBinding::Bound(server.clone());
        let waiting: Vec<CallId> = proxy.pending.drain(..).collect();
        self.emit("bind", client, format!("{port} -> {server}{setter}"));
        for call in waiting {
            self.emit("flush", client, format!("call {call} on {port}"));
            self.dispatch(call);
        }
        true
    }

    /// Completes binding and initialisation once every port is bound.
    fn settle(&mut self, id: usize) {
        let m = &self.managers[id];
        if m.state != ManagerState::Instantiated || !m.all_bound() {
            return;
        }
        let who = m.identity.clone();
        let init = m.bundle.descriptor.initialise.clone();
        self.set_state(id, ManagerState::Bound);
        self.emit("bound", &who, "");
        for (obj, method) in init {
            self.emit("initialise", &who, format!("{obj}.{method}()"));
        }
        self.set_state(id, ManagerState::Running);
        self.emit("running", &who, "");
    }

    /// Carries out `delta` on the running system: undeploys, then deploys
    /// with their bindings, then rebinds and unbinds, then initialisation
    /// of everything newly complete. Each action takes one unit of logical
    /// time, so scheduled faults can interleave with it.
    pub fn enact(&mut self, delta: &DeploymentDelta) {
        let target = config::apply(&self.live_cdd(), delta);
        if delta.is_empty() {
            self.emit("enact", "realm", "noop");
            self.current = target;
            return;
        }
        self.emit("enact", "realm", format!("cost={}", delta.cost));
        for i in &delta.undeploy {
            self.step();
            self.undeploy(i);
        }
        for i in &delta.deploy {
            self.step();
            self.deploy_one(i);
        }
        for c in delta.bind.iter().chain(&delta.rebind) {
            self.step();
            self.inject(&c.client, &c.port, &c.server);
        }
        for (i, port) in &delta.unbind {
            self.step();
            if let Ok(id) = self.live_manager(i) {
                if let Some(p) = self.managers[id].proxies.get_mut(port) {
                    p.binding = ProxyBinding::Unbound;
                    self.emit("unbind", i, port.clone());
                }
            }
        }
        let ids: Vec<usize> = self.index.values().copied().collect();
        for id in ids {
            self.settle(id);
        }
        self.current = target;
        self.emit("enacted", "realm", "");
    }

    /// Moves the realm to `target` from whatever is live now.
    pub fn deploy(&mut self, target: &Cdd) -> DeploymentDelta {
        let d = config::delta(&self.live_cdd(), target, &self.config.weights).expect("same description");
        self.enact(&d);
        d
    }

    /// Disables provided endpoints, then required ports, then destroys the
    /// component once in-flight requests have completed.
    pub fn undeploy(&mut self, instance: &Instance) {
        let Some(&id) = self.index.get(instance) else {
            self.emit("undeploy-noop", instance, "no such instance");
            return;
        };
        let state = self.managers[id].state;
        if !state.is_live() || state == ManagerState::Destroying {
            self.emit("undeploy-noop", instance, state.as_str());
            return;
        }
        self.set_state(id, ManagerState::Destroying);
        for e in self.managers[id].endpoints.values_mut() {
            *e = false;
        }
        self.emit("disable-endpoints", instance, "");
        let mut rejected = Vec::new();
        for p in self.managers[id].proxies.values_mut() {
            rejected.extend(p.pending.drain(..));
            p.binding = ProxyBinding::Disabled;
        }
        self.emit("disable-proxies", instance, "");
        for c in rejected {
            self.finish_call(c, CallStatus::Rejected("proxy disabled".into()));
        }
        if self.managers[id].in_flight == 0 {
            self.terminate(id);
        } else {
            self.managers[id].draining = true;
            self.emit("draining", instance, format!("in-flight={}", self.managers[id].in_flight));
        }
    }

    fn terminate(&mut self, id: usize) {
        let who = self.managers[id].identity.clone();
        for (obj, method) in self.managers[id].bundle.descriptor.destroy.clone() {
            self.emit("destroy", &who, format!("{obj}.{method}()"));
        }
        self.managers[id].draining = false;
        self.set_state(id, ManagerState::Terminated);
        self.emit("terminated", &who, "");
    }

    // ---- calls ----

    /// Calls through `client`'s required `port`.
    pub fn invoke(&mut self, client: &Instance, port: &str, request: Request) -> CallId {
        self.new_call(
            Route::Port {
                client: client.clone(),
                port: port.to_string(),
            },
            request,
        )
    }

    /// Calls a provided endpoint from outside the realm.
    pub fn invoke_endpoint(&mut self, server: &Instance, interface: &str, request: Request) -> CallId {
        self.new_call(
            Route::Endpoint {
                server: server.clone(),
                interface: interface.to_string(),
            },
            request,
        )
    }

    fn new_call(&mut self, route: Route, request: Request) -> CallId {
        let id = self.calls.len();
        let (subject, via) = match &route {
            Route::Port { client, port } => (client.to_string(), port.clone()),
            Route::Endpoint { server, interface } => (server.to_string(), interface.clone()),
        };
        self.emit("invoke", subject, format!("call {id} {via} {request}"));
        self.calls.push(Call {
            route,
            request,
            status: CallStatus::Queued,
            handler: None,
        });
        self.dispatch(id);
        id
    }

    fn finish_call(&mut self, call: CallId, status: CallStatus) {
        let (category, detail) = match &status {
            CallStatus::Responded(v) => ("response", format!("call {call} = {v}")),
            CallStatus::Rejected(why) => ("rejected", format!("call {call}: {why}")),
            CallStatus::Dropped(why) => ("dropped", format!("call {call}: {why}")),
            CallStatus::Failed(why) => ("call-failed", format!("call {call}: {why}")),
            CallStatus::Queued | CallStatus::InFlight => unreachable!("not a final status"),
        };
        let subject = match &self.calls[call].route {
            Route::Port { client, .. } => client.to_string(),
            Route::Endpoint { server, .. } => server.to_string(),
        };
        self.calls[call].status = status;
        self.emit(category, subject, detail);
    }

    fn dispatch(&mut self, call: CallId) {
        let (server, interface) = match self.calls[call].route.clone() {
            Route::Endpoint { server, interface } => (server, interface),
            Route::Port { client, port } => {
                let Ok(cid) = self.live_manager(&client) else {
                    return self.finish_call(call, CallStatus::Rejected(format!("{client} is not live")));
                };
                let Some(proxy) = self.managers[cid].proxies.get_mut(&port) else {
                    return self.finish_call(call, CallStatus::Rejected(format!("no port {port}")));
                };
                match proxy.binding.clone() {
                    ProxyBinding::Disabled => {
                        return self.finish_call(call, CallStatus::Rejected("proxy disabled".into()));
                    }
                    ProxyBinding::Unbound => {
                        proxy.pending.push_back(call);
                        self.calls[call].status = CallStatus::Queued;
                        return self.emit("queued", &client, format!("call {call} on {port}"));
                    }
                    ProxyBinding::Bound(t) => (t, proxy.interface.clone()),
                }
            }
        };
        let Ok(sid) = self.live_manager(&server) else {
            return self.finish_call(call, CallStatus::Dropped(format!("{server} is gone")));
        };
        if !self.managers[sid].accepts(&interface) {
            return self.finish_call(call, CallStatus::Rejected(format!("{server} is not accepting {interface}")));
        }
        let request = self.calls[call].request.clone();
        match self.execute(sid, &request, 0) {
            Ok(value) => {
                self.managers[sid].in_flight += 1;
                self.calls[call].status = CallStatus::InFlight;
                self.calls[call].handler = Some(sid);
                self.emit("dispatch", &server, format!("call {call} {request}"));
                self.post(self.clock + self.config.call_latency, Event::Response { call, value });
            }
            Err(CallError::Blocked { instance, port }) => {
                let pid = self.index[&instance];
                self.managers[pid].proxies.get_mut(&port).expect("blocked on a proxy").pending.push_back(call);
                self.calls[call].status = CallStatus::Queued;
                self.emit("queued", &instance, format!("call {call} on {port}"));
            }
            Err(CallError::Rejected(why)) => self.finish_call(call, CallStatus::Rejected(why)),
            Err(CallError::Dropped(why)) => self.finish_call(call, CallStatus::Dropped(why)),
            Err(CallError::Fault(why)) => self.finish_call(call, CallStatus::Failed(why)),
        }
    }

    /// Runs the behavior of manager `id`, letting it call out through its
    /// proxies synchronously.
    fn execute(&mut self, id: usize, request: &Request, depth: usize) -> Result<i64, CallError> {
        if depth > 32 {
            return Err(CallError::Fault("call chain too deep".into()));
        }
        let behavior = self.registry.get(self.managers[id].class());
        let mut out = |port: &str, r: Request| self.nested(id, port, r, depth + 1);
        behavior(request, &mut out)
    }

    fn nested(&mut self, id: usize, port: &str, request: Request, depth: usize) -> Result<i64, CallError> {
        let m = &self.managers[id];
        let who = m.identity.clone();
        let Some(proxy) = m.proxies.get(port) else {
            return Err(CallError::Fault(format!("{who} has no port {port}")));
        };
        let target = match &proxy.binding {
            ProxyBinding::Disabled => return Err(CallError::Rejected(format!("{who}.{port} is disabled"))),
            ProxyBinding::Unbound => {
                return Err(CallError::Blocked {
                    instance: who,
                    port: port.to_string(),
                })
            }
            ProxyBinding::Bound(t) => t.clone(),
        };
        let iface = proxy.interface.clone();
        let Ok(tid) = self.live_manager(&target) else {
            return Err(CallError::Dropped(format!("{target} is gone")));
        };
        if !self.managers[tid].accepts(&iface) {
            return Err(CallError::Rejected(format!("{target} is not accepting {iface}")));
        }
        self.emit("call", &who, format!("{port} -> {target} {request}"));
        self.execute(tid, &request, depth)
    }

    fn respond(&mut self, call: CallId, value: i64) {
        if self.calls[call].status != CallStatus::InFlight {
            return;
        }
        self.finish_call(call, CallStatus::Responded(value));
        if let Some(h) = self.calls[call].handler {
            let m = &mut self.managers[h];
            m.in_flight = m.in_flight.saturating_sub(1);
            if m.draining && m.in_flight == 0 {
                self.terminate(h);
            }
        }
    }

    // ---- reconciliation ----

    /// Replaces the description; the next tick reconciles against it.
    pub fn administer(&mut self, dsd: Dsd) {
        self.emit("administer", "realm", dsd.name.clone());
        self.base = dsd;
    }

    /// Deployed instances that the active description no longer accounts
    /// for: unknown host or type, or a changed implementation.
    fn stale(&self, live: &Cdd) -> BTreeSet<Instance> {
        live.instances
            .iter()
            .filter(|i| {
                let Some(ct) = self.active.component_type(&i.ctype) else {
                    return true;
                };
                self.active.host(&i.host).is_none()
                    || self.managers[self.index[*i]].bundle.descriptor.implementation != ct.implementation
            })
            .cloned()
            .collect()
    }

    fn probe(&mut self) {
        let down: Vec<String> = self
            .hosts
            .values()
            .filter(|h| h.status == HostStatus::Down && !self.reported_down.contains(&h.name))
            .map(|h| h.name.clone())
            .collect();
        for h in down {
            self.emit("probe", &h, "HostDown");
            self.reported_down.insert(h);
        }
        self.samples.clear();
        let live: Vec<(Instance, Vec<String>)> = self
            .index
            .iter()
            .filter(|(_, &id)| self.managers[id].state.is_deployed())
            .map(|(i, &id)| {
                let props = self.managers[id].bundle.descriptor.dynamic_properties().map(String::from).collect();
                (i.clone(), props)
            })
            .collect();
        for (i, props) in live {
            for p in props {
                let key = (i.clone(), p.clone());
                let v = match self.overrides.get(&key) {
                    Some(&v) => v,
                    None => self.rng.random_range(self.config.sample_range.clone()),
                };
                self.emit("sample", &i, format!("{p}={v}"));
                self.samples.insert(key, v);
            }
        }
    }

    /// One pass of the realm manager: probe, evolve the description to the
    /// surviving hardware, check the live configuration and, on a
    /// structural violation, re-solve and enact the cheapest repair.
    pub fn realm_tick(&mut self) -> TickReport {
        let mut report = TickReport {
            time: self.clock,
            ..Default::default()
        };
        self.emit("tick", "realm", "");
        self.probe();
        let evolved = evolve_dsd(&self.base, &self.live());
        if evolved != self.active {
            let removed: Vec<&str> = self
                .active
                .hosts
                .iter()
                .filter(|h| evolved.host(&h.name).is_none())
                .map(|h| h.name.as_str())
                .collect();
            self.emit("evolve", "realm", format!("hosts={} removed=[{}]", evolved.hosts.len(), removed.join(",")));
            self.active = evolved;
        }
        let live = self.live_cdd();
        let stale = self.stale(&live);
        let mut baseline = live.clone();
        baseline.instances.retain(|i| !stale.contains(i));
        baseline
            .connections
            .retain(|c| !stale.contains(&c.client) && !stale.contains(&c.server));
        let compliance = config::validate_with(&baseline, &self.active, Some(&self.samples))
            .expect("baseline only holds known hosts and types");
        for c in compliance.failures() {
            let line = format!("{} {}", c.check, c.witnesses.first().map(String::as_str).unwrap_or(""));
            if c.dynamic {
                self.emit("dynamic-violation", "realm", line.trim_end().to_string());
                report.dynamic_violations.push(c.check.clone());
            } else {
                self.emit("violation", "realm", line.trim_end().to_string());
                report.violations.push(c.check.clone());
            }
        }
        if !stale.is_empty() {
            let names: Vec<String> = stale.iter().map(|i| i.to_string()).collect();
            self.emit("violation", "realm", format!("stale {}", names.join(" ")));
            report.violations.push("stale-instances".to_string());
        }
        if report.violations.is_empty() {
            if report.dynamic_violations.is_empty() {
                self.emit("compliant", "realm", "");
            }
            return report;
        }
        let csp = match compiler::compile(&self.active) {
            Ok(csp) => csp,
            Err(e) => {
                self.emit("unresolvable-violation", "realm", e.to_string());
                report.unresolvable = true;
                return report;
            }
        };
        let limits = SolveLimits::first(self.config.max_candidates)
            .with_capture(Capture::All)
            .with_time_budget(self.config.solve_budget);
        let result = csp.model.enumerate(&limits, |_| ControlFlow::Continue(()));
        self.emit(
            "solve",
            "realm",
            format!(
                "variables={} candidates={} exhausted={}",
                csp.num_vars(),
                result.solution_count,
                result.exhausted
            ),
        );
        let candidates = result.captured.iter().map(|a| csp.decode(a));
        let policy = PickerPolicy {
            kind: PolicyKind::MinDelta,
            weights: self.config.weights,
            cap: None,
            time_budget: None,
        };
        let Ok(chosen) = config::pick(candidates, Some(&baseline), &self.active, &policy) else {
            self.emit("unresolvable-violation", "realm", "no configuration within limits");
            report.unresolvable = true;
            return report;
        };
        let mut delta = chosen.delta;
        for i in &stale {
            if !chosen.cdd.instances.contains(i) {
                delta.undeploy.push(i.clone());
                delta.cost += self.config.weights.undeploy;
            }
        }
        self.emit("pick", "realm", format!("candidate={} cost={}", chosen.position, delta.cost));
        self.enact(&delta);
        report.delta = Some(delta);
        report
    }
}
