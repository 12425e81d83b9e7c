//! Deterministic deployment simulator.
//!
//! Thin servers accept signed [`Bundle`]s through `fire`, component
//! managers drive instances through their life cycle, smart proxies hold
//! calls until their ports are bound, and the realm manager re-solves and
//! enacts a repair whenever the live configuration stops complying with
//! its description. Everything runs on one logical clock and a seeded RNG,
//! so a description, fault script and seed always produce the same log.

mod behavior;
mod bundle;
mod fault;
mod manager;
mod realm;

pub use behavior::{echo, Behavior, BehaviorRegistry, CallError, Outgoing, Request};
pub use bundle::{Bundle, BundleError, Descriptor};
pub use fault::{parse_script, Fault, ScriptError, TimedFault};
pub use manager::{ComponentManager, IllegalTransition, ManagerState, ProxyBinding, SmartProxy};
pub use realm::{
    evolve_dsd, Call, CallId, CallStatus, HostStatus, LiveModel, LogEntry, Realm, RealmConfig, Route, SimError,
    SimHost, TickReport,
};
