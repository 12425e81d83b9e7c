//! Oracles and trace checks shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use deladas_core::csp::Model;
use deladas_core::lang::Dsd;
use deladas_core::sim::LogEntry;

const LIFECYCLE: [&str; 9] = [
    "instantiate",
    "expose",
    "bind",
    "bound",
    "initialise",
    "running",
    "disable-endpoints",
    "disable-proxies",
    "destroy",
];

#[derive(Default)]
struct Incarnation {
    ports_bound: std::collections::BTreeSet<String>,
    bound: bool,
    endpoints_disabled: bool,
    destroyed: usize,
    finished: bool,
}

/// Checks every manager incarnation in `log` (from `verified` to
/// `terminated`/`failed`):
/// - `bound` comes only after every required port saw a `bind`,
/// - `initialise` and `running` only after `bound`,
/// - `destroy` only after `disable-endpoints`, and `terminated` only after
///   all destroy methods ran,
/// - nothing life-cycle related happens after `terminated` or `failed`.
pub fn check_lifecycle(log: &[LogEntry], dsd: &Dsd) -> Result<(), String> {
    let mut live: BTreeMap<&str, Incarnation> = BTreeMap::new();
    for e in log {
        let subject = e.subject.as_str();
        let err = |msg: &str| Err(format!("{msg}: `{e}`"));
        match e.category.as_str() {
            "verified" => {
                live.insert(subject, Incarnation::default());
                continue;
            }
            "terminated" | "failed" => {
                let Some(inc) = live.get_mut(subject) else {
                    return err("end of an unknown manager");
                };
                if e.category == "terminated" {
                    let ctype = subject.split('/').nth(1).unwrap_or("");
                    let destroys = dsd.component_type(ctype).map_or(0, |c| c.destroy.len());
                    if !inc.endpoints_disabled || inc.destroyed != destroys {
                        return err("terminated before endpoint disable and destroy");
                    }
                }
                if inc.finished {
                    return err("manager ended twice");
                }
                inc.finished = true;
                continue;
            }
            c if LIFECYCLE.contains(&c) => {}
            _ => continue,
        }
        let Some(inc) = live.get_mut(subject) else {
            return err("life-cycle event for a manager never verified");
        };
        if inc.finished {
            return err("life-cycle event after the end");
        }
        match e.category.as_str() {
            "bind" => {
                let port = e.detail.split_whitespace().next().unwrap_or("");
                inc.ports_bound.insert(port.to_string());
            }
            "bound" => {
                let ctype = subject.split('/').nth(1).unwrap_or("");
                let ct = dsd.component_type(ctype).ok_or(format!("unknown type in `{e}`"))?;
                if ct.requires.iter().any(|p| !inc.ports_bound.contains(&p.name)) {
                    return err("bound before every port was bound");
                }
                inc.bound = true;
            }
            "initialise" | "running" if !inc.bound => return err("initialised before binding completed"),
            "disable-endpoints" => inc.endpoints_disabled = true,
            "destroy" => {
                if !inc.endpoints_disabled {
                    return err("destroy before endpoints were disabled");
                }
                inc.destroyed += 1;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Index of the first entry matching `category` and `subject` whose detail
/// contains `detail`.
pub fn position(log: &[LogEntry], category: &str, subject: &str, detail: &str) -> Option<usize> {
    log.iter()
        .position(|e| e.category == category && e.subject == subject && e.detail.contains(detail))
}

/// Counts solutions by testing every point of the product of the domains.
pub fn brute_force(model: &Model) -> (u64, Vec<Vec<u32>>) {
    let domains: Vec<&[u32]> = model.vars().iter().map(|v| v.domain.as_slice()).collect();
    let mut idx = vec![0usize; domains.len()];
    let mut solutions = Vec::new();
    loop {
        let point: Vec<u32> = idx.iter().zip(&domains).map(|(&i, d)| d[i]).collect();
        if model.is_solution(&point) {
            solutions.push(point);
        }
        // Odometer with the last variable fastest, i.e. lexicographic order.
        let mut k = domains.len();
        loop {
            if k == 0 {
                return (solutions.len() as u64, solutions);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Client/server configurations counted per host: each host takes one of
/// `labels` (clients, servers), and each client picks any server
/// instance: Σ (Σservers)^(Σclients), with 0^0 = 1.
pub fn client_server_oracle(hosts: u32, labels: &[(u64, u64)]) -> u64 {
    let mut total = 0u64;
    let choices = labels.len() as u64;
    for code in 0..choices.pow(hosts) {
        let (mut c, mut s, mut k) = (0u64, 0u64, code);
        for _ in 0..hosts {
            let (ci, si) = labels[(k % choices) as usize];
            c += ci;
            s += si;
            k /= choices;
        }
        total += s.pow(c as u32);
    }
    total
}

