//! Fault scripts.
//!
//! One record per line, `#` starts a comment:
//!
//! ```text
//! at 10 host-crash h3
//! at 12 component-crash h4/MathsService/1
//! at 15 set h5/MathsService/1 queriesPerSecond 1000000
//! ```

use std::fmt;

use thiserror::Error;

use crate::config::Instance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    HostCrash(String),
    ComponentCrash(Instance),
    PropertySet {
        instance: Instance,
        property: String,
        value: i64,
    },
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fault::HostCrash(h) => write!(f, "host-crash {h}"),
            Fault::ComponentCrash(i) => write!(f, "component-crash {i}"),
            Fault::PropertySet {
                instance,
                property,
                value,
            } => write!(f, "set {instance} {property} {value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedFault {
    pub time: u64,
    pub fault: Fault,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fault script line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

pub fn parse_script(text: &str) -> Result<Vec<TimedFault>, ScriptError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ScriptError { line: n + 1, message };
        let words: Vec<&str> = line.split_whitespace().collect();
        let instance = |s: &str| s.parse::<Instance>().map_err(|e| err(format!("bad instance `{s}`: {e}")));
        let time = match words.as_slice() {
            ["at", t, ..] => t.parse::<u64>().map_err(|_| err(format!("bad time `{t}`")))?,
            _ => return Err(err("expected `at <time> <fault>`".into())),
        };
        let fault = match &words[2..] {
            ["host-crash", h] => Fault::HostCrash(h.to_string()),
            ["component-crash", i] => Fault::ComponentCrash(instance(i)?),
            ["set", i, prop, v] => Fault::PropertySet {
                instance: instance(i)?,
                property: prop.to_string(),
                value: v.parse().map_err(|_| err(format!("bad value `{v}`")))?,
            },
            _ => return Err(err(format!("unknown fault `{}`", words[2..].join(" ")))),
        };
        out.push(TimedFault { time, fault });
    }
    Ok(out)
}
