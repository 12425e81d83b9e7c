//! Scripted component behaviors.
//!
//! Components are not real code in the simulator. Each implementation class
//! maps to a request handler that may call out through the component's
//! required ports; unknown classes get an echo handler.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// A request: an operation name and integer arguments, written `op(1,2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Request {
    pub op: String,
    pub args: Vec<i64>,
}

impl Request {
    pub fn new(op: impl Into<String>, args: impl Into<Vec<i64>>) -> Self {
        Request {
            op: op.into(),
            args: args.into(),
        }
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.op)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Request {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (op, rest) = s.split_once('(').ok_or_else(|| format!("expected `op(args)`, found `{s}`"))?;
        let inner = rest.strip_suffix(')').ok_or_else(|| format!("missing `)` in `{s}`"))?;
        let args = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| a.trim().parse::<i64>().map_err(|_| format!("bad argument `{a}`")))
                .collect::<Result<_, _>>()?
        };
        Ok(Request::new(op.trim(), args))
    }
}

/// Why a call did not produce a value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallError {
    /// The named port of the handling component has no binding yet; the
    /// call waits in that port's proxy.
    Blocked { instance: crate::config::Instance, port: String },
    Rejected(String),
    Dropped(String),
    /// The behavior itself refused the request.
    Fault(String),
}

impl fmt::Display for CallError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CallError::Blocked { instance, port } => write!(f, "blocked on {instance}.{port}"),
            CallError::Rejected(why) => write!(f, "rejected: {why}"),
            CallError::Dropped(why) => write!(f, "dropped: {why}"),
            CallError::Fault(why) => write!(f, "fault: {why}"),
        }
    }
}

/// Outgoing calls available to a behavior: `(port, request) -> result`.
pub type Outgoing<'a> = dyn FnMut(&str, Request) -> Result<i64, CallError> + 'a;

pub type Behavior = fn(&Request, &mut Outgoing<'_>) -> Result<i64, CallError>;

fn arity(req: &Request, n: usize) -> Result<(), CallError> {
    if req.args.len() == n {
        Ok(())
    } else {
        Err(CallError::Fault(format!("{} expects {n} argument(s)", req.op)))
    }
}

pub fn addition(req: &Request, _: &mut Outgoing<'_>) -> Result<i64, CallError> {
    match req.op.as_str() {
        "add" => Ok(req.args.iter().fold(0i64, |a, b| a.wrapping_add(*b))),
        other => Err(CallError::Fault(format!("unknown operation `{other}`"))),
    }
}

pub fn multiplication(req: &Request, _: &mut Outgoing<'_>) -> Result<i64, CallError> {
    match req.op.as_str() {
        "multiply" => Ok(req.args.iter().fold(1i64, |a, b| a.wrapping_mul(*b))),
        other => Err(CallError::Fault(format!("unknown operation `{other}`"))),
    }
}

/// `evaluate(a,b,c)` computes `(a+b)·c` by delegating to the addition and
/// multiplication services; `add` and `multiply` are forwarded as is.
pub fn maths(req: &Request, out: &mut Outgoing<'_>) -> Result<i64, CallError> {
    match req.op.as_str() {
        "evaluate" => {
            arity(req, 3)?;
            let sum = out("addition", Request::new("add", [req.args[0], req.args[1]]))?;
            out("multiplication", Request::new("multiply", [sum, req.args[2]]))
        }
        "add" => out("addition", req.clone()),
        "multiply" => out("multiplication", req.clone()),
        other => Err(CallError::Fault(format!("unknown operation `{other}`"))),
    }
}

/// Returns the first argument, or 0.
pub fn echo(req: &Request, _: &mut Outgoing<'_>) -> Result<i64, CallError> {
    Ok(req.args.first().copied().unwrap_or(0))
}

/// Implementation class → behavior.
#[derive(Debug, Clone)]
pub struct BehaviorRegistry {
    handlers: BTreeMap<String, Behavior>,
}

impl Default for BehaviorRegistry {
    fn default() -> Self {
        let mut r = BehaviorRegistry {
            handlers: BTreeMap::new(),
        };
        r.register("com.math.MathsService", maths);
        r.register("com.math.AdditionService", addition);
        r.register("com.math.MultiplicationService", multiplication);
        r
    }
}

impl BehaviorRegistry {
    pub fn register(&mut self, class: impl Into<String>, behavior: Behavior) {
        self.handlers.insert(class.into(), behavior);
    }

    pub fn get(&self, class: &str) -> Behavior {
        self.handlers.get(class).copied().unwrap_or(echo)
    }
}
