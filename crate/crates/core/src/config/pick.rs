use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lang::model::{Direction, Dsd};

use super::{delta, evaluate_term, Cdd, DeploymentDelta, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyKind {
    /// The first candidate (after objective ranking, if any).
    #[default]
    First,
    /// The candidate needing the cheapest delta from the current deployment.
    MinDelta,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(PolicyKind::First),
            "min-delta" => Ok(PolicyKind::MinDelta),
            _ => Err(format!("unknown policy `{s}` (expected `first` or `min-delta`)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PickerPolicy {
    pub kind: PolicyKind,
    pub weights: Weights,
    /// Consider at most this many candidates.
    pub cap: Option<usize>,
    /// Stop drawing candidates after this long.
    pub time_budget: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no candidate configuration to pick from")]
pub struct NoConfiguration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pick {
    pub cdd: Cdd,
    /// From the current deployment (or the empty one) to `cdd`.
    pub delta: DeploymentDelta,
    /// Position of `cdd` in the candidate stream.
    pub position: usize,
    /// Candidates drawn from the stream.
    pub seen: usize,
    /// The stream ended before the cap or budget did.
    pub exhausted: bool,
}

/// Chooses one of `candidates`.
///
/// Candidates are drawn in order until the stream, the cap or the time
/// budget runs out. If `dsd` has an optimization directive the drawn
/// candidates are stably ranked by it first, so `first` yields the best
/// candidate and `min-delta` breaks cost ties by preference, then by
/// stream order. A missing current deployment is treated as empty.
pub fn pick(
    candidates: impl IntoIterator<Item = Cdd>,
    current: Option<&Cdd>,
    dsd: &Dsd,
    policy: &PickerPolicy,
) -> Result<Pick, NoConfiguration> {
    let start = Instant::now();
    let mut drawn: Vec<(usize, Cdd)> = Vec::new();
    let mut iter = candidates.into_iter();
    let mut exhausted = false;
    loop {
        if policy.cap.is_some_and(|cap| drawn.len() >= cap)
            || policy.time_budget.is_some_and(|b| !drawn.is_empty() && start.elapsed() >= b)
        {
            break;
        }
        match iter.next() {
            Some(c) => drawn.push((drawn.len(), c)),
            None => {
                exhausted = true;
                break;
            }
        }
        // Without ranking or comparison, one candidate is enough.
        if policy.kind == PolicyKind::First && dsd.objective.is_none() {
            break;
        }
    }
    let seen = drawn.len();
    if let Some(objective) = &dsd.objective {
        drawn.sort_by_cached_key(|(_, c)| {
            let v = evaluate_term(c, dsd, &objective.term).unwrap_or(i64::MAX);
            match objective.direction {
                Direction::Minimize => v,
                Direction::Maximize => v.checked_neg().unwrap_or(i64::MAX),
            }
        });
    }
    let empty;
    let current = match current {
        Some(c) => c,
        None => {
            let name = drawn.first().map(|(_, c)| c.dsd.clone()).unwrap_or_default();
            empty = Cdd::empty(name);
            &empty
        }
    };
    let mut best: Option<(usize, Cdd, DeploymentDelta)> = None;
    for (position, cdd) in drawn {
        let d = delta(current, &cdd, &policy.weights).unwrap_or_else(|_| DeploymentDelta {
            cost: u64::MAX,
            ..Default::default()
        });
        let better = best.as_ref().is_none_or(|(_, _, b)| d.cost < b.cost);
        if better {
            best = Some((position, cdd, d));
        }
        if policy.kind == PolicyKind::First {
            break;
        }
    }
    let (position, cdd, delta) = best.ok_or(NoConfiguration)?;
    Ok(Pick {
        cdd,
        delta,
        position,
        seen,
        exhausted,
    })
}
