use std::collections::VecDeque;
use std::ops::ControlFlow;
use std::time::Instant;

use super::{Capture, EnumerationResult, Model, Relation, SolveLimits, VarId};

/// Why propagation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conflict {
    /// The constraint at this index (in [`Model::constraints`]) cannot be met.
    Constraint(usize),
    /// The value requested for this variable is outside its current bounds.
    Domain(VarId),
    /// The model was marked false at construction.
    Contradiction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Propagation {
    /// Every variable fixed by propagation, by id.
    Fixpoint(Vec<Option<u32>>),
    Conflict(Conflict),
}

impl Propagation {
    pub fn is_conflict(&self) -> bool {
        matches!(self, Propagation::Conflict(_))
    }
}

/// `Σ a·x ≤ bound`, with the running minimum of the left-hand side under
/// the current bounds.
struct Row {
    terms: Vec<(i64, VarId)>,
    bound: i64,
    min_sum: i64,
    /// Largest spread (max − min contribution) of any single term over the
    /// initial domains. While the slack is at least this large no term can
    /// be forced, so the row need not be scanned.
    max_range: i64,
    /// Index of the user-facing constraint this row came from.
    origin: usize,
}

struct TrailEntry {
    var: VarId,
    lo: u32,
    hi: u32,
}

/// Search state over a [`Model`]. Bounds are kept as indices into each
/// variable's domain; every change is trailed so backtracking restores it.
pub struct Solver<'m> {
    model: &'m Model,
    domains: Vec<Vec<i64>>,
    lo: Vec<u32>,
    hi: Vec<u32>,
    rows: Vec<Row>,
    /// Per variable: `(row, coefficient)` for each row mentioning it.
    occurs: Vec<Vec<(usize, i64)>>,
    trail: Vec<TrailEntry>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
}

impl<'m> Solver<'m> {
    pub fn new(model: &'m Model) -> Self {
        let domains: Vec<Vec<i64>> = model
            .vars()
            .iter()
            .map(|v| v.domain.iter().map(|&x| i64::from(x)).collect())
            .collect();
        let lo = vec![0; domains.len()];
        let hi: Vec<u32> = domains.iter().map(|d| (d.len() - 1) as u32).collect();
        let mut rows = Vec::new();
        for (origin, c) in model.constraints().iter().enumerate() {
            let negated = || c.terms.iter().map(|&(a, v)| (-a, v)).collect::<Vec<_>>();
            match c.relation {
                Relation::Le => rows.push((c.terms.clone(), c.bound, origin)),
                Relation::Ge => rows.push((negated(), -c.bound, origin)),
                Relation::Eq => {
                    rows.push((c.terms.clone(), c.bound, origin));
                    rows.push((negated(), -c.bound, origin));
                }
            }
        }
        let mut occurs = vec![Vec::new(); domains.len()];
        let rows: Vec<Row> = rows
            .into_iter()
            .enumerate()
            .map(|(r, (terms, bound, origin))| {
                let mut min_sum = 0;
                let mut max_range = 0;
                for &(a, v) in &terms {
                    let d = &domains[v];
                    let (first, last) = (d[0], d[d.len() - 1]);
                    min_sum += (a * first).min(a * last);
                    max_range = max_range.max(a.abs() * (last - first));
                    occurs[v].push((r, a));
                }
                Row {
                    terms,
                    bound,
                    min_sum,
                    max_range,
                    origin,
                }
            })
            .collect();
        let queued = vec![false; rows.len()];
        Solver {
            model,
            domains,
            lo,
            hi,
            rows,
            occurs,
            trail: Vec::new(),
            queue: VecDeque::new(),
            queued,
        }
    }

    /// Propagates every constraint once from the initial domains.
    pub fn propagate_root(&mut self) -> Result<(), Conflict> {
        if self.model.contradiction().is_some() {
            return Err(Conflict::Contradiction);
        }
        for r in 0..self.rows.len() {
            self.enqueue(r);
        }
        self.propagate()
    }

    /// Fixes `var` to `value` and propagates.
    pub fn assign(&mut self, var: VarId, value: u32) -> Result<(), Conflict> {
        let idx = self.domains[var][self.lo[var] as usize..=self.hi[var] as usize]
            .binary_search(&i64::from(value))
            .map_err(|_| Conflict::Domain(var))? as u32
            + self.lo[var];
        self.set_bounds(var, idx, idx);
        self.propagate()
    }

    pub fn fixed_values(&self) -> Vec<Option<u32>> {
        (0..self.domains.len())
            .map(|v| (self.lo[v] == self.hi[v]).then(|| self.value(v)))
            .collect()
    }

    fn value(&self, v: VarId) -> u32 {
        self.domains[v][self.lo[v] as usize] as u32
    }

    #[inline]
    fn min_contribution(&self, a: i64, v: VarId, lo: u32, hi: u32) -> i64 {
        let d = &self.domains[v];
        if a > 0 {
            a * d[lo as usize]
        } else {
            a * d[hi as usize]
        }
    }

    #[inline]
    fn enqueue(&mut self, r: usize) {
        if !self.queued[r] {
            self.queued[r] = true;
            self.queue.push_back(r);
        }
    }

    fn set_bounds(&mut self, v: VarId, lo: u32, hi: u32) {
        let (old_lo, old_hi) = (self.lo[v], self.hi[v]);
        self.trail.push(TrailEntry {
            var: v,
            lo: old_lo,
            hi: old_hi,
        });
        self.lo[v] = lo;
        self.hi[v] = hi;
        for i in 0..self.occurs[v].len() {
            let (r, a) = self.occurs[v][i];
            let delta = self.min_contribution(a, v, lo, hi) - self.min_contribution(a, v, old_lo, old_hi);
            if delta != 0 {
                let row = &mut self.rows[r];
                row.min_sum += delta;
                if row.bound - row.min_sum < row.max_range {
                    self.enqueue(r);
                }
            }
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let TrailEntry { var: v, lo, hi } = self.trail.pop().expect("trail length checked");
            let (cur_lo, cur_hi) = (self.lo[v], self.hi[v]);
            for i in 0..self.occurs[v].len() {
                let (r, a) = self.occurs[v][i];
                let delta = self.min_contribution(a, v, cur_lo, cur_hi) - self.min_contribution(a, v, lo, hi);
                self.rows[r].min_sum -= delta;
            }
            self.lo[v] = lo;
            self.hi[v] = hi;
        }
    }

    fn propagate(&mut self) -> Result<(), Conflict> {
        while let Some(r) = self.queue.pop_front() {
            self.queued[r] = false;
            if let Err(c) = self.scan(r) {
                for q in self.queue.drain(..) {
                    self.queued[q] = false;
                }
                return Err(c);
            }
        }
        Ok(())
    }

    /// Tightens every term of row `r` whose full spread exceeds the slack.
    /// Tightening only lowers a term's maximum, so the slack is constant
    /// during the scan and one pass suffices.
    fn scan(&mut self, r: usize) -> Result<(), Conflict> {
        let slack = self.rows[r].bound - self.rows[r].min_sum;
        if slack < 0 {
            return Err(Conflict::Constraint(self.rows[r].origin));
        }
        if slack >= self.rows[r].max_range {
            return Ok(());
        }
        for i in 0..self.rows[r].terms.len() {
            let (a, v) = self.rows[r].terms[i];
            let (lo, hi) = (self.lo[v], self.hi[v]);
            if lo == hi {
                continue;
            }
            let d = &self.domains[v];
            if a > 0 {
                // a·x ≤ a·d[lo] + slack
                let limit = d[lo as usize] + slack / a;
                if d[hi as usize] > limit {
                    let new_hi = d[..=hi as usize].partition_point(|&x| x <= limit) as u32 - 1;
                    self.set_bounds(v, lo, new_hi);
                }
            } else {
                // a·x ≤ a·d[hi] + slack, i.e. x ≥ d[hi] − slack/|a|
                let limit = d[hi as usize] - slack / -a;
                if d[lo as usize] < limit {
                    let new_lo = d[..=hi as usize].partition_point(|&x| x < limit) as u32;
                    self.set_bounds(v, new_lo, hi);
                }
            }
        }
        Ok(())
    }

    pub fn enumerate(
        mut self,
        limits: &SolveLimits,
        mut visitor: impl FnMut(&[u32]) -> ControlFlow<()>,
    ) -> EnumerationResult {
        struct Frame {
            var: VarId,
            val: u32,
            trail_len: usize,
        }

        let start = Instant::now();
        let deadline = limits.time_budget.map(|b| start + b);
        let mut result = EnumerationResult {
            solution_count: 0,
            captured: Vec::new(),
            exhausted: false,
            elapsed: Default::default(),
            first_solution_latency: None,
        };
        let capture_cap = match limits.capture {
            Capture::None => 0,
            Capture::FirstK(k) => k,
            Capture::All => usize::MAX,
        };
        if limits.max_solutions == Some(0) {
            result.elapsed = start.elapsed();
            return result;
        }

        let n = self.domains.len();
        let mut frames: Vec<Frame> = Vec::new();
        let mut cursor = 0;
        let mut nodes: u64 = 0;
        let mut buf = vec![0u32; n];
        let mut ok = self.propagate_root().is_ok();

        'search: loop {
            if ok {
                while cursor < n && self.lo[cursor] == self.hi[cursor] {
                    cursor += 1;
                }
                if cursor < n {
                    nodes += 1;
                    if nodes & 0x3ff == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
                        break 'search;
                    }
                    let v = cursor;
                    let val = self.lo[v];
                    frames.push(Frame {
                        var: v,
                        val,
                        trail_len: self.trail.len(),
                    });
                    self.set_bounds(v, val, val);
                    ok = self.propagate().is_ok();
                    continue;
                }
                for (v, slot) in buf.iter_mut().enumerate() {
                    *slot = self.value(v);
                }
                result.solution_count += 1;
                if result.first_solution_latency.is_none() {
                    result.first_solution_latency = Some(start.elapsed());
                }
                if result.captured.len() < capture_cap {
                    result.captured.push(buf.clone());
                }
                if visitor(&buf).is_break() || limits.max_solutions == Some(result.solution_count) {
                    break 'search;
                }
            }
            // Backtrack to the most recent decision that has a value left.
            loop {
                let Some(f) = frames.pop() else {
                    result.exhausted = true;
                    break 'search;
                };
                self.undo_to(f.trail_len);
                cursor = f.var;
                let next = f.val + 1;
                if next < self.hi[f.var] {
                    frames.push(Frame {
                        var: f.var,
                        val: next,
                        trail_len: self.trail.len(),
                    });
                }
                // The last value is no longer a choice: it is recorded at the
                // parent's level and undone together with it.
                self.set_bounds(f.var, next, next);
                ok = self.propagate().is_ok();
                if ok {
                    break;
                }
                // A failed non-last value has its own frame, popped next.
            }
        }
        result.elapsed = start.elapsed();
        result
    }
}
