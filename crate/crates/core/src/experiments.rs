//! The bundled experiment descriptions (`experiments/*.deladas`).

use crate::lang::{self, Diagnostics, Dsd};

/// `(name, source)` for experiments 1 through 11, in order.
pub const EXPERIMENTS: [(&str, &str); 11] = [
    ("exp1", include_str!("../../../experiments/exp1.deladas")),
    ("exp2", include_str!("../../../experiments/exp2.deladas")),
    ("exp3", include_str!("../../../experiments/exp3.deladas")),
    ("exp4", include_str!("../../../experiments/exp4.deladas")),
    ("exp5", include_str!("../../../experiments/exp5.deladas")),
    ("exp6", include_str!("../../../experiments/exp6.deladas")),
    ("exp7", include_str!("../../../experiments/exp7.deladas")),
    ("exp8", include_str!("../../../experiments/exp8.deladas")),
    ("exp9", include_str!("../../../experiments/exp9.deladas")),
    ("exp10", include_str!("../../../experiments/exp10.deladas")),
    ("exp11", include_str!("../../../experiments/exp11.deladas")),
];

/// The Maths service description: component declarations followed by hosts
/// and the constraint set.
pub const MATHS: &str = include_str!("../../../experiments/maths.deladas");

/// Loads experiment `n` (1-based).
pub fn experiment(n: usize) -> Result<Dsd, Diagnostics> {
    let (name, src) = EXPERIMENTS[n - 1];
    lang::load(src, name)
}

pub fn maths() -> Dsd {
    lang::load(MATHS, "maths").expect("bundled maths description resolves")
}
