use crate::error::Result;
use crate::grid::{Basis, GridFamily, GridSequence};
use crate::jacobi::{JacobiOperator, TildeSequence};
use crate::numeric::{CompensatedSum, DyadicBlocks, LogPower, TriState};
use crate::Scalar;

use super::{not_ell1_gate, validate_horizons, Checkpoint, Gate, SeriesProbe, SeriesVerdict};

fn series_probe<T: Scalar>(
    test: &'static str,
    horizons: &[usize],
    class: Option<LogPower<T>>,
    gate: Gate,
    term: impl Fn(usize) -> T,
) -> Result<SeriesProbe<T>> {
    let last = validate_horizons(horizons)?;
    let mut sum = CompensatedSum::new();
    let mut blocks = DyadicBlocks::new();
    let mut checkpoints = Vec::with_capacity(horizons.len());
    let mut next = horizons.iter().copied().peekable();
    for n in 1..=last {
        let t = term(n);
        sum.push(t);
        blocks.push(n, t);
        if next.peek() == Some(&n) {
            next.next();
            checkpoints.push(Checkpoint {
                horizon: n,
                partial_sum: sum.value(),
            });
        }
    }
    let (verdict, basis) = match class {
        _ if gate.failed() => (SeriesVerdict::Unknown, Basis::Analytic),
        Some(c) if c.series_diverges() => (SeriesVerdict::Diverges, Basis::Analytic),
        Some(_) => (SeriesVerdict::Converges, Basis::Analytic),
        None => (SeriesVerdict::Unknown, Basis::Numeric),
    };
    Ok(SeriesProbe {
        test,
        checkpoints,
        fitted_growth: blocks.growth(T::lit(0.05)),
        verdict,
        basis,
        term_class: class,
        gate,
    })
}

/// Divergence of `Σ |α_n| d_n d_{n+1} r_{n−1} r_{n+1}` (with `r_0 := 1`)
/// certifies self-adjointness.
pub fn test_carleman_i<T: Scalar>(
    op: &JacobiOperator<T>,
    horizons: &[usize],
) -> Result<SeriesProbe<T>> {
    let grid = op.grid();
    let class = match (op.alpha_sequence().magnitude_class(grid), grid.gap_class()) {
        (Some(a), Some(g)) => Some(a * g.powi(3)),
        _ => None,
    };
    series_probe("i", horizons, class, not_ell1_gate(grid), |n| {
        op.alpha(n).abs() * grid.d(n) * grid.d(n + 1) * grid.r_or_one(n - 1) * grid.r_or_one(n + 1)
    })
}

/// Divergence of `Σ |α_n| d_n³`, applicable when `lim inf d_{n+1}/d_n > 0`.
pub fn test_cubic_series<T: Scalar>(
    op: &JacobiOperator<T>,
    horizons: &[usize],
) -> Result<SeriesProbe<T>> {
    let grid = op.grid();
    let last = validate_horizons(horizons)?;
    let ratio_gate = match grid.family() {
        GridFamily::PowerLog { .. } | GridFamily::Constant { .. } | GridFamily::Explicit { .. } => {
            Gate::open()
        }
        GridFamily::Custom { .. } => {
            if last < 40 {
                Gate::new(
                    TriState::Unknown,
                    "horizon too short to bound the gap ratios",
                )
            } else {
                let lo = grid.ratio_stats(last / 2)?.min_tail_ratio;
                let hi = grid.ratio_stats(last)?.min_tail_ratio;
                if hi > T::zero() && hi >= lo * T::lit(0.95) {
                    Gate::open()
                } else {
                    Gate::new(TriState::Unknown, "gap ratios may accumulate at zero")
                }
            }
        }
    };
    let ell1 = not_ell1_gate(grid);
    let gate = match (ratio_gate.status, ell1.status) {
        (TriState::Yes, TriState::Yes) => Gate::open(),
        (_, TriState::No) => ell1,
        (TriState::Yes, _) => ell1,
        _ => ratio_gate,
    };
    let class = match (op.alpha_sequence().magnitude_class(grid), grid.gap_class()) {
        (Some(a), Some(g)) => Some(a * g.powi(3)),
        _ => None,
    };
    series_probe("I", horizons, class, gate, |n| {
        let d = grid.d(n);
        op.alpha(n).abs() * d * d * d
    })
}

/// Asymptotic class of `r̃_n²`, when known.
pub fn tilde_class<T: Scalar>(grid: &GridSequence<T>) -> Option<LogPower<T>> {
    match grid.family() {
        GridFamily::PowerLog { .. } => grid.gap_class(),
        GridFamily::Constant { .. } => Some(LogPower::constant()),
        _ => None,
    }
}

/// Partial sums of `(r_n r̃_n)²`; `{r_n r̃_n} ∈ ℓ²` is condition (A).
pub fn check_condition_a<T: Scalar>(
    grid: &GridSequence<T>,
    horizons: &[usize],
) -> Result<SeriesProbe<T>> {
    let last = validate_horizons(horizons)?;
    let tilde = TildeSequence::build(grid, last + 1);
    check_condition_a_with(&tilde, horizons)
}

pub(crate) fn check_condition_a_with<T: Scalar>(
    tilde: &TildeSequence<T>,
    horizons: &[usize],
) -> Result<SeriesProbe<T>> {
    let grid = tilde.grid();
    let class = match (tilde_class(grid), grid.gap_class()) {
        (Some(t), Some(g)) => Some(t * g),
        _ => None,
    };
    series_probe("A", horizons, class, Gate::open(), |n| tilde.w(n))
}
