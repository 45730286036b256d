use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::{JacobiOperator, TildeSequence};
use crate::numeric::TriState;
use crate::Scalar;

/// Magnitude guard `2^100`; values are renormalized outside `[2^-100, 2^100]`.
const GUARD_EXP: i32 = 100;

/// Solution of `(B − λ)h = 0` with `h_1 = 1`, stored as mantissas and a
/// piecewise-constant log scale: `h_n = values[n−1]·exp(log_scale[n−1])`.
#[derive(Debug, Clone)]
pub struct RecurrenceSolution<T> {
    pub lambda: Complex<T>,
    values: Vec<Complex<T>>,
    log_scale: Vec<T>,
    /// `ln Σ |h_n|²` over each completed dyadic block `[2^k, 2^{k+1})`.
    pub block_log_mass: Vec<T>,
    pub rescales: usize,
}

fn log_add<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Streams `ln|h|²` terms into dyadic block masses.
struct BlockMass<T> {
    done: Vec<T>,
    current: T,
    next_edge: usize,
}

impl<T: Scalar> BlockMass<T> {
    fn new() -> Self {
        Self {
            done: Vec::new(),
            current: T::neg_infinity(),
            next_edge: 2,
        }
    }

    fn push(&mut self, n: usize, log_sq: T) {
        if n >= self.next_edge {
            self.done.push(self.current);
            self.current = T::neg_infinity();
            self.next_edge *= 2;
        }
        self.current = log_add(self.current, log_sq);
    }
}

fn log_sq<T: Scalar>(h: Complex<T>, scale: T) -> T {
    let m = h.norm_sqr();
    if m == T::zero() {
        T::neg_infinity()
    } else {
        m.ln() + scale + scale
    }
}

/// Forward recurrence for `(B − λ)h = 0`, `n ≤ horizon`.
pub fn solve_recurrence<T: Scalar>(
    op: &JacobiOperator<T>,
    lambda: Complex<T>,
    horizon: usize,
) -> Result<RecurrenceSolution<T>> {
    if horizon < 2 {
        return Err(Error::Parameter {
            name: "horizon",
            value: horizon as f64,
            reason: "the recurrence needs N >= 2",
        });
    }
    let mut values = Vec::new();
    let mut log_scale = Vec::new();
    values
        .try_reserve_exact(horizon)
        .and_then(|_| log_scale.try_reserve_exact(horizon))
        .map_err(|e| Error::Resource(format!("cannot store {horizon} recurrence values: {e}")))?;

    let hi = T::lit(2f64.powi(GUARD_EXP));
    let lo = T::lit(2f64.powi(-GUARD_EXP));
    let mut blocks = BlockMass::new();
    let mut scale = T::zero();
    let mut rescales = 0;

    let off1 = op.off(1);
    let mut prev = Complex::new(T::one(), T::zero());
    let mut cur = -(Complex::from(op.diag(1)) - lambda) * prev / off1;
    values.push(prev);
    log_scale.push(scale);
    blocks.push(1, log_sq(prev, scale));
    let mut off_prev = off1;

    for n in 2..=horizon {
        let m = cur.norm();
        if !m.is_finite() {
            return Err(Error::Numerical(format!(
                "recurrence overflowed at n = {n}"
            )));
        }
        if m > hi || (m < lo && m > T::zero()) {
            prev = prev / m;
            cur = cur / m;
            scale = scale + m.ln();
            rescales += 1;
        }
        values.push(cur);
        log_scale.push(scale);
        blocks.push(n, log_sq(cur, scale));
        if n == horizon {
            break;
        }
        let off_n = op.off(n);
        let next = -(prev * off_prev + (Complex::from(op.diag(n)) - lambda) * cur) / off_n;
        prev = cur;
        cur = next;
        off_prev = off_n;
    }
    Ok(RecurrenceSolution {
        lambda,
        values,
        log_scale,
        block_log_mass: blocks.done,
        rescales,
    })
}

impl<T: Scalar> RecurrenceSolution<T> {
    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// `(mantissa, log scale)` of `h_n`.
    pub fn scaled(&self, n: usize) -> (Complex<T>, T) {
        (self.values[n - 1], self.log_scale[n - 1])
    }

    /// `h_n`; may overflow for large scales.
    pub fn value(&self, n: usize) -> Complex<T> {
        let (m, s) = self.scaled(n);
        m * s.exp()
    }

    /// Normwise backward error of the equation at row `n < N`:
    /// `|o_{n−1}h_{n−1} + (b_n − λ)h_n + o_n h_{n+1}|` divided by the sum of
    /// the term magnitudes. `None` if the row straddles a rescale.
    pub fn row_residual(&self, op: &JacobiOperator<T>, n: usize) -> Option<T> {
        if n == 0 || n >= self.horizon() {
            return None;
        }
        let lo = n.saturating_sub(2);
        let s = self.log_scale[n - 1];
        if self.log_scale[lo..=n].iter().any(|&x| x != s) {
            return None;
        }
        let b = (Complex::from(op.diag(n)) - self.lambda) * self.values[n - 1];
        let c = self.values[n] * op.off(n);
        let a = if n == 1 {
            Complex::new(T::zero(), T::zero())
        } else {
            self.values[n - 2] * op.off(n - 1)
        };
        Some(relative(a + b + c, a.norm() + b.norm() + c.norm()))
    }

    /// Largest [`row_residual`](Self::row_residual) over rows `1..N−1`.
    pub fn max_row_residual(&self, op: &JacobiOperator<T>) -> T {
        (1..self.horizon())
            .filter_map(|n| self.row_residual(op, n))
            .fold(T::zero(), T::max)
    }

    /// Writes `n,re,im,log_scale` rows for every `stride`-th index.
    pub fn write_csv<W: Write>(&self, mut out: W, stride: usize) -> std::io::Result<()> {
        writeln!(out, "n,re,im,log_scale")?;
        let stride = stride.max(1);
        for n in (1..=self.horizon()).step_by(stride) {
            let (m, s) = self.scaled(n);
            writeln!(
                out,
                "{n},{:e},{:e},{:e}",
                m.re.to_f64_lossy(),
                m.im.to_f64_lossy(),
                s.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

fn relative<T: Scalar>(r: Complex<T>, scale: T) -> T {
    if scale == T::zero() {
        T::zero()
    } else {
        r.norm() / scale
    }
}

/// Thresholds for the ℓ² tail decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L2Config {
    /// Blocks used for the geometric fit.
    pub blocks: usize,
    /// Fewer completed blocks than this gives `unknown`.
    pub min_blocks: usize,
    /// Ratio must be below `1 − margin` (above `1 + margin`).
    pub margin: f64,
    /// Largest geometric ratio of gauge-relative increments read as bounded.
    pub envelope_ratio: f64,
}

impl Default for L2Config {
    fn default() -> Self {
        Self {
            blocks: 6,
            min_blocks: 8,
            margin: 0.1,
            envelope_ratio: 0.97,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L2Status {
    InEll2,
    NotInEll2,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct L2Verdict<T> {
    /// `ln` of the ℓ² mass of each dyadic block.
    pub block_log_mass: Vec<T>,
    /// Per-block geometric ratio of the masses over the last `blocks` blocks.
    pub decay_ratio: Option<T>,
    /// Growth relative to the gauge, unless the direct ratio gave `in_ell2`.
    pub envelope: Option<Envelope<T>>,
    pub verdict: L2Status,
}

/// Block-by-block growth of a solution relative to a reference sequence.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T> {
    /// Increments of `ln(mass_h / mass_ref)` between consecutive blocks.
    pub increments: Vec<T>,
    /// Geometric ratio of the last `blocks` increments, if all positive.
    pub ratio: Option<T>,
    pub bounded: TriState,
}

impl<T: Scalar> Envelope<T> {
    pub fn from_masses(h: &[T], reference: &[T], cfg: &L2Config) -> Self {
        let k = h.len().min(reference.len());
        let increments: Vec<T> = (1..k)
            .map(|i| (h[i] - reference[i]) - (h[i - 1] - reference[i - 1]))
            .collect();
        let b = cfg.blocks.max(2);
        if k < cfg.min_blocks || increments.len() < b {
            return Self {
                increments,
                ratio: None,
                bounded: TriState::Unknown,
            };
        }
        let tail = &increments[increments.len() - b..];
        let settled = T::lit(1e-3);
        let ratio = tail
            .iter()
            .all(|&x| x > T::zero())
            .then(|| (tail[b - 1] / tail[0]).powf(T::idx(b - 1).recip()));
        let bounded = if tail.iter().all(|&x| x <= settled) {
            TriState::Yes
        } else {
            match ratio {
                Some(q) if q <= T::lit(cfg.envelope_ratio) => TriState::Yes,
                Some(q) if q >= T::one() => TriState::No,
                _ => TriState::Unknown,
            }
        };
        Self {
            increments,
            ratio,
            bounded,
        }
    }
}

impl<T: Scalar> L2Verdict<T> {
    pub fn from_block_log_mass(block_log_mass: Vec<T>, cfg: &L2Config) -> Self {
        let k = block_log_mass.len();
        let decay_ratio = (k > cfg.blocks && cfg.blocks > 0).then(|| {
            let (a, b) = (block_log_mass[k - 1 - cfg.blocks], block_log_mass[k - 1]);
            ((b - a) / T::idx(cfg.blocks)).exp()
        });
        let verdict = match decay_ratio {
            _ if k < cfg.min_blocks => L2Status::Unknown,
            Some(q) if q < T::lit(1.0 - cfg.margin) => L2Status::InEll2,
            Some(q) if q > T::lit(1.0 + cfg.margin) => L2Status::NotInEll2,
            _ => L2Status::Unknown,
        };
        Self {
            block_log_mass,
            decay_ratio,
            envelope: None,
            verdict,
        }
    }

    /// Probe of an explicit sequence `h_1, h_2, …`.
    pub fn from_sequence(values: impl IntoIterator<Item = T>, cfg: &L2Config) -> Self {
        let mut blocks = BlockMass::new();
        for (i, h) in values.into_iter().enumerate() {
            let sq = h * h;
            blocks.push(
                i + 1,
                if sq == T::zero() {
                    T::neg_infinity()
                } else {
                    sq.ln()
                },
            );
        }
        Self::from_block_log_mass(blocks.done, cfg)
    }
}

/// ℓ² verdict for a recurrence solution.
pub fn l2_probe<T: Scalar>(sol: &RecurrenceSolution<T>, cfg: &L2Config) -> L2Verdict<T> {
    L2Verdict::from_block_log_mass(sol.block_log_mass.clone(), cfg)
}

/// Like [`l2_probe`], but unless the direct ratio already gives `in_ell2`
/// the growth of `|h_n|²` relative to the gauge `r_n² r̃_n²` is measured:
/// a bounded envelope over a square-summable gauge gives `in_ell2`, and a
/// direct `not_in_ell2` stands only if the envelope is not bounded.
pub fn l2_probe_gauged<T: Scalar>(
    sol: &RecurrenceSolution<T>,
    op: &JacobiOperator<T>,
    cfg: &L2Config,
) -> L2Verdict<T> {
    let mut v = l2_probe(sol, cfg);
    if v.verdict == L2Status::InEll2 {
        return v;
    }
    let n = sol.horizon();
    let built;
    let tilde = if op.tilde().capacity() > n + 1 {
        op.tilde()
    } else {
        built = TildeSequence::build(op.grid(), n + 2);
        &built
    };
    let mut gauge = BlockMass::new();
    for k in 1..=n {
        gauge.push(k, tilde.w(k).ln());
    }
    let reference = L2Verdict::from_block_log_mass(gauge.done, cfg);
    let envelope = Envelope::from_masses(&v.block_log_mass, &reference.block_log_mass, cfg);
    v.verdict = match (v.verdict, reference.verdict, envelope.bounded) {
        (_, L2Status::InEll2, TriState::Yes) => L2Status::InEll2,
        (L2Status::NotInEll2, _, TriState::Yes) => L2Status::Unknown,
        (direct, _, _) => direct,
    };
    v.envelope = Some(envelope);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSequence;
    use crate::jacobi::{AlphaSequence, TildeSequence};

    fn op(grid: GridSequence<f64>, alpha: AlphaSequence<f64>) -> JacobiOperator<f64> {
        JacobiOperator::new(grid, alpha)
    }

    #[test]
    fn first_step_on_constant_grid() {
        let b = op(GridSequence::constant(1.0).unwrap(), AlphaSequence::zero());
        let s = solve_recurrence(&b, Complex::new(0.0, 0.0), 10).unwrap();
        assert!((s.value(2) - Complex::new(2.0, 0.0)).norm() < 1e-14);
        assert_eq!(s.value(1), Complex::new(1.0, 0.0));
        assert!(solve_recurrence(&b, Complex::new(0.0, 0.0), 1).is_err());
    }

    #[test]
    fn shubin_solution_is_square_summable() {
        let g = GridSequence::power(1.0).unwrap();
        let b = op(
            g,
            AlphaSequence::power_sum(vec![(-2.0, 1.0), (-1.0, 0.0)]).unwrap(),
        );
        let s = solve_recurrence(&b, Complex::new(0.0, 0.0), 1 << 16).unwrap();
        let v = l2_probe(&s, &L2Config::default());
        assert_eq!(v.verdict, L2Status::InEll2, "{v:?}");
        assert!(s.max_row_residual(&b) < 1e-8);
    }

    #[test]
    fn rescaling_keeps_rows_consistent() {
        let g = GridSequence::constant(1.0).unwrap();
        let b = op(g, AlphaSequence::power_sum(vec![(10.0, 0.0)]).unwrap());
        let s = solve_recurrence(&b, Complex::new(0.0, 1.0), 4096).unwrap();
        assert!(s.rescales > 0);
        assert!(s.max_row_residual(&b) < 1e-12);
        assert_eq!(
            l2_probe(&s, &L2Config::default()).verdict,
            L2Status::NotInEll2
        );
        let mut buf = Vec::new();
        s.write_csv(&mut buf, 1000).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,re,im,log_scale\n1,1e0,0e0,0e0\n"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn synthetic_sequences() {
        let cfg = L2Config::default();
        let geo = L2Verdict::from_sequence((1..=4096).map(|n| 0.99f64.powi(n)), &cfg);
        assert_eq!(geo.verdict, L2Status::InEll2);
        let flat = L2Verdict::from_sequence((1..=4096).map(|_| 1.0f64), &cfg);
        assert_eq!(flat.verdict, L2Status::NotInEll2);
        assert!((flat.decay_ratio.unwrap() - 2.0).abs() < 1e-9);
        let short = L2Verdict::from_sequence((1..=64).map(|_| 1.0f64), &cfg);
        assert_eq!(short.verdict, L2Status::Unknown);
    }

    #[test]
    fn gauge_sequence_is_square_summable() {
        let g = GridSequence::<f64>::power(0.75).unwrap();
        let t = TildeSequence::build(&g, 1 << 14);
        let v = L2Verdict::from_sequence((1..1 << 14).map(|n| t.w(n).sqrt()), &L2Config::default());
        assert_eq!(v.verdict, L2Status::InEll2);
    }

    #[test]
    fn envelope_classification() {
        let cfg = L2Config::default();
        let reference: Vec<f64> = (0..20).map(|k| -0.2 * k as f64).collect();
        let with = |inc: &dyn Fn(usize) -> f64| {
            let mut h = vec![0.0];
            for k in 1..20 {
                h.push(h[k - 1] + reference[k] - reference[k - 1] + inc(k));
            }
            Envelope::from_masses(&h, &reference, &cfg)
        };
        let e = with(&|k| 0.87f64.powi(k as i32));
        assert_eq!(e.bounded, TriState::Yes);
        assert!((e.ratio.unwrap() - 0.87).abs() < 1e-9);
        assert_eq!(with(&|_| 1.78).bounded, TriState::No);
        assert_eq!(with(&|k| 2f64.powi(k as i32)).bounded, TriState::No);
        assert_eq!(with(&|_| 0.0).bounded, TriState::Yes);
        assert_eq!(with(&|k| 0.99f64.powi(k as i32)).bounded, TriState::Unknown);
    }
}
