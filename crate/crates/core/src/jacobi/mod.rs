//! The Jacobi matrix `B_{X,α}`, the alternating sequence `r̃_n` and the
//! diagonal gauge that maps `B_{X,α⁰}` onto a period-2 matrix.

mod alpha;
mod tilde;

use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSequence;
use crate::Scalar;

use alpha::shifted_power_sum;
pub use alpha::{AlphaFamily, AlphaSequence, Perturbation};
pub use tilde::{alpha_zero, rho, tilde_r, TildeSequence};

/// Period-2 sequence keyed by index parity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodPair<T> {
    pub u_odd: T,
    pub u_even: T,
}

impl<T: Scalar> PeriodPair<T> {
    pub fn new(u_odd: T, u_even: T) -> Self {
        Self { u_odd, u_even }
    }

    #[inline]
    pub fn at(&self, n: usize) -> T {
        if n % 2 == 1 {
            self.u_odd
        } else {
            self.u_even
        }
    }

    pub fn product(&self) -> T {
        self.u_odd * self.u_even
    }
}

/// Entry-wise view of `B_{X,α}`:
/// `diag(n) = r_n^{−2}(α_n + 1/d_n + 1/d_{n+1})`,
/// `off(n) = −1/(r_n r_{n+1} d_{n+1})`.
#[derive(Debug)]
pub struct JacobiOperator<T: Scalar> {
    grid: GridSequence<T>,
    alpha: AlphaSequence<T>,
    tilde: OnceLock<TildeSequence<T>>,
}

impl<T: Scalar> Clone for JacobiOperator<T> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            alpha: self.alpha.clone(),
            tilde: self.tilde.clone(),
        }
    }
}

impl<T: Scalar> JacobiOperator<T> {
    pub fn new(grid: GridSequence<T>, alpha: AlphaSequence<T>) -> Self {
        Self {
            grid,
            alpha,
            tilde: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &GridSequence<T> {
        &self.grid
    }

    pub fn alpha_sequence(&self) -> &AlphaSequence<T> {
        &self.alpha
    }

    /// `r̃` precomputed up to the grid's `max_index`.
    pub fn tilde(&self) -> &TildeSequence<T> {
        self.tilde
            .get_or_init(|| TildeSequence::build(&self.grid, self.grid.max_index() + 2))
    }

    /// `α_n`.
    pub fn alpha(&self, n: usize) -> T {
        match self.alpha.value_direct(&self.grid, n) {
            Some(v) => v,
            None => match self.alpha.family() {
                AlphaFamily::AlphaZero { a, u } => tilde::alpha_zero_with(self.tilde(), *a, *u, n),
                _ => unreachable!("only alpha-zero needs r̃"),
            },
        }
    }

    /// `α_n + 1/d_n + 1/d_{n+1}`, formed without cancellation for the
    /// scaled families.
    #[inline]
    pub fn diag_numerator(&self, n: usize) -> T {
        self.alpha_shifted(n, T::one()).0
    }

    /// `α_n + k(1/d_n + 1/d_{n+1})` and a magnitude bounding the terms
    /// that were combined, for rounding allowances.
    pub fn alpha_shifted(&self, n: usize, k: T) -> (T, T) {
        let s = self.grid.inverse_gap_sum(n);
        match self.alpha.family() {
            AlphaFamily::ScaledInverseGaps { a, perturbation } => {
                let p = perturbation.value(&self.grid, n);
                ((*a + k) * s + p, (*a + k).abs() * s + p.abs())
            }
            AlphaFamily::AlphaZero { a, u } => {
                let e = tilde::alpha_zero_excess(self.tilde(), *a, *u, n);
                let rest = (k - T::one()) * s;
                (e + rest, e.abs() + rest.abs())
            }
            AlphaFamily::PowerSum { terms } if self.is_inverse_n() => {
                let v = shifted_power_sum(terms, k, n);
                (v, v.abs())
            }
            _ => {
                let al = self.alpha(n);
                (al + k * s, al.abs() + k.abs() * s)
            }
        }
    }

    fn is_inverse_n(&self) -> bool {
        self.grid
            .power_log_params()
            .is_some_and(|(g, e, d1)| g == T::one() && e == T::zero() && d1 == T::one())
    }

    #[inline]
    pub fn diag(&self, n: usize) -> T {
        self.diag_numerator(n) / (self.grid.d(n) + self.grid.d(n + 1))
    }

    #[inline]
    pub fn off(&self, n: usize) -> T {
        let r_n = self.grid.r_or_one(n);
        let r_next = self.grid.r_or_one(n + 1);
        -self.grid.inv_d(n + 1) / (r_n * r_next)
    }

    /// Matrix entry `(i, j)`, 1-based; zero off the three central diagonals
    /// and outside the matrix.
    pub fn entry(&self, i: usize, j: usize) -> T {
        if i == 0 || j == 0 {
            return T::zero();
        }
        match i.abs_diff(j) {
            0 => self.diag(i),
            1 => self.off(i.min(j)),
            _ => T::zero(),
        }
    }

    /// Principal `N×N` section.
    pub fn truncate(&self, size: usize) -> Result<SymTridiagonal<T>> {
        if size == 0 {
            return Err(Error::InvalidInput(
                "section size must be at least 1".into(),
            ));
        }
        let mut diag = Vec::new();
        let mut off = Vec::new();
        diag.try_reserve_exact(size)
            .and_then(|_| off.try_reserve_exact(size - 1))
            .map_err(|e| {
                Error::Resource(format!("cannot allocate a {size}x{size} section: {e}"))
            })?;
        for n in 1..=size {
            diag.push(self.diag(n));
            if n < size {
                off.push(self.off(n));
            }
        }
        Ok(SymTridiagonal { diag, off })
    }

    /// Entries of `R̃ R B R R̃` at row `n`: `(r̃_n r_n)² diag(n)` and
    /// `r̃_n r_n · off(n) · r_{n+1} r̃_{n+1}`.
    pub fn scaled_entries(&self, n: usize) -> (T, T) {
        let t = self.tilde();
        let g_n = t.value(n) * self.grid.r_or_one(n);
        let g_next = t.value(n + 1) * self.grid.r_or_one(n + 1);
        (g_n * self.diag(n) * g_n, g_n * self.off(n) * g_next)
    }
}

/// Dense storage of a symmetric tridiagonal section.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Scalar> SymTridiagonal<T> {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// 1-based entry access.
    pub fn get(&self, i: usize, j: usize) -> T {
        if i == 0 || j == 0 || i > self.size() || j > self.size() {
            return T::zero();
        }
        match i.abs_diff(j) {
            0 => self.diag[i - 1],
            1 => self.off[i.min(j) - 1],
            _ => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.size();
        (1..=n)
            .map(|i| (1..=n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Writes `row,col,value` lines for every structurally nonzero entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "row,col,value")?;
        let n = self.size();
        for i in 1..=n {
            for j in i.saturating_sub(1).max(1)..=(i + 1).min(n) {
                writeln!(out, "{i},{j},{:e}", self.get(i, j).to_f64_lossy())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn op(grid: GridSequence<f64>, alpha: AlphaSequence<f64>) -> JacobiOperator<f64> {
        JacobiOperator::new(grid, alpha)
    }

    #[test]
    fn entry_examples() {
        let c = op(GridSequence::constant(1.0).unwrap(), AlphaSequence::zero());
        assert!((c.entry(1, 1) - 1.0).abs() < 1e-15);
        assert!((c.entry(1, 2) + 0.5).abs() < 1e-15);
        assert_eq!(c.entry(1, 3), 0.0);
        let p = op(GridSequence::power(1.0).unwrap(), AlphaSequence::zero());
        assert!((p.entry(1, 1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn truncate_examples() {
        let c = op(GridSequence::constant(1.0).unwrap(), AlphaSequence::zero());
        assert_eq!(c.truncate(1).unwrap().to_dense(), vec![vec![c.entry(1, 1)]]);
        let m = c.truncate(2).unwrap().to_dense();
        assert!((m[0][0] - 1.0).abs() < 1e-15 && (m[1][1] - 1.0).abs() < 1e-15);
        assert!((m[0][1] + 0.5).abs() < 1e-15);
        assert_eq!(m[0][1].to_bits(), m[1][0].to_bits());
        let p = op(GridSequence::power(1.0).unwrap(), AlphaSequence::zero());
        let s = p.truncate(3).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                assert_eq!(s.get(i, j), p.entry(i, j));
                assert_eq!(s.get(i, j).to_bits(), s.get(j, i).to_bits());
            }
        }
        assert!(p.truncate(0).is_err());
    }

    #[test]
    fn csv_export() {
        let c = op(GridSequence::constant(1.0).unwrap(), AlphaSequence::zero());
        let mut buf = Vec::new();
        c.truncate(3).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 7);
        assert!(text.starts_with("row,col,value\n1,1,"));
    }

    #[test]
    fn scaling_identity_for_alpha_zero() {
        let grid = GridSequence::power(1.0).unwrap().with_max_index(1000);
        let u = PeriodPair::new(PI, 4.0 / PI);
        let b = op(grid, AlphaSequence::alpha_zero(-0.5, u).unwrap());
        for n in 1..=1000 {
            let (d, o) = b.scaled_entries(n);
            assert!((o - 1.0).abs() < 1e-12, "off at {n}: {o}");
            assert!(
                (d - 0.5 * u.at(n)).abs() < 1e-12 * u.at(n),
                "diag at {n}: {d}"
            );
        }
    }

    #[test]
    fn alpha_zero_at_minus_one_has_zero_scaled_diagonal() {
        let grid = GridSequence::power(0.75).unwrap().with_max_index(100);
        let b = op(
            grid,
            AlphaSequence::alpha_zero(-1.0, PeriodPair::new(2.0, 2.0)).unwrap(),
        );
        for n in 1..=100 {
            assert_eq!(b.scaled_entries(n).0, 0.0);
        }
    }

    #[test]
    fn scaled_inverse_gaps_diagonal_is_exact_at_minus_one() {
        let grid = GridSequence::power(1.0).unwrap();
        let shubin = op(
            grid.clone(),
            AlphaSequence::power_sum(vec![(-2.0, 1.0), (-1.0, 0.0)]).unwrap(),
        );
        let scaled = op(
            grid,
            AlphaSequence::scaled_inverse_gaps(-1.0, Perturbation::Zero).unwrap(),
        );
        for n in [1, 10, 1_000_000] {
            assert_eq!(shubin.diag(n), 0.0);
            assert_eq!(scaled.diag(n), 0.0);
        }
    }

    #[test]
    fn shifted_alpha_cancels_exactly() {
        let grid = GridSequence::power(1.0).unwrap();
        let b = op(
            grid.clone(),
            AlphaSequence::power_sum(vec![(-4.0, 1.0), (-2.0, 0.0), (1.0, -1.0)]).unwrap(),
        );
        for n in [1, 1000, 1_000_000] {
            assert_eq!(b.alpha_shifted(n, 2.0).0, 1.0 / n as f64);
        }
        let s = op(
            grid,
            AlphaSequence::scaled_inverse_gaps(-2.0, Perturbation::GapMultiple(0.5)).unwrap(),
        );
        assert_eq!(s.alpha_shifted(10, 2.0).0, 0.05);
        let (v, m) = s.alpha_shifted(10, 0.0);
        assert!((v - s.alpha(10)).abs() < 1e-12 && m >= v.abs());
    }

    #[test]
    fn period_pair_parity() {
        let u = PeriodPair::new(3.0f64, 4.0 / 3.0);
        assert_eq!(u.at(1), 3.0);
        assert_eq!(u.at(2), 4.0 / 3.0);
        assert!((u.product() - 4.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn symmetric_and_tridiagonal(g in 0.3f64..1.4, e in -2.0f64..2.0, a in -3.0f64..1.0,
                                     i in 1usize..3000, k in 0usize..4) {
            let grid = GridSequence::power_log(g, e, 1.0).unwrap();
            let b = op(grid, AlphaSequence::scaled_inverse_gaps(a, Perturbation::GapMultiple(0.5)).unwrap());
            let j = i + k;
            prop_assert_eq!(b.entry(i, j).to_bits(), b.entry(j, i).to_bits());
            if k > 1 {
                prop_assert_eq!(b.entry(i, j), 0.0);
            }
        }

        #[test]
        fn tilde_sign_alternates(g in 0.3f64..1.4, e in -2.0f64..2.0, n in 1usize..200) {
            let grid = GridSequence::power_log(g, e, 1.0).unwrap();
            let t = TildeSequence::build(&grid, 200);
            let want = if n % 2 == 1 { 1.0 } else { -1.0 };
            prop_assert_eq!(t.value(n).signum(), want);
        }
    }
}
