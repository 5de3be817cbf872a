//! Time partitions `0 = t_0 < t_1 < ... < t_N = T`.
//!
//! Intervals are numbered from 1: interval `n` is `I_n = (t_{n-1}, t_n]`
//! with length `k_n`.

use crate::error::{invalid, Result};

/// Default bound on `max k_n / min k_n`.
pub const DEFAULT_QUASIUNIFORMITY: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    levels: Vec<f64>,
    steps: Vec<f64>,
    uniform: bool,
}

impl TimeMesh {
    /// `n_intervals` equal steps on `[0, final_time]`.
    pub fn uniform(n_intervals: usize, final_time: f64) -> Result<Self> {
        if n_intervals == 0 {
            return Err(invalid("a time mesh needs at least one interval"));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(invalid(format!("final time must be positive, got {final_time}")));
        }
        let n = n_intervals as f64;
        let mut levels: Vec<f64> = (0..=n_intervals)
            .map(|i| i as f64 * final_time / n)
            .collect();
        levels[n_intervals] = final_time;
        let step = final_time / n;
        Ok(Self {
            levels,
            steps: vec![step; n_intervals],
            uniform: true,
        })
    }

    /// Validating constructor for an arbitrary quasiuniform partition.
    ///
    /// `max_ratio` bounds `max k_n / min k_n`.
    pub fn from_levels(levels: Vec<f64>, max_ratio: f64) -> Result<Self> {
        if levels.len() < 2 {
            return Err(invalid("a time mesh needs at least two levels"));
        }
        if levels[0] != 0.0 {
            return Err(invalid(format!("first level must be 0, got {}", levels[0])));
        }
        if !(max_ratio >= 1.0) {
            return Err(invalid(format!("quasiuniformity bound must be >= 1, got {max_ratio}")));
        }
        let steps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(pos) = steps.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(invalid(format!(
                "levels must be strictly increasing (interval {} has length {})",
                pos + 1,
                steps[pos]
            )));
        }
        let kmin = steps.iter().copied().fold(f64::INFINITY, f64::min);
        let kmax = steps.iter().copied().fold(0.0, f64::max);
        if kmax / kmin > max_ratio {
            return Err(invalid(format!(
                "step ratio {:.4} exceeds the quasiuniformity bound {max_ratio}",
                kmax / kmin
            )));
        }
        Ok(Self {
            levels,
            steps,
            uniform: false,
        })
    }

    pub fn intervals(&self) -> usize {
        self.steps.len()
    }

    pub fn final_time(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// `t_n` for `0 <= n <= N`.
    #[inline]
    pub fn level(&self, n: usize) -> f64 {
        self.levels[n]
    }

    /// `k_n` for `1 <= n <= N`.
    #[inline]
    pub fn step(&self, n: usize) -> f64 {
        self.steps[n - 1]
    }

    /// True when built by [`TimeMesh::uniform`]; lengths are then exact
    /// integer multiples of one step.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn min_step(&self) -> f64 {
        self.steps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_step(&self) -> f64 {
        self.steps.iter().copied().fold(0.0, f64::max)
    }

    /// `t_{n-1/2}`, the midpoint of `I_n`.
    pub fn midpoint(&self, n: usize) -> Result<f64> {
        self.check_interval(n)?;
        Ok(0.5 * (self.levels[n - 1] + self.levels[n]))
    }

    pub(crate) fn check_interval(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.intervals() {
            return Err(invalid(format!(
                "interval index {n} outside 1..={}",
                self.intervals()
            )));
        }
        Ok(())
    }
}
