//! Scalar càdlàg trajectories and the restricted history view handed to
//! predictable coefficient functionals.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Read access to a real càdlàg trajectory.
pub trait ScalarPath: Send + Sync {
    /// `z_t`.
    fn value(&self, t: f64) -> f64;
    /// `z_{t-}`, with the convention `z_{0-} = z_0`.
    fn left_limit(&self, t: f64) -> f64;
    fn horizon(&self) -> f64;
    /// First monitored time with `|z_t| ≥ level`.
    fn first_passage(&self, level: f64) -> Option<f64>;
}

/// The part of a path visible at time `now`: the path stopped at `now`.
///
/// Coefficients of predictable integrands only ever see this view, so they
/// cannot read values after their block's left endpoint.
#[derive(Clone, Copy)]
pub struct History<'a> {
    path: &'a dyn ScalarPath,
    now: f64,
}

impl<'a> History<'a> {
    pub fn new(path: &'a dyn ScalarPath, now: f64) -> Self {
        Self { path, now }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// `z_{s∧now}`.
    pub fn value(&self, s: f64) -> f64 {
        self.path.value(s.min(self.now))
    }

    pub fn left_limit(&self, s: f64) -> f64 {
        if s <= self.now {
            self.path.left_limit(s)
        } else {
            self.path.value(self.now)
        }
    }

    /// `z_now`.
    pub fn current(&self) -> f64 {
        self.path.value(self.now)
    }

    /// First passage of `|z|` through `level`, if it happened by `now`.
    pub fn first_passage(&self, level: f64) -> Option<f64> {
        self.path
            .first_passage(level)
            .filter(|&tau| tau <= self.now)
    }

    /// The same history seen at an earlier time.
    pub fn at(&self, s: f64) -> History<'a> {
        History {
            path: self.path,
            now: s.min(self.now),
        }
    }
}

/// A real trajectory observed at increasing times; read as a step function
/// between observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} observation times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidInput(
                "trajectory needs at least one observation".into(),
            ));
        }
        if times
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        {
            return Err(Error::InvalidInput(
                "observation times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn from_fn(times: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(times.to_vec(), times.iter().map(|&t| f(t)).collect())
    }

    pub fn zeros(times: &[f64]) -> Result<Self> {
        Self::new(times.to_vec(), vec![0.0; times.len()])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectories are nonempty")
    }

    /// `sup_{t ≤ until} |z_t|` over observation times.
    pub fn sup_abs_until(&self, until: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.values)
            .take_while(|(&t, _)| t <= until)
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum pointwise deviation from another trajectory on the same times.
    pub fn max_deviation(&self, other: &Self) -> Result<f64> {
        if self.times != other.times {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            times: self.times.clone(),
            values,
        })
    }

    /// `t ↦ z_{t∧τ}` on the same observation times.
    pub fn stopped(&self, tau: f64) -> Self {
        let frozen = self.value(tau);
        let values = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| if t <= tau { v } else { frozen })
            .collect();
        Self {
            times: self.times.clone(),
            values,
        }
    }

    fn index_at_or_before(&self, t: f64) -> Option<usize> {
        self.times.partition_point(|&s| s <= t).checked_sub(1)
    }
}

impl ScalarPath for Trajectory {
    fn value(&self, t: f64) -> f64 {
        match self.index_at_or_before(t) {
            Some(i) => self.values[i],
            None => self.values[0],
        }
    }

    fn left_limit(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s < t).checked_sub(1) {
            Some(i) => self.values[i],
            None => self.values[0],
        }
    }

    fn horizon(&self) -> f64 {
        *self.times.last().expect("trajectories are nonempty")
    }

    fn first_passage(&self, level: f64) -> Option<f64> {
        self.times
            .iter()
            .zip(&self.values)
            .find(|(_, v)| v.abs() >= level)
            .map(|(&t, _)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_reading() {
        let tr = Trajectory::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(tr.value(0.25), 1.0);
        assert_eq!(tr.value(0.5), 2.0);
        assert_eq!(tr.left_limit(0.5), 1.0);
        assert_eq!(tr.left_limit(0.0), 1.0);
        assert_eq!(tr.first_passage(2.5), Some(1.0));
        assert_eq!(tr.stopped(0.5).values(), &[1.0, 2.0, 2.0]);
    }

    #[test]
    fn history_is_stopped_view() {
        let tr = Trajectory::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 3.0]).unwrap();
        let h = History::new(&tr, 0.5);
        assert_eq!(h.value(1.0), 2.0);
        assert_eq!(h.left_limit(1.0), 2.0);
        assert_eq!(h.current(), 2.0);
        assert_eq!(h.first_passage(2.5), None);
        assert_eq!(h.first_passage(1.5), Some(0.5));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Trajectory::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Trajectory::new(vec![0.0], vec![]).is_err());
    }
}
