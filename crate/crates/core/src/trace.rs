//! Per-iteration solver diagnostics: cost, optional error versus a reference
//! image, and elapsed wall time, plus free-form event notes (restarts,
//! warm-start reuse, atom re-seeding, …).

use crate::num::Scalar;
use std::time::Instant;

/// One sampled iteration. `iter` 0 is the initial point, before any update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord<T> {
    pub iter: usize,
    pub cost: T,
    /// Relative error against a caller-supplied reference, when one was given.
    pub nrmse: Option<T>,
    /// Wall-clock seconds since the solver started.
    pub seconds: f64,
}

/// Full history of a solver run.
#[derive(Clone, Debug)]
pub struct SolverTrace<T> {
    records: Vec<TraceRecord<T>>,
    notes: Vec<String>,
    started: Instant,
}

impl<T: Scalar> SolverTrace<T> {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        Self { records: Vec::new(), notes: Vec::new(), started: Instant::now() }
    }

    /// Appends a record stamped with the elapsed time since construction.
    pub fn record(&mut self, iter: usize, cost: T, nrmse: Option<T>) {
        self.records.push(TraceRecord { iter, cost, nrmse, seconds: self.started.elapsed().as_secs_f64() });
    }

    /// Logs a named event (kept separate from the tabular records).
    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub fn records(&self) -> &[TraceRecord<T>] {
        &self.records
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn last_cost(&self) -> Option<T> {
        self.records.last().map(|r| r.cost)
    }

    /// First iteration index whose cost drops to `bound` or below.
    pub fn first_iter_at_or_below(&self, bound: T) -> Option<usize> {
        self.records.iter().find(|r| r.cost <= bound).map(|r| r.iter)
    }

    /// Whether the recorded costs never increase by more than a relative
    /// `slack` (0 demands exact monotonicity).
    pub fn is_monotone(&self, slack: T) -> bool {
        self.records.windows(2).all(|w| {
            let scale = T::one().max(w[0].cost.abs());
            w[1].cost <= w[0].cost + slack * scale
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_accumulate_in_order_with_nondecreasing_time() {
        let mut tr = SolverTrace::<f64>::new();
        tr.record(0, 10.0, Some(1.0));
        tr.record(1, 4.0, None);
        tr.record(2, 1.0, Some(0.1));
        tr.note("restart");
        assert_eq!(tr.records().len(), 3);
        assert_eq!(tr.records()[1].iter, 1);
        assert_eq!(tr.last_cost(), Some(1.0));
        assert_eq!(tr.notes(), ["restart"]);
        assert!(tr.records().windows(2).all(|w| w[1].seconds >= w[0].seconds));
    }

    #[test]
    fn threshold_and_monotonicity_queries() {
        let mut tr = SolverTrace::<f64>::new();
        for (i, c) in [5.0, 3.0, 2.0, 2.0000001, 1.0].iter().enumerate() {
            tr.record(i, *c, None);
        }
        assert_eq!(tr.first_iter_at_or_below(2.0), Some(2));
        assert_eq!(tr.first_iter_at_or_below(0.5), None);
        assert!(!tr.is_monotone(0.0));
        assert!(tr.is_monotone(1e-6));
    }
}
