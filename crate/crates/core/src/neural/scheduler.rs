//! Plateau learning-rate scheduler.

use serde::{Deserialize, Serialize};

/// Multiplies the learning rate by `factor` whenever the monitored metric
/// has failed to improve by at least `min_delta` for `patience`
/// consecutive epochs. The rate never increases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauScheduler {
    factor: f64,
    patience: u32,
    min_delta: f64,
    learning_rate: f64,
    best: Option<f64>,
    stale_epochs: u32,
}

impl PlateauScheduler {
    pub fn new(initial_rate: f64, factor: f64, patience: u32, min_delta: f64) -> Self {
        PlateauScheduler {
            factor,
            patience,
            min_delta,
            learning_rate: initial_rate,
            best: None,
            stale_epochs: 0,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Feeds one epoch's metric and returns the rate for the next epoch.
    pub fn observe(&mut self, metric: f64) -> f64 {
        let improved = match self.best {
            None => true,
            Some(best) => metric < best - self.min_delta,
        };
        if improved {
            self.best = Some(metric);
            self.stale_epochs = 0;
        } else {
            self.stale_epochs += 1;
            if self.stale_epochs >= self.patience {
                self.learning_rate *= self.factor;
                self.stale_epochs = 0;
            }
        }
        self.learning_rate
    }

    /// Restores persisted state (checkpoint loading).
    pub fn restore(
        initial_rate: f64,
        factor: f64,
        patience: u32,
        min_delta: f64,
        best: Option<f64>,
        stale_epochs: u32,
    ) -> Self {
        PlateauScheduler {
            factor,
            patience,
            min_delta,
            learning_rate: initial_rate,
            best,
            stale_epochs,
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn stale_epochs(&self) -> u32 {
        self.stale_epochs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improving_metric_keeps_the_rate() {
        let mut s = PlateauScheduler::new(1e-3, 0.905, 10, 1e-4);
        for i in 0..50 {
            let lr = s.observe(1.0 - 0.01 * i as f64);
            assert_eq!(lr, 1e-3);
        }
    }

    #[test]
    fn flat_metric_cuts_rate_after_patience() {
        let mut s = PlateauScheduler::new(1e-3, 0.905, 10, 1e-4);
        assert_eq!(s.observe(1.0), 1e-3);
        for _ in 0..9 {
            assert_eq!(s.observe(1.0), 1e-3);
        }
        // Tenth stale epoch (the eleventh observation) trips the cut.
        let lr = s.observe(1.0);
        assert!((lr - 1e-3 * 0.905).abs() < 1e-18);
    }

    #[test]
    fn three_plateaus_compound() {
        let mut s = PlateauScheduler::new(1e-3, 0.905, 10, 1e-4);
        s.observe(1.0);
        for _ in 0..30 {
            s.observe(1.0);
        }
        let expect = 1e-3 * 0.905f64.powi(3);
        assert!((s.learning_rate() - expect).abs() < 1e-18);
    }

    #[test]
    fn tiny_improvements_below_min_delta_still_count_as_stale() {
        let mut s = PlateauScheduler::new(1e-3, 0.905, 2, 1e-4);
        s.observe(1.0);
        s.observe(1.0 - 5e-5);
        let lr = s.observe(1.0 - 9e-5);
        assert!((lr - 1e-3 * 0.905).abs() < 1e-18);
    }
}
