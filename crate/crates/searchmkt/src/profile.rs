//! Payoff profiles: one expected payoff per broker plus the agent's value.

use serde::{Deserialize, Serialize};

/// Expected payoffs `(y_1, ..., y_n; y_agent)` for `n` brokers and the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffProfile {
    pub brokers: Vec<f64>,
    pub agent: f64,
}

impl PayoffProfile {
    pub fn new(brokers: Vec<f64>, agent: f64) -> Self {
        Self { brokers, agent }
    }

    /// Number of brokers.
    pub fn n(&self) -> usize {
        self.brokers.len()
    }

    /// Sum of broker payoffs.
    pub fn broker_sum(&self) -> f64 {
        self.brokers.iter().sum()
    }

    /// Total surplus `sum_i y_i + y_agent`.
    pub fn total(&self) -> f64 {
        self.broker_sum() + self.agent
    }

    /// Flat `(y_1, ..., y_n, y_agent)` view, brokers first.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.brokers.clone();
        v.push(self.agent);
        v
    }

    /// Builds from a flat vector, brokers first, agent last.
    pub fn from_vec(mut v: Vec<f64>) -> Option<Self> {
        let agent = v.pop()?;
        Some(Self { brokers: v, agent })
    }

    /// Largest coordinate-wise absolute difference.
    pub fn linf_distance(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n(), other.n());
        let mut d = (self.agent - other.agent).abs();
        for (a, b) in self.brokers.iter().zip(&other.brokers) {
            d = d.max((a - b).abs());
        }
        d
    }
}
