use serde::{Deserialize, Serialize};

use crate::lab::MCResult;

/// One `(control parameter, eps)` cell.
///
/// For a censored cell (no successes) `probability` holds the upper bound
/// `1 / samples` and `eps_log_p` the matching bound `-eps * ln(samples)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub control_parameter: f64,
    pub eps: f64,
    pub probability: f64,
    pub ci_halfwidth_95: f64,
    pub eps_log_p: f64,
    pub censored: bool,
    pub successes: u64,
    pub samples: u64,
}

impl DecayRow {
    pub fn from_mc(control_parameter: f64, mc: &MCResult) -> Self {
        let censored = mc.successes == 0;
        let probability = if censored { 1.0 / mc.samples as f64 } else { mc.probability };
        Self {
            control_parameter,
            eps: mc.eps,
            probability,
            ci_halfwidth_95: mc.ci_halfwidth_95,
            eps_log_p: mc.eps * probability.ln(),
            censored,
            successes: mc.successes,
            samples: mc.samples,
        }
    }

    /// Half-width of the 95% interval carried to the `eps * ln p` scale; zero when censored.
    pub fn log_slack(&self) -> f64 {
        if self.censored {
            0.0
        } else {
            self.eps * self.ci_halfwidth_95 / self.probability
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub label: String,
    pub rows: Vec<DecayRow>,
}

impl DecayCurve {
    /// Distinct `eps` values in row order.
    pub fn eps_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.eps) {
                out.push(r.eps);
            }
        }
        out
    }

    /// Rows at one `eps`, sorted by control parameter.
    pub fn at_eps(&self, eps: f64) -> Vec<DecayRow> {
        let mut rows: Vec<DecayRow> = self.rows.iter().filter(|r| r.eps == eps).copied().collect();
        rows.sort_by(|a, b| a.control_parameter.total_cmp(&b.control_parameter));
        rows
    }

    /// Whether `eps_log_p` is non-increasing in the control parameter at `eps`,
    /// allowing each pair the sum of their log-scale interval half-widths.
    pub fn is_non_increasing(&self, eps: f64) -> bool {
        let rows = self.at_eps(eps);
        rows.iter().enumerate().all(|(i, a)| {
            rows[i + 1..]
                .iter()
                .all(|b| b.eps_log_p <= a.eps_log_p + a.log_slack() + b.log_slack())
        })
    }

    pub fn smallest_eps(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.eps).min_by(f64::total_cmp)
    }

    /// Censoring flags agree with the success counts.
    pub fn censoring_consistent(&self) -> bool {
        self.rows.iter().all(|r| r.censored == (r.successes == 0))
    }
}
