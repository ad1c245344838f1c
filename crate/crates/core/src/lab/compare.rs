use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::{mc_probability, DecayRow, McPlan};
use crate::model::{CoefficientSet, Segment};
use crate::rate::{rate_for_event, EventSpec, RateOptions, RateResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsLogRow {
    pub eps: f64,
    /// `eps * ln(sum_i a_i)`.
    pub log_sum: f64,
    /// `max_i eps * ln(a_i)`.
    pub log_max: f64,
    /// `log_sum - log_max`, in `[0, eps * ln N]`.
    pub gap: f64,
}

/// `eps * ln(sum_i a_i(eps))` against `max_i eps * ln a_i(eps)`, where
/// `terms[i][k] = a_i(eps_list[k])`. Sums are formed in log space.
pub fn eps_log_max(terms: &[Vec<f64>], eps_list: &[f64]) -> Result<Vec<EpsLogRow>> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument("no terms".into()));
    }
    for t in terms {
        if t.len() != eps_list.len() {
            return Err(Error::DimensionMismatch {
                expected: eps_list.len(),
                got: t.len(),
            });
        }
    }
    eps_list
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            if !(eps > 0.0) {
                return Err(Error::NonPositiveInput("eps"));
            }
            let logs = terms
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    if t[k] > 0.0 && t[k].is_finite() {
                        Ok(t[k].ln())
                    } else {
                        Err(Error::NonPositiveTerm { eps_index: k, term: i })
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
            let (log_sum, log_max) = (eps * lse, eps * top);
            Ok(EpsLogRow {
                eps,
                log_sum,
                log_max,
                gap: log_sum - log_max,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// Rows keyed by `eps` (stored in `control_parameter` as well).
    pub rows: Vec<DecayRow>,
    /// `-I` for the event.
    pub neg_rate: f64,
    /// `eps * ln P - (-I)` at the smallest `eps`.
    pub terminal_gap: f64,
    /// Optimizer output, when the rate side came from [`rate_for_event`].
    pub rate: Option<RateResult>,
}

/// `eps * ln P(X^eps in event)` for each `eps` beside a given rate value.
pub fn compare_against_value(
    coeffs: &CoefficientSet,
    xi: &Segment,
    event: &EventSpec,
    eps_list: &[f64],
    plan: &McPlan,
    rate_value: f64,
) -> Result<CompareReport> {
    event.validate(&plan.mesh, coeffs.dim())?;
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("eps_list is empty".into()));
    }
    let rows = eps_list
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::NonPositiveInput("eps"));
            }
            let mc = mc_probability(|p| event.contains(p), coeffs, xi, eps, plan)?;
            Ok(DecayRow::from_mc(eps, &mc))
        })
        .collect::<Result<Vec<_>>>()?;
    let last = rows
        .iter()
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .expect("rows non-empty");
    Ok(CompareReport {
        terminal_gap: last.eps_log_p + rate_value,
        neg_rate: -rate_value,
        rows,
        rate: None,
    })
}

/// [`compare_against_value`] with the rate side from [`rate_for_event`].
pub fn compare_rate_vs_mc(
    coeffs: &CoefficientSet,
    xi: &Segment,
    event: &EventSpec,
    eps_list: &[f64],
    plan: &McPlan,
    opts: &RateOptions,
) -> Result<CompareReport> {
    let rate = rate_for_event(coeffs, xi, event, &plan.mesh, opts)?;
    let mut report = compare_against_value(coeffs, xi, event, eps_list, plan, rate.value)?;
    report.rate = Some(rate);
    Ok(report)
}
