//! Suitability scoring of VM types for transcoding tasks.
//!
//! For each task the model turns the user's performance/cost preference
//! into a tolerated performance gap, weighs every VM type by how far its
//! gap sits from that tolerance and how much of the row's dollar cost it
//! carries, and min-max normalizes the weights into `[0, 1]` scores. A
//! weighted-sum method without the gap tolerance is provided as the
//! comparison baseline.

use thiserror::Error;

use crate::scalar::Real;
use crate::timemodel::EtcMatrix;
use crate::workload::Catalog;

/// Guard below which the summed performance gaps carry no signal; the
/// cost factor alone decides. Also covers rows whose baseline dominates
/// (non-positive gap sum), where the gap ratio would invert the ranking.
const GAP_SUM_EPS: f64 = 1e-12;

/// Complementary performance (`p`) and cost (`c`) preferences, `p + c = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPreference<R: Real> {
    p: R,
    c: R,
}

impl<R: Real> TradeoffPreference<R> {
    /// Builds from the performance preference; the cost preference is its
    /// complement.
    pub fn from_performance(p: R) -> Result<Self, SuitabilityError> {
        if !(p > R::zero() && p < R::one()) {
            return Err(SuitabilityError::PrefOutOfRange(p.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { p, c: R::one() - p })
    }

    pub fn new(p: R, c: R) -> Result<Self, SuitabilityError> {
        if ((p + c) - R::one()).abs() > R::lit(1e-9) {
            return Err(SuitabilityError::PrefOutOfRange(p.to_f64().unwrap_or(f64::NAN)));
        }
        let pref = Self::from_performance(p)?;
        Ok(Self { p: pref.p, c })
    }

    pub fn performance(&self) -> R {
        self.p
    }

    pub fn cost(&self) -> R {
        self.c
    }
}

/// Scale (`alpha`) and shift (`beta`) of the fuzzy preference-to-gap
/// mapping; defaults are 1 and 5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyParams<R: Real> {
    pub alpha: R,
    pub beta: R,
}

impl<R: Real> FuzzyParams<R> {
    pub fn new(alpha: R, beta: R) -> Result<Self, SuitabilityError> {
        if !(alpha > R::zero()) {
            return Err(SuitabilityError::BadParams("alpha must be > 0"));
        }
        Ok(Self { alpha, beta })
    }
}

impl<R: Real> Default for FuzzyParams<R> {
    fn default() -> Self {
        Self { alpha: R::one(), beta: R::lit(5.0) }
    }
}

/// Weight of the naive method's time term; the cost term gets `1 - k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveParams<R: Real> {
    pub k: R,
}

impl<R: Real> NaiveParams<R> {
    pub fn new(k: R) -> Result<Self, SuitabilityError> {
        if !(k >= R::zero() && k <= R::one()) {
            return Err(SuitabilityError::BadParams("k must lie in [0, 1]"));
        }
        Ok(Self { k })
    }
}

impl<R: Real> Default for NaiveParams<R> {
    fn default() -> Self {
        Self { k: R::lit(0.5) }
    }
}

/// Tolerated performance gap in seconds:
/// `delta_th = ln((1 - p) / p) / alpha + beta`.
pub fn threshold_gap<R: Real>(
    pref: &TradeoffPreference<R>,
    params: &FuzzyParams<R>,
) -> Result<R, SuitabilityError> {
    let p = pref.performance();
    if !(p > R::zero() && p < R::one()) {
        return Err(SuitabilityError::PrefOutOfRange(p.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(((R::one() - p) / p).ln() / params.alpha + params.beta)
}

/// The cost-preference entry point in its published form,
/// `ln(c / (1 - c)) / alpha - beta`. Note that under `p + c = 1` this is
/// NOT consistent with [`threshold_gap`] (the shift enters with the
/// opposite sign and the result is negative for most `c`); it is kept
/// only for comparison against the published formula. The p-form is
/// canonical.
pub fn threshold_gap_from_cost<R: Real>(
    cost_pref: R,
    params: &FuzzyParams<R>,
) -> Result<R, SuitabilityError> {
    if !(cost_pref > R::zero() && cost_pref < R::one()) {
        return Err(SuitabilityError::PrefOutOfRange(cost_pref.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((cost_pref / (R::one() - cost_pref)).ln() / params.alpha - params.beta)
}

/// Per-VM performance gaps `t_i - t_baseline` in seconds. Negative gaps
/// are legal: the baseline is not always fastest.
pub fn perf_gaps<R: Real>(etc_row: &[R], baseline_idx: usize) -> Result<Vec<R>, SuitabilityError> {
    let base = *etc_row.get(baseline_idx).ok_or(SuitabilityError::UnknownBaseline)?;
    Ok(etc_row.iter().map(|&t| t - base).collect())
}

/// Per-VM dollar cost of one task: linear per-second proration of the
/// hourly rate. Billing quantization belongs to the simulator, not here.
pub fn task_costs<R: Real>(etc_row: &[R], hourly_rates: &[R]) -> Result<Vec<R>, SuitabilityError> {
    if etc_row.len() != hourly_rates.len() {
        return Err(SuitabilityError::LengthMismatch);
    }
    let hour = R::lit(3600.0);
    Ok(etc_row.iter().zip(hourly_rates).map(|(&t, &r)| t * r / hour).collect())
}

/// Weight of each VM type:
/// `W_i = ((delta_th - gap_i) / sum(gaps)) * (1 - phi_i / sum(phi))`.
/// When the gap sum is non-positive the performance factor is 1 for every
/// VM and the cost factor decides alone.
pub fn weight_row<R: Real>(
    etc_row: &[R],
    hourly_rates: &[R],
    delta_th: R,
    baseline_idx: usize,
) -> Result<Vec<R>, SuitabilityError> {
    Ok(weight_components(etc_row, hourly_rates, delta_th, baseline_idx)?.weights)
}

/// All intermediate quantities of the weight computation for one row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBreakdown<R: Real> {
    pub gaps: Vec<R>,
    pub phis: Vec<R>,
    pub weights: Vec<R>,
}

pub fn weight_components<R: Real>(
    etc_row: &[R],
    hourly_rates: &[R],
    delta_th: R,
    baseline_idx: usize,
) -> Result<WeightBreakdown<R>, SuitabilityError> {
    if etc_row.is_empty() {
        return Err(SuitabilityError::EmptyRow);
    }
    let gaps = perf_gaps(etc_row, baseline_idx)?;
    let phis = task_costs(etc_row, hourly_rates)?;
    let gap_sum = gaps.iter().fold(R::zero(), |acc, &g| acc + g);
    let phi_sum = phis.iter().fold(R::zero(), |acc, &p| acc + p);
    let use_gaps = gap_sum > R::lit(GAP_SUM_EPS);
    let weights = gaps
        .iter()
        .zip(&phis)
        .map(|(&gap, &phi)| {
            let perf = if use_gaps { (delta_th - gap) / gap_sum } else { R::one() };
            perf * (R::one() - phi / phi_sum)
        })
        .collect();
    Ok(WeightBreakdown { gaps, phis, weights })
}

/// Min-max normalization to `[0, 1]`, higher is better:
/// `S_i = (W_i - min W) / (max W - min W)`; a flat row maps to all ones.
pub fn normalize_row<R: Real>(weights: &[R]) -> Vec<R> {
    let lo = weights.iter().fold(R::infinity(), |a, &w| a.min(w));
    let hi = weights.iter().fold(R::neg_infinity(), |a, &w| a.max(w));
    if !(hi - lo > R::zero()) {
        return vec![R::one(); weights.len()];
    }
    weights.iter().map(|&w| (w - lo) / (hi - lo)).collect()
}

/// The normalization as originally published,
/// `(W_i - max W) / (max W - min W)`, which lands in `[-1, 0]`. Kept
/// behind this explicit entry point for comparison only; a flat row maps
/// to all zeros.
pub fn normalize_row_literal<R: Real>(weights: &[R]) -> Vec<R> {
    let lo = weights.iter().fold(R::infinity(), |a, &w| a.min(w));
    let hi = weights.iter().fold(R::neg_infinity(), |a, &w| a.max(w));
    if !(hi - lo > R::zero()) {
        return vec![R::zero(); weights.len()];
    }
    weights.iter().map(|&w| (w - hi) / (hi - lo)).collect()
}

/// Weighted-sum baseline without the gap tolerance: min-max normalize
/// times and per-task costs (0 = best), combine with weight `k`, and
/// invert so that higher is better like the suitability scores.
pub fn naive_row<R: Real>(
    etc_row: &[R],
    hourly_rates: &[R],
    params: &NaiveParams<R>,
) -> Result<Vec<R>, SuitabilityError> {
    if etc_row.is_empty() {
        return Err(SuitabilityError::EmptyRow);
    }
    let phis = task_costs(etc_row, hourly_rates)?;
    let minmax = |xs: &[R]| -> Vec<R> {
        let lo = xs.iter().fold(R::infinity(), |a, &x| a.min(x));
        let hi = xs.iter().fold(R::neg_infinity(), |a, &x| a.max(x));
        if !(hi - lo > R::zero()) {
            return vec![R::zero(); xs.len()];
        }
        xs.iter().map(|&x| (x - lo) / (hi - lo)).collect()
    };
    let t_hat = minmax(etc_row);
    let c_hat = minmax(&phis);
    Ok(t_hat
        .iter()
        .zip(&c_hat)
        .map(|(&t, &c)| R::one() - (params.k * t + (R::one() - params.k) * c))
        .collect())
}

/// Scores for one task: the gap tolerance, all intermediates, and the
/// normalized suitability per VM type.
#[derive(Debug, Clone, PartialEq)]
pub struct SuitabilityRow<R: Real> {
    pub task_id: u64,
    pub delta_th: R,
    pub gaps: Vec<R>,
    pub phis: Vec<R>,
    pub weights: Vec<R>,
    pub scores: Vec<R>,
}

/// Suitability rows aligned with an ETC matrix's task order; columns in
/// catalog order.
#[derive(Debug, Clone, PartialEq)]
pub struct SuitabilityMatrix {
    pub rows: Vec<SuitabilityRow<f64>>,
    pub vm_types: Vec<String>,
}

impl SuitabilityMatrix {
    pub fn scores_for_task(&self, task_id: u64) -> Option<&[f64]> {
        self.rows.iter().find(|r| r.task_id == task_id).map(|r| r.scores.as_slice())
    }
}

fn catalog_rates(catalog: &Catalog) -> Vec<f64> {
    catalog.as_slice().iter().map(|vm| vm.hourly_cost).collect()
}

/// Builds the suitability matrix for an ETC matrix: the gap tolerance is
/// computed once from the preference, then every row is scored
/// independently.
pub fn suitability_matrix(
    etc: &EtcMatrix,
    catalog: &Catalog,
    pref: &TradeoffPreference<f64>,
    params: &FuzzyParams<f64>,
) -> Result<SuitabilityMatrix, SuitabilityError> {
    let delta_th = threshold_gap(pref, params)?;
    suitability_matrix_with_gap(etc, catalog, delta_th)
}

/// Same as [`suitability_matrix`] but with the gap tolerance given
/// directly rather than derived from a preference.
pub fn suitability_matrix_with_gap(
    etc: &EtcMatrix,
    catalog: &Catalog,
    delta_th: f64,
) -> Result<SuitabilityMatrix, SuitabilityError> {
    let baseline_idx = catalog
        .index_of(crate::workload::BASELINE_VM)
        .ok_or(SuitabilityError::UnknownBaseline)?;
    let rates = catalog_rates(catalog);
    let mut rows = Vec::with_capacity(etc.n_tasks());
    for (i, &task_id) in etc.task_ids().iter().enumerate() {
        let parts = weight_components(etc.row(i), &rates, delta_th, baseline_idx)?;
        let scores = normalize_row(&parts.weights);
        rows.push(SuitabilityRow {
            task_id,
            delta_th,
            gaps: parts.gaps,
            phis: parts.phis,
            weights: parts.weights,
            scores,
        });
    }
    Ok(SuitabilityMatrix { rows, vm_types: etc.vm_types().to_vec() })
}

/// Scores every ETC row with the naive weighted-sum method.
pub fn naive_matrix(
    etc: &EtcMatrix,
    catalog: &Catalog,
    params: &NaiveParams<f64>,
) -> Result<Vec<(u64, Vec<f64>)>, SuitabilityError> {
    let rates = catalog_rates(catalog);
    etc.task_ids()
        .iter()
        .enumerate()
        .map(|(i, &tid)| Ok((tid, naive_row(etc.row(i), &rates, params)?)))
        .collect()
}

/// Serializes suitability rows: `task_id,delta_th,<vm columns>` with the
/// tolerance at 6 decimals and scores at 4.
pub fn serialize_suitability(matrix: &SuitabilityMatrix) -> String {
    let mut out = String::from("task_id,delta_th");
    for vm in &matrix.vm_types {
        out.push(',');
        out.push_str(vm);
    }
    out.push('\n');
    for row in &matrix.rows {
        out.push_str(&format!("{},{:.6}", row.task_id, row.delta_th));
        for s in &row.scores {
            out.push_str(&format!(",{s:.4}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuitabilityError {
    #[error("PrefOutOfRange: preference {0} must lie strictly inside (0, 1)")]
    PrefOutOfRange(f64),
    #[error("UnknownBaseline: baseline vm type not present")]
    UnknownBaseline,
    #[error("EmptyRow: need at least one vm type")]
    EmptyRow,
    #[error("LengthMismatch: row and rate vectors differ in length")]
    LengthMismatch,
    #[error("BadParams: {0}")]
    BadParams(&'static str),
}
