//! Success rates, RMS metrics and boxplot statistics grouped by fractal dimension.
//!
//! Quartiles use linear interpolation between order statistics: for sorted
//! `x[0..n]` the `p`-quantile is `x[floor(h)] + (h - floor(h)) (x[floor(h)+1] - x[floor(h)])`
//! with `h = (n - 1) p`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roughness::Composition;
use crate::traversal::{derive_dynamics, Outcome, TraversalLog};

pub fn success_rate(outcomes: &[Outcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("success rate of zero trials"));
    }
    let successes = outcomes.iter().filter(|&&o| o == Outcome::Success).count();
    Ok(successes as f64 / outcomes.len() as f64 * 100.0)
}

pub fn rms(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptyInput("rms of an empty series"));
    }
    Ok((series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64).sqrt())
}

/// `p`-quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Smallest and largest non-outlier values.
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Values outside `[lower_bound, upper_bound]`, ascending.
    pub outliers: Vec<f64>,
}

pub fn median_iqr_outliers(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("statistics of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let lower_bound = q1 - 1.5 * iqr;
    let upper_bound = q3 + 1.5 * iqr;
    let inside = |v: f64| v >= lower_bound && v <= upper_bound;
    let outliers: Vec<f64> = sorted.iter().copied().filter(|&v| !inside(v)).collect();
    let mut kept = sorted.iter().copied().filter(|&v| inside(v));
    let whisker_low = kept.next().unwrap_or(median);
    let whisker_high = kept.next_back().unwrap_or(whisker_low);
    Ok(BoxStats {
        count: sorted.len(),
        median,
        q1,
        q3,
        iqr,
        lower_bound,
        upper_bound,
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// RMS dynamics and time of one successful mission.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionMetrics {
    pub rms_vertical_accel: f64,
    pub rms_pitch_rate: f64,
    pub rms_roll_rate: f64,
    pub traversal_time_s: f64,
}

impl MissionMetrics {
    /// `None` unless the log is a success with enough samples to differentiate.
    pub fn from_log(log: &TraversalLog) -> Option<Self> {
        let time = log.traversal_time_s?;
        let d = derive_dynamics(log).ok()?;
        Some(Self {
            rms_vertical_accel: rms(&d.vertical_accel).ok()?,
            rms_pitch_rate: rms(&d.pitch_rate).ok()?,
            rms_roll_rate: rms(&d.roll_rate).ok()?,
            traversal_time_s: time,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub mission: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub metrics: Option<MissionMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub map_id: String,
    pub dimension: f64,
    pub composition: Composition,
    pub trials: Vec<TrialResult>,
}

impl MapResult {
    pub fn success_rate(&self) -> Result<f64> {
        let outcomes: Vec<Outcome> = self.trials.iter().map(|t| t.outcome).collect();
        success_rate(&outcomes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    LowPct,
    SemiPct,
    HighPct,
    SuccessRate,
    RmsVerticalAccel,
    RmsPitchRate,
    RmsRollRate,
    TraversalTime,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::LowPct,
        Metric::SemiPct,
        Metric::HighPct,
        Metric::SuccessRate,
        Metric::RmsVerticalAccel,
        Metric::RmsPitchRate,
        Metric::RmsRollRate,
        Metric::TraversalTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::LowPct => "low_pct",
            Metric::SemiPct => "semi_pct",
            Metric::HighPct => "high_pct",
            Metric::SuccessRate => "success_rate",
            Metric::RmsVerticalAccel => "rms_vertical_accel",
            Metric::RmsPitchRate => "rms_pitch_rate",
            Metric::RmsRollRate => "rms_roll_rate",
            Metric::TraversalTime => "traversal_time",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Per-map metrics have one value per map; the rest one per successful trial.
    pub fn is_per_map(self) -> bool {
        matches!(
            self,
            Metric::LowPct | Metric::SemiPct | Metric::HighPct | Metric::SuccessRate
        )
    }

    /// Sample values of this metric from one map.
    pub fn values(self, map: &MapResult) -> Vec<f64> {
        let c = &map.composition;
        match self {
            Metric::LowPct => vec![c.low_pct],
            Metric::SemiPct => vec![c.semi_pct],
            Metric::HighPct => vec![c.high_pct],
            Metric::SuccessRate => map.success_rate().into_iter().collect(),
            _ => map
                .trials
                .iter()
                .filter(|t| t.outcome == Outcome::Success)
                .filter_map(|t| t.metrics)
                .map(|m| match self {
                    Metric::RmsVerticalAccel => m.rms_vertical_accel,
                    Metric::RmsPitchRate => m.rms_pitch_rate,
                    Metric::RmsRollRate => m.rms_roll_rate,
                    _ => m.traversal_time_s,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub dimension: f64,
    pub maps: usize,
    /// One entry per metric that has at least one sample, in [`Metric::ALL`] order.
    pub metrics: Vec<(Metric, BoxStats)>,
}

impl GroupSummary {
    pub fn get(&self, metric: Metric) -> Option<&BoxStats> {
        self.metrics.iter().find(|(m, _)| *m == metric).map(|(_, s)| s)
    }
}

/// Group by `D` (ascending) and summarise every metric. Failed trials never
/// contribute dynamics or traversal times.
pub fn aggregate(results: &[MapResult]) -> Vec<GroupSummary> {
    let mut dims: Vec<f64> = results.iter().map(|r| r.dimension).collect();
    dims.sort_by(f64::total_cmp);
    dims.dedup_by(|a, b| a.total_cmp(b) == Ordering::Equal);
    dims.into_iter()
        .map(|d| {
            let group: Vec<&MapResult> = results
                .iter()
                .filter(|r| r.dimension.total_cmp(&d) == Ordering::Equal)
                .collect();
            let metrics = Metric::ALL
                .into_iter()
                .filter_map(|metric| {
                    let values: Vec<f64> = group.iter().flat_map(|r| metric.values(r)).collect();
                    median_iqr_outliers(&values).ok().map(|s| (metric, s))
                })
                .collect();
            GroupSummary {
                dimension: d,
                maps: group.len(),
                metrics,
            }
        })
        .collect()
}
