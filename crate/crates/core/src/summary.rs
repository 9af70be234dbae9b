//! Arm-level sufficient statistics and trial layouts.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};

/// Outcome type. Selects the closed-form branch of the worst-case bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    /// Real-valued outcome.
    Continuous,
    /// 0/1 outcome; means are response probabilities.
    Binary,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeKind::Continuous => "continuous",
            OutcomeKind::Binary => "binary",
        })
    }
}

/// Count, mean and unbiased (divisor `n − 1`) variance of one arm.
///
/// An empty arm cannot be represented; absent arms are `None` in the
/// surrounding layout. A single observation carries no variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSummary {
    n: usize,
    mean: f64,
    variance: Option<f64>,
}

impl ArmSummary {
    /// Builds a summary. `variance` must be `None` exactly when `n == 1`.
    pub fn new(n: usize, mean: f64, variance: Option<f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid!("arm summary needs n >= 1"));
        }
        if !mean.is_finite() {
            return Err(invalid!("arm mean must be finite, got {mean}"));
        }
        match variance {
            Some(_) if n == 1 => return Err(invalid!("variance is undefined for n = 1")),
            None if n >= 2 => return Err(invalid!("variance is required for n = {n}")),
            Some(v) if !(v.is_finite() && v >= 0.0) => {
                return Err(invalid!("variance must be finite and nonnegative, got {v}"))
            }
            _ => {}
        }
        Ok(ArmSummary { n, mean, variance })
    }

    /// Binary summary from a responder count.
    pub fn binary(n: usize, successes: usize) -> Result<Self> {
        if successes > n {
            return Err(invalid!("{successes} successes exceed n = {n}"));
        }
        let mean = successes as f64 / n.max(1) as f64;
        Self::new(n, mean, binary_variance(n, mean))
    }

    /// Sample size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sample mean.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance, absent for `n = 1`.
    pub fn variance(&self) -> Option<f64> {
        self.variance
    }
}

fn binary_variance(n: usize, mean: f64) -> Option<f64> {
    (n >= 2).then(|| n as f64 / (n - 1) as f64 * mean * (1.0 - mean))
}

/// Reduces raw outcomes to an [`ArmSummary`].
///
/// Samples are sorted before accumulation, so the result does not depend on
/// input order. Binary variances use `n/(n−1)·p(1−p)` directly.
pub fn summarize(samples: &[f64], kind: OutcomeKind) -> Result<ArmSummary> {
    if samples.is_empty() {
        return Err(invalid!("cannot summarise an empty sample"));
    }
    let n = samples.len();
    match kind {
        OutcomeKind::Binary => {
            let mut ones = 0usize;
            for (i, &y) in samples.iter().enumerate() {
                if y == 1.0 {
                    ones += 1;
                } else if y != 0.0 {
                    return Err(invalid!("binary sample at index {i} is {y}, expected 0 or 1"));
                }
            }
            ArmSummary::binary(n, ones)
        }
        OutcomeKind::Continuous => {
            if let Some(i) = samples.iter().position(|y| !y.is_finite()) {
                return Err(invalid!("sample at index {i} is not finite"));
            }
            let mut sorted = samples.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mean = sorted.iter().sum::<f64>() / n as f64;
            let variance = (n >= 2).then(|| {
                sorted.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1) as f64
            });
            ArmSummary::new(n, mean, variance)
        }
    }
}

/// One external data source; `arms[a]` is `None` when the source lacks arm `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalSource {
    /// Free-form name used in reports.
    pub label: String,
    /// Per-arm summaries, indexed like the current trial's arms.
    pub arms: Vec<Option<ArmSummary>>,
}

impl HistoricalSource {
    /// New source.
    pub fn new(label: impl Into<String>, arms: Vec<Option<ArmSummary>>) -> Self {
        HistoricalSource { label: label.into(), arms }
    }
}

/// Current trial arms plus any number of historical sources.
///
/// Arm `0` is the control arm in two-arm analyses.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLayout {
    /// Outcome type shared by every cell.
    pub kind: OutcomeKind,
    /// Current-trial summaries, one per arm.
    pub current: Vec<ArmSummary>,
    /// Historical sources.
    pub historical: Vec<HistoricalSource>,
}

impl TrialLayout {
    /// Assembles a layout without validating it; see [`validate_layout`].
    pub fn new(kind: OutcomeKind, current: Vec<ArmSummary>, historical: Vec<HistoricalSource>) -> Self {
        TrialLayout { kind, current, historical }
    }

    /// Number of arms.
    pub fn arms(&self) -> usize {
        self.current.len()
    }

    /// Number of historical sources.
    pub fn sources(&self) -> usize {
        self.historical.len()
    }

    /// Historical cell `(source, arm)` if present.
    pub fn cell(&self, source: usize, arm: usize) -> Option<&ArmSummary> {
        self.historical.get(source)?.arms.get(arm)?.as_ref()
    }

    /// True when no source contributes any arm.
    pub fn has_no_history(&self) -> bool {
        self.historical.iter().all(|s| s.arms.iter().all(Option::is_none))
    }

    /// Runs [`validate_layout`] and folds all violations into one error.
    pub fn validate(&self) -> Result<()> {
        let v = validate_layout(self);
        if v.is_empty() {
            return Ok(());
        }
        let msg: Vec<String> = v.iter().map(ToString::to_string).collect();
        Err(invalid!("{}", msg.join("; ")))
    }

    pub(crate) fn require_two_arms(&self) -> Result<()> {
        if self.arms() != 2 {
            return Err(invalid!("two-arm analysis needs exactly 2 arms, layout has {}", self.arms()));
        }
        Ok(())
    }
}

/// What went wrong in a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Fewer than two current arms.
    TooFewArms,
    /// A current arm has `n < 2`.
    VarianceNotEstimable,
    /// A binary mean lies outside `[0, 1]`.
    MeanOutOfRange,
    /// A historical source lists a different number of arms than the current trial.
    ArmCountMismatch,
}

/// A single layout problem with its location, e.g. `current[1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutViolation {
    /// Field path of the offending entry.
    pub location: String,
    /// Category.
    pub kind: ViolationKind,
}

impl fmt::Display for LayoutViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::TooFewArms => "at least two current arms are required",
            ViolationKind::VarianceNotEstimable => "variance not estimable (n < 2)",
            ViolationKind::MeanOutOfRange => "binary mean outside [0, 1]",
            ViolationKind::ArmCountMismatch => "arm count differs from the current trial",
        };
        write!(f, "{}: {}", self.location, what)
    }
}

/// Every invariant violation of `layout`; empty iff the layout is usable.
pub fn validate_layout(layout: &TrialLayout) -> Vec<LayoutViolation> {
    let mut out = Vec::new();
    let mut push = |location: String, kind| out.push(LayoutViolation { location, kind });
    if layout.current.len() < 2 {
        push("current".into(), ViolationKind::TooFewArms);
    }
    let binary = layout.kind == OutcomeKind::Binary;
    let bad_mean = |s: &ArmSummary| binary && !(0.0..=1.0).contains(&s.mean);
    for (a, s) in layout.current.iter().enumerate() {
        if s.n < 2 {
            push(alloc::format!("current[{a}]"), ViolationKind::VarianceNotEstimable);
        }
        if bad_mean(s) {
            push(alloc::format!("current[{a}]"), ViolationKind::MeanOutOfRange);
        }
    }
    for (k, src) in layout.historical.iter().enumerate() {
        if src.arms.len() != layout.current.len() {
            push(alloc::format!("historical[{k}]"), ViolationKind::ArmCountMismatch);
        }
        for (a, s) in src.arms.iter().enumerate() {
            if let Some(s) = s {
                if bad_mean(s) {
                    push(alloc::format!("historical[{k}].arm[{a}]"), ViolationKind::MeanOutOfRange);
                }
            }
        }
    }
    out
}

/// Raw outcomes grouped like a [`TrialLayout`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    /// Current-trial outcomes per arm.
    pub current: Vec<Vec<f64>>,
    /// `historical[k][a]` holds source `k`, arm `a`; `None` if the source lacks the arm.
    pub historical: Vec<Vec<Option<Vec<f64>>>>,
}

impl SampleSet {
    /// Summarises every group. Empty historical groups become absent cells.
    pub fn summarize(&self, kind: OutcomeKind) -> Result<TrialLayout> {
        let mut current = Vec::with_capacity(self.current.len());
        for (a, ys) in self.current.iter().enumerate() {
            current.push(summarize(ys, kind).map_err(|e| prefix(e, &alloc::format!("current[{a}]")))?);
        }
        let mut historical = Vec::with_capacity(self.historical.len());
        for (k, arms) in self.historical.iter().enumerate() {
            let mut cells = Vec::with_capacity(arms.len());
            for (a, ys) in arms.iter().enumerate() {
                cells.push(match ys {
                    Some(ys) if !ys.is_empty() => Some(
                        summarize(ys, kind)
                            .map_err(|e| prefix(e, &alloc::format!("historical[{k}].arm[{a}]")))?,
                    ),
                    _ => None,
                });
            }
            historical.push(HistoricalSource::new(alloc::format!("source {k}"), cells));
        }
        Ok(TrialLayout::new(kind, current, historical))
    }
}

fn prefix(e: crate::Error, at: &str) -> crate::Error {
    match e {
        crate::Error::Invalid(m) => invalid!("{at}: {m}"),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_pass(ys: &[f64]) -> (f64, f64) {
        let n = ys.len() as f64;
        let m = ys.iter().sum::<f64>() / n;
        (m, ys.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[1.0, 1.0, 0.0, 0.0], OutcomeKind::Binary).unwrap();
        assert_eq!((s.n(), s.mean()), (4, 0.5));
        assert!((s.variance().unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let s = summarize(&[2.0], OutcomeKind::Continuous).unwrap();
        assert_eq!((s.n(), s.mean(), s.variance()), (1, 2.0, None));

        let ys = [0.0, 0.0, 1.0];
        let s = summarize(&ys, OutcomeKind::Binary).unwrap();
        let (m, v) = two_pass(&ys);
        assert!((s.mean() - m).abs() < 1e-15 && (s.variance().unwrap() - v).abs() < 1e-15);
        assert!((s.variance().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn binary_rejects_other_values() {
        let err = summarize(&[0.0, 1.0, 0.5], OutcomeKind::Binary).unwrap_err();
        assert!(err.to_string().contains("index 2"));
    }

    #[test]
    fn zero_count_unrepresentable() {
        assert!(ArmSummary::new(0, 0.0, None).is_err());
        assert!(ArmSummary::new(1, 0.0, Some(1.0)).is_err());
        assert!(ArmSummary::new(3, 0.0, None).is_err());
    }

    fn arm(n: usize, m: f64) -> ArmSummary {
        ArmSummary::new(n, m, (n > 1).then_some(0.2)).unwrap()
    }

    #[test]
    fn validation_reports() {
        let ok = TrialLayout::new(
            OutcomeKind::Binary,
            vec![arm(10, 0.2), arm(10, 0.4)],
            vec![HistoricalSource::new("h", vec![Some(arm(20, 0.3)), None])],
        );
        assert!(validate_layout(&ok).is_empty());

        let mut thin = ok.clone();
        thin.current[1] = arm(1, 0.4);
        let v = validate_layout(&thin);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::VarianceNotEstimable);
        assert!(v[0].to_string().contains("variance not estimable"));

        let mut wild = ok.clone();
        wild.historical[0].arms[0] = Some(arm(20, 1.2));
        let v = validate_layout(&wild);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].location, "historical[0].arm[0]");
    }
}
