//! Agreement and discrimination statistics: MAE, bias and R² with percentile
//! bootstrap intervals, ROC/AUC and precision-recall, and test-retest
//! variability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Predictions paired with reference values for the same studies.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    ids: Vec<String>,
    pred: Vec<f64>,
    reference: Vec<f64>,
}

impl PairedSample {
    pub fn new(ids: Vec<String>, pred: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        if pred.len() != reference.len() {
            return Err(Error::LengthMismatch {
                left: pred.len(),
                right: reference.len(),
            });
        }
        if ids.len() != pred.len() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: pred.len(),
            });
        }
        if pred.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: pred.len(),
            });
        }
        if pred.iter().chain(&reference).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("sample contains non-finite values".into()));
        }
        Ok(Self {
            ids,
            pred,
            reference,
        })
    }

    /// Unnamed pairs; ids are the positions.
    pub fn from_values(pred: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        let ids = (0..pred.len()).map(|i| i.to_string()).collect();
        Self::new(ids, pred, reference)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn pred(&self) -> &[f64] {
        &self.pred
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn len(&self) -> usize {
        self.pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred.is_empty()
    }

    /// The same pairs with prediction and reference exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            ids: self.ids.clone(),
            pred: self.reference.clone(),
            reference: self.pred.clone(),
        }
    }
}

pub fn mae(s: &PairedSample) -> f64 {
    mae_over(s, 0..s.len())
}

/// Mean of `pred - ref`.
pub fn bias(s: &PairedSample) -> f64 {
    bias_over(s, 0..s.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RSquaredMode {
    /// Squared Pearson correlation.
    PearsonSq,
    /// Coefficient of determination, `1 - SS_res / SS_tot`.
    Cod,
}

pub fn r_squared(s: &PairedSample, mode: RSquaredMode) -> Result<f64> {
    r_squared_over(s, 0..s.len(), mode)
}

fn mae_over(s: &PairedSample, idx: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = idx.fold((0.0, 0usize), |(acc, n), i| {
        (acc + (s.pred[i] - s.reference[i]).abs(), n + 1)
    });
    sum / n as f64
}

fn bias_over(s: &PairedSample, idx: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = idx.fold((0.0, 0usize), |(acc, n), i| {
        (acc + (s.pred[i] - s.reference[i]), n + 1)
    });
    sum / n as f64
}

fn r_squared_over(s: &PairedSample, idx: impl Iterator<Item = usize> + Clone, mode: RSquaredMode) -> Result<f64> {
    let n = idx.clone().count() as f64;
    let (sp, sr) = idx
        .clone()
        .fold((0.0, 0.0), |(a, b), i| (a + s.pred[i], b + s.reference[i]));
    let (mp, mr) = (sp / n, sr / n);
    let (mut spp, mut srr, mut spr, mut sres) = (0.0, 0.0, 0.0, 0.0);
    for i in idx {
        let (dp, dr) = (s.pred[i] - mp, s.reference[i] - mr);
        spp += dp * dp;
        srr += dr * dr;
        spr += dp * dr;
        let e = s.pred[i] - s.reference[i];
        sres += e * e;
    }
    match mode {
        RSquaredMode::PearsonSq => {
            if srr <= 0.0 || spp <= 0.0 {
                return Err(Error::DegenerateVariance);
            }
            Ok((spr * spr / (spp * srr)).min(1.0))
        }
        RSquaredMode::Cod => {
            if srr <= 0.0 {
                return Err(Error::DegenerateVariance);
            }
            Ok(1.0 - sres / srr)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mae,
    /// Squared Pearson correlation.
    R2,
    Bias,
}

impl Statistic {
    fn eval(self, s: &PairedSample, idx: impl Iterator<Item = usize> + Clone) -> Result<f64> {
        match self {
            Statistic::Mae => Ok(mae_over(s, idx)),
            Statistic::Bias => Ok(bias_over(s, idx)),
            Statistic::R2 => r_squared_over(s, idx, RSquaredMode::PearsonSq),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: 10_000,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_resamples == 0 {
            return Err(Error::InvalidConfig("n_resamples must be >= 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    /// Resamples whose statistic was undefined.
    pub skipped: usize,
}

/// Quantile `p` of sorted data, interpolating linearly between order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Indices of resample `r`: drawn from stream `r` of the seed so that
/// resamples can be evaluated in any order.
fn resample_indices(seed: u64, r: u64, n: usize, out: &mut Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    out.clear();
    out.extend((0..n).map(|_| rng.random_range(0..n)));
}

/// Percentile bootstrap interval, resampling pairs with replacement.
pub fn bootstrap_ci(s: &PairedSample, statistic: Statistic, cfg: &BootstrapConfig) -> Result<ConfidenceInterval> {
    cfg.validate()?;
    let point = statistic.eval(s, 0..s.len())?;
    let n = s.len();
    let draws: Vec<Option<f64>> = (0..cfg.n_resamples as u64)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |idx, r| {
                resample_indices(cfg.seed, r, n, idx);
                statistic.eval(s, idx.iter().copied()).ok()
            },
        )
        .collect();
    let mut values: Vec<f64> = draws.iter().flatten().copied().collect();
    let skipped = cfg.n_resamples - values.len();
    // more than 1% undefined resamples makes the interval meaningless
    if values.is_empty() || skipped * 100 > cfg.n_resamples {
        return Err(Error::TooManyDegenerateResamples {
            skipped,
            total: cfg.n_resamples,
        });
    }
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0;
    Ok(ConfidenceInterval {
        point,
        lo: percentile(&values, tail),
        hi: percentile(&values, 1.0 - tail),
        skipped,
    })
}

/// Classifier scores with binary labels; both classes present.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: scores.len(),
                right: labels.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("scores must be finite".into()));
        }
        let positives = labels.iter().filter(|&&l| l).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::SingleClass);
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn negatives(&self) -> usize {
        self.labels.len() - self.positives()
    }

    pub fn inverted(&self) -> Self {
        Self {
            scores: self.scores.clone(),
            labels: self.labels.iter().map(|l| !l).collect(),
        }
    }

    /// `(threshold, true positives, false positives)` after admitting every
    /// score `>= threshold`, one entry per distinct score, descending.
    fn cumulative_counts(&self) -> Vec<(f64, usize, usize)> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]));
        let mut out: Vec<(f64, usize, usize)> = Vec::new();
        let (mut tp, mut fp) = (0, 0);
        for (k, &i) in order.iter().enumerate() {
            if self.labels[i] {
                tp += 1;
            } else {
                fp += 1;
            }
            let last_of_tie = order
                .get(k + 1)
                .is_none_or(|&j| self.scores[j] != self.scores[i]);
            if last_of_tie {
                out.push((self.scores[i], tp, fp));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// `None` for the origin, before any score is admitted.
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub auc: f64,
    pub points: Vec<RocPoint>,
}

/// AUC as the Mann-Whitney probability that a positive outscores a negative
/// (ties count half), with the ROC curve at every distinct threshold.
pub fn roc_auc(d: &ScoredLabels) -> RocCurve {
    let n = d.scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d.scores[a].total_cmp(&d.scores[b]));
    // midranks, 1-based
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && d.scores[order[end]] == d.scores[order[start]] {
            end += 1;
        }
        let midrank = (start + end + 1) as f64 / 2.0;
        let pos_in_tie = order[start..end].iter().filter(|&&i| d.labels[i]).count();
        rank_sum_pos += midrank * pos_in_tie as f64;
        start = end;
    }
    let (p, q) = (d.positives() as f64, d.negatives() as f64);
    let auc = (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);

    let mut points = vec![RocPoint {
        threshold: None,
        fpr: 0.0,
        tpr: 0.0,
    }];
    points.extend(d.cumulative_counts().into_iter().map(|(t, tp, fp)| RocPoint {
        threshold: Some(t),
        fpr: fp as f64 / q,
        tpr: tp as f64 / p,
    }));
    RocCurve { auc, points }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub average_precision: f64,
    pub points: Vec<PrPoint>,
}

/// Precision and recall at every distinct threshold, descending, and
/// `AP = Σ (R_k − R_{k−1}) P_k`.
pub fn precision_recall(d: &ScoredLabels) -> PrCurve {
    let p = d.positives() as f64;
    let points: Vec<PrPoint> = d
        .cumulative_counts()
        .into_iter()
        .map(|(t, tp, fp)| PrPoint {
            threshold: t,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / p,
        })
        .collect();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for pt in &points {
        ap += (pt.recall - prev_recall) * pt.precision;
        prev_recall = pt.recall;
    }
    PrCurve {
        average_precision: ap,
        points,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetestSummary {
    pub mae: f64,
    pub bias: f64,
    pub sd_of_diff: f64,
}

/// Variability between two readings of the same quantity. `pred` holds the
/// second reading and `reference` the first; differences are second − first.
pub fn test_retest(pairs: &PairedSample) -> RetestSummary {
    let diffs: Vec<f64> = pairs
        .pred
        .iter()
        .zip(&pairs.reference)
        .map(|(b, a)| b - a)
        .collect();
    let n = diffs.len() as f64;
    let bias = diffs.iter().sum::<f64>() / n;
    let ss: f64 = diffs.iter().map(|d| (d - bias) * (d - bias)).sum();
    RetestSummary {
        mae: diffs.iter().map(|d| d.abs()).sum::<f64>() / n,
        bias,
        sd_of_diff: (ss / (n - 1.0)).sqrt(),
    }
}
