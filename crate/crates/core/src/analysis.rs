//! Accuracy evaluation and the statistics reported over prompt candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate, estimate_prior, CalibrationVector};
use crate::context::PromptContext;
use crate::error::{Error, Result};
use crate::fairness::ContentFreeInput;
use crate::prompt::{predict_label, Example, PromptPlan};
use crate::search::EnumerationRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_calibrated: Option<usize>,
    pub gold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub plan: PromptPlan,
    pub accuracy_raw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_calibrated: Option<f64>,
    pub n_test: usize,
    pub per_example: Vec<Prediction>,
}

/// Classifies every test example under `plan` (one backend call each).
pub fn evaluate_accuracy(
    ctx: &PromptContext<'_>,
    plan: &PromptPlan,
    test: &[Example],
    calibration: Option<&CalibrationVector>,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let per_example = test
        .par_iter()
        .map(|example| {
            example.validate(ctx.labels)?;
            let dist = ctx.distribution(plan, &example.text)?;
            let predicted_calibrated = match calibration {
                Some(c) => Some(predict_label(&calibrate(&dist, c)?)),
                None => None,
            };
            Ok(Prediction {
                predicted: predict_label(&dist),
                predicted_calibrated,
                gold: example.label_index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_example.len();
    let raw_correct = per_example.iter().filter(|p| p.predicted == p.gold).count();
    let accuracy_calibrated = calibration.map(|_| {
        let correct = per_example
            .iter()
            .filter(|p| p.predicted_calibrated == Some(p.gold))
            .count();
        correct as f64 / n as f64
    });
    Ok(EvalReport {
        plan: plan.clone(),
        accuracy_raw: raw_correct as f64 / n as f64,
        accuracy_calibrated,
        n_test: n,
        per_example,
    })
}

/// [`evaluate_accuracy`], estimating the plan's own calibration prior first
/// when `calibrate_with` is given.
pub fn evaluate_plan(
    ctx: &PromptContext<'_>,
    plan: &PromptPlan,
    test: &[Example],
    calibrate_with: Option<&[ContentFreeInput]>,
) -> Result<EvalReport> {
    let calibration = calibrate_with
        .map(|etas| estimate_prior(ctx, plan, etas))
        .transpose()?;
    evaluate_accuracy(ctx, plan, test, calibration.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    /// 0 is the fairest candidate.
    pub rank: usize,
    pub plan: PromptPlan,
    pub fairness: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMarker {
    pub accuracy: f64,
    /// Fairness rank of the first candidate reaching `accuracy`.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingCurve {
    pub rows: Vec<CurveRow>,
    /// Mean accuracy over all candidates.
    pub random_marker: f64,
    pub oracle_marker: OracleMarker,
}

impl RankingCurve {
    /// `rank,fairness,accuracy` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,fairness,accuracy\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.rank, row.fairness, row.accuracy));
        }
        out
    }

    /// Fairness rank of `plan`, if it is among the rows.
    pub fn rank_of(&self, plan: &PromptPlan) -> Option<usize> {
        self.rows.iter().find(|r| &r.plan == plan).map(|r| r.rank)
    }
}

/// Orders candidates by fairness, fairest first. The sort is stable, so
/// equal fairness keeps enumeration order.
pub fn ranking_curve(records: &[EnumerationRecord]) -> Result<RankingCurve> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records".into()));
    }
    let accuracies: Vec<f64> = records
        .iter()
        .enumerate()
        .map(|(i, r)| r.accuracy.ok_or(Error::MissingAccuracy(i)))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        records[b]
            .fairness
            .value
            .total_cmp(&records[a].fairness.value)
    });
    let rows: Vec<CurveRow> = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| CurveRow {
            rank,
            plan: records[i].plan.clone(),
            fairness: records[i].fairness.value,
            accuracy: accuracies[i],
        })
        .collect();
    let random_marker = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    let mut oracle = OracleMarker {
        accuracy: rows[0].accuracy,
        rank: 0,
    };
    for row in &rows[1..] {
        if row.accuracy > oracle.accuracy {
            oracle = OracleMarker {
                accuracy: row.accuracy,
                rank: row.rank,
            };
        }
    }
    Ok(RankingCurve {
        rows,
        random_marker,
        oracle_marker: oracle,
    })
}

/// Rank-wise mean of several curves of equal length (e.g. one per seed).
/// Rows carry the first curve's plan; fairness and accuracy are averaged.
pub fn mean_curve(curves: &[RankingCurve]) -> Result<RankingCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidArgument("no curves".into()))?;
    for c in curves {
        if c.rows.len() != first.rows.len() {
            return Err(Error::LengthMismatch {
                left: first.rows.len(),
                right: c.rows.len(),
            });
        }
    }
    let m = curves.len() as f64;
    let rows: Vec<CurveRow> = (0..first.rows.len())
        .map(|rank| CurveRow {
            rank,
            plan: first.rows[rank].plan.clone(),
            fairness: curves.iter().map(|c| c.rows[rank].fairness).sum::<f64>() / m,
            accuracy: curves.iter().map(|c| c.rows[rank].accuracy).sum::<f64>() / m,
        })
        .collect();
    let random_marker = curves.iter().map(|c| c.random_marker).sum::<f64>() / m;
    let (rank, accuracy) =
        rows.iter()
            .map(|r| (r.rank, r.accuracy))
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
    Ok(RankingCurve {
        rows,
        random_marker,
        oracle_marker: OracleMarker { accuracy, rank },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile of sorted data by linear interpolation between order
/// statistics at position `(n - 1) · p`.
fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number_summary(values: &[f64]) -> Result<FiveNumberSummary> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "five-number summary of no values".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(FiveNumberSummary {
        min: sorted[0],
        q1: interpolated_quantile(&sorted, 0.25),
        median: interpolated_quantile(&sorted, 0.5),
        q3: interpolated_quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub r: f64,
    pub n: usize,
    pub series_labels: (String, String),
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn correlation_report(
    xs: &[f64],
    ys: &[f64],
    labels: (&str, &str),
) -> Result<CorrelationReport> {
    Ok(CorrelationReport {
        r: pearson(xs, ys)?,
        n: xs.len(),
        series_labels: (labels.0.to_string(), labels.1.to_string()),
    })
}

/// Rotation moving the element at position `i` to `(i + k) mod len`.
pub fn circular_shift_plan(plan: &PromptPlan, k: usize) -> Result<PromptPlan> {
    let len = plan.len();
    if len == 0 {
        return Err(Error::InvalidArgument("cannot shift an empty plan".into()));
    }
    if k >= len {
        return Err(Error::InvalidArgument(format!(
            "shift {k} must be below {len}"
        )));
    }
    let mut indices = plan.indices().to_vec();
    indices.rotate_right(k);
    PromptPlan::new(indices)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Prefixes of the base plan, longest first.
    Amount,
    /// Every circular shift of the base plan.
    PermutationShift,
    /// Every single-demonstration plan.
    Selection,
}

/// Plans visited by a sweep.
pub fn sweep_plans(
    kind: SweepKind,
    base: &PromptPlan,
    train_len: usize,
) -> Result<Vec<PromptPlan>> {
    match kind {
        SweepKind::Amount | SweepKind::PermutationShift if base.is_empty() => Err(
            Error::InvalidArgument("sweep needs a nonempty base plan".into()),
        ),
        SweepKind::Amount => (1..=base.len())
            .rev()
            .map(|k| PromptPlan::new(base.indices()[..k].to_vec()))
            .collect(),
        SweepKind::PermutationShift => (0..base.len())
            .map(|k| circular_shift_plan(base, k))
            .collect(),
        SweepKind::Selection => {
            if train_len == 0 {
                return Err(Error::InvalidArgument("empty training set".into()));
            }
            (0..train_len).map(|i| PromptPlan::new(vec![i])).collect()
        }
    }
}

pub fn sweep(
    kind: SweepKind,
    ctx: &PromptContext<'_>,
    base: &PromptPlan,
    test: &[Example],
    calibrate_with: Option<&[ContentFreeInput]>,
) -> Result<Vec<EvalReport>> {
    base.check_bounds(ctx.train.len())?;
    sweep_plans(kind, base, ctx.train.len())?
        .iter()
        .map(|plan| evaluate_plan(ctx, plan, test, calibrate_with))
        .collect()
}
