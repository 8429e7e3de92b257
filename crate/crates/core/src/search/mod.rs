//! Prompt search over demonstration subsets and orders.
//!
//! Three strategies share one objective, the fairness of a plan:
//!
//! * [`exhaustive_search`] scores every candidate plan and is the reference
//!   the other two approximate.
//! * [`t_fair`] scores each demonstration on its own and keeps the `k`
//!   fairest, placing the fairest one last (nearest the query).
//! * [`g_fair`] grows the plan greedily, inserting at the head whichever
//!   remaining demonstration raises fairness most, and stops when nothing
//!   improves.
//!
//! Candidate evaluations within a step run in parallel; selection always
//! reduces in index order, so ties go to the lowest training index no matter
//! how the work was scheduled.

mod enumerate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::PromptContext;
use crate::error::{Error, Result};
use crate::fairness::{prompt_fairness, FairnessProbe, FairnessScore};
use crate::prompt::PromptPlan;

pub use enumerate::{candidate_count, enumerate_all, OrderedSelections, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Exhaustive,
    TFair,
    GFair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub inserted: usize,
    pub fairness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub strategy: Strategy,
    pub plan: PromptPlan,
    /// Fairness of `plan`. Top-k with `k > 1` never scores its final plan
    /// itself; see [`SearchResult::rescore`].
    pub fairness: Option<FairnessScore>,
    /// Zero-shot fairness, when the strategy measured it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_fairness: Option<f64>,
    pub fairness_trace: Vec<TraceEntry>,
    /// Backend calls issued by the search.
    pub model_calls: u64,
}

impl SearchResult {
    /// Scores the final plan if the search left it unscored. Returns the
    /// number of backend calls spent.
    pub fn rescore(&mut self, ctx: &PromptContext<'_>, probe: &FairnessProbe) -> Result<u64> {
        if self.fairness.is_some() {
            return Ok(0);
        }
        self.fairness = Some(prompt_fairness(ctx, &self.plan, probe)?.score);
        Ok(probe.calls_per_prompt() as u64)
    }
}

/// One enumerated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationRecord {
    pub plan: PromptPlan,
    pub fairness: FairnessScore,
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_calibrated: Option<f64>,
}

fn require_train(ctx: &PromptContext<'_>) -> Result<usize> {
    match ctx.train.len() {
        0 => Err(Error::InvalidArgument("empty training set".into())),
        n => Ok(n),
    }
}

fn score_plans(
    ctx: &PromptContext<'_>,
    probe: &FairnessProbe,
    plans: &[PromptPlan],
) -> Result<Vec<FairnessScore>> {
    plans
        .par_iter()
        .map(|plan| prompt_fairness(ctx, plan, probe).map(|f| f.score))
        .collect()
}

/// First position holding the maximum; earlier entries win ties.
fn first_argmax(values: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

/// Fairness of every candidate plan, in enumeration order.
pub fn enumerate_fairness(
    ctx: &PromptContext<'_>,
    probe: &FairnessProbe,
    cap: usize,
) -> Result<Vec<EnumerationRecord>> {
    let n = require_train(ctx)?;
    let plans: Vec<PromptPlan> = enumerate_all(n, cap)?.collect();
    let scores = score_plans(ctx, probe, &plans)?;
    Ok(plans
        .into_iter()
        .zip(scores)
        .map(|(plan, fairness)| EnumerationRecord {
            plan,
            fairness,
            accuracy: None,
            accuracy_calibrated: None,
        })
        .collect())
}

/// The fairest of all candidate plans; the earliest enumerated wins ties.
pub fn exhaustive_search(
    ctx: &PromptContext<'_>,
    probe: &FairnessProbe,
    cap: usize,
) -> Result<SearchResult> {
    let records = enumerate_fairness(ctx, probe, cap)?;
    let (best, _) = first_argmax(records.iter().map(|r| r.fairness.value)).expect("N >= 1");
    let model_calls = (records.len() * probe.calls_per_prompt()) as u64;
    let record = records
        .into_iter()
        .nth(best)
        .expect("index from the same list");
    Ok(SearchResult {
        strategy: Strategy::Exhaustive,
        plan: record.plan,
        fairness: Some(record.fairness),
        baseline_fairness: None,
        fairness_trace: Vec::new(),
        model_calls,
    })
}

/// Top-k selection by single-demonstration fairness.
///
/// Demonstrations are ranked by one-shot fairness (descending, lower index
/// first on ties) and the `d`-th ranked is inserted at the head for
/// `d = 1..=k`, so the fairest ends up adjacent to the query.
pub fn t_fair(ctx: &PromptContext<'_>, probe: &FairnessProbe, k: usize) -> Result<SearchResult> {
    let n = require_train(ctx)?;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={n}"
        )));
    }
    let singles: Vec<PromptPlan> = (0..n)
        .map(|i| PromptPlan::new(vec![i]).expect("single"))
        .collect();
    let scores = score_plans(ctx, probe, &singles)?;
    let single_values: Vec<f64> = scores.iter().map(|s| s.value).collect();
    let ranked = rank_descending(&single_values);

    let mut plan = PromptPlan::empty();
    let mut trace = Vec::with_capacity(k);
    for (d, &i) in ranked.iter().take(k).enumerate() {
        plan = plan.with_head(i)?;
        trace.push(TraceEntry {
            step: d + 1,
            inserted: i,
            fairness: single_values[i],
        });
    }
    Ok(SearchResult {
        strategy: Strategy::TFair,
        plan,
        fairness: (k == 1).then(|| scores[ranked[0]]),
        baseline_fairness: None,
        fairness_trace: trace,
        model_calls: (n * probe.calls_per_prompt()) as u64,
    })
}

/// Indices ordered by value descending, ties by ascending index.
pub fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Plan assembled by [`t_fair`] from precomputed single-demonstration
/// fairness values.
pub fn top_k_plan(single_fairness: &[f64], k: usize) -> Result<PromptPlan> {
    if k == 0 || k > single_fairness.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={}",
            single_fairness.len()
        )));
    }
    let mut plan = PromptPlan::empty();
    for &i in rank_descending(single_fairness).iter().take(k) {
        plan = plan.with_head(i)?;
    }
    Ok(plan)
}

/// Greedy head insertion.
///
/// Each step tries every remaining demonstration in front of the current
/// plan and keeps the fairest extension if it is strictly fairer than the
/// current plan. With `min_demos = 1` the first insertion is unconditional
/// and the zero-shot prompt is never scored; with `min_demos = 0` the
/// zero-shot fairness is the baseline the first insertion must beat.
pub fn g_fair(
    ctx: &PromptContext<'_>,
    probe: &FairnessProbe,
    min_demos: usize,
) -> Result<SearchResult> {
    let n = require_train(ctx)?;
    if min_demos > 1 {
        return Err(Error::InvalidArgument(format!(
            "min_demos = {min_demos} must be 0 or 1"
        )));
    }
    let per_prompt = probe.calls_per_prompt() as u64;
    let mut model_calls = 0u64;
    let mut plan = PromptPlan::empty();
    let mut current: Option<FairnessScore> = None;
    let mut baseline = None;
    if min_demos == 0 {
        let score = prompt_fairness(ctx, &plan, probe)?.score;
        model_calls += per_prompt;
        baseline = Some(score.value);
        current = Some(score);
    }

    let mut pool: Vec<usize> = (0..n).collect();
    let mut trace = Vec::new();
    while !pool.is_empty() {
        let candidates: Vec<PromptPlan> = pool
            .iter()
            .map(|&i| plan.with_head(i))
            .collect::<Result<_>>()?;
        let scores = score_plans(ctx, probe, &candidates)?;
        model_calls += per_prompt * candidates.len() as u64;
        let (best, value) = first_argmax(scores.iter().map(|s| s.value)).expect("pool nonempty");
        if current.is_some_and(|c| value <= c.value) {
            break;
        }
        let inserted = pool.remove(best);
        plan = candidates
            .into_iter()
            .nth(best)
            .expect("same length as pool");
        current = Some(scores[best]);
        trace.push(TraceEntry {
            step: trace.len() + 1,
            inserted,
            fairness: value,
        });
    }

    Ok(SearchResult {
        strategy: Strategy::GFair,
        plan,
        fairness: current,
        baseline_fairness: baseline,
        fairness_trace: trace,
        model_calls,
    })
}
