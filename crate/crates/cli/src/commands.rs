use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use fairprompt::analysis::{
    correlation_report, evaluate_plan, five_number_summary, mean_curve, pearson, ranking_curve,
    sweep, CorrelationReport, EvalReport, FiveNumberSummary, RankingCurve, SweepKind,
};
use fairprompt::backend::{CachedBackend, CountingBackend, ScoreBackend, ScoreCache};
use fairprompt::fairness::{FairnessKind, FairnessProbe};
use fairprompt::prompt::{Example, PromptPlan};
use fairprompt::search::{
    enumerate_fairness, exhaustive_search, g_fair, t_fair, EnumerationRecord, SearchResult,
    Strategy, DEFAULT_ENUMERATION_CAP,
};
use fairprompt::PromptContext;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{CacheAction, CapArgs, Cli, Command, PlanSource, SearchArgs, SeriesArg};
use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutput {
    pub seed: u64,
    /// Positions in the training file of the demonstrations drawn for this
    /// seed; plan indices refer to this list.
    pub train_indices: Vec<usize>,
    pub result: SearchResult,
    /// The final plan rendered with the first probe input as its query.
    pub rendered_prompt: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnumerationOutput {
    pub seed: u64,
    pub train_indices: Vec<usize>,
    pub fairness_kind: FairnessKind,
    pub records: Vec<EnumerationRecord>,
    pub curve: RankingCurve,
    pub accuracy_summary: FiveNumberSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_calibrated_summary: Option<FiveNumberSummary>,
    /// Pearson r of fairness against accuracy; absent when undefined.
    pub fairness_accuracy_r: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalOutput {
    pub seed: u64,
    pub train_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutput {
    pub seed: u64,
    pub train_indices: Vec<usize>,
    pub kind: SweepKind,
    pub base_plan: PromptPlan,
    pub reports: Vec<EvalReport>,
}

/// Backend traffic over one command.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CallStats {
    /// Calls that reached the configured backend.
    pub backend_calls: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

struct Session<'a> {
    cli: &'a Cli,
    loaded: LoadedConfig,
    cache: Option<Arc<ScoreCache>>,
    probe: FairnessProbe,
    seeds: Vec<u64>,
    stats: CallStats,
}

/// Per-seed view handed to command bodies.
struct SeedRun<'a> {
    seed: u64,
    train_indices: Vec<usize>,
    ctx: PromptContext<'a>,
    test: &'a [Example],
}

impl<'a> Session<'a> {
    fn open(cli: &'a Cli) -> anyhow::Result<Self> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config is required".into()))?;
        let loaded = LoadedConfig::load(path)?;
        let cache_path = cli.cache.clone().or_else(|| loaded.cache_path());
        if cli.replay && cache_path.is_none() {
            return Err(CliError::Config("--replay needs a cache".into()).into());
        }
        let cache = cache_path
            .map(|p| ScoreCache::open(p).map(Arc::new))
            .transpose()?;
        let kind = cli
            .fairness
            .map(Into::into)
            .unwrap_or(loaded.config.fairness);
        let probe = loaded
            .config
            .probe(kind, cli.attr_a.as_deref(), cli.attr_b.as_deref())?;
        let seeds = if cli.seeds.is_empty() {
            loaded.config.seeds.clone()
        } else {
            cli.seeds.clone()
        };
        Ok(Self {
            cli,
            loaded,
            cache,
            probe,
            seeds,
            stats: CallStats::default(),
        })
    }

    /// Runs `body` once per seed with a counting (and possibly caching)
    /// backend, in seed order.
    fn for_each_seed<T>(
        &mut self,
        mut body: impl FnMut(&SeedRun<'_>, &FairnessProbe) -> anyhow::Result<T>,
    ) -> anyhow::Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.seeds.len());
        for &seed in &self.seeds {
            let inner = CountingBackend::new(self.loaded.backend(seed)?);
            let train_indices = self.loaded.train_indices(seed);
            let train = self.loaded.train_subset(seed);
            let cached = self.cache.as_ref().map(|c| {
                if self.cli.replay {
                    CachedBackend::replay(&inner, c.clone())
                } else {
                    CachedBackend::new(&inner, c.clone())
                }
            });
            let backend: &dyn ScoreBackend = match &cached {
                Some(c) => c,
                None => &inner,
            };
            let ctx = PromptContext::new(
                backend,
                &self.loaded.config.template,
                &train,
                &self.loaded.config.labels,
            );
            let run = SeedRun {
                seed,
                train_indices,
                ctx,
                test: &self.loaded.test,
            };
            let result = body(&run, &self.probe).with_context(|| format!("seed {seed}"));
            self.stats.backend_calls += inner.calls();
            if let Some(c) = &cached {
                self.stats.cache_hits += c.hits();
                self.stats.cache_misses += c.misses();
            }
            out.push(result?);
        }
        Ok(out)
    }

    fn calibration_inputs(
        &self,
        calibrate: bool,
    ) -> Option<Vec<fairprompt::fairness::ContentFreeInput>> {
        calibrate.then(|| self.loaded.config.content_free.clone())
    }

    fn report_stats(&self) {
        let s = self.stats;
        println!(
            "backend calls: {}, cache hits: {}, cache misses: {}",
            s.backend_calls, s.cache_hits, s.cache_misses
        );
    }
}

fn enumeration_cap(cap: &CapArgs) -> Result<usize, CliError> {
    if cap.max_enum > DEFAULT_ENUMERATION_CAP && !cap.allow_large_enum {
        return Err(CliError::CapRefused(format!(
            "--max-enum {} is above {DEFAULT_ENUMERATION_CAP}; pass --allow-large-enum to confirm",
            cap.max_enum
        )));
    }
    Ok(cap.max_enum)
}

fn run_strategy(
    ctx: &PromptContext<'_>,
    probe: &FairnessProbe,
    strategy: Strategy,
    args: &SearchArgs,
) -> anyhow::Result<SearchResult> {
    let mut result = match strategy {
        Strategy::Exhaustive => exhaustive_search(ctx, probe, enumeration_cap(&args.cap)?)?,
        Strategy::TFair => {
            let k = args
                .k
                .ok_or_else(|| CliError::Config("--k is required for tfair".into()))?;
            t_fair(ctx, probe, k)?
        }
        Strategy::GFair => g_fair(ctx, probe, args.min_demos as usize)?,
    };
    result.rescore(ctx, probe)?;
    Ok(result)
}

fn plan_from_source(
    run: &SeedRun<'_>,
    probe: &FairnessProbe,
    source: &PlanSource,
    args: &SearchArgs,
) -> anyhow::Result<(PromptPlan, Option<Strategy>)> {
    match (&source.plan, source.strategy) {
        (Some(plan), _) => {
            plan.check_bounds(run.ctx.train.len())?;
            Ok((plan.clone(), None))
        }
        (None, Some(s)) => {
            let strategy = s.into();
            Ok((
                run_strategy(&run.ctx, probe, strategy, args)?.plan,
                Some(strategy),
            ))
        }
        (None, None) => Ok((PromptPlan::empty(), None)),
    }
}

fn cmd_search(
    session: &mut Session<'_>,
    strategy: Strategy,
    args: &SearchArgs,
) -> anyhow::Result<()> {
    let mut out = OutputDir::new(&session.cli.out);
    let outputs = session.for_each_seed(|run, probe| {
        let result = run_strategy(&run.ctx, probe, strategy, args)?;
        let query = probe.inputs()[0].as_str();
        Ok(SearchOutput {
            seed: run.seed,
            train_indices: run.train_indices.clone(),
            rendered_prompt: run.ctx.render(&result.plan, query)?,
            result,
        })
    })?;
    for o in &outputs {
        let fairness = o.result.fairness.map(|f| f.value).unwrap_or(f64::NAN);
        println!(
            "seed {}: plan {} fairness {fairness:.6}",
            o.seed, o.result.plan
        );
        out.write_json(&format!("search_seed{}.json", o.seed), o)?;
    }
    let options = json!({
        "strategy": strategy,
        "k": args.k,
        "min_demos": args.min_demos,
        "max_enum": args.cap.max_enum,
        "fairness": session.probe,
    });
    out.finish("search", &session.loaded.digest, options, &session.seeds)?;
    session.report_stats();
    Ok(())
}

fn enumerate_seed(
    run: &SeedRun<'_>,
    probe: &FairnessProbe,
    cap: usize,
    calibrate_with: Option<&[fairprompt::fairness::ContentFreeInput]>,
) -> anyhow::Result<EnumerationOutput> {
    let mut records = enumerate_fairness(&run.ctx, probe, cap)?;
    let reports: Vec<EvalReport> = records
        .par_iter()
        .map(|r| evaluate_plan(&run.ctx, &r.plan, run.test, calibrate_with))
        .collect::<fairprompt::Result<_>>()?;
    for (record, report) in records.iter_mut().zip(&reports) {
        record.accuracy = Some(report.accuracy_raw);
        record.accuracy_calibrated = report.accuracy_calibrated;
    }
    let accuracies: Vec<f64> = reports.iter().map(|r| r.accuracy_raw).collect();
    let fairness: Vec<f64> = records.iter().map(|r| r.fairness.value).collect();
    let calibrated: Option<Vec<f64>> = reports.iter().map(|r| r.accuracy_calibrated).collect();
    Ok(EnumerationOutput {
        seed: run.seed,
        train_indices: run.train_indices.clone(),
        fairness_kind: probe.kind(),
        curve: ranking_curve(&records)?,
        accuracy_summary: five_number_summary(&accuracies)?,
        accuracy_calibrated_summary: calibrated.as_deref().map(five_number_summary).transpose()?,
        fairness_accuracy_r: pearson(&fairness, &accuracies).ok(),
        records,
    })
}

fn cmd_enumerate_eval(
    session: &mut Session<'_>,
    calibrate: bool,
    cap: &CapArgs,
) -> anyhow::Result<()> {
    let cap_value = enumeration_cap(cap)?;
    let calibrate_with = session.calibration_inputs(calibrate);
    let mut out = OutputDir::new(&session.cli.out);
    let outputs = session.for_each_seed(|run, probe| {
        enumerate_seed(run, probe, cap_value, calibrate_with.as_deref())
    })?;
    for o in &outputs {
        let r = o
            .fairness_accuracy_r
            .map_or("undefined".to_string(), |r| format!("{r:.6}"));
        println!(
            "seed {}: {} candidates, random {:.4}, oracle {:.4}, fairness-accuracy r {r}",
            o.seed,
            o.records.len(),
            o.curve.random_marker,
            o.curve.oracle_marker.accuracy
        );
        out.write_json(&format!("enumeration_seed{}.json", o.seed), o)?;
        out.write(
            &format!("curve_seed{}.csv", o.seed),
            o.curve.to_csv().as_bytes(),
        )?;
    }
    if outputs.len() > 1 {
        let curves: Vec<RankingCurve> = outputs.iter().map(|o| o.curve.clone()).collect();
        let mean = mean_curve(&curves)?;
        out.write_json("curve_mean.json", &mean)?;
        out.write("curve_mean.csv", mean.to_csv().as_bytes())?;
    }
    let options = json!({
        "calibrate": calibrate,
        "max_enum": cap.max_enum,
        "fairness": session.probe,
    });
    out.finish(
        "enumerate-eval",
        &session.loaded.digest,
        options,
        &session.seeds,
    )?;
    session.report_stats();
    Ok(())
}

fn cmd_eval(
    session: &mut Session<'_>,
    source: &PlanSource,
    args: &SearchArgs,
    calibrate: bool,
) -> anyhow::Result<()> {
    if source.plan.is_none() && source.strategy.is_none() {
        return Err(CliError::Config("eval needs --plan or --strategy".into()).into());
    }
    let calibrate_with = session.calibration_inputs(calibrate);
    let mut out = OutputDir::new(&session.cli.out);
    let outputs = session.for_each_seed(|run, probe| {
        let (plan, strategy) = plan_from_source(run, probe, source, args)?;
        let report = evaluate_plan(&run.ctx, &plan, run.test, calibrate_with.as_deref())?;
        Ok(EvalOutput {
            seed: run.seed,
            train_indices: run.train_indices.clone(),
            strategy,
            report,
        })
    })?;
    for o in &outputs {
        let cal = o
            .report
            .accuracy_calibrated
            .map_or(String::new(), |a| format!(", calibrated {a:.4}"));
        println!(
            "seed {}: plan {} accuracy {:.4}{cal}",
            o.seed, o.report.plan, o.report.accuracy_raw
        );
        out.write_json(&format!("eval_seed{}.json", o.seed), o)?;
    }
    let options = json!({
        "plan": source.plan,
        "strategy": source.strategy.map(Strategy::from),
        "k": args.k,
        "min_demos": args.min_demos,
        "calibrate": calibrate,
        "fairness": session.probe,
    });
    out.finish("eval", &session.loaded.digest, options, &session.seeds)?;
    session.report_stats();
    Ok(())
}

fn series(records: &[EnumerationRecord], which: SeriesArg) -> Result<Vec<f64>, CliError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            match which {
                SeriesArg::Fairness => Some(r.fairness.value),
                SeriesArg::Accuracy => r.accuracy,
                SeriesArg::AccuracyCalibrated => r.accuracy_calibrated,
            }
            .ok_or_else(|| {
                CliError::Config(format!(
                    "record {i} lacks {which:?}; run enumerate-eval (with --calibrate for calibrated accuracy) first"
                ))
            })
        })
        .collect()
}

fn series_label(which: SeriesArg) -> &'static str {
    match which {
        SeriesArg::Fairness => "fairness",
        SeriesArg::Accuracy => "accuracy",
        SeriesArg::AccuracyCalibrated => "accuracy_calibrated",
    }
}

/// Correlates two series of a saved enumeration output.
pub fn correlate_file(
    path: &std::path::Path,
    x: SeriesArg,
    y: SeriesArg,
) -> anyhow::Result<CorrelationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| fairprompt::Error::Io {
        context: path.display().to_string(),
        source: e,
    })?;
    let enumeration: EnumerationOutput = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let xs = series(&enumeration.records, x)?;
    let ys = series(&enumeration.records, y)?;
    Ok(correlation_report(
        &xs,
        &ys,
        (series_label(x), series_label(y)),
    )?)
}

fn cmd_correlate(session: &mut Session<'_>, x: SeriesArg, y: SeriesArg) -> anyhow::Result<()> {
    let mut out = OutputDir::new(&session.cli.out);
    let mut reports = Vec::new();
    for &seed in &session.seeds {
        let path = out.root().join(format!("enumeration_seed{seed}.json"));
        let report = correlate_file(&path, x, y).with_context(|| format!("seed {seed}"))?;
        println!(
            "seed {seed}: r({}, {}) = {:.6} over {}",
            report.series_labels.0, report.series_labels.1, report.r, report.n
        );
        reports.push((seed, report));
    }
    let name = format!("correlation_{}_{}", series_label(x), series_label(y));
    for (seed, report) in &reports {
        out.write_json(&format!("{name}_seed{seed}.json"), report)?;
    }
    let options = json!({ "x": series_label(x), "y": series_label(y) });
    out.finish("correlate", &session.loaded.digest, options, &session.seeds)?;
    Ok(())
}

fn cmd_sweep(
    session: &mut Session<'_>,
    kind: SweepKind,
    source: &PlanSource,
    args: &SearchArgs,
    calibrate: bool,
) -> anyhow::Result<()> {
    if kind != SweepKind::Selection && source.plan.is_none() && source.strategy.is_none() {
        return Err(
            CliError::Config("this sweep needs a base plan: --plan or --strategy".into()).into(),
        );
    }
    let calibrate_with = session.calibration_inputs(calibrate);
    let mut out = OutputDir::new(&session.cli.out);
    let outputs = session.for_each_seed(|run, probe| {
        let (base_plan, _) = plan_from_source(run, probe, source, args)?;
        let reports = sweep(
            kind,
            &run.ctx,
            &base_plan,
            run.test,
            calibrate_with.as_deref(),
        )?;
        Ok(SweepOutput {
            seed: run.seed,
            train_indices: run.train_indices.clone(),
            kind,
            base_plan,
            reports,
        })
    })?;
    let kind_name = match kind {
        SweepKind::Amount => "amount",
        SweepKind::PermutationShift => "permutation",
        SweepKind::Selection => "selection",
    };
    for o in &outputs {
        for r in &o.reports {
            println!(
                "seed {}: plan {} accuracy {:.4}",
                o.seed, r.plan, r.accuracy_raw
            );
        }
        out.write_json(&format!("sweep_{kind_name}_seed{}.json", o.seed), o)?;
    }
    let options = json!({
        "kind": kind,
        "plan": source.plan,
        "strategy": source.strategy.map(Strategy::from),
        "calibrate": calibrate,
        "fairness": session.probe,
    });
    out.finish("sweep", &session.loaded.digest, options, &session.seeds)?;
    session.report_stats();
    Ok(())
}

fn cmd_cache(cli: &Cli, action: &CacheAction) -> anyhow::Result<()> {
    let path: PathBuf = match (&cli.cache, &cli.config) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => LoadedConfig::load(c)?
            .cache_path()
            .ok_or_else(|| CliError::Config("the config names no cache".into()))?,
        (None, None) => {
            return Err(CliError::Config("cache commands need --cache or --config".into()).into())
        }
    };
    let cache = ScoreCache::open(&path)?;
    match action {
        CacheAction::Stats => {
            println!("{}", serde_json::to_string_pretty(&cache.stats())?);
        }
        CacheAction::Gc { max_age } => {
            let removed = cache.gc_now(*max_age)?;
            println!("removed {removed} entries, {} remain", cache.len());
        }
        CacheAction::Export { path } => {
            let n = cache.export(path)?;
            println!("exported {n} entries to {}", path.display());
        }
        CacheAction::Import { path } => {
            let n = cache.import(path)?;
            println!("imported {n} new entries");
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Command::Cache { action } = &cli.command {
        return cmd_cache(cli, action);
    }
    let mut session = Session::open(cli)?;
    match &cli.command {
        Command::Search { strategy, search } => {
            cmd_search(&mut session, (*strategy).into(), search)
        }
        Command::EnumerateEval { calibrate, cap } => {
            cmd_enumerate_eval(&mut session, *calibrate, cap)
        }
        Command::Eval {
            plan,
            search,
            calibrate,
        } => cmd_eval(&mut session, plan, search, *calibrate),
        Command::Correlate { x, y } => cmd_correlate(&mut session, *x, *y),
        Command::Sweep {
            kind,
            plan,
            search,
            calibrate,
        } => cmd_sweep(&mut session, (*kind).into(), plan, search, *calibrate),
        Command::Cache { .. } => unreachable!("handled above"),
    }
}

/// Runs with a bounded rayon pool when `--concurrency` is given.
pub fn run_with_pool(cli: &Cli) -> anyhow::Result<()> {
    match cli.concurrency {
        Some(0) => Err(CliError::Config("--concurrency must be at least 1".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")?
            .install(|| run(cli)),
        None => run(cli),
    }
}
