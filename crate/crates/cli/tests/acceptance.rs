//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use fairprompt::analysis::{five_number_summary, pearson};
use fairprompt::backend::{CountingBackend, SyntheticLm, SyntheticLmConfig};
use fairprompt::calibration::{calibrate, CalibrationVector};
use fairprompt::fairness::{
    entropy, kl_attribute_fairness, kl_divergence, ContentFreeInput, FairnessProbe,
};
use fairprompt::prompt::{Example, LabelSpace, PredictiveDistribution, Template};
use fairprompt::search::{
    candidate_count, enumerate_all, enumerate_fairness, exhaustive_search, g_fair, t_fair,
    top_k_plan,
};
use fairprompt::PromptContext;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

const FIXTURE_SEED_BASE: u64 = 27;
/// Pool positions drawn by run seed 0 (ChaCha8 shuffle, first four).
const FIXTURE_SEED0_TRAIN: [usize; 4] = [2, 0, 6, 1];
/// Brute-force Pearson r(fairness, accuracy) over the 64 seed-0 candidates,
/// frozen when the fixture was designed.
const FIXTURE_SEED0_R: f64 = 0.738_316_063_505_978_4;
const FIXTURE_SEED0_GFAIR_RANK: usize = 0;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fairprompt")
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

/// Every nonempty ordered selection of distinct indices, shortest first,
/// lexicographic within a length.
fn brute_plans(n: usize) -> Vec<Vec<usize>> {
    fn grow(n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !cur.contains(&i) {
                cur.push(i);
                grow(n, len, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for len in 1..=n {
        grow(n, len, &mut Vec::new(), &mut out);
    }
    out
}

fn normalized(raw: &[f64]) -> Vec<f64> {
    let z: f64 = raw.iter().sum();
    raw.iter().map(|r| r / z).collect()
}

fn brute_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
}

fn brute_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Randomized synthetic setup at N = 4 for the oracle criteria.
struct Case {
    labels: LabelSpace,
    template: Template,
    train: Vec<Example>,
    /// Text before the input and before the label, matching `template`.
    markers: (&'static str, &'static str),
    etas: Vec<String>,
    lm: SyntheticLm,
}

fn random_case(seed: u64) -> Case {
    const WORDS: [&str; 10] = [
        "red", "stone", "wave", "lamp", "north", "salt", "iron", "fern", "dusk", "reed",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let labels = if seed.is_multiple_of(3) {
        LabelSpace::new(["yes", "no", "unsure"]).unwrap()
    } else {
        LabelSpace::new(["yes", "no"]).unwrap()
    };
    let train = (0..4)
        .map(|_| {
            let text: Vec<&str> = (0..3)
                .map(|_| WORDS[rng.random_range(0..WORDS.len())])
                .collect();
            Example::new(text.join(" "), rng.random_range(0..labels.len()), &labels).unwrap()
        })
        .collect();
    let etas = if seed.is_multiple_of(2) {
        vec!["[N/A]".to_string()]
    } else {
        vec!["[N/A]".to_string(), "N/A".to_string()]
    };
    let config = SyntheticLmConfig {
        seed: rng.random(),
        recency_decay: rng.random_range(0.5..1.0),
        majority_label_weight: rng.random_range(0.0..3.0),
        feature_dim: rng.random_range(16..128),
        ..SyntheticLmConfig::default()
    };
    Case {
        labels,
        template: Template::new("Q: {x} A: {y}", "Q: {x} A: ", "\n").unwrap(),
        markers: ("Q: ", " A: "),
        train,
        etas,
        lm: SyntheticLm::new(config).unwrap(),
    }
}

impl Case {
    fn render(&self, plan: &[usize], query: &str) -> String {
        let (x, y) = self.markers;
        let mut s = String::new();
        for &i in plan {
            let e = &self.train[i];
            s += &format!("{x}{}{y}{}\n", e.text, self.labels.labels()[e.label_index]);
        }
        s + &format!("{x}{query}{y}")
    }

    fn fairness(&self, plan: &[usize]) -> f64 {
        let total: f64 = self
            .etas
            .iter()
            .map(|eta| {
                brute_entropy(&normalized(
                    &self.lm.score(&self.render(plan, eta), self.labels.labels()),
                ))
            })
            .sum();
        total / self.etas.len() as f64
    }

    fn probe(&self) -> FairnessProbe {
        FairnessProbe::entropy(
            self.etas
                .iter()
                .map(|e| ContentFreeInput::new(e.clone()).unwrap())
                .collect(),
        )
        .unwrap()
    }
}

fn criterion_1() -> Check {
    for n in 1..=6 {
        let plans: Vec<_> = enumerate_all(n, 6).map_err(|e| e.to_string())?.collect();
        let distinct: HashSet<_> = plans.iter().cloned().collect();
        let expected = candidate_count(n).unwrap();
        ensure!(
            plans.len() as u128 == expected && distinct.len() == plans.len(),
            "N={n}: {} plans, {} distinct, expected {expected}",
            plans.len(),
            distinct.len()
        );
    }
    ensure!(
        candidate_count(3).unwrap() == 15 && candidate_count(4).unwrap() == 64,
        "counts at N=3,4"
    );
    let case = random_case(0);
    let ctx = PromptContext::new(&case.lm, &case.template, &case.train, &case.labels);
    let start = Instant::now();
    let records = enumerate_fairness(&ctx, &case.probe(), 6).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(records.len() == 64, "{} records at N=4", records.len());
    ensure!(
        elapsed.as_secs_f64() < 1.0,
        "N=4 enumeration took {elapsed:?}"
    );
    Ok(format!(
        "counts match for N=1..6; N=4 scored in {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn criterion_2() -> Check {
    let cases = 24;
    for seed in 0..cases {
        let case = random_case(seed);
        let mut best: Option<(Vec<usize>, f64)> = None;
        for plan in brute_plans(4) {
            let f = case.fairness(&plan);
            if best.as_ref().is_none_or(|(_, b)| f > *b) {
                best = Some((plan, f));
            }
        }
        let (plan, _) = best.unwrap();
        let ctx = PromptContext::new(&case.lm, &case.template, &case.train, &case.labels);
        let found = exhaustive_search(&ctx, &case.probe(), 6).map_err(|e| e.to_string())?;
        ensure!(
            found.plan.indices() == plan.as_slice(),
            "config {seed}: {} vs brute force {plan:?}",
            found.plan
        );
    }
    Ok(format!("{cases} randomized configs at N=4 match"))
}

fn criterion_3() -> Check {
    let mut contexts: Vec<(String, Case)> = (0..24)
        .map(|s| (format!("random {s}"), random_case(s)))
        .collect();
    // the shipped fixture, each run seed
    let pool: Vec<Value> = fs::read_to_string(fixtures().join("train.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let labels = LabelSpace::new(["alpha", "beta"]).unwrap();
    for seed in 0..3u64 {
        let out = tempfile::tempdir().unwrap();
        let config = fixtures().join("config.json");
        run_cli(&[
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.path().to_str().unwrap(),
            "--seed",
            &seed.to_string(),
            "search",
            "--strategy",
            "gfair",
        ])?;
        let indices = read_json(&out.path().join(format!("search_seed{seed}.json")))?
            ["train_indices"]
            .clone();
        let train = indices
            .as_array()
            .unwrap()
            .iter()
            .map(|i| {
                let row = &pool[i.as_u64().unwrap() as usize];
                let label = labels.index_of(row["label"].as_str().unwrap()).unwrap();
                Example::new(row["text"].as_str().unwrap(), label, &labels).unwrap()
            })
            .collect();
        contexts.push((
            format!("fixture seed {seed}"),
            Case {
                labels: labels.clone(),
                template: Template::new("Input: {x} Label: {y}", "Input: {x} Label: ", "\n")
                    .unwrap(),
                markers: ("Input: ", " Label: "),
                train,
                etas: vec!["[N/A]".into()],
                lm: SyntheticLm::new(SyntheticLmConfig {
                    seed: FIXTURE_SEED_BASE + seed,
                    ..Default::default()
                })
                .unwrap(),
            },
        ));
    }
    for (name, case) in &contexts {
        let ctx = PromptContext::new(&case.lm, &case.template, &case.train, &case.labels);
        let probe = case.probe();
        let g = g_fair(&ctx, &probe, 1).map_err(|e| e.to_string())?;
        let gv = g.fairness.unwrap().value;
        let best_single = (0..case.train.len())
            .map(|i| case.fairness(&[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        let t1 = t_fair(&ctx, &probe, 1)
            .map_err(|e| e.to_string())?
            .fairness
            .unwrap()
            .value;
        ensure!(
            gv >= best_single - 1e-9,
            "{name}: g_fair {gv} < best single {best_single}"
        );
        ensure!(gv >= t1 - 1e-9, "{name}: g_fair {gv} < t_fair(1) {t1}");
        for w in g.fairness_trace.windows(2) {
            ensure!(
                w[1].fairness > w[0].fairness,
                "{name}: trace not strictly increasing"
            );
        }
    }
    Ok(format!("{} fixtures", contexts.len()))
}

fn criterion_4() -> Check {
    for seed in 0..12 {
        let case = random_case(seed);
        let eta = case.etas.len() as u64;
        let n = case.train.len() as u64;
        let counter = CountingBackend::new(&case.lm);
        let ctx = PromptContext::new(&counter, &case.template, &case.train, &case.labels);
        let probe = case.probe();
        for k in 1..=4 {
            counter.reset();
            t_fair(&ctx, &probe, k).map_err(|e| e.to_string())?;
            ensure!(
                counter.calls() == n * eta,
                "t_fair k={k}: {} calls",
                counter.calls()
            );
        }
        counter.reset();
        g_fair(&ctx, &probe, 1).map_err(|e| e.to_string())?;
        ensure!(
            counter.calls() <= n * (n + 1) / 2 * eta,
            "g_fair: {} calls",
            counter.calls()
        );
        counter.reset();
        exhaustive_search(&ctx, &probe, 6).map_err(|e| e.to_string())?;
        let expected = candidate_count(4).unwrap() as u64 * eta;
        ensure!(
            counter.calls() == expected,
            "exhaustive: {} calls, expected {expected}",
            counter.calls()
        );
    }
    Ok("12 configs, |eta| in {1, 2}".into())
}

fn criterion_5() -> Check {
    let out = tempfile::tempdir().unwrap();
    let config = fixtures().join("config.json");
    let (cfg, dir) = (config.to_str().unwrap(), out.path().to_str().unwrap());
    run_cli(&[
        "--config",
        cfg,
        "--out",
        dir,
        "--seed",
        "0",
        "enumerate-eval",
    ])?;
    run_cli(&[
        "--config",
        cfg,
        "--out",
        dir,
        "--seed",
        "0",
        "search",
        "--strategy",
        "gfair",
    ])?;
    let enumeration = read_json(&out.path().join("enumeration_seed0.json"))?;
    let search = read_json(&out.path().join("search_seed0.json"))?;
    let indices: Vec<usize> = serde_json::from_value(enumeration["train_indices"].clone()).unwrap();
    ensure!(indices == FIXTURE_SEED0_TRAIN, "seed 0 drew {indices:?}");

    // brute force straight from the fixture files and the model
    let labels = ["alpha", "beta"].map(String::from);
    let read_rows = |name: &str| -> Vec<(String, usize)> {
        fs::read_to_string(fixtures().join(name))
            .unwrap()
            .lines()
            .map(|l| {
                let v: Value = serde_json::from_str(l).unwrap();
                let y = labels
                    .iter()
                    .position(|x| x == v["label"].as_str().unwrap())
                    .unwrap();
                (v["text"].as_str().unwrap().to_string(), y)
            })
            .collect()
    };
    let pool = read_rows("train.jsonl");
    let test = read_rows("test.jsonl");
    let train: Vec<&(String, usize)> = indices.iter().map(|&i| &pool[i]).collect();
    let lm = SyntheticLm::new(SyntheticLmConfig {
        seed: FIXTURE_SEED_BASE,
        ..Default::default()
    })
    .unwrap();
    let render = |plan: &[usize], q: &str| {
        let mut s = String::new();
        for &i in plan {
            s += &format!("Input: {} Label: {}\n", train[i].0, labels[train[i].1]);
        }
        s + &format!("Input: {q} Label: ")
    };
    let plans = brute_plans(4);
    let mut fairness = Vec::new();
    let mut accuracy = Vec::new();
    for plan in &plans {
        fairness.push(brute_entropy(&normalized(
            &lm.score(&render(plan, "[N/A]"), &labels),
        )));
        let correct = test
            .iter()
            .filter(|(x, y)| {
                let s = lm.score(&render(plan, x), &labels);
                let pred = if s[1] > s[0] { 1 } else { 0 };
                pred == *y
            })
            .count();
        accuracy.push(correct as f64 / test.len() as f64);
    }
    let r_brute = brute_pearson(&fairness, &accuracy);
    let g_plan: Vec<usize> = serde_json::from_value(search["result"]["plan"].clone()).unwrap();
    let g_at = plans
        .iter()
        .position(|p| *p == g_plan)
        .ok_or("g_fair plan not enumerated")?;
    let rank_brute = (0..plans.len())
        .filter(|&j| fairness[j] > fairness[g_at] || (fairness[j] == fairness[g_at] && j < g_at))
        .count();

    let r_harness = enumeration["fairness_accuracy_r"]
        .as_f64()
        .ok_or("harness r missing")?;
    let rows = enumeration["curve"]["rows"].as_array().unwrap();
    let rank_harness = rows
        .iter()
        .find(|row| serde_json::from_value::<Vec<usize>>(row["plan"].clone()).unwrap() == g_plan)
        .and_then(|row| row["rank"].as_u64())
        .ok_or("g_fair plan missing from curve")? as usize;

    println!(
        "    fixture seed 0: brute-force r = {r_brute:.17}, g_fair rank = {rank_brute} of {}",
        plans.len()
    );
    ensure!(rows.len() == 64, "{} curve rows", rows.len());
    ensure!(r_brute > 0.0, "r = {r_brute} is not positive");
    ensure!(
        (rank_brute as f64) < 0.2 * plans.len() as f64,
        "g_fair rank {rank_brute} not in the top 20%"
    );
    ensure!(
        (r_harness - r_brute).abs() <= 1e-9,
        "harness r {r_harness} vs brute force {r_brute}"
    );
    ensure!(
        rank_harness == rank_brute,
        "harness rank {rank_harness} vs brute force {rank_brute}"
    );
    ensure!(
        (r_brute - FIXTURE_SEED0_R).abs() <= 1e-9,
        "r {r_brute} drifted from frozen {FIXTURE_SEED0_R}"
    );
    ensure!(
        rank_brute == FIXTURE_SEED0_GFAIR_RANK,
        "rank {rank_brute} drifted from frozen {FIXTURE_SEED0_GFAIR_RANK}"
    );
    Ok(format!(
        "r = {r_harness:.6}, g_fair plan {g_plan:?} at rank {rank_harness} of 64"
    ))
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> PredictiveDistribution {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1e-9..1.0)).collect();
    PredictiveDistribution::new(normalized(&raw)).unwrap()
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let n = rng.random_range(2..9);
        let p = random_dist(&mut rng, n);
        let h = entropy(&p);
        ensure!(
            h >= 0.0 && h <= (n as f64).ln() + 1e-12,
            "entropy {h} outside [0, ln {n}]"
        );
        let kl = kl_divergence(&p, &p).map_err(|e| e.to_string())?;
        ensure!(kl == 0.0, "KL(p||p) = {kl}");
        let f = kl_attribute_fairness(&p, &p)
            .map_err(|e| e.to_string())?
            .value;
        ensure!(f == 1.0, "kl_attribute_fairness(p, p) = {f}");
    }
    let u = entropy(&PredictiveDistribution::uniform(4));
    ensure!((u - 4f64.ln()).abs() <= 1e-12, "entropy of uniform-4 = {u}");
    Ok("10^4 random distributions".into())
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let n = rng.random_range(2..9);
        let p = random_dist(&mut rng, n);
        let same = calibrate(&p, &CalibrationVector::uniform(n)).map_err(|e| e.to_string())?;
        for (a, b) in p.probs().iter().zip(same.probs()) {
            ensure!((a - b).abs() <= 1e-12, "uniform prior moved {a} to {b}");
        }
        let flat = calibrate(&p, &CalibrationVector::new(p.clone()).unwrap())
            .map_err(|e| e.to_string())?;
        for q in flat.probs() {
            ensure!((q - 1.0 / n as f64).abs() <= 1e-12, "p = prior gave {q}");
        }
        let prior = random_dist(&mut rng, n);
        let q =
            calibrate(&p, &CalibrationVector::new(prior).unwrap()).map_err(|e| e.to_string())?;
        let sum: f64 = q.probs().iter().sum();
        ensure!(
            (sum - 1.0).abs() <= 1e-9 && q.probs().iter().all(|x| (0.0..=1.0).contains(x)),
            "invalid {q:?}"
        );
    }
    Ok("10^4 random cases".into())
}

fn criterion_8() -> Check {
    let plan = top_k_plan(&[0.2, 0.9, 0.5, 0.7], 2).map_err(|e| e.to_string())?;
    ensure!(plan.indices() == [3, 1], "k=2 gave {plan}");
    let ties = top_k_plan(&[0.5; 4], 4).map_err(|e| e.to_string())?;
    ensure!(ties.indices() == [3, 2, 1, 0], "all ties gave {ties}");
    Ok("[3,1]; all ties give [3,2,1,0]".into())
}

fn output_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn calls_line(stdout: &str) -> Result<(u64, u64), String> {
    let line = stdout
        .lines()
        .find(|l| l.starts_with("backend calls:"))
        .ok_or("no call summary")?;
    let nums: Vec<u64> = line
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect();
    Ok((nums[0], nums[1]))
}

fn criterion_9() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures().join("config.json");
    let cfg = config.to_str().unwrap();
    let cache = tmp.path().join("scores.jsonl");
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        run_cli(&[
            "--config",
            cfg,
            "--out",
            dir.to_str().unwrap(),
            "enumerate-eval",
            "--calibrate",
        ])?;
        runs.push(output_files(&dir));
    }
    ensure!(runs[0].len() >= 4, "only {} output files", runs[0].len());
    ensure!(runs[0] == runs[1], "two identical runs differ");

    let cold_dir = tmp.path().join("cold");
    let warm_dir = tmp.path().join("warm");
    let cold = run_cli(&[
        "--config",
        cfg,
        "--out",
        cold_dir.to_str().unwrap(),
        "--cache",
        cache.to_str().unwrap(),
        "enumerate-eval",
        "--calibrate",
    ])?;
    let warm = run_cli(&[
        "--config",
        cfg,
        "--out",
        warm_dir.to_str().unwrap(),
        "--cache",
        cache.to_str().unwrap(),
        "enumerate-eval",
        "--calibrate",
    ])?;
    let (cold_calls, _) = calls_line(&cold)?;
    let (warm_calls, warm_hits) = calls_line(&warm)?;
    ensure!(cold_calls > 0, "cold run made no calls");
    ensure!(warm_calls == 0, "warm run made {warm_calls} backend calls");
    ensure!(warm_hits > 0, "warm run had no cache hits");
    ensure!(
        output_files(&warm_dir) == runs[0],
        "cached outputs differ from uncached"
    );
    Ok(format!(
        "{} files byte-identical; warm rerun: 0 calls, {warm_hits} hits",
        runs[0].len()
    ))
}

fn criterion_10() -> Check {
    let triples: [([f64; 3], [f64; 3], f64); 3] = [
        // r = Σdxdy / sqrt(Σdx² Σdy²)
        ([1.0, 2.0, 3.0], [1.0, 3.0, 2.0], 0.5),
        ([1.0, 2.0, 3.0], [3.0, 2.0, 1.0], -1.0),
        ([0.0, 1.0, 5.0], [1.0, 0.0, 2.0], 4.0 / 28f64.sqrt()),
    ];
    for (xs, ys, expected) in triples {
        let r = pearson(&xs, &ys).map_err(|e| e.to_string())?;
        ensure!(
            (r - expected).abs() <= 1e-12,
            "pearson({xs:?}, {ys:?}) = {r}, expected {expected}"
        );
    }
    // h = (n - 1) p, interpolate between order statistics floor(h), floor(h) + 1
    let vectors: [(&[f64], [f64; 5]); 5] = [
        (&[1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 4.0, 5.0]),
        (&[7.0], [7.0; 5]),
        (&[4.0, 1.0, 3.0, 2.0], [1.0, 1.75, 2.5, 3.25, 4.0]),
        (&[10.0, 0.0], [0.0, 2.5, 5.0, 7.5, 10.0]),
        (&[3.0, 1.0, 2.0, 8.0, 6.0, 5.0], [1.0, 2.25, 4.0, 5.75, 8.0]),
    ];
    for (v, expected) in vectors {
        let s = five_number_summary(v).map_err(|e| e.to_string())?;
        let got = [s.min, s.q1, s.median, s.q3, s.max];
        ensure!(
            got == expected,
            "summary of {v:?} = {got:?}, expected {expected:?}"
        );
    }
    Ok("3 triples, 5 vectors".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("enumeration cardinality", criterion_1),
        ("oracle equivalence", criterion_2),
        ("greedy guarantees", criterion_3),
        ("call-count complexity", criterion_4),
        ("greedy quality on the designed fixture", criterion_5),
        ("fairness math", criterion_6),
        ("calibration identities", criterion_7),
        ("top-k trace", criterion_8),
        ("determinism and cache replay", criterion_9),
        ("statistics", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
