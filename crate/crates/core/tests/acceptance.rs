//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criterion 9 needs an externally supplied dataset. It runs only when
//! `SGRNA_DEEPCRISPR_DATA` (data file) and `SGRNA_DEEPCRISPR_CONFIG`
//! (experiment config) are set, and is reported as SKIP otherwise.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use sgrna_ensemble::dataio::{write_dataset, Scale};
use sgrna_ensemble::encoding::{self, ALPHABET};
use sgrna_ensemble::harness::commands::{self, CommonArgs};
use sgrna_ensemble::harness::{compare_studies, train_pipeline, ExperimentConfig, ModelArchive};
use sgrna_ensemble::learners::{
    self, FittedState, GbmParams, HyperParams, LinearParams, Node, Predictor, TreeParams, MIN_GAIN,
};
use sgrna_ensemble::losses::LossSpec;
use sgrna_ensemble::metrics::{self, Confusion};
use sgrna_ensemble::refine::{fit_refined, predict_refined};
use sgrna_ensemble::stacking::{fit_stacked, fold_model_seed, predict_stacked, BaseSpec, StackOptions};
use sgrna_ensemble::synthetic::{generate, generate_split, SyntheticSpec};
use sgrna_ensemble::tuning::VoteRule;
use sgrna_ensemble::Matrix;

/// Held-out Spearman floor for the synthetic end-to-end benchmark. The
/// calibration run of this exact configuration observed 0.927995; the floor
/// leaves a margin of about 0.03.
const SYNTHETIC_SPEARMAN_FLOOR: f64 = 0.90;

/// Spearman of the bundled transcript columns from scipy.stats.spearmanr.
const TRANSCRIPT_SPEARMAN_SCIPY: f64 = 0.47727272727272735;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit_s, || {
        format!("runtime {:.2}s exceeds {limit_s}s", elapsed.as_secs_f64())
    })
}

fn random_matrix(r: &mut impl Rng, n: usize, d: usize) -> Matrix {
    Matrix::new(n, d, (0..n * d).map(|_| r.random::<f64>()).collect())
}

// 1 -------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut r = rng(1);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let losses = [
            LossSpec::Squared,
            LossSpec::Absolute,
            LossSpec::huber(r.random_range(0.05..2.0)).unwrap(),
            LossSpec::quantile(r.random_range(0.05..0.95)).unwrap(),
        ];
        let (y, yhat) = loop {
            let y: f64 = r.random_range(-2.0..2.0);
            let yhat: f64 = r.random_range(-2.0..2.0);
            if (y - yhat).abs() > 1e-3 {
                break (y, yhat);
            }
        };
        for loss in losses {
            // central difference of the loss in the prediction, negated
            let fd = -(loss.value(y, yhat + h) - loss.value(y, yhat - h)) / (2.0 * h);
            let g = loss.negative_gradient(y, yhat);
            let rel = (g - fd).abs() / g.abs().max(1e-12);
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-6, || format!("max relative error {worst:e}"))?;
    within(t.elapsed(), 1.0)?;
    Ok(format!("800 gradients, max relative error {worst:.2e}"))
}

// 2 -------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let losses = LossSpec::default_set();
    let mut worst_mean = 0.0f64;
    let mut worst_gap = f64::NEG_INFINITY;
    for k in 0..50u64 {
        let ds = generate(&SyntheticSpec { n: 200, seed: 100 + k, ..Default::default() });
        let (x, y) = (ds.features(), ds.labels());
        let (family, params) = if k % 2 == 0 {
            (learners::Family::Linear, HyperParams::Linear(LinearParams::default()))
        } else {
            (learners::Family::Tree, HyperParams::Tree(TreeParams { max_depth: 4, ..Default::default() }))
        };
        let rm = fit_refined(family, &x, &y, &losses, &vec![vec![params]; 4], VoteRule::Mean, k)
            .map_err(|e| e.to_string())?;
        check(rm.constituents.len() == 4 && x.cols() == 92, || "structure".into())?;
        let p = predict_refined(&rm, &x).map_err(|e| e.to_string())?;
        let per: Vec<Vec<f64>> = rm.constituents.iter().map(|c| c.predict(&x).unwrap()).collect();
        for i in 0..x.rows() {
            let vals: Vec<f64> = per.iter().map(|v| v[i]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            worst_mean = worst_mean.max((p[i] - mean).abs());
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            check(lo <= p[i] && p[i] <= hi, || format!("dataset {k} row {i} outside constituent range"))?;
        }
        let mse = metrics::mse(&y, &p).unwrap();
        let mean_mse = per.iter().map(|v| metrics::mse(&y, v).unwrap()).sum::<f64>() / 4.0;
        worst_gap = worst_gap.max(mse - mean_mse);
        check(mse <= mean_mse + 1e-12, || format!("dataset {k}: Jensen violated by {:e}", mse - mean_mse))?;
    }
    check(worst_mean <= 1e-15, || format!("mean deviation {worst_mean:e}"))?;
    within(t.elapsed(), 30.0)?;
    Ok(format!(
        "50 datasets, mean deviation {worst_mean:.1e}, worst MSE gap {worst_gap:.2e}"
    ))
}

// 3 -------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut checked = 0;
    for k in 0..10u64 {
        let mut r = rng(300 + k);
        let n = 120;
        let x = random_matrix(&mut r, n, 6);
        let y: Vec<f64> = (0..n)
            .map(|i| (x.get(i, 0) * 0.7 + 0.3 * x.get(i, 1) * x.get(i, 2) + 0.2 * r.random::<f64>()).min(1.0))
            .collect();
        for loss in LossSpec::default_set().into_iter().chain([LossSpec::Huber { delta: 0.05 }, LossSpec::Quantile { tau: 0.8 }]) {
            let p = GbmParams {
                n_stages: 50,
                learning_rate: 0.1,
                ..Default::default()
            };
            let m = learners::fit(&HyperParams::Gbm(p), &x, &y, loss, k).map_err(|e| e.to_string())?;
            let FittedState::Gbm(g) = &m.state else {
                return Err("not a boosted model".into());
            };
            let stages = g.staged_predict(&x);
            check(stages.len() == 51, || "stage count".into())?;
            let totals: Vec<f64> = stages.iter().map(|f| loss.total(&y, f)).collect();
            for s in 1..totals.len() {
                let tol = 1e-12 * totals[s - 1].max(1.0);
                check(totals[s] <= totals[s - 1] + tol, || {
                    format!("dataset {k} {loss}: stage {s} loss {} > {}", totals[s], totals[s - 1])
                })?;
            }
            checked += 1;
        }
    }
    within(t.elapsed(), 60.0)?;
    Ok(format!("{checked} (dataset, loss) runs of 50 stages, training loss non-increasing"))
}

// 4 -------------------------------------------------------------------------

/// Exhaustive greedy oracle: every feature, every midpoint between
/// distinct sorted values, cost = summed half squared deviation from the
/// child mean, rows in ascending order.
fn oracle_tree(x: &Matrix, y: &[f64], rows: &[usize], depth: usize, max_depth: usize) -> Node {
    let mean = |rs: &[usize]| rs.iter().map(|&i| y[i]).sum::<f64>() / rs.len() as f64;
    let cost = |rs: &[usize]| {
        let m = mean(rs);
        rs.iter().map(|&i| 0.5 * (y[i] - m) * (y[i] - m)).sum::<f64>()
    };
    let leaf = Node::Leaf { value: mean(rows), samples: rows.len() };
    if depth >= max_depth || rows.len() < 2 {
        return leaf;
    }
    let parent = cost(rows);
    if parent <= 0.0 {
        return leaf;
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x.cols() {
        let mut vals: Vec<f64> = rows.iter().map(|&i| x.get(i, f)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, f) <= thr);
            let c = cost(&l) + cost(&r);
            if best.is_none_or(|(b, _, _)| c < b) {
                best = Some((c, f, thr));
            }
        }
    }
    let Some((c, f, thr)) = best else { return leaf };
    if parent - c <= MIN_GAIN * (1.0 + parent) {
        return leaf;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, f) <= thr);
    Node::Split {
        feature: f,
        threshold: thr,
        samples: rows.len(),
        left: Box::new(oracle_tree(x, y, &l, depth + 1, max_depth)),
        right: Box::new(oracle_tree(x, y, &r, depth + 1, max_depth)),
    }
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let params = TreeParams { max_depth: 2, min_samples_leaf: 1, min_samples_split: 2 };
    for k in 0..20u64 {
        let mut r = rng(400 + k);
        let x = random_matrix(&mut r, 8, 3);
        let y: Vec<f64> = (0..8).map(|_| r.random::<f64>()).collect();
        let m = learners::fit(&HyperParams::Tree(params), &x, &y, LossSpec::Squared, 0).map_err(|e| e.to_string())?;
        let FittedState::Tree(tree) = &m.state else {
            return Err("not a tree".into());
        };
        let rows: Vec<usize> = (0..8).collect();
        let oracle = oracle_tree(&x, &y, &rows, 0, 2);
        check(tree.root == oracle, || format!("dataset {k}: tree differs from oracle"))?;
    }
    within(t.elapsed(), 10.0)?;
    Ok("20 depth-2 trees identical to the exhaustive oracle (structure, thresholds, leaves)".into())
}

// 5 -------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let ds = generate(&SyntheticSpec { n: 100, seed: 5, ..Default::default() });
    let (x, y) = (ds.features(), ds.labels());
    let specs = vec![
        BaseSpec::Voted {
            name: "tree".into(),
            family: learners::Family::Tree,
            loss: LossSpec::Absolute,
            params: vec![HyperParams::Tree(TreeParams { max_depth: 4, ..Default::default() })],
        },
        BaseSpec::Refined {
            name: "avg_linear".into(),
            family: learners::Family::Linear,
            loss_set: vec![LossSpec::Squared, LossSpec::Huber { delta: 0.1 }],
            params_per_loss: vec![vec![HyperParams::Linear(LinearParams::default())]; 2],
        },
    ];
    let se = fit_stacked(&specs, &x, &y, 5, 55, StackOptions::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (j, spec) in specs.iter().enumerate() {
        for f in 0..5 {
            let train: Vec<usize> = (0..100).filter(|&i| se.fold_of_row[i] != f).collect();
            let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let m = spec
                .fit(&x.select_rows(&train), &ty, VoteRule::Mean, fold_model_seed(55, f, j))
                .map_err(|e| e.to_string())?;
            for i in (0..100).filter(|&i| se.fold_of_row[i] == f) {
                check(!train.contains(&i), || "fold leak".into())?;
                worst = worst.max((m.predict_row(x.row(i)) - se.oof.get(i, j)).abs());
            }
        }
    }
    check(worst <= 1e-10, || format!("OOF deviation {worst:e}"))?;

    // oracle base: an exact linear target is reproduced by unregularized least squares
    let mut r = rng(55);
    let xc = random_matrix(&mut r, 100, 4);
    let yc: Vec<f64> = (0..100).map(|i| 0.2 + 0.5 * xc.get(i, 0) - 0.3 * xc.get(i, 3)).collect();
    let oracle = BaseSpec::Voted {
        name: "exact".into(),
        family: learners::Family::Linear,
        loss: LossSpec::Squared,
        params: vec![HyperParams::Linear(LinearParams { ridge_lambda: 0.0, ..Default::default() })],
    };
    let so = fit_stacked(&[oracle], &xc, &yc, 5, 1, StackOptions::default()).map_err(|e| e.to_string())?;
    let mse = metrics::mse(&yc, &predict_stacked(&so, &xc).unwrap()).unwrap();
    check(mse <= 1e-8, || format!("oracle-base stacked MSE {mse:e}"))?;
    within(t.elapsed(), 60.0)?;
    Ok(format!("max OOF deviation {worst:.1e}; oracle-base training MSE {mse:.1e}"))
}

// 6 -------------------------------------------------------------------------

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn oracle_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let mut count = 0;
    for n in 2..=6 {
        let a: Vec<f64> = (1..=n).map(|v| v as f64).collect();
        for p in permutations(n) {
            let b: Vec<f64> = p.iter().map(|&v| v as f64 + 1.0).collect();
            let got = metrics::spearman(&a, &b).unwrap();
            // distinct ranks: closed form with rational arithmetic
            let d2: usize = (0..n).map(|i| (i + 1).abs_diff(p[i] + 1).pow(2)).sum();
            let exact = 1.0 - 6.0 * d2 as f64 / (n * (n * n - 1)) as f64;
            let oracle = oracle_pearson(&oracle_ranks(&a), &oracle_ranks(&b));
            check((got - exact).abs() <= 1e-12 && (got - oracle).abs() <= 1e-12, || {
                format!("n={n} perm {p:?}: {got} vs {exact}")
            })?;
            count += 1;
        }
    }
    let tie = metrics::spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    check((tie - 0.9487).abs() <= 1e-4, || format!("tie case {tie}"))?;

    let mut r = rng(6);
    for k in 0..500 {
        let n = r.random_range(2..40);
        let truth: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
        // coarse scores force ties
        let score: Vec<f64> = (0..n).map(|_| (r.random_range(0..10) as f64) / 10.0).collect();
        let cutoff = r.random_range(1..10) as f64 / 10.0;
        let m = metrics::classification_metrics(&truth, &score, cutoff).unwrap();
        let (mut tp, mut fp, mut tn, mut fneg) = (0, 0, 0, 0);
        for i in 0..n {
            match (truth[i], score[i] >= cutoff) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (false, false) => tn += 1,
                (true, false) => fneg += 1,
            }
        }
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let acc = (tp + tn) as f64 / n as f64;
        let prec = div(tp, tp + fp);
        let rec = div(tp, tp + fneg);
        let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fneg) as f64 };
        let c = Confusion::from_labels(&truth, &metrics::binarize(&score, cutoff));
        check(c == Confusion { tp, fp, tn, fn_: fneg }, || format!("instance {k}: confusion"))?;
        for (name, a, b) in [("accuracy", m.accuracy, acc), ("precision", m.precision, prec), ("recall", m.recall, rec), ("f1", m.f1, f1)] {
            check((a - b).abs() <= 1e-12, || format!("instance {k}: {name} {a} vs {b}"))?;
        }
        // pair counting for AUC, threshold sweep for AP
        let pos: Vec<f64> = (0..n).filter(|&i| truth[i]).map(|i| score[i]).collect();
        let neg: Vec<f64> = (0..n).filter(|&i| !truth[i]).map(|i| score[i]).collect();
        if pos.is_empty() || neg.is_empty() {
            check(m.roc_auc.is_none() && m.average_precision.is_none(), || format!("instance {k}: undefined"))?;
            continue;
        }
        let mut wins = 0.0;
        for p in &pos {
            for q in &neg {
                wins += if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 };
            }
        }
        let auc = wins / (pos.len() * neg.len()) as f64;
        let mut thresholds = score.clone();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let (mut ap, mut prev) = (0.0, 0.0);
        for th in thresholds {
            let tp = (0..n).filter(|&i| truth[i] && score[i] >= th).count();
            let pp = (0..n).filter(|&i| score[i] >= th).count();
            let rc = tp as f64 / pos.len() as f64;
            ap += (rc - prev) * (tp as f64 / pp as f64);
            prev = rc;
        }
        check((m.roc_auc.unwrap() - auc).abs() <= 1e-12, || format!("instance {k}: auc"))?;
        check((m.average_precision.unwrap() - ap).abs() <= 1e-12, || format!("instance {k}: ap"))?;
    }
    within(t.elapsed(), 10.0)?;
    Ok(format!("{count} permutations exact, tie case {tie:.6}, 500 classification instances match"))
}

// 7 -------------------------------------------------------------------------

pub const SYNTHETIC_CONFIG: &str = r#"
[dataset]
sequence_column = "sequence"
label_column = "efficacy"
label_scale = "unit"

[tuning]
metrics = ["spearman", "neg_mse"]
folds = 3

[grid.forest]
n_trees = [30]
max_depth = [6, 10]

[grid.linear]
ridge_lambda = [1.0, 10.0]

[grid.gbm]
n_stages = [100]
max_depth = [2, 3]

[stacking]
folds = 5
"#;

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let exp = ExperimentConfig::parse(SYNTHETIC_CONFIG)
        .and_then(|c| c.resolve())
        .map_err(|e| e.to_string())?;
    let parts = generate_split(&SyntheticSpec { seed: 7, ..Default::default() }, &[2000, 600]);
    let (train, test) = (&parts[0], &parts[1]);
    let trained = train_pipeline(&exp.pipeline, &train.features(), &train.labels(), 7).map_err(|e| e.to_string())?;
    let xs = test.features();
    let ys = test.labels();
    let clip = |v: Vec<f64>| v.into_iter().map(|p| p.clamp(0.0, 1.0)).collect::<Vec<_>>();
    let stacked = clip(trained.ensemble.predict(&xs).unwrap());
    let rho = metrics::spearman(&ys, &stacked).unwrap();
    let mse = metrics::mse(&ys, &stacked).unwrap();
    let mut lines = Vec::new();
    let mut min_base = f64::INFINITY;
    for (label, base) in trained.method_labels().iter().zip(&trained.ensemble.fitted_bases) {
        let p = clip(base.predict(&xs).unwrap());
        let m = metrics::mse(&ys, &p).unwrap();
        min_base = min_base.min(m);
        lines.push(format!("{label}={m:.5}/{:.4}", metrics::spearman(&ys, &p).unwrap()));
    }
    println!("    calibration: stacked spearman {rho:.6} mse {mse:.6}; bases (mse/spearman) {}", lines.join(", "));
    check(rho >= SYNTHETIC_SPEARMAN_FLOOR, || format!("spearman {rho:.4} below floor {SYNTHETIC_SPEARMAN_FLOOR}"))?;
    check(mse <= min_base + 0.005, || format!("stacked MSE {mse:.5} > best base {min_base:.5} + 0.005"))?;
    within(t.elapsed(), 300.0)?;
    Ok(format!(
        "held-out spearman {rho:.4} (floor {SYNTHETIC_SPEARMAN_FLOOR}), MSE {mse:.5} vs best base {min_base:.5}"
    ))
}

// 8 -------------------------------------------------------------------------

const SMALL_CONFIG: &str = r#"
[dataset]
sequence_column = "sequence"
label_column = "efficacy"
label_scale = "unit"

[tuning]
folds = 2

[grid.forest]
n_trees = [5]
max_depth = [3]

[grid.linear]
ridge_lambda = [1.0, 5.0]

[grid.gbm]
n_stages = [10]
max_depth = [2]

[stacking]
folds = 3

[split]
repeats = 3
master_seed = 11
"#;

fn write_fixture(dir: &Path, n: usize, seed: u64) -> Result<(PathBuf, PathBuf), String> {
    let ds = generate(&SyntheticSpec { n, seed, ..Default::default() });
    let data = dir.join("data.tsv");
    let file = std::fs::File::create(&data).map_err(|e| e.to_string())?;
    write_dataset(&ds, file).map_err(|e| e.to_string())?;
    let config = dir.join("config.toml");
    std::fs::write(&config, SMALL_CONFIG).map_err(|e| e.to_string())?;
    Ok((data, config))
}

fn run_benchmark_cli(config: &Path, data: &Path, out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_sgrna-ensemble"))
        .args(["--threads", &threads.to_string(), "benchmark", "--config"])
        .arg(config)
        .arg("--data")
        .arg(data)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())
}

fn random_guides(r: &mut impl Rng, n: usize) -> Vec<encoding::ValidatedSgRna> {
    (0..n)
        .map(|_| {
            let mut s: String = (0..21).map(|_| ALPHABET[r.random_range(0..4)] as char).collect();
            s.push_str("GG");
            encoding::validate(&s).unwrap()
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (data, config) = write_fixture(tmp.path(), 80, 8)?;
    let (o1, o8) = (tmp.path().join("t1"), tmp.path().join("t8"));
    run_benchmark_cli(&config, &data, &o1, 1)?;
    run_benchmark_cli(&config, &data, &o8, 8)?;
    for f in ["per_repeat.tsv", "mean_report.tsv", "manifest.txt"] {
        let a = std::fs::read(o1.join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(o8.join(f)).map_err(|e| e.to_string())?;
        check(a == b, || format!("{f} differs between --threads 1 and 8"))?;
    }

    let args = CommonArgs {
        config: Some(config.clone()),
        data: data.clone(),
        out: Some(tmp.path().join("model")),
        seed: None,
        permissive: false,
    };
    let archive_path = commands::train(&args).map_err(|e| e.to_string())?;
    let exp = ExperimentConfig::load(&config).and_then(|c| c.resolve()).map_err(|e| e.to_string())?;
    let ds = generate(&SyntheticSpec { n: 80, seed: 8, ..Default::default() });
    let in_memory = train_pipeline(&exp.pipeline, &ds.features(), &ds.labels(), exp.split.master_seed)
        .map_err(|e| e.to_string())?
        .ensemble;
    let loaded = ModelArchive::load(&archive_path).map_err(|e| e.to_string())?.model;
    let x = encoding::encode_all(&random_guides(&mut rng(8), 1000));
    let a = in_memory.predict(&x).unwrap();
    let b = loaded.predict(&x).unwrap();
    check(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()), || "archive predictions differ".into())?;
    within(t.elapsed(), 120.0)?;
    Ok("reports byte-identical across --threads 1/8; 1000 archive predictions bit-identical".into())
}

// 9 -------------------------------------------------------------------------

const REFERENCE_OURS_SPEARMAN: f64 = 0.48363014255265202;

fn criterion_9() -> Option<Outcome> {
    let data = std::env::var_os("SGRNA_DEEPCRISPR_DATA")?;
    let config = std::env::var_os("SGRNA_DEEPCRISPR_CONFIG")?;
    let run = || -> Outcome {
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let report = commands::benchmark(&CommonArgs {
            config: Some(config.into()),
            data: data.into(),
            out: Some(out.path().to_path_buf()),
            seed: None,
            permissive: false,
        })
        .map_err(|e| e.to_string())?;
        let rho = report
            .mean_value("regression", "spearman_score", "OURS")
            .ok_or("no OURS spearman_score")?;
        check((rho - REFERENCE_OURS_SPEARMAN).abs() <= 0.05, || {
            format!("OURS spearman_score {rho:.4} not within 0.05 of {REFERENCE_OURS_SPEARMAN}")
        })?;
        Ok(format!("OURS spearman_score {rho:.4}"))
    };
    Some(run())
}

// 10 ------------------------------------------------------------------------

fn criterion_10() -> Outcome {
    let t = Instant::now();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/hek293t_indel_concordance.tsv");
    let r = compare_studies(
        &path,
        "sequence",
        ("indel_freq_hek293t_2019", Scale::Percent),
        ("indel_freq_hek293t_2020", Scale::Percent),
    )
    .map_err(|e| e.to_string())?;
    check(r.n == 23, || format!("n = {}", r.n))?;
    check(r.spearman.is_finite() && r.mse.is_finite(), || "non-finite report".into())?;
    // independent average-rank Pearson over the transcript
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        a.push(f[1].parse::<f64>().unwrap() / 100.0);
        b.push(f[2].parse::<f64>().unwrap() / 100.0);
    }
    let oracle = oracle_pearson(&oracle_ranks(&a), &oracle_ranks(&b));
    check((r.spearman - oracle).abs() <= 1e-12, || format!("spearman {} vs oracle {oracle}", r.spearman))?;
    check((r.spearman - TRANSCRIPT_SPEARMAN_SCIPY).abs() <= 1e-12, || {
        format!("spearman {} vs scipy {TRANSCRIPT_SPEARMAN_SCIPY}", r.spearman)
    })?;
    within(t.elapsed(), 1.0)?;
    Ok(format!("n = {}, spearman {:.6}, mse {:.6}", r.n, r.spearman, r.mse))
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "loss gradients vs finite differences", criterion_1),
        (2, "loss-averaging identities", criterion_2),
        (3, "boosting monotonicity", criterion_3),
        (4, "tree vs exhaustive split oracle", criterion_4),
        (5, "stacking without leakage", criterion_5),
        (6, "metric oracles", criterion_6),
        (7, "synthetic end-to-end benchmark", criterion_7),
        (8, "determinism and persistence", criterion_8),
    ];
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("criterion {id} PASS  {name}: {detail}"),
        Err(why) => {
            failed += 1;
            println!("criterion {id} FAIL  {name}: {why}");
        }
    };
    for (id, name, f) in criteria {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        report(id, name, outcome);
    }
    match criterion_9() {
        Some(outcome) => report(9, "reference reproduction on supplied data", outcome),
        None => println!(
            "criterion 9 SKIP  reference reproduction on supplied data: set SGRNA_DEEPCRISPR_DATA and SGRNA_DEEPCRISPR_CONFIG"
        ),
    }
    report(10, "bundled cross-study transcript", criterion_10());
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
