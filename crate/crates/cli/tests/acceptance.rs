//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and a
//! summary. A FAIL only fails the test with SARCALAB_ACCEPTANCE_STRICT=1, so
//! that a statistical miss stays visible without breaking the build.
//!
//! The BanglaSarc check runs when SARCALAB_BANGLASARC names a CSV/JSONL file.

use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::routing::{get, post};
use axum::{Json, Router};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarcalab::blackbox::{HttpModel, ModelEndpoint};
use sarcalab::classifiers::{logistic_gradient, logistic_loss, train, Algorithm, Hyperparams, ProbaRow};
use sarcalab::corpus::{
    load_dataset, stratified_kfold, stratified_split, synthetic_marker_corpus, DataFormat, Dataset, Label,
    LabeledComment, SplitSpec,
};
use sarcalab::eval::{auc, confusion, metrics, run_kfold, run_kfold_with_pipelines, Averaging, ConfusionMatrix};
use sarcalab::eval::{evaluate, KfoldSource};
use sarcalab::features::{SparseVector, TfidfConfig, TfidfModel};
use sarcalab::lime::{exhaustive_perturbations, explain, fit_local, LimeConfig};
use sarcalab::pipeline::{FnModel, InputKind, NativePipeline, NativeSpec, TextModel};
use sarcalab::preprocess::{PipelineConfig, TokenSequence};
use serde_json::{json, Value};

type Outcome = Result<String, String>;

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Criterion {
    name: &'static str,
    budget: Duration,
}

fn run(c: Criterion, f: impl FnOnce() -> Option<Outcome>) -> Verdict {
    let t = Instant::now();
    let outcome = f();
    let dt = t.elapsed();
    let (verdict, detail) = match outcome {
        None => (Verdict::Skip, "dataset not supplied".to_string()),
        Some(Ok(d)) if dt <= c.budget => (Verdict::Pass, d),
        Some(Ok(d)) => (Verdict::Fail, format!("{d}; over the {:?} budget", c.budget)),
        Some(Err(d)) => (Verdict::Fail, d),
    };
    let tag = match verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Skip => "SKIP",
    };
    say(format_args!("{tag} {} — {detail} [{:.2}s]", c.name, dt.as_secs_f64()));
    verdict
}

// Straight to the process stdout, past libtest's capture, so the verdicts
// show up in a plain `cargo test` log.
fn say(line: std::fmt::Arguments) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn micro_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..200 {
        let mut c = ConfusionMatrix {
            tp: rng.random_range(0..1000),
            fp: rng.random_range(0..1000),
            fn_: rng.random_range(0..1000),
            tn: rng.random_range(0..1000),
        };
        if c.total() == 0 {
            c.tp = 1;
        }
        let m = metrics(&c, Averaging::Micro).map_err(|e| e.to_string())?;
        check(
            m.accuracy == m.precision && m.precision == m.recall && m.recall == m.f1,
            || format!("matrix {i} {c:?}: {m:?}"),
        )?;
    }
    Ok("200 matrices, bitwise equal".into())
}

fn close(a: f64, b: f64, what: &str) -> Result<(), String> {
    check((a - b).abs() <= 1e-9, || format!("{what}: {a} vs {b}"))
}

fn hand_fixtures() -> Outcome {
    let docs = [
        TokenSequence::from_tokens(["a", "b"]),
        TokenSequence::from_tokens(["a"]),
    ];
    let raw = TfidfModel::fit(
        &docs,
        &TfidfConfig {
            normalize: false,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    close(raw.idf("a").unwrap(), 1.0, "idf(a)")?;
    close(raw.idf("b").unwrap(), (1.5f64).ln() + 1.0, "idf(b)")?;
    let v = raw.transform(&docs[0]);
    let (ia, ib) = (
        raw.vocabulary().index_of("a").unwrap(),
        raw.vocabulary().index_of("b").unwrap(),
    );
    close(v.get(ia), 1.0, "tfidf(a)")?;
    close(v.get(ib), 1.4054651081081644, "tfidf(b)")?;
    let norm = TfidfModel::fit(&docs, &TfidfConfig::default()).map_err(|e| e.to_string())?;
    let v = norm.transform(&docs[0]);
    let n = (1.0f64 + 1.4054651081081644f64.powi(2)).sqrt();
    close(v.get(ia), 1.0 / n, "normalized a")?;
    close(v.get(ib), 1.4054651081081644 / n, "normalized b")?;
    let aa = norm.transform(&TokenSequence::from_tokens(["a", "a"]));
    close(aa.get(ia), 1.0, "doc [a, a]")?;

    let x = vec![
        SparseVector::from_dense(&[2.0, 0.0]).unwrap(),
        SparseVector::from_dense(&[0.0, 1.0]).unwrap(),
    ];
    let y = [Label::NonSarcastic, Label::Sarcastic];
    let nb = train(&x, &y, &Hyperparams::defaults(Algorithm::MultinomialNb, 0)).map_err(|e| e.to_string())?;
    let p = nb
        .predict_proba(&[SparseVector::from_dense(&[1.0, 0.0]).unwrap()])
        .map_err(|e| e.to_string())?[0];
    close(p[0], 0.75 / (0.75 + 1.0 / 3.0), "NB posterior")?;
    check((p[0] - 0.6923).abs() < 5e-5, || {
        format!("NB posterior {} is not 0.6923", p[0])
    })?;

    let l = |v: &[u8]| {
        v.iter()
            .map(|&b| Label::from_index(b as usize).unwrap())
            .collect::<Vec<_>>()
    };
    let c = confusion(&l(&[1, 0, 1, 1]), &l(&[1, 0, 0, 1])).map_err(|e| e.to_string())?;
    check((c.tp, c.fp, c.fn_, c.tn) == (2, 1, 0, 1), || format!("{c:?}"))?;
    let m = metrics(&c, Averaging::Micro).map_err(|e| e.to_string())?;
    for (v, what) in [
        (m.accuracy, "accuracy"),
        (m.precision, "precision"),
        (m.recall, "recall"),
        (m.f1, "f1"),
    ] {
        close(v, 0.75, what)?;
    }
    Ok(format!(
        "idf(b) {:.4}, NB {:.4}, confusion 0.75",
        raw.idf("b").unwrap(),
        p[0]
    ))
}

fn native_spec(a: Algorithm, seed: u64) -> NativeSpec {
    NativeSpec {
        preprocess: PipelineConfig::default(),
        tfidf: TfidfConfig::default(),
        hyperparams: Hyperparams::defaults(a, seed),
    }
}

fn split_accuracies(d: &Dataset, seed: u64) -> Result<Vec<(Algorithm, f64)>, String> {
    let (tr, _val, te) =
        stratified_split(d, &SplitSpec::new(0.6, 0.2, 0.2, seed).unwrap()).map_err(|e| e.to_string())?;
    Algorithm::ALL
        .iter()
        .map(|&a| {
            let p = NativePipeline::fit(a.name(), &tr.texts(), &tr.labels(), &native_spec(a, seed))
                .map_err(|e| e.to_string())?;
            let e = evaluate(&p, &te).map_err(|e| e.to_string())?;
            Ok((a, e.micro.accuracy))
        })
        .collect()
}

fn separability() -> Outcome {
    let d = synthetic_marker_corpus(400, 0);
    let acc = split_accuracies(&d, 0)?;
    let line = acc
        .iter()
        .map(|(a, x)| format!("{a} {x:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    let low: Vec<_> = acc.iter().filter(|(_, x)| *x < 0.95).collect();
    check(low.is_empty(), || format!("below 0.95: {low:?}"))?;
    let of = |a| acc.iter().find(|(b, _)| *b == a).unwrap().1;
    check(of(Algorithm::RandomForest) >= of(Algorithm::DecisionTree), || {
        format!("RF < DT: {line}")
    })?;
    Ok(line)
}

fn roc_pr() -> Outcome {
    let truth = [
        Label::Sarcastic,
        Label::Sarcastic,
        Label::NonSarcastic,
        Label::NonSarcastic,
    ];
    let perfect = auc(&[0.9, 0.8, 0.3, 0.1], &truth).map_err(|e| e.to_string())?;
    check(perfect == 1.0, || format!("perfect separation AUC {perfect}"))?;

    let mut outside = Vec::new();
    let (mut lo, mut hi) = (1.0f64, 0.0f64);
    let mut transforms_ok = true;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<Label> = (0..1000)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Label::Sarcastic
                } else {
                    Label::NonSarcastic
                }
            })
            .collect();
        let a = auc(&scores, &labels).map_err(|e| e.to_string())?;
        lo = lo.min(a);
        hi = hi.max(a);
        if !(0.45..=0.55).contains(&a) {
            outside.push((seed, a));
        }
        if seed < 10 {
            let s: f64 = rng.random_range(0.5..4.0);
            let b: f64 = rng.random_range(-2.0..2.0);
            let t: Vec<f64> = scores.iter().map(|x| (s * x + b).exp()).collect();
            let at = auc(&t, &labels).map_err(|e| e.to_string())?;
            transforms_ok &= (at - a).abs() <= 1e-12;
        }
    }
    check(transforms_ok, || "AUC changed under a monotone transform".into())?;
    check(outside.is_empty(), || {
        format!("random-score AUC outside [0.45, 0.55] for (seed, auc) {outside:?}; range {lo:.4}..{hi:.4}")
    })?;
    Ok(format!(
        "perfect 1.0; random range {lo:.4}..{hi:.4}; 10 transforms exact"
    ))
}

/// A black-box service that always answers `row`.
fn constant_service(row: ProbaRow) -> (tokio::runtime::Runtime, String, Arc<AtomicUsize>) {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let app = Router::new()
        .route(
            "/health",
            get(|| async { Json(json!({"model_id": "constant", "n_classes": 2})) }),
        )
        .route(
            "/predict",
            post(move |Json(v): Json<Value>| {
                let c = c.clone();
                async move {
                    c.fetch_add(1, Ordering::SeqCst);
                    let n = v["texts"].as_array().map_or(0, Vec::len);
                    Json(json!({ "probs": vec![row; n] }))
                }
            }),
        );
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    rt.spawn(async move { axum::serve(listener, app).await.unwrap() });
    (rt, url, calls)
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let p1 = rng.random_range(0.2..0.8);
    let records = (0..n)
        .map(|i| {
            let l = if rng.random_bool(p1) {
                Label::Sarcastic
            } else {
                Label::NonSarcastic
            };
            LabeledComment::new(&format!("doc{i}"), l).unwrap()
        })
        .collect();
    Dataset::new("random", records)
}

fn kfold_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for i in 0..100 {
        let n = rng.random_range(20..300);
        let k = rng.random_range(2..=10);
        let d = random_dataset(&mut rng, n);
        let c = d.summary();
        if c.minority() < k {
            continue;
        }
        let f = stratified_kfold(&d, k, i).map_err(|e| e.to_string())?;
        let counts = f.class_counts(&d);
        for class in 0..2 {
            let (mn, mx) = counts
                .iter()
                .fold((usize::MAX, 0), |(a, b), c| (a.min(c[class]), b.max(c[class])));
            check(mx - mn <= 1, || {
                format!("dataset {i}: class {class} fold counts {counts:?}")
            })?;
        }
    }

    // Leakage: no fold's vocabulary knows a token seen only in its held-out part.
    let mut d = synthetic_marker_corpus(120, 4);
    for (i, r) in d.records.iter_mut().enumerate() {
        r.text.push_str(&format!(" uniq{i}"));
    }
    let (_, pipelines) =
        run_kfold_with_pipelines(&d, KfoldSource::Native(&native_spec(Algorithm::MultinomialNb, 0)), 4, 9)
            .map_err(|e| e.to_string())?;
    let a = stratified_kfold(&d, 4, 9).map_err(|e| e.to_string())?;
    for (fold, p) in pipelines.iter().enumerate() {
        let (train_ix, test_ix) = a.train_test(fold);
        let seen: std::collections::HashSet<String> = train_ix
            .iter()
            .flat_map(|&i| p.tokens(&d.records[i].text).tokens().to_vec())
            .collect();
        for &i in &test_ix {
            for t in p.tokens(&d.records[i].text).iter() {
                check(
                    seen.contains(t) || p.vectorizer().vocabulary().index_of(t).is_none(),
                    || format!("fold {fold}: held-out-only token {t:?} is in the vocabulary"),
                )?;
            }
        }
        check(p.vectorizer().vocabulary().len() >= 12, || {
            "fold vocabulary unexpectedly small".into()
        })?;
    }

    // Constant remote model: every fold scores the majority rate ± 1 record.
    let (_rt, url, calls) = constant_service([0.8, 0.2]);
    let m = HttpModel::new(ModelEndpoint::new(url, "constant")).map_err(|e| e.to_string())?;
    m.healthcheck().map_err(|e| e.to_string())?;
    let d = synthetic_marker_corpus(200, 6);
    let c = d.summary();
    let rate = c.per_class[0] as f64 / c.total as f64;
    let r = run_kfold(&d, KfoldSource::External(&m), 4, 3).map_err(|e| e.to_string())?;
    for f in &r.folds {
        let correct = f.confusion.correct() as f64;
        check((correct - rate * f.n_test as f64).abs() <= 1.0, || {
            format!(
                "fold {}: {correct} correct of {}, majority rate {rate:.3}",
                f.fold, f.n_test
            )
        })?;
    }
    check(calls.load(Ordering::SeqCst) >= 4, || {
        "mock endpoint was not queried".into()
    })?;
    Ok(format!(
        "100 datasets balanced; 4 folds leak-free; constant model {:.3} vs majority {rate:.3}",
        r.micro_mean.accuracy
    ))
}

/// Weighted ridge with an unpenalized intercept, straight from the normal
/// equations `(Z'WZ + P) theta = Z'Wy`, `Z = [1 | masks]`.
fn normal_equations(masks: &[Vec<bool>], w: &[f64], y: &[f64], lambda: f64) -> Vec<f64> {
    let p = masks[0].len() + 1;
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for ((m, &wi), &yi) in masks.iter().zip(w).zip(y) {
        let z: Vec<f64> = std::iter::once(1.0)
            .chain(m.iter().map(|&b| if b { 1.0 } else { 0.0 }))
            .collect();
        for r in 0..p {
            rhs[r] += wi * z[r] * yi;
            for c in 0..p {
                a[(r, c)] += wi * z[r] * z[c];
            }
        }
    }
    for j in 1..p {
        a[(j, j)] += lambda;
    }
    a.lu().solve(&rhs).expect("nonsingular").iter().copied().collect()
}

fn lime_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vocab: Vec<String> = (0..30).map(|i| format!("t{i}")).collect();
    let mut worst = 0.0f64;
    for case in 0..50 {
        let len = rng.random_range(1..=12);
        let toks: Vec<String> = (0..len)
            .map(|_| vocab[rng.random_range(0..vocab.len())].clone())
            .collect();
        let coef: Vec<f64> = (0..vocab.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let model = FnModel::new("random", InputKind::Raw, move |t: &str| {
            let z: f64 = t
                .split_whitespace()
                .map(|w| coef[w[1..].parse::<usize>().unwrap()])
                .sum();
            let p = 1.0 / (1.0 + (-z).exp());
            [1.0 - p, p]
        });
        let s = exhaustive_perturbations(&toks, 0.25).map_err(|e| e.to_string())?;
        let d = s[0].mask.len();
        check(d <= 10 || len > 10, || "more than 10 distinct tokens".into())?;
        let masks: Vec<Vec<bool>> = s.iter().map(|p| p.mask.clone()).collect();
        let w: Vec<f64> = s.iter().map(|p| p.proximity_weight).collect();
        let texts: Vec<String> = s.iter().map(|p| p.rendered_text.clone()).collect();
        let y: Vec<f64> = model
            .predict_proba_texts(&texts)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|r| r[1])
            .collect();
        let lambda = [0.0, 0.1, 1.0, 5.0][case % 4];
        let cfg = LimeConfig {
            ridge_lambda: lambda,
            top_k: d,
            ..Default::default()
        };
        let fit = fit_local(&masks, &w, &y, &cfg).map_err(|e| e.to_string())?;
        let theta = normal_equations(&masks, &w, &y, lambda);
        worst = worst.max((fit.intercept - theta[0]).abs());
        for (a, b) in fit.weights.iter().zip(&theta[1..]) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst < 1e-6, || format!("max coefficient deviation {worst:e}"))?;

    let marker = FnModel::new("marker", InputKind::Raw, |t: &str| {
        if t.split_whitespace().any(|w| w == "wahre") {
            [0.1, 0.9]
        } else {
            [0.9, 0.1]
        }
    });
    let text = "ki shundor wahre khela dekhlam bhai";
    let mut coherent = 0;
    for seed in 0..20 {
        let e = explain(
            text,
            &marker,
            &PipelineConfig::default(),
            &LimeConfig {
                seed,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let j = e.tokens.iter().position(|t| t == "wahre").unwrap();
        let top = (0..e.weights.len())
            .max_by(|&a, &b| e.weights[a].total_cmp(&e.weights[b]))
            .unwrap();
        if e.weights[j] > 0.0 && top == j {
            coherent += 1;
        }
    }
    check(coherent == 20, || format!("marker coherent on {coherent}/20 seeds"))?;

    let constant = FnModel::new("constant", InputKind::Raw, |_: &str| [0.3, 0.7]);
    let e = explain(text, &constant, &PipelineConfig::default(), &LimeConfig::default()).map_err(|e| e.to_string())?;
    let wmax = e.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    check(wmax < 1e-6, || format!("constant model weight {wmax:e}"))?;
    Ok(format!(
        "50 instances, max deviation {worst:.1e}; marker 20/20; constant |w| {wmax:.0e}"
    ))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(3..12);
        let dim = rng.random_range(1..6);
        let x: Vec<SparseVector> = (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..dim)
                    .map(|_| {
                        if rng.random_bool(0.6) {
                            rng.random_range(-2.0..2.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                SparseVector::from_dense(&v).unwrap()
            })
            .collect();
        let y: Vec<Label> = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Label::Sarcastic
                } else {
                    Label::NonSarcastic
                }
            })
            .collect();
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        let b = rng.random_range(-1.0..1.0);
        let lambda = rng.random_range(0.0..0.5);
        let (gw, gb) = logistic_gradient(&w, b, &x, &y, lambda);
        let h = 1e-5;
        let mut analytic = gw.clone();
        analytic.push(gb);
        let mut numeric = Vec::new();
        for i in 0..=dim {
            let shift = |s: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if i < dim {
                    w2[i] += s;
                } else {
                    b2 += s;
                }
                logistic_loss(&w2, b2, &x, &y, lambda)
            };
            numeric.push((shift(h) - shift(-h)) / (2.0 * h));
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(diff / scale);
    }
    check(worst < 1e-4, || format!("relative error {worst:e}"))?;
    Ok(format!("20 instances, max relative error {worst:.1e}"))
}

fn sarcalab(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sarcalab"))
        .args(args)
        .current_dir(dir)
        .env_remove("SARCALAB_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let mut n = 0;
    for entry in std::fs::read_dir(a).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let (x, y) = (std::fs::read(a.join(&name)), std::fs::read(b.join(&name)));
        check(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), || {
            format!("{} differs", a.join(&name).display())
        })?;
        n += 1;
    }
    Ok(n)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    sarcalab::corpus::write_csv(&synthetic_marker_corpus(300, 12), d.join("d.csv")).map_err(|e| e.to_string())?;
    let mut files = 0;
    for algo in Algorithm::ALL {
        let m = format!("m_{algo}");
        sarcalab(
            d,
            &[
                "train",
                "--data",
                "d.csv",
                "--algo",
                algo.name(),
                "--seed",
                "21",
                "--out",
                &format!("a/{m}"),
            ],
        )?;
        sarcalab(
            d,
            &[
                "train",
                "--config",
                &format!("a/{m}/run.json"),
                "--out",
                &format!("b/{m}"),
            ],
        )?;
        files += same_tree(&d.join("a").join(&m), &d.join("b").join(&m))?;
    }
    let m = "a/m_random_forest";
    sarcalab(
        d,
        &["eval", "--model", m, "--data", "d.csv", "--part", "val", "--out", "ev1"],
    )?;
    sarcalab(d, &["eval", "--config", "ev1/report.json", "--out", "ev2"])?;
    files += same_tree(&d.join("ev1"), &d.join("ev2"))?;
    sarcalab(
        d,
        &[
            "kfold", "--data", "d.csv", "--algo", "knn", "--k", "4", "--seed", "2", "--out", "kf1",
        ],
    )?;
    sarcalab(d, &["kfold", "--config", "kf1/report.json", "--out", "kf2"])?;
    files += same_tree(&d.join("kf1"), &d.join("kf2"))?;
    let text = "tumi wahre khub bhalo post";
    sarcalab(
        d,
        &[
            "explain",
            "--model",
            m,
            "--text",
            text,
            "--seed",
            "4",
            "--out",
            "x1/e.json",
            "--html",
            "x1/e.html",
        ],
    )?;
    sarcalab(
        d,
        &[
            "explain",
            "--config",
            "x1/e.json",
            "--out",
            "x2/e.json",
            "--html",
            "x2/e.html",
        ],
    )?;
    files += same_tree(&d.join("x1"), &d.join("x2"))?;
    Ok(format!(
        "{files} artifacts re-created byte-identically from echoed configs"
    ))
}

fn banglasarc() -> Option<Outcome> {
    let path = std::env::var_os("SARCALAB_BANGLASARC")?;
    let path = Path::new(&path);
    if !path.exists() {
        return None;
    }
    Some((|| {
        let d = load_dataset(path, DataFormat::from_path(path)).map_err(|e| e.to_string())?;
        let mut acc = split_accuracies(&d, 0)?;
        acc.sort_by(|a, b| b.1.total_cmp(&a.1));
        let line = acc
            .iter()
            .map(|(a, x)| format!("{a} {:.2}", 100.0 * x))
            .collect::<Vec<_>>()
            .join(", ");
        let top: Vec<Algorithm> = acc.iter().take(3).map(|(a, _)| *a).collect();
        check(
            top == [Algorithm::RandomForest, Algorithm::DecisionTree, Algorithm::Knn],
            || format!("top three differ from RF > DT > KNN: {line}"),
        )?;
        let rf = 100.0 * acc[0].1;
        check((rf - 89.93).abs() <= 5.0, || {
            format!("RF accuracy {rf:.2} not within 5 of 89.93: {line}")
        })?;
        Ok(line)
    })())
}

#[test]
fn acceptance() {
    say(format_args!(""));
    let s = Duration::from_secs;
    let verdicts = [
        run(
            Criterion {
                name: "micro identity",
                budget: s(1),
            },
            || Some(micro_identity()),
        ),
        run(
            Criterion {
                name: "hand-oracle fixtures",
                budget: s(1),
            },
            || Some(hand_fixtures()),
        ),
        run(
            Criterion {
                name: "separability",
                budget: s(30),
            },
            || Some(separability()),
        ),
        run(
            Criterion {
                name: "ROC/PR",
                budget: s(10),
            },
            || Some(roc_pr()),
        ),
        run(
            Criterion {
                name: "k-fold",
                budget: s(10),
            },
            || Some(kfold_suite()),
        ),
        run(
            Criterion {
                name: "LIME oracle",
                budget: s(60),
            },
            || Some(lime_suite()),
        ),
        run(
            Criterion {
                name: "logistic gradient check",
                budget: s(5),
            },
            || Some(gradient_check()),
        ),
        run(
            Criterion {
                name: "determinism",
                budget: s(60),
            },
            || Some(determinism()),
        ),
        run(
            Criterion {
                name: "BanglaSarc ranking (conditional)",
                budget: s(600),
            },
            banglasarc,
        ),
    ];
    let count = |f: fn(&Verdict) -> bool| verdicts.iter().filter(|v| f(v)).count();
    let (pass, fail, skip) = (
        count(|v| matches!(v, Verdict::Pass)),
        count(|v| matches!(v, Verdict::Fail)),
        count(|v| matches!(v, Verdict::Skip)),
    );
    say(format_args!("acceptance: {pass} passed, {fail} failed, {skip} skipped"));
    if std::env::var_os("SARCALAB_ACCEPTANCE_STRICT").is_some() {
        assert_eq!(fail, 0, "acceptance criteria failed");
    }
}
