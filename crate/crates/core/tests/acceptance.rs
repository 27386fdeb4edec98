//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails.

use std::fs;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use enroll_core::cli::{cmd_run, profile, ImputeChoice, InputSource, RunConfig, SelectionMethod};
use enroll_core::cohortsynth::{generate, inject_missing, paper_cohort, paper_cohort_spec, CohortSpec, FeatureLaw, FeatureSpec};
use enroll_core::evalkit::{cross_validate_with, metrics, stratified_folds, ConfusionMatrix, Execution};
use enroll_core::glm::{self, FitConfig};
use enroll_core::select::{best_first_search, subset_merit, SearchConfig};
use enroll_core::tabular::{encode, write_csv_file, Cell, Column, ColumnKind, Dataset, DesignMatrix, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 -------------------------------------------------------------------------

fn metric_identities() -> Outcome {
    let m = metrics(&ConfusionMatrix::new(3637, 679, 1166, 2397)).map_err(|e| e.to_string())?;
    let table = [
        ("TP rate", m.tp_rate(), 0.843),
        ("FP rate", m.fp_rate, 0.327),
        ("precision", m.precision, 0.757),
        ("recall", m.recall(), 0.843),
        ("F-measure", m.f_measure, 0.798),
        ("accuracy", m.accuracy, 0.766),
    ];
    let mut worst: f64 = 0.0;
    for (name, got, want) in table {
        let got = got.ok_or(format!("{name} undefined"))?;
        worst = worst.max((got - want).abs());
        check((got - want).abs() <= 0.0005, || format!("{name} = {got:.5}, expected {want}"))?;
    }
    Ok(format!("6 rates within 0.0005 (max deviation {worst:.5})"))
}

// 2 -------------------------------------------------------------------------

/// Dataset with one binary column whose categories have the given
/// (count, enrolled) totals.
fn grouped(column: &str, yes: (u64, u64), no: (u64, u64)) -> Dataset {
    let schema = Schema::new(vec![
        Column::new(column, ColumnKind::Binary),
        Column::new("enrolled", ColumnKind::Target),
    ])
    .unwrap();
    let mut rows = Vec::new();
    for (value, (n, e)) in [(true, yes), (false, no)] {
        for i in 0..n {
            rows.push(vec![Cell::Binary(value), Cell::Binary(i < e)]);
        }
    }
    Dataset::new(schema, rows).unwrap()
}

fn marginal_ratios() -> Outcome {
    let pct = |ds: &Dataset| -> (String, Vec<String>) {
        let p = profile(ds);
        (p.total.percent(), p.breakdowns[0].rows.iter().map(|r| r.percent()).collect())
    };
    // admitted applicants only: 3,414 of 4,486 enrolled
    let (total, _) = pct(&grouped("Admitted", (4486, 3414), (0, 0)));
    check(total == "76.1%", || format!("admitted enrollment {total}"))?;
    let (_, prov) = pct(&grouped("Within_Province", (6489, 3199), (1390, 215)));
    check(prov == ["49.3%", "15.5%"], || format!("province {prov:?}"))?;
    let (_, sex) = pct(&grouped("Male", (3635, 1870), (4244, 1693)));
    check(sex == ["51.4%", "39.9%"], || format!("gender {sex:?}"))?;
    Ok("76.1%, 49.3%, 15.5%, 51.4%, 39.9% rendered exactly".into())
}

// 3 -------------------------------------------------------------------------

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-300)
}

fn numerical_optimization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let (mut worst_g, mut worst_h): (f64, f64) = (0.0, 0.0);
    let h = 1e-5;
    for _ in 0..50 {
        let n = rng.random_range(5..=200);
        let d = rng.random_range(1..=8);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_bool(0.4) as u8)).collect();
        let dm = DesignMatrix::from_rows(&rows, &y, (0..d).map(|j| format!("x{j}")).collect()).unwrap();
        let w: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ridge = rng.random_range(0.0..2.0);

        let g = glm::gradient(&w, &dm, ridge).unwrap();
        let hess = glm::hessian(&w, &dm, ridge).unwrap();
        let mut fd_g = vec![0.0; d + 1];
        let mut fd_h = vec![0.0; (d + 1) * (d + 1)];
        let mut an_h = vec![0.0; (d + 1) * (d + 1)];
        for j in 0..=d {
            let mut up = w.clone();
            let mut dn = w.clone();
            up[j] += h;
            dn[j] -= h;
            fd_g[j] = (glm::penalized_nll(&up, &dm, ridge).unwrap() - glm::penalized_nll(&dn, &dm, ridge).unwrap())
                / (2.0 * h);
            let gu = glm::gradient(&up, &dm, ridge).unwrap();
            let gd = glm::gradient(&dn, &dm, ridge).unwrap();
            for i in 0..=d {
                fd_h[i * (d + 1) + j] = (gu[i] - gd[i]) / (2.0 * h);
                an_h[i * (d + 1) + j] = hess[(i, j)];
            }
        }
        worst_g = worst_g.max(rel_err(&g, &fd_g));
        worst_h = worst_h.max(rel_err(&an_h, &fd_h));
    }
    check(worst_g < 1e-6, || format!("gradient relative error {worst_g:.2e}"))?;
    check(worst_h < 1e-5, || format!("Hessian relative error {worst_h:.2e}"))?;

    let y: Vec<f64> = (0..400).map(|i| f64::from(i % 4 != 0)).collect();
    let dm = DesignMatrix::from_rows(&vec![vec![]; 400], &y, vec![]).unwrap();
    let m = glm::fit(&dm, &FitConfig::default()).map_err(|e| e.to_string())?;
    let dev = (m.intercept() - 3f64.ln()).abs();
    check(dev < 1e-6, || format!("intercept-only fit off ln 3 by {dev:.2e}"))?;
    Ok(format!("50 instances: grad err {worst_g:.1e}, Hessian err {worst_h:.1e}; ln 3 off by {dev:.1e}"))
}

// 4 -------------------------------------------------------------------------

fn recovery() -> Outcome {
    let beta = [-1.0, 0.8, -0.5];
    let reps = 40;
    let hits: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let spec = CohortSpec {
                n: 10_000,
                seed: 1_000 + rep as u64,
                true_weights: beta.to_vec(),
                features: vec![
                    FeatureSpec::bernoulli("a", 0.5),
                    FeatureSpec { name: "b".into(), law: FeatureLaw::TruncatedPoisson { mean: 1.5, max: 12 }, when: None },
                ],
                id_column: "id".into(),
                target: "y".into(),
            };
            let dm = encode(&generate(&spec).unwrap()).unwrap();
            let cfg = FitConfig::default();
            let m = glm::fit(&dm, &cfg).unwrap();
            let se = glm::standard_errors(&m.weights, &dm, cfg.ridge).unwrap();
            (0..3).all(|j| (m.weights[j] - beta[j]).abs() <= 3.0 * se[j])
        })
        .collect();
    let covered = hits.iter().filter(|&&h| h).count();
    check(covered as f64 >= 0.95 * reps as f64, || format!("only {covered}/{reps} repetitions within 3 SE"))?;
    Ok(format!("{covered}/{reps} repetitions have every coefficient within 3 SE"))
}

// 5 -------------------------------------------------------------------------

fn selection_oracle() -> Outcome {
    let fit = FitConfig::default();
    let cfg = SearchConfig { execution: Execution::Sequential, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    let mut exact = 0;
    for inst in 0..20 {
        let d = rng.random_range(2..=10);
        let n = 60;
        let perfect = (inst % 2 == 0).then(|| rng.random_range(0..d));
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| f64::from(rng.random_bool(0.5) as u8)).collect();
            let label = match perfect {
                Some(p) => row[p],
                None => f64::from(rng.random_bool(if row[0] + row[1] >= 1.0 { 0.65 } else { 0.35 }) as u8),
            };
            rows.push(row);
            y.push(label);
        }
        let dm = DesignMatrix::from_rows(&rows, &y, (0..d).map(|j| format!("f{j}")).collect()).unwrap();
        let optimum = (0u32..1 << d)
            .into_par_iter()
            .map(|mask| {
                let subset: Vec<usize> = (0..d).filter(|j| mask & (1 << j) != 0).collect();
                subset_merit(&subset, &dm, &cfg, &fit).unwrap()
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
        let found = best_first_search(&dm, &cfg, &fit).map_err(|e| e.to_string())?;
        check(found.best.merit <= optimum, || {
            format!("instance {inst}: search merit {} above exhaustive {optimum}", found.best.merit)
        })?;
        if perfect.is_some() {
            check(found.best.merit == optimum, || {
                format!("instance {inst}: search merit {} below optimum {optimum}", found.best.merit)
            })?;
            exact += 1;
        }
    }
    Ok(format!("20 instances bounded by the exhaustive optimum; {exact} planted instances reach it"))
}

// 6 -------------------------------------------------------------------------

fn cv_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut cells = 0;
    for n in 2..=80 {
        for k in 2..=n.min(15) {
            let y: Vec<u8> = (0..n).map(|_| rng.random_bool(0.4) as u8).collect();
            let folds = stratified_folds(&y, k, rng.random()).map_err(|e| e.to_string())?;
            for class in [0u8, 1] {
                let counts: Vec<usize> =
                    (0..k).map(|f| (0..n).filter(|&i| folds[i] == f && y[i] == class).count()).collect();
                let spread = counts.iter().max().unwrap() - counts.iter().min().unwrap();
                check(spread <= 1, || format!("n={n} k={k} class {class}: per-fold counts {counts:?}"))?;
            }
            cells += 1;
        }
    }

    let fit = FitConfig::default();
    for (n, k) in [(37, 5), (100, 10), (250, 7)] {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.sample(StandardNormal), rng.random_range(0.0..3.0)]).collect();
        let y: Vec<f64> = rows.iter().map(|r| f64::from(rng.random_bool(if r[0] > 0.0 { 0.7 } else { 0.3 }) as u8)).collect();
        let dm = DesignMatrix::from_rows(&rows, &y, vec!["a".into(), "b".into()]).unwrap();
        let seq = cross_validate_with(&dm, k, 9, &fit, Execution::Sequential).map_err(|e| e.to_string())?;
        let par = cross_validate_with(&dm, k, 9, &fit, Execution::Parallel).map_err(|e| e.to_string())?;
        check(seq.pooled.total() as usize == n, || format!("pooled total {} != {n}", seq.pooled.total()))?;
        check(seq == par, || format!("parallel and sequential differ for n={n} k={k}"))?;
    }

    // x=1: 1,1,1,0 and x=0: 0,0,0,1 under leave-one-out
    let rows: Vec<Vec<f64>> = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0].iter().map(|&x| vec![x]).collect();
    let y = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let dm = DesignMatrix::from_rows(&rows, &y, vec!["x".into()]).unwrap();
    let loo = cross_validate_with(&dm, 8, 1, &fit, Execution::Parallel).map_err(|e| e.to_string())?;
    check(loo.pooled == ConfusionMatrix::new(3, 1, 1, 3), || format!("leave-one-out gave {:?}", loo.pooled))?;
    Ok(format!("{cells} (n,k) cells balanced; totals, leave-one-out oracle and parallel/sequential agree"))
}

// 7 -------------------------------------------------------------------------

fn paper_run_config(dir: &std::path::Path, ds: &Dataset, imputation: ImputeChoice) -> RunConfig {
    let csv = dir.join("cohort.csv");
    let schema = dir.join("cohort.schema.toml");
    write_csv_file(ds, &csv).unwrap();
    fs::write(&schema, ds.schema().to_toml_string()).unwrap();
    RunConfig {
        inputs: vec![InputSource { path: csv, schema }],
        folds: 10,
        imputation,
        selection: SelectionMethod::Wrapper,
        output_dir: dir.join("out"),
        ..Default::default()
    }
}

fn desk_run() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let cfg = paper_run_config(dir.path(), &paper_cohort(2016), ImputeChoice::ModeFill);
    let start = Instant::now();
    let first = cmd_run(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let snapshot: Vec<Vec<u8>> = first.outputs.iter().map(|p| fs::read(p).unwrap()).collect();
    let second = cmd_run(&cfg).map_err(|e| e.to_string())?;
    let again: Vec<Vec<u8>> = second.outputs.iter().map(|p| fs::read(p).unwrap()).collect();

    check(elapsed < Duration::from_secs(300), || format!("run took {elapsed:?}"))?;
    check(snapshot == again, || "reports differ between identical runs".into())?;
    check(first.cv.pooled.total() == 7_879, || format!("pooled total {}", first.cv.pooled.total()))?;
    let acc = first.cv.pooled_metrics.accuracy.ok_or("pooled accuracy undefined")?;
    check(acc > first.majority_rate, || format!("accuracy {acc:.4} not above majority {:.4}", first.majority_rate))?;
    let f = first.cv.pooled_metrics.f_measure.map_or("undefined".into(), |f| format!("{f:.3}"));
    Ok(format!(
        "{:.1}s, deterministic, accuracy {acc:.4} > majority {:.4}, selected [{}], F {f} (informational)",
        elapsed.as_secs_f64(),
        first.majority_rate,
        first.selected.join(", ")
    ))
}

// 8 -------------------------------------------------------------------------

fn robustness() -> Outcome {
    let base = generate(&paper_cohort_spec(8)).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for (i, rate) in [0.05, 0.2].into_iter().enumerate() {
        let holed = inject_missing(&base, rate, 100 + i as u64).map_err(|e| e.to_string())?;
        for strategy in [ImputeChoice::ModeFill, ImputeChoice::DropRows, ImputeChoice::DropColumns] {
            let dir = TempDir::new().map_err(|e| e.to_string())?;
            let cfg = paper_run_config(dir.path(), &holed, strategy);
            let run = cmd_run(&cfg).map_err(|e| format!("rate {rate} {strategy:?}: {e}"))?;
            let acc = run.cv.pooled_metrics.accuracy;
            check(acc.is_some(), || format!("rate {rate} {strategy:?}: pooled accuracy undefined"))?;
            check(run.cv.pooled_metrics.is_fully_defined(), || {
                format!("rate {rate} {strategy:?}: undefined pooled rate {:?}", run.cv.pooled_metrics)
            })?;
            summary.push(format!("{rate}/{strategy:?}:{}", run.records));
        }
    }
    Ok(format!("6 runs completed with defined pooled metrics ({})", summary.join(" ")))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("metric identities", metric_identities),
        ("marginal ratios", marginal_ratios),
        ("numerical optimization", numerical_optimization),
        ("coefficient recovery", recovery),
        ("selection oracle", selection_oracle),
        ("cross-validation", cv_suite),
        ("end-to-end desk run", desk_run),
        ("missing-data robustness", robustness),
    ];
    // written to the process stdout directly so the lines survive output capture
    let mut out = std::io::stdout();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => writeln!(out, "PASS  {}. {name} ({secs:.1}s): {detail}", i + 1).unwrap(),
            Err(why) => {
                writeln!(out, "FAIL  {}. {name} ({secs:.1}s): {why}", i + 1).unwrap();
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
