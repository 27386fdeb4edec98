use std::fmt::Write as _;
use std::path::PathBuf;

use crate::evalkit::{self, confusion_grid, metrics_kv, metrics_table, ConfusionMatrix, CvResult, Metrics};
use crate::glm::{self, Model};
use crate::select::{self, RankedAttribute, SearchOutcome};
use crate::tabular::{
    self, apply_encoding, deduplicate, encode_with, impute, merge_sources, read_csv_file,
    DesignMatrix, EncodeOptions, Imputation, Schema,
};

use super::{write_file, CliError, ImputeChoice, RunConfig, RunLog, SelectionMethod, Stage};

/// What a completed run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: usize,
    pub selected: Vec<String>,
    pub search: Option<SearchOutcome>,
    pub cv: CvResult,
    pub model: Model,
    pub training: (ConfusionMatrix, Metrics),
    pub test: Option<(ConfusionMatrix, Metrics)>,
    /// Share of the larger class in the modelling data.
    pub majority_rate: f64,
    pub outputs: Vec<PathBuf>,
    pub log: RunLog,
}

/// Executes clean → encode → select → cross-validate → final fit and writes
/// the model and reports into `cfg.output_dir`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let mut log = RunLog::default();
    log.note(Stage::Config, cfg.to_toml_string());

    // 1. collection
    let mut sources = Vec::new();
    for input in &cfg.inputs {
        let schema = Schema::load(&input.schema).map_err(|e| CliError::tabular(Stage::Load, e))?;
        let ds = read_csv_file(&input.path, &schema).map_err(|e| CliError::tabular(Stage::Load, e))?;
        log.note(
            Stage::Load,
            format!("{}: {} rows, {} columns", input.path.display(), ds.len(), schema.arity()),
        );
        sources.push(ds);
    }
    let mut sources = sources.into_iter();
    let mut ds = sources.next().expect("validated non-empty inputs");
    let key = cfg
        .merge_key
        .clone()
        .or_else(|| ds.schema().first_identifier().map(str::to_string));
    for right in sources {
        let key = key.as_deref().ok_or_else(|| {
            CliError::config("multiple inputs need merge_key or an identifier column")
        })?;
        ds = merge_sources(&ds, &right, key, cfg.merge_mode)
            .map_err(|e| CliError::tabular(Stage::Merge, e))?;
        log.note(
            Stage::Merge,
            format!("joined on `{key}` ({:?}): {} rows, {} columns", cfg.merge_mode, ds.len(), ds.schema().arity()),
        );
    }

    // 2. cleaning
    if let Some(key) = key.as_deref().filter(|k| ds.schema().index_of(k).is_some()) {
        let out = deduplicate(&ds, key).map_err(|e| CliError::tabular(Stage::Dedup, e))?;
        log.note(Stage::Dedup, format!("key `{key}`: removed {} duplicate rows", out.removed));
        for k in &out.conflicting_keys {
            log.note(Stage::Dedup, format!("conflict: key `{k}` had differing duplicates; kept first"));
        }
        ds = out.dataset;
    }
    let out = impute(&ds, cfg.imputation()).map_err(|e| CliError::tabular(Stage::Impute, e))?;
    log.note(Stage::Impute, format!("strategy {:?}", cfg.imputation()));
    log.note(Stage::Impute, format!("dropped {} rows with missing target", out.dropped_missing_target));
    for (col, value, n) in &out.filled {
        log.note(Stage::Impute, format!("filled {n} cells of `{col}` with {value}"));
    }
    if out.dropped_rows > 0 {
        log.note(Stage::Impute, format!("dropped {} incomplete rows", out.dropped_rows));
    }
    for col in &out.dropped_columns {
        log.note(Stage::Impute, format!("dropped column `{col}`"));
    }
    ds = out.dataset;
    if cfg.imputation == ImputeChoice::DropColumns && ds.missing_count() > 0 {
        let rest = impute(&ds, Imputation::DropRows).map_err(|e| CliError::tabular(Stage::Impute, e))?;
        log.note(Stage::Impute, format!("dropped {} rows with residual missing cells", rest.dropped_rows));
        ds = rest.dataset;
    }
    if ds.is_empty() {
        return Err(CliError::tabular(Stage::Impute, tabular::TabularError::EmptyDataset));
    }

    // 3. train/test split
    let (train, test) = if cfg.test_fraction > 0.0 {
        let (train, test) = tabular::split(&ds, cfg.test_fraction, cfg.seed)
            .map_err(|e| CliError::tabular(Stage::Split, e))?;
        log.note(Stage::Split, format!("train {} rows, test {} rows", train.len(), test.len()));
        (train, Some(test))
    } else {
        (ds, None)
    };

    let opts = EncodeOptions { standardize_counts: cfg.standardize_counts };
    let (dm, plan) = encode_with(&train, opts).map_err(|e| CliError::tabular(Stage::Encode, e))?;
    log.note(
        Stage::Encode,
        format!("{} rows x {} features: {}", dm.n(), dm.num_features(), dm.feature_names().join(", ")),
    );

    // 4. feature selection, once on the full modelling data
    let fit_cfg = cfg.fit_config();
    let ranking = if dm.num_features() > 0 && dm.n() >= 2 {
        select::rank_attributes(&dm).map_err(|e| CliError::select(Stage::Select, e))?
    } else {
        Vec::new()
    };
    let mut search = None;
    let selected: Vec<usize> = match cfg.selection {
        SelectionMethod::None => (0..dm.num_features()).collect(),
        SelectionMethod::Rank => {
            let keep = cfg.rank_keep.unwrap_or(ranking.len()).min(ranking.len());
            let mut idx: Vec<usize> = ranking[..keep].iter().map(|r| r.index).collect();
            idx.sort_unstable();
            idx
        }
        SelectionMethod::Wrapper if dm.num_features() == 0 => Vec::new(),
        SelectionMethod::Wrapper => {
            let out = select::best_first_search(&dm, &cfg.search_config(), &fit_cfg)
                .map_err(|e| CliError::select(Stage::Select, e))?;
            let features = out.best.features.clone();
            search = Some(out);
            features
        }
    };
    if cfg.selection != SelectionMethod::None {
        log.note(
            Stage::Select,
            "warning: selection used all modelling rows before cross-validation; CV estimates include selection bias",
        );
    }
    let dm_sel = dm.select_features(&selected);
    let selected_names = dm_sel.feature_names().to_vec();
    log.note(Stage::Select, format!("{:?}: selected [{}]", cfg.selection, selected_names.join(", ")));
    if let Some(s) = &search {
        log.note(
            Stage::Select,
            format!("merit {:.6}, {} subsets evaluated, {} expansions", s.best.merit, s.evaluations, s.expansions),
        );
    }

    // 5. cross-validation, final fit, evaluation
    let cv = evalkit::cross_validate_with(&dm_sel, cfg.folds, cfg.seed, &fit_cfg, cfg.execution())
        .map_err(|e| CliError::eval(Stage::CrossValidate, e))?;
    log.note(
        Stage::CrossValidate,
        format!("{} folds, pooled accuracy {}", cfg.folds, fmt_rate(cv.pooled_metrics.accuracy)),
    );
    let model = glm::fit(&dm_sel, &fit_cfg).map_err(|e| CliError::glm(Stage::Fit, e))?;
    log.note(
        Stage::Fit,
        format!(
            "converged={} after {} iterations, loss {:?}",
            model.converged, model.iterations_used, model.final_loss
        ),
    );
    let training = evalkit::evaluate_on(&model, &dm_sel).map_err(|e| CliError::eval(Stage::Evaluate, e))?;
    let test_eval = match &test {
        Some(test) if !test.is_empty() => {
            let sel_plan: Vec<_> = selected.iter().map(|&f| plan[f].clone()).collect();
            let test_dm = apply_encoding(test, &sel_plan, true).map_err(|e| CliError::tabular(Stage::Encode, e))?;
            let r = evalkit::evaluate_on(&model, &test_dm).map_err(|e| CliError::eval(Stage::Evaluate, e))?;
            log.note(Stage::Evaluate, format!("test accuracy {}", fmt_rate(r.1.accuracy)));
            Some(r)
        }
        _ => None,
    };

    let positives = dm_sel.positives();
    let majority_rate = positives.max(dm_sel.n() - positives) as f64 / dm_sel.n() as f64;

    // reports
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(Stage::Report, format!("{}: {e}", dir.display())))?;
    let reports = [
        ("model.txt", model.to_text()),
        ("ranking.csv", ranking_csv(&ranking)),
        ("selection.txt", selection_text(cfg.selection, &ranking, &selected_names, search.as_ref())),
        ("cv_report.txt", cv_text(&cv, &training, test_eval.as_ref(), majority_rate)),
        ("cv_metrics.txt", cv_kv(&cv, &training, test_eval.as_ref(), majority_rate)),
        ("folds.csv", folds_csv(&cv)),
        ("final_fit_predictions.csv", predictions_csv(&model, &dm_sel)?),
    ];
    let mut outputs = Vec::new();
    for (name, contents) in reports {
        let path = dir.join(name);
        write_file(Stage::Report, &path, &contents)?;
        outputs.push(path);
    }
    log.note(Stage::Report, format!("wrote {} files to {}", outputs.len() + 1, dir.display()));
    let log_path = dir.join("run.log");
    write_file(Stage::Report, &log_path, &log.render())?;
    outputs.push(log_path);

    Ok(RunSummary {
        records: dm_sel.n(),
        selected: selected_names,
        search,
        cv,
        model,
        training,
        test: test_eval,
        majority_rate,
        outputs,
        log,
    })
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.4}"))
}

fn ranking_csv(ranking: &[RankedAttribute]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "feature", "correlation", "score", "constant"]).unwrap();
    for (i, r) in ranking.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.name.clone(),
            format!("{:?}", r.correlation),
            format!("{:?}", r.score()),
            r.constant_attribute.to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn selection_text(
    method: SelectionMethod,
    ranking: &[RankedAttribute],
    selected: &[String],
    search: Option<&SearchOutcome>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Attribute ranking (|Pearson r| with class)");
    for (i, r) in ranking.iter().enumerate() {
        let flag = if r.constant_attribute { "  [constant]" } else { "" };
        let _ = writeln!(s, "{:>4}  {:>8.5}  {}{flag}", i + 1, r.score(), r.name);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Selection method: {method:?}");
    if let Some(out) = search {
        let _ = writeln!(s, "Start merit: {:.6} ({} features)", out.start.merit, out.start.features.len());
        let _ = writeln!(s, "Best merit: {:.6}", out.best.merit);
        let _ = writeln!(s, "Subsets evaluated: {}", out.evaluations);
        let _ = writeln!(s, "Expansions: {}", out.expansions);
    }
    let _ = writeln!(s, "Selected {} features:", selected.len());
    for name in selected {
        let _ = writeln!(s, "  {name}");
    }
    s
}

fn cv_text(
    cv: &CvResult,
    training: &(ConfusionMatrix, Metrics),
    test: Option<&(ConfusionMatrix, Metrics)>,
    majority_rate: f64,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Stratified {}-fold cross-validation (seed {})", cv.k, cv.seed);
    let _ = writeln!(s, "Instances: {}  Majority-class rate: {majority_rate:.4}", cv.pooled.total());
    let _ = writeln!(s);
    let _ = writeln!(s, "Detailed accuracy (pooled over folds)");
    s.push_str(&metrics_table(&cv.pooled_metrics));
    let _ = writeln!(s);
    let _ = writeln!(s, "Confusion matrix (pooled over folds)");
    s.push_str(&confusion_grid(&cv.pooled));
    let _ = writeln!(s);
    let _ = writeln!(s, "Per-fold accuracy");
    for (i, f) in cv.folds.iter().enumerate() {
        let _ = writeln!(s, "  fold {i:>2}: {}  (n = {})", fmt_rate(f.metrics.accuracy), f.confusion.total());
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Final model on all modelling rows (training-set evaluation)");
    s.push_str(&metrics_table(&training.1));
    s.push_str(&confusion_grid(&training.0));
    if let Some((cm, m)) = test {
        let _ = writeln!(s);
        let _ = writeln!(s, "Held-out test set");
        s.push_str(&metrics_table(m));
        s.push_str(&confusion_grid(cm));
    }
    s
}

fn cv_kv(
    cv: &CvResult,
    training: &(ConfusionMatrix, Metrics),
    test: Option<&(ConfusionMatrix, Metrics)>,
    majority_rate: f64,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "folds = {}", cv.k);
    let _ = writeln!(s, "seed = {}", cv.seed);
    let _ = writeln!(s, "majority_rate = {majority_rate:?}");
    s.push_str(&metrics_kv("cv.", &cv.pooled, &cv.pooled_metrics));
    s.push_str(&metrics_kv("train.", &training.0, &training.1));
    if let Some((cm, m)) = test {
        s.push_str(&metrics_kv("test.", cm, m));
    }
    s
}

fn folds_csv(cv: &CvResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fold", "tp", "fn", "fp", "tn", "accuracy", "sensitivity", "specificity", "converged"])
        .unwrap();
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:?}"));
    for (i, f) in cv.folds.iter().enumerate() {
        let c = f.confusion;
        w.write_record([
            i.to_string(),
            c.tp.to_string(),
            c.fn_.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            opt(f.metrics.accuracy),
            opt(f.metrics.sensitivity),
            opt(f.metrics.specificity),
            f.converged.to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn predictions_csv(model: &Model, dm: &DesignMatrix) -> Result<String, CliError> {
    let p = glm::predict_proba(model, dm).map_err(|e| CliError::glm(Stage::Report, e))?;
    let labels = glm::predict_label(model, dm).map_err(|e| CliError::glm(Stage::Report, e))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "actual", "probability", "predicted"]).unwrap();
    for (i, ((pi, li), yi)) in p.iter().zip(&labels).zip(dm.y()).enumerate() {
        w.write_record([i.to_string(), (*yi as u8).to_string(), format!("{pi:?}"), li.to_string()])
            .unwrap();
    }
    Ok(String::from_utf8(w.into_inner().unwrap()).unwrap())
}
