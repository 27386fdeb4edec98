use std::fmt::Write as _;

use super::{ConfusionMatrix, Metrics};

fn rate(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.3}"),
        None => "undef".to_string(),
    }
}

/// Percentage with one decimal, or an em dash when the denominator is zero.
pub fn percent(part: u64, whole: u64) -> String {
    if whole == 0 {
        "—".to_string()
    } else {
        format!("{:.1}%", 100.0 * part as f64 / whole as f64)
    }
}

/// Detailed-accuracy table: TP rate, FP rate, precision, recall, F-measure,
/// plus specificity and accuracy.
pub fn metrics_table(m: &Metrics) -> String {
    let header = ["TP Rate", "FP Rate", "Precision", "Recall", "F-Measure", "Specificity", "Accuracy"];
    let values = [
        m.tp_rate(),
        m.fp_rate,
        m.precision,
        m.recall(),
        m.f_measure,
        m.specificity,
        m.accuracy,
    ];
    let mut s = String::new();
    for h in header {
        let _ = write!(s, "{h:>12}");
    }
    s.push('\n');
    for v in values {
        let _ = write!(s, "{:>12}", rate(v));
    }
    s.push('\n');
    s
}

/// 2×2 grid, rows = actual class, columns = predicted class.
pub fn confusion_grid(cm: &ConfusionMatrix) -> String {
    let w = [cm.tp, cm.fn_, cm.fp, cm.tn]
        .iter()
        .map(|v| v.to_string().len())
        .max()
        .unwrap_or(1)
        .max(12)
        + 2;
    let mut s = String::new();
    let _ = writeln!(s, "{:<14}{:>w$}{:>w$}", "actual \\ pred", "Positive (1)", "Negative (0)");
    let _ = writeln!(s, "{:<14}{:>w$}{:>w$}", "Positive (1)", cm.tp, cm.fn_);
    let _ = writeln!(s, "{:<14}{:>w$}{:>w$}", "Negative (0)", cm.fp, cm.tn);
    s
}

/// Flat `key = value` lines. Undefined rates are written as `undefined`.
pub fn metrics_kv(prefix: &str, cm: &ConfusionMatrix, m: &Metrics) -> String {
    let mut s = String::new();
    for (k, v) in [("tp", cm.tp), ("fn", cm.fn_), ("fp", cm.fp), ("tn", cm.tn), ("total", cm.total())] {
        let _ = writeln!(s, "{prefix}{k} = {v}");
    }
    for (k, v) in [
        ("accuracy", m.accuracy),
        ("sensitivity", m.sensitivity),
        ("specificity", m.specificity),
        ("precision", m.precision),
        ("f_measure", m.f_measure),
        ("fp_rate", m.fp_rate),
    ] {
        match v {
            Some(x) => {
                let _ = writeln!(s, "{prefix}{k} = {x:?}");
            }
            None => {
                let _ = writeln!(s, "{prefix}{k} = undefined");
            }
        }
    }
    s
}
