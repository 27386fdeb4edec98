use enroll_core::cli::profile;
use enroll_core::cohortsynth::{inject_missing, paper_calibration, paper_cohort, published};
use enroll_core::tabular::Cell;

fn rate(category: &str, table: &[(String, (u64, u64))]) -> f64 {
    let (_, (n, e)) = table.iter().find(|(c, _)| c == category).unwrap();
    *e as f64 / *n as f64
}

fn breakdown(ds: &enroll_core::tabular::Dataset, column: &str) -> Vec<(String, (u64, u64))> {
    profile(ds)
        .breakdowns
        .into_iter()
        .find(|b| b.column == column)
        .unwrap()
        .rows
        .into_iter()
        .map(|r| (r.category, (r.count, r.enrolled)))
        .collect()
}

#[test]
fn reference_cohort_matches_published_rates() {
    for seed in [1, 2, 3] {
        let ds = paper_cohort(seed);
        assert_eq!(ds.len(), 7_879);
        let p = profile(&ds);
        let overall = published::ENROLLED as f64 / published::APPLICANTS as f64;
        let sigma = (overall * (1.0 - overall) / 7_879.0).sqrt();
        let got = p.total.enrolled as f64 / p.total.count as f64;
        assert!((got - overall).abs() < 3.0 * sigma, "seed {seed}: {got} vs {overall}");

        let prov = breakdown(&ds, "Within_Province");
        assert!((rate("1", &prov) - 3_199.0 / 6_489.0).abs() < 0.02);
        assert!((rate("0", &prov) - 215.0 / 1_390.0).abs() < 0.03);

        // gender rates are only matched through their odds ratio
        let male = breakdown(&ds, "Male");
        assert!(rate("1", &male) > rate("0", &male));
    }
}

#[test]
fn calibration_expectation_is_exact() {
    let c = paper_calibration();
    let p_male = 3_635.0 / 7_879.0;
    let p_online = 1_962.0 / 7_879.0;
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let expected = |base: f64| {
        let mut e = 0.0;
        for (m, pm) in [(1.0, p_male), (0.0, 1.0 - p_male)] {
            for (o, po) in [(1.0, p_online), (0.0, 1.0 - p_online)] {
                e += pm * po * sig(base + c.male * m + c.online * o);
            }
        }
        e
    };
    assert!((expected(c.intercept + c.within_province) - 3_199.0 / 6_489.0).abs() < 1e-9);
    assert!((expected(c.intercept) - 215.0 / 1_390.0).abs() < 1e-9);
    let odds = |p: f64| p / (1.0 - p);
    assert!((c.male - (odds(1_870.0 / 3_635.0) / odds(1_693.0 / 4_244.0)).ln()).abs() < 1e-12);
}

#[test]
fn injected_missing_spares_id_and_target() {
    let ds = paper_cohort(5);
    let holed = inject_missing(&ds, 0.2, 9).unwrap();
    let features = ds.schema().feature_indices();
    let missing = holed.missing_count() as f64 / (ds.len() * features.len()) as f64;
    assert!((missing - 0.2).abs() < 0.01);
    for (a, b) in ds.rows().iter().zip(holed.rows()) {
        assert_eq!(a[0], b[0]);
        assert_eq!(a.last(), b.last());
        assert!(b.iter().zip(a).all(|(x, y)| x == y || *x == Cell::Missing));
    }
}
