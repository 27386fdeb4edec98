use enroll_core::evalkit::Execution;
use enroll_core::glm::FitConfig;
use enroll_core::select::{best_first_search, rank_attributes, subset_merit, Direction, MeritMode, SearchConfig};
use enroll_core::tabular::DesignMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Binary features; when `perfect` is set, feature `perfect` equals the label.
fn instance(n: usize, d: usize, perfect: Option<usize>, seed: u64) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| f64::from(rng.random_bool(0.5) as u8)).collect();
        let label = match perfect {
            Some(p) => row[p],
            None => {
                let z = 1.2 * row[0] - 0.8 * row[d.min(2) - 1] - 0.2;
                f64::from(rng.random_bool(1.0 / (1.0 + (-z).exp())) as u8)
            }
        };
        rows.push(row);
        y.push(label);
    }
    DesignMatrix::from_rows(&rows, &y, (0..d).map(|j| format!("f{j}")).collect()).unwrap()
}

fn exhaustive_best(dm: &DesignMatrix, cfg: &SearchConfig, fit: &FitConfig) -> f64 {
    let d = dm.num_features();
    (0u32..1 << d)
        .map(|mask| {
            let subset: Vec<usize> = (0..d).filter(|j| mask & (1 << j) != 0).collect();
            subset_merit(&subset, dm, cfg, fit).unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn cfg(direction: Direction) -> SearchConfig {
    SearchConfig { direction, execution: Execution::Sequential, ..Default::default() }
}

#[test]
fn perfect_feature_is_found_in_every_direction() {
    let fit = FitConfig::default();
    for (seed, d) in [(1, 4), (2, 6)] {
        let dm = instance(60, d, Some(d / 2), seed);
        for direction in [Direction::Forward, Direction::Backward, Direction::Bidirectional] {
            let out = best_first_search(&dm, &cfg(direction), &fit).unwrap();
            assert_eq!(out.best.merit, 1.0, "{direction:?}");
        }
        let out = best_first_search(&dm, &cfg(Direction::Forward), &fit).unwrap();
        assert_eq!(out.best.features, vec![d / 2]);
        let ranked = rank_attributes(&dm).unwrap();
        assert_eq!(ranked[0].index, d / 2);
        assert_eq!(ranked[0].score(), 1.0);
    }
}

#[test]
fn search_never_beats_exhaustive_optimum() {
    let fit = FitConfig::default();
    for seed in 0..4 {
        let dm = instance(80, 5, None, 100 + seed);
        let c = cfg(Direction::Bidirectional);
        let best = exhaustive_best(&dm, &c, &fit);
        let out = best_first_search(&dm, &c, &fit).unwrap();
        assert!(out.best.merit <= best);
        assert!(out.evaluations <= 1 << 5);
    }
}

#[test]
fn training_set_merit_is_supported() {
    let dm = instance(50, 3, Some(1), 5);
    let c = SearchConfig { merit_mode: MeritMode::TrainingSet, ..cfg(Direction::Forward) };
    let out = best_first_search(&dm, &c, &FitConfig::default()).unwrap();
    assert_eq!(out.best.features, vec![1]);
    assert_eq!(out.best.merit, 1.0);
}

#[test]
fn search_is_deterministic() {
    let dm = instance(70, 6, None, 42);
    let c = SearchConfig { execution: Execution::Parallel, ..Default::default() };
    let a = best_first_search(&dm, &c, &FitConfig::default()).unwrap();
    let b = best_first_search(&dm, &c, &FitConfig::default()).unwrap();
    assert_eq!(a, b);
}
