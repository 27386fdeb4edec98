use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use super::TabularError;

/// Seeded train/test split. The rows are permuted with a ChaCha8 generator
/// and the first `round(n * test_fraction)` go to the test set.
pub fn split(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), TabularError> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(TabularError::InvalidArgument(format!(
            "test fraction {test_fraction} outside [0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (ds.len() as f64 * test_fraction).round() as usize;
    let (test, train) = order.split_at(n_test);
    Ok((ds.select_rows(train), ds.select_rows(test)))
}
