use crate::dataset::Dataset;

/// Two-group dataset: x = 0 four times, x = 1 four times.
pub fn two_groups() -> Dataset {
    Dataset::with_intercept(
        &[("x", &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0])],
        &[1.0, 2.0, 3.0, 4.0, 3.0, 5.0, 7.0, 9.0],
    )
    .unwrap()
}
