//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cascade_learn::experiment::{load_task_preset, DataSource, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Class sizes of the public arrhythmia file (classes 1..16, 11..13 empty).
pub const ARRHYTHMIA_CLASSES: [(u32, usize); 13] = [
    (1, 245),
    (2, 44),
    (3, 15),
    (4, 15),
    (5, 13),
    (6, 25),
    (7, 3),
    (8, 2),
    (9, 9),
    (10, 50),
    (14, 4),
    (15, 5),
    (16, 22),
];

/// A stand-in with the arrhythmia file's shape: 452 headerless rows of 279
/// mixed-scale numeric attributes, a few `?` cells, and the class id last.
/// Abnormal rows are shifted along 40 of the attributes.
pub fn arrhythmia_surrogate(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales: Vec<f64> = (0..279)
        .map(|_| 10f64.powf(rng.random_range(-1.0..3.0)))
        .collect();
    let offsets: Vec<f64> = (0..279).map(|_| rng.random_range(-2.0..2.0)).collect();
    let shifts: Vec<f64> = (0..279)
        .map(|j| {
            if j % 7 == 0 {
                rng.random_range(-0.5..0.5)
            } else {
                0.0
            }
        })
        .collect();
    let mut classes: Vec<u32> = ARRHYTHMIA_CLASSES
        .iter()
        .flat_map(|&(c, n)| std::iter::repeat_n(c, n))
        .collect();
    for i in (1..classes.len()).rev() {
        classes.swap(i, rng.random_range(0..=i));
    }
    let mut out = String::new();
    for class in classes {
        let abnormal = if class == 1 { 0.0 } else { 1.0 };
        for j in 0..279 {
            if rng.random::<f64>() < 0.003 {
                out.push_str("?,");
                continue;
            }
            let z: f64 = rng.sample(StandardNormal);
            let v = scales[j] * (offsets[j] + z + abnormal * shifts[j]);
            write!(out, "{v:.3},").unwrap();
        }
        writeln!(out, "{class}").unwrap();
    }
    out
}

/// The real arrhythmia file, when `ARRHYTHMIA_DATA` points at one.
pub fn arrhythmia_path() -> Option<PathBuf> {
    std::env::var_os("ARRHYTHMIA_DATA")
        .map(PathBuf::from)
        .filter(|p| p.is_file())
}

/// The task4 preset reading its data from `path`.
pub fn task4_on(path: &Path) -> ExperimentConfig {
    let mut config = load_task_preset("task4").expect("task4 preset");
    match &mut config.data {
        DataSource::Csv { path: p, .. } => *p = path.to_path_buf(),
        other => panic!("task4 is not CSV-backed: {other:?}"),
    }
    config
}

/// Write the surrogate under `dir` and return its path.
pub fn write_surrogate(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join("arrhythmia.data");
    fs::write(&path, arrhythmia_surrogate(seed)).expect("write surrogate");
    path
}
