use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};

use super::{Column, ColumnData, ColumnKind, ColumnarTable, LABEL};
use crate::error::{Error, Result};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImputePolicy {
    /// Mean of the observed values for numeric columns, most frequent value
    /// (lexicographically smallest on ties) for categorical ones.
    #[default]
    MeanMode,
}

/// Fill every missing cell. Observed cells are left untouched.
pub fn impute_missing(table: &ColumnarTable, policy: ImputePolicy) -> Result<ColumnarTable> {
    let ImputePolicy::MeanMode = policy;
    let mut columns = Vec::with_capacity(table.columns().len());
    for column in table.columns() {
        if column.missing_count() == 0 {
            columns.push(column.clone());
            continue;
        }
        if column.missing_count() == column.len() {
            return Err(Error::Impute(format!(
                "column `{}` has no observed values",
                column.name()
            )));
        }
        let data = match column.data() {
            ColumnData::Numeric(values) => {
                let observed: Vec<f64> = values.iter().flatten().copied().collect();
                let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                ColumnData::Numeric(values.iter().map(|v| Some(v.unwrap_or(mean))).collect())
            }
            ColumnData::Categorical(values) => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for v in values.iter().flatten() {
                    *counts.entry(v.as_str()).or_default() += 1;
                }
                // equal counts compare reversed on the key so the smallest key wins
                let mode = counts
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                    .map(|(k, _)| (*k).to_owned())
                    .expect("at least one observed value");
                ColumnData::Categorical(
                    values
                        .iter()
                        .map(|v| Some(v.clone().unwrap_or_else(|| mode.clone())))
                        .collect(),
                )
            }
        };
        columns.push(Column::new(column.name(), data));
    }
    let imputed = ColumnarTable::new(columns)?;
    match table.label_column() {
        Some(label) => imputed.with_label(label),
        None => Ok(imputed),
    }
}

/// Disjoint train/test tables covering the source rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: ColumnarTable,
    pub test: ColumnarTable,
    pub ratio: f64,
    pub seed: u64,
    /// Source row index of every train row, in train order.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Shuffle row indices with `seed`, send the first `floor(ratio * n)` to train
/// and the rest to test.
pub fn split(table: &ColumnarTable, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Split(format!("ratio {ratio} is not in (0, 1)")));
    }
    let n = table.n_rows();
    if n < 2 {
        return Err(Error::Split(format!("cannot split {n} rows")));
    }
    let n_train = (ratio * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Split(format!(
            "ratio {ratio} over {n} rows leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed, stream::SPLIT));
    let test_rows = order.split_off(n_train);
    Ok(SplitPair {
        train: table.select_rows(&order)?,
        test: table.select_rows(&test_rows)?,
        ratio,
        seed,
        train_rows: order,
        test_rows,
    })
}

/// Drop a uniform random subset of the majority class so both classes have the
/// minority count. Surviving rows keep their original order.
pub fn undersample(table: &ColumnarTable, seed: u64) -> Result<ColumnarTable> {
    let labels = table.labels().map_err(|e| Error::Resample(e.to_string()))?;
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (row, &label) in labels.iter().enumerate() {
        by_class.entry(label).or_default().push(row);
    }
    if by_class.len() != 2 {
        return Err(Error::Resample(format!(
            "undersampling needs exactly 2 classes, found {}",
            by_class.len()
        )));
    }
    let mut groups: Vec<Vec<usize>> = by_class.into_values().collect();
    groups.sort_by_key(Vec::len);
    let (minority, majority) = (&groups[0], &groups[1]);
    let mut rng = rng::seeded(seed, stream::UNDERSAMPLE);
    let mut rows: Vec<usize> = index::sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .chain(minority.iter().copied())
        .collect();
    rows.sort_unstable();
    table.select_rows(&rows)
}

/// Binary label from a numeric column: strictly above `threshold` is class 1,
/// everything else (including equality) class 0.
pub fn derive_threshold_label(
    table: &ColumnarTable,
    column: &str,
    threshold: f64,
) -> Result<ColumnarTable> {
    let values = table.numeric(column)?;
    let labels = values
        .iter()
        .map(|&v| if v > threshold { 1.0 } else { 0.0 });
    table
        .with_column(Column::numeric(LABEL, labels))?
        .with_label(LABEL)
}

/// Binary label from a match: rows whose `column` equals `value` get
/// `matched_class`, all others the other class.
pub fn derive_match_label(
    table: &ColumnarTable,
    column: &str,
    value: &str,
    matched_class: usize,
) -> Result<ColumnarTable> {
    if matched_class > 1 {
        return Err(Error::Label(format!(
            "matched class {matched_class} is not binary"
        )));
    }
    let (hit, miss) = (matched_class as f64, (1 - matched_class) as f64);
    let matches: Vec<bool> = match table.column(column)?.kind() {
        ColumnKind::Categorical => table
            .categorical(column)?
            .into_iter()
            .map(|v| v == value)
            .collect(),
        ColumnKind::Numeric => {
            let target: f64 = value.parse().map_err(|_| {
                Error::Schema(format!("`{value}` cannot match numeric column `{column}`"))
            })?;
            table
                .numeric(column)?
                .into_iter()
                .map(|v| v == target)
                .collect()
        }
    };
    let labels = matches.into_iter().map(|m| if m { hit } else { miss });
    table
        .with_column(Column::numeric(LABEL, labels))?
        .with_label(LABEL)
}

/// Cut points for equal-frequency binning of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpec {
    pub column: String,
    /// Number of bins actually produced; fewer than requested when ties collapse cuts.
    pub k: usize,
    /// Strictly ascending, `k - 1` of them.
    pub boundaries: Vec<f64>,
}

impl BinSpec {
    /// Quantile cuts over `values`. The cut for bin `i` is the value at sorted
    /// position `ceil(i * n / k) - 1`; duplicate cuts and cuts at the maximum are
    /// dropped so tied values never straddle a boundary and no bin is empty.
    pub fn fit(column: &str, values: &[f64], k: usize) -> Result<BinSpec> {
        if k < 2 {
            return Err(Error::Bin(format!("need at least 2 bins, got {k}")));
        }
        let n = values.len();
        if n < k {
            return Err(Error::Bin(format!("{n} rows cannot fill {k} bins")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let max = sorted[n - 1];
        let mut boundaries: Vec<f64> = Vec::with_capacity(k - 1);
        for i in 1..k {
            let pos = (i * n).div_ceil(k) - 1;
            let cut = sorted[pos];
            if cut < max && boundaries.last().is_none_or(|&b| b < cut) {
                boundaries.push(cut);
            }
        }
        Ok(BinSpec {
            column: column.to_owned(),
            k: boundaries.len() + 1,
            boundaries,
        })
    }

    /// Bin id = number of boundaries strictly below `value`.
    pub fn assign(&self, value: f64) -> usize {
        self.boundaries.partition_point(|&b| b < value)
    }
}

/// Label rows by the equal-frequency bin of a numeric column.
pub fn equal_frequency_bin(
    table: &ColumnarTable,
    column: &str,
    k: usize,
) -> Result<(ColumnarTable, BinSpec)> {
    if k < 2 {
        return Err(Error::Bin(format!("need at least 2 bins, got {k}")));
    }
    let values = table.numeric(column)?;
    let spec = BinSpec::fit(column, &values, k)?;
    let labels = values.iter().map(|&v| spec.assign(v) as f64);
    let table = table
        .with_column(Column::numeric(LABEL, labels))?
        .with_label(LABEL)?;
    Ok((table, spec))
}

/// Replace a numeric column by a categorical one holding its equal-frequency
/// bin (`"bin0"`, `"bin1"`, ...), so it can be one-hot encoded.
pub fn categorize(
    table: &ColumnarTable,
    column: &str,
    k: usize,
) -> Result<(ColumnarTable, BinSpec)> {
    let values = table.numeric(column)?;
    let spec = BinSpec::fit(column, &values, k)?;
    let bins = values.iter().map(|&v| format!("bin{}", spec.assign(v)));
    Ok((table.with_column(Column::categorical(column, bins))?, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labelled(labels: &[f64]) -> ColumnarTable {
        ColumnarTable::new(vec![
            Column::numeric("row", (0..labels.len()).map(|i| i as f64)),
            Column::numeric(LABEL, labels.iter().copied()),
        ])
        .unwrap()
        .with_label(LABEL)
        .unwrap()
    }

    #[test]
    fn impute_mean_and_mode() {
        let t = ColumnarTable::new(vec![
            Column::new("x", ColumnData::Numeric(vec![Some(1.0), None, Some(3.0)])),
            Column::new(
                "c",
                ColumnData::Categorical(vec![Some("a".into()), Some("a".into()), None]),
            ),
        ])
        .unwrap();
        let out = impute_missing(&t, ImputePolicy::MeanMode).unwrap();
        assert_eq!(out.numeric("x").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(out.categorical("c").unwrap(), vec!["a", "a", "a"]);
        assert_eq!(impute_missing(&out, ImputePolicy::MeanMode).unwrap(), out);
    }

    #[test]
    fn impute_mode_tie_is_lexicographic() {
        let t = ColumnarTable::new(vec![Column::new(
            "c",
            ColumnData::Categorical(vec![Some("b".into()), Some("a".into()), None]),
        )])
        .unwrap();
        let out = impute_missing(&t, ImputePolicy::MeanMode).unwrap();
        assert_eq!(out.categorical("c").unwrap()[2], "a");
    }

    #[test]
    fn impute_all_missing_fails() {
        let t = ColumnarTable::new(vec![Column::new(
            "x",
            ColumnData::Numeric(vec![None, None]),
        )])
        .unwrap();
        assert!(matches!(
            impute_missing(&t, ImputePolicy::MeanMode),
            Err(Error::Impute(_))
        ));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let t = labelled(&[0.0; 10]);
        let a = split(&t, 0.7, 1).unwrap();
        assert_eq!((a.train.n_rows(), a.test.n_rows()), (7, 3));
        assert_eq!(split(&t, 0.7, 1).unwrap(), a);
        assert!(matches!(
            split(&labelled(&[0.0]), 0.7, 1),
            Err(Error::Split(_))
        ));
        assert!(matches!(split(&t, 1.0, 1), Err(Error::Split(_))));
        assert!(matches!(split(&t, 0.05, 1), Err(Error::Split(_))));
    }

    #[test]
    fn undersample_equalizes() {
        let mut labels = vec![1.0; 100];
        labels.extend([0.0; 10]);
        let out = undersample(&labelled(&labels), 3).unwrap();
        assert_eq!(out.class_counts().unwrap(), vec![10, 10]);
        assert!(matches!(
            undersample(&labelled(&[1.0; 5]), 3),
            Err(Error::Resample(_))
        ));
    }

    #[test]
    fn threshold_boundary_goes_low() {
        let t = ColumnarTable::new(vec![
            Column::numeric("wage", [80_000.0, 95_000.0, 90_000.0]),
            Column::categorical("state", ["CA", "NY", "TX"]),
        ])
        .unwrap();
        let out = derive_threshold_label(&t, "wage", 90_000.0).unwrap();
        assert_eq!(out.labels().unwrap(), vec![0, 1, 0]);
        assert!(matches!(
            derive_threshold_label(&t, "state", 1.0),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            derive_threshold_label(&t, "nope", 1.0),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn match_label_on_text_and_numbers() {
        let t = ColumnarTable::new(vec![
            Column::categorical("status", ["CERTIFIED", "DENIED", "CERTIFIED"]),
            Column::numeric("class", [1.0, 5.0, 16.0]),
        ])
        .unwrap();
        let a = derive_match_label(&t, "status", "CERTIFIED", 1).unwrap();
        assert_eq!(a.labels().unwrap(), vec![1, 0, 1]);
        let b = derive_match_label(&t, "class", "1", 0).unwrap();
        assert_eq!(b.labels().unwrap(), vec![0, 1, 1]);
    }

    #[test]
    fn equal_frequency_examples() {
        let t = ColumnarTable::new(vec![Column::numeric("v", (1..=8).map(f64::from))]).unwrap();
        let (out, spec) = equal_frequency_bin(&t, "v", 4).unwrap();
        assert_eq!(out.labels().unwrap(), vec![0, 0, 1, 1, 2, 2, 3, 3]);
        assert_eq!(spec.boundaries, vec![2.0, 4.0, 6.0]);

        let t =
            ColumnarTable::new(vec![Column::numeric("v", [1.0, 1.0, 1.0, 1.0, 2.0, 2.0])]).unwrap();
        let (out, _) = equal_frequency_bin(&t, "v", 2).unwrap();
        assert_eq!(out.labels().unwrap(), vec![0, 0, 0, 0, 1, 1]);

        assert!(matches!(
            equal_frequency_bin(&t, "v", 1),
            Err(Error::Bin(_))
        ));
    }

    #[test]
    fn constant_column_collapses_to_one_bin() {
        let spec = BinSpec::fit("v", &[5.0; 6], 3).unwrap();
        assert_eq!(spec.k, 1);
        assert!(spec.boundaries.is_empty());
    }

    #[test]
    fn categorize_replaces_column() {
        let t = ColumnarTable::new(vec![Column::numeric("v", (1..=4).map(f64::from))]).unwrap();
        let (out, _) = categorize(&t, "v", 2).unwrap();
        assert_eq!(
            out.categorical("v").unwrap(),
            vec!["bin0", "bin0", "bin1", "bin1"]
        );
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 2usize..200, ratio in 0.05f64..0.95, seed: u64) {
            let t = labelled(&vec![0.0; n]);
            let Ok(pair) = split(&t, ratio, seed) else { return Ok(()); };
            prop_assert_eq!(pair.train.n_rows(), (ratio * n as f64).floor() as usize);
            let mut all: Vec<usize> = pair.train_rows.iter().chain(&pair.test_rows).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn undersample_keeps_minority(major in 1usize..80, minor in 1usize..80, seed: u64) {
            let mut labels = vec![1.0; major];
            labels.extend(vec![0.0; minor]);
            let t = labelled(&labels);
            let out = undersample(&t, seed).unwrap();
            let m = major.min(minor);
            prop_assert_eq!(out.class_counts().unwrap(), vec![m, m]);
            let rows = out.numeric("row").unwrap();
            let mut dedup = rows.clone();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), rows.len());
            let minority_class = if minor <= major { 0 } else { 1 };
            let kept: Vec<usize> = out.labels().unwrap().iter().zip(&rows)
                .filter(|(l, _)| **l == minority_class).map(|(_, r)| *r as usize).collect();
            let original: Vec<usize> = labels.iter().enumerate()
                .filter(|(_, l)| **l as usize == minority_class).map(|(i, _)| i).collect();
            prop_assert_eq!(kept, original);
        }

        #[test]
        fn distinct_values_bin_evenly(per_bin in 1usize..30, k in 2usize..8, seed: u64) {
            let n = per_bin * k;
            let mut values: Vec<f64> = (0..n).map(|i| i as f64 * 1.5 - 7.0).collect();
            values.shuffle(&mut rng::seeded(seed, 0));
            let t = ColumnarTable::new(vec![Column::numeric("v", values)]).unwrap();
            let (out, spec) = equal_frequency_bin(&t, "v", k).unwrap();
            prop_assert_eq!(spec.k, k);
            let counts = out.class_counts().unwrap();
            prop_assert_eq!(counts, vec![per_bin; k]);
        }

        #[test]
        fn ties_never_straddle(values in proptest::collection::vec(0u8..6, 4..60), k in 2usize..5) {
            prop_assume!(values.len() >= k);
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            let spec = BinSpec::fit("v", &values, k).unwrap();
            prop_assert!(spec.boundaries.windows(2).all(|w| w[0] < w[1]));
            for (a, b) in values.iter().zip(values.iter().skip(1)) {
                if a == b {
                    prop_assert_eq!(spec.assign(*a), spec.assign(*b));
                }
            }
            prop_assert!(values.iter().all(|&v| spec.assign(v) < spec.k));
        }

        #[test]
        fn impute_idempotent(cells in proptest::collection::vec(proptest::option::of(-5.0f64..5.0), 1..30)) {
            prop_assume!(cells.iter().any(Option::is_some));
            let t = ColumnarTable::new(vec![Column::new("x", ColumnData::Numeric(cells))]).unwrap();
            let once = impute_missing(&t, ImputePolicy::MeanMode).unwrap();
            prop_assert!(!once.has_missing());
            prop_assert_eq!(impute_missing(&once, ImputePolicy::MeanMode).unwrap(), once);
        }
    }
}
