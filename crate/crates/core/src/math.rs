use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis};

/// Softmax of one row, in place, shifted by the row maximum.
pub(crate) fn softmax_in_place(mut row: ArrayViewMut1<'_, f64>) {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    row.mapv_inplace(|v| (v - max).exp());
    let sum = row.sum();
    row.mapv_inplace(|v| v / sum);
}

pub(crate) fn softmax_rows(logits: &mut Array2<f64>) {
    for row in logits.axis_iter_mut(Axis(0)) {
        softmax_in_place(row);
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub(crate) fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// |a - b| / max(|a| + |b|, 1e-8)
pub(crate) fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}
