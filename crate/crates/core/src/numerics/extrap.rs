//! Series acceleration for slowly converging partial sums.

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
///
/// Returns the best estimate of the limit together with a crude error
/// estimate (difference between the two most recent even-column entries).
pub fn wynn_epsilon(partial_sums: &[f64]) -> (f64, f64) {
    let n = partial_sums.len();
    match n {
        0 => return (0.0, f64::INFINITY),
        1 => return (partial_sums[0], f64::INFINITY),
        2 => return (partial_sums[1], (partial_sums[1] - partial_sums[0]).abs()),
        _ => {},
    }
    // e[k][j]: column k, row j. Column 0 holds the partial sums, column -1 is zero.
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial_sums.to_vec();
    let mut best = partial_sums[n - 1];
    let mut best_err = (partial_sums[n - 1] - partial_sums[n - 2]).abs();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let diff = cur[j + 1] - cur[j];
            if diff == 0.0 {
                // Converged exactly; propagate a huge value so later even columns settle.
                next.push(prev[j + 1] + 1e300);
            } else {
                next.push(prev[j + 1] + 1.0 / diff);
            }
        }
        col += 1;
        if col % 2 == 0 && next.len() >= 2 {
            let m = next.len();
            let est = next[m - 1];
            let err = (next[m - 1] - next[m - 2]).abs();
            if est.is_finite() && err < best_err {
                best = est;
                best_err = err;
            }
        }
        prev = cur;
        cur = next;
    }
    (best, best_err)
}
