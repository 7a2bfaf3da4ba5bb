//! Mixed strategies for small zero-sum games via a dense tableau simplex.
//!
//! Given a payoff matrix with one row per cell vertex and one column per
//! window, [`maximin_weights`] returns window weights `mu` (nonnegative,
//! summing to one) that approximately maximize `min_r sum_w mu_w A[r][w]`.
//! The caller re-evaluates the bound exactly, so the weights only need to be
//! good, not exact.

const EPS: f64 = 1e-12;

/// `a` is row-major with `rows` vertices and `cols` windows.
pub fn maximin_weights(a: &[f64], rows: usize, cols: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return None;
    }
    // shift payoffs into [1, inf) so the game value is positive
    let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return None;
    }
    let shift = 1.0 - lo;

    // Vertex player: max sum_r x_r  s.t.  sum_r x_r A'[r][w] <= 1 for every w.
    // The constraint duals are the window weights scaled by 1/value.
    let width = rows + cols + 1;
    let rhs = width - 1;
    let mut t = vec![0.0; cols * width];
    for w in 0..cols {
        let row = &mut t[w * width..(w + 1) * width];
        for r in 0..rows {
            row[r] = a[r * cols + w] + shift;
        }
        row[rows + w] = 1.0;
        row[rhs] = 1.0;
    }
    let mut obj = vec![0.0; width];
    obj[..rows].iter_mut().for_each(|x| *x = -1.0);
    let mut basis: Vec<usize> = (rows..rows + cols).collect();

    let max_iter = 50 * (rows + cols);
    let mut optimal = false;
    for _ in 0..max_iter {
        // Bland's rule: lowest-index improving column
        let Some(enter) = (0..rhs).find(|&j| obj[j] < -EPS) else {
            optimal = true;
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..cols {
            let coef = t[i * width + enter];
            if coef > EPS {
                let ratio = t[i * width + rhs] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - EPS || (ratio <= lr + EPS && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        // bounded by construction: every column of A' is >= 1
        let (pr, _) = leave?;
        let pivot = t[pr * width + enter];
        for j in 0..width {
            t[pr * width + j] /= pivot;
        }
        let prow: Vec<f64> = t[pr * width..(pr + 1) * width].to_vec();
        for i in 0..cols {
            if i == pr {
                continue;
            }
            let f = t[i * width + enter];
            if f != 0.0 {
                for j in 0..width {
                    t[i * width + j] -= f * prow[j];
                }
            }
        }
        let f = obj[enter];
        for j in 0..width {
            obj[j] -= f * prow[j];
        }
        basis[pr] = enter;
    }
    if !optimal {
        return None;
    }
    let duals: Vec<f64> = (0..cols).map(|w| obj[rows + w].max(0.0)).collect();
    let total: f64 = duals.iter().sum();
    (total > 0.0 && total.is_finite()).then(|| duals.iter().map(|y| y / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game_value(a: &[f64], rows: usize, cols: usize, mu: &[f64]) -> f64 {
        (0..rows)
            .map(|r| (0..cols).map(|w| mu[w] * a[r * cols + w]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn matching_pennies_mixes_evenly() {
        let a = [1.0, -1.0, -1.0, 1.0];
        let mu = maximin_weights(&a, 2, 2).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-9 && (mu[1] - 0.5).abs() < 1e-9);
        assert!(game_value(&a, 2, 2, &mu).abs() < 1e-9);
    }

    #[test]
    fn dominant_column_is_pure() {
        let a = [3.0, 1.0, 4.0, 0.0];
        let mu = maximin_weights(&a, 2, 2).unwrap();
        assert!((mu[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beats_every_pure_strategy_on_random_games() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let rows = rng.gen_range(1..7);
            let cols = rng.gen_range(1..30);
            let a: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let mu = maximin_weights(&a, rows, cols).unwrap();
            assert!(mu.iter().all(|&x| x >= 0.0));
            assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let v = game_value(&a, rows, cols, &mu);
            for w in 0..cols {
                let pure: f64 = (0..rows).map(|r| a[r * cols + w]).fold(f64::INFINITY, f64::min);
                assert!(v >= pure - 1e-9, "mixed {v} < pure {pure}");
            }
            // no vertex mixture can push the value below the maximin (weak duality check on uniform mix)
            let uniform_row_max = (0..cols)
                .map(|w| (0..rows).map(|r| a[r * cols + w]).sum::<f64>() / rows as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(v <= uniform_row_max + 1e-9);
        }
    }
}
