//! Small dense least-squares helpers.

use alloc::vec;
use alloc::vec::Vec;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Least squares `min |A x - b|` through the normal equations.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    let mut ata = vec![vec![0.0; n]; n];
    let mut atb = vec![0.0; n];
    for (row, &y) in rows.iter().zip(rhs) {
        for i in 0..n {
            if row[i] == 0.0 {
                continue;
            }
            atb[i] += row[i] * y;
            for j in 0..n {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve(ata, atb)
}

/// Cyclic Kaczmarz projections for `A x = b`, started at `x0`.
pub fn kaczmarz(rows: &[Vec<f64>], rhs: &[f64], x0: Vec<f64>, sweeps: usize, tol: f64) -> Vec<f64> {
    let mut x = x0;
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for (row, &y) in rows.iter().zip(rhs) {
            let nn: f64 = row.iter().map(|v| v * v).sum();
            if nn == 0.0 {
                continue;
            }
            let r = y - row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            let step = r / nn;
            for (xi, ai) in x.iter_mut().zip(row) {
                *xi += step * ai;
            }
            moved = moved.max(libm::fabs(step) * libm::sqrt(nn));
        }
        if moved < tol {
            break;
        }
    }
    x
}

/// Non-negative least squares `min |A l - b|, l >= 0` (Lawson-Hanson).
/// `columns` holds the columns of `A`.
pub fn nnls(columns: &[Vec<f64>], b: &[f64], tol: f64) -> Vec<f64> {
    let k = columns.len();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, c)| a * c).sum::<f64>();
    let residual = |l: &[f64]| {
        let mut r = b.to_vec();
        for (col, &lj) in columns.iter().zip(l) {
            if lj != 0.0 {
                for (ri, ci) in r.iter_mut().zip(col) {
                    *ri -= lj * ci;
                }
            }
        }
        r
    };
    let mut l = vec![0.0; k];
    let mut passive = vec![false; k];
    for _ in 0..3 * k + 10 {
        let r = residual(&l);
        let entering = (0..k)
            .filter(|&j| !passive[j])
            .map(|j| (j, dot(&columns[j], &r)))
            .filter(|&(_, g)| g > tol)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((t, _)) = entering else {
            break;
        };
        passive[t] = true;
        loop {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let gram: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| idx.iter().map(|&j| dot(&columns[i], &columns[j])).collect())
                .collect();
            let rhs: Vec<f64> = idx.iter().map(|&i| dot(&columns[i], b)).collect();
            let Some(sol) = solve(gram, rhs) else {
                // Dependent column: drop the newcomer and stop.
                passive[t] = false;
                return l;
            };
            if sol.iter().all(|&v| v > tol) {
                l.iter_mut().for_each(|v| *v = 0.0);
                for (&i, &v) in idx.iter().zip(&sol) {
                    l[i] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&i, &v) in idx.iter().zip(&sol) {
                if v <= tol {
                    alpha = alpha.min(l[i] / (l[i] - v));
                }
            }
            for (&i, &v) in idx.iter().zip(&sol) {
                l[i] += alpha * (v - l[i]);
                if l[i] <= tol {
                    l[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    l
}
