//! Positive affine fits `target(a, ·) ~ scale * source(a, ·) + shift`.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    pub scale: f64,
    /// Per opponent-profile translation.
    pub shift: Vec<f64>,
    /// Max-norm of `target - scale * source - shift`.
    pub max_residual: f64,
}

/// Least-squares fit of one scale and a per-column shift. With
/// `nonnegative`, a negative scale is clamped to zero and the shift refit.
pub fn fit_affine(target: &[Vec<f64>], source: &[Vec<f64>], nonnegative: bool) -> AffineFit {
    let rows = target.len();
    let cols = target.first().map_or(0, Vec::len);
    let column_mean = |m: &[Vec<f64>], k: usize| m.iter().map(|r| r[k]).sum::<f64>() / rows as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..cols {
        let mt = column_mean(target, k);
        let ms = column_mean(source, k);
        for a in 0..rows {
            let s = source[a][k] - ms;
            num += (target[a][k] - mt) * s;
            den += s * s;
        }
    }
    let mut scale = if den > 0.0 { num / den } else { 0.0 };
    if nonnegative && scale < 0.0 {
        scale = 0.0;
    }
    let shift: Vec<f64> = (0..cols)
        .map(|k| column_mean(target, k) - scale * column_mean(source, k))
        .collect();
    let mut max_residual = 0.0f64;
    for a in 0..rows {
        for k in 0..cols {
            let r = target[a][k] - scale * source[a][k] - shift[k];
            max_residual = max_residual.max(r.abs());
        }
    }
    AffineFit {
        scale,
        shift,
        max_residual,
    }
}

/// Rows `u_i(a, ·)` of one agent, one per action.
pub fn utility_rows(game: &crate::Game, agent: usize) -> Vec<Vec<f64>> {
    (0..game.indexing().actions(agent))
        .map(|a| game.utility_row(agent, a).expect("in range"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn recovers_exact_transform() {
        let source = vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.0]];
        let target: Vec<Vec<f64>> = source
            .iter()
            .map(|r| vec![2.0 * r[0] + 7.0, 2.0 * r[1] - 1.0])
            .collect();
        let fit = fit_affine(&target, &source, true);
        assert!((fit.scale - 2.0).abs() < 1e-12);
        assert!((fit.shift[0] - 7.0).abs() < 1e-12 && (fit.shift[1] + 1.0).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
    }

    #[test]
    fn sign_flip_is_clamped() {
        let source = vec![vec![1.0, 2.0], vec![3.0, -1.0]];
        let target: Vec<Vec<f64>> = source
            .iter()
            .map(|r| r.iter().map(|v| -v).collect())
            .collect();
        let free = fit_affine(&target, &source, false);
        assert!((free.scale + 1.0).abs() < 1e-12);
        let clamped = fit_affine(&target, &source, true);
        assert_eq!(clamped.scale, 0.0);
        assert!(clamped.max_residual > 0.5);
    }
}
