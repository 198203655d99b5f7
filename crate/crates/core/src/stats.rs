//! Small summary statistics for experiment tables.

use serde::Serialize;

pub fn median_sorted(sorted: &[f64]) -> f64 {
    quantile_sorted(sorted, 0.5)
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    // written so that infinite entries (censored values) propagate cleanly
    if a == b {
        a
    } else {
        a + (pos - lo as f64) * (b - a)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            count: v.len(),
            median: quantile_sorted(&v, 0.5),
            q1: quantile_sorted(&v, 0.25),
            q3: quantile_sorted(&v, 0.75),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Ordinary least squares of `y` on the columns of `x` (plus intercept).
/// Returns `(coefficients, r_squared)` with the intercept last.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let p = x.first()?.len() + 1;
    let n = y.len();
    if n < p {
        return None;
    }
    // normal equations, solved by Gaussian elimination with partial pivoting
    let row = |i: usize| x[i].iter().copied().chain(std::iter::once(1.0));
    let mut ata = vec![vec![0.0; p + 1]; p];
    for i in 0..n {
        let r: Vec<f64> = row(i).collect();
        for a in 0..p {
            for b in 0..p {
                ata[a][b] += r[a] * r[b];
            }
            ata[a][p] += r[a] * y[i];
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| ata[i][c].abs().total_cmp(&ata[j][c].abs()))?;
        if ata[piv][c].abs() < 1e-12 {
            return None;
        }
        ata.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = ata[r][c] / ata[c][c];
                for k in c..=p {
                    ata[r][k] -= f * ata[c][k];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..p).map(|c| ata[c][p] / ata[c][c]).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = (0..n)
        .map(|i| {
            let pred: f64 = row(i).zip(&coef).map(|(a, b)| a * b).sum();
            (y[i] - pred).powi(2)
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some((coef, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn censored_values_sort_last() {
        let s = Summary::of(&[3.0, f64::INFINITY, 1.0, 2.0, f64::INFINITY]);
        assert_eq!(s.median, 3.0);
        assert_eq!(s.q3, f64::INFINITY);
        assert_eq!(median(&[f64::INFINITY, f64::INFINITY, 1.0]), f64::INFINITY);
    }

    #[test]
    fn exact_linear_fit() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] - 0.5 * r[1] + 3.0).collect();
        let (c, r2) = least_squares(&x, &y).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-9 && (c[1] + 0.5).abs() < 1e-9 && (c[2] - 3.0).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
