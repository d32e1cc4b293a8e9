//! Small statistical helpers shared by the Monte Carlo checks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Upper tail `P(N(0,1) > z)`.
pub fn normal_sf(z: f64) -> f64 {
    Normal::standard().sf(z)
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    ChiSquared::new(df as f64).expect("positive degrees of freedom").sf(x.max(0.0))
}

/// Pearson goodness-of-fit p-value of `observed` counts against `expected` probabilities.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| {
            let ex = e * total as f64;
            (o as f64 - ex).powi(2) / ex
        })
        .sum();
    let cells = expected.iter().filter(|&&e| e > 0.0).count();
    chi_square_sf(stat, cells.saturating_sub(1))
}

/// Kolmogorov-Smirnov distance of a sample to the uniform law on `[0, 1]`.
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Quadratic form `vᵀ Σ⁺ v` with the Moore-Penrose pseudoinverse of a
/// symmetric PSD matrix; eigenvalues below `rel_tol · λ_max` are treated as
/// zero. Returns the form and the numerical rank.
pub fn pinv_quadratic_form(sigma: &DMatrix<f64>, v: &DVector<f64>, rel_tol: f64) -> (f64, usize) {
    let eig = SymmetricEigen::new(sigma.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut form = 0.0;
    let mut rank = 0;
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > rel_tol * max && lambda > 0.0 {
            let proj = eig.eigenvectors.column(idx).dot(v);
            form += proj * proj / lambda;
            rank += 1;
        }
    }
    (form, rank)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails() {
        assert!((normal_sf(1.311) - 0.0949).abs() < 5e-4);
        assert!((chi_square_sf(3.841, 1) - 0.05).abs() < 1e-3);
        assert_eq!(chi_square_sf(1.0, 0), 0.0);
    }

    #[test]
    fn ks_distances() {
        let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!(ks_uniform(&grid) <= 0.0051);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.1], &[1.0, 2.0]), 1.0);
    }

    #[test]
    fn pinv_form_projects_out_null_space() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let v = DVector::from_vec(vec![1.0, 1.0]);
        let (f, r) = pinv_quadratic_form(&sigma, &v, 1e-10);
        assert_eq!(r, 1);
        assert!(f.abs() < 1e-12);
        let w = DVector::from_vec(vec![1.0, -1.0]);
        assert!((pinv_quadratic_form(&sigma, &w, 1e-10).0 - 1.0).abs() < 1e-12);
    }
}
