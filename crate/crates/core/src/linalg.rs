//! Small complex linear-algebra helpers shared by the channel, transmitter and
//! attacker modules.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result, C64};

/// Draws one circularly-symmetric complex Gaussian sample with the given
/// variance `E|z|^2`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(scale * re, scale * im)
}

pub fn complex_gaussian_vector<R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    variance: f64,
) -> DVector<C64> {
    DVector::from_fn(len, |_, _| complex_gaussian(rng, variance))
}

/// Row-major fill: entry (r, c) is the `r * cols + c`-th draw.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> DMatrix<C64> {
    let data: Vec<C64> = (0..rows * cols)
        .map(|_| complex_gaussian(rng, variance))
        .collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// `e^{j angle(z)}` element-wise. An entry with `z == 0` has no phase and keeps
/// the corresponding entry of `previous`.
pub fn project_unit_modulus(z: &DVector<C64>, previous: &DVector<C64>) -> DVector<C64> {
    let mut out = previous.clone();
    project_unit_modulus_into(z, &mut out);
    out
}

/// In-place variant of [`project_unit_modulus`]: `target` holds the previous
/// iterate on entry.
pub fn project_unit_modulus_into(z: &DVector<C64>, target: &mut DVector<C64>) {
    for (t, v) in target.iter_mut().zip(z.iter()) {
        let norm = v.norm();
        if norm > 0.0 {
            *t = C64::from_polar(1.0, v.arg());
        }
    }
}

pub fn max_modulus_deviation(theta: &DVector<C64>) -> f64 {
    theta
        .iter()
        .map(|t| (t.norm() - 1.0).abs())
        .fold(0.0, f64::max)
}

pub fn all_finite_matrix(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn all_finite_vector(v: &DVector<C64>) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Settings for [`largest_gram_eigenvalue`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub relative_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            relative_tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

/// Largest eigenvalue of `A^H A` by power iteration, applying `A` and `A^H`
/// instead of forming the Gram matrix.
///
/// Returns `0.0` for an all-zero `A`.
pub fn largest_gram_eigenvalue(a: &DMatrix<C64>, settings: PowerIteration) -> Result<f64> {
    if !all_finite_matrix(a) {
        return Err(Error::Numeric(
            "non-finite entry in matrix passed to power iteration".into(),
        ));
    }
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Ok(0.0);
    }
    // Golden-angle phases with a ramped magnitude: no structured Gram matrix
    // we build has an eigenvector orthogonal to this.
    let mut v = DVector::from_fn(n, |l, _| {
        C64::from_polar(1.0 + l as f64 / n as f64, 2.399_963_229_728_653 * l as f64)
    });
    v.normalize_mut();

    let a_h = a.adjoint();
    let mut lambda = 0.0;
    for _ in 0..settings.max_iterations {
        let av = a * &v;
        let next_lambda = av.norm_squared();
        if next_lambda == 0.0 {
            return Ok(0.0);
        }
        let mut w = &a_h * av;
        let w_norm = w.norm();
        if !w_norm.is_finite() || w_norm == 0.0 {
            return Ok(next_lambda);
        }
        w /= C64::from(w_norm);
        v = w;
        let converged =
            (next_lambda - lambda).abs() <= settings.relative_tolerance * next_lambda;
        lambda = next_lambda;
        if converged {
            break;
        }
    }
    // Rayleigh quotient of the final iterate.
    Ok((a * &v).norm_squared().max(lambda))
}

/// Condition number of a Hermitian positive semi-definite matrix from its
/// eigenvalues. Returns infinity when the smallest eigenvalue is not positive.
pub fn hermitian_condition_number(m: &DMatrix<C64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn gaussian_variance() {
        let mut rng = stream(1, &[]);
        let n = 100_000;
        let mean_power: f64 = (0..n)
            .map(|_| complex_gaussian(&mut rng, 3.0).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean_power - 3.0).abs() < 0.03 * 3.0, "{mean_power}");
    }

    #[test]
    fn projection_keeps_phase_of_zero_entries() {
        let prev = DVector::from_vec(vec![C64::new(0.0, 1.0), C64::new(1.0, 0.0)]);
        let z = DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(-2.0, 0.0)]);
        let out = project_unit_modulus(&z, &prev);
        assert_eq!(out[0], C64::new(0.0, 1.0));
        assert!((out[1] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn power_iteration_matches_dense_eigensolver() {
        let mut rng = stream(3, &[]);
        for _ in 0..20 {
            let a = complex_gaussian_matrix(&mut rng, 12, 9, 1.0);
            let gram = a.adjoint() * &a;
            let exact = gram
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let approx = largest_gram_eigenvalue(&a, PowerIteration::default()).unwrap();
            assert!((approx - exact).abs() <= 1e-4 * exact, "{approx} vs {exact}");
        }
    }

    #[test]
    fn power_iteration_zero_and_non_finite() {
        let zero = DMatrix::<C64>::zeros(3, 4);
        assert_eq!(
            largest_gram_eigenvalue(&zero, PowerIteration::default()).unwrap(),
            0.0
        );
        let mut bad = DMatrix::<C64>::identity(2, 2);
        bad[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(largest_gram_eigenvalue(&bad, PowerIteration::default()).is_err());
    }

    #[test]
    fn condition_number_of_singular_matrix_is_infinite() {
        let v = DVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(0.5, -2.0)]);
        let rank_one = &v * v.adjoint();
        assert!(hermitian_condition_number(&rank_one) > 1e12);
        let eye = DMatrix::<C64>::identity(3, 3);
        assert!((hermitian_condition_number(&eye) - 1.0).abs() < 1e-12);
    }
}
