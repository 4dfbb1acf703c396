//! Matrix exponential by scaling and squaring with a Taylor core.

use super::CMatrix;
use crate::error::Result;

/// exp(A) for a square complex matrix.
///
/// A is scaled by 2⁻ˢ until its 1-norm is below 1/2, the Taylor series is
/// summed to machine precision on the scaled matrix, and the result is
/// squared s times. Adequate for the generator sizes this crate produces
/// (d² ≲ a few hundred).
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    a.check_square()?;
    a.check_finite()?;
    let n = a.rows();
    let norm = a.norm_one();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale_re(0.5_f64.powi(s as i32));

    let mut result = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=30 {
        term = term.mul_mat(&scaled).scale_re(1.0 / k as f64);
        result = result.add_mat(&term);
        if term.norm_fro() <= f64::EPSILON * result.norm_fro() {
            break;
        }
    }
    for _ in 0..s {
        result = result.mul_mat(&result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn exp_of_zero_is_identity() {
        let e = expm(&CMatrix::zeros(3, 3)).unwrap();
        assert!(e.sub_mat(&CMatrix::identity(3)).norm_fro() < 1e-15);
    }

    #[test]
    fn scalar_exponential() {
        let a = CMatrix::real_diagonal(&[-2.0]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - (-2.0_f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn rotation_generator() {
        // exp([[0, -t], [t, 0]]) is a rotation by t
        let t = 0.7;
        let a = CMatrix::from_real_rows(&[vec![0.0, -t], vec![t, 0.0]]).unwrap();
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn semigroup_property() {
        let a = CMatrix::from_fn(4, 4, |i, j| {
            Complex64::new(
                ((i * 7 + j * 3) as f64).sin() * 0.6,
                ((i + 2 * j) as f64).cos() * 0.4,
            )
        });
        let full = expm(&a).unwrap();
        let half = expm(&a.scale_re(0.5)).unwrap();
        let halved = half.mul_mat(&half);
        assert!(halved.sub_mat(&full).norm_fro() < 1e-11 * full.norm_fro());
    }
}
