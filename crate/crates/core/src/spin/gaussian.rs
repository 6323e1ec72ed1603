//! Linearized (Gaussian) description of a nearly polarized collective spin.

use super::{cross, norm3, symmetric_eigen_min, transverse_basis, DickeState, Mat3, Vec3};
use crate::error::{Error, Result};

/// Smallest contrast accepted by the linearization.
pub const LINEARIZATION_GUARD: f64 = 0.5;

/// Mean spin plus the covariance of the two transverse quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpin {
    pub mean: Vec3,
    /// Covariance in the basis returned by [`transverse_basis`](super::transverse_basis).
    pub quad_cov: [[f64; 2]; 2],
}

impl GaussianSpin {
    /// Smallest transverse quadrature variance.
    pub fn min_variance(&self) -> f64 {
        symmetric_eigen_min(self.quad_cov).0
    }

    /// Largest transverse quadrature variance.
    pub fn max_variance(&self) -> f64 {
        symmetric_eigen_min(self.quad_cov).1
    }

    pub fn determinant(&self) -> f64 {
        self.quad_cov[0][0] * self.quad_cov[1][1] - self.quad_cov[0][1] * self.quad_cov[1][0]
    }
}

/// Extracts the Gaussian description of an exact state.
pub fn gaussian_from(state: &DickeState) -> Result<GaussianSpin> {
    let moments = state.moments();
    if moments.contrast <= LINEARIZATION_GUARD {
        return Err(Error::LinearizationInvalid {
            contrast: moments.contrast,
            guard: LINEARIZATION_GUARD,
        });
    }
    Ok(GaussianSpin {
        mean: moments.mean,
        quad_cov: state.transverse_covariance()?,
    })
}

fn rot_z(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

/// Applies one-axis twisting `exp(-i·shear·Sz²)` at linear order.
///
/// The mean-field map `S → R_z(2·shear·S_z) S` is linearized around the mean
/// spin and its Jacobian transports the covariance.
pub fn gaussian_shear(g: &GaussianSpin, shear: f64, n_atoms: usize) -> Result<GaussianSpin> {
    let s0 = n_atoms as f64 / 2.0;
    let contrast = norm3(g.mean) / s0;
    if contrast <= LINEARIZATION_GUARD {
        return Err(Error::LinearizationInvalid {
            contrast,
            guard: LINEARIZATION_GUARD,
        });
    }
    let (ea, eb) = transverse_basis(g.mean)?;
    let basis = [ea, eb];
    let mut cov3 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..2 {
                for b in 0..2 {
                    cov3[i][j] += basis[a][i] * g.quad_cov[a][b] * basis[b][j];
                }
            }
        }
    }

    let rot = rot_z(2.0 * shear * g.mean[2]);
    let new_mean = mat_vec(&rot, g.mean);
    // Derivative of the precession angle with respect to S_z.
    let dr = cross([0.0, 0.0, 1.0], new_mean);
    let mut jac = rot;
    for (i, row) in jac.iter_mut().enumerate() {
        row[2] += dr[i] * 2.0 * shear;
    }
    let mut tmp = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                tmp[i][j] += jac[i][k] * cov3[k][j];
            }
        }
    }
    let mut out3 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out3[i][j] += tmp[i][k] * jac[j][k];
            }
        }
    }

    let (na, nb) = transverse_basis(new_mean)?;
    let nbasis = [na, nb];
    let mut quad_cov = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += nbasis[a][i] * out3[i][j] * nbasis[b][j];
                }
            }
            quad_cov[a][b] = s;
        }
    }
    Ok(GaussianSpin {
        mean: new_mean,
        quad_cov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::css;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn css_gives_isotropic_covariance() {
        for n in [10, 200] {
            let g = gaussian_from(&css(n, FRAC_PI_2, 0.0).unwrap()).unwrap();
            let q = n as f64 / 4.0;
            assert!((g.quad_cov[0][0] - q).abs() < 1e-9);
            assert!((g.quad_cov[1][1] - q).abs() < 1e-9);
            assert!(g.quad_cov[0][1].abs() < 1e-9);
        }
    }

    #[test]
    fn zero_shear_is_identity() {
        let g = gaussian_from(&css(50, 1.1, 0.3).unwrap()).unwrap();
        let h = gaussian_shear(&g, 0.0, 50).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((g.quad_cov[a][b] - h.quad_cov[a][b]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn agrees_with_exact_backend() {
        let n = 200;
        let state = css(n, FRAC_PI_2, 0.0).unwrap();
        let g = gaussian_shear(&gaussian_from(&state).unwrap(), 0.02, n).unwrap();
        let exact = state
            .oat_evolve(0.02, 0.0)
            .min_quadrature_variance()
            .unwrap();
        assert!((g.min_variance() - exact).abs() / exact < 0.05);
    }

    #[test]
    fn refuses_low_contrast() {
        let state = css(20, 0.0, 0.0)
            .unwrap()
            .rotate(0.0, FRAC_PI_2)
            .oat_evolve(FRAC_PI_2, 0.0);
        assert!(matches!(
            gaussian_from(&state),
            Err(Error::LinearizationInvalid { .. })
        ));
    }

    #[test]
    fn shear_preserves_heisenberg_area() {
        let n = 300;
        let g0 = gaussian_from(&css(n, FRAC_PI_2, 0.0).unwrap()).unwrap();
        for q in [0.001, 0.01, 0.05] {
            let g = gaussian_shear(&g0, q, n).unwrap();
            let bound = (norm3(g.mean) / 2.0).powi(2);
            assert!(g.determinant() >= bound * (1.0 - 1e-9));
        }
    }
}
