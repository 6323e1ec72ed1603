//! Pure collective-spin states of `N` two-level atoms in the symmetric subspace.
//!
//! Amplitudes are stored densely and indexed by the number of atoms in `|↑⟩`,
//! `k = m + N/2`. Rotations about equatorial axes use Wigner-d recursion
//! ([`wigner`]) and rotations about `z` are phase ramps, so every operation
//! costs at most `O(N²)` and never forms a dense operator.

mod gaussian;
mod squeezing;
pub(crate) mod wigner;

pub use gaussian::{gaussian_from, gaussian_shear, GaussianSpin, LINEARIZATION_GUARD};
pub use squeezing::{
    calibrate_squeezing, coherent_depolarization, net_noise_ratio, optimal_shear,
    SqueezingCalibration,
};

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use rand::Rng;
use statrs::function::factorial::ln_binomial;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use wigner::Ladder;

/// Cartesian 3-vector `(x, y, z)`.
pub type Vec3 = [f64; 3];
/// Row-major 3×3 matrix.
pub type Mat3 = [[f64; 3]; 3];

/// First moments of a collective spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMoments {
    /// `(⟨Sx⟩, ⟨Sy⟩, ⟨Sz⟩)`.
    pub mean: Vec3,
    /// `⟨Sz²⟩ - ⟨Sz⟩²`.
    pub var_z: f64,
    /// Mean spin length in units of `S₀ = N/2`.
    pub contrast: f64,
}

/// Normalized pure state in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    n_atoms: usize,
    amps: Vec<Complex64>,
}

/// Coherent spin state of `n_atoms` pointing along `(polar, azimuth)`.
pub fn css(n_atoms: usize, polar: f64, azimuth: f64) -> Result<DickeState> {
    DickeState::coherent(n_atoms, polar, azimuth)
}

fn check_atoms(n_atoms: usize) -> Result<()> {
    if n_atoms == 0 {
        Err(Error::InvalidAtomNumber(n_atoms))
    } else {
        Ok(())
    }
}

fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn quad_form(u: Vec3, c: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += u[i] * c[i][j] * u[j];
        }
    }
    s
}

/// Rotation matrix for a right-handed rotation by `angle` about the unit vector `axis`.
pub fn rotation_matrix(axis: Vec3, angle: f64) -> Mat3 {
    let [x, y, z] = axis;
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

/// Orthonormal pair spanning the plane transverse to `mean`.
///
/// For a mean spin along `x̂` this is `(ŷ, ẑ)`.
pub fn transverse_basis(mean: Vec3) -> Result<(Vec3, Vec3)> {
    let len = norm3(mean);
    if len == 0.0 || !len.is_finite() {
        return Err(Error::DegenerateAxis);
    }
    let n = [mean[0] / len, mean[1] / len, mean[2] / len];
    let mut a = cross([0.0, 0.0, 1.0], n);
    let la = norm3(a);
    if la < 1e-12 {
        a = [1.0, 0.0, 0.0];
    } else {
        a = [a[0] / la, a[1] / la, a[2] / la];
    }
    Ok((a, cross(n, a)))
}

fn symmetric_eigen_min(c: [[f64; 2]; 2]) -> (f64, f64) {
    let tr = c[0][0] + c[1][1];
    let diff = c[0][0] - c[1][1];
    let r = (diff * diff / 4.0 + c[0][1] * c[1][0]).max(0.0).sqrt();
    (tr / 2.0 - r, tr / 2.0 + r)
}

impl DickeState {
    /// Coherent spin state along `(polar, azimuth)`; `polar = 0` is all atoms in `|↑⟩`.
    pub fn coherent(n_atoms: usize, polar: f64, azimuth: f64) -> Result<Self> {
        check_atoms(n_atoms)?;
        if !polar.is_finite() || !azimuth.is_finite() {
            return Err(invalid("angle", "must be finite"));
        }
        let (s, c) = (polar / 2.0).sin_cos();
        let n = n_atoms as u64;
        let amps = (0..=n)
            .map(|k| {
                // k atoms up: sqrt(C(N,k)) c^k (e^{iφ} s)^{N-k}
                if (c == 0.0 && k > 0) || (s == 0.0 && k < n) {
                    return Complex64::new(0.0, 0.0);
                }
                let mut log = 0.5 * ln_binomial(n, k);
                let mut sign = 1.0;
                if k > 0 {
                    log += k as f64 * c.abs().ln();
                    if c < 0.0 && k % 2 == 1 {
                        sign = -sign;
                    }
                }
                if k < n {
                    log += (n - k) as f64 * s.abs().ln();
                    if s < 0.0 && (n - k) % 2 == 1 {
                        sign = -sign;
                    }
                }
                Complex64::from_polar(sign * log.exp(), (n - k) as f64 * azimuth)
            })
            .collect();
        Ok(Self::normalized(n_atoms, amps))
    }

    /// Dicke state with exactly `n_up` atoms in `|↑⟩`.
    pub fn dicke(n_atoms: usize, n_up: usize) -> Result<Self> {
        check_atoms(n_atoms)?;
        if n_up > n_atoms {
            return Err(invalid("n_up", format!("{n_up} exceeds {n_atoms} atoms")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); n_atoms + 1];
        amps[n_up] = Complex64::new(1.0, 0.0);
        Ok(DickeState { n_atoms, amps })
    }

    /// Builds a state from amplitudes indexed by `k = m + N/2`, normalizing them.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidAtomNumber(amps.len().saturating_sub(1)));
        }
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(invalid("amplitudes", "norm must be positive and finite"));
        }
        Ok(Self::normalized(amps.len() - 1, amps))
    }

    fn normalized(n_atoms: usize, mut amps: Vec<Complex64>) -> Self {
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut amps {
            *c /= norm;
        }
        DickeState { n_atoms, amps }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Collective spin length `S₀ = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// Amplitudes indexed by the number of atoms in `|↑⟩`.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Magnetic quantum number of basis index `k`.
    pub fn m_of(&self, k: usize) -> f64 {
        k as f64 - self.spin()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Rotation by `angle` about the equatorial axis `(cos φ_a, sin φ_a, 0)`.
    pub fn rotate(&self, axis_azimuth: f64, angle: f64) -> Self {
        // n·S = V S_y V† with V = exp(i α S_z), α = π/2 - φ_a.
        let alpha = FRAC_PI_2 - axis_azimuth;
        let shifted: Vec<Complex64> = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(1.0, -alpha * self.m_of(k)))
            .collect();
        let mut out = wigner::apply_y_rotation(&shifted, angle);
        for (k, c) in out.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, alpha * self.m_of(k));
        }
        DickeState {
            n_atoms: self.n_atoms,
            amps: out,
        }
    }

    /// Rotation by `angle` about `z`, the phase ramp `c_m → exp(-i m θ) c_m`.
    pub fn rotate_z(&self, angle: f64) -> Self {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(1.0, -angle * self.m_of(k)))
            .collect();
        DickeState {
            n_atoms: self.n_atoms,
            amps,
        }
    }

    /// Rotation by `angle` about an arbitrary axis (need not be normalized).
    pub fn rotate_about(&self, axis: Vec3, angle: f64) -> Result<Self> {
        let len = norm3(axis);
        if len == 0.0 || !len.is_finite() {
            return Err(Error::DegenerateAxis);
        }
        let polar = (axis[2] / len).clamp(-1.0, 1.0).acos();
        let azimuth = axis[1].atan2(axis[0]);
        if (polar - FRAC_PI_2).abs() < 1e-15 {
            return Ok(self.rotate(azimuth, angle));
        }
        // R_n(α) = R_z(Φ) R_y(Θ) R_z(α) R_y(-Θ) R_z(-Φ)
        Ok(self
            .rotate_z(-azimuth)
            .rotate(FRAC_PI_2, -polar)
            .rotate_z(angle)
            .rotate(FRAC_PI_2, polar)
            .rotate_z(azimuth))
    }

    /// One-axis twisting: `c_m → exp(-i(shear·m² + linear·m)) c_m`.
    pub fn oat_evolve(&self, shear: f64, linear: f64) -> Self {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let m = self.m_of(k);
                c * Complex64::from_polar(1.0, -(shear * m * m + linear * m))
            })
            .collect();
        DickeState {
            n_atoms: self.n_atoms,
            amps,
        }
    }

    /// Twisting split in two halves around an `x` π pulse, which cancels the
    /// linear term. The result equals `R_x(π)·OAT(total_shear)` up to a global phase.
    pub fn echo_squeeze(&self, total_shear: f64, linear: f64) -> Self {
        self.oat_evolve(total_shear / 2.0, linear / 2.0)
            .rotate(0.0, PI)
            .oat_evolve(total_shear / 2.0, linear / 2.0)
    }

    fn raising_sums(&self) -> (Complex64, Complex64, Complex64) {
        let ladder = Ladder::new(self.amps.len());
        let n = self.amps.len();
        let mut sp = Complex64::new(0.0, 0.0);
        let mut sp2 = Complex64::new(0.0, 0.0);
        let mut sp_sz = Complex64::new(0.0, 0.0);
        for k in 0..n - 1 {
            let t = self.amps[k + 1].conj() * self.amps[k] * ladder.up[k];
            sp += t;
            sp_sz += t * (2.0 * self.m_of(k) + 1.0);
            if k + 2 < n {
                sp2 += self.amps[k + 2].conj() * self.amps[k] * (ladder.up[k + 1] * ladder.up[k]);
            }
        }
        (sp, sp2, sp_sz)
    }

    fn sz_moments(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (k, c) in self.amps.iter().enumerate() {
            let p = c.norm_sqr();
            let m = self.m_of(k);
            m1 += p * m;
            m2 += p * m * m;
        }
        (m1, m2)
    }

    /// Mean spin vector, `Sz` variance and contrast.
    pub fn moments(&self) -> SpinMoments {
        let (sp, _, _) = self.raising_sums();
        let (m1, m2) = self.sz_moments();
        let mean = [sp.re, sp.im, m1];
        SpinMoments {
            mean,
            var_z: (m2 - m1 * m1).max(0.0),
            contrast: (norm3(mean) / self.spin()).min(1.0),
        }
    }

    /// Symmetrized covariance matrix `½⟨{S_i, S_j}⟩ - ⟨S_i⟩⟨S_j⟩`.
    pub fn covariance(&self) -> Mat3 {
        let (sp, sp2, sp_sz) = self.raising_sums();
        let (m1, m2) = self.sz_moments();
        let s = self.spin();
        let casimir = s * (s + 1.0);
        let xx = 0.5 * (casimir - m2 + sp2.re);
        let yy = 0.5 * (casimir - m2 - sp2.re);
        let xy = 0.5 * sp2.im;
        let xz = 0.5 * sp_sz.re;
        let yz = 0.5 * sp_sz.im;
        let mean = [sp.re, sp.im, m1];
        let second = [[xx, xy, xz], [xy, yy, yz], [xz, yz, m2]];
        let mut cov = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] = second[i][j] - mean[i] * mean[j];
            }
        }
        cov
    }

    fn mean_axis(&self) -> Result<Vec3> {
        let mean = self.moments().mean;
        let len = norm3(mean);
        if len < 1e-12 * self.spin().max(1.0) {
            return Err(Error::DegenerateAxis);
        }
        Ok([mean[0] / len, mean[1] / len, mean[2] / len])
    }

    /// Variance of `Sz` after rotating the state by `angle` about its mean-spin axis.
    pub fn quadrature_variance(&self, angle: f64) -> Result<f64> {
        let axis = self.mean_axis()?;
        Ok(quadrature_from_cov(&self.covariance(), axis, angle))
    }

    /// Tomography angle minimizing [`quadrature_variance`](Self::quadrature_variance),
    /// returned as `(angle, variance)` with the angle in `[0, 2π)`.
    pub fn tomography_minimum(&self) -> Result<(f64, f64)> {
        let axis = self.mean_axis()?;
        let cov = self.covariance();
        Ok(extremum(|a| quadrature_from_cov(&cov, axis, a)))
    }

    /// Tomography angle maximizing the quadrature variance, as `(angle, variance)`.
    pub fn tomography_maximum(&self) -> Result<(f64, f64)> {
        let axis = self.mean_axis()?;
        let cov = self.covariance();
        let (a, v) = extremum(|a| -quadrature_from_cov(&cov, axis, a));
        Ok((a, -v))
    }

    /// Covariance of the two quadratures transverse to the mean spin, in the
    /// basis of [`transverse_basis`].
    pub fn transverse_covariance(&self) -> Result<[[f64; 2]; 2]> {
        let (a, b) = transverse_basis(self.moments().mean)?;
        let cov = self.covariance();
        let ab = {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += a[i] * cov[i][j] * b[j];
                }
            }
            s
        };
        Ok([[quad_form(a, &cov), ab], [ab, quad_form(b, &cov)]])
    }

    /// Smallest variance over all quadratures transverse to the mean spin.
    pub fn min_quadrature_variance(&self) -> Result<f64> {
        Ok(symmetric_eigen_min(self.transverse_covariance()?).0)
    }

    /// Projective `Sz` measurement; returns the outcome `m`.
    pub fn sample_projective<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (k, c) in self.amps.iter().enumerate() {
            let p = c.norm_sqr();
            if p > 0.0 {
                last = k;
            }
            acc += p;
            if u < acc {
                return self.m_of(k);
            }
        }
        self.m_of(last)
    }

    /// `|⟨self|other⟩|²`; zero if the atom numbers differ.
    pub fn fidelity(&self, other: &DickeState) -> f64 {
        if self.n_atoms != other.n_atoms {
            return 0.0;
        }
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Probability that a single atom, measured in the `z` basis, is found in `|↑⟩`.
    pub fn up_probability(&self) -> f64 {
        let n = self.n_atoms as f64;
        self.amps
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm_sqr() * k as f64 / n)
            .sum()
    }

    /// State of the remaining `N - 1` atoms after one atom is projected onto
    /// `|↑⟩` (`up = true`) or `|↓⟩`. Returns `None` when no atoms remain or
    /// the outcome has zero probability.
    pub fn remove_atom(&self, up: bool) -> Option<DickeState> {
        if self.n_atoms <= 1 {
            return None;
        }
        let n = self.n_atoms as f64;
        let amps: Vec<Complex64> = if up {
            (1..=self.n_atoms)
                .map(|k| self.amps[k] * (k as f64 / n).sqrt())
                .collect()
        } else {
            (0..self.n_atoms)
                .map(|k| self.amps[k] * ((self.n_atoms - k) as f64 / n).sqrt())
                .collect()
        };
        DickeState::from_amplitudes(amps).ok()
    }

    /// Writes the amplitudes as CSV with columns `m,re,im`.
    pub fn write_amplitudes_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,re,im")?;
        for (k, c) in self.amps.iter().enumerate() {
            writeln!(w, "{},{:e},{:e}", self.m_of(k), c.re, c.im)?;
        }
        Ok(())
    }
}

fn quadrature_from_cov(cov: &Mat3, axis: Vec3, angle: f64) -> f64 {
    let r = rotation_matrix(axis, angle);
    quad_form(r[2], cov)
}

/// Minimizes a smooth 2π-periodic function by a coarse scan plus golden-section refinement.
fn extremum(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = 720;
    let step = 2.0 * PI / n as f64;
    let (best, _) =
        (0..n)
            .map(|i| (i, f(i as f64 * step)))
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let (a, b) = golden_section(
        &f,
        (best as f64 - 1.0) * step,
        (best as f64 + 1.0) * step,
        1e-12,
    );
    let x = 0.5 * (a + b);
    (x.rem_euclid(2.0 * PI), f(x))
}

/// Golden-section search for a minimum of `f` on `[a, b]`; returns the final bracket.
pub(crate) fn golden_section(
    f: &impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests;
