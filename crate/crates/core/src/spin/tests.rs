use super::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type C = Complex64;

/// Brute-force simulation of N ≤ 4 distinguishable spins in the full 2^N space.
/// Bit i of a basis index set means atom i is in |↑⟩.
struct Product {
    n: usize,
    psi: Vec<C>,
}

impl Product {
    fn coherent(n: usize, polar: f64, azimuth: f64) -> Self {
        let up = C::new((polar / 2.0).cos(), 0.0);
        let down = C::from_polar((polar / 2.0).sin(), azimuth);
        let psi = (0..1usize << n)
            .map(|b| {
                (0..n).fold(C::new(1.0, 0.0), |acc, i| {
                    acc * if b >> i & 1 == 1 { up } else { down }
                })
            })
            .collect();
        Product { n, psi }
    }

    /// exp(-i θ n·σ/2) on every atom.
    fn rotate(&mut self, axis: Vec3, angle: f64) {
        let (s, c) = (angle / 2.0).sin_cos();
        let i = C::new(0.0, 1.0);
        // Matrix in the (↑, ↓) basis.
        let u_uu = C::new(c, 0.0) - i * s * axis[2];
        let u_dd = C::new(c, 0.0) + i * s * axis[2];
        let u_ud = -i * s * C::new(axis[0], -axis[1]);
        let u_du = -i * s * C::new(axis[0], axis[1]);
        for atom in 0..self.n {
            let bit = 1usize << atom;
            for b in 0..self.psi.len() {
                if b & bit == 0 {
                    let down = self.psi[b];
                    let up = self.psi[b | bit];
                    self.psi[b | bit] = u_uu * up + u_ud * down;
                    self.psi[b] = u_du * up + u_dd * down;
                }
            }
        }
    }

    fn oat(&mut self, shear: f64, linear: f64) {
        let half = self.n as f64 / 2.0;
        for (b, a) in self.psi.iter_mut().enumerate() {
            let m = b.count_ones() as f64 - half;
            *a *= C::from_polar(1.0, -(shear * m * m + linear * m));
        }
    }

    fn symmetric(&self) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.n + 1];
        let mut counts = vec![0usize; self.n + 1];
        for (b, a) in self.psi.iter().enumerate() {
            let k = b.count_ones() as usize;
            out[k] += a;
            counts[k] += 1;
        }
        for (o, c) in out.iter_mut().zip(counts) {
            *o /= (c as f64).sqrt();
        }
        out
    }

    fn expect(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.psi
            .iter()
            .enumerate()
            .map(|(b, a)| a.norm_sqr() * f(b))
            .sum()
    }
}

fn assert_amps_close(a: &[C], b: &[C], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).norm() < tol, "{x} vs {y}");
    }
}

fn equatorial(phi: f64) -> Vec3 {
    [phi.cos(), phi.sin(), 0.0]
}

#[test]
fn css_pole_and_binomial_weights() {
    let s = css(2, 0.0, 0.0).unwrap();
    // k = n_up: index 2 is m = +1.
    assert_amps_close(
        s.amplitudes(),
        &[C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)],
        1e-15,
    );
    let s = css(4, FRAC_PI_2, 0.0).unwrap();
    for (k, c) in s.amplitudes().iter().enumerate() {
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0][k];
        assert!((c.norm() - f64::sqrt(binom) / 4.0).abs() < 1e-14);
    }
    assert!(matches!(css(0, 0.0, 0.0), Err(Error::InvalidAtomNumber(0))));
}

#[test]
fn css_matches_product_oracle() {
    for n in 1..=4 {
        for &(t, p) in &[(0.3, 0.0), (FRAC_PI_2, 1.0), (2.9, -2.0), (PI, 0.4)] {
            let oracle = Product::coherent(n, t, p).symmetric();
            assert_amps_close(css(n, t, p).unwrap().amplitudes(), &oracle, 1e-12);
        }
    }
}

#[test]
fn equatorial_css_variance_is_binomial() {
    for n in [1, 10, 350] {
        let m = css(n, FRAC_PI_2, 0.0).unwrap().moments();
        assert!((m.var_z - n as f64 / 4.0).abs() < 1e-9 * n as f64);
        assert!((m.mean[0] - n as f64 / 2.0).abs() < 1e-9 * n as f64);
    }
}

#[test]
fn composite_sequences_match_product_oracle() {
    for n in 1..=4 {
        let mut oracle = Product::coherent(n, 0.7, 0.2);
        oracle.rotate(equatorial(0.4), 1.3);
        oracle.oat(0.45, 0.8);
        oracle.rotate(equatorial(2.1), -2.4);
        oracle.rotate([0.0, 0.0, 1.0], 0.9);
        let state = css(n, 0.7, 0.2)
            .unwrap()
            .rotate(0.4, 1.3)
            .oat_evolve(0.45, 0.8)
            .rotate(2.1, -2.4)
            .rotate_z(0.9);
        assert_amps_close(state.amplitudes(), &oracle.symmetric(), 1e-10);
    }
}

#[test]
fn y_rotation_of_three_atoms_matches_oracle() {
    let mut oracle = Product::coherent(3, FRAC_PI_2, 0.0);
    oracle.rotate([0.0, 1.0, 0.0], 0.4);
    let state = css(3, FRAC_PI_2, 0.0).unwrap().rotate(FRAC_PI_2, 0.4);
    assert_amps_close(state.amplitudes(), &oracle.symmetric(), 1e-12);
}

#[test]
fn arbitrary_axis_rotation_matches_oracle() {
    let axis = [0.3, -0.5, 0.81];
    let len = norm3(axis);
    let unit = [axis[0] / len, axis[1] / len, axis[2] / len];
    for n in 1..=4 {
        let mut oracle = Product::coherent(n, 1.1, 0.3);
        oracle.rotate(unit, 2.2);
        let state = css(n, 1.1, 0.3).unwrap().rotate_about(axis, 2.2).unwrap();
        assert_amps_close(state.amplitudes(), &oracle.symmetric(), 1e-10);
    }
}

#[test]
fn exact_pi_pulses_match_oracle() {
    for n in 1..=4 {
        for turns in [-3.0, -1.0, 1.0, 2.0, 4.0] {
            let mut oracle = Product::coherent(n, 0.9, 0.5);
            oracle.rotate(equatorial(0.0), turns * PI);
            let state = css(n, 0.9, 0.5).unwrap().rotate(0.0, turns * PI);
            assert_amps_close(state.amplitudes(), &oracle.symmetric(), 1e-12);
        }
    }
}

#[test]
fn moments_match_product_oracle() {
    let n = 4;
    let state = css(n, FRAC_PI_2, 0.0).unwrap().echo_squeeze(0.3, 0.0);
    let mut oracle = Product::coherent(n, FRAC_PI_2, 0.0);
    oracle.oat(0.15, 0.0);
    oracle.rotate([1.0, 0.0, 0.0], PI);
    oracle.oat(0.15, 0.0);
    assert_amps_close(state.amplitudes(), &oracle.symmetric(), 1e-10);
    let half = n as f64 / 2.0;
    let sz = |b: usize| b.count_ones() as f64 - half;
    let m1 = oracle.expect(sz);
    let m2 = oracle.expect(|b| sz(b).powi(2));
    let m = state.moments();
    assert!((m.mean[2] - m1).abs() < 1e-10);
    assert!((m.var_z - (m2 - m1 * m1)).abs() < 1e-10);
}

/// Dense spin matrices on the symmetric subspace for the covariance oracle.
fn dense_spin(n: usize) -> [DMatrix<C>; 3] {
    let dim = n + 1;
    let s = n as f64 / 2.0;
    let mut sp = DMatrix::<C>::zeros(dim, dim);
    for k in 0..n {
        let m = k as f64 - s;
        sp[(k + 1, k)] = C::new(((s - m) * (s + m + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * C::new(0.5, 0.0);
    let sy = (&sp - &sm) * C::new(0.0, -0.5);
    let sz = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C::new(i as f64 - s, 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    });
    [sx, sy, sz]
}

#[test]
fn covariance_matches_dense_operators() {
    let n = 12;
    let state = css(n, 1.2, 0.4)
        .unwrap()
        .oat_evolve(0.17, 0.3)
        .rotate(1.0, 0.6);
    let psi = DVector::from_vec(state.amplitudes().to_vec());
    let ops = dense_spin(n);
    let ev = |a: &DMatrix<C>| (psi.adjoint() * a * &psi)[(0, 0)].re;
    let cov = state.covariance();
    for i in 0..3 {
        for j in 0..3 {
            let anti = &ops[i] * &ops[j] + &ops[j] * &ops[i];
            let expect = 0.5 * ev(&anti) - ev(&ops[i]) * ev(&ops[j]);
            assert!(
                (cov[i][j] - expect).abs() < 1e-10,
                "({i},{j}) {} vs {expect}",
                cov[i][j]
            );
        }
    }
}

#[test]
fn twisted_min_quadrature_matches_dense_exponential() {
    let n = 20;
    let ops = dense_spin(n);
    // exp(-i q Sz²) through the eigen-decomposition of the Hermitian matrix Sz².
    let sz2 = (&ops[2] * &ops[2]).map(|c| c.re);
    let eig = nalgebra::SymmetricEigen::new(sz2);
    let phases = DMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == j {
            C::from_polar(1.0, -0.1 * eig.eigenvalues[i])
        } else {
            C::new(0.0, 0.0)
        }
    });
    let v = eig.eigenvectors.map(|x| C::new(x, 0.0));
    let u = &v * phases * v.adjoint();
    let psi0 = DVector::from_vec(css(n, FRAC_PI_2, 0.0).unwrap().amplitudes().to_vec());
    let psi = &u * psi0;
    let ev = |a: &DMatrix<C>| (psi.adjoint() * a * &psi)[(0, 0)].re;
    let cyy = ev(&(&ops[1] * &ops[1])) - ev(&ops[1]).powi(2);
    let czz = ev(&(&ops[2] * &ops[2])) - ev(&ops[2]).powi(2);
    let cyz = 0.5 * ev(&(&ops[1] * &ops[2] + &ops[2] * &ops[1])) - ev(&ops[1]) * ev(&ops[2]);
    let oracle = 0.5 * (cyy + czz) - (0.25 * (cyy - czz).powi(2) + cyz * cyz).sqrt();
    let state = css(n, FRAC_PI_2, 0.0).unwrap().oat_evolve(0.1, 0.0);
    let (_, tomo) = state.tomography_minimum().unwrap();
    assert!((state.min_quadrature_variance().unwrap() - oracle).abs() < 1e-9);
    assert!((tomo - oracle).abs() < 1e-9);
}

#[test]
fn quadrature_variance_matches_explicit_rotation() {
    let state = css(60, FRAC_PI_2, 0.3).unwrap().echo_squeeze(0.05, 0.0);
    let mean = state.moments().mean;
    for &alpha in &[0.0, 0.4, 1.9, 3.3, 5.5] {
        let rotated = state.rotate_about(mean, alpha).unwrap();
        let direct = rotated.moments().var_z;
        assert!((state.quadrature_variance(alpha).unwrap() - direct).abs() < 1e-9);
    }
}

#[test]
fn css_quadratures_are_isotropic() {
    let state = css(40, FRAC_PI_2, 0.0).unwrap();
    for i in 0..16 {
        let v = state.quadrature_variance(i as f64 * 0.4).unwrap();
        assert!((v - 10.0).abs() < 1e-9);
    }
}

#[test]
fn degenerate_axis_is_reported() {
    // Dicke state |m = 0⟩ has no mean spin.
    let state = DickeState::dicke(4, 2).unwrap();
    assert!(matches!(
        state.quadrature_variance(0.0),
        Err(Error::DegenerateAxis)
    ));
}

#[test]
fn pole_state_always_samples_top() {
    let state = css(7, 0.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        assert_eq!(state.sample_projective(&mut rng), 3.5);
    }
}

fn sample_stats(state: &DickeState, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| state.sample_projective(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var)
}

#[test]
fn sampling_reproduces_binomial_variance() {
    let (_, var) = sample_stats(&css(350, FRAC_PI_2, 0.0).unwrap(), 10_000, 3);
    assert!((var / 87.5 - 1.0).abs() < 0.05);
}

#[test]
fn sampling_matches_squeezed_moments() {
    let state = css(200, FRAC_PI_2, 0.0).unwrap().echo_squeeze(0.03, 0.0);
    let (alpha, _) = state.tomography_minimum().unwrap();
    let oriented = state.rotate(0.0, alpha);
    let exact = oriented.moments();
    let n = 10_000;
    let (mean, var) = sample_stats(&oriented, n, 11);
    let fourth = oriented
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm_sqr() * (oriented.m_of(k) - exact.mean[2]).powi(4))
        .sum::<f64>();
    let se_mean = (exact.var_z / n as f64).sqrt();
    let se_var = ((fourth - exact.var_z.powi(2)) / n as f64).sqrt();
    assert!((mean - exact.mean[2]).abs() < 4.0 * se_mean);
    assert!((var - exact.var_z).abs() < 4.0 * se_var);
    assert!((exact.var_z - state.quadrature_variance(alpha).unwrap()).abs() < 1e-8);
}

#[test]
fn echo_without_twist_is_a_pi_pulse() {
    let s = css(30, 1.0, 0.7).unwrap();
    let f = s.echo_squeeze(0.0, 2.3).fidelity(&s.rotate(0.0, PI));
    assert!(f > 1.0 - 1e-12);
}

#[test]
fn echo_cancels_linear_term() {
    let s = css(100, FRAC_PI_2, 0.0).unwrap();
    let f = s
        .echo_squeeze(0.05, 5.0)
        .fidelity(&s.echo_squeeze(0.05, 0.0));
    assert!(f >= 1.0 - 1e-9);
}

#[test]
fn zero_twist_is_identity() {
    let s = css(25, 0.8, 0.1).unwrap();
    assert_eq!(s.oat_evolve(0.0, 0.0), s);
}

#[test]
fn rotation_inverse_restores_state() {
    let s = css(80, 0.9, 0.3).unwrap().oat_evolve(0.04, 0.0);
    let back = s.rotate(0.0, 0.77).rotate(0.0, -0.77);
    assert!(back.fidelity(&s) >= 1.0 - 1e-10);
}

#[test]
fn pi_half_pulse_puts_pole_on_equator() {
    let n = 50;
    let m = css(n, 0.0, 0.0).unwrap().rotate(0.0, FRAC_PI_2).moments();
    assert!(m.mean[2].abs() < 1e-10);
    assert!((norm3(m.mean) - 25.0).abs() < 1e-9);
}

#[test]
fn remove_atom_matches_partial_measurement() {
    let n = 4;
    let state = css(n, 1.0, 0.3).unwrap().oat_evolve(0.3, 0.0);
    let mut oracle = Product::coherent(n, 1.0, 0.3);
    oracle.oat(0.3, 0.0);
    // Project atom 0 onto |↑⟩ and keep the other three.
    let reduced: Vec<C> = (0..1usize << (n - 1))
        .map(|b| oracle.psi[(b << 1) | 1])
        .collect();
    let p_up: f64 = reduced.iter().map(|c| c.norm_sqr()).sum();
    assert!((state.up_probability() - p_up).abs() < 1e-12);
    let rest = Product {
        n: n - 1,
        psi: reduced.iter().map(|c| c / p_up.sqrt()).collect(),
    };
    let after = state.remove_atom(true).unwrap();
    assert!(after.fidelity(&DickeState::from_amplitudes(rest.symmetric()).unwrap()) > 1.0 - 1e-12);
}

#[test]
fn amplitude_dump_has_header() {
    let mut buf = Vec::new();
    css(2, 0.0, 0.0)
        .unwrap()
        .write_amplitudes_csv(&mut buf)
        .unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("m,re,im\n-1,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn optimal_shear_for_a_pair_is_half() {
    let (_, xi2) = optimal_shear(2).unwrap();
    assert!((xi2 - 0.5).abs() < 1e-6, "{xi2}");
}

fn ramsey_parameter_dense(n: usize, q: f64) -> f64 {
    let ops = dense_spin(n);
    let s = n as f64 / 2.0;
    let psi0 = css(n, FRAC_PI_2, 0.0).unwrap();
    let psi = DVector::from_fn(n + 1, |k, _| {
        psi0.amplitudes()[k] * C::from_polar(1.0, -q * (k as f64 - s).powi(2))
    });
    let ev = |a: &DMatrix<C>| (psi.adjoint() * a * &psi)[(0, 0)].re;
    let sx = ev(&ops[0]);
    let cyy = ev(&(&ops[1] * &ops[1])) - ev(&ops[1]).powi(2);
    let czz = ev(&(&ops[2] * &ops[2])) - ev(&ops[2]).powi(2);
    let cyz = 0.5 * ev(&(&ops[1] * &ops[2] + &ops[2] * &ops[1])) - ev(&ops[1]) * ev(&ops[2]);
    let vmin = 0.5 * (cyy + czz) - (0.25 * (cyy - czz).powi(2) + cyz * cyz).sqrt();
    n as f64 * vmin / (sx * sx)
}

#[test]
fn optimal_shear_matches_fine_dense_scan() {
    let n = 20;
    let (q, xi2) = optimal_shear(n).unwrap();
    let (q_ref, xi2_ref) = (1..=16_000)
        .map(|i| i as f64 * 1e-5)
        .map(|q| (q, ramsey_parameter_dense(n, q)))
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    assert!((q - q_ref).abs() < 1e-4, "{q} vs {q_ref}");
    assert!(
        xi2 <= xi2_ref + 1e-9 && xi2 > xi2_ref - 1e-6,
        "{xi2} vs {xi2_ref}"
    );
}

#[test]
fn optimal_squeezing_improves_with_atom_number() {
    let xs: Vec<f64> = [10, 50, 200]
        .iter()
        .map(|&n| optimal_shear(n).unwrap().1)
        .collect();
    assert!(xs[0] > xs[1] && xs[1] > xs[2]);
}

#[test]
fn optimal_squeezing_at_350_atoms() {
    // Frozen from an independent dense scan.
    let (q, xi2) = optimal_shear(350).unwrap();
    assert!((q - 0.022_728_6).abs() < 1e-5, "{q}");
    assert!((crate::constants::to_db(xi2) + 15.962_5).abs() < 0.01);
    let twisted = css(350, FRAC_PI_2, 0.0).unwrap().echo_squeeze(q, 0.0);
    let ratio = twisted.min_quadrature_variance().unwrap() / 87.5;
    assert!((crate::constants::to_db(ratio) + 16.745_6).abs() < 0.01);
}

#[test]
fn calibration_hits_targets() {
    let target = crate::constants::from_db(-9.0);
    let cal = calibrate_squeezing(300, target, Some(0.85), 0.95).unwrap();
    assert!((cal.noise_ratio() - target).abs() < 1e-8);
    let contrast = (1.0 - cal.depolarization) * cal.contrast_pure * 0.95;
    assert!((contrast - 0.85).abs() < 1e-8);
    assert!(cal.depolarization > 0.0 && cal.depolarization < 0.2);
    let pure = calibrate_squeezing(300, target, None, 1.0).unwrap();
    assert_eq!(pure.depolarization, 0.0);
    assert!((pure.noise_ratio_pure - target).abs() < 1e-8);
    assert!(pure.shear < cal.shear);
    assert!(calibrate_squeezing(300, target, Some(0.99), 0.95).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operations_preserve_norm(n in 1usize..120, t in 0.0..PI, p in -PI..PI,
                                axis in -PI..PI, angle in -7.0..7.0f64,
                                shear in -0.5..0.5f64, lin in -3.0..3.0f64) {
        let s = css(n, t, p).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        let s = s.rotate(axis, angle);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        let s = s.echo_squeeze(shear, lin);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        let s = s.rotate_about([p.cos(), 0.3, t], angle).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn twisting_keeps_populations(n in 1usize..200, shear in -2.0..2.0f64, lin in -5.0..5.0f64) {
        let s = css(n, 1.3, 0.2).unwrap();
        let t = s.oat_evolve(shear, lin);
        for (a, b) in s.amplitudes().iter().zip(t.amplitudes()) {
            prop_assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn echo_cancellation_holds(n in 2usize..150, shear in 0.0..0.3f64, lin in -10.0..10.0f64) {
        let s = css(n, FRAC_PI_2, 0.0).unwrap();
        prop_assert!(s.echo_squeeze(shear, lin).fidelity(&s.echo_squeeze(shear, 0.0)) >= 1.0 - 1e-9);
    }

    #[test]
    fn uncertainty_area_bound(n in 4usize..200, shear in 0.0..0.2f64, angle in 0.0..1.0f64) {
        let s = css(n, FRAC_PI_2, 0.0).unwrap().echo_squeeze(shear, 0.0).rotate(0.0, angle);
        if s.moments().contrast > 1e-3 {
            let (_, lo) = s.tomography_minimum().unwrap();
            let (_, hi) = s.tomography_maximum().unwrap();
            let bound = (norm3(s.moments().mean) / 2.0).powi(2);
            prop_assert!(lo * hi >= bound * (1.0 - 1e-6));
        }
    }

    #[test]
    fn backends_agree_at_high_contrast(n in 50usize..500, frac in 0.0..1.0f64) {
        // Shears keeping the contrast above 0.9.
        let state = css(n, FRAC_PI_2, 0.0).unwrap();
        let q = frac * 0.6 / (n as f64).powf(0.5) / 10.0;
        let exact = state.oat_evolve(q, 0.0);
        prop_assume!(exact.moments().contrast > 0.9);
        let g = gaussian_shear(&gaussian_from(&state).unwrap(), q, n).unwrap();
        let v = exact.min_quadrature_variance().unwrap();
        prop_assert!((g.min_variance() - v).abs() / v < 0.05, "n={} q={} {} vs {}", n, q, g.min_variance(), v);
    }
}
