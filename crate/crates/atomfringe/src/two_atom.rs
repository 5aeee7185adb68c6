//! Two pinned atoms coupled through the radiation field: superradiant and
//! subradiant eigenmodes, the photon emission spectrum over direction and
//! detuning, fringe parameters, visibility in both the unconstrained and the
//! physically reachable sense, and the visibility-concurrence deviation scan.
//!
//! Units are dimensionless throughout: detunings in units of the single-atom
//! width, lengths through u = k0 r. The state-independent overall rate
//! prefactor is dropped; visibility, pattern shifts and tomography are
//! invariant under it. `absolute_rate_prefactor` restores it on demand.

use crate::error::{Error, Result};
use crate::optim::{grid_refine_max_2d, parabolic_vertex};
use crate::states::TwoQubitBlochState;
use std::f64::consts::{PI, TAU};

/// sinc part of the exchange coupling, f(x) = sin(x)/x.
pub fn coupling_f(x: f64) -> f64 {
    x.sin() / x
}

/// cosine part of the exchange coupling, g(x) = cos(x)/x.
pub fn coupling_g(x: f64) -> f64 {
    x.cos() / x
}

/// The overall spectral-rate prefactor Gamma*omega / ((2 pi)^2 k0^3) that the
/// dimensionless spectra drop, for callers that need absolute rates.
pub fn absolute_rate_prefactor(gamma: f64, omega: f64, k0: f64) -> f64 {
    gamma * omega / ((TAU * TAU) * k0.powi(3))
}

/// Collective radiative data of an atom pair at dimensionless separation u:
/// mode detunings (units of Gamma, relative to the bare line) and widths.
#[derive(Debug, Clone, Copy)]
pub struct PairCoupling {
    pub u: f64,
    pub f: f64,
    pub g: f64,
    /// Detuning of the symmetric mode from the bare line: -g/2.
    pub omega_plus: f64,
    /// Detuning of the antisymmetric mode: +g/2.
    pub omega_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

impl PairCoupling {
    pub fn peak_separation_ratio(&self) -> (f64, f64) {
        let dw = (self.omega_plus - self.omega_minus).abs();
        (dw / self.gamma_plus, dw / self.gamma_minus)
    }
}

/// Eigenmodes of the coupled pair. Errors for u <= 0.
pub fn eigenmodes_two(u: f64) -> Result<PairCoupling> {
    if u <= 0.0 || !u.is_finite() {
        return Err(Error::Domain(format!("separation u = {u} must be positive")));
    }
    let f = coupling_f(u);
    let g = coupling_g(u);
    Ok(PairCoupling {
        u,
        f,
        g,
        omega_plus: -g / 2.0,
        omega_minus: g / 2.0,
        gamma_plus: 1.0 + f,
        gamma_minus: 1.0 - f,
    })
}

fn lorentz(delta: f64, center: f64, width: f64) -> f64 {
    1.0 / ((delta - center).powi(2) + (width / 2.0).powi(2))
}

/// Lorentzian weights (B+, B-) of the two collective lines at fringe phase
/// chi = k.r.
pub fn weights_b(state: &TwoQubitBlochState, u: f64, chi: f64) -> Result<(f64, f64)> {
    let pc = eigenmodes_two(u)?;
    let (sx, sy, sz) = (state.sx(), state.sy(), state.sz());
    let w = (sy - pc.g * sz) / (1.0 + pc.g * pc.g);
    let bp = 0.25 * ((1.0 + sx) * (1.0 + chi.cos()) + (1.0 + pc.f) * w * chi.sin());
    let bm = 0.25 * ((1.0 - sx) * (1.0 - chi.cos()) + (1.0 - pc.f) * w * chi.sin());
    Ok((bp, bm))
}

/// Spectral density of the emitted photon at detuning `omega` (units of
/// Gamma) and fringe phase `chi`, with the constant rate prefactor dropped.
pub fn emission_spectrum_two(
    state: &TwoQubitBlochState,
    u: f64,
    omega: f64,
    chi: f64,
) -> Result<f64> {
    let pc = eigenmodes_two(u)?;
    let (bp, bm) = weights_b(state, u, chi)?;
    Ok(bp * lorentz(omega, pc.omega_plus, pc.gamma_plus)
        + bm * lorentz(omega, pc.omega_minus, pc.gamma_minus))
}

/// Fringe parameters at fixed detuning. The xi/eta values carry the same 1/4
/// weight normalization as the B coefficients, so that
/// I(chi) = xi_plus + sqrt(xi_minus^2 + eta^2) cos(chi - theta0)
/// reproduces `emission_spectrum_two` pointwise; visibility and theta0 do not
/// depend on the normalization.
#[derive(Debug, Clone, Copy)]
pub struct FringeParams {
    pub xi_plus: f64,
    pub xi_minus: f64,
    pub eta: f64,
    /// Pattern shift, two-argument arctangent branch in (-pi, pi]; 0 when the
    /// pattern is flat (xi_minus = eta = 0).
    pub theta0: f64,
}

impl FringeParams {
    /// Fringe amplitude sqrt(xi_minus^2 + eta^2).
    pub fn amplitude(&self) -> f64 {
        self.xi_minus.hypot(self.eta)
    }

    pub fn intensity(&self, chi: f64) -> f64 {
        self.xi_plus + self.amplitude() * (chi - self.theta0).cos()
    }
}

/// Intensity profile against fringe phase with the extrema-bearing parameters.
#[derive(Debug, Clone)]
pub struct FringeProfile {
    pub params: FringeParams,
    pub samples: Vec<(f64, f64)>,
}

pub fn fringe_params_two(state: &TwoQubitBlochState, u: f64, omega: f64) -> Result<FringeParams> {
    let pc = eigenmodes_two(u)?;
    let lp = lorentz(omega, pc.omega_plus, pc.gamma_plus);
    let lm = lorentz(omega, pc.omega_minus, pc.gamma_minus);
    let (sx, sy, sz) = (state.sx(), state.sy(), state.sz());
    let w = (sy - pc.g * sz) / (1.0 + pc.g * pc.g);
    let xi_plus = 0.25 * ((1.0 + sx) * lp + (1.0 - sx) * lm);
    let xi_minus = 0.25 * ((1.0 + sx) * lp - (1.0 - sx) * lm);
    let eta = 0.25 * ((1.0 + pc.f) * lp + (1.0 - pc.f) * lm) * w;
    let theta0 = if xi_minus == 0.0 && eta == 0.0 { 0.0 } else { eta.atan2(xi_minus) };
    Ok(FringeParams { xi_plus, xi_minus, eta, theta0 })
}

/// Sampled fringe profile over `n` phases spanning the reachable interval
/// [-u, u] (capped at one full period for plotting when u > pi).
pub fn fringe_profile_two(
    state: &TwoQubitBlochState,
    u: f64,
    omega: f64,
    n: usize,
) -> Result<FringeProfile> {
    let params = fringe_params_two(state, u, omega)?;
    let span = u.min(PI);
    let n = n.max(2);
    let samples = (0..n)
        .map(|i| {
            let chi = -span + 2.0 * span * i as f64 / (n - 1) as f64;
            (chi, params.intensity(chi))
        })
        .collect();
    Ok(FringeProfile { params, samples })
}

/// Which extremization the visibility uses: `Formal` takes the paper's
/// unconstrained extrema cos(chi - theta0) = +-1; `Physical` restricts chi to
/// the reachable interval [-u, u] of actual emission directions. The two
/// agree for u >= pi.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibilityMode {
    Formal,
    Physical,
}

/// Extrema of cos over the arc [lo, hi] (radians, any width).
fn cos_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo >= TAU {
        return (-1.0, 1.0);
    }
    let mut max = lo.cos().max(hi.cos());
    let mut min = lo.cos().min(hi.cos());
    // peaks at 2k pi, troughs at (2k+1) pi inside the arc
    let k_hi = (hi / TAU).floor();
    if k_hi * TAU >= lo {
        max = 1.0;
    }
    let k_hi = ((hi - PI) / TAU).floor();
    if k_hi * TAU + PI >= lo {
        min = -1.0;
    }
    (min, max)
}

/// Far-field fringe visibility of the frequency-filtered pattern.
pub fn visibility_two(
    state: &TwoQubitBlochState,
    u: f64,
    omega: f64,
    mode: VisibilityMode,
) -> Result<f64> {
    let p = fringe_params_two(state, u, omega)?;
    let a = p.amplitude();
    match mode {
        VisibilityMode::Formal => Ok(a / p.xi_plus),
        VisibilityMode::Physical => {
            let (cmin, cmax) = cos_range(-u - p.theta0, u - p.theta0);
            let imax = p.xi_plus + a * cmax;
            let imin = p.xi_plus + a * cmin;
            Ok((imax - imin) / (imax + imin))
        }
    }
}

/// Brute-force visibility oracle: scan the fringe phase on a grid, polish the
/// extrema with three-point parabolas, and form (Imax-Imin)/(Imax+Imin).
/// Requires n_grid >= 1000. Formal mode scans one full period and is only
/// meaningful for u >= pi, matching the reachable-phase caveat.
pub fn visibility_two_bruteforce(
    state: &TwoQubitBlochState,
    u: f64,
    omega: f64,
    n_grid: usize,
    mode: VisibilityMode,
) -> Result<f64> {
    if n_grid < 1000 {
        return Err(Error::Domain(format!("n_grid = {n_grid} < 1000")));
    }
    let p = fringe_params_two(state, u, omega)?;
    let (lo, hi) = match mode {
        VisibilityMode::Formal => (0.0, TAU),
        VisibilityMode::Physical => (-u, u),
    };
    let h = (hi - lo) / n_grid as f64;
    let eval = |chi: f64| p.intensity(chi);
    let mut imax = f64::MIN;
    let mut imin = f64::MAX;
    let mut arg_max = lo;
    let mut arg_min = lo;
    for i in 0..=n_grid {
        let chi = lo + i as f64 * h;
        let v = eval(chi);
        if v > imax {
            imax = v;
            arg_max = chi;
        }
        if v < imin {
            imin = v;
            arg_min = chi;
        }
    }
    // parabolic polish, clamped to the scan window in physical mode
    let refine = |x0: f64, sign: f64, cur: f64| -> f64 {
        let xm = (x0 - h).max(lo);
        let xp = (x0 + h).min(hi);
        if xp - x0 < 0.5 * h || x0 - xm < 0.5 * h {
            return cur;
        }
        let (_, v) = parabolic_vertex(x0, h, sign * eval(xm), sign * eval(x0), sign * eval(xp));
        sign * v
    };
    let imax = refine(arg_max, 1.0, imax).max(imax);
    let imin = refine(arg_min, -1.0, imin).min(imin);
    Ok((imax - imin) / (imax + imin))
}

/// Result of maximizing |V - C| over the state angles at fixed purity and
/// separation.
#[derive(Debug, Clone, Copy)]
pub struct DeviationMax {
    pub max_dev: f64,
    pub theta_star: f64,
    pub phi_star: f64,
}

/// Configuration for the deterministic grid + refinement search.
#[derive(Debug, Clone, Copy)]
pub struct DeviationConfig {
    pub coarse: usize,
    pub refine_rounds: usize,
}

impl Default for DeviationConfig {
    fn default() -> Self {
        Self { coarse: 64, refine_rounds: 10 }
    }
}

/// Maximum deviation of the formal visibility from the concurrence over all
/// state angles (theta, phi) at fixed purity s, separation u and detuning.
/// The s = 0 state is angle-independent, so the analytic value is returned
/// directly with zero angles.
pub fn deviation_max(s: f64, u: f64, omega: f64, cfg: DeviationConfig) -> Result<DeviationMax> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("purity s = {s} outside [0,1]")));
    }
    eigenmodes_two(u)?;
    if s == 0.0 {
        let st = TwoQubitBlochState::new(0.0, 0.0, 0.0)?;
        let v = visibility_two(&st, u, omega, VisibilityMode::Formal)?;
        return Ok(DeviationMax { max_dev: v, theta_star: 0.0, phi_star: 0.0 });
    }
    let dev = |theta: f64, phi: f64| -> f64 {
        let st = TwoQubitBlochState::new(s, theta, phi).expect("grid point in range");
        let v = visibility_two(&st, u, omega, VisibilityMode::Formal)
            .expect("validated parameters");
        (v - s * theta.sin()).abs()
    };
    let wrapped = |theta: f64, phi: f64| dev(theta.clamp(0.0, PI), phi.rem_euclid(TAU));
    let (theta, phi, max_dev) =
        grid_refine_max_2d(wrapped, 0.0, PI, 0.0, TAU, cfg.coarse.max(64), cfg.refine_rounds);
    Ok(DeviationMax { max_dev, theta_star: theta.clamp(0.0, PI), phi_star: phi.rem_euclid(TAU) })
}

/// Closed-form deviation for the maximally mixed state,
/// 2u|sin u| / (1 + u^2); equals the formal visibility at s = 0, omega = 0.
pub fn s0_deviation(u: f64) -> f64 {
    2.0 * u * u.sin().abs() / (1.0 + u * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bloch(s: f64, th: f64, ph: f64) -> TwoQubitBlochState {
        TwoQubitBlochState::new(s, th, ph).unwrap()
    }

    #[test]
    fn eigenmode_limits() {
        let close = eigenmodes_two(1e-6).unwrap();
        assert!((close.gamma_plus - 2.0).abs() < 1e-6);
        assert!(close.gamma_minus.abs() < 1e-6);

        let at_pi = eigenmodes_two(PI).unwrap();
        assert_abs_diff_eq!(at_pi.gamma_plus, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at_pi.gamma_minus, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at_pi.omega_plus, 1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(at_pi.omega_minus, -1.0 / (2.0 * PI), epsilon = 1e-15);

        let far = eigenmodes_two(1e6).unwrap();
        assert!((far.gamma_plus - 1.0).abs() < 1e-5);
        assert!((far.gamma_minus - 1.0).abs() < 1e-5);
        assert!(far.omega_plus.abs() < 1e-5 && far.omega_minus.abs() < 1e-5);

        assert!(eigenmodes_two(0.0).is_err());
        assert!(eigenmodes_two(-1.0).is_err());
    }

    #[test]
    fn peak_separation_ratio_matches_printed_form() {
        for u in [0.7, 2.0, 9.3] {
            let pc = eigenmodes_two(u).unwrap();
            let (rp, rm) = pc.peak_separation_ratio();
            assert_abs_diff_eq!(rp, (pc.g / (1.0 + pc.f)).abs(), epsilon = 1e-14);
            assert_abs_diff_eq!(rm, (pc.g / (1.0 - pc.f)).abs(), epsilon = 1e-14);
        }
    }

    #[test]
    fn rate_prefactor_restores_absolute_units() {
        assert_abs_diff_eq!(
            absolute_rate_prefactor(1.0, 1.0, 1.0),
            1.0 / (TAU * TAU),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            absolute_rate_prefactor(2.0, 3.0, 2.0),
            6.0 / (TAU * TAU * 8.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn symmetric_state_has_no_subradiant_weight() {
        let st = bloch(1.0, PI / 2.0, 0.0); // sx = 1
        for chi in [-5.0, -1.0, 0.0, 0.3, 2.0, 6.0] {
            let (_, bm) = weights_b(&st, 1.7, chi).unwrap();
            // sz carries the cos(pi/2) rounding residual, ~1e-17
            assert!(bm.abs() < 1e-16, "bm = {bm:e}");
        }
        assert_abs_diff_eq!(
            visibility_two(&st, 2.3, 0.0, VisibilityMode::Formal).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mixed_state_weights() {
        // s = 0 at omega = 0: B+- = (1 +- cos chi)/4
        let st = bloch(0.0, 0.0, 0.0);
        for chi in [0.0, 0.7, 2.0, -1.3] {
            let (bp, bm) = weights_b(&st, 3.0, chi).unwrap();
            assert_abs_diff_eq!(bp, (1.0 + chi.cos()) / 4.0, epsilon = 1e-15);
            assert_abs_diff_eq!(bm, (1.0 - chi.cos()) / 4.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn spectrum_example_value_and_identity() {
        let st = bloch(0.5, PI / 3.0, PI / 4.0);
        let got = emission_spectrum_two(&st, TAU, 0.0, PI / 2.0).unwrap();
        // frozen from an independent evaluation of the B/Lorentzian route
        assert_abs_diff_eq!(got, 2.457386199097, epsilon = 1e-10);
        let p = fringe_params_two(&st, TAU, 0.0).unwrap();
        assert_abs_diff_eq!(got, p.intensity(PI / 2.0), epsilon = 1e-12);
    }

    #[test]
    fn pointwise_identity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let st = crate::measures::random_bloch(&mut rng);
            let u = rng.gen_range(0.05..40.0);
            let omega = rng.gen_range(-5.0..5.0);
            let chi = rng.gen_range(-20.0..20.0);
            let direct = emission_spectrum_two(&st, u, omega, chi).unwrap();
            let p = fringe_params_two(&st, u, omega).unwrap();
            assert!(direct >= -1e-12);
            assert!((direct - p.intensity(chi)).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_separation_limits() {
        let st = bloch(0.73, 1.2, 2.5);
        let v = visibility_two(&st, 1e6, 0.0, VisibilityMode::Formal).unwrap();
        assert!((v - 0.73 * 1.2f64.sin()).abs() < 2e-6);
        let p = fringe_params_two(&st, 1e6, 0.0).unwrap();
        assert!((p.theta0 - 2.5).abs() < 1e-5);

        // pure sy state: xi_minus ~ 0, eta > 0 so theta0 ~ pi/2
        let st = bloch(1.0, PI / 2.0, PI / 2.0);
        let p = fringe_params_two(&st, 1e6, 0.0).unwrap();
        assert!(p.eta > 0.0);
        assert!((p.theta0 - PI / 2.0).abs() < 1e-5);
    }

    #[test]
    fn s0_curve_and_flat_phase_convention() {
        for u in [0.3, PI / 2.0, 2.0, 7.7, 40.0] {
            let st = bloch(0.0, 0.0, 0.0);
            let v = visibility_two(&st, u, 0.0, VisibilityMode::Formal).unwrap();
            assert_abs_diff_eq!(v, s0_deviation(u), epsilon = 1e-13);
            let p = fringe_params_two(&st, u, 0.0).unwrap();
            assert_eq!(p.eta, 0.0);
            assert_eq!(p.theta0.abs() > PI / 2.0, p.xi_minus < 0.0);
        }
        // s = 0 at a point where xi_minus = eta = 0 exactly: u -> infinity limit
        // is approximated well before; the convention itself:
        let p = FringeParams { xi_plus: 1.0, xi_minus: 0.0, eta: 0.0, theta0: 0.0 };
        assert_eq!(p.theta0, 0.0);
    }

    #[test]
    fn s0_analytic_value_at_half_pi() {
        assert_abs_diff_eq!(s0_deviation(PI / 2.0), PI / (1.0 + PI * PI / 4.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s0_deviation(PI / 2.0), 0.906036700901, epsilon = 1e-12);
    }

    #[test]
    fn bruteforce_matches_formal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let st = crate::measures::random_bloch(&mut rng);
            let u = rng.gen_range(PI..30.0);
            let omega = rng.gen_range(-2.0..2.0);
            let v = visibility_two(&st, u, omega, VisibilityMode::Formal).unwrap();
            let b =
                visibility_two_bruteforce(&st, u, omega, 4096, VisibilityMode::Formal).unwrap();
            worst = worst.max((v - b).abs());
        }
        assert!(worst < 1e-9, "worst = {worst:.2e}");
        assert!(visibility_two_bruteforce(&bloch(0.0, 0.0, 0.0), 2.0, 0.0, 10, VisibilityMode::Formal)
            .is_err());
    }

    #[test]
    fn physical_mode_below_half_wavelength() {
        let st = bloch(0.0, 0.0, 0.0);
        let u = PI / 2.0;
        let formal = visibility_two(&st, u, 0.0, VisibilityMode::Formal).unwrap();
        let physical = visibility_two(&st, u, 0.0, VisibilityMode::Physical).unwrap();
        assert!(physical <= formal + 1e-15);
        let brute =
            visibility_two_bruteforce(&st, u, 0.0, 4096, VisibilityMode::Physical).unwrap();
        assert!((brute - physical).abs() < 1e-9);
        // sx = 1 stays at full visibility in either mode
        let sx1 = bloch(1.0, PI / 2.0, 0.0);
        for mode in [VisibilityMode::Formal, VisibilityMode::Physical] {
            assert!((visibility_two(&sx1, 5.0, 0.0, mode).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn physical_equals_formal_beyond_pi() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let st = crate::measures::random_bloch(&mut rng);
            let u = rng.gen_range(PI..20.0);
            let f = visibility_two(&st, u, 0.0, VisibilityMode::Formal).unwrap();
            let p = visibility_two(&st, u, 0.0, VisibilityMode::Physical).unwrap();
            assert_abs_diff_eq!(f, p, epsilon = 1e-12);
        }
    }

    #[test]
    fn profile_samples_are_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let st = crate::measures::random_bloch(&mut rng);
            let u = rng.gen_range(0.1..20.0);
            let profile = fringe_profile_two(&st, u, 0.0, 101).unwrap();
            assert!(profile.params.xi_plus > 0.0);
            assert_eq!(profile.samples.len(), 101);
            for &(chi, intensity) in &profile.samples {
                assert!(chi.abs() <= u.min(PI) + 1e-12);
                assert!(intensity >= -1e-12);
            }
        }
    }

    #[test]
    fn deviation_s0_matches_analytic() {
        for u in [0.1, 1.0, PI, 7.3, 40.0] {
            let d = deviation_max(0.0, u, 0.0, Default::default()).unwrap();
            assert_abs_diff_eq!(d.max_dev, s0_deviation(u), epsilon = 1e-12);
        }
    }

    #[test]
    fn deviation_purity_independent_at_g_zero() {
        // at u = (2m+1) pi/2 the theta -> 0 states already realize the s = 0
        // deviation, making the maximum purity independent
        for m in [0, 1, 2] {
            let u = (2 * m + 1) as f64 * PI / 2.0;
            let vals: Vec<f64> = [0.1, 0.5, 1.0]
                .iter()
                .map(|&s| deviation_max(s, u, 0.0, Default::default()).unwrap().max_dev)
                .collect();
            for v in &vals {
                assert!((v - vals[0]).abs() < 1e-7, "u={u}: {vals:?}");
            }
            assert!((vals[0] - s0_deviation(u)).abs() < 1e-7);
        }
    }

    #[test]
    fn deviation_minima_grow_with_purity() {
        for m in [1, 2] {
            let u = m as f64 * PI;
            let d1 = deviation_max(0.1, u, 0.0, Default::default()).unwrap().max_dev;
            let d5 = deviation_max(0.5, u, 0.0, Default::default()).unwrap().max_dev;
            let d10 = deviation_max(1.0, u, 0.0, Default::default()).unwrap().max_dev;
            assert!(d1 < d5 && d5 < d10, "u={u}: {d1} {d5} {d10}");
        }
    }

    #[test]
    fn visibility_decay_bound() {
        // |V - C| <= 2/u + 1e-3 for u >= 10
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let st = crate::measures::random_bloch(&mut rng);
            let u = rng.gen_range(10.0..2000.0);
            let v = visibility_two(&st, u, 0.0, VisibilityMode::Formal).unwrap();
            let c = st.s() * st.theta().sin();
            assert!((v - c).abs() <= 2.0 / u + 1e-3, "u={u} dev={}", (v - c).abs());
        }
    }

    proptest! {
        #[test]
        fn visibility_in_unit_interval(
            s in 0.0f64..1.0, ct in -1.0f64..1.0, ph in 0.0f64..TAU,
            u in 0.05f64..60.0, om in -6.0f64..6.0,
        ) {
            let st = bloch(s, ct.acos(), ph);
            let v = visibility_two(&st, u, om, VisibilityMode::Formal).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-9).contains(&v));
            let vp = visibility_two(&st, u, om, VisibilityMode::Physical).unwrap();
            prop_assert!(vp <= v + 1e-12);
        }

        #[test]
        fn spectrum_nonnegative(
            s in 0.0f64..1.0, ct in -1.0f64..1.0, ph in 0.0f64..TAU,
            u in 0.05f64..60.0, om in -6.0f64..6.0, chi in -30.0f64..30.0,
        ) {
            let st = bloch(s, ct.acos(), ph);
            let p = emission_spectrum_two(&st, u, om, chi).unwrap();
            prop_assert!(p >= -1e-12);
        }
    }
}
