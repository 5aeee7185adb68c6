//! State reconstruction from fringe data. Two-atom: the first-order scheme
//! built on the small-coupling expansion of the pattern and its shift, and an
//! exact linear least-squares fit of the full spectral model. Three-atom:
//! nonlinear least squares for the amplitude products and the two local
//! phases of a W-like state from far-field torus samples.
//!
//! At a single separation the two-atom pattern depends on the Bloch vector
//! only through sx and the combination w = sy - g sz, at every detuning and
//! phase; w is what any fit can determine. Reconstructed states use the
//! sz = 0 representative (sy = w) of that line, and `w` is always reported so
//! callers with prior knowledge of sz can undo the convention.

use crate::error::{Error, Result};
use crate::optim::levenberg_marquardt;
use crate::states::{TwoQubitBlochState, WLikeState};
use crate::two_atom::{eigenmodes_two, fringe_params_two};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Whether sampled intensities are absolute rates or known only up to a
/// positive scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Absolute,
    ShapeOnly,
}

/// One fringe measurement: phase chi = k.r, detuning, intensity, statistical
/// weight.
#[derive(Debug, Clone, Copy)]
pub struct FringeSample {
    pub chi: f64,
    pub omega: f64,
    pub intensity: f64,
    pub weight: f64,
}

impl FringeSample {
    pub fn new(chi: f64, omega: f64, intensity: f64) -> Self {
        Self { chi, omega, intensity, weight: 1.0 }
    }
}

/// Fringe samples taken at a fixed pair separation.
#[derive(Debug, Clone)]
pub struct FringeSampleSet {
    pub entries: Vec<FringeSample>,
    pub u: f64,
    pub normalization: Normalization,
}

impl FringeSampleSet {
    pub fn validate(&self) -> Result<()> {
        eigenmodes_two(self.u)?;
        if self.entries.iter().any(|e| e.intensity < 0.0 || !e.intensity.is_finite()) {
            return Err(Error::Domain("intensities must be finite and nonnegative".into()));
        }
        Ok(())
    }

    fn distinct_phases(&self) -> usize {
        let mut phases: Vec<f64> = self.entries.iter().map(|e| e.chi.rem_euclid(TAU)).collect();
        phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
        phases.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        phases.len()
    }
}

/// Synthesize noiseless samples of the full spectral model at the given
/// (chi, omega) points.
pub fn simulate_fringe_samples(
    state: &TwoQubitBlochState,
    u: f64,
    points: &[(f64, f64)],
    scale: f64,
) -> Result<FringeSampleSet> {
    let mut entries = Vec::with_capacity(points.len());
    for &(chi, omega) in points {
        let p = crate::two_atom::emission_spectrum_two(state, u, omega, chi)?;
        entries.push(FringeSample::new(chi, omega, scale * p));
    }
    Ok(FringeSampleSet { entries, u, normalization: Normalization::ShapeOnly })
}

/// First-order forward model of the pattern shift: the expansion of theta0 in
/// the couplings, used as the measurement model for the first-order scheme.
pub fn firstorder_theta0(state: &TwoQubitBlochState, u: f64) -> Result<f64> {
    let pc = eigenmodes_two(u)?;
    let (sx, sy, sz) = (state.sx(), state.sy(), state.sz());
    if sx.abs() < 1e-12 {
        return Err(Error::Domain("theta0 expansion is singular at sx = 0".into()));
    }
    let w = sy - pc.g * sz;
    Ok((w / sx - 2.0 * pc.f * sy / (sx * sx)).atan())
}

/// Pattern shift of the exact model at zero detuning.
pub fn exact_theta0(state: &TwoQubitBlochState, u: f64) -> Result<f64> {
    Ok(fringe_params_two(state, u, 0.0)?.theta0)
}

/// Outcome of the first-order reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct FirstOrderReconstruction {
    pub state: TwoQubitBlochState,
    pub sx: f64,
    /// The directly measured combination sy - g sz.
    pub w: f64,
    /// True when |f| was too small to separate sy from w via the pattern
    /// shift; the returned state is then the sz = 0 representative.
    pub degenerate_f: bool,
    /// Size of the neglected second-order terms, max(f,g)^2.
    pub truncation_scale: f64,
}

const FIRST_ORDER_F_FLOOR: f64 = 1e-6;

fn find_phase_sample(set: &FringeSampleSet, chi: f64) -> Result<f64> {
    set.entries
        .iter()
        .find(|e| (e.chi - chi).abs() < 1e-9 && e.omega.abs() < 1e-9)
        .map(|e| e.intensity)
        .ok_or_else(|| {
            Error::IllPosed(format!(
                "first-order scheme needs a zero-detuning sample at chi = {chi}"
            ))
        })
}

/// Three-step first-order reconstruction: sx from the chi = 0, pi pair,
/// w = sy - g sz from chi = +-pi/2, then sy from the measured pattern shift
/// through the first-order shift relation and sz from w. Requires u > pi.
pub fn tomography_two_firstorder(
    set: &FringeSampleSet,
    theta0_measured: f64,
    scheme_u: f64,
) -> Result<FirstOrderReconstruction> {
    set.validate()?;
    if (scheme_u - set.u).abs() > 1e-9 {
        return Err(Error::Domain("scheme separation disagrees with the sample set".into()));
    }
    if set.u <= PI {
        return Err(Error::Domain(format!(
            "first-order scheme needs u > pi (expansion regime), got {}",
            set.u
        )));
    }
    let pc = eigenmodes_two(set.u)?;
    let p0 = find_phase_sample(set, 0.0)?;
    let ppi = find_phase_sample(set, PI)?;
    let pp = find_phase_sample(set, FRAC_PI_2)?;
    let pm = find_phase_sample(set, -FRAC_PI_2)?;
    let sum0 = p0 + ppi;
    let sum1 = pp + pm;
    if sum0 <= 0.0 || sum1 <= 0.0 {
        return Err(Error::InsufficientData("vanishing total intensity".into()));
    }
    // the first-order model predicts equal sums at the two phase pairs
    if (sum0 - sum1).abs() / (sum0 + sum1) > 0.05 {
        return Err(Error::Infeasible(format!(
            "phase-pair intensity sums disagree by {:.1}%; data are inconsistent with the \
             first-order model",
            100.0 * (sum0 - sum1).abs() / (sum0 + sum1)
        )));
    }
    let q = (p0 - ppi) / sum0;
    let sx = (q + 2.0 * pc.f) / (1.0 + 2.0 * pc.f * q);
    let q2 = (pp - pm) / sum1;
    let w = q2 * (1.0 - 2.0 * pc.f * sx);
    if sx.abs() < 1e-9 {
        return Err(Error::IllPosed(
            "sx = 0 makes the pattern-shift relation singular; use the exact linear fit".into(),
        ));
    }

    let truncation_scale = pc.f.abs().max(pc.g.abs()).powi(2);
    let (sy, sz, degenerate_f) = if pc.f.abs() < FIRST_ORDER_F_FLOOR {
        // shift relation carries no sy information at f = 0
        (w, 0.0, true)
    } else {
        let sy = (w / sx - theta0_measured.tan()) * sx * sx / (2.0 * pc.f);
        (sy, (sy - w) / pc.g, false)
    };
    let norm = (sx * sx + sy * sy + sz * sz).sqrt();
    let shrink = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    let state = TwoQubitBlochState::from_bloch(sx * shrink, sy * shrink, sz * shrink)?;
    Ok(FirstOrderReconstruction { state, sx, w, degenerate_f, truncation_scale })
}

/// Outcome of the exact linear fit.
#[derive(Debug, Clone, Copy)]
pub struct ExactFitReconstruction {
    pub state: TwoQubitBlochState,
    pub sx: f64,
    /// The identifiable combination sy - g sz.
    pub w: f64,
    /// Fitted overall intensity scale.
    pub scale: f64,
    /// Root-mean-square residual relative to the fitted scale.
    pub residual: f64,
    /// True when noise pushed the solution outside the Bloch ball and it was
    /// projected back radially.
    pub projected: bool,
}

/// Exact tomography: the spectral model is linear in
/// (scale(1+sx), scale(1-sx), scale w), so a least-squares solve recovers sx
/// and w at any separation, including sub-wavelength ones. Needs >= 4 samples
/// spanning >= 3 distinct phases.
pub fn tomography_two_exact(set: &FringeSampleSet) -> Result<ExactFitReconstruction> {
    set.validate()?;
    if set.entries.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need >= 4 samples, got {}",
            set.entries.len()
        )));
    }
    if set.distinct_phases() < 3 {
        return Err(Error::IllPosed("samples span fewer than 3 distinct phases".into()));
    }
    let pc = eigenmodes_two(set.u)?;
    let lorentz =
        |d: f64, c: f64, wdt: f64| 1.0 / ((d - c).powi(2) + (wdt / 2.0).powi(2));
    let n = set.entries.len();
    let mut a = DMatrix::<f64>::zeros(n, 3);
    let mut b = DVector::<f64>::zeros(n);
    for (i, e) in set.entries.iter().enumerate() {
        let lp = lorentz(e.omega, pc.omega_plus, pc.gamma_plus);
        let lm = lorentz(e.omega, pc.omega_minus, pc.gamma_minus);
        let h = ((1.0 + pc.f) * lp + (1.0 - pc.f) * lm) / (1.0 + pc.g * pc.g);
        let sw = e.weight.sqrt();
        a[(i, 0)] = sw * 0.25 * lp * (1.0 + e.chi.cos());
        a[(i, 1)] = sw * 0.25 * lm * (1.0 - e.chi.cos());
        a[(i, 2)] = sw * 0.25 * h * e.chi.sin();
        b[i] = sw * e.intensity;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-10 * smax || !smin.is_finite() {
        return Err(Error::IllPosed(
            "design matrix is rank-deficient (samples at equivalent phases)".into(),
        ));
    }
    let sol = svd.solve(&b, 1e-12 * smax).map_err(|e| Error::Internal(e.to_string()))?;
    let (ap, am, vw) = (sol[0], sol[1], sol[2]);
    let scale = 0.5 * (ap + am);
    if scale <= 0.0 {
        return Err(Error::IllPosed("fitted intensity scale is not positive".into()));
    }
    let sx = (ap - am) / (ap + am);
    let w = vw / scale;
    let resid = (&a * &sol - &b).norm() / (n as f64).sqrt() / scale;

    let norm = (sx * sx + w * w).sqrt();
    let projected = norm > 1.0;
    let shrink = if projected { 1.0 / norm } else { 1.0 };
    let state = TwoQubitBlochState::from_bloch(sx * shrink, w * shrink, 0.0)?;
    Ok(ExactFitReconstruction { state, sx, w, scale, residual: resid, projected })
}

/// One far-field torus measurement for the three-atom scheme.
#[derive(Debug, Clone, Copy)]
pub struct TorusSample {
    pub theta1: f64,
    pub theta2: f64,
    pub intensity: f64,
    pub weight: f64,
}

impl TorusSample {
    pub fn new(theta1: f64, theta2: f64, intensity: f64) -> Self {
        Self { theta1, theta2, intensity, weight: 1.0 }
    }
}

/// Default sampling design on the torus: enough points to pin the three
/// amplitude products, both phases and the scale, given the normalization
/// constraint.
pub fn default_torus_design() -> Vec<(f64, f64)> {
    vec![
        (0.0, 0.0),
        (PI, 0.0),
        (0.0, PI),
        (FRAC_PI_2, FRAC_PI_2),
        (FRAC_PI_2, -FRAC_PI_2),
    ]
}

/// Synthesize noiseless torus samples from the far-field model.
pub fn simulate_torus_samples(
    state: &WLikeState,
    design: &[(f64, f64)],
    scale: f64,
) -> Vec<TorusSample> {
    design
        .iter()
        .map(|&(t1, t2)| {
            TorusSample::new(t1, t2, scale * crate::three_atom::farfield_intensity(state, t1, t2))
        })
        .collect()
}

/// Options for the three-atom reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct ThreeAtomOptions {
    /// Phase-grid multistarts per axis.
    pub phase_starts: usize,
    /// Allowed |sum c_j^2 - 1| after product closure.
    pub norm_tolerance: f64,
    pub max_iter: usize,
}

impl Default for ThreeAtomOptions {
    fn default() -> Self {
        Self { phase_starts: 6, norm_tolerance: 1e-6, max_iter: 200 }
    }
}

/// Outcome of the three-atom reconstruction.
#[derive(Debug, Clone)]
pub struct ThreeAtomReconstruction {
    pub state: WLikeState,
    /// Recovered pair products (c2 c3, c3 c1, c1 c2).
    pub products: [f64; 3],
    pub scale: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// Set when c3 is small enough to make the closure poorly conditioned.
    pub conditioning_warning: bool,
}

fn torus_model(x: &[f64], t1: f64, t2: f64) -> f64 {
    let (a, p1, p2, p3, f2, f3) = (x[0], x[1], x[2], x[3], x[4], x[5]);
    let t3 = -t1 - t2;
    a * (1.0
        + 2.0 * (p1 * (t1 - f2 + f3).cos() + p2 * (t2 - f3).cos() + p3 * (t3 + f2).cos()))
}

fn closure(p: [f64; 3]) -> [f64; 3] {
    [
        (p[1] * p[2] / p[0]).max(0.0).sqrt(),
        (p[2] * p[0] / p[1]).max(0.0).sqrt(),
        (p[0] * p[1] / p[2]).max(0.0).sqrt(),
    ]
}

fn wrap_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Reconstruct a W-like state (amplitudes and local phases) from far-field
/// torus samples by nonlinear least squares over
/// (scale, c2c3, c3c1, c1c2, phi2, phi3) with the state normalization as an
/// extra residual. Needs >= 5 samples at >= 5 distinct torus points.
pub fn tomography_three(
    samples: &[TorusSample],
    options: ThreeAtomOptions,
) -> Result<ThreeAtomReconstruction> {
    if samples.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "need >= 5 torus samples, got {}",
            samples.len()
        )));
    }
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.theta1.rem_euclid(TAU), s.theta2.rem_euclid(TAU)))
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
    if pts.len() < 5 {
        return Err(Error::IllPosed(format!(
            "only {} distinct torus points; the design cannot separate products and phases",
            pts.len()
        )));
    }
    if samples.iter().any(|s| !s.intensity.is_finite() || s.intensity < 0.0) {
        return Err(Error::Domain("intensities must be finite and nonnegative".into()));
    }

    let mean_i: f64 =
        samples.iter().map(|s| s.intensity).sum::<f64>() / samples.len() as f64;
    if mean_i <= 0.0 {
        return Err(Error::InsufficientData("all intensities vanish".into()));
    }
    const NORM_WEIGHT: f64 = 10.0;
    let resid = |x: &[f64]| -> Vec<f64> {
        let mut r: Vec<f64> = samples
            .iter()
            .map(|s| s.weight.sqrt() * (torus_model(x, s.theta1, s.theta2) - s.intensity))
            .collect();
        let c = closure([x[1].abs().max(1e-12), x[2].abs().max(1e-12), x[3].abs().max(1e-12)]);
        r.push(NORM_WEIGHT * mean_i * (c.iter().map(|v| v * v).sum::<f64>() - 1.0));
        r
    };

    let starts = options.phase_starts.max(2);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for i in 0..starts {
        for j in 0..starts {
            let f2 = -PI + TAU * (i as f64 + 0.5) / starts as f64;
            let f3 = -PI + TAU * (j as f64 + 0.5) / starts as f64;
            let x0 = [mean_i, 0.25, 0.25, 0.25, f2, f3];
            let (x, cost) = levenberg_marquardt(|p| resid(p), &x0, options.max_iter, 1e-14);
            if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                best = Some((x, cost));
            }
            if best.as_ref().is_some_and(|(_, c)| *c < 1e-22) {
                break;
            }
        }
    }
    let (mut x, cost) = best.expect("at least one start ran");

    // gauge: pi shifts of either phase flip pairs of product signs
    let gauges: [(f64, f64, [f64; 3]); 4] = [
        (0.0, 0.0, [1.0, 1.0, 1.0]),
        (PI, 0.0, [-1.0, 1.0, -1.0]),
        (0.0, PI, [-1.0, -1.0, 1.0]),
        (PI, PI, [1.0, -1.0, -1.0]),
    ];
    let applied = gauges.iter().find(|(_, _, signs)| {
        (0..3).all(|k| x[1 + k] * signs[k] > 0.0)
    });
    match applied {
        Some((d2, d3, signs)) => {
            for k in 0..3 {
                x[1 + k] *= signs[k];
            }
            x[4] = wrap_pi(x[4] + d2);
            x[5] = wrap_pi(x[5] + d3);
        }
        None => {
            return Err(Error::Infeasible(
                "a recovered amplitude product is nonpositive in every phase gauge".into(),
            ));
        }
    }
    let products = [x[1], x[2], x[3]];
    if products.iter().any(|&p| p <= 1e-12) {
        return Err(Error::Infeasible("recovered amplitude product is zero".into()));
    }
    let c = closure(products);
    let norm2: f64 = c.iter().map(|v| v * v).sum();
    if (norm2 - 1.0).abs() > options.norm_tolerance {
        return Err(Error::Infeasible(format!(
            "closure normalization residual {:.3e} exceeds tolerance",
            (norm2 - 1.0).abs()
        )));
    }
    let n = norm2.sqrt();
    let state = WLikeState::with_phases(c[0] / n, c[1] / n, c[2] / n, wrap_pi(x[4]), wrap_pi(x[5]))?;
    let residual = (cost / samples.len() as f64).sqrt() / x[0].abs().max(1e-300);
    Ok(ThreeAtomReconstruction {
        conditioning_warning: c[2] / n < 1e-3,
        state,
        products,
        scale: x[0],
        residual,
    })
}
