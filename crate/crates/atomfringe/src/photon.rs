//! Monte Carlo sampling of spontaneously emitted photons from the exact
//! spectral distributions, fringe histograms with Poisson errors, and a
//! visibility estimator with bootstrap uncertainties.
//!
//! Sampling is exact: directions are rejection-sampled under a constant
//! envelope built from the analytic fringe maxima, and detunings come from
//! the positive-part Lorentzian mixture with a final acceptance step, so
//! negative interference weights never bias the draw. Spectral draws are
//! truncated to +-50 Gamma around each line center, which covers more than
//! 0.987 of either Lorentzian. Streams are chunked, each chunk seeded by a
//! SplitMix64 hash of (seed, chunk index); outputs are identical for any
//! thread count.

use crate::error::{Error, Result};
use crate::states::{TwoQubitBlochState, WLikeState};
use crate::three_atom::{eigenmodes_three, weights_d, TriangleGeometry};
use crate::two_atom::{eigenmodes_two, weights_b};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

/// Half-width of the spectral sampling window in units of Gamma.
pub const SPECTRAL_WINDOW: f64 = 50.0;

const CHUNK: usize = 8192;

/// Whether sampled photons are frequency-filtered at the bare line
/// (omega = 0) or drawn from the full spectral distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaMode {
    Filtered,
    Spectral,
}

/// One detected photon: detuning (Gamma units) and emission direction.
#[derive(Debug, Clone, Copy)]
pub struct PhotonSample {
    pub omega: f64,
    pub direction: [f64; 3],
}

impl PhotonSample {
    /// Fringe phase k.r for the two-atom geometry with the pair axis along z.
    pub fn fringe_phase_two(&self, u: f64) -> f64 {
        u * self.direction[2]
    }

    /// Fringe phases k.r_j for a triangle geometry.
    pub fn fringe_phases_three(&self, geom: &TriangleGeometry) -> [f64; 3] {
        geom.fringe_phases(self.direction)
    }
}

fn substream(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut z = seed ^ chunk.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn uniform_direction<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z = rng.gen_range(-1.0f64..=1.0);
    let az = rng.gen_range(0.0..TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * az.cos(), r * az.sin(), z]
}

/// Mass of a unit Lorentzian of width `gamma` over +-SPECTRAL_WINDOW around
/// its center.
fn window_mass(gamma: f64) -> f64 {
    (4.0 / gamma) * (2.0 * SPECTRAL_WINDOW / gamma).atan()
}

/// Draw from a Lorentzian truncated to +-SPECTRAL_WINDOW around `center`.
fn truncated_lorentzian<R: Rng>(rng: &mut R, center: f64, gamma: f64) -> f64 {
    let half = gamma / 2.0;
    let span = (SPECTRAL_WINDOW / half).atan();
    let t = rng.gen_range(-span..span);
    center + half * t.tan()
}

struct LinePair {
    center: [f64; 2],
    gamma: [f64; 2],
    mass: [f64; 2],
}

impl LinePair {
    fn lorentz(&self, branch: usize, omega: f64) -> f64 {
        1.0 / ((omega - self.center[branch]).powi(2) + (self.gamma[branch] / 2.0).powi(2))
    }

    /// Given (possibly signed) line weights at a fixed direction, draw a
    /// detuning from the normalized spectral density by rejection against the
    /// positive-part mixture.
    fn draw_omega<R: Rng>(&self, rng: &mut R, w: [f64; 2]) -> Result<f64> {
        let e = [w[0].max(0.0) * self.mass[0], w[1].max(0.0) * self.mass[1]];
        let etot = e[0] + e[1];
        if etot <= 0.0 {
            return Err(Error::Internal("vanishing spectral envelope".into()));
        }
        for _ in 0..10_000 {
            let branch = if rng.gen_range(0.0..etot) < e[0] { 0 } else { 1 };
            let omega = truncated_lorentzian(rng, self.center[branch], self.gamma[branch]);
            let dens = w[0] * self.lorentz(0, omega) + w[1] * self.lorentz(1, omega);
            let env = w[0].max(0.0) * self.lorentz(0, omega) + w[1].max(0.0) * self.lorentz(1, omega);
            if dens > env * (1.0 + 1e-9) {
                return Err(Error::Internal("spectral density exceeded its envelope".into()));
            }
            if dens < -1e-9 * env {
                return Err(Error::Domain(
                    "negative spectral density: the second-order model is unphysical at this \
                     separation"
                        .into(),
                ));
            }
            if dens > 0.0 && rng.gen_range(0.0..1.0) * env < dens {
                return Ok(omega);
            }
        }
        Err(Error::Internal("spectral rejection loop failed to accept".into()))
    }
}

fn sample_generic<W>(
    n: usize,
    seed: u64,
    mode: OmegaMode,
    lines: &LinePair,
    angular_bound: f64,
    weights: W,
) -> Result<Vec<PhotonSample>>
where
    W: Fn(&[f64; 3]) -> [f64; 2] + Sync,
{
    if angular_bound <= 0.0 || !angular_bound.is_finite() {
        return Err(Error::Internal("invalid angular envelope".into()));
    }
    // marginal weights per line: window mass in spectral mode, on-resonance
    // Lorentzian value in filtered mode
    let line_factor = match mode {
        OmegaMode::Spectral => [lines.mass[0], lines.mass[1]],
        OmegaMode::Filtered => [lines.lorentz(0, 0.0), lines.lorentz(1, 0.0)],
    };
    let envelope = angular_bound * (line_factor[0] + line_factor[1]);
    let n_chunks = n.div_ceil(CHUNK);
    let chunks: Vec<Result<Vec<PhotonSample>>> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = substream(seed, ci as u64);
            let want = CHUNK.min(n - ci * CHUNK);
            let mut out = Vec::with_capacity(want);
            let mut guard = 0usize;
            while out.len() < want {
                guard += 1;
                if guard > 100_000 * CHUNK {
                    return Err(Error::Internal("angular rejection loop stalled".into()));
                }
                let dir = uniform_direction(&mut rng);
                let w = weights(&dir);
                let marginal = w[0] * line_factor[0] + w[1] * line_factor[1];
                if marginal > envelope * (1.0 + 1e-9) {
                    return Err(Error::Internal(
                        "angular density exceeded its envelope".into(),
                    ));
                }
                if marginal < -1e-9 * envelope {
                    return Err(Error::Domain(
                        "negative emission density: the spectral model is unphysical at this \
                         separation"
                            .into(),
                    ));
                }
                if marginal <= 0.0 || rng.gen_range(0.0..1.0) * envelope >= marginal {
                    continue;
                }
                let omega = match mode {
                    OmegaMode::Filtered => 0.0,
                    OmegaMode::Spectral => lines.draw_omega(&mut rng, w)?,
                };
                out.push(PhotonSample { omega, direction: dir });
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(n);
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Sample photons emitted by a two-atom state at separation u (pair axis
/// along z). Deterministic per seed; N = 0 yields an empty list.
pub fn sample_photons_two(
    state: &TwoQubitBlochState,
    u: f64,
    n: usize,
    seed: u64,
    mode: OmegaMode,
) -> Result<Vec<PhotonSample>> {
    let pc = eigenmodes_two(u)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lines = LinePair {
        center: [pc.omega_plus, pc.omega_minus],
        gamma: [pc.gamma_plus, pc.gamma_minus],
        mass: [window_mass(pc.gamma_plus), window_mass(pc.gamma_minus)],
    };
    // analytic bound on the B weights over all phases
    let (sx, sy, sz) = (state.sx(), state.sy(), state.sz());
    let wt = (sy - pc.g * sz) / (1.0 + pc.g * pc.g);
    let bound = |a: f64, c: f64| a + (a * a + c * c).sqrt();
    let bp_max = bound(0.25 * (1.0 + sx), 0.25 * (1.0 + pc.f) * wt);
    let bm_max = bound(0.25 * (1.0 - sx), 0.25 * (1.0 - pc.f) * wt);
    let angular_bound = bp_max.max(bm_max).max(1e-300);
    let state = *state;
    sample_generic(n, seed, mode, &lines, angular_bound, move |dir| {
        let chi = u * dir[2];
        let (bp, bm) = weights_b(&state, u, chi).expect("validated u");
        [bp, bm]
    })
}

/// Sample photons emitted by a three-atom W-like state on an equilateral
/// triangle. The second-order spectral model must be in its physical domain
/// (u above roughly 1.7); a negative density triggers a domain error.
pub fn sample_photons_three(
    state: &WLikeState,
    geom: &TriangleGeometry,
    n: usize,
    seed: u64,
    mode: OmegaMode,
) -> Result<Vec<PhotonSample>> {
    let tc = eigenmodes_three(geom.u)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lines = LinePair {
        center: [tc.omega_plus, tc.omega_minus],
        gamma: [tc.gamma_plus, tc.gamma_minus],
        mass: [window_mass(tc.gamma_plus), window_mass(tc.gamma_minus)],
    };
    // triangle-inequality bound on the D weights
    let c = state.c();
    let cbar = (c[0] + c[1] + c[2]) / 3.0;
    let mut dp_max = 1.5 * cbar * cbar;
    let mut dm_max = 0.5 * (1.0 - 3.0 * cbar * cbar).abs();
    for (i, j) in [(1usize, 0usize), (2, 0), (2, 1)] {
        let sum2 = c[i] + c[j] - 2.0 * cbar;
        let asym = (cbar * (c[i] - c[j]) * tc.h_zero).abs();
        dp_max += (cbar * (cbar + sum2 * tc.h_plus)).abs() + asym;
        dm_max += ((c[i] - cbar) * (c[j] - cbar) + cbar * sum2 * tc.h_minus).abs() + asym;
    }
    let angular_bound = dp_max.max(dm_max).max(1e-300);
    let state = *state;
    let geom = *geom;
    sample_generic(n, seed, mode, &lines, angular_bound, move |dir| {
        let (dp, dm) = weights_d(&state, &geom, *dir).expect("validated geometry");
        [dp, dm]
    })
}

/// Histogram of fringe phases with a density estimate per bin. When the
/// reachable phase span exceeds one period the phases are folded modulo 2 pi
/// and each bin is weighted by the exact measure of its preimage in [-u, u],
/// so the density estimate stays unbiased at any separation.
#[derive(Debug, Clone)]
pub struct FringeHistogram {
    pub u: f64,
    pub folded: bool,
    /// n_bins + 1 edges over the folded ([-pi, pi)) or raw ([-u, u]) domain.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Preimage measure of each bin in the physical phase interval.
    pub support: Vec<f64>,
    /// Density estimate per bin (counts normalized by total and support).
    pub intensity: Vec<f64>,
    /// Poisson standard error of the density estimate.
    pub stderr: Vec<f64>,
    pub total: u64,
}

/// Measure of {chi in [-u, u] : chi mod 2pi in [a, b)} for a bin [a, b) of
/// [-pi, pi).
fn folded_support(a: f64, b: f64, u: f64) -> f64 {
    let mut total = 0.0;
    let k_min = ((-u - b) / TAU).floor() as i64;
    let k_max = ((u - a) / TAU).ceil() as i64;
    for k in k_min..=k_max {
        let lo = (a + TAU * k as f64).max(-u);
        let hi = (b + TAU * k as f64).min(u);
        if hi > lo {
            total += hi - lo;
        }
    }
    total
}

/// Bin two-atom photon samples by fringe phase.
pub fn histogram_two(samples: &[PhotonSample], u: f64, n_bins: usize) -> Result<FringeHistogram> {
    eigenmodes_two(u)?;
    if n_bins < 2 {
        return Err(Error::Domain("need at least 2 bins".into()));
    }
    let folded = u >= PI;
    let (lo, hi) = if folded { (-PI, PI) } else { (-u, u) };
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; n_bins];
    for s in samples {
        let chi = s.fringe_phase_two(u);
        let x = if folded {
            let mut y = chi.rem_euclid(TAU);
            if y >= PI {
                y -= TAU;
            }
            y
        } else {
            chi
        };
        let mut idx = ((x - lo) / width) as usize;
        if idx >= n_bins {
            idx = n_bins - 1;
        }
        counts[idx] += 1;
    }
    let support: Vec<f64> = (0..n_bins)
        .map(|i| {
            if folded {
                folded_support(edges[i], edges[i + 1], u)
            } else {
                width
            }
        })
        .collect();
    let total: u64 = counts.iter().sum();
    let norm = (total.max(1)) as f64;
    let intensity: Vec<f64> = counts
        .iter()
        .zip(&support)
        .map(|(&c, &s)| if s > 0.0 { c as f64 / (norm * s) } else { 0.0 })
        .collect();
    let stderr: Vec<f64> = counts
        .iter()
        .zip(&support)
        .map(|(&c, &s)| if s > 0.0 { (c as f64).sqrt() / (norm * s) } else { 0.0 })
        .collect();
    Ok(FringeHistogram { u, folded, edges, counts, support, intensity, stderr, total })
}

/// Visibility estimate with a bootstrap standard error.
#[derive(Debug, Clone, Copy)]
pub struct VisibilityEstimate {
    pub visibility: f64,
    pub sigma: f64,
}

fn poisson_like<R: Rng>(rng: &mut R, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda < 30.0 {
        // Knuth
        let l = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= rng.gen_range(0.0f64..1.0);
            if p <= l {
                return k as f64;
            }
            k += 1;
        }
    }
    // normal approximation for large counts
    let (u1, u2) = (rng.gen_range(f64::MIN_POSITIVE..1.0), rng.gen_range(0.0..TAU));
    let z = (-2.0 * u1.ln()).sqrt() * u2.cos();
    (lambda + lambda.sqrt() * z).max(0.0)
}

#[allow(clippy::needless_range_loop)]
fn fit_sinusoid(hist: &FringeHistogram, intensity: &[f64]) -> Option<(f64, f64, f64)> {
    // weighted least squares of a + b cos chi + c sin chi on bin centers
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for i in 0..hist.counts.len() {
        let wgt = hist.support[i];
        if wgt <= 0.0 {
            continue;
        }
        let x = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
        let row = [1.0, x.cos(), x.sin()];
        for a in 0..3 {
            for b in 0..3 {
                ata[a][b] += wgt * row[a] * row[b];
            }
            atb[a] += wgt * row[a] * intensity[i];
        }
    }
    solve3(ata, atb)
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<(f64, f64, f64)> {
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..3 {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]))
}

fn visibility_from_fit(hist: &FringeHistogram, a: f64, b: f64, c: f64) -> f64 {
    // no clamping: finite statistics may push the estimate slightly past the
    // physical range, and a symmetric estimator keeps the 3-sigma checks fair
    let r = b.hypot(c);
    if a <= 0.0 {
        return 0.0;
    }
    if hist.folded {
        r / a
    } else {
        // extremize over the reachable arc only
        let theta0 = c.atan2(b);
        let (lo, hi) = (-hist.u - theta0, hist.u - theta0);
        let (cmin, cmax) = cos_extrema(lo, hi);
        let imax = a + r * cmax;
        let imin = a + r * cmin;
        (imax - imin) / (imax + imin)
    }
}

fn cos_extrema(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo >= TAU {
        return (-1.0, 1.0);
    }
    let mut max = lo.cos().max(hi.cos());
    let mut min = lo.cos().min(hi.cos());
    if (hi / TAU).floor() * TAU >= lo {
        max = 1.0;
    }
    if ((hi - PI) / TAU).floor() * TAU + PI >= lo {
        min = -1.0;
    }
    (min, max)
}

/// Estimate the fringe visibility from a histogram by fitting the sinusoidal
/// fringe model to the bin densities (the exact fixed-detuning profile shape)
/// and extremizing it over the reachable phases. The uncertainty is a seeded
/// 200-resample Poisson bootstrap over bin counts.
pub fn estimate_visibility(hist: &FringeHistogram, seed: u64) -> Result<VisibilityEstimate> {
    if hist.counts.len() < 32 {
        return Err(Error::InsufficientData(format!(
            "need >= 32 bins, got {}",
            hist.counts.len()
        )));
    }
    if hist.total < 100 {
        return Err(Error::InsufficientData(format!(
            "need >= 100 counts, got {}",
            hist.total
        )));
    }
    let (a, b, c) = fit_sinusoid(hist, &hist.intensity)
        .ok_or_else(|| Error::IllPosed("singular sinusoid fit".into()))?;
    let visibility = visibility_from_fit(hist, a, b, c);

    const RESAMPLES: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = hist.total as f64;
    let mut boot = Vec::with_capacity(RESAMPLES);
    for _ in 0..RESAMPLES {
        let resampled: Vec<f64> = hist
            .counts
            .iter()
            .zip(&hist.support)
            .map(|(&cnt, &sup)| {
                if sup > 0.0 {
                    poisson_like(&mut rng, cnt as f64) / (norm * sup)
                } else {
                    0.0
                }
            })
            .collect();
        if let Some((a, b, c)) = fit_sinusoid(hist, &resampled) {
            boot.push(visibility_from_fit(hist, a, b, c));
        }
    }
    let mean = boot.iter().sum::<f64>() / boot.len() as f64;
    let var = boot.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (boot.len() - 1) as f64;
    Ok(VisibilityEstimate { visibility, sigma: var.sqrt() })
}

/// Survival function of the chi-square distribution with `k` degrees of
/// freedom; used by the goodness-of-fit checks.
pub fn chi_square_survival(x: f64, k: usize) -> f64 {
    1.0 - regularized_gamma_p(k as f64 / 2.0, x / 2.0)
}

fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..500 {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        (sum.ln() + a * x.ln() - x - ln_gamma(a)).exp()
    } else {
        // continued fraction for Q, then P = 1 - Q
        let mut b = x + 1.0 - a;
        let mut c = 1e308;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < 1e-300 {
                d = 1e-300;
            }
            c = b + an / c;
            if c.abs() < 1e-300 {
                c = 1e-300;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        1.0 - (a * x.ln() - x - ln_gamma(a)).exp() * h
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7
    #[allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (TAU).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
