//! Three atoms pinned at the vertices of an equilateral triangle: collective
//! eigenmodes (one superradiant, two degenerate subradiant), the full
//! finite-distance emission spectrum, the far-field triple-slit intensity on
//! the phase torus, fringe extrema and the closed-form visibility.

use crate::error::{Error, Result};
use crate::optim::grid_refine_max_2d;
use crate::states::WLikeState;
use crate::two_atom::{coupling_f, coupling_g};
use std::f64::consts::{PI, TAU};

/// Equilateral triangle of side u = k0 r in the z = 0 plane.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub u: f64,
}

impl TriangleGeometry {
    pub fn new(u: f64) -> Result<Self> {
        if u <= 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!("side length u = {u} must be positive")));
        }
        Ok(Self { u })
    }

    fn vertex_angle(j: usize) -> f64 {
        TAU * j as f64 / 3.0
    }

    /// Atom positions x_j = (u/sqrt(3)) (sin v_j, -cos v_j, 0), v_j = 2pi(j-1)/3.
    pub fn positions(&self) -> [[f64; 3]; 3] {
        let r = self.u / 3f64.sqrt();
        std::array::from_fn(|j| {
            let v = Self::vertex_angle(j);
            [r * v.sin(), -r * v.cos(), 0.0]
        })
    }

    /// Edge vectors r_j = u (cos v_j, sin v_j, 0) = x_{j+1} - x_{j+2} (cyclic).
    pub fn edges(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|j| {
            let v = Self::vertex_angle(j);
            [self.u * v.cos(), self.u * v.sin(), 0.0]
        })
    }

    /// Fringe phases theta_j = k . r_j for a photon along `khat` (|khat| = 1),
    /// with |k| = k0. They satisfy theta_1 + theta_2 + theta_3 = 0.
    pub fn fringe_phases(&self, khat: [f64; 3]) -> [f64; 3] {
        let e = self.edges();
        std::array::from_fn(|j| dot(khat, e[j]))
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Collective mode data of the triangle: superradiant (+) and doubly
/// degenerate subradiant (-) detunings and widths, plus the h weight
/// coefficients entering the Lorentzian weights.
#[derive(Debug, Clone, Copy)]
pub struct TriadCoupling {
    pub u: f64,
    pub f: f64,
    pub g: f64,
    /// Superradiant detuning from the bare line: -g.
    pub omega_plus: f64,
    /// Subradiant detuning: -g/2.
    pub omega_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    pub h_zero: f64,
}

pub fn eigenmodes_three(u: f64) -> Result<TriadCoupling> {
    if u <= 0.0 || !u.is_finite() {
        return Err(Error::Domain(format!("side length u = {u} must be positive")));
    }
    let f = coupling_f(u);
    let g = coupling_g(u);
    let den = (3.0 * g).powi(2) + (2.0 + f).powi(2);
    Ok(TriadCoupling {
        u,
        f,
        g,
        omega_plus: -g,
        omega_minus: -g / 2.0,
        gamma_plus: 1.0 + 2.0 * f,
        gamma_minus: 1.0 - f,
        h_plus: (2.0 + f) * (1.0 + 2.0 * f) / den,
        h_minus: (2.0 + f) * (1.0 - f) / den,
        h_zero: 3.0 * g / den,
    })
}

fn lorentz(delta: f64, center: f64, width: f64) -> f64 {
    1.0 / ((delta - center).powi(2) + (width / 2.0).powi(2))
}

/// Lorentzian weights (D+, D-) of the two collective lines for emission along
/// `khat`.
pub fn weights_d(state: &WLikeState, geom: &TriangleGeometry, khat: [f64; 3]) -> Result<(f64, f64)> {
    let tc = eigenmodes_three(geom.u)?;
    let c = state.c();
    let cbar = (c[0] + c[1] + c[2]) / 3.0;
    let x = geom.positions();
    let mut dp = 1.5 * cbar * cbar;
    let mut dm = 0.5 * (1.0 - 3.0 * cbar * cbar);
    for (i, j) in [(1usize, 0usize), (2, 0), (2, 1)] {
        let ph = dot(khat, [x[i][0] - x[j][0], x[i][1] - x[j][1], x[i][2] - x[j][2]]);
        let (cos, sin) = (ph.cos(), ph.sin());
        let sum2 = c[i] + c[j] - 2.0 * cbar;
        let asym = cbar * (c[i] - c[j]) * tc.h_zero * sin;
        dp += cbar * (cbar + sum2 * tc.h_plus) * cos + asym;
        dm += ((c[i] - cbar) * (c[j] - cbar) + cbar * sum2 * tc.h_minus) * cos + asym;
    }
    Ok((dp, dm))
}

/// Spectral density of the photon emitted along `khat` at detuning `omega`,
/// constant rate prefactor dropped. The underlying second-order result is
/// only physically meaningful for u above roughly 1.7; below that the weights
/// can drive the density negative.
pub fn emission_spectrum_three(
    state: &WLikeState,
    geom: &TriangleGeometry,
    omega: f64,
    khat: [f64; 3],
) -> Result<f64> {
    let tc = eigenmodes_three(geom.u)?;
    let (dp, dm) = weights_d(state, geom, khat)?;
    Ok(dp * lorentz(omega, tc.omega_plus, tc.gamma_plus)
        + dm * lorentz(omega, tc.omega_minus, tc.gamma_minus))
}

/// Far-field triple-slit bracket evaluated on the constraint torus
/// theta_3 = -theta_1 - theta_2:
/// 1 + 2(c2 c3 cos th1 + c3 c1 cos th2 + c1 c2 cos th3).
/// Local phases shift each cosine argument rigidly (th1 - phi2 + phi3,
/// th2 - phi3, th3 + phi2), leaving the extrema unchanged.
pub fn farfield_intensity(state: &WLikeState, theta1: f64, theta2: f64) -> f64 {
    let theta3 = -theta1 - theta2;
    let [c1, c2, c3] = state.c();
    let (p2, p3) = (state.phi2(), state.phi3());
    1.0 + 2.0
        * (c2 * c3 * (theta1 - p2 + p3).cos()
            + c3 * c1 * (theta2 - p3).cos()
            + c1 * c2 * (theta3 + p2).cos())
}

/// Extrema of the far-field pattern with the minimizing angles.
#[derive(Debug, Clone, Copy)]
pub struct FringeExtrema {
    pub i_max: f64,
    pub i_min: f64,
    /// Angles (theta_1, theta_2, theta_3) realizing the minimum; they satisfy
    /// the sum constraint modulo 2 pi.
    pub min_angles: [f64; 3],
}

/// Closed-form fringe extrema on the torus. Local phases rigidly shift the
/// minimizing angles; the returned angles include that shift so they always
/// reproduce `i_min` through `farfield_intensity`.
pub fn fringe_extrema_three(state: &WLikeState) -> Result<FringeExtrema> {
    let [c1, c2, c3] = state.c();
    let i_max = (c1 + c2 + c3).powi(2);
    let base = if c1 <= c2 + c3 {
        let denom = 2.0 * c1 * c2 * c3;
        let cosines: Vec<f64> =
            [c1, c2, c3].iter().map(|&cj| (2.0 * cj * cj - 1.0) * cj / denom).collect();
        for &x in &cosines {
            if x.abs() > 1.0 + 1e-12 {
                return Err(Error::Internal(format!(
                    "minimizing cosine {x} outside [-1,1] for a triangle-inequality state"
                )));
            }
        }
        let mags: Vec<f64> = cosines.iter().map(|&x| x.clamp(-1.0, 1.0).acos()).collect();
        let angles = pick_signs(&mags).ok_or_else(|| {
            Error::Internal("no sign assignment satisfies the angle-sum constraint".into())
        })?;
        FringeExtrema { i_max, i_min: 0.0, min_angles: angles }
    } else {
        FringeExtrema { i_max, i_min: (c1 - c2 - c3).powi(2), min_angles: [0.0, PI, PI] }
    };
    let (p2, p3) = (state.phi2(), state.phi3());
    Ok(FringeExtrema {
        min_angles: [
            base.min_angles[0] + p2 - p3,
            base.min_angles[1] + p3,
            base.min_angles[2] - p2,
        ],
        ..base
    })
}

/// Choose signs s_j for the angle magnitudes so that sum s_j m_j = 0 mod 2pi,
/// taking the lexicographically smallest valid signed triple.
fn pick_signs(mags: &[f64]) -> Option<[f64; 3]> {
    let mut best: Option<[f64; 3]> = None;
    for bits in 0..8u8 {
        let cand: [f64; 3] =
            std::array::from_fn(|k| if bits >> k & 1 == 1 { -mags[k] } else { mags[k] });
        let total = cand.iter().sum::<f64>() / TAU;
        if (total - total.round()).abs() < 1e-9 {
            let better = match &best {
                None => true,
                Some(b) => cand.as_slice() < b.as_slice(),
            };
            if better {
                best = Some(cand);
            }
        }
    }
    best
}

/// Closed-form far-field visibility: 1 when c1 <= c2 + c3, else
/// 2 c1 (c2 + c3) / (1 + 2 c2 c3).
pub fn visibility_three(state: &WLikeState) -> f64 {
    let [c1, c2, c3] = state.c();
    if c1 <= c2 + c3 {
        1.0
    } else {
        2.0 * c1 * (c2 + c3) / (1.0 + 2.0 * c2 * c3)
    }
}

/// Brute-force visibility oracle: scan the torus on an n x n grid, refine both
/// extrema locally, and form the Michelson ratio. Requires n_grid >= 256.
pub fn visibility_three_bruteforce(state: &WLikeState, n_grid: usize) -> Result<f64> {
    if n_grid < 256 {
        return Err(Error::Domain(format!("n_grid = {n_grid} < 256")));
    }
    let f = |t1: f64, t2: f64| farfield_intensity(state, t1, t2);
    let mut max = (0.0, 0.0, f64::MIN);
    let mut min = (0.0, 0.0, f64::MAX);
    let h = TAU / n_grid as f64;
    for i in 0..n_grid {
        let t1 = -PI + i as f64 * h;
        for j in 0..n_grid {
            let t2 = -PI + j as f64 * h;
            let v = f(t1, t2);
            if v > max.2 {
                max = (t1, t2, v);
            }
            if v < min.2 {
                min = (t1, t2, v);
            }
        }
    }
    let (mx, my, i_max) =
        grid_refine_max_2d(f, max.0 - h, max.0 + h, max.1 - h, max.1 + h, 9, 8);
    let (nx, ny, neg_min) = grid_refine_max_2d(
        |a, b| -f(a, b),
        min.0 - h,
        min.0 + h,
        min.1 - h,
        min.1 + h,
        9,
        8,
    );
    // simplex polish handles the nearly flat valleys near c1 = c2 + c3
    let (_, fneg) = crate::optim::nelder_mead(|x| -f(x[0], x[1]), &[mx, my], h, 2000, 1e-16);
    let i_max = i_max.max(-fneg);
    let (_, fmin) = crate::optim::nelder_mead(|x| f(x[0], x[1]), &[nx, ny], h, 2000, 1e-16);
    let i_min = (-neg_min).min(fmin);
    Ok((i_max - i_min) / (i_max + i_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::random_wlike;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wlike(c1: f64, c2: f64, c3: f64) -> WLikeState {
        WLikeState::new(c1, c2, c3).unwrap()
    }

    fn example_state() -> WLikeState {
        wlike(0.9, 0.4, 0.03f64.sqrt())
    }

    fn rand_dir<R: Rng>(rng: &mut R) -> [f64; 3] {
        loop {
            let v = [
                rng.gen_range(-1.0f64..1.0),
                rng.gen_range(-1.0f64..1.0),
                rng.gen_range(-1.0f64..1.0),
            ];
            let n = dot(v, v).sqrt();
            if n > 1e-3 && n <= 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    #[test]
    fn geometry_is_equilateral() {
        let g = TriangleGeometry::new(2.7).unwrap();
        let x = g.positions();
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let d = [x[i][0] - x[j][0], x[i][1] - x[j][1], x[i][2] - x[j][2]];
            assert_abs_diff_eq!(dot(d, d).sqrt(), 2.7, epsilon = 1e-12);
        }
        for e in g.edges() {
            assert_abs_diff_eq!(dot(e, e).sqrt(), 2.7, epsilon = 1e-12);
        }
        // r_1 = x_2 - x_3 and cyclic
        let e = g.edges();
        for (j, (a, b)) in [(1usize, 2usize), (2, 0), (0, 1)].into_iter().enumerate() {
            for d in 0..3 {
                assert_abs_diff_eq!(e[j][d], x[a][d] - x[b][d], epsilon = 1e-12);
            }
        }
        // phases sum to zero for any direction
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let th = g.fringe_phases(rand_dir(&mut rng));
            assert_abs_diff_eq!(th[0] + th[1] + th[2], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn eigenmode_limits() {
        let close = eigenmodes_three(1e-6).unwrap();
        assert!((close.gamma_plus - 3.0).abs() < 1e-5);
        assert!(close.gamma_minus.abs() < 1e-5);

        let at_pi = eigenmodes_three(PI).unwrap();
        assert_abs_diff_eq!(at_pi.gamma_plus, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(at_pi.gamma_minus, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(at_pi.omega_plus, 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(at_pi.omega_minus, 1.0 / (2.0 * PI), epsilon = 1e-15);

        let far = eigenmodes_three(1e6).unwrap();
        assert!((far.gamma_plus - 1.0).abs() < 1e-5 && (far.gamma_minus - 1.0).abs() < 1e-5);
        assert!(far.omega_plus.abs() < 1e-5 && far.omega_minus.abs() < 1e-5);
        assert!((far.h_plus - 0.5).abs() < 1e-5);
        assert!((far.h_minus - 0.5).abs() < 1e-5);
        assert!(far.h_zero.abs() < 1e-5);

        assert!(eigenmodes_three(0.0).is_err());
    }

    #[test]
    fn w_state_perpendicular_is_purely_superradiant() {
        let g = TriangleGeometry::new(2.0).unwrap();
        let (dp, dm) = weights_d(&WLikeState::w_state(), &g, [0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(dp, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dm, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn far_field_reduces_to_triple_slit_bracket() {
        let g = TriangleGeometry::new(1e6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let st = random_wlike(&mut rng, 1e-3);
            let khat = rand_dir(&mut rng);
            let omega = rng.gen_range(-3.0f64..3.0);
            let p = emission_spectrum_three(&st, &g, omega, khat).unwrap();
            let th = g.fringe_phases(khat);
            let bracket = farfield_intensity(&st, th[0], th[1]);
            let reference = 0.5 * bracket * lorentz(omega, 0.0, 1.0);
            if reference > 1e-9 {
                assert!((p / reference - 1.0).abs() < 1e-3, "ratio {}", p / reference);
            }
        }
    }

    #[test]
    fn c3_to_zero_reduces_to_surviving_pair() {
        use crate::states::TwoQubitBlochState;
        use crate::two_atom::emission_spectrum_two;
        let u = 1e7;
        let g = TriangleGeometry::new(u).unwrap();
        let st = wlike(0.8, 0.6, 1e-8);
        // pair state c1|eg> + c2|ge>: sx = 2 c1 c2, sy = 0, sz = c1^2 - c2^2
        let pair = TwoQubitBlochState::from_bloch(2.0 * 0.8 * 0.6, 0.0, 0.64 - 0.36).unwrap();
        let x = g.positions();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let khat = rand_dir(&mut rng);
            let omega = rng.gen_range(-2.0f64..2.0);
            let chi = dot(khat, [x[0][0] - x[1][0], x[0][1] - x[1][1], x[0][2] - x[1][2]]);
            let p3 = emission_spectrum_three(&st, &g, omega, khat).unwrap();
            let p2 = emission_spectrum_two(&pair, u, omega, chi).unwrap();
            if p2 > 1e-9 {
                assert!((p3 / p2 - 1.0).abs() < 1e-6, "ratio {}", p3 / p2);
            }
        }
    }

    #[test]
    fn spectrum_nonnegative_above_breakdown_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20000 {
            let st = random_wlike(&mut rng, 1e-3);
            let u = rng.gen_range(1.7f64..40.0);
            let g = TriangleGeometry::new(u).unwrap();
            let khat = rand_dir(&mut rng);
            let omega = rng.gen_range(-4.0f64..4.0);
            let p = emission_spectrum_three(&st, &g, omega, khat).unwrap();
            assert!(p >= -1e-12, "negative spectrum {p} at u={u}");
            // total omega-integrated weight also positive
            let tc = eigenmodes_three(u).unwrap();
            let (dp, dm) = weights_d(&st, &g, khat).unwrap();
            assert!(dp / tc.gamma_plus + dm / tc.gamma_minus > 0.0);
        }
    }

    #[test]
    fn intensity_examples() {
        let w = WLikeState::w_state();
        assert_abs_diff_eq!(farfield_intensity(&w, 0.0, 0.0), 3.0, epsilon = 1e-12);
        // the W minimum sits at cos th_j = -1/2
        let t = 2.0 * PI / 3.0;
        assert_abs_diff_eq!(farfield_intensity(&w, t, t), 0.0, epsilon = 1e-12);

        let st = example_state();
        let imax = farfield_intensity(&st, 0.0, 0.0);
        assert_abs_diff_eq!(imax, (0.9 + 0.4 + 0.03f64.sqrt()).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(farfield_intensity(&st, 0.0, PI), 0.106794919243, epsilon = 1e-10);
    }

    #[test]
    fn extrema_closed_forms() {
        let w = fringe_extrema_three(&WLikeState::w_state()).unwrap();
        assert_abs_diff_eq!(w.i_max, 3.0, epsilon = 1e-12);
        assert_eq!(w.i_min, 0.0);
        for a in w.min_angles {
            assert_abs_diff_eq!(a.cos(), -0.5, epsilon = 1e-12);
        }
        let wsum = w.min_angles.iter().sum::<f64>() / TAU;
        assert!((wsum - wsum.round()).abs() < 1e-9);
        assert_abs_diff_eq!(
            farfield_intensity(&WLikeState::w_state(), w.min_angles[0], w.min_angles[1]),
            0.0,
            epsilon = 1e-10
        );

        let st = example_state();
        let e = fringe_extrema_three(&st).unwrap();
        assert_abs_diff_eq!(e.i_max, 2.170333209968, epsilon = 1e-10);
        assert_abs_diff_eq!(e.i_min, 0.106794919243, epsilon = 1e-10);
        assert_abs_diff_eq!(
            farfield_intensity(&st, e.min_angles[0], e.min_angles[1]),
            e.i_min,
            epsilon = 1e-10
        );
    }

    #[test]
    fn extrema_boundary_continuity() {
        // c1 = c2 + c3 boundary: both branches give I_min = 0
        let x = 1.0 / 6f64.sqrt();
        let st = wlike(2.0 * x, x, x);
        let e = fringe_extrema_three(&st).unwrap();
        assert!(e.i_min.abs() < 1e-12);
        assert_abs_diff_eq!(visibility_three(&st), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn minimizing_angles_reproduce_imin_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..500 {
            let st = random_wlike(&mut rng, 1e-3);
            let e = fringe_extrema_three(&st).unwrap();
            let i = farfield_intensity(&st, e.min_angles[0], e.min_angles[1]);
            assert!((i - e.i_min).abs() < 1e-10, "state {:?}", st.c());
        }
    }

    #[test]
    fn visibility_examples() {
        assert_abs_diff_eq!(visibility_three(&WLikeState::w_state()), 1.0, epsilon = 1e-15);
        let st = example_state();
        assert_abs_diff_eq!(visibility_three(&st), 0.906202099150, epsilon = 1e-10);
        let e = fringe_extrema_three(&st).unwrap();
        assert_abs_diff_eq!(
            visibility_three(&st),
            (e.i_max - e.i_min) / (e.i_max + e.i_min),
            epsilon = 1e-12
        );
        // c3 -> 0 probe approaches the pair concurrence 2 c1 c2
        let probe = wlike(0.8, 0.6, 1e-8);
        assert!((visibility_three(&probe) - 0.96).abs() < 1e-7);
    }

    #[test]
    fn brute_force_agrees_with_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let mut worst: f64 = 0.0;
        for _ in 0..30 {
            let st = random_wlike(&mut rng, 1e-2);
            let v = visibility_three(&st);
            let b = visibility_three_bruteforce(&st, 256).unwrap();
            worst = worst.max((v - b).abs());
        }
        assert!(worst < 1e-6, "worst = {worst:.2e}");
        assert!(visibility_three_bruteforce(&WLikeState::w_state(), 100).is_err());
    }

    #[test]
    fn intensity_nonnegative_and_phase_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for k in 0..100 {
            let st = random_wlike(&mut rng, 1e-3);
            let phased = WLikeState::with_phases(
                st.c1(),
                st.c2(),
                st.c3(),
                rng.gen_range(-PI..PI),
                rng.gen_range(-PI..PI),
            )
            .unwrap();
            for _ in 0..50 {
                let (t1, t2) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
                assert!(farfield_intensity(&st, t1, t2) >= -1e-12);
                assert!(farfield_intensity(&phased, t1, t2) >= -1e-12);
            }
            // extrema unchanged by local phases
            if k < 8 {
                let v0 = visibility_three_bruteforce(&st, 256).unwrap();
                let v1 = visibility_three_bruteforce(&phased, 256).unwrap();
                assert!((v0 - v1).abs() < 1e-6);
            }
        }
    }
}
