//! Entanglement measures: closed forms for the Bloch and W-like families plus
//! general density-matrix routes (Wootters spectrum, partial-transpose trace
//! norms, reduced purities, product-state optimization) that serve as
//! independent oracles for the closed forms.

use crate::error::{Error, Result};
use crate::linalg::{
    herm_eigenvalues, herm_sqrt, partial_trace_keep, partial_transpose, trace_norm_hermitian,
    CMat, CVec, C64,
};
use crate::optim::nelder_mead;
use crate::states::{DensityMatrix, TwoQubitBlochState, WLikeState};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

/// Concurrence of the one-excitation Bloch state: s sin(theta).
pub fn concurrence_bloch(state: &TwoQubitBlochState) -> f64 {
    state.s() * state.theta().sin()
}

/// Wootters concurrence of a two-qubit density matrix,
/// max{0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4)} with l_i the descending
/// eigenvalues of sqrt(rho) (sy x sy) rho* (sy x sy) sqrt(rho).
pub fn concurrence_wootters(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::Domain("Wootters concurrence needs a 4x4 density matrix".into()));
    }
    let m = rho.matrix();
    let syy = sigma_y_tensor();
    let spun = &syy * m.map(|z| z.conj()) * &syy;
    let root = herm_sqrt(m);
    let h = &root * spun * &root;
    let mut lam = herm_eigenvalues(&h);
    lam.reverse();
    let s: Vec<f64> = lam.iter().map(|x| x.max(0.0).sqrt()).collect();
    Ok((s[0] - s[1] - s[2] - s[3]).max(0.0))
}

fn sigma_y_tensor() -> CMat {
    let sy = CMat::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
    );
    sy.kronecker(&sy)
}

/// Bipartite negativity of a W-like state with respect to atom `j` (0-based):
/// 2 c_j sqrt(1 - c_j^2).
pub fn negativity_cut(state: &WLikeState, j: usize) -> f64 {
    let c = state.c()[j];
    2.0 * c * (1.0 - c * c).max(0.0).sqrt()
}

/// Largest bipartite negativity over the three cuts. All three are evaluated;
/// 2c sqrt(1-c^2) is not monotonic in c.
pub fn negativity_max(state: &WLikeState) -> f64 {
    (0..3).map(|j| negativity_cut(state, j)).fold(f64::MIN, f64::max)
}

/// Negativity from the partial transpose: ||rho^{T_j}||_1 - 1.
pub fn negativity_dm(rho: &DensityMatrix, j: usize) -> Result<f64> {
    let n = rho.n_qubits();
    if j >= n {
        return Err(Error::Domain(format!("cut index {j} out of range for {n} qubits")));
    }
    let pt = partial_transpose(rho.matrix(), j, n);
    Ok(trace_norm_hermitian(&pt) - 1.0)
}

/// Mean linear entropy of the single-atom reductions of a W-like state:
/// (8/3)(c1^2 c2^2 + c2^2 c3^2 + c3^2 c1^2).
pub fn mixedness(state: &WLikeState) -> f64 {
    let [c1, c2, c3] = state.c();
    let (a, b, c) = (c1 * c1, c2 * c2, c3 * c3);
    8.0 / 3.0 * (a * b + b * c + c * a)
}

/// Mixedness from the definition: mean of 2(1 - Tr rho_j^2) over single-qubit
/// reductions of a three-qubit state.
pub fn mixedness_dm(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 8 {
        return Err(Error::Domain("mixedness oracle needs an 8x8 density matrix".into()));
    }
    let mut total = 0.0;
    for j in 0..3 {
        let rj = partial_trace_keep(rho.matrix(), &[j], 3);
        total += 2.0 * (1.0 - (&rj * &rj).trace().re);
    }
    Ok(total / 3.0)
}

/// Geometric measure of a W-like state: 1 - 4R^2 with R the circumradius of
/// the amplitude triangle when c1^2 <= c2^2 + c3^2, else 1 - c1^2.
pub fn geometric_measure_wlike(state: &WLikeState) -> f64 {
    let [c1, c2, c3] = state.c();
    if c1 * c1 <= c2 * c2 + c3 * c3 {
        let c0 = (c1 + c2 + c3) / 2.0;
        let radicand = (c0 * (c0 - c1) * (c0 - c2) * (c0 - c3)).max(0.0);
        let r = c1 * c2 * c3 / (4.0 * radicand.sqrt());
        1.0 - 4.0 * r * r
    } else {
        1.0 - c1 * c1
    }
}

/// Settings for the product-state optimization oracle.
#[derive(Debug, Clone, Copy)]
pub struct GeometricNumericConfig {
    pub restarts: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for GeometricNumericConfig {
    fn default() -> Self {
        Self { restarts: 32, seed: 0x05ee_d9e0, tolerance: 1e-6 }
    }
}

/// Geometric measure of a pure three-qubit state as the squared distance to
/// the closest product ray: 1 - max |<prod|psi>|^2, maximized by multistart
/// Nelder-Mead over two angles per qubit (scale and global phase are aligned
/// analytically by taking the modulus).
pub fn geometric_measure_numeric(
    psi: &DensityMatrix,
    cfg: GeometricNumericConfig,
) -> Result<f64> {
    if psi.dim() != 8 {
        return Err(Error::Domain("geometric oracle needs an 8x8 density matrix".into()));
    }
    if (psi.purity() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "geometric oracle needs a pure state (purity {})",
            psi.purity()
        )));
    }
    let v = psi.principal_vector();

    let overlap2 = |x: &[f64]| -> f64 {
        let mut amp = [C64::new(0.0, 0.0); 8];
        let q: Vec<[C64; 2]> = (0..3)
            .map(|k| {
                let (t, p) = (x[2 * k], x[2 * k + 1]);
                [
                    C64::new((t / 2.0).cos(), 0.0),
                    C64::from_polar((t / 2.0).sin(), p),
                ]
            })
            .collect();
        for i in 0..8 {
            amp[i] = q[0][(i >> 2) & 1] * q[1][(i >> 1) & 1] * q[2][i & 1];
        }
        let mut dot = C64::new(0.0, 0.0);
        for i in 0..8 {
            amp[i] = amp[i].conj();
            dot += amp[i] * v[i];
        }
        dot.norm_sqr()
    };

    let restarts = cfg.restarts.max(32);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut values: Vec<f64> = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let x0: Vec<f64> = (0..3)
            .flat_map(|_| [rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU)])
            .collect();
        let (_, neg) = nelder_mead(|x| -overlap2(x), &x0, 0.4, 3000, 1e-15);
        values.push(-neg);
    }
    let best = values.iter().cloned().fold(f64::MIN, f64::max);
    let agreeing = values.iter().filter(|&&v| best - v < 10.0 * cfg.tolerance).count();
    if agreeing < 3 {
        return Err(Error::Convergence { best: 1.0 - best, restarts });
    }
    Ok(1.0 - best)
}

/// Genuine-tripartite three-pi measure of a W-like state,
/// (4/3) sum_j c_j^4 (sqrt(1 + 4 c1^2 c2^2 c3^2 / c_j^6) - 1).
pub fn three_pi(state: &WLikeState) -> f64 {
    let c = state.c();
    let p = 4.0 * (c[0] * c[1] * c[2]).powi(2);
    (4.0 / 3.0)
        * c.iter()
            .map(|&cj| {
                let c4 = cj.powi(4);
                c4 * ((1.0 + p / (c4 * cj * cj)).sqrt() - 1.0)
            })
            .sum::<f64>()
}

/// Three-pi from partial transposes: (1/3) sum_j [N_j^2(rho) - 2 N^2(rho_j)],
/// with N(rho_j) the negativity of the two-qubit state left after tracing out
/// atom j.
pub fn three_pi_dm(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 8 {
        return Err(Error::Domain("three-pi oracle needs an 8x8 density matrix".into()));
    }
    let mut total = 0.0;
    for j in 0..3 {
        let nj = negativity_dm(rho, j)?;
        let keep: Vec<usize> = (0..3).filter(|&q| q != j).collect();
        let rj = partial_trace_keep(rho.matrix(), &keep, 3);
        let nred = trace_norm_hermitian(&partial_transpose(&rj, 0, 2)) - 1.0;
        total += nj * nj - 2.0 * nred * nred;
    }
    Ok(total / 3.0)
}

/// Draw a random canonical W-like state (amplitudes-squared uniform on the
/// simplex, sorted, with c3 bounded away from zero). Used by randomized
/// cross-validation tests and the bound-verification sweeps.
pub fn random_wlike<R: Rng>(rng: &mut R, min_c3: f64) -> WLikeState {
    loop {
        let mut w = [0.0f64; 3];
        for x in &mut w {
            *x = -rng.gen_range(0.0f64..1.0).max(1e-300).ln();
        }
        let tot: f64 = w.iter().sum();
        let mut c: Vec<f64> = w.iter().map(|x| (x / tot).sqrt()).collect();
        c.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if c[2] > min_c3 {
            if let Ok(st) = WLikeState::new(c[0], c[1], c[2]) {
                return st;
            }
        }
    }
}

/// Random Bloch state, uniform in (s^3, cos theta, phi).
pub fn random_bloch<R: Rng>(rng: &mut R) -> TwoQubitBlochState {
    let s = rng.gen_range(0.0f64..1.0).powf(1.0 / 3.0);
    let theta = rng.gen_range(-1.0f64..1.0).acos();
    let phi = rng.gen_range(0.0..TAU);
    TwoQubitBlochState::new(s, theta, phi).expect("sampled state is valid")
}

/// State vector of a W-like state with explicit amplitudes, bypassing the
/// canonical ordering; for oracle tests of limit families.
pub fn wlike_vector_raw(c: [f64; 3], phases: [f64; 2]) -> CVec {
    let mut v = CVec::zeros(8);
    v[4] = C64::new(c[0], 0.0);
    v[2] = C64::from_polar(c[1], phases[0]);
    v[1] = C64::from_polar(c[2], phases[1]);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::DensityMatrix;
    use approx::assert_abs_diff_eq;

    fn wlike(c1: f64, c2: f64, c3: f64) -> WLikeState {
        WLikeState::new(c1, c2, c3).unwrap()
    }

    #[test]
    fn concurrence_bloch_examples() {
        let bell = TwoQubitBlochState::new(1.0, PI / 2.0, 1.234).unwrap();
        assert_abs_diff_eq!(concurrence_bloch(&bell), 1.0, epsilon = 1e-15);
        let mixed = TwoQubitBlochState::new(0.0, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(concurrence_bloch(&mixed), 0.0, epsilon = 1e-15);
        let st = TwoQubitBlochState::new(0.5, PI / 3.0, 0.0).unwrap();
        assert_abs_diff_eq!(concurrence_bloch(&st), 0.433012701892, epsilon = 1e-12);
    }

    #[test]
    fn wootters_bell_product_and_embedding() {
        // |01>+|10> Bell state
        let mut v = CVec::zeros(4);
        v[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[2] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let rho = DensityMatrix::from_pure(&v).unwrap();
        assert_abs_diff_eq!(concurrence_wootters(&rho).unwrap(), 1.0, epsilon = 1e-10);

        let mut p = CVec::zeros(4);
        p[0] = C64::new(1.0, 0.0);
        let prod = DensityMatrix::from_pure(&p).unwrap();
        assert_abs_diff_eq!(concurrence_wootters(&prod).unwrap(), 0.0, epsilon = 1e-12);

        let st = TwoQubitBlochState::new(0.7, 1.1, 2.0).unwrap();
        let c = concurrence_wootters(&st.embed_two_qubit()).unwrap();
        assert_abs_diff_eq!(c, 0.7 * 1.1f64.sin(), epsilon = 1e-10);
        assert_abs_diff_eq!(c, 0.623845152043, epsilon = 1e-10);
    }

    #[test]
    fn wootters_matches_bloch_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let st = random_bloch(&mut rng);
            let c = concurrence_wootters(&st.embed_two_qubit()).unwrap();
            assert_abs_diff_eq!(c, concurrence_bloch(&st), epsilon = 1e-9);
        }
    }

    #[test]
    fn negativity_closed_form_examples() {
        let w = WLikeState::w_state();
        for j in 0..3 {
            assert_abs_diff_eq!(negativity_cut(&w, j), 2.0 * 2f64.sqrt() / 3.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(negativity_max(&w), 0.942809041582, epsilon = 1e-12);

        // c_j = 1/sqrt(2) maximizes a single cut
        let st = WLikeState::new(std::f64::consts::FRAC_1_SQRT_2, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(negativity_cut(&st, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(negativity_max(&st), 1.0, epsilon = 1e-12);

        let st = wlike(0.9, 0.4, 0.03f64.sqrt());
        assert_abs_diff_eq!(negativity_cut(&st, 0), 1.8 * 0.19f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(negativity_cut(&st, 0), 0.784601809837, epsilon = 1e-10);

        // the max can come from the second cut; evaluate all three
        let c3 = (1.0f64 - 0.64 - 0.3481).sqrt();
        let st = wlike(0.8, 0.59, c3);
        let n: Vec<f64> = (0..3).map(|j| negativity_cut(&st, j)).collect();
        assert_abs_diff_eq!(n[0], 0.96, epsilon = 1e-12);
        assert_abs_diff_eq!(n[1], 0.952735829073, epsilon = 1e-10);
        assert_abs_diff_eq!(n[2], 0.216872220443, epsilon = 1e-10);
        assert_abs_diff_eq!(negativity_max(&st), 0.96, epsilon = 1e-12);
    }

    #[test]
    fn mixedness_examples() {
        assert_abs_diff_eq!(mixedness(&WLikeState::w_state()), 8.0 / 9.0, epsilon = 1e-12);
        let st = WLikeState::new(0.5f64.sqrt(), 0.25f64.sqrt(), 0.25f64.sqrt()).unwrap();
        assert_abs_diff_eq!(mixedness(&st), 5.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mixedness_dm(&st.density_matrix()).unwrap(), 5.0 / 6.0, epsilon = 1e-10);
        // product limit: c -> (1,0,0) probed inside the admissible set
        let probe = wlike((1.0f64 - 2e-16).sqrt(), 1e-8, 1e-8);
        assert!(mixedness(&probe) < 1e-14);
    }

    #[test]
    fn geometric_closed_form_examples() {
        assert_abs_diff_eq!(
            geometric_measure_wlike(&WLikeState::w_state()),
            5.0 / 9.0,
            epsilon = 1e-12
        );
        let lower = WLikeState::new((2f64 / 3.0).sqrt(), (1f64 / 6.0).sqrt(), (1f64 / 6.0).sqrt())
            .unwrap();
        assert_abs_diff_eq!(geometric_measure_wlike(&lower), 1.0 / 3.0, epsilon = 1e-12);
        // obtuse branch
        let st = wlike(0.9, 0.4, 0.03f64.sqrt());
        assert_abs_diff_eq!(geometric_measure_wlike(&st), 0.19, epsilon = 1e-12);
    }

    #[test]
    fn geometric_numeric_oracle_matches_closed_form() {
        let cases = [
            WLikeState::w_state(),
            WLikeState::new((2f64 / 3.0).sqrt(), (1f64 / 6.0).sqrt(), (1f64 / 6.0).sqrt()).unwrap(),
            wlike(0.9, 0.4, 0.03f64.sqrt()),
        ];
        for st in cases {
            let num = geometric_measure_numeric(&st.density_matrix(), Default::default()).unwrap();
            assert_abs_diff_eq!(num, geometric_measure_wlike(&st), epsilon = 1e-6);
        }
        // product state |egg>: measure 0
        let v = wlike_vector_raw([1.0, 0.0, 0.0], [0.0, 0.0]);
        let rho = DensityMatrix::from_pure(&v).unwrap();
        let num = geometric_measure_numeric(&rho, Default::default()).unwrap();
        assert!(num.abs() < 1e-9);
    }

    #[test]
    fn geometric_continuous_across_branch_boundary() {
        // at the boundary state of the c2 = c3 family (c1 = 1/sqrt(2)) the
        // circumradius branch agrees with 1 - c1^2
        let c1 = std::f64::consts::FRAC_1_SQRT_2;
        let cc = 0.5;
        let c0 = (c1 + 2.0 * cc) / 2.0;
        let r = c1 * cc * cc / (4.0 * (c0 * (c0 - c1) * (c0 - cc) * (c0 - cc)).sqrt());
        let circum = 1.0 - 4.0 * r * r;
        assert!((circum - (1.0 - c1 * c1)).abs() < 1e-8, "{circum}");
        // crossing the boundary along the family changes the value smoothly
        for eps in [1e-4, 1e-5, 1e-6] {
            let c1m = (0.5f64 - eps).sqrt();
            let c1p = (0.5f64 + eps).sqrt();
            let cm = ((1.0 - c1m * c1m) / 2.0).sqrt();
            let cp = ((1.0 - c1p * c1p) / 2.0).sqrt();
            let below = geometric_measure_wlike(&wlike(c1m, cm, cm));
            let above = geometric_measure_wlike(&wlike(c1p, cp, cp));
            assert!((below - above).abs() < 5.0 * eps, "eps={eps}: {below} vs {above}");
        }
    }

    #[test]
    fn three_pi_examples() {
        let w = WLikeState::w_state();
        assert_abs_diff_eq!(three_pi(&w), 4.0 * (5f64.sqrt() - 1.0) / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(three_pi(&w), 0.549363545555, epsilon = 1e-12);
        // c3 -> 0 probe: vanishes
        let probe = wlike(0.8, 0.6 - 1e-16, 1e-8);
        assert!(three_pi(&probe) < 1e-7);
        // dual-formula cross-check on the spec's obtuse state
        let st = wlike(0.9, 0.4, 0.03f64.sqrt());
        let via_pt = three_pi_dm(&st.density_matrix()).unwrap();
        assert_abs_diff_eq!(three_pi(&st), via_pt, epsilon = 1e-9);
    }

    #[test]
    fn all_measures_vanish_in_the_product_limit() {
        let probe = wlike((1.0f64 - 2e-16).sqrt(), 1e-8, 1e-8);
        assert!(mixedness(&probe) < 1e-14);
        assert!(geometric_measure_wlike(&probe) < 1e-14);
        assert!(negativity_max(&probe) < 1e-7);
        assert!(three_pi(&probe) < 1e-14);
    }

    #[test]
    fn oracles_match_closed_forms_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..120 {
            let st = random_wlike(&mut rng, 1e-3);
            let rho = st.density_matrix();
            for j in 0..3 {
                assert_abs_diff_eq!(
                    negativity_dm(&rho, j).unwrap(),
                    negativity_cut(&st, j),
                    epsilon = 1e-9
                );
            }
            assert_abs_diff_eq!(mixedness_dm(&rho).unwrap(), mixedness(&st), epsilon = 1e-9);
            assert_abs_diff_eq!(three_pi_dm(&rho).unwrap(), three_pi(&st), epsilon = 1e-9);
        }
    }

    #[test]
    fn measures_invariant_under_local_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let st = random_wlike(&mut rng, 1e-3);
            let phased = WLikeState::with_phases(
                st.c1(),
                st.c2(),
                st.c3(),
                rng.gen_range(-PI..PI),
                rng.gen_range(-PI..PI),
            )
            .unwrap();
            let rho = phased.density_matrix();
            assert_abs_diff_eq!(mixedness_dm(&rho).unwrap(), mixedness(&st), epsilon = 1e-10);
            assert_abs_diff_eq!(three_pi_dm(&rho).unwrap(), three_pi(&st), epsilon = 1e-9);
            for j in 0..3 {
                assert_abs_diff_eq!(
                    negativity_dm(&rho, j).unwrap(),
                    negativity_cut(&st, j),
                    epsilon = 1e-10
                );
            }
        }
    }
}
