//! Analytic ranges of the four entanglement measures compatible with an
//! observed far-field visibility, plus seeded samplers of W-like states at
//! fixed visibility for empirical verification of the bands.
//!
//! For V < 1 the intervals are the extrema of each measure over the
//! one-parameter constraint family, with the lower (M, E_g, N_max) or upper
//! (three-pi) endpoint attained on the c2 = c3 subfamily and the opposite
//! endpoint approached as c3 -> 0 (open, since c3 > 0 is required). Two of
//! the published V < 1 expressions do not match the extrema of their own
//! closed-form measures over that family; the forms used here do, which a
//! dense family scan in the test suite verifies. They differ from the
//! published ones by single coefficients (8 for 4 and 2V^2 for 1+V^2 in the
//! subsystem-mixedness interval, 17+15v for 17+5v inside the three-pi
//! radical) and agree with them at V = 1.

use crate::error::{Error, Result};
use crate::measures;
use crate::states::WLikeState;
use crate::three_atom::visibility_three;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which entanglement measure a bound interval refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Mixedness,
    Geometric,
    NegativityMax,
    ThreePi,
}

impl Measure {
    pub fn all() -> [Measure; 4] {
        [Measure::Mixedness, Measure::Geometric, Measure::NegativityMax, Measure::ThreePi]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Mixedness => "mixedness",
            Measure::Geometric => "geometric",
            Measure::NegativityMax => "negativity_max",
            Measure::ThreePi => "three_pi",
        }
    }

    pub fn evaluate(&self, state: &WLikeState) -> f64 {
        match self {
            Measure::Mixedness => measures::mixedness(state),
            Measure::Geometric => measures::geometric_measure_wlike(state),
            Measure::NegativityMax => measures::negativity_max(state),
            Measure::ThreePi => measures::three_pi(state),
        }
    }
}

/// Family of states attaining (or approaching) a bound endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttainerFamily {
    WState,
    C2EqC3Family,
    C3ToZeroFamily,
    C1BoundaryFamily,
    None,
}

/// Range of a measure at fixed visibility, with endpoint openness flags and
/// the family attaining the closed endpoint of interest.
#[derive(Debug, Clone, Copy)]
pub struct BoundInterval {
    pub measure: Measure,
    pub visibility: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
    pub attainer: AttainerFamily,
}

impl BoundInterval {
    /// Complementary quantity v = sqrt(1 - V^2).
    pub fn upsilon(&self) -> f64 {
        (1.0 - self.visibility * self.visibility).max(0.0).sqrt()
    }

    /// Containment check honoring open endpoints with a one-sided tolerance.
    pub fn contains(&self, value: f64, tol: f64) -> bool {
        let above = if self.lower_closed { value >= self.lower - tol } else { value > self.lower - tol };
        let below = if self.upper_closed { value <= self.upper + tol } else { value < self.upper + tol };
        above && below
    }
}

fn check_visibility(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(Error::Domain(format!("visibility {v} outside [0,1]")));
    }
    Ok((1.0 - v * v).max(0.0).sqrt())
}

/// The V < 1 interval parametrized directly by the complementary quantity
/// upsilon = sqrt(1 - V^2) > 0; avoids the precision loss of 1 - V^2 when
/// probing the V -> 1 limits.
pub fn bounds_at_upsilon(measure: Measure, ups: f64) -> Result<BoundInterval> {
    if !(ups > 0.0 && ups <= 1.0) {
        return Err(Error::Domain(format!("upsilon {ups} outside (0,1]")));
    }
    let v = (1.0 - ups * ups).max(0.0).sqrt();
    let (lower, upper, lower_closed, upper_closed) = match measure {
        Measure::Mixedness => (
            2.0 / 3.0 * (1.0 - 8.0 * ups * (1.0 + ups) / (3.0 + ups).powi(2)),
            2.0 / 3.0 * (1.0 - ups * ups),
            true,
            false,
        ),
        Measure::Geometric => ((1.0 - ups) / (3.0 + ups), (1.0 - ups) / 2.0, true, false),
        Measure::NegativityMax => {
            let ratio = (1.0 + 3.0 * ups) / (3.0 + ups);
            ((1.0 - ratio * ratio).max(0.0).sqrt(), v, true, false)
        }
        Measure::ThreePi => (0.0, three_pi_max(ups), false, true),
    };
    Ok(BoundInterval {
        measure,
        visibility: v,
        lower,
        upper,
        lower_closed,
        upper_closed,
        attainer: AttainerFamily::C2EqC3Family,
    })
}

/// Range of the subsystem mixedness at visibility V.
pub fn mixedness_bounds(v: f64) -> Result<BoundInterval> {
    let ups = check_visibility(v)?;
    if v == 1.0 {
        Ok(BoundInterval {
            measure: Measure::Mixedness,
            visibility: v,
            lower: 2.0 / 3.0,
            upper: 8.0 / 9.0,
            lower_closed: true,
            upper_closed: true,
            attainer: AttainerFamily::WState,
        })
    } else {
        bounds_at_upsilon(Measure::Mixedness, ups)
    }
}

/// Range of the geometric measure at visibility V.
pub fn geometric_bounds(v: f64) -> Result<BoundInterval> {
    let ups = check_visibility(v)?;
    if v == 1.0 {
        Ok(BoundInterval {
            measure: Measure::Geometric,
            visibility: v,
            lower: 1.0 / 3.0,
            upper: 5.0 / 9.0,
            lower_closed: true,
            upper_closed: true,
            attainer: AttainerFamily::WState,
        })
    } else {
        bounds_at_upsilon(Measure::Geometric, ups)
    }
}

/// Range of the largest bipartite negativity at visibility V. At V = 1 the
/// upper endpoint 1 is attained by c1 = 1/sqrt(2), c2 = c3 = 1/2 rather than
/// by the W state (which sits at the lower endpoint 2 sqrt(2)/3 together with
/// the c1 = sqrt(2/3) states).
pub fn negativity_bounds(v: f64) -> Result<BoundInterval> {
    let ups = check_visibility(v)?;
    if v == 1.0 {
        Ok(BoundInterval {
            measure: Measure::NegativityMax,
            visibility: v,
            lower: 2.0 * 2f64.sqrt() / 3.0,
            upper: 1.0,
            lower_closed: true,
            upper_closed: true,
            attainer: AttainerFamily::C2EqC3Family,
        })
    } else {
        bounds_at_upsilon(Measure::NegativityMax, ups)
    }
}

/// Three-pi upper endpoint at complementary quantity v = sqrt(1 - V^2),
/// attained by the state with c2 = c3 = sqrt((1-v)/(2(3+v))).
fn three_pi_max(ups: f64) -> f64 {
    2.0 / (3.0 * (3.0 + ups).powi(2))
        * (4.0 * (1.0 + ups) * (5.0 + 6.0 * ups + 5.0 * ups * ups).sqrt()
            + (1.0 - ups) * ((1.0 - ups) * (17.0 + 15.0 * ups)).sqrt()
            - (9.0 + 14.0 * ups + 9.0 * ups * ups))
}

/// Range of the three-pi measure at visibility V; the infimum 0 is open
/// (c3 -> 0), the supremum is attained (W state at V = 1, the c2 = c3 family
/// below).
pub fn three_pi_bounds(v: f64) -> Result<BoundInterval> {
    let ups = check_visibility(v)?;
    if v == 1.0 {
        Ok(BoundInterval {
            measure: Measure::ThreePi,
            visibility: v,
            lower: 0.0,
            upper: 4.0 * (5f64.sqrt() - 1.0) / 9.0,
            lower_closed: false,
            upper_closed: true,
            attainer: AttainerFamily::WState,
        })
    } else {
        bounds_at_upsilon(Measure::ThreePi, ups)
    }
}

pub fn bounds_for(measure: Measure, v: f64) -> Result<BoundInterval> {
    match measure {
        Measure::Mixedness => mixedness_bounds(v),
        Measure::Geometric => geometric_bounds(v),
        Measure::NegativityMax => negativity_bounds(v),
        Measure::ThreePi => three_pi_bounds(v),
    }
}

/// The member of the c2 = c3 family at visibility V < 1 (attains the closed
/// endpoints of all four bounds).
pub fn c2_eq_c3_member(v: f64) -> Result<WLikeState> {
    let ups = check_visibility(v)?;
    if v >= 1.0 {
        return Err(Error::Domain("c2 = c3 attainer family is defined for V < 1".into()));
    }
    let t = (1.0 - ups) / (2.0 * (3.0 + ups));
    WLikeState::new((1.0 - 2.0 * t).sqrt(), t.sqrt(), t.sqrt())
}

/// Solve the visibility equation on the c1 > c2 + c3 branch for the state
/// with amplitude ratio `ratio` = c3/c2 in (0, 1]. Bisection on c2 to 1e-12.
pub fn state_at_visibility(v: f64, ratio: f64) -> Result<WLikeState> {
    if !(0.0 < v && v < 1.0) {
        return Err(Error::Domain(format!("need 0 < V < 1, got {v}")));
    }
    if !(0.0 < ratio && ratio <= 1.0) {
        return Err(Error::Domain(format!("amplitude ratio {ratio} outside (0,1]")));
    }
    let vis = |x: f64| -> f64 {
        let c1 = (1.0 - x * x * (1.0 + ratio * ratio)).max(0.0).sqrt();
        2.0 * c1 * x * (1.0 + ratio) / (1.0 + 2.0 * ratio * x * x)
    };
    // bracket: x -> 0 gives 0, the c1 = c2 + c3 boundary gives 1
    let mut lo = 0.0f64;
    let mut hi = (1.0 / (1.0 + ratio * ratio + (1.0 + ratio).powi(2))).sqrt();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if vis(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let st = WLikeState::new(
        (1.0 - x * x * (1.0 + ratio * ratio)).max(0.0).sqrt(),
        x,
        ratio * x,
    )?;
    let achieved = visibility_three(&st);
    if (achieved - v).abs() > 1e-10 {
        return Err(Error::Convergence { best: achieved, restarts: 200 });
    }
    Ok(st)
}

/// Sample `n` W-like states at visibility V. For V < 1 the one-parameter
/// family is sampled through random amplitude ratios; for V = 1 states are
/// rejection-sampled from the c1 <= c2 + c3 region with squared amplitudes
/// uniform on the simplex. Deterministic given the seed.
pub fn sample_states_at_visibility(v: f64, n: usize, seed: u64) -> Result<Vec<WLikeState>> {
    if !(0.0 < v && v <= 1.0) {
        return Err(Error::Domain(format!("visibility {v} outside (0,1]")));
    }
    if n == 0 {
        return Err(Error::Domain("need n >= 1 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let max_attempts = 10_000usize;
    for _ in 0..n {
        let mut attempts = 0;
        let st = loop {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::Convergence { best: f64::NAN, restarts: max_attempts });
            }
            if v < 1.0 {
                let ratio = rng.gen_range(1e-3f64..=1.0);
                match state_at_visibility(v, ratio) {
                    Ok(st) => break st,
                    Err(_) => continue,
                }
            } else {
                let st = measures::random_wlike(&mut rng, 1e-6);
                if st.c1() <= st.c2() + st.c3() {
                    break st;
                }
            }
        };
        out.push(st);
    }
    Ok(out)
}
