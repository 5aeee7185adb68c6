//! Atomic state types: the mixed one-excitation two-atom Bloch state, the
//! three-atom W-like pure state, and a validated density-matrix container used
//! by the measure oracles.

use crate::error::{Error, Result};
use crate::linalg::{herm_eigenvalues, CMat, CVec, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

const NORM_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-10;

/// Mixed state of two atoms sharing one excitation, parametrized on the Bloch
/// ball: radius `s` in [0,1], polar angle `theta` in [0,pi], azimuth `phi`
/// in [0,2pi). The basis is (|eg>, |ge>).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitBlochState {
    s: f64,
    theta: f64,
    phi: f64,
}

impl TwoQubitBlochState {
    pub fn new(s: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(s.is_finite() && theta.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidState("non-finite Bloch parameter".into()));
        }
        if !(-1e-12..=1.0 + 1e-12).contains(&s) {
            return Err(Error::InvalidState(format!("purity radius s={s} outside [0,1]")));
        }
        if !(-1e-12..=PI + 1e-12).contains(&theta) {
            return Err(Error::InvalidState(format!("polar angle theta={theta} outside [0,pi]")));
        }
        Ok(Self {
            s: s.clamp(0.0, 1.0),
            theta: theta.clamp(0.0, PI),
            phi: phi.rem_euclid(TAU),
        })
    }

    /// Build from Cartesian Bloch components; errors if the vector leaves the
    /// unit ball by more than 1e-9.
    pub fn from_bloch(sx: f64, sy: f64, sz: f64) -> Result<Self> {
        let s = (sx * sx + sy * sy + sz * sz).sqrt();
        if s > 1.0 + NORM_TOL {
            return Err(Error::InvalidState(format!("Bloch vector norm {s} > 1")));
        }
        if s < 1e-15 {
            return Self::new(0.0, 0.0, 0.0);
        }
        let theta = (sz / s).clamp(-1.0, 1.0).acos();
        let phi = sy.atan2(sx).rem_euclid(TAU);
        Self::new(s.min(1.0), theta, phi)
    }

    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn sx(&self) -> f64 {
        self.s * self.theta.sin() * self.phi.cos()
    }
    pub fn sy(&self) -> f64 {
        self.s * self.theta.sin() * self.phi.sin()
    }
    pub fn sz(&self) -> f64 {
        self.s * self.theta.cos()
    }
    pub fn bloch(&self) -> [f64; 3] {
        [self.sx(), self.sy(), self.sz()]
    }

    /// The 2x2 density matrix in the (|eg>, |ge>) basis.
    pub fn matrix(&self) -> CMat {
        let (sx, sy, sz) = (self.sx(), self.sy(), self.sz());
        CMat::from_row_slice(
            2,
            2,
            &[
                C64::new((1.0 + sz) / 2.0, 0.0),
                C64::new(sx / 2.0, -sy / 2.0),
                C64::new(sx / 2.0, sy / 2.0),
                C64::new((1.0 - sz) / 2.0, 0.0),
            ],
        )
    }

    /// Embedding into the full two-qubit space (|ee>,|eg>,|ge>,|gg>), with the
    /// single-excitation block carrying all the weight.
    pub fn embed_two_qubit(&self) -> DensityMatrix {
        let m2 = self.matrix();
        let mut m = CMat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                m[(i + 1, j + 1)] = m2[(i, j)];
            }
        }
        DensityMatrix::new(m).expect("bloch embedding is a valid density matrix")
    }
}

/// Pure three-atom W-like state c1|egg> + c2 e^{i phi2}|geg> + c3 e^{i phi3}|gge>
/// with canonical real amplitudes c1 >= c2 >= c3 > 0 and unit norm. The local
/// phases are retained for fringe-shift work and are irrelevant to every
/// entanglement measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WLikeState {
    c: [f64; 3],
    phi2: f64,
    phi3: f64,
}

/// Result of canonicalizing three complex amplitudes: the canonical state, the
/// permutation mapping sorted slots to the original atom indices, the two
/// relative local phases, and the removed global phase.
#[derive(Debug, Clone, Copy)]
pub struct CanonicalizedWLike {
    pub state: WLikeState,
    /// `permutation[k]` is the original index of the k-th canonical amplitude.
    pub permutation: [usize; 3],
    /// Phases of the second and third canonical amplitudes relative to the first.
    pub phases: [f64; 2],
    pub global_phase: f64,
}

impl WLikeState {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        Self::with_phases(c1, c2, c3, 0.0, 0.0)
    }

    pub fn with_phases(c1: f64, c2: f64, c3: f64, phi2: f64, phi3: f64) -> Result<Self> {
        let c = [c1, c2, c3];
        if c.iter().any(|x| !x.is_finite()) || !(phi2.is_finite() && phi3.is_finite()) {
            return Err(Error::InvalidState("non-finite W-like parameter".into()));
        }
        if !(c1 >= c2 && c2 >= c3) {
            return Err(Error::InvalidState(format!(
                "amplitudes not in canonical order c1>=c2>=c3: ({c1}, {c2}, {c3})"
            )));
        }
        if c3 <= 0.0 {
            return Err(Error::InvalidState(
                "c3 must be strictly positive; a vanishing amplitude reduces to the two-atom case"
                    .into(),
            ));
        }
        let n2: f64 = c.iter().map(|x| x * x).sum();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm^2 = {n2}, not 1")));
        }
        let n = n2.sqrt();
        Ok(Self {
            c: [c1 / n, c2 / n, c3 / n],
            phi2: wrap_pi(phi2),
            phi3: wrap_pi(phi3),
        })
    }

    /// The W state (1,1,1)/sqrt(3).
    pub fn w_state() -> Self {
        let a = 1.0 / 3f64.sqrt();
        Self { c: [a, a, a], phi2: 0.0, phi3: 0.0 }
    }

    /// Map arbitrary complex amplitudes onto the canonical form by extracting
    /// local phases and sorting moduli in descending order.
    pub fn canonicalize(amplitudes: [C64; 3]) -> Result<CanonicalizedWLike> {
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm2 < 1e-24 {
            return Err(Error::InvalidState("all-zero amplitude vector".into()));
        }
        let n = norm2.sqrt();
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| {
            amplitudes[b]
                .norm()
                .partial_cmp(&amplitudes[a].norm())
                .unwrap()
                .then(a.cmp(&b))
        });
        let sorted: Vec<C64> = idx.iter().map(|&i| amplitudes[i] / n).collect();
        let moduli: Vec<f64> = sorted.iter().map(|a| a.norm()).collect();
        if moduli[2] <= 0.0 {
            return Err(Error::InvalidState(
                "zero amplitude: c3 > 0 required, problem reduces to the two-atom case".into(),
            ));
        }
        let global_phase = sorted[0].arg();
        let ph2 = wrap_pi(sorted[1].arg() - global_phase);
        let ph3 = wrap_pi(sorted[2].arg() - global_phase);
        let state = Self::with_phases(moduli[0], moduli[1], moduli[2], 0.0, 0.0)?;
        Ok(CanonicalizedWLike {
            state,
            permutation: idx,
            phases: [ph2, ph3],
            global_phase,
        })
    }

    pub fn c(&self) -> [f64; 3] {
        self.c
    }
    pub fn c1(&self) -> f64 {
        self.c[0]
    }
    pub fn c2(&self) -> f64 {
        self.c[1]
    }
    pub fn c3(&self) -> f64 {
        self.c[2]
    }
    pub fn phi2(&self) -> f64 {
        self.phi2
    }
    pub fn phi3(&self) -> f64 {
        self.phi3
    }

    /// Complex amplitudes including the local phases.
    pub fn amplitudes(&self) -> [C64; 3] {
        [
            C64::new(self.c[0], 0.0),
            C64::from_polar(self.c[1], self.phi2),
            C64::from_polar(self.c[2], self.phi3),
        ]
    }

    /// State vector in the 8-dimensional three-qubit space with e -> bit 1 and
    /// qubit 1 as the most significant factor: |egg> = index 4, |geg> = 2,
    /// |gge> = 1.
    pub fn state_vector(&self) -> CVec {
        let mut v = CVec::zeros(8);
        let a = self.amplitudes();
        v[4] = a[0];
        v[2] = a[1];
        v[1] = a[2];
        v
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        let v = self.state_vector();
        DensityMatrix::new(&v * v.adjoint()).expect("pure W-like projector is valid")
    }
}

fn wrap_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Hermitian, unit-trace, positive-semidefinite matrix of dimension 2, 4 or 8.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        let n = mat.nrows();
        if mat.ncols() != n || !matches!(n, 2 | 4 | 8) {
            return Err(Error::InvalidState(format!("density matrix dim {n} not in {{2,4,8}}")));
        }
        let herm_defect = (&mat - mat.adjoint()).camax();
        if herm_defect > 1e-9 {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm_defect:.2e})")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > PSD_TOL.max(1e-10) || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let eigs = herm_eigenvalues(&mat);
        if eigs[0] < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", eigs[0])));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(v: &CVec) -> Result<Self> {
        let n = v.norm();
        if n < 1e-12 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = v.unscale(n);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
    pub fn n_qubits(&self) -> usize {
        self.mat.nrows().trailing_zeros() as usize
    }
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Eigenvalues ascending, with values in [-1e-10, 0) clipped to zero.
    pub fn eigenvalues_clipped(&self) -> Vec<f64> {
        herm_eigenvalues(&self.mat).into_iter().map(|x| x.max(0.0)).collect()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// Principal eigenvector; meaningful for (near-)pure states.
    pub fn principal_vector(&self) -> CVec {
        let se = ((&self.mat + self.mat.adjoint()).scale(0.5)).symmetric_eigen();
        let mut best = 0;
        for k in 1..se.eigenvalues.len() {
            if se.eigenvalues[k] > se.eigenvalues[best] {
                best = k;
            }
        }
        se.eigenvectors.column(best).into_owned()
    }
}

/// JSON wire record for states: `{"type":"bloch","s":..,"theta":..,"phi":..}`
/// or `{"type":"wlike","c":[..],"phases":[..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StateRecord {
    Bloch { s: f64, theta: f64, phi: f64 },
    Wlike {
        c: [f64; 3],
        #[serde(default)]
        phases: [f64; 2],
    },
}

impl StateRecord {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidState(format!("bad state JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state record serializes")
    }
}

impl From<TwoQubitBlochState> for StateRecord {
    fn from(s: TwoQubitBlochState) -> Self {
        StateRecord::Bloch { s: s.s(), theta: s.theta(), phi: s.phi() }
    }
}

impl From<WLikeState> for StateRecord {
    fn from(s: WLikeState) -> Self {
        StateRecord::Wlike { c: s.c(), phases: [s.phi2(), s.phi3()] }
    }
}

impl TryFrom<StateRecord> for TwoQubitBlochState {
    type Error = Error;
    fn try_from(r: StateRecord) -> Result<Self> {
        match r {
            StateRecord::Bloch { s, theta, phi } => TwoQubitBlochState::new(s, theta, phi),
            _ => Err(Error::InvalidState("expected a bloch state record".into())),
        }
    }
}

impl TryFrom<StateRecord> for WLikeState {
    type Error = Error;
    fn try_from(r: StateRecord) -> Result<Self> {
        match r {
            StateRecord::Wlike { c, phases } => {
                WLikeState::with_phases(c[0], c[1], c[2], phases[0], phases[1])
            }
            _ => Err(Error::InvalidState("expected a wlike state record".into())),
        }
    }
}
