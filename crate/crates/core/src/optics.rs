//! Probe states, interferometer unitary, waveplates and detection projectors.
//!
//! Basis ordering is fixed: photon 1 before photon 2, path before
//! polarization within a photon, path basis `(u, l)`, polarization basis
//! `(H, V)`. On the 16-dim space the flat index of `|k1 s1 k2 s2>` is
//! `8 k1 + 4 s1 + 2 k2 + s2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decoherence::depolarize_two_photon_path;
use crate::error::{Error, Result};
use crate::quantum::{
    apply_unitary, identity, kron, CMatrix, CVector, DensityOperator, HilbertSpace, ProjectorSet, PureState,
    C64, I, ONE, ZERO,
};
use crate::sensitivity::{fisher_closed_form_bare, fisher_from_model, InterferometerModel};

pub const PATH1: &str = "path1";
pub const POL1: &str = "pol1";
pub const PATH2: &str = "path2";
pub const POL2: &str = "pol2";

pub const UPPER: usize = 0;
pub const LOWER: usize = 1;
pub const H: usize = 0;
pub const V: usize = 1;

/// 2x2 complex matrix, row-major.
pub type Jones = [[C64; 2]; 2];

pub fn path_space() -> HilbertSpace {
    HilbertSpace::new([(PATH1, 2), (PATH2, 2)]).expect("static space")
}

pub fn full_space() -> HilbertSpace {
    HilbertSpace::new([(PATH1, 2), (POL1, 2), (PATH2, 2), (POL2, 2)]).expect("static space")
}

/// Maps an angle into `[0, pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Uniform grid `k pi / n`, `k = 0..n`, over `[0, pi)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * PI / n as f64).collect()
}

/// The four waveplate angles: `alpha1`, `alpha2` prepare the input state,
/// `beta1`, `beta2` set the polarization analysis in the upper and lower
/// output arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl ParameterSet {
    pub fn new(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            alpha1: normalize_angle(alpha1),
            alpha2: normalize_angle(alpha2),
            beta1: normalize_angle(beta1),
            beta2: normalize_angle(beta2),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.beta1, self.beta2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Lexicographic order over `(alpha1, alpha2, beta1, beta2)`.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

impl fmt::Display for ParameterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(a1={:.6}, a2={:.6}, b1={:.6}, b2={:.6})",
            self.alpha1, self.alpha2, self.beta1, self.beta2
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseArm {
    Upper,
    Lower,
}

/// Order in which the light meets the two analysis plates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlateOrder {
    /// `V(beta) = QWP(r beta) HWP(beta)`.
    HwpThenQwp,
    /// `V(beta) = HWP(beta) QWP(r beta)`.
    QwpThenHwp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveplate {
    Half,
    Quarter,
}

/// Sign of the `|lH u a2> , |u a2 lH>` cross term of the ancilla input state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AncillaCrossTerm {
    /// `cos a1 sin a1 (|lH u a2> - |u a2 lH>)`. The two photons then factorize.
    Antisymmetric,
    /// `cos a1 sin a1 (|lH u a2> + |u a2 lH>)`, entangled whenever `sin 2 a1 != 0`.
    Symmetric,
}

/// Matrix conventions for the beamsplitters, the phase arm and the analysis
/// plates, plus the form of the ancilla input state.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalConvention {
    pub beamsplitter: Jones,
    pub phase_arm: PhaseArm,
    pub plate_order: PlateOrder,
    /// QWP optic-axis angle as a multiple of the HWP angle.
    pub qwp_angle_ratio: f64,
    pub ancilla_cross_term: AncillaCrossTerm,
}

impl Default for OpticalConvention {
    fn default() -> Self {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        let t = C64::new(0.0, FRAC_1_SQRT_2);
        Self {
            beamsplitter: [[r, t], [t, r]],
            phase_arm: PhaseArm::Upper,
            plate_order: PlateOrder::HwpThenQwp,
            qwp_angle_ratio: 2.0,
            ancilla_cross_term: AncillaCrossTerm::Antisymmetric,
        }
    }
}

impl OpticalConvention {
    /// Lossless splitter `[[sqrt(t), i sqrt(1-t)], [i sqrt(1-t), sqrt(t)]]`.
    pub fn with_transmissivity(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Config(format!("beamsplitter transmissivity {t} outside [0, 1]")));
        }
        let a = C64::new(t.sqrt(), 0.0);
        let b = C64::new(0.0, (1.0 - t).sqrt());
        Ok(Self {
            beamsplitter: [[a, b], [b, a]],
            ..Self::default()
        })
    }

    /// Hex SHA-256 over the canonical text form of every convention field.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for row in &self.beamsplitter {
            for z in row {
                h.update(format!("{:.17e},{:.17e};", z.re, z.im).as_bytes());
            }
        }
        h.update(
            format!(
                "{:?};{:?};{:.17e};{:?}",
                self.phase_arm, self.plate_order, self.qwp_angle_ratio, self.ancilla_cross_term
            )
            .as_bytes(),
        );
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Runs both interferometer checks.
    pub fn validate(&self) -> ValidationReport {
        validate_convention(self)
    }

    pub fn into_validated(self) -> Result<ValidatedConvention> {
        let report = self.validate();
        match report.first_failure() {
            Some(check) => Err(Error::Convention(format!(
                "{} failed: max deviation {:e} at phi = {}",
                check.name, check.max_deviation, check.worst_phi
            ))),
            None => Ok(ValidatedConvention(self)),
        }
    }

    /// Single-photon path unitary `BS diag(e^{i phi}, 1) BS` (or the lower-arm
    /// variant) and its first two phase derivatives.
    pub fn path_unitary(&self, phi: f64) -> [Jones; 3] {
        let e = C64::from_polar(1.0, phi);
        let (arm, other) = match self.phase_arm {
            PhaseArm::Upper => (0, 1),
            PhaseArm::Lower => (1, 0),
        };
        let mut diag = [[ZERO; 2]; 2];
        diag[arm][arm] = e;
        diag[other][other] = ONE;
        let mut d1 = [[ZERO; 2]; 2];
        d1[arm][arm] = I * e;
        let mut d2 = [[ZERO; 2]; 2];
        d2[arm][arm] = -e;
        let bs = &self.beamsplitter;
        [
            mat2_mul(&mat2_mul(bs, &diag), bs),
            mat2_mul(&mat2_mul(bs, &d1), bs),
            mat2_mul(&mat2_mul(bs, &d2), bs),
        ]
    }

    /// Polarization analysis unitary applied in an output arm.
    pub fn analysis_unitary(&self, beta: f64) -> Jones {
        let hwp = waveplate_jones(Waveplate::Half, beta);
        let qwp = waveplate_jones(Waveplate::Quarter, self.qwp_angle_ratio * beta);
        match self.plate_order {
            PlateOrder::HwpThenQwp => mat2_mul(&qwp, &hwp),
            PlateOrder::QwpThenHwp => mat2_mul(&hwp, &qwp),
        }
    }
}

/// A convention that passed [`validate_convention`]. The simulation
/// pipeline only accepts this type.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConvention(OpticalConvention);

impl ValidatedConvention {
    /// The default convention, validated once per process.
    pub fn shipped() -> &'static ValidatedConvention {
        static SHIPPED: OnceLock<ValidatedConvention> = OnceLock::new();
        SHIPPED.get_or_init(|| {
            OpticalConvention::default()
                .into_validated()
                .expect("shipped optical convention must validate")
        })
    }
}

impl std::ops::Deref for ValidatedConvention {
    type Target = OpticalConvention;

    fn deref(&self) -> &OpticalConvention {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionCheck {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub worst_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub fingerprint: String,
    pub checks: Vec<ConventionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&ConventionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Grid used by the convention checks.
pub const VALIDATION_GRID: usize = 256;
const VALIDATION_TOL: f64 = 1e-8;
const BLIND_SPOT_TOL: f64 = 1e-9;
const VALIDATION_P: f64 = 0.005;

/// Checks that the ideal probe reaches F = 4 at every phase and that the
/// depolarized two-outcome Fisher information follows the closed form, with
/// zeros at 0, pi/2 and pi.
pub fn validate_convention(conv: &OpticalConvention) -> ValidationReport {
    let grid = phase_grid(VALIDATION_GRID);
    let mut checks = Vec::new();

    let heisenberg = InterferometerModel::bare_unchecked(conv.clone(), 0.0);
    let (dev, at) = worst_deviation(&grid, |phi| fisher_from_model(&heisenberg, phi).value - 4.0);
    checks.push(ConventionCheck {
        name: "heisenberg-limit".into(),
        passed: dev <= VALIDATION_TOL,
        max_deviation: dev,
        worst_phi: at,
    });

    let noisy = InterferometerModel::bare_unchecked(conv.clone(), VALIDATION_P);
    let (dev, at) = worst_deviation(&grid, |phi| {
        fisher_from_model(&noisy, phi).value - fisher_closed_form_bare(phi, VALIDATION_P)
    });
    checks.push(ConventionCheck {
        name: "depolarized-closed-form".into(),
        passed: dev <= VALIDATION_TOL,
        max_deviation: dev,
        worst_phi: at,
    });

    let (dev, at) = worst_deviation(&[0.0, PI / 2.0, PI], |phi| fisher_from_model(&noisy, phi).value);
    checks.push(ConventionCheck {
        name: "blind-spots".into(),
        passed: dev <= BLIND_SPOT_TOL,
        max_deviation: dev,
        worst_phi: at,
    });

    ValidationReport {
        fingerprint: conv.fingerprint(),
        checks,
    }
}

fn worst_deviation(grid: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64) {
    grid.iter()
        .map(|&phi| {
            let d = f(phi).abs();
            // NaN counts as an infinite deviation.
            (if d.is_nan() { f64::INFINITY } else { d }, phi)
        })
        .fold((0.0, grid.first().copied().unwrap_or(0.0)), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        })
}

pub fn mat2_mul(a: &Jones, b: &Jones) -> Jones {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn jones_to_matrix(j: &Jones) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[j[0][0], j[0][1], j[1][0], j[1][1]])
}

/// Half- and quarter-wave plate Jones matrices with optic axis at `theta`.
pub fn waveplate_jones(kind: Waveplate, theta: f64) -> Jones {
    match kind {
        Waveplate::Half => {
            let (s, c) = (2.0 * theta).sin_cos();
            [[C64::new(c, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-c, 0.0)]]
        }
        Waveplate::Quarter => {
            let (s, c) = theta.sin_cos();
            let rot = [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]];
            let rot_inv = [[C64::new(c, 0.0), C64::new(s, 0.0)], [C64::new(-s, 0.0), C64::new(c, 0.0)]];
            let retarder = [[ONE, ZERO], [ZERO, I]];
            let phase = C64::from_polar(1.0, -PI / 4.0);
            let m = mat2_mul(&mat2_mul(&rot, &retarder), &rot_inv);
            [[phase * m[0][0], phase * m[0][1]], [phase * m[1][0], phase * m[1][1]]]
        }
    }
}

/// `(|u,l> + |l,u>) / sqrt(2)` on the path-only space.
pub fn pure_probe_state() -> PureState {
    let mut amps = CVector::zeros(4);
    amps[UPPER * 2 + LOWER] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[LOWER * 2 + UPPER] = C64::new(FRAC_1_SQRT_2, 0.0);
    PureState::new(path_space(), amps).expect("probe state is normalized")
}

pub fn full_index(k1: usize, s1: usize, k2: usize, s2: usize) -> usize {
    8 * k1 + 4 * s1 + 2 * k2 + s2
}

/// Path-polarization entangled input state prepared by the `alpha1`, `alpha2` plates:
///
/// `cos^2 a1 |lHlH> - sin^2 a1 |u a2 u a2> + cos a1 sin a1 (|lH u a2> - |u a2 lH>)`
///
/// with `|a2> = cos a2 |H> - sin a2 |V>`.
pub fn ancilla_input_state(alpha1: f64, alpha2: f64) -> PureState {
    ancilla_input_state_with(AncillaCrossTerm::Antisymmetric, alpha1, alpha2)
}

/// Ancilla input state with a chosen cross-term sign.
pub fn ancilla_input_state_with(cross: AncillaCrossTerm, alpha1: f64, alpha2: f64) -> PureState {
    let sign = match cross {
        AncillaCrossTerm::Antisymmetric => -1.0,
        AncillaCrossTerm::Symmetric => 1.0,
    };
    let (s1, c1) = alpha1.sin_cos();
    let (s2, c2) = alpha2.sin_cos();
    let pol_a2 = [c2, -s2];
    let mut amps = CVector::zeros(16);
    amps[full_index(LOWER, H, LOWER, H)] += C64::new(c1 * c1, 0.0);
    for (sa, &ca) in pol_a2.iter().enumerate() {
        for (sb, &cb) in pol_a2.iter().enumerate() {
            amps[full_index(UPPER, sa, UPPER, sb)] -= C64::new(s1 * s1 * ca * cb, 0.0);
        }
        amps[full_index(LOWER, H, UPPER, sa)] += C64::new(c1 * s1 * ca, 0.0);
        amps[full_index(UPPER, sa, LOWER, H)] += C64::new(sign * c1 * s1 * ca, 0.0);
    }
    // Renormalize away the last ulp so the state passes the strict norm check.
    let norm = amps.norm();
    PureState::new(full_space(), amps.unscale(norm)).expect("ancilla state is normalized")
}

/// Two-photon interferometer unitary `u(phi) (x) u(phi)` on the path space.
pub fn mzi_unitary(conv: &OpticalConvention, phi: f64) -> CMatrix {
    let u = jones_to_matrix(&conv.path_unitary(phi)[0]);
    kron(&u, &u)
}

/// The interferometer unitary on the 16-dim space (identity on polarization).
pub fn mzi_unitary_full(conv: &OpticalConvention, phi: f64) -> CMatrix {
    let u = kron(&jones_to_matrix(&conv.path_unitary(phi)[0]), &identity(2));
    kron(&u, &u)
}

/// `U`, `dU/dphi`, `d^2U/dphi^2` for the two-photon interferometer.
pub fn mzi_unitary_derivatives(conv: &OpticalConvention, phi: f64, with_polarization: bool) -> [CMatrix; 3] {
    let [u0, u1, u2] = conv.path_unitary(phi).map(|j| {
        let m = jones_to_matrix(&j);
        if with_polarization {
            kron(&m, &identity(2))
        } else {
            m
        }
    });
    [
        kron(&u0, &u0),
        kron(&u1, &u0) + kron(&u0, &u1),
        kron(&u2, &u0) + kron(&u1, &u1).scale(2.0) + kron(&u0, &u2),
    ]
}

/// `Pi_c` (one photon per output port) and `Pi_d` (both photons in one port).
pub fn coincidence_double_povm() -> ProjectorSet {
    let mut pc = CMatrix::zeros(4, 4);
    let mut pd = CMatrix::zeros(4, 4);
    for k1 in 0..2 {
        for k2 in 0..2 {
            let idx = 2 * k1 + k2;
            if k1 == k2 {
                pd[(idx, idx)] = ONE;
            } else {
                pc[(idx, idx)] = ONE;
            }
        }
    }
    ProjectorSet::new(path_space(), vec![pc, pd], vec!["coincidence".into(), "double".into()])
        .expect("coincidence/double projectors are complete")
}

/// Per-photon 4x4 analysis: `V(beta1)` on the upper output arm, `V(beta2)` on the lower.
pub fn photon_analysis(conv: &OpticalConvention, beta1: f64, beta2: f64) -> CMatrix {
    let mut w = CMatrix::zeros(4, 4);
    for (path, beta) in [(UPPER, beta1), (LOWER, beta2)] {
        let v = conv.analysis_unitary(beta);
        for s in 0..2 {
            for t in 0..2 {
                w[(2 * path + s, 2 * path + t)] = v[s][t];
            }
        }
    }
    w
}

const PATH_LABELS: [&str; 2] = ["u", "l"];
const POL_LABELS: [&str; 2] = ["H", "V"];

/// Label of outcome `m` of the 16-outcome analysis, e.g. `u,H,l,V`.
pub fn outcome_label(m: usize) -> String {
    format!(
        "{},{},{},{}",
        PATH_LABELS[(m >> 3) & 1],
        POL_LABELS[(m >> 2) & 1],
        PATH_LABELS[(m >> 1) & 1],
        POL_LABELS[m & 1]
    )
}

/// The 16 rank-1 projectors `W^dag |k1 s1 k2 s2><k1 s1 k2 s2| W` with `W = w (x) w`.
pub fn analysis_povm(conv: &OpticalConvention, beta1: f64, beta2: f64) -> ProjectorSet {
    try_analysis_povm(conv, beta1, beta2).expect("rotated computational basis is a complete projector set")
}

/// [`analysis_povm`] with the projector-set validation error surfaced.
pub fn try_analysis_povm(conv: &OpticalConvention, beta1: f64, beta2: f64) -> Result<ProjectorSet> {
    let w = photon_analysis(conv, beta1, beta2);
    let big = kron(&w, &w);
    let projectors = (0..16)
        .map(|m| {
            let row = big.row(m).transpose();
            let ket = row.map(|z| z.conj());
            &ket * ket.adjoint()
        })
        .collect();
    ProjectorSet::new(full_space(), projectors, (0..16).map(outcome_label).collect())
}

/// The state reaching the detectors, before polarization analysis.
///
/// Without `theta` this is the bare probe on the path space; with `theta`
/// the ancilla-entangled probe on the full space (the beta angles only
/// affect the measurement).
pub fn output_state(
    conv: &ValidatedConvention,
    phi: f64,
    p: f64,
    theta: Option<&ParameterSet>,
) -> Result<DensityOperator> {
    let (input, with_pol) = match theta {
        None => (pure_probe_state().density(), false),
        Some(t) => (ancilla_input_state_with(conv.ancilla_cross_term, t.alpha1, t.alpha2).density(), true),
    };
    let decohered = depolarize_two_photon_path(&input, p)?;
    let u = if with_pol {
        mzi_unitary_full(conv, phi)
    } else {
        mzi_unitary(conv, phi)
    };
    apply_unitary(&decohered, &u)
}
