//! Two-spin realization of the interferometer: an electron qubit (system)
//! hyperfine-coupled to a nuclear qubit (ancilla), with the native control
//! set of that platform: fast electron rotations, slow selective nuclear
//! rotations, and free evolution under the coupling.
//!
//! Basis and labeling are electron-major |e, n>, with the physical initial
//! state |e = 0, n = 1>. The coupling is
//!
//! `H_I = (A/4)(sigma_z x 1 + 1 x sigma_z - sigma_z x sigma_z)`
//!     `= diag(A/4, A/4, A/4, -3A/4)`,
//!
//! so only the |1,1> level is shifted: the nuclear transition frequency
//! differs by |A| between the two electron manifolds, which is what makes
//! selective nuclear pulses possible. All rotations are half-angle,
//! `R_w(beta) = exp(-i beta sigma_w / 2)`.
//!
//! The controlled gates of the interferometer decompose exactly into this
//! control set. With `omega` the drive gap and `tau(u) = u omega / |A|`:
//!
//! `G1(u)  = Ry_e(theta) Rz_e(u omega) Rz_n(u omega / 2) F(tau) Ry_e(-theta)`
//! `G_B(u) = Ry_e(theta2) Rz_n(u omega / 2) F(tau) Ry_e(-theta2)`
//!
//! with `theta2 = theta + pi`. Both hold to machine precision with global
//! phase one; swapping theta2 for theta in G_B breaks the identity, which
//! pins the labeling. The z-rotations are virtual: compiled sequences push
//! them into the axis phases of later pulses instead of emitting them.

use crate::interferometer::AncillaReadout;
use crate::protocol::{h_of_t, DriveParams};
use crate::qmath::{
    eig_hermitian, kron, sigma_x, sigma_y, sigma_z, unitary_from_spectral, Mat2, Mat4, C64,
};
use std::f64::consts::PI;
use thiserror::Error;

/// Above this ratio of nuclear Rabi rate to coupling the selective-pulse
/// approximation degrades; constructors flag it.
pub const SELECTIVITY_WARN_RATIO: f64 = 0.05;

#[derive(Debug, Error)]
pub enum NvError {
    #[error("parameter {name} must be finite and nonzero, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("pulse has negative or non-finite duration {0}")]
    BadDuration(f64),
    #[error("pulse has non-finite axis or angle")]
    BadPulse,
}

/// Platform parameters: the drive seen by the electron plus the hyperfine
/// coupling and the two Rabi rates.
#[derive(Clone, Copy, Debug)]
pub struct NvParams {
    pub drive: DriveParams,
    /// Hyperfine coupling A (negative for this platform).
    pub a_hyperfine: f64,
    /// Nuclear (selective) Rabi rate.
    pub rabi_n: f64,
    /// Electron Rabi rate, used only by the finite-duration pulse model.
    pub rabi_e: f64,
}

impl NvParams {
    pub fn new(
        drive: DriveParams,
        a_hyperfine: f64,
        rabi_n: f64,
        rabi_e: f64,
    ) -> Result<Self, NvError> {
        for (name, value) in [
            ("a_hyperfine", a_hyperfine),
            ("rabi_n", rabi_n),
            ("rabi_e", rabi_e),
        ] {
            if !value.is_finite() || value == 0.0 {
                return Err(NvError::BadParameter { name, value });
            }
        }
        Ok(NvParams {
            drive,
            a_hyperfine,
            rabi_n,
            rabi_e,
        })
    }

    /// Hardware-scale parameter set in rad/us: A = -2 pi 2.16, nuclear Rabi
    /// rate |A|/24 (which makes the selective pi/2 an even multiple of the
    /// coupling period), electron Rabi rate equal to the drive amplitude.
    pub fn hardware() -> Self {
        let drive = DriveParams::hardware();
        let a = -2.0 * PI * 2.16;
        NvParams::new(drive, a, a.abs() / 24.0, drive.omega_rabi).unwrap()
    }

    /// Same dimensionless shape as [`NvParams::hardware`] rescaled onto an
    /// arbitrary drive: every frequency keeps its ratio to the drive
    /// amplitude.
    pub fn from_drive(drive: DriveParams) -> Self {
        let a = -(2.16 * 39.0 / 875.0) * drive.omega_rabi;
        NvParams::new(drive, a, a.abs() / 24.0, drive.omega_rabi).unwrap()
    }

    pub fn omega(&self) -> f64 {
        self.drive.omega()
    }

    pub fn theta(&self) -> f64 {
        self.drive.theta()
    }

    /// Electron-frame angle of the second decomposition; theta + pi.
    pub fn theta2(&self) -> f64 {
        self.drive.theta() + PI
    }

    /// Free-evolution time that imprints the phase u omega between the
    /// nuclear manifolds.
    pub fn tau(&self, u: f64) -> f64 {
        u * self.omega() / self.a_hyperfine.abs()
    }

    pub fn selectivity_ratio(&self) -> f64 {
        self.rabi_n.abs() / self.a_hyperfine.abs()
    }

    pub fn selectivity_ok(&self) -> bool {
        self.selectivity_ratio() <= SELECTIVITY_WARN_RATIO
    }

    /// Duration of a selective nuclear rotation by `angle`.
    pub fn selective_duration(&self, angle: f64) -> f64 {
        angle / self.rabi_n
    }
}

/// One hardware instruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseTarget {
    Electron,
    Nuclear,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse {
    pub target: PulseTarget,
    /// In-plane axis angle: the rotation axis is (cos a, sin a, 0).
    pub axis: f64,
    /// Rotation angle (half-angle convention applies in the unitary).
    pub angle: f64,
    /// Wall-clock duration; zero for idealized electron pulses.
    pub duration: f64,
    /// True for manifold-selective nuclear drive.
    pub selective: bool,
}

impl Pulse {
    pub fn electron(axis: f64, angle: f64) -> Pulse {
        Pulse {
            target: PulseTarget::Electron,
            axis,
            angle,
            duration: 0.0,
            selective: false,
        }
    }

    pub fn free(duration: f64) -> Pulse {
        Pulse {
            target: PulseTarget::Free,
            axis: 0.0,
            angle: 0.0,
            duration,
            selective: false,
        }
    }

    pub fn nuclear_selective(params: &NvParams, axis: f64, angle: f64) -> Pulse {
        Pulse {
            target: PulseTarget::Nuclear,
            axis,
            angle,
            duration: params.selective_duration(angle),
            selective: true,
        }
    }
}

/// diag(A/4, A/4, A/4, -3A/4).
pub fn h_interaction(params: &NvParams) -> Mat4 {
    let a4 = params.a_hyperfine / 4.0;
    Mat4::diag([
        C64::new(a4, 0.0),
        C64::new(a4, 0.0),
        C64::new(a4, 0.0),
        C64::new(-3.0 * a4, 0.0),
    ])
}

/// exp(-i tau H_I): diagonal, exact.
pub fn free_evolution(params: &NvParams, tau: f64) -> Mat4 {
    let a4 = params.a_hyperfine / 4.0;
    Mat4::diag([
        C64::from_polar(1.0, -tau * a4),
        C64::from_polar(1.0, -tau * a4),
        C64::from_polar(1.0, -tau * a4),
        C64::from_polar(1.0, 3.0 * tau * a4),
    ])
}

fn in_plane_axis(axis: f64) -> Mat2 {
    let (s, c) = axis.sin_cos();
    sigma_x()
        .scale(C64::new(c, 0.0))
        .add(&sigma_y().scale(C64::new(s, 0.0)))
}

/// R_axis(angle) on one qubit: exp(-i angle/2 (cos axis sx + sin axis sy)).
pub fn rotation2(axis: f64, angle: f64) -> Mat2 {
    crate::protocol::exp_neg_i_h2(&in_plane_axis(axis).scale(C64::new(0.5, 0.0)), angle)
}

fn z_rotation2(angle: f64) -> Mat2 {
    crate::protocol::exp_neg_i_h2(&sigma_z().scale(C64::new(0.5, 0.0)), angle)
}

/// Idealized (instantaneous) electron rotation.
pub fn electron_rotation(axis: f64, angle: f64) -> Mat4 {
    kron(&rotation2(axis, angle), &Mat2::identity())
}

/// Virtual electron z rotation, kept for decomposition checks; compiled
/// sequences realize it as an axis shift instead.
pub fn electron_z(angle: f64) -> Mat4 {
    kron(&z_rotation2(angle), &Mat2::identity())
}

/// Virtual nuclear z rotation.
pub fn nuclear_z(angle: f64) -> Mat4 {
    kron(&Mat2::identity(), &z_rotation2(angle))
}

/// Selective nuclear pulse: the drive is resonant with the nuclear
/// transition of the electron-|0> manifold, so
/// `H = H_I + (rabi_n / 2) P0_e x (cos a sx + sin a sy)`.
/// Both electron blocks commute with H_I, giving the exact block form
/// `e^{-i T A/4} [ R_a(rabi_n T) (+) diag(1, e^{i T A}) ]`; the spectator
/// manifold only accrues coupling phase.
pub fn selective_nuclear(params: &NvParams, axis: f64, angle: f64) -> Mat4 {
    let t = params.selective_duration(angle);
    selective_nuclear_timed(params, axis, t)
}

/// Same pulse parametrized by duration rather than angle.
pub fn selective_nuclear_timed(params: &NvParams, axis: f64, duration: f64) -> Mat4 {
    let a = params.a_hyperfine;
    let common = C64::from_polar(1.0, -duration * a / 4.0);
    let driven = rotation2(axis, params.rabi_n * duration).scale(common);
    let spectator = Mat2::diag([common, common * C64::from_polar(1.0, duration * a)]);
    let mut u = Mat4::zero();
    for i in 0..2 {
        for j in 0..2 {
            u.a[i][j] = driven.a[i][j];
            u.a[2 + i][2 + j] = spectator.a[i][j];
        }
    }
    u
}

/// Unitary of one instruction under the idealized model: electron pulses
/// instantaneous, nuclear pulses selective with the coupling active, free
/// evolution exact.
pub fn pulse_unitary(params: &NvParams, pulse: &Pulse) -> Result<Mat4, NvError> {
    if !pulse.axis.is_finite() || !pulse.angle.is_finite() {
        return Err(NvError::BadPulse);
    }
    if !pulse.duration.is_finite() || pulse.duration < 0.0 {
        return Err(NvError::BadDuration(pulse.duration));
    }
    Ok(match pulse.target {
        PulseTarget::Electron => electron_rotation(pulse.axis, pulse.angle),
        PulseTarget::Nuclear => selective_nuclear_timed(params, pulse.axis, pulse.duration),
        PulseTarget::Free => free_evolution(params, pulse.duration),
    })
}

/// Electron pulse with the coupling active during a finite duration
/// `angle / rabi_e`: the error of the instantaneous idealization. The
/// generator is constant, so the exponential is exact (one eigensolve).
pub fn electron_rotation_finite(params: &NvParams, axis: f64, angle: f64) -> Result<Mat4, NvError> {
    let duration = angle.abs() / params.rabi_e.abs();
    let sign = if angle >= 0.0 { 1.0 } else { -1.0 };
    let h = h_interaction(params).add(&kron(
        &in_plane_axis(axis).scale(C64::new(sign * params.rabi_e.abs() / 2.0, 0.0)),
        &Mat2::identity(),
    ));
    let dec = eig_hermitian(&h).map_err(|_| NvError::BadPulse)?;
    Ok(unitary_from_spectral(&dec, duration))
}

/// Physical initial state |e = 0, n = 1>.
pub fn initial_joint_state() -> Mat4 {
    let mut rho = Mat4::zero();
    rho.a[1][1] = C64::new(1.0, 0.0);
    rho
}

/// Readout quadrature selector for compiled sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    /// Final nuclear <sigma_z> equals Re G(u).
    Real,
    /// Final nuclear <sigma_z> equals Im G(u).
    Imag,
}

/// Compiles the interferometric measurement of G(u) at protocol time `t`
/// into the native instruction set.
///
/// Layout: opening selective pi/2 splits the nuclear spin; a single merged
/// electron pulse prepares the protocol |+> state and absorbs the opening
/// frame rotation of G1; free evolution and a frame-shifted electron
/// rotation complete G1; the bare Rabi drive implements the protocol
/// unitary; a second rotation, free evolution, and a closing selective
/// sandwich (pi/2, electron pi, pi/2) complete G_B and map the chosen
/// coherence quadrature onto nuclear sigma_z.
///
/// Virtual z bookkeeping: the electron z rotation of G1 shifts every later
/// electron axis by -u omega; the two nuclear z half-rotations shift the
/// closing sandwich axis by -u omega in total, with a further -pi/2 to
/// select the imaginary quadrature.
pub fn compile_sequence(params: &NvParams, u: f64, t: f64, quad: Quadrature) -> Vec<Pulse> {
    let om = params.omega();
    let theta = params.theta();
    let theta2 = params.theta2();
    let tau = params.tau(u);
    let sh = -u * om;
    let a_close = match quad {
        Quadrature::Real => -u * om,
        Quadrature::Imag => -u * om - PI / 2.0,
    };
    vec![
        Pulse::nuclear_selective(params, 0.0, PI / 2.0),
        Pulse::electron(-PI / 2.0, PI / 2.0),
        Pulse::free(tau),
        Pulse::electron(PI / 2.0 + sh, theta),
        Pulse::electron(sh, params.drive.omega_rabi * t),
        Pulse::electron(-PI / 2.0 + sh, theta2),
        Pulse::free(tau),
        Pulse::nuclear_selective(params, a_close, PI / 2.0),
        Pulse::electron(sh, PI),
        Pulse::nuclear_selective(params, a_close, PI / 2.0),
    ]
}

/// Applies the instructions to `rho0` and returns the final nuclear
/// <sigma_z>.
pub fn simulate_sequence(
    params: &NvParams,
    pulses: &[Pulse],
    rho0: &Mat4,
) -> Result<f64, NvError> {
    let mut rho = *rho0;
    for p in pulses.iter() {
        let u = pulse_unitary(params, p)?;
        rho = u.mul(&rho).mul(&u.dagger());
    }
    Ok(rho.trace_mul(&kron(&Mat2::identity(), &sigma_z())).re)
}

/// Runs both compiled quadratures from the physical initial state; the
/// calibrated pair equals (Re G, Im G).
pub fn run_pulse_readout(params: &NvParams, u: f64, t: f64) -> Result<AncillaReadout, NvError> {
    let rho0 = initial_joint_state();
    let sx = simulate_sequence(params, &compile_sequence(params, u, t, Quadrature::Real), &rho0)?;
    let sy = simulate_sequence(params, &compile_sequence(params, u, t, Quadrature::Imag), &rho0)?;
    Ok(AncillaReadout { sx, sy })
}

/// The exact gate-frame decomposition of the first controlled gate,
/// including its virtual z rotations.
pub fn g1_decomposition(params: &NvParams, u: f64) -> Mat4 {
    let om = params.omega();
    electron_rotation(PI / 2.0, params.theta())
        .mul(&electron_z(u * om))
        .mul(&nuclear_z(u * om / 2.0))
        .mul(&free_evolution(params, params.tau(u)))
        .mul(&electron_rotation(PI / 2.0, -params.theta()))
}

/// The exact decomposition of the merged second gate.
pub fn gb_decomposition(params: &NvParams, u: f64) -> Mat4 {
    let om = params.omega();
    electron_rotation(PI / 2.0, params.theta2())
        .mul(&nuclear_z(u * om / 2.0))
        .mul(&free_evolution(params, params.tau(u)))
        .mul(&electron_rotation(PI / 2.0, -params.theta2()))
}

fn nuclear_projector(level: usize) -> Mat2 {
    let mut p = Mat2::zero();
    p.a[level][level] = C64::new(1.0, 0.0);
    p
}

/// Target form of G1: exp(-i u H(0)) on the electron when the nucleus is in
/// |0>, identity otherwise.
pub fn g1_target(params: &NvParams, u: f64) -> Mat4 {
    let h0 = h_of_t(&params.drive, 0.0);
    let dec = eig_hermitian(&h0).expect("drive Hamiltonian is Hermitian");
    let e = unitary_from_spectral(&dec, u);
    kron(&e, &nuclear_projector(0)).add(&kron(&Mat2::identity(), &nuclear_projector(1)))
}

/// Target form of G_B: the controlled phase on the opposite nuclear level.
pub fn gb_target(params: &NvParams, u: f64) -> Mat4 {
    let h0 = h_of_t(&params.drive, 0.0);
    let dec = eig_hermitian(&h0).expect("drive Hamiltonian is Hermitian");
    let e = unitary_from_spectral(&dec, u);
    kron(&Mat2::identity(), &nuclear_projector(0)).add(&kron(&e, &nuclear_projector(1)))
}

/// Exact Frobenius distances (no phase freedom: the identities hold with
/// global phase one) of both decompositions at this u.
#[derive(Clone, Copy, Debug)]
pub struct DecompositionCheck {
    pub g1_distance: f64,
    pub gb_distance: f64,
}

pub fn verify_decompositions(params: &NvParams, u: f64) -> DecompositionCheck {
    DecompositionCheck {
        g1_distance: g1_decomposition(params, u)
            .sub(&g1_target(params, u))
            .frobenius_norm(),
        gb_distance: gb_decomposition(params, u)
            .sub(&gb_target(params, u))
            .frobenius_norm(),
    }
}

/// Residual of the selective-duration rule. The spectator manifold of a
/// selective pi/2 pulse accrues the relative phase e^{i T A}; when T is an
/// even multiple of 2 pi / |A| (here T |A| = 12 pi exactly) that phase is
/// one and the pulse acts as pure nuclear rotation times a global phase.
#[derive(Clone, Copy, Debug)]
pub struct DurationRule {
    /// T |A| / 2 pi, which should be an even integer.
    pub coupling_periods: f64,
    /// |e^{i T A} - 1|.
    pub residual: f64,
}

pub fn duration_rule(params: &NvParams) -> DurationRule {
    let t = params.selective_duration(PI / 2.0);
    let phase = t * params.a_hyperfine;
    DurationRule {
        coupling_periods: t * params.a_hyperfine.abs() / (2.0 * PI),
        residual: (C64::from_polar(1.0, phase) - C64::new(1.0, 0.0)).norm(),
    }
}

/// One line per instruction: `target axis angle duration selective`.
pub fn export_pulses(pulses: &[Pulse]) -> String {
    let mut out = String::new();
    for p in pulses.iter() {
        let target = match p.target {
            PulseTarget::Electron => "electron",
            PulseTarget::Nuclear => "nuclear",
            PulseTarget::Free => "free",
        };
        out.push_str(&format!(
            "{} {:.17e} {:.17e} {:.17e} {}\n",
            target, p.axis, p.angle, p.duration, p.selective
        ));
    }
    out
}
