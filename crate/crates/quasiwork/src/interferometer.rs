//! Ancilla interferometer that measures the characteristic function of work.
//!
//! A single ancilla qubit is prepared in an equal superposition; two
//! controlled evolutions imprint the initial-energy and final-energy phases
//! on its two branches, and the surviving coherence equals G(u)/2. System
//! and ancilla are ordered system-major in all 4x4 operators.
//!
//! Branch bookkeeping: with the ancilla-|0> branch carrying
//! `exp(-i u H(0))` before the drive and the ancilla-|1> branch carrying
//! `exp(-i u H(t))` after it, the (0,1) coherence of the reduced ancilla
//! state is `Tr[exp(-i u H(0)) rho U^dag exp(+i u H(t)) U] / 2`: the bra
//! side of the |1> branch conjugates its exponent.

use crate::protocol::{exp_neg_i_h2, WorkProtocol};
use crate::qmath::{kron, sigma_x, sigma_y, unitary_from_spectral, Mat2, Mat4, C64};

/// Which gate set realizes the second energy phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitVariant {
    /// Full drive U(t) between the controlled gates; the second gate uses
    /// the final Hamiltonian H(t).
    G2Full,
    /// The drive reduced to its bare Rabi rotation; both controlled gates
    /// use H(0). Valid because H(t) is a z-rotation conjugate of H(0) for
    /// this drive family, so the detuning frame can be absorbed.
    GBSimplified,
}

/// The two readout quadratures of the ancilla, calibrated so that
/// `(sx, sy) = (Re G, Im G)`. The second entry is the negative of the raw
/// sigma_y expectation; on hardware the two quadratures are separate runs
/// and this sign is part of the readout calibration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncillaReadout {
    pub sx: f64,
    pub sy: f64,
}

impl AncillaReadout {
    pub fn as_complex(&self) -> C64 {
        C64::new(self.sx, self.sy)
    }
}

fn projector0() -> Mat2 {
    let mut p = Mat2::zero();
    p.a[0][0] = C64::new(1.0, 0.0);
    p
}

fn projector1() -> Mat2 {
    let mut p = Mat2::zero();
    p.a[1][1] = C64::new(1.0, 0.0);
    p
}

fn hadamard() -> Mat2 {
    let s = 1.0 / 2.0f64.sqrt();
    Mat2::from_rows([
        [C64::new(s, 0.0), C64::new(s, 0.0)],
        [C64::new(s, 0.0), C64::new(-s, 0.0)],
    ])
}

/// First controlled gate: `exp(-i u H(0))` on the system when the ancilla
/// is |0>, identity otherwise.
pub fn gate_g1(proto: &WorkProtocol, u: f64) -> Mat4 {
    let e = unitary_from_spectral(&proto.h0.spectral, u);
    kron(&e, &projector0()).add(&kron(&Mat2::identity(), &projector1()))
}

/// Second controlled gate of the full variant: `exp(-i u H(t))` on the
/// system when the ancilla is |1>.
pub fn gate_g2(proto: &WorkProtocol, u: f64) -> Mat4 {
    let e = unitary_from_spectral(&proto.ht.spectral, u);
    kron(&Mat2::identity(), &projector0()).add(&kron(&e, &projector1()))
}

/// Merged second gate of the simplified variant: `exp(-i u H(0))` on the
/// system when the ancilla is |1>.
pub fn gate_gb(proto: &WorkProtocol, u: f64) -> Mat4 {
    let e = unitary_from_spectral(&proto.h0.spectral, u);
    kron(&Mat2::identity(), &projector0()).add(&kron(&e, &projector1()))
}

/// Bare Rabi rotation exp(-i t Omega sigma_x / 2): the drive with its
/// detuning frame stripped, used between G1 and G_B.
pub fn bare_drive(proto: &WorkProtocol) -> Mat2 {
    exp_neg_i_h2(
        &sigma_x().scale(C64::new(0.5 * proto.params.omega_rabi, 0.0)),
        proto.t,
    )
}

/// Reduced ancilla state: trace over the system-major first factor.
pub fn ancilla_reduced(rho: &Mat4) -> Mat2 {
    let mut r = Mat2::zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                r.a[i][j] += rho.a[2 * k + i][2 * k + j];
            }
        }
    }
    r
}

/// Runs the interferometer on `rho` and returns the calibrated quadrature
/// pair. The ancilla starts in |0>, is split by a Hadamard, and is read out
/// after the controlled phases.
pub fn run_circuit(
    proto: &WorkProtocol,
    rho: &Mat2,
    u: f64,
    variant: CircuitVariant,
) -> AncillaReadout {
    let gates: [Mat4; 4] = match variant {
        CircuitVariant::G2Full => [
            kron(&Mat2::identity(), &hadamard()),
            gate_g1(proto, u),
            kron(&proto.u, &Mat2::identity()),
            gate_g2(proto, u),
        ],
        CircuitVariant::GBSimplified => [
            kron(&Mat2::identity(), &hadamard()),
            gate_g1(proto, u),
            kron(&bare_drive(proto), &Mat2::identity()),
            gate_gb(proto, u),
        ],
    };
    let mut joint = kron(rho, &projector0());
    for g in gates.iter() {
        joint = g.mul(&joint).mul(&g.dagger());
    }
    let ra = ancilla_reduced(&joint);
    let sx = ra.trace_mul(&sigma_x()).re;
    let sy_raw = ra.trace_mul(&sigma_y()).re;
    AncillaReadout { sx, sy: -sy_raw }
}

/// Characteristic-function trace of the TPM distribution obtained without
/// ever dephasing a state: the interferometer is run on |+> and |-> and the
/// readouts are averaged with the mixture weights. For the equal blend this
/// reproduces the TPM of either pure state.
pub fn tpm_via_mixture(
    proto: &WorkProtocol,
    components: &[(f64, Mat2)],
    u_values: &[f64],
    variant: CircuitVariant,
) -> Vec<C64> {
    u_values
        .iter()
        .map(|&u| {
            let mut g = C64::new(0.0, 0.0);
            for (w, rho) in components.iter() {
                g += run_circuit(proto, rho, u, variant).as_complex() * *w;
            }
            g
        })
        .collect()
}
