//! The driven-qubit work protocol: a resonance-style drive whose rotating
//! axis makes the Hamiltonian non-commuting with itself at later times, the
//! closed-form propagator it admits, and the initial states measured against
//! it.
//!
//! Conventions, fixed once and used everywhere:
//!
//! * `sigma_z = diag(1, -1)`.
//! * `H(t) = (Omega (cos(delta t) sigma_x + sin(delta t) sigma_y)
//!   + delta sigma_z) / 2`.
//! * `U(t) = exp(-i t delta sigma_z / 2) * exp(-i t Omega sigma_x / 2)`,
//!   which solves `i dU/dt = H(t) U` with `U(0) = 1`.
//! * `omega = sqrt(Omega^2 + delta^2)` is the gap of `H(t)` at every `t`;
//!   `theta = atan2(Omega, delta)` is the tilt of the eigenbasis.

use crate::qmath::{
    eig_hermitian, sigma_x, sigma_y, sigma_z, Mat2, Observable, QmathError, C64,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("mixture weight p = {0} is outside [0, 1]")]
    InvalidMixture(f64),
    #[error("time must be finite, got {0}")]
    NonFiniteTime(f64),
    #[error("n_steps must be at least 1")]
    ZeroSteps,
    #[error(transparent)]
    Qmath(#[from] QmathError),
}

/// Drive parameters. `omega_rabi` is the drive amplitude, `delta` the
/// detuning; both carry the same inverse-time unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveParams {
    pub omega_rabi: f64,
    pub delta: f64,
}

impl DriveParams {
    pub fn new(omega_rabi: f64, delta: f64) -> Self {
        DriveParams { omega_rabi, delta }
    }

    /// Unit-free preset: Omega = 1, delta = sqrt(3), so omega = 2 and
    /// theta = pi / 6.
    pub fn dimensionless() -> Self {
        DriveParams::new(1.0, 3.0f64.sqrt())
    }

    /// Hardware-scale preset in rad/us: Omega = 2 pi * 875 / 39 and
    /// delta = sqrt(3) Omega, the same tilt as the unit-free preset.
    pub fn hardware() -> Self {
        let omega_rabi = 2.0 * std::f64::consts::PI * 875.0 / 39.0;
        DriveParams::new(omega_rabi, 3.0f64.sqrt() * omega_rabi)
    }

    /// Energy gap of H(t), constant in time.
    pub fn omega(&self) -> f64 {
        self.omega_rabi.hypot(self.delta)
    }

    /// Tilt angle of the instantaneous eigenbasis from the z axis.
    pub fn theta(&self) -> f64 {
        self.omega_rabi.atan2(self.delta)
    }
}

/// H(t) in the rotating frame.
pub fn h_of_t(params: &DriveParams, t: f64) -> Mat2 {
    let (s, c) = (params.delta * t).sin_cos();
    let x = sigma_x().scale(C64::new(0.5 * params.omega_rabi * c, 0.0));
    let y = sigma_y().scale(C64::new(0.5 * params.omega_rabi * s, 0.0));
    let z = sigma_z().scale(C64::new(0.5 * params.delta, 0.0));
    x.add(&y).add(&z)
}

/// exp(-i s H) for a 2x2 Hermitian H, evaluated from the Pauli decomposition
/// H = a0 + a . sigma so no eigensolve is needed.
pub fn exp_neg_i_h2(h: &Mat2, s: f64) -> Mat2 {
    let a0 = 0.5 * (h.a[0][0].re + h.a[1][1].re);
    let az = 0.5 * (h.a[0][0].re - h.a[1][1].re);
    let ax = h.a[0][1].re;
    let ay = -h.a[0][1].im;
    let r = (ax * ax + ay * ay + az * az).sqrt();
    let phase = C64::from_polar(1.0, -s * a0);
    let (sin_sr, cos_sr) = (s * r).sin_cos();
    // sin(s r)/r stays finite as r -> 0.
    let k = if r > 0.0 { sin_sr / r } else { s };
    let mi = C64::new(0.0, -1.0) * k;
    let mut u = Mat2::identity().scale(C64::new(cos_sr, 0.0));
    u = u.add(&sigma_x().scale(mi * ax));
    u = u.add(&sigma_y().scale(mi * ay));
    u = u.add(&sigma_z().scale(mi * az));
    u.scale(phase)
}

/// Closed-form propagator U(t) = exp(-i t delta sigma_z / 2)
/// exp(-i t Omega sigma_x / 2).
pub fn propagator_closed_form(params: &DriveParams, t: f64) -> Mat2 {
    let uz = exp_neg_i_h2(&sigma_z().scale(C64::new(0.5 * params.delta, 0.0)), t);
    let ux = exp_neg_i_h2(&sigma_x().scale(C64::new(0.5 * params.omega_rabi, 0.0)), t);
    uz.mul(&ux)
}

/// Midpoint-rule propagator for an arbitrary time-dependent 2x2 Hermitian
/// generator: U = prod_k exp(-i dt H(t_k + dt/2)). Second-order accurate.
pub fn propagator_generic<F>(h_fn: F, t: f64, n_steps: usize) -> Result<Mat2, ProtocolError>
where
    F: Fn(f64) -> Mat2,
{
    if !t.is_finite() {
        return Err(ProtocolError::NonFiniteTime(t));
    }
    if n_steps == 0 {
        return Err(ProtocolError::ZeroSteps);
    }
    let dt = t / n_steps as f64;
    let mut u = Mat2::identity();
    for k in 0..n_steps {
        let mid = (k as f64 + 0.5) * dt;
        u = exp_neg_i_h2(&h_fn(mid), dt).mul(&u);
    }
    Ok(u)
}

/// Default step count for [`propagator_generic`]: 1024 steps per unit of
/// Omega t, never fewer than 1024.
pub fn default_steps(params: &DriveParams, t: f64) -> usize {
    let units = (params.omega_rabi * t).abs();
    ((1024.0 * units).ceil() as usize).max(1024)
}

/// Which eigenstate superposition of H(0) the protocol starts from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateLabel {
    /// Equal superposition (|E0> + |E1>)/sqrt(2) of the phase-fixed
    /// eigenvectors of H(0), ascending order.
    Plus,
    /// (|E0> - |E1>)/sqrt(2).
    Minus,
    /// Incoherent blend p |+><+| + (1-p) |-><-|.
    Mixture(f64),
}

#[derive(Clone, Debug)]
pub struct InitialState {
    pub rho: Mat2,
    pub label: StateLabel,
}

/// Builds the initial density matrix from the spectrum of H(0). The
/// eigenvector phase convention of the solver pins the sign of every
/// off-diagonal element, so the state is reproducible.
pub fn make_initial_state(
    params: &DriveParams,
    label: StateLabel,
) -> Result<InitialState, ProtocolError> {
    let dec = eig_hermitian(&h_of_t(params, 0.0))?;
    let e0 = dec.eigenvectors[0];
    let e1 = dec.eigenvectors[1];
    let inv = 1.0 / 2.0f64.sqrt();
    let plus = [(e0[0] + e1[0]) * inv, (e0[1] + e1[1]) * inv];
    let minus = [(e0[0] - e1[0]) * inv, (e0[1] - e1[1]) * inv];
    let rho = match label {
        StateLabel::Plus => Mat2::outer(&plus, &plus),
        StateLabel::Minus => Mat2::outer(&minus, &minus),
        StateLabel::Mixture(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(ProtocolError::InvalidMixture(p));
            }
            Mat2::outer(&plus, &plus)
                .scale(C64::new(p, 0.0))
                .add(&Mat2::outer(&minus, &minus).scale(C64::new(1.0 - p, 0.0)))
        }
    };
    Ok(InitialState { rho, label })
}

/// One evolution instance: the two boundary Hamiltonians with cached
/// spectra, the propagator, and the evolved final observable
/// `H~(t) = U^dag H(t) U` every work quantity is built from.
#[derive(Clone, Debug)]
pub struct WorkProtocol {
    pub params: DriveParams,
    pub t: f64,
    pub h0: Observable<2>,
    pub ht: Observable<2>,
    pub u: Mat2,
    pub h_heisenberg: Mat2,
}

impl WorkProtocol {
    /// Uses the closed-form propagator.
    pub fn new(params: DriveParams, t: f64) -> Result<Self, ProtocolError> {
        if !t.is_finite() {
            return Err(ProtocolError::NonFiniteTime(t));
        }
        let u = propagator_closed_form(&params, t);
        Self::with_propagator(params, t, u)
    }

    /// Uses the midpoint integrator; a cross-check path for the closed form.
    pub fn with_generic(
        params: DriveParams,
        t: f64,
        n_steps: usize,
    ) -> Result<Self, ProtocolError> {
        let u = propagator_generic(|s| h_of_t(&params, s), t, n_steps)?;
        Self::with_propagator(params, t, u)
    }

    fn with_propagator(params: DriveParams, t: f64, u: Mat2) -> Result<Self, ProtocolError> {
        let h0 = Observable::new(h_of_t(&params, 0.0))?;
        let ht = Observable::new(h_of_t(&params, t))?;
        let h_heisenberg = u.dagger().mul(&ht.matrix).mul(&u);
        Ok(WorkProtocol {
            params,
            t,
            h0,
            ht,
            u,
            h_heisenberg,
        })
    }
}
