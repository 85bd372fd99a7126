//! Reconstruction of the quasiprobability work distribution from sampled
//! characteristic-function traces.
//!
//! The pipeline is: sample G(u) on a uniform grid (from the closed form,
//! the two-gate circuit, or the compiled pulse sequence), apply the inverse
//! Fourier sum to get a binned spectrum P(W_k), then integrate fixed
//! windows around the expected transition energies to recover the complex
//! weights. With the matched default grid the work atoms sit exactly on
//! bins and recovery is limited only by rounding; TAU_PIPE records the
//! measured end-to-end ceiling of that path.
//!
//! Grid relations, with n points and extent u_max: du = u_max / n,
//! dW = 2 pi / u_max, resolvable band |W| <= (n/2) dW. The matched grid
//! uses u_max = 16 pi / omega so the atoms {0, +-omega} land on bins
//! {0, +-8}, separated by more than a 7-bin window.

use crate::interferometer::{run_circuit, CircuitVariant};
use crate::kdq::{char_function, kdq_table, work_distribution, KdqError, QuasiprobTable};
use crate::nvmodel::{run_pulse_readout, NvError, NvParams};
use crate::protocol::{make_initial_state, StateLabel, WorkProtocol};
use crate::qmath::{Mat2, C64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use thiserror::Error;

/// Measured ceiling of the noiseless end-to-end recovery error on the
/// matched grid (analytic, circuit, and compiled-pulse routes all sit
/// orders of magnitude below it; rounding is the only contribution).
pub const TAU_PIPE: f64 = 1e-12;

/// Default number of grid points.
pub const DEFAULT_GRID_SIZE: usize = 128;

/// Default peak-integration window, in bins (odd).
pub const DEFAULT_WINDOW: usize = 7;

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("grid size {0} is not a power of two of at least 2")]
    GridSizeNotPowerOfTwo(usize),
    #[error("grid extent must be positive and finite, got {0}")]
    BadExtent(f64),
    #[error("integration window must be odd and at least 1, got {0}")]
    BadWindow(usize),
    #[error("window of {window} bins does not fit a grid of {n} bins")]
    WindowTooWide { window: usize, n: usize },
    #[error("target energy {w} lies outside the resolvable band |W| <= {band}")]
    OutOfBand { w: f64, band: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sigma values must be positive and finite")]
    BadSigma,
    #[error("trace source mismatch: {0}")]
    SourceMismatch(String),
    #[error(transparent)]
    Kdq(#[from] KdqError),
    #[error(transparent)]
    Nv(#[from] NvError),
}

/// Uniform grid u_j = j du, j = 0 .. n-1, du = u_max / n.
#[derive(Clone, Copy, Debug)]
pub struct UGrid {
    n: usize,
    u_max: f64,
}

impl UGrid {
    pub fn new(n: usize, u_max: f64) -> Result<Self, ReconError> {
        if n < 2 || !n.is_power_of_two() {
            return Err(ReconError::GridSizeNotPowerOfTwo(n));
        }
        if !u_max.is_finite() || u_max <= 0.0 {
            return Err(ReconError::BadExtent(u_max));
        }
        Ok(UGrid { n, u_max })
    }

    /// Grid whose bins are matched to a spectrum with gap `omega`: the
    /// atoms {0, +-omega} land exactly on bins {0, +-8}.
    pub fn matched(omega: f64) -> Result<Self, ReconError> {
        UGrid::new(DEFAULT_GRID_SIZE, 16.0 * PI / omega)
    }

    pub fn matched_sized(n: usize, omega: f64) -> Result<Self, ReconError> {
        UGrid::new(n, (n as f64 / 8.0) * PI / omega)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn du(&self) -> f64 {
        self.u_max / self.n as f64
    }

    pub fn dw(&self) -> f64 {
        2.0 * PI / self.u_max
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let du = self.du();
        (0..self.n).map(move |j| j as f64 * du)
    }
}

/// Where a trace comes from.
#[derive(Clone, Copy, Debug)]
pub enum TraceSource {
    /// Closed-form characteristic function of the quasiprobability table.
    Analytic,
    /// Ancilla interferometer readout.
    Circuit(CircuitVariant),
    /// Compiled pulse sequence on the two-spin platform. The pulse route
    /// physically prepares the protocol plus state, so the sampled state
    /// must be that state and the platform drive must match the protocol.
    Pulse(NvParams),
}

/// A sampled characteristic-function trace.
#[derive(Clone, Debug)]
pub struct CharFnTrace {
    pub grid: UGrid,
    pub values: Vec<C64>,
}

pub fn sample_trace(
    proto: &WorkProtocol,
    rho: &Mat2,
    source: &TraceSource,
    grid: &UGrid,
) -> Result<CharFnTrace, ReconError> {
    let values = match source {
        TraceSource::Analytic => {
            let table = kdq_table(proto, rho)?;
            grid.points().map(|u| char_function(&table, u)).collect()
        }
        TraceSource::Circuit(variant) => grid
            .points()
            .map(|u| run_circuit(proto, rho, u, *variant).as_complex())
            .collect(),
        TraceSource::Pulse(params) => {
            let d = &proto.params;
            if (params.drive.omega_rabi - d.omega_rabi).abs() > 1e-12 * d.omega().abs()
                || (params.drive.delta - d.delta).abs() > 1e-12 * d.omega().abs()
            {
                return Err(ReconError::SourceMismatch(
                    "platform drive differs from the protocol drive".into(),
                ));
            }
            let plus = make_initial_state(&proto.params, StateLabel::Plus)
                .map_err(|e| ReconError::SourceMismatch(e.to_string()))?;
            if rho.sub(&plus.rho).frobenius_norm() > 1e-9 {
                return Err(ReconError::SourceMismatch(
                    "pulse route prepares the plus state; sampled state differs".into(),
                ));
            }
            let mut vals = Vec::with_capacity(grid.len());
            for u in grid.points() {
                vals.push(run_pulse_readout(params, u, proto.t)?.as_complex());
            }
            vals
        }
    };
    Ok(CharFnTrace { grid: *grid, values })
}

/// Binned spectrum on W_k = k dW for k in [-n/2, n/2).
#[derive(Clone, Debug)]
pub struct WorkSpectrum {
    pub w_values: Vec<f64>,
    pub p_values: Vec<C64>,
    pub dw: f64,
}

/// Inverse Fourier sum `P(W_k) = (1/n) sum_j G(u_j) exp(-i u_j W_k)`.
/// The direct double sum keeps the bin ordering explicit; grid sizes here
/// never make it a bottleneck.
pub fn transform_to_work(trace: &CharFnTrace) -> WorkSpectrum {
    let n = trace.grid.len();
    let half = (n / 2) as i64;
    let dw = trace.grid.dw();
    let du = trace.grid.du();
    let mut w_values = Vec::with_capacity(n);
    let mut p_values = Vec::with_capacity(n);
    for k in -half..half {
        let w = k as f64 * dw;
        let mut acc = C64::new(0.0, 0.0);
        for (j, g) in trace.values.iter().enumerate() {
            acc += g * C64::from_polar(1.0, -(j as f64 * du) * w);
        }
        w_values.push(w);
        p_values.push(acc / n as f64);
    }
    WorkSpectrum {
        w_values,
        p_values,
        dw,
    }
}

/// A recovered complex weight at one target energy.
#[derive(Clone, Copy, Debug)]
pub struct RecoveredQ {
    pub w: f64,
    pub weight: C64,
}

/// Sums `window` bins (odd count, centered on the bin nearest each target)
/// of the spectrum. Window indices wrap around the periodic bin axis.
pub fn integrate_peaks(
    spectrum: &WorkSpectrum,
    targets: &[f64],
    window: usize,
) -> Result<Vec<RecoveredQ>, ReconError> {
    let n = spectrum.p_values.len() as i64;
    if window == 0 || window % 2 == 0 {
        return Err(ReconError::BadWindow(window));
    }
    if window as i64 > n {
        return Err(ReconError::WindowTooWide {
            window,
            n: n as usize,
        });
    }
    let half_window = (window / 2) as i64;
    let half = n / 2;
    let mut out = Vec::with_capacity(targets.len());
    for &w in targets {
        let k_star = (w / spectrum.dw).round() as i64;
        if k_star < -half || k_star >= half {
            return Err(ReconError::OutOfBand {
                w,
                band: half as f64 * spectrum.dw,
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for d in -half_window..=half_window {
            let k = (k_star + d + half).rem_euclid(n) - half;
            acc += spectrum.p_values[(k + half) as usize];
        }
        out.push(RecoveredQ { w, weight: acc });
    }
    Ok(out)
}

/// End-to-end recovery against the table's own work distribution; the
/// returned error is the worst complex deviation over the atoms.
#[derive(Clone, Debug)]
pub struct RecoveryReport {
    pub atoms: Vec<RecoveredQ>,
    pub expected: Vec<C64>,
    pub max_error: f64,
}

pub fn recover_from_trace(
    table: &QuasiprobTable,
    trace: &CharFnTrace,
    window: usize,
) -> Result<RecoveryReport, ReconError> {
    let dist = work_distribution(table);
    let targets: Vec<f64> = dist.iter().map(|a| a.w).collect();
    let spectrum = transform_to_work(trace);
    let atoms = integrate_peaks(&spectrum, &targets, window)?;
    let expected: Vec<C64> = dist.iter().map(|a| a.weight).collect();
    let max_error = atoms
        .iter()
        .zip(expected.iter())
        .map(|(r, e)| (r.weight - e).norm())
        .fold(0.0, f64::max);
    Ok(RecoveryReport {
        atoms,
        expected,
        max_error,
    })
}

/// Off-bin stress pair: the base grid puts the atoms exactly half a bin
/// off center (the worst placement for a boxcar window), the refined grid
/// doubles both extent and density, which puts them back on bins. The
/// ratio certifies that refinement shrinks the error.
#[derive(Clone, Copy, Debug)]
pub struct RefinementStudy {
    pub base_error: f64,
    pub refined_error: f64,
    pub ratio: f64,
}

pub fn refinement_study(
    proto: &WorkProtocol,
    rho: &Mat2,
    window: usize,
) -> Result<RefinementStudy, ReconError> {
    let omega = proto.params.omega();
    let table = kdq_table(proto, rho)?;
    let base_grid = UGrid::new(256, 17.0 * PI / omega)?;
    let refined_grid = UGrid::new(1024, 34.0 * PI / omega)?;
    let base = recover_from_trace(
        &table,
        &sample_trace(proto, rho, &TraceSource::Analytic, &base_grid)?,
        window,
    )?;
    let refined = recover_from_trace(
        &table,
        &sample_trace(proto, rho, &TraceSource::Analytic, &refined_grid)?,
        window,
    )?;
    Ok(RefinementStudy {
        base_error: base.max_error,
        refined_error: refined.max_error,
        ratio: base.max_error / refined.max_error.max(f64::EPSILON),
    })
}

/// Multiplicative amplitude miscalibration, complex additive offset, and
/// optional per-point Gaussian shot noise. Amplitude and offset are drawn
/// once per trace, shot noise per point and quadrature.
#[derive(Clone, Copy, Debug)]
pub struct NoiseModel {
    /// Amplitude factor is drawn from U(1 - s, 1 + s).
    pub amplitude_spread: f64,
    /// Offset re and im are each drawn from U(-s, s).
    pub offset_spread: f64,
    /// Standard deviation of the per-point Gaussian noise (per quadrature).
    pub shot_sigma: f64,
    /// Base seed; each trace index derives its own stream.
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            amplitude_spread: 0.05,
            offset_spread: 0.05,
            shot_sigma: 0.02,
            seed: 0,
        }
    }
}

fn trace_rng(model: &NoiseModel, trace_index: u64) -> ChaCha8Rng {
    // Fixed mixing constant decorrelates consecutive indices; the map is
    // deterministic so reruns are byte-identical.
    ChaCha8Rng::seed_from_u64(model.seed ^ trace_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn inject_noise(trace: &CharFnTrace, model: &NoiseModel, trace_index: u64) -> CharFnTrace {
    let mut rng = trace_rng(model, trace_index);
    let amp = 1.0 + rng.random_range(-model.amplitude_spread..=model.amplitude_spread);
    let off = C64::new(
        rng.random_range(-model.offset_spread..=model.offset_spread),
        rng.random_range(-model.offset_spread..=model.offset_spread),
    );
    let shot = Normal::new(0.0, model.shot_sigma.max(0.0)).expect("sigma is non-negative");
    let values = trace
        .values
        .iter()
        .map(|g| {
            let noise = if model.shot_sigma > 0.0 {
                C64::new(shot.sample(&mut rng), shot.sample(&mut rng))
            } else {
                C64::new(0.0, 0.0)
            };
            g * amp + off + noise
        })
        .collect();
    CharFnTrace {
        grid: trace.grid,
        values,
    }
}

/// Per-quadrature standard deviation predicted for a window-summed peak
/// weight when every trace point carries independent noise of the given
/// sigmas. The estimate treats bins as independent, which overstates the
/// variance slightly; empirical coverage stays above the acceptance floor.
pub fn predicted_peak_sigma(point_sigmas: &[f64], window: usize) -> Result<f64, ReconError> {
    if point_sigmas.is_empty() {
        return Err(ReconError::LengthMismatch { left: 0, right: 1 });
    }
    if point_sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(ReconError::BadSigma);
    }
    let n = point_sigmas.len() as f64;
    let mean = point_sigmas.iter().sum::<f64>() / n;
    Ok(mean / n.sqrt() * (window as f64).sqrt())
}

/// Spread statistics of the recovered weights over repeated noisy traces.
#[derive(Clone, Debug)]
pub struct NoiseStudyReport {
    pub targets: Vec<f64>,
    pub true_weights: Vec<C64>,
    pub mean: Vec<C64>,
    pub std_re: Vec<f64>,
    pub std_im: Vec<f64>,
    /// Sigma predicted from the shot component alone.
    pub predicted_sigma: f64,
    /// Fraction of (trial, atom) real parts within two predicted sigmas of
    /// truth when only shot noise is enabled; meaningful for matched runs.
    pub coverage: f64,
    pub trials: usize,
    /// Recovered weights per trial, trial-major: samples[trial][atom].
    pub samples: Vec<Vec<C64>>,
}

pub fn noise_study(
    proto: &WorkProtocol,
    rho: &Mat2,
    grid: &UGrid,
    window: usize,
    model: &NoiseModel,
    trials: usize,
) -> Result<NoiseStudyReport, ReconError> {
    let table = kdq_table(proto, rho)?;
    let dist = work_distribution(&table);
    let targets: Vec<f64> = dist.iter().map(|a| a.w).collect();
    let true_weights: Vec<C64> = dist.iter().map(|a| a.weight).collect();
    let clean = sample_trace(proto, rho, &TraceSource::Analytic, grid)?;
    let point_sigmas = vec![model.shot_sigma.max(f64::EPSILON); grid.len()];
    let predicted_sigma = predicted_peak_sigma(&point_sigmas, window)?;

    let m = targets.len();
    let mut sum = vec![C64::new(0.0, 0.0); m];
    let mut sum_sq_re = vec![0.0f64; m];
    let mut sum_sq_im = vec![0.0f64; m];
    let mut inside = 0usize;
    let mut samples = Vec::with_capacity(trials);
    for trial in 0..trials {
        let noisy = inject_noise(&clean, model, trial as u64);
        let spectrum = transform_to_work(&noisy);
        let rec = integrate_peaks(&spectrum, &targets, window)?;
        let mut row = Vec::with_capacity(m);
        for (a, r) in rec.iter().enumerate() {
            sum[a] += r.weight;
            sum_sq_re[a] += r.weight.re * r.weight.re;
            sum_sq_im[a] += r.weight.im * r.weight.im;
            if (r.weight.re - true_weights[a].re).abs() <= 2.0 * predicted_sigma {
                inside += 1;
            }
            row.push(r.weight);
        }
        samples.push(row);
    }
    let nf = trials as f64;
    let mean: Vec<C64> = sum.iter().map(|s| s / nf).collect();
    let std_of = |sum_sq: &[f64], mean_part: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..m)
            .map(|a| {
                let mu = mean_part(a);
                (sum_sq[a] / nf - mu * mu).max(0.0).sqrt()
            })
            .collect()
    };
    let std_re = std_of(&sum_sq_re, &|a| mean[a].re);
    let std_im = std_of(&sum_sq_im, &|a| mean[a].im);
    Ok(NoiseStudyReport {
        targets,
        true_weights,
        mean,
        std_re,
        std_im,
        predicted_sigma,
        coverage: inside as f64 / (trials * m) as f64,
        trials,
        samples,
    })
}

/// Mean squared sigma-normalized residual:
/// `(1/n) sum ((data - model) / sigma)^2`.
pub fn reduced_chi_squared(data: &[f64], model: &[f64], sigma: &[f64]) -> Result<f64, ReconError> {
    if data.len() != model.len() {
        return Err(ReconError::LengthMismatch {
            left: data.len(),
            right: model.len(),
        });
    }
    if data.len() != sigma.len() {
        return Err(ReconError::LengthMismatch {
            left: data.len(),
            right: sigma.len(),
        });
    }
    if data.is_empty() {
        return Err(ReconError::LengthMismatch { left: 0, right: 1 });
    }
    if sigma.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(ReconError::BadSigma);
    }
    let sum: f64 = data
        .iter()
        .zip(model)
        .zip(sigma)
        .map(|((d, m), s)| ((d - m) / s).powi(2))
        .sum();
    Ok(sum / data.len() as f64)
}
