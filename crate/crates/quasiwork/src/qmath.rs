//! Dense complex matrices of fixed small dimension and the Hermitian
//! eigenproblem they need.
//!
//! Everything downstream works with 2x2 (qubit) and 4x4 (qubit plus ancilla)
//! matrices, so the types are stack-allocated arrays and the eigensolver is a
//! cyclic Jacobi iteration with a fixed sweep order. The solver is fully
//! deterministic: the same input bytes always produce the same output bytes.

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalues closer than this times the Frobenius norm are treated as one
/// degenerate cluster and their projectors are summed.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum QmathError {
    #[error("matrix is not Hermitian: |H - H^dag| = {deviation:.3e} exceeds {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Square complex matrix with compile-time dimension, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat<const N: usize> {
    pub a: [[C64; N]; N],
}

pub type Mat2 = Mat<2>;
pub type Mat4 = Mat<4>;

impl<const N: usize> Mat<N> {
    pub fn zero() -> Self {
        Mat {
            a: [[C64::new(0.0, 0.0); N]; N],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            m.a[i][i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: [[C64; N]; N]) -> Self {
        Mat { a: rows }
    }

    /// Diagonal matrix from the given entries.
    pub fn diag(d: [C64; N]) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            m.a[i][i] = d[i];
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.a[i][j] = self.a[i][j] + other.a[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.a[i][j] = self.a[i][j] - other.a[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.a[i][j] = self.a[i][j] * s;
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for k in 0..N {
                let aik = self.a[i][k];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..N {
                    m.a[i][j] += aik * other.a[k][j];
                }
            }
        }
        m
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.a[i][j] = self.a[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        let mut t = C64::new(0.0, 0.0);
        for i in 0..N {
            t += self.a[i][i];
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            for j in 0..N {
                s += self.a[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.a
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Deviation from Hermiticity relative to `max(1, |H|_F)`.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.sub(&self.dagger()).frobenius_norm()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITICITY_TOL * self.frobenius_norm().max(1.0)
    }

    pub fn matvec(&self, v: &[C64; N]) -> [C64; N] {
        let mut out = [C64::new(0.0, 0.0); N];
        for i in 0..N {
            for j in 0..N {
                out[i] += self.a[i][j] * v[j];
            }
        }
        out
    }

    /// Rank-one matrix `|u><v|`.
    pub fn outer(u: &[C64; N], v: &[C64; N]) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.a[i][j] = u[i] * v[j].conj();
            }
        }
        m
    }

    /// Tr(self * other), without forming the product.
    pub fn trace_mul(&self, other: &Self) -> C64 {
        let mut t = C64::new(0.0, 0.0);
        for i in 0..N {
            for k in 0..N {
                t += self.a[i][k] * other.a[k][i];
            }
        }
        t
    }
}

/// Kronecker product of two qubit operators, first factor major.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.a[2 * i + k][2 * j + l] = a.a[i][j] * b.a[k][l];
                }
            }
        }
    }
    m
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma_x() -> Mat2 {
    Mat2::from_rows([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]])
}

pub fn sigma_y() -> Mat2 {
    Mat2::from_rows([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
}

/// sigma_z = diag(1, -1): the first basis vector is the +1 eigenstate.
pub fn sigma_z() -> Mat2 {
    Mat2::from_rows([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]])
}

/// Spectral data of a Hermitian matrix.
///
/// `eigenvalues` and `projectors` are per degenerate cluster, ascending.
/// `raw_eigenvalues` and `eigenvectors` keep all N solutions before the
/// clusters are merged, also ascending; each eigenvector has its first
/// component of magnitude above 1e-12 rotated to the positive real axis, so
/// the basis is reproducible.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<const N: usize> {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<Mat<N>>,
    pub raw_eigenvalues: [f64; N],
    pub eigenvectors: [[C64; N]; N],
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// The sweep order over (p, q) pairs is fixed, rotations use the standard
/// stable half-angle formulas, and ties in the final sort are broken by the
/// original index, so the output is deterministic.
pub fn eig_hermitian<const N: usize>(
    h: &Mat<N>,
) -> Result<SpectralDecomposition<N>, QmathError> {
    if !h.is_finite() {
        return Err(QmathError::NonFinite);
    }
    let norm = h.frobenius_norm();
    let dev = h.hermiticity_deviation();
    if dev > HERMITICITY_TOL * norm.max(1.0) {
        return Err(QmathError::NotHermitian {
            deviation: dev,
            tol: HERMITICITY_TOL * norm.max(1.0),
        });
    }

    let mut a = *h;
    // Symmetrize exactly so rounding in the input cannot bias the iteration.
    for i in 0..N {
        a.a[i][i] = c(a.a[i][i].re, 0.0);
        for j in (i + 1)..N {
            let m = (a.a[i][j] + a.a[j][i].conj()) * 0.5;
            a.a[i][j] = m;
            a.a[j][i] = m.conj();
        }
    }
    let mut v = Mat::<N>::identity();
    let off_tol = 1e-15 * norm.max(1e-300);
    let max_sweeps = 100;
    let mut converged = N < 2;
    for _sweep in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..N {
            for q in (p + 1)..N {
                off = off.max(a.a[p][q].norm());
            }
        }
        if off <= off_tol {
            converged = true;
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a.a[p][q];
                let mag = apq.norm();
                if mag <= off_tol {
                    continue;
                }
                // Absorb the phase so the 2x2 subproblem is real symmetric,
                // then rotate with the usual stable tangent formula.
                let phase = apq / mag;
                let app = a.a[p][p].re;
                let aqq = a.a[q][q].re;
                let zeta = (aqq - app) / (2.0 * mag);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // Plane rotation G: columns (p,q); G = diag(1, conj(phase)) * R.
                let gpp = c(cs, 0.0);
                let gpq = c(sn, 0.0);
                let gqp = -phase.conj() * sn;
                let gqq = phase.conj() * cs;
                // A <- G^dag A G applied as column then row updates.
                for r in 0..N {
                    let x = a.a[r][p];
                    let y = a.a[r][q];
                    a.a[r][p] = x * gpp + y * gqp;
                    a.a[r][q] = x * gpq + y * gqq;
                }
                for s in 0..N {
                    let x = a.a[p][s];
                    let y = a.a[q][s];
                    a.a[p][s] = gpp.conj() * x + gqp.conj() * y;
                    a.a[q][s] = gpq.conj() * x + gqq.conj() * y;
                }
                a.a[p][q] = c(0.0, 0.0);
                a.a[q][p] = c(0.0, 0.0);
                a.a[p][p] = c(a.a[p][p].re, 0.0);
                a.a[q][q] = c(a.a[q][q].re, 0.0);
                for r in 0..N {
                    let x = v.a[r][p];
                    let y = v.a[r][q];
                    v.a[r][p] = x * gpp + y * gqp;
                    v.a[r][q] = x * gpq + y * gqq;
                }
            }
        }
    }
    if !converged {
        // One final check: the last sweep may have finished the job.
        let mut off = 0.0f64;
        for p in 0..N {
            for q in (p + 1)..N {
                off = off.max(a.a[p][q].norm());
            }
        }
        if off > off_tol {
            return Err(QmathError::NoConvergence { sweeps: max_sweeps });
        }
    }

    // Ascending sort, stable in the original column index.
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| {
        a.a[i][i]
            .re
            .partial_cmp(&a.a[j][j].re)
            .unwrap()
            .then(i.cmp(&j))
    });

    let mut raw_eigenvalues = [0.0f64; N];
    let mut eigenvectors = [[c(0.0, 0.0); N]; N];
    for (slot, &col) in order.iter().enumerate() {
        raw_eigenvalues[slot] = a.a[col][col].re;
        let mut vec = [c(0.0, 0.0); N];
        for r in 0..N {
            vec[r] = v.a[r][col];
        }
        // Deterministic phase: first component with |v_k| > 1e-12 is made
        // real positive.
        let mut ph = c(1.0, 0.0);
        for z in vec.iter() {
            if z.norm() > 1e-12 {
                ph = z.conj() / z.norm();
                break;
            }
        }
        for z in vec.iter_mut() {
            *z *= ph;
        }
        eigenvectors[slot] = vec;
    }

    // Merge clusters whose neighbours sit closer than DEGENERACY_GAP * |H|_F.
    let gap = DEGENERACY_GAP * norm.max(1e-300);
    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut start = 0;
    while start < N {
        let mut end = start + 1;
        while end < N && raw_eigenvalues[end] - raw_eigenvalues[end - 1] < gap {
            end += 1;
        }
        let mut proj = Mat::<N>::zero();
        let mut mean = 0.0;
        for k in start..end {
            proj = proj.add(&Mat::outer(&eigenvectors[k], &eigenvectors[k]));
            mean += raw_eigenvalues[k];
        }
        eigenvalues.push(mean / (end - start) as f64);
        projectors.push(proj);
        start = end;
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
        raw_eigenvalues,
        eigenvectors,
    })
}

/// Hermitian operator bundled with its spectral decomposition, computed once.
#[derive(Clone, Debug)]
pub struct Observable<const N: usize> {
    pub matrix: Mat<N>,
    pub spectral: SpectralDecomposition<N>,
}

impl<const N: usize> Observable<N> {
    pub fn new(matrix: Mat<N>) -> Result<Self, QmathError> {
        let spectral = eig_hermitian(&matrix)?;
        Ok(Observable { matrix, spectral })
    }
}

/// exp(-i s H) for Hermitian H, via the spectral decomposition:
/// exp(-i s H) = sum_j exp(-i s E_j) P_j.
pub fn unitary_from_hamiltonian<const N: usize>(
    h: &Mat<N>,
    s: f64,
) -> Result<Mat<N>, QmathError> {
    let dec = eig_hermitian(h)?;
    let mut u = Mat::<N>::zero();
    for (e, p) in dec.eigenvalues.iter().zip(dec.projectors.iter()) {
        let phase = C64::from_polar(1.0, -s * e);
        u = u.add(&p.scale(phase));
    }
    Ok(u)
}

/// Same as [`unitary_from_hamiltonian`] but reusing a cached decomposition.
pub fn unitary_from_spectral<const N: usize>(
    dec: &SpectralDecomposition<N>,
    s: f64,
) -> Mat<N> {
    let mut u = Mat::<N>::zero();
    for (e, p) in dec.eigenvalues.iter().zip(dec.projectors.iter()) {
        let phase = C64::from_polar(1.0, -s * e);
        u = u.add(&p.scale(phase));
    }
    u
}

/// Frobenius distance min over a global phase: |A - e^{i phi} B|_F with
/// phi = arg Tr(B^dag A). A vanishing trace gives no phase information, so
/// phi = 0 is used there.
pub fn frobenius_distance_up_to_phase<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> f64 {
    let t = b.dagger().mul(a).trace();
    let phase = if t.norm() == 0.0 {
        c(1.0, 0.0)
    } else {
        t / t.norm()
    };
    a.sub(&b.scale(phase)).frobenius_norm()
}
