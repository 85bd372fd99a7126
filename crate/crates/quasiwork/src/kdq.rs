//! Kirkwood-Dirac quasiprobability (KDQ) tables for the work protocol, the
//! two-point-measurement (TPM) distribution they generalize, work moments,
//! two-time correlation functions, and the Robertson-Schroedinger
//! uncertainty relation they obey.
//!
//! The joint quasiprobability of starting in the i-th level of H(0) and
//! ending in the f-th level of H(t) is
//!
//! `q_if = Tr( U^dag P_f U  P_i  rho )`
//!
//! with ascending level order on both sides. Entries can be negative or
//! complex; the marginals are the true Born probabilities. Work values are
//! `W_if = E_f - E_i`. The TPM table replaces rho by its dephased version in
//! the H(0) basis, which makes every entry a real probability.

use crate::protocol::WorkProtocol;
use crate::qmath::{Mat2, C64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KdqError {
    #[error("protocol spectrum is degenerate; the two-level table is undefined")]
    DegenerateSpectrum,
    #[error("density matrix is not Hermitian or not normalized (trace = {trace})")]
    InvalidState { trace: f64 },
}

/// Joint quasiprobability table over (initial level i, final level f),
/// ascending energies. `w[i][f] = e_final[f] - e_initial[i]`.
#[derive(Clone, Debug)]
pub struct QuasiprobTable {
    pub entries: [[C64; 2]; 2],
    pub e_initial: [f64; 2],
    pub e_final: [f64; 2],
    pub w: [[f64; 2]; 2],
}

impl QuasiprobTable {
    pub fn sum(&self) -> C64 {
        self.entries[0][0] + self.entries[0][1] + self.entries[1][0] + self.entries[1][1]
    }

    /// Marginal over the final index: the Born weight of initial level i.
    pub fn initial_marginal(&self, i: usize) -> C64 {
        self.entries[i][0] + self.entries[i][1]
    }

    /// Marginal over the initial index: the Born weight of final level f.
    pub fn final_marginal(&self, f: usize) -> C64 {
        self.entries[0][f] + self.entries[1][f]
    }
}

fn check_state(rho: &Mat2) -> Result<(), KdqError> {
    let tr = rho.trace();
    if !rho.is_hermitian() || (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(KdqError::InvalidState { trace: tr.re });
    }
    Ok(())
}

fn table_with_state(proto: &WorkProtocol, rho: &Mat2) -> Result<QuasiprobTable, KdqError> {
    if proto.h0.spectral.projectors.len() != 2 || proto.ht.spectral.projectors.len() != 2 {
        return Err(KdqError::DegenerateSpectrum);
    }
    let e_initial = [
        proto.h0.spectral.eigenvalues[0],
        proto.h0.spectral.eigenvalues[1],
    ];
    let e_final = [
        proto.ht.spectral.eigenvalues[0],
        proto.ht.spectral.eigenvalues[1],
    ];
    // Final projectors pulled back to time zero: U^dag P_f U.
    let pulled: Vec<Mat2> = proto
        .ht
        .spectral
        .projectors
        .iter()
        .map(|p| proto.u.dagger().mul(p).mul(&proto.u))
        .collect();
    let mut entries = [[C64::new(0.0, 0.0); 2]; 2];
    let mut w = [[0.0f64; 2]; 2];
    for i in 0..2 {
        let pi_rho = proto.h0.spectral.projectors[i].mul(rho);
        for f in 0..2 {
            entries[i][f] = pulled[f].trace_mul(&pi_rho);
            w[i][f] = e_final[f] - e_initial[i];
        }
    }
    Ok(QuasiprobTable {
        entries,
        e_initial,
        e_final,
        w,
    })
}

/// KDQ table of the given state under the protocol.
pub fn kdq_table(proto: &WorkProtocol, rho: &Mat2) -> Result<QuasiprobTable, KdqError> {
    check_state(rho)?;
    table_with_state(proto, rho)
}

/// Removes coherences in the H(0) eigenbasis: rho_d = sum_i P_i rho P_i.
pub fn dephase_initial(proto: &WorkProtocol, rho: &Mat2) -> Mat2 {
    let mut out = Mat2::zero();
    for p in proto.h0.spectral.projectors.iter() {
        out = out.add(&p.mul(rho).mul(p));
    }
    out
}

/// TPM joint probability table: first projective measurement picks level i
/// with the Born weight, the conditional transition probability follows from
/// the propagator. Equals the KDQ table of the dephased state.
pub fn tpm_table(proto: &WorkProtocol, rho: &Mat2) -> Result<QuasiprobTable, KdqError> {
    check_state(rho)?;
    table_with_state(proto, &dephase_initial(proto, rho))
}

/// Characteristic function of work from a table: G(u) = sum q e^{+i u W}.
pub fn char_function(table: &QuasiprobTable, u: f64) -> C64 {
    let mut g = C64::new(0.0, 0.0);
    for i in 0..2 {
        for f in 0..2 {
            g += table.entries[i][f] * C64::from_polar(1.0, u * table.w[i][f]);
        }
    }
    g
}

/// Work value with its (generally complex) weight.
#[derive(Clone, Copy, Debug)]
pub struct WorkAtom {
    pub w: f64,
    pub weight: C64,
}

/// Work distribution: table entries grouped by work value. Values closer
/// than 1e-9 times the spectral span are merged (for this protocol that
/// collapses the two zero-work diagonal entries). Ascending in w.
pub fn work_distribution(table: &QuasiprobTable) -> Vec<WorkAtom> {
    let span = (table.e_initial[1] - table.e_initial[0])
        .abs()
        .max((table.e_final[1] - table.e_final[0]).abs())
        .max(1e-300);
    let mut atoms: Vec<WorkAtom> = Vec::new();
    let mut flat: Vec<(f64, C64)> = Vec::new();
    for i in 0..2 {
        for f in 0..2 {
            flat.push((table.w[i][f], table.entries[i][f]));
        }
    }
    flat.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (w, q) in flat {
        match atoms.last_mut() {
            Some(last) if (w - last.w).abs() < 1e-9 * span => last.weight += q,
            _ => atoms.push(WorkAtom { w, weight: q }),
        }
    }
    atoms
}

/// First two work moments of a table. The variance is complex; its real part
/// is the measurable dispersion, the imaginary part is the coherence witness
/// tied to the two-time commutator.
#[derive(Clone, Copy, Debug)]
pub struct WorkMoments {
    pub mean: C64,
    pub second: C64,
    pub variance: C64,
}

impl WorkMoments {
    pub fn v_r(&self) -> f64 {
        self.variance.re
    }

    pub fn v_i(&self) -> f64 {
        self.variance.im
    }
}

pub fn work_moments(table: &QuasiprobTable) -> WorkMoments {
    let mut mean = C64::new(0.0, 0.0);
    let mut second = C64::new(0.0, 0.0);
    for i in 0..2 {
        for f in 0..2 {
            let w = table.w[i][f];
            mean += table.entries[i][f] * w;
            second += table.entries[i][f] * (w * w);
        }
    }
    WorkMoments {
        mean,
        second,
        variance: second - mean * mean,
    }
}

/// n-th work moment sum_if q_if W_if^n.
pub fn work_moment_n(table: &QuasiprobTable, n: u32) -> C64 {
    let mut m = C64::new(0.0, 0.0);
    for i in 0..2 {
        for f in 0..2 {
            m += table.entries[i][f] * table.w[i][f].powi(n as i32);
        }
    }
    m
}

/// Two-time energy correlation data evaluated directly from operators.
///
/// `corr` is the Heisenberg-ordered correlation Tr(rho H~(t) H(0)).
/// `covariance` is the symmetrized, mean-subtracted real covariance.
/// `commutator_expect` is Tr(i rho [H~(t), H(0)]); with this operator order
/// it equals -2 Im(corr), so Im(corr) = -commutator_expect / 2, and it is
/// exactly the imaginary part of the complex work variance.
#[derive(Clone, Copy, Debug)]
pub struct CorrelationReport {
    pub corr: C64,
    pub covariance: f64,
    pub commutator_expect: f64,
    pub var_h0: f64,
    pub var_ht: f64,
    pub mean_h0: f64,
    pub mean_ht: f64,
}

pub fn correlation_report(proto: &WorkProtocol, rho: &Mat2) -> Result<CorrelationReport, KdqError> {
    check_state(rho)?;
    let h0 = &proto.h0.matrix;
    let ht = &proto.h_heisenberg;
    let corr = ht.mul(h0).trace_mul(rho);
    let mean_h0 = h0.trace_mul(rho).re;
    let mean_ht = ht.trace_mul(rho).re;
    let var_h0 = h0.mul(h0).trace_mul(rho).re - mean_h0 * mean_h0;
    let var_ht = ht.mul(ht).trace_mul(rho).re - mean_ht * mean_ht;
    // Symmetrized covariance: Re(corr) - <H0><H~>.
    let covariance = corr.re - mean_h0 * mean_ht;
    let commutator_expect = -2.0 * corr.im;
    Ok(CorrelationReport {
        corr,
        covariance,
        commutator_expect,
        var_h0,
        var_ht,
        mean_h0,
        mean_ht,
    })
}

/// Moments of the Hermitian work operator H~(t) - H(0) against rho. Its
/// first and second moments coincide with the real parts of the KDQ work
/// moments; the third in general does not.
#[derive(Clone, Copy, Debug)]
pub struct WorkOperatorReport {
    pub first: f64,
    pub second: f64,
    pub third: f64,
    pub dispersion: f64,
}

pub fn work_operator_report(
    proto: &WorkProtocol,
    rho: &Mat2,
) -> Result<WorkOperatorReport, KdqError> {
    check_state(rho)?;
    let w = proto.h_heisenberg.sub(&proto.h0.matrix);
    let w2 = w.mul(&w);
    let w3 = w2.mul(&w);
    let first = w.trace_mul(rho).re;
    let second = w2.trace_mul(rho).re;
    let third = w3.trace_mul(rho).re;
    Ok(WorkOperatorReport {
        first,
        second,
        third,
        dispersion: second - first * first,
    })
}

/// Both sides of the variance uncertainty relation for the pair
/// (H(0), H~(t)), plus the 2x2 correlation matrix whose positivity encodes
/// it: lhs = Var(H0) Var(H~) >= Cov^2 + Im(corr)^2 = rhs, and
/// det(C) = lhs - rhs.
#[derive(Clone, Copy, Debug)]
pub struct RsurReport {
    pub lhs: f64,
    pub rhs: f64,
    pub covariance: f64,
    pub im_corr: f64,
    pub var_h0: f64,
    pub var_ht: f64,
    pub correlation_matrix: Mat2,
    pub det: f64,
}

pub fn rsur_report(proto: &WorkProtocol, rho: &Mat2) -> Result<RsurReport, KdqError> {
    let rep = correlation_report(proto, rho)?;
    let lhs = rep.var_h0 * rep.var_ht;
    let rhs = rep.covariance * rep.covariance + rep.corr.im * rep.corr.im;
    // C = [[Var0, c], [conj(c), Vart]] with c = Cov - i Im(corr): the
    // mean-subtracted second-moment matrix of the ordered pair.
    let c = C64::new(rep.covariance, -rep.corr.im);
    let correlation_matrix = Mat2::from_rows([
        [C64::new(rep.var_h0, 0.0), c],
        [c.conj(), C64::new(rep.var_ht, 0.0)],
    ]);
    Ok(RsurReport {
        lhs,
        rhs,
        covariance: rep.covariance,
        im_corr: rep.corr.im,
        var_h0: rep.var_h0,
        var_ht: rep.var_ht,
        correlation_matrix,
        det: lhs - rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{make_initial_state, DriveParams, StateLabel, WorkProtocol};
    use crate::qmath::{eig_hermitian, Mat2, C64};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!(
            (a - b).abs() <= tol,
            "{what}: {a} vs {b} differ by {}",
            (a - b).abs()
        );
    }

    fn assert_cclose(a: C64, b: C64, tol: f64, what: &str) {
        assert!(
            (a - b).norm() <= tol,
            "{what}: {a} vs {b} differ by {}",
            (a - b).norm()
        );
    }

    fn plus_setup(t: f64) -> (WorkProtocol, Mat2) {
        let p = DriveParams::dimensionless();
        let proto = WorkProtocol::new(p, t).unwrap();
        let st = make_initial_state(&p, StateLabel::Plus).unwrap();
        (proto, st.rho)
    }

    // Reference table for the unit-free drive with rho = |+><+| at
    // Omega t = 7 pi / 6, frozen from an independent implementation.
    const Q00: (f64, f64) = (3.52123412263472768e-1, 1.08253175473054852e-1);
    const Q01: (f64, f64) = (1.47876587736527648e-1, -1.08253175473054825e-1);
    const Q10: (f64, f64) = (5.51882938682637270e-1, -1.08253175473054838e-1);
    const Q11: (f64, f64) = (-5.18829386826371725e-2, 1.08253175473054825e-1);

    #[test]
    fn frozen_table_at_the_reference_point() {
        let (proto, rho) = plus_setup(7.0 * PI / 6.0);
        let tab = kdq_table(&proto, &rho).unwrap();
        assert_cclose(tab.entries[0][0], c(Q00.0, Q00.1), 1e-13, "q00");
        assert_cclose(tab.entries[0][1], c(Q01.0, Q01.1), 1e-13, "q01");
        assert_cclose(tab.entries[1][0], c(Q10.0, Q10.1), 1e-13, "q10");
        assert_cclose(tab.entries[1][1], c(Q11.0, Q11.1), 1e-13, "q11");
        assert_close(tab.w[0][1], 2.0, 1e-12, "work of the up transition");
        assert_close(tab.w[1][0], -2.0, 1e-12, "work of the down transition");
        assert_close(tab.w[0][0], 0.0, 1e-12, "diagonal work");
    }

    #[test]
    fn frozen_char_function_value() {
        let (proto, rho) = plus_setup(7.0 * PI / 6.0);
        let tab = kdq_table(&proto, &rho).unwrap();
        let g = char_function(&tab, 0.37);
        assert_cclose(
            g,
            c(8.16990882512895311e-1, -2.15793380656825989e-1),
            1e-13,
            "G(0.37)",
        );
        assert_cclose(char_function(&tab, 0.0), c(1.0, 0.0), 1e-13, "G(0) = 1");
    }

    #[test]
    fn frozen_tpm_table_of_the_maximally_mixed_state() {
        let p = DriveParams::dimensionless();
        let proto = WorkProtocol::new(p, 7.0 * PI / 6.0).unwrap();
        let rho = Mat2::identity().scale(c(0.5, 0.0));
        let tab = tpm_table(&proto, &rho).unwrap();
        let stay = 1.50120236790417805e-1;
        let hop = 3.49879763209582473e-1;
        for i in 0..2 {
            for f in 0..2 {
                let expect = if i == f { stay } else { hop };
                assert_close(tab.entries[i][f].re, expect, 1e-13, "tpm entry");
                assert_close(tab.entries[i][f].im, 0.0, 1e-13, "tpm entries are real");
            }
        }
        let m = work_moments(&tab);
        assert_cclose(m.mean, c(0.0, 0.0), 1e-13, "tpm mean work vanishes");
    }

    #[test]
    fn mean_work_matches_the_closed_form_on_the_lattice() {
        let p = DriveParams::dimensionless();
        let st = make_initial_state(&p, StateLabel::Plus).unwrap();
        for k in 0..=12 {
            let t = k as f64 * PI / 6.0;
            let proto = WorkProtocol::new(p, t).unwrap();
            let tab = kdq_table(&proto, &st.rho).unwrap();
            let m = work_moments(&tab);
            let expect = -(p.delta * p.omega_rabi / p.omega())
                * (0.5 * p.omega_rabi * t).sin().powi(2);
            assert_close(m.mean.re, expect, 1e-12, &format!("mean at k = {k}"));
            assert_close(m.mean.im, 0.0, 1e-12, "mean work is real");
        }
    }

    #[test]
    fn frozen_correlation_and_variance_identities_at_the_reference_point() {
        let (proto, rho) = plus_setup(7.0 * PI / 6.0);
        let rep = correlation_report(&proto, &rho).unwrap();
        assert_cclose(
            rep.corr,
            c(-3.99519052838328947e-1, 4.33012701892218910e-1),
            1e-12,
            "two-time correlation",
        );
        let tab = kdq_table(&proto, &rho).unwrap();
        let m = work_moments(&tab);
        assert_close(m.v_r(), 2.1461535792574953, 1e-12, "V_R frozen value");
        assert_close(m.v_i(), -0.86602540378443865, 1e-12, "V_I frozen value");
        // The three faces of the imaginary part.
        assert_close(m.v_i(), -2.0 * rep.corr.im, 1e-12, "V_I = -2 Im corr");
        assert_close(m.v_i(), rep.commutator_expect, 1e-12, "V_I = <i[H~, H0]>");
        assert_close(
            rep.corr.im,
            -0.5 * rep.commutator_expect,
            1e-12,
            "Im corr = -commutator/2",
        );
        // Real-part decomposition against the covariance.
        assert_close(
            m.v_r(),
            rep.var_h0 + rep.var_ht - 2.0 * rep.covariance,
            1e-12,
            "V_R = Var0 + Vart - 2 Cov",
        );
    }

    #[test]
    fn commutator_expectation_matches_the_explicit_operator_form() {
        let (proto, rho) = plus_setup(1.1);
        let rep = correlation_report(&proto, &rho).unwrap();
        let h0 = &proto.h0.matrix;
        let ht = &proto.h_heisenberg;
        let comm = ht.mul(h0).sub(&h0.mul(ht));
        let direct = comm.scale(c(0.0, 1.0)).trace_mul(&rho);
        assert_close(direct.im, 0.0, 1e-12, "commutator expectation is real");
        assert_close(
            rep.commutator_expect,
            direct.re,
            1e-12,
            "report vs Tr(i rho [H~, H0])",
        );
    }

    #[test]
    fn correlation_is_real_at_the_revival_times() {
        let p = DriveParams::dimensionless();
        let st = make_initial_state(&p, StateLabel::Plus).unwrap();
        for &k in &[0.0, 1.0, 2.0] {
            let t = k * PI; // Omega = 1: these are Omega t in {0, pi, 2 pi}.
            let proto = WorkProtocol::new(p, t).unwrap();
            let rep = correlation_report(&proto, &st.rho).unwrap();
            assert_close(rep.corr.im, 0.0, 1e-12, &format!("Im corr at k = {k}"));
        }
    }

    #[test]
    fn work_operator_shares_two_moments_but_not_the_third() {
        let p = DriveParams::dimensionless();
        let st = make_initial_state(&p, StateLabel::Plus).unwrap();
        // Identity point.
        let proto = WorkProtocol::new(p, 7.0 * PI / 6.0).unwrap();
        let tab = kdq_table(&proto, &st.rho).unwrap();
        let m = work_moments(&tab);
        let op = work_operator_report(&proto, &st.rho).unwrap();
        assert_close(op.first, m.mean.re, 1e-12, "first moments agree");
        assert_close(op.second, m.second.re, 1e-12, "second moments agree");
        assert_close(op.dispersion, m.v_r(), 1e-12, "dispersions agree");
        // Third-moment counterexample at Omega t = pi / 2: the gap is order
        // one in units of omega^3 = 8.
        let proto = WorkProtocol::new(p, PI / 2.0).unwrap();
        let tab = kdq_table(&proto, &st.rho).unwrap();
        let op = work_operator_report(&proto, &st.rho).unwrap();
        let third_kdq = work_moment_n(&tab, 3).re;
        let gap = (op.third - third_kdq).abs();
        assert!(
            gap > 1e-3 * p.omega().powi(3),
            "third moments should differ, gap = {gap:.6e}"
        );
        assert_close(gap, 1.08253175473054908, 1e-9, "frozen third-moment gap");
    }

    #[test]
    fn rsur_is_saturated_for_pure_states() {
        let (proto, rho) = plus_setup(11.0 * PI / 15.0);
        let rep = rsur_report(&proto, &rho).unwrap();
        let scale = rep.lhs.abs().max(rep.rhs.abs()).max(1e-300);
        assert!(
            (rep.lhs - rep.rhs).abs() <= 1e-9 * scale,
            "pure state must saturate: lhs = {}, rhs = {}",
            rep.lhs,
            rep.rhs
        );
        assert_close(rep.det, rep.lhs - rep.rhs, 1e-15, "determinant identity");
    }

    #[test]
    fn invalid_states_are_rejected() {
        let p = DriveParams::dimensionless();
        let proto = WorkProtocol::new(p, 1.0).unwrap();
        let unnormalized = Mat2::identity();
        assert!(matches!(
            kdq_table(&proto, &unnormalized),
            Err(KdqError::InvalidState { .. })
        ));
    }

    #[test]
    fn work_distribution_merges_the_zero_atoms() {
        let (proto, rho) = plus_setup(7.0 * PI / 6.0);
        let tab = kdq_table(&proto, &rho).unwrap();
        let atoms = work_distribution(&tab);
        assert_eq!(atoms.len(), 3, "three distinct work values");
        assert_close(atoms[0].w, -2.0, 1e-12, "lowest work value");
        assert_close(atoms[1].w, 0.0, 1e-12, "zero work value");
        assert_close(atoms[2].w, 2.0, 1e-12, "highest work value");
        let total: C64 = atoms.iter().map(|a| a.weight).sum();
        assert_cclose(total, c(1.0, 0.0), 1e-13, "weights sum to one");
        assert_cclose(
            atoms[1].weight,
            tab.entries[0][0] + tab.entries[1][1],
            1e-15,
            "zero atom is the diagonal sum",
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn random_pure_rho()(
                a in 0.0..PI,
                b in -PI..PI,
            ) -> Mat2 {
                let psi = [
                    c((a / 2.0).cos(), 0.0),
                    C64::from_polar((a / 2.0).sin(), b),
                ];
                Mat2::outer(&psi, &psi)
            }
        }

        prop_compose! {
            fn random_mixed_rho()(
                a in 0.0..PI,
                b in -PI..PI,
                r in 0.0..1.0f64,
            ) -> Mat2 {
                let psi = [
                    c((a / 2.0).cos(), 0.0),
                    C64::from_polar((a / 2.0).sin(), b),
                ];
                let pure = Mat2::outer(&psi, &psi);
                pure.scale(c(r, 0.0)).add(
                    &Mat2::identity().scale(c(0.5 * (1.0 - r), 0.0)),
                )
            }
        }

        proptest! {
            #[test]
            fn marginals_are_born_probabilities(t in -6.0..6.0f64, rho in random_mixed_rho()) {
                let p = DriveParams::dimensionless();
                let proto = WorkProtocol::new(p, t).unwrap();
                let tab = kdq_table(&proto, &rho).unwrap();
                prop_assert!((tab.sum() - c(1.0, 0.0)).norm() <= 1e-12);
                for i in 0..2 {
                    let m = tab.initial_marginal(i);
                    let born = proto.h0.spectral.projectors[i].trace_mul(&rho);
                    prop_assert!((m - born).norm() <= 1e-12);
                    prop_assert!(m.im.abs() <= 1e-12);
                }
                for f in 0..2 {
                    let m = tab.final_marginal(f);
                    let pulled = proto.u.dagger()
                        .mul(&proto.ht.spectral.projectors[f])
                        .mul(&proto.u);
                    let born = pulled.trace_mul(&rho);
                    prop_assert!((m - born).norm() <= 1e-12);
                    prop_assert!(m.im.abs() <= 1e-12);
                }
            }

            #[test]
            fn tpm_equals_kdq_of_the_dephased_state(t in -6.0..6.0f64, rho in random_mixed_rho()) {
                let p = DriveParams::dimensionless();
                let proto = WorkProtocol::new(p, t).unwrap();
                let tpm = tpm_table(&proto, &rho).unwrap();
                let rho_d = dephase_initial(&proto, &rho);
                let kdq_d = kdq_table(&proto, &rho_d).unwrap();
                for i in 0..2 {
                    for f in 0..2 {
                        prop_assert!((tpm.entries[i][f] - kdq_d.entries[i][f]).norm() <= 1e-12);
                        prop_assert!(tpm.entries[i][f].im.abs() <= 1e-12);
                        prop_assert!(tpm.entries[i][f].re >= -1e-12);
                    }
                }
            }

            #[test]
            fn char_function_is_bounded_and_normalized(
                t in -6.0..6.0f64,
                u in -20.0..20.0f64,
                rho in random_mixed_rho(),
            ) {
                let p = DriveParams::dimensionless();
                let proto = WorkProtocol::new(p, t).unwrap();
                let tab = kdq_table(&proto, &rho).unwrap();
                prop_assert!((char_function(&tab, 0.0) - c(1.0, 0.0)).norm() <= 1e-12);
                // Entry magnitudes bound the sum: |G| <= sum |q| <= 2 for a qubit.
                prop_assert!(char_function(&tab, u).norm() <= 2.0 + 1e-12);
            }

            #[test]
            fn diagonal_states_reduce_kdq_to_tpm(t in -6.0..6.0f64, w in 0.0..1.0f64) {
                let p = DriveParams::dimensionless();
                let proto = WorkProtocol::new(p, t).unwrap();
                let d = &proto.h0.spectral;
                let rho = d.projectors[0].scale(c(w, 0.0))
                    .add(&d.projectors[1].scale(c(1.0 - w, 0.0)));
                let kdq = kdq_table(&proto, &rho).unwrap();
                let tpm = tpm_table(&proto, &rho).unwrap();
                for i in 0..2 {
                    for f in 0..2 {
                        prop_assert!((kdq.entries[i][f] - tpm.entries[i][f]).norm() <= 1e-12);
                        prop_assert!(kdq.entries[i][f].im.abs() <= 1e-12);
                        prop_assert!(kdq.entries[i][f].re >= -1e-12);
                    }
                }
            }

            #[test]
            fn correlation_matches_the_table_contraction(
                t in -6.0..6.0f64,
                rho in random_mixed_rho(),
            ) {
                let p = DriveParams::dimensionless();
                let proto = WorkProtocol::new(p, t).unwrap();
                let tab = kdq_table(&proto, &rho).unwrap();
                let mut z = c(0.0, 0.0);
                for i in 0..2 {
                    for f in 0..2 {
                        z += tab.entries[i][f] * tab.e_initial[i] * tab.e_final[f];
                    }
                }
                let rep = correlation_report(&proto, &rho).unwrap();
                prop_assert!((z - rep.corr).norm() <= 1e-12);
            }

            #[test]
            fn rsur_holds_for_random_states(t in -6.0..6.0f64, rho in random_mixed_rho()) {
                let p = DriveParams::dimensionless();
                let proto = WorkProtocol::new(p, t).unwrap();
                let rep = rsur_report(&proto, &rho).unwrap();
                let scale = rep.lhs.abs().max(rep.rhs.abs()).max(1.0);
                prop_assert!(rep.lhs >= rep.rhs - 1e-10 * scale);
                // The correlation matrix is PSD and Hermitian.
                prop_assert!(rep.correlation_matrix.is_hermitian());
                let dec = eig_hermitian(&rep.correlation_matrix).unwrap();
                let norm2 = rep.correlation_matrix.frobenius_norm().powi(2).max(1e-30);
                for e in dec.eigenvalues.iter() {
                    prop_assert!(*e >= -1e-12 * norm2.sqrt());
                }
                prop_assert!(rep.det >= -1e-12 * norm2);
            }

            #[test]
            fn moments_match_exponential_derivatives(t in -6.0..6.0f64, rho in random_pure_rho()) {
                // d/du G at 0 ~ i <W>, second derivative ~ -<W^2>.
                let p = DriveParams::dimensionless();
                let proto = WorkProtocol::new(p, t).unwrap();
                let tab = kdq_table(&proto, &rho).unwrap();
                let m = work_moments(&tab);
                let h = 1e-4;
                let gp = char_function(&tab, h);
                let gm = char_function(&tab, -h);
                let g0 = char_function(&tab, 0.0);
                let d1 = (gp - gm) / c(0.0, 2.0 * h);
                let d2 = (gp - g0 * 2.0 + gm) / c(h * h, 0.0);
                prop_assert!((d1 - m.mean).norm() <= 1e-6);
                prop_assert!((-d2 - m.second).norm() <= 1e-5);
            }
        }
    }
}
