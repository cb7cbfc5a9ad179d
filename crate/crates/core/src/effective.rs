//! Analytic effective couplings of the drive scheme: the static single-,
//! two-, and three-spin Hamiltonians that survive time-averaging of the
//! oscillating drive terms, plus spin-only evolution under them and the
//! predicted three-spin oscillation period.
//!
//! Conventions: the effective Hamiltonian is
//!   H = Σ_i c_i σᶻ_i + Σ_{i≠j} K_{ij} σ⁺_i σ⁻_j
//!     + Σ_{(i,j,k) distinct} J_{ijk} σ⁺_i σ⁺_j σ⁺_k + h.c.,
//! with the three-spin sum over ordered triples of distinct ions (repeated
//! indices vanish by σ⁺² = 0 and are skipped). For a uniform coupling J₃
//! this gives full population transfer |↓↓↓⟩ → |↑↑↑⟩ with period
//! T₃ = π/(6 J₃); the factor 6 counts the permutations of the triple.

use crate::drives::DriveSet;
use crate::hilbert::{embed_phonon, embed_spin, PhononOp, SparseOperator, SpaceLayout, Spin, SpinOp, StateVector};
use crate::linalg::eigh;
use crate::scalar::{cis, fl, pi, Scalar, C};
use crate::trap::ModeSpectrum;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EffectiveError {
    #[error("delta must be nonzero")]
    ZeroDelta,
    #[error("resonant divergence: a sideband denominator vanishes (mode pair {0}, {1}); adjust delta")]
    ResonantDivergence(usize, usize),
    #[error("three-spin coupling is not positive; no period defined")]
    ZeroCoupling,
    #[error("occupation list length {0} does not match {1} modes")]
    OccupationLength(usize, usize),
    #[error("spin pattern does not match ion count: {0} vs {1}")]
    PatternLength(usize, usize),
    #[error("invalid spin pattern: {0}")]
    BadPattern(String),
}

/// Static effective coupling coefficients, all in rad/s.
#[derive(Debug, Clone)]
pub struct EffectiveCouplings<T> {
    /// Per-ion σᶻ coefficient, evaluated at the requested phonon occupations.
    pub single_spin: Vec<T>,
    /// σ⁺_i σ⁻_j coefficients, row-major N×N, zero diagonal.
    pub two_spin: Vec<T>,
    /// σ⁺σ⁺σ⁺ coefficient per ordered triple (i,j,k), flat N³, zero on
    /// repeated indices.
    pub three_spin: Vec<T>,
    pub n_ions: usize,
}

impl<T: Scalar> EffectiveCouplings<T> {
    fn zeros(n_ions: usize) -> Self {
        EffectiveCouplings {
            single_spin: vec![T::zero(); n_ions],
            two_spin: vec![T::zero(); n_ions * n_ions],
            three_spin: vec![T::zero(); n_ions * n_ions * n_ions],
            n_ions,
        }
    }

    pub fn two_spin_at(&self, i: usize, j: usize) -> T {
        self.two_spin[i * self.n_ions + j]
    }

    pub fn three_spin_at(&self, i: usize, j: usize, k: usize) -> T {
        self.three_spin[(i * self.n_ions + j) * self.n_ions + k]
    }

    /// Mean three-spin coupling over ordered distinct triples; for the
    /// uniform (center-of-mass dominated) case this is just J₃.
    pub fn uniform_three_spin(&self) -> T {
        let n = self.n_ions;
        let mut sum = T::zero();
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i != j && j != k && i != k {
                        sum += self.three_spin_at(i, j, k);
                        count += 1;
                    }
                }
            }
        }
        if count == 0 {
            T::zero()
        } else {
            sum / fl::<T>(count as f64)
        }
    }

    /// Accumulate another drive's contribution.
    pub fn add_assign(&mut self, other: &EffectiveCouplings<T>) {
        assert_eq!(self.n_ions, other.n_ions);
        for (a, b) in self.single_spin.iter_mut().zip(&other.single_spin) {
            *a += *b;
        }
        for (a, b) in self.two_spin.iter_mut().zip(&other.two_spin) {
            *a += *b;
        }
        for (a, b) in self.three_spin.iter_mut().zip(&other.three_spin) {
            *a += *b;
        }
    }
}

/// Printed single-mode (center-of-mass only) formulas for one drive at
/// detuning `delta`, evaluated at occupation `n_com`:
///
///   c_z = −(η²/4δ)[Ω_r²(n+½) − (η²Ω_b²/8)(n²+n+1)]
///   K   = +(η²/4δ)[Ω_r² + (η²Ω_b²/2)(n+½)]
///   J₃  =  η⁴Ω_r²Ω_b/(16δ²)
pub fn effective_single_mode<T: Scalar>(
    eta_com: T,
    omega_r: T,
    omega_b: T,
    delta: T,
    n_com: usize,
    n_ions: usize,
) -> Result<EffectiveCouplings<T>, EffectiveError> {
    if delta == T::zero() {
        return Err(EffectiveError::ZeroDelta);
    }
    let eta2 = eta_com * eta_com;
    let n = fl::<T>(n_com as f64);
    let half = fl::<T>(0.5);
    let c_z = -(eta2 / (fl::<T>(4.0) * delta))
        * (omega_r * omega_r * (n + half)
            - eta2 * omega_b * omega_b / fl::<T>(8.0) * (n * n + n + T::one()));
    let k = (eta2 / (fl::<T>(4.0) * delta))
        * (omega_r * omega_r + eta2 * omega_b * omega_b / fl::<T>(2.0) * (n + half));
    let j3 = eta2 * eta2 * omega_r * omega_r * omega_b / (fl::<T>(16.0) * delta * delta);
    let mut out = EffectiveCouplings::zeros(n_ions);
    for i in 0..n_ions {
        out.single_spin[i] = c_z;
        for j in 0..n_ions {
            if j != i {
                out.two_spin[i * n_ions + j] = k;
            }
            for kk in 0..n_ions {
                if i != j && j != kk && i != kk {
                    out.three_spin[(i * n_ions + j) * n_ions + kk] = j3;
                }
            }
        }
    }
    Ok(out)
}

/// Single-mode couplings for a full [`DriveSet`], mirror drive included.
///
/// The mirror pair contributes with √q-scaled Rabi frequencies at effective
/// detuning −qδ; the single- and two-spin parts are odd in δ and cancel,
/// the three-spin part is even and picks up the factor (1 + q^{-1/2}).
pub fn effective_single_mode_drive_set<T: Scalar>(
    eta_com: T,
    drive: &DriveSet<T>,
    n_com: usize,
    n_ions: usize,
) -> Result<EffectiveCouplings<T>, EffectiveError> {
    let mut out =
        effective_single_mode(eta_com, drive.omega_r, drive.omega_b, drive.delta, n_com, n_ions)?;
    if let Some(q) = drive.mirror_q {
        let sq = q.sqrt();
        let mirror = effective_single_mode(
            eta_com,
            sq * drive.omega_r,
            sq * drive.omega_b,
            -q * drive.delta,
            n_com,
            n_ions,
        )?;
        out.add_assign(&mirror);
    }
    Ok(out)
}

fn checked_denominator<T: Scalar>(
    value: T,
    scale: T,
    m: usize,
    n: usize,
) -> Result<T, EffectiveError> {
    if value.abs() < fl::<T>(1e-12) * scale {
        Err(EffectiveError::ResonantDivergence(m, n))
    } else {
        Ok(value)
    }
}

/// Quartic Fock-state expectation ⟨n̄| a†_m' a†_n' a_m a_n |n̄⟩ summed over
/// the frequency-matched (m', n') pairs; only multiset-matching pairs are
/// nonzero on a Fock state.
fn quartic_expectation<T: Scalar>(occupations: &[usize], m: usize, n: usize) -> T {
    let nm = fl::<T>(occupations[m] as f64);
    let nn = fl::<T>(occupations[n] as f64);
    if m == n {
        nm * (nm - T::one())
    } else {
        fl::<T>(2.0) * nm * nn
    }
}

/// Multi-mode effective couplings for a [`DriveSet`] (mirror included),
/// evaluated on the Fock state with the given per-mode occupations.
pub fn effective_multi_mode<T: Scalar>(
    spectrum: &ModeSpectrum<T>,
    drive: &DriveSet<T>,
    occupations: &[usize],
) -> Result<EffectiveCouplings<T>, EffectiveError> {
    if occupations.len() != spectrum.n_modes() {
        return Err(EffectiveError::OccupationLength(occupations.len(), spectrum.n_modes()));
    }
    if drive.delta == T::zero() {
        return Err(EffectiveError::ZeroDelta);
    }
    let mut out = EffectiveCouplings::zeros(spectrum.n_ions());
    let mut variants = vec![(drive.omega_r, drive.omega_b, drive.delta)];
    if let Some(q) = drive.mirror_q {
        let sq = q.sqrt();
        variants.push((sq * drive.omega_r, sq * drive.omega_b, -q * drive.delta));
    }
    for (omega_r, omega_b, delta) in variants {
        let one = one_drive_multi_mode(spectrum, omega_r, omega_b, delta, occupations)?;
        out.add_assign(&one);
    }
    Ok(out)
}

/// One drive's multi-mode sums, term by term as printed.
fn one_drive_multi_mode<T: Scalar>(
    spectrum: &ModeSpectrum<T>,
    omega_r: T,
    omega_b: T,
    delta: T,
    occupations: &[usize],
) -> Result<EffectiveCouplings<T>, EffectiveError> {
    let n_ions = spectrum.n_ions();
    let n_modes = spectrum.n_modes();
    let omega_com = spectrum.omega_com();
    let mu_r = -omega_com - delta;
    let scale = omega_com;
    let half = fl::<T>(0.5);
    let quarter = fl::<T>(0.25);
    let r2 = omega_r * omega_r;
    let b2 = omega_b * omega_b;
    let mut out = EffectiveCouplings::zeros(n_ions);

    // single-spin sigma^z coefficients
    for i in 0..n_ions {
        let mut acc = T::zero();
        for m in 0..n_modes {
            let den = checked_denominator(spectrum.frequencies[m] + mu_r, scale, m, m)?;
            let eta2 = spectrum.eta(m, i) * spectrum.eta(m, i);
            acc += eta2 * r2 / den * (fl::<T>(occupations[m] as f64) + half);
        }
        for m in 0..n_modes {
            for n in 0..n_modes {
                let den = checked_denominator(
                    spectrum.frequencies[m] + spectrum.frequencies[n] + fl::<T>(2.0) * mu_r,
                    scale,
                    m,
                    n,
                )?;
                let em = spectrum.eta(m, i);
                let en = spectrum.eta(n, i);
                let diag = em * em * en * en
                    * (fl::<T>((occupations[m] + occupations[n]) as f64) + T::one());
                let quartic = em * em * en * en * quartic_expectation::<T>(occupations, m, n);
                acc -= quarter * b2 / den * (diag + quartic);
            }
        }
        out.single_spin[i] = quarter * acc;
    }

    // two-spin exchange coefficients
    for i in 0..n_ions {
        for j in 0..n_ions {
            if j == i {
                continue;
            }
            let mut acc = T::zero();
            for m in 0..n_modes {
                let den = checked_denominator(spectrum.frequencies[m] + mu_r, scale, m, m)?;
                acc += spectrum.eta(m, i) * spectrum.eta(m, j) * r2 / den;
            }
            for m in 0..n_modes {
                for n in 0..n_modes {
                    let den = checked_denominator(
                        spectrum.frequencies[m] + spectrum.frequencies[n] + fl::<T>(2.0) * mu_r,
                        scale,
                        m,
                        n,
                    )?;
                    acc += half
                        * spectrum.eta(m, i)
                        * spectrum.eta(n, i)
                        * spectrum.eta(m, j)
                        * spectrum.eta(n, j)
                        * b2
                        / den
                        * (fl::<T>((occupations[m] + occupations[n]) as f64) + T::one());
                }
            }
            out.two_spin[i * n_ions + j] = -quarter * acc;
        }
    }

    // three-spin coefficients over ordered distinct triples
    for i in 0..n_ions {
        for j in 0..n_ions {
            for k in 0..n_ions {
                if i == j || j == k || i == k {
                    continue;
                }
                let mut acc = T::zero();
                for m in 0..n_modes {
                    for n in 0..n_modes {
                        let dm = checked_denominator(mu_r + spectrum.frequencies[m], scale, m, m)?;
                        let dn = checked_denominator(mu_r + spectrum.frequencies[n], scale, n, n)?;
                        let dmn = checked_denominator(
                            fl::<T>(2.0) * mu_r + spectrum.frequencies[m] + spectrum.frequencies[n],
                            scale,
                            m,
                            n,
                        )?;
                        let kernel = (fl::<T>(3.0) * mu_r
                            + spectrum.frequencies[m]
                            + fl::<T>(2.0) * spectrum.frequencies[n])
                            / (fl::<T>(24.0) * dm * dn * dmn);
                        acc += spectrum.eta(m, i)
                            * spectrum.eta(n, j)
                            * spectrum.eta(m, k)
                            * spectrum.eta(n, k)
                            * kernel;
                    }
                }
                out.three_spin[(i * n_ions + j) * n_ions + k] = acc * r2 * omega_b;
            }
        }
    }
    Ok(out)
}

/// Operator-valued single-spin coefficient: the full phonon-number-dependent
/// H^(σ) contribution multiplying σᶻ at `ion`, embedded on `layout`.
///
/// The frequency-matching condition on the quartic term is resolved with
/// relative tolerance 1e-9; for generic spectra only multiset-matching mode
/// pairs survive.
pub fn single_spin_operator<T: Scalar>(
    spectrum: &ModeSpectrum<T>,
    drive: &DriveSet<T>,
    ion: usize,
    layout: &SpaceLayout,
) -> Result<SparseOperator<T>, EffectiveError> {
    assert_eq!(layout.n_modes(), spectrum.n_modes(), "layout/spectrum mode mismatch");
    let n_modes = spectrum.n_modes();
    let omega_com = spectrum.omega_com();
    let dim = layout.dim();
    let quarter = fl::<T>(0.25);
    let half = fl::<T>(0.5);
    let mut total = SparseOperator::zero(dim);
    let mut variants = vec![(drive.omega_r, drive.omega_b, drive.delta)];
    if let Some(q) = drive.mirror_q {
        let sq = q.sqrt();
        variants.push((sq * drive.omega_r, sq * drive.omega_b, -q * drive.delta));
    }
    let c = |x: T| C::new(x, T::zero());
    for (omega_r, omega_b, delta) in variants {
        let mu_r = -omega_com - delta;
        let r2 = omega_r * omega_r;
        let b2 = omega_b * omega_b;
        for m in 0..n_modes {
            let den = checked_denominator(spectrum.frequencies[m] + mu_r, omega_com, m, m)?;
            let eta2 = spectrum.eta(m, ion) * spectrum.eta(m, ion);
            let num = embed_phonon(PhononOp::Number, m, layout).expect("mode in range");
            let op = num.add(&SparseOperator::identity(dim).scale(c(half)));
            total = total.add(&op.scale(c(quarter * eta2 * r2 / den)));
        }
        for m in 0..n_modes {
            for n in 0..n_modes {
                let den = checked_denominator(
                    spectrum.frequencies[m] + spectrum.frequencies[n] + fl::<T>(2.0) * mu_r,
                    omega_com,
                    m,
                    n,
                )?;
                let em = spectrum.eta(m, ion);
                let en = spectrum.eta(n, ion);
                let pre = -quarter * quarter * b2 / den;
                // (n_m + n_n + 1) part
                let nm = embed_phonon(PhononOp::Number, m, layout).expect("mode in range");
                let nn = embed_phonon(PhononOp::Number, n, layout).expect("mode in range");
                let diag = nm.add(&nn).add(&SparseOperator::identity(dim));
                total = total.add(&diag.scale(c(pre * em * em * en * en)));
                // frequency-matched quartic part
                let target = spectrum.frequencies[m] + spectrum.frequencies[n];
                for mp in 0..n_modes {
                    for np in 0..n_modes {
                        let sum = spectrum.frequencies[mp] + spectrum.frequencies[np];
                        if ((sum - target) / target).abs() > fl::<T>(1e-9) {
                            continue;
                        }
                        let coupling =
                            em * en * spectrum.eta(mp, ion) * spectrum.eta(np, ion);
                        let quartic = embed_phonon(PhononOp::Create, mp, layout)
                            .expect("mode in range")
                            .matmul(&embed_phonon(PhononOp::Create, np, layout).expect("mode"))
                            .matmul(&embed_phonon(PhononOp::Annihilate, m, layout).expect("mode"))
                            .matmul(&embed_phonon(PhononOp::Annihilate, n, layout).expect("mode"));
                        total = total.add(&quartic.scale(c(pre * coupling)));
                    }
                }
            }
        }
    }
    let sz = embed_spin(SpinOp::Z, ion, layout).expect("ion in range");
    Ok(total.matmul(&sz))
}

/// Predicted three-spin Rabi period T₃ = π/(6 J₃) in seconds.
pub fn predicted_period<T: Scalar>(couplings: &EffectiveCouplings<T>) -> Result<T, EffectiveError> {
    let j3 = couplings.uniform_three_spin();
    if j3 <= T::zero() {
        return Err(EffectiveError::ZeroCoupling);
    }
    Ok(pi::<T>() / (fl::<T>(6.0) * j3))
}

/// Exact spin-only evolution e^{−iHt}|pattern⟩ under the static effective
/// Hamiltonian, by dense diagonalization on the 2^N spin space.
pub fn effective_spin_evolution<T: Scalar>(
    couplings: &EffectiveCouplings<T>,
    initial_pattern: &str,
    t: T,
) -> Result<StateVector<T>, EffectiveError> {
    let n_ions = couplings.n_ions;
    let spins = Spin::parse_pattern(initial_pattern)
        .map_err(|e| EffectiveError::BadPattern(e.to_string()))?;
    if spins.len() != n_ions {
        return Err(EffectiveError::PatternLength(spins.len(), n_ions));
    }
    let layout = SpaceLayout::spins_only(n_ions).expect("spin layout");
    let dim = layout.dim();
    let c1 = C::new(T::one(), T::zero());

    let mut h = SparseOperator::<T>::zero(dim);
    for i in 0..n_ions {
        if couplings.single_spin[i] != T::zero() {
            let sz = embed_spin(SpinOp::Z, i, &layout).expect("ion in range");
            h = h.add(&sz.scale(C::new(couplings.single_spin[i], T::zero())));
        }
        for j in 0..n_ions {
            if j != i && couplings.two_spin_at(i, j) != T::zero() {
                let hop = embed_spin(SpinOp::Raise, i, &layout)
                    .expect("ion")
                    .matmul(&embed_spin(SpinOp::Lower, j, &layout).expect("ion"));
                h = h.add(&hop.scale(C::new(couplings.two_spin_at(i, j), T::zero())));
            }
            for k in 0..n_ions {
                if i == j || j == k || i == k {
                    continue;
                }
                let j3 = couplings.three_spin_at(i, j, k);
                if j3 != T::zero() {
                    let triple = embed_spin(SpinOp::Raise, i, &layout)
                        .expect("ion")
                        .matmul(&embed_spin(SpinOp::Raise, j, &layout).expect("ion"))
                        .matmul(&embed_spin(SpinOp::Raise, k, &layout).expect("ion"));
                    let triple = triple.clone().add(&triple.adjoint());
                    h = h.add(&triple.scale(C::new(j3, T::zero())));
                }
            }
        }
    }

    // the effective Hamiltonian is real symmetric in the z basis
    let dense_c = h.to_dense();
    let mut dense = vec![T::zero(); dim * dim];
    for (k, z) in dense_c.iter().enumerate() {
        debug_assert!(z.im.abs() <= fl::<T>(1e-14) * z.re.abs().max(T::one()));
        dense[k] = z.re;
    }
    let eig = eigh(&dense, dim).expect("effective Hamiltonian diagonalization");

    let psi0 = StateVector::<T>::basis(&layout, &spins, &[]).expect("pattern state");
    let mut amps = vec![C::new(T::zero(), T::zero()); dim];
    for k in 0..dim {
        let v = eig.vector(k);
        let overlap: T = (0..dim).map(|d| v[d] * psi0.amplitudes[d].re).sum();
        let phase = cis(-eig.values[k] * t) * C::new(overlap, T::zero());
        for d in 0..dim {
            amps[d] += phase * c1 * C::new(v[d], T::zero());
        }
    }
    Ok(StateVector { amplitudes: amps, layout })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::product_state;
    use crate::scalar::khz_to_angular;
    use crate::trap::{transverse_modes, TrapConfig};

    const ETA: f64 = 0.0416333199893227;

    fn drive(delta_khz: f64, omega_r_khz: f64) -> DriveSet<f64> {
        DriveSet::with_default_blue(khz_to_angular(omega_r_khz), khz_to_angular(delta_khz), ETA)
            .unwrap()
            .with_mirror(1.3)
            .unwrap()
    }

    fn spectrum_n3(omega_z_khz: f64) -> ModeSpectrum<f64> {
        let config = TrapConfig::new(
            3,
            khz_to_angular(5000.0),
            khz_to_angular(omega_z_khz),
            khz_to_angular(26.0),
        )
        .unwrap();
        transverse_modes(&config).unwrap()
    }

    #[test]
    fn single_mode_limit_of_multi_mode_formulas() {
        let d = drive(2.0, 10.0);
        let spec = ModeSpectrum::single_mode(khz_to_angular(5000.0), ETA, 3);
        // magnitude of the individual (red-sideband) contributions; the
        // coefficients themselves can cancel to zero under the default blue
        // rule, so they are no good as a relative scale
        let scale = ETA * ETA * d.omega_r * d.omega_r / (4.0 * d.delta);
        for occ in [0usize, 1, 3] {
            let multi = effective_multi_mode(&spec, &d, &[occ]).unwrap();
            let single = effective_single_mode_drive_set(ETA, &d, occ, 3).unwrap();
            let tol = 1e-12 * scale * (occ + 1) as f64;
            for i in 0..3 {
                assert!((multi.single_spin[i] - single.single_spin[i]).abs() <= tol);
            }
            for k in 0..9 {
                assert!((multi.two_spin[k] - single.two_spin[k]).abs() <= tol);
            }
            for k in 0..27 {
                assert!(
                    (multi.three_spin[k] - single.three_spin[k]).abs()
                        <= 1e-12 * single.three_spin[k].abs().max(1e-9)
                );
            }
        }
    }

    #[test]
    fn zeroed_rows_reduce_multi_to_single() {
        let d = drive(2.0, 10.0);
        let mut spec = spectrum_n3(1500.0);
        let eta = spec.eta(0, 0);
        for m in 1..3 {
            for i in 0..3 {
                spec.lamb_dicke[m * 3 + i] = 0.0;
            }
        }
        let multi = effective_multi_mode(&spec, &d, &[0, 0, 0]).unwrap();
        let single = effective_single_mode_drive_set(eta, &d, 0, 3).unwrap();
        for i in 0..3 {
            assert!((multi.single_spin[i] - single.single_spin[i]).abs() < 1e-12);
        }
        for k in 0..27 {
            let a = multi.three_spin[k];
            let b = single.three_spin[k];
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-9));
        }
    }

    #[test]
    fn parity_in_delta() {
        // single- and two-spin coefficients odd, three-spin even
        for delta_khz in [0.5, 1.0, 2.0, 4.0, 8.0] {
            for occ in [0usize, 2] {
                let p = effective_single_mode::<f64>(
                    ETA,
                    khz_to_angular(10.0),
                    khz_to_angular(480.0),
                    khz_to_angular(delta_khz),
                    occ,
                    3,
                )
                .unwrap();
                let m = effective_single_mode::<f64>(
                    ETA,
                    khz_to_angular(10.0),
                    khz_to_angular(480.0),
                    khz_to_angular(-delta_khz),
                    occ,
                    3,
                )
                .unwrap();
                assert!((p.single_spin[0] + m.single_spin[0]).abs() < 1e-12 * p.single_spin[0].abs());
                assert!((p.two_spin_at(0, 1) + m.two_spin_at(0, 1)).abs() < 1e-12 * p.two_spin_at(0, 1).abs());
                assert!((p.three_spin_at(0, 1, 2) - m.three_spin_at(0, 1, 2)).abs() < 1e-12 * p.three_spin_at(0, 1, 2));
            }
        }
    }

    #[test]
    fn two_drive_cancellation_is_machine_exact() {
        let d = drive(2.0, 10.0);
        // reference scale: the red-sideband piece of either coefficient
        let scale = |occ: usize| ETA * ETA * d.omega_r * d.omega_r * (occ as f64 + 1.0) / (4.0 * d.delta);
        for occ in [0usize, 1, 4] {
            let c = effective_single_mode_drive_set(ETA, &d, occ, 3).unwrap();
            let base =
                effective_single_mode::<f64>(ETA, d.omega_r, d.omega_b, d.delta, occ, 3).unwrap();
            assert!(c.single_spin[0].abs() <= 1e-13 * scale(occ), "occ={occ}: {}", c.single_spin[0]);
            assert!(c.two_spin_at(0, 1).abs() <= 1e-13 * scale(occ));
            // three-spin reinforced instead
            let factor = c.three_spin_at(0, 1, 2) / base.three_spin_at(0, 1, 2);
            assert!((factor - 1.87706).abs() < 1e-5, "got {factor}");
        }
    }

    #[test]
    fn vacuum_sigma_z_without_blue() {
        let c = effective_single_mode::<f64>(ETA, khz_to_angular(10.0), 0.0, khz_to_angular(2.0), 0, 1)
            .unwrap();
        let want = -(ETA * ETA) * khz_to_angular::<f64>(10.0).powi(2) / (8.0 * khz_to_angular(2.0));
        assert!((c.single_spin[0] - want).abs() < 1e-9 * want.abs());
    }

    #[test]
    fn default_blue_rule_cancels_vacuum_sigma_z() {
        // omega_b = 2 omega_r / eta makes the vacuum sigma-z coefficient vanish
        let c = effective_single_mode::<f64>(
            ETA,
            khz_to_angular(16.0),
            2.0 * khz_to_angular(16.0) / ETA,
            khz_to_angular(4.0),
            0,
            3,
        )
        .unwrap();
        assert!(c.single_spin[0].abs() < 1e-9);
    }

    #[test]
    fn predicted_periods_match_quoted_values() {
        let cases = [(1.0, 6.0, 22.8e-3), (2.0, 10.0, 19.7e-3), (2.0, 12.0, 11.4e-3), (4.0, 16.0, 19.2e-3)];
        for (delta, omega_r, t3_expect) in cases {
            let c = effective_single_mode_drive_set(ETA, &drive(delta, omega_r), 0, 3).unwrap();
            let t3 = predicted_period(&c).unwrap();
            assert!(
                (t3 - t3_expect).abs() < 0.05e-3,
                "delta={delta} omega_r={omega_r}: {t3} vs {t3_expect}"
            );
        }
    }

    #[test]
    fn doubling_rabi_shrinks_period_eightfold() {
        let c1 = effective_single_mode_drive_set(ETA, &drive(2.0, 8.0), 0, 3).unwrap();
        let c2 = effective_single_mode_drive_set(ETA, &drive(2.0, 16.0), 0, 3).unwrap();
        let ratio = predicted_period(&c1).unwrap() / predicted_period(&c2).unwrap();
        assert!((ratio - 8.0).abs() < 1e-9);
    }

    #[test]
    fn noncom_modes_contribute_under_ten_percent() {
        // Fig. 6 regime: delta = 2 kHz, omega_r = 10 kHz, omega_z = 1.5 MHz
        let spec = spectrum_n3(1500.0);
        let d = drive(2.0, 10.0);
        let full = effective_multi_mode(&spec, &d, &[0, 0, 0]).unwrap();
        let mut com_only = spec.clone();
        for m in 1..3 {
            for i in 0..3 {
                com_only.lamb_dicke[m * 3 + i] = 0.0;
            }
        }
        let com = effective_multi_mode(&com_only, &d, &[0, 0, 0]).unwrap();
        let j_full = full.uniform_three_spin();
        let j_com = com.uniform_three_spin();
        let rel = ((j_full - j_com) / j_com).abs();
        assert!(rel < 0.10, "non-com contribution {rel}");
    }

    #[test]
    fn repeated_triple_indices_are_zero() {
        let c = effective_single_mode_drive_set(ETA, &drive(2.0, 10.0), 0, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.three_spin_at(i, i, j), 0.0);
                assert_eq!(c.three_spin_at(i, j, i), 0.0);
                assert_eq!(c.three_spin_at(j, i, i), 0.0);
            }
        }
        // and the operator statement behind it
        let layout = SpaceLayout::spins_only(2).unwrap();
        let plus = embed_spin::<f64>(SpinOp::Raise, 0, &layout).unwrap();
        assert_eq!(plus.matmul(&plus).nnz(), 0);
    }

    #[test]
    fn operator_valued_sigma_z_matches_scalar_on_fock_states() {
        let spec = spectrum_n3(1500.0);
        let d = drive(2.0, 10.0);
        let layout = SpaceLayout::new(3, vec![3, 2, 2]).unwrap();
        for occ in [[0usize, 0, 0], [1, 0, 2], [2, 1, 0]] {
            let couplings = effective_multi_mode(&spec, &d, &occ).unwrap();
            for ion in 0..3 {
                let op = single_spin_operator(&spec, &d, ion, &layout).unwrap();
                // expectation on |↑..⟩⊗|occ⟩ picks out +c_i
                let psi = product_state::<f64>("↑↑↑", &occ, &layout).unwrap();
                let got = psi.expectation(&op);
                let want = couplings.single_spin[ion];
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1e-6),
                    "ion {ion} occ {occ:?}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn resonant_denominator_rejected() {
        let spec = spectrum_n3(1000.0);
        // put the red beatnote exactly on the tilt mode: delta = omega_tilt - omega_com
        let delta = spec.frequencies[1] - spec.frequencies[0];
        let d = DriveSet::new(khz_to_angular(10.0), khz_to_angular(480.0), delta).unwrap();
        assert!(matches!(
            effective_multi_mode(&spec, &d, &[0, 0, 0]),
            Err(EffectiveError::ResonantDivergence(_, _))
        ));
        assert!(matches!(
            effective_single_mode::<f64>(ETA, 1.0, 1.0, 0.0, 0, 3),
            Err(EffectiveError::ZeroDelta)
        ));
    }

    #[test]
    fn pure_three_spin_population_transfer() {
        let c = effective_single_mode_drive_set(ETA, &drive(4.0, 16.0), 0, 3).unwrap();
        let t3 = predicted_period(&c).unwrap();
        let layout = SpaceLayout::spins_only(3).unwrap();
        let sz1 = embed_spin::<f64>(SpinOp::Z, 0, &layout).unwrap();

        // t = 0 leaves the state unchanged
        let psi0 = effective_spin_evolution(&c, "↓↓↓", 0.0).unwrap();
        assert!((psi0.expectation(&sz1) + 1.0).abs() < 1e-12);

        // half a period transfers |↓↓↓⟩ -> |↑↑↑⟩ (cancellation makes H pure three-spin)
        let psi = effective_spin_evolution(&c, "↓↓↓", t3 / 2.0).unwrap();
        assert!((psi.expectation(&sz1) - 1.0).abs() < 1e-9);

        // mixed pattern is stationary under the pure three-spin Hamiltonian
        let sz2 = embed_spin::<f64>(SpinOp::Z, 1, &layout).unwrap();
        for frac in [0.1, 0.33, 0.5] {
            let psi = effective_spin_evolution(&c, "↓↑↓", frac * t3).unwrap();
            assert!((psi.expectation(&sz2) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn two_spin_matrix_symmetric() {
        let spec = spectrum_n3(1000.0);
        let d = drive(2.0, 10.0);
        let c = effective_multi_mode(&spec, &d, &[1, 0, 0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((c.two_spin_at(i, j) - c.two_spin_at(j, i)).abs() < 1e-15);
            }
        }
    }
}
