//! Raman drive configurations and the time-dependent RWA Hamiltonians they
//! generate: single-mode one-drive, single-mode two-drive, and multi-mode
//! two-drive.
//!
//! A Hamiltonian is kept as a list of static sparse operators with
//! oscillating scalar prefactors,
//!
//!   H(t) = Σ_k (Σ_j pre_{k,j} e^{i ω_{k,j} t}) A_k + h.c.,
//!
//! so propagation only recomputes scalars per time step. Terms mirror the
//! printed sums one-to-one: one term per (mode, ion) at first order and per
//! (mode, mode, ion) at second order, with identically-zero couplings
//! skipped.

use crate::hilbert::{embed_phonon, embed_spin, HilbertError, PhononOp, SparseOperator, SpaceLayout, SpinOp};
use crate::scalar::{fl, Scalar, C};
use crate::trap::ModeSpectrum;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DriveError {
    #[error("rabi frequency must be non-negative")]
    NegativeRabi,
    #[error("sideband order must be 1 (red) or 2 (blue)")]
    BadSidebandOrder,
    #[error("mirror drive requires q != 1: cross-pair sidebands become resonant")]
    ResonantMirror,
    #[error("mirror drive not enabled on this drive set")]
    MirrorMissing,
    #[error("layout must carry exactly one phonon mode for the single-mode builders, got {0}")]
    SingleModeLayout(usize),
    #[error("layout/spectrum mismatch: {n_spins} spins, {layout_modes} layout modes, {spectrum_modes} spectrum modes")]
    MultiModeMismatch { n_spins: usize, layout_modes: usize, spectrum_modes: usize },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// One Raman beam pair driving a first- or second-order sideband.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanDrive<T> {
    /// Rabi frequency Ω (rad/s).
    pub rabi: T,
    /// Detuning δ from the center-of-mass sideband (rad/s).
    pub detuning_from_com: T,
    /// 1 = single red sideband (order η), 2 = double blue sideband (order η²).
    pub sideband_order: u8,
}

impl<T: Scalar> RamanDrive<T> {
    pub fn new(rabi: T, detuning_from_com: T, sideband_order: u8) -> Result<Self, DriveError> {
        if rabi <= T::zero() {
            return Err(DriveError::NegativeRabi);
        }
        if sideband_order != 1 && sideband_order != 2 {
            return Err(DriveError::BadSidebandOrder);
        }
        Ok(RamanDrive { rabi, detuning_from_com, sideband_order })
    }
}

/// A red/blue Raman pair, optionally mirrored by a √q-scaled copy with
/// opposite detuning for canceling the single- and two-spin couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSet<T> {
    /// Red-sideband Rabi frequency Ω_r (rad/s).
    pub omega_r: T,
    /// Blue-sideband Rabi frequency Ω_b (rad/s).
    pub omega_b: T,
    /// Detuning δ from the center-of-mass mode (rad/s).
    pub delta: T,
    /// Mirror-drive scale factor q, when the second drive is enabled.
    pub mirror_q: Option<T>,
}

/// The scale factor used throughout the reference runs.
pub fn default_q<T: Scalar>() -> T {
    fl(1.3)
}

impl<T: Scalar> DriveSet<T> {
    pub fn new(omega_r: T, omega_b: T, delta: T) -> Result<Self, DriveError> {
        if omega_r < T::zero() || omega_b < T::zero() {
            return Err(DriveError::NegativeRabi);
        }
        Ok(DriveSet { omega_r, omega_b, delta, mirror_q: None })
    }

    /// Blue Rabi frequency from the convention Ω_b = 2Ω_r/η_com, which makes
    /// the red and blue processes equally strong.
    pub fn with_default_blue(omega_r: T, delta: T, eta_com: T) -> Result<Self, DriveError> {
        Self::new(omega_r, fl::<T>(2.0) * omega_r / eta_com, delta)
    }

    pub fn with_mirror(mut self, q: T) -> Result<Self, DriveError> {
        if q == T::one() {
            return Err(DriveError::ResonantMirror);
        }
        self.mirror_q = Some(q);
        Ok(self)
    }

    /// Mirror red Rabi frequency Ω_r' = √q Ω_r.
    pub fn omega_r_mirror(&self) -> Option<T> {
        self.mirror_q.map(|q| q.sqrt() * self.omega_r)
    }

    /// Mirror blue Rabi frequency Ω_b' = √q Ω_b.
    pub fn omega_b_mirror(&self) -> Option<T> {
        self.mirror_q.map(|q| q.sqrt() * self.omega_b)
    }

    /// Mirror detuning δ' = qδ.
    pub fn delta_mirror(&self) -> Option<T> {
        self.mirror_q.map(|q| q * self.delta)
    }

    /// A scale factor too close to 1 leaves cross-pair sidebands nearly
    /// resonant; flag it.
    pub fn near_resonance_warning(&self) -> Option<String> {
        let q = self.mirror_q?;
        if (q - T::one()).abs() < fl(0.05) {
            Some(format!("mirror scale factor q = {q} is within 0.05 of 1; cross-pair sideband terms are nearly resonant"))
        } else {
            None
        }
    }

    /// View as the underlying red/blue [`RamanDrive`] pair.
    pub fn raman_pair(&self) -> Result<(RamanDrive<T>, RamanDrive<T>), DriveError> {
        Ok((
            RamanDrive::new(self.omega_r, self.delta, 1)?,
            RamanDrive::new(self.omega_b, self.delta, 2)?,
        ))
    }
}

/// One oscillating term of a drive Hamiltonian.
#[derive(Debug, Clone)]
pub struct SeriesTerm<T: Scalar> {
    /// Static operator part, coupling strengths folded in.
    pub op: SparseOperator<T>,
    /// (complex prefactor, angular frequency) pairs; the term's scalar at
    /// time t is Σ pre · e^{iωt}.
    pub components: Vec<(C<T>, T)>,
}

impl<T: Scalar> SeriesTerm<T> {
    pub fn scalar_at(&self, t: T) -> C<T> {
        self.components
            .iter()
            .map(|&(pre, omega)| pre * crate::scalar::cis(omega * t))
            .fold(C::new(T::zero(), T::zero()), |s, z| s + z)
    }
}

/// H(t) = Σ_k scalar_k(t) · A_k + h.c. on a fixed layout.
#[derive(Debug, Clone)]
pub struct HamiltonianSeries<T: Scalar> {
    terms: Vec<SeriesTerm<T>>,
    layout: SpaceLayout,
    /// Center-of-mass frequency when known; used to confirm the RWA dropped
    /// everything at trap-frequency scale.
    rwa_reference: Option<T>,
}

impl<T: Scalar> HamiltonianSeries<T> {
    /// Assemble a series from explicit terms (mostly for toy models and
    /// tests; the drive builders below cover the physical Hamiltonians).
    pub fn from_terms(terms: Vec<SeriesTerm<T>>, layout: SpaceLayout) -> Self {
        HamiltonianSeries { terms, layout, rwa_reference: None }
    }

    pub fn terms(&self) -> &[SeriesTerm<T>] {
        &self.terms
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest |ω| over all oscillating components (rad/s).
    pub fn max_term_frequency(&self) -> T {
        self.terms
            .iter()
            .flat_map(|t| t.components.iter().map(|&(_, w)| w.abs()))
            .fold(T::zero(), T::max)
    }

    /// True when some retained term oscillates at or above the reference
    /// (center-of-mass) frequency, i.e. a counter-rotating term survived.
    pub fn violates_rwa(&self) -> bool {
        match self.rwa_reference {
            Some(omega_com) => self.max_term_frequency() >= omega_com,
            None => false,
        }
    }

    /// Dense-equivalent sparse Hamiltonian at time t, h.c. included.
    pub fn hamiltonian_at(&self, t: T) -> SparseOperator<T> {
        let dim = self.layout.dim();
        let mut entries = Vec::new();
        for term in &self.terms {
            let s = term.scalar_at(t);
            for &(r, c, v) in term.op.entries() {
                entries.push((r, c, s * v));
                entries.push((c, r, (s * v).conj()));
            }
        }
        SparseOperator::from_entries(dim, entries, true)
    }
}

/// σ⁺-with-phonon operator for one ion: coupling · (phonon ops) · σ⁺_i.
fn spin_phonon_op<T: Scalar>(
    coupling: T,
    phonon: &[(PhononOp, usize)],
    ion: usize,
    layout: &SpaceLayout,
) -> Result<SparseOperator<T>, DriveError> {
    let mut op = embed_spin(SpinOp::Raise, ion, layout)?;
    for &(kind, mode) in phonon {
        op = embed_phonon(kind, mode, layout)?.matmul(&op);
    }
    Ok(op.scale(C::new(coupling, T::zero())))
}

/// Single-mode (center-of-mass) Hamiltonian of one Raman pair:
/// (iΩ_r/2) η e^{−iδt} a†σ⁺_i − (Ω_b/4) η² e^{2iδt} a²σ⁺_i + h.c., summed
/// over ions.
pub fn single_mode_one_drive<T: Scalar>(
    drive: &DriveSet<T>,
    eta_com: T,
    layout: &SpaceLayout,
) -> Result<HamiltonianSeries<T>, DriveError> {
    if layout.n_modes() != 1 {
        return Err(DriveError::SingleModeLayout(layout.n_modes()));
    }
    let half = fl::<T>(0.5);
    let quarter = fl::<T>(0.25);
    let mut terms = Vec::new();
    for ion in 0..layout.n_spins() {
        if drive.omega_r > T::zero() {
            terms.push(SeriesTerm {
                op: spin_phonon_op(eta_com, &[(PhononOp::Create, 0)], ion, layout)?,
                components: vec![(C::new(T::zero(), half * drive.omega_r), -drive.delta)],
            });
        }
        if drive.omega_b > T::zero() {
            terms.push(SeriesTerm {
                op: spin_phonon_op(
                    eta_com * eta_com,
                    &[(PhononOp::Annihilate, 0), (PhononOp::Annihilate, 0)],
                    ion,
                    layout,
                )?,
                components: vec![(
                    C::new(-quarter * drive.omega_b, T::zero()),
                    fl::<T>(2.0) * drive.delta,
                )],
            });
        }
    }
    Ok(HamiltonianSeries { terms, layout: layout.clone(), rwa_reference: None })
}

/// Single-mode Hamiltonian with both drives: red phases
/// (e^{−iδt} + √q e^{iqδt}), blue phases (e^{2iδt} + √q e^{−2iqδt}).
pub fn single_mode_two_drive<T: Scalar>(
    drive: &DriveSet<T>,
    eta_com: T,
    layout: &SpaceLayout,
) -> Result<HamiltonianSeries<T>, DriveError> {
    if layout.n_modes() != 1 {
        return Err(DriveError::SingleModeLayout(layout.n_modes()));
    }
    let q = drive.mirror_q.ok_or(DriveError::MirrorMissing)?;
    if q == T::one() {
        return Err(DriveError::ResonantMirror);
    }
    let sq = q.sqrt();
    let half = fl::<T>(0.5);
    let quarter = fl::<T>(0.25);
    let two = fl::<T>(2.0);
    let mut terms = Vec::new();
    for ion in 0..layout.n_spins() {
        if drive.omega_r > T::zero() {
            terms.push(SeriesTerm {
                op: spin_phonon_op(eta_com, &[(PhononOp::Create, 0)], ion, layout)?,
                components: vec![
                    (C::new(T::zero(), half * drive.omega_r), -drive.delta),
                    (C::new(T::zero(), half * drive.omega_r * sq), q * drive.delta),
                ],
            });
        }
        if drive.omega_b > T::zero() {
            terms.push(SeriesTerm {
                op: spin_phonon_op(
                    eta_com * eta_com,
                    &[(PhononOp::Annihilate, 0), (PhononOp::Annihilate, 0)],
                    ion,
                    layout,
                )?,
                components: vec![
                    (C::new(-quarter * drive.omega_b, T::zero()), two * drive.delta),
                    (C::new(-quarter * drive.omega_b * sq, T::zero()), -two * q * drive.delta),
                ],
            });
        }
    }
    Ok(HamiltonianSeries { terms, layout: layout.clone(), rwa_reference: None })
}

/// Multi-mode two-drive Hamiltonian to second order in the Lamb-Dicke
/// parameters.
///
/// Beatnotes: μ_r = −ω_com − δ, μ_b = 2ω_com + 2δ; the mirror pair uses
/// μ_r' = −ω_com + qδ, μ_b' = 2ω_com − 2qδ with √q-scaled Rabi frequencies.
/// First order couples mode m to ion i through η_{m,i} a†_m σ⁺_i
/// oscillating at ω_m + μ_r; second order couples every ordered mode pair
/// (m, n) through η_{m,i} η_{n,i} a_m a_n σ⁺_i at μ_b − ω_m − ω_n. The
/// (m, n) double sum is kept unsymmetrized, exactly as the effective-theory
/// bookkeeping expects.
pub fn multi_mode_two_drive<T: Scalar>(
    drive: &DriveSet<T>,
    spectrum: &ModeSpectrum<T>,
    layout: &SpaceLayout,
) -> Result<HamiltonianSeries<T>, DriveError> {
    let n = layout.n_spins();
    if spectrum.n_modes() != n || layout.n_modes() != n || spectrum.n_ions() != n {
        return Err(DriveError::MultiModeMismatch {
            n_spins: n,
            layout_modes: layout.n_modes(),
            spectrum_modes: spectrum.n_modes(),
        });
    }
    let q = drive.mirror_q.ok_or(DriveError::MirrorMissing)?;
    if q == T::one() {
        return Err(DriveError::ResonantMirror);
    }
    let sq = q.sqrt();
    let half = fl::<T>(0.5);
    let quarter = fl::<T>(0.25);
    let two = fl::<T>(2.0);
    let omega_com = spectrum.omega_com();
    let mu_r = -omega_com - drive.delta;
    let mu_r_p = -omega_com + q * drive.delta;
    let mu_b = two * (omega_com + drive.delta);
    let mu_b_p = two * (omega_com - q * drive.delta);

    let mut terms = Vec::new();
    // first order in eta
    for m in 0..n {
        for ion in 0..n {
            let eta = spectrum.eta(m, ion);
            if drive.omega_r <= T::zero() || eta == T::zero() {
                continue;
            }
            terms.push(SeriesTerm {
                op: spin_phonon_op(eta, &[(PhononOp::Create, m)], ion, layout)?,
                components: vec![
                    (C::new(T::zero(), half * drive.omega_r), spectrum.frequencies[m] + mu_r),
                    (C::new(T::zero(), half * drive.omega_r * sq), spectrum.frequencies[m] + mu_r_p),
                ],
            });
        }
    }
    // second order in eta, ordered (m, n) pairs as printed
    for m in 0..n {
        for mode_n in 0..n {
            for ion in 0..n {
                let coupling = spectrum.eta(m, ion) * spectrum.eta(mode_n, ion);
                if drive.omega_b <= T::zero() || coupling == T::zero() {
                    continue;
                }
                let osc = -(spectrum.frequencies[m] + spectrum.frequencies[mode_n]);
                terms.push(SeriesTerm {
                    op: spin_phonon_op(
                        coupling,
                        &[(PhononOp::Annihilate, m), (PhononOp::Annihilate, mode_n)],
                        ion,
                        layout,
                    )?,
                    components: vec![
                        (C::new(-quarter * drive.omega_b, T::zero()), mu_b + osc),
                        (C::new(-quarter * drive.omega_b * sq, T::zero()), mu_b_p + osc),
                    ],
                });
            }
        }
    }
    Ok(HamiltonianSeries { terms, layout: layout.clone(), rwa_reference: Some(omega_com) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::khz_to_angular;
    use crate::trap::{transverse_modes, TrapConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ETA: f64 = 0.0416333199893227; // sqrt(26 / 15000)

    fn two_drive(delta_khz: f64, omega_r_khz: f64) -> DriveSet<f64> {
        DriveSet::with_default_blue(khz_to_angular(omega_r_khz), khz_to_angular(delta_khz), ETA)
            .unwrap()
            .with_mirror(1.3)
            .unwrap()
    }

    #[test]
    fn mirror_parameters_exact() {
        let d = two_drive(2.0, 10.0);
        assert_eq!(d.omega_r_mirror().unwrap(), 1.3f64.sqrt() * d.omega_r);
        assert_eq!(d.omega_b_mirror().unwrap(), 1.3f64.sqrt() * d.omega_b);
        assert_eq!(d.delta_mirror().unwrap(), 1.3 * d.delta);
        // sqrt(1.3) * 10 = 11.402 kHz
        let khz = d.omega_r_mirror().unwrap() / khz_to_angular(1.0);
        assert!((khz - 11.402).abs() < 1e-3);
    }

    #[test]
    fn default_blue_rule() {
        let d = two_drive(4.0, 16.0);
        assert!((d.omega_b - 2.0 * d.omega_r / ETA).abs() < 1e-9);
    }

    #[test]
    fn q_one_rejected_and_near_one_warns() {
        let base = DriveSet::new(1.0, 2.0, 0.5).unwrap();
        assert!(matches!(base.with_mirror(1.0), Err(DriveError::ResonantMirror)));
        let close = base.with_mirror(1.02).unwrap();
        assert!(close.near_resonance_warning().is_some());
        let fine = base.with_mirror(1.3).unwrap();
        assert!(fine.near_resonance_warning().is_none());
    }

    #[test]
    fn two_drive_term_frequencies() {
        // q = 1.3, delta = 2 kHz: {-2, 2.6, 4, -5.2} x 2pi kHz
        let layout = SpaceLayout::new(3, vec![6]).unwrap();
        let series = single_mode_two_drive(&two_drive(2.0, 10.0), ETA, &layout).unwrap();
        let red = &series.terms()[0];
        let blue = &series.terms()[1];
        let freqs: Vec<f64> = red
            .components
            .iter()
            .chain(blue.components.iter())
            .map(|&(_, w)| w / khz_to_angular(1.0))
            .collect();
        let want = [-2.0, 2.6, 4.0, -5.2];
        for (got, want) in freqs.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn red_prefactor_magnitude_at_t0() {
        let layout = SpaceLayout::new(3, vec![6]).unwrap();
        let drive = two_drive(2.0, 10.0);
        let series = single_mode_two_drive(&drive, ETA, &layout).unwrap();
        let s = series.terms()[0].scalar_at(0.0);
        let want = 0.5 * drive.omega_r * (1.0 + 1.3f64.sqrt());
        // eta lives in the operator part, not the scalar
        assert!((s.norm() - want).abs() / want < 1e-14);
    }

    #[test]
    fn one_drive_max_frequency_is_two_delta() {
        // Fig. 4 parameters: delta = 4 kHz -> max term frequency 8 x 2pi kHz
        let layout = SpaceLayout::new(3, vec![6]).unwrap();
        let drive = DriveSet::with_default_blue(khz_to_angular(16.0), khz_to_angular(4.0), ETA)
            .unwrap();
        let series = single_mode_one_drive(&drive, ETA, &layout).unwrap();
        let fmax = series.max_term_frequency() / khz_to_angular(1.0);
        assert!((fmax - 8.0).abs() < 1e-12);
        assert_eq!(series.terms().len(), 6); // red + blue per ion
    }

    #[test]
    fn zero_rabi_gives_empty_series() {
        let layout = SpaceLayout::new(3, vec![6]).unwrap();
        let drive = DriveSet::new(0.0, 0.0, khz_to_angular(4.0)).unwrap();
        let series = single_mode_one_drive(&drive, ETA, &layout).unwrap();
        assert!(series.is_empty());
        assert_eq!(series.max_term_frequency(), 0.0);
    }

    #[test]
    fn hermitian_at_random_times_all_builders() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layout1 = SpaceLayout::new(2, vec![3]).unwrap();
        let drive: DriveSet<f64> =
            DriveSet::with_default_blue(khz_to_angular(10.0), khz_to_angular(2.0), 0.1)
                .unwrap()
                .with_mirror(1.3)
                .unwrap();
        let one = single_mode_one_drive(&drive, 0.1, &layout1).unwrap();
        let two = single_mode_two_drive(&drive, 0.1, &layout1).unwrap();
        let config = TrapConfig::new(
            3,
            khz_to_angular(5000.0),
            khz_to_angular(1500.0),
            khz_to_angular(26.0),
        )
        .unwrap();
        let spectrum = transverse_modes(&config).unwrap();
        let layout3 = SpaceLayout::new(3, vec![2, 1, 1]).unwrap();
        let multi = multi_mode_two_drive(&drive, &spectrum, &layout3).unwrap();
        for _ in 0..100 {
            let t = rng.gen_range(0.0..0.04);
            for series in [&one, &two] {
                let h = series.hamiltonian_at(t);
                assert!(h.hermiticity_deviation() <= 1e-12 * h.max_abs().max(1.0));
            }
            let h = multi.hamiltonian_at(t);
            assert!(h.hermiticity_deviation() <= 1e-12 * h.max_abs().max(1.0));
        }
        // the spec's spot check
        let h = two.hamiltonian_at(0.37e-3);
        assert!(h.hermiticity_deviation() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn multi_mode_term_counts_match_printed_sums() {
        let config = TrapConfig::new(
            3,
            khz_to_angular(5000.0),
            khz_to_angular(1500.0),
            khz_to_angular(26.0),
        )
        .unwrap();
        let spectrum = transverse_modes(&config).unwrap();
        let layout = SpaceLayout::new(3, vec![2, 1, 1]).unwrap();
        let series = multi_mode_two_drive(&two_drive(2.0, 10.0), &spectrum, &layout).unwrap();
        // N*N first-order + N*N^2 second-order operator families before h.c.
        assert_eq!(series.terms().len(), 9 + 27);
    }

    #[test]
    fn multi_mode_tilt_term_frequency() {
        // omega_z = 1.5 MHz: tilt first-order oscillates near -233 x 2pi kHz
        let config = TrapConfig::new(
            3,
            khz_to_angular(5000.0),
            khz_to_angular(1500.0),
            khz_to_angular(26.0),
        )
        .unwrap();
        let spectrum = transverse_modes(&config).unwrap();
        let layout = SpaceLayout::new(3, vec![2, 1, 1]).unwrap();
        let series = multi_mode_two_drive(&two_drive(2.0, 10.0), &spectrum, &layout).unwrap();
        // com first-order oscillates at -delta
        let com_freq = series.terms()[0].components[0].1 / khz_to_angular(1.0);
        assert!((com_freq + 2.0).abs() < 1e-9);
        // terms 3..6 are the tilt row (mode index 1)
        let tilt_freq = series.terms()[3].components[0].1 / khz_to_angular(1.0);
        assert!((tilt_freq + 233.0).abs() < 1.5, "tilt term at {tilt_freq} kHz");
        assert!(!series.violates_rwa());
    }

    #[test]
    fn com_only_rows_reduce_to_single_mode_builder() {
        let config = TrapConfig::new(
            3,
            khz_to_angular(5000.0),
            khz_to_angular(1500.0),
            khz_to_angular(26.0),
        )
        .unwrap();
        let mut spectrum = transverse_modes(&config).unwrap();
        let n = spectrum.n_modes();
        for m in 1..n {
            for i in 0..n {
                spectrum.lamb_dicke[m * n + i] = 0.0;
            }
        }
        let eta = spectrum.eta(0, 0);
        let drive = DriveSet::with_default_blue(khz_to_angular(10.0), khz_to_angular(2.0), eta)
            .unwrap()
            .with_mirror(1.3)
            .unwrap();
        // cutoff-0 spectator modes give the same index arithmetic as a
        // one-mode layout of the same dimension
        let layout_multi = SpaceLayout::new(3, vec![6, 0, 0]).unwrap();
        let layout_single = SpaceLayout::new(3, vec![6]).unwrap();
        assert_eq!(layout_multi.dim(), layout_single.dim());
        let multi = multi_mode_two_drive(&drive, &spectrum, &layout_multi).unwrap();
        let single = single_mode_two_drive(&drive, eta, &layout_single).unwrap();
        assert_eq!(multi.terms().len(), single.terms().len());
        // term-by-term: same operators, same prefactors, same frequencies
        let key = |t: &SeriesTerm<f64>| {
            let &(_, c, _) = t.op.entries().first().unwrap();
            (t.components.len(), c)
        };
        let mut mt: Vec<&SeriesTerm<f64>> = multi.terms().iter().collect();
        let mut st: Vec<&SeriesTerm<f64>> = single.terms().iter().collect();
        mt.sort_by_key(|t| key(t));
        st.sort_by_key(|t| key(t));
        for (a, b) in mt.iter().zip(&st) {
            assert!(a.op.max_abs_diff(&b.op) < 1e-12);
            assert_eq!(a.components.len(), b.components.len());
            for (ca, cb) in a.components.iter().zip(&b.components) {
                assert!((ca.0 - cb.0).norm() < 1e-9);
                assert!((ca.1 - cb.1).abs() < 1e-6, "{} vs {}", ca.1, cb.1);
            }
        }
    }

    #[test]
    fn rwa_bookkeeping_no_trap_scale_terms() {
        for omega_z_khz in [1000.0, 1500.0] {
            let config = TrapConfig::new(
                3,
                khz_to_angular(5000.0),
                khz_to_angular(omega_z_khz),
                khz_to_angular(26.0),
            )
            .unwrap();
            let spectrum = transverse_modes(&config).unwrap();
            let layout = SpaceLayout::new(3, vec![2, 1, 1]).unwrap();
            for params in [(2.0, 10.0), (4.0, 16.0)] {
                let series =
                    multi_mode_two_drive(&two_drive(params.0, params.1), &spectrum, &layout)
                        .unwrap();
                assert!(!series.violates_rwa());
                assert!(series.max_term_frequency() < spectrum.omega_com());
            }
        }
    }

    #[test]
    fn single_mode_requires_one_mode_layout() {
        let layout = SpaceLayout::new(3, vec![6, 2]).unwrap();
        let err = single_mode_two_drive(&two_drive(2.0, 10.0), ETA, &layout);
        assert!(matches!(err, Err(DriveError::SingleModeLayout(2))));
    }

    #[test]
    fn multi_mode_requires_matching_counts() {
        let config = TrapConfig::new(
            2,
            khz_to_angular(5000.0),
            khz_to_angular(1500.0),
            khz_to_angular(26.0),
        )
        .unwrap();
        let spectrum = transverse_modes(&config).unwrap();
        let layout = SpaceLayout::new(3, vec![2, 1, 1]).unwrap();
        assert!(matches!(
            multi_mode_two_drive(&two_drive(2.0, 10.0), &spectrum, &layout),
            Err(DriveError::MultiModeMismatch { .. })
        ));
    }
}
