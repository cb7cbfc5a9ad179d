//! Composite spin ⊗ phonon state space and operator construction.
//!
//! The tensor-factor order is fixed everywhere: spins first with ion 1
//! leftmost (most significant), then phonon modes in descending frequency
//! order. Basis index arithmetic lives here and only here; other modules go
//! through the layout's indexers.
//!
//! Phonon factors are hard-truncated: a cutoff of `c` keeps occupations
//! 0..=c (c+1 levels) and the raising operator annihilates the top level.
//! Truncation quality is monitored by the propagation module through the
//! population at the cutoff level, not by the operators themselves.

use crate::scalar::{fl, Scalar, C};
use thiserror::Error;

/// Default Hilbert-space dimension cap (overridable per layout).
pub const DEFAULT_DIM_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HilbertError {
    #[error("ion index {0} out of range for {1} spins")]
    IonOutOfRange(usize, usize),
    #[error("mode index {0} out of range for {1} modes")]
    ModeOutOfRange(usize, usize),
    #[error("layout must contain at least one spin")]
    NoSpins,
    #[error("dimension {0} exceeds cap {1}; raise the cap or lower cutoffs")]
    DimensionCap(usize, usize),
    #[error("spin pattern length {0} does not match layout with {1} spins")]
    SpinPatternLength(usize, usize),
    #[error("occupation list length {0} does not match layout with {1} modes")]
    OccupationLength(usize, usize),
    #[error("occupation {occ} exceeds cutoff {cutoff} on mode {mode}")]
    OccupationAboveCutoff { mode: usize, occ: usize, cutoff: usize },
    #[error("unrecognized spin character {0:?} (expected ↑/↓ or u/d)")]
    BadSpinChar(char),
    #[error("state/layout dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// One qubit level. `Down` is the σᶻ = −1 eigenstate, `Up` is +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn from_char(c: char) -> Result<Self, HilbertError> {
        match c {
            '↓' | 'd' | 'D' => Ok(Spin::Down),
            '↑' | 'u' | 'U' => Ok(Spin::Up),
            other => Err(HilbertError::BadSpinChar(other)),
        }
    }

    pub fn parse_pattern(pattern: &str) -> Result<Vec<Spin>, HilbertError> {
        pattern.chars().map(Spin::from_char).collect()
    }

    fn digit(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }
}

/// Tensor-factor layout of the composite space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceLayout {
    n_spins: usize,
    phonon_cutoffs: Vec<usize>,
    /// Stride of each factor, spins then modes.
    strides: Vec<usize>,
    dim: usize,
}

impl SpaceLayout {
    pub fn new(n_spins: usize, phonon_cutoffs: Vec<usize>) -> Result<Self, HilbertError> {
        Self::with_cap(n_spins, phonon_cutoffs, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(
        n_spins: usize,
        phonon_cutoffs: Vec<usize>,
        cap: usize,
    ) -> Result<Self, HilbertError> {
        if n_spins == 0 {
            return Err(HilbertError::NoSpins);
        }
        let mut dims: Vec<usize> = Vec::with_capacity(n_spins + phonon_cutoffs.len());
        dims.extend(std::iter::repeat(2).take(n_spins));
        dims.extend(phonon_cutoffs.iter().map(|c| c + 1));
        let mut dim: usize = 1;
        for d in &dims {
            dim = dim.checked_mul(*d).ok_or(HilbertError::DimensionCap(usize::MAX, cap))?;
        }
        if dim > cap {
            return Err(HilbertError::DimensionCap(dim, cap));
        }
        // strides: leftmost factor most significant
        let mut strides = vec![1usize; dims.len()];
        for f in (0..dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * dims[f + 1];
        }
        Ok(SpaceLayout { n_spins, phonon_cutoffs, strides, dim })
    }

    /// Spin-only layout (no phonon factors).
    pub fn spins_only(n_spins: usize) -> Result<Self, HilbertError> {
        Self::new(n_spins, vec![])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_modes(&self) -> usize {
        self.phonon_cutoffs.len()
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.phonon_cutoffs[mode]
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.phonon_cutoffs
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn phonon_dim(&self) -> usize {
        self.dim >> self.n_spins
    }

    fn spin_stride(&self, ion: usize) -> usize {
        self.strides[ion]
    }

    fn mode_stride(&self, mode: usize) -> usize {
        self.strides[self.n_spins + mode]
    }

    /// Spin of `ion` in basis state `index`.
    pub fn spin_at(&self, index: usize, ion: usize) -> Spin {
        if (index / self.spin_stride(ion)) % 2 == 0 {
            Spin::Down
        } else {
            Spin::Up
        }
    }

    /// Phonon occupation of `mode` in basis state `index`.
    pub fn occupation_at(&self, index: usize, mode: usize) -> usize {
        (index / self.mode_stride(mode)) % (self.phonon_cutoffs[mode] + 1)
    }

    /// Split a basis index into (spin part, phonon part).
    pub fn split(&self, index: usize) -> (usize, usize) {
        let pd = self.phonon_dim();
        (index / pd, index % pd)
    }

    /// Basis index of a product configuration.
    pub fn index_of(&self, spins: &[Spin], occupations: &[usize]) -> Result<usize, HilbertError> {
        if spins.len() != self.n_spins {
            return Err(HilbertError::SpinPatternLength(spins.len(), self.n_spins));
        }
        if occupations.len() != self.n_modes() {
            return Err(HilbertError::OccupationLength(occupations.len(), self.n_modes()));
        }
        let mut idx = 0usize;
        for (i, s) in spins.iter().enumerate() {
            idx += s.digit() * self.spin_stride(i);
        }
        for (m, &occ) in occupations.iter().enumerate() {
            let cutoff = self.phonon_cutoffs[m];
            if occ > cutoff {
                return Err(HilbertError::OccupationAboveCutoff { mode: m, occ, cutoff });
            }
            idx += occ * self.mode_stride(m);
        }
        Ok(idx)
    }
}

/// Pure state on a [`SpaceLayout`].
#[derive(Debug, Clone)]
pub struct StateVector<T: Scalar> {
    pub amplitudes: Vec<C<T>>,
    pub layout: SpaceLayout,
}

impl<T: Scalar> StateVector<T> {
    pub fn zero(layout: &SpaceLayout) -> Self {
        StateVector { amplitudes: vec![C::new(T::zero(), T::zero()); layout.dim()], layout: layout.clone() }
    }

    /// Basis state with the given spin pattern and phonon occupations.
    pub fn basis(
        layout: &SpaceLayout,
        spins: &[Spin],
        occupations: &[usize],
    ) -> Result<Self, HilbertError> {
        let idx = layout.index_of(spins, occupations)?;
        let mut s = Self::zero(layout);
        s.amplitudes[idx] = C::new(T::one(), T::zero());
        Ok(s)
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, x| s + x).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > T::zero() {
            let inv = T::one() / n;
            for a in &mut self.amplitudes {
                *a = *a * inv;
            }
        }
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * *b)
            .fold(C::new(T::zero(), T::zero()), |s, x| s + x)
    }

    /// ⟨ψ|A|ψ⟩ (real part; callers use it for hermitian observables).
    pub fn expectation(&self, op: &SparseOperator<T>) -> T {
        let mut acc = C::new(T::zero(), T::zero());
        for &(r, c, v) in &op.entries {
            acc += self.amplitudes[r as usize].conj() * v * self.amplitudes[c as usize];
        }
        acc.re
    }
}

/// Normalized computational-basis product state from a textual spin pattern.
pub fn product_state<T: Scalar>(
    spin_pattern: &str,
    phonon_occupations: &[usize],
    layout: &SpaceLayout,
) -> Result<StateVector<T>, HilbertError> {
    let spins = Spin::parse_pattern(spin_pattern)?;
    StateVector::basis(layout, &spins, phonon_occupations)
}

/// Sparse operator as sorted (row, col, value) triplets.
#[derive(Debug, Clone)]
pub struct SparseOperator<T: Scalar> {
    dim: usize,
    entries: Vec<(u32, u32, C<T>)>,
    hermitian: bool,
}

impl<T: Scalar> SparseOperator<T> {
    /// Build from triplets; duplicates are summed, zeros dropped.
    ///
    /// Setting `hermitian` asserts A = A† and is verified to 1e-12 of the
    /// largest entry.
    pub fn from_entries(
        dim: usize,
        entries: Vec<(u32, u32, C<T>)>,
        hermitian: bool,
    ) -> SparseOperator<T> {
        let mut entries = entries;
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, C<T>)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if let Some(last) = merged.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            merged.push((r, c, v));
        }
        merged.retain(|&(_, _, v)| v.norm_sqr() > T::zero());
        let op = SparseOperator { dim, entries: merged, hermitian };
        if hermitian {
            let dev = op.hermiticity_deviation();
            let scale = op.max_abs().max(T::one());
            assert!(
                dev <= fl::<T>(1e-12) * scale,
                "operator marked hermitian deviates from A = A^dagger"
            );
        }
        op
    }

    pub fn zero(dim: usize) -> Self {
        SparseOperator { dim, entries: vec![], hermitian: true }
    }

    pub fn identity(dim: usize) -> Self {
        let one = C::new(T::one(), T::zero());
        SparseOperator {
            dim,
            entries: (0..dim as u32).map(|i| (i, i, one)).collect(),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, u32, C<T>)] {
        &self.entries
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().map(|e| e.2.norm()).fold(T::zero(), T::max)
    }

    /// Entry at (row, col); entries are kept sorted, so this is a binary search.
    pub fn get(&self, row: u32, col: u32) -> C<T> {
        match self.entries.binary_search_by_key(&(row, col), |&(r, c, _)| (r, c)) {
            Ok(k) => self.entries[k].2,
            Err(_) => C::new(T::zero(), T::zero()),
        }
    }

    /// max |A - A†| entrywise.
    pub fn hermiticity_deviation(&self) -> T {
        let mut dev = T::zero();
        for &(r, c, v) in &self.entries {
            dev = dev.max((v - self.get(c, r).conj()).norm());
        }
        dev
    }

    pub fn adjoint(&self) -> SparseOperator<T> {
        let entries = self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
        let mut adj = SparseOperator::from_entries(self.dim, entries, false);
        adj.hermitian = self.hermitian;
        adj
    }

    pub fn scale(&self, factor: C<T>) -> SparseOperator<T> {
        let entries = self.entries.iter().map(|&(r, c, v)| (r, c, v * factor)).collect();
        SparseOperator::from_entries(self.dim, entries, false)
    }

    pub fn add(self, other: &SparseOperator<T>) -> SparseOperator<T> {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        let mut entries = self.entries;
        entries.extend_from_slice(&other.entries);
        SparseOperator::from_entries(self.dim, entries, false)
    }

    /// Operator product self · other.
    pub fn matmul(&self, other: &SparseOperator<T>) -> SparseOperator<T> {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        // index other's rows
        let mut row_start = vec![usize::MAX; other.dim + 1];
        for (k, &(r, _, _)) in other.entries.iter().enumerate() {
            if row_start[r as usize] == usize::MAX {
                row_start[r as usize] = k;
            }
        }
        row_start[other.dim] = other.entries.len();
        for r in (0..other.dim).rev() {
            if row_start[r] == usize::MAX {
                row_start[r] = row_start[r + 1];
            }
        }
        let mut entries = Vec::new();
        for &(r, k, v) in &self.entries {
            let (s, e) = (row_start[k as usize], row_start[k as usize + 1]);
            for &(_, c, w) in &other.entries[s..e] {
                entries.push((r, c, v * w));
            }
        }
        SparseOperator::from_entries(self.dim, entries, false)
    }

    /// y += factor · A · x
    pub fn apply_scaled_into(&self, factor: C<T>, x: &[C<T>], y: &mut [C<T>]) {
        for &(r, c, v) in &self.entries {
            y[r as usize] += factor * v * x[c as usize];
        }
    }

    pub fn apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut y = vec![C::new(T::zero(), T::zero()); self.dim];
        self.apply_scaled_into(C::new(T::one(), T::zero()), x, &mut y);
        y
    }

    pub fn apply_to_state(&self, state: &StateVector<T>) -> StateVector<T> {
        StateVector { amplitudes: self.apply(&state.amplitudes), layout: state.layout.clone() }
    }

    pub fn to_dense(&self) -> Vec<C<T>> {
        let mut m = vec![C::new(T::zero(), T::zero()); self.dim * self.dim];
        for &(r, c, v) in &self.entries {
            m[r as usize * self.dim + c as usize] += v;
        }
        m
    }

    /// max |A - B| entrywise.
    pub fn max_abs_diff(&self, other: &SparseOperator<T>) -> T {
        self.clone().add(&other.scale(C::new(-T::one(), T::zero()))).max_abs()
    }
}

/// Single-spin operator kinds; σ± = (σˣ ± iσʸ)/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinOp {
    Raise,
    Lower,
    X,
    Y,
    Z,
    Identity,
}

/// Phonon ladder operator kinds on a truncated Fock factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhononOp {
    Annihilate,
    Create,
    Number,
}

/// Kronecker-embed a single-spin operator at `ion`.
pub fn embed_spin<T: Scalar>(
    op: SpinOp,
    ion: usize,
    layout: &SpaceLayout,
) -> Result<SparseOperator<T>, HilbertError> {
    if ion >= layout.n_spins() {
        return Err(HilbertError::IonOutOfRange(ion, layout.n_spins()));
    }
    let dim = layout.dim();
    let stride = layout.spin_stride(ion) as u32;
    let one = C::new(T::one(), T::zero());
    let mut entries = Vec::new();
    for idx in 0..dim as u32 {
        let down = layout.spin_at(idx as usize, ion) == Spin::Down;
        match op {
            SpinOp::Raise => {
                if down {
                    entries.push((idx + stride, idx, one));
                }
            }
            SpinOp::Lower => {
                if !down {
                    entries.push((idx - stride, idx, one));
                }
            }
            SpinOp::X => {
                if down {
                    entries.push((idx + stride, idx, one));
                } else {
                    entries.push((idx - stride, idx, one));
                }
            }
            SpinOp::Y => {
                // ⟨↑|σʸ|↓⟩ = −i, ⟨↓|σʸ|↑⟩ = +i, so that σ± = (σˣ ± iσʸ)/2.
                if down {
                    entries.push((idx + stride, idx, C::new(T::zero(), -T::one())));
                } else {
                    entries.push((idx - stride, idx, C::new(T::zero(), T::one())));
                }
            }
            SpinOp::Z => {
                let v = if down { -one } else { one };
                entries.push((idx, idx, v));
            }
            SpinOp::Identity => entries.push((idx, idx, one)),
        }
    }
    let hermitian = matches!(op, SpinOp::X | SpinOp::Y | SpinOp::Z | SpinOp::Identity);
    Ok(SparseOperator::from_entries(dim, entries, hermitian))
}

/// Kronecker-embed a truncated phonon ladder operator at `mode`.
///
/// The raising operator annihilates the cutoff level (hard truncation).
pub fn embed_phonon<T: Scalar>(
    op: PhononOp,
    mode: usize,
    layout: &SpaceLayout,
) -> Result<SparseOperator<T>, HilbertError> {
    if mode >= layout.n_modes() {
        return Err(HilbertError::ModeOutOfRange(mode, layout.n_modes()));
    }
    let dim = layout.dim();
    let cutoff = layout.cutoff(mode);
    let stride = layout.mode_stride(mode) as u32;
    let mut entries = Vec::new();
    for idx in 0..dim as u32 {
        let n = layout.occupation_at(idx as usize, mode);
        match op {
            PhononOp::Annihilate => {
                if n > 0 {
                    entries.push((idx - stride, idx, C::new(fl::<T>(n as f64).sqrt(), T::zero())));
                }
            }
            PhononOp::Create => {
                if n < cutoff {
                    entries.push((
                        idx + stride,
                        idx,
                        C::new(fl::<T>((n + 1) as f64).sqrt(), T::zero()),
                    ));
                }
            }
            PhononOp::Number => {
                if n > 0 {
                    entries.push((idx, idx, C::new(fl::<T>(n as f64), T::zero())));
                }
            }
        }
    }
    let hermitian = matches!(op, PhononOp::Number);
    Ok(SparseOperator::from_entries(dim, entries, hermitian))
}
