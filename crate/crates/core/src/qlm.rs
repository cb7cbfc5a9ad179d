//! U(1) quantum-link-model experiments on the three-spin scheme: exact and
//! gauge-violating spin Hamiltonians, Gauss-law constraints and diagnostics,
//! string → meson dynamics by exact diagonalization, and the decomposition
//! of the three-spin gate into two-spin entangling gates.
//!
//! The mapping uses N = 2·N_stag − 1 ions: odd ions (1-based) carry the
//! staggered matter sites, even ions the links. A site ion ↑ means occupied;
//! a link ion's σᶻ/2 is the electric field. Physical states are annihilated
//! by every Gauss operator
//!   G_i = ½[σᶻ_{2i} − σᶻ_{2i−2} − σᶻ_{2i−1} − (−1)^i],
//! with σᶻ₀ fixed by the boundary flux and the last site left open.

use crate::hilbert::{embed_spin, SparseOperator, SpaceLayout, Spin, SpinOp, StateVector};
use crate::linalg::{eigh, LinalgError, SymEigen};
use crate::scalar::{cis, fl, Scalar, C};
use thiserror::Error;

/// Largest lattice accepted by default: 2^13 ion basis states.
pub const MAX_N_STAG: usize = 7;

#[derive(Debug, Error, PartialEq)]
pub enum QlmError {
    #[error("n_stag must be an even integer >= 2, got {0}")]
    BadStaggeredCount(usize),
    #[error("n_stag {0} exceeds the default cap {MAX_N_STAG} (dimension 2^{})", 2 * MAX_N_STAG - 1)]
    DimensionCap(usize),
    #[error("gauge divisor g must be positive")]
    BadDivisor,
    #[error("gauss operator index {0} out of range 1..={1}")]
    GaussIndex(usize, usize),
    #[error("no z-basis state matches the {0} description; mapping bug")]
    NoMatchingState(&'static str),
    #[error("{count} z-basis states match the {what} description; mapping bug")]
    AmbiguousState { what: &'static str, count: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Sign of the electric flux entering the lattice (the c-number σᶻ₀).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryFlux {
    Positive,
    Negative,
}

impl BoundaryFlux {
    fn sign<T: Scalar>(self) -> T {
        match self {
            BoundaryFlux::Positive => T::one(),
            BoundaryFlux::Negative => -T::one(),
        }
    }
}

/// Quantum-link-model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QlmConfig<T> {
    /// Staggered matter sites; the chain carries 2·n_stag − 1 ions.
    pub n_stag: usize,
    /// Matter-gauge coupling J.
    pub coupling: T,
    /// Staggered mass μ.
    pub mass: T,
    /// Gauge-violating strength divisor g (`None` = exact model); the
    /// perturbation adds (J/g) all-to-all hops and a (μ/g) uniform σᶻ term.
    pub gauge_divisor: Option<T>,
    pub boundary: BoundaryFlux,
}

impl<T: Scalar> QlmConfig<T> {
    pub fn new(n_stag: usize, coupling: T, mass: T) -> Result<Self, QlmError> {
        if n_stag < 2 || n_stag % 2 != 0 {
            return Err(QlmError::BadStaggeredCount(n_stag));
        }
        if n_stag > MAX_N_STAG {
            return Err(QlmError::DimensionCap(n_stag));
        }
        Ok(QlmConfig {
            n_stag,
            coupling,
            mass,
            gauge_divisor: None,
            boundary: BoundaryFlux::Positive,
        })
    }

    pub fn with_gauge_divisor(mut self, g: T) -> Result<Self, QlmError> {
        if g <= T::zero() {
            return Err(QlmError::BadDivisor);
        }
        self.gauge_divisor = Some(g);
        Ok(self)
    }

    pub fn with_boundary(mut self, boundary: BoundaryFlux) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn n_ions(&self) -> usize {
        2 * self.n_stag - 1
    }

    fn layout(&self) -> SpaceLayout {
        SpaceLayout::spins_only(self.n_ions()).expect("spin layout")
    }
}

/// Dense hermitian spin Hamiltonian with a label for diagnostics.
#[derive(Debug, Clone)]
pub struct SpinHamiltonian<T> {
    /// Row-major 2^N × 2^N matrix; real in the z basis for every model here.
    pub matrix: Vec<T>,
    pub dim: usize,
    pub label: String,
}

fn densify_real<T: Scalar>(op: &SparseOperator<T>, label: &str) -> SpinHamiltonian<T> {
    let dim = op.dim();
    let mut matrix = vec![T::zero(); dim * dim];
    for &(r, c, v) in op.entries() {
        debug_assert!(v.im.abs() <= fl::<T>(1e-14) * v.re.abs().max(T::one()));
        matrix[r as usize * dim + c as usize] += v.re;
    }
    SpinHamiltonian { matrix, dim, label: label.to_string() }
}

fn hop<T: Scalar>(layout: &SpaceLayout, from: usize, to: usize) -> SparseOperator<T> {
    embed_spin(SpinOp::Raise, to, layout)
        .expect("ion index")
        .matmul(&embed_spin(SpinOp::Lower, from, layout).expect("ion index"))
}

/// Ion-mapped model Hamiltonian
///   J Σ_i [σ⁺_{2i−1} σ⁺_{2i} σ⁻_{2i+1} + h.c.] + μ Σ_i (−1)^i σᶻ_{2i−1},
/// plus the uniform gauge-violating terms when a divisor is set.
pub fn build_ion_hamiltonian<T: Scalar>(config: &QlmConfig<T>) -> Result<SpinHamiltonian<T>, QlmError> {
    let layout = config.layout();
    let n_ions = config.n_ions();
    let dim = layout.dim();
    let c = |x: T| C::new(x, T::zero());
    let mut h = SparseOperator::<T>::zero(dim);
    for i in 1..config.n_stag {
        // 1-based ions 2i−1, 2i, 2i+1
        let term = embed_spin(SpinOp::Raise, 2 * i - 2, &layout)
            .expect("ion index")
            .matmul(&embed_spin(SpinOp::Raise, 2 * i - 1, &layout).expect("ion index"))
            .matmul(&embed_spin(SpinOp::Lower, 2 * i, &layout).expect("ion index"));
        let term = term.clone().add(&term.adjoint());
        h = h.add(&term.scale(c(config.coupling)));
    }
    for i in 1..=config.n_stag {
        let sign = if i % 2 == 0 { T::one() } else { -T::one() };
        let sz = embed_spin(SpinOp::Z, 2 * i - 2, &layout).expect("ion index");
        h = h.add(&sz.scale(c(config.mass * sign)));
    }
    if let Some(g) = config.gauge_divisor {
        let hop_strength = config.coupling / g;
        for j in 0..n_ions {
            for k in 0..n_ions {
                if j == k {
                    continue;
                }
                // σ⁺_j σ⁻_k + h.c., summed over ordered pairs as printed
                let t = hop::<T>(&layout, k, j);
                let t = t.clone().add(&t.adjoint());
                h = h.add(&t.scale(c(hop_strength)));
            }
        }
        let mass_shift = config.mass / g;
        for j in 0..n_ions {
            let sz = embed_spin(SpinOp::Z, j, &layout).expect("ion index");
            h = h.add(&sz.scale(c(mass_shift)));
        }
    }
    let label = match config.gauge_divisor {
        None => format!("H_ion(n_stag={})", config.n_stag),
        Some(g) => format!("H_ion(n_stag={}, g={g})", config.n_stag),
    };
    Ok(densify_real(&h, &label))
}

/// Rotated-basis form of the exact model:
/// J Σ [σ⁺σ⁺σ⁺ + h.c.] − μ Σ σᶻ_{2i−1}.
pub fn build_rotated_hamiltonian<T: Scalar>(
    config: &QlmConfig<T>,
) -> Result<SpinHamiltonian<T>, QlmError> {
    let layout = config.layout();
    let dim = layout.dim();
    let c = |x: T| C::new(x, T::zero());
    let mut h = SparseOperator::<T>::zero(dim);
    for i in 1..config.n_stag {
        let term = embed_spin(SpinOp::Raise, 2 * i - 2, &layout)
            .expect("ion index")
            .matmul(&embed_spin(SpinOp::Raise, 2 * i - 1, &layout).expect("ion index"))
            .matmul(&embed_spin(SpinOp::Raise, 2 * i, &layout).expect("ion index"));
        let term = term.clone().add(&term.adjoint());
        h = h.add(&term.scale(c(config.coupling)));
    }
    for i in 1..=config.n_stag {
        let sz = embed_spin(SpinOp::Z, 2 * i - 2, &layout).expect("ion index");
        h = h.add(&sz.scale(c(-config.mass)));
    }
    Ok(densify_real(&h, &format!("H_rot(n_stag={})", config.n_stag)))
}

/// π-rotation pattern mapping the ion model onto the all-raising form:
/// σˣ on the last ion and on every other odd-even ion pair.
pub fn basis_rotation<T: Scalar>(n_stag: usize) -> Result<SparseOperator<T>, QlmError> {
    if n_stag < 2 || n_stag % 2 != 0 {
        return Err(QlmError::BadStaggeredCount(n_stag));
    }
    let n_ions = 2 * n_stag - 1;
    let layout = SpaceLayout::spins_only(n_ions).expect("spin layout");
    let mut u = embed_spin::<T>(SpinOp::X, n_ions - 1, &layout).expect("ion index");
    for i in 1..=(n_stag / 2).saturating_sub(1) {
        // 1-based ions 4i−1 and 4i
        u = u.matmul(&embed_spin(SpinOp::X, 4 * i - 2, &layout).expect("ion index"));
        u = u.matmul(&embed_spin(SpinOp::X, 4 * i - 1, &layout).expect("ion index"));
    }
    Ok(u)
}

/// Gauss's law operator G_i (1-based site i, 1 ≤ i ≤ n_stag−1); diagonal in
/// the z basis. For i = 1 the σᶻ₀ term is the boundary c-number.
pub fn gauss_operator<T: Scalar>(
    i: usize,
    n_stag: usize,
    boundary: BoundaryFlux,
) -> Result<SparseOperator<T>, QlmError> {
    if i == 0 || i >= n_stag {
        return Err(QlmError::GaussIndex(i, n_stag - 1));
    }
    let n_ions = 2 * n_stag - 1;
    let layout = SpaceLayout::spins_only(n_ions).expect("spin layout");
    let dim = layout.dim();
    let half = fl::<T>(0.5);
    let stagger = if i % 2 == 0 { T::one() } else { -T::one() };
    let mut entries = Vec::with_capacity(dim);
    for d in 0..dim {
        let sz = |ion_1based: usize| -> T {
            match layout.spin_at(d, ion_1based - 1) {
                Spin::Up => T::one(),
                Spin::Down => -T::one(),
            }
        };
        let left = if i == 1 { boundary.sign::<T>() } else { sz(2 * i - 2) };
        let value = half * (sz(2 * i) - left - sz(2 * i - 1) - stagger);
        if value != T::zero() {
            entries.push((d as u32, d as u32, C::new(value, T::zero())));
        }
    }
    Ok(SparseOperator::from_entries(dim, entries, true))
}

/// Diagonal Gauss values g_i(d) for all sites at basis state `d`.
fn gauss_values<T: Scalar>(
    layout: &SpaceLayout,
    d: usize,
    n_stag: usize,
    boundary: BoundaryFlux,
) -> Vec<T> {
    let half = fl::<T>(0.5);
    let sz = |ion_1based: usize| -> T {
        match layout.spin_at(d, ion_1based - 1) {
            Spin::Up => T::one(),
            Spin::Down => -T::one(),
        }
    };
    (1..n_stag)
        .map(|i| {
            let stagger = if i % 2 == 0 { T::one() } else { -T::one() };
            let left = if i == 1 { boundary.sign::<T>() } else { sz(2 * i - 2) };
            half * (sz(2 * i) - left - sz(2 * i - 1) - stagger)
        })
        .collect()
}

/// Staggered charge of site s (1-based) in basis state `d`: occupation minus
/// the Dirac-sea filling of odd sites.
fn staggered_charge(layout: &SpaceLayout, d: usize, site: usize) -> i32 {
    let occupied = matches!(layout.spin_at(d, 2 * site - 2), Spin::Up);
    let n = if occupied { 1 } else { 0 };
    if site % 2 == 1 {
        n - 1
    } else {
        n
    }
}

fn find_physical_state<T: Scalar>(
    n_stag: usize,
    boundary: BoundaryFlux,
    what: &'static str,
    charge_pattern: impl Fn(usize) -> i32,
) -> Result<(StateVector<T>, Vec<Spin>), QlmError> {
    let n_ions = 2 * n_stag - 1;
    let layout = SpaceLayout::spins_only(n_ions).expect("spin layout");
    let dim = layout.dim();
    let mut matches = Vec::new();
    for d in 0..dim {
        let gauss_ok = gauss_values::<T>(&layout, d, n_stag, boundary)
            .iter()
            .all(|g| *g == T::zero());
        if !gauss_ok {
            continue;
        }
        let charges_ok = (1..=n_stag).all(|s| staggered_charge(&layout, d, s) == charge_pattern(s));
        if charges_ok {
            matches.push(d);
        }
    }
    match matches.len() {
        0 => Err(QlmError::NoMatchingState(what)),
        1 => {
            let d = matches[0];
            let pattern: Vec<Spin> = (0..n_ions).map(|ion| layout.spin_at(d, ion)).collect();
            let mut state = StateVector::zero(&layout);
            state.amplitudes[d] = C::new(T::one(), T::zero());
            Ok((state, pattern))
        }
        count => Err(QlmError::AmbiguousState { what, count }),
    }
}

/// Gauge-invariant string state: opposite charges at the lattice ends joined
/// by a uniform flux line. Derived by enumerating the physical sector.
pub fn string_state<T: Scalar>(
    n_stag: usize,
    boundary: BoundaryFlux,
) -> Result<(StateVector<T>, Vec<Spin>), QlmError> {
    if n_stag < 2 || n_stag % 2 != 0 {
        return Err(QlmError::BadStaggeredCount(n_stag));
    }
    find_physical_state(n_stag, boundary, "string", move |site| {
        if site == 1 {
            -1
        } else if site == n_stag {
            1
        } else {
            0
        }
    })
}

/// Fully occupied mesonic state: an electron-positron pair on every adjacent
/// odd-even site pair.
pub fn meson_state<T: Scalar>(
    n_stag: usize,
    boundary: BoundaryFlux,
) -> Result<(StateVector<T>, Vec<Spin>), QlmError> {
    if n_stag < 2 || n_stag % 2 != 0 {
        return Err(QlmError::BadStaggeredCount(n_stag));
    }
    find_physical_state(n_stag, boundary, "meson", |site| if site % 2 == 1 { -1 } else { 1 })
}

/// Exact-diagonalization evolution of the string state under a model
/// Hamiltonian, with the string → meson amplitude and the normalized
/// Gauss-law violation as observables.
pub struct QlmEvolution<T: Scalar> {
    pub config: QlmConfig<T>,
    eig: SymEigen<T>,
    /// v_k[string] · v_k[meson] per eigenvector: the amplitude spectral
    /// weights.
    spectral_weights: Vec<T>,
    /// v_k[string] per eigenvector.
    string_overlaps: Vec<T>,
    /// Σ_i |g_i(d)| / (2 n_stag − 3) per basis state.
    violation_weights: Vec<T>,
    dim: usize,
}

impl<T: Scalar> QlmEvolution<T> {
    pub fn new(config: QlmConfig<T>) -> Result<Self, QlmError> {
        let h = build_ion_hamiltonian(&config)?;
        let dim = h.dim;
        let eig = eigh(&h.matrix, dim)?;
        let layout = config.layout();
        let (string, _) = string_state::<T>(config.n_stag, config.boundary)?;
        let (meson, _) = meson_state::<T>(config.n_stag, config.boundary)?;
        let string_idx = string
            .amplitudes
            .iter()
            .position(|a| a.re > fl::<T>(0.5))
            .expect("string is a basis state");
        let meson_idx = meson
            .amplitudes
            .iter()
            .position(|a| a.re > fl::<T>(0.5))
            .expect("meson is a basis state");
        let mut spectral_weights = Vec::with_capacity(dim);
        let mut string_overlaps = Vec::with_capacity(dim);
        for k in 0..dim {
            let v = eig.vector(k);
            string_overlaps.push(v[string_idx]);
            spectral_weights.push(v[string_idx] * v[meson_idx]);
        }
        let norm = fl::<T>((2 * config.n_stag - 3) as f64);
        let violation_weights = (0..dim)
            .map(|d| {
                gauss_values::<T>(&layout, d, config.n_stag, config.boundary)
                    .iter()
                    .map(|g| g.abs())
                    .fold(T::zero(), |s, x| s + x)
                    / norm
            })
            .collect();
        Ok(QlmEvolution { config, eig, spectral_weights, string_overlaps, violation_weights, dim })
    }

    /// |⟨meson| e^{−iHt} |string⟩|.
    pub fn string_to_meson_amplitude(&self, t: T) -> T {
        let mut acc = C::new(T::zero(), T::zero());
        for k in 0..self.dim {
            acc += cis(-self.eig.values[k] * t) * self.spectral_weights[k];
        }
        acc.norm()
    }

    /// ⟨Σ_i |G_i|⟩ / (2 n_stag − 3) on the evolved string state.
    pub fn gauss_violation(&self, t: T) -> T {
        // ψ_d(t) = Σ_k v_k[d] e^{−iλ_k t} v_k[string]
        let mut psi = vec![C::new(T::zero(), T::zero()); self.dim];
        for k in 0..self.dim {
            let w = cis(-self.eig.values[k] * t) * self.string_overlaps[k];
            if w.norm_sqr() < fl::<T>(1e-60) {
                continue;
            }
            let v = self.eig.vector(k);
            for d in 0..self.dim {
                psi[d] += w * v[d];
            }
        }
        psi.iter()
            .zip(&self.violation_weights)
            .map(|(a, w)| *w * a.norm_sqr())
            .fold(T::zero(), |s, x| s + x)
    }

    pub fn amplitude_series(&self, grid: &[T]) -> Vec<T> {
        grid.iter().map(|&t| self.string_to_meson_amplitude(t)).collect()
    }

    pub fn violation_series(&self, grid: &[T]) -> Vec<T> {
        grid.iter().map(|&t| self.gauss_violation(t)).collect()
    }

    pub fn eigen(&self) -> &SymEigen<T> {
        &self.eig
    }
}

/// String → meson amplitude on a time grid (exact diagonalization).
pub fn string_to_meson<T: Scalar>(config: &QlmConfig<T>, grid: &[T]) -> Result<Vec<T>, QlmError> {
    Ok(QlmEvolution::new(*config)?.amplitude_series(grid))
}

/// Normalized Gauss-law violation of the evolved string state on a grid.
pub fn gauss_violation_series<T: Scalar>(
    config: &QlmConfig<T>,
    grid: &[T],
) -> Result<Vec<T>, QlmError> {
    Ok(QlmEvolution::new(*config)?.violation_series(grid))
}

/// Pauli axis label for the gate decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn spin_op(self) -> SpinOp {
        match self {
            Axis::X => SpinOp::X,
            Axis::Y => SpinOp::Y,
            Axis::Z => SpinOp::Z,
        }
    }
}

/// One two-spin entangling gate exp(i · angle · σ^a_i σ^b_j).
#[derive(Debug, Clone, Copy)]
pub struct GateStep<T> {
    pub angle: T,
    pub axes: (Axis, Axis),
    pub ions: (usize, usize),
}

impl<T: Scalar> GateStep<T> {
    fn unitary(&self, layout: &SpaceLayout) -> SparseOperator<T> {
        let p = embed_spin::<T>(self.axes.0.spin_op(), self.ions.0, layout)
            .expect("ion index")
            .matmul(&embed_spin(self.axes.1.spin_op(), self.ions.1, layout).expect("ion index"));
        // P² = 1, so exp(iθP) = cosθ + i sinθ P
        let dim = layout.dim();
        SparseOperator::identity(dim)
            .scale(C::new(self.angle.cos(), T::zero()))
            .add(&p.scale(C::new(T::zero(), self.angle.sin())))
    }
}

/// Decompose e^{−iα(σ⁺σ⁺σ⁺ + h.c.)} on ions (0,1,2) into twelve two-spin
/// gates (conjugated ±π/4 pairs around four ±α/4 entangling gates) and
/// return the sequence with the max-entry residual of the identity.
pub fn decompose_three_spin_gate<T: Scalar>(alpha: T) -> (Vec<GateStep<T>>, T) {
    let layout = SpaceLayout::spins_only(3).expect("three-spin layout");
    let dim = layout.dim();
    let quarter = alpha / fl::<T>(4.0);
    let frac_pi_4 = fl::<T>(std::f64::consts::FRAC_PI_4);
    let (i, j, k) = (0usize, 1usize, 2usize);
    let conj = |axes: (Axis, Axis), ions: (usize, usize), sign: T, middle: GateStep<T>| {
        vec![
            GateStep { angle: -sign * frac_pi_4, axes, ions },
            middle,
            GateStep { angle: sign * frac_pi_4, axes, ions },
        ]
    };
    let mut steps = Vec::with_capacity(12);
    steps.extend(conj(
        (Axis::Y, Axis::Z),
        (i, j),
        T::one(),
        GateStep { angle: quarter, axes: (Axis::X, Axis::X), ions: (j, k) },
    ));
    steps.extend(conj(
        (Axis::Y, Axis::Y),
        (i, j),
        T::one(),
        GateStep { angle: quarter, axes: (Axis::Z, Axis::Y), ions: (j, k) },
    ));
    steps.extend(conj(
        (Axis::X, Axis::Y),
        (i, j),
        T::one(),
        GateStep { angle: -quarter, axes: (Axis::Z, Axis::X), ions: (j, k) },
    ));
    // the final conjugation carries the opposite sign so the block
    // composes to e^{+iα/4 σˣσʸσʸ}
    steps.extend(conj(
        (Axis::X, Axis::X),
        (i, j),
        -T::one(),
        GateStep { angle: quarter, axes: (Axis::Z, Axis::Y), ions: (j, k) },
    ));

    // right-hand side: product of the twelve gates as written
    let mut rhs = SparseOperator::<T>::identity(dim);
    for step in &steps {
        rhs = rhs.matmul(&step.unitary(&layout));
    }

    // left-hand side: exact exponential of the involution-squared generator
    let triple = embed_spin::<T>(SpinOp::Raise, i, &layout)
        .expect("ion index")
        .matmul(&embed_spin(SpinOp::Raise, j, &layout).expect("ion index"))
        .matmul(&embed_spin(SpinOp::Raise, k, &layout).expect("ion index"));
    let s = triple.clone().add(&triple.adjoint());
    let projector = s.matmul(&s);
    let lhs = SparseOperator::identity(dim)
        .add(&projector.scale(C::new(alpha.cos() - T::one(), T::zero())))
        .add(&s.scale(C::new(T::zero(), -alpha.sin())));

    let residual = lhs.max_abs_diff(&rhs);
    (steps, residual)
}
