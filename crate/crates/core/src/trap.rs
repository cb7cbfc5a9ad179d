//! Ion-chain statics: equilibrium geometry, transverse normal modes,
//! Lamb-Dicke parameters, and the zig-zag stability bound.
//!
//! Lengths are dimensionless in the axial scale ℓ = (e²/4πε₀ M ω_z²)^{1/3},
//! so only frequency ratios enter the mode problem and no ion mass or charge
//! is ever specified. Frequencies are angular (rad/s) throughout; user-facing
//! kHz conversion happens at the CLI boundary.

use crate::linalg::{eigh, solve_in_place, LinalgError};
use crate::scalar::{fl, Scalar};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrapError {
    #[error("n_ions must be >= 1")]
    NoIons,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("equilibrium solver did not converge after {0} iterations")]
    EquilibriumNoConvergence(usize),
    #[error("chain unstable at these trap parameters (mode {mode} has negative stiffness {lambda})")]
    ChainUnstable { mode: usize, lambda: f64 },
    #[error("zig-zag bound undefined for a single ion")]
    ZigzagSingleIon,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Trap frequencies and the recoil scale of the Raman beams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig<T> {
    pub n_ions: usize,
    /// Transverse trap frequency ω_x (rad/s).
    pub omega_x: T,
    /// Axial trap frequency ω_z (rad/s).
    pub omega_z: T,
    /// Recoil energy |Δk|²/2M (rad/s).
    pub omega_rec: T,
}

impl<T: Scalar> TrapConfig<T> {
    pub fn new(n_ions: usize, omega_x: T, omega_z: T, omega_rec: T) -> Result<Self, TrapError> {
        if n_ions == 0 {
            return Err(TrapError::NoIons);
        }
        if omega_x <= T::zero() {
            return Err(TrapError::NonPositive("omega_x"));
        }
        if omega_z <= T::zero() {
            return Err(TrapError::NonPositive("omega_z"));
        }
        if omega_rec <= T::zero() {
            return Err(TrapError::NonPositive("omega_rec"));
        }
        Ok(TrapConfig { n_ions, omega_x, omega_z, omega_rec })
    }

    /// Axial frequency above which the linear chain zig-zags, if defined.
    pub fn zigzag_bound(&self) -> Option<T> {
        zigzag_bound(self.omega_x, self.n_ions).ok()
    }

    /// True when ω_z exceeds the zig-zag deformation bound. Callers decide
    /// whether that is a warning or an error.
    pub fn above_zigzag_bound(&self) -> bool {
        match self.zigzag_bound() {
            Some(bound) => self.omega_z > bound,
            None => false,
        }
    }

    /// Lamb-Dicke parameter of the transverse center-of-mass mode,
    /// √(ω_rec / (N ω_x)).
    pub fn eta_com(&self) -> T {
        (self.omega_rec / (fl::<T>(self.n_ions as f64) * self.omega_x)).sqrt()
    }
}

/// Transverse normal-mode data for a chain.
///
/// The eigenvector and Lamb-Dicke matrices are (n_modes × n_ions); a full
/// chain spectrum is square, the single-mode approximation keeps one row.
#[derive(Debug, Clone)]
pub struct ModeSpectrum<T> {
    /// Mode frequencies (rad/s), descending; index 0 is the center of mass.
    pub frequencies: Vec<T>,
    /// Orthonormal eigenvectors b_{m,i}, row-major over (mode, ion).
    pub eigenvectors: Vec<T>,
    /// Lamb-Dicke matrix η_{m,i} = √(ω_rec/ω_m) b_{m,i}, same storage.
    pub lamb_dicke: Vec<T>,
    /// Dimensionless equilibrium positions, ascending.
    pub equilibrium_positions: Vec<T>,
    n_ions: usize,
}

impl<T: Scalar> ModeSpectrum<T> {
    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn b(&self, mode: usize, ion: usize) -> T {
        self.eigenvectors[mode * self.n_ions + ion]
    }

    pub fn eta(&self, mode: usize, ion: usize) -> T {
        self.lamb_dicke[mode * self.n_ions + ion]
    }

    pub fn omega_com(&self) -> T {
        self.frequencies[0]
    }

    /// Center-of-mass-only spectrum with uniform Lamb-Dicke parameter `eta`,
    /// for the single-mode approximation.
    pub fn single_mode(omega: T, eta: T, n_ions: usize) -> Self {
        let b = T::one() / fl::<T>(n_ions as f64).sqrt();
        ModeSpectrum {
            frequencies: vec![omega],
            eigenvectors: vec![b; n_ions],
            lamb_dicke: vec![eta; n_ions],
            equilibrium_positions: vec![T::zero(); n_ions],
            n_ions,
        }
    }
}

/// Dimensionless equilibrium positions of `n_ions` in a harmonic axial well.
///
/// Damped Newton iteration on the force balance
/// u_i = Σ_{j<i} (u_i-u_j)^{-2} − Σ_{j>i} (u_j-u_i)^{-2},
/// seeded with uniform spacing. Converges for chains up to a few tens of
/// ions; the iteration cap is 500.
pub fn equilibrium_positions<T: Scalar>(n_ions: usize) -> Result<Vec<T>, TrapError> {
    if n_ions == 0 {
        return Err(TrapError::NoIons);
    }
    if n_ions == 1 {
        return Ok(vec![T::zero()]);
    }
    let n = n_ions;
    let tol = fl::<T>(1e-12).max(T::epsilon() * fl::<T>(100.0));
    // uniform seed with the typical minimum-spacing scale
    let spacing = fl::<T>(2.0) * fl::<T>(n as f64).powf(fl::<T>(-0.56));
    let mut u: Vec<T> = (0..n)
        .map(|i| spacing * (fl::<T>(i as f64) - fl::<T>((n - 1) as f64) / fl::<T>(2.0)))
        .collect();
    let grad = |u: &[T]| -> Vec<T> {
        let mut g = vec![T::zero(); n];
        for i in 0..n {
            g[i] = u[i];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = u[i] - u[j];
                let inv2 = T::one() / (d * d);
                g[i] = g[i] - inv2 * d.signum();
            }
        }
        g
    };
    let grad_norm = |g: &[T]| g.iter().fold(T::zero(), |m, x| m.max(x.abs()));

    let mut g = grad(&u);
    let mut gn = grad_norm(&g);
    let cap = 500;
    for _ in 0..cap {
        if gn < tol {
            // fold in the exact mirror symmetry and return
            let mut sym = vec![T::zero(); n];
            for i in 0..n {
                sym[i] = (u[i] - u[n - 1 - i]) / fl::<T>(2.0);
            }
            return Ok(sym);
        }
        // Jacobian of the force balance (axial Hessian)
        let mut jac = vec![T::zero(); n * n];
        for i in 0..n {
            let mut diag = T::one();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = (u[i] - u[j]).abs();
                let inv3 = fl::<T>(2.0) / (d * d * d);
                diag += inv3;
                jac[i * n + j] = -inv3;
            }
            jac[i * n + i] = diag;
        }
        let mut step: Vec<T> = g.clone();
        solve_in_place(&mut jac, &mut step, n)?;
        // backtracking damping
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<T> = (0..n).map(|i| u[i] - alpha * step[i]).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let gt = grad(&trial);
                let gtn = grad_norm(&gt);
                if gtn < gn {
                    u = trial;
                    g = gt;
                    gn = gtn;
                    accepted = true;
                    break;
                }
            }
            alpha = alpha / fl::<T>(2.0);
        }
        if !accepted {
            return Err(TrapError::EquilibriumNoConvergence(cap));
        }
    }
    Err(TrapError::EquilibriumNoConvergence(cap))
}

/// Transverse stiffness matrix in units of ω_z², for equilibrium `positions`
/// and anisotropy α = ω_x/ω_z.
pub fn transverse_stiffness<T: Scalar>(positions: &[T], alpha: T) -> Vec<T> {
    let n = positions.len();
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        let mut diag = alpha * alpha;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = (positions[i] - positions[j]).abs();
            let inv3 = T::one() / (d * d * d);
            diag -= inv3;
            a[i * n + j] = inv3;
        }
        a[i * n + i] = diag;
    }
    a
}

/// Transverse normal modes of the chain.
///
/// Mode 0 is the center-of-mass mode at ω_x exactly; frequencies descend.
/// Eigenvector signs follow a fixed convention (largest-magnitude component
/// positive) so downstream Lamb-Dicke matrices are reproducible.
pub fn transverse_modes<T: Scalar>(config: &TrapConfig<T>) -> Result<ModeSpectrum<T>, TrapError> {
    let n = config.n_ions;
    let positions = equilibrium_positions::<T>(n)?;
    let alpha = config.omega_x / config.omega_z;
    let stiffness = transverse_stiffness(&positions, alpha);
    let eig = eigh(&stiffness, n)?;
    // ascending eigenvalues -> descending frequencies
    let mut frequencies = Vec::with_capacity(n);
    let mut eigenvectors = vec![T::zero(); n * n];
    for m in 0..n {
        let k = n - 1 - m;
        let lambda = eig.values[k];
        if lambda <= T::zero() {
            return Err(TrapError::ChainUnstable {
                mode: m,
                lambda: lambda.to_f64().unwrap_or(f64::NAN),
            });
        }
        frequencies.push(config.omega_z * lambda.sqrt());
        let v = eig.vector(k);
        // sign convention: largest-magnitude component positive
        let mut best = 0usize;
        for i in 1..n {
            if v[i].abs() > v[best].abs() {
                best = i;
            }
        }
        let flip = if v[best] < T::zero() { -T::one() } else { T::one() };
        for i in 0..n {
            eigenvectors[m * n + i] = flip * v[i];
        }
    }
    let mut spectrum = ModeSpectrum {
        frequencies,
        eigenvectors,
        lamb_dicke: vec![],
        equilibrium_positions: positions,
        n_ions: n,
    };
    spectrum.lamb_dicke = lamb_dicke_matrix(config, &spectrum);
    Ok(spectrum)
}

/// Lamb-Dicke matrix η_{m,i} = √(ω_rec/ω_m) b_{m,i}.
pub fn lamb_dicke_matrix<T: Scalar>(config: &TrapConfig<T>, spectrum: &ModeSpectrum<T>) -> Vec<T> {
    let n_ions = spectrum.n_ions();
    let mut eta = vec![T::zero(); spectrum.n_modes() * n_ions];
    for m in 0..spectrum.n_modes() {
        let factor = (config.omega_rec / spectrum.frequencies[m]).sqrt();
        for i in 0..n_ions {
            eta[m * n_ions + i] = factor * spectrum.b(m, i);
        }
    }
    eta
}

/// Axial frequency above which the chain zig-zags: ω_x/0.73 · N^(−0.86).
pub fn zigzag_bound<T: Scalar>(omega_x: T, n_ions: usize) -> Result<T, TrapError> {
    if n_ions < 2 {
        return Err(TrapError::ZigzagSingleIon);
    }
    Ok(omega_x / fl::<T>(0.73) * fl::<T>(n_ions as f64).powf(fl::<T>(-0.86)))
}
