//! Single- and two-qubit primitives: density matrices, Bloch vectors,
//! fidelities, exchange evolution and the dispersive shift.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Error, Result};

const TOL: f64 = 1e-12;

/// Pauli matrices in the order x, y, z.
pub fn pauli() -> [Matrix2<C64>; 3] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        Matrix2::new(o, l, l, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(l, o, o, -l),
    ]
}

/// A validated 2x2 density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix2<C64>);

impl DensityMatrix {
    /// Checks hermiticity, unit trace and positivity.
    pub fn new(m: Matrix2<C64>) -> Result<Self> {
        let herm = (m - m.adjoint()).norm();
        ensure(herm <= TOL, || format!("matrix not Hermitian (|M-M†| = {herm:e})"))?;
        let tr = m.trace();
        ensure((tr.re - 1.0).abs() <= TOL && tr.im.abs() <= TOL, || {
            format!("trace is {tr}, expected 1")
        })?;
        let min_eig = m.symmetric_eigenvalues().min();
        ensure(min_eig >= -TOL, || format!("negative eigenvalue {min_eig:e}"))?;
        Ok(Self(m))
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) state vector.
    pub fn pure(psi: [C64; 2]) -> Result<Self> {
        let norm = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
        ensure(norm > 0.0, || "zero state vector".into())?;
        let a = psi[0] / norm;
        let b = psi[1] / norm;
        Ok(Self(Matrix2::new(
            a * a.conj(),
            a * b.conj(),
            b * a.conj(),
            b * b.conj(),
        )))
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix2::identity() * C64::new(0.5, 0.0))
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    /// U ρ U†, for a unitary U.
    pub fn conjugate_by(&self, u: &Matrix2<C64>) -> Self {
        Self(u * self.0 * u.adjoint())
    }
}

/// r_i = Tr(ρ σ_i).
pub fn bloch_map(rho: &DensityMatrix) -> [f64; 3] {
    let s = pauli();
    [0, 1, 2].map(|k| (rho.0 * s[k]).trace().re)
}

/// ρ = (I + r·σ)/2 for |r| ≤ 1.
pub fn density_from_bloch(r: [f64; 3]) -> Result<DensityMatrix> {
    let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    ensure(len <= 1.0 + 1e-9, || format!("Bloch vector length {len} exceeds 1"))?;
    let s = pauli();
    let mut m = Matrix2::identity();
    for k in 0..3 {
        m += s[k] * C64::new(r[k], 0.0);
    }
    Ok(DensityMatrix(m * C64::new(0.5, 0.0)))
}

/// Square root of a positive semidefinite Hermitian matrix; eigenvalues
/// below zero are clamped.
fn psd_sqrt(m: &Matrix2<C64>) -> Matrix2<C64> {
    let eig = m.symmetric_eigen();
    let mut out = Matrix2::zeros();
    for k in 0..2 {
        let v = eig.eigenvectors.column(k);
        let w = eig.eigenvalues[k].max(0.0).sqrt();
        out += v * v.adjoint() * C64::new(w, 0.0);
    }
    out
}

/// Uhlmann fidelity Tr√(√ρ σ √ρ).
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let sr = psd_sqrt(&rho.0);
    let inner = sr * sigma.0 * sr;
    let inner = (inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let eig = inner.symmetric_eigenvalues();
    let f: f64 = eig.iter().map(|&l| l.max(0.0).sqrt()).sum();
    f.clamp(0.0, 1.0)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R) -> [C64; 2] {
    let mut draw = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let (a, b) = (draw(), draw());
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    [a / n, b / n]
}

/// Average over Haar-uniform inputs of ⟨ψ|U† E(|ψ⟩⟨ψ|) U|ψ⟩.
pub fn average_gate_fidelity<F, R>(
    channel: F,
    ideal: &Matrix2<C64>,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate>
where
    F: Fn(&DensityMatrix) -> DensityMatrix,
    R: Rng + ?Sized,
{
    ensure(samples > 0, || "samples must be at least 1".into())?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let psi = haar_state(rng);
        let rho = DensityMatrix::pure(psi)?;
        let out = channel(&rho);
        let target = ideal * nalgebra::Vector2::new(psi[0], psi[1]);
        let f = (target.adjoint() * out.0 * target)[(0, 0)].re;
        sum += f;
        sum_sq += f * f;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        stderr: (var / n).sqrt(),
    })
}

/// Two-qubit unitary in the basis |00⟩, |01⟩, |10⟩, |11⟩.
pub type TwoQubitUnitary = Matrix4<C64>;

/// exp(-iHt/ħ) for H = ħg(σ₁⁺σ₂⁻ + σ₁⁻σ₂⁺).
///
/// The block acting on |01⟩, |10⟩ is [[cos gt, -i sin gt], [-i sin gt, cos gt]].
/// The iSWAP with +i off-diagonals is reached at gt = 3π/2.
pub fn exchange_evolution(g: f64, t: f64) -> Result<TwoQubitUnitary> {
    ensure(g > 0.0 && g.is_finite(), || format!("coupling must be positive, got {g}"))?;
    ensure(t >= 0.0 && t.is_finite(), || format!("time must be non-negative, got {t}"))?;
    let (s, c) = (g * t).sin_cos();
    let mut u = Matrix4::identity();
    u[(1, 1)] = C64::new(c, 0.0);
    u[(2, 2)] = C64::new(c, 0.0);
    u[(1, 2)] = C64::new(0.0, -s);
    u[(2, 1)] = C64::new(0.0, -s);
    Ok(u)
}

/// The iSWAP gate: swaps |01⟩ and |10⟩ with a factor i.
pub fn iswap() -> TwoQubitUnitary {
    let mut u = Matrix4::identity();
    u[(1, 1)] = C64::new(0.0, 0.0);
    u[(2, 2)] = C64::new(0.0, 0.0);
    u[(1, 2)] = C64::new(0.0, 1.0);
    u[(2, 1)] = C64::new(0.0, 1.0);
    u
}

/// Jaynes-Cummings parameters, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams {
    pub resonator_omega: f64,
    pub qubit_omega: f64,
    pub coupling: f64,
}

impl JcParams {
    pub fn is_dispersive(&self) -> bool {
        (self.qubit_omega - self.resonator_omega).abs() > 10.0 * self.coupling
    }
}

/// χ = g²/(ω_q − ω₀), signed like the detuning.
pub fn dispersive_shift(p: &JcParams) -> Result<f64> {
    ensure(
        p.resonator_omega > 0.0 && p.qubit_omega > 0.0 && p.coupling >= 0.0,
        || "frequencies must be positive and coupling non-negative".into(),
    )?;
    if !p.is_dispersive() {
        return Err(Error::Regime(format!(
            "|ω_q - ω_0| = {:e} rad/s is not above 10 g = {:e} rad/s",
            (p.qubit_omega - p.resonator_omega).abs(),
            10.0 * p.coupling
        )));
    }
    Ok(p.coupling * p.coupling / (p.qubit_omega - p.resonator_omega))
}
