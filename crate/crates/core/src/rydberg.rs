//! Vertical bound states of an electron above a dielectric surface.
//!
//! The image potential plus a perpendicular field is discretized with a
//! three-point stencil; the lowest eigenpairs of the resulting symmetric
//! tridiagonal matrix come from Sturm-sequence bisection followed by
//! inverse iteration. Energies are stored as E/h in Hz.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{COULOMB_E2, E_CHARGE, HBAR, H_PLANCK, M_E, RYDBERG_EV};
use crate::error::{ensure, Error, Result};

/// Barrier at the surface: a finite step of height `V0` for z ≤ 0, or a hard wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Barrier {
    /// Step height in joules.
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    pub dielectric_constant: f64,
    /// Offset of the image-charge singularity below the surface [m].
    pub z0: f64,
    pub barrier: Barrier,
    /// Perpendicular pressing field [V/m].
    pub e_perp: f64,
}

impl SurfaceParams {
    /// Liquid helium-4: ε = 1.056, z0 = 0.1 nm, 1 eV barrier.
    pub fn helium() -> Self {
        Self {
            dielectric_constant: 1.056,
            z0: 0.1e-9,
            barrier: Barrier::Finite(E_CHARGE),
            e_perp: 0.0,
        }
    }

    /// Solid neon: ε = 1.244, z0 = 0.23 nm, 0.7 eV barrier.
    pub fn neon() -> Self {
        Self {
            dielectric_constant: 1.244,
            z0: 0.23e-9,
            barrier: Barrier::Finite(0.7 * E_CHARGE),
            e_perp: 0.0,
        }
    }

    pub fn with_field(self, e_perp: f64) -> Self {
        Self { e_perp, ..self }
    }

    /// Λ = (ε − 1)/(ε + 1).
    pub fn lambda(&self) -> f64 {
        (self.dielectric_constant - 1.0) / (self.dielectric_constant + 1.0)
    }

    fn validate(&self) -> Result<()> {
        ensure(self.dielectric_constant > 1.0, || "dielectric constant must exceed 1".into())?;
        ensure(self.z0 >= 0.0, || "z0 must be non-negative".into())?;
        ensure(self.e_perp >= 0.0 && self.e_perp.is_finite(), || "E_perp must be non-negative".into())?;
        if let Barrier::Finite(v) = self.barrier {
            ensure(v > 0.0 && v.is_finite(), || "barrier height must be positive".into())?;
        }
        Ok(())
    }

    /// Effective Bohr radius of the image potential.
    fn bohr_length(&self) -> f64 {
        let lam = self.lambda();
        4.0 * HBAR * HBAR / (M_E * COULOMB_E2 * lam)
    }
}

/// Uniform grid on (0, z_max]; with a finite barrier it is extended into
/// the substrate by the same spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub z_max: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn helium() -> Self {
        Self { z_max: 150e-9, n_points: 4000 }
    }

    pub fn neon() -> Self {
        Self { z_max: 40e-9, n_points: 4000 }
    }

    pub fn spacing(&self) -> f64 {
        self.z_max / self.n_points as f64
    }

    fn validate(&self, p: &SurfaceParams) -> Result<()> {
        ensure(self.n_points >= 200, || format!("n_points = {} is below 200", self.n_points))?;
        let z1 = 1.5 * p.bohr_length();
        ensure(self.z_max >= 5.0 * z1, || {
            format!("z_max = {:e} m is shorter than 5 ⟨z⟩_1 ≈ {:e} m", self.z_max, 5.0 * z1)
        })
    }

    /// Node positions: barrier nodes (z ≤ 0) when `barrier` is finite, then
    /// z = h, 2h, …, z_max − h. The last node sits one step below z_max,
    /// where the wavefunction is pinned to zero.
    fn nodes(&self, p: &SurfaceParams) -> Vec<f64> {
        let h = self.spacing();
        let n_barrier = match p.barrier {
            Barrier::Finite(v) => {
                let decay = HBAR / (2.0 * M_E * v).sqrt();
                ((12.0 * decay / h).ceil() as usize).max(4)
            }
            Barrier::Infinite => 0,
        };
        let first = -(n_barrier as f64);
        (0..n_barrier + self.n_points - 1)
            .map(|k| (first + k as f64 + if n_barrier > 0 { 0.0 } else { 1.0 }) * h)
            .collect()
    }
}

/// V(z) in joules at the given heights.
pub fn potential_at(p: &SurfaceParams, z: &[f64]) -> Result<Vec<f64>> {
    p.validate()?;
    let k = COULOMB_E2 * p.lambda() / 4.0;
    z.iter()
        .map(|&zi| {
            if zi <= 0.0 {
                match p.barrier {
                    Barrier::Finite(v) => Ok(v),
                    Barrier::Infinite => Err(Error::Domain(format!(
                        "z = {zi:e} m lies inside the hard wall"
                    ))),
                }
            } else if zi + p.z0 <= 0.0 {
                Err(Error::Domain("image potential singular at z + z0 = 0".into()))
            } else {
                Ok(-k / (zi + p.z0) + E_CHARGE * zi * p.e_perp)
            }
        })
        .collect()
}

/// Mean of V over [a, b] in joules. Averaging over each node's cell places
/// the surface step exactly at z = 0 and keeps the scheme second order.
fn cell_average(p: &SurfaceParams, a: f64, b: f64) -> Result<f64> {
    let k = COULOMB_E2 * p.lambda() / 4.0;
    let mut acc = 0.0;
    if a < 0.0 {
        match p.barrier {
            Barrier::Finite(v) => acc += v * (b.min(0.0) - a),
            Barrier::Infinite => {
                return Err(Error::Domain("cell reaches into the hard wall".into()))
            }
        }
    }
    if b > 0.0 {
        let lo = a.max(0.0);
        if lo + p.z0 <= 0.0 {
            return Err(Error::Domain(
                "image potential is not integrable at z = 0 when z0 = 0".into(),
            ));
        }
        acc += -k * ((b + p.z0) / (lo + p.z0)).ln() + 0.5 * E_CHARGE * p.e_perp * (b * b - lo * lo);
    }
    Ok(acc / (b - a))
}

/// Potential sampled on the solver grid.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialProfile {
    pub z: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn potential_profile(p: &SurfaceParams, g: &Grid1D) -> Result<PotentialProfile> {
    let z = g.nodes(p);
    let v = potential_at(p, &z)?;
    Ok(PotentialProfile { z, v })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergySpectrum {
    /// E_n / h [Hz], ascending.
    pub levels: Vec<f64>,
    /// Grid nodes [m].
    pub z: Vec<f64>,
    /// Normalized so that Σ ψ² Δz = 1; positive near the surface.
    pub wavefunctions: Vec<Vec<f64>>,
    /// ⟨n|z|n⟩ [m].
    pub mean_heights: Vec<f64>,
    /// E_2 − E_1 [Hz].
    pub f12: f64,
    /// |⟨1|z|2⟩| [m].
    pub z12: f64,
}

impl EnergySpectrum {
    /// Interior sign changes of ψ_n, ignoring the numerically zero tail.
    pub fn node_count(&self, n: usize) -> usize {
        let psi = &self.wavefunctions[n];
        let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut last = 0.0f64;
        let mut count = 0;
        for &v in psi {
            if v.abs() < 1e-6 * peak {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
        count
    }
}

/// Symmetric tridiagonal matrix: diagonal `d`, off-diagonal `e` (len n−1).
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiagonal {
    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.d[0] - x;
        let tiny = f64::MIN_POSITIVE.sqrt();
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.d.len() {
            let qq = if q.abs() < tiny { tiny.copysign(q) } else { q };
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// k-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs());
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * scale || mid == lo || mid == hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * x[i];
                if i > 0 {
                    s += self.e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.e[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves (T − σI)x = b with partial pivoting (LAPACK gttrf/gttrs scheme).
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut dl: Vec<f64> = self.e.clone();
        let mut du: Vec<f64> = self.e.clone();
        let mut d: Vec<f64> = self.d.iter().map(|v| v - sigma).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n];
        let floor = f64::EPSILON * self.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                let piv = if d[i].abs() < floor { floor.copysign(d[i] + 0.0) } else { d[i] };
                d[i] = piv;
                let f = dl[i] / piv;
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swap[i] = true;
            }
        }
        if d[n - 1].abs() < floor {
            d[n - 1] = floor;
        }
        let mut x = b.to_vec();
        for i in 0..n - 1 {
            if swap[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= dl[i] * x[i];
        }
        x[n - 1] /= d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        x
    }

    /// Eigenvector for an approximate eigenvalue by inverse iteration.
    /// Returns the unit vector and its Rayleigh quotient.
    pub fn eigenvector(&self, lambda: f64) -> (Vec<f64>, f64) {
        let n = self.d.len();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 7 % 13) as f64 / 13.0)).collect();
        for _ in 0..4 {
            x = self.shifted_solve(lambda, &x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        let tx = self.mul(&x);
        let rq = x.iter().zip(&tx).map(|(a, b)| a * b).sum();
        (x, rq)
    }
}

/// Lowest `n_states` levels of the vertical problem.
pub fn solve_spectrum(p: &SurfaceParams, g: &Grid1D, n_states: usize) -> Result<EnergySpectrum> {
    ensure(n_states >= 2, || "need at least two states".into())?;
    p.validate()?;
    g.validate(p)?;
    let prof = potential_profile(p, g)?;
    let h = g.spacing();
    let kinetic = HBAR * HBAR / (2.0 * M_E * h * h) / H_PLANCK;
    let v_cell = prof
        .z
        .iter()
        .map(|&z| cell_average(p, z - 0.5 * h, z + 0.5 * h))
        .collect::<Result<Vec<_>>>()?;
    let mat = SymTridiagonal {
        d: v_cell.iter().map(|v| v / H_PLANCK + 2.0 * kinetic).collect(),
        e: vec![-kinetic; prof.z.len() - 1],
    };
    let mut levels = Vec::with_capacity(n_states);
    let mut wavefunctions = Vec::with_capacity(n_states);
    let mut mean_heights = Vec::with_capacity(n_states);
    for k in 0..n_states {
        let guess = mat.eigenvalue(k);
        let (mut psi, e) = mat.eigenvector(guess);
        let resid = mat
            .mul(&psi)
            .iter()
            .zip(&psi)
            .map(|(a, b)| (a - e * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if !e.is_finite() || resid > 1e-6 * kinetic {
            return Err(Error::Numeric(format!(
                "state {k}: eigen-residual {resid:e} Hz with h = {h:e} m, {} nodes",
                prof.z.len()
            )));
        }
        let norm = (psi.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
        let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sign = psi.iter().find(|v| v.abs() > 1e-3 * peak).map_or(1.0, |v| v.signum());
        psi.iter_mut().for_each(|v| *v *= sign / norm);
        let zbar = psi.iter().zip(&prof.z).map(|(v, z)| v * v * z).sum::<f64>() * h;
        levels.push(e);
        wavefunctions.push(psi);
        mean_heights.push(zbar);
    }
    let z12 = wavefunctions[0]
        .iter()
        .zip(&wavefunctions[1])
        .zip(&prof.z)
        .map(|((a, b), z)| a * b * z)
        .sum::<f64>()
        .abs()
        * h;
    Ok(EnergySpectrum {
        f12: levels[1] - levels[0],
        levels,
        z: prof.z,
        wavefunctions,
        mean_heights,
        z12,
    })
}

/// E_n / h = −R(Λ/4)²/n².
pub fn hydrogenic_levels(lambda: f64, n: usize) -> Result<f64> {
    ensure(n >= 1, || "n must be at least 1".into())?;
    let r = RYDBERG_EV * E_CHARGE / H_PLANCK;
    Ok(-r * (lambda / 4.0).powi(2) / (n * n) as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct StarkCurve {
    /// Fields [V/m], as given.
    pub fields: Vec<f64>,
    /// Full re-diagonalization result [Hz].
    pub f12: Vec<f64>,
    /// f12(0) + e E (⟨2|z|2⟩ − ⟨1|z|1⟩)/h, from the zero-field states [Hz].
    pub first_order: Vec<f64>,
}

/// f12 versus perpendicular field; each field point is an independent solve.
pub fn stark_response(p: &SurfaceParams, g: &Grid1D, fields: &[f64]) -> Result<StarkCurve> {
    ensure(!fields.is_empty(), || "field list is empty".into())?;
    ensure(fields.iter().all(|&f| f >= 0.0 && f.is_finite()), || "fields must be non-negative".into())?;
    let zero = solve_spectrum(&p.with_field(0.0), g, 2)?;
    let slope = E_CHARGE * (zero.mean_heights[1] - zero.mean_heights[0]) / H_PLANCK;
    let f12 = fields
        .par_iter()
        .map(|&f| {
            let s = solve_spectrum(&p.with_field(f), g, 2)?;
            if s.mean_heights[1] > g.z_max / 3.0 {
                return Err(Error::Range(format!(
                    "⟨z⟩_2 = {:e} m exceeds z_max/3 at E = {f} V/m",
                    s.mean_heights[1]
                )));
            }
            Ok(s.f12)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StarkCurve {
        fields: fields.to_vec(),
        first_order: fields.iter().map(|f| zero.f12 + slope * f).collect(),
        f12,
    })
}

/// 2t_c = e E z12 / h [Hz].
pub fn rabi_from_field(field: f64, z12: f64) -> f64 {
    E_CHARGE * field * z12 / H_PLANCK
}

/// Drive field [V/m] that yields the Rabi rate `two_tc` [Hz].
pub fn field_from_rabi(two_tc: f64, z12: f64) -> Result<f64> {
    ensure(z12 > 0.0, || "transition moment must be positive".into())?;
    Ok(two_tc * H_PLANCK / (E_CHARGE * z12))
}
