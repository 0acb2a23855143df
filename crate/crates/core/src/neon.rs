//! Nanowire resonator on solid neon: sheet conductivity of the electron
//! layer, kinetic inductance of the film, quasi-static cross-section
//! capacitance and the resonator's response to neon and electrons.
//!
//! Time dependence is e^{+iωt}, so a Drude sheet has Im σ < 0.
//!
//! The cross-section is solved on half of a symmetric (y, z) plane with a
//! finite-volume five-point stencil on a graded grid and a banded Cholesky
//! factorization. The electron layer enters exactly through a Schur
//! complement on its own row: with G the sheet Green matrix and L_σ the
//! lateral conduction operator, the complex capacitance per length is
//! C̃ = C0 + φ0ᵀ(iωI + L_σG)⁻¹L_σφ0.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{E_CHARGE, EPS0, HBAR, H_PLANCK, K_B, MU0, M_E};
use crate::error::{ensure, Error, Result};

// ---------------------------------------------------------------- conductivity

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetConductivityParams {
    /// n_e [m⁻²].
    pub density: f64,
    pub scattering_time: f64,
    /// Trap frequency ω_a [rad/s]; zero gives free electrons.
    pub trap_freq: f64,
    /// Height of the layer above the neon surface [m].
    pub layer_height: f64,
    /// Thickness used when the sheet is expressed as a volume conductivity [m].
    pub layer_thickness: f64,
}

impl SheetConductivityParams {
    pub fn new(density: f64, scattering_time: f64) -> Self {
        Self { density, scattering_time, trap_freq: 0.0, layer_height: 2.5e-9, layer_thickness: 1e-9 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.density >= 0.0, || "n_e must be non-negative".into())?;
        ensure(self.scattering_time > 0.0, || "τ must be positive".into())?;
        ensure(self.trap_freq >= 0.0, || "ω_a must be non-negative".into())?;
        ensure(self.layer_height >= 0.0 && self.layer_thickness > 0.0, || "layer geometry must be positive".into())
    }

    /// DC Drude conductance e²n_eτ/m_e [S].
    pub fn dc_conductance(&self) -> f64 {
        E_CHARGE * E_CHARGE * self.density * self.scattering_time / M_E
    }
}

/// Distribution of trap frequencies, weighted ∝ exp(ħω_a/k_BT).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapEnsemble {
    pub omega_a_max: f64,
    pub temperature: f64,
    pub points: usize,
}

impl Default for TrapEnsemble {
    fn default() -> Self {
        Self { omega_a_max: 2.0 * PI * 200e9, temperature: 3.4, points: 201 }
    }
}

impl TrapEnsemble {
    /// Uniform nodes on [0, ω_a_max] with normalized weights.
    pub fn weights(&self) -> Result<Vec<(f64, f64)>> {
        ensure(self.points >= 2, || "trap ensemble needs at least 2 points".into())?;
        ensure(self.omega_a_max > 0.0 && self.temperature > 0.0, || {
            "ω_a_max and temperature must be positive".into()
        })?;
        let step = self.omega_a_max / (self.points - 1) as f64;
        // Shifted exponent keeps T → 0 finite.
        let raw: Vec<(f64, f64)> = (0..self.points)
            .map(|k| {
                let w = k as f64 * step;
                (w, (HBAR * (w - self.omega_a_max) / (K_B * self.temperature)).exp())
            })
            .collect();
        let total: f64 = raw.iter().map(|p| p.1).sum();
        Ok(raw.into_iter().map(|(w, r)| (w, r / total)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConductivityModel {
    Drude,
    /// Single trap frequency taken from the parameters.
    Lorentz,
    /// Lorentz response averaged over a thermal trap ensemble.
    Thermal(TrapEnsemble),
}

fn lorentz(sigma0: f64, omega: f64, omega_a: f64, tau: f64) -> C64 {
    let u = omega - omega_a * omega_a / omega;
    sigma0 / C64::new(1.0, u * tau)
}

/// σ^{2D}(ω) [S] for the chosen model.
pub fn sheet_conductivity(p: &SheetConductivityParams, omega: f64, model: &ConductivityModel) -> Result<C64> {
    p.validate()?;
    ensure(omega > 0.0, || "ω must be positive".into())?;
    let s0 = p.dc_conductance();
    let tau = p.scattering_time;
    Ok(match model {
        ConductivityModel::Drude => lorentz(s0, omega, 0.0, tau),
        ConductivityModel::Lorentz => lorentz(s0, omega, p.trap_freq, tau),
        ConductivityModel::Thermal(ens) => {
            ens.weights()?.iter().map(|&(wa, w)| w * lorentz(s0, omega, wa, tau)).sum()
        }
    })
}

// ------------------------------------------------------------------- the film

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilmParams {
    pub penetration_depth: f64,
    pub thickness: f64,
}

impl Default for FilmParams {
    fn default() -> Self {
        Self { penetration_depth: 390e-9, thickness: 20e-9 }
    }
}

impl FilmParams {
    /// L_□ = μ0λ²/D [H].
    pub fn sheet_inductance(&self) -> f64 {
        MU0 * self.penetration_depth.powi(2) / self.thickness
    }

    /// Superfluid conductivity 1/(iμ0ωλ²) [S/m].
    pub fn conductivity(&self, omega: f64) -> C64 {
        1.0 / C64::new(0.0, MU0 * omega * self.penetration_depth.powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NanowireResonator {
    pub length: f64,
    pub width: f64,
    pub gap: f64,
    pub f_r: f64,
    pub l_kin: f64,
    pub z0: f64,
    /// Zero-point rms voltage between the two ends [V].
    pub v0: f64,
}

impl NanowireResonator {
    /// eV0/h [Hz].
    pub fn v0_frequency(&self) -> f64 {
        E_CHARGE * self.v0 / H_PLANCK
    }
}

/// Kinetic inductance, impedance and zero-point voltage of the nanowire.
pub fn film_properties(film: &FilmParams, length: f64, width: f64, gap: f64, f_r: f64) -> Result<NanowireResonator> {
    let all = [film.penetration_depth, film.thickness, length, width, f_r];
    ensure(all.iter().all(|v| *v > 0.0) && gap >= 0.0, || "film and resonator geometry must be positive".into())?;
    let l_kin = film.sheet_inductance() * length / width;
    let w_r = 2.0 * PI * f_r;
    let v0 = (2.0 * l_kin / PI) * (2.0 * HBAR * w_r / l_kin).sqrt() * w_r / 2f64.sqrt();
    Ok(NanowireResonator { length, width, gap, f_r, l_kin, z0: 2.0 * f_r * l_kin, v0 })
}

// ---------------------------------------------------------- cross-section

/// Outer boundary condition of the computational box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Grounded,
    /// Zero normal field.
    Open,
}

/// Conductor rectangle on the half plane y ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conductor {
    pub y0: f64,
    pub y1: f64,
    pub z0: f64,
    pub z1: f64,
    /// Held at 1 V when true, grounded otherwise.
    pub driven: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cell size at conductor edges and interfaces [m].
    pub h_min: f64,
    pub h_max: f64,
    pub growth: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { h_min: 2.5e-9, h_max: 500e-9, growth: 1.15 }
    }
}

impl GridSpec {
    /// Halves every cell.
    pub fn refined(&self) -> Self {
        Self { h_min: self.h_min / 2.0, h_max: self.h_max / 2.0, growth: self.growth.sqrt() }
    }
}

/// Layer stack and conductors of a symmetric cross-section, described on
/// y ∈ [0, y_max] with a mirror plane at y = 0. The substrate fills z < 0;
/// neon fills 0 ≤ z < `neon_thickness` outside the metal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub y_max: f64,
    pub z_bottom: f64,
    pub z_top: f64,
    pub substrate_eps: f64,
    pub neon_eps: f64,
    pub neon_thickness: f64,
    pub conductors: Vec<Conductor>,
    pub side: Boundary,
    pub top: Boundary,
    pub bottom: Boundary,
    pub grid: GridSpec,
}

impl CrossSection {
    /// Coplanar strip of `width` with grounds at `gap` on each side, 20 nm
    /// thick, in a grounded 10 µm box.
    pub fn coplanar(width: f64, gap: f64) -> Self {
        let t = 20e-9;
        let y_max = 10e-6;
        Self {
            y_max,
            z_bottom: -10e-6,
            z_top: 10e-6,
            substrate_eps: 11.4,
            neon_eps: 1.244,
            neon_thickness: 0.0,
            conductors: vec![
                Conductor { y0: 0.0, y1: width / 2.0, z0: 0.0, z1: t, driven: true },
                Conductor { y0: width / 2.0 + gap, y1: y_max, z0: 0.0, z1: t, driven: false },
            ],
            side: Boundary::Grounded,
            top: Boundary::Grounded,
            bottom: Boundary::Grounded,
            grid: GridSpec::default(),
        }
    }

    /// Named layouts: "resonator1" 100/100 nm, "resonator2" 150/150 nm,
    /// "resonator3" 300/300 nm.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "resonator1" => Ok(Self::coplanar(100e-9, 100e-9)),
            "resonator2" => Ok(Self::coplanar(150e-9, 150e-9)),
            "resonator3" => Ok(Self::coplanar(300e-9, 300e-9)),
            _ => Err(Error::Validation(format!("unknown cross-section preset {name:?}"))),
        }
    }

    pub fn with_neon(mut self, thickness: f64) -> Self {
        self.neon_thickness = thickness;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.y_max > 0.0 && self.z_bottom < 0.0 && self.z_top > 0.0, || "box must enclose the origin".into())?;
        ensure(self.substrate_eps >= 1.0 && self.neon_eps >= 1.0, || "permittivities must be ≥ 1".into())?;
        ensure(self.neon_thickness >= 0.0 && self.neon_thickness < self.z_top, || {
            "neon thickness must lie inside the box".into()
        })?;
        let g = &self.grid;
        ensure(g.h_min > 0.0 && g.h_max >= g.h_min && g.growth >= 1.0, || "invalid grid spec".into())?;
        ensure(self.conductors.iter().any(|c| c.driven), || "no driven conductor".into())?;
        for c in &self.conductors {
            ensure(c.y1 > c.y0 && c.z1 > c.z0, || "conductor rectangles must have positive size".into())?;
            ensure(c.y0 >= 0.0 && c.y1 <= self.y_max && c.z0 >= self.z_bottom && c.z1 <= self.z_top, || {
                "conductor outside the box".into()
            })?;
            let smallest = (c.y1 - c.y0).min(c.z1 - c.z0);
            ensure(smallest >= 8.0 * g.h_min * (1.0 - 1e-9), || {
                format!("conductor feature {smallest:e} m is resolved by fewer than 8 cells")
            })?;
        }
        Ok(())
    }

    fn in_metal(&self, y: f64, z: f64) -> Option<bool> {
        let tol = 1e-6 * self.grid.h_min;
        self.conductors
            .iter()
            .find(|c| y >= c.y0 - tol && y <= c.y1 + tol && z >= c.z0 - tol && z <= c.z1 + tol)
            .map(|c| c.driven)
    }
}

/// Breakpoints of a graded axis. Fine points get cells of `h_min`.
fn graded_axis(points: &mut [(f64, bool)], g: &GridSpec) -> Vec<f64> {
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(f64, bool)> = Vec::new();
    for &(x, fine) in points.iter() {
        match merged.last_mut() {
            Some(last) if (x - last.0).abs() < 1e-3 * g.h_min => last.1 |= fine,
            _ => merged.push((x, fine)),
        }
    }
    let mut nodes = vec![merged[0].0];
    for w in merged.windows(2) {
        let (a, fa) = w[0];
        let (b, fb) = w[1];
        let hl = if fa { g.h_min } else { g.h_max };
        let hr = if fb { g.h_min } else { g.h_max };
        let (mut left, mut right) = (Vec::new(), Vec::new());
        let mut rem = b - a;
        loop {
            let nl = (hl * g.growth.powi(left.len() as i32)).min(g.h_max);
            let nr = (hr * g.growth.powi(right.len() as i32)).min(g.h_max);
            let n = nl.min(nr);
            if rem <= 1.5 * n {
                left.push(rem);
                break;
            }
            if nl <= nr {
                left.push(nl);
            } else {
                right.push(nr);
            }
            rem -= n;
        }
        let mut x = a;
        for h in left.iter().chain(right.iter().rev()) {
            x += h;
            nodes.push(x);
        }
        *nodes.last_mut().unwrap() = b;
    }
    nodes
}

/// Banded Cholesky factor; row i keeps columns i−bw..=i, left to right.
struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// `a` holds the lower band in the same layout as the factor.
    fn factor(n: usize, bw: usize, mut a: Vec<f64>) -> Result<Self> {
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let k0 = lo.max(j.saturating_sub(bw));
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                let mut s = a[ri + j];
                for k in k0..j {
                    s -= a[ri + k] * a[rj + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::Numeric("cross-section matrix is not positive definite".into()));
                    }
                    a[ri + j] = s.sqrt();
                } else {
                    a[ri + j] = s / a[rj + j];
                }
            }
        }
        Ok(Self { n, bw, l: a })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + self.bw - i + j]
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let s: f64 = (lo..i).map(|k| self.at(i, k) * y[k]).sum();
            y[i] = (y[i] - s) / self.at(i, i);
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let s: f64 = (i + 1..=hi).map(|k| self.at(k, i) * y[k]).sum();
            y[i] = (y[i] - s) / self.at(i, i);
        }
        y
    }
}

/// Assembled and factored cross-section.
struct Discretization {
    ny: usize,
    y: Vec<f64>,
    z: Vec<f64>,
    /// Fixed potential per node, `None` for unknowns.
    fixed: Vec<Option<f64>>,
    /// Unknown index per node.
    index: Vec<Option<usize>>,
    /// (node a, node b, coefficient) for every stencil edge.
    edges: Vec<(usize, usize, f64)>,
    chol: BandCholesky,
}

impl Discretization {
    fn build(cs: &CrossSection, extra_z: &[f64]) -> Result<Self> {
        cs.validate()?;
        let g = &cs.grid;
        let mut ys = vec![(0.0, false), (cs.y_max, false)];
        let mut zs = vec![(cs.z_bottom, false), (cs.z_top, false), (0.0, true)];
        for c in &cs.conductors {
            ys.extend([(c.y0, true), (c.y1, true)]);
            zs.extend([(c.z0, true), (c.z1, true)]);
        }
        if cs.neon_thickness > 0.0 {
            zs.push((cs.neon_thickness, true));
        }
        zs.extend(extra_z.iter().map(|&z| (z, true)));
        // The mirror plane and the far walls carry no edge singularity.
        for p in ys.iter_mut() {
            if p.0 == cs.y_max || (p.0 == 0.0 && !cs.conductors.iter().any(|c| c.y1 == 0.0)) {
                p.1 = false;
            }
        }
        let y = graded_axis(&mut ys, g);
        let z = graded_axis(&mut zs, g);
        let (ny, nz) = (y.len(), z.len());

        let node = |i: usize, j: usize| j * ny + i;
        let mut fixed = vec![None; ny * nz];
        for j in 0..nz {
            for i in 0..ny {
                let v = if let Some(driven) = cs.in_metal(y[i], z[j]) {
                    Some(if driven { 1.0 } else { 0.0 })
                } else if (i == ny - 1 && cs.side == Boundary::Grounded)
                    || (j == 0 && cs.bottom == Boundary::Grounded)
                    || (j == nz - 1 && cs.top == Boundary::Grounded)
                {
                    Some(0.0)
                } else {
                    None
                };
                fixed[node(i, j)] = v;
            }
        }

        let eps = |i: usize, j: usize| -> f64 {
            let (yc, zc) = (0.5 * (y[i] + y[i + 1]), 0.5 * (z[j] + z[j + 1]));
            if cs.in_metal(yc, zc).is_some() {
                1.0
            } else if zc < 0.0 {
                cs.substrate_eps
            } else if zc < cs.neon_thickness {
                cs.neon_eps
            } else {
                1.0
            }
        };
        let mut edges = Vec::with_capacity(2 * ny * nz);
        for j in 0..nz {
            for i in 0..ny {
                if i + 1 < ny {
                    let mut flux = 0.0;
                    if j > 0 {
                        flux += eps(i, j - 1) * (z[j] - z[j - 1]) / 2.0;
                    }
                    if j + 1 < nz {
                        flux += eps(i, j) * (z[j + 1] - z[j]) / 2.0;
                    }
                    edges.push((node(i, j), node(i + 1, j), flux / (y[i + 1] - y[i])));
                }
                if j + 1 < nz {
                    let mut flux = 0.0;
                    if i > 0 {
                        flux += eps(i - 1, j) * (y[i] - y[i - 1]) / 2.0;
                    }
                    if i + 1 < ny {
                        flux += eps(i, j) * (y[i + 1] - y[i]) / 2.0;
                    }
                    edges.push((node(i, j), node(i, j + 1), flux / (z[j + 1] - z[j])));
                }
            }
        }

        let mut index = vec![None; ny * nz];
        let mut n = 0;
        for (k, f) in fixed.iter().enumerate() {
            if f.is_none() {
                index[k] = Some(n);
                n += 1;
            }
        }
        ensure(n > 0, || "cross-section has no free nodes".into())?;
        let bw = ny;
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        let mut put = |r: usize, c: usize, v: f64| band[r * w + bw - r + c] += v;
        for &(a, b, c) in &edges {
            match (index[a], index[b]) {
                (Some(ia), Some(ib)) => {
                    put(ia, ia, c);
                    put(ib, ib, c);
                    let (hi, lo) = if ia > ib { (ia, ib) } else { (ib, ia) };
                    put(hi, lo, -c);
                }
                (Some(ia), None) => put(ia, ia, c),
                (None, Some(ib)) => put(ib, ib, c),
                (None, None) => {}
            }
        }
        let chol = BandCholesky::factor(n, bw, band)?;
        Ok(Self { ny, y, z, fixed, index, edges, chol })
    }

    fn n_free(&self) -> usize {
        self.chol.n
    }

    /// Right-hand side from the fixed potentials.
    fn dirichlet_rhs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n_free()];
        for &(a, c, k) in &self.edges {
            match (self.index[a], self.index[c]) {
                (Some(ia), None) => b[ia] += k * self.fixed[c].unwrap(),
                (None, Some(ic)) => b[ic] += k * self.fixed[a].unwrap(),
                _ => {}
            }
        }
        b
    }

    fn full(&self, x: &[f64], with_fixed: bool) -> Vec<f64> {
        self.index
            .iter()
            .zip(&self.fixed)
            .map(|(i, f)| match (i, f) {
                (Some(i), _) => x[*i],
                (None, Some(v)) if with_fixed => *v,
                _ => 0.0,
            })
            .collect()
    }

    /// Relative residual ‖Ax − b‖/‖b‖.
    fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut r: Vec<f64> = b.iter().map(|v| -v).collect();
        for &(a, c, k) in &self.edges {
            match (self.index[a], self.index[c]) {
                (Some(ia), Some(ic)) => {
                    r[ia] += k * (x[ia] - x[ic]);
                    r[ic] += k * (x[ic] - x[ia]);
                }
                (Some(ia), None) => r[ia] += k * x[ia],
                (None, Some(ic)) => r[ic] += k * x[ic],
                _ => {}
            }
        }
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        r.iter().map(|v| v * v).sum::<f64>().sqrt() / nb
    }

    /// Potential with the driven conductor at 1 V and the charge on it.
    fn driven_solution(&self) -> Result<(Vec<f64>, f64)> {
        let b = self.dirichlet_rhs();
        let x = self.chol.solve(&b);
        let res = self.residual(&x, &b);
        if res > 1e-8 {
            return Err(Error::Numeric(format!("cross-section residual {res:e} exceeds 1e-8")));
        }
        let phi = self.full(&x, true);
        let is_driven = |k: usize| self.fixed[k] == Some(1.0);
        let mut q = 0.0;
        for &(a, c, k) in &self.edges {
            if is_driven(a) {
                q += k * (phi[a] - phi[c]);
            }
            if is_driven(c) {
                q += k * (phi[c] - phi[a]);
            }
        }
        Ok((phi, EPS0 * q))
    }

    fn row_of(&self, z: f64) -> Option<usize> {
        self.z.iter().position(|&v| (v - z).abs() < 1e-9 * self.z.last().unwrap().abs().max(1e-12))
    }
}

/// Shunt capacitance per unit length of the full (mirrored) cross-section [F/m].
pub fn cross_section_capacitance(cs: &CrossSection) -> Result<f64> {
    let d = Discretization::build(cs, &[])?;
    Ok(2.0 * d.driven_solution()?.1)
}

/// Fractional frequency change from neon, √(C_l^{w/o}/C_l^{w/}) − 1. Both
/// capacitances are taken on the same grid.
pub fn neon_frequency_shift(cs: &CrossSection) -> Result<f64> {
    let bare = CrossSection { neon_eps: 1.0, ..cs.clone() };
    let grid_z = if cs.neon_thickness > 0.0 { vec![cs.neon_thickness] } else { vec![] };
    let c_without = Discretization::build(&bare, &grid_z)?.driven_solution()?.1;
    let c_with = Discretization::build(cs, &grid_z)?.driven_solution()?.1;
    Ok((c_without / c_with).sqrt() - 1.0)
}

/// Neon thickness producing `target` shift, by bisection on [0, `max_thickness`].
pub fn thickness_from_shift(cs: &CrossSection, target: f64, max_thickness: f64) -> Result<f64> {
    ensure(max_thickness > 0.0, || "maximum thickness must be positive".into())?;
    let shift = |t: f64| neon_frequency_shift(&cs.clone().with_neon(t));
    let deepest = shift(max_thickness)?;
    if !(target <= 0.0 && target >= deepest) {
        return Err(Error::Range(format!(
            "shift {target:e} lies outside [{deepest:e}, 0] reached with up to {max_thickness:e} m of neon"
        )));
    }
    let (mut lo, mut hi) = (0.0, max_thickness);
    while hi - lo > 1e-3 * cs.grid.h_min.max(1e-10) && hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if shift(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 0.1e-9 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact response of one electron layer, precomputed for a cross-section.
#[derive(Debug, Clone)]
pub struct SheetModel {
    /// Node positions of the layer [m].
    pub y: Vec<f64>,
    pub height: f64,
    /// C_l without electrons, full cross-section [F/m].
    pub c0: f64,
    phi0: DVector<f64>,
    /// Potential at layer nodes per unit line charge [V·m/C].
    green: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadingResponse {
    /// Fractional frequency change √(C0/Re C̃) − 1.
    pub delta_f: f64,
    /// 1/Q_e = −Im C̃/Re C̃.
    pub inv_q_e: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub warnings: Vec<String>,
}

impl LoadingResponse {
    /// Attenuation α [1/m] that gives the same Q_e = π/(2αl) over `length`.
    pub fn attenuation(&self, length: f64) -> f64 {
        PI * self.inv_q_e / (2.0 * length)
    }
}

impl SheetModel {
    /// Places the layer `layer_height` above the neon surface.
    pub fn build(cs: &CrossSection, layer_height: f64) -> Result<Self> {
        let height = cs.neon_thickness + layer_height;
        let top_metal = cs.conductors.iter().map(|c| c.z1).fold(f64::NEG_INFINITY, f64::max);
        ensure(height > top_metal, || {
            format!("electron layer at {height:e} m does not clear the metal top at {top_metal:e} m")
        })?;
        let d = Discretization::build(cs, &[height])?;
        let (phi, c0) = d.driven_solution()?;
        let row = d.row_of(height).ok_or_else(|| Error::Numeric("layer row missing from the grid".into()))?;
        let nodes: Vec<usize> = (0..d.ny).map(|i| row * d.ny + i).filter(|&k| d.index[k].is_some()).collect();
        let y: Vec<f64> = nodes.iter().map(|&k| d.y[k % d.ny]).collect();
        let phi0 = DVector::from_iterator(nodes.len(), nodes.iter().map(|&k| phi[k]));
        let cols: Vec<Vec<f64>> = nodes
            .par_iter()
            .map(|&k| {
                let mut b = vec![0.0; d.n_free()];
                b[d.index[k].unwrap()] = 1.0 / EPS0;
                let x = d.chol.solve(&b);
                nodes.iter().map(|&m| x[d.index[m].unwrap()]).collect()
            })
            .collect();
        let m = nodes.len();
        let green = DMatrix::from_fn(m, m, |r, c| cols[c][r]);
        Ok(Self { y, height, c0: 2.0 * c0, phi0, green })
    }

    /// Complex capacitance per length with sheet conductance `sigma` at `omega`.
    pub fn complex_capacitance(&self, sigma: C64, omega: f64) -> Result<C64> {
        ensure(omega > 0.0, || "ω must be positive".into())?;
        let m = self.y.len();
        if sigma == C64::new(0.0, 0.0) || m < 2 {
            return Ok(C64::new(self.c0, 0.0));
        }
        let mut lap = DMatrix::<C64>::zeros(m, m);
        for k in 0..m - 1 {
            let g = sigma / (self.y[k + 1] - self.y[k]);
            lap[(k, k)] += g;
            lap[(k + 1, k + 1)] += g;
            lap[(k, k + 1)] -= g;
            lap[(k + 1, k)] -= g;
        }
        let green = self.green.map(|v| C64::new(v, 0.0));
        let phi0 = self.phi0.map(|v| C64::new(v, 0.0));
        let mut sys = &lap * &green;
        for k in 0..m {
            sys[(k, k)] += C64::new(0.0, omega);
        }
        let rhs = &lap * &phi0;
        let x = sys.lu().solve(&rhs).ok_or_else(|| Error::Numeric("sheet response system is singular".into()))?;
        Ok(C64::new(self.c0, 0.0) + 2.0 * phi0.dot(&x))
    }

    /// (Δf, 1/Q_e) for a given sheet conductance.
    pub fn response(&self, sigma: C64, omega: f64) -> Result<LoadingResponse> {
        let c = self.complex_capacitance(sigma, omega)?;
        let mut warnings = Vec::new();
        let spread = self.phi0.max() - self.phi0.min();
        if spread < 1e-9 {
            warnings.push("the layer sees no lateral field; the response is degenerate".into());
        }
        Ok(LoadingResponse {
            delta_f: (self.c0 / c.re).sqrt() - 1.0,
            inv_q_e: -c.im / c.re,
            c_re: c.re,
            c_im: c.im,
            warnings,
        })
    }
}

/// (Δf, 1/Q_e) of an electron layer described by `p` under `model`.
pub fn electron_loading_response(
    sheet: &SheetModel,
    p: &SheetConductivityParams,
    omega: f64,
    model: &ConductivityModel,
) -> Result<LoadingResponse> {
    sheet.response(sheet_conductivity(p, omega, model)?, omega)
}

/// Density at which the layer shifts the resonance by `target` (< 0), and the
/// response there. Bisection in log n_e over [1e8, 1e18] m⁻².
pub fn match_density(
    sheet: &SheetModel,
    template: &SheetConductivityParams,
    omega: f64,
    model: &ConductivityModel,
    target: f64,
) -> Result<(f64, LoadingResponse)> {
    ensure(target < 0.0, || "target shift must be negative".into())?;
    let at = |n: f64| electron_loading_response(sheet, &SheetConductivityParams { density: n, ..*template }, omega, model);
    let (mut lo, mut hi) = (8.0f64, 18.0f64);
    let deepest = at(10f64.powf(hi))?.delta_f;
    if deepest > target {
        return Err(Error::Range(format!("the layer saturates at Δf = {deepest:e}, short of {target:e}")));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if at(10f64.powf(mid))?.delta_f > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n = 10f64.powf(0.5 * (lo + hi));
    Ok((n, at(n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TAU_ROUGH: f64 = 1.9e-12;

    fn omega2() -> f64 {
        2.0 * PI * 5.91e9
    }

    #[test]
    fn lorentz_without_trap_is_drude() {
        let mut p = SheetConductivityParams::new(1e13, 4.7e-12);
        let w = 2.0 * PI * 4.8e9;
        let d = sheet_conductivity(&p, w, &ConductivityModel::Drude).unwrap();
        p.trap_freq = 0.0;
        let l = sheet_conductivity(&p, w, &ConductivityModel::Lorentz).unwrap();
        assert_eq!(d, l);
        let s0 = E_CHARGE * E_CHARGE * 1e13 * 4.7e-12 / M_E;
        assert!((d - s0 / C64::new(1.0, w * 4.7e-12)).norm() < 1e-15 * s0);
        assert!(d.im < 0.0);
    }

    #[test]
    fn imaginary_part_peaks_near_sqrt_omega_over_tau() {
        let w = 2.0 * PI * 4.8e9;
        let mut p = SheetConductivityParams::new(1e13, TAU_ROUGH);
        let mut best = (0.0, 0.0);
        for k in 0..4000 {
            p.trap_freq = k as f64 * 1e8;
            let s = sheet_conductivity(&p, w, &ConductivityModel::Lorentz).unwrap();
            if s.im.abs() > best.1 {
                best = (p.trap_freq, s.im.abs());
            }
        }
        let expected = (w / TAU_ROUGH).sqrt();
        assert!((best.0 / expected - 1.0).abs() < 0.05, "{:e} vs {expected:e}", best.0);
    }

    #[test]
    fn thermal_weights_limits() {
        let cold = TrapEnsemble { temperature: 1e-4, ..TrapEnsemble::default() };
        let w = cold.weights().unwrap();
        assert!((w.last().unwrap().1 - 1.0).abs() < 1e-9);
        let hot = TrapEnsemble { temperature: 1e9, ..TrapEnsemble::default() };
        let w = hot.weights().unwrap();
        assert!(w.iter().all(|p| (p.1 - 1.0 / 201.0).abs() < 1e-9));
        let sum: f64 = TrapEnsemble::default().weights().unwrap().iter().map(|p| p.1).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_average_matches_direct_quadrature() {
        let ens = TrapEnsemble { temperature: 1e9, ..TrapEnsemble::default() };
        let p = SheetConductivityParams::new(2e13, TAU_ROUGH);
        let w = 2.0 * PI * 5e9;
        let avg = sheet_conductivity(&p, w, &ConductivityModel::Thermal(ens)).unwrap();
        let step = ens.omega_a_max / 200.0;
        let mut direct = C64::new(0.0, 0.0);
        for k in 0..=200 {
            let q = SheetConductivityParams { trap_freq: k as f64 * step, ..p };
            direct += sheet_conductivity(&q, w, &ConductivityModel::Lorentz).unwrap() / 201.0;
        }
        assert!((avg - direct).norm() < 1e-8 * direct.norm());
    }

    #[test]
    fn film_and_resonator_one() {
        let film = FilmParams::default();
        assert!((film.sheet_inductance() / 9.6e-12 - 1.0).abs() < 0.01);
        let r = film_properties(&film, 1.45e-3, 100e-9, 100e-9, 4.81e9).unwrap();
        assert!((r.l_kin / 139e-9 - 1.0).abs() < 0.01);
        assert!((r.z0 / 1337.0 - 1.0).abs() < 0.01);
        // The printed expression evaluates to 12.79 µV against the quoted 12 µV.
        let w = 2.0 * PI * 4.81e9;
        let hand = (2.0 * r.l_kin / PI) * (2.0 * HBAR * w / r.l_kin).sqrt() * w / 2f64.sqrt();
        assert!((r.v0 / hand - 1.0).abs() < 1e-12);
        assert!((r.v0 / 12.79e-6 - 1.0).abs() < 1e-3, "V0 = {}", r.v0);
        assert!((r.v0_frequency() / 3e9 - 1.0).abs() < 0.05);
        let s = film.conductivity(2.0 * PI * 4.81e9);
        assert!(s.re == 0.0 && s.im < 0.0);
    }

    #[test]
    fn parallel_plate_limit() {
        let h = 200e-9;
        let half_width = 2e-6;
        let cs = CrossSection {
            y_max: half_width,
            z_bottom: -1e-6,
            z_top: 1e-6,
            substrate_eps: 4.0,
            neon_eps: 1.244,
            neon_thickness: 0.0,
            conductors: vec![
                Conductor { y0: 0.0, y1: half_width, z0: h, z1: h + 40e-9, driven: true },
                Conductor { y0: 0.0, y1: half_width, z0: -40e-9, z1: 0.0, driven: false },
            ],
            side: Boundary::Open,
            top: Boundary::Open,
            bottom: Boundary::Open,
            grid: GridSpec { h_min: 5e-9, h_max: 50e-9, growth: 1.2 },
        };
        let c = cross_section_capacitance(&cs).unwrap();
        let expected = EPS0 * 2.0 * half_width / h;
        assert!((c / expected - 1.0).abs() < 0.02, "{c:e} vs {expected:e}");
    }

    #[test]
    fn grid_refinement_is_stable() {
        let cs = CrossSection::preset("resonator1").unwrap().with_neon(160e-9);
        let coarse = cross_section_capacitance(&cs).unwrap();
        let fine = cross_section_capacitance(&CrossSection { grid: cs.grid.refined(), ..cs.clone() }).unwrap();
        assert!((fine / coarse - 1.0).abs() < 0.01, "{coarse:e} vs {fine:e}");
    }

    #[test]
    fn neon_shift_is_zero_without_neon_and_grows_with_thickness() {
        let cs = CrossSection::preset("resonator1").unwrap();
        assert_eq!(neon_frequency_shift(&cs).unwrap(), 0.0);
        let mut last_c = cross_section_capacitance(&cs).unwrap();
        let mut last_shift = 0.0;
        for t in [40e-9, 80e-9, 120e-9, 200e-9, 300e-9] {
            let with = cs.clone().with_neon(t);
            let c = cross_section_capacitance(&with).unwrap();
            let s = neon_frequency_shift(&with).unwrap();
            assert!(c > last_c && s < last_shift, "t = {t:e}");
            last_c = c;
            last_shift = s;
        }
    }

    #[test]
    fn no_electrons_no_response() {
        let cs = CrossSection::preset("resonator2").unwrap().with_neon(270e-9);
        let sheet = SheetModel::build(&cs, 2.5e-9).unwrap();
        let p = SheetConductivityParams::new(0.0, TAU_ROUGH);
        let r = electron_loading_response(&sheet, &p, omega2(), &ConductivityModel::Drude).unwrap();
        assert_eq!((r.delta_f, r.inv_q_e), (0.0, 0.0));
    }

    #[test]
    fn shift_deepens_with_density() {
        let cs = CrossSection::preset("resonator2").unwrap().with_neon(270e-9);
        let sheet = SheetModel::build(&cs, 2.5e-9).unwrap();
        for model in [ConductivityModel::Drude, ConductivityModel::Thermal(TrapEnsemble::default())] {
            let mut last = 0.0;
            // Below ~1e11 m⁻² electron inertia dominates and Drude nudges f up.
            for e in [12.0, 12.5, 13.0, 13.5, 14.0, 15.0, 16.0] {
                let p = SheetConductivityParams::new(10f64.powf(e), TAU_ROUGH);
                let r = electron_loading_response(&sheet, &p, omega2(), &model).unwrap();
                assert!(r.delta_f < last, "{model:?} at 1e{e}");
                assert!(r.inv_q_e >= 0.0);
                last = r.delta_f;
            }
        }
    }

    #[test]
    fn localized_electrons_lose_less_at_matched_shift() {
        let cs = CrossSection::preset("resonator2").unwrap().with_neon(270e-9);
        let sheet = SheetModel::build(&cs, 2.5e-9).unwrap();
        let tpl = SheetConductivityParams::new(1e12, TAU_ROUGH);
        let thermal = ConductivityModel::Thermal(TrapEnsemble::default());
        for target in [-0.003, -0.006, -0.009] {
            let (n_d, d) = match_density(&sheet, &tpl, omega2(), &ConductivityModel::Drude, target).unwrap();
            let (n_t, t) = match_density(&sheet, &tpl, omega2(), &thermal, target).unwrap();
            assert!((d.delta_f - target).abs() < 1e-6 && (t.delta_f - target).abs() < 1e-6);
            assert!(d.inv_q_e > t.inv_q_e && n_t > n_d, "target {target}");
        }
        let (_, d) = match_density(&sheet, &tpl, omega2(), &ConductivityModel::Drude, -0.009).unwrap();
        assert!(d.inv_q_e > 3.9e-3 / 3.0 && d.inv_q_e < 3.9e-3 * 3.0, "{}", d.inv_q_e);
        let alpha = d.attenuation(1.45e-3);
        assert!((PI / (2.0 * alpha * 1.45e-3) - 1.0 / d.inv_q_e).abs() < 1e-9 / d.inv_q_e);
    }

    #[test]
    fn unreachable_shift_is_a_range_error() {
        let cs = CrossSection::preset("resonator2").unwrap().with_neon(270e-9);
        let sheet = SheetModel::build(&cs, 2.5e-9).unwrap();
        let tpl = SheetConductivityParams::new(1e12, TAU_ROUGH);
        let r = match_density(&sheet, &tpl, omega2(), &ConductivityModel::Drude, -0.2);
        assert!(matches!(r, Err(Error::Range(_))));
        assert!(matches!(thickness_from_shift(&cs, -0.5, 300e-9), Err(Error::Range(_))));
    }

    #[test]
    fn thickness_inversion_round_trips() {
        let cs = CrossSection::preset("resonator1").unwrap();
        let shift = neon_frequency_shift(&cs.clone().with_neon(130e-9)).unwrap();
        let t = thickness_from_shift(&cs, shift, 600e-9).unwrap();
        assert!((t - 130e-9).abs() < 1e-9, "{t:e}");
    }

    #[test]
    fn presets_and_validation() {
        assert!(CrossSection::preset("resonator4").is_err());
        let mut cs = CrossSection::preset("resonator3").unwrap();
        cs.grid.h_min = 5e-9;
        assert!(cs.validate().is_err(), "20 nm metal needs ≥ 8 cells");
    }

    #[test]
    fn layer_below_metal_top_is_rejected() {
        let cs = CrossSection::preset("resonator1").unwrap().with_neon(10e-9);
        assert!(SheetModel::build(&cs, 2.5e-9).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn conductivity_is_passive(n in 0.0f64..1e16, tau in 1e-13f64..1e-10, wa in 0.0f64..2e12, f in 1e8f64..2e10) {
            let mut p = SheetConductivityParams::new(n, tau);
            p.trap_freq = wa;
            let w = 2.0 * PI * f;
            for m in [ConductivityModel::Drude, ConductivityModel::Lorentz] {
                prop_assert!(sheet_conductivity(&p, w, &m).unwrap().re >= 0.0);
            }
        }

        #[test]
        fn real_part_falls_with_trap_frequency_above_omega(a in 1.0f64..100.0, b in 1.0f64..100.0) {
            let w = 2.0 * PI * 4.8e9;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let mut p = SheetConductivityParams::new(1e13, TAU_ROUGH);
            p.trap_freq = lo * w;
            let s_lo = sheet_conductivity(&p, w, &ConductivityModel::Lorentz).unwrap().re;
            p.trap_freq = hi * w;
            let s_hi = sheet_conductivity(&p, w, &ConductivityModel::Lorentz).unwrap().re;
            prop_assert!(s_hi <= s_lo);
        }
    }
}
