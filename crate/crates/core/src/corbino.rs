//! Electrostatics of the Corbino cell and the resulting distribution of
//! Rydberg transition frequencies.

use serde::Serialize;

use crate::constants::{E_CHARGE, EPS0};
use crate::error::{ensure, Error, Result};
use crate::interp::Pchip;
use crate::rydberg::StarkCurve;


/// Electron counts per Rydberg-frequency bin.
///
/// Bins are uniform with width `bin_width`; bin `i` is centered at
/// `first_center + i * bin_width` [Hz].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetuningDistribution {
    pub first_center: f64,
    pub bin_width: f64,
    pub counts: Vec<f64>,
    pub total_electrons: f64,
}

impl DetuningDistribution {
    pub fn new(first_center: f64, bin_width: f64, counts: Vec<f64>) -> Result<Self> {
        ensure(!counts.is_empty(), || "distribution needs at least one bin".into())?;
        ensure(bin_width > 0.0 && bin_width.is_finite(), || "bin width must be positive".into())?;
        ensure(counts.iter().all(|&c| c >= 0.0 && c.is_finite()), || "counts must be non-negative".into())?;
        let total_electrons = counts.iter().sum();
        Ok(Self { first_center, bin_width, counts, total_electrons })
    }

    pub fn center(&self, i: usize) -> f64 {
        self.first_center + i as f64 * self.bin_width
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.center(i)).collect()
    }

    /// Support [first edge, last edge] in Hz.
    pub fn support(&self) -> (f64, f64) {
        let half = 0.5 * self.bin_width;
        (self.first_center - half, self.center(self.counts.len() - 1) + half)
    }

    /// Center of the fullest bin.
    pub fn peak(&self) -> f64 {
        let (k, _) = self
            .counts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bk, bv), (k, &v)| if v > bv { (k, v) } else { (bk, bv) });
        self.center(k)
    }

    /// Same bins with every count multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let counts: Vec<f64> = self.counts.iter().map(|c| c * factor).collect();
        Self { total_electrons: counts.iter().sum(), counts, ..*self }
    }
}

/// Parallel-plate cell with three concentric electrodes on each plate.
///
/// The rings are center `[0, center_electrode_radius]`, middle up to
/// `middle_electrode_radius` and outer up to `outer_radius`, separated by
/// insulating gaps of width `ring_gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorbinoGeometry {
    pub plate_gap: f64,
    pub outer_radius: f64,
    pub center_electrode_radius: f64,
    pub middle_electrode_radius: f64,
    pub ring_gap: f64,
    pub n_z: usize,
    pub n_r: usize,
    /// Height of the electron layer above the bottom plate [m].
    pub electron_height: f64,
}

impl Default for CorbinoGeometry {
    fn default() -> Self {
        Self {
            plate_gap: 2e-3,
            outer_radius: 7.5e-3,
            center_electrode_radius: 4e-3,
            middle_electrode_radius: 5.65e-3,
            ring_gap: 50e-6,
            n_z: 200,
            n_r: 500,
            electron_height: 1e-3,
        }
    }
}

impl CorbinoGeometry {
    /// Same cell with both grid dimensions multiplied by `factor`.
    pub fn refined(self, factor: usize) -> Self {
        Self { n_z: self.n_z * factor, n_r: self.n_r * factor, ..self }
    }

    pub fn dr(&self) -> f64 {
        self.outer_radius / self.n_r as f64
    }

    pub fn dz(&self) -> f64 {
        self.plate_gap / self.n_z as f64
    }

    /// Grid row holding the electron layer.
    pub fn electron_row(&self) -> usize {
        (self.electron_height / self.dz()).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.plate_gap > 0.0 && self.plate_gap.is_finite(), || "plate gap must be positive".into())?;
        ensure(self.ring_gap >= 0.0, || "ring gap must be non-negative".into())?;
        ensure(
            self.center_electrode_radius > 0.0
                && self.center_electrode_radius + self.ring_gap < self.middle_electrode_radius
                && self.middle_electrode_radius + self.ring_gap < self.outer_radius,
            || "electrode radii must increase: center < middle < outer".into(),
        )?;
        ensure(self.n_z >= 100 && self.n_r >= 250, || {
            format!("grid {}x{} is coarser than half the 200x500 default", self.n_z, self.n_r)
        })?;
        let row = self.electron_height / self.dz();
        ensure((row - row.round()).abs() < 1e-6 && row.round() >= 1.0 && (row.round() as usize) < self.n_z, || {
            format!("electron height {} m does not fall on an interior grid row", self.electron_height)
        })
    }

    /// Node radii r_i = i·dr, i = 0..=n_r.
    pub fn radii(&self) -> Vec<f64> {
        (0..=self.n_r).map(|i| i as f64 * self.dr()).collect()
    }

    /// Area of the annulus owned by radial node `i` [m²].
    pub fn annulus_area(&self, i: usize) -> f64 {
        let dr = self.dr();
        let r = i as f64 * dr;
        let inner = (r - 0.5 * dr).max(0.0);
        let outer = (r + 0.5 * dr).min(self.outer_radius);
        std::f64::consts::PI * (outer * outer - inner * inner)
    }

    /// Plate potential at radius `r` given the center, middle and outer ring
    /// voltages; linear across the gaps.
    pub fn plate_voltage(&self, rings: [f64; 3], r: f64) -> f64 {
        let edges = [
            (self.center_electrode_radius, self.center_electrode_radius + self.ring_gap),
            (self.middle_electrode_radius, self.middle_electrode_radius + self.ring_gap),
        ];
        for (k, &(a, b)) in edges.iter().enumerate() {
            if r <= a {
                return rings[k];
            }
            if r < b {
                return rings[k] + (rings[k + 1] - rings[k]) * (r - a) / (b - a);
            }
        }
        rings[2]
    }
}

/// DC voltages on the six electrodes [V]. The bottom middle and outer rings
/// share the guard voltage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BiasConfig {
    pub bottom_center: f64,
    pub bottom_guard: f64,
    pub top_center: f64,
    pub top_middle: f64,
    pub top_outer: f64,
}

impl BiasConfig {
    /// V_BC = 12 V, V_BG = −90 V, everything else grounded.
    pub fn helium() -> Self {
        Self::bottom(12.0, -90.0)
    }

    pub fn bottom(v_bc: f64, v_bg: f64) -> Self {
        Self { bottom_center: v_bc, bottom_guard: v_bg, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.voltages().iter().all(|v| v.is_finite()), || "bias voltages must be finite".into())
    }

    fn voltages(&self) -> [f64; 5] {
        [self.bottom_center, self.bottom_guard, self.top_center, self.top_middle, self.top_outer]
    }

    fn bottom_rings(&self) -> [f64; 3] {
        [self.bottom_center, self.bottom_guard, self.bottom_guard]
    }

    fn top_rings(&self) -> [f64; 3] {
        [self.top_center, self.top_middle, self.top_outer]
    }

    pub fn max_abs(&self) -> f64 {
        self.voltages().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Potential on the (r, z) node grid, stored row by row (`j` along z).
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub n_r: usize,
    pub n_z: usize,
    pub dr: f64,
    pub dz: f64,
    pub values: Vec<f64>,
    pub sweeps: usize,
    /// Largest nodal residual in volts (equation residual over its diagonal).
    pub residual: f64,
}

impl PotentialField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.n_r + 1) + i]
    }

    /// E_z = −∂φ/∂z at an interior node, centered difference [V/m].
    pub fn e_z(&self, i: usize, j: usize) -> f64 {
        -(self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * self.dz)
    }

    /// E_z on the half-row between `j` and `j + 1`.
    pub fn e_z_above(&self, i: usize, j: usize) -> f64 {
        -(self.at(i, j + 1) - self.at(i, j)) / self.dz
    }

    /// Charge induced on the bottom plate, the top plate and the side wall
    /// [C], from the discrete fluxes through the boundary faces.
    pub fn induced_charges(&self, geo: &CorbinoGeometry) -> [f64; 3] {
        let (nr, nz) = (self.n_r, self.n_z);
        let mut bottom = 0.0;
        let mut top = 0.0;
        for i in 0..nr {
            let a = geo.annulus_area(i);
            bottom -= EPS0 * a * (self.at(i, 1) - self.at(i, 0)) / self.dz;
            top -= EPS0 * a * (self.at(i, nz - 1) - self.at(i, nz)) / self.dz;
        }
        let face = 2.0 * std::f64::consts::PI * (nr as f64 - 0.5) * self.dr * self.dz;
        let wall: f64 =
            (1..nz).map(|j| -EPS0 * face * (self.at(nr - 1, j) - self.at(nr, j)) / self.dr).sum();
        [bottom, top, wall]
    }
}

/// Finite-volume stencil of the axisymmetric Laplacian at radial node `i`:
/// (west, east) couplings; the axis node sees only its east neighbor.
fn radial_couplings(i: usize, dr: f64) -> (f64, f64) {
    if i == 0 {
        (0.0, 4.0 / (dr * dr))
    } else {
        let r = i as f64;
        ((r - 0.5) / (r * dr * dr), (r + 0.5) / (r * dr * dr))
    }
}

/// Source term e·n_s/(ε0·dz) on the electron row for electrons [m⁻²].
fn sheet_source(n_s: f64, dz: f64) -> f64 {
    E_CHARGE * n_s / (EPS0 * dz)
}

const MAX_SWEEPS: usize = 200_000;
const RESIDUAL_CHECK_EVERY: usize = 20;

/// Solves the axisymmetric Laplace (or, with `charge_plane`, Poisson)
/// problem by red-black successive over-relaxation.
///
/// `charge_plane` holds the electron density [m⁻²] at each radial node of
/// the electron row. Plates are Dirichlet, the side wall is linear between
/// the two outer rings, and the axis is a symmetry line.
pub fn solve_laplace(geo: &CorbinoGeometry, bias: &BiasConfig, charge_plane: Option<&[f64]>) -> Result<PotentialField> {
    geo.validate()?;
    bias.validate()?;
    let (nr, nz) = (geo.n_r, geo.n_z);
    let (dr, dz) = (geo.dr(), geo.dz());
    let row = geo.electron_row();
    if let Some(q) = charge_plane {
        ensure(q.len() == nr + 1, || format!("charge plane needs {} values, got {}", nr + 1, q.len()))?;
        ensure(q.iter().all(|v| v.is_finite()), || "charge plane must be finite".into())?;
    }
    let width = nr + 1;
    let idx = |i: usize, j: usize| j * width + i;

    let (bot, top) = (bias.bottom_rings(), bias.top_rings());
    let mut phi = vec![0.0; width * (nz + 1)];
    for i in 0..=nr {
        let r = i as f64 * dr;
        let (vb, vt) = (geo.plate_voltage(bot, r), geo.plate_voltage(top, r));
        for j in 0..=nz {
            let t = j as f64 / nz as f64;
            phi[idx(i, j)] = vb + (vt - vb) * t;
        }
    }
    // Side wall: linear between the outer rings, fixed by the initial fill.
    let mut source = vec![0.0; width];
    let mut scale = bias.max_abs();
    if let Some(q) = charge_plane {
        for (s, &n) in source.iter_mut().zip(q) {
            *s = sheet_source(n, dz);
        }
        let peak = q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        scale = scale.max(E_CHARGE * peak * geo.plate_gap / (4.0 * EPS0));
    }
    if scale == 0.0 {
        return Ok(PotentialField { n_r: nr, n_z: nz, dr, dz, values: phi, sweeps: 0, residual: 0.0 });
    }
    let tol = 1e-9 * scale;

    let cz = 1.0 / (dz * dz);
    let coup: Vec<(f64, f64)> = (0..nr).map(|i| radial_couplings(i, dr)).collect();
    let rho_j = {
        let (ar, az) = (2.0 / (dr * dr), 2.0 * cz);
        let cr = (std::f64::consts::PI / (2.0 * nr as f64)).cos();
        let cz_ = (std::f64::consts::PI / nz as f64).cos();
        (ar * cr + az * cz_) / (ar + az)
    };
    let omega = 2.0 / (1.0 + (1.0 - rho_j * rho_j).sqrt());

    let update = |phi: &[f64], i: usize, j: usize| -> f64 {
        let (w, e) = coup[i];
        let west = if i == 0 { 0.0 } else { w * phi[idx(i - 1, j)] };
        let s = if j == row { source[i] } else { 0.0 };
        (west + e * phi[idx(i + 1, j)] + cz * (phi[idx(i, j - 1)] + phi[idx(i, j + 1)]) - s) / (w + e + 2.0 * cz)
    };
    let residual = |phi: &[f64]| -> f64 {
        let mut worst = 0.0_f64;
        for j in 1..nz {
            for i in 0..nr {
                worst = worst.max((update(phi, i, j) - phi[idx(i, j)]).abs());
            }
        }
        worst
    };

    let mut sweeps = 0;
    loop {
        let res = residual(&phi);
        if res < tol {
            return Ok(PotentialField { n_r: nr, n_z: nz, dr, dz, values: phi, sweeps, residual: res });
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "relaxation did not converge in {MAX_SWEEPS} sweeps: residual {res:e} V (target {tol:e} V)"
            )));
        }
        for _ in 0..RESIDUAL_CHECK_EVERY {
            for color in 0..2 {
                for j in 1..nz {
                    let start = (color + j) % 2;
                    for i in (start..nr).step_by(2) {
                        let gs = update(&phi, i, j);
                        let k = idx(i, j);
                        phi[k] += omega * (gs - phi[k]);
                    }
                }
            }
        }
        sweeps += RESIDUAL_CHECK_EVERY;
    }
}

/// Direct solver for the field of the electron layer alone, with every
/// boundary grounded.
///
/// The discrete operator is diagonalized along z by sine modes; each mode
/// leaves a tridiagonal radial problem. The result is the exact solution of
/// the same finite-volume equations the relaxation solver iterates.
#[derive(Debug, Clone)]
pub struct SheetSolver {
    n_r: usize,
    n_z: usize,
    row: usize,
    dz: f64,
    dr: f64,
    west: Vec<f64>,
    modes: Vec<Mode>,
}

#[derive(Debug, Clone)]
struct Mode {
    /// sin(kπ·row/n_z), the mode amplitude on the electron row.
    at_row: f64,
    /// Thomas-algorithm upper coefficients and inverse pivots.
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl SheetSolver {
    pub fn new(geo: &CorbinoGeometry) -> Result<Self> {
        geo.validate()?;
        let (nr, nz, dr, dz) = (geo.n_r, geo.n_z, geo.dr(), geo.dz());
        let row = geo.electron_row();
        let couplings: Vec<(f64, f64)> = (0..nr).map(|i| radial_couplings(i, dr)).collect();
        let west: Vec<f64> = couplings.iter().map(|c| c.0).collect();
        let modes = (1..nz)
            .map(|k| {
                let theta = k as f64 * std::f64::consts::PI / nz as f64;
                let lambda = (2.0 - 2.0 * theta.cos()) / (dz * dz);
                let mut upper = vec![0.0; nr];
                let mut inv_pivot = vec![0.0; nr];
                let mut prev_upper = 0.0;
                for i in 0..nr {
                    let (w, e) = couplings[i];
                    let pivot = -(w + e) - lambda - w * prev_upper;
                    inv_pivot[i] = 1.0 / pivot;
                    upper[i] = e * inv_pivot[i];
                    prev_upper = upper[i];
                }
                Mode { at_row: (row as f64 * theta).sin(), upper, inv_pivot }
            })
            .collect();
        Ok(Self { n_r: nr, n_z: nz, row, dz, dr, west, modes })
    }

    /// Radial amplitude of mode `m` for unit-weighted source `g`.
    fn solve_mode(&self, m: &Mode, g: &[f64], out: &mut [f64]) {
        let scale = 2.0 / self.n_z as f64 * m.at_row;
        let mut prev = 0.0;
        for i in 0..self.n_r {
            let rhs = scale * g[i] - self.west[i] * prev;
            prev = rhs * m.inv_pivot[i];
            out[i] = prev;
        }
        for i in (0..self.n_r - 1).rev() {
            out[i] -= m.upper[i] * out[i + 1];
        }
    }

    fn source(&self, n_s: &[f64]) -> Vec<f64> {
        (0..self.n_r).map(|i| sheet_source(n_s[i], self.dz)).collect()
    }

    /// Potential on rows `rows` for electron density `n_s` [m⁻²].
    pub fn potential_rows(&self, n_s: &[f64], rows: &[usize]) -> Vec<Vec<f64>> {
        let g = self.source(n_s);
        let mut out = vec![vec![0.0; self.n_r + 1]; rows.len()];
        let mut amp = vec![0.0; self.n_r];
        for (k, m) in self.modes.iter().enumerate() {
            self.solve_mode(m, &g, &mut amp);
            let theta = (k + 1) as f64 * std::f64::consts::PI / self.n_z as f64;
            for (row_out, &j) in out.iter_mut().zip(rows) {
                let s = (j as f64 * theta).sin();
                for i in 0..self.n_r {
                    row_out[i] += s * amp[i];
                }
            }
        }
        out
    }

    /// Full potential field of the layer.
    pub fn potential(&self, n_s: &[f64]) -> PotentialField {
        let rows: Vec<usize> = (0..=self.n_z).collect();
        let values = self.potential_rows(n_s, &rows).concat();
        PotentialField { n_r: self.n_r, n_z: self.n_z, dr: self.dr, dz: self.dz, values, sweeps: 0, residual: 0.0 }
    }

    /// E_z just above the layer for density `n_s` [V/m].
    pub fn field_above(&self, n_s: &[f64]) -> Vec<f64> {
        let rows = self.potential_rows(n_s, &[self.row, self.row + 1]);
        (0..=self.n_r).map(|i| -(rows[1][i] - rows[0][i]) / self.dz).collect()
    }
}

/// Saturated electron layer and the fields at its plane.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    /// Node radii [m].
    pub r: Vec<f64>,
    /// Electron density [m⁻²].
    pub n_s: Vec<f64>,
    /// Electrode field E_z at the electron plane [V/m]; this is the field
    /// that sets the Stark shift.
    pub e_z: Vec<f64>,
    /// Total E_z just above the layer, electrons included [V/m].
    pub residual: Vec<f64>,
    pub total_electrons: f64,
    pub iterations: usize,
    /// False when the electrodes nowhere press electrons onto the surface.
    pub confined: bool,
}

impl RadialProfile {
    pub fn is_empty(&self) -> bool {
        self.total_electrons == 0.0
    }

    /// Largest radius with a non-zero density [m].
    pub fn confinement_radius(&self) -> f64 {
        self.r.iter().zip(&self.n_s).filter(|(_, &n)| n > 0.0).map(|(&r, _)| r).fold(0.0, f64::max)
    }
}

/// Options of the saturation fixed-point iteration.
#[derive(Debug, Clone, Copy)]
pub struct SaturationOptions {
    /// Step factor η in n_s ← n_s + η·ε0·E_z/e.
    pub step: f64,
    /// Stop when the residual field is below this fraction of the largest
    /// electrode field at the plane.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SaturationOptions {
    fn default() -> Self {
        Self { step: 0.5, tolerance: 1e-5, max_iter: 100_000 }
    }
}

/// Total electron number Σ n_s(r_i)·A_i.
pub fn electron_count(geo: &CorbinoGeometry, n_s: &[f64]) -> f64 {
    n_s.iter().enumerate().map(|(i, n)| n * geo.annulus_area(i)).sum()
}

/// Fills the electron plane until the net E_z just above it vanishes
/// wherever electrons sit, and is repulsive elsewhere.
pub fn saturated_density(geo: &CorbinoGeometry, bias: &BiasConfig) -> Result<RadialProfile> {
    saturated_density_with(geo, bias, SaturationOptions::default())
}

pub fn saturated_density_with(
    geo: &CorbinoGeometry,
    bias: &BiasConfig,
    opts: SaturationOptions,
) -> Result<RadialProfile> {
    let field = solve_laplace(geo, bias, None)?;
    let sheet = SheetSolver::new(geo)?;
    let nr = geo.n_r;
    let row = geo.electron_row();
    let e_z: Vec<f64> = (0..=nr).map(|i| field.e_z(i, row)).collect();
    let drive: Vec<f64> = (0..=nr).map(|i| field.e_z_above(i, row)).collect();
    let r = geo.radii();
    let e_ref = drive.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut n_s = vec![0.0; nr + 1];
    if drive[..nr].iter().all(|&e| e <= 0.0) {
        return Ok(RadialProfile {
            r,
            n_s,
            e_z,
            residual: drive,
            total_electrons: 0.0,
            iterations: 0,
            confined: false,
        });
    }

    // The layer's field is linear in n_s; tabulate its response once.
    let green = sheet_response(&sheet, nr);
    let tol = opts.tolerance * e_ref;
    let kick = opts.step * EPS0 / E_CHARGE;
    let mut residual = drive.clone();
    for it in 1..=opts.max_iter {
        for i in 0..nr {
            n_s[i] = (n_s[i] + kick * residual[i]).max(0.0);
        }
        for i in 0..=nr {
            residual[i] = drive[i] + green[i].iter().zip(&n_s).map(|(g, n)| g * n).sum::<f64>();
        }
        let worst = (0..nr)
            .map(|i| if n_s[i] > 0.0 { residual[i].abs() } else { residual[i].max(0.0) })
            .fold(0.0, f64::max);
        if worst < tol {
            let total_electrons = electron_count(geo, &n_s);
            return Ok(RadialProfile { r, n_s, e_z, residual, total_electrons, iterations: it, confined: true });
        }
    }
    Err(Error::Numeric(format!("saturation did not converge in {} iterations", opts.max_iter)))
}

/// Matrix G with G[i][q] = E_z just above node i per unit density at node q.
fn sheet_response(sheet: &SheetSolver, nr: usize) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    let columns: Vec<Vec<f64>> = (0..nr)
        .into_par_iter()
        .map(|q| {
            let mut unit = vec![0.0; nr + 1];
            unit[q] = 1.0;
            sheet.field_above(&unit)
        })
        .collect();
    (0..=nr).map(|i| (0..=nr).map(|q| if q < nr { columns[q][i] } else { 0.0 }).collect()).collect()
}

/// Default histogram bin width for the Rydberg-frequency distribution [Hz].
pub const DEFAULT_BIN_WIDTH: f64 = 50e6;

/// Maps each occupied annulus through the Stark curve f12(E_z), bins the
/// counts, and convolves with a normalized Gaussian of standard deviation
/// `gauss_width` [Hz].
pub fn detuning_distribution(
    profile: &RadialProfile,
    geo: &CorbinoGeometry,
    stark: &StarkCurve,
    gauss_width: f64,
    bin_width: f64,
) -> Result<DetuningDistribution> {
    ensure(gauss_width >= 0.0 && gauss_width.is_finite(), || "Gaussian width must be non-negative".into())?;
    ensure(bin_width > 0.0, || "bin width must be positive".into())?;
    ensure(!profile.is_empty(), || "profile holds no electrons".into())?;
    let curve = Pchip::new(stark.fields.clone(), stark.f12.clone())?;
    let (lo, hi) = (stark.fields[0], stark.fields[stark.fields.len() - 1]);
    let mut samples = Vec::new();
    for (i, (&n, &e)) in profile.n_s.iter().zip(&profile.e_z).enumerate() {
        if n <= 0.0 {
            continue;
        }
        if e < lo || e > hi {
            return Err(Error::Range(format!("E_z = {e:.1} V/m outside the Stark curve [{lo}, {hi}] V/m")));
        }
        samples.push((curve.eval(e)?, n * geo.annulus_area(i)));
    }
    let bins: Vec<i64> = samples.iter().map(|(f, _)| (f / bin_width).round() as i64).collect();
    let pad = (6.0 * gauss_width / bin_width).ceil() as i64;
    let first = bins.iter().min().unwrap() - pad;
    let last = bins.iter().max().unwrap() + pad;
    let mut raw = vec![0.0; (last - first + 1) as usize];
    for (&b, &(_, count)) in bins.iter().zip(&samples) {
        raw[(b - first) as usize] += count;
    }
    let counts = if pad == 0 { raw } else { gaussian_smooth(&raw, gauss_width / bin_width, pad as usize) };
    DetuningDistribution::new(first as f64 * bin_width, bin_width, counts)
}

/// Convolution with a discrete Gaussian of `sigma` bins, truncated at
/// `reach` bins and normalized to unit sum.
fn gaussian_smooth(raw: &[f64], sigma: f64, reach: usize) -> Vec<f64> {
    let kernel: Vec<f64> = (0..=2 * reach)
        .map(|k| {
            let x = k as f64 - reach as f64;
            (-0.5 * x * x / (sigma * sigma)).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    let n = raw.len();
    let mut out = vec![0.0; n];
    for (i, &v) in raw.iter().enumerate().filter(|(_, v)| **v != 0.0) {
        for (k, w) in kernel.iter().enumerate() {
            if let Some(t) = (i + k).checked_sub(reach).filter(|&t| t < n) {
                out[t] += v * w / norm;
            }
        }
    }
    out
}
