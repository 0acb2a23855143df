//! Uniformly magnetized rectangular blocks and two-block assemblies.
//!
//! Fields come from the equivalent surface charge ±M on the two faces
//! normal to the magnetization, integrated in closed form. A direct
//! dipole-sum integrator with adaptive subdivision is kept alongside as an
//! independent path. Magnetization is given in tesla (μ0·M).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{G_ELECTRON, HBAR, MU_B};
use crate::error::{ensure, Error, Result};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetBlock {
    /// Edge lengths along x, y, z [m].
    pub size: Vec3,
    pub center: Vec3,
    /// μ0·M [T].
    pub magnetization: f64,
    pub axis: Axis,
}

impl MagnetBlock {
    /// 1.5 µm × 1.5 µm × `thickness` cobalt, 1.7 T along ŷ.
    pub fn cobalt(thickness: f64, center: Vec3) -> Self {
        Self { size: [1.5e-6, 1.5e-6, thickness], center, magnetization: 1.7, axis: Axis::Y }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.size.iter().all(|s| *s > 0.0), || "block dimensions must be positive".into())?;
        ensure(self.magnetization.is_finite(), || "magnetization must be finite".into())
    }

    pub fn volume(&self) -> f64 {
        self.size.iter().product()
    }

    fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| (p[k] - self.center[k]).abs() < 0.5 * self.size[k])
    }
}

/// Field of a unit-density rectangle [x1,x2]×[y1,y2] in the plane z' = 0,
/// ∫∫ (r − r')/|r − r'|³ dA', at local point (x, y, z).
fn rectangle_field(x: f64, y: f64, z: f64, x1: f64, x2: f64, y1: f64, y2: f64) -> Vec3 {
    // ln(η + R), stable when η < 0.
    let log_plus = |eta: f64, r: f64, rest2: f64| {
        if eta >= 0.0 {
            (eta + r).ln()
        } else {
            (rest2 / (r - eta)).ln()
        }
    };
    let mut e = [0.0; 3];
    for (xi, sx) in [(x - x1, 1.0), (x - x2, -1.0)] {
        for (eta, sy) in [(y - y1, 1.0), (y - y2, -1.0)] {
            let s = sx * sy;
            let r = (xi * xi + eta * eta + z * z).sqrt();
            e[0] += -s * log_plus(eta, r, xi * xi + z * z);
            e[1] += -s * log_plus(xi, r, eta * eta + z * z);
            e[2] += s * (xi * eta).atan2(z * r);
        }
    }
    e
}

/// Closed-form field of one block [T].
pub fn block_field(b: &MagnetBlock, p: &Vec3) -> Result<Vec3> {
    b.validate()?;
    if b.contains(p) {
        return Err(Error::Domain("field point lies inside the magnet".into()));
    }
    let k = b.axis.index();
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    let rel = [p[0] - b.center[0], p[1] - b.center[1], p[2] - b.center[2]];
    let (hi, hj, hk) = (0.5 * b.size[i], 0.5 * b.size[j], 0.5 * b.size[k]);
    let mut out = [0.0; 3];
    for (face, sign) in [(hk, 1.0), (-hk, -1.0)] {
        let e = rectangle_field(rel[i], rel[j], rel[k] - face, -hi, hi, -hj, hj);
        out[i] += sign * e[0];
        out[j] += sign * e[1];
        out[k] += sign * e[2];
    }
    let scale = b.magnetization / (4.0 * PI);
    Ok(out.map(|v| v * scale))
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

fn dipole_cell(b: &MagnetBlock, lo: Vec3, hi: Vec3, p: &Vec3, out: &mut Vec3, ratio: f64, depth: usize) {
    let size: Vec3 = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let mid: Vec3 = [0.5 * (hi[0] + lo[0]), 0.5 * (hi[1] + lo[1]), 0.5 * (hi[2] + lo[2])];
    let gap: f64 = (0..3)
        .map(|k| ((p[k] - mid[k]).abs() - 0.5 * size[k]).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt();
    let longest = (0..3).max_by(|&a, &c| size[a].partial_cmp(&size[c]).unwrap()).unwrap();
    if gap < ratio * size[longest] && depth < 60 {
        let split = mid[longest];
        let (mut hi_a, mut lo_b) = (hi, lo);
        hi_a[longest] = split;
        lo_b[longest] = split;
        dipole_cell(b, lo, hi_a, p, out, ratio, depth + 1);
        dipole_cell(b, lo_b, hi, p, out, ratio, depth + 1);
        return;
    }
    let k = b.axis.index();
    let jac = size[0] * size[1] * size[2] / 8.0;
    for &(u, wu) in &GL4 {
        for &(v, wv) in &GL4 {
            for &(w, ww) in &GL4 {
                let q = [mid[0] + 0.5 * size[0] * u, mid[1] + 0.5 * size[1] * v, mid[2] + 0.5 * size[2] * w];
                let r = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
                let r5 = r2 * r2 * r2.sqrt();
                let wt = wu * wv * ww * jac;
                for c in 0..3 {
                    let m_c = if c == k { 1.0 } else { 0.0 };
                    out[c] += wt * (3.0 * r[k] * r[c] - m_c * r2) / r5;
                }
            }
        }
    }
}

/// Field of one block as a sum of point dipoles, subdividing any cell
/// closer to `p` than `ratio` times its longest edge [T].
pub fn block_field_dipole(b: &MagnetBlock, p: &Vec3, ratio: f64) -> Result<Vec3> {
    b.validate()?;
    ensure(ratio > 0.0, || "subdivision ratio must be positive".into())?;
    if b.contains(p) {
        return Err(Error::Domain("field point lies inside the magnet".into()));
    }
    let lo = [0, 1, 2].map(|k| b.center[k] - 0.5 * b.size[k]);
    let hi = [0, 1, 2].map(|k| b.center[k] + 0.5 * b.size[k]);
    let mut out = [0.0; 3];
    dipole_cell(b, lo, hi, p, &mut out, ratio, 0);
    let scale = b.magnetization / (4.0 * PI);
    Ok(out.map(|v| v * scale))
}

/// Two electron sites between blocks; the electron plane is z = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetAssembly {
    pub blocks: Vec<MagnetBlock>,
    /// Electron sites [m].
    pub sites: [Vec3; 2],
    /// Where the resonator offsets are reported [m].
    pub resonator_point: Vec3,
}

/// Face-to-face spacing of the default pair [m].
pub const DEFAULT_GAP: f64 = 500e-9;
/// Cobalt thickness of the default pair [m].
pub const DEFAULT_THICKNESS: f64 = 65e-9;
/// Central-difference step for gradients [m].
pub const GRADIENT_STEP: f64 = 1e-9;

impl MagnetAssembly {
    /// Two cobalt blocks along ±y with `gap` between facing sides, centred
    /// `dz` below the electron plane; sites at y = ±d/2. The resonator
    /// point sits under the first site on the chip surface, 10 nm into the
    /// 20 nm film.
    pub fn pair(thickness: f64, gap: f64, dz: f64, d: f64) -> Self {
        let half = 0.5 * gap + 0.75e-6;
        let blocks = vec![
            MagnetBlock::cobalt(thickness, [0.0, -half, -dz]),
            MagnetBlock::cobalt(thickness, [0.0, half, -dz]),
        ];
        let chip = -dz - 0.5 * thickness;
        Self { blocks, sites: [[0.0, -0.5 * d, 0.0], [0.0, 0.5 * d, 0.0]], resonator_point: [0.0, 0.5 * d, chip + 10e-9] }
    }

    /// Default pair: 65 nm cobalt, 500 nm gap, sites 100 nm apart. These
    /// two free dimensions reproduce the quoted peak position, peak
    /// gradient, site B_y and resonator B_y together.
    pub fn reference(dz: f64) -> Self {
        Self::pair(DEFAULT_THICKNESS, DEFAULT_GAP, dz, 100e-9)
    }

    /// Same assembly with every block moved by `shift` along y.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut a = self.clone();
        for b in &mut a.blocks {
            b.center[1] += shift;
        }
        a
    }

    /// Same assembly with blocks centred `dz` below the electron plane.
    pub fn with_offset(&self, dz: f64) -> Self {
        let mut a = self.clone();
        let old = self.blocks.first().map_or(0.0, |b| b.center[2]);
        for b in &mut a.blocks {
            b.center[2] = -dz;
        }
        a.resonator_point[2] += -dz - old;
        a
    }

    pub fn midpoint(&self) -> Vec3 {
        [0, 1, 2].map(|k| 0.5 * (self.sites[0][k] + self.sites[1][k]))
    }

    /// Superposed field [T].
    pub fn field(&self, p: &Vec3) -> Result<Vec3> {
        let mut out = [0.0; 3];
        for b in &self.blocks {
            let f = block_field(b, p)?;
            for k in 0..3 {
                out[k] += f[k];
            }
        }
        Ok(out)
    }

    /// ∂B_z/∂y at `p` by a 1 nm central difference [T/m].
    pub fn gradient_zy(&self, p: &Vec3) -> Result<f64> {
        let h = GRADIENT_STEP;
        let up = self.field(&[p[0], p[1] + h, p[2]])?;
        let dn = self.field(&[p[0], p[1] - h, p[2]])?;
        Ok((up[2] - dn[2]) / (2.0 * h))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientProfile {
    /// (Δz [m], ∂B_z/∂y [T/m]) at the site midpoint.
    pub points: Vec<(f64, f64)>,
    pub peak_offset: f64,
    /// Largest |∂B_z/∂y| [T/m].
    pub peak_gradient: f64,
}

/// ∂B_z/∂y at the midpoint of the sites for each block offset.
pub fn assembly_gradient_profile(a: &MagnetAssembly, offsets: &[f64]) -> Result<GradientProfile> {
    ensure(!offsets.is_empty(), || "no offsets given".into())?;
    let mut points = Vec::with_capacity(offsets.len());
    for &dz in offsets {
        let moved = a.with_offset(dz);
        points.push((dz, moved.gradient_zy(&moved.midpoint())?));
    }
    let &(peak_offset, g) = points
        .iter()
        .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
        .unwrap();
    Ok(GradientProfile { points, peak_offset, peak_gradient: g.abs() })
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    /// ∂B_z/∂y at the midpoint [T/m].
    pub gradient: f64,
    /// b_⊥ = gμ_B/ħ·∂B_z/∂y·d [rad/s].
    pub b_perp: f64,
    /// Field at the first site [T].
    pub site_field: Vec3,
    /// Field at the resonator point [T].
    pub resonator_field: Vec3,
    /// B_ext along y giving the target b_∥ [T].
    pub b_ext: f64,
}

/// b_∥ = gμ_B(B_y + B_ext)/ħ = `target` fixes B_ext.
pub fn required_external_field(target: f64, b_y: f64, g: f64) -> f64 {
    target * HBAR / (g * MU_B) - b_y
}

/// b_⊥ = gμ_B/ħ·gradient·d [rad/s].
pub fn transverse_coupling(gradient: f64, d: f64, g: f64) -> f64 {
    g * MU_B / HBAR * gradient * d
}

/// Coupling and field offsets for a Zeeman target `b_par` [rad/s].
pub fn coupling_and_offsets(a: &MagnetAssembly, b_par: f64, g: Option<f64>) -> Result<CouplingReport> {
    let g = g.unwrap_or(G_ELECTRON);
    let mid = a.midpoint();
    let gradient = a.gradient_zy(&mid)?;
    let d = (0..3).map(|k| (a.sites[1][k] - a.sites[0][k]).powi(2)).sum::<f64>().sqrt();
    let site_field = a.field(&a.sites[0])?;
    let resonator_field = a.field(&a.resonator_point)?;
    Ok(CouplingReport {
        gradient,
        b_perp: transverse_coupling(gradient.abs(), d, g),
        site_field,
        resonator_field,
        b_ext: required_external_field(b_par, site_field[1], g),
    })
}
