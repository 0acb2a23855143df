//! Quantum capacitance of a microwave-dressed two-level Rydberg system,
//! for a single electron and for an ensemble spread over detuning.
//!
//! Detunings are carried in Hz as ε/h = f_Ry − f_MW; joules appear only
//! inside the kernels.

use serde::Serialize;

use crate::constants::{H_PLANCK, K_B};
use crate::corbino::DetuningDistribution;
use crate::error::{ensure, Error, Result};

/// Drive and readout conditions of one dressed electron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelDriveParams {
    /// Rabi splitting 2t_c/h [Hz].
    pub two_tc: f64,
    pub temperature: f64,
    /// Charge induced on the readout electrode by one transition [C].
    pub delta_q: f64,
    /// Reflectometry probe frequency [Hz].
    pub probe_freq: f64,
    /// Population relaxation rate [1/s].
    pub relaxation_rate: f64,
}

impl TwoLevelDriveParams {
    /// 2t_c/h = 0.83 MHz, T = 160 mK, Δq = 1e-5 e, f_RF = 120.946 MHz.
    pub fn helium_readout() -> Self {
        Self {
            two_tc: 0.83e6,
            temperature: 0.160,
            delta_q: 1e-5 * crate::constants::E_CHARGE,
            probe_freq: 120.946e6,
            relaxation_rate: 1e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.two_tc > 0.0, || "2t_c must be positive".into())?;
        ensure(self.temperature > 0.0, || "temperature must be positive".into())?;
        ensure(self.delta_q > 0.0, || "Δq must be positive".into())?;
        ensure(self.probe_freq > 0.0 && self.relaxation_rate > 0.0, || {
            "probe frequency and relaxation rate must be positive".into()
        })
    }
}

/// χ = tanh(hΔE / 2k_BT), with ΔE in Hz.
pub fn population_difference(delta_e: f64, temperature: f64) -> f64 {
    (H_PLANCK * delta_e / (2.0 * K_B * temperature)).tanh()
}

/// Quantum capacitance χΔq²(2t_c)²/(2ΔE³) at detuning `eps` [Hz], with χ
/// evaluated at the local gap ΔE = √(ε² + (2t_c)²).
pub fn quantum_capacitance(eps: f64, p: &TwoLevelDriveParams) -> f64 {
    let a = p.two_tc;
    let gap = eps.hypot(a);
    let chi = population_difference(gap, p.temperature);
    chi * p.delta_q * p.delta_q * a * a / (2.0 * H_PLANCK * gap * gap * gap)
}

/// Δq²(ε/2ΔE)∂χ/∂ε, reduced by the Debye factor 1/(1 + (ω_RF/Γ)²) that
/// accounts for populations unable to follow the probe.
pub fn tunneling_capacitance(eps: f64, p: &TwoLevelDriveParams) -> f64 {
    let gap = eps.hypot(p.two_tc);
    let x = H_PLANCK * gap / (2.0 * K_B * p.temperature);
    let sech2 = 1.0 / x.cosh().powi(2);
    // ∂χ/∂ε_J = sech²(x) · ε / (2 k_B T ΔE).
    let raw = p.delta_q * p.delta_q * eps * eps * sech2 / (4.0 * K_B * p.temperature * gap * gap);
    let ratio = 2.0 * std::f64::consts::PI * p.probe_freq / p.relaxation_rate;
    raw / (1.0 + ratio * ratio)
}

/// Single-electron capacitance C_1(ε) [F].
pub fn single_electron_capacitance(eps: f64, p: &TwoLevelDriveParams, include_tunneling: bool) -> f64 {
    let c = quantum_capacitance(eps, p);
    if include_tunneling {
        c + tunneling_capacitance(eps, p)
    } else {
        c
    }
}

/// How the electrons inside a detuning bin are spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinModel {
    /// All electrons of a bin sit at its center.
    Point,
    /// The density is linear between neighboring bin centers, which for
    /// bins much wider than 2t_c avoids a comb of isolated kernels.
    Hat,
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

fn gauss8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    GL8.iter().map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
}

/// ∫ f over [a, b] with panels graded geometrically toward `peak`, whose
/// feature width is `scale`.
fn graded_integral<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, peak: f64, scale: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts = vec![a, b];
    if peak > a && peak < b {
        cuts.push(peak);
    }
    let mut d = 0.25 * scale;
    while d < (b - a) {
        for c in [peak - d, peak + d] {
            if c > a && c < b {
                cuts.push(c);
            }
        }
        d *= 2.0;
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.windows(2).map(|w| gauss8(f, w[0], w[1])).sum()
}

/// Single-electron kernel smoothed by a unit-area triangle of half-width
/// equal to the bin width, tabulated for fast ensemble sums.
#[derive(Debug, Clone)]
pub struct HatKernel {
    width: f64,
    near_step: f64,
    near: Vec<f64>,
    near_slope: Vec<f64>,
    far_step: f64,
    far: Vec<f64>,
    far_slope: Vec<f64>,
}

const NEAR_HALF_WIDTHS: f64 = 8.0;
const NEAR_POINTS_PER_WIDTH: usize = 256;
const FAR_POINTS_PER_WIDTH: usize = 8;

impl HatKernel {
    /// Tabulates the kernel for offsets up to `reach` [Hz].
    pub fn new(p: &TwoLevelDriveParams, width: f64, reach: f64, include_tunneling: bool) -> Self {
        let c1 = |x: f64| single_electron_capacitance(x, p, include_tunneling);
        let exact = |x: f64| {
            let g = |u: f64| c1(x - u) * (width - u.abs()) / (width * width);
            if x.abs() > NEAR_HALF_WIDTHS * width {
                gauss8(&g, -width, 0.0) + gauss8(&g, 0.0, width)
            } else {
                let scale = p.two_tc;
                graded_integral(&g, -width, 0.0, x, scale) + graded_integral(&g, 0.0, width, x, scale)
            }
        };
        let near_step = width / NEAR_POINTS_PER_WIDTH as f64;
        let n_near = (NEAR_HALF_WIDTHS * NEAR_POINTS_PER_WIDTH as f64) as usize + 2;
        let near: Vec<f64> = (0..=n_near).map(|k| exact(k as f64 * near_step)).collect();
        let far_step = width / FAR_POINTS_PER_WIDTH as f64;
        let n_far = ((reach.max(NEAR_HALF_WIDTHS * width) / far_step).ceil() as usize) + 4;
        let far: Vec<f64> = (0..=n_far).map(|k| exact(k as f64 * far_step)).collect();
        Self {
            width,
            near_slope: slopes(&near, near_step),
            near,
            near_step,
            far_slope: slopes(&far, far_step),
            far,
            far_step,
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Smoothed kernel at offset `x` [Hz]; zero beyond the tabulated reach.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        if x <= NEAR_HALF_WIDTHS * self.width {
            hermite(&self.near, &self.near_slope, self.near_step, x)
        } else {
            hermite(&self.far, &self.far_slope, self.far_step, x)
        }
    }
}

fn slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|k| {
            if k == 0 {
                0.0 // even function
            } else if k + 1 == n {
                (y[k] - y[k - 1]) / h
            } else {
                (y[k + 1] - y[k - 1]) / (2.0 * h)
            }
        })
        .collect()
}

fn hermite(y: &[f64], d: &[f64], h: f64, x: f64) -> f64 {
    let pos = x / h;
    let k = pos.floor() as usize;
    if k + 1 >= y.len() {
        return 0.0;
    }
    let t = pos - k as f64;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * y[k]
        + (t3 - 2.0 * t2 + t) * h * d[k]
        + (-2.0 * t3 + 3.0 * t2) * y[k + 1]
        + (t3 - t2) * h * d[k + 1]
}

/// Evaluates C_N(f_MW) = Σ_i n_i K(f_i − f_MW) for one distribution.
#[derive(Debug, Clone)]
pub struct Ensemble<'a> {
    pub dist: &'a DetuningDistribution,
    pub params: TwoLevelDriveParams,
    pub model: BinModel,
    pub include_tunneling: bool,
    kernel: Option<HatKernel>,
}

impl<'a> Ensemble<'a> {
    pub fn new(dist: &'a DetuningDistribution, params: TwoLevelDriveParams, model: BinModel) -> Result<Self> {
        params.validate()?;
        let kernel = match model {
            BinModel::Point => None,
            BinModel::Hat => {
                let (lo, hi) = dist.support();
                Some(HatKernel::new(&params, dist.bin_width, 2.0 * (hi - lo) + 20.0 * dist.bin_width, false))
            }
        };
        Ok(Self { dist, params, model, include_tunneling: false, kernel })
    }

    /// Kernel of one bin at offset `x` = f_bin − f_MW.
    pub fn kernel(&self, x: f64) -> f64 {
        match &self.kernel {
            Some(k) => k.eval(x),
            None => single_electron_capacitance(x, &self.params, self.include_tunneling),
        }
    }

    /// C_N at carrier `f_mw` [F].
    pub fn capacitance(&self, f_mw: f64) -> f64 {
        self.capacitance_weighted(f_mw, |_| 1.0)
    }

    /// C_N with each bin's contribution scaled by `weight(f_bin)`.
    pub fn capacitance_weighted<W: Fn(f64) -> f64>(&self, f_mw: f64, weight: W) -> f64 {
        let d = self.dist;
        d.counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0.0)
            .map(|(i, &n)| {
                let f = d.center(i);
                n * weight(f) * self.kernel(f - f_mw)
            })
            .sum()
    }

    /// Warns when point bins are too coarse to resolve the 2t_c kernel.
    pub fn coverage_warning(&self) -> Option<String> {
        let w = self.dist.bin_width;
        match self.model {
            BinModel::Point if w > 0.5 * self.params.two_tc && self.dist.counts.len() > 1 => Some(format!(
                "bin width {w:e} Hz exceeds half of 2t_c = {:e} Hz; use the hat model",
                self.params.two_tc
            )),
            _ => None,
        }
    }
}

/// C_N(ε0) for a carrier `f_mw` over `dist` [F].
pub fn ensemble_capacitance(
    f_mw: f64,
    dist: &DetuningDistribution,
    p: &TwoLevelDriveParams,
    model: BinModel,
) -> Result<f64> {
    Ok(Ensemble::new(dist, *p, model)?.capacitance(f_mw))
}

/// Linear frequency-modulation response around one carrier.
#[derive(Debug, Clone, Serialize)]
pub struct ModulationDepth {
    /// C_N at the carrier [F].
    pub c0: f64,
    /// Capacitance modulation amplitude δC = −h f_ma dC_N/dε [F].
    pub delta_c: f64,
    pub warnings: Vec<String>,
}

/// Modulation amplitude above which δC stops being linear in f_ma [Hz].
pub const LINEAR_FMA_LIMIT: f64 = 470e6;

/// C_0 and δC at carrier `f_mw` for modulation amplitude `f_ma`.
pub fn modulation_depth(ens: &Ensemble<'_>, f_mw: f64, f_ma: f64) -> Result<ModulationDepth> {
    ensure(f_ma >= 0.0, || "modulation amplitude must be non-negative".into())?;
    let (lo, hi) = ens.dist.support();
    if f_mw < lo || f_mw > hi {
        return Err(Error::Range(format!(
            "carrier {f_mw:e} Hz lies outside the distribution [{lo:e}, {hi:e}] Hz"
        )));
    }
    let mut warnings = Vec::new();
    if f_ma > LINEAR_FMA_LIMIT {
        warnings.push(format!("f_ma = {f_ma:e} Hz exceeds the linear regime ({LINEAR_FMA_LIMIT:e} Hz)"));
    }
    if let Some(w) = ens.coverage_warning() {
        warnings.push(w);
    }
    let h = 0.5 * ens.dist.bin_width;
    // ε = h(f_Ry − f_MW), so d/dε = −(1/h) d/df_MW and δC = f_ma dC_N/df_MW.
    let slope = (ens.capacitance(f_mw + h) - ens.capacitance(f_mw - h)) / (2.0 * h);
    Ok(ModulationDepth { c0: ens.capacitance(f_mw), delta_c: f_ma * slope, warnings })
}
