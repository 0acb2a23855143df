//! Scenario parameter sets and runners.
//!
//! Every parameter struct rejects unknown keys and carries units in its
//! field names. `Default` holds the reference values.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use fe_workbench::constants::E_CHARGE;
use fe_workbench::corbino::{
    detuning_distribution, saturated_density, BiasConfig, CorbinoGeometry, DetuningDistribution, RadialProfile,
};
use fe_workbench::fm::{fit_lz_rate_joint, lz_probability, simulate_sidebands, sweep_carrier, FmParams, FmReadout, LzDataset, LzParams, SimOptions};
use fe_workbench::magnet::{assembly_gradient_profile, block_field, coupling_and_offsets, MagnetAssembly, MagnetBlock};
use fe_workbench::neon::{
    electron_loading_response, film_properties, match_density, thickness_from_shift, ConductivityModel, CrossSection,
    FilmParams, SheetConductivityParams, SheetModel, TrapEnsemble,
};
use fe_workbench::qcap::{population_difference, quantum_capacitance, single_electron_capacitance, tunneling_capacitance};
use fe_workbench::qcap::{BinModel, Ensemble, TwoLevelDriveParams};
use fe_workbench::qubit::exchange_evolution;
use fe_workbench::resonator::{
    fit_resonance, fit_tls, quality_factors, reflection_coefficient, sideband_and_sensitivity, QualityFactors, ReadoutChain,
    ResonatorMode, ResonatorModel, TankCircuit, TlsModel,
};
use fe_workbench::rydberg::{hydrogenic_levels, solve_spectrum, stark_response, Barrier, Grid1D, StarkCurve, SurfaceParams};
use fe_workbench::spin::{couplings, effective_losses, gate_fidelities, lambda_scan, GateConfig, LossScenario, SpinChargeParams};
use fe_workbench::tdo::{diode_capacitance, power_spectrum, spectrum_parseval_error, TdoCircuit, WaveformRecord};
use fe_workbench::Error;

use crate::config::parse_params;
use crate::output::Output;
use crate::registry::Prepared;
use crate::{CliError, Result};

pub(crate) trait Scenario: Serialize + DeserializeOwned + Default + 'static {
    fn validate(&self) -> Result<()>;
    fn run(&self, out: &mut Output, seed: u64) -> Result<()>;
}

pub(crate) fn prepare<S: Scenario>(params: Option<Value>) -> Result<Prepared> {
    let s: S = match params {
        Some(v) => parse_params(v)?,
        None => S::default(),
    };
    s.validate()?;
    let params = serde_json::to_value(&s).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Prepared { params, run: Box::new(move |out, seed| s.run(out, seed)) })
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("params.{field}: must be positive, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::Config(format!("params.{field}: must be at least {min}, got {v}")))
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

/// `n` points from `lo` to `hi` inclusive, linear or logarithmic.
fn grid(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
            if log {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect()
}

// ------------------------------------------------------------- sensitivity

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensitivity {
    pub q_tot: f64,
    pub q_ext: f64,
    pub f0_hz: f64,
    pub c_t_f: f64,
    pub gain: f64,
    pub v_n_v_per_rthz: f64,
    pub bandwidth_hz: f64,
    pub v_rf_v: f64,
    /// Capacitance modulation used for the sideband amplitude.
    pub delta_c_f: f64,
}

impl Default for Sensitivity {
    fn default() -> Self {
        Self {
            q_tot: 311.0,
            q_ext: 648.0,
            f0_hz: 120.946e6,
            c_t_f: 2.446e-12,
            gain: 41.0,
            v_n_v_per_rthz: 12e-9,
            bandwidth_hz: 1.0,
            v_rf_v: 14e-6,
            delta_c_f: 8.6e-7 * 2.446e-12,
        }
    }
}

impl Scenario for Sensitivity {
    fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("q_tot", self.q_tot),
            ("f0_hz", self.f0_hz),
            ("c_t_f", self.c_t_f),
            ("gain", self.gain),
            ("v_n_v_per_rthz", self.v_n_v_per_rthz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("v_rf_v", self.v_rf_v),
            ("delta_c_f", self.delta_c_f),
        ] {
            positive(k, v)?;
        }
        require(self.q_ext > self.q_tot, || "params.q_ext: must exceed q_tot".into())
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let qf = QualityFactors::from_tot_ext(self.q_tot, self.q_ext, self.f0_hz);
        let chain =
            ReadoutChain { v_rf: self.v_rf_v, gain: self.gain, noise: self.v_n_v_per_rthz, bandwidth: self.bandwidth_hz };
        let s = sideband_and_sensitivity(self.delta_c_f, &qf, self.c_t_f, &chain);
        out.json(
            "sensitivity.json",
            &json!({
                "s_c_f_per_rthz": s.s_c,
                "s_c_af_per_rthz": s.s_c * 1e18,
                "v_s_v": s.v_s,
                "q_int": qf.q_int,
            }),
        )
    }
}

// ------------------------------------------------------------ rf-resonance

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resonance {
    pub inductance_h: f64,
    pub capacitance_f: f64,
    pub coupling_capacitance_f: f64,
    pub resistance_ohm: f64,
    pub line_impedance_ohm: f64,
    pub span_hz: f64,
    pub points: usize,
}

impl Default for Resonance {
    fn default() -> Self {
        let t = TankCircuit::helium();
        Self {
            inductance_h: t.inductance,
            capacitance_f: t.capacitance,
            coupling_capacitance_f: t.coupling_capacitance,
            resistance_ohm: t.resistance,
            line_impedance_ohm: t.line_impedance,
            span_hz: 4e6,
            points: 401,
        }
    }
}

impl Resonance {
    fn tank(&self) -> TankCircuit {
        TankCircuit {
            inductance: self.inductance_h,
            capacitance: self.capacitance_f,
            coupling_capacitance: self.coupling_capacitance_f,
            resistance: self.resistance_ohm,
            line_impedance: self.line_impedance_ohm,
        }
    }
}

impl Scenario for Resonance {
    fn validate(&self) -> Result<()> {
        positive("span_hz", self.span_hz)?;
        at_least("points", self.points, 2)?;
        Ok(self.tank().validate()?)
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let tank = self.tank();
        let qf = quality_factors(&tank)?;
        let rows: Vec<Vec<f64>> = grid(qf.f0 - self.span_hz / 2.0, qf.f0 + self.span_hz / 2.0, self.points, false)
            .into_iter()
            .map(|f| {
                let g = reflection_coefficient(f, &qf);
                vec![f, g.re, g.im, g.norm()]
            })
            .collect();
        out.csv("reflection.csv", &["f_hz", "re", "im", "abs"], &rows)?;
        out.json(
            "resonance.json",
            &json!({
                "f0_hz": qf.f0,
                "q_int": qf.q_int,
                "q_ext": qf.q_ext,
                "q_tot": qf.q_tot,
                "total_capacitance_f": tank.total_capacitance(),
            }),
        )
    }
}

// -------------------------------------------------------------------- qcap

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Population {
    pub two_tc_hz: f64,
    pub temperature_k: f64,
    /// Induced charge per transition in units of e.
    pub delta_q_e: f64,
    pub probe_freq_hz: f64,
    pub relaxation_rate_per_s: f64,
    pub detuning_span_hz: f64,
    pub points: usize,
    pub include_tunneling: bool,
}

impl Default for Population {
    fn default() -> Self {
        let p = TwoLevelDriveParams::helium_readout();
        Self {
            two_tc_hz: p.two_tc,
            temperature_k: p.temperature,
            delta_q_e: p.delta_q / E_CHARGE,
            probe_freq_hz: p.probe_freq,
            relaxation_rate_per_s: p.relaxation_rate,
            detuning_span_hz: 10e6,
            points: 401,
            include_tunneling: false,
        }
    }
}

impl Population {
    fn drive(&self) -> TwoLevelDriveParams {
        TwoLevelDriveParams {
            two_tc: self.two_tc_hz,
            temperature: self.temperature_k,
            delta_q: self.delta_q_e * E_CHARGE,
            probe_freq: self.probe_freq_hz,
            relaxation_rate: self.relaxation_rate_per_s,
        }
    }
}

impl Scenario for Population {
    fn validate(&self) -> Result<()> {
        positive("detuning_span_hz", self.detuning_span_hz)?;
        at_least("points", self.points, 2)?;
        Ok(self.drive().validate()?)
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let p = self.drive();
        let rows: Vec<Vec<f64>> = grid(-self.detuning_span_hz / 2.0, self.detuning_span_hz / 2.0, self.points, false)
            .into_iter()
            .map(|e| {
                vec![
                    e,
                    quantum_capacitance(e, &p),
                    tunneling_capacitance(e, &p),
                    single_electron_capacitance(e, &p, self.include_tunneling),
                ]
            })
            .collect();
        out.csv("capacitance.csv", &["detuning_hz", "c_quantum_f", "c_tunnel_f", "c_total_f"], &rows)?;
        out.json(
            "population.json",
            &json!({
                "chi": population_difference(self.two_tc_hz, self.temperature_k),
                "c1_at_zero_detuning_f": single_electron_capacitance(0.0, &p, self.include_tunneling),
            }),
        )
    }
}

// ----------------------------------------------------------------- lz-rate

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LzRate {
    pub two_tc_hz: f64,
    pub f_ma_hz: f64,
    /// Rate at which the single-passage probability is reported.
    pub f_mf_hz: f64,
    pub amplitude_v: f64,
    /// Relative Gaussian noise on each synthetic amplitude.
    pub noise_rel: f64,
    pub f_mf_min_hz: f64,
    pub f_mf_ratio: f64,
    pub points: usize,
    pub fit_domain_max_hz: f64,
    pub level: f64,
}

impl Default for LzRate {
    fn default() -> Self {
        Self {
            two_tc_hz: 0.83e6,
            f_ma_hz: 768e6,
            f_mf_hz: 1e3,
            amplitude_v: 2e-7,
            noise_rel: 0.05,
            f_mf_min_hz: 250.0,
            f_mf_ratio: 1.35,
            points: 16,
            fit_domain_max_hz: 20e3,
            level: 0.99,
        }
    }
}

fn lz_signal(a: f64, two_tc: f64, f_ma: f64, f_mf: f64) -> f64 {
    a * (1.0 - (-2.0 * PI * two_tc * two_tc / (4.0 * f_ma * f_mf)).exp())
}

impl Scenario for LzRate {
    fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("two_tc_hz", self.two_tc_hz),
            ("f_ma_hz", self.f_ma_hz),
            ("f_mf_hz", self.f_mf_hz),
            ("amplitude_v", self.amplitude_v),
            ("f_mf_min_hz", self.f_mf_min_hz),
            ("fit_domain_max_hz", self.fit_domain_max_hz),
        ] {
            positive(k, v)?;
        }
        require(self.noise_rel >= 0.0, || "params.noise_rel: must be non-negative".into())?;
        require(self.f_mf_ratio > 1.0, || "params.f_mf_ratio: must exceed 1".into())?;
        require(self.level > 0.0 && self.level < 1.0, || "params.level: must lie in (0, 1)".into())?;
        at_least("points", self.points, 4)
    }

    fn run(&self, out: &mut Output, seed: u64) -> Result<()> {
        let o = lz_probability(&LzParams { two_tc: self.two_tc_hz, f_ma: self.f_ma_hz, f_mf: self.f_mf_hz })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f_mf: Vec<f64> = (0..self.points).map(|i| self.f_mf_min_hz * self.f_mf_ratio.powi(i as i32)).collect();
        let amplitudes: Vec<f64> = f_mf
            .iter()
            .map(|&f| {
                let clean = lz_signal(self.amplitude_v, self.two_tc_hz, self.f_ma_hz, f);
                clean * (1.0 + self.noise_rel * rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        let ds = LzDataset { f_ma: self.f_ma_hz, f_mf: f_mf.clone(), amplitudes: amplitudes.clone() };
        let fit = fit_lz_rate_joint(std::slice::from_ref(&ds), self.fit_domain_max_hz, None, self.level)?;
        let rows: Vec<Vec<f64>> = f_mf
            .iter()
            .zip(&amplitudes)
            .map(|(&f, &a)| {
                vec![
                    f,
                    a,
                    lz_signal(fit.amplitudes[0], fit.two_tc, self.f_ma_hz, f),
                    lz_signal(self.amplitude_v, self.two_tc_hz, self.f_ma_hz, f),
                ]
            })
            .collect();
        out.csv("lz_data.csv", &["f_mf_hz", "amplitude_v", "fit_v", "truth_v"], &rows)?;
        let (lo, hi) = fit.interval();
        out.json(
            "lz.json",
            &json!({
                "p_lz": o.p_lz,
                "adiabaticity": o.delta,
                "fit": {
                    "two_tc_hz": fit.two_tc,
                    "two_tc_err_hz": fit.two_tc_err,
                    "level": fit.level,
                    "interval_hz": [lo, hi],
                    "amplitude_v": fit.amplitudes[0],
                    "covers_truth": lo < self.two_tc_hz && self.two_tc_hz < hi,
                    "points_used": fit.n_points,
                },
            }),
        )
    }
}

// ------------------------------------------------------------ corbino cell

/// Corbino cell bias, grid and Rydberg-frequency histogram settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub v_bc_v: f64,
    pub v_bg_v: f64,
    pub n_r: usize,
    pub n_z: usize,
    pub gauss_width_hz: f64,
    pub bin_width_hz: f64,
    pub stark_max_field_v_per_m: f64,
    pub stark_points: usize,
}

impl Default for Cell {
    fn default() -> Self {
        let g = CorbinoGeometry::default();
        let b = BiasConfig::helium();
        Self {
            v_bc_v: b.bottom_center,
            v_bg_v: b.bottom_guard,
            n_r: g.n_r,
            n_z: g.n_z,
            gauss_width_hz: 1e9,
            bin_width_hz: fe_workbench::corbino::DEFAULT_BIN_WIDTH,
            stark_max_field_v_per_m: 9000.0,
            stark_points: 31,
        }
    }
}

impl Cell {
    fn validate(&self) -> Result<()> {
        at_least("cell.n_r", self.n_r, 10)?;
        at_least("cell.n_z", self.n_z, 10)?;
        at_least("cell.stark_points", self.stark_points, 2)?;
        positive("cell.bin_width_hz", self.bin_width_hz)?;
        positive("cell.stark_max_field_v_per_m", self.stark_max_field_v_per_m)?;
        require(self.gauss_width_hz >= 0.0, || "params.cell.gauss_width_hz: must be non-negative".into())?;
        Ok(self.geometry().validate()?)
    }

    fn geometry(&self) -> CorbinoGeometry {
        CorbinoGeometry { n_r: self.n_r, n_z: self.n_z, ..CorbinoGeometry::default() }
    }

    fn stark(&self) -> Result<StarkCurve> {
        let fields = grid(0.0, self.stark_max_field_v_per_m, self.stark_points, false);
        Ok(stark_response(&SurfaceParams::helium(), &Grid1D { z_max: 150e-9, n_points: 1500 }, &fields)?)
    }

    fn build(&self) -> Result<(CorbinoGeometry, RadialProfile, DetuningDistribution)> {
        let geo = self.geometry();
        let profile = saturated_density(&geo, &BiasConfig::bottom(self.v_bc_v, self.v_bg_v))?;
        let dist = detuning_distribution(&profile, &geo, &self.stark()?, self.gauss_width_hz, self.bin_width_hz)?;
        Ok((geo, profile, dist))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corbino {
    pub cell: Cell,
}

impl Scenario for Corbino {
    fn validate(&self) -> Result<()> {
        self.cell.validate()
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let (geo, profile, dist) = self.cell.build()?;
        let rows: Vec<Vec<f64>> = geo
            .radii()
            .iter()
            .zip(profile.n_s.iter().zip(&profile.e_z))
            .map(|(&r, (&n, &e))| vec![r, n, e])
            .collect();
        out.csv("density.csv", &["r_m", "n_s_per_m2", "e_z_v_per_m"], &rows)?;
        let rows: Vec<Vec<f64>> = dist.centers().into_iter().zip(&dist.counts).map(|(f, &c)| vec![f, c]).collect();
        out.csv("distribution.csv", &["f_ry_hz", "electrons"], &rows)?;
        out.json(
            "corbino.json",
            &json!({
                "electrons": profile.total_electrons,
                "confinement_radius_m": profile.confinement_radius(),
                "confined": profile.confined,
                "iterations": profile.iterations,
                "distribution_peak_hz": dist.peak(),
            }),
        )
    }
}

// ----------------------------------------------------------------- fm-fig3

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FmFig3 {
    pub cell: Cell,
    pub two_tc_hz: f64,
    pub temperature_k: f64,
    pub f_ma_hz: f64,
    pub f_mf_hz: f64,
    /// Carriers cover the distribution peak ± span/2.
    pub carrier_span_hz: f64,
    pub carrier_step_hz: f64,
    pub landau_zener: bool,
    pub noise_floor_v: f64,
}

impl Default for FmFig3 {
    fn default() -> Self {
        Self {
            cell: Cell::default(),
            two_tc_hz: 0.83e6,
            temperature_k: 0.160,
            f_ma_hz: 768e6,
            f_mf_hz: 1e3,
            carrier_span_hz: 6e9,
            carrier_step_hz: 50e6,
            landau_zener: true,
            noise_floor_v: 12e-9,
        }
    }
}

impl Scenario for FmFig3 {
    fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        for (k, v) in [
            ("two_tc_hz", self.two_tc_hz),
            ("temperature_k", self.temperature_k),
            ("f_ma_hz", self.f_ma_hz),
            ("f_mf_hz", self.f_mf_hz),
            ("carrier_span_hz", self.carrier_span_hz),
            ("carrier_step_hz", self.carrier_step_hz),
        ] {
            positive(k, v)?;
        }
        require(self.noise_floor_v >= 0.0, || "params.noise_floor_v: must be non-negative".into())?;
        require(self.carrier_span_hz / self.carrier_step_hz <= 20_000.0, || {
            "params.carrier_step_hz: more than 20000 carriers requested".into()
        })
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let (_, profile, dist) = self.cell.build()?;
        let drive = TwoLevelDriveParams {
            two_tc: self.two_tc_hz,
            temperature: self.temperature_k,
            ..TwoLevelDriveParams::helium_readout()
        };
        let ens = Ensemble::new(&dist, drive, BinModel::Hat)?;
        let circuit = TankCircuit::helium();
        let ro = FmReadout {
            ensemble: &ens,
            circuit,
            quality: quality_factors(&circuit)?,
            chain: ReadoutChain::helium(),
            options: SimOptions { lz: self.landau_zener, ..SimOptions::default() },
        };
        let peak = dist.peak();
        let half = (self.carrier_span_hz / 2.0 / self.carrier_step_hz).round() as i64;
        let carriers: Vec<f64> = (-half..=half).map(|k| peak + k as f64 * self.carrier_step_hz).collect();
        let sweep = sweep_carrier(&ro, &carriers, self.f_ma_hz, self.f_mf_hz, Some(self.noise_floor_v))?;
        let rows: Vec<Vec<f64>> = sweep
            .iter()
            .map(|p| vec![p.carrier, p.carrier - peak, p.v_s, p.v_s_lower, f64::from(u8::from(p.above_noise))])
            .collect();
        out.csv("fm_sweep.csv", &["carrier_hz", "offset_hz", "v_s_v", "v_s_lower_v", "above_noise"], &rows)?;

        let lobe = |upper: bool| {
            sweep
                .iter()
                .filter(|p| (p.carrier > peak) == upper && p.carrier != peak)
                .fold(None::<(f64, f64)>, |best, p| match best {
                    Some((_, v)) if v >= p.v_s => best,
                    _ => Some((p.carrier, p.v_s)),
                })
        };
        let describe = |l: Option<(f64, f64)>| l.map(|(f, v)| json!({ "carrier_hz": f, "offset_hz": f - peak, "v_s_v": v }));
        let at_peak = sweep.iter().find(|p| p.carrier == peak).map(|p| p.v_s);
        out.json(
            "fm_summary.json",
            &json!({
                "electrons": profile.total_electrons,
                "distribution_peak_hz": peak,
                "v_s_at_peak_v": at_peak,
                "lower_lobe": describe(lobe(false)),
                "upper_lobe": describe(lobe(true)),
            }),
        )
    }
}

// ----------------------------------------------------------------- rydberg

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rydberg {
    pub states: usize,
    pub helium_z_max_m: f64,
    pub helium_grid_points: usize,
    pub neon_z_max_m: f64,
    pub neon_grid_points: usize,
    pub stark_fields_v_per_m: Vec<f64>,
}

impl Default for Rydberg {
    fn default() -> Self {
        let (he, ne) = (Grid1D::helium(), Grid1D::neon());
        Self {
            states: 4,
            helium_z_max_m: he.z_max,
            helium_grid_points: he.n_points,
            neon_z_max_m: ne.z_max,
            neon_grid_points: ne.n_points,
            stark_fields_v_per_m: grid(0.0, 9000.0, 31, false),
        }
    }
}

impl Scenario for Rydberg {
    fn validate(&self) -> Result<()> {
        at_least("states", self.states, 2)?;
        at_least("helium_grid_points", self.helium_grid_points, 100)?;
        at_least("neon_grid_points", self.neon_grid_points, 100)?;
        positive("helium_z_max_m", self.helium_z_max_m)?;
        positive("neon_z_max_m", self.neon_z_max_m)?;
        require(!self.stark_fields_v_per_m.is_empty(), || "params.stark_fields_v_per_m: empty".into())
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let he_grid = Grid1D { z_max: self.helium_z_max_m, n_points: self.helium_grid_points };
        let ne_grid = Grid1D { z_max: self.neon_z_max_m, n_points: self.neon_grid_points };
        let mut report = serde_json::Map::new();
        for (name, p, g) in [("helium", SurfaceParams::helium(), he_grid), ("neon", SurfaceParams::neon(), ne_grid)] {
            let s = solve_spectrum(&p, &g, self.states)?;
            let hard = solve_spectrum(&SurfaceParams { z0: 1e-13, barrier: Barrier::Infinite, ..p }, &g, self.states)?;
            let hydrogenic: Vec<f64> =
                (1..=self.states).map(|n| hydrogenic_levels(p.lambda(), n)).collect::<fe_workbench::Result<_>>()?;
            report.insert(
                name.into(),
                json!({
                    "levels_hz": s.levels,
                    "mean_heights_m": s.mean_heights,
                    "f12_hz": s.f12,
                    "z12_m": s.z12,
                    "hard_wall_levels_hz": hard.levels,
                    "hydrogenic_levels_hz": hydrogenic,
                }),
            );
        }
        let stark = stark_response(&SurfaceParams::helium(), &he_grid, &self.stark_fields_v_per_m)?;
        let rows: Vec<Vec<f64>> = stark.fields.iter().zip(&stark.f12).map(|(&e, &f)| vec![e, f]).collect();
        out.csv("stark_helium.csv", &["field_v_per_m", "f12_hz"], &rows)?;
        out.json("rydberg.json", &Value::Object(report))
    }
}

// -------------------------------------------------------------- neon-chain

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeonChain {
    pub penetration_depth_m: f64,
    pub film_thickness_m: f64,
    pub length_m: f64,
    pub width_m: f64,
    pub gap_m: f64,
    pub f_r_hz: f64,
    pub lever_arm: f64,
    pub detuning_hz: f64,
    pub two_tc_hz: f64,
    pub b_par_hz: f64,
    pub b_perp_hz: f64,
    /// eV0/h fed to the coupling; null takes the value derived from the film.
    pub ev0_h_hz: Option<f64>,
}

impl Default for NeonChain {
    fn default() -> Self {
        let f = FilmParams::default();
        let q = SpinChargeParams::neon_example();
        Self {
            penetration_depth_m: f.penetration_depth,
            film_thickness_m: f.thickness,
            length_m: 1.45e-3,
            width_m: 100e-9,
            gap_m: 100e-9,
            f_r_hz: 4.81e9,
            lever_arm: q.lever_arm,
            detuning_hz: q.detuning_hz,
            two_tc_hz: q.two_tc_hz,
            b_par_hz: q.b_par_hz,
            b_perp_hz: q.b_perp_hz,
            ev0_h_hz: Some(q.ev0_h_hz),
        }
    }
}

impl NeonChain {
    fn film(&self) -> FilmParams {
        FilmParams { penetration_depth: self.penetration_depth_m, thickness: self.film_thickness_m }
    }

    fn qubit(&self, ev0_h_hz: f64) -> SpinChargeParams {
        SpinChargeParams {
            detuning_hz: self.detuning_hz,
            two_tc_hz: self.two_tc_hz,
            b_par_hz: self.b_par_hz,
            b_perp_hz: self.b_perp_hz,
            lever_arm: self.lever_arm,
            ev0_h_hz,
            f_r_hz: self.f_r_hz,
        }
    }
}

impl Scenario for NeonChain {
    fn validate(&self) -> Result<()> {
        positive("penetration_depth_m", self.penetration_depth_m)?;
        positive("film_thickness_m", self.film_thickness_m)?;
        positive("length_m", self.length_m)?;
        positive("width_m", self.width_m)?;
        positive("f_r_hz", self.f_r_hz)?;
        if let Some(v) = self.ev0_h_hz {
            positive("ev0_h_hz", v)?;
        }
        Ok(self.qubit(self.ev0_h_hz.unwrap_or(1.0)).validate()?)
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let film = self.film();
        let r = film_properties(&film, self.length_m, self.width_m, self.gap_m, self.f_r_hz)?;
        let used = self.ev0_h_hz.unwrap_or_else(|| r.v0_frequency());
        let c = couplings(&self.qubit(used))?;
        out.json(
            "neon_chain.json",
            &json!({
                "sheet_inductance_h": film.sheet_inductance(),
                "inductance_h": r.l_kin,
                "z0_ohm": r.z0,
                "v0_v": r.v0,
                "ev0_h_hz_derived": r.v0_frequency(),
                "ev0_h_hz_used": used,
                "g_c_hz": c.g_c_hz,
                "lambda": c.lambda,
                "g_s_hz": c.g_s_hz,
                "theta_rad": c.theta,
                "phi_plus_rad": c.phi_plus,
                "phi_minus_rad": c.phi_minus,
            }),
        )
    }
}

// -------------------------------------------------------------- spin-gates

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaScanCfg {
    pub gamma_c_hz: f64,
    pub gamma_s_hz: f64,
    pub kappa_hz: f64,
    pub b_perp_max_hz: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinGates {
    pub detuning_hz: f64,
    pub two_tc_hz: f64,
    pub b_par_hz: f64,
    pub b_perp_hz: f64,
    pub lever_arm: f64,
    pub ev0_h_hz: f64,
    pub f_r_hz: f64,
    /// γ_c is chosen so that Λ²γ_c equals this spin rate.
    pub gamma_s_target_hz: f64,
    pub kappa_hz: f64,
    pub f_rabi_c_hz: f64,
    pub delta_hz: f64,
    pub beta: f64,
    pub scan: LambdaScanCfg,
}

impl Default for SpinGates {
    fn default() -> Self {
        let q = SpinChargeParams::neon_example();
        let g = GateConfig::default();
        let n = LossScenario::natural_neon_in_text();
        Self {
            detuning_hz: q.detuning_hz,
            two_tc_hz: q.two_tc_hz,
            b_par_hz: q.b_par_hz,
            b_perp_hz: q.b_perp_hz,
            lever_arm: q.lever_arm,
            ev0_h_hz: q.ev0_h_hz,
            f_r_hz: q.f_r_hz,
            gamma_s_target_hz: 7e3,
            kappa_hz: 0.1e6,
            f_rabi_c_hz: g.f_rabi_c_hz,
            delta_hz: g.delta_hz,
            beta: g.beta,
            scan: LambdaScanCfg {
                gamma_c_hz: n.gamma_c_hz,
                gamma_s_hz: n.gamma_s_hz,
                kappa_hz: n.kappa_hz,
                b_perp_max_hz: 20e9,
                points: 200,
            },
        }
    }
}

impl SpinGates {
    fn qubit(&self) -> SpinChargeParams {
        SpinChargeParams {
            detuning_hz: self.detuning_hz,
            two_tc_hz: self.two_tc_hz,
            b_par_hz: self.b_par_hz,
            b_perp_hz: self.b_perp_hz,
            lever_arm: self.lever_arm,
            ev0_h_hz: self.ev0_h_hz,
            f_r_hz: self.f_r_hz,
        }
    }

    fn gate(&self) -> GateConfig {
        GateConfig { f_rabi_c_hz: self.f_rabi_c_hz, delta_hz: self.delta_hz, beta: self.beta }
    }
}

impl Scenario for SpinGates {
    fn validate(&self) -> Result<()> {
        self.qubit().validate()?;
        positive("gamma_s_target_hz", self.gamma_s_target_hz)?;
        positive("f_rabi_c_hz", self.f_rabi_c_hz)?;
        require(self.kappa_hz >= 0.0, || "params.kappa_hz: must be non-negative".into())?;
        require(self.beta > 1.0, || "params.beta: must exceed 1".into())?;
        positive("scan.b_perp_max_hz", self.scan.b_perp_max_hz)?;
        at_least("scan.points", self.scan.points, 3)
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let q = self.qubit();
        let c = couplings(&q)?;
        let scenario = LossScenario { kappa_hz: self.kappa_hz, ..LossScenario::back_solved(c.lambda, self.gamma_s_target_hz)? };
        let l = effective_losses(&q, &scenario)?;
        let f = gate_fidelities(&q, &scenario, &self.gate())?;
        let scan_losses = LossScenario {
            label: "scan".into(),
            gamma_c_hz: self.scan.gamma_c_hz,
            gamma_s_hz: self.scan.gamma_s_hz,
            gamma_c_star: 0.0,
            gamma_s_star: 0.0,
            kappa_hz: self.scan.kappa_hz,
        };
        let b: Vec<f64> = (1..=self.scan.points).map(|k| self.scan.b_perp_max_hz * k as f64 / self.scan.points as f64).collect();
        let scan = lambda_scan(&q, &scan_losses, &self.gate(), &b)?;
        let rows: Vec<Vec<f64>> = scan.iter().map(|p| vec![p.b_perp_hz, p.lambda, p.g_s_hz, p.f1_avg, p.f2]).collect();
        out.csv("lambda_scan.csv", &["b_perp_hz", "lambda", "g_s_hz", "f1_avg", "f2"], &rows)?;
        out.json(
            "spin.json",
            &json!({
                "g_c_hz": c.g_c_hz,
                "lambda": c.lambda,
                "g_s_hz": c.g_s_hz,
                "gamma_c_hz": scenario.gamma_c_hz,
                "gamma_s_eff_hz": l.gamma_s_hz,
                "gamma_s_star_eff_per_s": l.gamma_s_star,
                "kappa_eff_hz": l.kappa_hz,
                "cooperativity": l.cooperativity,
                "t_gate_s": f.t_gate,
                "f1": f.f1,
                "f1_avg": f.f1_avg,
                "f2": f.f2,
            }),
        )
    }
}

// ----------------------------------------------------------------- neon-em

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inversion {
    pub preset: String,
    /// Fractional frequency shift attributed to neon alone.
    pub shift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeonLoading {
    pub preset: String,
    pub neon_thickness_m: f64,
    pub layer_height_m: f64,
    pub f_hz: f64,
    pub scattering_time_s: f64,
    pub target_shift: f64,
    pub trap_temperature_k: f64,
    pub trap_freq_max_hz: f64,
    pub trap_points: usize,
    pub density_min_per_m2: f64,
    pub density_max_per_m2: f64,
    pub density_points: usize,
    pub inversions: Vec<Inversion>,
    pub inversion_max_thickness_m: f64,
}

impl Default for NeonLoading {
    fn default() -> Self {
        let t = TrapEnsemble::default();
        Self {
            preset: "resonator2".into(),
            neon_thickness_m: 270e-9,
            layer_height_m: 2.5e-9,
            f_hz: 5.91e9,
            scattering_time_s: 1.9e-12,
            target_shift: -0.009,
            trap_temperature_k: t.temperature,
            trap_freq_max_hz: t.omega_a_max / (2.0 * PI),
            trap_points: t.points,
            density_min_per_m2: 1e12,
            density_max_per_m2: 1e16,
            density_points: 33,
            inversions: vec![
                Inversion { preset: "resonator1".into(), shift: -0.0094 },
                Inversion { preset: "resonator2".into(), shift: -0.0086 },
            ],
            inversion_max_thickness_m: 1e-6,
        }
    }
}

impl Scenario for NeonLoading {
    fn validate(&self) -> Result<()> {
        CrossSection::preset(&self.preset)?;
        for inv in &self.inversions {
            CrossSection::preset(&inv.preset)?;
            require(inv.shift < 0.0, || format!("params.inversions: shift {} must be negative", inv.shift))?;
        }
        positive("neon_thickness_m", self.neon_thickness_m)?;
        positive("f_hz", self.f_hz)?;
        positive("scattering_time_s", self.scattering_time_s)?;
        positive("trap_temperature_k", self.trap_temperature_k)?;
        positive("trap_freq_max_hz", self.trap_freq_max_hz)?;
        positive("density_min_per_m2", self.density_min_per_m2)?;
        positive("inversion_max_thickness_m", self.inversion_max_thickness_m)?;
        require(self.layer_height_m >= 0.0, || "params.layer_height_m: must be non-negative".into())?;
        require(self.target_shift < 0.0, || "params.target_shift: must be negative".into())?;
        require(self.density_max_per_m2 > self.density_min_per_m2, || {
            "params.density_max_per_m2: must exceed density_min_per_m2".into()
        })?;
        at_least("trap_points", self.trap_points, 2)?;
        at_least("density_points", self.density_points, 2)
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let omega = 2.0 * PI * self.f_hz;
        let cs = CrossSection::preset(&self.preset)?.with_neon(self.neon_thickness_m);
        let sheet = SheetModel::build(&cs, self.layer_height_m)?;
        let tpl = SheetConductivityParams { layer_height: self.layer_height_m, ..SheetConductivityParams::new(1e12, self.scattering_time_s) };
        let thermal = ConductivityModel::Thermal(TrapEnsemble {
            omega_a_max: 2.0 * PI * self.trap_freq_max_hz,
            temperature: self.trap_temperature_k,
            points: self.trap_points,
        });
        let (n_d, d) = match_density(&sheet, &tpl, omega, &ConductivityModel::Drude, self.target_shift)?;
        let (n_t, t) = match_density(&sheet, &tpl, omega, &thermal, self.target_shift)?;

        let mut rows = Vec::with_capacity(self.density_points);
        for n in grid(self.density_min_per_m2, self.density_max_per_m2, self.density_points, true) {
            let p = SheetConductivityParams { density: n, ..tpl };
            let a = electron_loading_response(&sheet, &p, omega, &ConductivityModel::Drude)?;
            let b = electron_loading_response(&sheet, &p, omega, &thermal)?;
            rows.push(vec![n, a.delta_f, a.inv_q_e, b.delta_f, b.inv_q_e]);
        }
        out.csv(
            "loading_sweep.csv",
            &["n_e_per_m2", "drude_delta_f", "drude_inv_q_e", "thermal_delta_f", "thermal_inv_q_e"],
            &rows,
        )?;

        let inversions: Vec<Value> = self
            .inversions
            .iter()
            .map(|inv| {
                let bare = CrossSection::preset(&inv.preset)?;
                Ok(match thickness_from_shift(&bare, inv.shift, self.inversion_max_thickness_m) {
                    Ok(th) => json!({ "preset": inv.preset, "shift": inv.shift, "thickness_m": th }),
                    Err(Error::Range(m)) => json!({ "preset": inv.preset, "shift": inv.shift, "thickness_m": null, "note": m }),
                    Err(e) => return Err(e.into()),
                })
            })
            .collect::<Result<_>>()?;
        out.json(
            "loading.json",
            &json!({
                "target_shift": self.target_shift,
                "drude": { "n_e_per_m2": n_d, "inv_q_e": d.inv_q_e, "warnings": d.warnings },
                "thermal": { "n_e_per_m2": n_t, "inv_q_e": t.inv_q_e, "warnings": t.warnings },
                "drude_to_thermal_loss_ratio": d.inv_q_e / t.inv_q_e,
                "inversions": inversions,
            }),
        )
    }
}

// ------------------------------------------------------------------ magnet

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Magnet {
    pub thickness_m: f64,
    pub gap_m: f64,
    /// Distance between the two electron sites.
    pub site_distance_m: f64,
    pub offset_min_m: f64,
    pub offset_max_m: f64,
    pub offset_step_m: f64,
    /// Target Zeeman splitting b_∥/2π.
    pub zeeman_target_hz: f64,
    pub g_factor: f64,
}

impl Default for Magnet {
    fn default() -> Self {
        Self {
            thickness_m: 65e-9,
            gap_m: 500e-9,
            site_distance_m: 100e-9,
            offset_min_m: 1e-9,
            offset_max_m: 400e-9,
            offset_step_m: 1e-9,
            zeeman_target_hz: 4.8e9,
            g_factor: fe_workbench::constants::G_ELECTRON,
        }
    }
}

impl Scenario for Magnet {
    fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("thickness_m", self.thickness_m),
            ("gap_m", self.gap_m),
            ("site_distance_m", self.site_distance_m),
            ("offset_min_m", self.offset_min_m),
            ("offset_step_m", self.offset_step_m),
            ("zeeman_target_hz", self.zeeman_target_hz),
            ("g_factor", self.g_factor),
        ] {
            positive(k, v)?;
        }
        require(self.offset_max_m > self.offset_min_m, || "params.offset_max_m: must exceed offset_min_m".into())?;
        require((self.offset_max_m - self.offset_min_m) / self.offset_step_m <= 100_000.0, || {
            "params.offset_step_m: more than 100000 offsets requested".into()
        })
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let n = ((self.offset_max_m - self.offset_min_m) / self.offset_step_m).round() as usize + 1;
        let offsets: Vec<f64> = (0..n).map(|k| self.offset_min_m + k as f64 * self.offset_step_m).collect();
        let pair = |dz| MagnetAssembly::pair(self.thickness_m, self.gap_m, dz, self.site_distance_m);
        let prof = assembly_gradient_profile(&pair(self.offset_min_m), &offsets)?;
        let rows: Vec<Vec<f64>> = prof.points.iter().map(|&(dz, g)| vec![dz, g]).collect();
        out.csv("gradient_profile.csv", &["dz_m", "dbz_dy_t_per_m"], &rows)?;
        let rep = coupling_and_offsets(&pair(prof.peak_offset), 2.0 * PI * self.zeeman_target_hz, Some(self.g_factor))?;
        out.json(
            "magnet.json",
            &json!({
                "peak_offset_m": prof.peak_offset,
                "peak_gradient_t_per_m": prof.peak_gradient,
                "b_perp_hz": rep.b_perp / (2.0 * PI),
                "site_field_t": rep.site_field,
                "resonator_field_t": rep.resonator_field,
                "b_ext_t": rep.b_ext,
            }),
        )
    }
}

// --------------------------------------------------------------------- tdo

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tdo {
    pub inductance_h: f64,
    pub c0_f: f64,
    pub v_d_v: f64,
    pub circuit_capacitance_f: f64,
    pub v_td_v: Vec<f64>,
    pub tone_hz: f64,
    pub tone_amplitude_v: f64,
    pub sample_rate_hz: f64,
    pub samples: usize,
    pub zero_pad_to: usize,
}

impl Default for Tdo {
    fn default() -> Self {
        let c = TdoCircuit::default();
        Self {
            inductance_h: c.inductance,
            c0_f: c.c0,
            v_d_v: c.v_d,
            circuit_capacitance_f: 5.8e-12,
            v_td_v: vec![0.0, 0.04, 0.08, 0.12, 0.16, 0.18, 0.2, 0.24],
            tone_hz: 141e6,
            tone_amplitude_v: 15e-3,
            sample_rate_hz: 1e9,
            samples: 1000,
            zero_pad_to: 8000,
        }
    }
}

impl Scenario for Tdo {
    fn validate(&self) -> Result<()> {
        for (k, v) in [
            ("inductance_h", self.inductance_h),
            ("c0_f", self.c0_f),
            ("v_d_v", self.v_d_v),
            ("circuit_capacitance_f", self.circuit_capacitance_f),
            ("tone_amplitude_v", self.tone_amplitude_v),
            ("sample_rate_hz", self.sample_rate_hz),
        ] {
            positive(k, v)?;
        }
        require(self.v_td_v.iter().all(|&v| v < self.v_d_v), || "params.v_td_v: every bias must stay below v_d_v".into())?;
        require(self.tone_hz > 0.0 && self.tone_hz < self.sample_rate_hz / 2.0, || {
            "params.tone_hz: must lie between 0 and the Nyquist frequency".into()
        })?;
        at_least("samples", self.samples, 16)
    }

    fn run(&self, out: &mut Output, _seed: u64) -> Result<()> {
        let circuit = TdoCircuit { inductance: self.inductance_h, c0: self.c0_f, v_d: self.v_d_v, ..TdoCircuit::default() };
        let mut rows = Vec::with_capacity(self.v_td_v.len());
        for &v in &self.v_td_v {
            let c = diode_capacitance(v, self.c0_f, self.v_d_v)?;
            rows.push(vec![v, c, circuit.frequency_with(self.circuit_capacitance_f, v)?]);
        }
        out.csv("tdo_frequency.csv", &["v_td_v", "c_td_f", "f_hz"], &rows)?;
        let w = WaveformRecord::sine(self.tone_hz, self.tone_amplitude_v, self.sample_rate_hz, self.samples, 0.0);
        let spec = power_spectrum(&w, self.zero_pad_to)?;
        let rows: Vec<Vec<f64>> = spec.freqs.iter().zip(&spec.dbm).map(|(&f, &p)| vec![f, p]).collect();
        out.csv("spectrum.csv", &["f_hz", "dbm"], &rows)?;
        let (f_peak, dbm_peak) = spec.peak();
        out.json(
            "tdo.json",
            &json!({
                "frequency_at_bias": rows_to_pairs(&self.v_td_v, &circuit, self.circuit_capacitance_f)?,
                "spectrum_peak_hz": f_peak,
                "spectrum_peak_dbm": dbm_peak,
                "parseval_error": spectrum_parseval_error(&w, self.zero_pad_to)?,
            }),
        )
    }
}

fn rows_to_pairs(v_td: &[f64], circuit: &TdoCircuit, c: f64) -> Result<Vec<Value>> {
    v_td.iter()
        .map(|&v| {
            Ok(json!({
                "v_td_v": v,
                "c_td_f": diode_capacitance(v, circuit.c0, circuit.v_d)?,
                "f_hz": circuit.frequency_with(c, v)?,
            }))
        })
        .collect()
}

// -------------------------------------------------------------------- fits

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsCfg {
    pub q_tls0_over_f: f64,
    pub n_sat_photons: f64,
    pub beta: f64,
    pub q_other: f64,
    pub points: usize,
    pub n_min_photons: f64,
    pub n_max_photons: f64,
    /// Relative noise at one photon; falls as 1/√(1 + n).
    pub noise_rel: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fits {
    pub f0_hz: f64,
    pub q_tot: f64,
    pub q_ext: f64,
    pub points: usize,
    pub span_linewidths: f64,
    /// Complex Gaussian noise per quadrature.
    pub noise: f64,
    pub tls: TlsCfg,
}

impl Default for Fits {
    fn default() -> Self {
        Self {
            f0_hz: 120.946e6,
            q_tot: 311.0,
            q_ext: 648.0,
            points: 401,
            span_linewidths: 10.0,
            noise: 0.02,
            tls: TlsCfg {
                q_tls0_over_f: 6.64e4,
                n_sat_photons: 3.0e2,
                beta: 0.377,
                q_other: 1e7,
                points: 30,
                n_min_photons: 0.1,
                n_max_photons: 1e6,
                noise_rel: 0.02,
            },
        }
    }
}

impl Scenario for Fits {
    fn validate(&self) -> Result<()> {
        positive("f0_hz", self.f0_hz)?;
        positive("q_tot", self.q_tot)?;
        positive("span_linewidths", self.span_linewidths)?;
        require(self.q_ext > self.q_tot, || "params.q_ext: must exceed q_tot".into())?;
        require(self.noise >= 0.0, || "params.noise: must be non-negative".into())?;
        at_least("points", self.points, 50)?;
        let t = &self.tls;
        for (k, v) in [
            ("tls.q_tls0_over_f", t.q_tls0_over_f),
            ("tls.n_sat_photons", t.n_sat_photons),
            ("tls.beta", t.beta),
            ("tls.q_other", t.q_other),
            ("tls.n_min_photons", t.n_min_photons),
        ] {
            positive(k, v)?;
        }
        require(t.n_max_photons >= 100.0 * t.n_min_photons, || "params.tls.n_max_photons: needs two decades".into())?;
        require(t.noise_rel >= 0.0, || "params.tls.noise_rel: must be non-negative".into())?;
        at_least("tls.points", t.points, 6)
    }

    fn run(&self, out: &mut Output, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qf = QualityFactors::from_tot_ext(self.q_tot, self.q_ext, self.f0_hz);
        let truth = ResonatorModel::ideal(ResonatorMode::Reflection, qf.f0, qf.q_int, qf.q_ext);
        let half = self.span_linewidths * self.f0_hz / self.q_tot / 2.0;
        let freqs = grid(self.f0_hz - half, self.f0_hz + half, self.points, false);
        let data: Vec<C64> = freqs
            .iter()
            .map(|&f| truth.eval(f) + C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * self.noise)
            .collect();
        let fit = fit_resonance(&freqs, &data, ResonatorMode::Reflection)?;
        let rows: Vec<Vec<f64>> = freqs
            .iter()
            .zip(&data)
            .map(|(&f, z)| {
                let m = fit.model.eval(f);
                vec![f, z.re, z.im, m.re, m.im]
            })
            .collect();
        out.csv("resonance_data.csv", &["f_hz", "re", "im", "fit_re", "fit_im"], &rows)?;

        let t = &self.tls;
        let model =
            TlsModel { q_tls0_over_f: t.q_tls0_over_f, n_sat: t.n_sat_photons, beta: t.beta, q_other: t.q_other };
        let n = grid(t.n_min_photons, t.n_max_photons, t.points, true);
        let weights: Vec<f64> = n.iter().map(|x| (1.0 + x).sqrt()).collect();
        let q: Vec<f64> = n
            .iter()
            .zip(&weights)
            .map(|(&x, s)| model.q_int(x) * (1.0 + t.noise_rel / s * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let tls = fit_tls(&n, &q, &weights, 0.95)?;
        let rows: Vec<Vec<f64>> = n.iter().zip(&q).map(|(&x, &qi)| vec![x, qi, tls.model.q_int(x)]).collect();
        out.csv("tls_data.csv", &["n_photons", "q_int", "q_int_fit"], &rows)?;

        let rel = |a: f64, b: f64| a / b - 1.0;
        out.json(
            "fits.json",
            &json!({
                "resonance": {
                    "f0_hz": fit.f0, "q_tot": fit.q_tot, "q_ext": fit.q_ext, "q_int": fit.q_int,
                    "rel_error": { "q_tot": rel(fit.q_tot, qf.q_tot), "q_ext": rel(fit.q_ext, qf.q_ext), "q_int": rel(fit.q_int, qf.q_int) },
                    "snr": fit.snr,
                    "warnings": fit.warnings,
                },
                "tls": {
                    "q_tls0_over_f": tls.model.q_tls0_over_f,
                    "n_sat_photons": tls.model.n_sat,
                    "beta": tls.model.beta,
                    "q_other": tls.model.q_other,
                    "q_other_identifiable": tls.q_other_identifiable,
                    "intervals_95": tls.intervals,
                    "rel_error": {
                        "q_tls0_over_f": rel(tls.model.q_tls0_over_f, t.q_tls0_over_f),
                        "n_sat_photons": rel(tls.model.n_sat, t.n_sat_photons),
                        "beta": rel(tls.model.beta, t.beta),
                    },
                },
            }),
        )
    }
}

// -------------------------------------------------------------- properties

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Properties {
    /// Random draws per invariant.
    pub samples: usize,
}

impl Default for Properties {
    fn default() -> Self {
        Self { samples: 50 }
    }
}

impl Scenario for Properties {
    fn validate(&self) -> Result<()> {
        at_least("samples", self.samples, 1)
    }

    fn run(&self, out: &mut Output, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checks: Vec<(&str, f64, f64)> = Vec::new();

        let unitarity = (0..self.samples)
            .map(|_| {
                let u = exchange_evolution(1e6, rng.gen_range(0.0..2e-5))?;
                Ok((u.adjoint() * u - Matrix4::identity()).norm())
            })
            .collect::<fe_workbench::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(("exchange unitarity |U^H U - 1|", unitarity, 1e-10));

        let g = Grid1D::helium();
        let s = solve_spectrum(&SurfaceParams::helium(), &g, 3)?;
        let norm = s
            .wavefunctions
            .iter()
            .map(|psi| (psi.iter().map(|v| v * v).sum::<f64>() * g.spacing() - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(("wavefunction normalization", norm, 1e-8));
        let fine = solve_spectrum(&SurfaceParams::helium(), &Grid1D { n_points: 2 * g.n_points, ..g }, 2)?;
        checks.push(("f12 change under grid refinement", (s.f12 / fine.f12 - 1.0).abs(), 2e-3));

        let block = MagnetBlock::cobalt(100e-9, [0.0, 0.0, -150e-9]);
        let h = 2e-9;
        let mut div_worst = 0.0f64;
        for _ in 0..self.samples {
            let p = [rng.gen_range(-0.6e-6..0.6e-6), rng.gen_range(-0.6e-6..0.6e-6), rng.gen_range(-0.05e-6..0.2e-6)];
            let (mut div, mut scale) = (0.0, 0.0f64);
            for k in 0..3 {
                let at = |d: f64| -> fe_workbench::Result<f64> {
                    let mut q = p;
                    q[k] += d;
                    Ok(block_field(&block, &q)?[k])
                };
                let dk = (at(-2.0 * h)? - 8.0 * at(-h)? + 8.0 * at(h)? - at(2.0 * h)?) / (12.0 * h);
                div += dk;
                scale = scale.max(dk.abs());
            }
            div_worst = div_worst.max(div.abs() / scale);
        }
        checks.push(("magnet divergence |div B| / max |dB_k/dx_k|", div_worst, 1e-4));

        let mut parseval = 0.0f64;
        for _ in 0..self.samples.min(20) {
            let w = WaveformRecord::sine(rng.gen_range(1e6..4e8), 15e-3, 1e9, 1000, rng.gen_range(0.0..6.0));
            parseval = parseval.max(spectrum_parseval_error(&w, 4096)?);
        }
        checks.push(("TDO spectrum Parseval error", parseval, 1e-9));

        let counts: Vec<f64> = (0..80).map(|i| 1e5 * (1.0 + (i as f64 * 0.1).sin())).collect();
        let dist = DetuningDistribution::new(159e9, 50e6, counts)?;
        let ens = Ensemble::new(&dist, TwoLevelDriveParams::helium_readout(), BinModel::Hat)?;
        let circuit = TankCircuit::helium();
        let ro = FmReadout {
            ensemble: &ens,
            circuit,
            quality: quality_factors(&circuit)?,
            chain: ReadoutChain::helium(),
            options: SimOptions::default(),
        };
        let sim = simulate_sidebands(&ro, &FmParams { carrier: 160e9, f_ma: 768e6, f_mf: 1e3 })?;
        checks.push(("FM sideband Parseval error", sim.parseval_error, 1e-9));

        let tdo = TdoCircuit::default();
        let f: Vec<f64> = [0.0, 0.1, 0.2, 0.3].iter().map(|&v| tdo.oscillation_frequency(v, 0.0)).collect::<fe_workbench::Result<_>>()?;
        let rises = f.windows(2).filter(|w| w[1] >= w[0]).count();
        checks.push(("TDO frequency increases with diode bias (count)", rises as f64, 0.0));

        let report: Vec<Value> = checks
            .iter()
            .map(|&(name, value, limit)| json!({ "name": name, "value": value, "limit": limit, "pass": value <= limit }))
            .collect();
        out.json("properties.json", &json!({ "seed": seed, "checks": report }))?;
        let failed: Vec<&str> = checks.iter().filter(|c| c.1 > c.2).map(|c| c.0).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::Numeric(format!("invariants violated: {}", failed.join(", "))).into())
        }
    }
}
