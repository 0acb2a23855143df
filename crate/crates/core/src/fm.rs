//! Frequency-modulated microwave readout, simulated on the f_mf envelope.
//!
//! The RF carrier is handled analytically through Γ at the probe frequency;
//! only the slow modulation envelope is sampled. A rectangular window over an
//! integer number of modulation periods puts every harmonic on an exact bin.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};
use crate::fit::{levenberg_marquardt, t_quantile, LmOptions};
use crate::qcap::Ensemble;
use crate::resonator::{reflection_coefficient, QualityFactors, ReadoutChain, TankCircuit};

/// f_MW(t) = f_c + f_ma cos(2π f_mf t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FmParams {
    pub carrier: f64,
    pub f_ma: f64,
    pub f_mf: f64,
}

impl FmParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.carrier.is_finite(), || "carrier must be finite".into())?;
        ensure(self.f_ma >= 0.0 && self.f_ma.is_finite(), || "f_ma must be non-negative".into())?;
        ensure(self.f_mf > 0.0 && self.f_mf.is_finite(), || "f_mf must be positive".into())
    }

    pub fn frequency_at(&self, t: f64) -> f64 {
        self.carrier + self.f_ma * (2.0 * PI * self.f_mf * t).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LzParams {
    /// 2t_c/h [Hz].
    pub two_tc: f64,
    pub f_ma: f64,
    pub f_mf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LzOutcome {
    /// Adiabaticity δ = (2t_c)²/(4 f_ma f_mf).
    pub delta: f64,
    pub p_lz: f64,
    /// Fraction of the signal that survives, 1 − P_LZ.
    pub scale: f64,
}

/// Single-passage Landau–Zener probability P_LZ = exp(−2πδ).
pub fn lz_probability(p: &LzParams) -> Result<LzOutcome> {
    ensure(p.f_ma > 0.0 && p.f_mf > 0.0, || "f_ma and f_mf must be positive".into())?;
    ensure(p.two_tc >= 0.0, || "2t_c must be non-negative".into())?;
    let delta = p.two_tc * p.two_tc / (4.0 * p.f_ma * p.f_mf);
    let p_lz = (-2.0 * PI * delta).exp();
    Ok(LzOutcome { delta, p_lz, scale: 1.0 - p_lz })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    pub lz: bool,
    /// Window length in modulation periods; must be an integer ≥ 8.
    pub cycles: f64,
    pub samples_per_period: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { lz: false, cycles: 8.0, samples_per_period: 256 }
    }
}

impl SimOptions {
    fn window(&self) -> Result<usize> {
        ensure(self.samples_per_period >= 64, || "at least 64 samples per modulation period are required".into())?;
        ensure(self.cycles >= 8.0, || "at least 8 modulation periods are required".into())?;
        if (self.cycles - self.cycles.round()).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "window of {} periods is not an integer; sidebands would leak into neighbouring bins",
                self.cycles
            )));
        }
        Ok(self.cycles.round() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumLine {
    /// Offset from f_RF [Hz].
    pub offset: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SidebandResult {
    /// Amplitude at f_RF + f_mf [V].
    pub v_s: f64,
    /// Amplitude at f_RF − f_mf [V].
    pub v_s_lower: f64,
    pub carrier_amplitude: f64,
    /// Bins within ±4 f_mf of the carrier.
    pub spectrum: Vec<SpectrumLine>,
    /// Largest off-harmonic bin relative to the sideband [dB].
    pub leakage_db: f64,
    /// Relative mismatch of time- and frequency-domain power.
    pub parseval_error: f64,
    pub lz: Option<LzOutcome>,
    pub warnings: Vec<String>,
}

/// Everything except the carrier that a sideband simulation needs.
#[derive(Debug, Clone, Copy)]
pub struct FmReadout<'e, 'd> {
    pub ensemble: &'e Ensemble<'d>,
    pub circuit: TankCircuit,
    pub quality: QualityFactors,
    pub chain: ReadoutChain,
    pub options: SimOptions,
}

/// Relative difference between Σ|x|²/N and Σ|X|² for X = FFT(x)/N.
pub fn parseval_error(time: &[C64], spectrum: &[C64]) -> f64 {
    let n = time.len() as f64;
    let pt: f64 = time.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
    let pf: f64 = spectrum.iter().map(|z| z.norm_sqr()).sum();
    if pt == 0.0 {
        pf
    } else {
        (pt - pf).abs() / pt
    }
}

/// Time-domain C_N(t) → Γ(C_t + C_N(t)) → DFT, read at ±f_mf.
pub fn simulate_sidebands(ro: &FmReadout<'_, '_>, fm: &FmParams) -> Result<SidebandResult> {
    fm.validate()?;
    ro.circuit.validate()?;
    let cycles = ro.options.window()?;
    let spp = ro.options.samples_per_period;
    if fm.f_mf > 1e-2 * ro.quality.f0 {
        return Err(Error::Regime(format!(
            "f_mf = {:e} Hz is not small against f_RF = {:e} Hz",
            fm.f_mf, ro.quality.f0
        )));
    }
    let ens = ro.ensemble;
    let mut warnings: Vec<String> = ens.coverage_warning().into_iter().collect();
    if fm.f_ma > crate::qcap::LINEAR_FMA_LIMIT {
        warnings.push(format!("f_ma = {:e} Hz is beyond the linear modulation regime", fm.f_ma));
    }

    let lz = if ro.options.lz && fm.f_ma > 0.0 {
        Some(lz_probability(&LzParams { two_tc: ens.params.two_tc, f_ma: fm.f_ma, f_mf: fm.f_mf })?)
    } else {
        None
    };
    // Bins swept through ε = 0 during a half-period keep only 1 − P_LZ.
    let (lo, hi) = (fm.carrier - fm.f_ma, fm.carrier + fm.f_ma);
    let weight = |f: f64| match lz {
        Some(o) if f >= lo && f <= hi => o.scale,
        _ => 1.0,
    };

    // One period of C_N is enough: the drive is exactly periodic.
    let ct = ro.circuit.total_capacitance();
    let scale = ro.chain.gain * ro.chain.v_rf;
    let period: Vec<C64> = (0..spp)
        .map(|k| {
            let f = fm.carrier + fm.f_ma * (2.0 * PI * k as f64 / spp as f64).cos();
            let c_n = ens.capacitance_weighted(f, weight);
            let shifted = QualityFactors { f0: ro.quality.f0 / (1.0 + c_n / ct).sqrt(), ..ro.quality };
            scale * reflection_coefficient(ro.quality.f0, &shifted)
        })
        .collect();
    let n = spp * cycles;
    let time: Vec<C64> = (0..n).map(|k| period[k % spp]).collect();

    let mut spec = time.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut spec);
    let inv = 1.0 / n as f64;
    spec.iter_mut().for_each(|z| *z *= inv);

    let bin = |k: isize| spec[k.rem_euclid(n as isize) as usize];
    let m = cycles as isize;
    let v_s = bin(m).norm();
    let v_s_lower = bin(-m).norm();
    let df = fm.f_mf / cycles as f64;
    let spectrum = (-4 * m..=4 * m)
        .map(|k| SpectrumLine { offset: k as f64 * df, amplitude: bin(k).norm() })
        .collect();
    let off_harmonic = spec
        .iter()
        .enumerate()
        .filter(|(k, _)| k % cycles != 0)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    let reference = v_s.max(v_s_lower);
    let leakage_db = if reference > 0.0 && off_harmonic > 0.0 {
        20.0 * (off_harmonic / reference).log10()
    } else {
        f64::NEG_INFINITY
    };

    Ok(SidebandResult {
        v_s,
        v_s_lower,
        carrier_amplitude: spec[0].norm(),
        spectrum,
        leakage_db,
        parseval_error: parseval_error(&time, &spec),
        lz,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub carrier: f64,
    pub v_s: f64,
    pub v_s_lower: f64,
    /// Whether V_s clears the supplied noise floor.
    pub above_noise: bool,
}

/// V_s over a list of carriers; points run in parallel.
pub fn sweep_carrier(
    ro: &FmReadout<'_, '_>,
    carriers: &[f64],
    f_ma: f64,
    f_mf: f64,
    noise_floor: Option<f64>,
) -> Result<Vec<SweepPoint>> {
    carriers
        .par_iter()
        .map(|&carrier| {
            let r = simulate_sidebands(ro, &FmParams { carrier, f_ma, f_mf })?;
            Ok(SweepPoint {
                carrier,
                v_s: r.v_s,
                v_s_lower: r.v_s_lower,
                above_noise: noise_floor.is_none_or(|v| r.v_s > v),
            })
        })
        .collect()
}

/// Amplitude-versus-f_mf data taken at one modulation amplitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LzDataset {
    pub f_ma: f64,
    pub f_mf: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LzRateFit {
    /// Shared 2t_c/h [Hz].
    pub two_tc: f64,
    pub two_tc_err: f64,
    /// Half-width of the two-sided interval at `level`.
    pub half_width: f64,
    pub level: f64,
    /// Signal without LZ loss, one per dataset [V].
    pub amplitudes: Vec<f64>,
    pub n_points: usize,
    pub residual_rms: f64,
}

impl LzRateFit {
    pub fn interval(&self) -> (f64, f64) {
        (self.two_tc - self.half_width, self.two_tc + self.half_width)
    }
}

fn lz_model(a: f64, two_tc: f64, f_ma: f64, f_mf: f64) -> f64 {
    a * (1.0 - (-2.0 * PI * two_tc * two_tc / (4.0 * f_ma * f_mf)).exp())
}

/// Fits a(1 − P_LZ) to one dataset restricted to f_mf ≤ `domain_max`.
pub fn fit_lz_rate(
    f_mf: &[f64],
    amplitudes: &[f64],
    f_ma: f64,
    domain_max: f64,
    noise_floor: Option<f64>,
) -> Result<LzRateFit> {
    let ds = LzDataset { f_ma, f_mf: f_mf.to_vec(), amplitudes: amplitudes.to_vec() };
    fit_lz_rate_joint(std::slice::from_ref(&ds), domain_max, noise_floor, 0.99)
}

/// Joint fit with one amplitude per dataset and a shared 2t_c.
pub fn fit_lz_rate_joint(
    datasets: &[LzDataset],
    domain_max: f64,
    noise_floor: Option<f64>,
    level: f64,
) -> Result<LzRateFit> {
    ensure(!datasets.is_empty(), || "no datasets".into())?;
    ensure(level > 0.0 && level < 1.0, || "confidence level must lie in (0, 1)".into())?;
    let mut pts: Vec<(usize, f64, f64, f64)> = Vec::new();
    let mut in_domain = 0;
    for (k, ds) in datasets.iter().enumerate() {
        ensure(ds.f_mf.len() == ds.amplitudes.len(), || "f_mf and amplitude lengths differ".into())?;
        ensure(ds.f_ma > 0.0, || "f_ma must be positive".into())?;
        for (&f, &a) in ds.f_mf.iter().zip(&ds.amplitudes) {
            ensure(f > 0.0 && a.is_finite(), || "f_mf must be positive and amplitudes finite".into())?;
            if f <= domain_max {
                in_domain += 1;
                if noise_floor.is_none_or(|v| a > v) {
                    pts.push((k, ds.f_ma, f, a));
                }
            }
        }
    }
    ensure(in_domain >= 4, || format!("{in_domain} points inside the fit domain; at least 4 are needed"))?;
    if pts.is_empty() {
        return Err(Error::Fit("every point in the fit domain is below the noise floor".into()));
    }
    let n_sets = datasets.len();
    if pts.len() < n_sets + 2 {
        return Err(Error::Fit(format!("only {} points above the noise floor", pts.len())));
    }
    let a_scale = pts.iter().map(|p| p.3.abs()).fold(0.0, f64::max);
    if a_scale == 0.0 {
        return Err(Error::Fit("all amplitudes are zero; the rate is undetermined".into()));
    }

    // Coarse log scan of 2t_c with the amplitudes solved in closed form.
    let amps_for = |two_tc: f64| -> (Vec<f64>, f64) {
        let mut num = vec![0.0; n_sets];
        let mut den = vec![0.0; n_sets];
        for &(k, fma, f, a) in &pts {
            let s = lz_model(1.0, two_tc, fma, f);
            num[k] += s * a;
            den[k] += s * s;
        }
        let amps: Vec<f64> = num.iter().zip(&den).map(|(n, d)| if *d > 0.0 { n / d } else { 0.0 }).collect();
        let cost = pts.iter().map(|&(k, fma, f, a)| (lz_model(amps[k], two_tc, fma, f) - a).powi(2)).sum();
        (amps, cost)
    };
    let (mut best_tc, mut best_cost) = (1e6, f64::INFINITY);
    for i in 0..=160 {
        let tc = 1e4 * 10f64.powf(i as f64 / 40.0);
        let (_, c) = amps_for(tc);
        if c < best_cost {
            best_cost = c;
            best_tc = tc;
        }
    }
    let (amps0, _) = amps_for(best_tc);

    let tc_scale = 1e6;
    let mut p0 = vec![best_tc / tc_scale];
    p0.extend(amps0.iter().map(|a| a / a_scale));
    let fit = levenberg_marquardt(
        |p| {
            Ok(pts
                .iter()
                .map(|&(k, fma, f, a)| (lz_model(p[1 + k] * a_scale, p[0] * tc_scale, fma, f) - a) / a_scale)
                .collect())
        },
        &p0,
        LmOptions { step_floor: 1e-2, ..LmOptions::default() },
    )?;
    let two_tc = fit.params[0].abs() * tc_scale;
    let amplitudes: Vec<f64> = fit.params[1..].iter().map(|a| a * a_scale).collect();
    if amplitudes.iter().all(|a| a.abs() < 1e-12 * a_scale) {
        return Err(Error::Fit("fitted amplitude vanished".into()));
    }
    let two_tc_err = fit.std_err(0) * tc_scale;
    if !two_tc_err.is_finite() {
        return Err(Error::Fit("2t_c is not constrained by the data".into()));
    }
    let half_width = t_quantile(level, fit.dof) * two_tc_err;
    Ok(LzRateFit {
        two_tc,
        two_tc_err,
        half_width,
        level,
        amplitudes,
        n_points: pts.len(),
        residual_rms: (fit.cost / pts.len() as f64).sqrt() * a_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corbino::DetuningDistribution;
    use crate::qcap::{modulation_depth, BinModel, TwoLevelDriveParams};
    use crate::resonator::{quality_factors, sideband_and_sensitivity};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    /// Asymmetric triangle of counts: steep high-frequency edge.
    fn skewed() -> DetuningDistribution {
        let w = 50e6;
        let counts: Vec<f64> = (0..120)
            .map(|i| {
                let x = i as f64;
                1e5 * if x < 80.0 { x / 80.0 } else { (119.0 - x) / 39.0 }
            })
            .collect();
        DetuningDistribution::new(157e9, w, counts).unwrap()
    }

    fn readout<'e, 'd>(ens: &'e Ensemble<'d>, lz: bool) -> FmReadout<'e, 'd> {
        let circuit = TankCircuit::helium();
        FmReadout {
            ensemble: ens,
            circuit,
            quality: quality_factors(&circuit).unwrap(),
            chain: ReadoutChain::helium(),
            options: SimOptions { lz, ..SimOptions::default() },
        }
    }

    #[test]
    fn lz_probability_with_readout_parameters() {
        let o = lz_probability(&LzParams { two_tc: 0.83e6, f_ma: 768e6, f_mf: 1e3 }).unwrap();
        let delta = 0.83e6f64.powi(2) / (4.0 * 768e6 * 1e3);
        assert!((o.delta - delta).abs() < 1e-15);
        assert!((o.delta - 0.224).abs() < 1e-3);
        assert!((o.p_lz - 0.244).abs() < 1e-3);
        assert!((o.scale + o.p_lz - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lz_limits() {
        let slow = lz_probability(&LzParams { two_tc: 0.83e6, f_ma: 768e6, f_mf: 1e-3 }).unwrap();
        assert!(slow.p_lz < 1e-100);
        let weak = lz_probability(&LzParams { two_tc: 1e-3, f_ma: 768e6, f_mf: 1e3 }).unwrap();
        assert!((weak.p_lz - 1.0).abs() < 1e-12);
        assert!(lz_probability(&LzParams { two_tc: 1e6, f_ma: 0.0, f_mf: 1e3 }).is_err());
    }

    #[test]
    fn matches_linear_analytic_sideband() {
        let dist = skewed();
        let ens = Ensemble::new(&dist, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
        let ro = readout(&ens, false);
        let f_ma = 50e6;
        for carrier in [dist.peak() + 1e9, dist.peak() - 1.2e9] {
            let sim = simulate_sidebands(&ro, &FmParams { carrier, f_ma, f_mf: 1e3 }).unwrap();
            let md = modulation_depth(&ens, carrier, f_ma).unwrap();
            let analytic = sideband_and_sensitivity(md.delta_c, &ro.quality, ro.circuit.total_capacitance(), &ro.chain);
            let rel = (sim.v_s - analytic.v_s).abs() / analytic.v_s;
            assert!(rel < 0.02, "carrier {carrier:e}: sim {} vs analytic {} ({rel})", sim.v_s, analytic.v_s);
            assert!((sim.v_s - sim.v_s_lower).abs() < 1e-6 * sim.v_s);
        }
    }

    #[test]
    fn spectrum_is_clean_and_conserves_power() {
        let dist = skewed();
        let ens = Ensemble::new(&dist, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
        let ro = readout(&ens, true);
        let r = simulate_sidebands(&ro, &FmParams { carrier: dist.peak() + 1e9, f_ma: 768e6, f_mf: 1e3 }).unwrap();
        assert!(r.leakage_db < -40.0, "leakage {} dB", r.leakage_db);
        assert!(r.parseval_error < 1e-9);
        assert_eq!(r.spectrum.len(), 8 * 8 + 1);
        assert!(r.carrier_amplitude > r.v_s);
    }

    #[test]
    fn vanishes_at_the_distribution_peak_of_a_symmetric_cloud() {
        let counts: Vec<f64> = (0..101).map(|i| 1e5 * (-((i as f64 - 50.0) / 15.0).powi(2)).exp()).collect();
        let dist = DetuningDistribution::new(160e9, 50e6, counts).unwrap();
        let ens = Ensemble::new(&dist, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
        let ro = readout(&ens, false);
        let at_peak = simulate_sidebands(&ro, &FmParams { carrier: dist.peak(), f_ma: 768e6, f_mf: 1e3 }).unwrap();
        let off = simulate_sidebands(&ro, &FmParams { carrier: dist.peak() + 1e9, f_ma: 768e6, f_mf: 1e3 }).unwrap();
        assert!(at_peak.v_s < 1e-3 * off.v_s, "{} vs {}", at_peak.v_s, off.v_s);
    }

    #[test]
    fn doubling_the_window_is_stationary() {
        let dist = skewed();
        let ens = Ensemble::new(&dist, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
        let mut ro = readout(&ens, true);
        let fm = FmParams { carrier: dist.peak() + 8e8, f_ma: 528e6, f_mf: 2e3 };
        let a = simulate_sidebands(&ro, &fm).unwrap().v_s;
        ro.options.cycles = 16.0;
        let b = simulate_sidebands(&ro, &fm).unwrap().v_s;
        assert!((a - b).abs() / a < 1e-3);
    }

    #[test]
    fn rejects_fractional_windows_and_sparse_sampling() {
        let dist = skewed();
        let ens = Ensemble::new(&dist, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
        let mut ro = readout(&ens, false);
        let fm = FmParams { carrier: dist.peak(), f_ma: 1e8, f_mf: 1e3 };
        ro.options.cycles = 8.5;
        assert!(matches!(simulate_sidebands(&ro, &fm), Err(Error::Validation(_))));
        ro.options.cycles = 8.0;
        ro.options.samples_per_period = 32;
        assert!(matches!(simulate_sidebands(&ro, &fm), Err(Error::Validation(_))));
    }

    #[test]
    fn sweep_scales_with_probe_and_density() {
        let dist = skewed();
        let ens = Ensemble::new(&dist, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
        let ro = readout(&ens, true);
        let carriers: Vec<f64> = (0..41).map(|i| dist.peak() - 2e9 + i as f64 * 1e8).collect();
        let base = sweep_carrier(&ro, &carriers, 768e6, 1e3, Some(12e-9)).unwrap();
        let max = |s: &[SweepPoint]| s.iter().map(|p| p.v_s).fold(0.0, f64::max);
        let mut ro2 = ro;
        ro2.chain.v_rf *= 3.0;
        let tripled = sweep_carrier(&ro2, &carriers, 768e6, 1e3, None).unwrap();
        assert!((max(&tripled) / max(&base) - 3.0).abs() < 1e-6);

        let thin = dist.scaled(0.55);
        let ens_thin = Ensemble::new(&thin, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
        let thin_sweep = sweep_carrier(&readout(&ens_thin, true), &carriers, 768e6, 1e3, None).unwrap();
        assert!((max(&thin_sweep) / max(&base) - 0.55).abs() < 1e-6);

        let empty = dist.scaled(0.0);
        let ens0 = Ensemble::new(&empty, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
        let flat = sweep_carrier(&readout(&ens0, true), &carriers, 768e6, 1e3, Some(12e-9)).unwrap();
        assert!(flat.iter().all(|p| p.v_s == 0.0 && !p.above_noise));
    }

    fn synthetic(two_tc: f64, f_ma: f64, a: f64, noise: f64, seed: u64) -> LzDataset {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nd = Normal::new(0.0, 1.0).unwrap();
        let f_mf: Vec<f64> = (0..16).map(|i| 250.0 * 1.35f64.powi(i)).collect();
        let amplitudes =
            f_mf.iter().map(|&f| lz_model(a, two_tc, f_ma, f) * (1.0 + noise * nd.sample(&mut rng))).collect();
        LzDataset { f_ma, f_mf, amplitudes }
    }

    #[test]
    fn lz_fit_round_trip() {
        let ds = synthetic(0.83e6, 768e6, 2e-7, 0.05, 7);
        let fit = fit_lz_rate(&ds.f_mf, &ds.amplitudes, ds.f_ma, 20e3, None).unwrap();
        let (lo, hi) = fit.interval();
        assert!(lo < 0.83e6 && 0.83e6 < hi, "{lo:e}..{hi:e}");
        assert!((fit.two_tc - 0.83e6).abs() < 0.1e6);
        assert!((fit.amplitudes[0] - 2e-7).abs() < 0.2e-7);
        assert_eq!(fit.level, 0.99);
    }

    #[test]
    fn joint_fit_shares_the_rate() {
        let sets = [synthetic(1.2e6, 528e6, 1e-7, 0.02, 1), synthetic(1.2e6, 768e6, 1.5e-7, 0.02, 2)];
        let fit = fit_lz_rate_joint(&sets, 20e3, None, 0.99).unwrap();
        let (lo, hi) = fit.interval();
        assert!(lo < 1.2e6 && 1.2e6 < hi);
        assert_eq!(fit.amplitudes.len(), 2);
        assert!(fit.amplitudes[1] > fit.amplitudes[0]);
    }

    #[test]
    fn degenerate_lz_inputs() {
        let f: Vec<f64> = (1..=6).map(|i| i as f64 * 1e3).collect();
        let zeros = vec![0.0; 6];
        assert!(matches!(fit_lz_rate(&f, &zeros, 768e6, 20e3, None), Err(Error::Fit(_))));
        let small = vec![1e-9; 6];
        assert!(matches!(fit_lz_rate(&f, &small, 768e6, 20e3, Some(12e-9)), Err(Error::Fit(_))));
        assert!(matches!(fit_lz_rate(&f, &small, 768e6, 2.5e3, None), Err(Error::Validation(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn lz_signal_never_grows_with_modulation_rate(f1 in 100.0f64..5e4, factor in 1.0f64..10.0) {
            let dist = skewed();
            let ens = Ensemble::new(&dist, TwoLevelDriveParams::helium_readout(), BinModel::Hat).unwrap();
            let ro = readout(&ens, true);
            let carrier = dist.peak() + 1e9;
            let a = simulate_sidebands(&ro, &FmParams { carrier, f_ma: 768e6, f_mf: f1 }).unwrap().v_s;
            let b = simulate_sidebands(&ro, &FmParams { carrier, f_ma: 768e6, f_mf: f1 * factor }).unwrap().v_s;
            prop_assert!(b <= a * (1.0 + 1e-12));
        }

        #[test]
        fn p_lz_is_a_probability(tc in 1e3f64..1e8, fma in 1e6f64..1e10, fmf in 1.0f64..1e6) {
            let o = lz_probability(&LzParams { two_tc: tc, f_ma: fma, f_mf: fmf }).unwrap();
            prop_assert!(o.p_lz >= 0.0 && o.p_lz <= 1.0);
        }
    }
}
