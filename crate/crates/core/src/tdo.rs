//! Tunnel-diode oscillator: bias-dependent capacitances, the LC oscillation
//! frequency, capacitance fits, negative-resistance detection and the
//! waveform pipeline (bandpass, Hilbert envelope, zero-padded spectra).

use rustfft::{num_complex::Complex64 as C64, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};
use crate::fit::{levenberg_marquardt, t_quantile, LmOptions};
use crate::interp::Pchip;

/// Power floor reported for empty bins [dBm].
pub const DBM_FLOOR: f64 = -300.0;

/// C_TD = C0(1 − V_TD/V_d)^(−1/2).
pub fn diode_capacitance(v_td: f64, c0: f64, v_d: f64) -> Result<f64> {
    if v_td >= v_d {
        return Err(Error::Domain(format!("V_TD = {v_td} V at or beyond the diffusion potential {v_d} V")));
    }
    Ok(c0 / (1.0 - v_td / v_d).sqrt())
}

/// f = 1/(2π√(L·C_total)).
pub fn lc_frequency(l: f64, c_total: f64) -> f64 {
    1.0 / (2.0 * PI * (l * c_total).sqrt())
}

/// Circuit capacitance C(V_VD) through anchor points, monotone cubic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Varactor {
    /// (V_VD [V], C [F]) with increasing voltage.
    pub anchors: Vec<(f64, f64)>,
}

impl Varactor {
    /// 7.9 / 5.8 / 5.3 pF at −1.5 / 0 / 5 V (11 mK).
    pub fn measured() -> Self {
        Self { anchors: vec![(-1.5, 7.9e-12), (0.0, 5.8e-12), (5.0, 5.3e-12)] }
    }

    pub fn capacitance(&self, v_vd: f64) -> Result<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self.anchors.iter().cloned().unzip();
        Pchip::new(x, y)?.eval(v_vd)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TdoCircuit {
    pub inductance: f64,
    /// Zero-bias diode capacitance [F].
    pub c0: f64,
    /// Diffusion potential [V].
    pub v_d: f64,
    pub varactor: Varactor,
}

impl Default for TdoCircuit {
    fn default() -> Self {
        Self { inductance: 95e-9, c0: 5.7e-12, v_d: 0.5, varactor: Varactor::measured() }
    }
}

impl TdoCircuit {
    /// Parameter set at 3.4 K: every capacitance 0.1 pF higher.
    pub fn at_3p4_kelvin() -> Self {
        let mut c = Self::default();
        c.c0 += 0.1e-12;
        c.varactor.anchors.iter_mut().for_each(|a| a.1 += 0.1e-12);
        c
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.inductance > 0.0 && self.c0 > 0.0 && self.v_d > 0.0, || "L, C0 and V_d must be positive".into())?;
        ensure(self.varactor.anchors.iter().all(|a| a.1 > 0.0), || "varactor capacitances must be positive".into())
    }

    /// Oscillation frequency at diode bias `v_td` and varactor bias `v_vd`.
    pub fn oscillation_frequency(&self, v_td: f64, v_vd: f64) -> Result<f64> {
        self.validate()?;
        let c = self.varactor.capacitance(v_vd)?;
        self.frequency_with(c, v_td)
    }

    /// Oscillation frequency with the circuit capacitance given directly.
    pub fn frequency_with(&self, c: f64, v_td: f64) -> Result<f64> {
        Ok(lc_frequency(self.inductance, c + diode_capacitance(v_td, self.c0, self.v_d)?))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacitanceFit {
    pub c: f64,
    pub c0: f64,
    pub c_half_width: f64,
    pub c0_half_width: f64,
    pub level: f64,
    pub residual_rms_hz: f64,
}

/// Fits C and C0 to oscillation frequency versus diode bias.
pub fn fit_capacitances(v_td: &[f64], freq: &[f64], l: f64, v_d: f64) -> Result<CapacitanceFit> {
    ensure(v_td.len() == freq.len(), || "bias and frequency arrays differ in length".into())?;
    ensure(v_td.len() >= 5, || format!("need at least 5 points, got {}", v_td.len()))?;
    ensure(l > 0.0 && v_d > 0.0, || "L and V_d must be positive".into())?;
    ensure(freq.iter().all(|f| *f > 0.0 && f.is_finite()), || "frequencies must be positive".into())?;
    let g: Vec<f64> = v_td.iter().map(|&v| diode_capacitance(v, 1.0, v_d)).collect::<Result<_>>()?;
    let (fmin, fmax) = freq.iter().fold((f64::MAX, f64::MIN), |a, &f| (a.0.min(f), a.1.max(f)));
    if (fmax - fmin) / fmax < 1e-9 {
        return Err(Error::Fit("frequency does not change with bias; C and C0 are not separable".into()));
    }
    // 1/(L(2πf)²) = C + C0·g is linear in (C, C0).
    let y: Vec<f64> = freq.iter().map(|&f| 1.0 / (l * (2.0 * PI * f).powi(2))).collect();
    let n = y.len() as f64;
    let (sg, sy) = (g.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sgg: f64 = g.iter().map(|v| v * v).sum();
    let sgy: f64 = g.iter().zip(&y).map(|(a, b)| a * b).sum();
    let det = n * sgg - sg * sg;
    if det.abs() < 1e-12 * n * sgg {
        return Err(Error::Fit("bias points do not span a range".into()));
    }
    let c0 = (n * sgy - sg * sy) / det;
    let c = (sy - c0 * sg) / n;
    if c0 <= 0.0 {
        return Err(Error::Fit(format!(
            "frequency rises with V_TD (C0 = {:.3} pF); the depletion model needs it to fall",
            c0 * 1e12
        )));
    }
    if c <= 0.0 {
        return Err(Error::Fit(format!("negative circuit capacitance {:.3} pF", c * 1e12)));
    }
    let scale = 1e-12;
    let res = levenberg_marquardt(
        |p| {
            Ok(g.iter()
                .zip(freq)
                .map(|(gi, f)| lc_frequency(l, (p[0] + p[1] * gi) * scale) - f)
                .collect())
        },
        &[c / scale, c0 / scale],
        LmOptions { step_floor: 1e-3, ..LmOptions::default() },
    )?;
    let level = 0.95;
    let t = t_quantile(level, res.dof);
    Ok(CapacitanceFit {
        c: res.params[0] * scale,
        c0: res.params[1] * scale,
        c_half_width: t * res.std_err(0) * scale,
        c0_half_width: t * res.std_err(1) * scale,
        level,
        residual_rms_hz: (res.cost / n).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IvCurve {
    pub voltage: Vec<f64>,
    pub current: Vec<f64>,
}

impl IvCurve {
    /// Copy with voltage increasing; rejects non-monotone sweeps.
    fn ascending(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        ensure(self.voltage.len() == self.current.len(), || "voltage and current lengths differ".into())?;
        ensure(self.voltage.len() >= 10, || "need at least 10 points".into())?;
        let (mut v, mut i) = (self.voltage.clone(), self.current.clone());
        if v.windows(2).all(|w| w[1] < w[0]) {
            v.reverse();
            i.reverse();
        }
        ensure(v.windows(2).all(|w| w[1] > w[0]), || "voltage axis must be monotone".into())?;
        Ok((v, i))
    }
}

/// I = I_p(V/V_p)e^(1 − V/V_p) + I_s(e^(V/V_0) − 1): tunnelling peak plus
/// the thermal diode branch.
pub fn synthetic_tunnel_iv(voltage: &[f64], v_p: f64, i_p: f64, i_s: f64, v_0: f64) -> IvCurve {
    let current = voltage
        .iter()
        .map(|&v| i_p * v / v_p * (1.0 - v / v_p).exp() + i_s * ((v / v_0).exp() - 1.0))
        .collect();
    IvCurve { voltage: voltage.to_vec(), current }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NdrRegion {
    pub v_start: f64,
    pub v_end: f64,
    /// (V_p, I_p).
    pub peak: (f64, f64),
    /// (V_v, I_v).
    pub valley: (f64, f64),
}

/// Intervals where the smoothed slope dI/dV is negative.
pub fn negative_resistance_region(iv: &IvCurve) -> Result<Vec<NdrRegion>> {
    let (v, i) = iv.ascending()?;
    let n = v.len();
    let slope: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (i[b] - i[a]) / (v[b] - v[a])
        })
        .collect();
    let half = 2usize;
    let smooth: Vec<f64> = (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(half), (k + half).min(n - 1));
            slope[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
        })
        .collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        if smooth[k] < 0.0 {
            let start = k;
            while k + 1 < n && smooth[k + 1] < 0.0 {
                k += 1;
            }
            let end = k;
            let window = |c: usize| c.saturating_sub(2 * half)..=(c + 2 * half).min(n - 1);
            let p = window(start).max_by(|&a, &b| i[a].partial_cmp(&i[b]).unwrap()).unwrap();
            let q = window(end).min_by(|&a, &b| i[a].partial_cmp(&i[b]).unwrap()).unwrap();
            out.push(NdrRegion { v_start: v[start], v_end: v[end], peak: (v[p], i[p]), valley: (v[q], i[q]) });
        }
        k += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveformRecord {
    pub samples: Vec<f64>,
    /// [S/s].
    pub sample_rate: f64,
}

impl WaveformRecord {
    pub fn validate(&self) -> Result<()> {
        ensure(!self.samples.is_empty(), || "empty waveform".into())?;
        ensure(self.sample_rate > 0.0, || "sample rate must be positive".into())?;
        ensure(self.samples.iter().all(|x| x.is_finite()), || "non-finite sample".into())
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// A·sin(2πft + φ).
    pub fn sine(freq: f64, amplitude: f64, sample_rate: f64, n: usize, phase: f64) -> Self {
        let samples = (0..n)
            .map(|k| amplitude * (2.0 * PI * freq * k as f64 / sample_rate + phase).sin())
            .collect();
        Self { samples, sample_rate }
    }

    /// Rounds to a `bits`-bit grid spanning ±`full_scale`, clipping outside.
    pub fn quantized(&self, bits: u32, full_scale: f64) -> Self {
        let levels = (1u64 << bits) as f64;
        let step = 2.0 * full_scale / levels;
        let samples = self
            .samples
            .iter()
            .map(|&x| ((x / step).round() * step).clamp(-full_scale, full_scale - step))
            .collect();
        Self { samples, sample_rate: self.sample_rate }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveformStats {
    #[serde(skip)]
    pub envelope: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub histogram: Histogram,
}

/// Bins of the envelope histogram.
pub const HISTOGRAM_BINS: usize = 5000;

fn histogram(x: &[f64], bins: usize) -> Histogram {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0u64; bins];
    let width = hi - lo;
    for &v in x {
        let k = if width > 0.0 { (((v - lo) / width) * bins as f64) as usize } else { 0 };
        counts[k.min(bins - 1)] += 1;
    }
    Histogram { lo, hi, counts }
}

/// Brick-wall bandpass around `center` of width `bw`, then the Hilbert
/// envelope via one-sided spectrum doubling.
pub fn analyze_waveform(w: &WaveformRecord, center: f64, bw: f64) -> Result<WaveformStats> {
    w.validate()?;
    ensure(bw > 0.0, || "bandwidth must be positive".into())?;
    let nyquist = 0.5 * w.sample_rate;
    let (f_lo, f_hi) = (center - 0.5 * bw, center + 0.5 * bw);
    if f_lo <= 0.0 || f_hi >= nyquist {
        return Err(Error::Domain(format!(
            "band [{f_lo:.4e}, {f_hi:.4e}] Hz not inside (0, {nyquist:.4e}) Hz"
        )));
    }
    let n = w.samples.len();
    let mut buf: Vec<C64> = w.samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = w.sample_rate / n as f64;
    for (k, z) in buf.iter_mut().enumerate() {
        let f = k as f64 * df;
        *z = if k > 0 && k < n.div_ceil(2) && f >= f_lo && f <= f_hi { *z * 2.0 } else { C64::new(0.0, 0.0) };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let envelope: Vec<f64> = buf.iter().map(|z| z.norm() / n as f64).collect();
    let mean = envelope.iter().sum::<f64>() / n as f64;
    let std = (envelope.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let histogram = histogram(&envelope, HISTOGRAM_BINS);
    Ok(WaveformStats { envelope, mean, std, histogram })
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerSpectrum {
    pub freqs: Vec<f64>,
    /// rms amplitude per bin [V].
    pub rms: Vec<f64>,
    /// Power into 50 Ω [dBm], floored at `DBM_FLOOR`.
    pub dbm: Vec<f64>,
}

impl PowerSpectrum {
    pub fn peak(&self) -> (f64, f64) {
        let k = (0..self.dbm.len()).max_by(|&a, &b| self.dbm[a].partial_cmp(&self.dbm[b]).unwrap()).unwrap();
        (self.freqs[k], self.dbm[k])
    }
}

fn padded_spectrum(w: &WaveformRecord, zero_pad_to: usize) -> Result<Vec<C64>> {
    w.validate()?;
    let m = zero_pad_to.max(w.samples.len());
    let mut buf: Vec<C64> = w.samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    buf.resize(m, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    Ok(buf)
}

/// Zero-padded DFT power spectrum. X̄_k = |X_k|/(√2·N/2) with N the number
/// of recorded samples, so padding interpolates without rescaling.
pub fn power_spectrum(w: &WaveformRecord, zero_pad_to: usize) -> Result<PowerSpectrum> {
    let buf = padded_spectrum(w, zero_pad_to)?;
    let m = buf.len();
    let n = w.samples.len() as f64;
    let bins = m / 2 + 1;
    let freqs = (0..bins).map(|k| k as f64 * w.sample_rate / m as f64).collect();
    let rms: Vec<f64> = buf[..bins].iter().map(|z| z.norm() / (2f64.sqrt() * n / 2.0)).collect();
    let dbm = rms
        .iter()
        .map(|&x| {
            let p = x * x / (0.001 * 50.0);
            if p > 0.0 { (10.0 * p.log10()).max(DBM_FLOOR) } else { DBM_FLOOR }
        })
        .collect();
    Ok(PowerSpectrum { freqs, rms, dbm })
}

/// |Σ|x|² − Σ|X|²/M| relative to Σ|x|², over the full padded DFT.
pub fn spectrum_parseval_error(w: &WaveformRecord, zero_pad_to: usize) -> Result<f64> {
    let buf = padded_spectrum(w, zero_pad_to)?;
    let time: f64 = w.samples.iter().map(|x| x * x).sum();
    let freq: f64 = buf.iter().map(|z| z.norm_sqr()).sum::<f64>() / buf.len() as f64;
    Ok(if time > 0.0 { (time - freq).abs() / time } else { freq })
}
