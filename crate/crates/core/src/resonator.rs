//! Lumped LC reflectometry: quality factors, reflection, sideband signal and
//! sensitivity, plus resonance and TLS-loss fits.
//!
//! Phasors follow e^{+jωt}; a capacitive load lowers the resonance and, at a
//! fixed probe, turns Γ toward +j.

use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::constants::K_B;
use crate::error::{ensure, Error, Result};
use crate::fit::{levenberg_marquardt, t_quantile, LmOptions, LmResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TankCircuit {
    pub inductance: f64,
    pub capacitance: f64,
    pub coupling_capacitance: f64,
    pub resistance: f64,
    pub line_impedance: f64,
}

impl TankCircuit {
    /// L = 708 nH, C = 2.131 pF, C_c = 0.315 pF, R = 321 kΩ on a 50 Ω line.
    pub fn helium() -> Self {
        Self {
            inductance: 708e-9,
            capacitance: 2.131e-12,
            coupling_capacitance: 0.315e-12,
            resistance: 321e3,
            line_impedance: 50.0,
        }
    }

    pub fn total_capacitance(&self) -> f64 {
        self.capacitance + self.coupling_capacitance
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.inductance, self.capacitance, self.coupling_capacitance, self.resistance, self.line_impedance];
        ensure(all.iter().all(|v| *v > 0.0), || "circuit elements must be positive".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityFactors {
    pub q_int: f64,
    pub q_ext: f64,
    pub q_tot: f64,
    pub f0: f64,
}

impl QualityFactors {
    /// Builds a consistent set from the internal and external factors.
    pub fn from_int_ext(q_int: f64, q_ext: f64, f0: f64) -> Self {
        Self { q_int, q_ext, q_tot: 1.0 / (1.0 / q_int + 1.0 / q_ext), f0 }
    }

    /// From loaded and external factors; Q_int follows.
    pub fn from_tot_ext(q_tot: f64, q_ext: f64, f0: f64) -> Self {
        Self { q_int: 1.0 / (1.0 / q_tot - 1.0 / q_ext), q_ext, q_tot, f0 }
    }
}

/// Resonance and quality factors of the tank: Q_int = ω0·C_t·R and
/// Q_ext = C_t/(Z0·ω0·C_c²).
pub fn quality_factors(tc: &TankCircuit) -> Result<QualityFactors> {
    tc.validate()?;
    let ct = tc.total_capacitance();
    let w0 = 1.0 / (tc.inductance * ct).sqrt();
    let q_int = w0 * ct * tc.resistance;
    let q_ext = ct / (tc.line_impedance * w0 * tc.coupling_capacitance.powi(2));
    Ok(QualityFactors::from_int_ext(q_int, q_ext, w0 / (2.0 * PI)))
}

/// Γ = 1 − (2Q_tot/Q_ext)/(1 + j2Q_tot(f/f0 − 1)).
pub fn reflection_coefficient(f: f64, qf: &QualityFactors) -> C64 {
    let x = 2.0 * qf.q_tot * (f / qf.f0 - 1.0);
    C64::new(1.0, 0.0) - 2.0 * qf.q_tot / qf.q_ext / C64::new(1.0, x)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflectionShift {
    /// First-order j(2Q_tot²/Q_ext)(ΔC/C_t).
    pub linear: C64,
    /// Γ at the unloaded f0 with the resonance moved to 1/(2π√(L(C_t+ΔC))).
    pub exact: C64,
    pub warnings: Vec<String>,
}

/// Change of Γ at the probe frequency f0 when the tank capacitance grows by
/// `delta_c`.
pub fn reflection_shift(delta_c: f64, qf: &QualityFactors, tc: &TankCircuit) -> ReflectionShift {
    let ct = tc.total_capacitance();
    let ratio = delta_c / ct;
    let mut warnings = Vec::new();
    if ratio.abs() > 1e-3 {
        warnings.push(format!("|ΔC|/C_t = {:.2e} is outside the linear regime", ratio.abs()));
    }
    let linear = C64::new(0.0, 2.0 * qf.q_tot * qf.q_tot / qf.q_ext * ratio);
    let shifted = QualityFactors { f0: qf.f0 / (1.0 + ratio).sqrt(), ..*qf };
    let exact = reflection_coefficient(qf.f0, &shifted) - reflection_coefficient(qf.f0, qf);
    ReflectionShift { linear, exact, warnings }
}

/// Probe and readout chain of a sideband measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutChain {
    /// Probe amplitude at the circuit [V].
    pub v_rf: f64,
    pub gain: f64,
    /// Voltage noise referred to the output [V/√Hz·√B].
    pub noise: f64,
    pub bandwidth: f64,
}

impl ReadoutChain {
    /// G = 41, V_n = 12 nV, B = 1 Hz, V_RF = 14 µV.
    pub fn helium() -> Self {
        Self { v_rf: 14e-6, gain: 41.0, noise: 12e-9, bandwidth: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sideband {
    /// Sideband amplitude [V].
    pub v_s: f64,
    /// Capacitance sensitivity [F/√Hz].
    pub s_c: f64,
}

/// V_s = G(Q_tot²/Q_ext)(|δC|/C_t)V_RF and S_c = Q_ext·C_t·V_n/(G·Q_tot²·√B·V_RF).
pub fn sideband_and_sensitivity(delta_c: f64, qf: &QualityFactors, c_t: f64, chain: &ReadoutChain) -> Sideband {
    let response = chain.gain * qf.q_tot * qf.q_tot / qf.q_ext;
    let v_s = response * delta_c.abs() / c_t * chain.v_rf;
    let s_c = c_t * chain.noise / (response * chain.bandwidth.sqrt() * chain.v_rf);
    Sideband { v_s, s_c }
}

/// Readout of one electron at zero detuning in the high-temperature limit.
#[derive(Debug, Clone, Serialize)]
pub struct SingleElectronSignal {
    /// G(Q_tot²/Q_ext)ΔqV_RF/(4k_BT); multiplies Δq/C_t.
    pub prefactor: f64,
    /// Signal for the given circuit [V].
    pub v_s: f64,
    /// Signal at critical coupling, G·Q_int·ΔqV_RF/(16k_BT)·Δq/C_t [V].
    pub v_s_critical: f64,
    pub note: &'static str,
}

pub fn single_electron_signal(
    delta_q: f64,
    temperature: f64,
    c_t: f64,
    qf: &QualityFactors,
    gain: f64,
    v_rf: f64,
) -> Result<SingleElectronSignal> {
    ensure(temperature > 0.0 && c_t > 0.0, || "temperature and C_t must be positive".into())?;
    let prefactor = gain * qf.q_tot * qf.q_tot / qf.q_ext * delta_q * v_rf / (4.0 * K_B * temperature);
    let v_s_critical = gain * qf.q_int * delta_q * v_rf / (16.0 * K_B * temperature) * delta_q / c_t;
    Ok(SingleElectronSignal {
        prefactor,
        v_s: prefactor * delta_q / c_t,
        v_s_critical,
        note: "critical coupling (Q_ext = Q_int) gives Q_tot²/Q_ext = Q_int/4",
    })
}

/// Geometry of the measured scattering parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResonatorMode {
    /// S11 of a one-port resonator; the circle diameter is 2Q_l/Q_c.
    Reflection,
    /// S21 of a resonator side-coupled to a feedline; diameter Q_l/Q_c.
    Notch,
}

impl ResonatorMode {
    fn diameter_factor(self) -> f64 {
        match self {
            Self::Reflection => 2.0,
            Self::Notch => 1.0,
        }
    }
}

/// Full resonator model including the environment:
/// a·e^{jα}·e^{−j2πfτ}·(1 − k(Q_l/Q_c)e^{jφ}/(1 + j2Q_l(f/f_r − 1))).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonatorModel {
    pub mode: ResonatorMode,
    pub amplitude: f64,
    pub phase: f64,
    pub delay: f64,
    pub f_r: f64,
    pub q_loaded: f64,
    /// |Q_c| of the complex coupling factor.
    pub q_coupling: f64,
    /// Impedance-mismatch rotation φ.
    pub mismatch: f64,
}

impl ResonatorModel {
    pub fn ideal(mode: ResonatorMode, f_r: f64, q_int: f64, q_ext: f64) -> Self {
        let qf = QualityFactors::from_int_ext(q_int, q_ext, f_r);
        Self { mode, amplitude: 1.0, phase: 0.0, delay: 0.0, f_r, q_loaded: qf.q_tot, q_coupling: q_ext, mismatch: 0.0 }
    }

    pub fn eval(&self, f: f64) -> C64 {
        let env = C64::from_polar(self.amplitude, self.phase - 2.0 * PI * f * self.delay);
        let k = self.mode.diameter_factor() * self.q_loaded / self.q_coupling;
        let lorentz = C64::new(1.0, 2.0 * self.q_loaded * (f / self.f_r - 1.0));
        env * (C64::new(1.0, 0.0) - C64::from_polar(k, self.mismatch) / lorentz)
    }

    /// Q_ext = |Q_c|/cos φ.
    pub fn q_ext(&self) -> f64 {
        self.q_coupling / self.mismatch.cos()
    }

    /// 1/Q_int = 1/Q_l − Re(1/Q̂_c).
    pub fn q_int(&self) -> f64 {
        1.0 / (1.0 / self.q_loaded - self.mismatch.cos() / self.q_coupling)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceFit {
    pub model: ResonatorModel,
    pub f0: f64,
    pub q_tot: f64,
    pub q_ext: f64,
    pub q_int: f64,
    /// One-sigma standard errors of f0, Q_tot, Q_ext and Q_int.
    pub f0_err: f64,
    pub q_tot_err: f64,
    pub q_ext_err: f64,
    pub q_int_err: f64,
    /// RMS of |data − model|.
    pub residual_rms: f64,
    /// Circle radius over residual RMS.
    pub snr: f64,
    pub warnings: Vec<String>,
}

impl ResonanceFit {
    /// Symmetric confidence interval half-width for a standard error.
    pub fn half_width(&self, std_err: f64, level: f64, n_points: usize) -> f64 {
        t_quantile(level, (2 * n_points).saturating_sub(7)) * std_err
    }
}

#[derive(Debug, Clone, Copy)]
struct Circle {
    center: C64,
    radius: f64,
}

/// Algebraic circle fit with Taubin's normalization.
fn taubin_circle(points: &[C64]) -> Option<Circle> {
    let n = points.len() as f64;
    let mean = points.iter().sum::<C64>() / n;
    let (mut mxx, mut myy, mut mxy, mut mxz, mut myz, mut mzz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (x, y) = (p.re - mean.re, p.im - mean.im);
        let z = x * x + y * y;
        mxx += x * x;
        myy += y * y;
        mxy += x * y;
        mxz += x * z;
        myz += y * z;
        mzz += z * z;
    }
    let (mxx, myy, mxy, mxz, myz, mzz) = (mxx / n, myy / n, mxy / n, mxz / n, myz / n, mzz / n);
    let mz = mxx + myy;
    let cov_xy = mxx * myy - mxy * mxy;
    let var_z = mzz - mz * mz;
    let a3 = 4.0 * mz;
    let a2 = -3.0 * mz * mz - mzz;
    let a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
    let a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy;
    let (mut x, mut y) = (0.0_f64, a0);
    for _ in 0..100 {
        let dy = a1 + x * (2.0 * a2 + 3.0 * a3 * x);
        let x_new = x - y / dy;
        if !x_new.is_finite() || x_new == x {
            break;
        }
        let y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
        if y_new.abs() >= y.abs() {
            break;
        }
        x = x_new;
        y = y_new;
    }
    let det = x * x - x * mz + cov_xy;
    let xc = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    let yc = (myz * (mxx - x) - mxz * mxy) / det / 2.0;
    let radius = (xc * xc + yc * yc + mz).sqrt();
    let center = C64::new(xc, yc) + mean;
    (radius.is_finite() && center.re.is_finite() && center.im.is_finite() && radius > 0.0)
        .then_some(Circle { center, radius })
}

fn circle_misfit(points: &[C64], c: &Circle) -> f64 {
    points.iter().map(|p| ((p - c.center).norm() - c.radius).powi(2)).sum::<f64>()
}

fn undelay(freqs: &[f64], data: &[C64], tau: f64) -> Vec<C64> {
    freqs.iter().zip(data).map(|(f, z)| z * C64::from_polar(1.0, 2.0 * PI * f * tau)).collect()
}

fn unwrap(phases: &mut [f64]) {
    for k in 1..phases.len() {
        let d = phases[k] - phases[k - 1];
        phases[k] -= (d / (2.0 * PI)).round() * 2.0 * PI;
    }
}

/// Cable delay from the phase slope of the outer tenth of the data on each
/// side, refined by minimizing the circle misfit.
fn estimate_delay(freqs: &[f64], data: &[C64]) -> f64 {
    let n = freqs.len();
    let edge = (n / 10).max(3);
    let slope = |range: std::ops::Range<usize>| {
        let mut ph: Vec<f64> = data[range.clone()].iter().map(|z| z.arg()).collect();
        unwrap(&mut ph);
        let fs = &freqs[range];
        let (fm, pm) = (fs.iter().sum::<f64>() / fs.len() as f64, ph.iter().sum::<f64>() / ph.len() as f64);
        let num: f64 = fs.iter().zip(&ph).map(|(f, p)| (f - fm) * (p - pm)).sum();
        let den: f64 = fs.iter().map(|f| (f - fm).powi(2)).sum();
        num / den
    };
    let guess = -0.5 * (slope(0..edge) + slope(n - edge..n)) / (2.0 * PI);
    let misfit = |tau: f64| {
        let pts = undelay(freqs, data, tau);
        taubin_circle(&pts).map(|c| circle_misfit(&pts, &c) / c.radius.powi(2)).unwrap_or(f64::INFINITY)
    };
    let span = freqs[n - 1] - freqs[0];
    let (mut lo, mut hi) = (guess - 0.1 / span, guess + 0.1 / span);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut m1, mut m2) = (misfit(x1), misfit(x2));
    for _ in 0..80 {
        if m1 < m2 {
            hi = x2;
            x2 = x1;
            m2 = m1;
            x1 = hi - g * (hi - lo);
            m1 = misfit(x1);
        } else {
            lo = x1;
            x1 = x2;
            m1 = m2;
            x2 = lo + g * (hi - lo);
            m2 = misfit(x2);
        }
    }
    0.5 * (lo + hi)
}

/// θ(f) = θ0 − 2·atan(2Q_l(f/f_r − 1)) around the circle center.
fn fit_phase(freqs: &[f64], theta: &[f64]) -> Result<(f64, f64, f64)> {
    let n = freqs.len();
    // The resonance is where the phase turns fastest.
    let mut best = (0.0_f64, n / 2);
    for k in 2..n - 2 {
        let rate = ((theta[k + 2] - theta[k - 2]) / (freqs[k + 2] - freqs[k - 2])).abs();
        if rate > best.0 {
            best = (rate, k);
        }
    }
    let f_guess = freqs[best.1];
    let q_guess = (best.0 * f_guess / 4.0).max(1.0);
    let theta0 = theta[best.1];
    let fit = levenberg_marquardt(
        |p| {
            let (q, fr) = (p[1].exp(), f_guess * (1.0 + p[2] / q_guess));
            Ok(freqs
                .iter()
                .zip(theta)
                .map(|(f, t)| p[0] - 2.0 * (2.0 * q * (f / fr - 1.0)).atan() - t)
                .collect())
        },
        &[theta0, q_guess.ln(), 0.0],
        LmOptions::default(),
    )?;
    let p = &fit.params;
    Ok((p[0], p[1].exp(), f_guess * (1.0 + p[2] / q_guess)))
}

const MIN_POINTS: usize = 50;
const MIN_LINEWIDTHS: f64 = 5.0;
const LOW_SNR: f64 = 10.0;

/// Extracts f0 and the quality factors from a complex resonance trace:
/// cable-delay removal, algebraic circle fit, phase-slope fit for f_r and
/// Q_l, then a joint complex least-squares refinement of all parameters.
pub fn fit_resonance(freqs: &[f64], data: &[C64], mode: ResonatorMode) -> Result<ResonanceFit> {
    ensure(freqs.len() == data.len(), || "frequency and data lengths differ".into())?;
    ensure(freqs.len() >= MIN_POINTS, || format!("need at least {MIN_POINTS} points, got {}", freqs.len()))?;
    ensure(freqs.windows(2).all(|w| w[1] > w[0]), || "frequencies must increase".into())?;
    ensure(data.iter().all(|z| z.re.is_finite() && z.im.is_finite()), || "data must be finite".into())?;
    let no_resonance = || Error::Fit("no resonance found in the trace".into());

    let tau = estimate_delay(freqs, data);
    let pts = undelay(freqs, data, tau);
    let circle = taubin_circle(&pts).ok_or_else(no_resonance)?;
    let scale = pts.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mean = data.iter().sum::<C64>() / data.len() as f64;
    if data.iter().all(|z| (z - mean).norm() <= 1e-9 * scale) {
        return Err(no_resonance());
    }
    if circle.radius < 1e-6 * scale || circle.radius > 1e3 * scale {
        return Err(no_resonance());
    }
    let mut theta: Vec<f64> = pts.iter().map(|z| (z - circle.center).arg()).collect();
    unwrap(&mut theta);
    let (theta0, q_l, f_r) = fit_phase(freqs, &theta)?;
    let (f_lo, f_hi) = (freqs[0], freqs[freqs.len() - 1]);
    if !(f_r > f_lo && f_r < f_hi) || !q_l.is_finite() {
        return Err(no_resonance());
    }
    let linewidths = (f_hi - f_lo) * q_l / f_r;
    ensure(linewidths >= MIN_LINEWIDTHS, || {
        format!("trace spans {linewidths:.1} linewidths; at least {MIN_LINEWIDTHS} are needed")
    })?;

    let off = circle.center - C64::from_polar(circle.radius, theta0);
    let k = 2.0 * circle.radius / off.norm();
    let mismatch = (C64::new(1.0, 0.0) - circle.center / off).arg();
    let seed = ResonatorModel {
        mode,
        amplitude: off.norm(),
        phase: off.arg(),
        delay: tau,
        f_r,
        q_loaded: q_l,
        q_coupling: mode.diameter_factor() * q_l / k,
        mismatch,
    };
    let (model, lm) = refine(freqs, data, seed)?;

    let residual_rms =
        (freqs.iter().zip(data).map(|(f, z)| (z - model.eval(*f)).norm_sqr()).sum::<f64>() / freqs.len() as f64).sqrt();
    let radius = 0.5 * model.mode.diameter_factor() * model.q_loaded / model.q_coupling * model.amplitude;
    let snr = radius / residual_rms.max(1e-300);
    if snr < 2.0 {
        return Err(no_resonance());
    }
    let mut warnings = Vec::new();
    if snr < LOW_SNR {
        warnings.push(format!("low signal-to-noise ratio {snr:.1}; confidence intervals are wide"));
    }
    let errs = derived_errors(&lm, &seed);
    Ok(ResonanceFit {
        f0: model.f_r,
        q_tot: model.q_loaded,
        q_ext: model.q_ext(),
        q_int: model.q_int(),
        f0_err: errs[0],
        q_tot_err: errs[1],
        q_ext_err: errs[2],
        q_int_err: errs[3],
        model,
        residual_rms,
        snr,
        warnings,
    })
}

/// Parameter vector of the joint fit, each of order one:
/// [ln a, α − 2πf_ref·τ, 2π·τ·f_ref/Q_ref, (f_r/f_ref − 1)·Q_ref, ln Q_l, ln Q_c, φ].
/// Referencing the phase to f_ref decouples it from the delay.
fn pack_model(p: &[f64], seed: &ResonatorModel) -> ResonatorModel {
    let delay = p[2] / (2.0 * PI * seed.f_r / seed.q_loaded);
    ResonatorModel {
        mode: seed.mode,
        amplitude: p[0].exp(),
        phase: p[1] + 2.0 * PI * seed.f_r * delay,
        delay,
        f_r: seed.f_r + p[3] * seed.f_r / seed.q_loaded,
        q_loaded: p[4].exp(),
        q_coupling: p[5].exp(),
        mismatch: p[6],
    }
}

fn refine(freqs: &[f64], data: &[C64], seed: ResonatorModel) -> Result<(ResonatorModel, LmResult)> {
    let delay_unit = 2.0 * PI * seed.f_r / seed.q_loaded;
    let p0 = [
        seed.amplitude.ln(),
        seed.phase - 2.0 * PI * seed.f_r * seed.delay,
        seed.delay * delay_unit,
        0.0,
        seed.q_loaded.ln(),
        seed.q_coupling.ln(),
        seed.mismatch,
    ];
    let lm = levenberg_marquardt(
        |p| {
            let m = pack_model(p, &seed);
            Ok(freqs
                .iter()
                .zip(data)
                .flat_map(|(f, z)| {
                    let d = m.eval(*f) - z;
                    [d.re, d.im]
                })
                .collect())
        },
        &p0,
        LmOptions { step_floor: 1e-2, ..LmOptions::default() },
    )?;
    Ok((pack_model(&lm.params, &seed), lm))
}

/// Standard errors of f0, Q_tot, Q_ext and Q_int by linear propagation.
fn derived_errors(lm: &LmResult, seed: &ResonatorModel) -> [f64; 4] {
    let quantities = |p: &[f64]| {
        let m = pack_model(p, seed);
        [m.f_r, m.q_loaded, m.q_ext(), m.q_int()]
    };
    let n = lm.params.len();
    let mut grads = vec![[0.0; 4]; n];
    let mut q = lm.params.clone();
    for k in 0..n {
        let h = 1e-6 * lm.params[k].abs().max(1e-2);
        q[k] = lm.params[k] + h;
        let up = quantities(&q);
        q[k] = lm.params[k] - h;
        let down = quantities(&q);
        q[k] = lm.params[k];
        for m in 0..4 {
            grads[k][m] = (up[m] - down[m]) / (2.0 * h);
        }
    }
    let mut out = [0.0; 4];
    for (m, o) in out.iter_mut().enumerate() {
        let mut var = 0.0;
        for a in 0..n {
            for b in 0..n {
                var += grads[a][m] * lm.covariance[(a, b)] * grads[b][m];
            }
        }
        *o = var.max(0.0).sqrt();
    }
    out
}

/// Power dependence of the internal loss:
/// 1/Q_int = (F/Q_TLS,0)/√(1 + (n/n_sat)^β) + 1/Q_other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TlsModel {
    pub q_tls0_over_f: f64,
    pub n_sat: f64,
    pub beta: f64,
    pub q_other: f64,
}

impl TlsModel {
    pub fn inverse_q_int(&self, n_ph: f64) -> f64 {
        1.0 / (self.q_tls0_over_f * (1.0 + (n_ph / self.n_sat).powf(self.beta)).sqrt()) + 1.0 / self.q_other
    }

    pub fn q_int(&self, n_ph: f64) -> f64 {
        1.0 / self.inverse_q_int(n_ph)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TlsFitParams {
    pub model: TlsModel,
    /// Confidence intervals (low, high) at `level`, in the order
    /// Q_TLS,0/F, n_sat, β, Q_other.
    pub intervals: [(f64, f64); 4],
    pub level: f64,
    /// False when the data never leave the TLS-dominated regime, so Q_other
    /// is bounded only from one side.
    pub q_other_identifiable: bool,
}

/// Weighted least squares of 1/Q_int in log-parameters; `weights` are
/// proportional to each point's signal-to-noise ratio.
pub fn fit_tls(n_ph: &[f64], q_int: &[f64], weights: &[f64], level: f64) -> Result<TlsFitParams> {
    ensure(n_ph.len() == q_int.len() && n_ph.len() == weights.len(), || "input lengths differ".into())?;
    ensure(n_ph.len() >= 6, || "need at least 6 points".into())?;
    ensure(n_ph.iter().chain(q_int).all(|v| *v > 0.0), || "photon numbers and Q_int must be positive".into())?;
    ensure(weights.iter().all(|w| *w > 0.0 && w.is_finite()), || "weights must be positive".into())?;
    let (lo, hi) = n_ph.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &n| (a.min(n), b.max(n)));
    ensure(hi / lo >= 100.0, || "photon numbers must span at least two decades".into())?;

    let inv: Vec<f64> = q_int.iter().map(|q| 1.0 / q).collect();
    let w_mean = weights.iter().sum::<f64>() / weights.len() as f64;
    // The loss floor 1/Q_other = s²/Q_scale may vanish, so it is carried by
    // its square root rather than a logarithm.
    let q_scale = q_int.iter().fold(0.0_f64, |m, q| m.max(*q));
    let unpack = |p: &[f64]| TlsModel {
        q_tls0_over_f: p[0].exp(),
        n_sat: p[1].exp(),
        beta: p[2].exp(),
        q_other: q_scale / (p[3] * p[3]),
    };
    // Start from the low-power plateau, a mid-range saturation photon number
    // and a loss floor ten times below the high-power value.
    let q_low = q_int[n_ph.iter().enumerate().fold(0, |k, (i, n)| if *n < n_ph[k] { i } else { k })];
    let q_high = q_int[n_ph.iter().enumerate().fold(0, |k, (i, n)| if *n > n_ph[k] { i } else { k })];
    let p0 = [q_low.ln(), (lo * hi).sqrt().ln(), 0.5f64.ln(), (q_scale / (10.0 * q_high)).sqrt()];
    let lm = levenberg_marquardt(
        |p| {
            let m = unpack(p);
            Ok(n_ph
                .iter()
                .zip(&inv)
                .zip(weights)
                .map(|((n, y), w)| w / w_mean * (m.inverse_q_int(*n) / y - 1.0))
                .collect())
        },
        &p0,
        LmOptions { max_iter: 2000, ..LmOptions::default() },
    )?;
    let model = unpack(&lm.params);
    ensure(model.beta <= 2.0, || format!("fitted β = {:.3} is outside (0, 2]", model.beta))?;
    let t = t_quantile(level, lm.dof);
    let mut intervals = [(0.0, 0.0); 4];
    for (k, iv) in intervals.iter_mut().take(3).enumerate() {
        let (p, s) = (lm.params[k], lm.std_err(k));
        *iv = ((p - t * s).exp(), (p + t * s).exp());
    }
    let (s, ds) = (lm.params[3].abs(), t * lm.std_err(3));
    let upper = if ds >= s { f64::INFINITY } else { q_scale / (s - ds).powi(2) };
    intervals[3] = (q_scale / (s + ds).powi(2), upper);
    let q_other_identifiable = upper.is_finite() && upper / intervals[3].0 < 10.0;
    Ok(TlsFitParams { model, intervals, level, q_other_identifiable })
}
