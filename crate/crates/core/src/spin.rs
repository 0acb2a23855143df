//! Spin-photon coupling through spin-charge hybridization in a double-well
//! charge qubit, the resulting effective loss rates, cooperativity and
//! gate fidelities, plus the EDSR field formulas.
//!
//! Rates cross the API in Hz (value/2π) and are converted to rad/s inside.
//! Quasi-static rates γ* = 1/T2* carry no 2π and are given in s⁻¹.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{E_CHARGE, G_ELECTRON, HBAR, H_PLANCK, MU_B};
use crate::error::{ensure, Error, Result};

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinChargeParams {
    /// Charge detuning ε/2π [Hz].
    pub detuning_hz: f64,
    /// 2t_c/2π [Hz].
    pub two_tc_hz: f64,
    /// b_∥/2π [Hz].
    pub b_par_hz: f64,
    /// b_⊥/2π [Hz].
    pub b_perp_hz: f64,
    pub lever_arm: f64,
    /// eV0/h [Hz].
    pub ev0_h_hz: f64,
    /// ω_r/2π [Hz].
    pub f_r_hz: f64,
}

impl SpinChargeParams {
    /// ε = 0, 2t_c = 8 GHz, b_∥ = ω_r = 4.8 GHz, b_⊥ = 1 GHz, α = 0.05,
    /// eV0/h = 3 GHz.
    pub fn neon_example() -> Self {
        Self {
            detuning_hz: 0.0,
            two_tc_hz: 8.0e9,
            b_par_hz: 4.8e9,
            b_perp_hz: 1.0e9,
            lever_arm: 0.05,
            ev0_h_hz: 3.0e9,
            f_r_hz: 4.8e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.two_tc_hz > 0.0, || "2t_c must be positive".into())?;
        ensure(self.b_par_hz >= 0.0 && self.b_perp_hz >= 0.0, || "b_∥ and b_⊥ must be non-negative".into())?;
        ensure(self.lever_arm > 0.0 && self.lever_arm < 1.0, || "lever arm must lie in (0, 1)".into())?;
        ensure(self.ev0_h_hz >= 0.0 && self.f_r_hz > 0.0, || "eV0/h and f_r must be positive".into())?;
        ensure(self.detuning_hz.is_finite(), || "detuning must be finite".into())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Couplings {
    pub theta: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub lambda: f64,
    /// g_c/2π [Hz].
    pub g_c_hz: f64,
    /// g_s/2π [Hz].
    pub g_s_hz: f64,
}

impl Couplings {
    /// f_R^s = Λ f_R^c.
    pub fn spin_rabi(&self, f_rabi_c_hz: f64) -> f64 {
        self.lambda * f_rabi_c_hz
    }
}

/// g_c, Λ and g_s. φ_± use atan2 so that 2t_c − b_∥ < 0 stays on the
/// continuous branch.
pub fn couplings(p: &SpinChargeParams) -> Result<Couplings> {
    p.validate()?;
    let theta = (p.detuning_hz / p.two_tc_hz).atan();
    let g_c_hz = p.lever_arm * p.ev0_h_hz * theta.cos();
    let phi_plus = p.b_perp_hz.atan2(p.two_tc_hz + p.b_par_hz);
    let phi_minus = p.b_perp_hz.atan2(p.two_tc_hz - p.b_par_hz);
    let lambda = (0.5 * (phi_plus + phi_minus)).sin();
    Ok(Couplings { theta, phi_plus, phi_minus, lambda, g_c_hz, g_s_hz: lambda * g_c_hz })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossScenario {
    pub label: String,
    /// γ_c/2π [Hz].
    pub gamma_c_hz: f64,
    /// γ_s/2π [Hz].
    pub gamma_s_hz: f64,
    /// γ_c* = 1/T2*,c [s⁻¹].
    pub gamma_c_star: f64,
    /// γ_s* = 1/T2*,s [s⁻¹].
    pub gamma_s_star: f64,
    /// κ/2π [Hz].
    pub kappa_hz: f64,
}

impl LossScenario {
    pub fn validate(&self) -> Result<()> {
        ensure(
            [self.gamma_c_hz, self.gamma_s_hz, self.gamma_c_star, self.gamma_s_star, self.kappa_hz]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0),
            || format!("scenario '{}': loss rates must be finite and non-negative", self.label),
        )
    }

    /// κ/2π = 0.1 MHz and a charge rate back-solved so that Λ²γ_c/2π equals
    /// `target_hz`; intrinsic spin and quasi-static rates are zero.
    pub fn back_solved(lambda: f64, target_hz: f64) -> Result<Self> {
        ensure(lambda > 0.0, || "Λ must be positive to back-solve γ_c".into())?;
        Ok(Self {
            label: "back-solved".into(),
            gamma_c_hz: target_hz / (lambda * lambda),
            gamma_s_hz: 0.0,
            gamma_c_star: 0.0,
            gamma_s_star: 0.0,
            kappa_hz: 0.1e6,
        })
    }

    /// γ_c/2π = 0.36 MHz, γ_s/2π = 10 kHz (nuclear-spin linewidth of
    /// natural neon), κ/2π = 0.1 MHz.
    pub fn natural_neon_in_text() -> Self {
        Self {
            label: "natNe-in-text".into(),
            gamma_c_hz: 0.36e6,
            gamma_s_hz: 10e3,
            gamma_c_star: 0.0,
            gamma_s_star: 0.0,
            kappa_hz: 0.1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EffectiveLosses {
    /// γ_s′/2π [Hz].
    pub gamma_s_hz: f64,
    /// γ_s*′ [s⁻¹].
    pub gamma_s_star: f64,
    /// κ′/2π [Hz].
    pub kappa_hz: f64,
    /// Δ_c/2π [Hz].
    pub delta_c_hz: f64,
    /// g_s²/(γ_s′κ′).
    pub cooperativity: f64,
}

/// Loss rates at the charge sweet spot.
///
/// The quasi-static term is evaluated as printed, with γ_c* in s⁻¹ and
/// b_∥ in rad/s; its first contribution is then a pure number.
pub fn effective_losses(p: &SpinChargeParams, s: &LossScenario) -> Result<EffectiveLosses> {
    s.validate()?;
    if p.detuning_hz != 0.0 {
        return Err(Error::Regime("sweet-spot loss formulas need ε = 0".into()));
    }
    let c = couplings(p)?;
    let l2 = c.lambda * c.lambda;
    let gamma_s_hz = l2 * s.gamma_c_hz + (1.0 - l2) * s.gamma_s_hz;
    let b_par = TAU * p.b_par_hz;
    let first = if b_par > 0.0 { l2 * s.gamma_c_star / b_par } else { 0.0 };
    let second = 0.5 * (c.phi_plus.cos() + c.phi_minus.cos()) * s.gamma_s_star;
    let gamma_s_star = first.hypot(second);
    let delta_c_hz = (p.detuning_hz.powi(2) + p.two_tc_hz.powi(2)).sqrt() - p.f_r_hz;
    if delta_c_hz == 0.0 {
        return Err(Error::Domain("charge transition resonant with the resonator (Δ_c = 0)".into()));
    }
    let kappa_hz = s.kappa_hz + c.g_c_hz.powi(2) * s.gamma_c_hz / delta_c_hz.powi(2);
    let cooperativity = c.g_s_hz.powi(2) / (gamma_s_hz * kappa_hz);
    Ok(EffectiveLosses { gamma_s_hz, gamma_s_star, kappa_hz, delta_c_hz, cooperativity })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    /// f_R^c [Hz].
    pub f_rabi_c_hz: f64,
    /// δ/2π [Hz].
    pub delta_hz: f64,
    /// Δ_s = β g_s.
    pub beta: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self { f_rabi_c_hz: 10e6, delta_hz: 0.0, beta: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GateFidelities {
    /// t_g = 1/(2f_R^s) [s].
    pub t_gate: f64,
    pub f1: f64,
    pub f1_avg: f64,
    pub f2: f64,
}

/// π-gate fidelity F_1(δ), its quasi-static average F̄_1 and the iSWAP F_2.
pub fn gate_fidelities(p: &SpinChargeParams, s: &LossScenario, g: &GateConfig) -> Result<GateFidelities> {
    ensure(g.f_rabi_c_hz > 0.0, || "charge Rabi frequency must be positive".into())?;
    ensure(g.beta > 1.0, || "two-qubit mode needs β > 1".into())?;
    let c = couplings(p)?;
    let losses = effective_losses(p, s)?;
    let f_rs = c.spin_rabi(g.f_rabi_c_hz);
    if f_rs <= 0.0 {
        return Err(Error::Domain("spin Rabi frequency is zero; gate time undefined".into()));
    }
    let t_g = 1.0 / (2.0 * f_rs);
    let decay = t_g * TAU * losses.gamma_s_hz;
    let f1 = (3.0 + (-2.0 * decay).exp() + 2.0 * (-decay).exp() * (t_g * TAU * g.delta_hz).cos()) / 6.0;
    let quasi = (t_g * losses.gamma_s_star).powi(2) / 2.0;
    let f1_avg = (3.0 + (-2.0 * decay).exp() + 2.0 * (-decay).exp() * (-quasi).exp()) / 6.0;
    let f2 = two_qubit_fidelity(c.g_s_hz, losses.gamma_s_hz, s.kappa_hz, g.beta);
    Ok(GateFidelities { t_gate: t_g, f1, f1_avg, f2 })
}

/// F_2 = 1 − (2π/5g_s)(2γ_s′β + κ/β); any consistent rate unit works.
pub fn two_qubit_fidelity(g_s: f64, gamma_s: f64, kappa: f64, beta: f64) -> f64 {
    1.0 - TAU / (5.0 * g_s) * (2.0 * gamma_s * beta + kappa / beta)
}

/// Stationary point of F_2 in β.
pub fn optimal_beta(gamma_s: f64, kappa: f64) -> f64 {
    (kappa / (2.0 * gamma_s)).sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanPoint {
    pub b_perp_hz: f64,
    pub lambda: f64,
    pub g_s_hz: f64,
    pub f1_avg: f64,
    pub f2: f64,
}

/// Gate fidelities while b_⊥ sweeps Λ.
pub fn lambda_scan(p: &SpinChargeParams, s: &LossScenario, g: &GateConfig, b_perp_hz: &[f64]) -> Result<Vec<ScanPoint>> {
    b_perp_hz
        .iter()
        .map(|&b| {
            let q = SpinChargeParams { b_perp_hz: b, ..*p };
            let c = couplings(&q)?;
            let f = gate_fidelities(&q, s, g)?;
            Ok(ScanPoint { b_perp_hz: b, lambda: c.lambda, g_s_hz: c.g_s_hz, f1_avg: f.f1_avg, f2: f.f2 })
        })
        .collect()
}

/// B_AC = Δb·eE_ac·l0²·ω0 / (2ħ(ω0² − ω_L²)) [T]; angular frequencies in rad/s.
pub fn edsr_ac_field(gradient: f64, e_ac: f64, l0: f64, omega0: f64, omega_l: f64) -> Result<f64> {
    let den = 2.0 * HBAR * (omega0 * omega0 - omega_l * omega_l);
    if den == 0.0 {
        return Err(Error::Domain("drive resonant with the orbital frequency".into()));
    }
    Ok(gradient * E_CHARGE * e_ac * l0 * l0 * omega0 / den)
}

/// B_0 = Δb·eE0·d² / (4(2t − ħω_L)) [T]; `gap_hz` is (2t − ħω_L)/h.
pub fn edsr_static_field(gradient: f64, e0: f64, d: f64, gap_hz: f64) -> Result<f64> {
    if gap_hz == 0.0 {
        return Err(Error::Domain("orbital gap resonant with the spin (2t = ħω_L)".into()));
    }
    Ok(gradient * E_CHARGE * e0 * d * d / (4.0 * H_PLANCK * gap_hz))
}

/// Vacuum field that gives a charge coupling `g_c_hz` across `d`,
/// taking h·g_c/2π = e·E0·d.
pub fn vacuum_field_from_coupling(g_c_hz: f64, d: f64) -> f64 {
    H_PLANCK * g_c_hz / (E_CHARGE * d)
}

/// gμ_B B/h [Hz].
pub fn zeeman_hz(b: f64) -> f64 {
    G_ELECTRON * MU_B * b / H_PLANCK
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neon_coupling_chain() {
        let c = couplings(&SpinChargeParams::neon_example()).unwrap();
        assert!((c.g_c_hz - 150e6).abs() < 1e-3);
        // Independent: φ± = atan(1/12.8), atan(1/3.2).
        let expected = (0.5 * ((1.0f64 / 12.8).atan() + (1.0f64 / 3.2).atan())).sin();
        assert!((c.lambda - expected).abs() < 1e-14);
        assert!((c.lambda - 0.19).abs() / 0.19 < 0.05);
        assert!((c.g_s_hz - 28.5e6).abs() / 28.5e6 < 0.05);
    }

    #[test]
    fn detuning_reduces_charge_coupling() {
        let p = SpinChargeParams { detuning_hz: 8e9, ..SpinChargeParams::neon_example() };
        let c = couplings(&p).unwrap();
        assert!((c.g_c_hz - 150e6 / 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn no_gradient_no_spin_coupling() {
        let p = SpinChargeParams { b_perp_hz: 0.0, ..SpinChargeParams::neon_example() };
        let c = couplings(&p).unwrap();
        assert_eq!(c.lambda, 0.0);
        assert_eq!(c.g_s_hz, 0.0);
        let s = LossScenario::natural_neon_in_text();
        let l = effective_losses(&p, &s).unwrap();
        assert_eq!(l.gamma_s_hz, s.gamma_s_hz);
        assert!(matches!(gate_fidelities(&p, &s, &GateConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn documented_scenario_numbers() {
        let p = SpinChargeParams::neon_example();
        let c = couplings(&p).unwrap();
        let s = LossScenario::back_solved(c.lambda, 7e3).unwrap();
        let l = effective_losses(&p, &s).unwrap();
        assert!((l.gamma_s_hz - 7e3).abs() < 1e-6);
        assert!((l.kappa_hz - 0.1e6).abs() / 0.1e6 < 0.01, "{}", l.kappa_hz);
        assert!(l.cooperativity >= 1e6, "{}", l.cooperativity);
        // Hand evaluation: (28.4 MHz)²/(7 kHz·0.1004 MHz).
        let hand = c.g_s_hz.powi(2) / (7e3 * l.kappa_hz);
        assert!((l.cooperativity - hand).abs() < 1e-6 * hand);
    }

    #[test]
    fn fidelities_by_direct_evaluation() {
        let p = SpinChargeParams::neon_example();
        let c = couplings(&p).unwrap();
        let s = LossScenario::back_solved(c.lambda, 7e3).unwrap();
        let f = gate_fidelities(&p, &s, &GateConfig::default()).unwrap();
        // F_2 with g_s ≈ 28.4 MHz, β = 10: 1 − (2π/5)(1.4e5 + 1e4)/g_s.
        let f2 = 1.0 - 0.4 * PI * (2.0 * 7e3 * 10.0 + 0.1e6 / 10.0) / c.g_s_hz;
        assert!((f.f2 - f2).abs() < 1e-12);
        assert!((f.f2 - 0.9934).abs() < 5e-4);
        let tg = 1.0 / (2.0 * c.lambda * 10e6);
        let x = tg * 2.0 * PI * 7e3;
        let f1 = (3.0 + (-2.0 * x).exp() + 2.0 * (-x).exp()) / 6.0;
        assert!((f.f1_avg - f1).abs() < 1e-12);
        assert!((f.f1_avg - 0.9924).abs() < 3e-4, "{}", f.f1_avg);
        assert_eq!(f.f1, f.f1_avg);
    }

    #[test]
    fn lossless_gates_are_perfect() {
        let p = SpinChargeParams::neon_example();
        let s = LossScenario {
            label: "ideal".into(),
            gamma_c_hz: 0.0,
            gamma_s_hz: 0.0,
            gamma_c_star: 0.0,
            gamma_s_star: 0.0,
            kappa_hz: 0.0,
        };
        let f = gate_fidelities(&p, &s, &GateConfig::default()).unwrap();
        assert_eq!(f.f1, 1.0);
        assert_eq!(f.f1_avg, 1.0);
        assert_eq!(f.f2, 1.0);
    }

    #[test]
    fn off_sweet_spot_is_rejected() {
        let p = SpinChargeParams { detuning_hz: 1e8, ..SpinChargeParams::neon_example() };
        let s = LossScenario::natural_neon_in_text();
        assert!(matches!(effective_losses(&p, &s), Err(Error::Regime(_))));
        let q = SpinChargeParams { two_tc_hz: 4.8e9, ..SpinChargeParams::neon_example() };
        assert!(matches!(effective_losses(&q, &s), Err(Error::Domain(_))));
    }

    #[test]
    fn lambda_scan_has_a_single_interior_optimum() {
        let p = SpinChargeParams::neon_example();
        let s = LossScenario::natural_neon_in_text();
        let b: Vec<f64> = (1..=200).map(|k| k as f64 * 0.1e9).collect();
        let scan = lambda_scan(&p, &s, &GateConfig::default(), &b).unwrap();
        for pick in [|q: &ScanPoint| q.f1_avg, |q: &ScanPoint| q.f2] {
            let v: Vec<f64> = scan.iter().map(pick).collect();
            let imax = v.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            assert!(imax > 0 && imax < v.len() - 1, "optimum at the scan edge");
            assert!(v[..=imax].windows(2).all(|w| w[1] >= w[0]));
            assert!(v[imax..].windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn f2_peaks_at_optimal_beta() {
        let (g_s, gamma, kappa) = (28.4e6, 7e3, 0.1e6);
        let best = optimal_beta(gamma, kappa);
        let at = |b: f64| two_qubit_fidelity(g_s, gamma, kappa, b);
        let betas: Vec<f64> = (1..4000).map(|k| 1.0 + k as f64 * 0.01).collect();
        let scan_best = betas.iter().cloned().max_by(|a, b| at(*a).partial_cmp(&at(*b)).unwrap()).unwrap();
        assert!((scan_best - best).abs() < 0.011, "{scan_best} vs {best}");
    }

    #[test]
    fn edsr_fields() {
        assert_eq!(edsr_ac_field(0.0, 1.0, 1e-8, 1e10, 1e9).unwrap(), 0.0);
        assert_eq!(edsr_static_field(0.0, 1.0, 1e-7, 1e9).unwrap(), 0.0);
        assert!(edsr_ac_field(1e5, 1.0, 1e-8, 1e9, 1e9).is_err());
        assert!(edsr_static_field(1e5, 1.0, 1e-7, 0.0).is_err());
    }

    #[test]
    fn edsr_neon_estimate() {
        let (db, d) = (0.1e-3 / 1e-9, 100e-9);
        let e0 = vacuum_field_from_coupling(3.5e6, d);
        let g1 = zeeman_hz(edsr_static_field(db, e0, d, 1e9).unwrap());
        // Hand: gμ_B/h·Δb·d·(g_c/2π)/(4·1 GHz) = 2.8025e8·3.5e6/4e9.
        let hand = G_ELECTRON * MU_B / H_PLANCK * db * d * 3.5e6 / 4e9;
        assert!((g1 - hand).abs() < 1e-9 * hand);
        assert!((g1 - 0.2452e6).abs() < 1e3, "{g1}");
        // The quoted 0.2 MHz is 1.23× below this evaluation.
        assert!((g1 / 0.2e6 - 1.226).abs() < 0.01);
        let g2 = zeeman_hz(edsr_static_field(db, e0, d, 100e6).unwrap());
        assert!((g2 / g1 - 10.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn lambda_bounded_and_monotone(two_tc in 5.0e9f64..20e9, b_par in 0.0f64..4.9e9, b1 in 0.0f64..3e9, db in 1e6f64..1e9) {
            let base = SpinChargeParams { two_tc_hz: two_tc, b_par_hz: b_par, b_perp_hz: b1, ..SpinChargeParams::neon_example() };
            let more = SpinChargeParams { b_perp_hz: b1 + db, ..base };
            let l1 = couplings(&base).unwrap().lambda;
            let l2 = couplings(&more).unwrap().lambda;
            prop_assert!((0.0..=1.0).contains(&l1));
            prop_assert!(l2 > l1);
        }

        #[test]
        fn effective_rate_between_endpoints(gc in 0.0f64..1e6, gs in 0.0f64..1e5, b in 0.0f64..5e9) {
            let p = SpinChargeParams { b_perp_hz: b, ..SpinChargeParams::neon_example() };
            let s = LossScenario { label: "p".into(), gamma_c_hz: gc, gamma_s_hz: gs, gamma_c_star: 1e5, gamma_s_star: 1e4, kappa_hz: 1e5 };
            let l = effective_losses(&p, &s).unwrap();
            prop_assert!(l.gamma_s_hz >= gc.min(gs) * (1.0 - 1e-12) && l.gamma_s_hz <= gc.max(gs) * (1.0 + 1e-12));
        }

        #[test]
        fn fidelities_in_unit_interval(gc in 0.0f64..1e6, gs in 0.0f64..1e4, gstar in 0.0f64..1e6, delta in -1e6f64..1e6, b in 1e8f64..5e9) {
            let p = SpinChargeParams { b_perp_hz: b, ..SpinChargeParams::neon_example() };
            let s = LossScenario { label: "p".into(), gamma_c_hz: gc, gamma_s_hz: gs, gamma_c_star: gstar, gamma_s_star: gstar, kappa_hz: 1e5 };
            let f = gate_fidelities(&p, &s, &GateConfig { delta_hz: delta, ..GateConfig::default() }).unwrap();
            prop_assert!((0.0..=1.0).contains(&f.f1));
            prop_assert!((0.0..=1.0).contains(&f.f1_avg));
            prop_assert!(f.f2 <= 1.0);
        }
    }
}
