//! Static scenario table. Every acceptance criterion maps to exactly one
//! entry; `corbino` is an extra building block without a criterion.

use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::output::Output;
use crate::scenarios::{self as sc, prepare};
use crate::{CliError, Result};

pub(crate) type Runner = Box<dyn FnOnce(&mut Output, u64) -> Result<()>>;

/// Parsed, validated parameters ready to run.
pub struct Prepared {
    /// Parameters with defaults filled in, as they enter the config hash.
    pub params: Value,
    pub(crate) run: Runner,
}

pub struct ScenarioInfo {
    pub name: &'static str,
    /// Alternative names accepted by `find`.
    pub aliases: &'static [&'static str],
    /// Acceptance criterion reproduced by this scenario.
    pub criterion: Option<u8>,
    /// Figure, table or equation label the outputs correspond to.
    pub figure: &'static str,
    pub summary: &'static str,
    pub(crate) prepare: fn(Option<Value>) -> Result<Prepared>,
}

static SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "sensitivity",
        aliases: &[],
        criterion: Some(1),
        figure: "he: charge sensitivity S_c",
        summary: "sideband amplitude and charge sensitivity of the tank readout",
        prepare: prepare::<sc::Sensitivity>,
    },
    ScenarioInfo {
        name: "rf-resonance",
        aliases: &["rf"],
        criterion: Some(2),
        figure: "he: tank circuit f_0",
        summary: "resonance frequency, quality factors and reflection sweep",
        prepare: prepare::<sc::Resonance>,
    },
    ScenarioInfo {
        name: "qcap",
        aliases: &[],
        criterion: Some(3),
        figure: "he: population difference chi",
        summary: "thermal population difference and single-electron capacitance",
        prepare: prepare::<sc::Population>,
    },
    ScenarioInfo {
        name: "lz-rate",
        aliases: &[],
        criterion: Some(4),
        figure: "Fig. he_fig4(a)",
        summary: "Landau-Zener probability and 2t_c fit on synthetic sideband data",
        prepare: prepare::<sc::LzRate>,
    },
    ScenarioInfo {
        name: "fm-fig3",
        aliases: &["fm-sweep"],
        criterion: Some(5),
        figure: "Fig. he_fig3(a)",
        summary: "FM sideband amplitude versus MW carrier over the saturated cloud",
        prepare: prepare::<sc::FmFig3>,
    },
    ScenarioInfo {
        name: "rydberg",
        aliases: &[],
        criterion: Some(6),
        figure: "Fig. allstates, Eq. energyz",
        summary: "image-potential spectra on helium and neon, Stark curve",
        prepare: prepare::<sc::Rydberg>,
    },
    ScenarioInfo {
        name: "neon-chain",
        aliases: &[],
        criterion: Some(7),
        figure: "ne: K_in, V_0, g_c, g_s",
        summary: "kinetic inductance, zero-point voltage and spin-photon coupling",
        prepare: prepare::<sc::NeonChain>,
    },
    ScenarioInfo {
        name: "spin-gates",
        aliases: &[],
        criterion: Some(8),
        figure: "Fig. fidelity_neon",
        summary: "effective losses, cooperativity, gate fidelities and Lambda scan",
        prepare: prepare::<sc::SpinGates>,
    },
    ScenarioInfo {
        name: "neon-em",
        aliases: &[],
        criterion: Some(9),
        figure: "ne: 1/Q_e, Drude vs thermal sheet",
        summary: "electron-sheet loading of the nanowire resonator, thickness inversion",
        prepare: prepare::<sc::NeonLoading>,
    },
    ScenarioInfo {
        name: "magnet",
        aliases: &[],
        criterion: Some(10),
        figure: "ne: micromagnet gradient",
        summary: "cobalt pair gradient profile, b_perp and field offsets",
        prepare: prepare::<sc::Magnet>,
    },
    ScenarioInfo {
        name: "tdo",
        aliases: &[],
        criterion: Some(11),
        figure: "Table tab:capacitance",
        summary: "tunnel-diode capacitance, oscillation frequency and power spectrum",
        prepare: prepare::<sc::Tdo>,
    },
    ScenarioInfo {
        name: "fits",
        aliases: &[],
        criterion: Some(12),
        figure: "Fig. Qint_vs_nph",
        summary: "circle fit and TLS fit on synthetic data with known truth",
        prepare: prepare::<sc::Fits>,
    },
    ScenarioInfo {
        name: "properties",
        aliases: &[],
        criterion: Some(13),
        figure: "invariants: unitarity, div B, Parseval",
        summary: "randomized invariant checks across modules",
        prepare: prepare::<sc::Properties>,
    },
    ScenarioInfo {
        name: "corbino",
        aliases: &[],
        criterion: None,
        figure: "he: saturated density and f_Ry distribution",
        summary: "Corbino cell electrostatics and Rydberg-frequency histogram",
        prepare: prepare::<sc::Corbino>,
    },
];

pub fn scenarios() -> &'static [ScenarioInfo] {
    SCENARIOS
}

/// Entries whose name, figure or summary contains `filter` (case-insensitive).
pub fn list(filter: Option<&str>) -> Vec<&'static ScenarioInfo> {
    let needle = filter.map(str::to_lowercase);
    SCENARIOS
        .iter()
        .filter(|s| {
            needle.as_deref().is_none_or(|n| {
                [s.name, s.figure, s.summary].iter().any(|f| f.to_lowercase().contains(n))
            })
        })
        .collect()
}

pub fn find(name: &str) -> Result<&'static ScenarioInfo> {
    SCENARIOS.iter().find(|s| s.name == name || s.aliases.contains(&name)).ok_or_else(|| {
        let names: Vec<&str> = SCENARIOS.iter().map(|s| s.name).collect();
        CliError::Config(format!("scenario: unknown scenario {name:?}; available: {}", names.join(", ")))
    })
}

/// Parses and validates without running; returns the resolved config.
pub fn validate(cfg: &ScenarioConfig) -> Result<ScenarioConfig> {
    let entry = find(&cfg.scenario)?;
    let prepared = (entry.prepare)(cfg.params.clone())?;
    Ok(ScenarioConfig { params: Some(prepared.params), ..cfg.clone() })
}

/// Complete config with every parameter at its default.
pub fn template(name: &str) -> Result<ScenarioConfig> {
    validate(&ScenarioConfig::named(name))
}
