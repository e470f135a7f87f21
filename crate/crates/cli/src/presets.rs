//! Built-in scenarios, keyed to the figure or appendix they reproduce.

use serde::Serialize;

use crate::config::{parse_config, ScenarioConfig};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Preset {
    pub id: &'static str,
    pub anchor: &'static str,
    pub summary: &'static str,
    #[serde(skip)]
    pub toml: &'static str,
}

pub const PRESETS: [Preset; 9] = [
    Preset {
        id: "fig2",
        anchor: "Fig. 2(b)",
        summary: "reduced-model transfer rate over gamma/V_e",
        toml: include_str!("../presets/fig2.toml"),
    },
    Preset {
        id: "fig3b",
        anchor: "Fig. 3(b)",
        summary: "hybrid W_4^2 pumping with a pi-pulse repump",
        toml: include_str!("../presets/fig3b.toml"),
    },
    Preset {
        id: "fig4b",
        anchor: "Fig. 4(b)",
        summary: "fully dissipative W_4^2 pumping",
        toml: include_str!("../presets/fig4b.toml"),
    },
    Preset {
        id: "fig5",
        anchor: "Fig. 5 / Appendix B",
        summary: "steady-state donor population over resonant gaps",
        toml: include_str!("../presets/fig5.toml"),
    },
    Preset {
        id: "fig6",
        anchor: "Fig. 6(b)",
        summary: "seven-ion experiment with measured couplings and heating",
        toml: include_str!("../presets/fig6.toml"),
    },
    Preset {
        id: "fig7",
        anchor: "Fig. 7 / Appendix A",
        summary: "full vs reduced populations of the bare ET transfer",
        toml: include_str!("../presets/fig7.toml"),
    },
    Preset {
        id: "fig8",
        anchor: "Fig. 8 / Appendix A",
        summary: "off-resonant coherences of the bare ET transfer",
        toml: include_str!("../presets/fig8.toml"),
    },
    Preset {
        id: "appC",
        anchor: "Appendix C",
        summary: "two-mode boson W state at three temperatures",
        toml: include_str!("../presets/appC.toml"),
    },
    Preset {
        id: "appE",
        anchor: "Appendix E",
        summary: "two-qubit GHZ state with and without heating",
        toml: include_str!("../presets/appE.toml"),
    },
];

pub fn find(id: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.id == id)
}

pub fn preset_config(id: &str) -> Result<ScenarioConfig, CliError> {
    let p = find(id).ok_or_else(|| CliError::UnknownPreset(id.to_string()))?;
    parse_config(p.toml, None)
}
