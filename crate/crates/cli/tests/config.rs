use etpump_cli::config::{parse_config, to_toml, ScenarioConfig};
use etpump_cli::presets::{preset_config, PRESETS};
use etpump_cli::CliError;
use proptest::prelude::*;

const MINIMAL: &str = r#"
id = "tiny"
kind = "single-site"

[et]
delta_e_omega0 = 1.0
g_omega0 = 1.0
v_omega0 = 0.01
omega0_khz = 20.0

[single_site]
duration_ms = 0.5
"#;

#[test]
fn every_preset_parses_validates_and_round_trips() {
    assert_eq!(PRESETS.len(), 9);
    for p in &PRESETS {
        let cfg = preset_config(p.id).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.id, p.id);
        let again = parse_config(&to_toml(&cfg), None).unwrap();
        assert_eq!(cfg, again, "{}", p.id);
    }
}

#[test]
fn unknown_keys_are_named() {
    let top = MINIMAL.replace("[et]", "frobnicate = 3\n\n[et]");
    let err = parse_config(&top, None).unwrap_err().to_string();
    assert!(err.contains("frobnicate"), "{err}");

    let nested = MINIMAL.replace("omega0_khz = 20.0", "omega0_khz = 20.0\nomega0_hz = 1.0");
    let err = parse_config(&nested, None).unwrap_err().to_string();
    assert!(err.contains("omega0_hz"), "{err}");
}

#[test]
fn missing_section_is_a_schema_error() {
    let text = MINIMAL.replace("[single_site]\nduration_ms = 0.5\n", "");
    match parse_config(&text, None) {
        Err(CliError::Schema(msg)) => assert!(msg.contains("single_site"), "{msg}"),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn relative_coupling_paths_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_config("fig6").map(|c| to_toml(&c)).unwrap().replace("\"builtin:seven-ion\"", "\"chain.csv\"\ncontrol_row = 3");
    let cfg = parse_config(&text, Some(dir.path())).unwrap();
    let path = cfg.network.unwrap().couplings_csv.unwrap();
    assert_eq!(std::path::Path::new(&path), dir.path().join("chain.csv"));
}

fn tweak(base: &ScenarioConfig, de: f64, v: f64, khz: f64, dur: f64, rtol: f64) -> ScenarioConfig {
    let mut c = base.clone();
    c.et.delta_e_omega0 = de;
    c.et.v_omega0 = v;
    c.et.omega0_khz = khz;
    c.single_site.as_mut().unwrap().duration_ms = dur;
    c.integrator.rtol = rtol;
    c
}

proptest! {
    #[test]
    fn configs_round_trip(de in 0.1f64..5.0, v in 0.0f64..0.1, khz in 1.0f64..100.0, dur in 0.01f64..50.0, rtol in 1e-12f64..1e-4) {
        let base = parse_config(MINIMAL, None).unwrap();
        let cfg = tweak(&base, de, v, khz, dur, rtol);
        let again = parse_config(&to_toml(&cfg), None).unwrap();
        prop_assert_eq!(cfg, again);
    }
}
