use std::path::Path;

use uemr::config::RunConfig;
use uemr::synth::SynthSpec;

fn repo_file(rel: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn example_config_spells_out_the_defaults() {
    let cfg = RunConfig::from_toml_str(&repo_file("config/example.toml")).unwrap();
    assert_eq!(cfg, RunConfig::default());
}

#[test]
fn example_synth_spec_parses() {
    let spec = SynthSpec::from_toml_str(&repo_file("config/synth_reversal.toml")).unwrap();
    assert_eq!(spec.populations.len(), 2);
    assert_eq!(spec.populations[1].eclipse_multiplier, 0.85);
}
