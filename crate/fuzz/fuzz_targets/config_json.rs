#![no_main]
use libfuzzer_sys::fuzz_target;
use qustat_cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_json(s) else { return };
    // The canonical form is a fixed point of parsing.
    let again = ExperimentConfig::from_json(&cfg.canonical_json()).expect("canonical config parses");
    assert_eq!(cfg.sha256(), again.sha256());
});
