#![no_main]
use libfuzzer_sys::fuzz_target;
use qustat::operator::json::{parse_matrix, to_json_string};
use qustat::HermitianOperator;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(m) = parse_matrix(s) else { return };
    let back = parse_matrix(&to_json_string(&m)).expect("serialized matrix parses");
    assert_eq!(m, back);
    let _ = HermitianOperator::new(m);
});
