#![no_main]
use libfuzzer_sys::fuzz_target;
use qustat::ccr::LimitPolynomial;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(u) = LimitPolynomial::from_json(s) else { return };
    let back = LimitPolynomial::from_json(&u.to_json().to_string()).expect("serialized polynomial parses");
    assert_eq!(u, back);
    let _ = u.n_generators();
});
