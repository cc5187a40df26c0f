//! Byte-exact emission format, frozen against golden files.
//!
//! Regenerate with `GOLDEN_BLESS=1 cargo test -p rankprover-core --test
//! golden` after an intentional format change.

use rankprover_core::emitter::{emit_script, extract_trace};
use rankprover_core::engine::{saturate, SaturateOptions};
use rankprover_core::parser::parse_config;
use rankprover_core::tracefile::write_trace;

const EX2: &str = include_str!("fixtures/ex2.g");

fn compare(name: &str, produced: &str) {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    if std::env::var("GOLDEN_BLESS").is_ok() {
        std::fs::write(&path, produced).unwrap();
    }
    let golden = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {path}; run with GOLDEN_BLESS=1"));
    assert_eq!(produced, golden, "{name} drifted from its golden file");
}

#[test]
fn ex2_script_and_trace_are_frozen() {
    let cfg = parse_config(EX2).unwrap().config;
    let state = saturate(&cfg, &SaturateOptions::default()).unwrap();
    let trace = extract_trace(&state, cfg.conclusions()[0]).unwrap();
    compare("pprove_LABC.v", &emit_script(&cfg, &trace).render());
    compare("pprove_LABC.trace", &write_trace(&trace));
}
