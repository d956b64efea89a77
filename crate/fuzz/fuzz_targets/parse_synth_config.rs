//! Config text must parse deterministically and never panic; accepted
//! configs either validate or are rejected with a diagnostic, never crash
//! the generator.

#![no_main]

use bellscan::synth::SynthConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let mut cfg = SynthConfig::default();
    if cfg.apply_kv(text).is_ok() {
        let mut again = SynthConfig::default();
        again.apply_kv(text).unwrap();
        assert_eq!(cfg, again);
        let _ = cfg.validate();
    }
});
