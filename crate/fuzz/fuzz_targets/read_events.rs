//! Arbitrary bytes must either parse cleanly or error; whatever parses must
//! survive a write/read cycle unchanged.

#![no_main]

use bellscan::ingest::{read_events, write_events};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(events) = read_events(data) {
        let mut buf = Vec::new();
        write_events(&events, &mut buf).unwrap();
        let again = read_events(&buf[..]).unwrap();
        assert_eq!(events, again);
    }
});
