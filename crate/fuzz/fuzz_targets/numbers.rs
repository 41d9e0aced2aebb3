#![no_main]

use libfuzzer_sys::fuzz_target;
use virtlev::config::parse_angle;
use virtlev_core::potential::{format_complex, parse_complex, parse_real};

fuzz_target!(|text: &str| {
    let _ = parse_angle(text);
    let _ = parse_real(text);
    if let Ok(z) = parse_complex(text) {
        assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
    }
});
