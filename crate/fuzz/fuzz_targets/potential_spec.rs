#![no_main]

use libfuzzer_sys::fuzz_target;
use virtlev_core::potential::{parse_potential_spec, PotentialSpec};

fuzz_target!(|text: &str| {
    if let Ok(PotentialSpec::Inline(v)) = parse_potential_spec(text) {
        // Accepted potentials must be finite wherever they are sampled.
        for x in [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0] {
            let u = v.value(x);
            assert!(u.re.is_finite() && u.im.is_finite(), "{text:?} at {x}");
        }
    }
});
