#![no_main]

use libfuzzer_sys::fuzz_target;
use virtlev::{cli, invocation};

fuzz_target!(|line: &str| {
    // Config files are read from disk; keep the target hermetic.
    if line.contains("config") {
        return;
    }
    let argv = std::iter::once("virtlev").chain(line.split_whitespace());
    if let Ok(matches) = cli().try_get_matches_from(argv) {
        let _ = invocation(&matches);
    }
});
