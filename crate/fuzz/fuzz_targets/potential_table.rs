#![no_main]

use libfuzzer_sys::fuzz_target;
use virtlev_core::potential::{Potential1D, Table};

fuzz_target!(|text: &str| {
    if let Ok(table) = Table::parse(text) {
        let (lo, hi) = table.range();
        assert!(lo <= hi);
        let v = Potential1D::table(table);
        let _ = v.value(0.5 * (lo + hi));
    }
});
