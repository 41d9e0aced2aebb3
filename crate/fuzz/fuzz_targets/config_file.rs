#![no_main]

use libfuzzer_sys::fuzz_target;
use virtlev::config::{parse_config, ExperimentConfig, COMMANDS};

fuzz_target!(|text: &str| {
    let _ = parse_config(text);
    for (command, _) in COMMANDS {
        if let Ok(cfg) = ExperimentConfig::from_text(command, text) {
            let back = ExperimentConfig::from_text(command, &cfg.render()).expect("rendered config parses");
            assert_eq!(back, cfg);
        }
    }
});
