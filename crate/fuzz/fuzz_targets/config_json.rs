//! Fuzz the JSON config-document parser: arbitrary bytes must produce
//! either a validated config or a structured error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(input) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(doc) = msjlab::model::parse_config(input) {
        // Parsed documents must satisfy every config invariant.
        let system = msjlab::model::SystemConfig {
            n: doc.n,
            classes: doc.classes,
        };
        assert!(msjlab::model::validate_config(&system).is_ok());
    }
});
