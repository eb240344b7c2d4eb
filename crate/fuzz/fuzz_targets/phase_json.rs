// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = gparity::synthesis::read_phase_json(text) {
            assert!(!p.is_empty());
            assert!(p.modulus_r.is_none_or(|r| r >= 2));
        }
    }
});
