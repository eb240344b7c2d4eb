// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = gparity::synthesis::read_phase_csv(data) {
        assert!(!p.is_empty());
        assert!(p.angles.iter().all(|a| a.is_finite()));
    }
});
