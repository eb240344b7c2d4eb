// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = gparity::device::DeviceParams::from_json_str(text) {
            assert!(p.validate().is_ok());
        }
    }
});
