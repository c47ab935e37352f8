#![no_main]

use libfuzzer_sys::fuzz_target;
use periflux::io::{flux_from_table, parse_flux_table, uniform_flux_values};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(samples) = parse_flux_table(text) else { return };
    let period = samples.last().map(|s| s.0).filter(|t| *t > 0.0).unwrap_or(1.0);
    if uniform_flux_values(&samples, period).is_ok() {
        let _ = flux_from_table(&samples, period, None);
    }
});
