#![no_main]

use libfuzzer_sys::fuzz_target;
use periflux::geometry::{make_profile, ProfileKind};
use periflux::io::parse_profile_samples;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(samples) = parse_profile_samples(text) else { return };
    assert!(samples.len() >= 3);
    let length = samples.last().unwrap().0;
    if let Ok(p) = make_profile(ProfileKind::Tabulated, 1.0, 0.0, length, Some(samples)) {
        let r = p.radius(0.5 * length);
        assert!(r > 0.0);
    }
});
