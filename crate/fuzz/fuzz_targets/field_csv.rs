#![no_main]

use libfuzzer_sys::fuzz_target;
use periflux::geometry::{build_grid, GeometryKind, MappedGrid, PipeProfile};
use periflux::io::{field_to_csv, parse_field_csv};
use std::sync::OnceLock;

fn grids() -> &'static [MappedGrid; 2] {
    static G: OnceLock<[MappedGrid; 2]> = OnceLock::new();
    G.get_or_init(|| {
        let p = PipeProfile::straight(1.0, 1.0).unwrap();
        [
            build_grid(&p, GeometryKind::Planar2D, 8, 8).unwrap(),
            build_grid(&p, GeometryKind::Axisym, 8, 8).unwrap(),
        ]
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(table) = parse_field_csv(text) else { return };
    for g in grids() {
        if let Ok(v) = table.to_field(g) {
            let again = field_to_csv(g, &v).unwrap();
            assert_eq!(parse_field_csv(&again).unwrap().to_field(g).unwrap(), v);
        }
    }
});
