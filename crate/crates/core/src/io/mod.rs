//! Configuration, table parsers and artifact writers.

mod config;
mod field_csv;
mod tables;

pub use config::{
    load_config, parse_config, FluxConfig, GeometryConfig, PhysicsConfig, ProfileConfig, RunConfig, SolverConfig, Task,
};
pub use field_csv::{component_names, field_to_csv, parse_field_csv, read_field_csv, FieldRow, FieldTable};
pub use tables::{flux_from_table, parse_flux_table, parse_profile_samples, uniform_flux_values};

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `t, g, psi` rows at the given times.
pub fn series_to_csv(times: &[f64], g: &[f64], psi: &[f64]) -> String {
    let mut s = String::from("t,g,psi\n");
    for ((t, a), b) in times.iter().zip(g).zip(psi) {
        s += &format!("{},{},{}\n", field_csv::fmt(*t), field_csv::fmt(*a), field_csv::fmt(*b));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }

    #[test]
    fn series_has_header_and_full_precision() {
        let s = series_to_csv(&[0.0, 0.5], &[1.0, 0.1], &[2.0, 1.0 / 3.0]);
        let last = s.lines().last().unwrap();
        let v: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
        assert!(s.starts_with("t,g,psi\n"));
    }
}
