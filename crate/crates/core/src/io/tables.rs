//! Two-column numeric tables: wall profiles `z, r` and flux samples `t, g`.
//!
//! Comma separated, `#` starts a comment line, blank lines are skipped and an
//! optional header row naming the two columns is accepted.

use crate::error::{PerifluxError, Result};
use crate::harmonic::{flux_fourier, FluxSignal};

/// Relative tolerance on the uniform spacing of tabulated samples.
const SPACING_TOL: f64 = 1e-9;

fn pairs(text: &str, names: [&str; 2]) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            PerifluxError::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(n + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(PerifluxError::parse(line, format!("expected 2 columns, found {}", rec.len())));
        }
        if out.is_empty() && n == 0 && rec[0].eq_ignore_ascii_case(names[0]) && rec[1].eq_ignore_ascii_case(names[1]) {
            continue;
        }
        let num = |s: &str, col: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| PerifluxError::parse(line, format!("`{s}` is not a number in column {col}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(PerifluxError::parse(line, format!("non-finite value in column {col}")))
            }
        };
        out.push((num(&rec[0], names[0])?, num(&rec[1], names[1])?));
    }
    Ok(out)
}

/// Wall samples `(z, r)`; geometric checks are left to profile construction.
pub fn parse_profile_samples(text: &str) -> Result<Vec<(f64, f64)>> {
    let s = pairs(text, ["z", "r"])?;
    if s.len() < 3 {
        return Err(PerifluxError::parse(0, "a tabulated profile needs at least three samples"));
    }
    Ok(s)
}

/// Flux samples `(t, g)`, parsed without interpretation.
pub fn parse_flux_table(text: &str) -> Result<Vec<(f64, f64)>> {
    pairs(text, ["t", "g"])
}

/// Checks uniform samples `t_i = i T / N`, `i = 0..N`, and returns the values.
/// A closing sample at `t = T` is accepted when it repeats the first value.
pub fn uniform_flux_values(samples: &[(f64, f64)], period: f64) -> Result<Vec<f64>> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(PerifluxError::invalid("T", "period must be positive"));
    }
    let mut s = samples;
    if s.len() >= 2 {
        let (t_last, g_last) = s[s.len() - 1];
        if (t_last - period).abs() <= SPACING_TOL * period {
            if (g_last - s[0].1).abs() > 1e-10 * s.iter().map(|p| p.1.abs()).fold(1.0, f64::max) {
                return Err(PerifluxError::invalid("flux table", "g(T) differs from g(0)"));
            }
            s = &s[..s.len() - 1];
        }
    }
    if s.is_empty() {
        return Err(PerifluxError::invalid("flux table", "no samples"));
    }
    let h = period / s.len() as f64;
    for (i, (t, _)) in s.iter().enumerate() {
        if (t - i as f64 * h).abs() > SPACING_TOL * period {
            return Err(PerifluxError::invalid(
                "flux table",
                format!("sample {i} at t = {t}, expected {} for uniform spacing over [0, T)", i as f64 * h),
            ));
        }
    }
    Ok(s.iter().map(|p| p.1).collect())
}

/// Flux signal from a table of uniform samples.
pub fn flux_from_table(samples: &[(f64, f64)], period: f64, k: Option<usize>) -> Result<FluxSignal> {
    flux_fourier(period, &uniform_flux_values(samples, period)?, k)
}
