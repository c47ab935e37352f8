//! Velocity snapshots as CSV, one row per staggered node.
//!
//! Header `xi,zeta,x,z,<components>`; each row carries the reference and
//! physical coordinates of one node followed by the components, only one of
//! which is filled (the component living at that node). Rows come in a fixed
//! order: transverse faces, axial faces, then swirl nodes, each sweeping
//! `zeta` slowest. Values are written with 17 significant digits, so a
//! write/read cycle reproduces the field bit for bit.

use crate::error::{PerifluxError, Result};
use crate::fields::VectorField;
use crate::geometry::{GeometryKind, MappedGrid};

const COORDS: [&str; 4] = ["xi", "zeta", "x", "z"];

pub fn component_names(kind: GeometryKind) -> &'static [&'static str] {
    match kind {
        GeometryKind::Planar2D => &["v_x", "v_z"],
        GeometryKind::Axisym => &["v_rho", "v_z", "v_theta"],
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Staggered nodes in file order: `(component, xi, zeta, index)`.
fn nodes(grid: &MappedGrid) -> Vec<(usize, f64, f64, usize)> {
    let mut out = Vec::with_capacity(grid.n_xface() + 2 * grid.n_center());
    for j in 0..grid.nzeta {
        for a in 0..=grid.nxi {
            out.push((0, grid.xi_face(a), grid.zeta_center(j), grid.x_idx(a, j)));
        }
    }
    for j in 0..grid.nzeta {
        for i in 0..grid.nxi {
            out.push((1, grid.xi_center(i), grid.zeta_face(j), grid.c_idx(i, j)));
        }
    }
    if grid.kind.has_swirl() {
        for j in 0..grid.nzeta {
            for i in 0..grid.nxi {
                out.push((2, grid.xi_center(i), grid.zeta_center(j), grid.c_idx(i, j)));
            }
        }
    }
    out
}

pub fn field_to_csv(grid: &MappedGrid, v: &VectorField) -> Result<String> {
    v.check(grid)?;
    let names = component_names(grid.kind);
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = COORDS.iter().chain(names).copied().collect();
    let csv_err = |e: csv::Error| PerifluxError::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    let mut row = vec![String::new(); header.len()];
    for (c, xi, zeta, idx) in nodes(grid) {
        let (x, z) = grid.physical(xi, zeta);
        row[0] = fmt(xi);
        row[1] = fmt(zeta);
        row[2] = fmt(x);
        row[3] = fmt(z);
        for s in row[4..].iter_mut() {
            s.clear();
        }
        let val = match c {
            0 => v.ux[idx],
            1 => v.uz[idx],
            _ => v.utheta.as_ref().map_or(0.0, |t| t[idx]),
        };
        // Physical column order puts the axial component second.
        row[4 + c] = fmt(val);
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| PerifluxError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| PerifluxError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRow {
    pub line: usize,
    pub coords: [f64; 4],
    pub values: Vec<Option<f64>>,
}

/// Parsed CSV before it is matched against a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub components: Vec<String>,
    pub rows: Vec<FieldRow>,
}

pub fn parse_field_csv(text: &str) -> Result<FieldTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| PerifluxError::parse(1, e.to_string()))?.clone();
    if header.len() < 5 || header.iter().take(4).ne(COORDS) {
        return Err(PerifluxError::parse(1, "header must start with xi,zeta,x,z and name at least one component"));
    }
    let components: Vec<String> = header.iter().skip(4).map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| PerifluxError::parse(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(PerifluxError::parse(line, format!("expected {} columns, found {}", header.len(), rec.len())));
        }
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| PerifluxError::parse(line, format!("`{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(PerifluxError::parse(line, "non-finite value"))
            }
        };
        let mut coords = [0.0; 4];
        for (c, s) in coords.iter_mut().zip(rec.iter()) {
            *c = num(s)?;
        }
        let values = rec
            .iter()
            .skip(4)
            .map(|s| if s.is_empty() { Ok(None) } else { num(s).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        rows.push(FieldRow { line, coords, values });
    }
    Ok(FieldTable { components, rows })
}

impl FieldTable {
    /// Rebuilds the field on `grid`; rows must match the grid nodes in file order.
    pub fn to_field(&self, grid: &MappedGrid) -> Result<VectorField> {
        let names = component_names(grid.kind);
        if self.components.iter().map(String::as_str).ne(names.iter().copied()) {
            return Err(PerifluxError::IncompatibleField(format!(
                "components {:?} do not match the grid's {:?}",
                self.components, names
            )));
        }
        let nodes = nodes(grid);
        if nodes.len() != self.rows.len() {
            return Err(PerifluxError::IncompatibleField(format!(
                "{} rows for a grid with {} nodes",
                self.rows.len(),
                nodes.len()
            )));
        }
        let tol = 1e-12 * (grid.length() + grid.profile.r0 * 4.0);
        let mut v = VectorField::zeros(grid);
        for ((c, xi, zeta, idx), row) in nodes.into_iter().zip(&self.rows) {
            let (x, z) = grid.physical(xi, zeta);
            let expect = [xi, zeta, x, z];
            if expect.iter().zip(&row.coords).any(|(a, b)| (a - b).abs() > tol) {
                return Err(PerifluxError::parse(row.line, "coordinates do not match the grid node"));
            }
            let filled: Vec<usize> = (0..row.values.len()).filter(|k| row.values[*k].is_some()).collect();
            if filled != [c] {
                return Err(PerifluxError::parse(row.line, format!("expected only column {} to be filled", names[c])));
            }
            let val = row.values[c].unwrap_or(0.0);
            match c {
                0 => v.ux[idx] = val,
                1 => v.uz[idx] = val,
                _ => {
                    if let Some(t) = v.utheta.as_mut() {
                        t[idx] = val;
                    }
                }
            }
        }
        v.no_slip = (0..grid.nzeta).all(|j| v.ux[grid.x_idx(0, j)] == 0.0 && v.ux[grid.x_idx(grid.nxi, j)] == 0.0);
        Ok(v)
    }
}

pub fn read_field_csv(grid: &MappedGrid, text: &str) -> Result<VectorField> {
    parse_field_csv(text)?.to_field(grid)
}
