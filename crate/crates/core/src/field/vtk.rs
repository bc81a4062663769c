//! Legacy VTK (ASCII, STRUCTURED_POINTS) dump and reload of a field.
//!
//! Point data holds one field block `q` with the five basis components
//! `q0..q4`, then the scalars `phi` and `energy_density`. The title line
//! records `h`, `eps`, `a`, `b`, `c`.

use super::{energy, FieldError, QField};
use crate::potential::MaterialParams;
use crate::qtensor::QTensor;
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

pub fn write_vtk(path: &Path, field: &QField, params: &MaterialParams) -> Result<(), FieldError> {
    let text = to_vtk_string(field, params);
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn to_vtk_string(field: &QField, params: &MaterialParams) -> String {
    let grid = field.domain().grid();
    let n = grid.len();
    let phi = field.phi_map(params.s_star);
    let dens = energy(field, params).per_cell_density;
    let mut s = String::with_capacity(n * 160);
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(
        s,
        "nematic h={:e} eps={:e} a={:e} b={:e} c={:e}",
        grid.h,
        field.epsilon(),
        params.a,
        params.b,
        params.c
    );
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", grid.shape[0], grid.shape[1], grid.shape[2]);
    let _ = writeln!(s, "ORIGIN {:e} {:e} {:e}", grid.origin.x, grid.origin.y, grid.origin.z);
    let _ = writeln!(s, "SPACING {:e} {:e} {:e}", grid.h, grid.h, grid.h);
    let _ = writeln!(s, "POINT_DATA {n}");
    let _ = writeln!(s, "FIELD q 5");
    for k in 0..5 {
        let _ = writeln!(s, "q{k} 1 {n} double");
        for q in field.values() {
            let _ = writeln!(s, "{:e}", q.0[k]);
        }
    }
    for (name, data) in [("phi", &phi), ("energy_density", &dens)] {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in data.iter() {
            let _ = writeln!(s, "{v:e}");
        }
    }
    s
}

/// Contents of a dump file.
#[derive(Debug, Clone)]
pub struct VtkField {
    pub shape: [usize; 3],
    pub origin: Vector3<f64>,
    pub h: f64,
    pub epsilon: f64,
    pub params: MaterialParams,
    pub values: Vec<QTensor>,
    pub phi: Vec<f64>,
    pub energy_density: Vec<f64>,
}

pub fn read_vtk(path: &Path) -> Result<VtkField, FieldError> {
    let text = std::fs::read_to_string(path)?;
    parse_vtk(&text)
}

fn bad(msg: impl Into<String>) -> FieldError {
    FieldError::Parse(msg.into())
}

fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T, FieldError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(format!("cannot read {what}")))
}

pub fn parse_vtk(text: &str) -> Result<VtkField, FieldError> {
    let mut lines = text.lines();
    lines.next().ok_or_else(|| bad("empty file"))?;
    let title = lines.next().ok_or_else(|| bad("missing title"))?;
    let mut header = std::collections::HashMap::new();
    for kv in title.split_whitespace().skip(1) {
        if let Some((k, v)) = kv.split_once('=') {
            header.insert(k, v);
        }
    }
    let get = |k: &str| -> Result<f64, FieldError> { num(header.get(k).copied(), k) };
    let (h, epsilon) = (get("h")?, get("eps")?);
    let params = MaterialParams::new(get("a")?, get("b")?, get("c")?).map_err(|e| bad(e.to_string()))?;
    let mut tokens = lines.flat_map(|l| l.split_whitespace());
    let mut shape = [0usize; 3];
    let mut origin = Vector3::zeros();
    let mut comps: [Vec<f64>; 5] = Default::default();
    let mut phi = Vec::new();
    let mut dens = Vec::new();
    let mut n = 0usize;
    while let Some(tok) = tokens.next() {
        match tok {
            "DIMENSIONS" => {
                for s in shape.iter_mut() {
                    *s = num(tokens.next(), "DIMENSIONS")?;
                }
            }
            "ORIGIN" => {
                for k in 0..3 {
                    origin[k] = num(tokens.next(), "ORIGIN")?;
                }
            }
            "POINT_DATA" => n = num(tokens.next(), "POINT_DATA")?,
            "FIELD" => {
                tokens.next();
                let arrays: usize = num(tokens.next(), "FIELD")?;
                for _ in 0..arrays {
                    let name = tokens.next().ok_or_else(|| bad("array name"))?;
                    let k: usize = name
                        .strip_prefix('q')
                        .and_then(|d| d.parse().ok())
                        .filter(|&k| k < 5)
                        .ok_or_else(|| bad(format!("unexpected array {name}")))?;
                    let _ncomp: usize = num(tokens.next(), "components")?;
                    let len: usize = num(tokens.next(), "tuples")?;
                    tokens.next();
                    comps[k] = (0..len)
                        .map(|_| num(tokens.next(), name))
                        .collect::<Result<_, _>>()?;
                }
            }
            "SCALARS" => {
                let name = tokens.next().ok_or_else(|| bad("scalar name"))?.to_string();
                tokens.next();
                tokens.next();
                if tokens.next() != Some("LOOKUP_TABLE") {
                    return Err(bad("expected LOOKUP_TABLE"));
                }
                tokens.next();
                let data: Vec<f64> = (0..n)
                    .map(|_| num(tokens.next(), &name))
                    .collect::<Result<_, _>>()?;
                match name.as_str() {
                    "phi" => phi = data,
                    "energy_density" => dens = data,
                    _ => {}
                }
            }
            _ => {}
        }
    }
    if n != shape.iter().product::<usize>() || comps.iter().any(|c| c.len() != n) {
        return Err(bad("array lengths do not match DIMENSIONS"));
    }
    let values = (0..n)
        .map(|i| QTensor([comps[0][i], comps[1][i], comps[2][i], comps[3][i], comps[4][i]]))
        .collect();
    Ok(VtkField {
        shape,
        origin,
        h,
        epsilon,
        params,
        values,
        phi,
        energy_density: dens,
    })
}

impl VtkField {
    /// Rebuilds a field over `domain`, which must match the dumped grid.
    pub fn into_field(self, domain: std::sync::Arc<super::Domain>) -> Result<QField, FieldError> {
        let g = domain.grid();
        if g.shape != self.shape || (g.h - self.h).abs() > 1e-12 * self.h {
            return Err(bad("grid in file does not match the domain"));
        }
        QField::new(domain, self.values, self.epsilon)
    }
}
