//! CSV time series and legacy VTK snapshots.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chb_core::diagnostics::EnergyBreakdown;
use chb_core::fespace::{ScalarField, VectorField};
use chb_core::mesh::SimplicialMesh;
use chb_core::scheme::StepRecord;

use crate::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "t",
    "energy_total",
    "energy_interface",
    "energy_potential",
    "energy_elastic",
    "energy_fluid",
    "dissipation",
    "production",
    "energy_residual",
    "mass_phi",
    "mass_theta",
    "newton_iters",
];

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One line of the time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub energy: EnergyBreakdown,
    pub dissipation: f64,
    pub production: f64,
    pub energy_residual: f64,
    pub mass_phi: f64,
    pub mass_theta: f64,
    pub newton_iters: usize,
}

impl CsvRow {
    /// Row of the initial state: no rates, residual or iterations yet.
    pub fn initial(t: f64, energy: EnergyBreakdown, mass_phi: f64, mass_theta: f64) -> Self {
        Self {
            t,
            energy,
            dissipation: 0.0,
            production: 0.0,
            energy_residual: 0.0,
            mass_phi,
            mass_theta,
            newton_iters: 0,
        }
    }

    fn fields(&self) -> [String; 12] {
        let e = &self.energy;
        [
            fmt_f64(self.t),
            fmt_f64(e.total),
            fmt_f64(e.interface),
            fmt_f64(e.potential),
            fmt_f64(e.elastic),
            fmt_f64(e.fluid),
            fmt_f64(self.dissipation),
            fmt_f64(self.production),
            fmt_f64(self.energy_residual),
            fmt_f64(self.mass_phi),
            fmt_f64(self.mass_theta),
            self.newton_iters.to_string(),
        ]
    }
}

impl From<&StepRecord> for CsvRow {
    fn from(r: &StepRecord) -> Self {
        Self {
            t: r.t,
            energy: r.energy,
            dissipation: r.dissipation,
            production: r.production,
            energy_residual: r.energy_residual,
            mass_phi: r.mass_phi,
            mass_theta: r.mass_theta,
            newton_iters: r.newton_iters,
        }
    }
}

/// Streams rows to a CSV file, header first.
pub struct CsvWriter {
    inner: csv::Writer<File>,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Self::with_header(path, &CSV_HEADER)
    }

    pub fn with_header(path: &Path, header: &[&str]) -> Result<Self> {
        let mut inner = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        inner.write_record(header).map_err(|e| Error::csv(path, e))?;
        Ok(Self {
            inner,
            path: path.to_path_buf(),
        })
    }

    pub fn row(&mut self, row: &CsvRow) -> Result<()> {
        self.raw(&row.fields())
    }

    pub fn raw<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(|e| Error::csv(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_csv(rows: &[CsvRow], path: &Path) -> Result<()> {
    let mut w = CsvWriter::create(path)?;
    for r in rows {
        w.row(r)?;
    }
    w.flush()
}

/// Point data of one snapshot. All fields must live on `mesh`.
#[derive(Default)]
pub struct VtkFields<'a> {
    pub scalars: Vec<(&'a str, &'a [f64])>,
    pub vectors: Vec<(&'a str, &'a VectorField)>,
}

impl<'a> VtkFields<'a> {
    pub fn scalar(mut self, name: &'a str, f: &'a ScalarField) -> Self {
        self.scalars.push((name, f.values()));
        self
    }

    pub fn values(mut self, name: &'a str, v: &'a [f64]) -> Self {
        self.scalars.push((name, v));
        self
    }

    pub fn vector(mut self, name: &'a str, u: &'a VectorField) -> Self {
        self.vectors.push((name, u));
        self
    }
}

/// Legacy VTK 2.0 ASCII unstructured grid of triangles.
pub fn write_vtk(mesh: &SimplicialMesh, fields: &VtkFields, title: &str, path: &Path) -> Result<()> {
    let n = mesh.n_vertices();
    for (name, v) in &fields.scalars {
        if v.len() != n {
            return Err(Error::Config(format!("field {name} has {} values on {n} vertices", v.len())));
        }
    }
    for (name, u) in &fields.vectors {
        if u.values().len() != n {
            return Err(Error::Config(format!("field {name} does not live on the mesh")));
        }
    }
    let mut s = String::with_capacity(64 * n);
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = write!(s, "# vtk DataFile Version 2.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
    }
    let nc = mesh.n_cells();
    let _ = writeln!(s, "CELLS {nc} {}", 4 * nc);
    for c in mesh.cells() {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("5\n");
    }
    if !fields.scalars.is_empty() || !fields.vectors.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
    }
    for (name, v) in &fields.scalars {
        let _ = write!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default\n");
        for x in v.iter() {
            let _ = writeln!(s, "{x:e}");
        }
    }
    for (name, u) in &fields.vectors {
        let _ = writeln!(s, "VECTORS {name} double");
        for x in u.values() {
            let _ = writeln!(s, "{:e} {:e} 0", x[0], x[1]);
        }
    }
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }
}
