//! CSV and image exports.
//!
//! CSV files start with a block of `# key: value` lines (crate version, seed,
//! parameters) followed by a header row. Images are binary PBM (`P4`) and
//! PGM (`P5`, maxval 255).

use std::fmt::Display;
use std::io::Write;

use serde::Serialize;

use crate::cca::ContinuousTrajectory;
use crate::error::{Error, Result};
use crate::lattice::StateId;
use crate::sca::SpaceTimeDiagram;

/// Ordered `key: value` pairs written as `#` comment lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    /// Starts with the crate version and, if given, the master seed.
    pub fn new(seed: Option<u64>) -> Self {
        let mut m = Self::default();
        m.push("version", env!("CARGO_PKG_VERSION"));
        if let Some(seed) = seed {
            m.push("seed", seed);
        }
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn with(mut self, key: &str, value: impl Display) -> Self {
        self.push(key, value);
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.entries {
            // Keep every entry on one comment line.
            let v = v.replace(['\n', '\r'], " ");
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// Metadata block, then serde records with a derived header row.
pub fn write_records<W, S, I>(mut w: W, meta: &Metadata, records: I) -> Result<()>
where
    W: Write,
    S: Serialize,
    I: IntoIterator<Item = S>,
{
    meta.write_to(&mut w)?;
    let mut csv = csv::Writer::from_writer(w);
    for r in records {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

/// Metadata block, then an explicit header and rows.
pub fn write_table<W: Write>(mut w: W, meta: &Metadata, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Columns `t, cell, p_0, .., p_{N-1}`.
pub fn trajectory_csv<W: Write>(w: W, meta: &Metadata, traj: &ContinuousTrajectory) -> Result<()> {
    let n = traj.n_states();
    let mut header = vec!["t".to_string(), "cell".to_string()];
    header.extend((0..n).map(|j| format!("p_{j}")));
    let rows = traj.steps().iter().enumerate().flat_map(|(t, c)| {
        (0..c.cells()).map(move |i| {
            let mut row = vec![t.to_string(), i.to_string()];
            row.extend(c.cell(i).iter().map(|p| p.to_string()));
            row
        })
    });
    write_table(w, meta, &header, rows)
}

/// Columns `t, cell, state`.
pub fn diagram_csv<W: Write>(w: W, meta: &Metadata, diagram: &SpaceTimeDiagram) -> Result<()> {
    let header = ["t", "cell", "state"].map(String::from);
    let rows = (0..diagram.rows()).flat_map(|t| {
        (0..diagram.cells()).map(move |i| {
            vec![t.to_string(), i.to_string(), diagram.get(t, i).index().to_string()]
        })
    });
    write_table(w, meta, &header, rows)
}

/// Grayscale image of the probability of `state`, one row per time step.
pub fn trajectory_pgm<W: Write>(mut w: W, traj: &ContinuousTrajectory, state: StateId) -> Result<()> {
    if state.index() >= traj.n_states() {
        return Err(Error::Domain(format!(
            "state {} is not valid for {} states",
            state.index(),
            traj.n_states()
        )));
    }
    let cells = traj.geometry().cells();
    write!(w, "P5\n{} {}\n255\n", cells, traj.steps().len())?;
    let mut buf = Vec::with_capacity(cells);
    for c in traj.steps() {
        buf.clear();
        buf.extend(c.state_probs(state).map(|p| (255.0 * p).round().clamp(0.0, 255.0) as u8));
        w.write_all(&buf)?;
    }
    Ok(())
}

/// `P4` bitmap of a binary diagram; state 1 is black.
pub fn diagram_pbm<W: Write>(mut w: W, diagram: &SpaceTimeDiagram) -> Result<()> {
    if diagram.n_states() != 2 {
        return Err(Error::Unsupported("PBM export needs a binary diagram; use PGM".into()));
    }
    let cells = diagram.cells();
    write!(w, "P4\n{} {}\n", cells, diagram.rows())?;
    let mut buf = vec![0u8; cells.div_ceil(8)];
    for t in 0..diagram.rows() {
        buf.fill(0);
        for i in 0..cells {
            if diagram.get(t, i).index() == 1 {
                buf[i / 8] |= 0x80 >> (i % 8);
            }
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// `P5` image of state indices, state `j` drawn as `round(255 j / (N-1))`.
pub fn diagram_pgm<W: Write>(mut w: W, diagram: &SpaceTimeDiagram) -> Result<()> {
    let cells = diagram.cells();
    let top = (diagram.n_states() - 1) as f64;
    write!(w, "P5\n{} {}\n255\n", cells, diagram.rows())?;
    let mut buf = Vec::with_capacity(cells);
    for t in 0..diagram.rows() {
        buf.clear();
        buf.extend((0..cells).map(|i| (255.0 * diagram.get(t, i).index() as f64 / top).round() as u8));
        w.write_all(&buf)?;
    }
    Ok(())
}
