use std::io::Write;

use super::solver::HarmonicField;
use crate::error::{Error, Result};

/// Header values written ahead of the potential matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMeta {
    pub nx: usize,
    pub ny: usize,
    pub cell_size: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// CSV matrix of potential values, one row per `j` (bottom row first),
/// preceded by `# key=value` metadata lines.
pub fn write_field_csv<W: Write>(field: &HarmonicField, mut w: W) -> Result<()> {
    let g = field.grid();
    writeln!(w, "# nx={}", g.nx())?;
    writeln!(w, "# ny={}", g.ny())?;
    writeln!(w, "# cell_size={}", g.cell_size())?;
    writeln!(w, "# residual={}", field.residual())?;
    writeln!(w, "# iterations={}", field.iterations())?;
    for j in 0..g.ny() {
        let row: Vec<String> = (0..g.nx()).map(|i| field.value(i, j).to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn parse_field_csv(text: &str) -> Result<(FieldMeta, Vec<f64>)> {
    let bad = |m: &str| Error::Io(format!("field csv: {m}"));
    let mut meta = FieldMeta {
        nx: 0,
        ny: 0,
        cell_size: 0.0,
        residual: 0.0,
        iterations: 0,
    };
    let mut values = Vec::new();
    for line in text.lines() {
        if let Some(kv) = line.strip_prefix("# ") {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("malformed header"))?;
            match k {
                "nx" => meta.nx = v.parse().map_err(|_| bad("nx"))?,
                "ny" => meta.ny = v.parse().map_err(|_| bad("ny"))?,
                "cell_size" => meta.cell_size = v.parse().map_err(|_| bad("cell_size"))?,
                "residual" => meta.residual = v.parse().map_err(|_| bad("residual"))?,
                "iterations" => meta.iterations = v.parse().map_err(|_| bad("iterations"))?,
                _ => return Err(bad("unknown header key")),
            }
        } else if !line.is_empty() {
            for cell in line.split(',') {
                values.push(cell.parse::<f64>().map_err(|_| bad("value"))?);
            }
        }
    }
    if values.len() != meta.nx * meta.ny {
        return Err(bad("value count does not match nx*ny"));
    }
    Ok((meta, values))
}
