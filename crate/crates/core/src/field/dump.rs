//! Plain-text grid dumps.
//!
//! ```text
//! shape 4 4 spacing 1.5707963267948966e0 1.5707963267948966e0 time 0e0 components 2
//! <v0 v1>      one line per node, row-major (axis 0 slowest)
//! ```

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Grid, ScalarField, VectorField};

/// Parsed contents of a grid dump.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDump {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub time: f64,
    /// `values[node][component]`.
    pub values: Vec<Vec<f64>>,
}

fn header<F: Real>(out: &mut impl Write, grid: &Grid<F>, time: F, components: usize) -> Result<()> {
    write!(out, "shape")?;
    for n in grid.shape() {
        write!(out, " {n}")?;
    }
    write!(out, " spacing")?;
    for h in grid.spacing() {
        write!(out, " {:e}", h.to_f64_lossy())?;
    }
    writeln!(out, " time {:e} components {components}", time.to_f64_lossy())?;
    Ok(())
}

pub fn write_vector<F: Real>(out: &mut impl Write, field: &VectorField<F>, time: F) -> Result<()> {
    header(out, field.grid(), time, field.dim())?;
    for i in 0..field.grid().len() {
        let line: Vec<String> = field
            .components()
            .iter()
            .map(|c| format!("{:e}", c.values()[i].to_f64_lossy()))
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_scalar<F: Real>(out: &mut impl Write, field: &ScalarField<F>, time: F) -> Result<()> {
    header(out, field.grid(), time, 1)?;
    for v in field.values() {
        writeln!(out, "{:e}", v.to_f64_lossy())?;
    }
    Ok(())
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("grid dump line {line}: {msg}"))
}

pub fn read(input: impl BufRead) -> Result<GridDump> {
    let mut lines = input.lines();
    let head = lines.next().ok_or_else(|| bad(1, "missing header"))??;
    let tokens: Vec<&str> = head.split_whitespace().collect();
    let find = |key: &str| tokens.iter().position(|t| *t == key).ok_or_else(|| bad(1, format!("missing `{key}`")));
    let (is, ih, it, ic) = (find("shape")?, find("spacing")?, find("time")?, find("components")?);
    if !(is < ih && ih < it && it < ic) {
        return Err(bad(1, "header fields out of order"));
    }
    let num = |t: &str| t.parse::<f64>().map_err(|e| bad(1, format!("`{t}`: {e}")));
    let shape = tokens[is + 1..ih]
        .iter()
        .map(|t| t.parse::<usize>().map_err(|e| bad(1, format!("`{t}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let spacing = tokens[ih + 1..it].iter().map(|t| num(t)).collect::<Result<Vec<_>>>()?;
    if shape.len() != spacing.len() || it + 2 != ic || ic + 2 != tokens.len() {
        return Err(bad(1, "malformed header"));
    }
    let time = num(tokens[it + 1])?;
    let comps: usize = tokens[ic + 1].parse().map_err(|e| bad(1, format!("components: {e}")))?;
    let nodes: usize = shape.iter().product();
    let mut values = Vec::with_capacity(nodes);
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| bad(k + 2, format!("`{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != comps {
            return Err(bad(k + 2, format!("expected {comps} values, found {}", row.len())));
        }
        values.push(row);
    }
    if values.len() != nodes {
        return Err(bad(values.len() + 1, format!("expected {nodes} nodes, found {}", values.len())));
    }
    Ok(GridDump { shape, spacing, time, values })
}
