//! CSV exchange of discrete controls and trajectories.
//!
//! Columns are `i,t,u_1..u_m` for controls and `i,t,x_1..x_n` for
//! trajectories. Values are written with 17 significant digits so that a
//! write/read round trip is exact.

use std::io::{Read, Write};

use crate::discretize::{DiscreteControl, Grid, Trajectory};
use crate::error::{Error, Result};

const MODULE: &str = "io";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows<'a>(
    out: impl Write,
    prefix: &str,
    dim: usize,
    grid: &Grid,
    rows: impl Iterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = ["i".to_string(), "t".to_string()]
        .into_iter()
        .chain((1..=dim).map(|k| format!("{prefix}_{k}")))
        .collect();
    w.write_record(&header)?;
    for (i, row) in rows.enumerate() {
        let record: Vec<String> = [i.to_string(), fmt(grid.node(i))]
            .into_iter()
            .chain(row.iter().map(|v| fmt(*v)))
            .collect();
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows(input: impl Read, prefix: &str) -> Result<(usize, Vec<f64>, usize)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let dim = header.len().saturating_sub(2);
    let expected: Vec<String> = ["i".to_string(), "t".to_string()]
        .into_iter()
        .chain((1..=dim).map(|k| format!("{prefix}_{k}")))
        .collect();
    if dim == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::invalid(MODULE, format!("expected header i,t,{prefix}_1..")));
    }
    let mut values = Vec::new();
    let mut count = 0;
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let index: usize = record[0]
            .parse()
            .map_err(|_| Error::invalid(MODULE, format!("row {row}: bad index")))?;
        if index != row {
            return Err(Error::invalid(MODULE, format!("row {row}: index {index} out of sequence")));
        }
        for field in record.iter().skip(2) {
            values.push(
                field
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(MODULE, format!("row {row}: bad number {field:?}")))?,
            );
        }
        count += 1;
    }
    Ok((dim, values, count))
}

pub fn write_control_csv(out: impl Write, c: &DiscreteControl, grid: &Grid) -> Result<()> {
    write_rows(out, "u", c.dim(), grid, c.rows())
}

pub fn write_trajectory_csv(out: impl Write, traj: &Trajectory, grid: &Grid) -> Result<()> {
    write_rows(out, "x", traj.dim(), grid, traj.states())
}

pub fn read_control_csv(input: impl Read) -> Result<DiscreteControl> {
    let (dim, values, _) = read_rows(input, "u")?;
    DiscreteControl::from_flat(dim, values)
}

pub fn read_trajectory_csv(input: impl Read) -> Result<Trajectory> {
    let (dim, values, _) = read_rows(input, "x")?;
    Trajectory::from_flat(dim, values)
}
