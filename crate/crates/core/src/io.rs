//! CSV input and output: tabulated densities, potentials, plans, path
//! tables, kernels and harness rows.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interpolation::PathRow;
use crate::measures::{GridMeasure, MeasureSpec};
use crate::scalar::Scalar;
use crate::schroedinger::{plan_density, SchroedingerPotentials};
use crate::semigroup::KernelMatrix;

/// Reads a density tabulated at the grid nodes, in row-major order, with
/// header `x,density` (1D) or `x,y,density` (2D). Coordinates must match the
/// grid nodes.
pub fn read_tabulated_density<S: Scalar, R: Read>(reader: R, grid: &Grid<S>) -> Result<MeasureSpec<S>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let expected: &[&str] = if grid.dimension() == 1 { &["x", "density"] } else { &["x", "y", "density"] };
    let headers = csv.headers()?.clone();
    if headers.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::Table(format!("expected header `{}`, found `{}`", expected.join(","), headers.iter().collect::<Vec<_>>().join(","))));
    }
    let tol = grid.spacing().as_f64() * 1e-6;
    let mut values = Vec::with_capacity(grid.len());
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        if row >= grid.len() {
            return Err(Error::Table(format!("more than the {} rows the grid has", grid.len())));
        }
        let field = |i: usize| -> Result<f64> {
            let raw = record.get(i).ok_or_else(|| Error::Table(format!("row {row}: missing column {i}")))?;
            raw.trim().parse::<f64>().map_err(|e| Error::Table(format!("row {row}: `{raw}`: {e}")))
        };
        for axis in 0..grid.dimension() {
            let given = field(axis)?;
            let node = grid.coordinate(row, axis).as_f64();
            if (given - node).abs() > tol {
                return Err(Error::Table(format!("row {row}: coordinate {given} does not match grid node {node}")));
            }
        }
        let density = field(grid.dimension())?;
        if density < 0.0 {
            return Err(Error::NegativeDensity { row, value: density });
        }
        values.push(S::lit(density));
    }
    if values.len() != grid.len() {
        return Err(Error::Table(format!("expected {} rows, got {}", grid.len(), values.len())));
    }
    Ok(MeasureSpec::Tabulated(values))
}

fn coordinates<S: Scalar>(grid: &Grid<S>, k: usize) -> Vec<String> {
    (0..grid.dimension()).map(|a| grid.coordinate(k, a).to_string()).collect()
}

fn axis_header(dimension: usize) -> Vec<&'static str> {
    if dimension == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

/// `x,density` (or `x,y,density`), density against Lebesgue measure.
pub fn write_density<S: Scalar, W: Write>(writer: W, measure: &GridMeasure<S>) -> Result<()> {
    let grid = measure.grid();
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = axis_header(grid.dimension());
    header.push("density");
    csv.write_record(&header)?;
    for (k, d) in measure.density().into_iter().enumerate() {
        let mut row = coordinates(grid, k);
        row.push(d.to_string());
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

/// `x,log_f,log_g` (2D: `x,y,log_f,log_g`).
pub fn write_potentials<S: Scalar, W: Write>(writer: W, pot: &SchroedingerPotentials<S>) -> Result<()> {
    let grid = pot.generator().grid();
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = axis_header(grid.dimension());
    header.extend(["log_f", "log_g"]);
    csv.write_record(&header)?;
    for k in 0..grid.len() {
        let mut row = coordinates(grid, k);
        row.push(pot.log_f()[k].to_string());
        row.push(pot.log_g()[k].to_string());
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

/// `x,y,gamma` for every node pair of a 1D plan.
pub fn write_plan<S: Scalar, W: Write>(writer: W, pot: &SchroedingerPotentials<S>) -> Result<()> {
    let grid = pot.generator().grid();
    grid.ensure_one_dimensional("plan dumps")?;
    let plan = plan_density(pot);
    let xs = grid.axis_points();
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["x", "y", "gamma"])?;
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in xs.iter().enumerate() {
            csv.write_record([x.to_string(), y.to_string(), plan.weight(i, j).to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// `s,entropy,fisher,kinetic,integrand`.
pub fn write_path<W: Write>(writer: W, rows: &[PathRow]) -> Result<()> {
    write_rows(writer, rows)
}

/// Header `t,N,L`, its values, then the kernel `p_t(x_i, x_j)` row by row.
pub fn write_kernel<S: Scalar, W: Write>(writer: W, kernel: &KernelMatrix<S>) -> Result<()> {
    let grid = kernel.grid();
    let mut csv = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    csv.write_record(["t", "N", "L"])?;
    csv.write_record([kernel.time().to_string(), grid.points().to_string(), grid.half_width().to_string()])?;
    for i in 0..kernel.size() {
        csv.write_record(kernel.log_row(i).iter().map(|v| v.exp().to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

/// One CSV row per serialized record, header from the field names.
pub fn write_rows<W: Write, R: Serialize>(writer: W, rows: &[R]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}
