//! Snapshot formats.
//!
//! Ensembles are CSV with a header line `q1,…,qN,p1,…,pN,re,im,weight`.
//!
//! Grid states are binary: the 8 bytes `DPGRID01`, a little-endian `u32`
//! header length, a UTF-8 JSON header `{"lo":[…],"hi":[…],"n":[…],"components":c}`,
//! then `len × c` little-endian `f64` values in flat grid order (last axis
//! fastest). Wavefunctions use `c = 2` (re, im interleaved), densities `c = 1`.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::density::GridDensity;
use super::grid::GridSpec;
use super::state::{EnsembleWave, GridWave};
use crate::error::{invalid, Error, Result};
use crate::phase::PhasePoint;

pub const GRID_MAGIC: &[u8; 8] = b"DPGRID01";

pub fn write_ensemble_csv<W: Write>(wave: &EnsembleWave, mut out: W) -> Result<()> {
    let n = wave.dof();
    let mut header: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
    header.extend((1..=n).map(|i| format!("p{i}")));
    header.extend(["re", "im", "weight"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for ((z, a), w) in wave.points().iter().zip(wave.amplitudes()).zip(wave.weights()) {
        let mut row: Vec<String> = z.q().iter().chain(z.p()).map(|v| v.to_string()).collect();
        row.extend([a.re, a.im, *w].map(|v| v.to_string()));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_ensemble_csv<R: BufRead>(input: R) -> Result<EnsembleWave> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| invalid("csv", "empty input"))??;
    let cols = header.split(',').count();
    if cols < 5 || (cols - 3) % 2 != 0 {
        return Err(invalid("csv", format!("unexpected header `{header}`")));
    }
    let n = (cols - 3) / 2;
    let (mut points, mut amps, mut weights) = (Vec::new(), Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid("csv", format!("row {}: {e}", k + 2)))?;
        if vals.len() != cols {
            return Err(Error::DimensionMismatch { expected: cols, got: vals.len() });
        }
        points.push(PhasePoint::new(vals[..n].to_vec(), vals[n..2 * n].to_vec())?);
        amps.push(Complex64::new(vals[2 * n], vals[2 * n + 1]));
        weights.push(vals[2 * n + 2]);
    }
    EnsembleWave::new(points, amps, weights)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridHeader {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
    components: usize,
}

fn write_grid<W: Write>(grid: &GridSpec, components: usize, values: impl Iterator<Item = f64>, mut out: W) -> Result<()> {
    let header = GridHeader { lo: grid.lo().to_vec(), hi: grid.hi().to_vec(), n: grid.shape().to_vec(), components };
    let json = serde_json::to_vec(&header)?;
    let len = u32::try_from(json.len()).map_err(|_| invalid("grid", "header too long"))?;
    out.write_all(GRID_MAGIC)?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(&json)?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_grid<R: Read>(mut input: R, components: usize) -> Result<(GridSpec, Vec<f64>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(invalid("grid file", "bad magic"));
    }
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut json)?;
    let header: GridHeader = serde_json::from_slice(&json)?;
    if header.components != components {
        return Err(invalid("grid file", format!("expected {components} components, found {}", header.components)));
    }
    let grid = GridSpec::new(header.lo, header.hi, header.n)?;
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    let want = grid.len() * components * 8;
    if raw.len() != want {
        return Err(Error::DimensionMismatch { expected: want, got: raw.len() });
    }
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((grid, values))
}

pub fn write_grid_wave<W: Write>(wave: &GridWave, out: W) -> Result<()> {
    write_grid(wave.grid(), 2, wave.values().iter().flat_map(|a| [a.re, a.im]), out)
}

pub fn read_grid_wave<R: Read>(input: R) -> Result<GridWave> {
    let (grid, raw) = read_grid(input, 2)?;
    GridWave::new(grid, raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

pub fn write_grid_density<W: Write>(rho: &GridDensity, out: W) -> Result<()> {
    write_grid(&rho.grid, 1, rho.values.iter().copied(), out)
}

pub fn read_grid_density<R: Read>(input: R) -> Result<GridDensity> {
    let (grid, values) = read_grid(input, 1)?;
    GridDensity::new(grid, values)
}
