//! Binary field files.
//!
//! Layout, little-endian: 8-byte magic `OUFIELD1`, `u32` dimension, `u32`
//! points per axis, `u8` gauge (0 = φ, 1 = ψ), 7 zero bytes, `f64` extent,
//! then `N^m` complex samples as interleaved `(re, im)` `f64` pairs in
//! row-major order.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{ComplexField, Gauge, GridSpec};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 8] = b"OUFIELD1";

fn io_err(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn write_field<W: Write>(field: &ComplexField, mut w: W) -> Result<()> {
    let grid = field.grid();
    let mut header = Vec::with_capacity(32);
    header.extend_from_slice(FIELD_MAGIC);
    header.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    header.extend_from_slice(&(grid.points() as u32).to_le_bytes());
    header.push(match field.gauge() {
        Gauge::Phi => 0,
        Gauge::Psi => 1,
    });
    header.extend_from_slice(&[0u8; 7]);
    header.extend_from_slice(&grid.extent().to_le_bytes());
    w.write_all(&header).map_err(io_err)?;
    let mut body = Vec::with_capacity(field.samples().len() * 16);
    for z in field.samples() {
        body.extend_from_slice(&z.re.to_le_bytes());
        body.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&body).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn read_field<R: Read>(mut r: R) -> Result<ComplexField> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header).map_err(io_err)?;
    if &header[..8] != FIELD_MAGIC {
        return Err(Error::Format("bad field file magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let dim = u32_at(8) as usize;
    let points = u32_at(12) as usize;
    let gauge = match header[16] {
        0 => Gauge::Phi,
        1 => Gauge::Psi,
        g => return Err(Error::Format(format!("unknown gauge tag {g}"))),
    };
    let extent = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let grid = GridSpec::new(dim, extent, points)?;
    let mut body = vec![0u8; grid.len() * 16];
    r.read_exact(&mut body).map_err(io_err)?;
    let samples = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexField::new(grid, gauge, samples)
}
