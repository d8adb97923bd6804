//! Channel tensor files.
//!
//! Layout: five little-endian `u64` extents in `(n_rx, n_ry, n_tx, n_ty, n_f)`
//! order, then the samples in row-major order as little-endian `f64` pairs
//! `(re, im)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use nearfield_core::{ChannelTensor, Shape, RANK};

use crate::CliError;

pub fn write_channel(path: &Path, h: &ChannelTensor) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for n in h.shape() {
        out.write_all(&(n as u64).to_le_bytes()).map_err(io)?;
    }
    for v in h.values() {
        out.write_all(&v.re.to_le_bytes()).map_err(io)?;
        out.write_all(&v.im.to_le_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_channel(path: &Path) -> Result<ChannelTensor, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("reading {}: {e}", path.display()));
    let mut input = BufReader::new(File::open(path).map_err(io)?);
    let mut word = [0u8; 8];
    let mut shape: Shape = [0; RANK];
    for n in shape.iter_mut() {
        input.read_exact(&mut word).map_err(io)?;
        *n = usize::try_from(u64::from_le_bytes(word))
            .map_err(|_| CliError::Io(format!("{}: extent too large", path.display())))?;
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .filter(|&c| c > 0)
        .ok_or_else(|| CliError::Io(format!("{}: invalid shape {shape:?}", path.display())))?;
    let mut values = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        input.read_exact(&mut word).map_err(io)?;
        let re = f64::from_le_bytes(word);
        input.read_exact(&mut word).map_err(io)?;
        let im = f64::from_le_bytes(word);
        values.push(Complex64::new(re, im));
    }
    if input.read(&mut word).map_err(io)? != 0 {
        return Err(CliError::Io(format!(
            "{}: trailing bytes after samples",
            path.display()
        )));
    }
    ChannelTensor::new(shape, values).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
