//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `GSP1`, N as u64, a1 a2 a3 F as f64, then
//! for every mode in lexicographic order four complex values as (re, im) f64 pairs.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField4;
use crate::lattice::{FreqLattice, TorusSpec};

const MAGIC: &[u8; 4] = b"GSP1";

pub fn write_snapshot<W: Write>(mut w: W, f: &SpectralField4, froude: f64) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(f.lattice.n_max() as u64).to_le_bytes())?;
    for a in f.lattice.half_periods() {
        w.write_all(&a.to_le_bytes())?;
    }
    w.write_all(&froude.to_le_bytes())?;
    for c in &f.coeffs {
        for z in c {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a snapshot; returns the field and the stored Froude number.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(SpectralField4, f64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut nb = [0u8; 8];
    r.read_exact(&mut nb)?;
    let n_max = u64::from_le_bytes(nb) as usize;
    if n_max == 0 || n_max > 1024 {
        return Err(Error::Format(format!("implausible truncation N={n_max}")));
    }
    let a = [read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?];
    let froude = read_f64(&mut r)?;
    let spec = TorusSpec::new(a, froude, 1.0, 1.0).map_err(|e| Error::Format(e.to_string()))?;
    let lattice = Arc::new(FreqLattice::new(&spec, n_max));
    let mut f = SpectralField4::zeros(&lattice);
    for c in f.coeffs.iter_mut() {
        for z in c.iter_mut() {
            *z = Complex64::new(read_f64(&mut r)?, read_f64(&mut r)?);
        }
    }
    Ok((f, froude))
}
