//! Flat binary checkpoints.
//!
//! Layout, little endian: `"NSFD"`, version `u32`, `nx` and `ny` as `u64`,
//! `Lx` and `Ly` as `f64`, then the `f64` payloads u-faces, v-faces, θ and
//! pressure, each with `i` running fastest.

use std::io::{Read, Write};
use std::path::Path;

use super::{Domain, ScalarField, VectorField};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NSFD";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub velocity: VectorField,
    pub theta: ScalarField,
    pub pressure: ScalarField,
}

fn put(buf: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    let d = ck.velocity.domain;
    if ck.theta.domain != d || ck.pressure.domain != d {
        return Err(Error::Format("fields live on different grids".into()));
    }
    let mut buf = Vec::with_capacity(40 + 8 * (d.n_u() + d.n_v() + 2 * d.n_cells()));
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(d.nx as u64).to_le_bytes());
    buf.extend_from_slice(&(d.ny as u64).to_le_bytes());
    buf.extend_from_slice(&d.lx.to_le_bytes());
    buf.extend_from_slice(&d.ly.to_le_bytes());
    put(&mut buf, &ck.velocity.u);
    put(&mut buf, &ck.velocity.v);
    put(&mut buf, &ck.theta.data);
    put(&mut buf, &ck.pressure.data);
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes
            .get(pos..pos + n)
            .ok_or_else(|| Error::Format(format!("{} is truncated", path.display())))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("{} has no NSFD magic", path.display())));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let nx = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
    let ny = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
    let lx = f64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
    let ly = f64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
    let domain = Domain::new(lx, ly, nx, ny).map_err(|e| Error::Format(e.to_string()))?;
    let mut floats = |n: usize| -> Result<Vec<f64>> {
        let raw = take(8 * n)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    };
    let u = floats(domain.n_u())?;
    let v = floats(domain.n_v())?;
    let theta = floats(domain.n_cells())?;
    let pressure = floats(domain.n_cells())?;
    if pos != bytes.len() {
        return Err(Error::Format(format!("{} has trailing bytes", path.display())));
    }
    Ok(Checkpoint {
        velocity: VectorField { domain, u, v },
        theta: ScalarField { domain, data: theta },
        pressure: ScalarField {
            domain,
            data: pressure,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.nsfd");
        let d = Domain::new(1.0, 0.5, 5, 4).unwrap();
        let ck = Checkpoint {
            velocity: VectorField::from_fn(d, |x, y| x.sin() + y, |x, y| x * y / 3.0),
            theta: ScalarField::from_fn(d, |x, y| 1.0 + x + 0.1 * y),
            pressure: ScalarField::from_fn(d, |x, _| -x),
        };
        write_checkpoint(&path, &ck).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"NSFD");
        assert_eq!(bytes.len(), 40 + 8 * (24 + 25 + 20 + 20));
        assert_eq!(read_checkpoint(&path).unwrap(), ck);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad");
        std::fs::write(&path, b"NSFDxxxx").unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Format(_))));
    }
}
