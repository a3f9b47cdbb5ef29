//! Path export: CSV and the compact `FBMP` binary dump.
//!
//! Binary layout (little-endian), one record per path:
//!
//! ```text
//! "FBMP"  u16 version  f64 H  u32 d  u32 n  f64 horizon  f64[d * (n+1)]
//! ```
//!
//! Values are stored coordinate by coordinate, each coordinate holding all
//! `n + 1` grid values including the origin. A file may hold several records
//! back to back.

use std::io::{Read, Write};

use super::{HurstParam, MultiPath, SampledPath, TimeGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FBMP";
pub const VERSION: u16 = 1;

/// Writes `t,x0,x1,...` rows, preceded by `# `-prefixed comment lines.
pub fn write_csv<W: Write>(mut w: W, path: &MultiPath, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    write!(w, "t")?;
    for c in 0..path.dim() {
        write!(w, ",x{c}")?;
    }
    writeln!(w)?;
    let t = path.grid().times();
    for (i, ti) in t.iter().enumerate() {
        write!(w, "{ti}")?;
        for c in path.coords() {
            write!(w, ",{}", c.values()[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(mut w: W, hurst: HurstParam, path: &MultiPath) -> std::io::Result<()> {
    let n = u32::try_from(path.grid().n_steps()).expect("grid too long for u32");
    let d = u32::try_from(path.dim()).expect("dimension too large for u32");
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&hurst.value().to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&path.grid().horizon().to_le_bytes())?;
    for c in path.coords() {
        for v in c.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// One decoded binary record.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub hurst: HurstParam,
    pub path: MultiPath,
}

/// Reads the next record, or `None` at a clean end of input.
pub fn read_binary<R: Read>(mut r: R) -> Result<Option<PathRecord>> {
    let mut magic = [0u8; 4];
    match read_exact_or_eof(&mut r, &mut magic)? {
        false => return Ok(None),
        true if &magic != MAGIC => {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        true => {}
    }
    let version = u16::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let hurst = HurstParam::new(f64::from_le_bytes(take(&mut r)?))?;
    let d = u32::from_le_bytes(take(&mut r)?) as usize;
    let n = u32::from_le_bytes(take(&mut r)?) as usize;
    let horizon = f64::from_le_bytes(take(&mut r)?);
    let grid = TimeGrid::new(horizon, n)?;
    let coords = (0..d)
        .map(|_| {
            let values = (0..=n)
                .map(|_| take(&mut r).map(f64::from_le_bytes))
                .collect::<Result<Vec<_>>>()?;
            SampledPath::new(grid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(PathRecord {
        hurst,
        path: MultiPath::new(coords)?,
    }))
}

pub fn read_all_binary<R: Read>(mut r: R) -> Result<Vec<PathRecord>> {
    let mut out = Vec::new();
    while let Some(rec) = read_binary(&mut r)? {
        out.push(rec);
    }
    Ok(out)
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated record: {e}")))?;
    Ok(buf)
}

fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(Error::Format("truncated record header".into())),
            Ok(k) => filled += k,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io("reading path dump", e)),
        }
    }
    Ok(true)
}
