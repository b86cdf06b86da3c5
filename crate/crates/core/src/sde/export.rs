use std::io::{self, Read, Write};

use super::PathEnsemble;

pub const MAGIC: &[u8; 4] = b"MFPE";
pub const VERSION: u32 = 1;

/// One row per kept path per save time: `pathId,time,state`.
pub fn write_csv<W: Write>(ens: &PathEnsemble, mut w: W) -> io::Result<()> {
    writeln!(w, "pathId,time,state")?;
    let nt = ens.times.len();
    for (k, id) in ens.path_ids.iter().enumerate() {
        for (i, t) in ens.times.iter().enumerate() {
            writeln!(w, "{id},{t:e},{:e}", ens.states[k * nt + i])?;
        }
    }
    Ok(())
}

/// Binary layout, all little-endian:
///
/// ```text
/// magic "MFPE" | version u32 | n_paths u64 | kept u64 | n_times u64 | seed u64 | epsilon f64
/// times [f64; n_times] | path ids [u64; kept] | states [f64; kept × n_times]
/// ```
pub fn write_binary<W: Write>(ens: &PathEnsemble, mut w: W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [ens.n_paths as u64, ens.kept() as u64, ens.times.len() as u64, ens.seed] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&ens.epsilon.to_le_bytes())?;
    for t in &ens.times {
        w.write_all(&t.to_le_bytes())?;
    }
    for id in &ens.path_ids {
        w.write_all(&id.to_le_bytes())?;
    }
    for s in &ens.states {
        w.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a file written by [`write_binary`]. Flagged-path details are not
/// stored; the returned ensemble records only their count via `n_paths`.
pub fn read_binary<R: Read>(mut r: R) -> io::Result<PathEnsemble> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not an MFPE file"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(bad("unsupported MFPE version"));
    }
    let mut b8 = [0u8; 8];
    let mut u64s = [0u64; 4];
    for v in &mut u64s {
        r.read_exact(&mut b8)?;
        *v = u64::from_le_bytes(b8);
    }
    let [n_paths, kept, nt, seed] = u64s;
    if kept > n_paths {
        return Err(bad("kept paths exceed total"));
    }
    r.read_exact(&mut b8)?;
    let epsilon = f64::from_le_bytes(b8);
    let mut f64s = |n: u64| -> io::Result<Vec<f64>> {
        (0..n)
            .map(|_| {
                r.read_exact(&mut b8)?;
                Ok(f64::from_le_bytes(b8))
            })
            .collect()
    };
    let times = f64s(nt)?;
    let ids = f64s(kept)?.into_iter().map(|v| v.to_bits()).collect();
    let states = f64s(kept * nt)?;
    Ok(PathEnsemble {
        times,
        path_ids: ids,
        states,
        flagged: Vec::new(),
        n_paths: n_paths as usize,
        seed,
        epsilon,
    })
}
