//! Traversability-estimate maps as CSV: a `i,j,k,probability` header, then
//! one row per voxel sorted by key.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use rustc_hash::FxHashMap;
use voxtrav_core::{Error, Result, VoxelKey};

pub type TeMap = FxHashMap<VoxelKey, f64>;

const HEADER: &str = "i,j,k,probability";

pub fn write_te_map<W: Write>(probs: &TeMap, out: W) -> Result<()> {
    let mut rows: Vec<_> = probs.iter().collect();
    rows.sort_unstable_by_key(|(k, _)| **k);
    let mut w = BufWriter::new(out);
    writeln!(w, "{HEADER}")?;
    for (k, p) in rows {
        writeln!(w, "{},{},{},{p}", k.i, k.j, k.k)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_te_map<R: Read>(input: R) -> Result<TeMap> {
    let mut lines = BufReader::new(input).lines();
    match lines.next().transpose()? {
        Some(h) if h.trim() == HEADER => {}
        other => return Err(Error::Parse(format!("expected TE map header {HEADER:?}, got {other:?}"))),
    }
    let mut out = TeMap::default();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("TE map line {}: {line:?}", n + 2));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let idx = |s: &str| s.parse::<i32>().map_err(|_| bad());
        let p: f64 = f[3].parse().map_err(|_| bad())?;
        if !(0.0..=1.0).contains(&p) {
            return Err(bad());
        }
        out.insert(VoxelKey::new(idx(f[0])?, idx(f[1])?, idx(f[2])?), p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejects() {
        let mut m = TeMap::default();
        m.insert(VoxelKey::new(1, -2, 3), 0.4);
        m.insert(VoxelKey::new(0, 0, 0), 1.0);
        let mut buf = Vec::new();
        write_te_map(&m, &mut buf).unwrap();
        assert_eq!(read_te_map(&buf[..]).unwrap(), m);
        assert!(read_te_map("1,2,3,0.5\n".as_bytes()).is_err());
        assert!(read_te_map(format!("{HEADER}\n1,2,3,1.5\n").as_bytes()).is_err());
    }
}
