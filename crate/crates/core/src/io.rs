//! Binary serialization of sampled fields.
//!
//! A text header line `dims=<d> blocks=<b> N=<n₁,…> R=<R₁,…>` (one `N`, `R`
//! per block) is followed by the samples as little-endian `f64` pairs
//! `(re, im)` in storage order.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{SampledField, UniformGrid, C64};

fn join<T: std::fmt::Debug>(v: impl Iterator<Item = T>) -> String {
    v.map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

pub fn header(f: &SampledField) -> Result<String> {
    let dim = f.blocks()[0].dim();
    if f.blocks().iter().any(|g| g.dim() != dim) {
        return Err(Error::Format("blocks of different dimension cannot share a header".into()));
    }
    Ok(format!(
        "dims={dim} blocks={} N={} R={}",
        f.blocks().len(),
        join(f.blocks().iter().map(UniformGrid::points_per_axis)),
        join(f.blocks().iter().map(UniformGrid::half_width)),
    ))
}

pub fn write_field(mut w: impl Write, f: &SampledField) -> Result<()> {
    let io = |e: std::io::Error| Error::Format(e.to_string());
    writeln!(w, "{}", header(f)?).map_err(io)?;
    let mut buf = Vec::with_capacity(16 * f.data().len());
    for z in f.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf).map_err(io)
}

fn field<'a>(parts: &[(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    parts
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Format(format!("header lacks `{key}=`")))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("bad {what} `{s}`")))
}

pub fn read_field(mut r: impl BufRead) -> Result<SampledField> {
    let io = |e: std::io::Error| Error::Format(e.to_string());
    let mut line = String::new();
    r.read_line(&mut line).map_err(io)?;
    let parts: Vec<(&str, &str)> = line
        .split_whitespace()
        .map(|kv| kv.split_once('=').ok_or_else(|| Error::Format(format!("bad header entry `{kv}`"))))
        .collect::<Result<_>>()?;
    let dim: usize = parse(field(&parts, "dims")?, "dims")?;
    let blocks: usize = parse(field(&parts, "blocks")?, "blocks")?;
    let ns: Vec<usize> = field(&parts, "N")?.split(',').map(|s| parse(s, "N")).collect::<Result<_>>()?;
    let rs: Vec<f64> = field(&parts, "R")?.split(',').map(|s| parse(s, "R")).collect::<Result<_>>()?;
    if ns.len() != blocks || rs.len() != blocks {
        return Err(Error::Format(format!("{blocks} blocks but {} N and {} R values", ns.len(), rs.len())));
    }
    let grids = ns.iter().zip(&rs).map(|(&n, &h)| UniformGrid::new(dim, n, h)).collect::<Result<Vec<_>>>()?;
    let len: usize = grids.iter().map(UniformGrid::len).product();
    let mut bytes = vec![0u8; 16 * len];
    r.read_exact(&mut bytes).map_err(io)?;
    if r.read(&mut [0u8; 1]).map_err(io)? != 0 {
        return Err(Error::Format("trailing bytes after samples".into()));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    SampledField::new(grids, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_exact() {
        let g = UniformGrid::line(6, 1.5).unwrap();
        let f = SampledField::new(
            vec![g, g.dual()],
            (0..36).map(|k| C64::new((k as f64).sin() / 3.0, -(k as f64) * 1e-300)).collect(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert!(buf.starts_with(b"dims=1 blocks=2 N=6,6 R=1.5,1.0\n"));
        assert_eq!(buf.len(), 32 + 36 * 16);
        assert_eq!(read_field(&buf[..]).unwrap(), f);
    }

    #[test]
    fn rejects_damage() {
        let f = SampledField::zeros(vec![UniformGrid::line(4, 1.0).unwrap()]);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert!(read_field(&buf[..buf.len() - 1]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_field(&extra[..]).is_err());
        assert!(read_field(&b"dims=1 blocks=1 N=4\n"[..]).is_err());
    }
}
