//! Binary run files: a small header followed by bit-packed snapshots.
//!
//! Layout (little endian): magic "GKRUN1\0\0", N u64, d u64, K f64, seed u64,
//! id length u64 + UTF-8 id, snapshot count u64, then per snapshot the time
//! f64 and ceil(N^d / 64) words u64.

use super::sim::LatticeTrajectory;
use crate::error::{Error, Result};
use std::io::{Read, Write};

const MAGIC: &[u8; 8] = b"GKRUN1\0\0";

#[derive(Debug, Clone, PartialEq)]
pub struct RunFile {
    pub n: usize,
    pub d: usize,
    pub k: f64,
    pub seed: u64,
    pub rates_id: String,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<u8>>,
}

impl From<&LatticeTrajectory> for RunFile {
    fn from(t: &LatticeTrajectory) -> Self {
        RunFile {
            n: t.n,
            d: t.d,
            k: t.k,
            seed: t.seed,
            rates_id: t.rates.id.clone(),
            times: t.times.clone(),
            snapshots: t.snapshots.clone(),
        }
    }
}

pub fn pack(eta: &[u8]) -> Vec<u64> {
    let mut w = vec![0u64; eta.len().div_ceil(64)];
    for (i, &e) in eta.iter().enumerate() {
        if e != 0 {
            w[i / 64] |= 1 << (i % 64);
        }
    }
    w
}

pub fn unpack(words: &[u64], len: usize) -> Vec<u8> {
    (0..len).map(|i| ((words[i / 64] >> (i % 64)) & 1) as u8).collect()
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidInput(format!("run file i/o: {e}"))
}

impl RunFile {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        for x in [self.n as u64, self.d as u64] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        buf.extend_from_slice(&self.k.to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        buf.extend_from_slice(&(self.rates_id.len() as u64).to_le_bytes());
        buf.extend_from_slice(self.rates_id.as_bytes());
        buf.extend_from_slice(&(self.snapshots.len() as u64).to_le_bytes());
        for (t, s) in self.times.iter().zip(&self.snapshots) {
            buf.extend_from_slice(&t.to_le_bytes());
            for word in pack(s) {
                buf.extend_from_slice(&word.to_le_bytes());
            }
        }
        w.write_all(&buf).map_err(io_err)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(io_err)?;
        let mut c = Cursor { bytes: &bytes, pos: 0 };
        if c.take(8)? != MAGIC {
            return Err(Error::InvalidInput("not a run file".into()));
        }
        let n = c.u64()? as usize;
        let d = c.u64()? as usize;
        let k = f64::from_bits(c.u64()?);
        let seed = c.u64()?;
        let len = c.u64()? as usize;
        let rates_id =
            String::from_utf8(c.take(len)?.to_vec()).map_err(|_| Error::InvalidInput("bad rate id".into()))?;
        let count = c.u64()? as usize;
        if !(1..=2).contains(&d) || n == 0 {
            return Err(Error::InvalidInput("bad run file header".into()));
        }
        let sites = n.pow(d as u32);
        let words = sites.div_ceil(64);
        let mut times = Vec::with_capacity(count);
        let mut snapshots = Vec::with_capacity(count);
        for _ in 0..count {
            times.push(f64::from_bits(c.u64()?));
            let w = (0..words).map(|_| c.u64()).collect::<Result<Vec<u64>>>()?;
            snapshots.push(unpack(&w, sites));
        }
        Ok(RunFile { n, d, k, seed, rates_id, times, snapshots })
    }

    /// CSV with one row per snapshot: time followed by block densities.
    pub fn to_csv(&self, block: usize, mut w: impl Write) -> Result<()> {
        let mut out = String::new();
        for (t, s) in self.times.iter().zip(&self.snapshots) {
            let v: Vec<f64> = s.iter().map(|&e| e as f64).collect();
            let rho = super::fields::block_average(self.n, self.d, &v, block)?;
            out.push_str(&format!("{t}"));
            for x in rho {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        w.write_all(out.as_bytes()).map_err(io_err)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + k)
            .ok_or_else(|| Error::InvalidInput("truncated run file".into()))?;
        self.pos += k;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
