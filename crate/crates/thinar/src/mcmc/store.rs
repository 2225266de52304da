//! Storage for posterior draws in constrained space.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"THINDRW1";

/// Per-chain matrices of constrained draws with a parameter-name column map
/// and post-warmup acceptance statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    pub names: Vec<String>,
    /// Row-major per chain: `chains[c][iter * n_params + p]`.
    pub chains: Vec<Vec<f64>>,
    pub n_params: usize,
    /// Mean post-warmup acceptance per chain.
    pub acceptance: Vec<f64>,
}

impl DrawStore {
    pub fn new(names: Vec<String>, n_chains: usize) -> Self {
        let n_params = names.len();
        DrawStore {
            names,
            chains: vec![Vec::new(); n_chains],
            n_params,
            acceptance: vec![0.0; n_chains],
        }
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_draws(&self, chain: usize) -> usize {
        self.chains[chain].len() / self.n_params
    }

    pub fn push_draw(&mut self, chain: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.n_params);
        self.chains[chain].extend_from_slice(values);
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// All draws of one parameter in one chain.
    pub fn column(&self, chain: usize, param: usize) -> Vec<f64> {
        self.chains[chain]
            .chunks(self.n_params)
            .map(|row| row[param])
            .collect()
    }

    /// Draws of one parameter pooled over chains.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_chains() * self.n_draws(0));
        for c in 0..self.n_chains() {
            out.extend(self.chains[c].chunks(self.n_params).map(|row| row[param]));
        }
        out
    }

    /// Long-format CSV: `chain,iter,parameter,value`.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "chain,iter,parameter,value")?;
        for (c, chain) in self.chains.iter().enumerate() {
            for (iter, row) in chain.chunks(self.n_params).enumerate() {
                for (p, v) in row.iter().enumerate() {
                    writeln!(w, "{c},{iter},{},{v}", self.names[p])?;
                }
            }
        }
        Ok(())
    }

    /// Compact binary layout: magic bytes, header, then row-major chain data.
    pub fn write_binary<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(self.n_params as u32).to_le_bytes())?;
        w.write_all(&(self.n_chains() as u32).to_le_bytes())?;
        for name in &self.names {
            let bytes = name.as_bytes();
            w.write_all(&(bytes.len() as u32).to_le_bytes())?;
            w.write_all(bytes)?;
        }
        for (c, chain) in self.chains.iter().enumerate() {
            w.write_all(&(self.n_draws(c) as u64).to_le_bytes())?;
            w.write_all(&self.acceptance[c].to_le_bytes())?;
            for v in chain {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Validation("not a draw-store file (bad magic bytes)".into()));
        }
        let n_params = read_u32(&mut r)? as usize;
        let n_chains = read_u32(&mut r)? as usize;
        let mut names = Vec::with_capacity(n_params);
        for _ in 0..n_params {
            let len = read_u32(&mut r)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            names.push(String::from_utf8(buf).map_err(|_| {
                Error::Validation("draw-store header contains invalid UTF-8".into())
            })?);
        }
        let mut store = DrawStore::new(names, n_chains);
        for c in 0..n_chains {
            let n_draws = read_u64(&mut r)? as usize;
            store.acceptance[c] = f64::from_le_bytes(read_arr(&mut r)?);
            let mut data = vec![0.0f64; n_draws * n_params];
            for v in data.iter_mut() {
                *v = f64::from_le_bytes(read_arr(&mut r)?);
            }
            store.chains[c] = data;
        }
        Ok(store)
    }

    /// Long-format CSV reader (the inverse of [`Self::write_csv`]).
    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Validation("empty draws CSV".into()))??;
        if header.trim() != "chain,iter,parameter,value" {
            return Err(Error::Validation(format!("unexpected draws CSV header: {header}")));
        }
        let mut names: Vec<String> = Vec::new();
        let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.splitn(4, ',').collect();
            if parts.len() != 4 {
                return Err(Error::Validation(format!(
                    "draws CSV line {} is malformed",
                    lineno + 2
                )));
            }
            let chain: usize = parse(parts[0], lineno)?;
            let iter: usize = parse(parts[1], lineno)?;
            let p = match names.iter().position(|n| n == parts[2]) {
                Some(p) => p,
                None => {
                    names.push(parts[2].to_string());
                    names.len() - 1
                }
            };
            let value: f64 = parse(parts[3], lineno)?;
            rows.push((chain, iter, p, value));
        }
        let n_chains = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
        let n_params = names.len();
        let mut store = DrawStore::new(names, n_chains);
        for c in 0..n_chains {
            let n_iters = rows
                .iter()
                .filter(|r| r.0 == c)
                .map(|r| r.1)
                .max()
                .map_or(0, |m| m + 1);
            store.chains[c] = vec![f64::NAN; n_iters * n_params];
        }
        for (c, i, p, v) in rows {
            store.chains[c][i * n_params + p] = v;
        }
        Ok(store)
    }
}

fn parse<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Validation(format!("draws CSV line {}: bad field '{s}'", lineno + 2)))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_arr(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_arr(r)?))
}

fn read_arr<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}
