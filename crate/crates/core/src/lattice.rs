//! Cylinder lattice `{-N..N} x T_N^{d-1}` and four-state configurations.
//!
//! Sites are enumerated row-major with axis 1 slowest, so that index
//! `(x1 + N) * N^(d-1) + x2 * N^(d-2) + ... + xd` addresses site `x`.
//! Axis 1 has open ends; axes `2..d` wrap modulo `N`.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

/// Site state: 0 empty, 1 wild, 2 sterile, 3 wild and sterile.
pub type State = u8;

pub const EMPTY: State = 0;
pub const WILD: State = 1;
pub const STERILE: State = 2;
pub const MIXED: State = 3;

/// `eta = 2 * omega + xi`.
#[inline]
pub fn encode(xi: bool, omega: bool) -> State {
    2 * omega as u8 + xi as u8
}

/// Inverse of [`encode`]: returns `(xi, omega)`.
#[inline]
pub fn decode(state: State) -> Result<(bool, bool)> {
    if state > 3 {
        return Err(Error::InvalidState(state));
    }
    Ok((state & 1 == 1, state & 2 == 2))
}

/// Indicator `eta_i(x)` for `i in 0..=3`, written through the `(xi, omega)` bits.
#[inline]
pub fn indicator(state: State, i: State) -> f64 {
    let xi = (state & 1) as f64;
    let omega = ((state >> 1) & 1) as f64;
    match i {
        0 => (1.0 - xi) * (1.0 - omega),
        1 => xi * (1.0 - omega),
        2 => (1.0 - xi) * omega,
        3 => xi * omega,
        _ => 0.0,
    }
}

/// Which open face of the cylinder a site sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct Lattice {
    n: usize,
    d: usize,
    slab: usize,
    site_count: usize,
    nbr_offsets: Vec<usize>,
    nbr_list: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

impl Lattice {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidLattice(format!(
                "half-width and dimension must be positive (got N={n}, d={d})"
            )));
        }
        let slab = n
            .checked_pow((d - 1) as u32)
            .ok_or_else(|| Error::InvalidLattice("lattice too large".into()))?;
        let site_count = (2 * n + 1)
            .checked_mul(slab)
            .ok_or_else(|| Error::InvalidLattice("lattice too large".into()))?;

        let mut lat = Lattice {
            n,
            d,
            slab,
            site_count,
            nbr_offsets: Vec::with_capacity(site_count + 1),
            nbr_list: Vec::new(),
            pairs: Vec::new(),
        };

        let mut coords = vec![0i64; d];
        lat.nbr_offsets.push(0);
        for idx in 0..site_count {
            lat.fill_coords(idx, &mut coords);
            let mut nb: Vec<usize> = Vec::with_capacity(2 * d);
            for k in 0..d {
                for step in [-1i64, 1] {
                    let mut y = coords.clone();
                    if k == 0 {
                        y[0] += step;
                        if y[0].unsigned_abs() as usize > n {
                            continue;
                        }
                    } else {
                        y[k] = (y[k] + step).rem_euclid(n as i64);
                    }
                    let j = lat.index_unchecked(&y);
                    if j != idx && !nb.contains(&j) {
                        nb.push(j);
                    }
                }
            }
            nb.sort_unstable();
            for &j in &nb {
                if j > idx {
                    lat.pairs.push((idx, j));
                }
            }
            lat.nbr_list.extend_from_slice(&nb);
            lat.nbr_offsets.push(lat.nbr_list.len());
        }
        Ok(lat)
    }

    /// Half-width `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    /// Number of sites per face, `N^(d-1)`.
    pub fn face_size(&self) -> usize {
        self.slab
    }

    fn index_unchecked(&self, x: &[i64]) -> usize {
        let mut idx = (x[0] + self.n as i64) as usize;
        for &xk in &x[1..] {
            idx = idx * self.n + xk as usize;
        }
        idx
    }

    pub fn index(&self, x: &[i64]) -> Result<usize> {
        if x.len() != self.d
            || x[0].unsigned_abs() as usize > self.n
            || x[1..].iter().any(|&c| c < 0 || c as usize >= self.n)
        {
            return Err(Error::SiteOutOfRange(x.to_vec()));
        }
        Ok(self.index_unchecked(x))
    }

    fn fill_coords(&self, mut idx: usize, out: &mut [i64]) {
        for k in (1..self.d).rev() {
            out[k] = (idx % self.n) as i64;
            idx /= self.n;
        }
        out[0] = idx as i64 - self.n as i64;
    }

    pub fn coords(&self, idx: usize) -> Result<Vec<i64>> {
        self.check(idx)?;
        let mut out = vec![0; self.d];
        self.fill_coords(idx, &mut out);
        Ok(out)
    }

    /// Macroscopic position `x / N`: axis 1 in `[-1, 1]`, others in `[0, 1)`.
    pub fn position(&self, idx: usize) -> Vec<f64> {
        let mut c = vec![0; self.d];
        self.fill_coords(idx, &mut c);
        c.iter().map(|&v| v as f64 / self.n as f64).collect()
    }

    fn check(&self, idx: usize) -> Result<()> {
        if idx >= self.site_count {
            Err(Error::IndexOutOfRange(idx))
        } else {
            Ok(())
        }
    }

    /// Neighbours of a site, sorted by index.
    #[inline]
    pub fn neighbors_of(&self, idx: usize) -> &[usize] {
        &self.nbr_list[self.nbr_offsets[idx]..self.nbr_offsets[idx + 1]]
    }

    pub fn neighbors(&self, idx: usize) -> Result<&[usize]> {
        self.check(idx)?;
        Ok(self.neighbors_of(idx))
    }

    /// Unordered adjacent pairs `(x, y)` with `x < y`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    #[inline]
    pub fn face(&self, idx: usize) -> Option<Face> {
        let row = idx / self.slab;
        if row == 0 {
            Some(Face::Left)
        } else if row == 2 * self.n {
            Some(Face::Right)
        } else {
            None
        }
    }

    /// Sites of `Gamma_N^-` or `Gamma_N^+`.
    pub fn face_sites(&self, face: Face) -> std::ops::Range<usize> {
        match face {
            Face::Left => 0..self.slab,
            Face::Right => 2 * self.n * self.slab..self.site_count,
        }
    }

    /// Reflection `x1 -> -x1`, as a site permutation.
    pub fn reflect(&self, idx: usize) -> usize {
        let row = idx / self.slab;
        let rest = idx % self.slab;
        (2 * self.n - row) * self.slab + rest
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    states: Vec<State>,
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"SITC";
const SNAPSHOT_VERSION: u8 = 1;

impl Configuration {
    pub fn uniform(lat: &Lattice, state: State) -> Self {
        Configuration {
            states: vec![state & 3; lat.site_count()],
        }
    }

    pub fn from_states(states: Vec<State>) -> Result<Self> {
        if let Some(&bad) = states.iter().find(|&&s| s > 3) {
            return Err(Error::InvalidState(bad));
        }
        Ok(Configuration { states })
    }

    /// Configuration whose state at site `x` is digit `x` of `code` in base 4.
    pub fn from_code(code: usize, sites: usize) -> Self {
        let states = (0..sites)
            .map(|x| ((code >> (2 * x)) & 3) as State)
            .collect();
        Configuration { states }
    }

    pub fn code(&self) -> usize {
        self.states
            .iter()
            .enumerate()
            .fold(0usize, |acc, (x, &s)| acc | ((s as usize) << (2 * x)))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize) -> State {
        self.states[x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, s: State) {
        self.states[x] = s & 3;
    }

    #[inline]
    pub fn swap(&mut self, x: usize, y: usize) {
        self.states.swap(x, y);
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn xi(&self, x: usize) -> bool {
        self.states[x] & 1 == 1
    }

    pub fn omega(&self, x: usize) -> bool {
        self.states[x] & 2 == 2
    }

    /// Number of neighbours of `x` in state `i`.
    #[inline]
    pub fn count_neighbors(&self, lat: &Lattice, x: usize, i: State) -> usize {
        lat.neighbors_of(x)
            .iter()
            .filter(|&&y| self.states[y] == i)
            .count()
    }

    /// Newline-delimited text snapshot with a `#` header line.
    pub fn write_text<W: Write>(&self, lat: &Lattice, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# sitsim-config version={} N={} d={} sites={}",
            SNAPSHOT_VERSION,
            lat.n(),
            lat.dim(),
            self.states.len()
        )?;
        for s in &self.states {
            writeln!(w, "{s}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<(usize, usize, Self)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Snapshot("empty input".into()))?
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        let field = |key: &str| -> Result<usize> {
            header
                .split_whitespace()
                .find_map(|tok| tok.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Snapshot(format!("header missing {key}")))
        };
        if !header.starts_with("# sitsim-config") {
            return Err(Error::Snapshot("bad header".into()));
        }
        let (n, d, sites) = (field("N=")?, field("d=")?, field("sites=")?);
        let mut states = Vec::with_capacity(sites);
        for line in lines {
            let line = line.map_err(|e| Error::Snapshot(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let s: u8 = t
                .parse()
                .map_err(|_| Error::Snapshot(format!("bad state {t:?}")))?;
            states.push(s);
        }
        if states.len() != sites {
            return Err(Error::Snapshot(format!(
                "expected {sites} states, found {}",
                states.len()
            )));
        }
        Ok((n, d, Configuration::from_states(states)?))
    }

    /// Packed binary snapshot: magic `SITC`, version byte, `N` and `d` as
    /// little-endian u32, site count as little-endian u64, then four sites per
    /// byte with site `4k + j` in bits `2j..2j+2` of byte `k`.
    pub fn write_binary<W: Write>(&self, lat: &Lattice, mut w: W) -> std::io::Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&[SNAPSHOT_VERSION])?;
        w.write_all(&(lat.n() as u32).to_le_bytes())?;
        w.write_all(&(lat.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.states.len() as u64).to_le_bytes())?;
        let packed: Vec<u8> = self
            .states
            .chunks(4)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (j, &s)| acc | (s << (2 * j)))
            })
            .collect();
        w.write_all(&packed)
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<(usize, usize, Self)> {
        let io = |e: std::io::Error| Error::Snapshot(e.to_string());
        let mut head = [0u8; 21];
        r.read_exact(&mut head).map_err(io)?;
        if &head[0..4] != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        if head[4] != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {}", head[4])));
        }
        let n = u32::from_le_bytes(head[5..9].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(head[9..13].try_into().unwrap()) as usize;
        let sites = u64::from_le_bytes(head[13..21].try_into().unwrap()) as usize;
        let mut packed = vec![0u8; sites.div_ceil(4)];
        r.read_exact(&mut packed).map_err(io)?;
        let states = (0..sites)
            .map(|x| (packed[x / 4] >> (2 * (x % 4))) & 3)
            .collect();
        Ok((n, d, Configuration { states }))
    }
}
