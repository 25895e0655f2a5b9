//! Transition rates of the accelerated generator `N^2 L_ex + N^2 L_bd + L_cp`.

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Lattice, State};
use crate::params::{BoundaryData, ModelParams};

/// Contact-process rates at site `x`, indexed by target state. The entry for
/// the current state is zero.
#[inline]
pub fn contact_rates(cfg: &Configuration, lat: &Lattice, x: usize, p: &ModelParams) -> [f64; 4] {
    let mut n1 = 0u32;
    let mut n3 = 0u32;
    for &y in lat.neighbors_of(x) {
        match cfg.get(y) {
            1 => n1 += 1,
            3 => n3 += 1,
            _ => {}
        }
    }
    let birth = p.lambda1 * n1 as f64 + p.lambda2 * n3 as f64;
    let mut out = [0.0; 4];
    match cfg.get(x) {
        0 => {
            out[1] = birth;
            out[2] = p.release;
        }
        1 => {
            out[0] = 1.0;
            out[3] = p.release;
        }
        2 => {
            out[0] = 1.0;
            out[3] = birth;
        }
        _ => {
            out[1] = 1.0;
            out[2] = 1.0;
        }
    }
    out
}

/// Reservoir rates `N^(2 - theta) b_i(x/N)` at a face site, indexed by target
/// state, with the null transition to the current state dropped.
pub fn boundary_rates(
    lat: &Lattice,
    x: usize,
    cfg: &Configuration,
    p: &ModelParams,
    b: &BoundaryData,
) -> Result<[f64; 4]> {
    let mut r = reservoir_rates(lat, x, p, b).ok_or(Error::NotBoundarySite(x))?;
    r[cfg.get(x) as usize] = 0.0;
    Ok(r)
}

/// Reservoir rates to all four targets at a face site, or `None` in the bulk.
pub fn reservoir_rates(
    lat: &Lattice,
    x: usize,
    p: &ModelParams,
    b: &BoundaryData,
) -> Option<[f64; 4]> {
    let face = lat.face(x)?;
    let pos = lat.position(x);
    let speed = (lat.n() as f64).powf(2.0 - p.theta(face));
    let b4 = b.eval4(face, &pos[1..]);
    Some(b4.map(|v| speed * v))
}

/// Rate of each exchange clock: `D N^2` per unordered adjacent pair.
pub fn exchange_rate(n: usize, p: &ModelParams) -> f64 {
    p.diffusion * p.exchange_multiplier * (n as f64) * (n as f64)
}

/// Precomputed rate constants of one system.
#[derive(Debug, Clone)]
pub struct RateTable {
    params: ModelParams,
    exchange: f64,
    reservoir: Vec<[f64; 4]>,
}

impl RateTable {
    pub fn new(lat: &Lattice, p: &ModelParams, b: &BoundaryData) -> Self {
        let reservoir = (0..lat.site_count())
            .map(|x| reservoir_rates(lat, x, p, b).unwrap_or([0.0; 4]))
            .collect();
        RateTable {
            params: *p,
            exchange: exchange_rate(lat.n(), p),
            reservoir,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn exchange(&self) -> f64 {
        self.exchange
    }

    /// Reservoir rates at `x` to every target (zero in the bulk).
    pub fn reservoir(&self, x: usize) -> [f64; 4] {
        self.reservoir[x]
    }

    /// Total single-site flip rates (contact plus reservoir) by target state.
    #[inline]
    pub fn flip_rates(&self, cfg: &Configuration, lat: &Lattice, x: usize) -> [f64; 4] {
        let c = contact_rates(cfg, lat, x, &self.params);
        let r = self.reservoir[x];
        let mut out = [c[0] + r[0], c[1] + r[1], c[2] + r[2], c[3] + r[3]];
        out[cfg.get(x) as usize] = 0.0;
        out
    }

    /// Exchange partners owned by `x` (neighbours with larger index).
    #[inline]
    pub fn owned_partners<'a>(&self, lat: &'a Lattice, x: usize) -> &'a [usize] {
        let nb = lat.neighbors_of(x);
        let start = nb.partition_point(|&y| y < x);
        &nb[start..]
    }

    /// Sum of all event rates attributed to site `x`: its flips plus the
    /// non-null swaps on the pairs it owns.
    #[inline]
    pub fn site_total(&self, cfg: &Configuration, lat: &Lattice, x: usize) -> f64 {
        let f = self.flip_rates(cfg, lat, x);
        let mut total = f[0] + f[1] + f[2] + f[3];
        let s = cfg.get(x);
        for &y in self.owned_partners(lat, x) {
            if cfg.get(y) != s {
                total += self.exchange;
            }
        }
        total
    }

    /// All non-null transitions out of `cfg` with their rates.
    pub fn transitions(
        &self,
        cfg: &Configuration,
        lat: &Lattice,
        mech: Mechanisms,
    ) -> Vec<(Move, f64)> {
        let mut out = Vec::new();
        for x in 0..lat.site_count() {
            let s = cfg.get(x);
            let mut flips = [0.0; 4];
            if mech.contact {
                let c = contact_rates(cfg, lat, x, &self.params);
                for i in 0..4 {
                    flips[i] += c[i];
                }
            }
            if mech.boundary {
                let r = self.reservoir[x];
                for i in 0..4 {
                    flips[i] += r[i];
                }
            }
            for (to, &rate) in flips.iter().enumerate() {
                if to as State != s && rate > 0.0 {
                    out.push((
                        Move::Flip {
                            site: x,
                            to: to as State,
                        },
                        rate,
                    ));
                }
            }
            if mech.exchange {
                for &y in self.owned_partners(lat, x) {
                    if cfg.get(y) != s {
                        out.push((Move::Swap { a: x, b: y }, self.exchange));
                    }
                }
            }
        }
        out
    }
}

/// Which parts of the generator to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mechanisms {
    pub exchange: bool,
    pub boundary: bool,
    pub contact: bool,
}

impl Mechanisms {
    pub const ALL: Mechanisms = Mechanisms {
        exchange: true,
        boundary: true,
        contact: true,
    };
    pub const EXCHANGE: Mechanisms = Mechanisms {
        exchange: true,
        boundary: false,
        contact: false,
    };
    pub const BOUNDARY: Mechanisms = Mechanisms {
        exchange: false,
        boundary: true,
        contact: false,
    };
    pub const CONTACT: Mechanisms = Mechanisms {
        exchange: false,
        boundary: false,
        contact: true,
    };
}

/// An elementary transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Flip { site: usize, to: State },
    Swap { a: usize, b: usize },
}

impl Move {
    pub fn apply(&self, cfg: &mut Configuration) {
        match *self {
            Move::Flip { site, to } => cfg.set(site, to),
            Move::Swap { a, b } => cfg.swap(a, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 0.75, 0.25, 0.6, 0.0, 1.0).unwrap()
    }

    #[test]
    fn contact_rate_examples() {
        let lat = Lattice::new(1, 1).unwrap();
        let p = params();
        let cfg = Configuration::from_states(vec![1, 0, 3]).unwrap();
        let r = contact_rates(&cfg, &lat, 1, &p);
        assert_eq!(r, [0.0, p.lambda1 + p.lambda2, p.release, 0.0]);

        let cfg = Configuration::from_states(vec![0, 3, 2]).unwrap();
        assert_eq!(contact_rates(&cfg, &lat, 1, &p), [0.0, 1.0, 1.0, 0.0]);

        let cfg = Configuration::from_states(vec![2, 0, 0]).unwrap();
        assert_eq!(contact_rates(&cfg, &lat, 1, &p), [0.0, 0.0, p.release, 0.0]);

        // 2 -> 3 uses the same birth rate as 0 -> 1; 1 -> 3 at r.
        let cfg = Configuration::from_states(vec![1, 2, 1]).unwrap();
        assert_eq!(
            contact_rates(&cfg, &lat, 1, &p),
            [1.0, 0.0, 0.0, 2.0 * p.lambda1]
        );
        let cfg = Configuration::from_states(vec![0, 1, 0]).unwrap();
        assert_eq!(contact_rates(&cfg, &lat, 1, &p), [1.0, 0.0, 0.0, p.release]);
    }

    #[test]
    fn boundary_rate_examples() {
        let lat = Lattice::new(10, 1).unwrap();
        let cfg = Configuration::uniform(&lat, 0);
        let left = lat.face_sites(crate::lattice::Face::Left).start;
        let right = lat.face_sites(crate::lattice::Face::Right).start;

        let p = params().with_theta(0.0, 1.0);
        let b = BoundaryData::faces([0.3, 0.2, 0.25], [0.1, 0.2, 0.3]);
        let r = boundary_rates(&lat, left, &cfg, &p, &b).unwrap();
        assert!((r[1] - 30.0).abs() < 1e-12);
        assert_eq!(r[0], 0.0);
        let r = boundary_rates(&lat, right, &cfg, &p, &b).unwrap();
        assert!((r[2] - 2.0).abs() < 1e-12);

        let p = params().with_theta(2.0, 1.0);
        let r = boundary_rates(&lat, left, &cfg, &p, &b).unwrap();
        assert!((r[3] - 0.25).abs() < 1e-12);

        assert!(matches!(
            boundary_rates(&lat, 5, &cfg, &p, &b),
            Err(Error::NotBoundarySite(5))
        ));
    }

    #[test]
    fn exchange_rate_examples() {
        let mut p = params();
        assert_eq!(exchange_rate(10, &p), 100.0);
        p.diffusion = 0.5;
        assert_eq!(exchange_rate(20, &p), 200.0);
        p.diffusion = 1.0;
        assert_eq!(exchange_rate(1, &p), 1.0);
        p.exchange_multiplier = 2.0;
        assert_eq!(exchange_rate(10, &p), 200.0);
    }
}
