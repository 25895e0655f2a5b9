//! Exact continuous-time simulation (direct Gillespie method over a sum tree).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::rates::{Move, RateTable};
use super::tree::SumTree;
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Lattice, State};
use crate::params::{BoundaryData, ModelParams};

/// A realised transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Flip { site: usize, from: State, to: State },
    Swap { a: usize, b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub event: Event,
}

/// Initial state, optional event log and end point of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub initial: Configuration,
    pub events: Vec<EventRecord>,
    pub event_count: u64,
    pub final_config: Configuration,
    pub final_time: f64,
}

/// Time spent by each site in each state since the accumulator was reset.
#[derive(Debug, Clone)]
struct Occupation {
    start: f64,
    last: Vec<f64>,
    acc: Vec<[f64; 4]>,
}

impl Occupation {
    fn new(sites: usize, now: f64) -> Self {
        Occupation {
            start: now,
            last: vec![now; sites],
            acc: vec![[0.0; 4]; sites],
        }
    }

    #[inline]
    fn touch(&mut self, x: usize, state: State, now: f64) {
        self.acc[x][state as usize] += now - self.last[x];
        self.last[x] = now;
    }
}

pub struct Simulator<'a> {
    lat: &'a Lattice,
    table: RateTable,
    cfg: Configuration,
    tree: SumTree,
    time: f64,
    rng: ChaCha8Rng,
    seed: u64,
    events: u64,
    occupation: Option<Occupation>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        lat: &'a Lattice,
        p: &ModelParams,
        b: &BoundaryData,
        initial: Configuration,
        seed: u64,
    ) -> Result<Self> {
        p.validate()?;
        let table = RateTable::new(lat, p, b);
        Self::with_table(lat, table, initial, seed)
    }

    /// Builds a simulator around an explicit rate table.
    pub fn with_table(
        lat: &'a Lattice,
        table: RateTable,
        initial: Configuration,
        seed: u64,
    ) -> Result<Self> {
        if initial.len() != lat.site_count() {
            return Err(Error::InvalidConfig(format!(
                "configuration has {} sites, lattice has {}",
                initial.len(),
                lat.site_count()
            )));
        }
        let rates: Vec<f64> = (0..lat.site_count())
            .map(|x| table.site_total(&initial, lat, x))
            .collect();
        Ok(Simulator {
            lat,
            table,
            cfg: initial,
            tree: SumTree::from_leaves(&rates),
            time: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            events: 0,
            occupation: None,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn config(&self) -> &Configuration {
        &self.cfg
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    pub fn site_rates(&self) -> &[f64] {
        self.tree.leaves()
    }

    pub fn table(&self) -> &RateTable {
        &self.table
    }

    /// Full recomputation of every site rate from the current configuration.
    pub fn recomputed_rates(&self) -> Vec<f64> {
        (0..self.lat.site_count())
            .map(|x| self.table.site_total(&self.cfg, self.lat, x))
            .collect()
    }

    /// Returns `true` when the maintained sum tree equals a full rebuild.
    pub fn rates_consistent(&self) -> bool {
        self.tree == SumTree::from_leaves(&self.recomputed_rates())
    }

    /// Starts (or restarts) per-site occupation-time accounting at the current time.
    pub fn start_occupation(&mut self) {
        self.occupation = Some(Occupation::new(self.lat.site_count(), self.time));
    }

    /// Time-averaged `eta_i(x)` since [`start_occupation`](Self::start_occupation),
    /// evaluated up to time `now >= self.time()`.
    pub fn occupation_means(&self, now: f64) -> Option<Vec<[f64; 4]>> {
        let occ = self.occupation.as_ref()?;
        let span = now - occ.start;
        if span <= 0.0 {
            return None;
        }
        Some(
            occ.acc
                .iter()
                .enumerate()
                .map(|(x, a)| {
                    let mut out = *a;
                    out[self.cfg.get(x) as usize] += now - occ.last[x];
                    out.map(|v| v / span)
                })
                .collect(),
        )
    }

    /// Raw occupation integrals (not normalised) up to `now`.
    pub fn occupation_integrals(&self, now: f64) -> Option<Vec<[f64; 4]>> {
        let occ = self.occupation.as_ref()?;
        Some(
            occ.acc
                .iter()
                .enumerate()
                .map(|(x, a)| {
                    let mut out = *a;
                    out[self.cfg.get(x) as usize] += now - occ.last[x];
                    out
                })
                .collect(),
        )
    }

    #[inline]
    fn refresh(&mut self, x: usize) {
        let v = self.table.site_total(&self.cfg, self.lat, x);
        self.tree.set(x, v);
    }

    fn refresh_around(&mut self, x: usize) {
        self.refresh(x);
        for i in 0..self.lat.neighbors_of(x).len() {
            let y = self.lat.neighbors_of(x)[i];
            self.refresh(y);
        }
    }

    /// Draws the waiting time and the next event without applying it.
    #[inline]
    fn draw(&mut self) -> Result<(f64, Move)> {
        let total = self.tree.total();
        if !(total > 0.0) {
            return Err(Error::Absorbing);
        }
        let wait = self.rng.sample::<f64, _>(Exp1) / total;
        let u: f64 = self.rng.gen();
        let (x, mut rem) = self.tree.find(u * total);
        let flips = self.table.flip_rates(&self.cfg, self.lat, x);
        let mut last = None;
        for (to, &r) in flips.iter().enumerate() {
            if r > 0.0 {
                let mv = Move::Flip {
                    site: x,
                    to: to as State,
                };
                if rem < r {
                    return Ok((wait, mv));
                }
                rem -= r;
                last = Some(mv);
            }
        }
        let s = self.cfg.get(x);
        let ex = self.table.exchange();
        for &y in self.table.owned_partners(self.lat, x) {
            if self.cfg.get(y) != s {
                let mv = Move::Swap { a: x, b: y };
                if rem < ex {
                    return Ok((wait, mv));
                }
                rem -= ex;
                last = Some(mv);
            }
        }
        // Floating-point slack at the end of the site's interval.
        last.map(|mv| (wait, mv)).ok_or(Error::Absorbing)
    }

    fn apply(&mut self, mv: Move) -> Event {
        let now = self.time;
        match mv {
            Move::Flip { site, to } => {
                let from = self.cfg.get(site);
                if let Some(occ) = self.occupation.as_mut() {
                    occ.touch(site, from, now);
                }
                self.cfg.set(site, to);
                self.refresh_around(site);
                Event::Flip { site, from, to }
            }
            Move::Swap { a, b } => {
                if let Some(occ) = self.occupation.as_mut() {
                    occ.touch(a, self.cfg.get(a), now);
                    occ.touch(b, self.cfg.get(b), now);
                }
                self.cfg.swap(a, b);
                self.refresh_around(a);
                self.refresh_around(b);
                Event::Swap { a, b }
            }
        }
    }

    /// Advances by one event and returns `(waiting time, event)`.
    pub fn step(&mut self) -> Result<(f64, Event)> {
        let (wait, mv) = self.draw()?;
        self.time += wait;
        self.events += 1;
        Ok((wait, self.apply(mv)))
    }

    /// Runs until the next event would occur after `t_end`; the clock is then
    /// set to `t_end`. Before each event, `on_snapshot` receives the
    /// configuration in force at every pending snapshot time it passes.
    pub fn advance_to<F>(
        &mut self,
        t_end: f64,
        snapshots: &[f64],
        mut on_snapshot: F,
        mut log: Option<&mut Vec<EventRecord>>,
    ) -> Result<()>
    where
        F: FnMut(f64, &Configuration),
    {
        let start = self.time;
        let wanted: Vec<f64> = snapshots
            .iter()
            .copied()
            .filter(|&s| s >= start && s <= t_end)
            .collect();
        let mut pending = wanted.into_iter().peekable();
        loop {
            let (wait, mv) = match self.draw() {
                Ok(v) => v,
                Err(Error::Absorbing) => (f64::INFINITY, Move::Flip { site: 0, to: 0 }),
                Err(e) => return Err(e),
            };
            let next = self.time + wait;
            while let Some(&s) = pending.peek() {
                if s < next {
                    on_snapshot(s, &self.cfg);
                    pending.next();
                } else {
                    break;
                }
            }
            if next > t_end {
                self.time = t_end;
                return Ok(());
            }
            self.time = next;
            self.events += 1;
            let ev = self.apply(mv);
            if let Some(log) = log.as_deref_mut() {
                log.push(EventRecord {
                    time: next,
                    event: ev,
                });
            }
        }
    }

    /// Runs `count` events.
    pub fn run_events(&mut self, count: u64) -> Result<()> {
        for _ in 0..count {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_config(self) -> Configuration {
        self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Simulates from `initial` up to `t_end`, logging every event.
pub fn run(
    lat: &Lattice,
    initial: Configuration,
    p: &ModelParams,
    b: &BoundaryData,
    t_end: f64,
    seed: u64,
) -> Result<Trajectory> {
    run_with_snapshots(lat, initial, p, b, t_end, seed, &[], |_, _| {})
}

/// Like [`run`], also reporting the configuration at each snapshot time.
#[allow(clippy::too_many_arguments)]
pub fn run_with_snapshots<F>(
    lat: &Lattice,
    initial: Configuration,
    p: &ModelParams,
    b: &BoundaryData,
    t_end: f64,
    seed: u64,
    snapshots: &[f64],
    on_snapshot: F,
) -> Result<Trajectory>
where
    F: FnMut(f64, &Configuration),
{
    if !(t_end > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let mut sim = Simulator::new(lat, p, b, initial.clone(), seed)?;
    let mut events = Vec::new();
    sim.advance_to(t_end, snapshots, on_snapshot, Some(&mut events))?;
    Ok(Trajectory {
        seed,
        initial,
        event_count: sim.event_count(),
        events,
        final_time: sim.time(),
        final_config: sim.into_config(),
    })
}
