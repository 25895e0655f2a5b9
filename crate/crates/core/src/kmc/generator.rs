//! Exhaustive generator of the full chain on tiny lattices, and its
//! stationary distribution.
//!
//! Configurations are numbered by [`Configuration::code`]: the state of site
//! `x` is base-4 digit `x`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::rates::{Mechanisms, RateTable};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Lattice};
use crate::params::{BoundaryData, ModelParams};

/// Default cap on the number of configurations: `4^8`.
pub const DEFAULT_STATE_CAP: usize = 65_536;

/// Sparse generator: off-diagonal rates per row plus the diagonal.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    sites: usize,
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn n_states(&self) -> usize {
        self.diag.len()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Off-diagonal entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diag[from];
        }
        match self.rows[from].binary_search_by_key(&to, |&(j, _)| j) {
            Ok(k) => self.rows[from][k].1,
            Err(_) => 0.0,
        }
    }

    /// Row sums; zero up to rounding for a generator.
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.diag)
            .map(|(r, &d)| r.iter().map(|&(_, q)| q).sum::<f64>() + d)
            .collect()
    }

    /// `(Q f)(eta) = sum_eta' Q[eta, eta'] (f(eta') - f(eta))`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().map(|&(j, q)| q * (f[j] - f[i])).sum())
            .collect()
    }

    /// Row vector product `pi Q`.
    pub fn left_apply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(pi).map(|(d, p)| d * p).collect();
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, q) in r {
                out[j] += pi[i] * q;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n_states();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            m[(i, i)] = self.diag[i];
            for &(j, q) in r {
                m[(i, j)] = q;
            }
        }
        m
    }

    fn reachable(&self, forward: bool) -> usize {
        let n = self.n_states();
        let adj: Vec<Vec<usize>> = if forward {
            self.rows
                .iter()
                .map(|r| r.iter().map(|&(j, _)| j).collect())
                .collect()
        } else {
            let mut a = vec![Vec::new(); n];
            for (i, r) in self.rows.iter().enumerate() {
                for &(j, _) in r {
                    a[j].push(i);
                }
            }
            a
        };
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count
    }

    /// Whether every configuration reaches every other one.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n_states();
        self.reachable(true) == n && self.reachable(false) == n
    }

    /// Communicating classes that no transition leaves (Kosaraju).
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let n = self.n_states();
        // Forward pass: finishing order by iterative DFS.
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some(&mut (v, ref mut k)) = stack.last_mut() {
                if let Some(&(w, _)) = self.rows[v].get(*k) {
                    *k += 1;
                    if !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(v);
                    stack.pop();
                }
            }
        }
        let mut back = vec![Vec::new(); n];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, _) in r {
                back[j].push(i);
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        for &root in order.iter().rev() {
            if comp[root] != usize::MAX {
                continue;
            }
            comp[root] = count;
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for &w in &back[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        let mut leaves = vec![false; count];
        for (i, r) in self.rows.iter().enumerate() {
            if r.iter().any(|&(j, _)| comp[j] != comp[i]) {
                leaves[comp[i]] = true;
            }
        }
        let mut classes = vec![Vec::new(); count];
        for (v, &c) in comp.iter().enumerate() {
            if !leaves[c] {
                classes[c].push(v);
            }
        }
        classes.retain(|c| !c.is_empty());
        classes
    }
}

/// Builds the generator restricted to `mech`, refusing more than `cap` states.
pub fn generator_matrix(
    lat: &Lattice,
    p: &ModelParams,
    b: &BoundaryData,
    mech: Mechanisms,
    cap: usize,
) -> Result<GeneratorMatrix> {
    let sites = lat.site_count();
    let states = 1usize
        .checked_shl(2 * sites as u32)
        .filter(|&s| s <= cap && sites < 32)
        .ok_or(Error::TooLarge {
            states: if sites < 32 {
                1 << (2 * sites)
            } else {
                usize::MAX
            },
            cap,
        })?;
    let table = RateTable::new(lat, p, b);
    let mut rows = Vec::with_capacity(states);
    let mut diag = Vec::with_capacity(states);
    for code in 0..states {
        let cfg = Configuration::from_code(code, sites);
        let mut row: Vec<(usize, f64)> = table
            .transitions(&cfg, lat, mech)
            .into_iter()
            .map(|(mv, rate)| {
                let mut next = cfg.clone();
                mv.apply(&mut next);
                (next.code(), rate)
            })
            .collect();
        row.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (j, q) in row {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += q,
                _ => merged.push((j, q)),
            }
        }
        diag.push(-merged.iter().map(|&(_, q)| q).sum::<f64>());
        rows.push(merged);
    }
    Ok(GeneratorMatrix { sites, rows, diag })
}

/// Largest chain solved by dense LU; bigger ones use Gauss-Seidel.
pub const DENSE_LIMIT: usize = 1024;

const RESIDUAL_TARGET: f64 = 1e-10;

/// Solves `pi Q = 0`, `sum pi = 1`. The solution is unique when exactly one
/// communicating class is closed; transient configurations get zero mass.
pub fn stationary_distribution(q: &GeneratorMatrix) -> Result<Vec<f64>> {
    let closed = q.closed_classes();
    if closed.len() != 1 {
        return Err(Error::Reducible(format!(
            "{} closed classes, the stationary law is not unique",
            closed.len()
        )));
    }
    if let [only] = closed[0][..] {
        let mut pi = vec![0.0; q.n_states()];
        pi[only] = 1.0;
        return Ok(pi);
    }
    let pi = if q.n_states() <= DENSE_LIMIT {
        dense_stationary(q)?
    } else {
        gauss_seidel_stationary(q, 200_000)?
    };
    let res = residual(q, &pi);
    if res >= RESIDUAL_TARGET {
        return Err(Error::NoConvergence {
            residual: res,
            iterations: 0,
        });
    }
    Ok(pi)
}

/// `max |(pi Q)_j|`.
pub fn residual(q: &GeneratorMatrix, pi: &[f64]) -> f64 {
    q.left_apply(pi).iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn dense_stationary(q: &GeneratorMatrix) -> Result<Vec<f64>> {
    let n = q.n_states();
    // Q^T pi = 0 with the last equation replaced by normalisation.
    let mut a = q.to_dense().transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut pi = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Reducible("singular generator (rank deficiency)".into()))?;
    // One step of iterative refinement.
    let r = &rhs - &a * &pi;
    if let Some(dx) = lu.solve(&r) {
        pi += dx;
    }
    if pi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Reducible(
            "singular generator (rank deficiency)".into(),
        ));
    }
    Ok(pi.iter().copied().collect())
}

fn gauss_seidel_stationary(q: &GeneratorMatrix, max_sweeps: usize) -> Result<Vec<f64>> {
    let n = q.n_states();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, rate) in q.row(i) {
            incoming[j].push((i, rate));
        }
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut res = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        for j in 0..n {
            let inflow: f64 = incoming[j].iter().map(|&(i, rate)| pi[i] * rate).sum();
            pi[j] = inflow / -q.diagonal(j);
        }
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= s);
        if sweep % 10 == 0 {
            res = residual(q, &pi);
            if res < 0.01 * RESIDUAL_TARGET {
                return Ok(pi);
            }
        }
    }
    Err(Error::NoConvergence {
        residual: res,
        iterations: max_sweeps,
    })
}
