/// Binary sum tree over per-site rates: `O(log n)` update and sampling.
///
/// Internal nodes are always recomputed as `left + right`, so the tree after
/// any sequence of updates is bit-identical to one rebuilt from its leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    cap: usize,
    len: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(len: usize) -> Self {
        let cap = len.max(1).next_power_of_two();
        SumTree {
            cap,
            len,
            nodes: vec![0.0; 2 * cap],
        }
    }

    pub fn from_leaves(values: &[f64]) -> Self {
        let mut t = SumTree::new(values.len());
        t.nodes[t.cap..t.cap + values.len()].copy_from_slice(values);
        for i in (1..t.cap).rev() {
            t.nodes[i] = t.nodes[2 * i] + t.nodes[2 * i + 1];
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.cap + i]
    }

    pub fn leaves(&self) -> &[f64] {
        &self.nodes[self.cap..self.cap + self.len]
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: f64) {
        let mut k = self.cap + i;
        self.nodes[k] = value;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Finds the leaf whose cumulative interval contains `target` (in
    /// `[0, total)`), returning it with the offset inside that leaf. Never
    /// returns a zero-weight leaf when the total is positive.
    #[inline]
    pub fn find(&self, mut target: f64) -> (usize, f64) {
        let mut k = 1;
        while k < self.cap {
            let left = self.nodes[2 * k];
            let right = self.nodes[2 * k + 1];
            if left > 0.0 && (target < left || right <= 0.0) {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        let leaf = self.nodes[k];
        (k - self.cap, target.clamp(0.0, leaf))
    }
}
