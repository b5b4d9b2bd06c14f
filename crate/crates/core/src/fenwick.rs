//! Prefix-sum tree used to pick a ringing clock in O(log n).

/// Fenwick tree over nonnegative weights, 1-based.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
    updates: usize,
}

impl Fenwick {
    const REBUILD_EVERY: usize = 1 << 14;

    pub(crate) fn from_values(values: Vec<f64>) -> Self {
        let mut f = Fenwick {
            tree: vec![0.0; values.len() + 1],
            values,
            updates: 0,
        };
        f.rebuild();
        f
    }

    /// O(n) reconstruction from the exact per-site values; removes drift
    /// accumulated by incremental updates.
    pub(crate) fn rebuild(&mut self) {
        let n = self.values.len();
        self.tree[1..].copy_from_slice(&self.values);
        self.tree[0] = 0.0;
        for i in 1..=n {
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                let v = self.tree[i];
                self.tree[j] += v;
            }
        }
        self.updates = 0;
    }

    pub(crate) fn set(&mut self, i: usize, value: f64) {
        let delta = value - self.values[i - 1];
        if delta == 0.0 {
            return;
        }
        self.values[i - 1] = value;
        let n = self.values.len();
        let mut k = i;
        while k <= n {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
        self.updates += 1;
        if self.updates >= Self::REBUILD_EVERY {
            self.rebuild();
        }
    }

    pub(crate) fn value(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub(crate) fn total(&self) -> f64 {
        let mut s = 0.0;
        let mut k = self.values.len();
        while k > 0 {
            s += self.tree[k];
            k -= k & k.wrapping_neg();
        }
        s
    }

    /// Smallest index whose prefix sum exceeds `u`.
    pub(crate) fn find(&self, mut u: f64) -> usize {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                u -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        (pos + 1).min(n)
    }
}
