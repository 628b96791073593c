//! Linear-time exponential moment scans.
//!
//! For a piecewise-constant density f and a sorted node list covering its
//! breakpoints, computes at every node
//!
//!   l(t) = integral over z < t of e^{-(t-z)} f(z) dz,
//!   r(t) = integral over z > t of e^{-(z-t)} f(z) dz,
//!
//! by one forward and one backward recurrence with multiplicative decay
//! between consecutive nodes. Everything the crate convolves against the
//! Morse kernel reduces to these two scans:
//!
//!   (W  * f)(t) = (l + r)/2,    (W' * f)(t) = (r - l)/2,
//!
//! and segment integrals of W * f come from the same accumulators in closed
//! form. No positive exponentials appear, so the scans cannot overflow and
//! rounding stays at a few ulp independent of N.

/// Per-segment decay factors of a node list, shared by every scan that
/// walks the same nodes (the transcendental calls dominate the scan cost).
pub(crate) struct SegmentFactors {
    /// e^{-(nodes[i+1] - nodes[i])}
    pub decay: Vec<f64>,
    /// 1 - e^{-(nodes[i+1] - nodes[i])}
    pub em1: Vec<f64>,
}

impl SegmentFactors {
    pub fn new(nodes: &[f64]) -> Self {
        let m = nodes.len().saturating_sub(1);
        let mut decay = Vec::with_capacity(m);
        let mut em1 = Vec::with_capacity(m);
        for w in nodes.windows(2) {
            let e = f64::exp_m1(-(w[1] - w[0]));
            decay.push(1.0 + e);
            em1.push(-e);
        }
        SegmentFactors { decay, em1 }
    }
}

/// Scan results over one node list. The node list itself is not stored;
/// segment queries take the node spacing from the caller.
pub(crate) struct Sweep {
    l: Vec<f64>,
    r: Vec<f64>,
    /// density height on the open segment (nodes[i], nodes[i+1])
    seg_height: Vec<f64>,
}

impl Sweep {
    /// `nodes` must be sorted and contain every breakpoint of the density,
    /// with nodes[0] <= breaks[0] and nodes.last() >= breaks.last();
    /// `factors` are the node list's segment factors.
    pub fn new(breaks: &[f64], heights: &[f64], nodes: &[f64], factors: &SegmentFactors) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(nodes[0] <= breaks[0] && *nodes.last().unwrap() >= *breaks.last().unwrap());

        let m = nodes.len();
        let mut seg_height = vec![0.0; m.saturating_sub(1)];
        let mut cell = 0usize;
        for i in 0..m - 1 {
            while cell < heights.len() && breaks[cell + 1] <= nodes[i] {
                cell += 1;
            }
            if cell < heights.len() && breaks[cell] <= nodes[i] && nodes[i + 1] <= breaks[cell + 1]
            {
                seg_height[i] = heights[cell];
            }
        }

        let mut l = vec![0.0; m];
        for i in 0..m - 1 {
            l[i + 1] = l[i] * factors.decay[i] + seg_height[i] * factors.em1[i];
        }
        let mut r = vec![0.0; m];
        for i in (0..m - 1).rev() {
            r[i] = r[i + 1] * factors.decay[i] + seg_height[i] * factors.em1[i];
        }
        Sweep { l, r, seg_height }
    }

    pub fn l(&self, i: usize) -> f64 {
        self.l[i]
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r[i]
    }

    /// (W * f) at node i.
    pub fn w_at(&self, i: usize) -> f64 {
        0.5 * (self.l[i] + self.r[i])
    }

    /// (W' * f) at node i, with cells touching the node counted on the side
    /// they lie on (the diagonal-excluding convention of the scheme).
    #[cfg(test)]
    pub fn w_prime_at(&self, i: usize) -> f64 {
        0.5 * (self.r[i] - self.l[i])
    }

    /// Integral of W * f over segment i, whose width is `delta`.
    pub fn w_integral_seg(&self, i: usize, delta: f64) -> f64 {
        let h = self.seg_height[i];
        h * delta + (0.5 * (self.l[i] + self.r[i + 1]) - h) * (-f64::exp_m1(-delta))
    }

    /// Density mass on segment i of width `delta`.
    pub fn mass_seg(&self, i: usize, delta: f64) -> f64 {
        self.seg_height[i] * delta
    }

    pub fn seg_height(&self, i: usize) -> f64 {
        self.seg_height[i]
    }
}
