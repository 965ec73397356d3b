//! Pre-allocated, index-indirect particle storage.
//!
//! States live in a slab of `(D+1)·N` slots addressed by rotating rows: the
//! state drawn at time `t` for particle `i` goes to row `t mod (D+1)`,
//! column `i`. A particle's window is a list of `D` handles into that slab,
//! so after resampling a child only copies its ancestor's `D` handles; the
//! row about to be overwritten is never referenced by a live window.
//!
//! Parameters (bootstrap/Liu-West) and approximations (API) live in two-half
//! slabs. Payload writes always go to the half not referenced by the current
//! handle table, so duplicated handles can be shared read-only.

/// Payload and bookkeeping counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StoreCounters {
    /// Times any backing slab changed address or capacity.
    pub payload_reallocs: u64,
    /// Handle entries copied by resampling.
    pub index_copies: u64,
}

#[derive(Debug)]
pub struct ParticleStore {
    n: usize,
    order: usize,
    state_dim: usize,
    param_dim: usize,
    approx_len: usize,
    states: Vec<f64>,
    windows: [Vec<u32>; 2],
    params: Vec<f64>,
    param_handles: [Vec<u32>; 2],
    approx: Vec<f64>,
    approx_handles: [Vec<u32>; 2],
    cur: usize,
    param_half: usize,
    approx_half: usize,
    fingerprint: [(usize, usize); 3],
    counters: StoreCounters,
}

impl ParticleStore {
    /// Allocates every slab for `n` particles of Markov order `order`.
    pub fn new(n: usize, order: usize, state_dim: usize, param_dim: usize, approx_len: usize) -> Self {
        assert!(n >= 1 && order >= 1, "store needs at least one particle and order >= 1");
        assert!(
            (order + 1) * n <= u32::MAX as usize && 2 * n <= u32::MAX as usize,
            "particle count exceeds handle range"
        );
        let mut s = Self {
            n,
            order,
            state_dim,
            param_dim,
            approx_len,
            states: vec![0.0; (order + 1) * n * state_dim],
            windows: [vec![0; n * order], vec![0; n * order]],
            params: vec![0.0; 2 * n * param_dim],
            param_handles: [(0..n as u32).collect(), (0..n as u32).collect()],
            approx: vec![0.0; 2 * n * approx_len],
            approx_handles: [(0..n as u32).collect(), (0..n as u32).collect()],
            cur: 0,
            param_half: 0,
            approx_half: 0,
            fingerprint: [(0, 0); 3],
            counters: StoreCounters::default(),
        };
        s.fingerprint = s.snapshot();
        s
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn counters(&self) -> StoreCounters {
        self.counters
    }

    fn snapshot(&self) -> [(usize, usize); 3] {
        [
            (self.states.as_ptr() as usize, self.states.capacity()),
            (self.params.as_ptr() as usize, self.params.capacity()),
            (self.approx.as_ptr() as usize, self.approx.capacity()),
        ]
    }

    /// Compares slab addresses with the last check and counts a
    /// reallocation for every change. Returns the number found.
    pub fn check_payload(&mut self) -> u64 {
        let now = self.snapshot();
        let changed = now.iter().zip(&self.fingerprint).filter(|(a, b)| a != b).count() as u64;
        self.fingerprint = now;
        self.counters.payload_reallocs += changed;
        changed
    }

    // ---- states ----

    #[inline]
    pub fn state_handle(&self, t: usize, i: usize) -> u32 {
        ((t % (self.order + 1)) * self.n + i) as u32
    }

    #[inline]
    pub fn state(&self, handle: u32) -> &[f64] {
        let d = self.state_dim;
        let h = handle as usize;
        &self.states[h * d..(h + 1) * d]
    }

    #[inline]
    pub fn state_mut(&mut self, handle: u32) -> &mut [f64] {
        let d = self.state_dim;
        let h = handle as usize;
        &mut self.states[h * d..(h + 1) * d]
    }

    /// Current window handles of particle `i`, oldest first.
    #[inline]
    pub fn window(&self, i: usize) -> &[u32] {
        &self.windows[self.cur][i * self.order..(i + 1) * self.order]
    }

    /// Copies particle `i`'s window states, oldest first, into `out`.
    #[inline]
    pub fn gather_window(&self, i: usize, out: &mut [f64]) {
        let d = self.state_dim;
        for (k, &h) in self.window(i).iter().enumerate() {
            out[k * d..(k + 1) * d].copy_from_slice(self.state(h));
        }
    }

    /// Sets every window slot of every particle to its state at row `t`.
    pub fn fill_windows(&mut self, t: usize) {
        for i in 0..self.n {
            let h = self.state_handle(t, i);
            let d = self.order;
            self.windows[self.cur][i * d..(i + 1) * d].fill(h);
        }
    }

    /// Builds the next window table: child `k` takes ancestor `a_k`'s window
    /// shifted by one plus the ancestor's new state at row `t`.
    pub fn resample_windows(&mut self, ancestors: &[usize], t: usize) {
        let d = self.order;
        let n = self.n;
        let rows = d + 1;
        let [w0, w1] = &mut self.windows;
        let (src, dst) = if self.cur == 0 { (&*w0, w1) } else { (&*w1, w0) };
        for (k, &a) in ancestors.iter().enumerate() {
            let from = &src[a * d..(a + 1) * d];
            let to = &mut dst[k * d..(k + 1) * d];
            to[..d - 1].copy_from_slice(&from[1..]);
            to[d - 1] = ((t % rows) * n + a) as u32;
        }
        self.counters.index_copies += (n * d) as u64;
    }

    // ---- static parameters ----

    #[inline]
    pub fn param(&self, i: usize) -> &[f64] {
        let p = self.param_dim;
        let h = self.param_handles[self.cur][i] as usize;
        &self.params[h * p..(h + 1) * p]
    }

    /// Writable slot of particle `i` in the half not referenced by the
    /// current handles. Call [`commit_params`](Self::commit_params) once
    /// every particle has been written.
    #[inline]
    pub fn param_scratch(&mut self, i: usize) -> (&[f64], &mut [f64]) {
        let p = self.param_dim;
        let h = self.param_handles[self.cur][i] as usize;
        let next = (1 - self.param_half) * self.n + i;
        let (lo, hi) = self.params.split_at_mut(self.n * p);
        if self.param_half == 0 {
            (&lo[h * p..(h + 1) * p], &mut hi[i * p..(i + 1) * p])
        } else {
            (&hi[(h - self.n) * p..(h - self.n + 1) * p], &mut lo[(next) * p..(next + 1) * p])
        }
    }

    /// Points particle `i` at its slot in the written half.
    pub fn commit_params(&mut self) {
        self.param_half = 1 - self.param_half;
        let base = (self.param_half * self.n) as u32;
        for (i, h) in self.param_handles[self.cur].iter_mut().enumerate() {
            *h = base + i as u32;
        }
    }

    /// Next parameter handles: child `k` shares ancestor `a_k`'s slot.
    pub fn resample_params(&mut self, ancestors: &[usize]) {
        let [h0, h1] = &mut self.param_handles;
        let (src, dst) = if self.cur == 0 { (&*h0, h1) } else { (&*h1, h0) };
        for (k, &a) in ancestors.iter().enumerate() {
            dst[k] = src[a];
        }
        self.counters.index_copies += self.n as u64;
    }

    // ---- approximations ----

    #[inline]
    pub fn approx(&self, i: usize) -> &[f64] {
        let h = self.approx_handles[self.cur][i] as usize;
        &self.approx[h * self.approx_len..(h + 1) * self.approx_len]
    }

    /// Particle `i`'s current approximation (read) and slot `j` of the
    /// other half (write).
    #[inline]
    pub fn approx_pair(&mut self, i: usize, j: usize) -> (&[f64], &mut [f64]) {
        let l = self.approx_len;
        let half = self.n * l;
        let h = self.approx_handles[self.cur][i] as usize;
        let (lo, hi) = self.approx.split_at_mut(half);
        if self.approx_half == 0 {
            (&lo[h * l..(h + 1) * l], &mut hi[j * l..(j + 1) * l])
        } else {
            let h = h - self.n;
            (&hi[h * l..(h + 1) * l], &mut lo[j * l..(j + 1) * l])
        }
    }

    /// Direct write access to slot `j` of the current half, for
    /// initialization.
    pub fn approx_init(&mut self, j: usize) -> &mut [f64] {
        let l = self.approx_len;
        let at = (self.approx_half * self.n + j) * l;
        &mut self.approx[at..at + l]
    }

    /// Sets child `k`'s next approximation handle to slot `j` of the half
    /// being written.
    #[inline]
    pub fn set_next_approx(&mut self, k: usize, j: usize) {
        let base = (1 - self.approx_half) * self.n;
        self.approx_handles[1 - self.cur][k] = (base + j) as u32;
    }

    /// Finishes a step: the next handle tables become current and the
    /// approximation half written this step becomes the live one.
    pub fn advance(&mut self, approx_written: bool) {
        self.cur = 1 - self.cur;
        if approx_written {
            self.approx_half = 1 - self.approx_half;
        }
    }

    /// Reorders particles between steps: particle `k` becomes the former
    /// particle `perm[k]`. Only handles move.
    pub fn permute(&mut self, perm: &[usize]) {
        let d = self.order;
        let (c, o) = (self.cur, 1 - self.cur);
        for (k, &a) in perm.iter().enumerate() {
            for j in 0..d {
                self.windows[o][k * d + j] = self.windows[c][a * d + j];
            }
            self.param_handles[o][k] = self.param_handles[c][a];
            self.approx_handles[o][k] = self.approx_handles[c][a];
        }
        self.cur = o;
    }

    /// Resets handles to the identity layout in half 0.
    pub fn reset(&mut self) {
        self.cur = 0;
        self.param_half = 0;
        self.approx_half = 0;
        for t in self.param_handles.iter_mut().chain(self.approx_handles.iter_mut()) {
            for (i, h) in t.iter_mut().enumerate() {
                *h = i as u32;
            }
        }
    }

    /// Initialization write access to parameter slot `i` of half 0.
    pub fn param_init(&mut self, i: usize) -> &mut [f64] {
        let p = self.param_dim;
        let at = (self.param_half * self.n + i) * p;
        &mut self.params[at..at + p]
    }
}
