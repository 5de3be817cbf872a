//! History sums `sum_{j<n} beta_nj U^j` for the time-stepping recursion.
//!
//! [`DirectHistory`] keeps every past solution and applies exact weights.
//! [`HistoryEngine`] keeps exact weights only for the near field of the
//! current leaf; older intervals enter through far-field moments
//! `Psi_p(C) = sum_{j in C} psi_pj(C) U^j`, which are accumulated when a
//! step is committed. Once a cluster enters a cover, everything stored for
//! its children is released.

use std::time::Instant;

use crate::clustering::{ClusterTree, Cover, NodeId};
use crate::error::{invalid, Error, Result};
use crate::sink::SolutionSink;
use crate::taylor::{phi_into, psi_into, ExpansionParams};
use crate::weights::{KernelParams, WeightEngine};

/// Machine-independent work and storage counters.
///
/// A multiply-add of a scalar and an `M`-vector counts as `M` operations.
/// Stored values are `f64` entries held by the summation state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters {
    pub sum_ops: u64,
    pub commit_ops: u64,
    pub live_values: usize,
    pub peak_values: usize,
    pub accumulators_allocated: usize,
    pub accumulators_freed: usize,
}

impl Counters {
    /// History assembly plus moment updates.
    pub fn rhs_ops(&self) -> u64 {
        self.sum_ops + self.commit_ops
    }

    fn grow(&mut self, values: usize) {
        self.live_values += values;
        self.peak_values = self.peak_values.max(self.live_values);
    }

    fn shrink(&mut self, values: usize) {
        self.live_values -= values;
    }
}

/// Wall time spent in each phase of [`HistorySum::run_schedule`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScheduleTimes {
    pub history_s: f64,
    pub callback_s: f64,
    pub sink_s: f64,
    pub commit_s: f64,
}

/// Common driver interface of the direct and the fast history sum.
pub trait HistorySum {
    /// Length of each solution vector.
    fn dim(&self) -> usize;

    /// `sum_{j<n} beta_nj U^j`; steps `1..n-1` must be committed.
    fn history_sum(&mut self, n: usize) -> Result<Vec<f64>>;

    /// Record the accepted solution of step `n`.
    fn commit(&mut self, n: usize, value: &[f64]) -> Result<()>;

    fn counters(&self) -> &Counters;

    fn intervals(&self) -> usize;

    /// Runs every step: history sum, `step(n, history)` for the new
    /// solution, write-through to `sink`, commit. A failing callback stops
    /// the loop and leaves the state as it was after step `n - 1`.
    fn run_schedule<F>(&mut self, mut step: F, mut sink: Option<&mut dyn SolutionSink>) -> Result<ScheduleTimes>
    where
        F: FnMut(usize, &[f64]) -> Result<Vec<f64>>,
        Self: Sized,
    {
        let mut times = ScheduleTimes::default();
        for n in 1..=self.intervals() {
            let clock = Instant::now();
            let history = self.history_sum(n)?;
            times.history_s += clock.elapsed().as_secs_f64();

            let clock = Instant::now();
            let value = step(n, &history).map_err(|e| Error::Callback {
                step: n,
                message: e.to_string(),
            })?;
            times.callback_s += clock.elapsed().as_secs_f64();

            if let Some(sink) = sink.as_deref_mut() {
                let clock = Instant::now();
                sink.write_step(n, &value)?;
                times.sink_s += clock.elapsed().as_secs_f64();
            }

            let clock = Instant::now();
            self.commit(n, &value)?;
            times.commit_s += clock.elapsed().as_secs_f64();
        }
        if let Some(sink) = sink {
            sink.finish()?;
        }
        Ok(times)
    }
}

#[inline]
fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

fn check_len(value: &[f64], m: usize) -> Result<()> {
    if value.len() != m {
        return Err(invalid(format!("solution vector has length {}, expected {m}", value.len())));
    }
    Ok(())
}

/// Retains all past solutions and sums with exact weights in ascending `j`.
#[derive(Debug, Clone)]
pub struct DirectHistory {
    weights: WeightEngine,
    m: usize,
    values: Vec<Vec<f64>>,
    counters: Counters,
}

impl DirectHistory {
    pub fn new(weights: WeightEngine, m: usize) -> Self {
        Self {
            weights,
            m,
            values: Vec::new(),
            counters: Counters::default(),
        }
    }

    /// Committed solutions `U^1, U^2, ...`.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn weights(&self) -> &WeightEngine {
        &self.weights
    }
}

impl HistorySum for DirectHistory {
    fn dim(&self) -> usize {
        self.m
    }

    fn intervals(&self) -> usize {
        self.weights.mesh().intervals()
    }

    fn history_sum(&mut self, n: usize) -> Result<Vec<f64>> {
        if n != self.values.len() + 1 {
            return Err(Error::InvalidState(format!(
                "history sum for step {n} requested after {} commits",
                self.values.len()
            )));
        }
        let mut out = vec![0.0; self.m];
        for j in 1..n {
            axpy(&mut out, self.weights.offdiag(n, j)?, &self.values[j - 1]);
        }
        self.counters.sum_ops += ((n - 1) * self.m) as u64;
        Ok(out)
    }

    fn commit(&mut self, n: usize, value: &[f64]) -> Result<()> {
        if n != self.values.len() + 1 {
            return Err(Error::InvalidState(format!(
                "step {n} committed after {} commits",
                self.values.len()
            )));
        }
        check_len(value, self.m)?;
        self.values.push(value.to_vec());
        self.counters.grow(self.m);
        Ok(())
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}

/// The fast summation state: covers, retained near-field solutions and
/// far-field moment accumulators.
#[derive(Debug, Clone)]
pub struct HistoryEngine {
    tree: ClusterTree,
    kernel: KernelParams,
    expansion: ExpansionParams,
    weights: WeightEngine,
    m: usize,
    covers: Vec<Cover>,
    far_flags: Vec<Vec<bool>>,
    sbar: Vec<f64>,
    retained: Vec<Option<Vec<f64>>>,
    accumulators: Vec<Option<Vec<f64>>>,
    freed_at: Vec<Option<usize>>,
    leaf_prepared: Vec<bool>,
    leaf_moments: bool,
    committed: usize,
    counters: Counters,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl HistoryEngine {
    pub fn new(
        tree: ClusterTree,
        expansion: ExpansionParams,
        weights: WeightEngine,
        m: usize,
    ) -> Result<Self> {
        let mesh = tree.mesh();
        if weights.mesh() != mesh {
            return Err(invalid("weight engine and cluster tree use different time meshes"));
        }
        if m == 0 {
            return Err(invalid("solution vectors must have at least one entry"));
        }
        let eta = expansion.eta();
        let covers = tree.all_covers(eta);
        let far_flags = covers
            .iter()
            .map(|c| c.members.iter().map(|&id| tree.is_admissible(id, c.leaf, eta)).collect())
            .collect();
        let sbar = tree
            .nodes()
            .map(|id| {
                let c = tree.cluster(id);
                0.5 * (mesh.level(c.lo - 1) + mesh.level(c.hi))
            })
            .collect();
        let nodes = tree.node_count();
        let leaves = tree.leaf_count();
        let n = mesh.intervals();
        let r = expansion.r();
        Ok(Self {
            kernel: weights.params(),
            expansion,
            m,
            covers,
            far_flags,
            sbar,
            retained: vec![None; n],
            accumulators: vec![None; nodes],
            freed_at: vec![None; nodes],
            leaf_prepared: vec![false; leaves],
            leaf_moments: tree.leaf_size() > r,
            committed: 0,
            counters: Counters::default(),
            phi: vec![0.0; r],
            psi: vec![0.0; r],
            tree,
            weights,
        })
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn expansion(&self) -> ExpansionParams {
        self.expansion
    }

    pub fn weights(&self) -> &WeightEngine {
        &self.weights
    }

    /// Minimal cover of the leaf containing interval `n`.
    pub fn cover(&self, n: usize) -> &Cover {
        &self.covers[self.leaf_index(n)]
    }

    pub fn committed(&self) -> usize {
        self.committed
    }

    /// Whether leaves carry their own moments. This pays off when a leaf
    /// holds more than `r` intervals; otherwise far leaves are summed
    /// from their retained solutions with rank-`r` weights.
    pub fn leaf_moments(&self) -> bool {
        self.leaf_moments
    }

    /// The moments `Psi_1(C) .. Psi_r(C)` of a node, if allocated.
    pub fn accumulator(&self, id: NodeId) -> Option<Vec<&[f64]>> {
        self.accumulators[id]
            .as_deref()
            .map(|a| a.chunks_exact(self.m).collect())
    }

    pub fn is_retained(&self, j: usize) -> bool {
        self.retained[j - 1].is_some()
    }

    /// Step at which a node's storage was released, if it was.
    pub fn freed_at(&self, id: NodeId) -> Option<usize> {
        self.freed_at[id]
    }

    fn leaf_index(&self, n: usize) -> usize {
        self.tree.leaf_of(n) - self.tree.leaves().start
    }

    /// Release the storage of `id`: a leaf drops its retained solutions
    /// (and moments, if any); a non-leaf with allocated moments frees its
    /// children first.
    pub fn free(&mut self, id: NodeId) {
        let step = self.committed + 1;
        if self.tree.is_leaf(id) {
            let mut released = false;
            for j in self.tree.cluster(id).intervals() {
                if self.retained[j - 1].take().is_some() {
                    self.counters.shrink(self.m);
                    released = true;
                }
            }
            if self.accumulators[id].take().is_some() {
                self.counters.shrink(self.expansion.r() * self.m);
                self.counters.accumulators_freed += 1;
                released = true;
            }
            if released {
                self.freed_at[id] = Some(step);
            }
        } else if self.accumulators[id].is_some() {
            for child in self.tree.children(id) {
                self.free(child);
            }
            self.accumulators[id] = None;
            self.counters.shrink(self.expansion.r() * self.m);
            self.counters.accumulators_freed += 1;
            self.freed_at[id] = Some(step);
        }
    }

    fn check_next(&self, n: usize, what: &str) -> Result<()> {
        if n != self.committed + 1 {
            return Err(Error::InvalidState(format!(
                "{what} for step {n} after {} commits",
                self.committed
            )));
        }
        Ok(())
    }

    fn retained(&self, j: usize) -> Result<&[f64]> {
        self.retained[j - 1]
            .as_deref()
            .ok_or_else(|| Error::Invariant(format!("solution of step {j} was released but is still needed")))
    }

    fn prepare_leaf(&mut self, leaf_index: usize) {
        if self.leaf_prepared[leaf_index] {
            return;
        }
        self.leaf_prepared[leaf_index] = true;
        let members = self.covers[leaf_index].members.clone();
        let far = self.far_flags[leaf_index].clone();
        for (c, far) in members.into_iter().zip(far) {
            if !self.tree.is_leaf(c) {
                for child in self.tree.children(c) {
                    self.free(child);
                }
            } else if far && self.leaf_moments {
                // An admissible leaf stays admissible for every later leaf.
                for j in self.tree.cluster(c).intervals() {
                    if self.retained[j - 1].take().is_some() {
                        self.counters.shrink(self.m);
                    }
                }
            }
        }
    }
}

impl HistorySum for HistoryEngine {
    fn dim(&self) -> usize {
        self.m
    }

    fn intervals(&self) -> usize {
        self.tree.mesh().intervals()
    }

    fn history_sum(&mut self, n: usize) -> Result<Vec<f64>> {
        self.check_next(n, "history sum")?;
        let leaf_index = self.leaf_index(n);
        self.prepare_leaf(leaf_index);

        let m = self.m;
        let r = self.expansion.r();
        let mesh = self.tree.mesh();
        let (t0, t1) = (mesh.level(n - 1), mesh.level(n));
        let mut out = vec![0.0; m];
        let mut ops = 0u64;
        let mut phi = std::mem::take(&mut self.phi);
        let mut psi = std::mem::take(&mut self.psi);

        let cover = &self.covers[leaf_index];
        for (&c, &far) in cover.members.iter().zip(&self.far_flags[leaf_index]) {
            let cluster = self.tree.cluster(c);
            if !far {
                for j in cluster.intervals() {
                    axpy(&mut out, self.weights.offdiag(n, j)?, self.retained(j)?);
                    ops += m as u64;
                }
                continue;
            }
            let sbar = self.sbar[c];
            phi_into(self.kernel, sbar, t0, t1, &mut phi)?;
            if self.tree.is_leaf(c) && !self.leaf_moments {
                for j in cluster.intervals() {
                    psi_into(sbar, mesh.level(j - 1), mesh.level(j), &mut psi);
                    let approx: f64 = phi.iter().zip(&psi).map(|(a, b)| a * b).sum();
                    axpy(&mut out, approx, self.retained(j)?);
                    ops += m as u64;
                }
            } else {
                let acc = self.accumulators[c].as_deref().ok_or_else(|| {
                    Error::Invariant(format!("far cluster {cluster} has no accumulator at step {n}"))
                })?;
                for (p, moment) in acc.chunks_exact(m).enumerate() {
                    axpy(&mut out, phi[p], moment);
                }
                ops += (r * m) as u64;
            }
        }
        let own = self.tree.cluster(cover.leaf);
        for j in own.lo..n {
            axpy(&mut out, self.weights.offdiag(n, j)?, self.retained(j)?);
            ops += m as u64;
        }

        self.phi = phi;
        self.psi = psi;
        self.counters.sum_ops += ops;
        Ok(out)
    }

    fn commit(&mut self, n: usize, value: &[f64]) -> Result<()> {
        self.check_next(n, "commit")?;
        check_len(value, self.m)?;
        let m = self.m;
        let r = self.expansion.r();
        self.retained[n - 1] = Some(value.to_vec());
        self.counters.grow(m);

        let mesh = self.tree.mesh();
        let (s0, s1) = (mesh.level(n - 1), mesh.level(n));
        let mut targets = self.tree.update_subtree(n);
        if self.leaf_moments {
            targets.push(self.tree.leaf_of(n));
        }
        for c in targets {
            let acc = match &mut self.accumulators[c] {
                Some(acc) => acc,
                slot @ None => {
                    self.counters.accumulators_allocated += 1;
                    self.counters.grow(r * m);
                    slot.insert(vec![0.0; r * m])
                }
            };
            psi_into(self.sbar[c], s0, s1, &mut self.psi);
            for (p, moment) in acc.chunks_exact_mut(m).enumerate() {
                axpy(moment, self.psi[p], value);
            }
            self.counters.commit_ops += (r * m) as u64;
        }
        self.committed = n;
        Ok(())
    }

    fn counters(&self) -> &Counters {
        &self.counters
    }
}
