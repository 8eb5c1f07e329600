//! Time-slot accounting for one level of the three-phase cooperation scheme.
//!
//! Phase 1 spreads every message over `m` relays of its source cluster,
//! phase 2 carries it by cluster-to-cluster MIMO, and phase 3 gathers the
//! quantised observations at the destination. Phases 1 and 3 run the
//! level-`(k-1)` scheme inside each cluster under 9-TDMA reuse.

use crate::error::{ensure, Result};
use crate::geometry::{grid_distance, tdma9_slot, Cell};
use crate::planner::HierarchyPlan;

/// Source-destination pairs of each Phase-1 subphase, 1-based:
/// subphase `i` pairs `s` with `(s + i) mod n_prev + 1`.
pub fn subphase_pairing(n_prev: usize, m: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    ensure!(n_prev >= 1, "cluster needs at least one node");
    ensure!((1..=n_prev).contains(&m), "need 1 <= m <= {n_prev}, got {m}");
    Ok((1..=m)
        .map(|i| (1..=n_prev).map(|s| (s, (s + i) % n_prev + 1)).collect())
        .collect())
}

/// Relays `{(s + i) mod n_prev + 1 | 1 <= i <= m}` that carry the subblocks
/// of node `s`, in subblock order.
pub fn relay_set(n_prev: usize, s: usize, m: usize) -> Result<Vec<usize>> {
    ensure!((1..=n_prev).contains(&s), "node {s} outside 1..={n_prev}");
    ensure!((1..=n_prev).contains(&m), "need 1 <= m <= {n_prev}, got {m}");
    Ok((1..=m).map(|i| (s + i) % n_prev + 1).collect())
}

/// Inputs of one level of the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelParams {
    pub k: usize,
    pub n_prev: u64,
    pub n_cur: u64,
    pub m: u64,
    /// MIMO rate `R_k` in subblocks per slot.
    pub rate: f64,
    /// Throughput `T_{k-1}` of the level below.
    pub t_prev: f64,
    pub q: u32,
}

impl LevelParams {
    pub fn from_plan(plan: &HierarchyPlan, k: usize, q: u32) -> Result<Self> {
        ensure!((1..=plan.h).contains(&k), "level {k} outside 1..={}", plan.h);
        let p = Self {
            k,
            n_prev: plan.n_seq[k - 1],
            n_cur: plan.n_seq[k],
            m: plan.m_seq[k - 1],
            rate: plan.rates[k - 1],
            t_prev: plan.throughputs[k - 1],
            q,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.n_prev >= 1 && self.n_prev <= self.n_cur,
            "need 1 <= n_prev <= n_cur"
        );
        ensure!(self.m >= 1 && self.m <= self.n_prev, "need 1 <= m <= n_prev");
        ensure!(
            self.rate > 0.0 && self.t_prev > 0.0,
            "rate and throughput must be positive"
        );
        Ok(())
    }

    /// Number of level-`(k-1)` clusters, which need not be an integer for
    /// real-valued plans.
    pub fn clusters(&self) -> f64 {
        self.n_cur as f64 / self.n_prev as f64
    }

    /// Subblocks carried by each quantised observation, `Q m / R_k`.
    pub fn observation_length(&self) -> f64 {
        self.q as f64 * self.m as f64 / self.rate
    }
}

/// Slots spent in each phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotLedger {
    pub phase1: f64,
    pub phase2: f64,
    pub phase3: f64,
}

impl SlotLedger {
    pub fn total(&self) -> f64 {
        self.phase1 + self.phase2 + self.phase3
    }
}

/// Slot counts of one level, with and without integer slot quantisation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    pub params: LevelParams,
    /// Each subphase and each MIMO transmission rounded up to whole slots.
    pub ceiled: SlotLedger,
    /// Fractional slot counts.
    pub real: SlotLedger,
    /// Side of the square array the level-`(k-1)` clusters are laid out on.
    pub grid_side: usize,
    /// 9-TDMA slot of every cluster, row-major over the array.
    pub tdma_slots: Vec<u8>,
}

impl PhaseSchedule {
    /// `n_k m / total slots` from the ceiled ledger.
    pub fn throughput(&self) -> f64 {
        self.delivered() / self.ceiled.total()
    }

    /// `n_k m / total slots` from the real-valued ledger.
    pub fn real_throughput(&self) -> f64 {
        self.delivered() / self.real.total()
    }

    fn delivered(&self) -> f64 {
        self.params.n_cur as f64 * self.params.m as f64
    }

    /// Number of slot quantisations per phase; each adds less than one slot.
    pub fn ceilings(&self) -> (u64, u64, u64) {
        let p = &self.params;
        (9 * p.m, p.n_cur, 9 * p.m)
    }
}

/// Counts the slots of level `k` of `plan`.
pub fn simulate_level(k: usize, plan: &HierarchyPlan, q: u32) -> Result<PhaseSchedule> {
    schedule(LevelParams::from_plan(plan, k, q)?)
}

/// Counts the slots for explicit level parameters.
pub fn schedule(p: LevelParams) -> Result<PhaseSchedule> {
    p.validate()?;
    let (m, n_prev, n_cur, q) = (p.m as f64, p.n_prev as f64, p.n_cur as f64, p.q as f64);
    // per subphase: n_prev messages at rate T_{k-1}
    let sub1 = n_prev / p.t_prev;
    // per subphase: n_prev observations of length m / R_k, Q subblocks each
    let sub3 = m * n_prev / (p.rate * p.t_prev);
    let real = SlotLedger {
        phase1: 9.0 * m * sub1,
        phase2: n_cur * m / p.rate,
        phase3: 9.0 * q * m * sub3,
    };
    let ceiled = SlotLedger {
        phase1: 9.0 * m * sub1.ceil(),
        phase2: n_cur * (m / p.rate).ceil(),
        phase3: 9.0 * q * m * sub3.ceil(),
    };
    let grid_side = p.clusters().sqrt().ceil().max(1.0) as usize;
    let tdma_slots = (0..grid_side)
        .flat_map(|r| (0..grid_side).map(move |c| tdma9_slot(r, c)))
        .collect();
    Ok(PhaseSchedule {
        params: p,
        ceiled,
        real,
        grid_side,
        tdma_slots,
    })
}

/// Per source-destination pair record of how many of its subblocks passed
/// through each phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairLedger {
    /// Global 1-based node ids.
    pub source: usize,
    pub destination: usize,
    pub distributed: usize,
    pub transmitted: usize,
    pub collected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionReport {
    pub schedule: PhaseSchedule,
    pub pairs: Vec<PairLedger>,
    /// Clusters active in each of the nine slots of phases 1 and 3.
    pub active: Vec<Vec<Cell>>,
}

impl ExecutionReport {
    /// Every message had each of its `m` subblocks moved exactly once per
    /// phase.
    pub fn balanced(&self) -> bool {
        let m = self.schedule.params.m as usize;
        self.pairs
            .iter()
            .all(|p| p.distributed == m && p.transmitted == m && p.collected == m)
    }

    /// No two clusters closer than three cells share a TDMA slot.
    pub fn tdma_valid(&self) -> bool {
        self.active.iter().all(|slot| {
            slot.iter()
                .enumerate()
                .all(|(i, a)| slot[i + 1..].iter().all(|b| grid_distance(*a, *b) >= 3))
        })
    }
}

/// Executes one level message by message on a small instance whose cluster
/// count is a perfect square. `destination[g - 1]` is the 1-based destination
/// of global node `g`; node `g` is index `(g - 1) % n_prev + 1` of cluster
/// `(g - 1) / n_prev`.
pub fn execute_level(p: LevelParams, destination: &[usize]) -> Result<ExecutionReport> {
    let sched = schedule(p)?;
    let (n_prev, n_cur, m) = (p.n_prev as usize, p.n_cur as usize, p.m as usize);
    ensure!(n_cur % n_prev == 0, "explicit execution needs n_prev to divide n_cur");
    let clusters = n_cur / n_prev;
    let side = sched.grid_side;
    ensure!(
        side * side == clusters,
        "explicit execution needs a square number of clusters"
    );
    ensure!(destination.len() == n_cur, "need one destination per node");
    let mut seen = vec![false; n_cur];
    for &d in destination {
        ensure!(
            (1..=n_cur).contains(&d) && !seen[d - 1],
            "destinations must be a permutation"
        );
        seen[d - 1] = true;
    }
    let cell_of = |cluster: usize| (cluster / side, cluster % side);
    let global = |cluster: usize, local: usize| cluster * n_prev + local;
    let split = |g: usize| ((g - 1) / n_prev, (g - 1) % n_prev + 1);

    // holdings[g][s]: subblock indices of source s held by relay g
    let mut relay_holds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_cur + 1];
    let mut active = vec![Vec::new(); 9];
    for cluster in 0..clusters {
        let (r, c) = cell_of(cluster);
        active[tdma9_slot(r, c) as usize - 1].push((r, c));
    }

    let mut pairs: Vec<PairLedger> = (1..=n_cur)
        .map(|g| PairLedger {
            source: g,
            destination: destination[g - 1],
            distributed: 0,
            transmitted: 0,
            collected: 0,
        })
        .collect();

    // Phase 1: subphase i delivers subblock i of s to relay (s + i) mod n + 1
    let pairing = subphase_pairing(n_prev, m)?;
    for slot in &active {
        for &(r, c) in slot {
            let cluster = r * side + c;
            for (i, subphase) in pairing.iter().enumerate() {
                for &(s, relay) in subphase {
                    let src = global(cluster, s);
                    relay_holds[global(cluster, relay)].push((src, i));
                    pairs[src - 1].distributed += 1;
                }
            }
        }
    }

    // Phase 2: relays of s send to the relays of d, subblock by subblock
    let mut observations: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_cur + 1];
    for src in 1..=n_cur {
        let (u, s) = split(src);
        let (v, d) = split(destination[src - 1]);
        let tx = relay_set(n_prev, s, m)?;
        let rx = relay_set(n_prev, d, m)?;
        for (i, &relay) in tx.iter().enumerate() {
            let holder = global(u, relay);
            let pos = relay_holds[holder]
                .iter()
                .position(|&(owner, sub)| owner == src && sub == i)
                .expect("phase 1 placed every subblock");
            relay_holds[holder].swap_remove(pos);
            pairs[src - 1].transmitted += 1;
        }
        // every receiving relay observes the whole MIMO transmission
        for &relay in &rx {
            observations[global(v, relay)].push((src, 0));
        }
    }

    // Phase 3: destination d collects from relay (d + i) mod n + 1 in
    // subphase i, under the same TDMA pattern
    let owner_of = |g: usize| pairs.iter().position(|p| p.destination == g).expect("permutation");
    let mut collected = vec![0usize; n_cur];
    for slot in &active {
        for &(r, c) in slot {
            let cluster = r * side + c;
            for subphase in &pairing {
                for &(d, relay) in subphase {
                    let dest = global(cluster, d);
                    let holder = global(cluster, relay);
                    let src = owner_of(dest) + 1;
                    let pos = observations[holder]
                        .iter()
                        .position(|&(o, _)| o == src)
                        .expect("phase 2 delivered an observation");
                    observations[holder].swap_remove(pos);
                    collected[src - 1] += 1;
                }
            }
        }
    }
    for (p, c) in pairs.iter_mut().zip(collected) {
        p.collected = c;
    }
    ensure!(
        relay_holds.iter().all(Vec::is_empty) && observations.iter().all(Vec::is_empty),
        "undelivered subblocks remain"
    );
    Ok(ExecutionReport {
        schedule: sched,
        pairs,
        active,
    })
}
