//! Cost simulator for the sublinear-memory MPC model.
//!
//! Algorithms run in-process and call the bulk primitives below, which check the
//! per-machine caps and charge rounds, memory and communication. Nothing is
//! actually sent anywhere.

use alloc::vec::Vec;
use thiserror::Error;

/// Default constant in the total memory budget `C * n * log2(n)^3`.
pub const DEFAULT_MEMORY_CONSTANT: f64 = 64.0;

/// Rounds charged for one sort in strict mode.
pub const STRICT_SORT_ROUNDS: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccountingMode {
    /// One round per primitive.
    Idealized,
    /// Explicit broadcast-tree and aggregation-tree depths.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineConfig {
    pub n: usize,
    pub phi: f64,
    pub mode: AccountingMode,
    pub seed: u64,
    pub memory_constant: f64,
    /// Words per memory slot; local memory is `ceil(n^phi)` slots.
    pub slot_words: u64,
    /// Replaces the derived local memory when set.
    pub local_memory_override: Option<u64>,
}

impl EngineConfig {
    /// Slots are sized to one vertex's batch-mode state.
    pub fn new(n: usize, phi: f64, mode: AccountingMode, seed: u64) -> Self {
        EngineConfig {
            n,
            phi,
            mode,
            seed,
            memory_constant: DEFAULT_MEMORY_CONSTANT,
            slot_words: crate::connectivity::vertex_slot_words(n),
            local_memory_override: None,
        }
    }

    pub fn with_local_memory(mut self, words: u64) -> Self {
        self.local_memory_override = Some(words);
        self
    }

    pub fn with_slot_words(mut self, words: u64) -> Self {
        self.slot_words = words;
        self
    }

    /// `ceil(n^phi)` slots, the number that scales with n.
    pub fn slots(&self) -> u64 {
        libm::ceil(libm::pow(self.n.max(1) as f64, self.phi)) as u64
    }

    pub fn local_memory(&self) -> u64 {
        self.local_memory_override.unwrap_or_else(|| self.slots() * self.slot_words).max(2)
    }

    pub fn total_budget(&self) -> u64 {
        let log = libm::log2(self.n.max(2) as f64);
        libm::ceil(self.memory_constant * self.n.max(1) as f64 * log * log * log) as u64
    }

    pub fn machines(&self) -> u64 {
        self.total_budget().div_ceil(self.local_memory()).max(1)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundStats {
    pub rounds: u64,
    pub peak_machine_memory: u64,
    pub total_communication: u64,
    pub broadcasts: u64,
}

impl RoundStats {
    pub fn absorb(&mut self, other: &RoundStats) {
        self.rounds += other.rounds;
        self.peak_machine_memory = self.peak_machine_memory.max(other.peak_machine_memory);
        self.total_communication += other.total_communication;
        self.broadcasts += other.broadcasts;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AccountingError {
    #[error("{primitive}: machine {machine} needs {words} words, local memory is {cap}")]
    MemoryCap { primitive: &'static str, machine: u64, words: u64, cap: u64 },
    #[error("{primitive}: {words} words exceed the total budget of {budget}")]
    Budget { primitive: &'static str, words: u64, budget: u64 },
    #[error("batch_intake: {len} updates exceed the cap of {cap}")]
    BatchTooLarge { len: usize, cap: usize },
    #[error("tree_aggregate: chunk of {chunk} words leaves fan-in below 2 with local memory {cap}")]
    FanIn { chunk: u64, cap: u64 },
}

/// Assignment of resident records to machines, packed first-fit in record order
/// so that consecutive records share or neighbour machines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Partition {
    record_machine: Vec<u64>,
    loads: Vec<u64>,
}

impl Partition {
    pub fn machine_of(&self, record: usize) -> u64 {
        self.record_machine[record]
    }

    pub fn machines_used(&self) -> usize {
        self.loads.len()
    }

    pub fn peak_load(&self) -> u64 {
        self.loads.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.loads.iter().sum()
    }
}

/// Layout produced by `bulk_sort`: how many records landed on each machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortedLayout {
    pub per_machine: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Engine {
    config: EngineConfig,
    s: u64,
    machines: u64,
    budget: u64,
    batch: RoundStats,
    total: RoundStats,
    partition: Partition,
    peak_total_memory: u64,
}

fn ceil_log(base: u64, x: u64) -> u64 {
    debug_assert!(base >= 2);
    let mut depth = 0;
    let mut reach = 1u64;
    while reach < x {
        reach = reach.saturating_mul(base);
        depth += 1;
    }
    depth
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Engine {
            s: config.local_memory(),
            machines: config.machines(),
            budget: config.total_budget(),
            config,
            batch: RoundStats::default(),
            total: RoundStats::default(),
            partition: Partition::default(),
            peak_total_memory: 0,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn local_memory(&self) -> u64 {
        self.s
    }

    pub fn machines(&self) -> u64 {
        self.machines
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn mode(&self) -> AccountingMode {
        self.config.mode
    }

    /// Statistics of the batch in progress.
    pub fn batch_stats(&self) -> RoundStats {
        self.batch
    }

    /// Statistics accumulated over finished batches.
    pub fn total_stats(&self) -> RoundStats {
        self.total
    }

    pub fn peak_total_memory(&self) -> u64 {
        self.peak_total_memory
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn begin_batch(&mut self) {
        self.batch = RoundStats::default();
        self.batch.peak_machine_memory = self.partition.peak_load();
    }

    pub fn end_batch(&mut self) -> RoundStats {
        let stats = self.batch;
        self.total.absorb(&stats);
        self.batch = RoundStats::default();
        stats
    }

    fn touch(&mut self, words: u64) {
        self.batch.peak_machine_memory = self.batch.peak_machine_memory.max(words);
        let total = self.partition.total() + words;
        self.peak_total_memory = self.peak_total_memory.max(total);
    }

    fn cap(&self, primitive: &'static str, machine: u64, words: u64) -> Result<(), AccountingError> {
        if words > self.s {
            Err(AccountingError::MemoryCap { primitive, machine, words, cap: self.s })
        } else {
            Ok(())
        }
    }

    /// Delivers a payload to every machine.
    pub fn broadcast(&mut self, words: u64) -> Result<(), AccountingError> {
        self.cap("broadcast", 0, words)?;
        let rounds = match self.config.mode {
            AccountingMode::Idealized => 1,
            AccountingMode::Strict => {
                let fan_out = (self.s / words.max(1)).max(2);
                ceil_log(fan_out, self.machines).max(1)
            }
        };
        self.batch.rounds += rounds;
        self.batch.broadcasts += 1;
        self.batch.total_communication += words * self.machines;
        self.touch(words);
        Ok(())
    }

    fn sort_cost(&mut self, primitive: &'static str, count: usize, record_words: u64) -> Result<SortedLayout, AccountingError> {
        let total = count as u64 * record_words;
        if total > self.budget {
            return Err(AccountingError::Budget { primitive, words: total, budget: self.budget });
        }
        self.cap(primitive, 0, record_words)?;
        let per = (self.s / record_words.max(1)) as usize;
        let mut per_machine = Vec::new();
        let mut left = count;
        while left > 0 {
            let take = left.min(per);
            per_machine.push(take);
            left -= take;
        }
        self.batch.rounds += match self.config.mode {
            AccountingMode::Idealized => 1,
            AccountingMode::Strict => STRICT_SORT_ROUNDS,
        };
        self.batch.total_communication += total;
        self.touch(total.min(per as u64 * record_words));
        Ok(SortedLayout { per_machine })
    }

    /// Stable global sort of `records` by `key`.
    pub fn bulk_sort<T, K: Ord>(
        &mut self,
        records: &mut [T],
        record_words: u64,
        key: impl FnMut(&T) -> K,
    ) -> Result<SortedLayout, AccountingError> {
        let layout = self.sort_cost("bulk_sort", records.len(), record_words)?;
        records.sort_by_key(key);
        Ok(layout)
    }

    fn aggregate_rounds(&self, count: u64, chunk_words: u64) -> Result<u64, AccountingError> {
        self.cap("tree_aggregate", 0, chunk_words)?;
        let fan_in = self.s / chunk_words.max(1);
        if fan_in < 2 && count > 1 {
            return Err(AccountingError::FanIn { chunk: chunk_words, cap: self.s });
        }
        Ok(match self.config.mode {
            AccountingMode::Idealized => 1,
            AccountingMode::Strict => ceil_log(fan_in.max(2), count).max(1),
        })
    }

    /// Charges a set of independent aggregations running side by side, one per group,
    /// where `groups` lists the number of values folded in each.
    pub fn charge_aggregates(&mut self, groups: &[u64], chunk_words: u64) -> Result<(), AccountingError> {
        let largest = groups.iter().copied().max().unwrap_or(1);
        let rounds = self.aggregate_rounds(largest, chunk_words)?;
        let fan_in = (self.s / chunk_words.max(1)).max(1);
        let moved: u64 = groups.iter().map(|g| g.saturating_sub(1) * chunk_words).sum();
        self.batch.rounds += rounds;
        self.batch.total_communication += moved;
        self.touch(largest.min(fan_in) * chunk_words);
        Ok(())
    }

    /// Folds `values` with an associative `op` along a fan-in tree.
    pub fn tree_aggregate<T>(
        &mut self,
        values: Vec<T>,
        chunk_words: u64,
        op: impl FnMut(T, T) -> T,
    ) -> Result<Option<T>, AccountingError> {
        self.charge_aggregates(&[values.len() as u64], chunk_words)?;
        Ok(values.into_iter().reduce(op))
    }

    /// One round of machine-local work; `emitted` lists words sent per machine.
    pub fn map_over_partition(&mut self, emitted: impl IntoIterator<Item = (u64, u64)>) -> Result<(), AccountingError> {
        let mut sent: Vec<(u64, u64)> = emitted.into_iter().collect();
        sent.sort_unstable();
        let mut total = 0;
        let mut peak = 0;
        let mut i = 0;
        while i < sent.len() {
            let machine = sent[i].0;
            let mut words = 0;
            while i < sent.len() && sent[i].0 == machine {
                words += sent[i].1;
                i += 1;
            }
            self.cap("map_over_partition", machine, words)?;
            total += words;
            peak = peak.max(words);
        }
        self.batch.rounds += 1;
        self.batch.total_communication += total;
        self.touch(peak);
        Ok(())
    }

    /// One round in which each message `(from, to, words)` is checked on both ends.
    pub fn route(&mut self, messages: impl IntoIterator<Item = (u64, u64, u64)>) -> Result<(), AccountingError> {
        let msgs: Vec<(u64, u64, u64)> = messages.into_iter().collect();
        let mut recv: Vec<(u64, u64)> = msgs.iter().map(|m| (m.1, m.2)).collect();
        recv.sort_unstable();
        let mut i = 0;
        let mut peak_in = 0;
        while i < recv.len() {
            let machine = recv[i].0;
            let mut words = 0;
            while i < recv.len() && recv[i].0 == machine {
                words += recv[i].1;
                i += 1;
            }
            self.cap("route", machine, words)?;
            peak_in = peak_in.max(words);
        }
        self.map_over_partition(msgs.iter().map(|m| (m.0, m.2)))?;
        self.touch(peak_in);
        Ok(())
    }

    /// Moves a batch onto one machine through a sort.
    pub fn batch_intake(&mut self, len: usize, record_words: u64) -> Result<(), AccountingError> {
        let cap = (self.s / record_words.max(1)) as usize;
        if len > cap {
            return Err(AccountingError::BatchTooLarge { len, cap });
        }
        self.sort_cost("batch_intake", len, record_words)?;
        Ok(())
    }

    /// Checks that a local computation's working set fits one machine.
    pub fn local(&mut self, primitive: &'static str, words: u64) -> Result<(), AccountingError> {
        self.cap(primitive, 0, words)?;
        self.touch(words);
        Ok(())
    }

    /// Replaces the resident state, one entry per record. A record larger than one
    /// machine is spread over consecutive machines.
    pub fn set_resident(&mut self, records: impl IntoIterator<Item = u64>) -> Result<(), AccountingError> {
        let mut record_machine = Vec::new();
        let mut loads: Vec<u64> = Vec::new();
        for words in records {
            let mut left = words;
            let first = match loads.last() {
                Some(&load) if load + words <= self.s => loads.len() - 1,
                _ => {
                    loads.push(0);
                    loads.len() - 1
                }
            };
            record_machine.push(first as u64);
            let mut m = first;
            loop {
                let room = self.s - loads[m];
                let take = left.min(room);
                loads[m] += take;
                left -= take;
                if left == 0 {
                    break;
                }
                loads.push(0);
                m += 1;
            }
        }
        let total: u64 = loads.iter().sum();
        if loads.len() as u64 > self.machines || total > self.budget {
            return Err(AccountingError::Budget { primitive: "resident", words: total, budget: self.budget });
        }
        self.partition = Partition { record_machine, loads };
        let peak = self.partition.peak_load();
        self.touch(peak);
        Ok(())
    }
}
