//! Run statistics and the observables derived from them.
//!
//! All counters cover the measurement window `[warmup, horizon]`. Ebits still
//! stored at the warmup cut are carried in `in_memory_initial`, so the leaf
//! conservation identity reads
//! `in_memory_initial + admitted == delivered_intra + sent_to_swap + reneged + displaced + in_memory_final`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::leaf::RenegeDist;
use crate::network::RequestClass;
use crate::spine::SwapCounters;

/// Lower edge and width of the delivered-fidelity histogram.
pub const HIST_LOW: f64 = 0.5;
pub const HIST_BIN: f64 = 0.01;
pub const HIST_BINS: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafCounters {
    pub generated: u64,
    pub not_joined: u64,
    /// Evictions under the drop-oldest full-memory policy.
    pub displaced: u64,
    pub admitted: u64,
    pub reneged: u64,
    pub delivered_intra: u64,
    /// Ebits consumed by BSM attempts, successful or not.
    pub sent_to_swap: u64,
    pub in_memory_initial: u64,
    pub in_memory_final: u64,
}

impl LeafCounters {
    fn add(&mut self, o: &LeafCounters) {
        self.generated += o.generated;
        self.not_joined += o.not_joined;
        self.displaced += o.displaced;
        self.admitted += o.admitted;
        self.reneged += o.reneged;
        self.delivered_intra += o.delivered_intra;
        self.sent_to_swap += o.sent_to_swap;
        self.in_memory_initial += o.in_memory_initial;
        self.in_memory_final += o.in_memory_final;
    }
}

/// Time spent at each memory occupancy level.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueTracker {
    occupancy: Vec<f64>,
    last: SimTime,
}

impl QueueTracker {
    pub fn new(capacity: usize) -> Self {
        Self {
            occupancy: vec![0.0; capacity + 1],
            last: 0.0,
        }
    }

    /// Accrues time at level `len` up to `now`. Call before every change.
    pub fn advance(&mut self, now: SimTime, len: usize) {
        debug_assert!(len < self.occupancy.len(), "queue length above capacity");
        if now > self.last {
            self.occupancy[len] += now - self.last;
            self.last = now;
        }
    }

    pub fn reset(&mut self, now: SimTime) {
        self.occupancy.iter_mut().for_each(|x| *x = 0.0);
        self.last = now;
    }

    pub fn occupancy(&self) -> &[f64] {
        &self.occupancy
    }

    /// Integral of the queue length over time.
    pub fn integral(&self) -> f64 {
        self.occupancy.iter().enumerate().map(|(n, t)| n as f64 * t).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkCounters {
    pub requests_total: u64,
    pub requests_intra: u64,
    pub requests_inter: u64,
    pub delivered_inter: u64,
    pub unserved_intra: u64,
    pub unserved_inter: u64,
}

impl NetworkCounters {
    /// Requests lost because memory was empty.
    pub fn unserved_empty(&self) -> u64 {
        self.unserved_intra + self.unserved_inter
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelitySample {
    pub class: RequestClass,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafStats {
    pub counters: LeafCounters,
    pub occupancy: Vec<f64>,
}

impl LeafStats {
    pub fn queue_integral(&self) -> f64 {
        self.occupancy.iter().enumerate().map(|(n, t)| n as f64 * t).sum()
    }
}

/// Finalized statistics of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub leaves: Vec<LeafStats>,
    pub spines: Vec<SwapCounters>,
    pub network: NetworkCounters,
    pub fidelities: Vec<FidelitySample>,
    pub horizon: SimTime,
    pub warmup: SimTime,
    pub events: u64,
    pub renege_dist: RenegeDist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: [u64; HIST_BINS],
}

impl FidelitySummary {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut count = 0;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut histogram = [0u64; HIST_BINS];
        for v in values {
            count += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
            let bin = (((v - HIST_LOW) / HIST_BIN).floor().max(0.0) as usize).min(HIST_BINS - 1);
            histogram[bin] += 1;
        }
        (count > 0).then(|| Self {
            count,
            mean: sum / count as f64,
            min,
            max,
            histogram,
        })
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl RunStats {
    pub fn effective_horizon(&self) -> f64 {
        self.horizon - self.warmup
    }

    pub fn leaf_totals(&self) -> LeafCounters {
        let mut t = LeafCounters::default();
        for l in &self.leaves {
            t.add(&l.counters);
        }
        t
    }

    pub fn swap_totals(&self) -> SwapCounters {
        self.spines.iter().fold(SwapCounters::default(), |mut acc, s| {
            acc.swap_attempts += s.swap_attempts;
            acc.swap_failures += s.swap_failures;
            acc.swap_successes += s.swap_successes;
            acc
        })
    }

    pub fn deliveries(&self) -> u64 {
        self.leaf_totals().delivered_intra + self.network.delivered_inter
    }

    /// Deliveries per time unit over the measurement window.
    pub fn throughput(&self) -> f64 {
        self.deliveries() as f64 / self.effective_horizon()
    }

    /// Network-wide delivered entanglements per time unit.
    pub fn capacity(&self) -> f64 {
        self.throughput()
    }

    /// Reneged over admitted ebits.
    pub fn reneging_ratio(&self) -> Option<f64> {
        let t = self.leaf_totals();
        ratio(t.reneged, t.admitted)
    }

    /// Ebits that could not join (blocked, or evicted under drop-oldest) over
    /// generated ebits.
    pub fn not_joined_ratio(&self) -> Option<f64> {
        let t = self.leaf_totals();
        ratio(t.not_joined + t.displaced, t.generated)
    }

    /// Time-average stored ebits per leaf.
    pub fn avg_queue_len(&self) -> f64 {
        let total: f64 = self.leaves.iter().map(LeafStats::queue_integral).sum();
        total / self.effective_horizon() / self.leaves.len() as f64
    }

    fn level_fraction(&self, level: impl Fn(&LeafStats) -> usize) -> f64 {
        let total: f64 = self.leaves.iter().map(|l| l.occupancy[level(l)]).sum();
        total / self.effective_horizon() / self.leaves.len() as f64
    }

    /// Fraction of time a leaf memory is empty (averaged over leaves).
    pub fn p_empty(&self) -> f64 {
        self.level_fraction(|_| 0)
    }

    /// Fraction of time a leaf memory is full (averaged over leaves).
    pub fn p_full(&self) -> f64 {
        self.level_fraction(|l| l.occupancy.len() - 1)
    }

    /// Reneging events per time unit, network-wide.
    pub fn renege_rate(&self) -> f64 {
        self.leaf_totals().reneged as f64 / self.effective_horizon()
    }

    /// Swap-delivered requests over inter-cluster requests.
    pub fn successful_assembly_rate(&self) -> Option<f64> {
        ratio(self.network.delivered_inter, self.network.requests_inter)
    }

    pub fn attempts_per_success(&self) -> Option<f64> {
        let s = self.swap_totals();
        ratio(s.swap_attempts, s.swap_successes)
    }

    /// Summary over delivered fidelities, optionally restricted to a class.
    pub fn fidelity_summary(&self, class: Option<RequestClass>) -> Option<FidelitySummary> {
        FidelitySummary::from_values(
            self.fidelities
                .iter()
                .filter(|s| class.is_none_or(|c| c == s.class))
                .map(|s| s.value),
        )
    }

    /// Checks every leaf, spine and network conservation identity.
    pub fn check_conservation(&self) -> Result<(), String> {
        for (i, l) in self.leaves.iter().enumerate() {
            let c = &l.counters;
            let inflow = c.in_memory_initial + c.admitted;
            let outflow = c.delivered_intra + c.sent_to_swap + c.reneged + c.displaced + c.in_memory_final;
            if inflow != outflow {
                return Err(format!("leaf {i}: ebits in {inflow} != ebits out {outflow} ({c:?})"));
            }
            if c.generated != c.admitted + c.not_joined {
                return Err(format!("leaf {i}: generated != admitted + not_joined ({c:?})"));
            }
        }
        for (i, s) in self.spines.iter().enumerate() {
            if s.swap_attempts != s.swap_successes + s.swap_failures {
                return Err(format!("spine {i}: attempts != successes + failures ({s:?})"));
            }
        }
        let leaves = self.leaf_totals();
        let swaps = self.swap_totals();
        let n = &self.network;
        if leaves.sent_to_swap != 2 * swaps.swap_attempts {
            return Err(format!(
                "ebits sent to swap {} != 2 x attempts {}",
                leaves.sent_to_swap, swaps.swap_attempts
            ));
        }
        if n.delivered_inter != swaps.swap_successes {
            return Err("inter deliveries != swap successes".into());
        }
        if n.requests_total != n.requests_intra + n.requests_inter {
            return Err("requests_total != intra + inter".into());
        }
        if leaves.delivered_intra + n.unserved_intra != n.requests_intra {
            return Err("intra requests not all accounted for".into());
        }
        if n.delivered_inter + n.unserved_inter != n.requests_inter {
            return Err("inter requests not all accounted for".into());
        }
        Ok(())
    }
}

/// Configuration values recorded next to each run in the CSV output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamColumns {
    pub scenario: String,
    pub spines: usize,
    pub leaves: usize,
    pub hosts_per_leaf: usize,
    pub spine_selection: String,
    pub gamma: String,
    pub f_threshold: f64,
    pub q_bsm: f64,
    pub lambda_gen: f64,
    pub capacity: usize,
    pub full_policy: String,
    pub pop_policy: String,
    pub renege_dist: String,
    pub workload_mode: String,
    pub mu_pair: Option<f64>,
    pub mu_total: Option<f64>,
    pub p_inter: Option<f64>,
    pub demand_rate: f64,
    pub horizon: f64,
    pub warmup: f64,
}

/// One finished run: a sweep point, a replication and its statistics.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub point: usize,
    pub replication: u32,
    pub seed: u64,
    pub params: ParamColumns,
    pub stats: RunStats,
}

/// Column order of the per-run CSV. Ratios with a zero denominator and
/// fidelity statistics without deliveries are written as empty cells.
pub const CSV_HEADER: &[&str] = &[
    "point",
    "replication",
    "seed",
    "scenario",
    "spines",
    "leaves",
    "hosts_per_leaf",
    "spine_selection",
    "gamma",
    "f_threshold",
    "q_bsm",
    "lambda_gen",
    "capacity",
    "full_policy",
    "pop_policy",
    "renege_dist",
    "workload_mode",
    "mu_pair",
    "mu_total",
    "p_inter",
    "demand_rate",
    "horizon",
    "warmup",
    "events",
    "generated",
    "not_joined",
    "displaced",
    "admitted",
    "reneged",
    "delivered_intra",
    "sent_to_swap",
    "in_memory_initial",
    "in_memory_final",
    "swap_attempts",
    "swap_failures",
    "swap_successes",
    "requests_total",
    "requests_intra",
    "requests_inter",
    "delivered_inter",
    "unserved_empty",
    "throughput",
    "capacity_rate",
    "avg_queue_len",
    "p_empty",
    "p_full",
    "renege_rate",
    "reneging_ratio",
    "not_joined_ratio",
    "successful_assembly_rate",
    "attempts_per_success",
    "fidelity_mean",
    "fidelity_min",
    "fidelity_max",
    "fidelity_intra_mean",
    "fidelity_inter_mean",
];

fn fmt_f(x: f64) -> String {
    // Shortest representation that round-trips: deterministic across runs.
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

impl RunRecord {
    pub fn csv_fields(&self) -> Vec<String> {
        let p = &self.params;
        let s = &self.stats;
        let l = s.leaf_totals();
        let w = s.swap_totals();
        let n = &s.network;
        let all = s.fidelity_summary(None);
        let intra = s.fidelity_summary(Some(RequestClass::Intra));
        let inter = s.fidelity_summary(Some(RequestClass::Inter));
        vec![
            self.point.to_string(),
            self.replication.to_string(),
            self.seed.to_string(),
            p.scenario.clone(),
            p.spines.to_string(),
            p.leaves.to_string(),
            p.hosts_per_leaf.to_string(),
            p.spine_selection.clone(),
            p.gamma.clone(),
            fmt_f(p.f_threshold),
            fmt_f(p.q_bsm),
            fmt_f(p.lambda_gen),
            p.capacity.to_string(),
            p.full_policy.clone(),
            p.pop_policy.clone(),
            p.renege_dist.clone(),
            p.workload_mode.clone(),
            fmt_opt(p.mu_pair),
            fmt_opt(p.mu_total),
            fmt_opt(p.p_inter),
            fmt_f(p.demand_rate),
            fmt_f(p.horizon),
            fmt_f(p.warmup),
            s.events.to_string(),
            l.generated.to_string(),
            l.not_joined.to_string(),
            l.displaced.to_string(),
            l.admitted.to_string(),
            l.reneged.to_string(),
            l.delivered_intra.to_string(),
            l.sent_to_swap.to_string(),
            l.in_memory_initial.to_string(),
            l.in_memory_final.to_string(),
            w.swap_attempts.to_string(),
            w.swap_failures.to_string(),
            w.swap_successes.to_string(),
            n.requests_total.to_string(),
            n.requests_intra.to_string(),
            n.requests_inter.to_string(),
            n.delivered_inter.to_string(),
            n.unserved_empty().to_string(),
            fmt_f(s.throughput()),
            fmt_f(s.capacity()),
            fmt_f(s.avg_queue_len()),
            fmt_f(s.p_empty()),
            fmt_f(s.p_full()),
            fmt_f(s.renege_rate()),
            fmt_opt(s.reneging_ratio()),
            fmt_opt(s.not_joined_ratio()),
            fmt_opt(s.successful_assembly_rate()),
            fmt_opt(s.attempts_per_success()),
            fmt_opt(all.as_ref().map(|f| f.mean)),
            fmt_opt(all.as_ref().map(|f| f.min)),
            fmt_opt(all.as_ref().map(|f| f.max)),
            fmt_opt(intra.map(|f| f.mean)),
            fmt_opt(inter.map(|f| f.mean)),
        ]
    }
}

/// Writes one CSV row per record, sorted by `(point, replication)`.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> csv::Result<()> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.point, r.replication));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in sorted {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(records: &[RunRecord], path: &Path) -> csv::Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

/// Metrics aggregated across replications in the summary CSV.
pub const SUMMARY_METRICS: &[&str] = &[
    "throughput",
    "avg_queue_len",
    "reneging_ratio",
    "not_joined_ratio",
    "successful_assembly_rate",
    "attempts_per_success",
    "fidelity_mean",
    "fidelity_min",
];

fn metric_value(s: &RunStats, name: &str) -> Option<f64> {
    match name {
        "throughput" => Some(s.throughput()),
        "avg_queue_len" => Some(s.avg_queue_len()),
        "reneging_ratio" => s.reneging_ratio(),
        "not_joined_ratio" => s.not_joined_ratio(),
        "successful_assembly_rate" => s.successful_assembly_rate(),
        "attempts_per_success" => s.attempts_per_success(),
        "fidelity_mean" => s.fidelity_summary(None).map(|f| f.mean),
        "fidelity_min" => s.fidelity_summary(None).map(|f| f.min),
        _ => None,
    }
}

/// Mean and sample standard error; the error is absent with one sample.
pub fn mean_se(values: &[f64]) -> Option<(f64, Option<f64>)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = (values.len() > 1).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    Some((mean, se))
}

/// Per-point summary: parameter columns, replication count, then
/// `<metric>_mean` / `<metric>_se` pairs.
pub fn write_summary_csv<W: Write>(records: &[RunRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = CSV_HEADER[3..23].iter().map(|s| s.to_string()).collect();
    header.insert(0, "point".into());
    header.push("replications".into());
    for m in SUMMARY_METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_se"));
    }
    w.write_record(&header)?;
    let mut points: Vec<usize> = records.iter().map(|r| r.point).collect();
    points.sort_unstable();
    points.dedup();
    for p in points {
        let mut group: Vec<&RunRecord> = records.iter().filter(|r| r.point == p).collect();
        group.sort_by_key(|r| r.replication);
        let first = group[0].csv_fields();
        let mut row: Vec<String> = vec![p.to_string()];
        row.extend(first[3..23].iter().cloned());
        row.push(group.len().to_string());
        for m in SUMMARY_METRICS {
            let vals: Vec<f64> = group.iter().filter_map(|r| metric_value(&r.stats, m)).collect();
            match mean_se(&vals) {
                Some((mean, se)) => {
                    row.push(fmt_f(mean));
                    row.push(fmt_opt(se));
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One line of the optional newline-delimited JSON event trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TraceRecord {
    WarmupCut {
        t: f64,
    },
    Generated {
        t: f64,
        leaf: usize,
        admitted: bool,
        displaced: bool,
    },
    Reneged {
        t: f64,
        leaf: usize,
    },
    Request {
        t: f64,
        class: RequestClass,
    },
    DeliveredIntra {
        t: f64,
        leaf: usize,
        fidelity: f64,
    },
    SwapAttempt {
        t: f64,
        spine: usize,
        leaf_a: usize,
        leaf_b: usize,
        success: bool,
    },
    DeliveredInter {
        t: f64,
        fidelity: f64,
    },
    Unserved {
        t: f64,
        class: RequestClass,
    },
    End {
        t: f64,
    },
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace(text: &str) -> serde_json::Result<Vec<TraceRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Recomputes run statistics offline from an event trace.
pub fn replay_trace(
    records: &[TraceRecord],
    leaves: usize,
    capacity: usize,
    spines: usize,
    renege_dist: RenegeDist,
) -> RunStats {
    let mut len = vec![0usize; leaves];
    let mut queues = vec![QueueTracker::new(capacity); leaves];
    let mut counters = vec![LeafCounters::default(); leaves];
    let mut swaps = vec![SwapCounters::default(); spines];
    let mut net = NetworkCounters::default();
    let mut fidelities = Vec::new();
    let mut warmup = 0.0;
    let mut horizon = 0.0;
    fn change(queues: &mut [QueueTracker], len: &mut [usize], leaf: usize, t: f64, delta: i64) {
        queues[leaf].advance(t, len[leaf]);
        len[leaf] = (len[leaf] as i64 + delta) as usize;
    }
    for r in records {
        match *r {
            TraceRecord::WarmupCut { t } => {
                warmup = t;
                for l in 0..leaves {
                    counters[l] = LeafCounters {
                        in_memory_initial: len[l] as u64,
                        ..Default::default()
                    };
                    queues[l].reset(t);
                }
                swaps.iter_mut().for_each(|s| *s = SwapCounters::default());
                net = NetworkCounters::default();
                fidelities.clear();
            }
            TraceRecord::Generated {
                t,
                leaf,
                admitted,
                displaced,
            } => {
                let c = &mut counters[leaf];
                c.generated += 1;
                if admitted {
                    c.admitted += 1;
                    if displaced {
                        c.displaced += 1;
                    } else {
                        change(&mut queues, &mut len, leaf, t, 1);
                    }
                } else {
                    c.not_joined += 1;
                }
            }
            TraceRecord::Reneged { t, leaf } => {
                counters[leaf].reneged += 1;
                change(&mut queues, &mut len, leaf, t, -1);
            }
            TraceRecord::Request { class, .. } => {
                net.requests_total += 1;
                match class {
                    RequestClass::Intra => net.requests_intra += 1,
                    RequestClass::Inter => net.requests_inter += 1,
                }
            }
            TraceRecord::DeliveredIntra { t, leaf, fidelity } => {
                counters[leaf].delivered_intra += 1;
                change(&mut queues, &mut len, leaf, t, -1);
                fidelities.push(FidelitySample {
                    class: RequestClass::Intra,
                    value: fidelity,
                });
            }
            TraceRecord::SwapAttempt {
                t,
                spine,
                leaf_a,
                leaf_b,
                success,
            } => {
                let s = &mut swaps[spine];
                s.swap_attempts += 1;
                if success {
                    s.swap_successes += 1;
                } else {
                    s.swap_failures += 1;
                }
                for leaf in [leaf_a, leaf_b] {
                    counters[leaf].sent_to_swap += 1;
                    change(&mut queues, &mut len, leaf, t, -1);
                }
            }
            TraceRecord::DeliveredInter { fidelity, .. } => {
                net.delivered_inter += 1;
                fidelities.push(FidelitySample {
                    class: RequestClass::Inter,
                    value: fidelity,
                });
            }
            TraceRecord::Unserved { class, .. } => match class {
                RequestClass::Intra => net.unserved_intra += 1,
                RequestClass::Inter => net.unserved_inter += 1,
            },
            TraceRecord::End { t } => {
                horizon = t;
                for l in 0..leaves {
                    queues[l].advance(t, len[l]);
                    counters[l].in_memory_final = len[l] as u64;
                }
            }
        }
    }
    RunStats {
        leaves: counters
            .into_iter()
            .zip(queues)
            .map(|(counters, q)| LeafStats {
                counters,
                occupancy: q.occupancy().to_vec(),
            })
            .collect(),
        spines: swaps,
        network: net,
        fidelities,
        horizon,
        warmup,
        events: 0,
        renege_dist,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_stats() -> RunStats {
        RunStats {
            leaves: vec![LeafStats {
                counters: LeafCounters::default(),
                occupancy: vec![10.0, 0.0, 0.0],
            }],
            spines: vec![],
            network: NetworkCounters::default(),
            fidelities: vec![],
            horizon: 10.0,
            warmup: 0.0,
            events: 0,
            renege_dist: RenegeDist::Deterministic,
        }
    }

    #[test]
    fn zero_activity() {
        let s = empty_stats();
        assert_eq!(s.throughput(), 0.0);
        assert_eq!(s.capacity(), 0.0);
        assert_eq!(s.reneging_ratio(), None);
        assert_eq!(s.not_joined_ratio(), None);
        assert_eq!(s.successful_assembly_rate(), None);
        assert!(s.fidelity_summary(None).is_none());
        assert_eq!(s.avg_queue_len(), 0.0);
        assert_eq!(s.p_empty(), 1.0);
        assert!(s.check_conservation().is_ok());
    }

    #[test]
    fn queue_tracker_integral() {
        let mut q = QueueTracker::new(3);
        q.advance(1.0, 0);
        q.advance(3.0, 1);
        q.advance(4.0, 3);
        assert_eq!(q.occupancy(), &[1.0, 2.0, 0.0, 1.0]);
        assert_eq!(q.integral(), 5.0);
        q.reset(4.0);
        assert_eq!(q.integral(), 0.0);
    }

    #[test]
    fn fidelity_histogram() {
        let f = FidelitySummary::from_values([1.0, 1.0, 0.705, 0.5 + 1e-16]).unwrap();
        assert_eq!(f.count, 4);
        assert_eq!(f.max, 1.0);
        assert_eq!(f.histogram[HIST_BINS - 1], 2);
        assert_eq!(f.histogram[20], 1);
        assert_eq!(f.histogram[0], 1);
        assert_eq!(f.histogram.iter().sum::<u64>(), 4);
    }

    #[test]
    fn conservation_violation_is_reported() {
        let mut s = empty_stats();
        s.leaves[0].counters.admitted = 3;
        s.leaves[0].counters.generated = 3;
        assert!(s.check_conservation().unwrap_err().contains("leaf 0"));
    }

    #[test]
    fn mean_and_standard_error() {
        assert_eq!(mean_se(&[]), None);
        assert_eq!(mean_se(&[2.0]), Some((2.0, None)));
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((se.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn header_matches_row_width() {
        let rec = RunRecord {
            point: 0,
            replication: 0,
            seed: 1,
            params: ParamColumns {
                scenario: "x".into(),
                spines: 0,
                leaves: 1,
                hosts_per_leaf: 2,
                spine_selection: "uniform".into(),
                gamma: "0.05".into(),
                f_threshold: 0.7,
                q_bsm: 1.0,
                lambda_gen: 1.0,
                capacity: 2,
                full_policy: "block-new".into(),
                pop_policy: "oldest-first".into(),
                renege_dist: "deterministic".into(),
                workload_mode: "per-pair".into(),
                mu_pair: Some(1.0),
                mu_total: None,
                p_inter: None,
                demand_rate: 1.0,
                horizon: 10.0,
                warmup: 0.0,
            },
            stats: empty_stats(),
        };
        assert_eq!(rec.csv_fields().len(), CSV_HEADER.len());
        let mut buf = Vec::new();
        write_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
