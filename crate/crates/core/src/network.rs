//! Spine-leaf topology, request routing and request generation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::error::{param, Error, Result};
use crate::rng::RngStream;

/// A host is identified by its leaf and its index under that leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HostId {
    pub leaf: usize,
    pub index: usize,
}

impl HostId {
    pub fn new(leaf: usize, index: usize) -> Self {
        Self { leaf, index }
    }
}

impl fmt::Display for HostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.leaf, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestClass {
    Intra,
    Inter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    HostLeaf { host: HostId },
    LeafSpine { leaf: usize, spine: usize },
}

/// Immutable two-layer fat-tree: every host hangs off one leaf, every leaf is
/// wired to every spine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    spines: usize,
    leaves: usize,
    hosts_per_leaf: usize,
    links: Vec<Link>,
    intra_pairs: Vec<(HostId, HostId)>,
    inter_pairs: Vec<(HostId, HostId)>,
}

impl Topology {
    pub fn build(spines: usize, leaves: usize, hosts_per_leaf: usize) -> Result<Self> {
        if leaves < 1 {
            return Err(param("leaves", leaves as f64, "need at least one leaf"));
        }
        if hosts_per_leaf < 2 {
            return Err(param(
                "hosts_per_leaf",
                hosts_per_leaf as f64,
                "need at least two hosts per leaf to form a pair",
            ));
        }
        let hosts: Vec<HostId> = (0..leaves)
            .flat_map(|l| (0..hosts_per_leaf).map(move |h| HostId::new(l, h)))
            .collect();
        let mut links: Vec<Link> = hosts.iter().map(|&host| Link::HostLeaf { host }).collect();
        for leaf in 0..leaves {
            for spine in 0..spines {
                links.push(Link::LeafSpine { leaf, spine });
            }
        }
        let mut intra_pairs = Vec::new();
        let mut inter_pairs = Vec::new();
        for (i, &a) in hosts.iter().enumerate() {
            for &b in &hosts[i + 1..] {
                if a.leaf == b.leaf {
                    intra_pairs.push((a, b));
                } else {
                    inter_pairs.push((a, b));
                }
            }
        }
        Ok(Self {
            spines,
            leaves,
            hosts_per_leaf,
            links,
            intra_pairs,
            inter_pairs,
        })
    }

    pub fn spines(&self) -> usize {
        self.spines
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn hosts_per_leaf(&self) -> usize {
        self.hosts_per_leaf
    }

    pub fn host_count(&self) -> usize {
        self.leaves * self.hosts_per_leaf
    }

    pub fn hosts(&self) -> impl Iterator<Item = HostId> + '_ {
        (0..self.leaves).flat_map(move |l| (0..self.hosts_per_leaf).map(move |h| HostId::new(l, h)))
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn host_leaf_links(&self) -> usize {
        self.links.iter().filter(|l| matches!(l, Link::HostLeaf { .. })).count()
    }

    pub fn leaf_spine_links(&self) -> usize {
        self.links.len() - self.host_leaf_links()
    }

    pub fn contains(&self, host: HostId) -> bool {
        host.leaf < self.leaves && host.index < self.hosts_per_leaf
    }

    /// Unordered host pairs sharing a leaf, in lexicographic order.
    pub fn intra_pairs(&self) -> &[(HostId, HostId)] {
        &self.intra_pairs
    }

    /// Unordered host pairs on different leaves, in lexicographic order.
    pub fn inter_pairs(&self) -> &[(HostId, HostId)] {
        &self.inter_pairs
    }

    /// All unordered host pairs, lexicographic order.
    pub fn all_pairs(&self) -> Vec<(HostId, HostId)> {
        let mut pairs: Vec<_> = self.intra_pairs.iter().chain(&self.inter_pairs).copied().collect();
        pairs.sort_unstable();
        pairs
    }

    pub fn classify(&self, src: HostId, dst: HostId) -> RequestClass {
        if src.leaf == dst.leaf {
            RequestClass::Intra
        } else {
            RequestClass::Inter
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub src: HostId,
    pub dst: HostId,
    pub arrival_time: SimTime,
    pub class: RequestClass,
}

impl Request {
    pub fn new(topology: &Topology, src: HostId, dst: HostId, arrival_time: SimTime) -> Result<Self> {
        for h in [src, dst] {
            if !topology.contains(h) {
                return Err(Error::UnknownHost(h.to_string()));
            }
        }
        if src == dst {
            return Err(Error::UnknownHost(format!("{src} (src == dst)")));
        }
        Ok(Self {
            src,
            dst,
            arrival_time,
            class: topology.classify(src, dst),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Intra { leaf: usize },
    Inter { leaf_a: usize, spine: usize, leaf_b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpineSelection {
    #[default]
    Uniform,
    RoundRobin,
}

/// Chooses the spine that serves each inter-cluster request.
#[derive(Debug, Clone)]
pub struct SpinePicker {
    policy: SpineSelection,
    stream: RngStream,
    next: usize,
}

impl SpinePicker {
    pub fn new(policy: SpineSelection, stream: RngStream) -> Self {
        Self {
            policy,
            stream,
            next: 0,
        }
    }

    fn pick(&mut self, spines: usize) -> usize {
        match self.policy {
            SpineSelection::Uniform => self.stream.index(spines),
            SpineSelection::RoundRobin => {
                let s = self.next % spines;
                self.next = (self.next + 1) % spines;
                s
            }
        }
    }
}

/// Routes a request: the shared leaf for intra-cluster demand, both leaves
/// and one spine for inter-cluster demand.
pub fn classify_route(topology: &Topology, req: &Request, picker: &mut SpinePicker) -> Result<Route> {
    for h in [req.src, req.dst] {
        if !topology.contains(h) {
            return Err(Error::UnknownHost(h.to_string()));
        }
    }
    if req.src.leaf == req.dst.leaf {
        return Ok(Route::Intra { leaf: req.src.leaf });
    }
    if topology.spines == 0 {
        return Err(Error::NoSpine {
            src_leaf: req.src.leaf,
            dst_leaf: req.dst.leaf,
        });
    }
    Ok(Route::Inter {
        leaf_a: req.src.leaf,
        spine: picker.pick(topology.spines),
        leaf_b: req.dst.leaf,
    })
}

/// Demand model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Workload {
    /// An independent Poisson stream per unordered host pair.
    PerPair { mu_pair: f64 },
    /// One Poisson stream at `mu_total`; each arrival is inter-cluster with
    /// probability `p_inter` and then assigned a uniform pair of its class.
    /// Without `p_inter` the pair is uniform over all host pairs.
    Aggregate {
        mu_total: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_inter: Option<f64>,
    },
}

impl Workload {
    pub fn validate(&self, topology: &Topology) -> Result<()> {
        match *self {
            Workload::PerPair { mu_pair } => {
                if !(mu_pair > 0.0 && mu_pair.is_finite()) {
                    return Err(param("mu_pair", mu_pair, "must be finite and > 0"));
                }
            }
            Workload::Aggregate { mu_total, p_inter } => {
                if !(mu_total > 0.0 && mu_total.is_finite()) {
                    return Err(param("mu_total", mu_total, "must be finite and > 0"));
                }
                if let Some(p) = p_inter {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(param("p_inter", p, "must lie in [0, 1]"));
                    }
                    if p > 0.0 && topology.inter_pairs().is_empty() {
                        return Err(param("p_inter", p, "no inter-cluster pairs with a single leaf"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Total request rate across the network.
    pub fn total_rate(&self, topology: &Topology) -> f64 {
        match *self {
            Workload::PerPair { mu_pair } => mu_pair * topology.all_pairs().len() as f64,
            Workload::Aggregate { mu_total, .. } => mu_total,
        }
    }
}

/// Poisson request source. In per-pair mode each pair owns its own stream,
/// so the arrivals of one pair never depend on the others.
#[derive(Debug, Clone)]
pub enum RequestGenerator {
    PerPair {
        rate: f64,
        pairs: Vec<(HostId, HostId)>,
        streams: Vec<RngStream>,
    },
    Aggregate {
        rate: f64,
        p_inter: Option<f64>,
        all: Vec<(HostId, HostId)>,
        intra: Vec<(HostId, HostId)>,
        inter: Vec<(HostId, HostId)>,
        arrivals: RngStream,
        class: RngStream,
        pair: RngStream,
    },
}

/// Identifies which Poisson source produced the next arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Pair(usize),
    Aggregate,
}

impl RequestGenerator {
    pub fn new(workload: &Workload, topology: &Topology, master_seed: u64) -> Result<Self> {
        workload.validate(topology)?;
        Ok(match *workload {
            Workload::PerPair { mu_pair } => {
                let pairs = topology.all_pairs();
                let streams = pairs
                    .iter()
                    .map(|(a, b)| RngStream::new(master_seed, format!("requests-{a}-{b}")))
                    .collect();
                RequestGenerator::PerPair {
                    rate: mu_pair,
                    pairs,
                    streams,
                }
            }
            Workload::Aggregate { mu_total, p_inter } => RequestGenerator::Aggregate {
                rate: mu_total,
                p_inter,
                all: topology.all_pairs(),
                intra: topology.intra_pairs().to_vec(),
                inter: topology.inter_pairs().to_vec(),
                arrivals: RngStream::new(master_seed, "requests"),
                class: RngStream::new(master_seed, "request-class"),
                pair: RngStream::new(master_seed, "request-pair"),
            },
        })
    }

    pub fn sources(&self) -> Vec<Source> {
        match self {
            RequestGenerator::PerPair { pairs, .. } => (0..pairs.len()).map(Source::Pair).collect(),
            RequestGenerator::Aggregate { .. } => vec![Source::Aggregate],
        }
    }

    /// Draws the time until the next arrival of `source`.
    pub fn interarrival(&mut self, source: Source) -> f64 {
        let sampled = match (self, source) {
            (RequestGenerator::PerPair { rate, streams, .. }, Source::Pair(i)) => streams[i].sample_exponential(*rate),
            (RequestGenerator::Aggregate { rate, arrivals, .. }, Source::Aggregate) => {
                arrivals.sample_exponential(*rate)
            }
            _ => panic!("source does not belong to this generator"),
        };
        sampled.expect("rate validated on construction")
    }

    /// Materialises the request produced by `source` at time `now`.
    pub fn request(&mut self, source: Source, now: SimTime) -> Request {
        let (src, dst) = match (self, source) {
            (RequestGenerator::PerPair { pairs, .. }, Source::Pair(i)) => pairs[i],
            (
                RequestGenerator::Aggregate {
                    p_inter,
                    all,
                    intra,
                    inter,
                    class,
                    pair,
                    ..
                },
                Source::Aggregate,
            ) => match *p_inter {
                None => all[pair.index(all.len())],
                Some(p) => {
                    let is_inter = class.sample_bernoulli(p).expect("validated");
                    let pool = if is_inter { &*inter } else { &*intra };
                    pool[pair.index(pool.len())]
                }
            },
            _ => panic!("source does not belong to this generator"),
        };
        Request {
            src,
            dst,
            arrival_time: now,
            class: if src.leaf == dst.leaf {
                RequestClass::Intra
            } else {
                RequestClass::Inter
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_topologies() {
        let t = Topology::build(1, 2, 3).unwrap();
        assert_eq!(t.spines(), 1);
        assert_eq!(t.leaves(), 2);
        assert_eq!(t.host_count(), 6);
        assert_eq!(t.host_leaf_links(), 6);
        assert_eq!(t.leaf_spine_links(), 2);

        let single = Topology::build(0, 1, 3).unwrap();
        assert_eq!(single.intra_pairs().len(), 3);
        assert!(single.inter_pairs().is_empty());

        let big = Topology::build(2, 15, 4).unwrap();
        assert_eq!(big.leaf_spine_links(), 30);
        for leaf in 0..15 {
            for spine in 0..2 {
                assert!(big.links().contains(&Link::LeafSpine { leaf, spine }));
            }
        }
    }

    #[test]
    fn build_rejects_degenerate_shapes() {
        assert!(Topology::build(1, 2, 1).is_err());
        assert!(Topology::build(1, 0, 3).is_err());
    }

    #[test]
    fn deterministic_ids() {
        let a = Topology::build(2, 3, 4).unwrap();
        let b = Topology::build(2, 3, 4).unwrap();
        assert_eq!(a, b);
        let hosts: Vec<_> = a.hosts().collect();
        assert_eq!(hosts[0], HostId::new(0, 0));
        assert_eq!(hosts[5], HostId::new(1, 1));
    }

    #[test]
    fn routes() {
        let t = Topology::build(1, 2, 3).unwrap();
        let mut picker = SpinePicker::new(SpineSelection::Uniform, RngStream::new(0, "spine"));
        let intra = Request::new(&t, HostId::new(0, 0), HostId::new(0, 2), 0.0).unwrap();
        assert_eq!(intra.class, RequestClass::Intra);
        assert_eq!(
            classify_route(&t, &intra, &mut picker).unwrap(),
            Route::Intra { leaf: 0 }
        );
        let inter = Request::new(&t, HostId::new(0, 0), HostId::new(1, 0), 0.0).unwrap();
        assert_eq!(inter.class, RequestClass::Inter);
        assert_eq!(
            classify_route(&t, &inter, &mut picker).unwrap(),
            Route::Inter {
                leaf_a: 0,
                spine: 0,
                leaf_b: 1
            }
        );
    }

    #[test]
    fn inter_without_spine_is_an_error() {
        let t = Topology::build(0, 2, 2).unwrap();
        let mut picker = SpinePicker::new(SpineSelection::Uniform, RngStream::new(0, "spine"));
        let req = Request::new(&t, HostId::new(0, 0), HostId::new(1, 1), 0.0).unwrap();
        assert!(matches!(
            classify_route(&t, &req, &mut picker),
            Err(Error::NoSpine { .. })
        ));
    }

    #[test]
    fn invalid_hosts() {
        let t = Topology::build(1, 2, 2).unwrap();
        assert!(Request::new(&t, HostId::new(0, 0), HostId::new(0, 0), 0.0).is_err());
        assert!(Request::new(&t, HostId::new(0, 0), HostId::new(5, 0), 0.0).is_err());
    }

    #[test]
    fn uniform_spine_frequencies() {
        let t = Topology::build(3, 2, 2).unwrap();
        let mut picker = SpinePicker::new(SpineSelection::Uniform, RngStream::new(9, "spine"));
        let req = Request::new(&t, HostId::new(0, 0), HostId::new(1, 0), 0.0).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            match classify_route(&t, &req, &mut picker).unwrap() {
                Route::Inter { spine, .. } => counts[spine] += 1,
                Route::Intra { .. } => unreachable!(),
            }
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn round_robin_cycles() {
        let t = Topology::build(3, 2, 2).unwrap();
        let mut picker = SpinePicker::new(SpineSelection::RoundRobin, RngStream::new(9, "spine"));
        let req = Request::new(&t, HostId::new(0, 0), HostId::new(1, 0), 0.0).unwrap();
        let spines: Vec<_> = (0..6)
            .map(|_| match classify_route(&t, &req, &mut picker).unwrap() {
                Route::Inter { spine, .. } => spine,
                Route::Intra { .. } => unreachable!(),
            })
            .collect();
        assert_eq!(spines, vec![0, 1, 2, 0, 1, 2]);
    }

    /// Simulates the superposition of all sources and returns (count, last time, inter count).
    fn drive(gen: &mut RequestGenerator, horizon: f64) -> (usize, usize) {
        let mut next: Vec<(f64, Source)> = gen.sources().into_iter().map(|s| (gen.interarrival(s), s)).collect();
        let (mut n, mut inter) = (0, 0);
        loop {
            let (i, &(t, s)) = next
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                .unwrap();
            if t > horizon {
                break;
            }
            let r = gen.request(s, t);
            assert_ne!(r.src, r.dst);
            n += 1;
            if r.class == RequestClass::Inter {
                inter += 1;
            }
            next[i] = (t + gen.interarrival(s), s);
        }
        (n, inter)
    }

    #[test]
    fn per_pair_superposition_rate() {
        let t = Topology::build(0, 1, 3).unwrap();
        let w = Workload::PerPair { mu_pair: 1.0 };
        assert_eq!(w.total_rate(&t), 3.0);
        let mut gen = RequestGenerator::new(&w, &t, 5).unwrap();
        let horizon = 200_000.0;
        let (n, inter) = drive(&mut gen, horizon);
        let rate = n as f64 / horizon;
        assert!((rate - 3.0).abs() < 0.03, "rate = {rate}");
        assert_eq!(inter, 0);
    }

    #[test]
    fn aggregate_inter_fraction() {
        let t = Topology::build(1, 2, 3).unwrap();
        let w = Workload::Aggregate {
            mu_total: 1.0,
            p_inter: Some(0.4),
        };
        let mut gen = RequestGenerator::new(&w, &t, 5).unwrap();
        let (n, inter) = drive(&mut gen, 100_000.0);
        assert!(n > 95_000);
        let frac = inter as f64 / n as f64;
        assert!((frac - 0.4).abs() < 0.01, "fraction = {frac}");

        let w0 = Workload::Aggregate {
            mu_total: 1.0,
            p_inter: Some(0.0),
        };
        let mut gen = RequestGenerator::new(&w0, &t, 5).unwrap();
        assert_eq!(drive(&mut gen, 10_000.0).1, 0);
    }

    #[test]
    fn interarrival_mean_of_single_stream() {
        let t = Topology::build(0, 1, 2).unwrap();
        let w = Workload::Aggregate {
            mu_total: 4.0,
            p_inter: None,
        };
        let mut gen = RequestGenerator::new(&w, &t, 11).unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| gen.interarrival(Source::Aggregate)).sum::<f64>() / n as f64;
        assert!((mean - 0.25).abs() < 0.0025, "mean = {mean}");
    }

    #[test]
    fn workload_validation() {
        let single = Topology::build(0, 1, 3).unwrap();
        assert!(Workload::PerPair { mu_pair: 0.0 }.validate(&single).is_err());
        assert!(Workload::Aggregate {
            mu_total: 1.0,
            p_inter: Some(0.4)
        }
        .validate(&single)
        .is_err());
        assert!(Workload::Aggregate {
            mu_total: 1.0,
            p_inter: Some(1.2)
        }
        .validate(&Topology::build(1, 2, 2).unwrap())
        .is_err());
    }
}
