//! End-to-end runs through the public API: trace replay, seed coupling, warmup and CSV export.

use crate::config::{Gamma, ScenarioConfig};
use crate::harness::{self, preset};
use crate::metrics::{export_csv, read_trace, replay_trace, write_trace, TraceRecord, CSV_HEADER};
use crate::network::{RequestClass, Workload};
use crate::{run_once, FullPolicy, RenegeDist, RunStats, Simulation};

fn spine_config() -> ScenarioConfig {
    let mut c = preset("fig7-spine").unwrap();
    c.sweep.clear();
    c.topology.spines = 2;
    c.physics.q_bsm = 0.6;
    c.workload = Workload::Aggregate {
        mu_total: 12.0,
        p_inter: Some(0.5),
    };
    c.sim.horizon = 400.0;
    c
}

fn assert_same_stats(live: &RunStats, replayed: &RunStats) {
    assert_eq!(live.network, replayed.network);
    assert_eq!(live.spines, replayed.spines);
    assert_eq!(live.fidelities, replayed.fidelities);
    assert_eq!(live.horizon, replayed.horizon);
    assert_eq!(live.warmup, replayed.warmup);
    for (a, b) in live.leaves.iter().zip(&replayed.leaves) {
        assert_eq!(a.counters, b.counters);
        for (x, y) in a.occupancy.iter().zip(&b.occupancy) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn trace_replay_reproduces_live_statistics() {
    for policy in [FullPolicy::BlockNew, FullPolicy::DropOldest] {
        let mut cfg = spine_config();
        cfg.leaf.full_policy = policy;
        let (live, trace) = Simulation::new(&cfg, 11).unwrap().with_trace().run();
        let trace = trace.unwrap();
        assert!(matches!(trace.last(), Some(TraceRecord::End { .. })));

        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        let parsed = read_trace(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(parsed, trace);

        let replayed = replay_trace(&parsed, 2, cfg.leaf.capacity, 2, cfg.leaf.renege_dist);
        assert_same_stats(&live, &replayed);
        replayed.check_conservation().unwrap();
    }
}

#[test]
fn tracing_does_not_perturb_the_run() {
    let cfg = spine_config();
    let (traced, _) = Simulation::new(&cfg, 5).unwrap().with_trace().run();
    assert_eq!(traced, run_once(&cfg, 5).unwrap());
}

#[test]
fn request_streams_are_shared_across_leaf_parameters() {
    // Common random numbers: changing buffer size or dephasing must not move
    // the request arrivals.
    let mut a = spine_config();
    a.sim.warmup_fraction = 0.0;
    let mut b = a.clone();
    b.leaf.capacity = 3;
    b.physics.gamma = Gamma::Uniform(0.5);
    let requests = |c: &ScenarioConfig| -> Vec<(u64, RequestClass)> {
        let (_, trace) = Simulation::new(c, 9).unwrap().with_trace().run();
        trace
            .unwrap()
            .into_iter()
            .filter_map(|r| match r {
                TraceRecord::Request { t, class, .. } => Some((t.to_bits(), class)),
                _ => None,
            })
            .collect()
    };
    let ra = requests(&a);
    assert!(ra.len() > 1000);
    assert_eq!(ra, requests(&b));
}

#[test]
fn warmup_discards_transient_counts() {
    let mut cfg = spine_config();
    cfg.sim.warmup_fraction = 0.5;
    let s = run_once(&cfg, 3).unwrap();
    assert_eq!(s.warmup, 200.0);
    assert!((s.effective_horizon() - 200.0).abs() < 1e-12);
    let totals = s.leaf_totals();
    // Generation 30/leaf over 200 time units after the cut.
    let expected = 2.0 * 30.0 * 200.0;
    assert!(
        (totals.generated as f64 / expected - 1.0).abs() < 0.05,
        "{}",
        totals.generated
    );
    assert!(totals.in_memory_initial > 0);
    s.check_conservation().unwrap();
}

#[test]
fn queue_length_bounded_by_admissions_times_deadline() {
    let mut cfg = preset("validate-paper").unwrap();
    cfg.leaf.renege_dist = RenegeDist::Deterministic;
    cfg.sim.horizon = 2000.0;
    cfg.sim.warmup_fraction = 0.0;
    cfg.workload = Workload::PerPair { mu_pair: 20.0 };
    let s = run_once(&cfg, 1).unwrap();
    let c = s.leaf_totals();
    // Every departure happens within T of admission, so L <= lambda_eff * T.
    let t = crate::renege_time(0.7, 0.06).unwrap();
    let admitted_rate = c.admitted as f64 / s.effective_horizon();
    assert!(s.avg_queue_len() <= admitted_rate * t);
    assert!(
        s.p_empty() > 0.4,
        "demand 60 vs generation 30 should drain memory often"
    );
    assert_eq!(c.reneged + c.delivered_intra + c.in_memory_final, c.admitted);
}

#[test]
fn negligible_demand_means_every_ebit_reneges_or_is_blocked() {
    let mut cfg = preset("validate-paper").unwrap();
    cfg.leaf.renege_dist = RenegeDist::Deterministic;
    cfg.workload = Workload::Aggregate {
        mu_total: 1e-7,
        p_inter: None,
    };
    cfg.sim.horizon = 500.0;
    cfg.sim.warmup_fraction = 0.0;
    let s = run_once(&cfg, 2).unwrap();
    let c = s.leaf_totals();
    assert_eq!(s.network.requests_total, 0);
    assert_eq!(c.delivered_intra, 0);
    assert_eq!(c.generated, c.not_joined + c.reneged + c.in_memory_final);
    assert_eq!(s.fidelities.len(), 0);
}

#[test]
fn zero_dephasing_never_reneges() {
    let mut cfg = spine_config();
    cfg.physics.gamma = Gamma::Uniform(0.0);
    let s = run_once(&cfg, 4).unwrap();
    assert_eq!(s.leaf_totals().reneged, 0);
    assert!(s.fidelities.iter().all(|f| f.value == 1.0));
    assert_eq!(s.reneging_ratio(), Some(0.0));
}

#[test]
fn mean_fidelity_rises_with_service_rate() {
    // Faster consumption means shorter storage and less dephasing.
    let mut cfg = preset("fig6-leaf").unwrap();
    cfg.sweep.clear();
    cfg.sim.horizon = 3000.0;
    cfg.physics.gamma = Gamma::Uniform(0.06);
    let mut last = 0.0;
    for mu in [1.0, 5.0, 20.0] {
        cfg.workload = Workload::PerPair { mu_pair: mu };
        let f = run_once(&cfg, 8).unwrap().fidelity_summary(None).unwrap();
        assert!(f.min > 0.7);
        assert!(f.mean > last, "mu={mu}: {} <= {last}", f.mean);
        last = f.mean;
    }
}

#[test]
fn per_leaf_dephasing_is_honoured() {
    let mut cfg = spine_config();
    cfg.physics.gamma = Gamma::PerLeaf(vec![0.0, 0.3]);
    let s = run_once(&cfg, 6).unwrap();
    assert_eq!(s.leaves[0].counters.reneged, 0);
    assert!(s.leaves[1].counters.reneged > 0);
    s.check_conservation().unwrap();
}

#[test]
fn exported_csv_has_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut single = preset("validate-small").unwrap();
    single.sim.horizon = 100.0;
    let records = harness::run_scenario(&single).unwrap();
    let path = dir.path().join("single.csv");
    export_csv(&records, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));

    let mut grid = preset("fig6-leaf").unwrap();
    grid.sim.horizon = 50.0;
    grid.sweep.truncate(2);
    grid.sweep.push(crate::SweepAxis {
        field: "physics.gamma".into(),
        values: vec![0.02, 0.06, 0.1],
    });
    let records = harness::run_scenario(&grid).unwrap();
    let (runs, summary) = harness::write_outputs(&records, dir.path(), "grid").unwrap();
    let mut reader = csv::Reader::from_path(&runs).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 3 * 3 * 5);
    assert!(rows.iter().all(|r| r.len() == CSV_HEADER.len()));
    let summary_rows = csv::Reader::from_path(&summary).unwrap().records().count();
    assert_eq!(summary_rows, 27);
}
