mod common;

use cnhaven_core::sim::{
    depth_grid, simulate, sweep, theoretical_bounds, JitterModel, PipelineConfig, SimReport,
    StageName,
};
use common::{small, wide_memory, DEPTHS};

fn jittered(depth: u32, seed: u64) -> PipelineConfig {
    let mut cfg = small(depth);
    cfg.mem_latency_ticks.jitter_max = 40;
    cfg.mem_latency_ticks.seed = seed;
    cfg.record_timelines = true;
    cfg
}

#[test]
fn conservation_and_fifo_bounds() {
    let mut cfgs = vec![small(1), small(8), wide_memory(32), jittered(16, 3)];
    let mut tight = small(8);
    tight.fifo_depths.explode_to_shuffle = 1;
    tight.fifo_depths.shuffle_to_implode = 1;
    cfgs.push(tight);
    for cfg in cfgs {
        let r = simulate(&cfg, 40).unwrap();
        assert_eq!(r.hashes_injected, 40);
        assert_eq!(r.hashes_completed, r.hashes_injected);
        for (fifo, cap) in r.fifo_occupancy.iter().zip(cfg.fifo_depths.as_array()) {
            assert_eq!(fifo.capacity, u64::from(cap));
            assert!(fifo.max <= fifo.capacity, "{fifo:?}");
        }
        assert!(r.shuffle_residency.max <= u64::from(cfg.pipeline_depth));
    }
}

#[test]
fn stages_of_a_hash_are_causally_ordered() {
    let r = simulate(&jittered(16, 9), 48).unwrap();
    assert_eq!(r.timelines.len(), 48);
    for t in &r.timelines {
        let seq = [
            t.keccak_start,
            t.keccak_end,
            t.explode_start,
            t.explode_end,
            t.shuffle_start,
            t.shuffle_end,
            t.implode_start,
            t.implode_end,
            t.finalize_start,
            t.finalize_end,
        ];
        assert!(seq.windows(2).all(|w| w[0] <= w[1]), "{t:?}");
    }
}

#[test]
fn slots_are_never_shared() {
    let r = simulate(&jittered(4, 1), 32).unwrap();
    for a in &r.timelines {
        for b in r
            .timelines
            .iter()
            .filter(|b| b.hash > a.hash && b.slot == a.slot)
        {
            let disjoint = b.explode_start >= a.implode_end || a.explode_start >= b.implode_end;
            assert!(disjoint, "{a:?} {b:?}");
        }
    }
}

#[test]
fn seeded_runs_are_reproducible() {
    let a = simulate(&jittered(8, 42), 24).unwrap();
    let b = simulate(&jittered(8, 42), 24).unwrap();
    assert_eq!(a, b);
    let c = simulate(&jittered(8, 43), 24).unwrap();
    assert_ne!(a.sim_ticks, c.sim_ticks);
    let grid = depth_grid(&jittered(1, 7), &[1, 4, 16]);
    let s1: Vec<SimReport> = sweep(&grid, 16)
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let s2: Vec<SimReport> = sweep(&grid, 16)
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect();
    assert_eq!(s1, s2);
}

#[test]
fn single_entry_sweep_equals_simulate() {
    let cfg = jittered(4, 5);
    let r = sweep(std::slice::from_ref(&cfg), 12).unwrap();
    assert_eq!(r.len(), 1);
    assert_eq!(*r[0].as_ref().unwrap(), simulate(&cfg, 12).unwrap());
}

#[test]
fn depth_one_matches_single_hash_bound() {
    for cfg in [PipelineConfig::default(), small(1)] {
        let b = theoretical_bounds(&cfg).unwrap();
        for n in [1, 4] {
            let r = simulate(&cfg, n).unwrap();
            let rel = r.hash_rate_hs / b.single_hash_rate;
            assert!((rel - 1.0).abs() < 0.01, "n={n} rel={rel}");
        }
    }
}

#[test]
fn implode_takes_twice_explode() {
    let b = theoretical_bounds(&PipelineConfig::default()).unwrap();
    let ex = b.stage(StageName::Explode);
    let im = b.stage(StageName::Implode);
    assert!((im.streaming_s / ex.streaming_s - 2.0).abs() < 1e-12);
    assert!((im.latency_s / ex.latency_s - 2.0).abs() < 2e-3);

    let cfg = PipelineConfig {
        record_timelines: true,
        ..PipelineConfig::default()
    };
    let t = simulate(&cfg, 1).unwrap().timelines[0];
    let ratio = (t.implode_end - t.implode_start) / (t.explode_end - t.explode_start);
    assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
}

#[test]
fn throughput_rises_with_depth_until_the_stage_bound() {
    let reports: Vec<SimReport> = sweep(&depth_grid(&wide_memory(1), &DEPTHS), 1024)
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let rates: Vec<f64> = reports.iter().map(|r| r.steady_hash_rate_hs).collect();
    assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
    // below saturation each doubling nearly doubles the rate
    for w in rates[..6].windows(2) {
        assert!(w[1] / w[0] > 1.9, "{rates:?}");
    }
    let bound = theoretical_bounds(&wide_memory(128)).unwrap();
    let top = *rates.last().unwrap();
    assert!(
        top <= bound.min_rate * 1.001 && top >= bound.min_rate * 0.99,
        "{top} {}",
        bound.min_rate
    );
}

#[test]
fn dependent_shuffle_saturates_one_port() {
    let r64 = simulate(&small(64), 1024).unwrap();
    let r128 = simulate(&small(128), 1024).unwrap();
    let b = theoretical_bounds(&small(128)).unwrap();
    assert_eq!(b.limiting, "memory");
    let plateau = r128.steady_hash_rate_hs / r64.steady_hash_rate_hs;
    assert!((plateau - 1.0).abs() < 1e-3, "{plateau}");
    for r in [&r64, &r128] {
        assert!(r.steady_hash_rate_hs <= b.memory_bound_rate * 1.001);
    }
    assert!(r128.mem_requests.max_port_queue > r64.mem_requests.max_port_queue / 2);
}

#[test]
fn jitter_raises_mean_latency() {
    let base = simulate(&small(8), 16).unwrap();
    let mut cfg = small(8);
    cfg.mem_latency_ticks.jitter_max = 64;
    let uniform = simulate(&cfg, 16).unwrap();
    cfg.mem_latency_ticks.jitter = JitterModel::ExponentialTail {
        prob: 0.1,
        mean_ticks: 500.0,
    };
    let tail = simulate(&cfg, 16).unwrap();
    assert!(uniform.mem_requests.mean_latency_ticks > base.mem_requests.mean_latency_ticks + 20.0);
    assert!(tail.mem_requests.max_latency_ticks > uniform.mem_requests.max_latency_ticks);
    assert!(tail.hash_rate_hs < uniform.hash_rate_hs && uniform.hash_rate_hs < base.hash_rate_hs);
}

#[test]
fn report_json_round_trip() {
    let r = simulate(&jittered(4, 2), 8).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    assert_eq!(serde_json::from_str::<SimReport>(&text).unwrap(), r);
    for key in [
        "hash_rate_hs",
        "stage_utilization",
        "fifo_occupancy",
        "mem_requests",
        "bottleneck",
    ] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn multiple_kernels_scale() {
    let one = simulate(&small(8), 64).unwrap();
    let mut cfg = small(8);
    cfg.n_kernels = 4;
    let four = simulate(&cfg, 256).unwrap();
    let rel = four.steady_hash_rate_hs / one.steady_hash_rate_hs;
    assert!((3.8..=4.01).contains(&rel), "{rel}");
}
