//! Full-cycle properties of the simulated cell.

use std::collections::BTreeMap;

use memcell::analysis::{count_distinct, enumerate_levels, sensitivity, LevelMode, Sampling};
use memcell::cell::{
    build_netlist, install_schedule, make_schedule, run_cycle, CellConfig, WritePattern,
};
use memcell::circuit::{transient, Coupling, TransientOptions};
use memcell::device;
use memcell::Exec;

fn p(s: &str) -> WritePattern {
    s.parse().unwrap()
}

#[test]
fn permuting_resistors_with_digits_leaves_output_unchanged() {
    let base = CellConfig::default();
    let pattern = p("021");
    let v0 = run_cycle(&base, &pattern).unwrap().v_out;
    for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1], [0, 2, 1]] {
        let cfg = CellConfig {
            r_sub: perm.iter().map(|&i| base.r_sub[i]).collect(),
            ..base.clone()
        };
        let pat = WritePattern::new(perm.iter().map(|&i| pattern.digits[i]).collect());
        let v = run_cycle(&cfg, &pat).unwrap().v_out;
        assert!(((v - v0) / v0).abs() < 1e-9, "{perm:?}: {v} vs {v0}");
    }
}

#[test]
fn equal_r_transient_levels_collapse_to_multisets() {
    let cfg = CellConfig::equal_r(20.0);
    let table = enumerate_levels(&cfg, LevelMode::Transient, Exec::default()).unwrap();
    let mut classes: BTreeMap<Vec<u8>, Vec<f64>> = BTreeMap::new();
    for row in &table.rows {
        classes
            .entry(row.pattern.multiset())
            .or_default()
            .push(row.v_out);
    }
    assert_eq!(classes.len(), 10);
    for (class, values) in &classes {
        let hi = values.iter().copied().fold(f64::MIN, f64::max);
        let lo = values.iter().copied().fold(f64::MAX, f64::min);
        assert!(
            (hi - lo) / hi < 1e-12,
            "{class:?}: spread {}",
            (hi - lo) / hi
        );
    }
    assert_eq!(count_distinct(&table, 1e-9), 10);
}

#[test]
fn read_phase_leaves_every_device_in_place() {
    let cfg = CellConfig::default();
    for pattern in WritePattern::all(3, 3) {
        let r = run_cycle(&cfg, &pattern).unwrap();
        assert!(r.read_drift(&cfg.device) < 1e-4, "{pattern}");
    }
}

#[test]
fn writes_order_memristance_by_digit() {
    let cfg = CellConfig::equal_r(20.0);
    let states: Vec<f64> = ["000", "111", "222"]
        .iter()
        .map(|s| {
            run_cycle(&cfg, &p(s))
                .unwrap()
                .final_memristance(&cfg.device)[0]
        })
        .collect();
    assert!(states[0] < states[1] && states[1] < states[2], "{states:?}");
}

#[test]
fn trace_covers_the_cycle_at_the_default_step() {
    let cfg = CellConfig::default();
    let mut net = build_netlist(&cfg).unwrap();
    install_schedule(&mut net, &make_schedule(&p("021"), &cfg).unwrap());
    let init = device::state_for_resistance(cfg.initial_ohms, &cfg.device).unwrap();
    let devices = vec![(init, cfg.device); 3];
    let trace = transient(&net, &devices, cfg.t_total(), TransientOptions::default()).unwrap();
    assert_eq!(trace.rows.len(), 2500);
    assert!(trace.rows.windows(2).all(|w| w[0].t < w[1].t));
    assert!(trace.summary.max_kcl_ratio <= 1e-9);
}

#[test]
fn explicit_coupling_approaches_staged() {
    let staged = CellConfig::default();
    let explicit = CellConfig {
        coupling: Coupling::Explicit,
        ..CellConfig::default()
    };
    let fine = CellConfig {
        dt: staged.dt / 4.0,
        ..explicit.clone()
    };
    let pat = p("212");
    let vs = run_cycle(&staged, &pat).unwrap().v_out;
    let ve = run_cycle(&explicit, &pat).unwrap().v_out;
    let vf = run_cycle(&fine, &pat).unwrap().v_out;
    // First-order error shrinks with the step.
    assert!((vf - vs).abs() < (ve - vs).abs());
    assert!(((ve - vs) / vs).abs() < 1e-2);
}

#[test]
fn sensitivity_zero_pattern_and_zero_delta() {
    let cfg = CellConfig {
        n: 2,
        r_sub: vec![20.0, 60.0],
        ..Default::default()
    };
    let r = sensitivity(&cfg, 0.05, Sampling::Corners, Exec::default()).unwrap();
    let z = r.row("00").unwrap();
    assert_eq!((z.mean, z.std, z.samples), (0.0, 0.0, 1));
    assert_eq!(r.row("21").unwrap().samples, 4);
    assert!(r.rows.iter().all(|row| row.mean >= 0.0 && row.std >= 0.0));

    let zero = sensitivity(&cfg, 0.0, Sampling::Corners, Exec::default()).unwrap();
    assert!(zero
        .rows
        .iter()
        .all(|row| row.mean == 0.0 && row.std == 0.0));
}

#[test]
fn monte_carlo_seed_plumbing() {
    let cfg = CellConfig {
        n: 2,
        r_sub: vec![20.0, 60.0],
        ..Default::default()
    };
    let run = |seed, exec| {
        sensitivity(&cfg, 0.05, Sampling::MonteCarlo { count: 4, seed }, exec).unwrap()
    };
    let a = run(7, Exec::Sequential);
    let b = run(7, Exec::default());
    let c = run(8, Exec::default());
    assert_eq!(a, b);
    assert_ne!(a.rows, c.rows);
}

#[test]
fn equal_r_permuted_patterns_share_sensitivity() {
    let cfg = CellConfig::equal_r(20.0);
    let r = sensitivity(&cfg, 0.05, Sampling::Corners, Exec::default()).unwrap();
    let mut classes: BTreeMap<Vec<u8>, Vec<f64>> = BTreeMap::new();
    for row in &r.rows {
        classes
            .entry(row.pattern.multiset())
            .or_default()
            .push(row.mean);
    }
    for (class, means) in classes {
        for m in &means {
            let rel = (m - means[0]).abs() / means[0].max(f64::MIN_POSITIVE);
            assert!(rel < 1e-9 || means[0] == 0.0, "{class:?}: {means:?}");
        }
    }
}
