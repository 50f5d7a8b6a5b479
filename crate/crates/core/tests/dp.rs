use proptest::prelude::*;

use volterra_dp::discretize::{discrete_cost, discretize, forward_solve, tail_cost, DiscreteControl};
use volterra_dp::dp::{
    backward_sweep, forward_reconstruct, prefix_state, quantize, solve, ConstraintBand, ControlConstraint,
    HistoryCode, SweepOptions,
};
use volterra_dp::oracle::{enumerate_min, necessity_spot_check, EnumerateOptions};
use volterra_dp::problem::{builtin, ConstantScalar, RunningCost, TerminalCost, VolterraProblem};
use volterra_dp::Error;

fn with_costs(p: &VolterraProblem, running: RunningCost, terminal: TerminalCost) -> VolterraProblem {
    let mut cfg = p.to_config().unwrap();
    cfg.running_cost = running;
    cfg.terminal_cost = terminal;
    VolterraProblem::from_config(cfg).unwrap()
}

fn one() -> SweepOptions {
    SweepOptions::default()
}

fn flat(rows: &[f64]) -> DiscreteControl {
    DiscreteControl::from_flat(1, rows.to_vec()).unwrap()
}

#[test]
fn single_stage_is_a_one_step_minimum() {
    for (name, p) in builtin::families() {
        let dp = discretize(&p, 1).unwrap();
        let lattice = quantize(p.control_box(), 3).unwrap();
        let table = backward_sweep(&dp, &lattice, None, &one()).unwrap();
        let x0 = p.eval_x0(0.0);
        let direct = (0..3)
            .map(|k| {
                let c = DiscreteControl::new(vec![lattice.point(k).to_vec()]).unwrap();
                let traj = forward_solve(&dp, &c).unwrap();
                dp.terminal_cost(traj.state(1)) + dp.stage_cost(0, &x0, lattice.point(k))
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(table.root_value(), direct, "{name}");
    }
}

#[test]
fn constant_terminal_cost_gives_constant_value_and_index_zero() {
    let p = with_costs(
        &builtin::memory_decay(),
        RunningCost::Zero,
        TerminalCost::Constant(ConstantScalar { value: 2.5 }),
    );
    let dp = discretize(&p, 4).unwrap();
    let lattice = quantize(p.control_box(), 3).unwrap();
    let table = backward_sweep(&dp, &lattice, None, &one()).unwrap();
    for i in 0..=4 {
        assert!(table.values(i).iter().all(|v| *v == 2.5));
    }
    let u = forward_reconstruct(&table, &dp, &lattice, None).unwrap();
    assert!(u.rows().all(|r| r == lattice.point(0)));
}

/// x(1) = h·u0, x(2) = h·(u0 + u1); cost h·u0² + h·u1² + (x(2) − 1)².
#[test]
fn lq_two_steps_matches_hand_table() {
    let p = builtin::lq();
    let dp = discretize(&p, 2).unwrap();
    let lattice = quantize(p.control_box(), 3).unwrap();
    let levels = [0.0, 0.5, 1.0];
    let h = 0.5;
    let mut best = (f64::INFINITY, [0, 0]);
    for a in 0..3 {
        for b in 0..3 {
            let (u0, u1) = (levels[a], levels[b]);
            let x2 = h * (u0 + u1);
            let j = h * u0 * u0 + h * u1 * u1 + (x2 - 1.0) * (x2 - 1.0);
            if j < best.0 - 1e-15 {
                best = (j, [a, b]);
            }
        }
    }
    let report = solve(&p, 2, 3, false, &one()).unwrap();
    assert!((report.value - best.0).abs() < 1e-15);
    assert_eq!(report.control_indices, best.1);
    let oracle = enumerate_min(&dp, &lattice, None, &EnumerateOptions::default()).unwrap();
    assert_eq!(oracle.indices, best.1);
    assert_eq!(oracle.value, report.value);
}

#[test]
fn zero_band_locks_control() {
    for (_, p) in builtin::families() {
        let p = p.with_lipschitz_budget(0.0).unwrap();
        let report = solve(&p, 5, 3, true, &one()).unwrap();
        let first = report.control_indices[0];
        assert!(report.control_indices.iter().all(|&k| k == first));
    }
}

#[test]
fn wide_band_equals_unconstrained() {
    let p = builtin::memory_decay().with_lipschitz_budget(1e6).unwrap();
    let free = solve(&p, 5, 3, false, &one()).unwrap();
    let band = solve(&p, 5, 3, true, &one()).unwrap();
    assert_eq!(free.value, band.value);
    assert_eq!(free.control_indices, band.control_indices);
}

#[test]
fn prefix_state_examples() {
    let p = builtin::scalar_linear(1.0, 0.0, 1.0, 1.0, (0.0, 1.0), 1.0);
    let dp = discretize(&p, 2).unwrap();
    let lattice = quantize(p.control_box(), 2).unwrap();
    assert_eq!(prefix_state(&dp, &lattice, &HistoryCode::EMPTY).unwrap(), vec![1.0]);
    for code in 0..4 {
        let beta = HistoryCode::new(2, code, 2).unwrap();
        assert_eq!(prefix_state(&dp, &lattice, &beta).unwrap(), vec![2.25]);
    }
    let z = builtin::zero();
    let dz = discretize(&z, 3).unwrap();
    let beta = HistoryCode::encode(&[1, 0, 1], 2).unwrap();
    assert_eq!(prefix_state(&dz, &lattice, &beta).unwrap(), vec![0.0]);
}

#[test]
fn mismatched_table_is_rejected() {
    let p = builtin::lq();
    let dp = discretize(&p, 3).unwrap();
    let lattice = quantize(p.control_box(), 3).unwrap();
    let table = backward_sweep(&dp, &lattice, None, &one()).unwrap();

    let other = builtin::memory_decay();
    let dq = discretize(&other, 3).unwrap();
    let lq = quantize(other.control_box(), 3).unwrap();
    assert!(matches!(forward_reconstruct(&table, &dq, &lq, None), Err(Error::InvalidInput { .. })));

    let d4 = discretize(&p, 4).unwrap();
    assert!(matches!(forward_reconstruct(&table, &d4, &lattice, None), Err(Error::InvalidInput { .. })));
}

#[test]
fn capacity_guard_trips_before_allocation() {
    let err = solve(&builtin::lq(), 30, 3, false, &one()).unwrap_err();
    match err {
        Error::Capacity { required, available, .. } => {
            assert!(required.parse::<u128>().unwrap() > 3u128.pow(30));
            assert_eq!(available, (1u64 << 31).to_string());
        }
        other => panic!("{other:?}"),
    }
    let tiny = SweepOptions { workers: 1, memory_budget: 10 };
    assert!(matches!(solve(&builtin::lq(), 2, 3, false, &tiny), Err(Error::Capacity { .. })));
    assert!(solve(&builtin::lq(), 2, 3, false, &SweepOptions { workers: 1, memory_budget: 13 }).is_ok());
}

#[test]
fn zero_problem_has_value_zero() {
    let r = solve(&builtin::zero(), 4, 3, false, &one()).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.cost, 0.0);
    assert_eq!(r.control_indices, vec![0; 4]);
}

#[test]
fn lq_four_steps_equals_enumeration_exactly() {
    let p = builtin::lq();
    let dp = discretize(&p, 4).unwrap();
    let lattice = quantize(p.control_box(), 3).unwrap();
    let r = solve(&p, 4, 3, false, &one()).unwrap();
    let e = enumerate_min(&dp, &lattice, None, &EnumerateOptions::default()).unwrap();
    assert_eq!(r.value.to_bits(), e.value.to_bits());
    assert_eq!(r.control_indices, e.indices);
}

#[test]
fn necessity_on_builtin_families() {
    for (name, p) in builtin::families() {
        for band in [false, true] {
            let dp = discretize(&p, 5).unwrap();
            let lattice = quantize(p.control_box(), 3).unwrap();
            let b = ConstraintBand::new(p.lipschitz_budget(), dp.step());
            let c: Option<&dyn ControlConstraint> = if band { Some(&b) } else { None };
            let table = backward_sweep(&dp, &lattice, c, &one()).unwrap();
            let r = necessity_spot_check(&dp, &lattice, c, &table, 20, 100, 11).unwrap();
            assert!(r.passed(), "{name} band={band}: {r:?}");
        }
    }
}

#[test]
fn consistency_chain_along_the_optimum() {
    for (name, p) in builtin::families() {
        let r = solve(&p, 6, 3, true, &one()).unwrap();
        let dp = discretize(&p, 6).unwrap();
        let mut code = 0u64;
        for i in 0..=6 {
            let tail = tail_cost(&dp, &r.discrete_trajectory, &r.discrete_control, i).unwrap();
            assert_eq!(r.table.value(i, code).to_bits(), tail.to_bits(), "{name} stage {i}");
            if i < 6 {
                code = code * 3 + r.control_indices[i] as u64;
            }
        }
    }
}

#[test]
fn counts_follow_the_accounting() {
    let r = solve(&builtin::logistic_memory(), 4, 3, false, &one()).unwrap();
    let predicted = volterra_dp::costmodel::predicted_counts(4, 3).unwrap();
    assert_eq!(r.counts, predicted);
    let z = solve(&builtin::zero(), 4, 3, false, &one()).unwrap();
    assert_eq!(z.counts, r.counts);
}

#[test]
fn binary_dump_is_stage_major() {
    let r = solve(&builtin::lq(), 2, 2, false, &one()).unwrap();
    let mut buf = Vec::new();
    r.table.write_binary(&mut buf).unwrap();
    assert_eq!(buf.len(), 8 * (1 + 2 + 4));
    let first = f64::from_le_bytes(buf[..8].try_into().unwrap());
    assert_eq!(first, r.value);
    let last = f64::from_le_bytes(buf[48..].try_into().unwrap());
    assert_eq!(last, r.table.values(2)[3]);
}

fn random_problem(kind: u8, a: f64, b: f64, x0: f64, wx: f64, wu: f64, target: f64) -> VolterraProblem {
    let base = match kind {
        0 => builtin::scalar_linear(a, b, x0, 1.0, (-1.0, 1.0), 2.0),
        _ => builtin::scalar_memory_decay(a.abs(), a, b),
    };
    let mut cfg = base.to_config().unwrap();
    cfg.running_cost = serde_json::from_value(serde_json::json!({
        "form": "quadratic",
        "params": {"state_weight": wx, "control_weight": wu}
    }))
    .unwrap();
    cfg.terminal_cost = serde_json::from_value(serde_json::json!({
        "form": "quadratic",
        "params": {"weight": 1.0, "target": [target]}
    }))
    .unwrap();
    VolterraProblem::from_config(cfg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dp_equals_enumeration(
        kind in 0u8..2, a in -1.5f64..1.5, b in -2.0f64..2.0, x0 in -1.0f64..1.0,
        wx in 0.0f64..2.0, wu in 0.0f64..2.0, target in -1.0f64..1.0,
        n in 1usize..6, q in 1usize..4, band in any::<bool>(),
    ) {
        let p = random_problem(kind, a, b, x0, wx, wu, target);
        let dp = discretize(&p, n).unwrap();
        let lattice = quantize(p.control_box(), q).unwrap();
        let bnd = ConstraintBand::new(p.lipschitz_budget(), dp.step());
        let c: Option<&dyn ControlConstraint> = if band { Some(&bnd) } else { None };
        let table = backward_sweep(&dp, &lattice, c, &one()).unwrap();
        let u = forward_reconstruct(&table, &dp, &lattice, c).unwrap();
        let e = enumerate_min(&dp, &lattice, c, &EnumerateOptions::default()).unwrap();
        prop_assert_eq!(table.root_value().to_bits(), e.value.to_bits());
        prop_assert_eq!(&u, &e.control);
        let cost = discrete_cost(&dp, &forward_solve(&dp, &u).unwrap(), &u).unwrap();
        prop_assert_eq!(cost.to_bits(), table.root_value().to_bits());
    }

    #[test]
    fn prefix_state_ignores_the_tail(
        a in -1.5f64..1.5, b in -2.0f64..2.0, x0 in -1.0f64..1.0,
        n in 1usize..7, digits in proptest::collection::vec(0usize..3, 7), stage in 0usize..7,
    ) {
        let p = random_problem(1, a, b, x0, 1.0, 1.0, 0.0);
        let dp = discretize(&p, n).unwrap();
        let lattice = quantize(p.control_box(), 3).unwrap();
        let stage = stage.min(n);
        let beta = HistoryCode::encode(&digits[..stage], 3).unwrap();
        let x = prefix_state(&dp, &lattice, &beta).unwrap();
        for fill in 0..3 {
            let mut seq = digits[..stage].to_vec();
            seq.resize(n, fill);
            let c = flat(&seq.iter().map(|&d| lattice.point(d)[0]).collect::<Vec<_>>());
            let traj = forward_solve(&dp, &c).unwrap();
            prop_assert_eq!(traj.state(stage), &x[..]);
        }
    }

    #[test]
    fn widening_the_band_never_hurts(
        a in -1.5f64..1.5, b in -2.0f64..2.0, x0 in -1.0f64..1.0, target in -1.0f64..1.0,
        n in 2usize..6, l1 in 0.0f64..6.0, extra in 0.0f64..6.0,
    ) {
        let p = random_problem(0, a, b, x0, 1.0, 0.5, target);
        let v = |l: f64| solve(&p.clone().with_lipschitz_budget(l).unwrap(), n, 3, true, &one()).unwrap().value;
        prop_assert!(v(l1 + extra) <= v(l1));
    }

    #[test]
    fn worker_count_does_not_change_anything(
        a in -1.5f64..1.5, b in -2.0f64..2.0, x0 in -1.0f64..1.0, n in 1usize..6, band in any::<bool>(),
    ) {
        let p = random_problem(1, a, b, x0, 1.0, 1.0, 0.5);
        let base = solve(&p, n, 3, band, &one()).unwrap();
        for workers in [2, 3, 4] {
            let r = solve(&p, n, 3, band, &SweepOptions::with_workers(workers)).unwrap();
            prop_assert_eq!(&r.table, &base.table);
            prop_assert_eq!(&r.control_indices, &base.control_indices);
        }
    }
}
