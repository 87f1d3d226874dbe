//! Acceptance suite: one test per criterion, each printing a PASS line
//! once its assertions hold. Run with `cargo test --test acceptance --
//! --nocapture` to see the lines.
//!
//! Tolerances are pinned here, next to the checks that use them.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use phase_atlas::atlas::{branches, replay_branch, Atlas};
use phase_atlas::fixtures::Fixtures;
use phase_atlas::mero::{
    backlund_commutation_test, backlund_s1, backlund_s2, estimate_pole, integrate_meromorphic,
    step_embedded, CompiledAtlas, IntegratorConfig,
};
use phase_atlas::report::Status;
use phase_atlas::singular::{local_index, verify_table};
use phase_atlas::symcore::parse_expression;
use phase_atlas::symmetry::{
    base_slot_values, compare_with_printed_family, decoupling_check, derive_invariant_family,
    invariance_residual, ny_reduction_check, p3_index_family, piv_reduction_check,
    specialize_member,
};

/// endpoint agreement between the 1e-10 and 1e-12 runs
const SELF_CONVERGENCE: f64 = 1e-7;
/// residue fits must match the leading-balance predictions this tightly
const RESIDUE_REL: f64 = 1e-4;
/// exact-map chart switches may lose at most this much to rounding
const SWITCH_ROUNDTRIP: f64 = 1e-12;
/// observed convergence order of the order-5 method on a smooth segment
const MIN_ORDER: f64 = 4.5;
/// wall-clock budgets
const ATLAS_BUDGET_S: f64 = 10.0;
const POLE_RUN_BUDGET_S: f64 = 5.0;

fn fx() -> Fixtures {
    Fixtures::load_default().unwrap()
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[test]
fn criterion_01_atlas_holomorphy() {
    let fx = fx();
    let started = Instant::now();
    let atlas = Atlas::builtin(&fx).unwrap();
    let mut passed = 0;
    for chart in &atlas.charts()[1..] {
        let rep = chart.certify_holomorphic();
        assert!(rep.polynomial, "{}: {:?}", chart.name(), rep.offending);
        passed += 1;
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(passed, 7);
    assert!(elapsed < ATLAS_BUDGET_S, "holomorphy took {:.2}s", elapsed);
    println!(
        "criterion 1 (atlas holomorphy): PASS  [7/7 charts polynomial in {:.2}s]",
        elapsed
    );
}

#[test]
fn criterion_02_singularity_table() {
    let fx = fx();
    let rep = verify_table(&fx).unwrap();
    for c in &rep.checks {
        assert_ne!(c.status, Status::Fail, "{}: {}", c.name, c.detail);
    }
    let rows = rep.checks.iter().filter(|c| c.name.starts_with("table:")).count();
    assert_eq!(rows, 7);
    println!("criterion 2 (singularity table): PASS  [7/7 rows exact]");
}

#[test]
fn criterion_03_resolution_replay() {
    let fx = fx();
    let atlas = Atlas::builtin(&fx).unwrap();
    // every printed system must be reproduced bit-exactly
    let printed = [
        "p1_local", "p2_local", "p3_local", "p4_local", "p7_local", "c1_out", "flop_out",
        "c6_out", "c7_out",
    ];
    let mut golden_seen = Vec::new();
    for branch in branches() {
        for c in replay_branch(&fx, &atlas, &branch).unwrap() {
            assert_ne!(c.status, Status::Fail, "{}: {}", c.name, c.detail);
            if let Some(idx) = c.name.find("golden:") {
                golden_seen.push(c.name[idx + 7..].to_string());
            }
        }
    }
    for name in printed {
        assert!(golden_seen.iter().any(|g| g == name), "golden {} not exercised", name);
    }
    // the blow-down output has local index (0, +2, +1) at the origin
    let flop = fx.system("flop_out").unwrap();
    let idx = local_index(flop, "w2", &[rat(0), rat(0)]).unwrap();
    assert_eq!(idx.tuple, [rat(0), rat(2), rat(1)]);
    println!(
        "criterion 3 (resolution replay): PASS  [{} printed systems matched, blow-down index (0,+2,+1)]",
        printed.len()
    );
}

#[test]
fn criterion_04_backlund_invariance() {
    let fx = fx();
    let base = fx.system("base").unwrap();
    for name in ["s1", "s2"] {
        let res = invariance_residual(base, fx.map(name).unwrap()).unwrap();
        for (i, r) in res.iter().enumerate() {
            assert!(r.is_zero(), "{} residual {} = {}", name, i, r);
        }
    }
    println!("criterion 4 (symmetry invariance): PASS  [s1, s2 residuals identically zero]");
}

#[test]
fn criterion_05_invariant_family() {
    let fx = fx();
    let fam = derive_invariant_family(&fx).unwrap();
    assert_eq!(fam.dimension, 8, "nullspace dimension");
    let general = fam.general.as_ref().expect("presented at dimension 8");

    // contains the base system
    let member = specialize_member(general, &base_slot_values()).unwrap();
    let base = fx.system("base").unwrap();
    for (got, want) in member.rhs().iter().zip(base.rhs()) {
        let want = want.substitute(member.context(), &[]).unwrap();
        assert_eq!(*got, want, "base system is a member");
    }

    // quadratic and t-linear coefficients match the printed family
    let checks = compare_with_printed_family(general).unwrap();
    let shape = checks.iter().find(|c| c.name == "family:shape").unwrap();
    assert_eq!(shape.status, Status::Pass, "{}", shape.detail);

    // constant terms: derived values are frozen here; discrepancies with
    // the printed family must be reported, not hidden
    let ctx = general.context().clone();
    let derived_constants = [
        "(q6 + r2 + 3*qc3)*a1 + (q6 + 2*qc3)*a2 + qc3*a3",
        "(2*q1 - q5 - s3)*a2",
        "r2*a3",
    ];
    let zero_states: Vec<usize> = ["x", "y", "z", "t"]
        .iter()
        .map(|n| ctx.require(n).unwrap())
        .collect();
    for (rhs, expect) in general.rhs().iter().zip(derived_constants) {
        let c = rhs.as_poly().unwrap().coefficient_of(&zero_states, &[0, 0, 0, 0]);
        let expect = parse_expression(expect, &ctx).unwrap();
        assert_eq!(
            phase_atlas::symcore::RationalExpr::from_poly(c),
            expect,
            "derived constant"
        );
    }
    let reported = checks
        .iter()
        .filter(|c| c.name.starts_with("family:constant") && c.status == Status::Warn)
        .count();
    assert!(reported >= 1, "constant-term discrepancy must be surfaced");
    println!(
        "criterion 5 (invariant family): PASS  [dimension 8, base member, shape match, {} constant discrepancies reported]",
        reported
    );
}

#[test]
fn criterion_06_decoupling_and_symbolic_index() {
    let fx = fx();
    let fam = derive_invariant_family(&fx).unwrap();
    let general = fam.general.as_ref().unwrap();
    let ctx = general.context().clone();
    let dc = decoupling_check(general).unwrap();
    let cond = parse_expression("q5 - 2*q1", &ctx).unwrap();
    assert_eq!(dc.conditions[0], cond);
    assert_eq!(dc.conditions[1], cond.neg());

    let idx = p3_index_family(general).unwrap();
    let minus_q1 = parse_expression("-q1", &ctx).unwrap();
    for comp in &idx.tuple {
        assert_eq!(*comp, minus_q1);
    }
    // specialization q1 = -1 reproduces the table row (+1, +1, +1)
    let q1 = ctx.require("q1").unwrap();
    for comp in &idx.tuple {
        let v = comp
            .substitute(&ctx, &[(q1, phase_atlas::symcore::RationalExpr::from_int(&ctx, -1))])
            .unwrap();
        assert_eq!(v.as_constant().unwrap(), rat(1));
    }
    println!(
        "criterion 6 (decoupling + symbolic index): PASS  [condition q5 = 2 q1, index (-q1, -q1, -q1)]"
    );
}

#[test]
fn criterion_07_reductions() {
    let fx = fx();
    let ny = ny_reduction_check(&fx).unwrap();
    for c in &ny.checks {
        assert_ne!(c.status, Status::Fail, "{}: {}", c.name, c.detail);
    }
    let renaming = ny.checks.iter().find(|c| c.name == "renaming").unwrap();
    for pair in ["y->x", "z->y", "w->z", "b2->a1", "b3->a2", "b4->a3"] {
        assert!(renaming.detail.contains(pair), "{}", renaming.detail);
    }
    let piv = piv_reduction_check(&fx).unwrap();
    for c in &piv.checks {
        assert_ne!(c.status, Status::Fail, "{}: {}", c.name, c.detail);
    }
    println!(
        "criterion 7 (reductions): PASS  [coupled-4d reduction matched, invariant surface exact]"
    );
}

/// Leading-balance oracle for simple-pole residues: for a diverging set S
/// of U0 coordinates, the residue vector solves the linear system read
/// off the quadratic parts of the base system:
///   x in S:  c_x + 2 c_z = 1
///   y in S:  c_y + 2 c_z = -1
///   z in S:  2 c_y + c_z = 1
/// (absent coordinates contribute zero).
fn laurent_oracle(diverging: &[String]) -> Vec<(String, BigRational)> {
    let has = |n: &str| diverging.iter().any(|d| d == n);
    let names: Vec<&str> = ["x", "y", "z"].into_iter().filter(|n| has(n)).collect();
    let n = names.len();
    // build A c = b over the rationals
    let mut a = vec![vec![BigRational::zero(); n]; n];
    let mut b = vec![BigRational::zero(); n];
    for (row, name) in names.iter().enumerate() {
        match *name {
            "x" => {
                a[row][names.iter().position(|m| *m == "x").unwrap()] = rat(1);
                if let Some(j) = names.iter().position(|m| *m == "z") {
                    a[row][j] = rat(2);
                }
                b[row] = rat(1);
            }
            "y" => {
                a[row][names.iter().position(|m| *m == "y").unwrap()] = rat(1);
                if let Some(j) = names.iter().position(|m| *m == "z") {
                    a[row][j] = rat(2);
                }
                b[row] = rat(-1);
            }
            "z" => {
                if let Some(j) = names.iter().position(|m| *m == "y") {
                    a[row][j] = rat(2);
                }
                a[row][names.iter().position(|m| *m == "z").unwrap()] = rat(1);
                b[row] = rat(1);
            }
            _ => unreachable!(),
        }
    }
    // Gaussian elimination, exact
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero()).expect("solvable");
        a.swap(col, p);
        b.swap(col, p);
        let inv = BigRational::one() / a[col][col].clone();
        for j in 0..n {
            a[col][j] = &a[col][j] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    a[r][j] = &a[r][j] - &(&f * &a[col][j]);
                }
                b[r] = &b[r] - &(&f * &b[col]);
            }
        }
    }
    names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), b[i].clone()))
        .collect()
}

#[test]
fn criterion_08_pole_crossing_numerics() {
    let fx = fx();
    let atlas = Atlas::builtin(&fx).unwrap();
    let ca = CompiledAtlas::new(&atlas).unwrap();
    let ic = [1.0, 1.0, 1.0];
    let params = [0.5, 1.0 / 3.0, 0.2];
    let span = (0.0, 3.0);

    let started = Instant::now();
    let cfg = IntegratorConfig::with_tol(1e-10);
    let traj = integrate_meromorphic(&ca, ic, span, params, &cfg).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < POLE_RUN_BUDGET_S, "integration took {:.2}s", elapsed);

    assert!(!traj.pole_events.is_empty(), "at least one pole event");
    assert!(
        traj.switch_roundtrip_error <= SWITCH_ROUNDTRIP,
        "switch round-trip error {:e}",
        traj.switch_roundtrip_error
    );

    // residues against the leading-balance oracle
    let mut checked = 0;
    for ev in &traj.pole_events {
        let fitted = estimate_pole(&ca, &traj, ev, RESIDUE_REL).unwrap();
        let oracle = laurent_oracle(&ev.diverging);
        for ((name, got), (oname, want)) in fitted.iter().zip(&oracle) {
            assert_eq!(name, oname);
            let want = num_traits::ToPrimitive::to_f64(want).unwrap();
            assert!(
                (got - want).abs() / want.abs().max(1.0) <= RESIDUE_REL,
                "{} residue {} vs oracle {}",
                name,
                got,
                want
            );
            checked += 1;
        }
    }
    assert!(checked >= 1);

    // endpoint self-convergence between tolerances 1e-10 and 1e-12
    let tight = IntegratorConfig::with_tol(1e-12);
    let traj2 = integrate_meromorphic(&ca, ic, span, params, &tight).unwrap();
    let a = traj.u0_image(&ca, traj.final_state());
    let b = traj2.u0_image(&ca, traj2.final_state());
    for i in 0..3 {
        let dev = (a[i] - b[i]).abs() / (1.0 + b[i].abs());
        assert!(dev < SELF_CONVERGENCE, "component {} deviates {:e}", i, dev);
    }

    // numeric commutation with both symmetries on a pole-free window
    let cfg_c = IntegratorConfig::with_tol(1e-10);
    for m in [backlund_s1(), backlund_s2()] {
        let dev = backlund_commutation_test(
            &ca,
            [0.4, 0.8, 1.1],
            [0.25, 0.4, 0.3],
            &m,
            (0.0, 0.4),
            &cfg_c,
        )
        .unwrap();
        assert!(dev < 100.0 * 1e-10 * 1e2, "{} deviation {:e}", m.name, dev);
    }

    println!(
        "criterion 8 (pole crossing): PASS  [{} events, residues within {:.0e}, self-convergence {:.0e}, switches {:.0e}, {:.2}s]",
        traj.pole_events.len(),
        RESIDUE_REL,
        SELF_CONVERGENCE,
        SWITCH_ROUNDTRIP,
        elapsed
    );
}

#[test]
fn criterion_09_integrator_order() {
    // fixed-step Richardson comparison on a smooth segment of the base
    // field in the identity chart
    let fx = fx();
    let atlas = Atlas::builtin(&fx).unwrap();
    let ca = CompiledAtlas::new(&atlas).unwrap();
    let params = [0.5, 1.0 / 3.0, 0.2];
    let f = |t: f64, y: [f64; 3]| ca.eval_field(0, y, t, params);
    let run = |h: f64| -> [f64; 3] {
        let mut t = 0.0;
        let mut y = [0.1, 0.2, 0.3];
        let mut k1 = f(t, y);
        while t < 0.5 - 1e-12 {
            let step = h.min(0.5 - t);
            let (y1, _, k) = step_embedded(&f, t, y, step, k1);
            t += step;
            y = y1;
            k1 = k[6];
        }
        y
    };
    let reference = run(1.0 / 4096.0);
    let err = |y: [f64; 3]| -> f64 {
        (0..3)
            .map(|i| (y[i] - reference[i]).abs())
            .fold(0.0, f64::max)
    };
    let e1 = err(run(0.025));
    let e2 = err(run(0.0125));
    let order = (e1 / e2).log2();
    assert!(
        order >= MIN_ORDER,
        "observed order {:.2} (errors {:e}, {:e})",
        order,
        e1,
        e2
    );
    println!(
        "criterion 9 (integrator order): PASS  [observed order {:.2} >= {}]",
        order, MIN_ORDER
    );
}

#[test]
fn criterion_10_robustness_sweep() {
    use rand::{Rng, SeedableRng};
    let fx = fx();
    let atlas = Atlas::builtin(&fx).unwrap();
    let ca = CompiledAtlas::new(&atlas).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    let cfg = IntegratorConfig::with_tol(1e-9);
    let mut pole_runs = 0;
    for run in 0..100 {
        let ic = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        let params = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let traj = integrate_meromorphic(&ca, ic, (0.0, 2.0), params, &cfg)
            .unwrap_or_else(|e| panic!("run {} with ic {:?} params {:?}: {}", run, ic, params, e));
        if !traj.pole_events.is_empty() {
            pole_runs += 1;
        }
    }
    println!(
        "criterion 10 (robustness sweep): PASS  [100/100 runs complete, {} crossed poles]",
        pole_runs
    );
}
