//! End-to-end acceptance: one PASS/FAIL line per criterion, exit status 1 if any fails.

mod common;

use std::process::ExitCode;

use proptest::prelude::any;
use proptest::test_runner::{TestCaseError, TestRunner};
use rand::Rng;

use credal::calibration::{check_calibration, is_sharply_calibrated, UpdateRule};
use credal::consistency::{
    check_time_consistency, check_weak_time_consistency, falsify_dynamic_consistency,
    verify_witness, ConsistencyResult, Witness,
};
use credal::corpus::load_corpus;
use credal::credal::{
    dilation_report, hull, is_conservative, is_rectangular, posterior_y, support_x, CredalSet,
    DecisionProblem, DecisionRule, Partition, RandomizedAction,
};
use credal::minimax::{
    brute_force_value, solve_a_posteriori, solve_a_priori, solve_ignoring, verify_saddle,
    worst_case_loss, worst_case_posterior_loss,
};
use credal::polytope::{in_convex_hull, member, set_equal, subset, VPolytope};
use credal::problem_file::ProblemFile;
use credal::rational::{dot, int, max_of, parse_rational, rat};
use credal::sampling::{random_blocks, random_problem, random_rule, ProblemShape};
use credal::Rational;

/// Failed checks of one criterion.
#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.0.push(what.into());
        }
    }

    fn equal<T: PartialEq + std::fmt::Debug>(&mut self, what: &str, got: T, want: T) {
        if got != want {
            self.0.push(format!("{what}: got {got:?}, want {want:?}"));
        }
    }
}

fn case(name: &str) -> ProblemFile {
    load_corpus()
        .expect("bundled corpus loads")
        .into_iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no corpus case {name}"))
        .file
}

fn problem(name: &str) -> DecisionProblem {
    case(name).problem().expect("corpus problems are valid")
}

fn credal(name: &str) -> CredalSet {
    case(name).credal().expect("corpus sets are valid")
}

fn q(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn action(weights: &[&str]) -> RandomizedAction {
    RandomizedAction::new(weights.iter().map(|w| q(w)).collect()).unwrap()
}

fn point(rows: &[&[&str]]) -> Vec<Rational> {
    rows.iter().flat_map(|r| r.iter().map(|v| q(v))).collect()
}

fn predict_set() -> Checks {
    let mut c = Checks::default();
    let dp = problem("example-2.1");
    let sol = solve_a_priori(&dp).unwrap();
    c.equal("a priori value", sol.value.clone(), rat(1, 3));
    c.equal(
        "a priori rule",
        sol.rule,
        DecisionRule::deterministic(2, &[1, 1]),
    );
    // Independent oracle: after either observation Y is 0 or 1 for sure, so the loss of
    // predicting 1 with probability α is max(α, 1 − α); scan α on a fine grid.
    let oracle = (0..=120)
        .map(|k| rat(k, 120))
        .map(|a| (int(1) - &a).max(a))
        .min()
        .unwrap();
    let post = solve_a_posteriori(&dp).unwrap();
    for x in 0..2 {
        let at = post.at(x).unwrap();
        c.equal(&format!("MM({x})"), at.value.clone(), oracle.clone());
        c.equal(&format!("MM({x})"), at.value.clone(), rat(1, 2));
        c.equal(
            &format!("optimal actions at {x}"),
            at.action_vertices.clone(),
            vec![action(&["1/2", "1/2"])],
        );
    }
    let weak = check_weak_time_consistency(&dp).unwrap();
    c.equal(
        "weak-time verdict",
        weak.result,
        ConsistencyResult::Inconsistent,
    );
    c.expect(
        weak.witness
            .as_ref()
            .is_some_and(|w| verify_witness(&dp, w).unwrap()),
        "weak-time witness verifies",
    );
    c
}

fn monty_hall() -> Checks {
    let mut c = Checks::default();
    let dp = problem("monty-hall");
    let sol = solve_a_priori(&dp).unwrap();
    c.equal("a priori value", sol.value, rat(1, 3));
    c.equal(
        "switching rule",
        sol.rule,
        DecisionRule::deterministic(3, &[2, 1]),
    );
    c.equal(
        "optimal face vertices",
        sol.optimal_rule_vertices.map(|v| v.len()),
        Some(1),
    );
    c.equal("rectangular", is_rectangular(dp.credal()).unwrap(), false);

    let cost = problem("monty-hall-switch-cost");
    let post = solve_a_posteriori(&cost).unwrap();
    let at = post.at(0).unwrap();
    c.equal(
        "optimal actions after door 2 opens",
        at.action_vertices.clone(),
        vec![action(&["11/21", "0", "10/21"])],
    );
    c.equal(
        "switch probability",
        at.action_vertices[0].weights()[2].clone(),
        rat(10, 21),
    );
    let value = solve_a_priori(&cost).unwrap().value;
    let standard = post.canonical_rule(2, 3);
    let standard_worst = worst_case_loss(cost.credal(), &standard, cost.loss()).0;
    c.expect(
        standard_worst > value,
        format!("standard conditioning is not optimal ({standard_worst} vs {value})"),
    );
    let ignoring = solve_ignoring(&cost).unwrap();
    c.expect(
        !ignoring.ignoring_optimal,
        "ignoring the observation is not optimal",
    );
    c.expect(
        ignoring.solution.value > value,
        "ignoring value exceeds the a priori value",
    );
    c.equal(
        "rectangular with switch cost",
        is_rectangular(cost.credal()).unwrap(),
        false,
    );
    c
}

fn hull_membership() -> Checks {
    let mut c = Checks::default();
    let p = credal("example-4.2");
    let pr3 = point(&[&["1/3", "1/6"], &["1/6", "1/3"]]);
    c.equal("Pr3 in P", member(&pr3, &p.as_polytope()).unwrap(), false);
    c.equal(
        "Pr3 in hull",
        member(&pr3, &hull(&p).unwrap().as_polytope()).unwrap(),
        true,
    );
    c
}

fn rectangular_not_conservative() -> Checks {
    let mut c = Checks::default();
    let dp = problem("example-4.5");
    c.equal("rectangular", is_rectangular(dp.credal()).unwrap(), true);
    c.equal("conservative", is_conservative(dp.credal()), false);
    c.equal(
        "weak-time verdict",
        check_weak_time_consistency(&dp).unwrap().result,
        ConsistencyResult::Consistent,
    );
    let time = check_time_consistency(&dp).unwrap();
    c.equal("time verdict", time.result, ConsistencyResult::Inconsistent);
    match &time.witness {
        Some(
            w @ Witness::NotAPosterioriOptimal {
                rule,
                x,
                posterior,
                value,
            },
        ) => {
            c.equal("witness δ(1)", rule.action(1).as_pure(), Some(1));
            c.equal("witness observation", *x, 1);
            c.equal("witness posterior loss", posterior.clone(), rat(3, 5));
            c.equal("MM(1)", value.clone(), rat(1, 2));
            c.expect(verify_witness(&dp, w).unwrap(), "witness verifies");
        }
        other => c.expect(false, format!("unexpected witness {other:?}")),
    }
    c
}

fn conservative_not_rectangular() -> Checks {
    let mut c = Checks::default();
    let dp = problem("example-4.6");
    c.equal("rectangular", is_rectangular(dp.credal()).unwrap(), false);
    c.equal("conservative", is_conservative(dp.credal()), true);
    let time = check_time_consistency(&dp).unwrap();
    c.equal("time verdict", time.result, ConsistencyResult::Consistent);
    if let Some(w) = &time.witness {
        c.expect(
            false,
            format!(
                "counterexample {} (verified: {})",
                credal::consistency::describe_witness(dp.space(), w),
                verify_witness(&dp, w).unwrap()
            ),
        );
    }
    c
}

fn predict_set_extended() -> Checks {
    let mut c = Checks::default();
    let dp = problem("example-2.1-extended");
    c.equal(
        "time verdict",
        check_time_consistency(&dp).unwrap().result,
        ConsistencyResult::Consistent,
    );
    // No random rules: the witness must come from the exhaustive families.
    let dynamic = falsify_dynamic_consistency(&dp, 0, 0).unwrap();
    c.equal(
        "dynamic verdict",
        dynamic.result,
        ConsistencyResult::Inconsistent,
    );
    c.expect(
        matches!(&dynamic.witness, Some(w @ Witness::Pair { .. }) if verify_witness(&dp, w).unwrap()),
        "dynamic witness pair verifies",
    );
    c
}

fn calibration_goldens() -> Checks {
    let mut c = Checks::default();
    for name in ["example-6.5", "example-6.6"] {
        let r = check_calibration(&UpdateRule::Standard, &credal(name)).unwrap();
        c.equal(&format!("{name} standard calibrated"), r.calibrated, false);
    }
    let p = credal("example-6.7");
    let ignore = is_sharply_calibrated(&UpdateRule::Ignore, &p).unwrap();
    c.equal("6.7 ignore calibrated", ignore.calibrated, true);
    c.equal("6.7 ignore sharp", ignore.sharp, false);
    let standard = is_sharply_calibrated(&UpdateRule::Standard, &p).unwrap();
    c.equal(
        "6.7 standard sharp",
        (standard.calibrated, standard.sharp),
        (true, true),
    );
    c
}

fn walley_dilation() -> Checks {
    let mut c = Checks::default();
    let p = credal("walley-two-coins");
    let rows = dilation_report(&p).unwrap();
    match rows.iter().find(|r| r.event == [0]) {
        Some(row) => {
            c.equal(
                "prior",
                (row.prior.lo.clone(), row.prior.hi.clone()),
                (rat(1, 2), rat(1, 2)),
            );
            for (x, i) in &row.posteriors {
                c.equal(
                    &format!("posterior after {x}"),
                    (i.lo.clone(), i.hi.clone()),
                    (int(0), int(1)),
                );
            }
            c.equal("observations", row.posteriors.len(), 2);
            c.expect(row.strict_dilation, "dilation flagged");
        }
        None => c.expect(false, "no row for Y=heads"),
    }
    c
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(what()))
    }
}

/// Runs `check` on `CASES` seeded instances.
fn property(c: &mut Checks, name: &str, check: impl Fn(u64) -> Result<(), TestCaseError>) {
    let mut runner = TestRunner::new(common::config(common::CASES));
    if let Err(e) = runner.run(&any::<u64>(), check) {
        c.expect(false, format!("{name}: {e}"));
    }
}

fn y_points(p: &CredalSet, event: &[usize]) -> Vec<Vec<Rational>> {
    p.generators()
        .iter()
        .filter_map(|g| g.condition(event))
        .map(|g| g.y_marginal())
        .collect()
}

fn property_suites() -> Checks {
    let mut c = Checks::default();
    property(&mut c, "(a) rectangular ⇒ weak time consistent", |seed| {
        let dp = common::rectangular_problem(seed, false);
        let v = check_weak_time_consistency(&dp).unwrap();
        ensure(v.result == ConsistencyResult::Consistent, || {
            format!("{:?}", v.witness)
        })
    });
    property(
        &mut c,
        "(a) rectangular ∧ conservative ⇒ time consistent",
        |seed| {
            let dp = common::rectangular_problem(seed, true);
            let v = check_time_consistency(&dp).unwrap();
            ensure(v.result == ConsistencyResult::Consistent, || {
                format!("{:?}", v.witness)
            })
        },
    );
    property(
        &mut c,
        "(b) convex ∧ rectangular ⇒ standard calibrated and sharp",
        |seed| {
            let p = common::rectangular_set(seed, seed % 2 == 0);
            let r = is_sharply_calibrated(&UpdateRule::Standard, &p).unwrap();
            ensure(r.calibrated && r.sharp, || format!("{:?}", r.witness))
        },
    );
    property(
        &mut c,
        "(c) forward inclusion for partition conditioning",
        |seed| {
            let p = common::credal_set(seed, false, true);
            let cells =
                Partition::from_blocks(&random_blocks(&mut common::rng(seed ^ 3), p.space().nx()));
            let r = check_calibration(&UpdateRule::Partition(cells.clone()), &p).unwrap();
            ensure(r.semi_calibrated, || "not semi-calibrated".into())?;
            for k in &r.per_class {
                let image = y_points(&p, cells.cell_of(k.cell[0]));
                let inside = y_points(&p, &k.cell)
                    .iter()
                    .all(|v| in_convex_hull(v, &image).unwrap());
                ensure(inside, || format!("class {:?}", k.cell))?;
            }
            Ok(())
        },
    );
    property(&mut c, "(d) conditioned projections are convex", |seed| {
        let p = common::credal_set(seed, false, true);
        let event = common::nonempty_subset(&mut common::rng(seed ^ 1), &support_x(&p));
        let post = posterior_y(&p, &event).unwrap();
        let g = post.generators();
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                ensure(
                    member(&common::midpoint(&g[i], &g[j]), &post).unwrap(),
                    || format!("{event:?}"),
                )?;
            }
        }
        Ok(())
    });
    property(
        &mut c,
        "(d) equal cell posteriors contain the union posterior",
        |seed| {
            let p = common::shared_conditionals(seed);
            let nx = p.space().nx();
            let all: Vec<usize> = (0..nx).collect();
            let union = posterior_y(&p, &all).unwrap();
            ensure(
                subset(&union, &posterior_y(&p, &[0]).unwrap()).unwrap(),
                || "union escapes".into(),
            )
        },
    );
    property(
        &mut c,
        "(d) rectangular posteriors contain the intersection",
        |seed| {
            let p = common::rectangular_set(seed, false);
            let mut r = common::rng(seed ^ 2);
            let u = common::nonempty_subset(&mut r, &support_x(&p));
            let sets: Vec<VPolytope> = u.iter().map(|&x| posterior_y(&p, &[x]).unwrap()).collect();
            let given_u = posterior_y(&p, &u).unwrap();
            let dir: Vec<Rational> = (0..p.space().ny())
                .map(|_| int(r.gen_range(-3..=3)))
                .collect();
            match common::intersection_vertex(&sets, &dir) {
                Some(v) => ensure(member(&v, &given_u).unwrap(), || format!("{u:?}")),
                None => Ok(()),
            }
        },
    );
    property(
        &mut c,
        "(e) worst case decomposes on rectangular sets",
        |seed| {
            let dp = common::rectangular_problem(seed, false);
            let p = dp.credal();
            let rule = random_rule(&mut common::rng(seed ^ 4), dp.space().nx(), dp.space().na());
            let m: Vec<Rational> = (0..dp.space().nx())
                .map(|x| worst_case_posterior_loss(p, &rule, dp.loss(), x).unwrap())
                .collect();
            let parts: Vec<Rational> = p
                .generators()
                .iter()
                .map(|g| dot(&g.x_marginal(), &m))
                .collect();
            ensure(
                worst_case_loss(p, &rule, dp.loss()).0 == max_of(parts.iter()).unwrap(),
                || "mismatch".into(),
            )
        },
    );
    property(&mut c, "(f) hull idempotence", |seed| {
        let p = common::credal_set(seed, false, seed % 2 == 0);
        let h = hull(&p).unwrap();
        ensure(
            set_equal(&hull(&h).unwrap().as_polytope(), &h.as_polytope()).unwrap(),
            || "hull moved".into(),
        )
    });
    property(
        &mut c,
        "(f) convex closure keeps the a priori value",
        |seed| {
            let dp = common::problem(seed, false, false);
            let closed = dp.with_credal(dp.credal().with_convex(true)).unwrap();
            let (a, b) = (
                solve_a_priori(&dp).unwrap().value,
                solve_a_priori(&closed).unwrap().value,
            );
            ensure(a == b, || format!("{a} vs {b}"))
        },
    );
    property(&mut c, "(g) LP value within grid bounds 1–8", |seed| {
        let mut r = common::rng(seed);
        let mut shape = ProblemShape::fixed(2, 2, 2);
        shape.generators = r.gen_range(1..=4);
        shape.convex = r.gen_bool(0.5);
        let dp = random_problem(&mut r, &shape);
        let value = solve_a_priori(&dp).unwrap().value;
        for grid in 1..=8 {
            let b = brute_force_value(&dp, grid).unwrap();
            ensure(b.lower <= value && value <= b.upper, || {
                format!("grid {grid}")
            })?;
        }
        Ok(())
    });
    property(
        &mut c,
        "(h) solver output passes the saddle check",
        |seed| {
            let dp = common::problem(seed, seed % 3 == 0, seed % 2 == 0);
            let sol = solve_a_priori(&dp).unwrap();
            let r = verify_saddle(&dp, &sol.bookie_mixture, &sol.rule).unwrap();
            ensure(r.holds(), || format!("{:?}", r.failing_clauses()))
        },
    );
    c
}

type Criterion = (&'static str, fn() -> Checks);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "example-2.1: a priori, a posteriori and weak-time verdicts",
            predict_set,
        ),
        (
            "monty-hall: value, uniqueness, switch cost and rectangularity",
            monty_hall,
        ),
        ("example-4.2: hull membership", hull_membership),
        (
            "example-4.5: structure and time-consistency witness",
            rectangular_not_conservative,
        ),
        (
            "example-4.6: structure and time consistency",
            conservative_not_rectangular,
        ),
        (
            "example-2.1-extended: time and dynamic consistency",
            predict_set_extended,
        ),
        (
            "example-6.5, 6.6, 6.7: calibration verdicts",
            calibration_goldens,
        ),
        ("walley-two-coins: dilation", walley_dilation),
        (
            "property suites on seeded random instances",
            property_suites,
        ),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let checks = run();
        if checks.0.is_empty() {
            println!("PASS criterion {}: {title}", i + 1);
        } else {
            failed += 1;
            println!("FAIL criterion {}: {title}", i + 1);
            for f in &checks.0 {
                println!("    {f}");
            }
        }
    }
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
