//! Plain-text reports, one `key: value` line per fact.

use std::fmt::Write as _;
use std::path::Path;

use credal::calibration::{check_calibration, is_sharply_calibrated, UpdateRule};
use credal::consistency::{
    describe_witness, verify_witness, ConsistencyResult, ConsistencyVerdict,
};
use credal::corpus::{load_corpus, load_corpus_from, replay};
use credal::credal::{
    dilation_report, format_action, hull as build_hull, is_conservative, CredalSet,
    DecisionProblem, DecisionRule, JointDistribution, ProblemSpace,
};
use credal::minimax::{brute_force_value, solve_a_posteriori, solve_a_priori, verify_saddle};
use credal::polytope::member;
use credal::problem_file::ProblemFile;
use credal::rational::{format_rational, format_vector, parse_rational, zero};
use credal::{Error, Rational, Result};

use crate::Report;

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn done(text: String, negative: bool) -> Result<Report> {
    Ok(Report {
        text,
        negative,
        failed: false,
    })
}

fn joint(space: &ProblemSpace, pr: &JointDistribution) -> String {
    let rows: Vec<String> = (0..pr.nx())
        .map(|x| format!("{}→{}", space.x_labels()[x], format_vector(pr.row(x))))
        .collect();
    rows.join(", ")
}

fn mixture(m: &[(usize, Rational)]) -> String {
    let parts: Vec<String> = m
        .iter()
        .map(|(i, w)| format!("{i}:{}", format_rational(w)))
        .collect();
    parts.join(", ")
}

/// Parses `i:w, j:w` over generator indices.
fn parse_mixture(text: &str) -> Result<Vec<(usize, Rational)>> {
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|part| {
            let (i, w) = part.split_once(':').ok_or_else(|| {
                Error::Invalid(format!("expected `index:weight`, got {:?}", part.trim()))
            })?;
            let i = i
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad generator index {:?}", i.trim())))?;
            Ok((i, parse_rational(w)?))
        })
        .collect()
}

fn x_set(space: &ProblemSpace, xs: &[usize]) -> String {
    space.format_x_set(xs)
}

pub fn solve(dp: &DecisionProblem) -> Result<Report> {
    let s = dp.space();
    let sol = solve_a_priori(dp)?;
    let mut out = String::new();
    writeln!(out, "a priori value: {}", format_rational(&sol.value)).unwrap();
    writeln!(out, "rule: {}", sol.rule.display(s)).unwrap();
    match &sol.optimal_rule_vertices {
        Some(v) => {
            writeln!(out, "unique: {}", yes_no(v.len() == 1)).unwrap();
            writeln!(out, "optimal face vertices: {}", v.len()).unwrap();
            if v.len() > 1 {
                for r in v {
                    writeln!(out, "  {}", r.display(s)).unwrap();
                }
            }
        }
        None => {
            writeln!(out, "unique: unknown").unwrap();
            writeln!(out, "optimal face vertices: too many to enumerate").unwrap();
        }
    }
    writeln!(out, "bookie mixture: {}", mixture(&sol.bookie_mixture)).unwrap();
    writeln!(out, "aggregate Pr*: {}", joint(s, &sol.aggregate)).unwrap();
    if !sol.unconstrained_x.is_empty() {
        writeln!(
            out,
            "never observed: {} (uniform action)",
            x_set(s, &sol.unconstrained_x)
        )
        .unwrap();
    }
    done(out, false)
}

pub fn posterior(dp: &DecisionProblem) -> Result<Report> {
    let s = dp.space();
    let sol = solve_a_posteriori(dp)?;
    let mut out = String::new();
    for x in 0..s.nx() {
        let label = &s.x_labels()[x];
        match sol.at(x) {
            None => writeln!(out, "x={label}: never observed").unwrap(),
            Some(at) => {
                let actions: Vec<String> = at
                    .action_vertices
                    .iter()
                    .map(|a| format_action(s, a))
                    .collect();
                writeln!(
                    out,
                    "x={label}: MM = {}; optimal action vertices: {}",
                    format_rational(&at.value),
                    actions.join("; ")
                )
                .unwrap();
            }
        }
    }
    writeln!(
        out,
        "rule: {}",
        sol.canonical_rule(s.nx(), s.na()).display(s)
    )
    .unwrap();
    done(out, false)
}

pub fn saddle(dp: &DecisionProblem, rule: Option<&str>, mix: Option<&str>) -> Result<Report> {
    let s = dp.space();
    let (rule, mix) = match (rule, mix) {
        (Some(r), Some(m)) => (DecisionRule::parse(s, r)?, parse_mixture(m)?),
        (None, None) => {
            let sol = solve_a_priori(dp)?;
            (sol.rule, sol.bookie_mixture)
        }
        _ => {
            return Err(Error::Invalid(
                "give both --rule and --mixture, or neither".into(),
            ))
        }
    };
    let r = verify_saddle(dp, &mix, &rule)?;
    let mut out = String::new();
    writeln!(out, "rule: {}", rule.display(s)).unwrap();
    writeln!(out, "bookie mixture: {}", mixture(&mix)).unwrap();
    writeln!(out, "mixture loss: {}", format_rational(&r.mixture_loss)).unwrap();
    writeln!(
        out,
        "best response to Pr*: {}",
        format_rational(&r.best_response)
    )
    .unwrap();
    writeln!(
        out,
        "worst case of rule: {}",
        format_rational(&r.worst_case)
    )
    .unwrap();
    writeln!(
        out,
        "(i) agent best response: {}",
        yes_no(r.agent_best_response)
    )
    .unwrap();
    writeln!(
        out,
        "(ii) bookie best response: {}",
        yes_no(r.bookie_best_response)
    )
    .unwrap();
    writeln!(
        out,
        "(iii) support attains the maximum: {}",
        yes_no(r.support_attains_max)
    )
    .unwrap();
    if r.holds() {
        writeln!(out, "saddle point: verified").unwrap();
    } else {
        writeln!(
            out,
            "saddle point: no (failing {})",
            r.failing_clauses().join(", ")
        )
        .unwrap();
    }
    done(out, !r.holds())
}

pub fn hull(p: &CredalSet, json: bool) -> Result<Report> {
    let h = build_hull(p)?;
    if json {
        let mut f = ProblemFile::from_credal(&h);
        f.description = Some("hull of the X-marginals and conditionals".into());
        return done(f.to_json() + "\n", false);
    }
    let s = p.space();
    let mut out = String::new();
    writeln!(out, "hull generators: {}", h.generators().len()).unwrap();
    for g in h.generators() {
        writeln!(out, "  {}", joint(s, g)).unwrap();
    }
    done(out, false)
}

pub fn rectangular(p: &CredalSet) -> Result<Report> {
    let s = p.space();
    let h = build_hull(p)?;
    let set = p.as_polytope();
    let mut outside = None;
    for g in h.generators() {
        if !member(g.mass(), &set)? {
            outside = Some(g);
            break;
        }
    }
    let mut out = String::new();
    writeln!(out, "rectangular: {}", yes_no(outside.is_none())).unwrap();
    if let Some(g) = outside {
        writeln!(out, "hull point outside the set: {}", joint(s, g)).unwrap();
    }
    done(out, outside.is_some())
}

pub fn conservative(p: &CredalSet) -> Report {
    let s = p.space();
    let mut out = String::new();
    let ok = is_conservative(p);
    writeln!(out, "conservative: {}", yes_no(ok)).unwrap();
    for (i, g) in p.generators().iter().enumerate() {
        let empty: Vec<usize> = (0..s.nx()).filter(|&x| g.prob_x(x) == zero()).collect();
        if !empty.is_empty() {
            writeln!(
                out,
                "generator {i} gives probability 0 to {}",
                x_set(s, &empty)
            )
            .unwrap();
        }
    }
    Report {
        text: out,
        negative: !ok,
        failed: false,
    }
}

pub fn dilation(p: &CredalSet) -> Result<Report> {
    let s = p.space();
    let rows = dilation_report(p)?;
    let mut out = String::new();
    let mut dilated = 0;
    for row in &rows {
        let names: Vec<&str> = row
            .event
            .iter()
            .map(|&y| s.y_labels()[y].as_str())
            .collect();
        let post: Vec<String> = row
            .posteriors
            .iter()
            .map(|(x, i)| format!("after {} {i}", s.x_labels()[*x]))
            .collect();
        write!(
            out,
            "Y∈{{{}}}: prior {}; {}",
            names.join(","),
            row.prior,
            post.join("; ")
        )
        .unwrap();
        if row.strict_dilation {
            dilated += 1;
            out.push_str("; dilation");
        }
        out.push('\n');
    }
    writeln!(out, "dilated events: {dilated}").unwrap();
    done(out, dilated > 0)
}

pub fn consistency(dp: &DecisionProblem, v: ConsistencyVerdict) -> Result<Report> {
    let s = dp.space();
    let mut out = String::new();
    writeln!(out, "{} consistency: {}", v.kind, v.result).unwrap();
    if let Some(w) = &v.witness {
        writeln!(out, "witness: {}", describe_witness(s, w)).unwrap();
        writeln!(out, "witness verified: {}", yes_no(verify_witness(dp, w)?)).unwrap();
    }
    if let Some(w) = &v.strong_witness {
        writeln!(out, "strong-condition witness: {}", describe_witness(s, w)).unwrap();
    }
    if v.result == ConsistencyResult::Unknown {
        writeln!(
            out,
            "note: no violation found among the candidates; this is not a proof"
        )
        .unwrap();
    }
    writeln!(out, "sufficient conditions: {}", v.notes).unwrap();
    done(out, v.result == ConsistencyResult::Inconsistent)
}

fn describe_rule(space: &ProblemSpace, rule: &UpdateRule) -> String {
    match rule {
        UpdateRule::Partition(c) => format!("conditioning on the cells {}", c.display(space)),
        other => other.to_string(),
    }
}

pub fn calibrate(p: &CredalSet, rule_text: &str, sharp: bool) -> Result<Report> {
    let s = p.space();
    let rule = UpdateRule::parse(s, rule_text)?;
    let r = check_calibration(&rule, p)?;
    let mut out = String::new();
    writeln!(out, "update rule: {}", describe_rule(s, &rule)).unwrap();
    let check = |b: Option<bool>| match b {
        Some(b) => yes_no(b),
        None => "not tested",
    };
    for c in &r.per_class {
        writeln!(
            out,
            "class {}: posterior ⊆ image: {}; image ⊆ posterior: {}",
            x_set(s, &c.cell),
            check(c.forward),
            check(c.backward)
        )
        .unwrap();
    }
    if let Some(i) = r.classes.undefined_cell {
        writeln!(
            out,
            "undefined on: {}",
            x_set(s, &r.classes.partition.cells()[i])
        )
        .unwrap();
    }
    writeln!(out, "semi-calibrated: {}", yes_no(r.semi_calibrated)).unwrap();
    writeln!(
        out,
        "{}",
        if r.calibrated {
            "calibrated"
        } else {
            "not calibrated"
        }
    )
    .unwrap();
    for c in r
        .per_class
        .iter()
        .filter(|c| c.forward == Some(false) || c.backward == Some(false))
    {
        writeln!(out, "failing class: {}", x_set(s, &c.cell)).unwrap();
    }
    let mut negative = !r.calibrated;
    if sharp {
        let sr = is_sharply_calibrated(&rule, p)?;
        writeln!(out, "sharply calibrated: {}", yes_no(sr.sharp)).unwrap();
        if let Some(w) = &sr.witness {
            writeln!(
                out,
                "strictly narrower calibrated partition: {}",
                w.display(s)
            )
            .unwrap();
        }
        negative |= !sr.sharp;
    }
    done(out, negative)
}

pub fn oracle(dp: &DecisionProblem, grid: usize) -> Result<Report> {
    let s = dp.space();
    let bounds = brute_force_value(dp, grid)?;
    let value = solve_a_priori(dp)?.value;
    let within = bounds.lower <= value && value <= bounds.upper;
    let mut out = String::new();
    writeln!(out, "grid: {grid}").unwrap();
    writeln!(out, "lower bound: {}", format_rational(&bounds.lower)).unwrap();
    writeln!(out, "upper bound: {}", format_rational(&bounds.upper)).unwrap();
    writeln!(out, "best grid rule: {}", bounds.best_rule.display(s)).unwrap();
    writeln!(out, "LP value: {}", format_rational(&value)).unwrap();
    writeln!(out, "LP value within bounds: {}", yes_no(within)).unwrap();
    Ok(Report {
        text: out,
        negative: !within,
        failed: !within,
    })
}

pub fn corpus(dir: Option<&Path>) -> Result<Report> {
    let cases = match dir {
        Some(d) => load_corpus_from(d)?,
        None => load_corpus()?,
    };
    let mut out = String::new();
    let (mut passed, mut total) = (0, 0);
    for case in &cases {
        let outcomes = replay(case)?;
        let ok = outcomes.iter().filter(|o| o.passed).count();
        writeln!(out, "{}: {ok}/{} passed", case.name, outcomes.len()).unwrap();
        for o in outcomes.iter().filter(|o| !o.passed) {
            writeln!(
                out,
                "  FAIL {}: expected {} got {}",
                o.label(),
                o.expected,
                o.actual
            )
            .unwrap();
        }
        passed += ok;
        total += outcomes.len();
    }
    writeln!(out, "total: {passed}/{total} passed").unwrap();
    Ok(Report {
        text: out,
        negative: passed != total,
        failed: passed != total,
    })
}
