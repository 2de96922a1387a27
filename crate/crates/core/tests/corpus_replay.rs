use credal::corpus::{load_corpus, replay};

#[test]
fn every_corpus_expectation_replays() {
    let mut failures = Vec::new();
    let mut total = 0;
    for case in load_corpus().unwrap() {
        for out in replay(&case).unwrap_or_else(|e| panic!("{e}")) {
            total += 1;
            if !out.passed {
                failures.push(format!(
                    "{}: {} {:?} expected {} got {}",
                    case.name, out.op, out.args, out.expected, out.actual
                ));
            }
        }
    }
    assert!(total > 100, "only {total} expectations");
    assert!(
        failures.is_empty(),
        "{} of {total} failed:\n{}",
        failures.len(),
        failures.join("\n")
    );
}
