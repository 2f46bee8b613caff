use sparsecert_cli::suite::{run_suite, SuiteSpec};

#[test]
fn certified_runs_are_recovered_exactly() {
    let spec = SuiteSpec::default();
    let s = run_suite(&spec, None).unwrap();
    assert!(s.runs >= 500);
    eprintln!(
        "runs={} certified={} exact={} errors={}",
        s.runs, s.certified, s.exact, s.errors
    );
    for model in ["gaussian", "fresnel"] {
        let c = s.outcomes.iter().filter(|o| o.model == model && o.certified).count();
        eprintln!("{model}: certified {c}");
        assert!(c > 0, "no certified {model} runs");
    }
    assert!(s.violations.is_empty(), "certified but not recovered: {:?}", s.violations);
}

