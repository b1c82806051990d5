use std::path::Path;

use etendue::cli::{run, CorpusRow, EvalReport, LevelsReport, TheoremReport, ValidateReport};
use etendue::geometry::{verify_dimension_theorem, DimensionReport, TheoremStatus};
use etendue::sites::{self, build_delta, Example};
use etendue::{ExtNat, FinCategory};
use std::sync::Arc;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn etendue(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("etendue").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn theorem_on_loop_is_equivalent() {
    let r = etendue(&["theorem", "loop_Y@delta:1"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.starts_with("equivalent"));

    let r = etendue(&["--json", "theorem", "loop_Y@delta:1"]);
    let t: TheoremReport = serde_json::from_str(&r.out).unwrap();
    assert_eq!(t.status, TheoremStatus::Equivalent);
    assert_eq!(t.report.dim, ExtNat::Finite(1));
    assert_eq!(t.report.depth, ExtNat::Finite(1));
}

#[test]
fn depth_of_collapsed_triangle() {
    let r = etendue(&["depth", "collapsed_Z@delta:2"]);
    assert_eq!((r.code, r.out.trim()), (0, "1"));
    let r = etendue(&["dim", "collapsed_Z@delta:2"]);
    assert_eq!((r.code, r.out.trim()), (0, "2"));
    let r = etendue(&["--json", "depth", "collapsed_Z@delta:2"]);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["depth"], 1);
}

#[test]
fn missing_identity_is_an_axiom_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.json",
        r#"{"objects": ["a"], "morphisms": [{"id": "f", "dom": "a", "cod": "a"}],
            "identities": {}, "compose": [["f", "f", "f"]]}"#,
    );
    let r = etendue(&["validate", &path]);
    assert_eq!(r.code, 2);
    assert!(r.err.starts_with("error[AxiomViolation]"), "{}", r.err);
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(etendue(&["validate", "/nonexistent/cat.json"]).code, 2);
    assert_eq!(etendue(&["dim", "nonsense@delta:2"]).code, 2);
    assert_eq!(etendue(&["dim", "collapsed_Z@delta:1"]).code, 2);
    let r = etendue(&["logic", "eval", "--site", "delta:1", "--formula", "top /\\"]);
    assert_eq!(r.code, 2);
    assert!(r.err.starts_with("error[ParseError]"));
    let r = etendue(&["site", "delta", "--max", "9"]);
    assert!(r.err.starts_with("error[BudgetExceeded]"));
    assert_eq!(etendue(&["frobnicate"]).code, 2);
    assert_eq!(etendue(&[]).code, 2);
}

#[test]
fn site_emit_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let r = etendue(&["site", "delta", "--max", "2", "--emit"]);
    assert_eq!(r.code, 0);
    let path = write(dir.path(), "d2.json", &r.out);

    let v = etendue(&["--json", "validate", &path]);
    assert_eq!(v.code, 0, "{}", v.err);
    let report: ValidateReport = serde_json::from_str(&v.out).unwrap();
    assert_eq!((report.objects, report.morphisms), (3, 31));
    assert_eq!(report.heights, Some(vec![0, 1, 2]));

    let rebuilt = FinCategory::validate(&serde_json::from_str(&r.out).unwrap()).unwrap();
    assert_eq!(rebuilt, build_delta(2).unwrap());
}

#[test]
fn built_presheaf_file_analyzes_like_the_example() {
    let dir = tempfile::tempdir().unwrap();
    let r = etendue(&["--json", "presheaf", "build", "collapsed_Z", "--base", "delta:2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let path = write(dir.path(), "z.json", &r.out);

    let a = etendue(&["--json", "analyze", &path]);
    assert_eq!(a.code, 0, "{}", a.err);
    let from_file: DimensionReport = serde_json::from_str(&a.out).unwrap();

    let base = Arc::new(build_delta(2).unwrap());
    let z = Arc::new(sites::example(&Example::CollapsedZ, &base).unwrap());
    assert_eq!(from_file, verify_dimension_theorem(&z, None).unwrap());
}

#[test]
fn presheaf_file_with_relative_category_path() {
    let dir = tempfile::tempdir().unwrap();
    let site = etendue(&["site", "delta", "--max", "1", "--emit"]);
    write(dir.path(), "d1.json", &site.out);
    let path = write(
        dir.path(),
        "point.json",
        r#"{"base": "d1.json", "elements": {"[0]": ["v"], "[1]": ["e"]},
            "action": {"d1:0": {"e": "v"}, "d1:1": {"e": "v"}, "d0:00": {"v": "e"}}}"#,
    );
    let r = etendue(&["dim", &path]);
    assert_eq!((r.code, r.out.trim()), (0, "0"), "{}", r.err);
}

#[test]
fn levels_of_delta_2() {
    let r = etendue(&["--json", "levels", "delta:2"]);
    assert_eq!(r.code, 0);
    let report: LevelsReport = serde_json::from_str(&r.out).unwrap();
    assert_eq!(report.levels.len(), 4);
    assert_eq!(report.level_e_site, Some(vec!["[0]".to_string()]));
    assert_eq!(etendue(&["levels", "delta:2", "--budget", "1"]).code, 2);
}

#[test]
fn logic_eval_reports_the_forced_sieve() {
    // Δ itself has unbounded chains of non-invertible maps (faces then degeneracies)
    let r = etendue(&["--json", "logic", "eval", "--site", "delta:2", "--formula", "ibd(inf)"]);
    let e: EvalReport = serde_json::from_str(&r.out).unwrap();
    assert!(e.holds);
    assert_eq!(e.forced_at, ["[0]", "[1]", "[2]"]);
    let r = etendue(&["--json", "logic", "eval", "--site", "delta:2", "--formula", "ibd(2)"]);
    let e: EvalReport = serde_json::from_str(&r.out).unwrap();
    assert!(!e.holds);
    assert!(e.forced_at.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let chain = write(
        dir.path(),
        "chain.json",
        r#"{"objects": ["a", "b"],
            "morphisms": [{"id": "1a", "dom": "a", "cod": "a"}, {"id": "1b", "dom": "b", "cod": "b"},
                          {"id": "f", "dom": "a", "cod": "b"}],
            "identities": {"a": "1a", "b": "1b"}}"#,
    );
    let r = etendue(&["--json", "logic", "eval", "--site", &chain, "--formula", "ibd(0)"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let e: EvalReport = serde_json::from_str(&r.out).unwrap();
    assert_eq!(e.forced_at, ["a"]);
    let r = etendue(&["--json", "logic", "eval", "--site", &chain, "--formula", "ibd(1)"]);
    let e: EvalReport = serde_json::from_str(&r.out).unwrap();
    assert!(e.holds);

    let r = etendue(&["logic", "eval", "--site", "delta:1", "--formula", "forall x. x \\/ (x => bot)"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("holds: false"));
}

#[test]
fn seed_corpus_runs_clean() {
    let r = etendue(&["--json", "--seed-corpus"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let rows: Vec<CorpusRow> = serde_json::from_str(&r.out).unwrap();
    assert_eq!(rows.len(), 17);
    for row in &rows {
        if row.report.strongly_regular {
            assert_eq!(row.status, TheoremStatus::Equivalent, "{}", row.name);
        }
    }
    let z = rows.iter().find(|r| r.name == "collapsed_Z@delta:2").unwrap();
    assert_eq!(z.status, TheoremStatus::OneWayOnly);
}

#[test]
fn text_reports_name_their_methods() {
    let r = etendue(&["analyze", "boundary:2@delta:2"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("dim = 1"));
    assert!(r.out.contains("confirmed by forcing"));
}

#[test]
fn help_goes_to_stdout() {
    let r = etendue(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.out.contains("theorem"));
}
