//! The compiled binary: documented invocations, exit codes and byte-stable output.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ultralimit")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn documented_invocations() {
    let o = run(&["canon", "--set", "0:4:{0,2}:"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "0:2:{0}:\n"));

    let o = run(&["witness-remark1", "--point", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["check"].as_str(), v["status"].as_str()), (Some("witness-remark1"), Some("pass")));
    assert_eq!(v["report"]["status"], "separated");

    let o = run(&["compare", "--u", "profinite:0", "--k", "1", "5", "v1"]);
    assert_eq!(stdout(&o), "Less\n");

    let o = run(&["build", "--carrier", "omega", "--point", "0", "--rank", "w*1+2"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify-def1", "--samples", "100", "--choices", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = run(&["canon", "--set", "0:4:{0,2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("position"));
    assert_eq!(run(&["compare", "--u", "profinite:0", "v1"]).status.code(), Some(2));
    assert_eq!(run(&["build", "--rank", "w*3"]).status.code(), Some(2));
    assert_eq!(run(&["verify-chain", "/nonexistent/chain.json"]).status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    for args in [
        vec!["verify-def1", "--samples", "60", "--seed", "9"],
        vec!["lift-laws", "--samples", "100", "--seed", "9"],
        vec!["order-export", "--k", "2", "--format", "dot"],
        vec!["uf-axioms", "--u", "mapped:(profinite:0; 0:1:[(2,0)]:)", "--samples", "40", "--seed", "9"],
    ] {
        let (a, b) = (run(&args), run(&args));
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
