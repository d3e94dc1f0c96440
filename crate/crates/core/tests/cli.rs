// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

mod support;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use support::scenarios::{self, write_world, WorldFiles};
use support::world::{dest_ip, CLIENT};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cipollino"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Setup {
    dir: tempfile::TempDir,
    files: WorldFiles,
    workload: PathBuf,
}

fn setup() -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let world = scenarios::defense_world(&mut support::rng(21), 4);
    let files = write_world(&world, dir.path());
    let mut csv = String::from("at,dest_ip,dest_port,client_asn\n");
    for i in 0..30 {
        csv.push_str(&format!("1970-01-01T00:{:02}:{:02}Z,{},443,{CLIENT}\n", i / 2, (i % 2) * 30, dest_ip(i % 4)));
    }
    let workload = dir.path().join("workload.csv");
    std::fs::write(&workload, csv).unwrap();
    Setup { dir, files, workload }
}

fn simulate(st: &Setup, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate",
        "--topology",
        s(&st.files.topology),
        "--prefixes",
        s(&st.files.prefixes),
        "--consensus",
        s(&st.files.consensus),
        "--workload",
        s(&st.workload),
        "--seed",
        "1",
        "--out",
        s(out),
    ];
    if !extra.contains(&"--model") {
        args.extend(["--model", "cipollino"]);
    }
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn simulate_writes_identical_reports() {
    let st = setup();
    let a = st.dir.path().join("a");
    let b = st.dir.path().join("b");
    let oa = simulate(&st, &a, &[]);
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(code(&simulate(&st, &b, &[])), 0);
    for f in ["summary.csv", "trace.jsonl", "load.csv", "adversary_models.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let trace = std::fs::read_to_string(a.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 30);
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    for key in ["request_index", "circuit_id", "reused", "safe", "adversaries"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["subcommand"], "simulate");
}

#[test]
fn simulate_exit_codes() {
    let st = setup();
    let out = st.dir.path().join("o");
    let missing = st.dir.path().join("nope.jsonl");
    let mut args: Vec<String> = [
        "simulate", "--topology", s(&st.files.topology), "--consensus", s(&missing), "--workload", s(&st.workload),
        "--model", "vanilla", "--seed", "1", "--out", s(&out),
    ]
    .iter()
    .map(|a| a.to_string())
    .collect();
    assert_eq!(code(&bin().args(&args).output().unwrap()), 2, "missing consensus");

    let pos = args.iter().position(|a| a == "--seed").unwrap();
    let mut unseeded = args.clone();
    unseeded.drain(pos..pos + 2);
    unseeded[4] = s(&st.files.consensus).to_string();
    assert_eq!(code(&bin().args(&unseeded).output().unwrap()), 2, "no seed");

    let broken = st.dir.path().join("broken.jsonl");
    std::fs::write(&broken, "{\"valid_at\":\"1970-01-01T00:00:00Z\"}\nnot json\n").unwrap();
    args[4] = s(&broken).to_string();
    assert_eq!(code(&bin().args(&args).output().unwrap()), 3, "corrupt consensus");

    args[4] = s(&st.files.consensus).to_string();
    args.extend(["--set".to_string(), "no_such_key=1".to_string()]);
    assert_eq!(code(&bin().args(&args).output().unwrap()), 3, "bad config override");

    assert_eq!(code(&simulate(&st, &out, &["--model", "bogus"])), 2, "unknown model");
}

fn write_archive(dir: &Path, skip: Option<&str>) -> PathBuf {
    let text = std::fs::read_to_string(support::fixture("bundle_50.archive")).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| Some(*l) != skip).collect();
    let p = dir.join("archive.txt");
    std::fs::write(&p, kept.join("\n")).unwrap();
    p
}

#[test]
fn verify_bundle_checks_archive() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = support::fixture("bundle_50.jsonl");
    let total = std::fs::read_to_string(support::fixture("bundle_50.archive")).unwrap().lines().count();

    let full = write_archive(dir.path(), None);
    let o = run(&["verify-bundle", "--bundle", s(&bundle), "--archive", s(&full), "--seed", "3"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("verified 100 "));

    let o = run(&["verify-bundle", "--bundle", s(&bundle), "--archive", s(&full), "--sample", "100000", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains(&format!("verified {total} ")));

    let holed = write_archive(dir.path(), Some("msm-7"));
    let o = run(&["verify-bundle", "--bundle", s(&bundle), "--archive", s(&holed), "--sample", "100000", "--seed", "3"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("msm-7"));

    let o = run(&["verify-bundle", "--bundle", s(&bundle), "--archive", s(&dir.path().join("x")), "--seed", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn hijack_matrix_and_path_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    std::fs::write(p("t.rels"), "1|2|-1\n1|3|-1\n2|4|-1\n3|5|-1\n4|5|0\n").unwrap();
    std::fs::write(p("attackers.txt"), "# suspects\n4\n5\n").unwrap();
    std::fs::write(p("pairs.csv"), "src_asn,victim_asn\n2,3\n3,2\n1,5\n").unwrap();
    let out = p("m");
    let o = run(&[
        "hijack-matrix", "--topology", s(&p("t.rels")), "--attackers", s(&p("attackers.txt")), "--pairs",
        s(&p("pairs.csv")), "--seed", "0", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let attackers = std::fs::read_to_string(out.join("attackers.csv")).unwrap();
    assert_eq!(attackers.lines().count(), 3);
    assert!(out.join("victims.csv").is_file());

    std::fs::write(p("attackers.txt"), "99\n").unwrap();
    let o = run(&[
        "hijack-matrix", "--topology", s(&p("t.rels")), "--attackers", s(&p("attackers.txt")), "--pairs",
        s(&p("pairs.csv")), "--seed", "0", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 3, "unknown attacker AS");

    std::fs::write(p("b.jsonl"), "{\"generated_at\":\"2016-03-01T00:00:00Z\",\"prefix_table_version\":\"v\"}\n{\"dst\":5,\"edges\":[{\"from\":2,\"to\":4,\"src\":\"atlas\",\"mid\":\"a\"},{\"from\":4,\"to\":5,\"src\":\"atlas\",\"mid\":\"b\"}]}\n").unwrap();
    std::fs::write(p("truth.csv"), "src_asn,dst_asn,path\n2,5,2-4-5\n1,4,1-2-4\n").unwrap();
    let acc = p("acc");
    let o = run(&[
        "path-accuracy", "--topology", s(&p("t.rels")), "--bundle", s(&p("b.jsonl")), "--truth", s(&p("truth.csv")),
        "--seed", "0", "--out", s(&acc),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let hist = std::fs::read_to_string(acc.join("histogram.csv")).unwrap();
    assert!(hist.contains("measured,under,0,1"), "{hist}");
    assert!(hist.contains("simulated,under,0,1"), "{hist}");
}

#[test]
fn generated_workloads_feed_simulate() {
    let st = setup();
    let p = |n: &str| st.dir.path().join(n);
    std::fs::write(p("sites.csv"), "site,rank\na.example,1\nb.example,2\n").unwrap();
    let dns = format!("site,ip,port\na.example,{},443\na.example,{},80\nb.example,{},443\n", dest_ip(0), dest_ip(1), dest_ip(2));
    std::fs::write(p("dns.csv"), dns).unwrap();
    let web = p("web.csv");
    let o = run(&[
        "gen-web-workload", "--sites", s(&p("sites.csv")), "--dns", s(&p("dns.csv")), "--client-asn", "100", "--seed",
        "5", "--out", s(&web),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&web).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("at,")).count(), 3);

    std::fs::write(p("profile.csv"), format!("app,rate_per_hour,ports,ips\nirc,30,,{}\n", dest_ip(3))).unwrap();
    let mixed = p("mixed.csv");
    let o = run(&[
        "gen-mixed-workload", "--profile", s(&p("profile.csv")), "--duration", "3600", "--client-asn", "100", "--seed",
        "5", "--out", s(&mixed),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    for w in [&web, &mixed] {
        let st2 = Setup {
            dir: tempfile::tempdir().unwrap(),
            files: WorldFiles {
                topology: st.files.topology.clone(),
                prefixes: st.files.prefixes.clone(),
                consensus: st.files.consensus.clone(),
            },
            workload: w.clone(),
        };
        let out = st2.dir.path().join("r");
        let o = simulate(&st2, &out, &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }

    std::fs::write(p("sites.csv"), "site,rank\nc.example,1\n").unwrap();
    let o = run(&[
        "gen-web-workload", "--sites", s(&p("sites.csv")), "--dns", s(&p("dns.csv")), "--client-asn", "100", "--seed",
        "5", "--out", s(&web),
    ]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("c.example"));
}
