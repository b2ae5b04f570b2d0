use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_kam");
const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn kam(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn airport_args() -> Vec<String> {
    vec![
        "--data".into(),
        format!("{FIXTURES}/airports.csv"),
        "--schema".into(),
        format!("{FIXTURES}/airports.toml"),
    ]
}

fn with_airports<'a>(cmd: &'a str, extra: &[&'a str], buf: &'a mut Vec<String>) -> Vec<&'a str> {
    *buf = airport_args();
    let mut v = vec![cmd];
    v.extend(buf.iter().map(String::as_str));
    v.extend_from_slice(extra);
    v
}

#[test]
fn evaluate_scores_match_published_row() {
    let mut buf = Vec::new();
    let o = kam(&with_airports(
        "evaluate",
        &[
            "--epsilon",
            "0.01",
            "--weights",
            "sbm",
            "--epsilon-scheme",
            "per-firm",
        ],
        &mut buf,
    ));
    assert!(o.status.success());
    let scores: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_owned())
        .collect();
    assert_eq!(
        scores,
        ["0.98307", "0.99747", "0.92921", "0.63590", "0.54534", "0.99274", "0.98991", "0.99857"]
    );
}

#[test]
fn output_is_deterministic() {
    let mut buf = Vec::new();
    let args = with_airports(
        "targets",
        &["--epsilon", "0.1", "--format", "table"],
        &mut buf,
    );
    let a = stdout(&kam(&args));
    let b = stdout(&kam(&args));
    assert_eq!(a, b);
    assert!(a.lines().nth(2).unwrap().starts_with("A  "), "{a}");
}

#[test]
fn bounded_targets_keep_runway_for_e() {
    let o = kam(&[
        "targets",
        "--epsilon",
        "0.0001",
        "--uncontrollable-mode",
        "bounded",
        "--format",
        "table",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let e = text.lines().find(|l| l.starts_with('E')).unwrap();
    let cells: Vec<&str> = e.split_whitespace().collect();
    assert_eq!(cells[4], "192330.00");
}

#[test]
fn rank_refuses_zero_epsilon() {
    let o = kam(&["rank", "--epsilon", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[RankingAtZeroEpsilon]"));
}

#[test]
fn rank_orders_by_score() {
    let o = kam(&["rank", "--epsilon", "0.1"]);
    assert!(o.status.success());
    let order: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_owned())
        .collect();
    assert_eq!(order, ["H", "B", "F", "G", "A", "C", "D", "E"]);
}

#[test]
fn dominance_rejects_sbm_and_accepts_shared_weights() {
    let o = kam(&["dominance"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("SbmWeightsRejected"));
    let o = kam(&["dominance", "--weights", "avg"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 9);
}

#[test]
fn weights_file_is_read_by_factor_name() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let schema = dir.path().join("s.toml");
    std::fs::write(&data, "dmu,X,Y\nA,1,1\nB,2,3\nC,4,2\n").unwrap();
    std::fs::write(
        &schema,
        "[factors.X]\nrole = \"input\"\nweight = 1.0\n[factors.Y]\nrole = \"output\"\nweight = 2.0\n",
    )
    .unwrap();
    let w = format!("file:{}", schema.display());
    let o = kam(&[
        "dominance",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--weights",
        &w,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("1,B,3.000000000e0"), "{text}");
}

#[test]
fn productivity_report_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bank.csv");
    let schema = dir.path().join("bank.toml");
    let out = dir.path().join("prod.csv");
    std::fs::write(
        &data,
        "dmu,staff,loans\nA,1,2\nB,2,5\nC,3,8.7\nD,4,14\nE,5,16.5\nF,8,23\nG,11,22\nH,5.2,16\nI,7,8\n",
    )
    .unwrap();
    std::fs::write(
        &schema,
        "[factors.staff]\nrole = \"input\"\n[factors.loans]\nrole = \"output\"\ngoal = 15.0\n",
    )
    .unwrap();
    let o = kam(&[
        "productivity",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--efficiency-threshold",
        "0.8",
        "--effectiveness-threshold",
        "0.378",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let productive: String = text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",productive"))
        .map(|l| &l[..1])
        .collect();
    assert_eq!(productive, "EFH");
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    let schema = dir.path().join("s.toml");
    std::fs::write(&data, "dmu,X,Y\nA,1,-1\n").unwrap();
    std::fs::write(
        &schema,
        "[factors.X]\nrole = \"input\"\n[factors.Y]\nrole = \"output\"\n",
    )
    .unwrap();
    let o = kam(&[
        "evaluate",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[InvalidDataset]"));

    let o = kam(&[
        "evaluate",
        "--data",
        "/nonexistent.csv",
        "--schema",
        schema.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = kam(&["evaluate", "--weights", "geometric"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_uncontrollable_mode_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let schema = dir.path().join("s.toml");
    std::fs::write(&data, "dmu,X,Z,Y\nA,1,1,1\nB,2,1,3\n").unwrap();
    std::fs::write(
        &schema,
        "[factors.X]\nrole = \"input\"\n[factors.Z]\nrole = \"input\"\ncontrollable = false\n[factors.Y]\nrole = \"output\"\n",
    )
    .unwrap();
    let args = [
        "evaluate",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
    ];
    let o = kam(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MissingUncontrollableMode"));
    let mut with_mode = args.to_vec();
    with_mode.extend(["--uncontrollable-mode", "fixed"]);
    assert!(kam(&with_mode).status.success());
}

#[test]
fn reproduce_paper_writes_four_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = kam(&["reproduce-paper", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for f in [
        "scores_fixed",
        "targets_fixed",
        "scores_bounded",
        "targets_bounded",
    ] {
        assert!(Path::new(&dir.path().join(format!("{f}.csv"))).is_file());
    }
    let summary = stdout(&o);
    assert!(summary.lines().all(|l| l.starts_with("PASS")), "{summary}");
    let e = std::fs::read_to_string(dir.path().join("targets_bounded.csv")).unwrap();
    assert!(
        e.contains("E,997.61,30003.00,8000.80,192330.00,4949.97,430744.19,1573.84"),
        "{e}"
    );
}
