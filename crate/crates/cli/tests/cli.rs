//! End-to-end behavior of the `itlb` binary: report shapes, exit codes,
//! determinism across runs and worker counts, checkpoint/resume, and the
//! interactive magicians loop. Everything heavy runs on 3x3 or 4x4 boards
//! so each test builds its tables in well under a second.

use std::fs;
use std::io::Write as _;
use std::process::{Command, Output, Stdio};

fn itlb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_itlb"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("itlb binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[test]
fn solve_prints_verdict_dtm_and_principal_line() {
    let out = run(itlb().args(["solve", "W:Kf6,Qg6 | B:Kh8 | wtm | board=8x8,planar"]));
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "WhiteWins dtm=1 line=Qg7#\n");
}

#[test]
fn solve_reports_draw_without_a_line() {
    let out = run(itlb().args(["solve", "W:Ka1 | B:Kc3 | wtm | board=4x4,planar"]));
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "Draw\n");
}

// ---------------------------------------------------------------------------
// exit codes
// ---------------------------------------------------------------------------

#[test]
fn malformed_position_exits_2() {
    let out = run(itlb().args(["solve", "this is not a position"]));
    assert_eq!(code(&out), 2);
    assert!(!stderr_of(&out).is_empty());
}

#[test]
fn adjacent_kings_exit_3() {
    let out = run(itlb().args(["solve", "W:Ka1 | B:Kb2 | wtm | board=4x4,planar"]));
    assert_eq!(code(&out), 3, "stderr: {}", stderr_of(&out));
}

#[test]
fn oversized_material_exits_4() {
    // Six pieces exceed the five-piece native table limit.
    let out = run(itlb().args([
        "solve",
        "W:Ka1,Qb1,Qc1 | B:Kh8,Qg8,Qf8 | wtm | board=8x8,planar",
    ]));
    assert_eq!(code(&out), 4, "stderr: {}", stderr_of(&out));
}

#[test]
fn unknown_topology_exits_2() {
    let out = run(itlb().args([
        "beats",
        "W:Kb1,Qc2",
        "B:Kd4",
        "--board",
        "4x4",
        "--topology",
        "moebius",
    ]));
    assert_eq!(code(&out), 2, "stderr: {}", stderr_of(&out));
}

// ---------------------------------------------------------------------------
// beats / chain
// ---------------------------------------------------------------------------

#[test]
fn beats_reports_the_relation_as_json() {
    let out = run(itlb().args(["beats", "W:Kb1,Qc2", "B:Kd4", "--board", "4x4"]));
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json report");
    assert_eq!(report["beats"], "XBeats");
    assert!(report["draw_convention"].is_string());
    assert_eq!(report["config"]["board"], "4x4,planar");
}

// ---------------------------------------------------------------------------
// mc: determinism and report shape
// ---------------------------------------------------------------------------

fn mc_csv(workers: &str) -> Output {
    run(itlb().args([
        "mc",
        "--board",
        "4x4",
        "--material",
        "KQ,KQ,KQ,KQ",
        "--chain-len",
        "4",
        "--samples",
        "2000",
        "--seed",
        "7",
        "--workers",
        workers,
        "--format",
        "csv",
    ]))
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("board,"))
        .collect()
}

#[test]
fn mc_csv_is_deterministic_and_worker_invariant() {
    let first = mc_csv("1");
    let again = mc_csv("1");
    let pooled = mc_csv("4");
    assert_eq!(code(&first), 0, "stderr: {}", stderr_of(&first));
    assert_eq!(
        stdout_of(&first),
        stdout_of(&again),
        "same seed, same bytes"
    );
    // The `# config` header records the worker count; the data must not.
    assert_eq!(
        data_rows(&stdout_of(&first)),
        data_rows(&stdout_of(&pooled)),
        "worker count must not change any counted quantity"
    );
}

#[test]
fn mc_json_counts_add_up() {
    let out = run(itlb().args([
        "mc",
        "--board",
        "4x4",
        "--material",
        "KQ,KQ,KQ,KQ",
        "--chain-len",
        "4",
        "--samples",
        "500",
        "--seed",
        "3",
        "--workers",
        "2",
        "--format",
        "json",
    ]));
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json report");
    assert_eq!(report["config"]["seed"], 3);
    let rows = report["reports"].as_array().expect("reports array");
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    let n = |key: &str| row[key].as_u64().unwrap_or_else(|| panic!("numeric {key}"));
    assert_eq!(n("samples"), 500);
    assert_eq!(
        n("intransitive") + n("transitive_decisive") + n("draw_degenerate"),
        n("samples"),
        "every accepted sample lands in exactly one class"
    );
    let share = row["intransitive_share"].as_f64().expect("share");
    let low = row["wilson_low"].as_f64().expect("wilson_low");
    let high = row["wilson_high"].as_f64().expect("wilson_high");
    assert!(
        low <= share && share <= high,
        "share {share} outside [{low}, {high}]"
    );
}

// ---------------------------------------------------------------------------
// exhaustive: budget checkpoint, resume, certificate round trip
// ---------------------------------------------------------------------------

#[test]
fn exhaustive_checkpoint_resumes_to_the_same_answer() {
    let starved = run(itlb().args([
        "exhaustive",
        "--board",
        "3x3",
        "--material",
        "KQ,KQ,KQ,KQ",
        "--budget-nodes",
        "100",
    ]));
    assert_eq!(code(&starved), 4, "stderr: {}", stderr_of(&starved));
    assert!(stderr_of(&starved).contains("resume with --resume"));
    let checkpoint: serde_json::Value =
        serde_json::from_str(&stdout_of(&starved)).expect("checkpoint json");
    let cursor: Vec<u64> = checkpoint["checkpoint"]["cursor"]
        .as_array()
        .expect("cursor array")
        .iter()
        .map(|v| v.as_u64().expect("cursor index"))
        .collect();
    assert_eq!(cursor.len(), 4);

    let cursor_text = cursor
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let resumed = run(itlb().args([
        "exhaustive",
        "--board",
        "3x3",
        "--material",
        "KQ,KQ,KQ,KQ",
        "--budget-nodes",
        "10000000",
        "--resume",
        &cursor_text,
    ]));
    assert_eq!(code(&resumed), 0, "stderr: {}", stderr_of(&resumed));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&resumed)).expect("json");
    let definite = report["certificate"].is_string() || report["exhaustive"] == true;
    assert!(
        definite,
        "resumed search must still reach a definite answer"
    );
}

#[test]
fn verify_cert_accepts_genuine_and_rejects_tampered() {
    let found = run(itlb().args([
        "exhaustive",
        "--board",
        "3x3",
        "--material",
        "KQ,KQ,KQ,KQ",
        "--budget-nodes",
        "10000000",
    ]));
    assert_eq!(code(&found), 0, "stderr: {}", stderr_of(&found));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&found)).expect("json");
    let certificate = report["certificate"]
        .as_str()
        .expect("3x3 KQ search finds a cycle");

    let dir = tempfile::tempdir().expect("tempdir");
    let genuine = dir.path().join("cycle.cert");
    fs::write(&genuine, certificate).expect("write certificate");
    let verified = run(itlb().args(["verify-cert", genuine.to_str().unwrap()]));
    assert_eq!(code(&verified), 0, "stderr: {}", stderr_of(&verified));
    assert!(stdout_of(&verified).contains("certificate verified: 4/4 edges pass"));

    // Bump the first stored dtm by one: every edge must be re-solved, so the
    // lie is caught and the certificate rejected with exit code 1.
    let at = certificate.find("dtm=").expect("certificate stores dtm") + 4;
    let digits: String = certificate[at..]
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    let bumped: u32 = digits.parse::<u32>().expect("dtm digits") + 1;
    let tampered_text = format!(
        "{}{}{}",
        &certificate[..at],
        bumped,
        &certificate[at + digits.len()..]
    );
    let tampered = dir.path().join("tampered.cert");
    fs::write(&tampered, tampered_text).expect("write tampered certificate");
    let rejected = run(itlb().args(["verify-cert", tampered.to_str().unwrap()]));
    assert_eq!(code(&rejected), 1, "stderr: {}", stderr_of(&rejected));
    assert!(stdout_of(&rejected).contains("certificate REJECTED"));
}

#[test]
fn chain_command_classifies_certificate_members_as_intransitive() {
    let found = run(itlb().args([
        "exhaustive",
        "--board",
        "3x3",
        "--material",
        "KR,KR,KR,KR",
        "--budget-nodes",
        "10000000",
    ]));
    assert_eq!(code(&found), 0, "stderr: {}", stderr_of(&found));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&found)).expect("json");
    let certificate = report["certificate"]
        .as_str()
        .expect("3x3 KR search finds a cycle");
    let members: Vec<&str> = certificate
        .lines()
        .filter_map(|line| line.strip_prefix("member "))
        .map(|rest| rest.split_once(": ").expect("member line").1)
        .collect();
    assert_eq!(members.len(), 4);

    let mut cmd = itlb();
    cmd.arg("chain").args(&members).args(["--board", "3x3"]);
    let classified = run(&mut cmd);
    assert_eq!(code(&classified), 0, "stderr: {}", stderr_of(&classified));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&classified)).expect("json");
    assert_eq!(report["classification"], "Intransitive");
    assert!(report["certificate"].is_string());
    assert_eq!(report["edges"].as_array().expect("edges").len(), 4);
}

#[test]
fn verify_cert_rejects_garbage_with_exit_2() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("garbage.cert");
    fs::write(&path, "this is not a certificate\n").expect("write");
    let out = run(itlb().args(["verify-cert", path.to_str().unwrap()]));
    assert_eq!(code(&out), 2, "stderr: {}", stderr_of(&out));
}

// ---------------------------------------------------------------------------
// table: stats report and on-disk cache
// ---------------------------------------------------------------------------

#[test]
fn table_reports_stats_and_persists_the_cache_file() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = run(itlb().args([
        "table",
        "--board",
        "4x4",
        "--material",
        "KQvK",
        "--cache-dir",
        dir.path().to_str().unwrap(),
    ]));
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    // Three pieces on sixteen squares, both sides to move: 2 * 16^3 slots.
    assert_eq!(report["slots"], 8192);
    assert!(report["stats"]["legal"].as_u64().expect("legal count") > 0);
    let cache_file = report["cache_file"].as_str().expect("cache path");
    assert!(
        fs::metadata(cache_file).is_ok(),
        "table file missing: {cache_file}"
    );
}

// ---------------------------------------------------------------------------
// magicians
// ---------------------------------------------------------------------------

#[test]
fn magicians_order_prints_the_exact_chain() {
    let out = run(itlb().args(["magicians", "order"]));
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "OOO < OXO < XOO < XXO < XOX < XXX\n");
}

#[test]
fn magicians_solve_finds_the_three_swap_line() {
    let out = run(itlb().args(["magicians", "solve", "XOX/OXO"]));
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    assert_eq!(report["perfect_value"], 3);
    assert_eq!(report["line"].as_array().expect("line").len(), 3);
}

#[test]
fn magicians_solve_rejects_bad_board_text_with_exit_2() {
    let out = run(itlb().args(["magicians", "solve", "XOX/OX"]));
    assert_eq!(code(&out), 2, "stderr: {}", stderr_of(&out));
}

#[test]
fn magicians_ai_move_is_seeded_and_reports_the_board_after() {
    let out = run(itlb().args([
        "magicians",
        "ai-move",
        "XOX/OXO",
        "--side",
        "bad",
        "--seed",
        "0",
    ]));
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    assert_eq!(report["swap"], "u2 l1");
    assert_eq!(report["board_after"], "XOX/OOO");

    let again = run(itlb().args([
        "magicians",
        "ai-move",
        "XOX/OXO",
        "--side",
        "bad",
        "--seed",
        "0",
    ]));
    assert_eq!(stdout_of(&out), stdout_of(&again), "same seed, same move");
}

fn play_with_input(board: &str, side: &str, input: &str) -> Output {
    let mut child = itlb()
        .args(["magicians", "play", board, "--side", side, "--seed", "0"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn itlb");
    child
        .stdin
        .as_mut()
        .expect("stdin")
        .write_all(input.as_bytes())
        .expect("write input");
    child.wait_with_output().expect("itlb finishes")
}

#[test]
fn magicians_play_recognizes_an_immediate_win() {
    // One bad card with two good horizontal neighbors below: swapping it down
    // flips it on arrival and the whole board turns good.
    let out = play_with_input("XOX/XXX", "good", "u1 l1\n");
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(
        stdout.contains("all good — the good side wins"),
        "stdout: {stdout}"
    );
}

#[test]
fn magicians_play_lets_the_engine_answer_then_quits() {
    let out = play_with_input("XOX/OXO", "good", "u0 l0\nquit\n");
    assert_eq!(code(&out), 0, "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(
        stdout.contains("bad (O) plays"),
        "engine must answer: {stdout}"
    );
    assert!(stdout.contains("game abandoned"), "stdout: {stdout}");
}
