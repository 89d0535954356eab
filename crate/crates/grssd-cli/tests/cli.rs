//! Exit-code and stdout contract of the `grssd` binary.
//!
//! Every command communicates through flat `key=value` lines on stdout and a
//! four-way exit code split: 1 for files we cannot interpret, 2 for inputs we
//! can interpret but refuse, 3 for constructions that fail verification, 4 for
//! self-test regressions. These tests pin that contract from the outside, the
//! way a shell script would consume it.

use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

fn grssd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grssd"))
}

fn run(args: &[&str]) -> Output {
    grssd().args(args).output().expect("binary should spawn")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

fn stdout_map(out: &Output) -> HashMap<String, String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|line| {
            let (k, v) = line.split_once('=')?;
            Some((k.to_string(), v.to_string()))
        })
        .collect()
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn field_info_reports_tower_data() {
    let out = run(&["field-info", "19", "1"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let kv = stdout_map(&out);
    assert_eq!(kv["r"], "19");
    assert_eq!(kv["q"], "361");
    assert_eq!(kv["modulus"], "2,1,1");
    assert_eq!(kv["etaMinusOne"], "+1");
    assert_eq!(kv["thetaOrderCertified"], "true");
}

#[test]
fn field_info_rejects_even_characteristic() {
    let out = run(&["field-info", "4", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("odd prime"));
}

#[test]
fn build_small_family_end_to_end_with_brute_distance() {
    let out = run(&[
        "build",
        "thm2",
        "--r",
        "7",
        "--l",
        "6",
        "--s",
        "0",
        "--l1",
        "1",
        "--l2",
        "0",
        "--mds-bruteforce",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let kv = stdout_map(&out);
    assert_eq!(kv["length"], "10");
    assert_eq!(kv["extended"], "1");
    assert_eq!(kv["characterUniform"], "true");
    assert_eq!(kv["mds"], "pass");
    assert_eq!(kv["selfDual"], "true");
}

#[test]
fn build_rejects_a_parameter_the_construction_never_reads() {
    let out = run(&[
        "build", "cor3", "--r", "151", "--u", "152", "--v", "2", "--w", "20", "--s", "11",
        "--s-prime", "10", "--t", "1", "--f", "2",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("--s-prime"));
}

#[test]
fn build_rejects_failed_hypothesis_with_exit_two() {
    // l2 exceeding l/2 breaks a stated hypothesis, so this is a validation
    // refusal rather than a verification failure.
    let out = run(&[
        "build", "thm3", "--r", "19", "--l", "18", "--s", "0", "--l1", "0", "--l2", "10",
    ]);
    assert_eq!(code(&out), 2);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("hypothesis=fail"));
}

#[test]
fn nonuniform_character_surfaces_as_verification_failure() {
    let out = run(&[
        "build", "thm3", "--r", "19", "--l", "18", "--s", "0", "--l1", "8", "--l2", "6",
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr_text(&out));
    let kv = stdout_map(&out);
    assert_eq!(kv["length"], "288");
    assert_eq!(kv["characterUniform"], "false");
    assert_eq!(kv["characterPlus"], "163");
    assert_eq!(kv["characterMinus"], "124");
}

#[test]
fn worked_example_mismatch_carries_a_note() {
    let out = run(&[
        "build", "cor1", "--r", "19", "--u", "20", "--v", "18", "--s", "2", "--s-prime", "10",
        "--t", "1",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let kv = stdout_map(&out);
    assert_eq!(kv["length"], "230");
    assert!(kv["note"].contains("314"));
    assert!(kv["note"].contains("230"));
    assert_eq!(kv["selfDual"], "true");
}

fn build_example_two_matrix(path: &Path) {
    let out = run(&[
        "build",
        "thm4",
        "--r",
        "19",
        "--u",
        "20",
        "--v",
        "18",
        "--s",
        "9",
        "--s-prime",
        "10",
        "--t",
        "2",
        "--emit",
        "matrix",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
}

#[test]
fn emitted_matrix_verifies_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex2.mat");
    build_example_two_matrix(&path);

    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let kv = stdout_map(&out);
    assert_eq!(kv["n"], "310");
    assert_eq!(kv["k"], "155");
    assert_eq!(kv["rowsMatchStructure"], "true");
    assert_eq!(kv["selfDual"], "true");
}

#[test]
fn bit_flip_breaks_the_checksum_and_reads_as_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex2.mat");
    build_example_two_matrix(&path);

    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("extended=0", "extended=1", 1);
    assert_ne!(text, tampered);
    std::fs::write(&path, tampered).unwrap();

    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr_text(&out).contains("checksum"));
}

#[test]
fn checksum_valid_but_wrong_rows_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex2.mat");
    build_example_two_matrix(&path);

    // Corrupt one matrix entry, then restore checksum validity so the file
    // parses cleanly and only the structural re-derivation can catch it.
    let text = std::fs::read_to_string(&path).unwrap();
    let body_end = text.rfind("sha256=").unwrap();
    let mut body = text[..body_end].to_string();
    let trimmed_len = body.trim_end_matches('\n').len();
    let row_start = body[..trimmed_len].rfind('\n').map(|i| i + 1).unwrap_or(0);
    let last_row = body[row_start..trimmed_len].to_string();
    let mut fields: Vec<&str> = last_row.split_whitespace().collect();
    let swapped = if fields[0] == "1" { "2" } else { "1" };
    fields[0] = swapped;
    let patched = fields.join(" ") + "\n";
    body.truncate(row_start);
    body.push_str(&patched);
    let digest = Sha256::digest(body.as_bytes());
    let rewritten = format!("{body}sha256={digest:x}\n");
    std::fs::write(&path, rewritten).unwrap();

    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr_text(&out));
    assert!(stderr_text(&out).contains("rows"));
}

#[test]
fn ratio_rejects_fields_congruent_to_one() {
    let out = run(&["ratio", "--r", "13"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("3 mod 4"));
}

#[test]
fn ratio_prints_two_decimal_percentage() {
    let out = run(&["ratio", "--r", "19"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let kv = stdout_map(&out);
    assert_eq!(kv["N"], "153");
    assert_eq!(kv["ratio"], "84.76%");
}

#[test]
fn enumerate_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let many = dir.path().join("many.csv");

    let out = run(&["--threads", "1", "enumerate", "--r", "19", "--out", one.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let out = grssd()
        .env("GRSSD_THREADS", "7")
        .args(["enumerate", "--r", "19", "--out", many.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let kv = stdout_map(&out);
    assert_eq!(kv["N"], "153");
    let summary: serde_json::Value = serde_json::from_str(&kv["summary"]).unwrap();
    assert_eq!(summary["perClass"]["2"], 100);

    let a = std::fs::read(&one).unwrap();
    let b = std::fs::read(&many).unwrap();
    assert_eq!(a, b, "census output must not depend on scheduling");
}

#[test]
fn self_test_passes_and_stays_quiet_on_stdout_keys() {
    let out = run(&["self-test"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
    let kv = stdout_map(&out);
    assert_eq!(kv["selfTest"], "pass");
}

#[test]
fn injected_fault_exits_four_and_names_the_property() {
    let out = run(&["self-test", "--inject-delta-sign-error"]);
    assert_eq!(code(&out), 4);
    let kv = stdout_map(&out);
    assert_eq!(kv["selfTest"], "fail");
    assert_eq!(kv["firstFailure"], "lemma1-delta-factorization");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("grssd.conf");
    std::fs::write(&conf, "threads = 2\nseed = 7\n# comment\nsamples = 3\n").unwrap();
    let out = run(&["--config", conf.to_str().unwrap(), "ratio", "--r", "19"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("grssd.conf");
    std::fs::write(&conf, "bogus = 1\n").unwrap();
    let out = run(&["--config", conf.to_str().unwrap(), "ratio", "--r", "19"]);
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("bogus"));
}

#[test]
fn missing_config_file_is_malformed_input() {
    let out = run(&["--config", "/nonexistent/grssd.conf", "ratio", "--r", "19"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn unparseable_thread_env_is_a_validation_error() {
    let out = grssd()
        .env("GRSSD_THREADS", "zebra")
        .args(["ratio", "--r", "19"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr_text(&out).contains("GRSSD_THREADS"));
}

#[test]
fn explicit_flag_outranks_thread_env() {
    // A bad env value must not matter when --threads is given.
    let out = grssd()
        .env("GRSSD_THREADS", "zebra")
        .args(["--threads", "2", "ratio", "--r", "19"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));
}

#[test]
fn zero_threads_is_refused() {
    let out = run(&["--threads", "0", "ratio", "--r", "19"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn evalset_emission_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex4.set");
    let out = run(&[
        "build", "thm5", "--r", "19", "--u", "20", "--v", "36", "--s", "2", "--s-prime", "4",
        "--t", "7", "--emit", "set", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr_text(&out));

    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = grssd::evalsets::read_evalset(&text).unwrap();
    assert_eq!(parsed.q, 361);
    assert_eq!(parsed.tag, "thm5");
    assert_eq!(parsed.elements.len(), 123);
}
