use std::io::{BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};
use std::thread;

const BIN: &str = env!("CARGO_BIN_EXE_zkmech");
const GOLDEN: &str = include_str!("data/demo_ex1.txt");

fn zkmech(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

const DEMO: [&str; 11] =
    ["--toy", "--seed", "golden", "demo", "--example", "ex1", "--price", "5", "--H", "8", "--value"];

fn demo(value: &str) -> String {
    let mut args = DEMO.to_vec();
    args.push(value);
    let out = zkmech(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    stdout(&out)
}

#[test]
fn demo_no_trade_verifies() {
    let text = demo("3");
    let path = scratch("demo.txt");
    std::fs::write(&path, &text).unwrap();
    let out = zkmech(&["verify", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("outcome: trade=false payment=0"));
}

#[test]
fn golden_demo_is_reproduced_and_verifies() {
    if std::env::var_os("ZKMECH_BLESS").is_some() {
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/demo_ex1.txt"), demo("3")).unwrap();
        return;
    }
    assert_eq!(demo("3"), GOLDEN);
    let out = zkmech(&["verify", concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/demo_ex1.txt")]);
    assert_eq!(code(&out), 0);
}

#[test]
fn flipped_hex_digit_fails_with_phase() {
    let text = demo("6");
    for line in 1..text.lines().count() {
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let pos = lines[line].len() - 3;
        let c = lines[line].as_bytes()[pos];
        let flipped = if c == b'0' { '1' } else { '0' };
        lines[line].replace_range(pos..pos + 1, &flipped.to_string());
        let path = scratch(&format!("flip{line}.txt"));
        std::fs::write(&path, lines.join("\n")).unwrap();
        let out = zkmech(&["verify", path.to_str().unwrap()]);
        assert_eq!(code(&out), 1, "line {line}: {}", stdout(&out));
        assert!(stderr(&out).contains("phase") || stderr(&out).contains("line"), "{}", stderr(&out));
    }
}

#[test]
fn ic_lemma_report() {
    let out = zkmech(&["analyze", "ic-lemma", "--H", "8"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).lines().any(|l| l == "lemma_holds=true"));
}

#[test]
fn noise_and_groves_reports() {
    let out = zkmech(&["analyze", "noise", "--alpha", "0.9", "--eps", "0.1"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("holds=true"));
    let out = zkmech(&["analyze", "noise", "--alpha", "0.5", "--eps", "0.1"]);
    assert_eq!(code(&out), 2);
    let out = zkmech(&["--seed", "t", "analyze", "groves", "--n", "3", "--instances", "20"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("exact=true"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&zkmech(&["demo", "--example", "ex9", "--value", "1"])), 2);
    assert_eq!(code(&zkmech(&["--toy", "demo", "--example", "ex1", "--price", "9", "--H", "8", "--value", "1"])), 2);
    assert_eq!(code(&zkmech(&["--toy", "demo", "--example", "ex1", "--price", "1", "--H", "6", "--value", "1"])), 2);
    assert_eq!(code(&zkmech(&["--toy", "demo", "--example", "ex3", "--s1", "5", "--s2", "2", "--value", "1"])), 2);
    assert_eq!(code(&zkmech(&["--toy", "demo", "--example", "ex2", "--price", "1", "--value", "1,1"])), 2);
    assert_eq!(code(&zkmech(&["verify", "/nonexistent/transcript"])), 2);
    assert_eq!(code(&zkmech(&["bogus"])), 2);
}

#[test]
fn generated_group_file_is_usable() {
    let path = scratch("group.txt");
    let out = zkmech(&["--seed", "cli", "gen-params", "--bits", "64", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let group = path.to_str().unwrap();
    let t = scratch("group-demo.txt");
    let args = [
        "--group",
        group,
        "demo",
        "--example",
        "ex3",
        "--s1",
        "2",
        "--s2",
        "5",
        "--value",
        "7",
        "--out",
        t.to_str().unwrap(),
    ];
    let out = zkmech(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("payment=2"));
    assert_eq!(code(&zkmech(&["--group", group, "verify", t.to_str().unwrap()])), 0);
    assert_eq!(code(&zkmech(&["--toy", "verify", t.to_str().unwrap()])), 1);
}

/// Starts a one-session seller on an ephemeral port and returns its address.
fn spawn_seller(extra: &[&str]) -> (Child, String) {
    let mut args = vec!["--toy", "--seed", "net", "seller", "--listen", "127.0.0.1:0", "--sessions", "1"];
    args.extend_from_slice(extra);
    let mut child = Command::new(BIN).args(&args).stderr(Stdio::piped()).spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.as_mut().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("listen banner").to_string();
    (child, addr)
}

#[test]
fn tcp_session_matches_demo() {
    let (mut seller, addr) = spawn_seller(&["--example", "ex3", "--s1", "2", "--s2", "5", "--H", "8"]);
    let out_path = scratch("tcp.txt");
    let out = zkmech(&[
        "--toy",
        "--seed",
        "net",
        "buyer",
        "--example",
        "ex3",
        "--H",
        "8",
        "--value",
        "7",
        "--connect",
        &addr,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(seller.wait().unwrap().success());
    let demo =
        zkmech(&["--toy", "--seed", "net", "demo", "--example", "ex3", "--s1", "2", "--s2", "5", "--value", "7"]);
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), stdout(&demo));
}

#[test]
fn interactive_buyer_over_tcp() {
    let (mut seller, addr) = spawn_seller(&["--example", "ex1", "--price", "5", "--H", "8"]);
    let mut buyer = Command::new(BIN)
        .args(["--toy", "buyer", "--example", "ex1", "--H", "8", "--interactive", "--connect", &addr])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    buyer.stdin.take().unwrap().write_all(b"6\n").unwrap();
    let out = buyer.wait_with_output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("enter value"));
    assert!(stdout(&out).contains("outcome: trade=true payment=5"));
    assert!(seller.wait().unwrap().success());
}

#[test]
fn stdio_pipes_between_processes() {
    let spawn = |args: &[&str]| {
        Command::new(BIN)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap()
    };
    let mut seller =
        spawn(&["--toy", "--seed", "p", "seller", "--example", "ex4", "--price", "2", "--H", "4", "--stdio"]);
    let mut buyer =
        spawn(&["--toy", "--seed", "p", "buyer", "--example", "ex4", "--H", "4", "--value", "3", "--stdio"]);
    let pump = |mut from: Box<dyn Read + Send>, mut to: Box<dyn Write + Send>| {
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            loop {
                match from.read(&mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(n) => {
                        if to.write_all(&buf[..n]).and_then(|_| to.flush()).is_err() {
                            break;
                        }
                    }
                }
            }
        })
    };
    let a = pump(Box::new(seller.stdout.take().unwrap()), Box::new(buyer.stdin.take().unwrap()));
    let b = pump(Box::new(buyer.stdout.take().unwrap()), Box::new(seller.stdin.take().unwrap()));
    assert!(seller.wait().unwrap().success());
    let status = buyer.wait().unwrap();
    let mut err = String::new();
    buyer.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    assert!(status.success(), "{err}");
    assert!(err.contains("verified"));
    a.join().unwrap();
    b.join().unwrap();
}
