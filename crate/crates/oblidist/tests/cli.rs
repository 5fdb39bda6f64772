//! End-to-end checks of the command-line interface: exit codes, file
//! round-trips, and the full generate -> run -> compare-traces pipeline.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oblidist"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oblidist-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_instance(path: &Path, n: usize, seed: u64, m: usize) {
    use oblidist::mem::{SimMemory, Word, F_POS_MARK, F_WORD_MARK};
    use oblidist::rng::SplitMix64;
    let mut rng = SplitMix64::new(seed);
    let mut words: Vec<Word> = (0..n).map(|i| Word::real(i as u64)).collect();
    for i in rng.choose(n, m) {
        words[i].set(F_WORD_MARK, true);
    }
    for i in rng.choose(n, m) {
        words[i].set(F_POS_MARK, true);
    }
    let mem = SimMemory::from_words(words, 64);
    oblidist::io::write_array(path, &mem).unwrap();
}

#[test]
fn trace_compare_identical_files_exits_zero() {
    let dir = tmp_dir("cmp");
    let trace = dir.join("t.trace");
    use oblidist::mem::{AccessTrace, TraceRecord};
    let mut t = AccessTrace::default();
    t.records.push(TraceRecord::new(false, 3));
    t.records.push(TraceRecord::new(true, 4));
    oblidist::io::write_trace_binary(&trace, &t).unwrap();
    let status = bin().args(["trace", "compare"]).arg(&trace).arg(&trace).status().unwrap();
    assert_eq!(status.code(), Some(0));
    // A differing trace exits 2.
    let other = dir.join("u.trace");
    t.records.push(TraceRecord::new(false, 9));
    oblidist::io::write_trace_binary(&other, &t).unwrap();
    let status = bin().args(["trace", "compare"]).arg(&trace).arg(&other).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_expander_exhaustive_on_complete_graph_at_epsilon_zero() {
    let dir = tmp_dir("k44");
    let graph = dir.join("k44.obxg");
    let status = bin()
        .args(["gen-expander", "--n", "4", "--epsilon", "0.9", "--base", "complete"])
        .arg("--out")
        .arg(&graph)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    // Zero-deviation graph: holds even at epsilon 0.
    let status = bin()
        .args(["verify-expander", "--epsilon", "0", "--exhaustive", "--in"])
        .arg(&graph)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn full_pipeline_distribute_traces_identical_across_inputs() {
    let dir = tmp_dir("pipe");
    let a = dir.join("a.obxa");
    let b = dir.join("b.obxa");
    write_instance(&a, 256, 11, 30);
    write_instance(&b, 256, 22, 77);
    let ta = dir.join("a.trace");
    let tb = dir.join("b.trace");
    for (input, trace) in [(&a, &ta), (&b, &tb)] {
        let status = bin()
            .args(["trace", "record", "--algo", "distribute", "--in"])
            .arg(input)
            .arg("--out")
            .arg(trace)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let status = bin().args(["trace", "compare"]).arg(&ta).arg(&tb).status().unwrap();
    assert_eq!(status.code(), Some(0), "distribution traces must be input-independent");
}

#[test]
fn tight_compact_cli_moves_marked_to_prefix() {
    let dir = tmp_dir("tight");
    let input = dir.join("in.obxa");
    let output = dir.join("out.obxa");
    write_instance(&input, 256, 5, 0);
    // Mark words only (no position marks) for tight compaction.
    let mut mem = oblidist::io::read_array(&input).unwrap();
    use oblidist::mem::F_WORD_MARK;
    for i in [3usize, 77, 200] {
        let mut w = mem.peek(i);
        w.set(F_WORD_MARK, true);
        mem.poke(i, w);
    }
    oblidist::io::write_array(&input, &mem).unwrap();
    let status = bin()
        .args(["tight-compact", "--in"])
        .arg(&input)
        .arg("--out")
        .arg(&output)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let out = oblidist::io::read_array(&output).unwrap();
    for i in 0..256 {
        assert_eq!(out.peek(i).word_marked(), i < 3, "position {i}");
    }
}

#[test]
fn compact_cli_writes_script_and_trace() {
    let dir = tmp_dir("compact");
    let input = dir.join("in.obxa");
    write_instance(&input, 512, 7, 0);
    let mut mem = oblidist::io::read_array(&input).unwrap();
    use oblidist::mem::F_WORD_MARK;
    for i in [400usize, 501] {
        let mut w = mem.peek(i);
        w.set(F_WORD_MARK, true);
        mem.poke(i, w);
    }
    oblidist::io::write_array(&input, &mem).unwrap();
    let output = dir.join("out.obxa");
    let trace = dir.join("run.trace");
    let script = dir.join("run.script");
    let status = bin()
        .args(["compact", "--mode", "small", "--in"])
        .arg(&input)
        .arg("--out")
        .arg(&output)
        .arg("--emit-trace")
        .arg(&trace)
        .arg("--script")
        .arg(&script)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let out = oblidist::io::read_array(&output).unwrap();
    let marked: Vec<usize> = (0..512).filter(|&i| out.peek(i).word_marked()).collect();
    assert!(marked.iter().all(|&i| i < 256), "marked at {marked:?}");
    // Script and trace files parse back.
    let records = oblidist::io::read_script_records(&script).unwrap();
    assert!(!records.is_empty());
    let t = oblidist::io::read_trace(&trace).unwrap();
    assert!(!t.is_empty());
}

#[test]
fn malformed_file_rejected_with_code_two() {
    let dir = tmp_dir("bad");
    let junk = dir.join("junk.obxa");
    std::fs::write(&junk, b"not an array").unwrap();
    let out = dir.join("out.obxa");
    let status = bin()
        .args(["distribute", "--in"])
        .arg(&junk)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bench_writes_csv() {
    let dir = tmp_dir("bench");
    let csv = dir.join("bench.csv");
    let status = bin()
        .args(["bench", "--algos", "bitonic", "--sizes", "256,512", "--csv"])
        .arg(&csv)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("algo,n,accesses,seconds,params_hash"));
    assert_eq!(text.lines().count(), 3);
}
