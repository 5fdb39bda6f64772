//! Versioned binary formats and JSON helpers.
//!
//! Graphs:   magic "OBXG", version u16, n_per_side u64, degree u32, then
//!           n_per_side * degree little-endian u32 slot targets.
//! Arrays:   magic "OBXA", version u16, n u64, word_bits u32, flags u32,
//!           then per word ceil(word_bits/8) payload bytes + 1 sideband byte
//!           (bit0 word-mark, bit1 position-mark, bit2 dummy).
//! Traces:   JSON lines {"op":"R"|"W","addr":N}, or compact binary with
//!           magic "OBXT", version u16, record count u64, then u64 records
//!           packed (addr << 1 | is_write).
//! Scripts:  magic "OBXS", version u16, record count u64, then records of
//!           (src u64, dst u64, applied u8).

use crate::compaction::CopyScript;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::BipartiteMultigraph;
use crate::mem::{AccessTrace, SimMemory, TraceRecord, Word, F_DUMMY, F_POS_MARK, F_WORD_MARK};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const FORMAT_VERSION: u16 = 1;

fn open_write(path: &Path) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

fn open_read(path: &Path) -> Result<BufReader<std::fs::File>> {
    Ok(BufReader::new(std::fs::File::open(path)?))
}

fn expect_magic(r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    if &buf != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&buf),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut ver = [0u8; 2];
    r.read_exact(&mut ver)?;
    let version = u16::from_le_bytes(ver);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn write_magic(w: &mut impl Write, magic: &[u8; 4]) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    Ok(())
}

// --- graphs -----------------------------------------------------------------

pub fn write_graph(path: &Path, g: &BipartiteMultigraph) -> Result<()> {
    let mut w = open_write(path)?;
    write_magic(&mut w, b"OBXG")?;
    w.write_all(&(g.n_per_side() as u64).to_le_bytes())?;
    w.write_all(&(g.degree() as u32).to_le_bytes())?;
    for &slot in g.slots() {
        w.write_all(&slot.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<BipartiteMultigraph> {
    let mut r = open_read(path)?;
    expect_magic(&mut r, b"OBXG")?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let degree = u32::from_le_bytes(b4) as usize;
    let mut adj = Vec::with_capacity(n * degree);
    for _ in 0..n * degree {
        r.read_exact(&mut b4)?;
        adj.push(u32::from_le_bytes(b4));
    }
    BipartiteMultigraph::from_adjacency(n, degree, adj)
}

// --- arrays ------------------------------------------------------------------

fn payload_bytes(word_bits: u32) -> usize {
    (word_bits as usize).div_ceil(8)
}

pub fn write_array(path: &Path, mem: &SimMemory) -> Result<()> {
    let mut w = open_write(path)?;
    write_magic(&mut w, b"OBXA")?;
    w.write_all(&(mem.len() as u64).to_le_bytes())?;
    w.write_all(&mem.word_bits().to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    let pb = payload_bytes(mem.word_bits());
    let mut buf = vec![0u8; pb];
    for word in mem.words() {
        buf.iter_mut().for_each(|b| *b = 0);
        let le = word.payload.to_le_bytes();
        let take = pb.min(8);
        buf[..take].copy_from_slice(&le[..take]);
        w.write_all(&buf)?;
        let side = (word.is(F_WORD_MARK) as u8)
            | (word.is(F_POS_MARK) as u8) << 1
            | (word.is(F_DUMMY) as u8) << 2;
        w.write_all(&[side])?;
    }
    Ok(())
}

pub fn read_array(path: &Path) -> Result<SimMemory> {
    let mut r = open_read(path)?;
    expect_magic(&mut r, b"OBXA")?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let word_bits = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?; // flags, reserved
    let pb = payload_bytes(word_bits);
    let mut words = Vec::with_capacity(n);
    let mut buf = vec![0u8; pb];
    for i in 0..n {
        r.read_exact(&mut buf)?;
        if buf[8.min(pb)..].iter().any(|&b| b != 0) {
            return Err(Error::Format(format!("payload at {i} exceeds 64 physical bits")));
        }
        let mut le = [0u8; 8];
        let take = pb.min(8);
        le[..take].copy_from_slice(&buf[..take]);
        let mut side = [0u8; 1];
        r.read_exact(&mut side)?;
        let mut word = Word::real(u64::from_le_bytes(le));
        word.set(F_WORD_MARK, side[0] & 1 != 0);
        word.set(F_POS_MARK, side[0] & 2 != 0);
        word.set(F_DUMMY, side[0] & 4 != 0);
        word.origin = i as u32;
        words.push(word);
    }
    Ok(SimMemory::from_words(words, word_bits))
}

// --- traces ------------------------------------------------------------------

pub fn write_trace_binary(path: &Path, trace: &AccessTrace) -> Result<()> {
    let mut w = open_write(path)?;
    write_magic(&mut w, b"OBXT")?;
    w.write_all(&(trace.records.len() as u64).to_le_bytes())?;
    for rec in &trace.records {
        w.write_all(&rec.0.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_trace_jsonl(path: &Path, trace: &AccessTrace) -> Result<()> {
    let mut w = open_write(path)?;
    for rec in &trace.records {
        writeln!(w, "{{\"op\":\"{}\",\"addr\":{}}}", rec.op(), rec.addr())?;
    }
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<AccessTrace> {
    let mut r = open_read(path)?;
    let mut head = [0u8; 4];
    if r.read_exact(&mut head).is_err() {
        return Ok(AccessTrace::default());
    }
    if &head == b"OBXT" {
        let mut ver = [0u8; 2];
        r.read_exact(&mut ver)?;
        if u16::from_le_bytes(ver) != FORMAT_VERSION {
            return Err(Error::Format("unsupported trace version".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut b8)?;
            records.push(TraceRecord(u64::from_le_bytes(b8)));
        }
        return Ok(AccessTrace { records });
    }
    // JSON lines; re-read from the start.
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)?;
        let op = value["op"].as_str().ok_or_else(|| Error::Format("missing op".into()))?;
        let addr =
            value["addr"].as_u64().ok_or_else(|| Error::Format("missing addr".into()))? as usize;
        records.push(TraceRecord::new(op == "W", addr));
    }
    Ok(AccessTrace { records })
}

// --- copy scripts --------------------------------------------------------------

pub fn write_script(path: &Path, script: &CopyScript) -> Result<()> {
    let mut w = open_write(path)?;
    write_magic(&mut w, b"OBXS")?;
    w.write_all(&(script.record_count() as u64).to_le_bytes())?;
    let mut err = None;
    script.for_each_record(|src, dst, applied| {
        if err.is_some() {
            return;
        }
        let mut do_write = || -> Result<()> {
            w.write_all(&(src as u64).to_le_bytes())?;
            w.write_all(&(dst as u64).to_le_bytes())?;
            w.write_all(&[applied as u8])?;
            Ok(())
        };
        if let Err(e) = do_write() {
            err = Some(e);
        }
    });
    err.map_or(Ok(()), Err)
}

/// Flat script records as (src, dst, applied); the reading side of the
/// script format, for inspection and cross-checks.
pub fn read_script_records(path: &Path) -> Result<Vec<(u64, u64, bool)>> {
    let mut r = open_read(path)?;
    expect_magic(&mut r, b"OBXS")?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let mut out = Vec::with_capacity(count);
    let mut b1 = [0u8; 1];
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        let src = u64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let dst = u64::from_le_bytes(b8);
        r.read_exact(&mut b1)?;
        out.push((src, dst, b1[0] != 0));
    }
    Ok(out)
}

// --- configs ---------------------------------------------------------------------

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_config(path: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(cfg)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_base, BaseId};
    use crate::mem::trace_equal;

    #[test]
    fn graph_round_trip() {
        let dir = std::env::temp_dir().join("oblidist-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.obxg");
        let g = build_base(16, &BaseId::SeededPermSum { degree: 4, seed: 3 }).unwrap();
        write_graph(&path, &g).unwrap();
        let back = read_graph(&path).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn array_round_trip_preserves_marks() {
        let dir = std::env::temp_dir().join("oblidist-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.obxa");
        let mut mem = SimMemory::new(4, 64);
        let mut w = Word::real(0xdead_beef);
        w.set(F_WORD_MARK, true);
        mem.poke(1, w);
        let mut d = Word::dummy();
        d.set(F_POS_MARK, true);
        mem.poke(2, d);
        write_array(&path, &mem).unwrap();
        let back = read_array(&path).unwrap();
        assert_eq!(back.len(), 4);
        assert!(back.peek(1).word_marked());
        assert_eq!(back.peek(1).payload, 0xdead_beef);
        assert!(back.peek(2).is_dummy() && back.peek(2).pos_marked());
    }

    #[test]
    fn trace_round_trip_both_formats() {
        let dir = std::env::temp_dir().join("oblidist-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let mut trace = AccessTrace::default();
        trace.records.push(TraceRecord::new(false, 5));
        trace.records.push(TraceRecord::new(true, 7));
        let bin = dir.join("t.trace");
        write_trace_binary(&bin, &trace).unwrap();
        assert!(trace_equal(&read_trace(&bin).unwrap(), &trace));
        let jsonl = dir.join("t.jsonl");
        write_trace_jsonl(&jsonl, &trace).unwrap();
        assert!(trace_equal(&read_trace(&jsonl).unwrap(), &trace));
    }
}
