//! Line-oriented text format for graph sequences.
//!
//! ```text
//! n B horizon
//! 1-2 2-3
//! 2-3
//! ...
//! ```
//!
//! One line per step, edges as `i-j` pairs with 1-based node labels.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use super::{GraphSequence, GraphSnapshot};
use crate::error::{Error, Result};

pub fn write_sequence<W: Write>(seq: &GraphSequence, mut out: W) -> Result<()> {
    writeln!(out, "{} {} {}", seq.node_count(), seq.window(), seq.len())?;
    let mut line = String::new();
    for g in seq.snapshots() {
        line.clear();
        for (idx, &(i, j)) in g.edges().iter().enumerate() {
            if idx > 0 {
                line.push(' ');
            }
            write!(line, "{}-{}", i + 1, j + 1).expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn to_text(seq: &GraphSequence) -> String {
    let mut buf = Vec::new();
    write_sequence(seq, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn read_sequence<R: Read>(input: R) -> Result<GraphSequence> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))??;
    let fields: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(1, format!("bad header `{header}`: {e}")))?;
    let [n, window, horizon] = fields[..] else {
        return Err(parse_err(1, "header must be `n B horizon`"));
    };
    let mut snapshots = Vec::with_capacity(horizon);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        if line.trim().is_empty() && snapshots.len() == horizon {
            continue;
        }
        let mut edges = Vec::new();
        for tok in line.split_whitespace() {
            let (a, b) = tok
                .split_once('-')
                .ok_or_else(|| parse_err(lineno, format!("edge `{tok}` is not `i-j`")))?;
            let parse = |s: &str| {
                s.parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| parse_err(lineno, format!("bad node label `{s}`")))
            };
            edges.push((parse(a)? - 1, parse(b)? - 1));
        }
        let g = GraphSnapshot::new(n, edges).map_err(|e| parse_err(lineno, e.to_string()))?;
        snapshots.push(g);
    }
    if snapshots.len() != horizon {
        return Err(parse_err(
            snapshots.len() + 2,
            format!("expected {horizon} steps, found {}", snapshots.len()),
        ));
    }
    GraphSequence::new(window, snapshots)
}
