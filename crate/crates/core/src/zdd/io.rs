//! Plain-text ZDD files.
//!
//! ```text
//! zdd <d> <n_nonterminal>
//! <id> <label> <lo> <hi>      (n lines, ids ascending from 2)
//! root <id>
//! ```

use std::io::{BufRead, Write};

use super::{Node, NodeId, Zdd};
use crate::error::{Error, Result};

/// Reads a ZDD and rejects it unless it is ordered, reduced and reachable.
pub fn read_zdd<R: BufRead>(reader: R) -> Result<Zdd> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));

    let (lineno, header) = next_line(&mut lines, 0, "missing header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (arms, count) = match fields.as_slice() {
        ["zdd", d, n] => (parse_num(d, lineno)?, parse_num(n, lineno)?),
        _ => return Err(Error::parse(lineno, "expected `zdd <d> <n_nonterminal>`")),
    };
    if arms == 0 {
        return Err(Error::parse(lineno, "arm count must be positive"));
    }

    let mut nodes = Vec::with_capacity(count);
    let mut last = lineno;
    for k in 0..count {
        let (lineno, line) = next_line(&mut lines, last, "missing vertex line")?;
        last = lineno;
        let f: Vec<&str> = line.split_whitespace().collect();
        let [id, label, lo, hi] = f.as_slice() else {
            return Err(Error::parse(lineno, "expected `<id> <label> <lo> <hi>`"));
        };
        let id = parse_num(id, lineno)?;
        if id != k + 2 {
            return Err(Error::parse(
                lineno,
                format!("vertex ids must ascend from 2: expected {}, found {id}", k + 2),
            ));
        }
        let label = parse_num(label, lineno)?;
        if label == 0 || label > arms {
            return Err(Error::parse(lineno, format!("label {label} outside 1..={arms}")));
        }
        let lo = parse_num(lo, lineno)?;
        let hi = parse_num(hi, lineno)?;
        for c in [lo, hi] {
            if c >= id {
                return Err(Error::parse(
                    lineno,
                    format!("vertex {id} references child {c}, which is not a smaller id"),
                ));
            }
        }
        nodes.push(Node {
            label: label as u32,
            lo: NodeId(lo as u32),
            hi: NodeId(hi as u32),
        });
    }

    let (lineno, line) = next_line(&mut lines, last, "missing `root` line")?;
    let root = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["root", r] => parse_num(r, lineno)?,
        _ => return Err(Error::parse(lineno, "expected `root <id>`")),
    };
    if let Some((lineno, _)) = lines.next() {
        return Err(Error::parse(lineno, "trailing content after `root` line"));
    }
    if root > count + 1 {
        return Err(Error::parse(lineno, format!("root {root} does not exist")));
    }

    let zdd = Zdd::from_parts(arms, nodes, NodeId(root as u32))
        .map_err(|e| Error::parse(lineno, e.to_string()))?;
    let report = zdd.validate();
    if !report.is_valid() {
        return Err(Error::InvalidZdd(report.to_string()));
    }
    Ok(zdd)
}

/// Writes `zdd` in the text format read by [`read_zdd`].
pub fn write_zdd<W: Write>(zdd: &Zdd, mut out: W) -> Result<()> {
    writeln!(out, "zdd {} {}", zdd.arms(), zdd.nodes().len())?;
    for (id, n) in zdd.iter() {
        writeln!(out, "{} {} {} {}", id, n.label, n.lo, n.hi)?;
    }
    writeln!(out, "root {}", zdd.root())?;
    Ok(())
}

fn next_line<I>(lines: &mut I, prev: usize, what: &str) -> Result<(usize, String)>
where
    I: Iterator<Item = (usize, std::io::Result<String>)>,
{
    match lines.next() {
        Some((n, Ok(s))) => Ok((n, s)),
        Some((_, Err(e))) => Err(e.into()),
        None => Err(Error::parse(prev + 1, what)),
    }
}

fn parse_num(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("`{s}` is not a nonnegative integer")))
}
