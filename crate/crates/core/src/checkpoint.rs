//! Versioned flat-text serialization for network parameters and optimizer
//! state.
//!
//! Layout:
//!
//! ```text
//! nncore-v1 <n_layers>
//! W <rows> <cols>
//! <rows lines of cols row-major decimal values>
//! b <len>
//! <len values on one line>
//! ...                      (repeated per layer)
//! ADAM <t>                 (optional section)
//! <first-moment blocks, same W/b layout>
//! <second-moment blocks, same W/b layout>
//! ```
//!
//! Values are written in Rust's shortest round-trip notation, so decode is
//! bit-exact.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::{AdamState, DenseLayer, NetworkParams};

const MAGIC: &str = "nncore-v1";

fn write_params(out: &mut String, params: &NetworkParams) {
    for layer in &params.layers {
        let _ = writeln!(out, "W {} {}", layer.out_dim, layer.in_dim);
        for row in layer.weights.chunks_exact(layer.in_dim) {
            let mut first = true;
            for w in row {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{w:?}");
                first = false;
            }
            out.push('\n');
        }
        let _ = writeln!(out, "b {}", layer.bias.len());
        let mut first = true;
        for b in &layer.bias {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{b:?}");
            first = false;
        }
        out.push('\n');
    }
}

/// Serialize parameters, optionally followed by their Adam state.
pub fn encode(params: &NetworkParams, adam: Option<&AdamState>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {}", params.layers.len());
    write_params(&mut out, params);
    if let Some(adam) = adam {
        let _ = writeln!(out, "ADAM {}", adam.t);
        write_params(&mut out, &adam.m);
        write_params(&mut out, &adam.v);
    }
    out
}

struct Lines<'a> {
    inner: core::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some(line) => {
                    self.lineno += 1;
                    if !line.trim().is_empty() {
                        return Ok(line.trim());
                    }
                }
                None => return Err(Error::Parse("unexpected end of checkpoint".into())),
            }
        }
    }
}

fn parse_values(line: &str, want: usize, lineno: usize) -> Result<Vec<f64>> {
    let vals: Result<Vec<f64>> = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad float {tok:?} on line {lineno}")))
        })
        .collect();
    let vals = vals?;
    if vals.len() != want {
        return Err(Error::Parse(format!(
            "expected {want} values on line {lineno}, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn read_params(lines: &mut Lines<'_>, n_layers: usize) -> Result<NetworkParams> {
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let header = lines.next()?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("W") {
            return Err(Error::Parse(format!("expected W header, got {header:?}")));
        }
        let rows: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad W rows".into()))?;
        let cols: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad W cols".into()))?;
        let mut weights = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines.next()?;
            weights.extend(parse_values(line, cols, lines.lineno)?);
        }
        let bheader = lines.next()?;
        let mut parts = bheader.split_whitespace();
        if parts.next() != Some("b") {
            return Err(Error::Parse(format!("expected b header, got {bheader:?}")));
        }
        let blen: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad b length".into()))?;
        if blen != rows {
            return Err(Error::Parse(format!("bias length {blen} != rows {rows}")));
        }
        let bias = parse_values(lines.next()?, blen, lines.lineno)?;
        layers.push(DenseLayer {
            in_dim: cols,
            out_dim: rows,
            weights,
            bias,
        });
    }
    // Adjacent layer dimensions must chain.
    for pair in layers.windows(2) {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::Parse("layer dimensions do not chain".into()));
        }
    }
    Ok(NetworkParams { layers })
}

/// Parse a checkpoint produced by [`encode`].
pub fn decode(text: &str) -> Result<(NetworkParams, Option<AdamState>)> {
    let mut lines = Lines {
        inner: text.lines(),
        lineno: 0,
    };
    let header = lines.next()?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(Error::Parse(format!("bad magic in header {header:?}")));
    }
    let n_layers: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse("bad layer count".into()))?;
    let params = read_params(&mut lines, n_layers)?;
    // Optional ADAM section.
    let mut adam = None;
    if let Ok(line) = lines.next() {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("ADAM") {
            return Err(Error::Parse(format!("expected ADAM sentinel, got {line:?}")));
        }
        let t: u64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad ADAM step counter".into()))?;
        let m = read_params(&mut lines, n_layers)?;
        let v = read_params(&mut lines, n_layers)?;
        for (a, b) in m.layers.iter().zip(&params.layers) {
            if a.in_dim != b.in_dim || a.out_dim != b.out_dim {
                return Err(Error::Parse("ADAM moment shapes do not mirror parameters".into()));
            }
        }
        adam = Some(AdamState { m, v, t });
    }
    Ok((params, adam))
}
