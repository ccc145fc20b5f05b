//! Plain-text dump of a tensor train.
//!
//! ```text
//! tt 3
//! core 1 2 2
//! 1.0 0.0 0.0 1.0
//! ...
//! ```
//!
//! Each `core l n r` header is followed by one line with the `l * n * r`
//! entries in row-major `(l, n, r)` order, printed with shortest
//! round-trip precision.

use std::io::{self, Write};

use ndarray::Array3;

use crate::error::{Result, TtError};
use crate::tensor::{Core, TensorTrain};

pub fn write_tt<W: Write>(tt: &TensorTrain, mut out: W) -> io::Result<()> {
    writeln!(out, "tt {}", tt.order())?;
    for core in tt.cores() {
        let (l, n, r) = core.data().dim();
        writeln!(out, "core {l} {n} {r}")?;
        let line: Vec<String> = core.data().iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn to_string(tt: &TensorTrain) -> String {
    let mut buf = Vec::new();
    write_tt(tt, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn parse_tt(text: &str) -> Result<TensorTrain> {
    let bad = |msg: &str| TtError::Shape(format!("malformed tensor-train dump: {msg}"));
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| bad("empty input"))?;
    let order: usize = header
        .strip_prefix("tt ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad("missing `tt <order>` header"))?;
    let mut cores = Vec::with_capacity(order);
    for _ in 0..order {
        let dims: Vec<usize> = lines
            .next()
            .and_then(|l| l.strip_prefix("core "))
            .map(|l| l.split_whitespace().filter_map(|x| x.parse().ok()).collect())
            .ok_or_else(|| bad("missing `core l n r` line"))?;
        let [l, n, r] = dims[..] else {
            return Err(bad("core header needs three dimensions"));
        };
        let values = lines
            .next()
            .ok_or_else(|| bad("missing core data"))?
            .split_whitespace()
            .map(|x| x.parse::<f64>().map_err(|e| bad(&e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let data = Array3::from_shape_vec((l, n, r), values).map_err(|e| bad(&e.to_string()))?;
        cores.push(Core::new(data)?);
    }
    TensorTrain::new(cores)
}
