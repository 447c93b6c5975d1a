//! The alist sparse-matrix text format.
//!
//! ```text
//! n m                      columns, rows
//! max_col_deg max_row_deg
//! col_deg[0] ... col_deg[n-1]
//! row_deg[0] ... row_deg[m-1]
//! n lines: 1-based row indices of each column, zero padded
//! m lines: 1-based column indices of each row, zero padded
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::LdpcCode;
use crate::error::{Error, Result};

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as integers, with its 1-based line number.
    fn next_ints(&mut self, section: &str) -> Result<(usize, Vec<usize>)> {
        loop {
            let Some((i, line)) = self.iter.next() else {
                return Err(Error::Alist {
                    line: 0,
                    msg: format!("unexpected end of file, missing {section}"),
                });
            };
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Alist {
                    line: i + 1,
                    msg: format!("{section}: {e}"),
                })?;
            return Ok((i + 1, vals));
        }
    }
}

fn expect_len(line: usize, section: &str, vals: &[usize], len: usize) -> Result<()> {
    if vals.len() != len {
        return Err(Error::Alist {
            line,
            msg: format!("{section}: expected {len} values, found {}", vals.len()),
        });
    }
    Ok(())
}

/// Reads one adjacency line: `deg` 1-based indices in `1..=bound`, then only
/// zero padding up to `max_deg` entries.
fn adjacency(
    line: usize,
    section: &str,
    vals: &[usize],
    deg: usize,
    max_deg: usize,
    bound: usize,
) -> Result<Vec<usize>> {
    let err = |msg: String| Error::Alist {
        line,
        msg: format!("{section}: {msg}"),
    };
    if vals.len() < deg || vals.len() > max_deg {
        return Err(err(format!(
            "{} entries for degree {deg} (max {max_deg})",
            vals.len()
        )));
    }
    let (idx, pad) = vals.split_at(deg);
    if pad.iter().any(|&v| v != 0) {
        return Err(err(
            "degree-list mismatch: non-zero entry past the degree".into()
        ));
    }
    idx.iter()
        .map(|&v| {
            if v == 0 || v > bound {
                Err(err(format!("index {v} out of range 1..={bound}")))
            } else {
                Ok(v - 1)
            }
        })
        .collect()
}

pub fn parse_alist(text: &str) -> Result<LdpcCode> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
    };
    let (l, dims) = lines.next_ints("dimensions")?;
    expect_len(l, "dimensions", &dims, 2)?;
    let (n, m) = (dims[0], dims[1]);
    if n == 0 || m == 0 {
        return Err(Error::Alist {
            line: l,
            msg: "zero dimension".into(),
        });
    }
    let (l, maxes) = lines.next_ints("maximum degrees")?;
    expect_len(l, "maximum degrees", &maxes, 2)?;
    let (max_col, max_row) = (maxes[0], maxes[1]);
    let (l, col_deg) = lines.next_ints("column degrees")?;
    expect_len(l, "column degrees", &col_deg, n)?;
    if col_deg.iter().max() != Some(&max_col) {
        return Err(Error::Alist {
            line: l,
            msg: "column degrees disagree with maximum".into(),
        });
    }
    let (l, row_deg) = lines.next_ints("row degrees")?;
    expect_len(l, "row degrees", &row_deg, m)?;
    if row_deg.iter().max() != Some(&max_row) {
        return Err(Error::Alist {
            line: l,
            msg: "row degrees disagree with maximum".into(),
        });
    }

    let mut vars = Vec::with_capacity(n);
    for &deg in &col_deg {
        let (l, vals) = lines.next_ints("column index lists")?;
        vars.push(adjacency(l, "column index list", &vals, deg, max_col, m)?);
    }
    let mut checks = Vec::with_capacity(m);
    let mut last_line = 0;
    for &deg in &row_deg {
        let (l, vals) = lines.next_ints("row index lists")?;
        checks.push(adjacency(l, "row index list", &vals, deg, max_row, n)?);
        last_line = l;
    }

    // Both halves must describe the same matrix.
    let mut from_rows = vec![Vec::new(); n];
    for (r, row) in checks.iter().enumerate() {
        for &c in row {
            from_rows[c].push(r);
        }
    }
    for (c, (a, b)) in vars.iter().zip(&from_rows).enumerate() {
        let mut a = a.clone();
        a.sort_unstable();
        if a != *b {
            return Err(Error::Alist {
                line: last_line,
                msg: format!("column {} list disagrees with the row lists", c + 1),
            });
        }
    }
    LdpcCode::from_lists(n, checks, vars).map_err(|e| Error::Alist {
        line: last_line,
        msg: e.to_string(),
    })
}

pub fn load_alist(path: &Path) -> Result<LdpcCode> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_alist(&text)
}

fn push_line(out: &mut String, vals: impl IntoIterator<Item = usize>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

pub fn write_alist(code: &LdpcCode) -> String {
    let max_col = code.vars().iter().map(Vec::len).max().unwrap_or(0);
    let max_row = code.checks().iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    push_line(&mut out, [code.n(), code.m()]);
    push_line(&mut out, [max_col, max_row]);
    push_line(&mut out, code.vars().iter().map(Vec::len));
    push_line(&mut out, code.checks().iter().map(Vec::len));
    for col in code.vars() {
        push_line(
            &mut out,
            col.iter()
                .map(|r| r + 1)
                .chain(std::iter::repeat_n(0, max_col - col.len())),
        );
    }
    for row in code.checks() {
        push_line(
            &mut out,
            row.iter()
                .map(|c| c + 1)
                .chain(std::iter::repeat_n(0, max_row - row.len())),
        );
    }
    out
}

pub fn save_alist(code: &LdpcCode, path: &Path) -> Result<()> {
    std::fs::write(path, write_alist(code)).map_err(|e| Error::io(path, e))
}
