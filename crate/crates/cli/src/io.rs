//! Delimited-text readers and writers.
//!
//! Curve files start with the header `x,y,d` (or `x,y`, in which case
//! derivatives are estimated) followed by one row per knot. Surface files
//! start with `m n`, then a line of `m` x-knots, a line of `n` y-knots, then
//! `m * n` rows `i j z [zx zy]` with zero-based indices. Blank lines and
//! lines starting with `#` are skipped everywhere.

use std::fs;
use std::io::Write;
use std::path::Path;

use rqfractal::ifs::KnotVector;
use rqfractal::spline::HermiteCurveData;
use rqfractal::surface::SurfaceGridData;

use crate::{CliError, Result};

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let err = |source| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

struct Lines<'a> {
    path: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(path: &'a str, text: &'a str) -> Self {
        Self {
            path,
            inner: text.lines().enumerate(),
        }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Parse {
            path: self.path.to_string(),
            line,
            message: message.into(),
        }
    }

    /// Next meaningful line as `(line number, trimmed text)`.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        self.inner.by_ref().find_map(|(k, l)| {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then_some((k + 1, t))
        })
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let end = self.inner.clone().count();
        self.next_line()
            .ok_or_else(|| self.error(end + 1, format!("unexpected end of file, expected {what}")))
    }
}

fn fields(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
}

fn numbers(lines: &Lines, line: usize, text: &str) -> Result<Vec<f64>> {
    fields(text)
        .map(|f| match f.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(lines.error(line, format!("expected a finite number, found `{f}`"))),
        })
        .collect()
}

fn strictly_increasing(lines: &Lines, rows: &[(usize, f64)], what: &str) -> Result<()> {
    for w in rows.windows(2) {
        if w[1].1 <= w[0].1 {
            let kind = if w[1].1 == w[0].1 {
                "duplicate"
            } else {
                "decreasing"
            };
            return Err(lines.error(
                w[1].0,
                format!(
                    "{kind} {what} {} (previous {} on line {})",
                    w[1].1, w[0].1, w[0].0
                ),
            ));
        }
    }
    Ok(())
}

pub fn parse_curve(path: &str, text: &str) -> Result<HermiteCurveData> {
    let mut lines = Lines::new(path, text);
    let (hl, header) = lines.expect_line("header `x,y,d` or `x,y`")?;
    let names: Vec<&str> = fields(header).collect();
    let with_d = match names.as_slice() {
        ["x", "y", "d"] => true,
        ["x", "y"] => false,
        _ => {
            return Err(lines.error(
                hl,
                format!("expected header `x,y,d` or `x,y`, found `{header}`"),
            ))
        }
    };
    let width = if with_d { 3 } else { 2 };
    let mut xs = Vec::new();
    let mut y = Vec::new();
    let mut d = Vec::new();
    while let Some((k, row)) = lines.next_line() {
        let v = numbers(&lines, k, row)?;
        if v.len() != width {
            return Err(lines.error(k, format!("expected {width} columns, found {}", v.len())));
        }
        xs.push((k, v[0]));
        y.push(v[1]);
        if with_d {
            d.push(v[2]);
        }
    }
    if xs.len() < 3 {
        return Err(lines.error(hl, format!("need at least 3 data rows, found {}", xs.len())));
    }
    strictly_increasing(&lines, &xs, "knot")?;
    let knots = KnotVector::new(xs.iter().map(|r| r.1).collect())?;
    Ok(if with_d {
        HermiteCurveData::new(knots, y, d)?
    } else {
        HermiteCurveData::from_values(knots, y)?
    })
}

pub fn parse_surface(path: &str, text: &str) -> Result<SurfaceGridData> {
    let mut lines = Lines::new(path, text);
    let (hl, header) = lines.expect_line("header `m n`")?;
    let dims: Vec<usize> = fields(header)
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| lines.error(hl, format!("expected header `m n`, found `{header}`")))?;
    let [m, n] = dims[..] else {
        return Err(lines.error(hl, format!("expected header `m n`, found `{header}`")));
    };
    if m < 3 || n < 3 {
        return Err(lines.error(hl, format!("grid must be at least 3 x 3, found {m} x {n}")));
    }
    let mut axis = |count: usize, what: &str| -> Result<KnotVector> {
        let (k, row) = lines.expect_line(what)?;
        let v = numbers(&lines, k, row)?;
        if v.len() != count {
            return Err(lines.error(k, format!("expected {count} {what}, found {}", v.len())));
        }
        let rows: Vec<(usize, f64)> = v.iter().map(|&x| (k, x)).collect();
        strictly_increasing(&lines, &rows, what)?;
        Ok(KnotVector::new(v)?)
    };
    let x = axis(m, "x-knots")?;
    let y = axis(n, "y-knots")?;

    let mut z = vec![None; m * n];
    let mut zx = vec![0.0; m * n];
    let mut zy = vec![0.0; m * n];
    let mut with_partials = None;
    while let Some((k, row)) = lines.next_line() {
        let f: Vec<&str> = fields(row).collect();
        if f.len() != 3 && f.len() != 5 {
            return Err(lines.error(
                k,
                format!("expected `i j z [zx zy]`, found {} fields", f.len()),
            ));
        }
        let index = |s: &str, limit: usize, name: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(i) if i < limit => Ok(i),
                _ => Err(lines.error(k, format!("{name} index `{s}` outside 0..{limit}"))),
            }
        };
        let (i, j) = (index(f[0], m, "i")?, index(f[1], n, "j")?);
        let v = numbers(&lines, k, &f[2..].join(" "))?;
        let partials = v.len() == 3;
        if *with_partials.get_or_insert(partials) != partials {
            return Err(lines.error(k, "rows must all include partials or all omit them"));
        }
        let at = i * n + j;
        if z[at].is_some() {
            return Err(lines.error(k, format!("duplicate grid point ({i}, {j})")));
        }
        z[at] = Some(v[0]);
        if partials {
            zx[at] = v[1];
            zy[at] = v[2];
        }
    }
    if let Some(at) = z.iter().position(Option::is_none) {
        return Err(lines.error(hl, format!("missing grid point ({}, {})", at / n, at % n)));
    }
    let z: Vec<f64> = z.into_iter().map(Option::unwrap).collect();
    Ok(if with_partials == Some(true) {
        SurfaceGridData::new(x, y, z, zx, zy)?
    } else {
        SurfaceGridData::from_values(x, y, z)?
    })
}

/// Rows of numbers separated by commas or whitespace.
pub fn parse_rows(path: &str, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = Lines::new(path, text);
    let mut rows = Vec::new();
    while let Some((k, row)) = lines.next_line() {
        rows.push(numbers(&lines, k, row)?);
    }
    Ok(rows)
}

pub fn write_curve(data: &HermiteCurveData) -> String {
    let mut out = String::from("x,y,d\n");
    for ((x, y), d) in data
        .knots()
        .knots()
        .iter()
        .zip(data.values())
        .zip(data.derivatives())
    {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_num(*x),
            fmt_num(*y),
            fmt_num(*d)
        ));
    }
    out
}

pub fn write_surface(data: &SurfaceGridData) -> String {
    let join = |v: &[f64]| v.iter().map(|&a| fmt_num(a)).collect::<Vec<_>>().join(" ");
    let mut out = format!(
        "{} {}\n{}\n{}\n",
        data.nx(),
        data.ny(),
        join(data.x().knots()),
        join(data.y().knots())
    );
    for i in 0..data.nx() {
        for j in 0..data.ny() {
            out.push_str(&format!(
                "{i} {j} {} {} {}\n",
                fmt_num(data.z(i, j)),
                fmt_num(data.zx(i, j)),
                fmt_num(data.zy(i, j))
            ));
        }
    }
    out
}

/// Comma-separated table with a header row.
pub fn write_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(
            &row.iter()
                .map(|&v| fmt_num(v))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    out
}
