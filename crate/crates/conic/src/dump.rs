//! Plain-text exchange format for cone programs (sparse triplets plus a cone
//! list), used for cross-checking against external solvers.
//!
//! ```text
//! conic-program v1
//! vars 2
//! offset 0e0
//! P 1
//! 0 0 2e0
//! q
//! -2e0
//! 0e0
//! eq 1 2
//! 0 0 1e0
//! 0 1 1e0
//! beq
//! 1e0
//! cone nonneg 2 2
//! 0 0 -1e0
//! 1 1 -1e0
//! b
//! 0e0
//! 0e0
//! end
//! ```

use std::fmt::Write;

use nalgebra::DVector;

use crate::{Cone, ConeBlock, ConicError, ConicProgram, Real, Result, Triplets};

const HEADER: &str = "conic-program v1";

impl<T: Real> ConicProgram<T> {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "vars {}", self.var_count);
        let _ = writeln!(out, "offset {:e}", self.offset);
        let _ = writeln!(out, "P {}", self.p.nnz());
        write_triplets(&mut out, &self.p);
        let _ = writeln!(out, "q");
        write_vec(&mut out, &self.q);
        let _ = writeln!(out, "eq {} {}", self.a_eq.nrows, self.a_eq.nnz());
        write_triplets(&mut out, &self.a_eq);
        let _ = writeln!(out, "beq");
        write_vec(&mut out, &self.b_eq);
        for blk in &self.cone_rows {
            let kind = match blk.cone {
                Cone::Nonneg(_) => "nonneg",
                Cone::SecondOrder(_) => "soc",
            };
            let _ = writeln!(out, "cone {kind} {} {}", blk.cone.dim(), blk.a.nnz());
            write_triplets(&mut out, &blk.a);
            let _ = writeln!(out, "b");
            write_vec(&mut out, &blk.b);
        }
        let _ = writeln!(out, "end");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = || lines.next().ok_or_else(|| ConicError::Parse("unexpected end of input".into()));
        if next()? != HEADER {
            return Err(ConicError::Parse("missing header".into()));
        }
        let n = keyed_usize(next()?, "vars")?;
        let offset = keyed_value::<T>(next()?, "offset")?;
        let p_nnz = keyed_usize(next()?, "P")?;
        let p = read_triplets(&mut next, n, n, p_nnz)?;
        expect(next()?, "q")?;
        let q = read_vec(&mut next, n)?;
        let eq_head = next()?;
        let f = fields(eq_head, "eq", 2)?;
        let a_eq = read_triplets(&mut next, f[0], n, f[1])?;
        expect(next()?, "beq")?;
        let b_eq = read_vec(&mut next, f[0])?;
        let mut cone_rows = Vec::new();
        loop {
            let line = next()?;
            if line == "end" {
                break;
            }
            let mut parts = line.split_whitespace();
            if parts.next() != Some("cone") {
                return Err(ConicError::Parse(format!("expected cone block, got {line:?}")));
            }
            let kind = parts.next().unwrap_or_default().to_string();
            let rest: Vec<usize> = parts
                .map(|s| s.parse().map_err(|_| ConicError::Parse(format!("bad integer in {line:?}"))))
                .collect::<Result<_>>()?;
            if rest.len() != 2 {
                return Err(ConicError::Parse(format!("bad cone header {line:?}")));
            }
            let cone = match kind.as_str() {
                "nonneg" => Cone::Nonneg(rest[0]),
                "soc" => Cone::SecondOrder(rest[0]),
                other => return Err(ConicError::Parse(format!("unknown cone {other:?}"))),
            };
            let a = read_triplets(&mut next, rest[0], n, rest[1])?;
            expect(next()?, "b")?;
            let b = read_vec(&mut next, rest[0])?;
            cone_rows.push(ConeBlock { a, b, cone });
        }
        let prog = ConicProgram { var_count: n, p, q, a_eq, b_eq, cone_rows, offset };
        prog.validate()?;
        Ok(prog)
    }
}

fn write_triplets<T: Real>(out: &mut String, t: &Triplets<T>) {
    for &(i, j, v) in &t.entries {
        let _ = writeln!(out, "{i} {j} {v:e}");
    }
}

fn write_vec<T: Real>(out: &mut String, v: &DVector<T>) {
    for x in v.iter() {
        let _ = writeln!(out, "{x:e}");
    }
}

fn expect(line: &str, key: &str) -> Result<()> {
    if line == key {
        Ok(())
    } else {
        Err(ConicError::Parse(format!("expected {key:?}, got {line:?}")))
    }
}

fn fields(line: &str, key: &str, count: usize) -> Result<Vec<usize>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(ConicError::Parse(format!("expected {key:?}, got {line:?}")));
    }
    let vals: Vec<usize> = parts
        .map(|s| s.parse().map_err(|_| ConicError::Parse(format!("bad integer in {line:?}"))))
        .collect::<Result<_>>()?;
    if vals.len() != count {
        return Err(ConicError::Parse(format!("expected {count} fields in {line:?}")));
    }
    Ok(vals)
}

fn keyed_usize(line: &str, key: &str) -> Result<usize> {
    Ok(fields(line, key, 1)?[0])
}

fn parse_value<T: Real>(s: &str) -> Result<T> {
    s.parse::<f64>()
        .map(T::lit)
        .map_err(|_| ConicError::Parse(format!("bad number {s:?}")))
}

fn keyed_value<T: Real>(line: &str, key: &str) -> Result<T> {
    match line.split_once(' ') {
        Some((k, v)) if k == key => parse_value(v.trim()),
        _ => Err(ConicError::Parse(format!("expected {key:?}, got {line:?}"))),
    }
}

fn read_triplets<'a, T: Real>(
    next: &mut impl FnMut() -> Result<&'a str>,
    nrows: usize,
    ncols: usize,
    nnz: usize,
) -> Result<Triplets<T>> {
    let mut t = Triplets::new(nrows, ncols);
    for _ in 0..nnz {
        let line = next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(ConicError::Parse(format!("bad triplet {line:?}")));
        }
        let i: usize = parts[0].parse().map_err(|_| ConicError::Parse(format!("bad row in {line:?}")))?;
        let j: usize = parts[1].parse().map_err(|_| ConicError::Parse(format!("bad column in {line:?}")))?;
        if i >= nrows || j >= ncols {
            return Err(ConicError::Parse(format!("triplet out of range {line:?}")));
        }
        t.entries.push((i, j, parse_value(parts[2])?));
    }
    Ok(t)
}

fn read_vec<'a, T: Real>(next: &mut impl FnMut() -> Result<&'a str>, len: usize) -> Result<DVector<T>> {
    let mut v = DVector::zeros(len);
    for i in 0..len {
        v[i] = parse_value(next()?)?;
    }
    Ok(v)
}
