//! Plain-text field files: a short header followed by one value per line
//! in row-major order.
//!
//! ```text
//! schwarzlab-field 1
//! dim 2
//! n 256
//! half_width 1
//! shift 0 0
//! kind complex
//! domain {"type":"unit_ball"}
//! values
//! ...
//! ```

use std::io::{BufRead, Write};

use super::{Domain, FieldKind, GridField, GridSpec, Lattice};
use crate::error::{Error, Result};

const MAGIC: &str = "schwarzlab-field 1";

pub fn write_field<W: Write>(field: &GridField, mut w: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Format(e.to_string());
    let spec = field.spec();
    let lat = &spec.lattice;
    let shift = if lat.shift.is_empty() {
        vec![0.0; lat.dim]
    } else {
        lat.shift.clone()
    };
    let kind = match spec.kind {
        FieldKind::Complex => "complex",
        FieldKind::RealConvex => "real_convex",
    };
    let domain = serde_json::to_string(&spec.domain).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w, "{MAGIC}").map_err(io)?;
    writeln!(w, "dim {}", lat.dim).map_err(io)?;
    writeln!(w, "n {}", lat.n).map_err(io)?;
    writeln!(w, "half_width {}", lat.half_width).map_err(io)?;
    let s: Vec<String> = shift.iter().map(|x| x.to_string()).collect();
    writeln!(w, "shift {}", s.join(" ")).map_err(io)?;
    writeln!(w, "kind {kind}").map_err(io)?;
    writeln!(w, "domain {domain}").map_err(io)?;
    writeln!(w, "values").map_err(io)?;
    for v in field.values() {
        writeln!(w, "{v}").map_err(io)?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(r: R) -> Result<GridField> {
    let mut lines = r.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(Error::Format(format!("line {}: {e}", i + 1))),
            None => Err(Error::Format(format!(
                "unexpected end of file, expected {what}"
            ))),
        }
    };
    let (_, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(Error::Format(format!("line 1: expected '{MAGIC}'")));
    }
    let mut field = |key: &str| -> Result<(usize, String)> {
        let (i, l) = next(key)?;
        match l.trim().split_once(' ') {
            Some((k, rest)) if k == key => Ok((i, rest.trim().to_string())),
            _ => Err(Error::Format(format!("line {i}: expected '{key}'"))),
        }
    };
    let num = |(i, s): (usize, String)| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Format(format!("line {i}: bad number '{s}'")))
    };
    let dim = num(field("dim")?)? as usize;
    let n = num(field("n")?)? as usize;
    let half_width = num(field("half_width")?)?;
    let (i, s) = field("shift")?;
    let shift = s
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("line {i}: bad shift")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (i, k) = field("kind")?;
    let kind = match k.as_str() {
        "complex" => FieldKind::Complex,
        "real_convex" => FieldKind::RealConvex,
        _ => return Err(Error::Format(format!("line {i}: unknown kind '{k}'"))),
    };
    let (i, d) = field("domain")?;
    let domain: Domain =
        serde_json::from_str(&d).map_err(|e| Error::Format(format!("line {i}: {e}")))?;
    drop(field);
    let (i, v) = next("values")?;
    if v.trim() != "values" {
        return Err(Error::Format(format!("line {i}: expected 'values'")));
    }
    let shift = if shift.iter().all(|&x| x == 0.0) {
        Vec::new()
    } else {
        shift
    };
    let spec = GridSpec {
        lattice: Lattice {
            dim,
            n,
            half_width,
            shift,
        },
        kind,
        domain,
    };
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.lattice.len());
    while let Ok((i, l)) = next("value") {
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("line {i}: bad value '{t}'")))?,
        );
    }
    GridField::new(spec, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let g = GridSpec::ball(FieldKind::Complex, 2, 12).unwrap();
        let f = GridField::sample(g, |x| x[0] * x[0] + x[1] * x[1] - 1.0 + 1e-17 * x[0]).unwrap();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let back = read_field(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn header_errors_name_the_line() {
        let err = read_field("schwarzlab-field 1\ndim 2\nsize 8\n".as_bytes()).unwrap_err();
        assert_eq!(err, Error::Format("line 3: expected 'n'".into()));
    }
}
