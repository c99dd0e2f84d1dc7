use std::io::{BufRead, Write};

use super::ScalarField;
use crate::{Error, Result};

const MAGIC: &str = "abplab-field";
const VERSION: &str = "v1";

/// Parsed contents of a field snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub dim: usize,
    pub shape: String,
    pub spacing: f64,
    pub points: Vec<(Vec<f64>, f64)>,
}

impl FieldSnapshot {
    /// Rebuilds a field on `grid`, requiring node order and coordinates to match.
    pub fn to_field(&self, grid: std::sync::Arc<crate::Grid>) -> Result<ScalarField> {
        if grid.dim() != self.dim || grid.len() != self.points.len() {
            return Err(Error::GridMismatch(
                "snapshot does not match the grid layout".into(),
            ));
        }
        let tol = 1e-9 * grid.spacing();
        for (n, (x, _)) in self.points.iter().enumerate() {
            let c = grid.coords(n);
            if x.iter().zip(&c).any(|(a, b)| (a - b).abs() > tol) {
                return Err(Error::GridMismatch(format!(
                    "coordinates differ at node {n}"
                )));
            }
        }
        ScalarField::extended(grid, self.points.iter().map(|(_, v)| *v).collect())
    }
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn write_snapshot(field: &ScalarField, mut out: impl Write) -> Result<()> {
    let grid = field.grid();
    let dim = grid.dim();
    writeln!(
        out,
        "{MAGIC} {VERSION} dim={dim} shape={} h={} count={}",
        grid.shape().name(),
        fmt_real(grid.spacing()),
        grid.len()
    )?;
    for n in 0..grid.len() {
        let x = grid.coords(n);
        let mut line = String::new();
        for xk in &x[..dim] {
            line.push_str(&fmt_real(*xk));
            line.push(' ');
        }
        line.push_str(&fmt_real(field.value(n)));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse_real(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad real `{s}`"))),
    }
}

pub fn read_snapshot(input: impl BufRead) -> Result<FieldSnapshot> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty snapshot".into()))??;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(Error::Parse("missing abplab-field header".into()));
    }
    match tokens.next() {
        Some(VERSION) => {}
        Some(v) => return Err(Error::Parse(format!("unsupported snapshot version `{v}`"))),
        None => return Err(Error::Parse("missing snapshot version".into())),
    }
    let (mut dim, mut shape, mut spacing, mut count) = (None, None, None, None);
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header token `{tok}`")))?;
        match key {
            "dim" => dim = value.parse::<usize>().ok(),
            "shape" if value == "box" || value == "ball" => shape = Some(value.to_string()),
            "h" => spacing = Some(parse_real(value)?),
            "count" => count = value.parse::<usize>().ok(),
            _ => return Err(Error::Parse(format!("bad header token `{tok}`"))),
        }
    }
    let (dim, shape, spacing, count) = match (dim, shape, spacing, count) {
        (Some(d), Some(s), Some(h), Some(c)) if (1..=3).contains(&d) => (d, s, h, c),
        _ => return Err(Error::Parse("incomplete snapshot header".into())),
    };
    let mut points = Vec::with_capacity(count);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reals = line
            .split_whitespace()
            .map(parse_real)
            .collect::<Result<Vec<f64>>>()?;
        if reals.len() != dim + 1 {
            return Err(Error::Parse(format!(
                "expected {} columns, got {}",
                dim + 1,
                reals.len()
            )));
        }
        points.push((reals[..dim].to_vec(), reals[dim]));
    }
    if points.len() != count {
        return Err(Error::Parse(format!(
            "header announces {count} points, found {}",
            points.len()
        )));
    }
    Ok(FieldSnapshot {
        dim,
        shape,
        spacing,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn round_trip_preserves_bits() {
        let g = Grid::ball(2, 1.0, 0.25).unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| (x[0] * 3.1).sin() / 7.0 + x[1]);
        let mut buf = Vec::new();
        write_snapshot(&u, &mut buf).unwrap();
        let snap = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(snap.shape, "ball");
        let back = snap.to_field(g).unwrap();
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn rejects_unknown_version() {
        let text = "abplab-field v2 dim=1 shape=box h=0.5 count=0\n";
        assert!(matches!(
            read_snapshot(text.as_bytes()),
            Err(Error::Parse(_))
        ));
    }
}
