use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::market::ValuationMatrix;
use crate::scalar::{parse_decimal_exact, Rational, Scalar};

pub const INSTANCE_HEADER: &str = "bidder,good,value";

/// Parses triplet text. Dimensions are one past the largest ids seen; an
/// explicit zero line keeps an otherwise empty bidder in range.
pub fn parse_instance_with<T: Scalar>(
    text: &str,
    parse_value: impl Fn(&str) -> Option<T>,
) -> Result<ValuationMatrix<T>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == INSTANCE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{INSTANCE_HEADER}`"),
            })
        }
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let (mut n, mut m) = (0usize, 0usize);
    for (idx, raw) in lines {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad bidder id {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("bad good id {:?}", fields[1])))?;
        let value = parse_value(fields[2]).ok_or_else(|| err(format!("bad value {:?}", fields[2])))?;
        if !value.is_finite_value() {
            return Err(err("non-finite value".into()));
        }
        if value.lt_zero() {
            return Err(err(format!("negative value {}", fields[2])));
        }
        if !seen.insert((i, j)) {
            return Err(err(format!("duplicate entry for bidder {i}, good {j}")));
        }
        n = n.max(i + 1);
        m = m.max(j + 1);
        entries.push((i, j, value));
    }
    ValuationMatrix::from_triplets(n, m, entries)
}

pub fn parse_instance(text: &str) -> Result<ValuationMatrix> {
    parse_instance_with(text, |s| s.parse::<f64>().ok())
}

/// Parses decimal values as the exact rationals they denote.
pub fn parse_instance_exact(text: &str) -> Result<ValuationMatrix<Rational>> {
    parse_instance_with(text, |s| parse_decimal_exact(s).ok())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ValuationMatrix> {
    let path = path.as_ref();
    parse_instance(&read(path)?).map_err(|e| e.in_file(path))
}

pub fn load_instance_exact(path: impl AsRef<Path>) -> Result<ValuationMatrix<Rational>> {
    let path = path.as_ref();
    parse_instance_exact(&read(path)?).map_err(|e| e.in_file(path))
}

/// Triplet text of the positive entries, ordered by good then bidder.
/// Values use the shortest representation that parses back to the same
/// double.
pub fn format_instance(v: &ValuationMatrix) -> String {
    let mut out = String::from(INSTANCE_HEADER);
    out.push('\n');
    for (i, j, x) in v.triplets() {
        let _ = writeln!(out, "{i},{j},{x}");
    }
    let last = v.n_bidders().saturating_sub(1);
    if v.n_bidders() > 0 && v.bidder(last).is_empty() {
        let _ = writeln!(out, "{last},0,0");
    }
    out
}

pub fn save_instance(path: impl AsRef<Path>, v: &ValuationMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_instance(v)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn round_trip_keeps_values() {
        let v = ValuationMatrix::from_dense(&[vec![0.1, 1.0 / 3.0], vec![0.0, 3.0], vec![0.0; 2]])
            .unwrap();
        let back = parse_instance(&format_instance(&v)).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn errors_name_lines() {
        let e = parse_instance("bidder,good,value\n0,0,1\n0,0,2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_instance("bidder,good,value\n0,0,-1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(parse_instance("b,g,v\n").is_err());
        assert!(parse_instance("bidder,good,value\n0,0\n").is_err());
        assert!(parse_instance("bidder,good,value\n0,0,nan\n").is_err());
    }

    #[test]
    fn exact_parse_is_decimal() {
        let v = parse_instance_exact("bidder,good,value\n0,0,0.1\n").unwrap();
        assert_eq!(v.value(0, 0), rat(1, 10));
    }

    #[test]
    fn file_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "bidder,good,value\nx,0,1\n").unwrap();
        let e = load_instance(&p).unwrap_err().to_string();
        assert!(e.contains("bad.csv") && e.contains("line 2"), "{e}");
    }
}
