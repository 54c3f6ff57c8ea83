use alloc::string::ToString;
use alloc::vec::Vec;

use super::LossVector;
use crate::{Error, Result};

/// Parse a loss matrix: one round per line, `d` comma-separated decimals in
/// `[0, 1]`, no header. Trailing newlines are ignored; rows and columns in
/// errors are 1-based.
pub fn parse_loss_matrix(text: &str) -> Result<Vec<LossVector>> {
    let body = text.trim_end_matches(['\n', '\r']);
    if body.trim().is_empty() {
        return Err(Error::Parse { row: 0, column: 0, message: "empty loss matrix".to_string() });
    }
    let mut rows = Vec::new();
    let mut width = None;
    for (r, line) in body.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let err = |message: &str| Error::Parse { row: r + 1, column: c + 1, message: message.to_string() };
            let v: f64 = field.trim().parse().map_err(|_| err("not a decimal number"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(err("loss outside [0, 1]"));
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    row: r + 1,
                    column: row.len().min(w) + 1,
                    message: alloc::format!("expected {w} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(LossVector::new(row)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let m = parse_loss_matrix("0,1\n1,0\n").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(&m[0][..], &[0.0, 1.0]);
        assert_eq!(&m[1][..], &[1.0, 0.0]);
    }

    #[test]
    fn out_of_range_has_location() {
        match parse_loss_matrix("0,0.5\n0.2,1.5\n") {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_empty_garbage_and_ragged() {
        assert!(parse_loss_matrix("").is_err());
        assert!(parse_loss_matrix("\n\n").is_err());
        assert!(matches!(parse_loss_matrix("0,x"), Err(Error::Parse { row: 1, column: 2, .. })));
        assert!(matches!(parse_loss_matrix("0,1\n0"), Err(Error::Parse { row: 2, .. })));
        assert!(parse_loss_matrix("0,1\n\n1,0").is_err());
    }

    #[test]
    fn crlf_and_spaces() {
        let m = parse_loss_matrix("0.25, 0.75\r\n1,0\r\n").unwrap();
        assert_eq!(&m[0][..], &[0.25, 0.75]);
    }
}
