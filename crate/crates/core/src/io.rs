//! Matrix serialization.
//!
//! CSV: a header line `n=<columns>`, then one comma-separated row per line.
//! Binary: the 6-byte magic `RLLAB1`, two zero bytes, `u32` rows and `u32`
//! columns (little endian), then the entries row-major as little-endian
//! `f64`.

use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"RLLAB1";
pub const HEADER_LEN: usize = 16;

pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut out: W) -> Result<()> {
    writeln!(out, "n={}", m.ncols())?;
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<DMatrix<f64>> {
    let mut lines = input.lines().enumerate();
    let cols = match lines.next() {
        Some((_, header)) => {
            let header = header?;
            header
                .trim()
                .strip_prefix("n=")
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| format_err(1, format!("expected header `n=<n>`, found `{header}`")))?
        }
        None => return Err(format_err(1, "empty input")),
    };
    let mut data = Vec::new();
    let mut rows = 0;
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(format_err(lineno, format!("expected {cols} fields, found {}", fields.len())));
        }
        for f in fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| format_err(lineno, format!("not a number: `{f}`")))?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn write_matrix_binary<W: Write>(m: &DMatrix<f64>, mut out: W) -> Result<()> {
    let dims = |v: usize| u32::try_from(v).map_err(|_| format_err(0, "dimension exceeds u32"));
    let mut header = [0u8; HEADER_LEN];
    header[..6].copy_from_slice(MAGIC);
    header[8..12].copy_from_slice(&dims(m.nrows())?.to_le_bytes());
    header[12..16].copy_from_slice(&dims(m.ncols())?.to_le_bytes());
    out.write_all(&header)?;
    for row in m.row_iter() {
        for v in row.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut input: R) -> Result<DMatrix<f64>> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[..6] != MAGIC {
        return Err(format_err(0, "bad magic"));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != rows * cols * 8 {
        return Err(format_err(
            0,
            format!("expected {} payload bytes, found {}", rows * cols * 8, bytes.len()),
        ));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 3, &[1.0, -0.1, 1e-300, f64::MAX, 0.0, 1.0 / 3.0])
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_matrix_csv(&sample(), &mut buf).unwrap();
        assert!(buf.starts_with(b"n=3\n"));
        assert_eq!(read_matrix_csv(&buf[..]).unwrap(), sample());
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_matrix_binary(&sample(), &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 6 * 8);
        assert_eq!(&buf[..6], MAGIC);
        assert_eq!(read_matrix_binary(&buf[..]).unwrap(), sample());
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = read_matrix_csv(&b"n=2\n1,2\n3\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }));
        let err = read_matrix_csv(&b"rows=2\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
        let err = read_matrix_csv(&b"n=1\nx\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let mut buf = Vec::new();
        write_matrix_binary(&sample(), &mut buf).unwrap();
        buf.pop();
        assert!(read_matrix_binary(&buf[..]).is_err());
        assert!(read_matrix_binary(&b"RLLAB2\0\0\0\0\0\0\0\0\0\0"[..]).is_err());
    }
}
