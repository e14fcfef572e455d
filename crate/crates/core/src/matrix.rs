//! Dense complex matrices and their on-disk formats.
//!
//! Text format: a header line `n N`, then `n` lines of `N` whitespace-separated
//! `re,im` pairs printed with 17 significant digits (enough to round-trip every
//! `f64`). Binary format: the magic `QPF1`, little-endian `u64` row and column
//! counts, then the entries row by row as interleaved little-endian `f64`
//! `(re, im)` pairs.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"QPF1";

/// Column-major `rows × cols` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Text,
    Binary,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Builds a matrix from column-major storage.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows} x {cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[col * self.rows + row] = value;
    }

    #[inline]
    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [Complex64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// Appends zero rows until the matrix has `rows` rows.
    pub fn pad_rows(&self, rows: usize) -> Result<ComplexMatrix> {
        if rows < self.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot pad {} rows down to {rows}",
                self.rows
            )));
        }
        let mut out = ComplexMatrix::zeros(rows, self.cols);
        for c in 0..self.cols {
            out.column_mut(c)[..self.rows].copy_from_slice(self.column(c));
        }
        Ok(out)
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> ComplexMatrix {
        let mut data = Vec::with_capacity(cols.len() * self.rows);
        for &c in cols {
            data.extend_from_slice(self.column(c));
        }
        ComplexMatrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// Bitwise equality of every entry (distinguishes `0.0` from `-0.0`).
    pub fn bit_eq(&self, other: &ComplexMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| {
                a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
            })
    }

    pub fn write_text<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let z = self.get(r, c);
                if c > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{:.16e},{:.16e}", z.re, z.im)?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty matrix file".into()))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("bad header {header:?}: {e}")))?;
        let [rows, cols] = dims[..] else {
            return Err(Error::Format(format!("header must be `n N`, got {header:?}")));
        };
        let mut m = ComplexMatrix::zeros(rows, cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing row {r}")))??;
            let mut count = 0;
            for (c, tok) in line.split_whitespace().enumerate() {
                if c >= cols {
                    return Err(Error::Format(format!("row {r} has more than {cols} entries")));
                }
                let (re, im) = tok
                    .split_once(',')
                    .ok_or_else(|| Error::Format(format!("entry {tok:?} is not `re,im`")))?;
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
                };
                m.set(r, c, Complex64::new(parse(re)?, parse(im)?));
                count += 1;
            }
            if count != cols {
                return Err(Error::Format(format!("row {r} has {count} entries, expected {cols}")));
            }
        }
        if lines.any(|l| l.map(|l| !l.trim().is_empty()).unwrap_or(true)) {
            return Err(Error::Format("trailing data after the last row".into()));
        }
        Ok(m)
    }

    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let z = self.get(r, c);
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("file too short for QPF1 header".into()))?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("missing QPF1 magic".into()));
        }
        let mut word = [0u8; 8];
        let mut read_u64 = |r: &mut BufReader<R>| -> Result<u64> {
            r.read_exact(&mut word)
                .map_err(|_| Error::Format("truncated QPF1 header".into()))?;
            Ok(u64::from_le_bytes(word))
        };
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let total = rows
            .checked_mul(cols)
            .filter(|&t| t <= 1 << 32)
            .ok_or_else(|| Error::Format(format!("implausible dimensions {rows} x {cols}")))?;
        let mut m = ComplexMatrix::zeros(rows, cols);
        let mut buf = [0u8; 16];
        for idx in 0..total {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Format(format!("truncated payload at entry {idx}")))?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            m.set(idx / cols, idx % cols, Complex64::new(re, im));
        }
        if r.read(&mut buf)? != 0 {
            return Err(Error::Format("trailing bytes after QPF1 payload".into()));
        }
        Ok(m)
    }

    pub fn write_file(&self, path: &Path, format: MatrixFormat) -> Result<()> {
        let f = std::fs::File::create(path)?;
        match format {
            MatrixFormat::Text => self.write_text(f),
            MatrixFormat::Binary => self.write_binary(f),
        }
    }

    /// Loads either format, recognising binary files by their magic.
    pub fn read_file(path: &Path) -> Result<(Self, MatrixFormat)> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(BINARY_MAGIC) {
            Ok((Self::read_binary(&bytes[..])?, MatrixFormat::Binary))
        } else {
            Ok((Self::read_text(&bytes[..])?, MatrixFormat::Text))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ComplexMatrix {
        let data = vec![
            Complex64::new(1.0, -0.0),
            Complex64::new(0.1, 1e-300),
            Complex64::new(-2.5e10, std::f64::consts::PI),
            Complex64::new(f64::MIN_POSITIVE, -1.0 / 3.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(7.0, 8.0),
        ];
        ComplexMatrix::from_column_major(2, 3, data).unwrap()
    }

    #[test]
    fn text_layout() {
        let mut out = Vec::new();
        sample().write_text(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "2 3");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split_whitespace().count(), 3);
        assert!(lines[1].starts_with("1.0000000000000000e0,-0.0000000000000000e0 "));
    }

    #[test]
    fn binary_layout() {
        let mut out = Vec::new();
        sample().write_binary(&mut out).unwrap();
        assert_eq!(&out[..4], b"QPF1");
        assert_eq!(u64::from_le_bytes(out[4..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(out[12..20].try_into().unwrap()), 3);
        assert_eq!(out.len(), 20 + 2 * 3 * 16);
        // row-major: second entry of the payload is (row 0, col 1)
        let re = f64::from_le_bytes(out[36..44].try_into().unwrap());
        assert_eq!(re, -2.5e10);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(ComplexMatrix::read_text(&b"2 2\n1,0 0,0\n"[..]).is_err());
        assert!(ComplexMatrix::read_text(&b"1 2\n1,0\n"[..]).is_err());
        assert!(ComplexMatrix::read_text(&b"1 1\n1;0\n"[..]).is_err());
        assert!(ComplexMatrix::read_binary(&b"QPF2"[..]).is_err());
        let mut out = Vec::new();
        sample().write_binary(&mut out).unwrap();
        assert!(ComplexMatrix::read_binary(&out[..out.len() - 1]).is_err());
    }

    #[test]
    fn padding_keeps_columns() {
        let m = sample();
        let p = m.pad_rows(5).unwrap();
        assert_eq!(p.rows(), 5);
        assert_eq!(p.get(1, 2), m.get(1, 2));
        assert_eq!(p.get(4, 2), Complex64::new(0.0, 0.0));
        assert!(m.pad_rows(1).is_err());
    }

    proptest! {
        #[test]
        fn text_and_binary_round_trip_bit_exact(
            rows in 1usize..5, cols in 1usize..5,
            bits in proptest::collection::vec(any::<u64>(), 50)
        ) {
            let data: Vec<Complex64> = (0..rows * cols)
                .map(|i| {
                    let f = |b: u64| { let x = f64::from_bits(b); if x.is_finite() { x } else { 0.5 } };
                    Complex64::new(f(bits[2 * i % 50]), f(bits[(2 * i + 1) % 50]))
                })
                .collect();
            let m = ComplexMatrix::from_column_major(rows, cols, data).unwrap();
            let mut text = Vec::new();
            m.write_text(&mut text).unwrap();
            let back = ComplexMatrix::read_text(&text[..]).unwrap();
            prop_assert!(back.bit_eq(&m));
            let mut bin = Vec::new();
            back.write_binary(&mut bin).unwrap();
            let again = ComplexMatrix::read_binary(&bin[..]).unwrap();
            prop_assert!(again.bit_eq(&m));
        }
    }
}
