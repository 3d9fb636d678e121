//! Transfer-matrix files, so the optimizer can run standalone.
//!
//! Binary layout: magic `TESB`, then little-endian u64 `d`, `N`, `S`,
//! then `d*N*(S-1)` little-endian f64 values row-major. The CSV variant is
//! meant for small cases: header `# d=<d> n=<N> s=<S>`, one row per matrix
//! row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::TransferMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TESB";

pub fn write_transfer_binary(path: &Path, b: &TransferMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    let s = b.reduced_len() as u64 + 1;
    for v in [b.dim() as u64, b.num_elements() as u64, s] {
        w.write_all(&v.to_le_bytes())?;
    }
    for r in 0..b.matrix().nrows() {
        for c in 0..b.matrix().ncols() {
            w.write_all(&b.matrix()[(r, c)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_transfer_binary(path: &Path) -> Result<TransferMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(
            "not a transfer-matrix file (bad magic)".into(),
        ));
    }
    let mut buf8 = [0u8; 8];
    let mut header = [0u64; 3];
    for slot in &mut header {
        r.read_exact(&mut buf8)?;
        *slot = u64::from_le_bytes(buf8);
    }
    let (dim, n, s) = (header[0] as usize, header[1] as usize, header[2] as usize);
    if !(dim == 2 || dim == 3) || s < 2 {
        return Err(Error::Format(format!(
            "implausible header d={dim} N={n} S={s}"
        )));
    }
    let rows = dim * n;
    let cols = s - 1;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        r.read_exact(&mut buf8)?;
        values.push(f64::from_le_bytes(buf8));
    }
    let matrix = DMatrix::from_row_slice(rows, cols, &values);
    TransferMatrix::from_dense(dim, n, matrix)
}

pub fn write_transfer_csv(path: &Path, b: &TransferMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "# d={} n={} s={}",
        b.dim(),
        b.num_elements(),
        b.reduced_len() + 1
    )?;
    for r in 0..b.matrix().nrows() {
        let row: Vec<String> = (0..b.matrix().ncols())
            .map(|c| format!("{:.17e}", b.matrix()[(r, c)]))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_transfer_csv(path: &Path) -> Result<TransferMatrix> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty transfer CSV".into()))??;
    let parse_field = |name: &str| -> Result<usize> {
        header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix(&format!("{name}=")))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("transfer CSV header missing `{name}=`")))
    };
    let dim = parse_field("d")?;
    let n = parse_field("n")?;
    let s = parse_field("s")?;
    let mut values = Vec::with_capacity(dim * n * (s - 1));
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad number `{tok}` in transfer CSV")))?;
            values.push(v);
        }
    }
    if values.len() != dim * n * (s - 1) {
        return Err(Error::Format(format!(
            "transfer CSV has {} values, expected {}",
            values.len(),
            dim * n * (s - 1)
        )));
    }
    let matrix = DMatrix::from_row_slice(dim * n, s - 1, &values);
    TransferMatrix::from_dense(dim, n, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TransferMatrix {
        let m = DMatrix::from_row_slice(
            6,
            2,
            &[
                0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 1e-13, 2.0, -3.5, 4.25, 5.0, -6.125,
            ],
        );
        TransferMatrix::from_dense(2, 3, m).unwrap()
    }

    #[test]
    fn binary_roundtrip_is_exact() {
        let dir = std::env::temp_dir().join("tesopt-transfer-bin-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("b.tesb");
        let b = sample();
        write_transfer_binary(&path, &b).unwrap();
        let back = read_transfer_binary(&path).unwrap();
        assert_eq!(b, back);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let dir = std::env::temp_dir().join("tesopt-transfer-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("b.csv");
        let b = sample();
        write_transfer_csv(&path, &b).unwrap();
        let back = read_transfer_csv(&path).unwrap();
        assert_eq!(b, back);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = std::env::temp_dir().join("tesopt-transfer-bad-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("junk.tesb");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(read_transfer_binary(&path).is_err());
    }
}
