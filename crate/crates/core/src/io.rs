//! Matrix Market coordinate files and plain vector files.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{ConstraintKind, LinearSystem, SparseMatrix};

pub const MATRIX_FILE: &str = "matrix.mtx";
pub const RHS_FILE: &str = "rhs.txt";
pub const REFERENCE_FILE: &str = "reference.txt";
pub const KINDS_FILE: &str = "kinds.txt";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Writes `%%MatrixMarket matrix coordinate real general` with 1-based
/// indices and values in shortest round-trip form.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.to_triplets() {
        writeln!(out, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Reads a coordinate Matrix Market matrix with `real` or `integer` values
/// and `general` or `symmetric` storage. Duplicate entries are summed.
pub fn read_matrix_market<R: Read>(input: R) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix header"));
    }
    if fields[2] != "coordinate" {
        return Err(parse_err(1, format!("unsupported format '{}'", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field '{}'", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (k, line) in lines {
        let line_no = k + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(parse_err(line_no, "size line needs 'rows cols nnz'"));
                }
                let p = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(line_no, format!("bad size '{s}'")))
                };
                size = Some((p(parts[0])?, p(parts[1])?, p(parts[2])?));
                triplets.reserve(size.unwrap().2);
            }
            Some((m, n, _)) => {
                if parts.len() != 3 {
                    return Err(parse_err(line_no, "entry needs 'row col value'"));
                }
                let idx = |s: &str, len: usize| -> Result<usize> {
                    let v: usize = s
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad index '{s}'")))?;
                    if v == 0 || v > len {
                        return Err(parse_err(line_no, format!("index {v} outside 1..={len}")));
                    }
                    Ok(v - 1)
                };
                let (i, j) = (idx(parts[0], m)?, idx(parts[1], n)?);
                let v: f64 = parts[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad value '{}'", parts[2])))?;
                triplets.push((i, j, v));
                if symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(parse_err(
            0,
            format!("header announces {nnz} entries, found {stored}"),
        ));
    }
    SparseMatrix::from_triplets(m, n, &triplets)
}

/// One value per line in shortest round-trip form.
pub fn write_vector<W: Write>(v: &[f64], mut out: W) -> Result<()> {
    for x in v {
        writeln!(out, "{x:?}")?;
    }
    Ok(())
}

/// One real per line; blank lines and `%` or `#` comments are skipped.
pub fn read_vector<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        out.push(
            t.parse()
                .map_err(|_| parse_err(k + 1, format!("bad value '{t}'")))?,
        );
    }
    Ok(out)
}

fn kind_label(k: ConstraintKind) -> &'static str {
    match k {
        ConstraintKind::Equality => "eq",
        ConstraintKind::LessEqual => "le",
    }
}

/// Writes `matrix.mtx`, `rhs.txt`, and when present `reference.txt`.
/// `kinds.txt` (one `eq` or `le` per line) is written only for systems with
/// inequality rows.
pub fn write_system(sys: &LinearSystem, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix_market(sys.matrix(), fs::File::create(dir.join(MATRIX_FILE))?)?;
    write_vector(sys.rhs(), fs::File::create(dir.join(RHS_FILE))?)?;
    if let Some(z) = sys.reference() {
        write_vector(z, fs::File::create(dir.join(REFERENCE_FILE))?)?;
    }
    if !sys.is_equality_only() {
        let mut f = fs::File::create(dir.join(KINDS_FILE))?;
        for &k in sys.kinds() {
            writeln!(f, "{}", kind_label(k))?;
        }
    }
    Ok(())
}

/// Reads a directory written by [`write_system`].
pub fn read_system(dir: &Path) -> Result<LinearSystem> {
    let a = read_matrix_market(fs::File::open(dir.join(MATRIX_FILE))?)?;
    let b = read_vector(fs::File::open(dir.join(RHS_FILE))?)?;
    let kinds_path = dir.join(KINDS_FILE);
    let sys = if kinds_path.exists() {
        let text = fs::read_to_string(kinds_path)?;
        let kinds = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(k, l)| match l {
                "eq" => Ok(ConstraintKind::Equality),
                "le" => Ok(ConstraintKind::LessEqual),
                other => Err(parse_err(
                    k + 1,
                    format!("unknown constraint kind '{other}'"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        LinearSystem::with_kinds(a, b, kinds)?
    } else {
        LinearSystem::new(a, b)?
    };
    let ref_path = dir.join(REFERENCE_FILE);
    if ref_path.exists() {
        sys.with_reference(read_vector(fs::File::open(ref_path)?)?)
    } else {
        Ok(sys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let a =
            SparseMatrix::from_triplets(3, 2, &[(0, 0, 0.1), (2, 1, -1.0 / 3.0), (1, 0, 1e-300)])
                .unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general\n3 2 3\n1 1 0.1\n"));
        assert_eq!(read_matrix_market(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn reads_symmetric_integer_with_comments() {
        let text =
            "%%MatrixMarket matrix coordinate integer symmetric\n% note\n2 2 2\n1 1 4\n2 1 -1\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            "",
            "%%MatrixMarket matrix array real general\n1 1\n1\n",
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n",
        ];
        for c in cases {
            assert!(
                matches!(read_matrix_market(c.as_bytes()), Err(Error::Parse { .. })),
                "{c:?}"
            );
        }
    }

    #[test]
    fn vector_round_trip() {
        let v = vec![1.0, -0.1, 2.5e-17];
        let mut buf = Vec::new();
        write_vector(&v, &mut buf).unwrap();
        assert_eq!(read_vector(buf.as_slice()).unwrap(), v);
        assert_eq!(
            read_vector("# x\n1\n\n2\n".as_bytes()).unwrap(),
            vec![1.0, 2.0]
        );
        assert!(read_vector("1\nx\n".as_bytes()).is_err());
    }

    #[test]
    fn system_directory_round_trip() {
        let dir = std::env::temp_dir().join(format!("kacz-io-{}", std::process::id()));
        let a = SparseMatrix::from_dense_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let sys = LinearSystem::new(a.clone(), vec![1.0, 2.0])
            .unwrap()
            .with_reference(vec![1.0, 1.0])
            .unwrap();
        write_system(&sys, &dir).unwrap();
        assert_eq!(
            fs::read_to_string(dir.join(RHS_FILE)).unwrap(),
            "1.0\n2.0\n"
        );
        let back = read_system(&dir).unwrap();
        assert_eq!(back.matrix(), sys.matrix());
        assert_eq!(back.reference(), sys.reference());
        assert!(!dir.join(KINDS_FILE).exists());

        let ineq = LinearSystem::with_kinds(
            a,
            vec![1.0, 2.0],
            vec![ConstraintKind::Equality, ConstraintKind::LessEqual],
        )
        .unwrap();
        write_system(&ineq, &dir).unwrap();
        fs::remove_file(dir.join(REFERENCE_FILE)).unwrap();
        let back = read_system(&dir).unwrap();
        assert_eq!(back.kinds(), ineq.kinds());
        fs::remove_dir_all(&dir).unwrap();
    }
}
