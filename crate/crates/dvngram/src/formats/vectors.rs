//! Dense vector export: a `<count> <dim>` header, then one
//! `<name> <v1> ... <vn>` line per row.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use dvngram_core::model::{ParamMatrix, Real};

use super::{parse_field, read_lines, write_file};
use crate::error::{Error, Result};

pub fn write_vectors<T, N>(
    path: &Path,
    names: impl IntoIterator<Item = N>,
    matrix: &ParamMatrix<T>,
) -> Result<()>
where
    T: Real,
    N: Display,
{
    let names: Vec<N> = names.into_iter().collect();
    if names.len() != matrix.rows() {
        return Err(Error::Data(format!(
            "{} names for {} vector rows",
            names.len(),
            matrix.rows()
        )));
    }
    write_file(path, |w| {
        writeln!(w, "{} {}", matrix.rows(), matrix.cols())?;
        for (r, name) in names.iter().enumerate() {
            write!(w, "{name}")?;
            for c in 0..matrix.cols() {
                write!(w, " {}", matrix.get(r, c))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

/// Reads a vector file written with the same precision `T`; values parse
/// back bit-exactly.
pub fn read_vectors<T>(path: &Path) -> Result<(Vec<String>, ParamMatrix<T>)>
where
    T: Real + FromStr,
{
    let lines = read_lines(path)?;
    let Some(((header_no, header), rows)) = lines.split_first() else {
        return Err(Error::parse(path, 1, "missing header"));
    };
    let mut head = header.split_whitespace();
    let (Some(count), Some(dim), None) = (head.next(), head.next(), head.next()) else {
        return Err(Error::parse(
            path,
            *header_no,
            "header must be `<count> <dim>`",
        ));
    };
    let count: usize = parse_field(path, *header_no, count, "row count")?;
    let dim: usize = parse_field(path, *header_no, dim, "dimension")?;
    if rows.len() != count {
        return Err(Error::parse(
            path,
            *header_no,
            format!("header announces {count} rows, found {}", rows.len()),
        ));
    }
    let mut names = Vec::with_capacity(count);
    let mut values: Vec<T> = Vec::with_capacity(count * dim);
    for (line_no, line) in rows {
        let mut fields = line.split(' ');
        let name = fields.next().unwrap_or_default();
        let before = values.len();
        for f in fields {
            values.push(parse_field(path, *line_no, f, "value")?);
        }
        if values.len() - before != dim {
            return Err(Error::parse(
                path,
                *line_no,
                format!("expected {dim} values, found {}", values.len() - before),
            ));
        }
        names.push(name.to_string());
    }
    Ok((names, ParamMatrix::from_values(count, dim, &values)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_round_trip_both_precisions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let m64 = ParamMatrix::<f64>::from_values(
            2,
            3,
            &[0.1, -1e-300, 1.0 / 3.0, 7.0, f64::MIN_POSITIVE, -0.0],
        )
        .unwrap();
        write_vectors(&path, ["doc_0", "doc_1"], &m64).unwrap();
        let (names, back) = read_vectors::<f64>(&path).unwrap();
        assert_eq!(names, ["doc_0", "doc_1"]);
        let bits =
            |m: &ParamMatrix<f64>| m.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m64));

        let m32 = ParamMatrix::<f32>::from_values(1, 2, &[0.000_999_9, -2.5e-7]).unwrap();
        write_vectors(&path, ["the_film"], &m32).unwrap();
        let (_, back) = read_vectors::<f32>(&path).unwrap();
        assert_eq!(back, m32);
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .starts_with("1 2\nthe_film "));
    }

    #[test]
    fn shape_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let m = ParamMatrix::<f64>::zeros(2, 2);
        assert!(write_vectors(&path, ["a"], &m).is_err());
        std::fs::write(&path, "2 2\na 1 2\n").unwrap();
        assert!(read_vectors::<f64>(&path).is_err());
        std::fs::write(&path, "1 2\na 1 2 3\n").unwrap();
        assert!(read_vectors::<f64>(&path).is_err());
        std::fs::write(&path, "1 2\na 1 x\n").unwrap();
        assert!(read_vectors::<f64>(&path).is_err());
    }
}
