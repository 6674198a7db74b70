//! Sparse rows as `label id:weight id:weight ...` with 1-based feature ids,
//! the layout external linear-classifier tools read.

use std::io::Write;
use std::path::Path;

use dvngram_core::baselines::SparseFeatureVector;
use dvngram_core::corpus::Label;

use super::{parse_field, read_lines, write_file};
use crate::error::{Error, Result};

fn label_str(label: Option<Label>) -> &'static str {
    match label {
        Some(Label::Positive) => "+1",
        Some(Label::Negative) => "-1",
        None => "0",
    }
}

pub fn write_sparse(path: &Path, rows: &[(Option<Label>, SparseFeatureVector)]) -> Result<()> {
    write_file(path, |w| {
        for (label, x) in rows {
            write!(w, "{}", label_str(*label))?;
            for &(id, v) in x.entries() {
                write!(w, " {}:{}", id as u64 + 1, v)?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

pub fn read_sparse(path: &Path) -> Result<Vec<(Option<Label>, SparseFeatureVector)>> {
    let mut out = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let mut fields = line.split_whitespace();
        let label = match fields.next() {
            Some("+1") | Some("1") => Some(Label::Positive),
            Some("-1") => Some(Label::Negative),
            Some("0") => None,
            other => return Err(Error::parse(path, line_no, format!("bad label {other:?}"))),
        };
        let mut entries = Vec::new();
        let mut last = 0u64;
        for f in fields {
            let (id, v) = f.split_once(':').ok_or_else(|| {
                Error::parse(path, line_no, format!("expected id:weight, got {f:?}"))
            })?;
            let id: u64 = parse_field(path, line_no, id, "feature id")?;
            if id <= last || id > u32::MAX as u64 + 1 {
                return Err(Error::parse(
                    path,
                    line_no,
                    "feature ids must be increasing and 1-based",
                ));
            }
            last = id;
            entries.push((
                (id - 1) as u32,
                parse_field::<f64>(path, line_no, v, "weight")?,
            ));
        }
        out.push((label, SparseFeatureVector::from_pairs(entries)));
    }
    Ok(out)
}
