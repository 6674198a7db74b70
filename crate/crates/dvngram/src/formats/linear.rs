//! Logistic-regression model: `C` on the first line, the intercept on the
//! second, then one weight per line.

use std::io::Write;
use std::path::Path;

use dvngram_core::classifier::LinearModel;

use super::{parse_field, read_lines, write_file};
use crate::error::{Error, Result};

pub fn write_linear_model(path: &Path, model: &LinearModel) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "{}", model.c_value)?;
        writeln!(w, "{}", model.intercept)?;
        for v in &model.weights {
            writeln!(w, "{v}")?;
        }
        Ok(())
    })
}

pub fn read_linear_model(path: &Path) -> Result<LinearModel> {
    let lines = read_lines(path)?;
    if lines.len() < 2 {
        return Err(Error::parse(
            path,
            lines.len() + 1,
            "expected C and intercept lines",
        ));
    }
    let num = |(no, s): &(usize, String), what| parse_field::<f64>(path, *no, s.trim(), what);
    Ok(LinearModel {
        c_value: num(&lines[0], "C")?,
        intercept: num(&lines[1], "intercept")?,
        weights: lines[2..]
            .iter()
            .map(|l| num(l, "weight"))
            .collect::<Result<_>>()?,
    })
}
