//! `token<TAB>count<TAB>kind`, one line per token in id order.

use std::io::Write;
use std::path::Path;

use dvngram_core::corpus::{TokenKind, Vocabulary};

use super::{parse_field, read_lines, write_file};
use crate::error::{Error, Result};

pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    write_file(path, |w| {
        for (token, count, kind) in vocab.entries() {
            writeln!(w, "{token}\t{count}\t{kind}")?;
        }
        Ok(())
    })
}

/// Reads a vocabulary file. When `max_order` is `None` it is taken from the
/// highest n-gram kind present; `min_count` becomes the smallest count.
pub fn read_vocab(path: &Path, max_order: Option<usize>) -> Result<Vocabulary> {
    let mut entries = Vec::new();
    for (line_no, line) in read_lines(path)? {
        let mut fields = line.split('\t');
        let (Some(token), Some(count), Some(kind), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::parse(
                path,
                line_no,
                "expected token<TAB>count<TAB>kind",
            ));
        };
        let count: u64 = parse_field(path, line_no, count, "count")?;
        let kind = TokenKind::parse(kind)
            .ok_or_else(|| Error::parse(path, line_no, format!("unknown kind {kind:?}")))?;
        entries.push((token.to_string(), count, kind));
    }
    let order = max_order.unwrap_or_else(|| entries.iter().map(|e| e.2.order()).max().unwrap_or(1));
    let min_count = entries.iter().map(|e| e.1).min().unwrap_or(1).max(1);
    Ok(Vocabulary::from_entries(entries, order, min_count)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        let docs = vec![vec!["the", "film", "is", "the", "film"]];
        let vocab = Vocabulary::build(&docs, 2, 1).unwrap();
        write_vocab(&path, &vocab).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("film\t2\tword\nthe\t2\tword\nthe_film\t2\tngram2\n"));
        let back = read_vocab(&path, Some(2)).unwrap();
        assert_eq!(back, vocab);
    }

    #[test]
    fn rejects_malformed_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "a\t1\tword\nb\tx\tword\n").unwrap();
        let err = read_vocab(&path, None).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
        std::fs::write(&path, "a\t1\n").unwrap();
        assert!(read_vocab(&path, None).is_err());
        std::fs::write(&path, "a\t1\tngram1\n").unwrap();
        assert!(read_vocab(&path, None).is_err());
    }
}
