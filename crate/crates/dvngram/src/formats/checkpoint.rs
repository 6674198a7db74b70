//! Per-epoch training snapshot: the vector files plus a small `header.txt`
//! holding the epoch count, a configuration hash and the generator state.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use dvngram_core::model::{EmbeddingModel, Real};
use dvngram_core::trainer::RngState;

use super::vectors::{read_vectors, write_vectors};
use super::{read_lines, write_file};
use crate::error::{Error, Result};

pub const HEADER_FILE: &str = "header.txt";
pub const DOC_VECTORS_FILE: &str = "doc_vectors.txt";
pub const TOKEN_VECTORS_FILE: &str = "token_vectors.txt";
pub const BIASES_FILE: &str = "biases.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointHeader {
    /// Number of completed epochs.
    pub epoch: usize,
    pub config_hash: String,
    pub rng: RngState,
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn from_hex32(s: &str) -> Option<[u8; 32]> {
    if s.len() != 64 || !s.is_ascii() {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, byte) in out.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}

pub fn write_header(path: &Path, header: &CheckpointHeader) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "epoch={}", header.epoch)?;
        writeln!(w, "config_hash={}", header.config_hash)?;
        writeln!(w, "rng_seed={}", to_hex(&header.rng.seed))?;
        writeln!(w, "rng_stream={}", header.rng.stream)?;
        writeln!(w, "rng_word_pos={}", header.rng.word_pos)
    })
}

pub fn read_header(path: &Path) -> Result<CheckpointHeader> {
    let (mut epoch, mut hash, mut seed, mut stream, mut word_pos) = (None, None, None, None, None);
    for (no, line) in read_lines(path)? {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, no, "expected key=value"))?;
        let bad = || Error::parse(path, no, format!("invalid {key}"));
        match key {
            "epoch" => epoch = Some(value.parse().map_err(|_| bad())?),
            "config_hash" => hash = Some(value.to_string()),
            "rng_seed" => seed = Some(from_hex32(value).ok_or_else(bad)?),
            "rng_stream" => stream = Some(value.parse().map_err(|_| bad())?),
            "rng_word_pos" => word_pos = Some(value.parse().map_err(|_| bad())?),
            _ => return Err(Error::parse(path, no, format!("unknown key {key:?}"))),
        }
    }
    match (epoch, hash, seed, stream, word_pos) {
        (Some(epoch), Some(config_hash), Some(seed), Some(stream), Some(word_pos)) => {
            Ok(CheckpointHeader {
                epoch,
                config_hash,
                rng: RngState {
                    seed,
                    stream,
                    word_pos,
                },
            })
        }
        _ => Err(Error::parse(path, 0, "incomplete checkpoint header")),
    }
}

/// Writes the model snapshot and header into `dir`.
pub fn write_checkpoint<T: Real>(
    dir: &Path,
    header: &CheckpointHeader,
    model: &EmbeddingModel<T>,
    doc_names: &[String],
    token_names: &[String],
) -> Result<()> {
    write_vectors(&dir.join(DOC_VECTORS_FILE), doc_names, &model.doc_vectors)?;
    write_vectors(
        &dir.join(TOKEN_VECTORS_FILE),
        token_names,
        &model.token_vectors,
    )?;
    if let Some(b) = &model.biases {
        write_vectors(&dir.join(BIASES_FILE), token_names, b)?;
    }
    // header last: its presence marks a complete snapshot
    write_header(&dir.join(HEADER_FILE), header)
}

pub fn read_checkpoint<T: Real + FromStr>(
    dir: &Path,
) -> Result<(CheckpointHeader, EmbeddingModel<T>)> {
    let header = read_header(&dir.join(HEADER_FILE))?;
    let (_, docs) = read_vectors::<T>(&dir.join(DOC_VECTORS_FILE))?;
    let (_, tokens) = read_vectors::<T>(&dir.join(TOKEN_VECTORS_FILE))?;
    let bias_path = dir.join(BIASES_FILE);
    let biases = if bias_path.exists() {
        Some(read_vectors::<T>(&bias_path)?.1)
    } else {
        None
    };
    Ok((header, EmbeddingModel::from_parts(docs, tokens, biases)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dvngram_core::model::TrainConfig;

    #[test]
    fn header_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(HEADER_FILE);
        let mut seed = [0u8; 32];
        seed[0] = 0xab;
        seed[31] = 0x01;
        let h = CheckpointHeader {
            epoch: 4,
            config_hash: "0123abcd".into(),
            rng: RngState {
                seed,
                stream: 1,
                word_pos: 1 << 70,
            },
        };
        write_header(&path, &h).unwrap();
        assert_eq!(read_header(&path).unwrap(), h);
        std::fs::write(&path, "epoch=1\n").unwrap();
        assert!(read_header(&path).is_err());
    }

    #[test]
    fn checkpoint_round_trip_with_biases() {
        let dir = tempfile::tempdir().unwrap();
        let config = TrainConfig {
            dim: 3,
            use_bias: true,
            ..TrainConfig::default()
        };
        let model = EmbeddingModel::<f32>::init(2, 4, &config).unwrap();
        model.biases.as_ref().unwrap().set(2, 0, 0.125);
        let header = CheckpointHeader {
            epoch: 1,
            config_hash: "h".into(),
            rng: RngState {
                seed: [7; 32],
                stream: 0,
                word_pos: 9,
            },
        };
        let docs = vec!["doc_0".to_string(), "doc_1".to_string()];
        let toks: Vec<String> = ["a", "b", "c", "a_b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        write_checkpoint(dir.path(), &header, &model, &docs, &toks).unwrap();
        let (h, back) = read_checkpoint::<f32>(dir.path()).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, model);
    }
}
