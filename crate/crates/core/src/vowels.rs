//! Loader for the UCI Japanese Vowels files (`ae.train`, `ae.test`).
//!
//! Each file is a sequence of utterances; an utterance is a block of lines
//! holding 12 whitespace-separated LPC cepstrum coefficients, and blocks are
//! separated by blank lines. Blocks are ordered by speaker, with fixed
//! per-speaker counts. Only speakers 1 and 2 are kept, labelled `-1` and
//! `+1`, and every utterance is reparametrised uniformly onto `[0, 1]`.

use std::fs;
use std::path::Path as FsPath;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::paths::{uniform_grid, Label, LabeledDataset, Path};

pub const VOWEL_DIM: usize = 12;

/// Utterances per speaker in `ae.train`.
pub const TRAIN_BLOCKS: [usize; 9] = [30; 9];
/// Utterances per speaker in `ae.test`.
pub const TEST_BLOCKS: [usize; 9] = [31, 35, 88, 44, 29, 24, 40, 50, 29];

/// Speaker (1-based) to label; speakers other than 1 and 2 are dropped.
fn speaker_label(speaker: usize) -> Option<Label> {
    match speaker {
        1 => Some(Label::Neg),
        2 => Some(Label::Pos),
        _ => None,
    }
}

/// Parses all utterance blocks of an ae-format file.
pub fn read_ae_blocks(path: &FsPath) -> Result<Vec<DMatrix<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut blocks = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let flush = |rows: &mut Vec<f64>, blocks: &mut Vec<DMatrix<f64>>| {
        if !rows.is_empty() {
            let n = rows.len() / VOWEL_DIM;
            blocks.push(DMatrix::from_row_slice(n, VOWEL_DIM, rows));
            rows.clear();
        }
    };
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut rows, &mut blocks);
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != VOWEL_DIM {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected {VOWEL_DIM} fields, found {}", fields.len()),
            });
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("not a real number: {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("non-finite value {f:?}"),
                });
            }
            rows.push(v);
        }
    }
    flush(&mut rows, &mut blocks);
    Ok(blocks)
}

/// Loads one ae-format file, keeping speakers 1 and 2.
///
/// `block_counts[s]` is the number of utterances of speaker `s + 1`.
pub fn load_ae_file(path: &FsPath, block_counts: &[usize]) -> Result<LabeledDataset> {
    let blocks = read_ae_blocks(path)?;
    let expected: usize = block_counts.iter().sum();
    if blocks.len() != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("found {} utterance blocks, expected {expected}", blocks.len()),
        });
    }
    let mut paths = Vec::new();
    let mut labels = Vec::new();
    let mut next = 0;
    for (s, &count) in block_counts.iter().enumerate() {
        let label = speaker_label(s + 1);
        for block in &blocks[next..next + count] {
            if let Some(label) = label {
                let times = uniform_grid(1.0, block.nrows());
                let p = Path::new(times, block.clone()).map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    message: format!("utterance of speaker {}: {e}", s + 1),
                })?;
                paths.push(p);
                labels.push(label);
            }
        }
        next += count;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "japanese-vowels".into());
    LabeledDataset::new(name, paths, labels)
}

/// Train and test datasets for speakers 1–2 from the original files.
pub fn load_japanese_vowels(train_file: &FsPath, test_file: &FsPath) -> Result<(LabeledDataset, LabeledDataset)> {
    let train = load_ae_file(train_file, &TRAIN_BLOCKS)?;
    let test = load_ae_file(test_file, &TEST_BLOCKS)?;
    Ok((train, test))
}
