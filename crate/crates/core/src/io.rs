// Copyright 2026 The osqec Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON file formats.
//!
//! A complex number is `[re, im]`; a matrix is a list of rows. Channel files
//! hold `{d_s, d_b, kraus, perturbation?}`, code files `{d_s, basis}` with one
//! vector per basis state, split files `{e_tilde_p}` with one full
//! system–bath operator per Kraus term.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{KrausChannel, CP_TOL};
use crate::codes::CodeSpace;
use crate::error::{Error, Result};
use crate::matcore::{C64, ComplexMatrix};

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelJson {
    d_s: usize,
    d_b: usize,
    kraus: Vec<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perturbation: Option<Vec<RawMatrix>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeJson {
    d_s: usize,
    basis: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitJson {
    e_tilde_p: Vec<RawMatrix>,
}

/// A channel file: the channel plus an optional perturbation direction.
#[derive(Debug, Clone)]
pub struct ChannelFile {
    pub channel: KrausChannel,
    pub perturbation: Option<Vec<ComplexMatrix>>,
}

impl ChannelFile {
    /// The channel at perturbation scale `t`; `t = 0` is the stored channel.
    pub fn at(&self, t: f64) -> Result<KrausChannel> {
        if t == 0.0 {
            return Ok(self.channel.clone());
        }
        match &self.perturbation {
            Some(g) => self.channel.perturbed(g, t),
            None => Err(Error::Invalid(
                "a nonzero scale needs a perturbation field in the channel file".into(),
            )),
        }
    }
}

fn parse_err(origin: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        message: message.into(),
    }
}

fn to_matrix(raw: &RawMatrix, dim: usize, field: &str, origin: &str) -> Result<ComplexMatrix> {
    if raw.len() != dim {
        return Err(parse_err(
            origin,
            format!("{field}: expected {dim} rows, got {}", raw.len()),
        ));
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != dim {
            return Err(parse_err(
                origin,
                format!("{field} row {i}: expected {dim} entries, got {}", row.len()),
            ));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(parse_err(origin, format!("{field}[{i}][{j}]: non-finite entry")));
            }
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

fn from_matrix(m: &ComplexMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_err(origin, e.to_string()))
}

fn matrices(list: &[RawMatrix], dim: usize, field: &str, origin: &str) -> Result<Vec<ComplexMatrix>> {
    list.iter()
        .enumerate()
        .map(|(a, m)| to_matrix(m, dim, &format!("{field}[{a}]"), origin))
        .collect()
}

pub fn parse_channel(text: &str, origin: &str) -> Result<ChannelFile> {
    let raw: ChannelJson = from_json(text, origin)?;
    if raw.d_s == 0 || raw.d_b == 0 {
        return Err(parse_err(origin, "d_s and d_b must be positive"));
    }
    if raw.kraus.is_empty() {
        return Err(parse_err(origin, "kraus: at least one operator is required"));
    }
    let dim = raw.d_s * raw.d_b;
    let kraus = matrices(&raw.kraus, dim, "kraus", origin)?;
    let perturbation = match &raw.perturbation {
        None => None,
        Some(list) => {
            if list.len() != kraus.len() {
                return Err(parse_err(
                    origin,
                    format!(
                        "perturbation: expected {} operators, got {}",
                        kraus.len(),
                        list.len()
                    ),
                ));
            }
            Some(matrices(list, dim, "perturbation", origin)?)
        }
    };
    let channel = KrausChannel::new(raw.d_s, raw.d_b, kraus)?;
    channel.verify_cp(CP_TOL)?;
    Ok(ChannelFile {
        channel,
        perturbation,
    })
}

pub fn parse_code(text: &str, origin: &str) -> Result<CodeSpace> {
    let raw: CodeJson = from_json(text, origin)?;
    if raw.basis.is_empty() {
        return Err(parse_err(origin, "basis: at least one vector is required"));
    }
    let mut basis = ComplexMatrix::zeros(raw.d_s, raw.basis.len());
    for (c, v) in raw.basis.iter().enumerate() {
        if v.len() != raw.d_s {
            return Err(parse_err(
                origin,
                format!("basis[{c}]: expected {} entries, got {}", raw.d_s, v.len()),
            ));
        }
        for (r, &[re, im]) in v.iter().enumerate() {
            basis[(r, c)] = C64::new(re, im);
        }
    }
    CodeSpace::new(basis)
}

/// Parse a split file for a channel on `dim = d_s·d_b`.
pub fn parse_split(text: &str, origin: &str, dim: usize) -> Result<Vec<ComplexMatrix>> {
    let raw: SplitJson = from_json(text, origin)?;
    matrices(&raw.e_tilde_p, dim, "e_tilde_p", origin)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_channel(path: &Path) -> Result<ChannelFile> {
    parse_channel(&read(path)?, &path.display().to_string())
}

pub fn load_code(path: &Path) -> Result<CodeSpace> {
    parse_code(&read(path)?, &path.display().to_string())
}

pub fn load_split(path: &Path, dim: usize) -> Result<Vec<ComplexMatrix>> {
    parse_split(&read(path)?, &path.display().to_string(), dim)
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn channel_to_json(ch: &KrausChannel, perturbation: Option<&[ComplexMatrix]>) -> String {
    pretty(&ChannelJson {
        d_s: ch.d_s(),
        d_b: ch.d_b(),
        kraus: ch.kraus().iter().map(from_matrix).collect(),
        perturbation: perturbation.map(|g| g.iter().map(from_matrix).collect()),
    })
}

pub fn code_to_json(code: &CodeSpace) -> String {
    let b = code.basis();
    pretty(&CodeJson {
        d_s: code.d_s(),
        basis: (0..b.ncols())
            .map(|c| (0..b.nrows()).map(|r| [b[(r, c)].re, b[(r, c)].im]).collect())
            .collect(),
    })
}

pub fn split_to_json(e_tilde_p: &[ComplexMatrix]) -> String {
    pretty(&SplitJson {
        e_tilde_p: e_tilde_p.iter().map(from_matrix).collect(),
    })
}
