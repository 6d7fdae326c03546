//! Binary model container.
//!
//! Layout: the 8-byte magic `STCCNN01`, a little-endian `u64` header length,
//! a JSON header (config, vocabulary size, tensor names and lengths), then
//! every tensor as raw little-endian `f64`: parameters first, accumulators
//! second, each in [`Parameters::tensors`] order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::CnnConfig;
use super::model::{CnnModel, Parameters};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

const MAGIC: &[u8; 8] = b"STCCNN01";

#[derive(Serialize, Deserialize)]
struct Header {
    config: CnnConfig,
    vocab_size: usize,
    tensors: Vec<TensorInfo>,
}

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    len: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Input(format!("corrupt checkpoint: {}", msg.into()))
}

pub fn to_bytes(model: &CnnModel) -> Vec<u8> {
    let mut infos = Vec::new();
    let mut payload = Vec::new();
    for (prefix, p) in [("", &model.params), ("acc.", &model.accumulators)] {
        for (name, values) in p.tensors() {
            infos.push(TensorInfo {
                name: format!("{prefix}{name}"),
                len: values.len(),
            });
            for v in values {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let header = serde_json::to_vec(&Header {
        config: model.config.clone(),
        vocab_size: model.vocab_size(),
        tensors: infos,
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<CnnModel> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(corrupt("missing magic"));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let header_end = 16usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| corrupt("header length exceeds file"))?;
    let header: Header = serde_json::from_slice(&bytes[16..header_end])
        .map_err(|e| corrupt(format!("header: {e}")))?;
    header.config.validate()?;

    let d_w = header.config.d_w;
    let template = CnnModel::new(
        header.config.clone(),
        DenseMatrix::zeros(header.vocab_size, d_w),
    )?;
    let mut params = template.params.clone();
    let mut accumulators = template.accumulators;
    let mut cursor = header_end;
    let mut infos = header.tensors.iter();
    for p in [&mut params, &mut accumulators] {
        fill(p, &mut infos, bytes, &mut cursor)?;
    }
    if cursor != bytes.len() || infos.next().is_some() {
        return Err(corrupt("trailing data"));
    }
    Ok(CnnModel {
        config: header.config,
        params,
        accumulators,
    })
}

fn fill<'a>(
    p: &mut Parameters,
    infos: &mut impl Iterator<Item = &'a TensorInfo>,
    bytes: &[u8],
    cursor: &mut usize,
) -> Result<()> {
    for dst in p.tensors_mut() {
        let info = infos.next().ok_or_else(|| corrupt("too few tensors"))?;
        if info.len != dst.len() {
            return Err(corrupt(format!(
                "tensor {} has {} values, config implies {}",
                info.name,
                info.len,
                dst.len()
            )));
        }
        let end = *cursor + 8 * info.len;
        let raw = bytes
            .get(*cursor..end)
            .ok_or_else(|| corrupt(format!("tensor {} truncated", info.name)))?;
        for (v, chunk) in dst.iter_mut().zip(raw.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
        *cursor = end;
    }
    Ok(())
}

pub fn save(model: &CnnModel, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<CnnModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
