use std::path::Path;

use super::model::{FieldModel, Network};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HNET";
pub const VERSION: u32 = 1;
/// magic, version, kind, count.
pub const HEADER_LEN: usize = 4 + 4 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum ParamKind {
    RealMlp = 1,
    ComplexMlp = 2,
    CurlPair = 3,
    Piecewise = 4,
    QuantumCircuit = 5,
}

impl ParamKind {
    pub fn from_u32(v: u32) -> Result<Self> {
        Ok(match v {
            1 => Self::RealMlp,
            2 => Self::ComplexMlp,
            3 => Self::CurlPair,
            4 => Self::Piecewise,
            5 => Self::QuantumCircuit,
            k => return Err(Error::Format(format!("unknown parameter kind {k}"))),
        })
    }

    pub fn of(net: &Network) -> Self {
        if net.parts.len() > 1 {
            return Self::Piecewise;
        }
        match &net.parts[0] {
            FieldModel::Real { .. } | FieldModel::Hpinn { .. } => Self::RealMlp,
            FieldModel::Holomorphic { .. } => Self::ComplexMlp,
            FieldModel::Curl { .. } => Self::CurlPair,
            FieldModel::Quantum { .. } => Self::QuantumCircuit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamFile {
    pub kind: ParamKind,
    pub params: Vec<f64>,
}

pub fn encode(kind: ParamKind, params: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(kind as u32).to_le_bytes());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ParamFile> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "parameter file is {} bytes, shorter than its header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected HNET".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported parameter file version {version}")));
    }
    let kind = ParamKind::from_u32(u32_at(8))?;
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let body = &bytes[HEADER_LEN..];
    if (body.len() as u64) != count.saturating_mul(8) {
        return Err(Error::Format(format!(
            "header declares {count} parameters but {} bytes follow",
            body.len()
        )));
    }
    let params = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(ParamFile { kind, params })
}

pub fn save(path: &Path, net: &Network, params: &[f64]) -> Result<()> {
    if params.len() != net.param_count() {
        return Err(Error::DimensionMismatch {
            expected: net.param_count(),
            got: params.len(),
        });
    }
    std::fs::write(path, encode(ParamKind::of(net), params))?;
    Ok(())
}

/// Reads parameters for `net`, checking kind and count against it.
pub fn load(path: &Path, net: &Network) -> Result<Vec<f64>> {
    let file = decode(&std::fs::read(path)?)?;
    let want = ParamKind::of(net);
    if file.kind != want {
        return Err(Error::Format(format!(
            "file holds {:?} parameters, network needs {want:?}",
            file.kind
        )));
    }
    if file.params.len() != net.param_count() {
        return Err(Error::DimensionMismatch {
            expected: net.param_count(),
            got: file.params.len(),
        });
    }
    Ok(file.params)
}
