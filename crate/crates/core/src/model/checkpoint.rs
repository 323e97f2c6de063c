//! Binary checkpoint format:
//!
//! ```text
//! "UIKA"            4 bytes magic
//! version           u32 little-endian
//! manifest length   u32 little-endian, byte length of the manifest
//! manifest          JSON {"tensors": [{"name", "shape", "dtype": "f64"}, ...]}
//! data              every tensor's values as little-endian f64, manifest order
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ParamSet, Tensor};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"UIKA";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    tensors: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
}

pub fn save_checkpoint(params: &ParamSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let manifest = Manifest {
        tensors: params
            .iter()
            .map(|(name, t)| Entry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                dtype: "f64".into(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest)?;
    let tmp = path.with_extension("tmp");
    let io = |e| Error::io(&tmp, e);
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io)?);
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(json.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&json).map_err(io)?;
        for (_, t) in params.iter() {
            for v in t.data() {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ParamSet> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut read = |buf: &mut [u8], what: &str| {
        r.read_exact(buf)
            .map_err(|_| Error::Checkpoint(format!("{}: truncated while reading {what}", path.display())))
    };

    let mut magic = [0u8; 4];
    read(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("{}: bad magic {magic:?}", path.display())));
    }
    let mut word = [0u8; 4];
    read(&mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "{}: unsupported format version {version}",
            path.display()
        )));
    }
    read(&mut word, "manifest length")?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    read(&mut json, "manifest")?;
    let manifest: Manifest = serde_json::from_slice(&json)
        .map_err(|e| Error::Checkpoint(format!("{}: bad manifest: {e}", path.display())))?;

    let mut params = ParamSet::new();
    for entry in manifest.tensors {
        if entry.dtype != "f64" {
            return Err(Error::Checkpoint(format!(
                "{}: tensor {} has unsupported dtype {}",
                path.display(),
                entry.name,
                entry.dtype
            )));
        }
        let n: usize = entry.shape.iter().product();
        let mut bytes = vec![0u8; n * 8];
        read(&mut bytes, &entry.name)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        params.insert(entry.name, Tensor::new(entry.shape, data)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Checkpoint(format!("{}: trailing bytes after data", path.display())));
    }
    Ok(params)
}

/// Loads and checks tensor names and shapes against `expected`.
pub fn load_checkpoint_matching(path: impl AsRef<Path>, expected: &ParamSet) -> Result<ParamSet> {
    let params = load_checkpoint(path)?;
    expected.check_compatible(&params)?;
    Ok(params)
}
