//! Checkpoint file format.
//!
//! Layout (little-endian): magic `CGRN`, format version (u32), the model
//! configuration as a length-prefixed key=value text block (u32 byte count,
//! then UTF-8 bytes), followed by one record per parameter group until end
//! of file: name length (u16), name bytes, rows (u32), cols (u32), then
//! row-major 32-bit floats. The normalization statistics are appended as
//! two named groups (`norm.mean`, `norm.std`).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor2;

use super::config::ModelConfig;
use super::network::{ModelParams, NetWeights};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CGRN";
pub const CHECKPOINT_VERSION: u32 = 1;

pub const NORM_MEAN_GROUP: &str = "norm.mean";
pub const NORM_STD_GROUP: &str = "norm.std";

fn write_group<S: Scalar>(bytes: &mut Vec<u8>, name: &str, tensor: &Tensor2<S>) {
    bytes.extend_from_slice(&(name.len() as u16).to_le_bytes());
    bytes.extend_from_slice(name.as_bytes());
    bytes.extend_from_slice(&(tensor.rows() as u32).to_le_bytes());
    bytes.extend_from_slice(&(tensor.cols() as u32).to_le_bytes());
    for v in tensor.data() {
        bytes.extend_from_slice(&v.to_f32().unwrap().to_le_bytes());
    }
}

pub fn save_checkpoint<S: Scalar>(path: &Path, params: &ModelParams<S>) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let config_text = params.config.to_kv();
    bytes.extend_from_slice(&(config_text.len() as u32).to_le_bytes());
    bytes.extend_from_slice(config_text.as_bytes());
    for (name, tensor) in params.net.tensors() {
        write_group(&mut bytes, &name, tensor);
    }
    let dim = params.norm.dim();
    let mean = Tensor2::from_vec(1, dim, params.norm.mean.clone())?;
    let std = Tensor2::from_vec(1, dim, params.norm.std.clone())?;
    write_group(&mut bytes, NORM_MEAN_GROUP, &mean);
    write_group(&mut bytes, NORM_STD_GROUP, &std);

    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, message: &str) -> Error {
        Error::Format {
            offset: self.pos as u64,
            message: message.to_string(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.fail(&format!("truncated checkpoint while reading {what}")));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16_le(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32_le(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<ModelParams<S>> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad checkpoint magic".into(),
        });
    }
    let version = r.u32_le("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported checkpoint version {version}"),
        });
    }
    let config_len = r.u32_le("config length")? as usize;
    let config_bytes = r.take(config_len, "config block")?;
    let config_text = std::str::from_utf8(config_bytes)
        .map_err(|_| r.fail("config block is not valid UTF-8"))?;
    let config = ModelConfig::from_kv(config_text)?;

    let mut groups: HashMap<String, Tensor2<S>> = HashMap::new();
    while !r.done() {
        let name_len = r.u16_le("group name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "group name")?)
            .map_err(|_| r.fail("group name is not valid UTF-8"))?
            .to_string();
        let rows = r.u32_le("group rows")? as usize;
        let cols = r.u32_le("group cols")? as usize;
        let payload = r.take(rows * cols * 4, "group data")?;
        let data: Vec<S> = payload
            .chunks_exact(4)
            .map(|c| S::from(f32::from_le_bytes(c.try_into().unwrap())).unwrap())
            .collect();
        if groups
            .insert(name.clone(), Tensor2::from_vec(rows, cols, data)?)
            .is_some()
        {
            return Err(r.fail(&format!("duplicate parameter group '{name}'")));
        }
    }

    // Assemble by name against the canonical layout.
    let mut net = NetWeights::<S>::zeros(&config);
    for (name, tensor) in net.tensors_mut() {
        let loaded = groups
            .remove(&name)
            .ok_or_else(|| Error::Format {
                offset: bytes.len() as u64,
                message: format!("checkpoint is missing parameter group '{name}'"),
            })?;
        if loaded.shape() != tensor.shape() {
            return Err(Error::Format {
                offset: bytes.len() as u64,
                message: format!(
                    "group '{name}' has shape {:?}, expected {:?}",
                    loaded.shape(),
                    tensor.shape()
                ),
            });
        }
        *tensor = loaded;
    }
    let mean = groups.remove(NORM_MEAN_GROUP).ok_or_else(|| Error::Format {
        offset: bytes.len() as u64,
        message: format!("checkpoint is missing '{NORM_MEAN_GROUP}'"),
    })?;
    let std = groups.remove(NORM_STD_GROUP).ok_or_else(|| Error::Format {
        offset: bytes.len() as u64,
        message: format!("checkpoint is missing '{NORM_STD_GROUP}'"),
    })?;
    if !groups.is_empty() {
        let extra: Vec<String> = groups.keys().cloned().collect();
        return Err(Error::Format {
            offset: bytes.len() as u64,
            message: format!("unexpected parameter groups: {}", extra.join(", ")),
        });
    }
    let expected_dim = config.feature_dim();
    if mean.len() != expected_dim || std.len() != expected_dim {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            message: format!(
                "normalization length {} does not match feature dim {expected_dim}",
                mean.len()
            ),
        });
    }

    Ok(ModelParams {
        config,
        net,
        norm: crate::dsp::Normalization {
            mean: mean.data().to_vec(),
            std: std.data().to_vec(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::FeatureSequence;
    use crate::model::config::ModelConfig;
    use crate::model::network::{init_params, model_forward};
    use crate::rng::Rng;

    fn temp_path(tag: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("cgrnn-ckpt-{tag}-{}", std::process::id()))
    }

    #[test]
    fn round_trip_reproduces_bit_identical_posteriors() {
        let cfg = ModelConfig::tiny().with_imd(true);
        let params = init_params::<f32>(&cfg, &mut Rng::new(91)).unwrap();
        let path = temp_path("roundtrip");
        save_checkpoint(&path, &params).unwrap();
        let loaded = load_checkpoint::<f32>(&path).unwrap();

        let mut rng = Rng::new(92);
        for _ in 0..5 {
            let mut basic = FeatureSequence {
                kind: cfg.basic.feature_kind(),
                data: rng.uniform_tensor::<f32>(4, 8, -1.0, 1.0),
            };
            basic.kind = cfg.basic.feature_kind();
            let imd = FeatureSequence {
                kind: crate::dsp::FeatureKind::Imd257,
                data: rng.uniform_tensor::<f32>(4, 8, -1.0, 1.0),
            };
            let (p1, _) = model_forward(&params, &basic, Some(&imd)).unwrap();
            let (p2, _) = model_forward(&loaded, &basic, Some(&imd)).unwrap();
            for (a, b) in p1.probs.iter().zip(&p2.probs) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn bad_magic_is_reported() {
        let path = temp_path("badmagic");
        std::fs::write(&path, b"NOPE0000").unwrap();
        let err = load_checkpoint::<f32>(&path).unwrap_err();
        assert!(err.to_string().contains("bad checkpoint magic"), "{err}");
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn unsupported_version_is_reported() {
        let path = temp_path("badversion");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&99u32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        let err = load_checkpoint::<f32>(&path).unwrap_err();
        assert!(err.to_string().contains("version 99"), "{err}");
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn truncated_file_is_reported_with_offset() {
        let cfg = ModelConfig::tiny();
        let params = init_params::<f32>(&cfg, &mut Rng::new(93)).unwrap();
        let path = temp_path("trunc");
        save_checkpoint(&path, &params).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_checkpoint::<f32>(&path).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
        std::fs::remove_file(&path).ok();
    }
}
