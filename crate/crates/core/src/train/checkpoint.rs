//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!   magic "SVEHDR01", u32 version,
//!   u8 dtype code,
//!   u32 config-block length + UTF-8 key=value lines (the model config),
//!   u64 iteration,
//!   rng state: 32-byte seed, u64 stream, u128 word position,
//!   u32 tensor count, then per tensor: u32 name length, name bytes,
//!     u8 dtype code, u8 rank, rank x u64 extents, payload,
//!   u8 optimizer flag; when set: u64 step, f64 beta1/beta2/epsilon and two
//!     moment tensors per parameter (same order, same shapes, no names).
//!
//! Save -> load -> save is byte-identical; loading verifies the magic,
//! version, dtype and every shape against the config.

use crate::error::{Error, Result};
use crate::network::{build_model, Model, ModelConfig};
use crate::optim::AdamState;
use crate::scalar::{Dtype, Scalar};
use crate::tensor::{Shape4, Tensor};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 8] = b"SVEHDR01";
const VERSION: u32 = 1;

/// Everything a resumed run needs.
pub struct Checkpoint<T: Scalar> {
    pub config: ModelConfig,
    pub iteration: u64,
    pub model: Model<T>,
    pub optimizer: Option<AdamState<T>>,
    pub rng: ChaCha8Rng,
}

fn push_tensor<T: Scalar>(buf: &mut Vec<u8>, name: &str, t: &Tensor<T>) {
    buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
    buf.extend_from_slice(name.as_bytes());
    buf.push(T::DTYPE.code());
    buf.push(4u8);
    for e in t.shape() {
        buf.extend_from_slice(&(e as u64).to_le_bytes());
    }
    for &v in t.data() {
        v.write_le(buf);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: std::path::PathBuf,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::FileFormat {
                format: "checkpoint",
                path: self.path.clone(),
                detail: format!("truncated at byte {}", self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bad(&self, detail: String) -> Error {
        Error::FileFormat { format: "checkpoint", path: self.path.clone(), detail }
    }
    fn tensor<T: Scalar>(&mut self) -> Result<(String, Tensor<T>)> {
        let len = self.u32()? as usize;
        let name = String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| self.bad("non-UTF8 tensor name".into()))?;
        let code = self.u8()?;
        if code != T::DTYPE.code() {
            return Err(self.bad(format!(
                "tensor '{name}' has dtype code {code}, expected {}",
                T::DTYPE.code()
            )));
        }
        let rank = self.u8()?;
        if rank != 4 {
            return Err(self.bad(format!("tensor '{name}' has rank {rank}, expected 4")));
        }
        let mut shape: Shape4 = [0; 4];
        for e in &mut shape {
            *e = self.u64()? as usize;
        }
        let n: usize = shape.iter().product();
        let payload = self.take(n * T::DTYPE.size_bytes())?;
        let data = payload
            .chunks_exact(T::DTYPE.size_bytes())
            .map(T::read_le)
            .collect();
        Ok((name, Tensor::from_vec(shape, data)?))
    }
}

pub fn save_checkpoint<T: Scalar>(path: &Path, ckpt: &Checkpoint<T>) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(T::DTYPE.code());
    let config_text: String = ckpt
        .config
        .to_kv()
        .into_iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect();
    buf.extend_from_slice(&(config_text.len() as u32).to_le_bytes());
    buf.extend_from_slice(config_text.as_bytes());
    buf.extend_from_slice(&ckpt.iteration.to_le_bytes());
    buf.extend_from_slice(&ckpt.rng.get_seed());
    buf.extend_from_slice(&ckpt.rng.get_stream().to_le_bytes());
    buf.extend_from_slice(&ckpt.rng.get_word_pos().to_le_bytes());

    let params = ckpt.model.named_params();
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in &params {
        push_tensor(&mut buf, name, t);
    }
    match &ckpt.optimizer {
        Some(opt) => {
            buf.push(1);
            buf.extend_from_slice(&opt.step.to_le_bytes());
            buf.extend_from_slice(&opt.beta1.to_le_bytes());
            buf.extend_from_slice(&opt.beta2.to_le_bytes());
            buf.extend_from_slice(&opt.epsilon.to_le_bytes());
            if opt.moments.len() != params.len() {
                return Err(Error::InvalidArgument(format!(
                    "optimizer tracks {} tensors, model has {}",
                    opt.moments.len(),
                    params.len()
                )));
            }
            for (m, v) in &opt.moments {
                push_tensor(&mut buf, "", m);
                push_tensor(&mut buf, "", v);
            }
        }
        None => buf.push(0),
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// dtype recorded in a checkpoint file, for dispatch before a typed load.
pub fn checkpoint_dtype(path: &Path) -> Result<Dtype> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 13 || &bytes[..8] != MAGIC {
        return Err(Error::FileFormat {
            format: "checkpoint",
            path: path.to_path_buf(),
            detail: "bad magic".into(),
        });
    }
    Dtype::from_code(bytes[12]).ok_or_else(|| Error::FileFormat {
        format: "checkpoint",
        path: path.to_path_buf(),
        detail: format!("unknown dtype code {}", bytes[12]),
    })
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Checkpoint<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0, path: path.to_path_buf() };
    if r.take(8)? != MAGIC {
        return Err(r.bad("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(r.bad(format!("unsupported version {version}")));
    }
    let dtype = r.u8()?;
    if dtype != T::DTYPE.code() {
        return Err(r.bad(format!(
            "checkpoint dtype code {dtype} does not match requested {}",
            T::DTYPE.code()
        )));
    }
    let config_len = r.u32()? as usize;
    let config_text = String::from_utf8(r.take(config_len)?.to_vec())
        .map_err(|_| r.bad("non-UTF8 config block".into()))?;
    let kv: BTreeMap<String, String> = super::parse_kv_text(&config_text)?;
    let config = ModelConfig::from_kv(&kv)?;
    let iteration = r.u64()?;
    let rng_seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let rng_stream = r.u64()?;
    let rng_word_pos = r.u128()?;

    let n_tensors = r.u32()? as usize;
    let mut params = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        params.push(r.tensor::<T>()?);
    }
    let optimizer = if r.u8()? == 1 {
        let step = r.u64()?;
        let beta1 = r.f64()?;
        let beta2 = r.f64()?;
        let epsilon = r.f64()?;
        let mut moments = Vec::with_capacity(n_tensors);
        for _ in 0..n_tensors {
            let (_, m) = r.tensor::<T>()?;
            let (_, v) = r.tensor::<T>()?;
            moments.push((m, v));
        }
        Some((step, beta1, beta2, epsilon, moments))
    } else {
        None
    };
    if r.pos != bytes.len() {
        return Err(r.bad(format!("{} trailing bytes", bytes.len() - r.pos)));
    }

    // materialize the model: build the skeleton, then overwrite parameters
    let mut model: Model<T> = build_model(&config, 0)?;
    {
        let mut expected = model.named_params_mut();
        if expected.len() != params.len() {
            return Err(Error::CheckpointMismatch {
                detail: format!(
                    "config implies {} tensors, file holds {}",
                    expected.len(),
                    params.len()
                ),
            });
        }
        for ((name, slot), (file_name, tensor)) in expected.iter_mut().zip(params) {
            if *name != file_name {
                return Err(Error::CheckpointMismatch {
                    detail: format!("tensor order mismatch: expected '{name}', found '{file_name}'"),
                });
            }
            if slot.shape() != tensor.shape() {
                return Err(Error::CheckpointMismatch {
                    detail: format!(
                        "tensor '{name}' has shape {:?}, config implies {:?}",
                        tensor.shape(),
                        slot.shape()
                    ),
                });
            }
            **slot = tensor;
        }
    }
    let optimizer = match optimizer {
        Some((step, beta1, beta2, epsilon, moments)) => {
            let mut st = AdamState::new(&model.named_params().iter().map(|(_, t)| *t).collect::<Vec<_>>());
            st.step = step;
            st.beta1 = beta1;
            st.beta2 = beta2;
            st.epsilon = epsilon;
            for (slot, loaded) in st.moments.iter_mut().zip(moments) {
                if slot.0.shape() != loaded.0.shape() {
                    return Err(Error::CheckpointMismatch {
                        detail: "optimizer moment shape mismatch".into(),
                    });
                }
                *slot = loaded;
            }
            Some(st)
        }
        None => None,
    };

    let mut rng = ChaCha8Rng::from_seed(rng_seed);
    rng.set_stream(rng_stream);
    rng.set_word_pos(rng_word_pos);

    Ok(Checkpoint { config, iteration, model, optimizer, rng })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Fusion, ModelConfig};
    use crate::svc::FirstLayerKind;
    use rand::RngCore;

    fn mini() -> ModelConfig {
        ModelConfig {
            rb_blocks: 2,
            egb_blocks: 2,
            channels: 6,
            egb_c: 3,
            rb_head: FirstLayerKind::SvcD,
            egb_head: FirstLayerKind::OptBase,
            fusion: Fusion::EgbBeta,
            beta_init: 1.0,
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = mini();
        let model: Model<f64> = build_model(&config, 5).unwrap();
        let params: Vec<&Tensor<f64>> = model.named_params().iter().map(|(_, t)| *t).collect();
        let mut opt = AdamState::new(&params);
        opt.step = 17;
        let mut rng = ChaCha8Rng::from_seed([7u8; 32]);
        rng.set_stream(3);
        let mut sink = [0u8; 40];
        rng.fill_bytes(&mut sink); // advance the word position
        let ckpt = Checkpoint { config, iteration: 17, model, optimizer: Some(opt), rng };

        let p1 = dir.path().join("a.svehdr");
        let p2 = dir.path().join("b.svehdr");
        save_checkpoint(&p1, &ckpt).unwrap();
        let loaded = load_checkpoint::<f64>(&p1).unwrap();
        assert_eq!(loaded.iteration, 17);
        assert_eq!(loaded.optimizer.as_ref().unwrap().step, 17);
        save_checkpoint(&p2, &loaded).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        // the restored rng continues identically
        let mut a = loaded.rng.clone();
        let mut b = ckpt.rng.clone();
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn dtype_probe_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let config = mini();
        let model: Model<f32> = build_model(&config, 5).unwrap();
        let ckpt = Checkpoint {
            config,
            iteration: 0,
            model,
            optimizer: None,
            rng: ChaCha8Rng::from_seed([0u8; 32]),
        };
        let p = dir.path().join("c.svehdr");
        save_checkpoint(&p, &ckpt).unwrap();
        assert_eq!(checkpoint_dtype(&p).unwrap(), Dtype::F32);
        assert!(load_checkpoint::<f64>(&p).is_err());
        assert!(load_checkpoint::<f32>(&p).is_ok());
    }
}
