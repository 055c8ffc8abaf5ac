//! Binary checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "COLENC\0\x01"
//! version  u32      1
//! config   u64 x 9  embed_dim hidden layers max_len vocab_size num_labels batch_size epochs seed
//!          f64      learning_rate
//! count    u64      number of parameters
//! params   f64 x count, row-major in ParamLayout order
//! sha256   32 bytes over everything above
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::{EncoderConfig, EncoderModel, ParamLayout};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"COLENC\0\x01";
const VERSION: u32 = 1;

impl EncoderModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::with_capacity(8 + 4 + 80 + 8 + self.params.len() * 8 + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [
            c.embed_dim,
            c.hidden,
            c.layers,
            c.max_len,
            c.vocab_size,
            c.num_labels,
            c.batch_size,
            c.epochs,
        ] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&c.seed.to_le_bytes());
        out.extend_from_slice(&c.learning_rate.to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < MAGIC.len() + 4 + 80 + 8 + 32 {
            return Err(err("truncated"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(err("checksum mismatch"));
        }
        if &body[..8] != MAGIC {
            return Err(err("bad magic"));
        }
        let mut at = 8;
        let mut take = |n: usize| {
            let s = &body[at..at + n];
            at += n;
            s
        };
        let version = u32::from_le_bytes(take(4).try_into().unwrap());
        if version != VERSION {
            return Err(err(&format!("unsupported version {version}")));
        }
        let mut u = || u64::from_le_bytes(take(8).try_into().unwrap());
        let dims: Vec<usize> = (0..8).map(|_| u() as usize).collect();
        let seed = u();
        let learning_rate = f64::from_bits(u());
        let count = u() as usize;
        let config = EncoderConfig {
            embed_dim: dims[0],
            hidden: dims[1],
            layers: dims[2],
            max_len: dims[3],
            vocab_size: dims[4],
            num_labels: dims[5],
            batch_size: dims[6],
            epochs: dims[7],
            seed,
            learning_rate,
        };
        config.validate().map_err(|e| err(&format!("invalid header: {e}")))?;
        let expected = ParamLayout::new(&config).total();
        if count != expected {
            return Err(err(&format!("header shapes need {expected} parameters, file declares {count}")));
        }
        let rest = &body[at..];
        if rest.len() != count * 8 {
            return Err(err(&format!("expected {} parameter bytes, found {}", count * 8, rest.len())));
        }
        let params = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        EncoderModel::from_parts(config, params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
