use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::NetError;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"QSBD";
const VERSION: u32 = 1;

/// Training provenance stored alongside the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CheckpointMeta {
    pub epoch: usize,
    pub seed: u64,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: Value,
    meta: CheckpointMeta,
    params: Vec<ParamEntry>,
}

/// A loaded checkpoint: architecture config as JSON, metadata, and the
/// named parameter tensors in file order.
#[derive(Debug)]
pub struct Checkpoint {
    pub config: Value,
    pub meta: CheckpointMeta,
    pub params: Vec<(String, Tensor<f32>)>,
}

impl Checkpoint {
    pub fn param(&self, name: &str) -> Option<&Tensor<f32>> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

fn crc32_table() -> &'static [u32; 256] {
    static TABLE: OnceLock<[u32; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0u32; 256];
        for (i, entry) in table.iter_mut().enumerate() {
            let mut c = i as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            }
            *entry = c;
        }
        table
    })
}

/// CRC-32 (IEEE 802.3).
pub fn crc32(data: &[u8]) -> u32 {
    let table = crc32_table();
    let mut c = 0xFFFF_FFFFu32;
    for &b in data {
        c = table[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

/// Serialize parameters to `path`: magic, version, header JSON (config +
/// meta + parameter directory), raw little-endian f32 blobs, and a trailing
/// CRC-32 over everything before it. The write goes through a temp file and
/// rename, so a checkpoint is never observable half-written.
pub fn save_checkpoint(
    path: impl AsRef<Path>,
    config: &Value,
    meta: &CheckpointMeta,
    params: &[(&str, &Tensor<f32>)],
) -> Result<(), NetError> {
    let mut entries = Vec::with_capacity(params.len());
    let mut offset = 0u64;
    for (name, tensor) in params {
        entries.push(ParamEntry {
            name: name.to_string(),
            shape: tensor.shape().to_vec(),
            offset,
        });
        offset += (tensor.numel() * 4) as u64;
    }
    let header = Header {
        config: config.clone(),
        meta: meta.clone(),
        params: entries,
    };
    let header_bytes = serde_json::to_vec(&header).expect("header serializes");

    let mut buf =
        Vec::with_capacity(16 + header_bytes.len() + offset as usize + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header_bytes);
    for (_, tensor) in params {
        for v in tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());

    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, NetError> {
    let buf = fs::read(path.as_ref())?;
    if buf.len() < 20 {
        return Err(NetError::ChecksumMismatch);
    }
    let (body, crc_bytes) = buf.split_at(buf.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32(body) != stored {
        return Err(NetError::ChecksumMismatch);
    }
    if &body[..4] != MAGIC {
        return Err(NetError::BadCheckpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(body[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(NetError::BadCheckpoint(format!("unsupported version {version}")));
    }
    let header_len = u64::from_le_bytes(body[8..16].try_into().unwrap()) as usize;
    if body.len() < 16 + header_len {
        return Err(NetError::ChecksumMismatch);
    }
    let header: Header = serde_json::from_slice(&body[16..16 + header_len])
        .map_err(|e| NetError::BadCheckpoint(format!("bad header: {e}")))?;
    let blob = &body[16 + header_len..];

    let mut params = Vec::with_capacity(header.params.len());
    for entry in &header.params {
        let numel: usize = entry.shape.iter().product();
        let start = entry.offset as usize;
        let end = start + numel * 4;
        if end > blob.len() {
            return Err(NetError::BadCheckpoint(format!(
                "parameter {} extends past end of file",
                entry.name
            )));
        }
        let mut data = Vec::with_capacity(numel);
        for chunk in blob[start..end].chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
        params.push((
            entry.name.clone(),
            Tensor::from_vec(&entry.shape, data)
                .map_err(|e| NetError::BadCheckpoint(e.to_string()))?,
        ));
    }
    Ok(Checkpoint { config: header.config, meta: header.meta, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.qsbd");
        let w = Tensor::from_vec(&[2, 3], vec![0.1f32, -2.5, 3e-8, 4.0, 5.5, -0.0]).unwrap();
        let b = Tensor::from_vec(&[2], vec![1.0f32, f32::MIN_POSITIVE]).unwrap();
        let meta = CheckpointMeta { epoch: 7, seed: 42, loss_history: vec![0.9, 0.5] };
        save_checkpoint(
            &path,
            &json!({"profile": "compact"}),
            &meta,
            &[("l.weight", &w), ("l.bias", &b)],
        )
        .unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.meta, meta);
        assert_eq!(ck.config, json!({"profile": "compact"}));
        assert_eq!(ck.param("l.weight").unwrap(), &w);
        assert_eq!(ck.param("l.bias").unwrap(), &b);
    }

    #[test]
    fn truncated_file_is_checksum_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.qsbd");
        let w = Tensor::from_vec(&[4], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        save_checkpoint(&path, &json!({}), &CheckpointMeta::default(), &[("w", &w)]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(NetError::ChecksumMismatch)));
    }

    #[test]
    fn corrupted_byte_is_checksum_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.qsbd");
        let w = Tensor::from_vec(&[1], vec![1.0f32]).unwrap();
        save_checkpoint(&path, &json!({}), &CheckpointMeta::default(), &[("w", &w)]).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(NetError::ChecksumMismatch)));
    }

    #[test]
    fn crc32_known_vector() {
        // standard test vector: CRC-32("123456789") = 0xCBF43926
        assert_eq!(crc32(b"123456789"), 0xCBF43926);
    }
}
