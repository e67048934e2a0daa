//! Binary artifact containers.
//!
//! Every artifact has the same framing:
//!
//! ```text
//! magic        8 bytes, ASCII (e.g. "VVOL0001")
//! header_len   u32, little-endian, byte length of the JSON header
//! header       UTF-8 JSON object
//! payload      little-endian f32 values, count implied by the header
//! ```

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::volume::{Dims, Volume};

pub const VVOL_MAGIC: &[u8; 8] = b"VVOL0001";
pub const VCKPT_MAGIC: &[u8; 8] = b"VCKPT001";
pub const VHMP_MAGIC: &[u8; 8] = b"VHMP0001";

pub fn encode<H: Serialize>(magic: &[u8; 8], header: &H, payload: &[f32]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(header)?;
    let header_len = u32::try_from(json.len())
        .map_err(|_| Error::Format("header larger than 4 GiB".into()))?;
    let mut out = Vec::with_capacity(12 + json.len() + 4 * payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(&json);
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Splits a container into its decoded header and raw payload values.
pub fn decode<H: DeserializeOwned>(magic: &[u8; 8], bytes: &[u8]) -> Result<(H, Vec<f32>)> {
    let name = String::from_utf8_lossy(magic).into_owned();
    if bytes.len() < 12 {
        return Err(Error::Format(format!("{name}: truncated before header")));
    }
    if &bytes[..8] != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {name}",
            String::from_utf8_lossy(&bytes[..8])
        )));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() < header_len {
        return Err(Error::Format(format!("{name}: truncated header")));
    }
    let header = serde_json::from_slice(&body[..header_len])
        .map_err(|e| Error::Format(format!("{name}: header: {e}")))?;
    let raw = &body[header_len..];
    if raw.len() % 4 != 0 {
        return Err(Error::Format(format!("{name}: payload is not a whole number of f32 values")));
    }
    let payload = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, payload))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize, Deserialize)]
struct VolumeHeader {
    dims: Dims,
    dtype: String,
    standardized: bool,
}

pub fn encode_volume(v: &Volume) -> Result<Vec<u8>> {
    let header = VolumeHeader { dims: v.dims(), dtype: "f32le".into(), standardized: v.is_standardized() };
    encode(VVOL_MAGIC, &header, v.data())
}

pub fn decode_volume(bytes: &[u8]) -> Result<Volume> {
    let (header, data): (VolumeHeader, _) = decode(VVOL_MAGIC, bytes)?;
    if header.dtype != "f32le" {
        return Err(Error::Format(format!("VVOL0001: unsupported dtype {:?}", header.dtype)));
    }
    Volume::with_flag(header.dims, data, header.standardized).map_err(|e| Error::Format(format!("VVOL0001: {e}")))
}

pub fn write_volume(path: &Path, v: &Volume) -> Result<()> {
    write_file(path, &encode_volume(v)?)
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    decode_volume(&read_file(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn volume_layout_is_bit_exact() {
        let v = Volume::new([2, 1, 1], vec![1.5, -0.0]).unwrap();
        let bytes = encode_volume(&v).unwrap();
        assert_eq!(&bytes[..8], b"VVOL0001");
        let header = br#"{"dims":[2,1,1],"dtype":"f32le","standardized":false}"#;
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize, header.len());
        assert_eq!(&bytes[12..12 + header.len()], header);
        assert_eq!(&bytes[12 + header.len()..], &[0, 0, 0xc0, 0x3f, 0, 0, 0, 0x80]);
    }

    #[test]
    fn rejects_corruption() {
        let v = Volume::filled([2, 2, 2], 0.5);
        let mut bytes = encode_volume(&v).unwrap();
        assert!(matches!(decode_volume(&bytes[..5]), Err(Error::Format(_))));
        let last = bytes.len() - 1;
        assert!(matches!(decode_volume(&bytes[..last]), Err(Error::Format(_))));
        bytes[0] = b'X';
        let err = decode_volume(&bytes).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
        let ckpt = encode(VCKPT_MAGIC, &serde_json::json!({}), &[]).unwrap();
        assert!(decode_volume(&ckpt).is_err());
    }

    proptest! {
        #[test]
        fn volume_round_trip(bits in prop::collection::vec(any::<u32>(), 12), standardized in any::<bool>()) {
            let data: Vec<f32> = bits.iter().map(|&b| {
                let f = f32::from_bits(b);
                if standardized { (b as f32 / u32::MAX as f32).clamp(0.0, 1.0) } else { f }
            }).collect();
            let v = Volume::with_flag([3, 2, 2], data, standardized).unwrap();
            let back = decode_volume(&encode_volume(&v).unwrap()).unwrap();
            prop_assert_eq!(back.dims(), v.dims());
            prop_assert_eq!(back.is_standardized(), standardized);
            let a: Vec<u32> = back.data().iter().map(|f| f.to_bits()).collect();
            let b: Vec<u32> = v.data().iter().map(|f| f.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
