//! Heat-map file format.
//!
//! Layout: magic `MFHM`, version u16, rows u32, cols u32, label u8
//! (0 normal / 1 abnormal / 255 unknown), quality u8 (0 good / 1 poor /
//! 255 unknown), then rows×cols float32 little-endian, row-major. All
//! integers little-endian.

use std::fs;
use std::path::Path;

use super::{FeatureError, MfccHeatMap};
use crate::pcg_io::{Label, Quality};

const MAGIC: &[u8; 4] = b"MFHM";
const VERSION: u16 = 1;

fn label_byte(label: Label) -> u8 {
    match label {
        Label::Normal => 0,
        Label::Abnormal => 1,
        Label::Unknown => 255,
    }
}

fn byte_label(b: u8) -> Result<Label, FeatureError> {
    match b {
        0 => Ok(Label::Normal),
        1 => Ok(Label::Abnormal),
        255 => Ok(Label::Unknown),
        other => Err(FeatureError::HeatMapFile(format!("bad label byte {other}"))),
    }
}

fn quality_byte(q: Quality) -> u8 {
    match q {
        Quality::Good => 0,
        Quality::Poor => 1,
        Quality::Unknown => 255,
    }
}

fn byte_quality(b: u8) -> Result<Quality, FeatureError> {
    match b {
        0 => Ok(Quality::Good),
        1 => Ok(Quality::Poor),
        255 => Ok(Quality::Unknown),
        other => Err(FeatureError::HeatMapFile(format!("bad quality byte {other}"))),
    }
}

pub fn encode_heatmap(map: &MfccHeatMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + map.values.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(map.rows as u32).to_le_bytes());
    out.extend_from_slice(&(map.cols as u32).to_le_bytes());
    out.push(label_byte(map.label));
    out.push(quality_byte(map.quality));
    for &v in &map.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_heatmap(bytes: &[u8]) -> Result<MfccHeatMap, FeatureError> {
    if bytes.len() < 16 {
        return Err(FeatureError::HeatMapFile("truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(FeatureError::HeatMapFile("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(FeatureError::HeatMapFile(format!(
            "unsupported version {version}"
        )));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let label = byte_label(bytes[14])?;
    let quality = byte_quality(bytes[15])?;
    let cell_count = rows
        .checked_mul(cols)
        .ok_or_else(|| FeatureError::HeatMapFile("dimension overflow".into()))?;
    let payload = cell_count
        .checked_mul(4)
        .ok_or_else(|| FeatureError::HeatMapFile("dimension overflow".into()))?;
    if bytes.len() - 16 != payload {
        return Err(FeatureError::HeatMapFile(format!(
            "payload is {} bytes, expected {payload}",
            bytes.len() - 16
        )));
    }
    let values = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(MfccHeatMap {
        values,
        rows,
        cols,
        source_id: String::new(),
        start_sample: 0,
        label,
        quality,
    })
}

pub fn save_heatmap(path: &Path, map: &MfccHeatMap) -> Result<(), FeatureError> {
    fs::write(path, encode_heatmap(map))?;
    Ok(())
}

pub fn load_heatmap(path: &Path) -> Result<MfccHeatMap, FeatureError> {
    let mut map = decode_heatmap(&fs::read(path)?)?;
    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
        map.source_id = stem.to_string();
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> MfccHeatMap {
        MfccHeatMap {
            values: vec![1.5, -2.25, 0.0, 3.75, -0.5, 100.0],
            rows: 2,
            cols: 3,
            source_id: "demo".into(),
            start_sample: 123,
            label: Label::Abnormal,
            quality: Quality::Good,
        }
    }

    #[test]
    fn round_trip_preserves_values_and_metadata() {
        let map = demo();
        let decoded = decode_heatmap(&encode_heatmap(&map)).unwrap();
        assert_eq!(decoded.values, map.values);
        assert_eq!((decoded.rows, decoded.cols), (2, 3));
        assert_eq!(decoded.label, Label::Abnormal);
        assert_eq!(decoded.quality, Quality::Good);
    }

    #[test]
    fn truncated_and_oversized_payloads_are_rejected() {
        let bytes = encode_heatmap(&demo());
        assert!(decode_heatmap(&bytes[..bytes.len() - 1]).is_err());
        let mut longer = bytes.clone();
        longer.extend_from_slice(&[0, 0, 0, 0]);
        assert!(decode_heatmap(&longer).is_err());
        assert!(decode_heatmap(&bytes[..10]).is_err());
    }

    #[test]
    fn bad_magic_version_label_are_rejected() {
        let mut bytes = encode_heatmap(&demo());
        bytes[0] = b'X';
        assert!(decode_heatmap(&bytes).is_err());
        let mut bytes = encode_heatmap(&demo());
        bytes[4] = 9;
        assert!(decode_heatmap(&bytes).is_err());
        let mut bytes = encode_heatmap(&demo());
        bytes[14] = 7;
        assert!(decode_heatmap(&bytes).is_err());
        let mut bytes = encode_heatmap(&demo());
        bytes[15] = 7;
        assert!(decode_heatmap(&bytes).is_err());
    }

    #[test]
    fn huge_declared_dimensions_do_not_allocate() {
        let mut bytes = encode_heatmap(&demo());
        bytes[6..10].copy_from_slice(&u32::MAX.to_le_bytes());
        bytes[10..14].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_heatmap(&bytes).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mfhm");
        save_heatmap(&path, &demo()).unwrap();
        let loaded = load_heatmap(&path).unwrap();
        assert_eq!(loaded.values, demo().values);
        assert_eq!(loaded.source_id, "m");
    }
}
