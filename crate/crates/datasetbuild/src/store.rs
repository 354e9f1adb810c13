use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::DatasetError;
use crate::types::{DatasetManifest, Sample};

/// Write `manifest.json` and `samples.bin` into `dir`. Records are encoded
/// little-endian in manifest order: sar f32s, dsm f32s, mask u8s, gem f32s,
/// label u8, city index u16, building-id index u32. Both files go through
/// temp-file renames.
pub fn write_store(
    dir: impl AsRef<Path>,
    manifest: &DatasetManifest,
    samples: &[Sample],
) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    if samples.len() != manifest.record_count || samples.len() != manifest.building_ids.len() {
        return Err(DatasetError::ManifestMismatch(format!(
            "manifest says {} records, got {} samples / {} ids",
            manifest.record_count,
            samples.len(),
            manifest.building_ids.len()
        )));
    }

    let mut bin = Vec::with_capacity(manifest.record_size() * samples.len());
    for (idx, s) in samples.iter().enumerate() {
        let city_idx = manifest
            .cities
            .binary_search(&s.city)
            .map_err(|_| DatasetError::ManifestMismatch(format!("city {} not in table", s.city)))?;
        for v in &s.sar_patch {
            bin.extend_from_slice(&v.to_le_bytes());
        }
        for v in &s.dsm_patch {
            bin.extend_from_slice(&v.to_le_bytes());
        }
        bin.extend_from_slice(&s.mask_patch);
        for v in &s.gem_features {
            bin.extend_from_slice(&v.to_le_bytes());
        }
        bin.push(s.label);
        bin.extend_from_slice(&(city_idx as u16).to_le_bytes());
        bin.extend_from_slice(&(idx as u32).to_le_bytes());
    }

    let manifest_json = serde_json::to_vec_pretty(manifest)?;
    atomic_write(&dir.join("manifest.json"), &manifest_json)?;
    atomic_write(&dir.join("samples.bin"), &bin)?;
    Ok(())
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a sample store back; validates record sizes and that per-city
/// counts recomputed from the records match the manifest.
pub fn read_store(dir: impl AsRef<Path>) -> Result<(DatasetManifest, Vec<Sample>), DatasetError> {
    let dir = dir.as_ref();
    let manifest: DatasetManifest =
        serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    let bin = fs::read(dir.join("samples.bin"))?;

    let rec_size = manifest.record_size();
    if bin.len() != rec_size * manifest.record_count {
        return Err(DatasetError::ManifestMismatch(format!(
            "samples.bin holds {} bytes, expected {} records x {} bytes",
            bin.len(),
            manifest.record_count,
            rec_size
        )));
    }

    let ps2 = manifest.patch_size * manifest.patch_size;
    let mut samples = Vec::with_capacity(manifest.record_count);
    for (idx, rec) in bin.chunks_exact(rec_size).enumerate() {
        let mut off = 0usize;
        let read_f32s = |bytes: &[u8], off: &mut usize, n: usize| -> Vec<f32> {
            let out = bytes[*off..*off + n * 4]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            *off += n * 4;
            out
        };
        let sar_patch = read_f32s(rec, &mut off, ps2);
        let dsm_patch = read_f32s(rec, &mut off, ps2);
        let mask_patch = rec[off..off + ps2].to_vec();
        off += ps2;
        let gem_features = read_f32s(rec, &mut off, manifest.g);
        let label = rec[off];
        off += 1;
        let city_idx = u16::from_le_bytes(rec[off..off + 2].try_into().unwrap()) as usize;
        off += 2;
        let id_idx = u32::from_le_bytes(rec[off..off + 4].try_into().unwrap()) as usize;

        if city_idx >= manifest.cities.len() || id_idx >= manifest.building_ids.len() {
            return Err(DatasetError::ManifestMismatch(format!(
                "record {idx} references city {city_idx} / id {id_idx} outside string tables"
            )));
        }
        samples.push(Sample {
            sar_patch,
            dsm_patch,
            mask_patch,
            gem_features,
            label,
            city: manifest.cities[city_idx].clone(),
            building_id: manifest.building_ids[id_idx].clone(),
        });
    }

    for cc in &manifest.per_city {
        let damaged = samples.iter().filter(|s| s.city == cc.city && s.label == 1).count();
        let intact = samples.iter().filter(|s| s.city == cc.city && s.label == 0).count();
        if damaged != cc.damaged || intact != cc.intact {
            return Err(DatasetError::ManifestMismatch(format!(
                "city {}: manifest {}+{} vs stored {}+{}",
                cc.city, cc.intact, cc.damaged, intact, damaged
            )));
        }
    }
    Ok((manifest, samples))
}
