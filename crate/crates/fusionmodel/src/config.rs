use neuralnet::EncoderConfig;
use serde::{Deserialize, Serialize};

use crate::error::FusionError;

/// Input modalities in their fixed fusion order. SAR and the footprint
/// mask are mandatory; DSM and the exposure vector can be toggled for
/// ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Sar,
    Ftp,
    Dsm,
    Gem,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::Sar, Modality::Ftp, Modality::Dsm, Modality::Gem];

    pub fn parse_set(s: &str) -> Result<Vec<Modality>, FusionError> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let m = match tok.to_ascii_lowercase().as_str() {
                "sar" => Modality::Sar,
                "ftp" => Modality::Ftp,
                "dsm" => Modality::Dsm,
                "gem" => Modality::Gem,
                other => return Err(FusionError::Config(format!("unknown modality {other:?}"))),
            };
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out.sort();
        Ok(out)
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Modality::Sar => "sar",
            Modality::Ftp => "ftp",
            Modality::Dsm => "dsm",
            Modality::Gem => "gem",
        };
        write!(f, "{s}")
    }
}

/// Full architecture description; serialized into checkpoints so loading
/// can reject incompatible parameter sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Enabled modalities, always kept in fixed order (SAR, FTP, DSM, GEM).
    pub modalities: Vec<Modality>,
    /// Shared encoder layout; each spatial modality gets its own weights.
    pub encoder: EncoderConfig,
    /// Exposure MLP widths: input G -> hidden... -> embedding.
    pub gem_hidden: Vec<usize>,
    pub gem_embedding: usize,
    /// Exposure vector length G of the dataset this model was built for.
    pub gem_input_dim: usize,
    /// Classification head: fused -> head_hidden (ReLU, dropout) -> 1.
    pub head_hidden: usize,
    pub dropout: f64,
    pub patch_size: usize,
}

impl FusionConfig {
    pub fn new(modalities: Vec<Modality>, encoder: EncoderConfig, gem_input_dim: usize) -> Self {
        let mut modalities = modalities;
        modalities.sort();
        modalities.dedup();
        FusionConfig {
            modalities,
            encoder,
            gem_hidden: vec![64],
            gem_embedding: 64,
            gem_input_dim,
            head_hidden: 256,
            dropout: 0.5,
            patch_size: 32,
        }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        self.encoder.validate().map_err(FusionError::Net)?;
        if !self.modalities.contains(&Modality::Sar) || !self.modalities.contains(&Modality::Ftp) {
            return Err(FusionError::Config(
                "SAR and FTP modalities are mandatory".into(),
            ));
        }
        if self.modalities.contains(&Modality::Gem) && self.gem_input_dim == 0 {
            return Err(FusionError::Config(
                "GEM modality enabled but the exposure vector is empty".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(FusionError::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn has(&self, m: Modality) -> bool {
        self.modalities.contains(&m)
    }

    pub fn embedding_dim(&self, m: Modality) -> usize {
        match m {
            Modality::Gem => self.gem_embedding,
            _ => self.encoder.embedding_dim,
        }
    }

    /// |f_LF|: sum of enabled embedding widths.
    pub fn fused_dim(&self) -> usize {
        self.modalities.iter().map(|&m| self.embedding_dim(m)).sum()
    }

    pub fn modalities_string(&self) -> String {
        self.modalities
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_full_dims() {
        let cfg = FusionConfig::new(Modality::ALL.to_vec(), EncoderConfig::full(), 5);
        assert_eq!(cfg.fused_dim(), 512 + 512 + 512 + 64);
        cfg.validate().unwrap();
    }

    #[test]
    fn compact_two_modality_dims() {
        let cfg = FusionConfig::new(
            vec![Modality::Ftp, Modality::Sar],
            EncoderConfig::compact(),
            0,
        );
        assert_eq!(cfg.fused_dim(), 64);
        cfg.validate().unwrap();
    }

    #[test]
    fn sar_and_ftp_are_mandatory() {
        let cfg = FusionConfig::new(vec![Modality::Sar, Modality::Dsm], EncoderConfig::compact(), 0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parse_set_normalizes_order() {
        let m = Modality::parse_set("gem, sar,ftp").unwrap();
        assert_eq!(m, vec![Modality::Sar, Modality::Ftp, Modality::Gem]);
        assert!(Modality::parse_set("sar,xyz").is_err());
    }
}
