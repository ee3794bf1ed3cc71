//! The distortion ladder: an ordered list of distortion specs and helpers for
//! ordering levels within a family by severity.

use std::collections::BTreeMap;
use std::io::BufRead;

use thiserror::Error;

use super::{DistortError, DistortionFamily, DistortionSpec};

/// An ordered set of distortion levels. Levels are 1-based and contiguous per
/// family, in the order the family entries appear.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionLadder {
    specs: Vec<DistortionSpec>,
}

impl Default for DistortionLadder {
    /// The stock 18-level ladder.
    ///
    /// | family           | parameters (level 1, 2, ...)  |
    /// |------------------|-------------------------------|
    /// | jpeg_compression | quality 40, 20, 7             |
    /// | gaussian_blur    | sigma 3.0                     |
    /// | pixelation       | block 8, 16                   |
    /// | sharpen          | amount 1.0, 2.0, 4.0          |
    /// | brightness       | gain 1.4, 1.8, 0.7, 0.4       |
    /// | color            | saturation 0.4, 0.1           |
    /// | contrast         | factor 0.5, 1.8, 0.3          |
    fn default() -> Self {
        use DistortionFamily::*;
        let families: [(DistortionFamily, &[f32]); 7] = [
            (JpegCompression, &[40.0, 20.0, 7.0]),
            (GaussianBlur, &[3.0]),
            (Pixelation, &[8.0, 16.0]),
            (Sharpen, &[1.0, 2.0, 4.0]),
            (Brightness, &[1.4, 1.8, 0.7, 0.4]),
            (Color, &[0.4, 0.1]),
            (Contrast, &[0.5, 1.8, 0.3]),
        ];
        let specs = families
            .into_iter()
            .flat_map(|(family, params)| {
                params
                    .iter()
                    .enumerate()
                    .map(move |(i, &p)| DistortionSpec::new(family, i as u8 + 1, p))
            })
            .collect();
        Self { specs }
    }
}

impl DistortionLadder {
    /// Builds a ladder from explicit specs, assigning levels per family in
    /// order of appearance. Parameters are validated against their family.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (DistortionFamily, f32)>,
    ) -> Result<Self, DistortError> {
        let mut counts: BTreeMap<DistortionFamily, u8> = BTreeMap::new();
        let mut specs = Vec::new();
        for (family, parameter) in entries {
            let level = counts.entry(family).or_insert(0);
            *level += 1;
            let spec = DistortionSpec::new(family, *level, parameter);
            spec.validate()?;
            specs.push(spec);
        }
        Ok(Self { specs })
    }

    /// Reads a ladder from CSV with header `family,parameter`.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self, LadderParseError> {
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| LadderParseError::Io(e.to_string()))?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if idx == 0 {
                if trimmed != "family,parameter" {
                    return Err(LadderParseError::MissingHeader {
                        found: trimmed.to_string(),
                    });
                }
                continue;
            }
            let (family_str, param_str) =
                trimmed
                    .split_once(',')
                    .ok_or_else(|| LadderParseError::Malformed {
                        line: line_no,
                        reason: "expected two comma-separated fields".to_string(),
                    })?;
            let family = DistortionFamily::parse(family_str.trim()).ok_or_else(|| {
                LadderParseError::Malformed {
                    line: line_no,
                    reason: format!("unknown family {:?}", family_str.trim()),
                }
            })?;
            let parameter: f32 =
                param_str
                    .trim()
                    .parse()
                    .map_err(|_| LadderParseError::Malformed {
                        line: line_no,
                        reason: format!("parameter {:?} is not a number", param_str.trim()),
                    })?;
            entries.push((family, parameter, line_no));
        }
        let mut counts: BTreeMap<DistortionFamily, u8> = BTreeMap::new();
        let mut specs = Vec::new();
        for (family, parameter, line_no) in entries {
            let level = counts.entry(family).or_insert(0);
            *level += 1;
            let spec = DistortionSpec::new(family, *level, parameter);
            spec.validate()
                .map_err(|_| LadderParseError::Malformed {
                    line: line_no,
                    reason: format!("parameter {parameter} out of range for {family}"),
                })?;
            specs.push(spec);
        }
        Ok(Self { specs })
    }

    pub fn specs(&self) -> &[DistortionSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Number of levels per family, in family declaration order.
    pub fn family_counts(&self) -> BTreeMap<DistortionFamily, usize> {
        let mut counts = BTreeMap::new();
        for spec in &self.specs {
            *counts.entry(spec.family).or_insert(0) += 1;
        }
        counts
    }

    pub fn family_specs(&self, family: DistortionFamily) -> Vec<DistortionSpec> {
        self.specs
            .iter()
            .filter(|s| s.family == family)
            .copied()
            .collect()
    }

    /// A family's specs ordered mildest to strongest.
    ///
    /// Severity keys per family: JPEG descending quality, blur ascending
    /// sigma, pixelation ascending block, sharpen ascending amount,
    /// brightness ascending `|ln(gain)|`, color descending saturation,
    /// contrast ascending `|factor - 1|`. Ties keep level order.
    pub fn family_specs_by_severity(&self, family: DistortionFamily) -> Vec<DistortionSpec> {
        let mut specs = self.family_specs(family);
        specs.sort_by(|a, b| {
            severity_key(a)
                .partial_cmp(&severity_key(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.level.cmp(&b.level))
        });
        specs
    }

    /// Severity of a spec as a fraction of its family ladder in (0, 1]:
    /// rank within [`Self::family_specs_by_severity`] divided by the family's
    /// level count. Returns `None` for specs not in the ladder.
    pub fn severity_fraction(&self, spec: &DistortionSpec) -> Option<f64> {
        let ordered = self.family_specs_by_severity(spec.family);
        let rank = ordered.iter().position(|s| s == spec)? + 1;
        Some(rank as f64 / ordered.len() as f64)
    }
}

#[derive(Debug, Error)]
pub enum LadderParseError {
    #[error("ladder file is missing the `family,parameter` header (found {found:?})")]
    MissingHeader { found: String },
    #[error("ladder file line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("ladder file could not be read: {0}")]
    Io(String),
}

fn severity_key(spec: &DistortionSpec) -> f64 {
    let p = spec.parameter as f64;
    match spec.family {
        DistortionFamily::JpegCompression => -p,
        DistortionFamily::GaussianBlur => p,
        DistortionFamily::Pixelation => p,
        DistortionFamily::Sharpen => p,
        DistortionFamily::Brightness => p.ln().abs(),
        DistortionFamily::Color => -p,
        DistortionFamily::Contrast => (p - 1.0).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ladder_has_18_levels_with_expected_family_counts() {
        let ladder = DistortionLadder::default();
        assert_eq!(ladder.len(), 18);
        let counts = ladder.family_counts();
        assert_eq!(counts[&DistortionFamily::JpegCompression], 3);
        assert_eq!(counts[&DistortionFamily::GaussianBlur], 1);
        assert_eq!(counts[&DistortionFamily::Pixelation], 2);
        assert_eq!(counts[&DistortionFamily::Sharpen], 3);
        assert_eq!(counts[&DistortionFamily::Brightness], 4);
        assert_eq!(counts[&DistortionFamily::Color], 2);
        assert_eq!(counts[&DistortionFamily::Contrast], 3);
    }

    #[test]
    fn default_levels_are_contiguous_per_family() {
        let ladder = DistortionLadder::default();
        for family in DistortionFamily::ALL {
            let specs = ladder.family_specs(family);
            for (i, spec) in specs.iter().enumerate() {
                assert_eq!(spec.level as usize, i + 1);
            }
        }
    }

    #[test]
    fn severity_order_brightness_ranks_by_log_distance_from_unity() {
        let ladder = DistortionLadder::default();
        let order: Vec<f32> = ladder
            .family_specs_by_severity(DistortionFamily::Brightness)
            .iter()
            .map(|s| s.parameter)
            .collect();
        assert_eq!(order, vec![1.4, 0.7, 1.8, 0.4]);
    }

    #[test]
    fn severity_fraction_spans_unit_interval() {
        let ladder = DistortionLadder::default();
        let specs = ladder.family_specs(DistortionFamily::JpegCompression);
        let fractions: Vec<f64> = specs
            .iter()
            .map(|s| ladder.severity_fraction(s).unwrap())
            .collect();
        assert_eq!(
            fractions,
            vec![1.0 / 3.0, 2.0 / 3.0, 1.0],
            "quality 40/20/7 ranks mildest to strongest"
        );
    }

    #[test]
    fn csv_roundtrip_parses_stock_entries() {
        let csv = "family,parameter\n\
                   jpeg_compression,40\n\
                   jpeg_compression,20\n\
                   gaussian_blur,3.0\n\
                   contrast,0.5\n";
        let ladder = DistortionLadder::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(ladder.len(), 4);
        assert_eq!(ladder.specs()[1].level, 2);
        assert_eq!(ladder.specs()[2].family, DistortionFamily::GaussianBlur);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let csv = "family,parameter\njpeg_compression,40\nmystery,1.0\n";
        let err = DistortionLadder::from_csv_reader(csv.as_bytes()).unwrap_err();
        match err {
            LadderParseError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_out_of_range_parameter_is_rejected_with_line() {
        let csv = "family,parameter\ngaussian_blur,-1.0\n";
        let err = DistortionLadder::from_csv_reader(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, LadderParseError::Malformed { line: 2, .. }));
    }

    #[test]
    fn missing_header_is_rejected() {
        let csv = "jpeg_compression,40\n";
        assert!(matches!(
            DistortionLadder::from_csv_reader(csv.as_bytes()),
            Err(LadderParseError::MissingHeader { .. })
        ));
    }
}
