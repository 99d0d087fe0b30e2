//! Image-to-template pipelines for both modalities.

use crate::fingerprint::{self, FingerMatchParams, FingerTemplate};
use crate::imaging::GrayImage;
use crate::iris::{self, EyeGeometry, GaborParams, IrisCode, IrisError, SegmentConfig};
use crate::matching::{self, MatchError, MatchResult};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub segment: SegmentConfig,
    pub radial_res: usize,
    pub angular_res: usize,
    pub gabor: GaborParams,
    pub max_shift: usize,
    pub binarize_block: usize,
    pub border_margin: usize,
    pub finger_match: FingerMatchParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            segment: SegmentConfig::default(),
            radial_res: iris::DEFAULT_RADIAL_RES,
            angular_res: iris::DEFAULT_ANGULAR_RES,
            gabor: GaborParams::default(),
            max_shift: matching::DEFAULT_MAX_SHIFT,
            binarize_block: 16,
            border_margin: 8,
            finger_match: FingerMatchParams::default(),
        }
    }
}

impl PipelineConfig {
    /// segment -> normalize -> encode.
    pub fn iris_code(&self, eye: &GrayImage) -> Result<(EyeGeometry, IrisCode), IrisError> {
        let geom = iris::segment_eye(eye, &self.segment)?;
        let norm = iris::normalize(eye, &geom, self.radial_res, self.angular_res)?;
        let code = iris::encode(&norm, &self.gabor)?;
        Ok((geom, code))
    }

    /// binarize -> thin -> extract.
    pub fn finger_template(&self, finger: &GrayImage) -> FingerTemplate {
        let binary = fingerprint::binarize(finger, self.binarize_block);
        let skeleton = fingerprint::thin(&binary);
        fingerprint::extract_minutiae(&skeleton, self.border_margin)
    }

    pub fn match_iris(&self, a: &IrisCode, b: &IrisCode) -> Result<MatchResult, MatchError> {
        matching::match_iris(a, b, self.max_shift)
    }

    pub fn match_fingers(&self, a: &FingerTemplate, b: &FingerTemplate) -> f64 {
        fingerprint::match_fingers(a, b, &self.finger_match)
    }
}
