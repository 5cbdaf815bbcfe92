//! The whole chain from raw members to a consistency report: label
//! harmonization, 1-center, internal-vertex labels, center layout and
//! consistency.

use crate::center::{one_center_tree, CenterResult};
use crate::consistency::{consistency_report, ConsistencyReport};
use crate::ensemble::{Agreement, Ensemble};
use crate::error::{Error, Result};
use crate::geodesic::center_embedding;
use crate::labeling::{complete_internal_labels, harmonize, CompletedLabels, LabelStrategy, RelabelReport};
use crate::tree::{check_lambda, Embedding};

/// How member labels are reconciled before averaging.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum AgreementMode {
    /// Require full agreement; nothing is relabeled.
    Full,
    /// Keep shared labels and match the rest against the pivot.
    #[default]
    Partial,
    /// Ignore member labels and match by embedding.
    Disagree,
}

impl AgreementMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(AgreementMode::Full),
            "partial" => Ok(AgreementMode::Partial),
            "disagree" => Ok(AgreementMode::Disagree),
            _ => Err(Error::input(format!(
                "unknown mode {s:?}; expected full, partial or disagree"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgreementMode::Full => "full",
            AgreementMode::Partial => "partial",
            AgreementMode::Disagree => "disagree",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub mode: AgreementMode,
    /// Weight of the tree distance against the Euclidean distance.
    pub lambda: f64,
    pub delta: f64,
    /// Glyph spacing for variational radii.
    pub g: f64,
    /// Divide distances by the largest one before weighting.
    pub normalize: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: AgreementMode::Partial,
            lambda: 1.0,
            delta: 0.05,
            g: 1.0,
            normalize: true,
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !(self.delta > 0.0) {
            return Err(Error::input(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::input(format!("g must be nonnegative, got {}", self.g)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    /// Members after label harmonization.
    pub ensemble: Ensemble,
    pub pivot: Option<usize>,
    pub reports: Vec<RelabelReport>,
    pub center: CenterResult,
    pub completed: CompletedLabels,
    /// Layout of the completed center, when every member is embedded.
    pub center_embedding: Option<Embedding>,
    pub consistency: ConsistencyReport,
}

/// Harmonizes labels according to the mode.
pub fn reconcile(
    ensemble: &Ensemble,
    mode: AgreementMode,
    lambda: f64,
) -> Result<(Ensemble, Option<usize>, Vec<RelabelReport>)> {
    match mode {
        AgreementMode::Full => {
            if ensemble.agreement() != Agreement::Full {
                return Err(Error::agreement(format!(
                    "ensemble is in {} agreement; run relabel or use mode partial or disagree",
                    ensemble.agreement().as_str()
                )));
            }
            Ok((ensemble.clone(), None, Vec::new()))
        }
        AgreementMode::Partial | AgreementMode::Disagree => {
            let strategy = if mode == AgreementMode::Partial {
                LabelStrategy::Enforce
            } else {
                LabelStrategy::Ignore
            };
            let h = harmonize(ensemble, lambda, strategy)?;
            Ok((h.ensemble, Some(h.pivot), h.reports))
        }
    }
}

pub fn run_pipeline(ensemble: &Ensemble, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.check()?;
    if ensemble.is_empty() {
        return Err(Error::input("ensemble is empty"));
    }
    let (ensemble, pivot, reports) = reconcile(ensemble, config.mode, config.lambda)?;
    let center = one_center_tree(&ensemble)?;
    let embedded = ensemble.members().iter().all(|m| m.embedding().is_some());

    let mut base = center.center.clone();
    if config.lambda < 1.0 && base.embedding().is_none() {
        if !embedded {
            return Err(Error::configuration(
                "lambda below 1 needs embedded members to lay out the center",
            ));
        }
        // lay the center out from a tree-distance correspondence first
        let provisional = complete_internal_labels(&ensemble, &base, 1.0)?;
        let full = center_embedding(&provisional.center, &provisional.members)?;
        let points: Vec<Vec<f64>> = full.points().take(base.vertex_count()).map(<[f64]>::to_vec).collect();
        base = base.with_embedding(Some(Embedding::new(2, &points)?))?;
    }
    let completed = complete_internal_labels(&ensemble, &base, config.lambda)?;
    let center_embedding = if embedded {
        Some(center_embedding(&completed.center, &completed.members)?)
    } else {
        None
    };
    let consistency = consistency_report(
        &completed.center,
        &completed.members,
        config.delta,
        config.lambda,
        config.g,
        config.normalize,
    )?;
    Ok(PipelineOutput {
        ensemble,
        pivot,
        reports,
        center,
        completed,
        center_embedding,
        consistency,
    })
}
