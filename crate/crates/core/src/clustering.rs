//! Model-based clustering.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Observation};
use crate::distributions::{MixtureModel, PreparedModel};
use crate::error::Result;
use crate::math::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelRule {
    /// `argmax_k g_k(x)`, ignoring the mixing weights.
    #[default]
    ComponentDensity,
    /// `argmax_k γ̂_k(x)`, i.e. `argmax_k [ln w_k + ln g_k(x)]`.
    PosteriorResponsibility,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    pub labels: Vec<usize>,
    pub rule: LabelRule,
}

/// One label per stored row (per table row for count data). Ties go to the
/// lowest component index.
pub fn assign_labels(
    data: &Dataset,
    model: &MixtureModel,
    rule: LabelRule,
) -> Result<LabelAssignment> {
    let prepared = PreparedModel::new(model)?;
    let mut buf = vec![0.0; model.k()];
    let labels = data
        .iter()
        .map(|x| label_with(&prepared, x, rule, &mut buf))
        .collect::<Result<_>>()?;
    Ok(LabelAssignment { labels, rule })
}

pub fn label_observation(
    x: Observation<'_>,
    model: &MixtureModel,
    rule: LabelRule,
) -> Result<usize> {
    let prepared = PreparedModel::new(model)?;
    let mut buf = vec![0.0; model.k()];
    label_with(&prepared, x, rule, &mut buf)
}

fn label_with(
    prepared: &PreparedModel<'_>,
    x: Observation<'_>,
    rule: LabelRule,
    buf: &mut [f64],
) -> Result<usize> {
    match rule {
        LabelRule::ComponentDensity => prepared.component_log_densities(x, buf)?,
        LabelRule::PosteriorResponsibility => prepared.weighted_log_densities(x, buf)?,
    }
    Ok(argmax(buf).unwrap_or(0))
}
