//! Indicator selection: keep the categories whose normalized rates correlate
//! significantly positively with a rating aspect, drop minority-prevalence
//! categories, and identify the pairs that hold up across disciplines.

use serde::{Deserialize, Serialize};

use crate::dataset::{Aspect, CategoryId, Dataset};
use crate::stats::{CorrelationResult, Scope, StatsError};

/// Tuning knobs of the selection rule. Defaults follow the method as applied:
/// one-sided 5% significance, strict majority prevalence, "almost all"
/// disciplines read as all but one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Significance level of the one-sided positive test.
    pub alpha: f64,
    /// A category is analyzed only where the fraction of teams with nonzero
    /// output strictly exceeds this (default 0.5: majority required).
    pub prevalence_threshold: f64,
    /// Minimum fraction of disciplines in which a pair must be selected to be
    /// generally valid. `None` means all but one discipline.
    pub general_validity_min_fraction: Option<f64>,
    /// Divide alpha by the number of tested (non-degenerate) pairs per scope.
    pub bonferroni: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            alpha: 0.05,
            prevalence_threshold: 0.5,
            general_validity_min_fraction: None,
            bonferroni: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("alpha must be in (0, 1), got {0}")]
    Alpha(f64),
    #[error("prevalence_threshold must be in (0, 1], got {0}")]
    PrevalenceThreshold(f64),
    #[error("general_validity_min_fraction must be in [0, 1], got {0}")]
    GeneralValidityFraction(f64),
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if !(self.prevalence_threshold > 0.0 && self.prevalence_threshold <= 1.0) {
            return Err(ConfigError::PrevalenceThreshold(self.prevalence_threshold));
        }
        if let Some(f) = self.general_validity_min_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(ConfigError::GeneralValidityFraction(f));
            }
        }
        Ok(())
    }

    /// Disciplines required for general validity, out of `n_disciplines`.
    pub fn required_disciplines(&self, n_disciplines: usize) -> usize {
        match self.general_validity_min_fraction {
            None => n_disciplines.saturating_sub(1),
            // ceil with a nudge so that e.g. 5/6 counts as meeting 5/6 exactly
            Some(f) => ((f * n_disciplines as f64) - 1e-9).ceil().max(0.0) as usize,
        }
    }
}

/// Why a (category, aspect) pair was not selected. Reasons are assigned with
/// fixed precedence: degenerate, then minority prevalence, then nonpositive
/// correlation, then lack of significance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    Degenerate,
    MinorityPrevalence,
    NegativeCorrelation,
    NotSignificant,
}

impl ExclusionReason {
    pub fn id(self) -> &'static str {
        match self {
            ExclusionReason::Degenerate => "degenerate",
            ExclusionReason::MinorityPrevalence => "minority_prevalence",
            ExclusionReason::NegativeCorrelation => "negative_correlation",
            ExclusionReason::NotSignificant => "not_significant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedIndicator {
    pub category: CategoryId,
    pub aspect: Aspect,
    pub prevalence: f64,
    pub result: CorrelationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedIndicator {
    pub category: CategoryId,
    pub aspect: Aspect,
    pub reason: ExclusionReason,
    pub prevalence: f64,
    pub result: CorrelationResult,
}

/// The selection outcome for one scope: every (category, aspect) pair lands in
/// exactly one of `selected` or `excluded`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSet {
    pub scope: Scope,
    pub selected: Vec<SelectedIndicator>,
    pub excluded: Vec<ExcludedIndicator>,
}

impl IndicatorSet {
    pub fn is_selected(&self, category: &CategoryId, aspect: Aspect) -> bool {
        self.selected
            .iter()
            .any(|s| &s.category == category && s.aspect == aspect)
    }

    pub fn exclusion_reason(&self, category: &CategoryId, aspect: Aspect) -> Option<ExclusionReason> {
        self.excluded
            .iter()
            .find(|e| &e.category == category && e.aspect == aspect)
            .map(|e| e.reason)
    }

    fn result_of(&self, category: &CategoryId, aspect: Aspect) -> Option<&CorrelationResult> {
        self.selected
            .iter()
            .find(|s| &s.category == category && s.aspect == aspect)
            .map(|s| &s.result)
            .or_else(|| {
                self.excluded
                    .iter()
                    .find(|e| &e.category == category && e.aspect == aspect)
                    .map(|e| &e.result)
            })
    }
}

/// Fraction of teams in scope with a nonzero count for the category.
pub fn prevalence(dataset: &Dataset, category: &CategoryId, scope: &Scope) -> Result<f64, StatsError> {
    if !dataset.has_category(category) {
        return Err(StatsError::UnknownCategory(category.clone()));
    }
    let teams: Vec<_> = match scope {
        Scope::Pooled => dataset.team_ids(),
        Scope::Discipline(d) => dataset
            .disciplines()
            .get(d)
            .ok_or_else(|| StatsError::UnknownDiscipline(d.clone()))?
            .clone(),
    };
    let nonzero = teams.iter().filter(|t| dataset.count(t, category) > 0.0).count();
    Ok(nonzero as f64 / teams.len() as f64)
}

/// Apply the selection rule to one scope's slice of the correlation grid.
///
/// A pair is selected iff it is non-degenerate, its category is present in a
/// strict majority of the scope's teams (configurable threshold), r > 0, and
/// the one-sided p is at or below alpha (optionally Bonferroni-corrected).
pub fn select_indicators(
    results: &[CorrelationResult],
    dataset: &Dataset,
    config: &SelectionConfig,
    scope: &Scope,
) -> Result<IndicatorSet, StatsError> {
    let in_scope: Vec<&CorrelationResult> = results.iter().filter(|r| &r.scope == scope).collect();

    let alpha = if config.bonferroni {
        let tested = in_scope.iter().filter(|r| !r.degenerate).count().max(1);
        config.alpha / tested as f64
    } else {
        config.alpha
    };

    let mut selected = Vec::new();
    let mut excluded = Vec::new();
    for result in in_scope {
        let prev = prevalence(dataset, &result.category, scope)?;
        let reason = if result.degenerate {
            Some(ExclusionReason::Degenerate)
        } else if prev <= config.prevalence_threshold {
            Some(ExclusionReason::MinorityPrevalence)
        } else if result.r.is_some_and(|r| r <= 0.0) {
            Some(ExclusionReason::NegativeCorrelation)
        } else if !result.significant_positive(alpha) {
            Some(ExclusionReason::NotSignificant)
        } else {
            None
        };
        match reason {
            Some(reason) => excluded.push(ExcludedIndicator {
                category: result.category.clone(),
                aspect: result.aspect,
                reason,
                prevalence: prev,
                result: result.clone(),
            }),
            None => selected.push(SelectedIndicator {
                category: result.category.clone(),
                aspect: result.aspect,
                prevalence: prev,
                result: result.clone(),
            }),
        }
    }

    Ok(IndicatorSet { scope: scope.clone(), selected, excluded })
}

/// Pairs that hold up beyond single disciplines: selected pooled, selected in
/// enough disciplines, and significantly negative in none.
pub fn general_validity(
    per_discipline: &[IndicatorSet],
    pooled: &IndicatorSet,
    config: &SelectionConfig,
) -> Vec<(CategoryId, Aspect)> {
    let required = config.required_disciplines(per_discipline.len());
    let mut valid = Vec::new();

    for sel in &pooled.selected {
        let discipline_hits = per_discipline
            .iter()
            .filter(|set| set.is_selected(&sel.category, sel.aspect))
            .count();
        if discipline_hits < required {
            continue;
        }
        let negative_somewhere = per_discipline.iter().any(|set| {
            set.result_of(&sel.category, sel.aspect)
                .is_some_and(|r| r.significant_negative(config.alpha))
        });
        if negative_somewhere {
            continue;
        }
        valid.push((sel.category.clone(), sel.aspect));
    }

    valid.sort();
    valid
}
