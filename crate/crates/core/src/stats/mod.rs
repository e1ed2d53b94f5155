//! Numerics kernel: Pearson correlation, its t statistic, and one-sided
//! significance, assembled into per-scope correlation results.

mod tdist;

pub use tdist::p_one_sided;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Aspect, CategoryId, DisciplineId};
use crate::normalize::{ColumnKey, NormalizedDataset};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("input vectors have different lengths ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 3 samples, got {n}")]
    TooFewSamples { n: usize },
    #[error("constant input vector; correlation undefined")]
    ConstantInput,
    #[error("perfect correlation; t statistic undefined")]
    PerfectCorrelation,
    #[error("degrees of freedom must be >= 1")]
    InvalidDegreesOfFreedom,
    #[error("incomplete beta did not converge (a={a}, b={b}, x={x})")]
    NonConvergence { a: f64, b: f64, x: f64 },
    #[error("unknown category '{0}'")]
    UnknownCategory(CategoryId),
    #[error("unknown discipline '{0}'")]
    UnknownDiscipline(DisciplineId),
    #[error("numeric failure for ({category}, {aspect}) in scope {scope}: {source}")]
    Pair {
        category: CategoryId,
        aspect: Aspect,
        scope: Scope,
        #[source]
        source: Box<StatsError>,
    },
}

/// The population a correlation is computed over: one discipline's teams, or
/// all teams pooled (on per-discipline-normalized values).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Discipline(DisciplineId),
    Pooled,
}

impl Scope {
    pub fn id(&self) -> &str {
        match self {
            Scope::Discipline(d) => d.as_str(),
            Scope::Pooled => crate::dataset::RESERVED_POOLED_ID,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl Serialize for Scope {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s == crate::dataset::RESERVED_POOLED_ID {
            Ok(Scope::Pooled)
        } else {
            Ok(Scope::Discipline(DisciplineId::new(s)))
        }
    }
}

/// Correlation of one (category, aspect) pair over one scope.
///
/// A degenerate result (constant column in scope) carries no r/t/p and can
/// never be selected. A perfect result (|r| = 1) has no finite t; its p is 0
/// for r = +1 and 1 for r = -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub category: CategoryId,
    pub aspect: Aspect,
    pub scope: Scope,
    pub n: usize,
    pub r: Option<f64>,
    pub t: Option<f64>,
    pub p_one_sided: Option<f64>,
    pub degenerate: bool,
    pub perfect: bool,
}

impl CorrelationResult {
    fn degenerate(category: CategoryId, aspect: Aspect, scope: Scope, n: usize) -> Self {
        CorrelationResult {
            category,
            aspect,
            scope,
            n,
            r: None,
            t: None,
            p_one_sided: None,
            degenerate: true,
            perfect: false,
        }
    }

    /// Significantly positively correlated at level `alpha`.
    pub fn significant_positive(&self, alpha: f64) -> bool {
        match (self.r, self.p_one_sided) {
            (Some(r), Some(p)) => !self.degenerate && r > 0.0 && p <= alpha,
            _ => false,
        }
    }

    /// Significantly negatively correlated at level `alpha` (one-sided test in
    /// the opposite direction: P(T <= t) = 1 - P(T >= t)).
    pub fn significant_negative(&self, alpha: f64) -> bool {
        match (self.r, self.p_one_sided) {
            (Some(r), Some(p)) => !self.degenerate && r < 0.0 && (1.0 - p) <= alpha,
            _ => false,
        }
    }
}

/// Product-moment correlation of two equally long vectors.
///
/// Computed with streaming (Welford-style) co-moments and clamped into
/// [-1, 1] to absorb floating-point excursions.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewSamples { n: x.len() });
    }
    if is_constant(x) || is_constant(y) {
        return Err(StatsError::ConstantInput);
    }

    let mut mean_x = 0.0;
    let mut mean_y = 0.0;
    let mut co_moment = 0.0;
    let mut m2_x = 0.0;
    let mut m2_y = 0.0;
    for (k, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        let k_f = (k + 1) as f64;
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        mean_x += dx / k_f;
        mean_y += dy / k_f;
        co_moment += dx * (yi - mean_y);
        m2_x += dx * (xi - mean_x);
        m2_y += dy * (yi - mean_y);
    }

    if m2_x <= 0.0 || m2_y <= 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((co_moment / (m2_x * m2_y).sqrt()).clamp(-1.0, 1.0))
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// t statistic of a Pearson r over n samples: t = r sqrt(n-2) / sqrt(1 - r^2).
pub fn t_statistic(r: f64, n: usize) -> Result<f64, StatsError> {
    if n < 3 {
        return Err(StatsError::TooFewSamples { n });
    }
    if r.abs() >= 1.0 {
        return Err(StatsError::PerfectCorrelation);
    }
    Ok(r * ((n - 2) as f64).sqrt() / (1.0 - r * r).sqrt())
}

/// Correlate one (category, aspect) pair over one scope of the normalized
/// dataset.
pub fn correlate(
    norm: &NormalizedDataset,
    category: &CategoryId,
    aspect: Aspect,
    scope: &Scope,
) -> Result<CorrelationResult, StatsError> {
    let cat_col = norm
        .measures
        .column_position(category)
        .ok_or_else(|| StatsError::UnknownCategory(category.clone()))?;
    let aspect_col = norm
        .ratings
        .column_position(&aspect)
        .expect("all aspects present");

    let rows: Vec<usize> = match scope {
        Scope::Pooled => (0..norm.measures.n_rows()).collect(),
        Scope::Discipline(d) => norm
            .discipline_rows()
            .get(d)
            .ok_or_else(|| StatsError::UnknownDiscipline(d.clone()))?
            .clone(),
    };

    let n = rows.len();
    let flagged = match scope {
        Scope::Discipline(d) => {
            norm.is_degenerate(d, &ColumnKey::Category(category.clone()))
                || norm.is_degenerate(d, &ColumnKey::Aspect(aspect))
        }
        Scope::Pooled => false,
    };
    if flagged || n < 3 {
        return Ok(CorrelationResult::degenerate(category.clone(), aspect, scope.clone(), n));
    }

    let x: Vec<f64> = rows.iter().map(|&row| norm.measures.get(row, cat_col)).collect();
    let y: Vec<f64> = rows.iter().map(|&row| norm.ratings.get(row, aspect_col)).collect();

    let r = match pearson(&x, &y) {
        Ok(r) => r,
        Err(StatsError::ConstantInput) => {
            return Ok(CorrelationResult::degenerate(category.clone(), aspect, scope.clone(), n));
        }
        Err(e) => return Err(e),
    };

    if r.abs() == 1.0 {
        return Ok(CorrelationResult {
            category: category.clone(),
            aspect,
            scope: scope.clone(),
            n,
            r: Some(r),
            t: None,
            p_one_sided: Some(if r > 0.0 { 0.0 } else { 1.0 }),
            degenerate: false,
            perfect: true,
        });
    }

    let t = t_statistic(r, n)?;
    let p = p_one_sided(t, n - 2).map_err(|e| StatsError::Pair {
        category: category.clone(),
        aspect,
        scope: scope.clone(),
        source: Box::new(e),
    })?;

    Ok(CorrelationResult {
        category: category.clone(),
        aspect,
        scope: scope.clone(),
        n,
        r: Some(r),
        t: Some(t),
        p_one_sided: Some(p),
        degenerate: false,
        perfect: false,
    })
}

/// All scopes of a normalized dataset: each discipline, then pooled.
pub fn scopes(norm: &NormalizedDataset) -> Vec<Scope> {
    let mut scopes: Vec<Scope> = norm
        .discipline_rows()
        .keys()
        .map(|d| Scope::Discipline(d.clone()))
        .collect();
    scopes.push(Scope::Pooled);
    scopes
}

/// The full (category x aspect x scope) correlation grid, sorted
/// lexicographically by category, aspect, scope.
///
/// Pairs are independent, so the grid is computed in parallel; the output
/// order (and every value in it) is identical regardless of thread count.
pub fn correlation_grid(norm: &NormalizedDataset) -> Result<Vec<CorrelationResult>, StatsError> {
    let scope_list = scopes(norm);
    let mut pairs = Vec::new();
    for category in norm.measures.columns() {
        for &aspect in norm.ratings.columns() {
            for scope in &scope_list {
                pairs.push((category.clone(), aspect, scope.clone()));
            }
        }
    }

    pairs
        .par_iter()
        .map(|(category, aspect, scope)| correlate(norm, category, *aspect, scope))
        .collect()
}
