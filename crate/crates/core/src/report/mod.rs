//! Run report assembly: correlation grids, indicator sets, reference tables,
//! scatter data, normalization comparison, and run metadata, in a form that is
//! regenerable bit-identically from the same inputs and configuration.

mod render;

pub use render::{render_json, render_markdown, write_csv_bundle};

use serde::{Deserialize, Serialize};

use crate::dataset::{Aspect, CategoryId, CategoryKind, Dataset, DisciplineId, TeamId};
use crate::normalize::{normalize_dataset, ColumnKey, NormalizeMode, NormalizedDataset};
use crate::reference::{reference_table, scope_sort_key, ReferenceValue, DEFAULT_MIN_TEAMS};
use crate::select::{general_validity, select_indicators, IndicatorSet, SelectionConfig};
use crate::stats::{correlation_grid, scopes, CorrelationResult, Scope, StatsError};

/// JSON Schema the canonical `report.json` validates against.
pub const REPORT_SCHEMA: &str = include_str!("../../report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Markdown,
    CsvBundle,
}

impl ReportFormat {
    pub fn id(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "markdown",
            ReportFormat::CsvBundle => "csv_bundle",
        }
    }

    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "json" => Some(ReportFormat::Json),
            "markdown" => Some(ReportFormat::Markdown),
            "csv_bundle" => Some(ReportFormat::CsvBundle),
            _ => None,
        }
    }
}

/// The effective run configuration, echoed verbatim into the report so a run
/// is reproducible from its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub teams_file: String,
    pub outputs_file: String,
    pub ratings_file: String,
    pub categories_file: String,
    pub output_dir: String,
    pub selection: SelectionConfig,
    pub mode: NormalizeMode,
    /// Also compute the grid under the other normalization mode and report
    /// pooled r deltas.
    pub compare: bool,
    pub reference_min_teams: usize,
    pub formats: Vec<ReportFormat>,
    pub config_file: Option<String>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            teams_file: String::new(),
            outputs_file: String::new(),
            ratings_file: String::new(),
            categories_file: String::new(),
            output_dir: String::new(),
            selection: SelectionConfig::default(),
            mode: NormalizeMode::PerDiscipline,
            compare: false,
            reference_min_teams: DEFAULT_MIN_TEAMS,
            formats: vec![ReportFormat::Json, ReportFormat::Markdown, ReportFormat::CsvBundle],
            config_file: None,
        }
    }
}

/// Methodological choices that are fixed in this tool but not dictated by the
/// underlying method description; spelled out so report readers see them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Methodology {
    pub rating_aggregation: String,
    pub size_normalization: String,
    pub discipline_normalization: String,
    pub significance_test: String,
    pub raw_mode_ratings: String,
    pub config_file_format: String,
}

impl Default for Methodology {
    fn default() -> Self {
        Methodology {
            rating_aggregation: "arithmetic mean of form scores per (team, aspect)".to_owned(),
            size_normalization: "output counts divided by FTE leading staff".to_owned(),
            discipline_normalization: "z-score per discipline, sample (n-1) standard deviation"
                .to_owned(),
            significance_test: "one-sided positive t test on Pearson r, df = n-2".to_owned(),
            raw_mode_ratings: "mode 'none' passes both measures and ratings through unscaled"
                .to_owned(),
            config_file_format: "flat key-value TOML; command-line flags override".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub teams: usize,
    pub disciplines: usize,
    pub aspects: usize,
    pub publication_categories: usize,
    pub funding_categories: usize,
    pub index_derived_categories: usize,
    pub rating_forms: usize,
}

impl DatasetSummary {
    pub fn of(dataset: &Dataset) -> DatasetSummary {
        let count_kind = |kind: CategoryKind| dataset.categories().filter(|c| c.kind == kind).count();
        DatasetSummary {
            teams: dataset.n_teams(),
            disciplines: dataset.n_disciplines(),
            aspects: Aspect::ALL.len(),
            publication_categories: count_kind(CategoryKind::Publication),
            funding_categories: count_kind(CategoryKind::Funding),
            index_derived_categories: count_kind(CategoryKind::IndexDerived),
            rating_forms: dataset.total_form_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub settings: RunSettings,
    pub dataset: DatasetSummary,
    pub methodology: Methodology,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerallyValidPair {
    pub category: CategoryId,
    pub aspect: Aspect,
}

/// Pooled r with and without discipline normalization for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationGain {
    pub category: CategoryId,
    pub aspect: Aspect,
    pub r_raw: Option<f64>,
    pub r_normalized: Option<f64>,
    /// r_normalized - r_raw; absent when either side is degenerate.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub team: TeamId,
    pub discipline: DisciplineId,
    pub x_norm: f64,
    pub y_norm: f64,
    pub x_raw: f64,
    pub y_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSeries {
    pub category: CategoryId,
    pub aspect: Aspect,
    pub points: Vec<ScatterPoint>,
}

/// Data-level warnings; part of the report, not a log, so committees reading
/// the results see them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReportWarning {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub meta: ReportMeta,
    pub correlations: Vec<CorrelationResult>,
    pub indicator_sets: Vec<IndicatorSet>,
    pub generally_valid: Vec<GenerallyValidPair>,
    pub references: Vec<ReferenceValue>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub normalization_comparison: Option<Vec<NormalizationGain>>,
    pub scatter: Vec<ScatterSeries>,
    pub warnings: Vec<ReportWarning>,
}

/// One point per team in scope: x = the category's measure, y = the aspect's
/// rating, on the axes selected by `mode`.
pub fn scatter_series(
    norm: &NormalizedDataset,
    dataset: &Dataset,
    category: &CategoryId,
    aspect: Aspect,
    mode: NormalizeMode,
) -> Result<Vec<(TeamId, DisciplineId, f64, f64)>, StatsError> {
    if !dataset.has_category(category) {
        return Err(StatsError::UnknownCategory(category.clone()));
    }

    let source;
    let normalized = if norm.mode == mode {
        norm
    } else {
        source = normalize_dataset(dataset, mode);
        &source
    };

    let cat_col = normalized
        .measures
        .column_position(category)
        .ok_or_else(|| StatsError::UnknownCategory(category.clone()))?;
    let aspect_col = normalized.ratings.column_position(&aspect).expect("all aspects present");

    Ok(normalized
        .measures
        .teams()
        .iter()
        .enumerate()
        .map(|(row, team)| {
            let discipline = dataset.team(team).expect("team exists").discipline.clone();
            (
                team.clone(),
                discipline,
                normalized.measures.get(row, cat_col),
                normalized.ratings.get(row, aspect_col),
            )
        })
        .collect())
}

/// Per-pair pooled delta between the normalized and raw grids.
pub fn normalization_gain(
    results_raw: &[CorrelationResult],
    results_normalized: &[CorrelationResult],
) -> Vec<NormalizationGain> {
    let mut raw_pooled = std::collections::BTreeMap::new();
    for r in results_raw.iter().filter(|r| r.scope == Scope::Pooled) {
        raw_pooled.insert((r.category.clone(), r.aspect), r);
    }

    let mut gains = Vec::new();
    for norm in results_normalized.iter().filter(|r| r.scope == Scope::Pooled) {
        let Some(raw) = raw_pooled.get(&(norm.category.clone(), norm.aspect)) else {
            continue;
        };
        let delta = match (raw.r, norm.r) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        gains.push(NormalizationGain {
            category: norm.category.clone(),
            aspect: norm.aspect,
            r_raw: raw.r,
            r_normalized: norm.r,
            delta,
        });
    }
    gains.sort_by(|a, b| pair_key(&a.category, a.aspect).cmp(&pair_key(&b.category, b.aspect)));
    gains
}

fn pair_key<'a>(category: &'a CategoryId, aspect: Aspect) -> (&'a str, &'static str) {
    (category.as_str(), aspect.id())
}

fn result_key(r: &CorrelationResult) -> (&str, &'static str, (u8, &str)) {
    (r.category.as_str(), r.aspect.id(), scope_sort_key(&r.scope))
}

/// Run the whole analysis over an assembled dataset and collect the results
/// into a report.
pub fn build_report(dataset: &Dataset, settings: &RunSettings) -> Result<RunReport, StatsError> {
    let norm = normalize_dataset(dataset, settings.mode);
    let mut grid = correlation_grid(&norm)?;
    grid.sort_by(|a, b| result_key(a).cmp(&result_key(b)));

    let mut discipline_sets = Vec::new();
    let mut pooled_set = None;
    for scope in scopes(&norm) {
        let mut set = select_indicators(&grid, dataset, &settings.selection, &scope)?;
        set.selected.sort_by(|a, b| pair_key(&a.category, a.aspect).cmp(&pair_key(&b.category, b.aspect)));
        set.excluded.sort_by(|a, b| pair_key(&a.category, a.aspect).cmp(&pair_key(&b.category, b.aspect)));
        match scope {
            Scope::Pooled => pooled_set = Some(set),
            Scope::Discipline(_) => discipline_sets.push(set),
        }
    }
    let pooled_set = pooled_set.expect("pooled scope always present");

    let mut generally_valid: Vec<GenerallyValidPair> =
        general_validity(&discipline_sets, &pooled_set, &settings.selection)
            .into_iter()
            .map(|(category, aspect)| GenerallyValidPair { category, aspect })
            .collect();
    generally_valid.sort_by(|a, b| pair_key(&a.category, a.aspect).cmp(&pair_key(&b.category, b.aspect)));

    let gv_pairs: Vec<(CategoryId, Aspect)> =
        generally_valid.iter().map(|p| (p.category.clone(), p.aspect)).collect();
    let references = reference_table(dataset, &discipline_sets, &gv_pairs, settings.reference_min_teams)?;

    let mut warnings = Vec::new();
    for (discipline, key) in &norm.degenerate {
        let what = match key {
            ColumnKey::Category(c) => format!("category '{c}'"),
            ColumnKey::Aspect(a) => format!("aspect '{a}'"),
        };
        warnings.push(ReportWarning {
            code: "degenerate_column".to_owned(),
            message: format!("{what} has zero variance within discipline '{discipline}'; excluded from correlation"),
        });
    }
    for result in grid.iter().filter(|r| r.degenerate && r.scope == Scope::Pooled) {
        warnings.push(ReportWarning {
            code: "degenerate_pooled_pair".to_owned(),
            message: format!(
                "({}, {}) is constant over the pooled scope; no correlation computed",
                result.category, result.aspect
            ),
        });
    }
    for reference in references.iter().filter(|r| !r.sufficient) {
        warnings.push(ReportWarning {
            code: "insufficient_reference_population".to_owned(),
            message: format!(
                "reference for '{}' in scope '{}' rests on only {} team(s), below the minimum of {}",
                reference.category, reference.scope, reference.n_teams, settings.reference_min_teams
            ),
        });
    }

    let normalization_comparison = if settings.compare {
        let (raw_grid, norm_grid) = match settings.mode {
            NormalizeMode::PerDiscipline => {
                let raw = correlation_grid(&normalize_dataset(dataset, NormalizeMode::None))?;
                (raw, grid.clone())
            }
            NormalizeMode::None => {
                let normalized =
                    correlation_grid(&normalize_dataset(dataset, NormalizeMode::PerDiscipline))?;
                (grid.clone(), normalized)
            }
        };
        let gains = normalization_gain(&raw_grid, &norm_grid);
        for gain in gains.iter().filter(|g| g.delta.is_none()) {
            warnings.push(ReportWarning {
                code: "comparison_skipped".to_owned(),
                message: format!(
                    "({}, {}) is degenerate in at least one mode; no delta reported",
                    gain.category, gain.aspect
                ),
            });
        }
        Some(gains)
    } else {
        None
    };

    let mut scatter = Vec::new();
    for pair in &generally_valid {
        let normalized =
            scatter_series(&norm, dataset, &pair.category, pair.aspect, NormalizeMode::PerDiscipline)?;
        let raw = scatter_series(&norm, dataset, &pair.category, pair.aspect, NormalizeMode::None)?;
        let points = normalized
            .into_iter()
            .zip(raw)
            .map(|((team, discipline, x_norm, y_norm), (_, _, x_raw, y_raw))| ScatterPoint {
                team,
                discipline,
                x_norm,
                y_norm,
                x_raw,
                y_raw,
            })
            .collect();
        scatter.push(ScatterSeries { category: pair.category.clone(), aspect: pair.aspect, points });
    }

    warnings.sort();
    warnings.dedup();

    let mut report = RunReport {
        meta: ReportMeta {
            tool: "peerval".to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            settings: settings.clone(),
            dataset: DatasetSummary::of(dataset),
            methodology: Methodology::default(),
        },
        correlations: grid,
        indicator_sets: {
            let mut sets = discipline_sets;
            sets.push(pooled_set);
            sets
        },
        generally_valid,
        references,
        normalization_comparison,
        scatter,
        warnings,
    };
    round_report_floats(&mut report);
    Ok(report)
}

/// Round to 6 significant decimal digits. All floats in a rendered report pass
/// through this, so JSON serialization (shortest round-trip form of the
/// rounded double) re-parses and re-renders to identical bytes.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exponent = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(5 - exponent);
    (x * scale).round() / scale
}

fn round_opt(x: &mut Option<f64>) {
    if let Some(v) = x {
        *v = sig6(*v);
    }
}

fn round_result(r: &mut CorrelationResult) {
    round_opt(&mut r.r);
    round_opt(&mut r.t);
    round_opt(&mut r.p_one_sided);
}

fn round_report_floats(report: &mut RunReport) {
    for r in &mut report.correlations {
        round_result(r);
    }
    for set in &mut report.indicator_sets {
        for s in &mut set.selected {
            s.prevalence = sig6(s.prevalence);
            round_result(&mut s.result);
        }
        for e in &mut set.excluded {
            e.prevalence = sig6(e.prevalence);
            round_result(&mut e.result);
        }
    }
    for reference in &mut report.references {
        reference.mean_rate = sig6(reference.mean_rate);
        reference.sd_rate = sig6(reference.sd_rate);
    }
    if let Some(gains) = &mut report.normalization_comparison {
        for gain in gains {
            round_opt(&mut gain.r_raw);
            round_opt(&mut gain.r_normalized);
            round_opt(&mut gain.delta);
        }
    }
    for series in &mut report.scatter {
        for point in &mut series.points {
            point.x_norm = sig6(point.x_norm);
            point.y_norm = sig6(point.y_norm);
            point.x_raw = sig6(point.x_raw);
            point.y_raw = sig6(point.y_raw);
        }
    }
}
