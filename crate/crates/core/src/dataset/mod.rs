//! Input tables, validation, and the immutable analysis dataset.
//!
//! Three fact tables (teams, output counts, per-form peer ratings) plus the
//! category dictionary are parsed from CSV, cross-checked, and frozen into a
//! [`Dataset`]. Everything downstream treats the dataset as read-only.

mod parse;
mod write;

pub use parse::{parse_categories, parse_outputs, parse_ratings, parse_teams};
pub use write::write_dataset_csvs;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! string_key {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_key!(
    /// Opaque key of one evaluated research unit.
    TeamId
);
string_key!(
    /// Opaque key of a research discipline (one expert panel).
    DisciplineId
);
string_key!(
    /// Opaque key of a performance category (publication type or funding channel).
    CategoryId
);

/// The eight scored dimensions produced by the expert panels. Closed enum:
/// rating rows naming anything else are rejected at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    Overall,
    ScientificMerit,
    Planning,
    Innovation,
    TeamQuality,
    Feasibility,
    Productivity,
    ScientificImpact,
}

impl Aspect {
    pub const ALL: [Aspect; 8] = [
        Aspect::Overall,
        Aspect::ScientificMerit,
        Aspect::Planning,
        Aspect::Innovation,
        Aspect::TeamQuality,
        Aspect::Feasibility,
        Aspect::Productivity,
        Aspect::ScientificImpact,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Aspect::Overall => "overall",
            Aspect::ScientificMerit => "scientific_merit",
            Aspect::Planning => "planning",
            Aspect::Innovation => "innovation",
            Aspect::TeamQuality => "team_quality",
            Aspect::Feasibility => "feasibility",
            Aspect::Productivity => "productivity",
            Aspect::ScientificImpact => "scientific_impact",
        }
    }

    pub fn parse(s: &str) -> Option<Aspect> {
        Aspect::ALL.iter().copied().find(|a| a.id() == s)
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// What a performance category counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryKind {
    Publication,
    Funding,
    /// Derived from an external index (e.g. publications in SCIE/SSCI/AHCI
    /// journals), overlapping the plain publication categories.
    IndexDerived,
}

impl CategoryKind {
    pub fn id(self) -> &'static str {
        match self {
            CategoryKind::Publication => "publication",
            CategoryKind::Funding => "funding",
            CategoryKind::IndexDerived => "index_derived",
        }
    }

    pub fn parse(s: &str) -> Option<CategoryKind> {
        match s {
            "publication" => Some(CategoryKind::Publication),
            "funding" => Some(CategoryKind::Funding),
            "index_derived" => Some(CategoryKind::IndexDerived),
            _ => None,
        }
    }
}

/// One evaluated research unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Team {
    pub id: TeamId,
    pub discipline: DisciplineId,
    /// Full-time-equivalent leading staff (potential principal promoters).
    /// Strictly positive; it is the denominator of every rate.
    pub fte_leading: f64,
}

/// One entry of the category dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: CategoryId,
    pub kind: CategoryKind,
    pub label: String,
}

/// A count of one performance category for one team. Pairs absent from the
/// input are zero counts, not missing data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub team: TeamId,
    pub category: CategoryId,
    pub count: f64,
}

/// One raw evaluation-form score, before aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingForm {
    pub team: TeamId,
    pub aspect: Aspect,
    pub score: f64,
}

/// A team's aggregated score on one aspect.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerRating {
    pub team: TeamId,
    pub aspect: Aspect,
    /// Arithmetic mean of the form scores.
    pub score: f64,
    /// Number of expert forms aggregated.
    pub form_count: usize,
    /// The individual form scores, kept in canonical (ascending) order so that
    /// aggregation and serialization are insensitive to input row order.
    form_scores: Vec<f64>,
}

impl PeerRating {
    /// Aggregate one (team, aspect) group of form scores.
    pub fn from_forms(team: TeamId, aspect: Aspect, mut scores: Vec<f64>) -> PeerRating {
        assert!(!scores.is_empty(), "rating group must have at least one form");
        scores.sort_by(f64::total_cmp);
        let score = scores.iter().sum::<f64>() / scores.len() as f64;
        PeerRating {
            team,
            aspect,
            score,
            form_count: scores.len(),
            form_scores: scores,
        }
    }

    /// A rating backed by a single form with the given score.
    pub fn single(team: TeamId, aspect: Aspect, score: f64) -> PeerRating {
        PeerRating::from_forms(team, aspect, vec![score])
    }

    pub fn form_scores(&self) -> &[f64] {
        &self.form_scores
    }
}

/// One problem found while parsing or validating input data.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    /// Source file label, or `"dataset"` for cross-table problems.
    pub file: String,
    /// 1-based line in the source file; 0 when not applicable.
    pub line: u64,
    /// Offending column name, when one can be singled out.
    pub column: Option<String>,
    pub message: String,
}

impl Issue {
    fn new(file: &str, line: u64, column: Option<&str>, message: impl Into<String>) -> Issue {
        Issue {
            file: file.to_owned(),
            line,
            column: column.map(str::to_owned),
            message: message.into(),
        }
    }

    fn dataset(message: impl Into<String>) -> Issue {
        Issue::new("dataset", 0, None, message)
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if self.line > 0 {
            write!(f, ":{}", self.line)?;
        }
        if let Some(col) = &self.column {
            write!(f, " ({col})")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{}", format_issues(.0))]
    Invalid(Vec<Issue>),
}

impl DatasetError {
    pub fn issues(&self) -> &[Issue] {
        match self {
            DatasetError::Invalid(issues) => issues,
            DatasetError::Io { .. } => &[],
        }
    }
}

fn format_issues(issues: &[Issue]) -> String {
    let lines: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
    lines.join("\n")
}

/// Scope identifiers are serialized as plain strings, so a discipline may not
/// claim the string reserved for the pooled scope.
pub const RESERVED_POOLED_ID: &str = "pooled";

/// The immutable analysis dataset: all four tables joined and validated.
///
/// Invariants established by [`Dataset::assemble`]:
/// - every output and rating row resolves to a known team / category,
/// - every team carries a rating for each of the 8 aspects,
/// - every discipline has at least 3 teams (a correlation needs df >= 1),
/// - `fte_leading > 0` for every team.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    teams: BTreeMap<TeamId, Team>,
    categories: BTreeMap<CategoryId, Category>,
    outputs: BTreeMap<(TeamId, CategoryId), f64>,
    ratings: BTreeMap<(TeamId, Aspect), PeerRating>,
    disciplines: BTreeMap<DisciplineId, Vec<TeamId>>,
}

impl Dataset {
    /// Join and validate the parsed tables. All violations are reported at
    /// once, not just the first.
    pub fn assemble(
        teams: Vec<Team>,
        categories: Vec<Category>,
        outputs: Vec<OutputRecord>,
        ratings: Vec<PeerRating>,
    ) -> Result<Dataset, DatasetError> {
        let mut issues = Vec::new();

        let mut team_map = BTreeMap::new();
        for team in teams {
            if team.fte_leading <= 0.0 || !team.fte_leading.is_finite() {
                issues.push(Issue::dataset(format!(
                    "team '{}' has nonpositive fte_leading {}",
                    team.id, team.fte_leading
                )));
            }
            if team.discipline.as_str() == RESERVED_POOLED_ID {
                issues.push(Issue::dataset(format!(
                    "team '{}' uses reserved discipline id '{RESERVED_POOLED_ID}'",
                    team.id
                )));
            }
            if team_map.insert(team.id.clone(), team.clone()).is_some() {
                issues.push(Issue::dataset(format!("duplicate team '{}'", team.id)));
            }
        }

        let mut category_map = BTreeMap::new();
        for category in categories {
            if category_map
                .insert(category.id.clone(), category.clone())
                .is_some()
            {
                issues.push(Issue::dataset(format!(
                    "duplicate category '{}'",
                    category.id
                )));
            }
        }

        let mut output_map = BTreeMap::new();
        for record in outputs {
            if !team_map.contains_key(&record.team) {
                issues.push(Issue::dataset(format!(
                    "output record ({}, {}) references unknown team '{}'",
                    record.team, record.category, record.team
                )));
            }
            if !category_map.contains_key(&record.category) {
                issues.push(Issue::dataset(format!(
                    "output record ({}, {}) references unknown category '{}'",
                    record.team, record.category, record.category
                )));
            }
            if record.count < 0.0 || !record.count.is_finite() {
                issues.push(Issue::dataset(format!(
                    "output record ({}, {}) has negative count {}",
                    record.team, record.category, record.count
                )));
            }
            let key = (record.team.clone(), record.category.clone());
            if output_map.insert(key, record.count).is_some() {
                issues.push(Issue::dataset(format!(
                    "duplicate output record ({}, {})",
                    record.team, record.category
                )));
            }
        }

        let mut rating_map = BTreeMap::new();
        for rating in ratings {
            if !team_map.contains_key(&rating.team) {
                issues.push(Issue::dataset(format!(
                    "rating ({}, {}) references unknown team '{}'",
                    rating.team, rating.aspect, rating.team
                )));
            }
            let key = (rating.team.clone(), rating.aspect);
            if rating_map.insert(key, rating.clone()).is_some() {
                issues.push(Issue::dataset(format!(
                    "duplicate rating ({}, {})",
                    rating.team, rating.aspect
                )));
            }
        }

        for team in team_map.values() {
            for aspect in Aspect::ALL {
                if !rating_map.contains_key(&(team.id.clone(), aspect)) {
                    issues.push(Issue::dataset(format!(
                        "team '{}' has no rating for aspect '{}'",
                        team.id, aspect
                    )));
                }
            }
        }

        let mut disciplines: BTreeMap<DisciplineId, Vec<TeamId>> = BTreeMap::new();
        for team in team_map.values() {
            disciplines
                .entry(team.discipline.clone())
                .or_default()
                .push(team.id.clone());
        }
        for (discipline, members) in &disciplines {
            if members.len() < 3 {
                issues.push(Issue::dataset(format!(
                    "discipline '{}' has only {} team(s); at least 3 are required",
                    discipline,
                    members.len()
                )));
            }
        }

        if !issues.is_empty() {
            return Err(DatasetError::Invalid(issues));
        }

        Ok(Dataset {
            teams: team_map,
            categories: category_map,
            outputs: output_map,
            ratings: rating_map,
            disciplines,
        })
    }

    pub fn teams(&self) -> impl Iterator<Item = &Team> {
        self.teams.values()
    }

    /// Team ids in canonical (sorted) order.
    pub fn team_ids(&self) -> Vec<TeamId> {
        self.teams.keys().cloned().collect()
    }

    pub fn team(&self, id: &TeamId) -> Option<&Team> {
        self.teams.get(id)
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.categories.values()
    }

    pub fn category_ids(&self) -> Vec<CategoryId> {
        self.categories.keys().cloned().collect()
    }

    pub fn has_category(&self, id: &CategoryId) -> bool {
        self.categories.contains_key(id)
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    /// Disciplines with their member teams, sorted both ways.
    pub fn disciplines(&self) -> &BTreeMap<DisciplineId, Vec<TeamId>> {
        &self.disciplines
    }

    pub fn n_disciplines(&self) -> usize {
        self.disciplines.len()
    }

    /// Output count for (team, category); absent pairs are 0.
    pub fn count(&self, team: &TeamId, category: &CategoryId) -> f64 {
        self.outputs
            .get(&(team.clone(), category.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn outputs(&self) -> impl Iterator<Item = (&(TeamId, CategoryId), &f64)> {
        self.outputs.iter()
    }

    pub fn rating(&self, team: &TeamId, aspect: Aspect) -> f64 {
        self.ratings
            .get(&(team.clone(), aspect))
            .map(|r| r.score)
            .expect("dataset invariant: every team has every aspect")
    }

    pub fn ratings(&self) -> impl Iterator<Item = &PeerRating> {
        self.ratings.values()
    }

    pub fn n_ratings(&self) -> usize {
        self.ratings.len()
    }

    pub fn total_form_count(&self) -> usize {
        self.ratings.values().map(|r| r.form_count).sum()
    }
}

/// Aggregate raw form rows into one [`PeerRating`] per (team, aspect).
///
/// The mean is computed over scores sorted into a canonical order, so the
/// result is identical regardless of input row order.
pub fn aggregate_ratings(rows: Vec<RatingForm>) -> Vec<PeerRating> {
    let mut groups: BTreeMap<(TeamId, Aspect), Vec<f64>> = BTreeMap::new();
    for row in rows {
        groups.entry((row.team, row.aspect)).or_default().push(row.score);
    }
    groups
        .into_iter()
        .map(|((team, aspect), scores)| PeerRating::from_forms(team, aspect, scores))
        .collect()
}

/// Distinct discipline ids referenced by a set of teams (helper for summaries).
pub fn discipline_ids(teams: &[Team]) -> BTreeSet<DisciplineId> {
    teams.iter().map(|t| t.discipline.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn team(id: &str, disc: &str, fte: f64) -> Team {
        Team {
            id: id.into(),
            discipline: disc.into(),
            fte_leading: fte,
        }
    }

    fn category(id: &str, kind: CategoryKind) -> Category {
        Category {
            id: id.into(),
            kind,
            label: id.to_owned(),
        }
    }

    fn full_ratings(teams: &[Team]) -> Vec<PeerRating> {
        teams
            .iter()
            .flat_map(|t| {
                Aspect::ALL
                    .iter()
                    .map(|&a| PeerRating::single(t.id.clone(), a, 3.0))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    fn three_team_dataset() -> Dataset {
        let teams = vec![team("T01", "ECON", 2.0), team("T02", "ECON", 1.0), team("T03", "ECON", 4.0)];
        let ratings = full_ratings(&teams);
        Dataset::assemble(
            teams,
            vec![category("PUB", CategoryKind::Publication)],
            vec![OutputRecord {
                team: "T01".into(),
                category: "PUB".into(),
                count: 4.0,
            }],
            ratings,
        )
        .unwrap()
    }

    #[test]
    fn aggregate_mean_of_equal_forms() {
        let rows = vec![
            RatingForm { team: "T01".into(), aspect: Aspect::Overall, score: 4.0 },
            RatingForm { team: "T01".into(), aspect: Aspect::Overall, score: 4.0 },
            RatingForm { team: "T01".into(), aspect: Aspect::Overall, score: 4.0 },
        ];
        let agg = aggregate_ratings(rows);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].score, 4.0);
        assert_eq!(agg[0].form_count, 3);
    }

    #[test]
    fn aggregate_midpoint() {
        let rows = vec![
            RatingForm { team: "T01".into(), aspect: Aspect::Overall, score: 3.0 },
            RatingForm { team: "T01".into(), aspect: Aspect::Overall, score: 5.0 },
        ];
        let agg = aggregate_ratings(rows);
        assert_eq!(agg[0].score, 4.0);
        assert_eq!(agg[0].form_count, 2);
    }

    #[test]
    fn aggregate_four_forms() {
        // mean of (2, 3, 4, 5) = 3.5, worked by hand
        let rows: Vec<RatingForm> = [2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&s| RatingForm { team: "T01".into(), aspect: Aspect::Planning, score: s })
            .collect();
        let agg = aggregate_ratings(rows);
        assert_eq!(agg[0].score, 3.5);
        assert_eq!(agg[0].form_count, 4);
    }

    #[test]
    fn aggregate_is_row_order_insensitive() {
        let fwd = vec![
            RatingForm { team: "T01".into(), aspect: Aspect::Overall, score: 0.1 },
            RatingForm { team: "T01".into(), aspect: Aspect::Overall, score: 0.2 },
            RatingForm { team: "T01".into(), aspect: Aspect::Overall, score: 0.30000000000000004 },
        ];
        let mut rev = fwd.clone();
        rev.reverse();
        let a = aggregate_ratings(fwd);
        let b = aggregate_ratings(rev);
        assert_eq!(a[0].score.to_bits(), b[0].score.to_bits());
    }

    #[test]
    fn assemble_accepts_valid_input() {
        let ds = three_team_dataset();
        assert_eq!(ds.n_teams(), 3);
        assert_eq!(ds.n_ratings(), 3 * 8);
        assert_eq!(ds.count(&"T01".into(), &"PUB".into()), 4.0);
        assert_eq!(ds.count(&"T02".into(), &"PUB".into()), 0.0);
    }

    #[test]
    fn assemble_rejects_dangling_team() {
        let teams = vec![team("T01", "ECON", 2.0), team("T02", "ECON", 1.0), team("T03", "ECON", 4.0)];
        let ratings = full_ratings(&teams);
        let err = Dataset::assemble(
            teams,
            vec![category("PUB", CategoryKind::Publication)],
            vec![OutputRecord { team: "T99".into(), category: "PUB".into(), count: 1.0 }],
            ratings,
        )
        .unwrap_err();
        let issues = err.issues();
        assert!(issues.iter().any(|i| i.message.contains("unknown team 'T99'")), "{issues:?}");
    }

    #[test]
    fn assemble_rejects_small_discipline() {
        let teams = vec![
            team("T01", "ECON", 2.0),
            team("T02", "ECON", 1.0),
            team("T03", "ECON", 4.0),
            team("T04", "LAW", 1.0),
            team("T05", "LAW", 1.0),
        ];
        let ratings = full_ratings(&teams);
        let err = Dataset::assemble(teams, vec![], vec![], ratings).unwrap_err();
        assert!(err
            .issues()
            .iter()
            .any(|i| i.message.contains("discipline 'LAW'") && i.message.contains("at least 3")));
    }

    #[test]
    fn assemble_rejects_missing_aspect() {
        let teams = vec![team("T01", "ECON", 2.0), team("T02", "ECON", 1.0), team("T03", "ECON", 4.0)];
        let mut ratings = full_ratings(&teams);
        ratings.retain(|r| !(r.team == "T01".into() && r.aspect == Aspect::Feasibility));
        let err = Dataset::assemble(teams, vec![], vec![], ratings).unwrap_err();
        assert!(err
            .issues()
            .iter()
            .any(|i| i.message.contains("no rating for aspect 'feasibility'")));
    }

    #[test]
    fn assemble_rejects_reserved_discipline_id() {
        let teams = vec![
            team("T01", "pooled", 2.0),
            team("T02", "pooled", 1.0),
            team("T03", "pooled", 4.0),
        ];
        let ratings = full_ratings(&teams);
        let err = Dataset::assemble(teams, vec![], vec![], ratings).unwrap_err();
        assert!(err.issues().iter().any(|i| i.message.contains("reserved")));
    }

    #[test]
    fn assemble_is_row_order_insensitive() {
        let mut teams = vec![team("T01", "ECON", 2.0), team("T02", "ECON", 1.0), team("T03", "ECON", 4.0)];
        let ratings = full_ratings(&teams);
        let cats = vec![category("PUB", CategoryKind::Publication)];
        let outs = vec![
            OutputRecord { team: "T01".into(), category: "PUB".into(), count: 4.0 },
            OutputRecord { team: "T03".into(), category: "PUB".into(), count: 1.0 },
        ];
        let a = Dataset::assemble(teams.clone(), cats.clone(), outs.clone(), ratings.clone()).unwrap();
        teams.reverse();
        let mut outs_rev = outs.clone();
        outs_rev.reverse();
        let mut ratings_rev = ratings.clone();
        ratings_rev.reverse();
        let b = Dataset::assemble(teams, cats, outs_rev, ratings_rev).unwrap();
        assert_eq!(a, b);
    }
}
