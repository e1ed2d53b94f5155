//! The two normalizations applied before correlating: per-FTE rates for size
//! independence, and per-discipline mean/sd alignment (z-scores) of both
//! measures and ratings.
//!
//! Mode [`NormalizeMode::None`] skips the discipline alignment (raw per-FTE
//! rates, raw rating scores); it exists to quantify the gain of normalizing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Aspect, CategoryId, Dataset, DisciplineId, TeamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Z-score every measures column and every ratings column within each
    /// discipline (sample standard deviation).
    PerDiscipline,
    /// Per-FTE rates and raw rating scores, no discipline alignment.
    None,
}

impl NormalizeMode {
    pub fn id(self) -> &'static str {
        match self {
            NormalizeMode::PerDiscipline => "per_discipline",
            NormalizeMode::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<NormalizeMode> {
        match s {
            "per_discipline" => Some(NormalizeMode::PerDiscipline),
            "none" => Some(NormalizeMode::None),
            _ => None,
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A dense team-by-column matrix of f64 values, rows sorted by team id and
/// columns sorted by their key.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMatrix<K> {
    teams: Vec<TeamId>,
    columns: Vec<K>,
    values: Vec<f64>,
}

impl<K: Ord + Clone> ColumnMatrix<K> {
    pub fn zeros(teams: Vec<TeamId>, columns: Vec<K>) -> ColumnMatrix<K> {
        let values = vec![0.0; teams.len() * columns.len()];
        ColumnMatrix { teams, columns, values }
    }

    pub fn n_rows(&self) -> usize {
        self.teams.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn teams(&self) -> &[TeamId] {
        &self.teams
    }

    pub fn columns(&self) -> &[K] {
        &self.columns
    }

    pub fn column_position(&self, key: &K) -> Option<usize> {
        self.columns.binary_search(key).ok()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.columns.len() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.columns.len() + col] = value;
    }

    /// All values of one column, in row (team) order.
    pub fn column_values(&self, col: usize) -> Vec<f64> {
        (0..self.teams.len()).map(|r| self.get(r, col)).collect()
    }

    pub fn set_column(&mut self, col: usize, values: &[f64]) {
        assert_eq!(values.len(), self.teams.len());
        for (row, &v) in values.iter().enumerate() {
            self.set(row, col, v);
        }
    }
}

/// Per-FTE rates: `count / fte_leading` per (team, category).
pub type RateMatrix = ColumnMatrix<CategoryId>;

/// Column identity used for degeneracy flags: a performance category or a
/// rating aspect.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKey {
    Category(CategoryId),
    Aspect(Aspect),
}

impl fmt::Display for ColumnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKey::Category(c) => write!(f, "{c}"),
            ColumnKey::Aspect(a) => write!(f, "{a}"),
        }
    }
}

/// Measures and ratings after normalization, plus the degeneracy flags for
/// zero-variance (discipline, column) groups.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDataset {
    pub mode: NormalizeMode,
    pub measures: ColumnMatrix<CategoryId>,
    pub ratings: ColumnMatrix<Aspect>,
    /// (discipline, column) groups with zero within-discipline variance; their
    /// cells are all exactly 0 in `per_discipline` mode.
    pub degenerate: BTreeSet<(DisciplineId, ColumnKey)>,
    discipline_rows: BTreeMap<DisciplineId, Vec<usize>>,
}

impl NormalizedDataset {
    /// Row indices (into the matrices) per discipline, sorted.
    pub fn discipline_rows(&self) -> &BTreeMap<DisciplineId, Vec<usize>> {
        &self.discipline_rows
    }

    pub fn is_degenerate(&self, discipline: &DisciplineId, key: &ColumnKey) -> bool {
        self.degenerate.contains(&(discipline.clone(), key.clone()))
    }
}

/// Size normalization: every output count divided by its team's FTE leading
/// staff. Absent records are zero.
pub fn per_fte(dataset: &Dataset) -> RateMatrix {
    let teams = dataset.team_ids();
    let categories = dataset.category_ids();
    let mut matrix = ColumnMatrix::zeros(teams, categories);
    for (row, team_id) in matrix.teams.clone().iter().enumerate() {
        let fte = dataset.team(team_id).expect("team exists").fte_leading;
        for (col, category) in matrix.columns.clone().iter().enumerate() {
            let count = dataset.count(team_id, category);
            matrix.set(row, col, count / fte);
        }
    }
    matrix
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Z-score one column within each discipline group (sample sd, n-1).
///
/// Groups with zero variance come back as all-zero cells and their discipline
/// id in the degenerate list; this is a flag, not an error, so one constant
/// category cannot abort a run.
pub fn discipline_zscore(
    column: &[f64],
    groups: &BTreeMap<DisciplineId, Vec<usize>>,
) -> (Vec<f64>, Vec<DisciplineId>) {
    let mut normalized = vec![0.0; column.len()];
    let mut degenerate = Vec::new();

    for (discipline, rows) in groups {
        let values: Vec<f64> = rows.iter().map(|&r| column[r]).collect();
        if is_constant(&values) {
            degenerate.push(discipline.clone());
            continue; // cells stay exactly 0
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ssq: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ssq / (n - 1.0)).sqrt();
        for (&row, &value) in rows.iter().zip(&values) {
            normalized[row] = (value - mean) / sd;
        }
    }

    (normalized, degenerate)
}

/// Apply the configured normalization to a whole dataset.
///
/// Size normalization (per FTE) always runs first; discipline alignment is
/// applied on top of the rates, never on raw counts.
pub fn normalize_dataset(dataset: &Dataset, mode: NormalizeMode) -> NormalizedDataset {
    let mut measures = per_fte(dataset);
    let teams = measures.teams().to_vec();

    let mut ratings = ColumnMatrix::zeros(teams.clone(), Aspect::ALL.to_vec());
    for (row, team_id) in teams.iter().enumerate() {
        for (col, &aspect) in Aspect::ALL.iter().enumerate() {
            ratings.set(row, col, dataset.rating(team_id, aspect));
        }
    }

    let mut discipline_rows: BTreeMap<DisciplineId, Vec<usize>> = BTreeMap::new();
    for (row, team_id) in teams.iter().enumerate() {
        let discipline = dataset.team(team_id).expect("team exists").discipline.clone();
        discipline_rows.entry(discipline).or_default().push(row);
    }

    let mut degenerate = BTreeSet::new();
    if mode == NormalizeMode::PerDiscipline {
        for col in 0..measures.n_columns() {
            let key = ColumnKey::Category(measures.columns()[col].clone());
            let (normalized, flagged) = discipline_zscore(&measures.column_values(col), &discipline_rows);
            measures.set_column(col, &normalized);
            for discipline in flagged {
                degenerate.insert((discipline, key.clone()));
            }
        }
        for col in 0..ratings.n_columns() {
            let key = ColumnKey::Aspect(ratings.columns()[col]);
            let (normalized, flagged) = discipline_zscore(&ratings.column_values(col), &discipline_rows);
            ratings.set_column(col, &normalized);
            for discipline in flagged {
                degenerate.insert((discipline, key.clone()));
            }
        }
    }

    NormalizedDataset { mode, measures, ratings, degenerate, discipline_rows }
}

/// Debug dump of the normalized matrices plus the degenerate-group list.
pub fn write_normalized_csvs(norm: &NormalizedDataset, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut out = File::create(dir.join("normalized_measures.csv"))?;
    let cols: Vec<String> = norm.measures.columns().iter().map(|c| c.to_string()).collect();
    writeln!(out, "team_id,{}", cols.join(","))?;
    for (row, team) in norm.measures.teams().iter().enumerate() {
        let cells: Vec<String> = (0..norm.measures.n_columns())
            .map(|c| norm.measures.get(row, c).to_string())
            .collect();
        writeln!(out, "{team},{}", cells.join(","))?;
    }

    let mut out = File::create(dir.join("normalized_ratings.csv"))?;
    let cols: Vec<String> = norm.ratings.columns().iter().map(|a| a.to_string()).collect();
    writeln!(out, "team_id,{}", cols.join(","))?;
    for (row, team) in norm.ratings.teams().iter().enumerate() {
        let cells: Vec<String> = (0..norm.ratings.n_columns())
            .map(|c| norm.ratings.get(row, c).to_string())
            .collect();
        writeln!(out, "{team},{}", cells.join(","))?;
    }

    let mut out = File::create(dir.join("degenerate.csv"))?;
    writeln!(out, "discipline_id,column_id")?;
    for (discipline, key) in &norm.degenerate {
        writeln!(out, "{discipline},{key}")?;
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Category, CategoryKind, OutputRecord, PeerRating, Team};

    fn groups(spec: &[(&str, &[usize])]) -> BTreeMap<DisciplineId, Vec<usize>> {
        spec.iter()
            .map(|(d, rows)| (DisciplineId::from(*d), rows.to_vec()))
            .collect()
    }

    #[test]
    fn zscore_three_values() {
        let (z, flagged) = discipline_zscore(&[1.0, 2.0, 3.0], &groups(&[("D", &[0, 1, 2])]));
        assert_eq!(z, vec![-1.0, 0.0, 1.0]);
        assert!(flagged.is_empty());
    }

    #[test]
    fn zscore_constant_group_is_degenerate() {
        let (z, flagged) = discipline_zscore(&[5.0, 5.0, 5.0], &groups(&[("D", &[0, 1, 2])]));
        assert_eq!(z, vec![0.0, 0.0, 0.0]);
        assert_eq!(flagged, vec![DisciplineId::from("D")]);
    }

    #[test]
    fn zscore_four_values() {
        // mean 25, sample sd 12.9099; by hand: (10,20,30,40) -> -1.1619, -0.3873, 0.3873, 1.1619
        let (z, _) = discipline_zscore(&[10.0, 20.0, 30.0, 40.0], &groups(&[("D", &[0, 1, 2, 3])]));
        let expected = [-1.1619, -0.3873, 0.3873, 1.1619];
        for (got, want) in z.iter().zip(expected) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn zscore_groups_are_independent() {
        let (z, _) = discipline_zscore(
            &[1.0, 2.0, 3.0, 11.0, 12.0, 13.0],
            &groups(&[("A", &[0, 1, 2]), ("B", &[3, 4, 5])]),
        );
        assert_eq!(z, vec![-1.0, 0.0, 1.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn zscore_idempotent() {
        let g = groups(&[("D", &[0, 1, 2, 3, 4])]);
        let (z1, _) = discipline_zscore(&[3.0, 1.0, 4.0, 1.0, 5.0], &g);
        let (z2, _) = discipline_zscore(&z1, &g);
        for (a, b) in z1.iter().zip(&z2) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zscore_scale_invariant() {
        let g = groups(&[("D", &[0, 1, 2, 3])]);
        let base = [2.0, 7.0, 1.0, 4.0];
        let (z1, _) = discipline_zscore(&base, &g);
        for k in [0.1, 3.0, 1000.0] {
            let scaled: Vec<f64> = base.iter().map(|v| v * k).collect();
            let (z2, _) = discipline_zscore(&scaled, &g);
            for (a, b) in z1.iter().zip(&z2) {
                assert!((a - b).abs() < 1e-9, "k={k}");
            }
        }
    }

    fn small_dataset() -> Dataset {
        let teams = vec![
            Team { id: "T1".into(), discipline: "A".into(), fte_leading: 2.0 },
            Team { id: "T2".into(), discipline: "A".into(), fte_leading: 1.0 },
            Team { id: "T3".into(), discipline: "A".into(), fte_leading: 4.0 },
            Team { id: "T4".into(), discipline: "B".into(), fte_leading: 3.5 },
            Team { id: "T5".into(), discipline: "B".into(), fte_leading: 2.0 },
            Team { id: "T6".into(), discipline: "B".into(), fte_leading: 1.0 },
        ];
        let categories = vec![
            Category { id: "PUB".into(), kind: CategoryKind::Publication, label: "Pubs".into() },
            Category { id: "FLAT".into(), kind: CategoryKind::Funding, label: "Flat".into() },
        ];
        let outputs = vec![
            OutputRecord { team: "T1".into(), category: "PUB".into(), count: 4.0 },
            OutputRecord { team: "T2".into(), category: "PUB".into(), count: 3.0 },
            OutputRecord { team: "T4".into(), category: "PUB".into(), count: 7.0 },
            OutputRecord { team: "T5".into(), category: "PUB".into(), count: 2.0 },
            OutputRecord { team: "T6".into(), category: "PUB".into(), count: 1.0 },
        ];
        let mut ratings = Vec::new();
        for (i, team) in ["T1", "T2", "T3", "T4", "T5", "T6"].iter().enumerate() {
            for (j, &aspect) in Aspect::ALL.iter().enumerate() {
                let score = 2.0 + (i as f64) * 0.5 + (j as f64) * 0.1 + ((i * j) % 3) as f64 * 0.2;
                ratings.push(PeerRating::single(TeamId::from(*team), aspect, score));
            }
        }
        Dataset::assemble(teams, categories, outputs, ratings).unwrap()
    }

    #[test]
    fn per_fte_divides_by_team_fte() {
        let dataset = small_dataset();
        let rates = per_fte(&dataset);
        let pub_col = rates.column_position(&"PUB".into()).unwrap();
        let t1 = rates.teams().iter().position(|t| t == &TeamId::from("T1")).unwrap();
        assert_eq!(rates.get(t1, pub_col), 2.0); // 4 / 2.0
        let t3 = rates.teams().iter().position(|t| t == &TeamId::from("T3")).unwrap();
        assert_eq!(rates.get(t3, pub_col), 0.0); // absent record
        let t4 = rates.teams().iter().position(|t| t == &TeamId::from("T4")).unwrap();
        assert_eq!(rates.get(t4, pub_col), 2.0); // 7 / 3.5
    }

    #[test]
    fn per_fte_homogeneous_in_size() {
        // doubling both counts and fte leaves rates bit-identical
        let dataset = small_dataset();
        let doubled = Dataset::assemble(
            dataset.teams().map(|t| Team { fte_leading: t.fte_leading * 2.0, ..t.clone() }).collect(),
            dataset.categories().cloned().collect(),
            dataset
                .outputs()
                .map(|((team, category), count)| OutputRecord {
                    team: team.clone(),
                    category: category.clone(),
                    count: count * 2.0,
                })
                .collect(),
            dataset.ratings().cloned().collect(),
        )
        .unwrap();
        assert_eq!(per_fte(&dataset), per_fte(&doubled));
    }

    #[test]
    fn normalized_groups_have_zero_mean_unit_sd() {
        let dataset = small_dataset();
        let norm = normalize_dataset(&dataset, NormalizeMode::PerDiscipline);
        for col in 0..norm.ratings.n_columns() {
            let values = norm.ratings.column_values(col);
            for rows in norm.discipline_rows().values() {
                let group: Vec<f64> = rows.iter().map(|&r| values[r]).collect();
                let n = group.len() as f64;
                let mean = group.iter().sum::<f64>() / n;
                let sd = (group.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
                assert!(mean.abs() < 1e-9);
                assert!((sd - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn all_zero_category_flagged_in_both_disciplines() {
        let dataset = small_dataset();
        let norm = normalize_dataset(&dataset, NormalizeMode::PerDiscipline);
        assert!(norm.is_degenerate(&"A".into(), &ColumnKey::Category("FLAT".into())));
        assert!(norm.is_degenerate(&"B".into(), &ColumnKey::Category("FLAT".into())));
    }

    #[test]
    fn mode_none_passes_rates_through() {
        let dataset = small_dataset();
        let norm = normalize_dataset(&dataset, NormalizeMode::None);
        assert_eq!(norm.measures, per_fte(&dataset));
        assert!(norm.degenerate.is_empty());
        let t1 = norm.ratings.teams().iter().position(|t| t == &TeamId::from("T1")).unwrap();
        let overall = norm.ratings.column_position(&Aspect::Overall).unwrap();
        assert_eq!(norm.ratings.get(t1, overall), dataset.rating(&"T1".into(), Aspect::Overall));
    }

    #[test]
    fn centering_aligns_discipline_means() {
        // two disciplines whose raw rating means differ by 2.0 -> both centered at 0
        let dataset = small_dataset();
        let norm = normalize_dataset(&dataset, NormalizeMode::PerDiscipline);
        let overall = norm.ratings.column_position(&Aspect::Overall).unwrap();
        let values = norm.ratings.column_values(overall);
        for rows in norm.discipline_rows().values() {
            let mean: f64 = rows.iter().map(|&r| values[r]).sum::<f64>() / rows.len() as f64;
            assert!(mean.abs() < 1e-9);
        }
    }
}
