//! Institution-internal reference values: mean and spread of per-FTE rates per
//! (category, scope), the fallback when no external benchmarks exist for
//! locally defined categories.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{CategoryId, Dataset, DisciplineId};
use crate::select::IndicatorSet;
use crate::stats::{Scope, StatsError};

/// Smallest population considered large enough to quote an internal average.
pub const DEFAULT_MIN_TEAMS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub category: CategoryId,
    pub scope: Scope,
    /// Mean per-FTE rate over the scope's teams.
    pub mean_rate: f64,
    /// Sample standard deviation of the rates (0 for a single team).
    pub sd_rate: f64,
    pub n_teams: usize,
    /// Whether the population meets the configured minimum size.
    pub sufficient: bool,
}

/// Mean and sample sd of a category's per-FTE rate over one scope.
pub fn institution_reference(
    dataset: &Dataset,
    category: &CategoryId,
    scope: &Scope,
    min_teams: usize,
) -> Result<ReferenceValue, StatsError> {
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

    let rates: Vec<f64> = teams
        .iter()
        .map(|t| dataset.count(t, category) / dataset.team(t).expect("team exists").fte_leading)
        .collect();
    let n = rates.len();
    let mean = rates.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };

    Ok(ReferenceValue {
        category: category.clone(),
        scope: scope.clone(),
        mean_rate: mean,
        sd_rate: sd,
        n_teams: n,
        sufficient: n >= min_teams,
    })
}

/// One reference row per (selected category, discipline), plus one pooled row
/// per generally valid category. No rows for unselected categories.
pub fn reference_table(
    dataset: &Dataset,
    per_discipline: &[IndicatorSet],
    generally_valid: &[(CategoryId, crate::dataset::Aspect)],
    min_teams: usize,
) -> Result<Vec<ReferenceValue>, StatsError> {
    let mut rows = Vec::new();

    let mut discipline_pairs: BTreeSet<(DisciplineId, CategoryId)> = BTreeSet::new();
    for set in per_discipline {
        let Scope::Discipline(discipline) = &set.scope else {
            continue;
        };
        for sel in &set.selected {
            discipline_pairs.insert((discipline.clone(), sel.category.clone()));
        }
    }
    for (discipline, category) in &discipline_pairs {
        rows.push(institution_reference(
            dataset,
            category,
            &Scope::Discipline(discipline.clone()),
            min_teams,
        )?);
    }

    let pooled_categories: BTreeSet<&CategoryId> = generally_valid.iter().map(|(c, _)| c).collect();
    for category in pooled_categories {
        rows.push(institution_reference(dataset, category, &Scope::Pooled, min_teams)?);
    }

    rows.sort_by(|a, b| {
        (a.category.as_str(), scope_sort_key(&a.scope)).cmp(&(b.category.as_str(), scope_sort_key(&b.scope)))
    });
    Ok(rows)
}

pub(crate) fn scope_sort_key(scope: &Scope) -> (u8, &str) {
    match scope {
        Scope::Discipline(d) => (0, d.as_str()),
        Scope::Pooled => (1, crate::dataset::RESERVED_POOLED_ID),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Aspect, Category, CategoryKind, OutputRecord, PeerRating, Team, TeamId};
    use crate::select::{IndicatorSet, SelectedIndicator};
    use crate::stats::CorrelationResult;

    fn dataset_with_counts(counts: &[f64]) -> Dataset {
        let teams: Vec<Team> = (0..counts.len())
            .map(|i| Team {
                id: TeamId::new(format!("T{i:02}")),
                discipline: "D".into(),
                fte_leading: 1.0,
            })
            .collect();
        let outputs: Vec<OutputRecord> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| OutputRecord {
                team: TeamId::new(format!("T{i:02}")),
                category: "CAT".into(),
                count: c,
            })
            .collect();
        let ratings = teams
            .iter()
            .flat_map(|t| Aspect::ALL.iter().map(|&a| PeerRating::single(t.id.clone(), a, 3.0)).collect::<Vec<_>>())
            .collect();
        Dataset::assemble(
            teams,
            vec![Category { id: "CAT".into(), kind: CategoryKind::Publication, label: "cat".into() }],
            outputs,
            ratings,
        )
        .unwrap()
    }

    #[test]
    fn constant_rates_have_zero_sd() {
        let ds = dataset_with_counts(&[2.0, 2.0, 2.0]);
        let r = institution_reference(&ds, &"CAT".into(), &Scope::Pooled, DEFAULT_MIN_TEAMS).unwrap();
        assert_eq!(r.mean_rate, 2.0);
        assert_eq!(r.sd_rate, 0.0);
        assert!(!r.sufficient);
    }

    #[test]
    fn eight_teams_hand_computed() {
        // rates 1..8: mean 4.5, sample sd sqrt(6) = 2.4495
        let ds = dataset_with_counts(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let r = institution_reference(&ds, &"CAT".into(), &Scope::Pooled, DEFAULT_MIN_TEAMS).unwrap();
        assert_eq!(r.mean_rate, 4.5);
        assert!((r.sd_rate - 6.0_f64.sqrt()).abs() < 1e-12);
        assert!(r.sufficient);
        assert_eq!(r.n_teams, 8);
    }

    #[test]
    fn small_scope_flagged_insufficient() {
        let ds = dataset_with_counts(&[1.0, 3.0, 2.0]);
        let r = institution_reference(&ds, &"CAT".into(), &Scope::Discipline("D".into()), 8).unwrap();
        assert!(!r.sufficient);
        assert_eq!(r.n_teams, 3);
    }

    #[test]
    fn mean_recomputable_by_direct_oracle() {
        let ds = dataset_with_counts(&[0.0, 5.0, 1.5, 7.25]);
        let r = institution_reference(&ds, &"CAT".into(), &Scope::Pooled, 8).unwrap();
        // one-line oracle: sum of count/fte over teams, divided by team count
        let oracle: f64 = ds
            .team_ids()
            .iter()
            .map(|t| ds.count(t, &"CAT".into()) / ds.team(t).unwrap().fte_leading)
            .sum::<f64>()
            / ds.n_teams() as f64;
        assert!((r.mean_rate - oracle).abs() < 1e-15);
    }

    fn selected_set(scope: Scope, categories: &[&str]) -> IndicatorSet {
        let selected = categories
            .iter()
            .map(|c| SelectedIndicator {
                category: (*c).into(),
                aspect: Aspect::Overall,
                prevalence: 1.0,
                result: CorrelationResult {
                    category: (*c).into(),
                    aspect: Aspect::Overall,
                    scope: scope.clone(),
                    n: 10,
                    r: Some(0.8),
                    t: Some(3.0),
                    p_one_sided: Some(0.001),
                    degenerate: false,
                    perfect: false,
                },
            })
            .collect();
        IndicatorSet { scope, selected, excluded: Vec::new() }
    }

    #[test]
    fn table_has_one_row_per_selected_pairing() {
        let ds = dataset_with_counts(&[1.0, 2.0, 3.0, 4.0]);
        let sets = vec![selected_set(Scope::Discipline("D".into()), &["CAT"])];
        let gv = vec![(CategoryId::from("CAT"), Aspect::Overall)];
        let rows = reference_table(&ds, &sets, &gv, 8).unwrap();
        assert_eq!(rows.len(), 2); // one discipline row + one pooled row
        assert_eq!(rows[0].scope, Scope::Discipline("D".into()));
        assert_eq!(rows[1].scope, Scope::Pooled);
    }

    #[test]
    fn no_selection_means_empty_table() {
        let ds = dataset_with_counts(&[1.0, 2.0, 3.0]);
        let sets = vec![IndicatorSet {
            scope: Scope::Discipline("D".into()),
            selected: Vec::new(),
            excluded: Vec::new(),
        }];
        let rows = reference_table(&ds, &sets, &[], 8).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn category_selected_for_two_aspects_yields_one_row() {
        let ds = dataset_with_counts(&[1.0, 2.0, 3.0, 4.0]);
        let mut set = selected_set(Scope::Discipline("D".into()), &["CAT"]);
        let mut second = set.selected[0].clone();
        second.aspect = Aspect::TeamQuality;
        set.selected.push(second);
        let rows = reference_table(&ds, &[set], &[], 8).unwrap();
        assert_eq!(rows.len(), 1);
    }
}
