//! Seeded synthetic dataset generator.
//!
//! Stands in for the confidential evaluation data: produces datasets of the
//! same shape (6 disciplines, 57 teams, 8 aspects, 24+21 categories by
//! default) with controlled latent structure, so the pipeline can be tested
//! against a known ground truth.
//!
//! Construction, per team: one latent quality factor; each aspect observes the
//! latent plus its own noise; each category's output driver loads on the
//! targeted aspect signals with the configured correlation and on fresh noise
//! for the rest. Counts are per-FTE rates scaled by the team's FTE, truncated
//! at zero. Prevalence is realized by exact thinning: per category, exactly
//! round((1 - prevalence) * n_teams) teams are zeroed, picked at random, so
//! each team is zeroed with probability 1 - prevalence while the realized
//! prevalence never drifts across the analysis threshold by chance.
//!
//! Everything is drawn from a single ChaCha8 stream seeded with the configured
//! 64-bit seed, in a fixed iteration order; a config and seed fully determine
//! the dataset, byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    Aspect, Category, CategoryId, CategoryKind, Dataset, OutputRecord, PeerRating, Team, TeamId,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplineSpec {
    pub id: String,
    pub n_teams: usize,
    /// Mean shift applied to every rating score of this discipline's teams.
    #[serde(default)]
    pub rating_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub id: String,
    pub kind: CategoryKind,
    #[serde(default)]
    pub label: String,
    /// Target correlation against each aspect (keyed by aspect id). Absent
    /// aspects are 0. Exact for a single target; approximate when several
    /// aspects are targeted at once (signals overlap through the latent).
    #[serde(default)]
    pub targets: BTreeMap<String, f64>,
    /// Fraction of teams with nonzero output for this category.
    pub prevalence: f64,
    /// Mean shift of the count driver per discipline (keyed by discipline id).
    #[serde(default)]
    pub offsets: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub disciplines: Vec<DisciplineSpec>,
    pub categories: Vec<CategorySpec>,
    /// Uniform range of FTE leading staff per team.
    #[serde(default = "default_fte_range")]
    pub fte_range: (f64, f64),
    /// Per-aspect noise relative to the unit-variance latent quality.
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    /// Uniform range of returned evaluation forms per team.
    #[serde(default = "default_forms_per_team")]
    pub forms_per_team: (usize, usize),
    /// Per-form jitter around the team's aspect score.
    #[serde(default = "default_form_jitter_sd")]
    pub form_jitter_sd: f64,
    #[serde(default = "default_rating_base")]
    pub rating_base: f64,
    #[serde(default = "default_rating_scale")]
    pub rating_scale: f64,
    #[serde(default = "default_count_base")]
    pub count_base: f64,
    #[serde(default = "default_count_scale")]
    pub count_scale: f64,
}

fn default_fte_range() -> (f64, f64) {
    (1.0, 6.0)
}
fn default_noise_sd() -> f64 {
    0.5
}
fn default_forms_per_team() -> (usize, usize) {
    (6, 9)
}
fn default_form_jitter_sd() -> f64 {
    0.15
}
fn default_rating_base() -> f64 {
    3.5
}
fn default_rating_scale() -> f64 {
    0.6
}
fn default_count_base() -> f64 {
    3.0
}
fn default_count_scale() -> f64 {
    1.0
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("generated dataset failed validation: {0}")]
    Assemble(#[from] crate::dataset::DatasetError),
}

impl SynthConfig {
    /// Validate the config. Hard violations are errors; shape deviations from
    /// the usual figures (9 to 11 teams per discipline) are only warnings.
    pub fn validate(&self) -> Result<Vec<String>, SynthError> {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();

        if self.disciplines.is_empty() {
            errors.push("at least one discipline is required".to_owned());
        }
        if self.categories.is_empty() {
            errors.push("at least one category is required".to_owned());
        }

        let mut seen = BTreeSet::new();
        for d in &self.disciplines {
            if !seen.insert(d.id.clone()) {
                errors.push(format!("duplicate discipline '{}'", d.id));
            }
            if d.id == crate::dataset::RESERVED_POOLED_ID {
                errors.push(format!("discipline id '{}' is reserved", d.id));
            }
            if d.n_teams < 3 {
                errors.push(format!(
                    "discipline '{}' has {} teams; at least 3 are required",
                    d.id, d.n_teams
                ));
            } else if !(9..=11).contains(&d.n_teams) {
                warnings.push(format!(
                    "discipline '{}' has {} teams, outside the usual 9..=11; accepted",
                    d.id, d.n_teams
                ));
            }
        }

        let discipline_ids: BTreeSet<&str> = self.disciplines.iter().map(|d| d.id.as_str()).collect();
        let mut seen = BTreeSet::new();
        for c in &self.categories {
            if !seen.insert(c.id.clone()) {
                errors.push(format!("duplicate category '{}'", c.id));
            }
            if !(c.prevalence > 0.0 && c.prevalence <= 1.0) {
                errors.push(format!(
                    "category '{}': prevalence must be in (0, 1], got {}",
                    c.id, c.prevalence
                ));
            }
            let mut rho_sq = 0.0;
            for (aspect, rho) in &c.targets {
                if Aspect::parse(aspect).is_none() {
                    errors.push(format!("category '{}': unknown aspect '{}'", c.id, aspect));
                }
                if rho.abs() > 1.0 {
                    errors.push(format!(
                        "category '{}': target_r for '{}' must be in [-1, 1], got {}",
                        c.id, aspect, rho
                    ));
                }
                rho_sq += rho * rho;
            }
            if rho_sq > 1.0 + 1e-12 {
                errors.push(format!(
                    "category '{}': squared targets sum to {rho_sq:.3} > 1; not realizable",
                    c.id
                ));
            }
            for d in c.offsets.keys() {
                if !discipline_ids.contains(d.as_str()) {
                    errors.push(format!("category '{}': offset for unknown discipline '{}'", c.id, d));
                }
            }
        }

        if !(self.fte_range.0 > 0.0 && self.fte_range.0 <= self.fte_range.1) {
            errors.push(format!("fte_range must satisfy 0 < min <= max, got {:?}", self.fte_range));
        }
        if self.noise_sd <= 0.0 {
            errors.push(format!("noise_sd must be > 0, got {}", self.noise_sd));
        }
        if self.forms_per_team.0 < 1 || self.forms_per_team.0 > self.forms_per_team.1 {
            errors.push(format!(
                "forms_per_team must satisfy 1 <= min <= max, got {:?}",
                self.forms_per_team
            ));
        }
        if self.form_jitter_sd < 0.0 {
            errors.push(format!("form_jitter_sd must be >= 0, got {}", self.form_jitter_sd));
        }
        if self.rating_scale <= 0.0 || self.count_scale <= 0.0 {
            errors.push("rating_scale and count_scale must be > 0".to_owned());
        }

        if errors.is_empty() {
            Ok(warnings)
        } else {
            Err(SynthError::Invalid(errors))
        }
    }

    pub fn n_teams(&self) -> usize {
        self.disciplines.iter().map(|d| d.n_teams).sum()
    }

    /// The default paper-scale shape: 6 disciplines with 57 teams total (9 to
    /// 11 each), 23 publication categories plus the index-derived ISI
    /// category, 21 funding categories, and a few planted correlations on the
    /// internationally refereed publication categories.
    pub fn paper_scale(seed: u64) -> SynthConfig {
        let disciplines = vec![
            discipline("ECON", 10, 0.3),
            discipline("ENG", 10, -0.2),
            discipline("INF", 9, 0.1),
            discipline("LAW", 9, -0.3),
            discipline("PHIL", 10, 0.0),
            discipline("POLSOC", 9, 0.2),
        ];

        let mut categories = Vec::new();
        let pubs: [(&str, &str); 23] = [
            ("PUB_ART_INT_REF", "Articles in journals with international referee system"),
            ("PUB_ART_NAT_REF", "Articles in journals with national referee system"),
            ("PUB_ART_NO_REF", "Articles in journals without referee system"),
            ("PUB_BOOK_AUTHOR", "Books as author"),
            ("PUB_BOOK_EDITOR", "Books as editor"),
            ("PUB_BOOK_CHAPTER", "Chapters in books"),
            ("PUB_PROC_INT_FULL", "Communications at international conferences integrally published in proceedings"),
            ("PUB_PROC_NAT_FULL", "Communications at national conferences integrally published in proceedings"),
            ("PUB_PROC_ABSTRACT", "Conference abstracts"),
            ("PUB_MONOGRAPH", "Monographs"),
            ("PUB_PHD_THESIS", "Supervised doctoral theses"),
            ("PUB_REVIEW_ART", "Review articles"),
            ("PUB_EDITORIAL", "Editorials and prefaces"),
            ("PUB_BOOK_REVIEW", "Book reviews"),
            ("PUB_REPORT_EXT", "External research reports"),
            ("PUB_REPORT_INT", "Internal research reports"),
            ("PUB_POPULAR_ART", "Popularizing articles"),
            ("PUB_NEWSPAPER", "Newspaper contributions"),
            ("PUB_TRANSLATION", "Translations"),
            ("PUB_PATENT", "Patents"),
            ("PUB_DATABASE", "Published databases and corpora"),
            ("PUB_SOFTWARE", "Published software"),
            ("PUB_OTHER", "Other publications"),
        ];
        let prevalence_cycle = [1.0, 0.85, 0.7, 0.9, 0.55, 0.75, 0.4, 0.95, 0.6, 0.25];
        for (i, (id, label)) in pubs.iter().enumerate() {
            let mut spec = CategorySpec {
                id: (*id).to_owned(),
                kind: CategoryKind::Publication,
                label: (*label).to_owned(),
                targets: BTreeMap::new(),
                prevalence: prevalence_cycle[i % prevalence_cycle.len()],
                offsets: BTreeMap::new(),
            };
            match *id {
                "PUB_ART_INT_REF" => {
                    spec.targets.insert("overall".to_owned(), 0.8);
                    spec.prevalence = 0.95;
                }
                "PUB_PROC_INT_FULL" => {
                    spec.targets.insert("overall".to_owned(), 0.45);
                    spec.prevalence = 0.85;
                    spec.offsets.insert("ENG".to_owned(), 2.0);
                    spec.offsets.insert("INF".to_owned(), 2.5);
                }
                "PUB_BOOK_AUTHOR" => {
                    spec.offsets.insert("PHIL".to_owned(), 2.0);
                    spec.offsets.insert("LAW".to_owned(), 1.5);
                }
                _ => {}
            }
            categories.push(spec);
        }

        let mut isi = CategorySpec {
            id: "PUB_ISI".to_owned(),
            kind: CategoryKind::IndexDerived,
            label: "Publications in journals indexed by SCIE, SSCI or AHCI".to_owned(),
            targets: BTreeMap::new(),
            prevalence: 0.9,
            offsets: BTreeMap::new(),
        };
        isi.targets.insert("team_quality".to_owned(), 0.85);
        categories.push(isi);

        let funds: [(&str, &str); 21] = [
            ("FUND_FWO_PROJECT", "Research foundation projects"),
            ("FUND_FWO_FELLOW", "Research foundation fellowships"),
            ("FUND_IWT_PROJECT", "Innovation agency projects"),
            ("FUND_IWT_FELLOW", "Innovation agency fellowships"),
            ("FUND_EU_FRAMEWORK", "EU framework programme projects"),
            ("FUND_EU_OTHER", "Other EU funding"),
            ("FUND_NAT_SCIENCE", "National science policy projects"),
            ("FUND_NAT_POLICY", "National policy-oriented contracts"),
            ("FUND_REGIONAL", "Regional government funding"),
            ("FUND_BILATERAL", "Bilateral cooperation projects"),
            ("FUND_UNIV_BOF", "University research council projects"),
            ("FUND_UNIV_START", "University starting grants"),
            ("FUND_UNIV_EQUIP", "University equipment grants"),
            ("FUND_INDUSTRY_CONTRACT", "Industry contract research"),
            ("FUND_INDUSTRY_CHAIR", "Industry-sponsored chairs"),
            ("FUND_NONPROFIT", "Non-profit sector funding"),
            ("FUND_GOV_CONTRACT", "Government contract research"),
            ("FUND_INT_ORG", "International organisation funding"),
            ("FUND_SCHOLARSHIP_IN", "Incoming visiting fellowships"),
            ("FUND_SCHOLARSHIP_OUT", "Outgoing research stays"),
            ("FUND_PRIZE", "Scientific prizes"),
        ];
        for (i, (id, label)) in funds.iter().enumerate() {
            let mut spec = CategorySpec {
                id: (*id).to_owned(),
                kind: CategoryKind::Funding,
                label: (*label).to_owned(),
                targets: BTreeMap::new(),
                prevalence: prevalence_cycle[(i + 3) % prevalence_cycle.len()],
                offsets: BTreeMap::new(),
            };
            match *id {
                "FUND_FWO_PROJECT" => {
                    spec.targets.insert("scientific_merit".to_owned(), 0.5);
                    spec.prevalence = 0.8;
                }
                "FUND_INDUSTRY_CONTRACT" => {
                    spec.offsets.insert("ENG".to_owned(), 2.0);
                }
                "FUND_NAT_POLICY" => {
                    spec.offsets.insert("POLSOC".to_owned(), 1.5);
                }
                _ => {}
            }
            categories.push(spec);
        }

        SynthConfig {
            seed,
            disciplines,
            categories,
            fte_range: default_fte_range(),
            noise_sd: default_noise_sd(),
            forms_per_team: default_forms_per_team(),
            form_jitter_sd: default_form_jitter_sd(),
            rating_base: default_rating_base(),
            rating_scale: default_rating_scale(),
            count_base: default_count_base(),
            count_scale: default_count_scale(),
        }
    }
}

fn discipline(id: &str, n_teams: usize, rating_offset: f64) -> DisciplineSpec {
    DisciplineSpec { id: id.to_owned(), n_teams, rating_offset }
}

/// What the generator planted, as a recovery target for tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub seed: u64,
    /// Threshold the expectations below were judged against.
    pub prevalence_threshold: f64,
    pub pairs: Vec<PlantedPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub category: CategoryId,
    pub aspect: Aspect,
    pub target_r: f64,
    pub expectation: TruthExpectation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthExpectation {
    /// Positively planted with prevalence above threshold: the pipeline should
    /// recover it.
    Recoverable,
    /// Positively planted but present in a minority of teams: the prevalence
    /// rule must exclude it no matter how strong the correlation.
    UnrecoverableMinority,
}

/// The (category, aspect) pairs planted as positively correlated, each marked
/// recoverable or not under the given prevalence threshold.
pub fn planted_truth(config: &SynthConfig, prevalence_threshold: f64) -> PlantedTruth {
    let mut pairs = Vec::new();
    for category in &config.categories {
        for (aspect_id, &rho) in &category.targets {
            if rho <= 0.0 {
                continue;
            }
            let Some(aspect) = Aspect::parse(aspect_id) else {
                continue;
            };
            let expectation = if category.prevalence > prevalence_threshold {
                TruthExpectation::Recoverable
            } else {
                TruthExpectation::UnrecoverableMinority
            };
            pairs.push(PlantedPair {
                category: CategoryId::new(category.id.clone()),
                aspect,
                target_r: rho,
                expectation,
            });
        }
    }
    pairs.sort_by(|a, b| (&a.category, a.aspect).cmp(&(&b.category, b.aspect)));
    PlantedTruth { seed: config.seed, prevalence_threshold, pairs }
}

/// Generate a dataset from the config. Deterministic for a fixed seed; the
/// result always satisfies every dataset invariant.
pub fn generate(config: &SynthConfig) -> Result<Dataset, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let signal_norm = (1.0 + config.noise_sd * config.noise_sd).sqrt();

    let mut teams = Vec::new();
    let mut ratings = Vec::new();
    // per team: unit-variance aspect signals, indexed like Aspect::ALL
    let mut signals: Vec<[f64; 8]> = Vec::new();
    let mut ftes = Vec::new();

    for disc in &config.disciplines {
        for i in 0..disc.n_teams {
            let team_id = TeamId::new(format!("{}_T{:02}", disc.id, i + 1));
            let fte: f64 = rng.random_range(config.fte_range.0..=config.fte_range.1);
            let latent: f64 = rng.sample(StandardNormal);

            let mut team_signals = [0.0; 8];
            for slot in team_signals.iter_mut() {
                let noise: f64 = rng.sample(StandardNormal);
                *slot = (latent + config.noise_sd * noise) / signal_norm;
            }

            let n_forms = rng.random_range(config.forms_per_team.0..=config.forms_per_team.1);
            for (a, &aspect) in Aspect::ALL.iter().enumerate() {
                let score = config.rating_base + disc.rating_offset + config.rating_scale * team_signals[a];
                let mut forms = Vec::with_capacity(n_forms);
                for _ in 0..n_forms {
                    let jitter: f64 = rng.sample(StandardNormal);
                    forms.push(score + config.form_jitter_sd * jitter);
                }
                ratings.push(PeerRating::from_forms(team_id.clone(), aspect, forms));
            }

            teams.push(Team { id: team_id, discipline: disc.id.as_str().into(), fte_leading: fte });
            signals.push(team_signals);
            ftes.push(fte);
        }
    }

    let n_total = teams.len();
    let mut categories = Vec::new();
    let mut outputs = Vec::new();

    for spec in &config.categories {
        categories.push(Category {
            id: CategoryId::new(spec.id.clone()),
            kind: spec.kind,
            label: if spec.label.is_empty() { spec.id.clone() } else { spec.label.clone() },
        });

        let targets: Vec<(usize, f64)> = spec
            .targets
            .iter()
            .filter_map(|(aspect_id, &rho)| {
                Aspect::parse(aspect_id)
                    .map(|a| (Aspect::ALL.iter().position(|&x| x == a).unwrap(), rho))
            })
            .collect();
        let rho_sq: f64 = targets.iter().map(|(_, rho)| rho * rho).sum();
        let residual = (1.0 - rho_sq).max(0.0).sqrt();

        let mut counts = Vec::with_capacity(n_total);
        let mut team_index = 0;
        for disc in &config.disciplines {
            let offset = spec.offsets.get(&disc.id).copied().unwrap_or(0.0);
            for _ in 0..disc.n_teams {
                let noise: f64 = rng.sample(StandardNormal);
                let driver: f64 = targets
                    .iter()
                    .map(|&(a, rho)| rho * signals[team_index][a])
                    .sum::<f64>()
                    + residual * noise;
                let rate = (config.count_base + offset + config.count_scale * driver).max(0.0);
                counts.push(rate * ftes[team_index]);
                team_index += 1;
            }
        }

        // exact thinning to the configured prevalence
        let n_zero = ((1.0 - spec.prevalence) * n_total as f64).round() as usize;
        if n_zero > 0 {
            for idx in index::sample(&mut rng, n_total, n_zero) {
                counts[idx] = 0.0;
            }
        }

        for (team, &count) in teams.iter().zip(&counts) {
            if count > 0.0 {
                outputs.push(OutputRecord {
                    team: team.id.clone(),
                    category: CategoryId::new(spec.id.clone()),
                    count,
                });
            }
        }
    }

    Ok(Dataset::assemble(teams, categories, outputs, ratings)?)
}

/// Write the four input CSVs plus `truth.json` into `dir`.
pub fn write_synth_outputs(dataset: &Dataset, truth: &PlantedTruth, dir: &Path) -> io::Result<()> {
    crate::dataset::write_dataset_csvs(dataset, dir)?;
    let json = serde_json::to_string_pretty(truth).expect("truth serializes");
    std::fs::write(dir.join("truth.json"), json + "\n")
}
