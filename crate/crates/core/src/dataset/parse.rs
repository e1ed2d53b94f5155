//! CSV parsers for the four input tables.
//!
//! Parsers validate the header, then scan every row, collecting all problems
//! instead of stopping at the first. Issues carry file, line, and column.

use std::collections::BTreeSet;
use std::io;

use super::{
    Aspect, Category, CategoryId, CategoryKind, DatasetError, Issue, OutputRecord, RatingForm,
    Team, TeamId,
};

const TEAMS_HEADER: [&str; 3] = ["team_id", "discipline_id", "fte_leading"];
const OUTPUTS_HEADER: [&str; 3] = ["team_id", "category_id", "count"];
const RATINGS_HEADER: [&str; 3] = ["team_id", "aspect_id", "score"];
const CATEGORIES_HEADER: [&str; 3] = ["category_id", "kind", "label"];

struct TableReader {
    file: String,
    rows: Vec<(u64, csv::StringRecord)>,
    issues: Vec<Issue>,
}

impl TableReader {
    /// Read all records up front, validating the header. A zero-byte stream is
    /// an empty table, not an error.
    fn read<R: io::Read>(source: R, file: &str, header: &[&str]) -> Result<TableReader, DatasetError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
        let mut issues = Vec::new();

        let headers = reader
            .headers()
            .map_err(|e| csv_error(file, &e))?
            .clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Ok(TableReader { file: file.to_owned(), rows: Vec::new(), issues });
        }
        let got: Vec<&str> = headers.iter().collect();
        if got != header {
            for col in &got {
                if !header.contains(col) {
                    issues.push(Issue::new(file, 1, Some(col), "unknown column"));
                }
            }
            for col in header {
                if !got.contains(col) {
                    issues.push(Issue::new(file, 1, Some(col), "missing column"));
                }
            }
            if issues.is_empty() {
                issues.push(Issue::new(
                    file,
                    1,
                    None,
                    format!("columns out of order; expected {}", header.join(",")),
                ));
            }
            return Err(DatasetError::Invalid(issues));
        }

        let mut rows = Vec::new();
        for result in reader.records() {
            match result {
                Ok(record) => {
                    let line = record.position().map(|p| p.line()).unwrap_or(0);
                    if record.len() != header.len() {
                        issues.push(Issue::new(
                            file,
                            line,
                            None,
                            format!("expected {} fields, found {}", header.len(), record.len()),
                        ));
                    } else {
                        rows.push((line, record));
                    }
                }
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    issues.push(Issue::new(file, line, None, format!("malformed row: {e}")));
                }
            }
        }

        Ok(TableReader { file: file.to_owned(), rows, issues })
    }

    fn finish<T>(self, values: Vec<T>) -> Result<Vec<T>, DatasetError> {
        if self.issues.is_empty() {
            Ok(values)
        } else {
            Err(DatasetError::Invalid(self.issues))
        }
    }
}

fn csv_error(file: &str, e: &csv::Error) -> DatasetError {
    DatasetError::Invalid(vec![Issue::new(file, 0, None, format!("unreadable csv: {e}"))])
}

fn parse_f64(table: &mut TableReader, line: u64, column: &str, raw: &str) -> Option<f64> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        Ok(v) => {
            let file = table.file.clone();
            table
                .issues
                .push(Issue::new(&file, line, Some(column), format!("non-finite value {v}")));
            None
        }
        Err(_) => {
            let file = table.file.clone();
            table.issues.push(Issue::new(
                &file,
                line,
                Some(column),
                format!("not a number: '{raw}'"),
            ));
            None
        }
    }
}

/// Parse `teams.csv` (`team_id,discipline_id,fte_leading`).
pub fn parse_teams<R: io::Read>(source: R, file: &str) -> Result<Vec<Team>, DatasetError> {
    let mut table = TableReader::read(source, file, &TEAMS_HEADER)?;
    let mut seen = BTreeSet::new();
    let mut teams = Vec::new();

    for (line, record) in std::mem::take(&mut table.rows) {
        let id = record[0].trim().to_owned();
        if id.is_empty() {
            table.issues.push(Issue::new(file, line, Some("team_id"), "empty team_id"));
            continue;
        }
        if !seen.insert(id.clone()) {
            table
                .issues
                .push(Issue::new(file, line, Some("team_id"), format!("duplicate team '{id}'")));
            continue;
        }
        let Some(fte) = parse_f64(&mut table, line, "fte_leading", &record[2]) else {
            continue;
        };
        if fte <= 0.0 {
            table.issues.push(Issue::new(
                file,
                line,
                Some("fte_leading"),
                format!("fte_leading must be positive, got {fte}"),
            ));
            continue;
        }
        teams.push(Team {
            id: TeamId::new(id),
            discipline: record[1].trim().into(),
            fte_leading: fte,
        });
    }

    table.finish(teams)
}

/// Parse `outputs.csv` (`team_id,category_id,count`). Absent pairs mean zero.
pub fn parse_outputs<R: io::Read>(source: R, file: &str) -> Result<Vec<OutputRecord>, DatasetError> {
    let mut table = TableReader::read(source, file, &OUTPUTS_HEADER)?;
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();

    for (line, record) in std::mem::take(&mut table.rows) {
        let team = record[0].trim().to_owned();
        let category = record[1].trim().to_owned();
        if !seen.insert((team.clone(), category.clone())) {
            table.issues.push(Issue::new(
                file,
                line,
                None,
                format!("duplicate output pair ({team}, {category})"),
            ));
            continue;
        }
        let Some(count) = parse_f64(&mut table, line, "count", &record[2]) else {
            continue;
        };
        if count < 0.0 {
            table.issues.push(Issue::new(
                file,
                line,
                Some("count"),
                format!("count must be nonnegative, got {count}"),
            ));
            continue;
        }
        records.push(OutputRecord {
            team: TeamId::new(team),
            category: CategoryId::new(category),
            count,
        });
    }

    table.finish(records)
}

/// Parse `ratings.csv` (`team_id,aspect_id,score`), one row per returned
/// evaluation form. Rows are kept raw; aggregation happens separately.
pub fn parse_ratings<R: io::Read>(source: R, file: &str) -> Result<Vec<RatingForm>, DatasetError> {
    let mut table = TableReader::read(source, file, &RATINGS_HEADER)?;
    let mut rows = Vec::new();

    for (line, record) in std::mem::take(&mut table.rows) {
        let aspect_raw = record[1].trim();
        let Some(aspect) = Aspect::parse(aspect_raw) else {
            table.issues.push(Issue::new(
                file,
                line,
                Some("aspect_id"),
                format!("unknown aspect '{aspect_raw}'"),
            ));
            continue;
        };
        let Some(score) = parse_f64(&mut table, line, "score", &record[2]) else {
            continue;
        };
        rows.push(RatingForm {
            team: record[0].trim().into(),
            aspect,
            score,
        });
    }

    table.finish(rows)
}

/// Parse `categories.csv` (`category_id,kind,label`).
pub fn parse_categories<R: io::Read>(source: R, file: &str) -> Result<Vec<Category>, DatasetError> {
    let mut table = TableReader::read(source, file, &CATEGORIES_HEADER)?;
    let mut seen = BTreeSet::new();
    let mut categories = Vec::new();

    for (line, record) in std::mem::take(&mut table.rows) {
        let id = record[0].trim().to_owned();
        if !seen.insert(id.clone()) {
            table.issues.push(Issue::new(
                file,
                line,
                Some("category_id"),
                format!("duplicate category '{id}'"),
            ));
            continue;
        }
        let kind_raw = record[1].trim();
        let Some(kind) = CategoryKind::parse(kind_raw) else {
            table.issues.push(Issue::new(
                file,
                line,
                Some("kind"),
                format!("unknown kind '{kind_raw}' (expected publication, funding or index_derived)"),
            ));
            continue;
        };
        categories.push(Category {
            id: CategoryId::new(id),
            kind,
            label: record[2].trim().to_owned(),
        });
    }

    table.finish(categories)
}
