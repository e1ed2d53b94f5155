//! CSV writers for the four input schemas.
//!
//! Floats are written in Rust's shortest round-trip form, so a write/parse
//! cycle reproduces the exact same values. Ratings are written one row per
//! form, in the canonical form order, so re-aggregation is bit-identical.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use super::Dataset;

pub fn write_teams_csv<W: Write>(dataset: &Dataset, mut out: W) -> io::Result<()> {
    writeln!(out, "team_id,discipline_id,fte_leading")?;
    for team in dataset.teams() {
        writeln!(out, "{},{},{}", team.id, team.discipline, team.fte_leading)?;
    }
    Ok(())
}

pub fn write_categories_csv<W: Write>(dataset: &Dataset, mut out: W) -> io::Result<()> {
    writeln!(out, "category_id,kind,label")?;
    for category in dataset.categories() {
        writeln!(out, "{},{},{}", category.id, category.kind.id(), escape(&category.label))?;
    }
    Ok(())
}

pub fn write_outputs_csv<W: Write>(dataset: &Dataset, mut out: W) -> io::Result<()> {
    writeln!(out, "team_id,category_id,count")?;
    for ((team, category), count) in dataset.outputs() {
        writeln!(out, "{team},{category},{count}")?;
    }
    Ok(())
}

pub fn write_ratings_csv<W: Write>(dataset: &Dataset, mut out: W) -> io::Result<()> {
    writeln!(out, "team_id,aspect_id,score")?;
    for rating in dataset.ratings() {
        for score in rating.form_scores() {
            writeln!(out, "{},{},{}", rating.team, rating.aspect, score)?;
        }
    }
    Ok(())
}

fn escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

/// Write `teams.csv`, `categories.csv`, `outputs.csv` and `ratings.csv` into
/// `dir`, creating it if needed.
pub fn write_dataset_csvs(dataset: &Dataset, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_teams_csv(dataset, File::create(dir.join("teams.csv"))?)?;
    write_categories_csv(dataset, File::create(dir.join("categories.csv"))?)?;
    write_outputs_csv(dataset, File::create(dir.join("outputs.csv"))?)?;
    write_ratings_csv(dataset, File::create(dir.join("ratings.csv"))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{
        aggregate_ratings, parse_categories, parse_outputs, parse_ratings, parse_teams, Dataset,
    };
    use super::*;

    fn reparse(dataset: &Dataset) -> Dataset {
        let mut teams = Vec::new();
        let mut categories = Vec::new();
        let mut outputs = Vec::new();
        let mut ratings = Vec::new();
        write_teams_csv(dataset, &mut teams).unwrap();
        write_categories_csv(dataset, &mut categories).unwrap();
        write_outputs_csv(dataset, &mut outputs).unwrap();
        write_ratings_csv(dataset, &mut ratings).unwrap();

        Dataset::assemble(
            parse_teams(&teams[..], "teams.csv").unwrap(),
            parse_categories(&categories[..], "categories.csv").unwrap(),
            parse_outputs(&outputs[..], "outputs.csv").unwrap(),
            aggregate_ratings(parse_ratings(&ratings[..], "ratings.csv").unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_reproduces_dataset() {
        let teams_csv = "team_id,discipline_id,fte_leading\nT01,ECON,3.5\nT02,ECON,1.25\nT03,ECON,2\n";
        let cats_csv = "category_id,kind,label\nPUB,publication,\"Articles, refereed\"\nFUN,funding,Grants\n";
        let outs_csv = "team_id,category_id,count\nT01,PUB,12\nT02,PUB,0.5\nT03,FUN,3.75\n";
        let ratings_csv = "team_id,aspect_id,score\n".to_owned()
            + &["T01", "T02", "T03"]
                .iter()
                .flat_map(|t| {
                    crate::dataset::Aspect::ALL.iter().flat_map(move |a| {
                        [
                            format!("{t},{a},3.1"),
                            format!("{t},{a},4.3"),
                            format!("{t},{a},0.30000000000000004"),
                        ]
                    })
                })
                .collect::<Vec<_>>()
                .join("\n");

        let dataset = Dataset::assemble(
            parse_teams(teams_csv.as_bytes(), "teams.csv").unwrap(),
            parse_categories(cats_csv.as_bytes(), "categories.csv").unwrap(),
            parse_outputs(outs_csv.as_bytes(), "outputs.csv").unwrap(),
            aggregate_ratings(parse_ratings(ratings_csv.as_bytes(), "ratings.csv").unwrap()),
        )
        .unwrap();

        assert_eq!(reparse(&dataset), dataset);
    }
}
