//! Report rendering: canonical JSON, a human-readable markdown summary, and
//! the plot-ready CSV bundle.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::select::IndicatorSet;

use super::RunReport;

/// Canonical machine-readable form. Field order is fixed by the types, map
/// keys are sorted, floats are pre-rounded: same report, same bytes.
pub fn render_json(report: &RunReport) -> String {
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    json
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => v.to_string(),
        None => "-".to_owned(),
    }
}

/// Human-readable summary of the run.
pub fn render_markdown(report: &RunReport) -> String {
    let mut md = String::new();
    let meta = &report.meta;

    let _ = writeln!(md, "# Research indicator validation report\n");
    let _ = writeln!(md, "Generated by {} {}.\n", meta.tool, meta.version);

    let _ = writeln!(md, "## Run configuration\n");
    let s = &meta.settings;
    let _ = writeln!(md, "- mode: `{}`", s.mode);
    let _ = writeln!(md, "- alpha: {}", s.selection.alpha);
    let _ = writeln!(md, "- prevalence threshold: {}", s.selection.prevalence_threshold);
    let _ = writeln!(
        md,
        "- general validity: selected pooled and in {} disciplines, no significant negative anywhere",
        match s.selection.general_validity_min_fraction {
            None => "all but one".to_owned(),
            Some(f) => format!("at least a fraction {f} of"),
        }
    );
    let _ = writeln!(md, "- bonferroni correction: {}", s.selection.bonferroni);
    let _ = writeln!(md, "- reference minimum population: {}", s.reference_min_teams);
    if let Some(config) = &s.config_file {
        let _ = writeln!(md, "- config file: `{config}`");
    }
    let _ = writeln!(md);

    let _ = writeln!(md, "## Dataset\n");
    let d = &meta.dataset;
    let _ = writeln!(md, "| teams | disciplines | aspects | publication cat. | funding cat. | index cat. | rating forms |");
    let _ = writeln!(md, "|------:|------------:|--------:|-----------------:|-------------:|-----------:|-------------:|");
    let _ = writeln!(
        md,
        "| {} | {} | {} | {} | {} | {} | {} |",
        d.teams, d.disciplines, d.aspects, d.publication_categories, d.funding_categories,
        d.index_derived_categories, d.rating_forms
    );
    let _ = writeln!(md);

    let _ = writeln!(md, "## Generally valid indicators\n");
    if report.generally_valid.is_empty() {
        let _ = writeln!(md, "No indicators selected: no (category, aspect) pair is significantly positively correlated pooled and in enough disciplines.\n");
    } else {
        let _ = writeln!(md, "| category | aspect |");
        let _ = writeln!(md, "|----------|--------|");
        for pair in &report.generally_valid {
            let _ = writeln!(md, "| {} | {} |", pair.category, pair.aspect);
        }
        let _ = writeln!(md);
    }

    let _ = writeln!(md, "## Selected indicators per scope\n");
    let any_selected = report.indicator_sets.iter().any(|set| !set.selected.is_empty());
    if !any_selected {
        let _ = writeln!(md, "No indicators selected in any scope.\n");
    }
    for set in &report.indicator_sets {
        if set.selected.is_empty() {
            continue;
        }
        let _ = writeln!(md, "### Scope `{}`\n", set.scope);
        let _ = writeln!(md, "| category | aspect | n | r | p (one-sided) | prevalence |");
        let _ = writeln!(md, "|----------|--------|--:|--:|--------------:|-----------:|");
        for sel in &set.selected {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                sel.category,
                sel.aspect,
                sel.result.n,
                fmt_opt(sel.result.r),
                fmt_opt(sel.result.p_one_sided),
                sel.prevalence
            );
        }
        let _ = writeln!(md);
    }

    let _ = writeln!(md, "## Reference values\n");
    if report.references.is_empty() {
        let _ = writeln!(md, "No reference values: nothing was selected.\n");
    } else {
        let _ = writeln!(md, "| category | scope | mean rate | sd | teams | sufficient |");
        let _ = writeln!(md, "|----------|-------|----------:|---:|------:|-----------:|");
        for r in &report.references {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                r.category, r.scope, r.mean_rate, r.sd_rate, r.n_teams, r.sufficient
            );
        }
        let _ = writeln!(md);
    }

    if let Some(gains) = &report.normalization_comparison {
        let _ = writeln!(md, "## Normalization comparison (pooled r)\n");
        let _ = writeln!(md, "| category | aspect | raw | per-discipline | delta |");
        let _ = writeln!(md, "|----------|--------|----:|---------------:|------:|");
        for g in gains {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} |",
                g.category,
                g.aspect,
                fmt_opt(g.r_raw),
                fmt_opt(g.r_normalized),
                fmt_opt(g.delta)
            );
        }
        let _ = writeln!(md);
    }

    let _ = writeln!(md, "## Warnings\n");
    if report.warnings.is_empty() {
        let _ = writeln!(md, "None.");
    } else {
        for w in &report.warnings {
            let _ = writeln!(md, "- `{}`: {}", w.code, w.message);
        }
    }

    md
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

fn write_correlations_csv<W: Write>(report: &RunReport, mut out: W) -> io::Result<()> {
    writeln!(out, "category_id,aspect_id,scope,n,r,t,p_one_sided,degenerate,perfect")?;
    for r in &report.correlations {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.category,
            r.aspect,
            r.scope,
            r.n,
            csv_opt(r.r),
            csv_opt(r.t),
            csv_opt(r.p_one_sided),
            r.degenerate,
            r.perfect
        )?;
    }
    Ok(())
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_indicators_csv<W: Write>(report: &RunReport, mut out: W) -> io::Result<()> {
    writeln!(out, "scope,category_id,aspect_id,status,reason,prevalence,n,r,p_one_sided")?;
    for set in &report.indicator_sets {
        write_indicator_rows(set, &mut out)?;
    }
    Ok(())
}

fn write_indicator_rows<W: Write>(set: &IndicatorSet, out: &mut W) -> io::Result<()> {
    for sel in &set.selected {
        writeln!(
            out,
            "{},{},{},selected,,{},{},{},{}",
            set.scope,
            sel.category,
            sel.aspect,
            sel.prevalence,
            sel.result.n,
            csv_opt(sel.result.r),
            csv_opt(sel.result.p_one_sided)
        )?;
    }
    for exc in &set.excluded {
        writeln!(
            out,
            "{},{},{},excluded,{},{},{},{},{}",
            set.scope,
            exc.category,
            exc.aspect,
            exc.reason.id(),
            exc.prevalence,
            exc.result.n,
            csv_opt(exc.result.r),
            csv_opt(exc.result.p_one_sided)
        )?;
    }
    Ok(())
}

fn write_references_csv<W: Write>(report: &RunReport, mut out: W) -> io::Result<()> {
    writeln!(out, "category_id,scope,mean_rate,sd_rate,n_teams,sufficient")?;
    for r in &report.references {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.category, r.scope, r.mean_rate, r.sd_rate, r.n_teams, r.sufficient
        )?;
    }
    Ok(())
}

/// Write `correlations.csv`, `indicators.csv`, `references.csv` and one
/// `scatter_<category>_<aspect>.csv` per scatter series into `dir`. Returns
/// the paths written.
pub fn write_csv_bundle(report: &RunReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join("correlations.csv");
    write_correlations_csv(report, File::create(&path)?)?;
    written.push(path);

    let path = dir.join("indicators.csv");
    write_indicators_csv(report, File::create(&path)?)?;
    written.push(path);

    let path = dir.join("references.csv");
    write_references_csv(report, File::create(&path)?)?;
    written.push(path);

    for series in &report.scatter {
        let path = dir.join(format!(
            "scatter_{}_{}.csv",
            sanitize(series.category.as_str()),
            series.aspect
        ));
        let mut out = File::create(&path)?;
        writeln!(out, "team_id,discipline_id,x_norm,y_norm,x_raw,y_raw")?;
        for p in &series.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.team, p.discipline, p.x_norm, p.y_norm, p.x_raw, p.y_raw
            )?;
        }
        written.push(path);
    }

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::{build_report, RunSettings};
    use super::*;
    use crate::dataset::CategoryKind;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn correlations_csv_row_count_matches_grid() {
        // 24 publication-type categories x 8 aspects x (6 disciplines + pooled) = 1344
        let mut config = SynthConfig::paper_scale(9);
        config.categories.retain(|c| c.kind != CategoryKind::Funding);
        assert_eq!(config.categories.len(), 24);
        let dataset = generate(&config).unwrap();
        let report = build_report(&dataset, &RunSettings::default()).unwrap();

        let mut buf = Vec::new();
        write_correlations_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data_rows = text.lines().count() - 1;
        assert_eq!(data_rows, 1344);
    }

    #[test]
    fn markdown_mentions_empty_selection() {
        // alpha so strict nothing survives
        let dataset = generate(&SynthConfig::paper_scale(4)).unwrap();
        let mut settings = RunSettings::default();
        settings.selection.alpha = 1e-12;
        let report = build_report(&dataset, &settings).unwrap();
        assert!(report.indicator_sets.iter().all(|s| s.selected.is_empty()));
        let md = render_markdown(&report);
        assert!(md.contains("No indicators selected"));
    }

    #[test]
    fn markdown_lists_selected_pairs() {
        let dataset = generate(&SynthConfig::paper_scale(42)).unwrap();
        let report = build_report(&dataset, &RunSettings::default()).unwrap();
        let md = render_markdown(&report);
        assert!(md.contains("PUB_ISI"));
        assert!(md.contains("## Reference values"));
    }

    #[test]
    fn bundle_contains_expected_files() {
        // one strongly planted pair so a generally valid indicator (and its
        // scatter file) exists at this seed
        let mut config = SynthConfig::paper_scale(42);
        config.categories.truncate(3);
        for category in &mut config.categories {
            category.targets.clear();
            category.offsets.clear();
            category.prevalence = 1.0;
        }
        config.categories[0].targets.insert("overall".to_owned(), 0.95);
        let dataset = generate(&config).unwrap();
        let report = build_report(&dataset, &RunSettings::default()).unwrap();
        assert!(!report.generally_valid.is_empty());
        let dir = tempfile::tempdir().unwrap();
        let files = write_csv_bundle(&report, dir.path()).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(names.contains(&"correlations.csv".to_owned()));
        assert!(names.contains(&"indicators.csv".to_owned()));
        assert!(names.contains(&"references.csv".to_owned()));
        assert!(names.iter().any(|n| n.starts_with("scatter_")), "{names:?}");
    }

    #[test]
    fn every_grid_result_appears_once_in_correlations_csv() {
        let mut config = SynthConfig::paper_scale(2);
        config.categories.truncate(5);
        let dataset = generate(&config).unwrap();
        let report = build_report(&dataset, &RunSettings::default()).unwrap();

        let mut buf = Vec::new();
        write_correlations_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), report.correlations.len());
        for r in &report.correlations {
            let prefix = format!("{},{},{},", r.category, r.aspect, r.scope);
            assert_eq!(rows.iter().filter(|row| row.starts_with(&prefix)).count(), 1, "{prefix}");
        }
    }
}
