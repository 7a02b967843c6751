//! Report rendering: CSV tables for comparison rows and unit exports, and
//! self-contained SVG bar charts of relative-impact results with
//! significance stars.

use std::path::Path;

use crate::analysis::{ComparisonResult, GroupSummary};
use crate::metrics::{MentorGainRecord, ProtegeUnit};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Significance stars at the usual thresholds.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const COMPARISON_HEADER: [&str; 14] = [
    "group",
    "label",
    "n_treated",
    "n_control",
    "n_matched_treated",
    "n_matched_control",
    "l1",
    "imp_control",
    "imp_treatment",
    "delta_pct",
    "p_t",
    "p_ks",
    "stars",
    "diagnostic",
];

pub fn write_comparisons_csv(path: &Path, rows: &[ComparisonResult]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(COMPARISON_HEADER)?;
    for row in rows {
        writer.write_record([
            row.group.clone().unwrap_or_default(),
            row.label.clone(),
            row.n_treated.to_string(),
            row.n_control.to_string(),
            row.n_matched_treated.to_string(),
            row.n_matched_control.to_string(),
            opt(row.l1),
            opt(row.imp_control),
            opt(row.imp_treatment),
            opt(row.delta_pct),
            opt(row.p_t),
            opt(row.p_ks),
            row.p_t.map(significance_stars).unwrap_or("").to_string(),
            row.diagnostic.clone().unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_group_summaries_csv(path: &Path, rows: &[GroupSummary]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["group", "n_units", "mean_delta_pct"])?;
    for row in rows {
        writer.write_record([
            row.group.clone(),
            row.n_units.to_string(),
            opt(row.mean_delta_pct),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Flat per-protege table for external inspection.
pub fn write_units_csv(path: &Path, units: &[ProtegeUnit]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "protege_id",
        "mentors",
        "big_shot",
        "hub",
        "outcome",
        "num_mentors",
        "first_pub_year",
        "discipline",
        "gender",
        "rank_bin",
        "years_post_mentorship",
        "avg_mentor_age",
        "female_mentor_count",
    ])?;
    for unit in units {
        writer.write_record([
            unit.protege_id.clone(),
            unit.mentors.join(";"),
            unit.big_shot.to_string(),
            unit.hub.to_string(),
            unit.outcome.to_string(),
            unit.num_mentors.to_string(),
            unit.first_pub_year.to_string(),
            unit.discipline.clone(),
            unit.gender.as_str().to_string(),
            unit.rank_bin.clone(),
            unit.years_post_mentorship.to_string(),
            unit.avg_mentor_age.to_string(),
            unit.female_mentor_count.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_gains_csv(path: &Path, gains: &[MentorGainRecord]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "mentor_id",
        "protege_id",
        "mentor_gender",
        "protege_gender",
        "gain",
        "discipline",
        "rank_bin",
        "num_mentors",
        "first_pub_year",
    ])?;
    for gain in gains {
        writer.write_record([
            gain.mentor_id.clone(),
            gain.protege_id.clone(),
            gain.mentor_gender.as_str().to_string(),
            gain.protege_gender.as_str().to_string(),
            gain.gain.to_string(),
            gain.discipline.clone(),
            gain.rank_bin.clone(),
            gain.num_mentors.to_string(),
            gain.first_pub_year.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

const BAR_COLORS: [&str; 5] = ["#5e4fa2", "#3288bd", "#66c2a5", "#e6a23c", "#d53e4f"];

/// Grouped bar chart of delta values with significance stars. One cluster
/// per group (clusters keep input order), one bar per row within the
/// cluster. Entirely self-contained SVG.
pub fn render_delta_chart(title: &str, rows: &[ComparisonResult]) -> String {
    let drawn: Vec<&ComparisonResult> = rows.iter().filter(|r| r.delta_pct.is_some()).collect();
    let mut groups: Vec<String> = Vec::new();
    for row in &drawn {
        let g = row.group.clone().unwrap_or_default();
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let max_delta = drawn
        .iter()
        .filter_map(|r| r.delta_pct)
        .fold(1.0_f64, |a, b| a.max(b.abs()));
    let y_top = (max_delta * 1.25).ceil();

    let bar_width = 26.0;
    let bar_gap = 6.0;
    let cluster_gap = 34.0;
    let margin_left = 64.0;
    let margin_top = 48.0;
    let plot_height = 260.0;
    let label_band = 56.0;

    let mut cluster_width = Vec::new();
    for g in &groups {
        let n = drawn
            .iter()
            .filter(|r| r.group.clone().unwrap_or_default() == *g)
            .count();
        cluster_width.push(n as f64 * (bar_width + bar_gap));
    }
    let width = margin_left + cluster_width.iter().sum::<f64>()
        + cluster_gap * groups.len() as f64
        + 40.0;
    let height = margin_top + plot_height + label_band;

    // y=0 sits mid-plot when negatives exist.
    let has_negative = drawn.iter().filter_map(|r| r.delta_pct).any(|d| d < 0.0);
    let (y_min, y_max) = if has_negative { (-y_top, y_top) } else { (0.0, y_top) };
    let y_of = |v: f64| margin_top + plot_height * (1.0 - (v - y_min) / (y_max - y_min));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" font-weight=\"bold\">{}</text>\n",
        margin_left,
        xml_escape(title)
    ));

    // axis and gridlines
    let zero_y = y_of(0.0);
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        margin_left - 8.0,
        zero_y,
        width - 20.0,
        zero_y
    ));
    for tick in [y_min, y_min / 2.0, 0.0, y_max / 2.0, y_max] {
        let y = y_of(tick);
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" fill=\"#555\">{:.0}%</text>\n",
            margin_left - 12.0,
            y + 4.0,
            tick
        ));
    }

    let mut x = margin_left;
    for (gi, g) in groups.iter().enumerate() {
        let members: Vec<&&ComparisonResult> = drawn
            .iter()
            .filter(|r| r.group.clone().unwrap_or_default() == *g)
            .collect();
        let cluster_start = x;
        for (bi, row) in members.iter().enumerate() {
            let delta = row.delta_pct.expect("filtered to Some");
            let color = BAR_COLORS[bi % BAR_COLORS.len()];
            let y0 = y_of(delta.max(0.0));
            let bar_height = (y_of(0.0) - y_of(delta.abs())).abs();
            svg.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y0:.1}\" width=\"{bar_width:.1}\" height=\"{bar_height:.1}\" fill=\"{color}\"><title>{}</title></rect>\n",
                xml_escape(&format!("{}: {:.1}%", row.label, delta))
            ));
            let stars = row.p_t.map(significance_stars).unwrap_or("");
            if !stars.is_empty() {
                let star_y = if delta >= 0.0 { y0 - 4.0 } else { y_of(delta) + 14.0 };
                svg.push_str(&format!(
                    "<text x=\"{:.1}\" y=\"{star_y:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{stars}</text>\n",
                    x + bar_width / 2.0
                ));
            }
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\" fill=\"#555\" transform=\"rotate(40 {:.1} {:.1})\">{}</text>\n",
                x + bar_width / 2.0,
                margin_top + plot_height + 14.0,
                x + bar_width / 2.0,
                margin_top + plot_height + 14.0,
                xml_escape(&row.label)
            ));
            x += bar_width + bar_gap;
        }
        let cluster_mid = (cluster_start + x - bar_gap) / 2.0;
        svg.push_str(&format!(
            "<text x=\"{cluster_mid:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" font-weight=\"bold\">{}</text>\n",
            margin_top + plot_height + label_band - 8.0,
            xml_escape(if g.is_empty() { "all" } else { g })
        ));
        let _ = gi;
        x += cluster_gap;
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
