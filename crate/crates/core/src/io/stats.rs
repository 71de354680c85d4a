//! Untrimming statistics in the shape of a per-model table.

use std::fmt::Write as _;

use crate::trim::Space;
use crate::untrim::UntrimResult;

#[derive(Clone, Debug, PartialEq)]
pub struct StatsRow {
    pub model: String,
    pub trimmed_trivariates: usize,
    pub trimming_surfaces: usize,
    pub tiles: usize,
    pub subdivisions: usize,
    pub max_depth: usize,
    pub seconds: f64,
    pub space: Space,
}

impl StatsRow {
    pub fn from_results(model: &str, results: &[&UntrimResult]) -> Self {
        StatsRow {
            model: model.into(),
            trimmed_trivariates: results.len(),
            trimming_surfaces: results.iter().map(|r| r.source.shell.surfaces.len()).sum(),
            tiles: results.iter().map(|r| r.tiles.len()).sum(),
            subdivisions: results.iter().map(|r| r.stats.subdivisions).sum(),
            max_depth: results.iter().map(|r| r.stats.max_depth).max().unwrap_or(0),
            seconds: results.iter().map(|r| r.stats.elapsed.as_secs_f64()).sum(),
            space: results.first().map_or(Space::Parametric, |r| r.source.space),
        }
    }

    fn cells(&self) -> [String; 8] {
        [
            self.model.clone(),
            self.trimmed_trivariates.to_string(),
            self.trimming_surfaces.to_string(),
            self.tiles.to_string(),
            self.subdivisions.to_string(),
            self.max_depth.to_string(),
            format!("{:.3}", self.seconds),
            match self.space {
                Space::Euclidean => "E".into(),
                Space::Parametric => "P".into(),
            },
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatsReport {
    pub rows: Vec<StatsRow>,
}

impl StatsReport {
    pub const COLUMNS: [&'static str; 8] = [
        "model",
        "trimmed trivariates",
        "trimming surfaces",
        "tensor product trivariates",
        "total subdivisions",
        "max depth",
        "time (s)",
        "space (E/P)",
    ];

    /// Aligned plain-text table with a header line.
    pub fn render(&self) -> String {
        let rows: Vec<[String; 8]> = self.rows.iter().map(StatsRow::cells).collect();
        let width: Vec<usize> = (0..8)
            .map(|c| rows.iter().map(|r| r[c].len()).chain([Self::COLUMNS[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |cells: Vec<&str>| -> String {
            cells
                .iter()
                .enumerate()
                .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = width[c]) } else { format!("{s:>w$}", w = width[c]) })
                .collect::<Vec<_>>()
                .join(" | ")
        };
        let _ = writeln!(out, "{}", line(Self::COLUMNS.to_vec()));
        let _ = writeln!(out, "{}", width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
        for r in &rows {
            let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
        }
        out
    }

    /// Comma separated values with the same columns.
    pub fn to_csv(&self) -> String {
        let mut out = Self::COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.cells().join(","));
            out.push('\n');
        }
        out
    }
}
