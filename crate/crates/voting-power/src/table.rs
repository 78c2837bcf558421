//! Presentation layer: exact results rendered as markdown, CSV, or JSON.
//!
//! All rounding happens here and nowhere else. Fractions are rendered with
//! round-half-away-from-zero at the requested precision; JSON always carries
//! the exact numerator/denominator alongside any decimal convenience field.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::engine::{IndexKind, PowerVector};
use crate::scenario::{to_basis_points, BlockingAnalysis, ChangeMatrix, LeaverSupport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("unknown output format {0:?} (expected markdown, csv, or json)")]
    UnknownFormat(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl FromStr for OutputFormat {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(TableError::UnknownFormat(other.to_string())),
        }
    }
}

/// Decimal rendering with round-half-away-from-zero at `places` digits.
pub fn decimal_string(value: &BigRational, places: u32) -> String {
    let scale = BigInt::from(10u64.pow(places));
    let scaled = (value * BigRational::from_integer(scale.clone()))
        .round()
        .to_integer();
    let negative = scaled.is_negative();
    let magnitude = scaled.magnitude().clone();
    let scale = scale.magnitude().clone();
    let int = &magnitude / &scale;
    let frac = &magnitude % &scale;
    let sign = if negative { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0width$}", width = places as usize)
    }
}

/// Percentage with `places` decimals (value 0.2008 -> "20.08" at 2 places).
pub fn percent_string(value: &BigRational, places: u32) -> String {
    decimal_string(&(value * BigRational::from_integer(100.into())), places)
}

fn exact_json(value: &BigRational) -> Value {
    json!({
        "num": value.numer().to_string(),
        "den": value.denom().to_string(),
    })
}

fn is_score_kind(kind: IndexKind) -> bool {
    matches!(kind, IndexKind::BanzhafRawScore)
}

fn vector_value_string(kind: IndexKind, value: &BigRational) -> String {
    if is_score_kind(kind) {
        decimal_string(value, 0)
    } else {
        percent_string(value, 4)
    }
}

/// Render a power vector. Index values are percentages with four decimals;
/// raw Banzhaf scores are integers.
pub fn emit_power_vector(vector: &PowerVector, format: OutputFormat) -> String {
    let value_header = if is_score_kind(vector.kind) {
        "score"
    } else {
        "value_pct"
    };
    match format {
        OutputFormat::Csv => {
            let mut out = format!("player,{value_header},num,den\n");
            for (player, value) in vector.iter() {
                let _ = writeln!(
                    out,
                    "{player},{},{},{}",
                    vector_value_string(vector.kind, value),
                    value.numer(),
                    value.denom()
                );
            }
            out
        }
        OutputFormat::Markdown => {
            let mut out = format!("| player | {value_header} |\n| --- | ---: |\n");
            for (player, value) in vector.iter() {
                let _ = writeln!(
                    out,
                    "| {player} | {} |",
                    vector_value_string(vector.kind, value)
                );
            }
            out
        }
        OutputFormat::Json => {
            let players: Vec<Value> = vector
                .iter()
                .map(|(player, value)| {
                    json!({
                        "player": player,
                        value_header: vector_value_string(vector.kind, value),
                        "exact": exact_json(value),
                    })
                })
                .collect();
            let doc = json!({ "index": vector.kind.label(), "players": players });
            serde_json::to_string_pretty(&doc).expect("json serialization")
        }
    }
}

fn bp_cell_string(cell: Option<i64>) -> String {
    cell.map(|bp| bp.to_string()).unwrap_or_default()
}

/// Render a change matrix: rows are surviving members, columns the leaver,
/// cells the relative power change in whole basis points. The diagonal and
/// cells without a defined relative change are left empty.
pub fn emit_change_matrix(matrix: &ChangeMatrix, format: OutputFormat) -> String {
    let codes = &matrix.baseline;
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("survivor");
            for leaver in codes {
                let _ = write!(out, ",{leaver}");
            }
            out.push('\n');
            for survivor in codes {
                let _ = write!(out, "{survivor}");
                for leaver in codes {
                    let cell = if leaver == survivor {
                        None
                    } else {
                        matrix.cell_basis_points(leaver, survivor)
                    };
                    let _ = write!(out, ",{}", bp_cell_string(cell));
                }
                out.push('\n');
            }
            out
        }
        OutputFormat::Markdown => {
            let mut out = String::from("| survivor |");
            for leaver in codes {
                let _ = write!(out, " {leaver} |");
            }
            out.push('\n');
            out.push_str("| --- |");
            for _ in codes {
                out.push_str(" ---: |");
            }
            out.push('\n');
            for survivor in codes {
                let _ = write!(out, "| {survivor} |");
                for leaver in codes {
                    let cell = if leaver == survivor {
                        None
                    } else {
                        matrix.cell_basis_points(leaver, survivor)
                    };
                    let _ = write!(out, " {} |", bp_cell_string(cell));
                }
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let ratios: Vec<Value> = matrix
                .ratios
                .iter()
                .map(|(leaver, ratio)| {
                    json!({
                        "leaver": leaver,
                        "ratio": decimal_string(ratio, 6),
                        "exact": exact_json(ratio),
                    })
                })
                .collect();
            let mut cells = Vec::new();
            for ((leaver, survivor), change) in &matrix.cells {
                let mut cell = json!({
                    "leaver": leaver,
                    "survivor": survivor,
                });
                if let Some(change) = change {
                    cell["basis_points"] = json!(to_basis_points(change));
                    cell["exact"] = exact_json(change);
                } else {
                    cell["basis_points"] = Value::Null;
                }
                cells.push(cell);
            }
            let doc = json!({
                "baseline": codes,
                "year": matrix.year.to_string(),
                "index": matrix.index_kind.label(),
                "ratios": ratios,
                "cells": cells,
            });
            serde_json::to_string_pretty(&doc).expect("json serialization")
        }
    }
}

/// Render a single exit scenario: per survivor the old index, the new
/// index, the budget-adjusted index, the percent of old power retained,
/// and the change in basis points.
pub fn emit_exit_report(report: &crate::scenario::ExitReport, format: OutputFormat) -> String {
    let rows: Vec<(String, String, String, String, String, String)> = report
        .adjusted
        .iter()
        .map(|(player, adjusted)| {
            let old = report.old.get(player).expect("survivor in baseline");
            let new = report.new.get(player).expect("survivor in new game");
            let (percent, bp) = match &report.change[player] {
                Some(change) => (
                    percent_string(&(change + BigRational::from_integer(1.into())), 2),
                    to_basis_points(change).to_string(),
                ),
                None => (String::new(), String::new()),
            };
            (
                player.clone(),
                percent_string(old, 4),
                percent_string(new, 4),
                percent_string(adjusted, 4),
                percent,
                bp,
            )
        })
        .collect();
    let ratio = decimal_string(&report.ratio, 6);
    match format {
        OutputFormat::Csv => {
            let mut out = format!("# correction ratio: {ratio}\n");
            out.push_str("player,old_pct,new_pct,adjusted_pct,percent_of_old,basis_points\n");
            for (p, old, new, adj, pct, bp) in &rows {
                let _ = writeln!(out, "{p},{old},{new},{adj},{pct},{bp}");
            }
            out
        }
        OutputFormat::Markdown => {
            let mut out = format!("Correction ratio: {ratio}\n\n");
            out.push_str(
                "| player | old | new | adjusted | % of old | bp |\n\
                 | --- | ---: | ---: | ---: | ---: | ---: |\n",
            );
            for (p, old, new, adj, pct, bp) in &rows {
                let _ = writeln!(out, "| {p} | {old} | {new} | {adj} | {pct} | {bp} |");
            }
            out
        }
        OutputFormat::Json => {
            let players: Vec<Value> = report
                .adjusted
                .iter()
                .map(|(player, adjusted)| {
                    let mut row = json!({
                        "player": player,
                        "old": exact_json(report.old.get(player).unwrap()),
                        "new": exact_json(report.new.get(player).unwrap()),
                        "adjusted": exact_json(adjusted),
                    });
                    if let Some(change) = &report.change[player] {
                        row["basis_points"] = json!(to_basis_points(change));
                        row["change"] = exact_json(change);
                    }
                    row
                })
                .collect();
            let doc = json!({
                "leaver": report.scenario.leaver,
                "ratio": { "decimal": ratio, "exact": exact_json(&report.ratio) },
                "players": players,
            });
            serde_json::to_string_pretty(&doc).expect("json serialization")
        }
    }
}

/// Basis-point matrix as parsed back from CSV (the lossy, rendered form).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisPointMatrix {
    pub leavers: Vec<String>,
    pub survivors: Vec<String>,
    pub cells: BTreeMap<(String, String), Option<i64>>,
}

impl BasisPointMatrix {
    pub fn cell(&self, leaver: &str, survivor: &str) -> Option<i64> {
        self.cells
            .get(&(leaver.to_string(), survivor.to_string()))
            .copied()
            .flatten()
    }
}

/// Parse the CSV form produced by [`emit_change_matrix`].
pub fn parse_matrix_csv(text: &str) -> Result<BasisPointMatrix, TableError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(TableError::Parse {
        line: 1,
        reason: "empty file".into(),
    })?;
    let mut cols = header.split(',').map(str::trim);
    if cols.next() != Some("survivor") {
        return Err(TableError::Parse {
            line: 1,
            reason: "first header field must be \"survivor\"".into(),
        });
    }
    let leavers: Vec<String> = cols.map(str::to_string).collect();
    let mut survivors = Vec::new();
    let mut cells = BTreeMap::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let survivor = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| TableError::Parse {
                line: lineno,
                reason: "missing survivor label".into(),
            })?
            .to_string();
        let row: Vec<&str> = fields.collect();
        if row.len() != leavers.len() {
            return Err(TableError::Parse {
                line: lineno,
                reason: format!("expected {} cells, got {}", leavers.len(), row.len()),
            });
        }
        for (leaver, cell) in leavers.iter().zip(row) {
            let value = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<i64>().map_err(|_| TableError::Parse {
                    line: lineno,
                    reason: format!("bad basis-point value {cell:?}"),
                })?)
            };
            cells.insert((leaver.clone(), survivor.clone()), value);
        }
        survivors.push(survivor);
    }
    Ok(BasisPointMatrix {
        leavers,
        survivors,
        cells,
    })
}

fn population_millions(population_100k: u64) -> String {
    format!("{}.{}", population_100k / 10, population_100k % 10)
}

/// Render the per-leaver support summary (who gains power from each exit,
/// and whether the winners alone reach the post-exit quotas).
pub fn emit_support_summary(summary: &[LeaverSupport], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(
                "leaver,supporters,population_millions,meets_member_quota,\
                 meets_population_quota,supporter_list\n",
            );
            for row in summary {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    row.leaver,
                    row.supporters.len(),
                    population_millions(row.population_100k),
                    row.meets_member_quota,
                    row.meets_population_quota,
                    row.supporters.join(";"),
                );
            }
            out
        }
        OutputFormat::Markdown => {
            let mut out = String::from(
                "| leaver | supporters | population (M) | member quota | population quota |\n\
                 | --- | ---: | ---: | --- | --- |\n",
            );
            for row in summary {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    row.leaver,
                    row.supporters.len(),
                    population_millions(row.population_100k),
                    if row.meets_member_quota { "yes" } else { "no" },
                    if row.meets_population_quota {
                        "yes"
                    } else {
                        "no"
                    },
                );
            }
            out
        }
        OutputFormat::Json => {
            let rows: Vec<Value> = summary
                .iter()
                .map(|row| {
                    json!({
                        "leaver": row.leaver,
                        "supporters": row.supporters,
                        "population_millions": population_millions(row.population_100k),
                        "meets_member_quota": row.meets_member_quota,
                        "meets_population_quota": row.meets_population_quota,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&json!({ "exits": rows })).expect("json serialization")
        }
    }
}

/// Render the blocking-minority analysis: the sub-four-member coalitions the
/// rule disarms, and the exact index shift the rule causes per member.
pub fn emit_blocking_analysis(analysis: &BlockingAnalysis, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("section,members_or_player,delta_num,delta_den\n");
            for coalition in &analysis.shortfall_coalitions {
                let _ = writeln!(out, "coalition,{},,", coalition.join(";"));
            }
            for (player, delta) in &analysis.deltas {
                let _ = writeln!(out, "delta,{player},{},{}", delta.numer(), delta.denom());
            }
            out
        }
        OutputFormat::Markdown => {
            let mut out =
                String::from("Coalitions below four members whose population exceeds 35%:\n\n");
            for coalition in &analysis.shortfall_coalitions {
                let _ = writeln!(out, "- {}", coalition.join(", "));
            }
            out.push_str(
                "\nShapley-Shubik shift caused by the blocking-minority rule:\n\n\
                 | player | delta (exact) | delta |\n| --- | --- | ---: |\n",
            );
            for (player, delta) in &analysis.deltas {
                let sign = if delta.is_negative() {
                    "-"
                } else if delta.is_zero() {
                    ""
                } else {
                    "+"
                };
                let _ = writeln!(
                    out,
                    "| {player} | {sign}{}/{} | {} |",
                    delta.numer().magnitude(),
                    delta.denom(),
                    decimal_string(delta, 7),
                );
            }
            out
        }
        OutputFormat::Json => {
            let deltas: Vec<Value> = analysis
                .deltas
                .iter()
                .map(|(player, delta)| {
                    json!({
                        "player": player,
                        "exact": exact_json(delta),
                        "decimal": decimal_string(delta, 7),
                    })
                })
                .collect();
            let doc = json!({
                "year": analysis.year.to_string(),
                "shortfall_coalitions": analysis.shortfall_coalitions,
                "deltas": deltas,
            });
            serde_json::to_string_pretty(&doc).expect("json serialization")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::builtin_dataset;
    use crate::data::Year;
    use crate::engine::shapley_shubik;
    use crate::scenario::{change_matrix, ExitOptions};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimal_rendering_rounds_half_away() {
        assert_eq!(decimal_string(&rat(1, 8), 2), "0.13"); // 0.125 -> 0.13
        assert_eq!(decimal_string(&rat(-1, 8), 2), "-0.13");
        assert_eq!(decimal_string(&rat(7, 30), 4), "0.2333");
        assert_eq!(decimal_string(&rat(0, 1), 3), "0.000");
        assert_eq!(percent_string(&rat(7, 30), 2), "23.33");
    }

    #[test]
    fn power_vector_csv_carries_exact_fractions() {
        let ds = builtin_dataset("eec1958").unwrap();
        let game = ds.game(&ds.codes(), Year::Y2015, false, None).unwrap();
        let ss = shapley_shubik(&game).unwrap();
        let csv = emit_power_vector(&ss, OutputFormat::Csv);
        assert!(csv.contains("FR,23.3333,7,30"));
        assert!(csv.contains("LU,0.0000,0,1"));
    }

    #[test]
    fn matrix_csv_round_trips() {
        let ds = builtin_dataset("eec1958").unwrap();
        let m = change_matrix(&ds, &ds.codes(), &[], &ExitOptions::default()).unwrap();
        let csv = emit_change_matrix(&m, OutputFormat::Csv);
        let parsed = parse_matrix_csv(&csv).unwrap();
        assert_eq!(parsed.leavers, m.baseline);
        assert_eq!(parsed.survivors, m.baseline);
        for leaver in &m.baseline {
            for survivor in &m.baseline {
                if leaver == survivor {
                    assert_eq!(parsed.cell(leaver, survivor), None);
                } else {
                    assert_eq!(
                        parsed.cell(leaver, survivor),
                        m.cell_basis_points(leaver, survivor)
                    );
                }
            }
        }
        // serializing the parsed form again is identical
        assert_eq!(parse_matrix_csv(&csv).unwrap(), parsed);
    }

    #[test]
    fn json_output_is_valid_and_exact() {
        let ds = builtin_dataset("eec1958").unwrap();
        let game = ds.game(&ds.codes(), Year::Y2015, false, None).unwrap();
        let ss = shapley_shubik(&game).unwrap();
        let doc: Value = serde_json::from_str(&emit_power_vector(&ss, OutputFormat::Json)).unwrap();
        let fr = doc["players"]
            .as_array()
            .unwrap()
            .iter()
            .find(|p| p["player"] == "FR")
            .unwrap();
        assert_eq!(fr["exact"]["num"], "7");
        assert_eq!(fr["exact"]["den"], "30");
    }

    #[test]
    fn population_rendering_uses_one_decimal() {
        assert_eq!(population_millions(395), "39.5");
        assert_eq!(population_millions(3251), "325.1");
        assert_eq!(population_millions(0), "0.0");
    }
}
