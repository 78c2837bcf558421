//! Regression tests against the published change matrices in
//! `tests/golden/`. The published tables carry known defects (see the
//! acceptance suite's criterion-6 diagnosis): appendix C was generated with
//! a population quota one unit below the exact ceiling, and the IE/RO/SK
//! columns of appendix D (and SK of C) have printing errors. These tests pin
//! the agreement that *should* hold — every clean cell within tight bounds —
//! so an engine regression cannot hide behind the known defects.

use voting_power::data::{builtin_dataset, Year};
use voting_power::engine::IndexKind;
use voting_power::scenario::{change_matrix, BudgetModel, ChangeMatrix, ExitOptions};
use voting_power::table::parse_matrix_csv;

fn computed(dataset: &str) -> ChangeMatrix {
    let ds = builtin_dataset(dataset).unwrap();
    let opts = ExitOptions {
        year: Year::Y2015,
        index_kind: IndexKind::ShapleyShubik,
        budget_model: BudgetModel::Renormalized,
        blocking_rule: false,
        quota_override: None,
    };
    change_matrix(&ds, &ds.codes(), &[], &opts).unwrap()
}

fn golden(name: &str) -> voting_power::table::BasisPointMatrix {
    parse_matrix_csv(&std::fs::read_to_string(format!("tests/golden/{name}.csv")).unwrap()).unwrap()
}

/// (cells compared, cells within ±1 bp, worst absolute difference)
fn tally(
    matrix: &ChangeMatrix,
    golden: &voting_power::table::BasisPointMatrix,
    skip_leavers: &[&str],
) -> (usize, usize, i64) {
    let mut total = 0;
    let mut close = 0;
    let mut worst = 0;
    for ((leaver, survivor), want) in &golden.cells {
        let Some(want) = want else { continue };
        if skip_leavers.contains(&leaver.as_str()) {
            continue;
        }
        total += 1;
        let got = matrix.cell_basis_points(leaver, survivor).unwrap();
        let diff = (got - want).abs();
        if diff <= 1 {
            close += 1;
        }
        worst = worst.max(diff);
    }
    (total, close, worst)
}

#[test]
fn appendix_b_agrees_within_two_basis_points() {
    let (total, close, worst) = tally(&computed("eu28"), &golden("appendix_b"), &[]);
    assert_eq!(total, 756);
    // ten cells sit at exactly 2 bp: last-digit rounding in the source
    assert!(close >= 746, "only {close}/756 within 1 bp");
    assert!(worst <= 2, "worst disagreement {worst} bp");
}

#[test]
fn appendix_d_clean_columns_agree_within_three_basis_points() {
    let (total, close, worst) = tally(
        &computed("eu27_precroatia"),
        &golden("appendix_d"),
        // columns with printing defects: RO divided by ten, SK and IE offset
        &["RO", "SK", "IE"],
    );
    assert_eq!(total, 624);
    assert!(close >= 595, "only {close}/{total} within 1 bp");
    // 24 cells differ by 2 bp and a single one (leaver BG, survivor CY)
    // by 3 bp: accumulated last-digit rounding in the source
    assert!(worst <= 3, "worst disagreement {worst} bp");
}

#[test]
fn appendix_d_uk_anchor_is_exact() {
    assert_eq!(
        computed("eu27_precroatia").cell_basis_points("UK", "MT"),
        Some(2687)
    );
}

#[test]
fn appendix_c_tracks_the_off_by_one_quota() {
    // the source used population quota 2883 of 4436 instead of the exact
    // 2884; agreement is therefore loose, and we pin only our exact anchors
    let matrix = computed("eu27_postbrexit");
    assert_eq!(matrix.cell_basis_points("CZ", "FR"), Some(-336));
    assert_eq!(matrix.cell_basis_points("DE", "AT"), Some(-1030));
    let (total, _, _) = tally(&matrix, &golden("appendix_c"), &[]);
    assert_eq!(total, 702);
}
