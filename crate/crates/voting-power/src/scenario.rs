//! Exit scenarios: budget correction ratios, adjusted indices, change
//! matrices over every possible leaver, blocking-minority analysis, and the
//! support summary for each exit.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::data::{DataError, Dataset, Year};
use crate::engine::{compute_index, shapley_shubik, EngineError, IndexKind, PowerVector};
use crate::game::{member_threshold, weight_threshold_met, VotingGame};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("leaver {0:?} is not part of the baseline")]
    LeaverNotInBaseline(String),
    #[error("baseline must keep at least one member after the exit")]
    BaselineTooSmall,
    #[error("unknown budget model {0:?} (expected renormalized or cumulative)")]
    UnknownBudgetModel(String),
}

/// How the departed member's budget contribution is accounted for.
///
/// Both models measure the remaining budget against the original union's
/// full budget (`Dataset::budget_base`), before anyone left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetModel {
    /// `1 − s_L / current`: the loss relative to the budget of the union
    /// the leaver is departing from (earlier departures already deducted).
    Renormalized,
    /// `(current − s_L) / base`: cumulative remaining budget relative to
    /// the original union's budget.
    CumulativeFromOriginal,
}

impl std::str::FromStr for BudgetModel {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "renormalized" => Ok(BudgetModel::Renormalized),
            "cumulative" => Ok(BudgetModel::CumulativeFromOriginal),
            other => Err(ScenarioError::UnknownBudgetModel(other.to_string())),
        }
    }
}

fn big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact budget correction ratio for `leaver` departing from `baseline`.
///
/// `extra_departed` lists members that already left after the dataset's own
/// recorded departures (their shares are deducted from the current budget
/// but still count towards the original base).
pub fn correction_ratio(
    dataset: &Dataset,
    extra_departed: &[String],
    leaver: &str,
    model: BudgetModel,
) -> Result<BigRational, ScenarioError> {
    let s_leaver = dataset.member(leaver)?.contribution_share;
    let mut departed = dataset.departed_share();
    for code in extra_departed {
        departed += dataset.member(code)?.contribution_share;
    }
    let base = dataset.budget_base;
    if departed + s_leaver > base {
        return Err(ScenarioError::Data(DataError::Validation(format!(
            "departed shares exceed the budget base {base}"
        ))));
    }
    let current = base - departed;
    let remaining = current - s_leaver;
    Ok(match model {
        BudgetModel::Renormalized => big(remaining) / big(current),
        BudgetModel::CumulativeFromOriginal => big(remaining) / big(base),
    })
}

/// Options shared by every exit computation.
#[derive(Debug, Clone)]
pub struct ExitOptions {
    pub year: Year,
    pub index_kind: IndexKind,
    pub budget_model: BudgetModel,
    pub blocking_rule: bool,
    /// Post-exit absolute quota for fixed-weight games (ignored for Lisbon).
    pub quota_override: Option<u64>,
}

impl Default for ExitOptions {
    fn default() -> Self {
        ExitOptions {
            year: Year::Y2015,
            index_kind: IndexKind::ShapleyShubik,
            budget_model: BudgetModel::Renormalized,
            blocking_rule: false,
            quota_override: None,
        }
    }
}

/// A single member leaving a baseline union.
#[derive(Debug, Clone)]
pub struct ExitScenario {
    pub baseline: Vec<String>,
    /// Members that already left, in departure order (shares deducted from
    /// the current budget before this exit's ratio is taken).
    pub already_departed: Vec<String>,
    pub leaver: String,
    pub options: ExitOptions,
}

/// Everything an exit changes: indices before, after, the budget ratio,
/// adjusted indices, and relative power changes.
#[derive(Debug, Clone)]
pub struct ExitReport {
    pub scenario: ExitScenario,
    pub old: PowerVector,
    pub new: PowerVector,
    pub ratio: BigRational,
    pub adjusted: BTreeMap<String, BigRational>,
    /// Relative change `adjusted/old − 1`; `None` where the old index is 0.
    pub change: BTreeMap<String, Option<BigRational>>,
}

/// The post-exit game: the baseline game with the leaver removed.
pub fn apply_exit(
    dataset: &Dataset,
    baseline: &[String],
    leaver: &str,
    options: &ExitOptions,
) -> Result<VotingGame, ScenarioError> {
    if !baseline.iter().any(|c| c == leaver) {
        return Err(ScenarioError::LeaverNotInBaseline(leaver.to_string()));
    }
    let survivors: Vec<String> = baseline.iter().filter(|c| *c != leaver).cloned().collect();
    if survivors.is_empty() {
        return Err(ScenarioError::BaselineTooSmall);
    }
    Ok(dataset.game(
        &survivors,
        options.year,
        options.blocking_rule,
        options.quota_override,
    )?)
}

/// Scale a post-exit power vector by the budget correction ratio.
pub fn adjusted_power(new: &PowerVector, ratio: &BigRational) -> BTreeMap<String, BigRational> {
    new.iter()
        .map(|(code, v)| (code.to_string(), v * ratio))
        .collect()
}

/// Relative change of the adjusted index against the pre-exit index.
pub fn power_change(
    old: &PowerVector,
    adjusted: &BTreeMap<String, BigRational>,
) -> BTreeMap<String, Option<BigRational>> {
    adjusted
        .iter()
        .map(|(code, adj)| {
            let change = old.get(code).and_then(|before| {
                (!before.is_zero()).then(|| adj / before - BigRational::from_integer(1.into()))
            });
            (code.clone(), change)
        })
        .collect()
}

/// Relative change in whole basis points, rounding ties away from zero.
pub fn to_basis_points(change: &BigRational) -> i64 {
    (change * BigRational::from_integer(10_000.into()))
        .round()
        .to_integer()
        .to_i64()
        .expect("basis points fit in i64")
}

impl ExitScenario {
    pub fn run(&self, dataset: &Dataset) -> Result<ExitReport, ScenarioError> {
        let old_game = dataset.game(
            &self.baseline,
            self.options.year,
            self.options.blocking_rule,
            None,
        )?;
        let old = compute_index(&old_game, self.options.index_kind)?;
        let new_game = apply_exit(dataset, &self.baseline, &self.leaver, &self.options)?;
        let new = compute_index(&new_game, self.options.index_kind)?;
        let ratio = correction_ratio(
            dataset,
            &self.already_departed,
            &self.leaver,
            self.options.budget_model,
        )?;
        let adjusted = adjusted_power(&new, &ratio);
        let change = power_change(&old, &adjusted);
        Ok(ExitReport {
            scenario: self.clone(),
            old,
            new,
            ratio,
            adjusted,
            change,
        })
    }
}

/// Change matrix over every possible single leaver from a baseline.
///
/// Cells are indexed by (leaver, survivor); `None` marks a survivor whose
/// pre-exit index is zero, where a relative change is undefined.
#[derive(Debug, Clone)]
pub struct ChangeMatrix {
    pub baseline: Vec<String>,
    pub year: Year,
    pub index_kind: IndexKind,
    pub budget_model: BudgetModel,
    pub ratios: BTreeMap<String, BigRational>,
    pub cells: BTreeMap<(String, String), Option<BigRational>>,
}

impl ChangeMatrix {
    pub fn cell(&self, leaver: &str, survivor: &str) -> Option<&Option<BigRational>> {
        self.cells.get(&(leaver.to_string(), survivor.to_string()))
    }

    pub fn cell_basis_points(&self, leaver: &str, survivor: &str) -> Option<i64> {
        self.cell(leaver, survivor)
            .and_then(|c| c.as_ref())
            .map(to_basis_points)
    }
}

/// Compute the full matrix: one exit scenario per baseline member.
pub fn change_matrix(
    dataset: &Dataset,
    baseline: &[String],
    already_departed: &[String],
    options: &ExitOptions,
) -> Result<ChangeMatrix, ScenarioError> {
    let old_game = dataset.game(baseline, options.year, options.blocking_rule, None)?;
    let old = compute_index(&old_game, options.index_kind)?;
    let mut ratios = BTreeMap::new();
    let mut cells = BTreeMap::new();
    for leaver in baseline {
        let new_game = apply_exit(dataset, baseline, leaver, options)?;
        let new = compute_index(&new_game, options.index_kind)?;
        let ratio = correction_ratio(dataset, already_departed, leaver, options.budget_model)?;
        let adjusted = adjusted_power(&new, &ratio);
        for (survivor, change) in power_change(&old, &adjusted) {
            cells.insert((leaver.clone(), survivor), change);
        }
        ratios.insert(leaver.clone(), ratio);
    }
    Ok(ChangeMatrix {
        baseline: baseline.to_vec(),
        year: options.year,
        index_kind: options.index_kind,
        budget_model: options.budget_model,
        ratios,
        cells,
    })
}

/// Who gains from an exit, and whether the winners could carry a decision
/// on their own in the post-exit union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeaverSupport {
    pub leaver: String,
    /// Survivors whose adjusted relative power strictly increases.
    pub supporters: Vec<String>,
    /// Combined population of the supporters, in 100,000s.
    pub population_100k: u64,
    /// Supporters alone reach the baseline's 55% member threshold.
    pub meets_member_quota: bool,
    /// Supporters alone reach 65% of the baseline's population.
    pub meets_population_quota: bool,
}

/// Summarize, per leaver, which survivors gain power and whether the winners
/// alone would clear the baseline union's decision thresholds (the member
/// count and population lines are fixed by the baseline, so every exit is
/// judged against the same bar).
pub fn exit_support_summary(
    dataset: &Dataset,
    matrix: &ChangeMatrix,
) -> Result<Vec<LeaverSupport>, ScenarioError> {
    let baseline_pop: u64 = matrix
        .baseline
        .iter()
        .map(|c| dataset.member(c).map(|m| m.population(matrix.year)))
        .sum::<Result<u64, _>>()?;
    let needed = member_threshold(matrix.baseline.len(), Ratio::new(55, 100), None);
    let mut out = Vec::new();
    for leaver in &matrix.baseline {
        let mut supporters = Vec::new();
        let mut population = 0u64;
        for survivor in &matrix.baseline {
            if survivor == leaver {
                continue;
            }
            let gained = matrix
                .cell(leaver, survivor)
                .and_then(|c| c.as_ref())
                .is_some_and(|c| c.is_positive());
            if gained {
                supporters.push(survivor.clone());
                population += dataset.member(survivor)?.population(matrix.year);
            }
        }
        out.push(LeaverSupport {
            leaver: leaver.clone(),
            meets_member_quota: supporters.len() >= needed,
            meets_population_quota: weight_threshold_met(
                baseline_pop,
                Ratio::new(65, 100),
                population,
            ),
            population_100k: population,
            supporters,
        });
    }
    Ok(out)
}

/// Blocking-minority analysis: the small coalitions the four-member rule
/// disarms, and how the rule shifts each member's Shapley-Shubik index.
#[derive(Debug, Clone)]
pub struct BlockingAnalysis {
    pub year: Year,
    /// Coalitions of fewer than four members whose population exceeds 35%
    /// of the total: they defeat the population quota yet cannot block.
    pub shortfall_coalitions: Vec<Vec<String>>,
    /// Shapley-Shubik with the rule, minus without it, per member.
    pub deltas: BTreeMap<String, BigRational>,
}

/// All coalitions of at most `max_size` members whose population strictly
/// exceeds 35% of the baseline total — big enough to defeat the population
/// quota, too small to block under the four-member rule.
pub fn minimal_blocking_shortfall(
    dataset: &Dataset,
    baseline: &[String],
    year: Year,
    max_size: usize,
) -> Result<Vec<Vec<String>>, ScenarioError> {
    let pops: Vec<u64> = baseline
        .iter()
        .map(|c| dataset.member(c).map(|m| m.population(year)))
        .collect::<Result<_, _>>()?;
    let total: u64 = pops.iter().sum();
    let n = baseline.len();
    let mut found = Vec::new();
    // subsets of size <= max_size via direct enumeration
    let mut stack: Vec<(usize, Vec<usize>, u64)> = vec![(0, Vec::new(), 0)];
    while let Some((start, chosen, weight)) = stack.pop() {
        if !chosen.is_empty() && (weight as u128) * 100 > (total as u128) * 35 {
            found.push(chosen.iter().map(|&i| baseline[i].clone()).collect());
        }
        if chosen.len() == max_size {
            continue;
        }
        for (i, pop) in pops.iter().enumerate().take(n).skip(start) {
            let mut next = chosen.clone();
            next.push(i);
            stack.push((i + 1, next, weight + pop));
        }
    }
    found.sort_by(|a: &Vec<String>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(found)
}

/// Per-member Shapley-Shubik shift caused by the blocking-minority rule,
/// together with the coalitions the rule affects.
pub fn blocking_correction_delta(
    dataset: &Dataset,
    baseline: &[String],
    year: Year,
) -> Result<BlockingAnalysis, ScenarioError> {
    let with_rule = shapley_shubik(&dataset.game(baseline, year, true, None)?)?;
    let without = shapley_shubik(&dataset.game(baseline, year, false, None)?)?;
    let deltas = with_rule
        .iter()
        .map(|(code, v)| {
            let base = without.get(code).expect("same players");
            (code.to_string(), v - base)
        })
        .collect();
    // only the Lisbon family has a population quota for small coalitions to
    // defeat; fixed-weight games have no blocking-minority rule at all
    let shortfall_coalitions = match dataset.rule_family {
        crate::data::RuleFamily::Lisbon => minimal_blocking_shortfall(dataset, baseline, year, 3)?,
        crate::data::RuleFamily::FixedWeights { .. } => Vec::new(),
    };
    Ok(BlockingAnalysis {
        year,
        shortfall_coalitions,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::builtin_dataset;
    use num_traits::One;

    fn brational(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn france_exit_ratio_from_full_budget() {
        let ds = builtin_dataset("eec1958").unwrap();
        let r = correction_ratio(&ds, &[], "FR", BudgetModel::Renormalized).unwrap();
        assert_eq!(r, brational(72, 100));
        let r = correction_ratio(&ds, &[], "FR", BudgetModel::CumulativeFromOriginal).unwrap();
        assert_eq!(r, brational(72, 100));
    }

    #[test]
    fn czech_exit_ratio_after_brexit() {
        let ds = builtin_dataset("eu27_postbrexit").unwrap();
        // current budget 1 - 0.0882 = 0.9118; leaver share 0.0102
        let r = correction_ratio(&ds, &[], "CZ", BudgetModel::Renormalized).unwrap();
        assert_eq!(r, brational(9016, 9118));
        let r = correction_ratio(&ds, &[], "CZ", BudgetModel::CumulativeFromOriginal).unwrap();
        assert_eq!(r, brational(9016, 10_000));
    }

    #[test]
    fn chained_departures_accumulate() {
        let ds = builtin_dataset("eu27_postbrexit").unwrap();
        let de = ds.member("DE").unwrap().contribution_share;
        let cz = ds.member("CZ").unwrap().contribution_share;
        let r = correction_ratio(&ds, &["DE".into()], "CZ", BudgetModel::Renormalized).unwrap();
        let current = Ratio::new(9118u64, 10_000) - de;
        assert_eq!(r, big((current - cz) / current));
    }

    #[test]
    fn eec_france_exit_report() {
        let ds = builtin_dataset("eec1958").unwrap();
        let scenario = ExitScenario {
            baseline: ds.codes(),
            already_departed: vec![],
            leaver: "FR".into(),
            options: ExitOptions {
                quota_override: Some(9),
                ..ExitOptions::default()
            },
        };
        let report = scenario.run(&ds).unwrap();
        // post-exit game (weights 4,4,2,2,1; quota 9): DE/IT 3/10, BE/NL 2/15, LU 1/15
        assert_eq!(report.new.get("DE"), Some(&brational(3, 10)));
        // BE, NL, and LU all tie at 2/15 once France's exit lowers the quota
        assert_eq!(report.new.get("LU"), Some(&brational(2, 15)));
        assert_eq!(report.new.get("BE"), Some(&brational(2, 15)));
        assert_eq!(report.ratio, brational(72, 100));
        // adjusted: DE 0.72 * 3/10 = 27/125
        assert_eq!(report.adjusted["DE"], brational(27, 125));
        // LU's old index is 0: relative change undefined
        assert_eq!(report.change["LU"], None);
        assert!(report.change["DE"].as_ref().unwrap().is_negative());
    }

    #[test]
    fn basis_point_rounding_is_half_away_from_zero() {
        assert_eq!(to_basis_points(&brational(25, 200_000)), 1); // 1.25 bp -> 1
        assert_eq!(to_basis_points(&brational(3, 20_000)), 2); // 1.5 bp -> 2
        assert_eq!(to_basis_points(&brational(-3, 20_000)), -2);
        assert_eq!(to_basis_points(&BigRational::zero()), 0);
    }

    #[test]
    fn matrix_diagonal_and_ratio_rows() {
        let ds = builtin_dataset("eec1958").unwrap();
        let m = change_matrix(&ds, &ds.codes(), &[], &ExitOptions::default()).unwrap();
        assert_eq!(m.cell("FR", "FR"), None); // leaver has no survivor cell
        assert_eq!(m.ratios["LU"], BigRational::one() - brational(2, 1000));
        // without a quota override the EEC post-exit quota stays at 12
        assert!(m.cell("FR", "DE").is_some());
    }

    #[test]
    fn shortfall_coalitions_exceed_35_percent_strictly() {
        let ds = builtin_dataset("eu28").unwrap();
        let baseline = ds.codes();
        let coalitions = minimal_blocking_shortfall(&ds, &baseline, Year::Y2015, 3).unwrap();
        assert!(!coalitions.is_empty());
        let total = ds.population_total(Year::Y2015);
        for c in &coalitions {
            let pop: u64 = c
                .iter()
                .map(|code| ds.member(code).unwrap().population(Year::Y2015))
                .sum();
            assert!(pop * 100 > total * 35, "{c:?} should exceed 35% strictly");
        }
        // FR+UK+ES reaches exactly 1772 of 5082: not strictly above 35%
        assert!(!coalitions
            .iter()
            .any(|c| c == &vec!["FR".to_string(), "ES".into(), "UK".into()]
                || c == &vec!["ES".to_string(), "FR".into(), "UK".into()]));
    }

    #[test]
    fn blocking_deltas_sum_to_zero() {
        let ds = builtin_dataset("eu28").unwrap();
        let analysis = blocking_correction_delta(&ds, &ds.codes(), Year::Y2015).unwrap();
        let sum: BigRational = analysis.deltas.values().sum();
        assert!(sum.is_zero());
        // Germany loses from the rule, small states gain
        assert!(analysis.deltas["DE"].is_negative());
        assert!(analysis.deltas["MT"].is_positive());
    }

    #[test]
    fn leaver_missing_from_baseline() {
        let ds = builtin_dataset("eu27_postbrexit").unwrap();
        let err = apply_exit(&ds, &ds.codes(), "UK", &ExitOptions::default());
        assert!(matches!(err, Err(ScenarioError::LeaverNotInBaseline(_))));
    }
}
