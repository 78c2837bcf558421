//! Datasets: the built-in EU Council and EEC tables, CSV ingestion, and
//! dataset-level validation.
//!
//! Populations are stored in units of 100,000 persons; contribution shares
//! are exact rationals over 10,000 (one unit per basis point of the original
//! budget).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

use crate::game::{GameError, QuotaRule, Threshold, VotingGame};

/// Years the datasets carry population figures for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Year {
    Y2015,
    Y2020,
    Y2030,
}

impl Year {
    pub const ALL: [Year; 3] = [Year::Y2015, Year::Y2020, Year::Y2030];

    fn index(self) -> usize {
        match self {
            Year::Y2015 => 0,
            Year::Y2020 => 1,
            Year::Y2030 => 2,
        }
    }
}

impl fmt::Display for Year {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let y = match self {
            Year::Y2015 => 2015,
            Year::Y2020 => 2020,
            Year::Y2030 => 2030,
        };
        write!(f, "{y}")
    }
}

impl FromStr for Year {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2015" => Ok(Year::Y2015),
            "2020" => Ok(Year::Y2020),
            "2030" => Ok(Year::Y2030),
            other => Err(DataError::UnknownYear(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DataError {
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("unknown year {0:?} (datasets carry 2015, 2020, 2030)")]
    UnknownYear(String),
    #[error("unknown member code {0:?}")]
    UnknownMember(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// One player: a country with per-year population weights and a budget share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberState {
    pub code: String,
    pub name: String,
    populations: [u64; 3],
    /// Fraction of the original baseline budget, denominated in 1/10000.
    pub contribution_share: Ratio<u64>,
}

impl MemberState {
    pub fn new(
        code: &str,
        name: &str,
        populations: [u64; 3],
        contribution_share: Ratio<u64>,
    ) -> MemberState {
        MemberState {
            code: code.to_string(),
            name: name.to_string(),
            populations,
            contribution_share,
        }
    }

    pub fn population(&self, year: Year) -> u64 {
        self.populations[year.index()]
    }
}

/// Which voting rule family a dataset plays under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleFamily {
    /// Dual quota: >= 55% of members and >= 65% of the population, with the
    /// four-member blocking-minority exception available.
    Lisbon,
    /// A single weighted rule with fixed per-member weights and an absolute
    /// quota (EEC 1958).
    FixedWeights {
        weights: BTreeMap<String, u64>,
        quota: u64,
    },
}

/// A named collection of member states plus rule configuration and budget
/// provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub provenance: String,
    members: Vec<MemberState>,
    pub rule_family: RuleFamily,
    /// Members of the original union that have already left (their shares
    /// still count towards the original budget).
    departed: Vec<MemberState>,
    /// Total of the original union's budget the shares are quoted against.
    pub budget_base: Ratio<u64>,
}

impl Dataset {
    pub fn new(
        name: &str,
        provenance: &str,
        members: Vec<MemberState>,
        rule_family: RuleFamily,
        departed: Vec<MemberState>,
        budget_base: Ratio<u64>,
    ) -> Result<Dataset, DataError> {
        let ds = Dataset {
            name: name.to_string(),
            provenance: provenance.to_string(),
            members,
            rule_family,
            departed,
            budget_base,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<(), DataError> {
        let mut seen = BTreeMap::new();
        for m in self.members.iter().chain(&self.departed) {
            if seen.insert(m.code.clone(), ()).is_some() {
                return Err(DataError::Validation(format!(
                    "duplicate member code {:?}",
                    m.code
                )));
            }
            for year in Year::ALL {
                if m.population(year) == 0 {
                    return Err(DataError::Validation(format!(
                        "member {:?} has non-positive population for {year}",
                        m.code
                    )));
                }
            }
            if m.contribution_share >= Ratio::from_integer(1) {
                return Err(DataError::Validation(format!(
                    "member {:?} has contribution share >= 1",
                    m.code
                )));
            }
        }
        let total: Ratio<u64> = self
            .members
            .iter()
            .chain(&self.departed)
            .map(|m| m.contribution_share)
            .sum();
        if total > self.budget_base {
            return Err(DataError::Validation(format!(
                "contribution shares sum to {total}, above the budget base {}",
                self.budget_base
            )));
        }
        Ok(())
    }

    /// Non-fatal data quirks, e.g. shares that do not cover the whole budget.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let total: Ratio<u64> = self
            .members
            .iter()
            .chain(&self.departed)
            .map(|m| m.contribution_share)
            .sum();
        let gap = self.budget_base - total;
        if gap > Ratio::new(5, 1000) {
            out.push(format!(
                "contribution shares cover only {total} of the {} budget base \
                 (remainder comes from sources outside the member list)",
                self.budget_base
            ));
        }
        out
    }

    pub fn members(&self) -> &[MemberState] {
        &self.members
    }

    pub fn departed(&self) -> &[MemberState] {
        &self.departed
    }

    pub fn member(&self, code: &str) -> Result<&MemberState, DataError> {
        self.members
            .iter()
            .find(|m| m.code == code)
            .ok_or_else(|| DataError::UnknownMember(code.to_string()))
    }

    pub fn codes(&self) -> Vec<String> {
        self.members.iter().map(|m| m.code.clone()).collect()
    }

    pub fn population_total(&self, year: Year) -> u64 {
        self.members.iter().map(|m| m.population(year)).sum()
    }

    /// Sum of the shares of everyone who has left the original union.
    pub fn departed_share(&self) -> Ratio<u64> {
        self.departed.iter().map(|m| m.contribution_share).sum()
    }

    /// Build the voting game over a subset of this dataset's members.
    ///
    /// `quota_override` replaces a fixed-weight rule's absolute quota (the
    /// caller supplies the post-exit threshold for such games); it is
    /// rejected for Lisbon games, whose thresholds are fractions of the
    /// remaining membership.
    pub fn game(
        &self,
        membership: &[String],
        year: Year,
        blocking_rule: bool,
        quota_override: Option<u64>,
    ) -> Result<VotingGame, DataError> {
        let members: Vec<&MemberState> = membership
            .iter()
            .map(|code| self.member(code))
            .collect::<Result<_, _>>()?;
        let players: Vec<String> = members.iter().map(|m| m.code.clone()).collect();
        match &self.rule_family {
            RuleFamily::Lisbon => {
                if quota_override.is_some() {
                    return Err(DataError::Validation(
                        "quota override only applies to fixed-weight games".into(),
                    ));
                }
                let n = players.len();
                let populations: Vec<u64> = members.iter().map(|m| m.population(year)).collect();
                let rules = vec![
                    QuotaRule::member_count(n, Ratio::new(55, 100)),
                    QuotaRule::new(populations, Threshold::Fraction(Ratio::new(65, 100))),
                ];
                let blocking = blocking_rule.then_some(4);
                Ok(VotingGame::new(players, rules, blocking, None)?)
            }
            RuleFamily::FixedWeights { weights, quota } => {
                let w: Vec<u64> = players
                    .iter()
                    .map(|code| {
                        weights
                            .get(code)
                            .copied()
                            .ok_or_else(|| DataError::UnknownMember(code.clone()))
                    })
                    .collect::<Result<_, _>>()?;
                let quota = quota_override.unwrap_or(*quota);
                Ok(VotingGame::new(
                    players,
                    vec![QuotaRule::new(w, Threshold::Absolute(quota))],
                    None,
                    None,
                )?)
            }
        }
    }
}

/// Names accepted by [`builtin_dataset`].
pub const BUILTIN_DATASETS: [&str; 4] = ["eu28", "eu27_postbrexit", "eu27_precroatia", "eec1958"];

/// 2015/2020/2030 populations (100,000s) and budget shares (basis points)
/// for the 28-member EU.
const EU28: [(&str, &str, [u64; 3], u64); 28] = [
    ("AT", "Austria", [86, 88, 93], 122),
    ("BE", "Belgium", [113, 118, 129], 285),
    ("BG", "Bulgaria", [72, 70, 65], 31),
    ("HR", "Croatia", [42, 42, 41], 30),
    ("CY", "Cyprus", [9, 9, 9], 11),
    ("CZ", "Czech Republic", [105, 106, 108], 102),
    ("DK", "Denmark", [56, 58, 61], 172),
    ("EE", "Estonia", [13, 13, 12], 14),
    ("FI", "Finland", [55, 56, 59], 138),
    ("FR", "France", [662, 677, 704], 1522),
    ("DE", "Germany", [807, 806, 798], 2008),
    ("EL", "Greece", [110, 107, 101], 142),
    ("HU", "Hungary", [99, 98, 97], 69),
    ("IE", "Ireland", [46, 46, 46], 111),
    ("IT", "Italy", [609, 620, 641], 1118),
    ("LV", "Latvia", [20, 19, 16], 19),
    ("LT", "Lithuania", [29, 27, 22], 25),
    ("LU", "Luxembourg", [6, 6, 8], 18),
    ("MT", "Malta", [4, 4, 5], 5),
    ("NL", "Netherlands", [169, 171, 176], 497),
    ("PL", "Poland", [385, 384, 375], 274),
    ("PT", "Portugal", [104, 101, 98], 127),
    ("RO", "Romania", [199, 197, 190], 105),
    ("SK", "Slovakia", [54, 54, 53], 49),
    ("SI", "Slovenia", [21, 21, 21], 25),
    ("ES", "Spain", [464, 458, 445], 776),
    ("SE", "Sweden", [97, 101, 110], 298),
    ("UK", "United Kingdom", [646, 667, 705], 882),
];

fn eu28_members() -> Vec<MemberState> {
    EU28.iter()
        .map(|(code, name, pops, share_bp)| {
            MemberState::new(code, name, *pops, Ratio::new(*share_bp, 10_000))
        })
        .collect()
}

/// EEC 1958: voting weights, decision threshold 12, and budget shares.
const EEC: [(&str, &str, u64, u64); 6] = [
    ("FR", "France", 4, 2800),
    ("DE", "Germany", 4, 2800),
    ("IT", "Italy", 4, 2800),
    ("BE", "Belgium", 2, 790),
    ("NL", "Netherlands", 2, 790),
    ("LU", "Luxembourg", 1, 20),
];

/// The built-in datasets.
pub fn builtin_dataset(name: &str) -> Result<Dataset, DataError> {
    match name {
        "eu28" => Dataset::new(
            "eu28",
            "EU, 28 member states; Eurostat population projections and \
             European Parliament budget shares",
            eu28_members(),
            RuleFamily::Lisbon,
            Vec::new(),
            Ratio::from_integer(1),
        ),
        "eu27_postbrexit" => {
            let mut members = eu28_members();
            let uk = members
                .iter()
                .position(|m| m.code == "UK")
                .expect("UK in eu28");
            let uk = members.remove(uk);
            Dataset::new(
                "eu27_postbrexit",
                "EU without the United Kingdom; UK's budget share still \
                 counts towards the original 28-member budget",
                members,
                RuleFamily::Lisbon,
                vec![uk],
                Ratio::from_integer(1),
            )
        }
        "eu27_precroatia" => {
            let members = eu28_members()
                .into_iter()
                .filter(|m| m.code != "HR")
                .collect();
            Dataset::new(
                "eu27_precroatia",
                "EU before Croatia's accession; the budget base excludes \
                 Croatia's share since it was never part of this union",
                members,
                RuleFamily::Lisbon,
                Vec::new(),
                // 1 minus Croatia's 0.30% share
                Ratio::new(997, 1000),
            )
        }
        "eec1958" => {
            let members = EEC
                .iter()
                .map(|(code, name, weight, share_bp)| {
                    // populations never drive this rule family; carry the
                    // voting weight so every year column is positive
                    MemberState::new(code, name, [*weight; 3], Ratio::new(*share_bp, 10_000))
                })
                .collect();
            let weights = EEC
                .iter()
                .map(|(code, _, weight, _)| (code.to_string(), *weight))
                .collect();
            Dataset::new(
                "eec1958",
                "European Economic Community, 1958 Council of Ministers",
                members,
                RuleFamily::FixedWeights { weights, quota: 12 },
                Vec::new(),
                Ratio::from_integer(1),
            )
        }
        other => Err(DataError::UnknownDataset(other.to_string())),
    }
}

pub const CSV_HEADER: &str = "code,name,pop_2015,pop_2020,pop_2030,contribution_pct";

/// Parse a decimal percentage ("20.08") into an exact fraction of 1.
pub fn parse_percent(s: &str) -> Option<Ratio<u64>> {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let scale = 10u64.checked_pow(frac.len() as u32)?;
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac: u64 = if frac.is_empty() {
        0
    } else {
        frac.parse().ok()?
    };
    let numer = int.checked_mul(scale)?.checked_add(frac)?;
    Some(Ratio::new(numer, scale.checked_mul(100)?))
}

/// Render a share as the decimal percentage it was parsed from.
pub fn percent_string(share: Ratio<u64>) -> String {
    // shares are stored over 10000; two decimals are always exact
    let bp = share * Ratio::from_integer(10_000);
    debug_assert!(bp.is_integer());
    let bp = bp.to_integer();
    format!("{}.{:02}", bp / 100, bp % 100)
}

/// Load a Lisbon-rule dataset from CSV with the [`CSV_HEADER`] schema.
pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::Io(e.to_string()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_dataset_csv(&name, &text)
}

/// Parse the CSV schema from a string (the file body, header included).
pub fn parse_dataset_csv(name: &str, text: &str) -> Result<Dataset, DataError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(DataError::Parse {
                line: 1,
                reason: format!("expected header {CSV_HEADER:?}, got {header:?}"),
            })
        }
        None => {
            return Err(DataError::Parse {
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let mut members = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(DataError::Parse {
                line: lineno,
                reason: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let code = fields[0];
        if code.is_empty() {
            return Err(DataError::Parse {
                line: lineno,
                reason: "empty code".into(),
            });
        }
        let mut pops = [0u64; 3];
        for (j, p) in pops.iter_mut().enumerate() {
            *p = fields[2 + j].parse().map_err(|_| DataError::Parse {
                line: lineno,
                reason: format!("bad population {:?}", fields[2 + j]),
            })?;
            if *p == 0 {
                return Err(DataError::Parse {
                    line: lineno,
                    reason: format!("non-positive population for {code:?}"),
                });
            }
        }
        let share = parse_percent(fields[5]).ok_or_else(|| DataError::Parse {
            line: lineno,
            reason: format!("bad contribution percentage {:?}", fields[5]),
        })?;
        if members.iter().any(|m: &MemberState| m.code == code) {
            return Err(DataError::Parse {
                line: lineno,
                reason: format!("duplicate code {code:?}"),
            });
        }
        members.push(MemberState::new(code, fields[1], pops, share));
    }
    Dataset::new(
        name,
        "loaded from CSV",
        members,
        RuleFamily::Lisbon,
        Vec::new(),
        Ratio::from_integer(1),
    )
}

/// Serialize a dataset back to the CSV schema.
pub fn dataset_to_csv(dataset: &Dataset) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for m in dataset.members() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.code,
            m.name,
            m.population(Year::Y2015),
            m.population(Year::Y2020),
            m.population(Year::Y2030),
            percent_string(m.contribution_share),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_eu28_matches_source_table() {
        let ds = builtin_dataset("eu28").unwrap();
        assert_eq!(ds.members().len(), 28);
        let de = ds.member("DE").unwrap();
        assert_eq!(de.population(Year::Y2015), 807);
        assert_eq!(de.contribution_share, Ratio::new(2008, 10_000));
        assert_eq!(ds.population_total(Year::Y2015), 5082);
    }

    #[test]
    fn builtin_postbrexit_drops_uk_but_keeps_its_share() {
        let ds = builtin_dataset("eu27_postbrexit").unwrap();
        assert_eq!(ds.members().len(), 27);
        assert!(ds.member("UK").is_err());
        assert_eq!(ds.departed_share(), Ratio::new(882, 10_000));
        assert_eq!(ds.population_total(Year::Y2015), 4436);
    }

    #[test]
    fn builtin_eec_shares() {
        let ds = builtin_dataset("eec1958").unwrap();
        assert_eq!(
            ds.member("FR").unwrap().contribution_share,
            Ratio::new(28, 100)
        );
        assert_eq!(
            ds.member("LU").unwrap().contribution_share,
            Ratio::new(2, 1000)
        );
    }

    #[test]
    fn unknown_dataset_name() {
        assert_eq!(
            builtin_dataset("eu99"),
            Err(DataError::UnknownDataset("eu99".into()))
        );
    }

    #[test]
    fn csv_round_trip_equals_builtin() {
        let ds = builtin_dataset("eu28").unwrap();
        let csv = dataset_to_csv(&ds);
        let reloaded = parse_dataset_csv("eu28", &csv).unwrap();
        assert_eq!(reloaded.members(), ds.members());
    }

    #[test]
    fn csv_rejects_zero_population_with_line_number() {
        let text = format!("{CSV_HEADER}\nDE,Germany,807,806,798,20.08\nXX,Nowhere,0,1,1,0.5\n");
        match parse_dataset_csv("bad", &text) {
            Err(DataError::Parse { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("non-positive"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_duplicate_codes() {
        let text = format!("{CSV_HEADER}\nDE,Germany,807,806,798,20.08\nDE,Again,1,1,1,0.5\n");
        match parse_dataset_csv("bad", &text) {
            Err(DataError::Parse { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("duplicate"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn percent_parsing_is_exact() {
        assert_eq!(parse_percent("20.08"), Some(Ratio::new(2008, 10_000)));
        assert_eq!(parse_percent("0.2"), Some(Ratio::new(2, 1000)));
        assert_eq!(parse_percent("7.9"), Some(Ratio::new(79, 1000)));
        assert_eq!(parse_percent("x"), None);
        assert_eq!(percent_string(Ratio::new(2008, 10_000)), "20.08");
        assert_eq!(percent_string(Ratio::new(5, 10_000)), "0.05");
    }

    #[test]
    fn eu28_warning_notes_share_shortfall() {
        // the printed shares cover 89.75% of the budget
        let ds = builtin_dataset("eu28").unwrap();
        assert_eq!(ds.warnings().len(), 1);
    }
}
