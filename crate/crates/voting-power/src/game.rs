//! The game model: players, quota rules and the winning/blocking predicates.
//!
//! A [`VotingGame`] is a conjunction of weighted quota rules over a fixed
//! player list, optionally extended with the EU Council's blocking-minority
//! exception. All threshold comparisons are exact integer or rational
//! comparisons; floating point never decides a verdict.

use num_rational::Ratio;
use thiserror::Error;

/// Errors raised by game construction and coalition lookup.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("too many players: {0} (limit 64)")]
    TooManyPlayers(usize),
    #[error("rule {rule} has {got} weights for {expected} players")]
    WeightLengthMismatch {
        rule: usize,
        got: usize,
        expected: usize,
    },
    #[error("fractional threshold must lie in (0, 1]")]
    FractionOutOfRange,
    #[error("absolute threshold {threshold} outside [1, {total}]")]
    AbsoluteOutOfRange { threshold: u64, total: u64 },
    #[error("unknown player id {0:?}")]
    UnknownPlayer(String),
    #[error("duplicate player id {0:?}")]
    DuplicatePlayer(String),
}

/// A coalition as a bit set over the game's player ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_bits(bits: u64) -> Coalition {
        Coalition(bits)
    }

    pub fn full(n: usize) -> Coalition {
        debug_assert!(n <= 64);
        if n == 64 {
            Coalition(u64::MAX)
        } else {
            Coalition((1u64 << n) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// Coalition of exactly the given player indices.
    pub fn of(players: &[usize]) -> Coalition {
        players.iter().fold(Coalition::EMPTY, |c, &p| c.with(p))
    }

    pub fn contains(self, player: usize) -> bool {
        self.0 >> player & 1 == 1
    }

    pub fn with(self, player: usize) -> Coalition {
        Coalition(self.0 | 1 << player)
    }

    pub fn without(self, player: usize) -> Coalition {
        Coalition(self.0 & !(1 << player))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Complement relative to an `n`-player game.
    pub fn complement(self, n: usize) -> Coalition {
        Coalition(Self::full(n).0 & !self.0)
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

/// How a quota rule's threshold is stated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Threshold {
    /// A fixed weight that must be reached (EEC 1958: 12).
    Absolute(u64),
    /// A fraction of the rule's total weight (Lisbon: 55/100, 65/100).
    Fraction(Ratio<u64>),
}

/// One weighted quota: a coalition satisfies the rule when its cumulative
/// weight meets or exceeds the threshold.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuotaRule {
    pub weights: Vec<u64>,
    pub threshold: Threshold,
}

impl QuotaRule {
    pub fn new(weights: Vec<u64>, threshold: Threshold) -> QuotaRule {
        QuotaRule { weights, threshold }
    }

    /// A member-count rule: every player carries weight 1.
    pub fn member_count(n: usize, quota: Ratio<u64>) -> QuotaRule {
        QuotaRule::new(vec![1; n], Threshold::Fraction(quota))
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    /// True when every player carries weight 1, so the rule only counts heads.
    pub fn is_count_rule(&self) -> bool {
        self.weights.iter().all(|&w| w == 1)
    }

    /// Smallest cumulative weight that satisfies the rule.
    pub fn required_weight(&self) -> u64 {
        match &self.threshold {
            Threshold::Absolute(t) => *t,
            Threshold::Fraction(q) => {
                // ceil(q * total) by integer division
                let total = self.total_weight() as u128;
                let num = *q.numer() as u128 * total;
                let den = *q.denom() as u128;
                num.div_ceil(den) as u64
            }
        }
    }

    /// Exact meets-or-exceeds check for a cumulative weight.
    pub fn is_met(&self, coalition_weight: u64) -> bool {
        match &self.threshold {
            Threshold::Absolute(t) => coalition_weight >= *t,
            Threshold::Fraction(q) => {
                weight_threshold_met(self.total_weight(), *q, coalition_weight)
            }
        }
    }

    fn validate(&self, index: usize, n: usize) -> Result<(), GameError> {
        if self.weights.len() != n {
            return Err(GameError::WeightLengthMismatch {
                rule: index,
                got: self.weights.len(),
                expected: n,
            });
        }
        match &self.threshold {
            Threshold::Fraction(q) => {
                if *q.numer() == 0 || q > &Ratio::from_integer(1) {
                    return Err(GameError::FractionOutOfRange);
                }
            }
            Threshold::Absolute(t) => {
                if *t < 1 || *t > self.total_weight() {
                    return Err(GameError::AbsoluteOutOfRange {
                        threshold: *t,
                        total: self.total_weight(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Smallest member count `m` with `m >= quota * n`, raised to `floor` when one
/// is set. Computed by exact rational comparison.
pub fn member_threshold(n: usize, quota: Ratio<u64>, floor: Option<usize>) -> usize {
    debug_assert!(n >= 1 && *quota.numer() > 0 && quota <= Ratio::from_integer(1));
    let num = *quota.numer() as u128 * n as u128;
    let den = *quota.denom() as u128;
    let m = num.div_ceil(den) as usize;
    match floor {
        Some(f) if f > m => f,
        _ => m,
    }
}

/// True iff `coalition_weight * denom(quota) >= numer(quota) * total`.
pub fn weight_threshold_met(total: u64, quota: Ratio<u64>, coalition_weight: u64) -> bool {
    coalition_weight as u128 * *quota.denom() as u128 >= *quota.numer() as u128 * total as u128
}

/// A simple voting game: all quota rules must hold for a coalition to win,
/// unless the blocking-minority exception applies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VotingGame {
    players: Vec<String>,
    rules: Vec<QuotaRule>,
    blocking_minority_min: Option<usize>,
    member_floor: Option<usize>,
}

impl VotingGame {
    pub fn new(
        players: Vec<String>,
        rules: Vec<QuotaRule>,
        blocking_minority_min: Option<usize>,
        member_floor: Option<usize>,
    ) -> Result<VotingGame, GameError> {
        let n = players.len();
        if n == 0 {
            return Err(GameError::NoPlayers);
        }
        if n > 64 {
            return Err(GameError::TooManyPlayers(n));
        }
        for (i, p) in players.iter().enumerate() {
            if players[..i].contains(p) {
                return Err(GameError::DuplicatePlayer(p.clone()));
            }
        }
        for (i, rule) in rules.iter().enumerate() {
            rule.validate(i, n)?;
        }
        Ok(VotingGame {
            players,
            rules,
            blocking_minority_min,
            member_floor,
        })
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn rules(&self) -> &[QuotaRule] {
        &self.rules
    }

    pub fn blocking_minority_min(&self) -> Option<usize> {
        self.blocking_minority_min
    }

    pub fn member_floor(&self) -> Option<usize> {
        self.member_floor
    }

    pub fn player_index(&self, id: &str) -> Result<usize, GameError> {
        self.players
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| GameError::UnknownPlayer(id.to_string()))
    }

    /// Build a coalition from player ids, rejecting unknown ids.
    pub fn coalition_of<I, S>(&self, ids: I) -> Result<Coalition, GameError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut c = Coalition::EMPTY;
        for id in ids {
            c = c.with(self.player_index(id.as_ref())?);
        }
        Ok(c)
    }

    /// Minimum member count a coalition needs to satisfy every count rule
    /// (and the floor, when set). Zero when no count rule applies.
    pub fn member_count_requirement(&self) -> usize {
        let mut req = self.member_floor.unwrap_or(0);
        for rule in &self.rules {
            if rule.is_count_rule() {
                req = req.max(rule.required_weight() as usize);
            }
        }
        req
    }

    fn rule_weight(&self, rule: &QuotaRule, coalition: Coalition) -> u64 {
        coalition.members().map(|i| rule.weights[i]).sum()
    }

    /// All quota rules hold (no blocking-minority exception).
    pub fn quotas_met(&self, coalition: Coalition) -> bool {
        if coalition.len() < self.member_floor.unwrap_or(0) {
            return false;
        }
        self.rules
            .iter()
            .all(|rule| rule.is_met(self.rule_weight(rule, coalition)))
    }

    /// The winning predicate. A coalition wins when every quota rule holds,
    /// or when the blocking-minority exception applies: the opposition is too
    /// small to form a valid blocking minority while the coalition still
    /// clears the member-count requirement.
    pub fn is_winning(&self, coalition: Coalition) -> bool {
        debug_assert!(coalition.bits() & !Coalition::full(self.player_count()).bits() == 0);
        if self.quotas_met(coalition) {
            return true;
        }
        if let Some(min) = self.blocking_minority_min {
            let k = coalition.len();
            let opposition = self.player_count() - k;
            return k >= 1 && k >= self.member_count_requirement() && opposition < min;
        }
        false
    }

    /// A coalition blocks iff its complement cannot win.
    pub fn is_blocking(&self, coalition: Coalition) -> bool {
        !self.is_winning(coalition.complement(self.player_count()))
    }

    /// Properness report: ids of a disjoint winning pair, if any exists.
    /// Exhaustive, so only sensible on small games.
    pub fn find_disjoint_winning_pair(&self) -> Option<(Coalition, Coalition)> {
        let n = self.player_count();
        assert!(n <= 20, "properness check is exhaustive; n must be <= 20");
        let full = Coalition::full(n).bits();
        for bits in 0..=full {
            let s = Coalition::from_bits(bits);
            if self.is_winning(s) && self.is_winning(s.complement(n)) {
                return Some((s, s.complement(n)));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    fn eec_game() -> VotingGame {
        VotingGame::new(
            vec!["FR", "DE", "IT", "BE", "NL", "LU"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec![QuotaRule::new(
                vec![4, 4, 4, 2, 2, 1],
                Threshold::Absolute(12),
            )],
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn member_threshold_matches_lisbon_counts() {
        assert_eq!(member_threshold(28, ratio(55, 100), None), 16);
        assert_eq!(member_threshold(27, ratio(55, 100), None), 15);
        assert_eq!(member_threshold(26, ratio(55, 100), None), 15);
        assert_eq!(member_threshold(25, ratio(55, 100), None), 14);
        assert_eq!(member_threshold(1, ratio(55, 100), None), 1);
    }

    #[test]
    fn member_threshold_respects_floor() {
        assert_eq!(member_threshold(25, ratio(55, 100), Some(15)), 15);
        assert_eq!(member_threshold(28, ratio(55, 100), Some(15)), 16);
    }

    #[test]
    fn member_threshold_is_unique_rational_boundary() {
        // m is the unique integer with (m-1)/n < q <= m/n
        for n in 1..=40usize {
            for (num, den) in [(55u64, 100u64), (65, 100), (1, 2), (2, 3), (1, 1)] {
                let q = ratio(num, den);
                let m = member_threshold(n, q, None);
                assert!(Ratio::new((m as u64) * den, den * n as u64) >= q * Ratio::new(den, den));
                // exact comparisons, scaled to u64 rationals
                let q = (num as u128, den as u128);
                assert!((m as u128) * q.1 >= q.0 * n as u128);
                if m > 1 {
                    assert!((m as u128 - 1) * q.1 < q.0 * n as u128);
                }
            }
        }
    }

    #[test]
    fn weight_threshold_is_exact() {
        assert!(weight_threshold_met(4436, ratio(65, 100), 2884));
        assert!(!weight_threshold_met(4436, ratio(65, 100), 2883));
        assert!(weight_threshold_met(4436, ratio(65, 100), 4436));
    }

    #[test]
    fn weight_threshold_invariant_under_common_scaling() {
        for scale in [1u64, 2, 7, 100] {
            for w in 0..=50u64 {
                assert_eq!(
                    weight_threshold_met(50, ratio(65, 100), w),
                    weight_threshold_met(50 * scale, ratio(65, 100), w * scale)
                );
            }
        }
    }

    #[test]
    fn eec_winning_examples() {
        let g = eec_game();
        let fr_de_it = g.coalition_of(["FR", "DE", "IT"]).unwrap();
        assert!(g.is_winning(fr_de_it));
        let benelux = g.coalition_of(["BE", "NL", "LU"]).unwrap();
        assert!(!g.is_winning(benelux));
        assert!(!g.is_winning(Coalition::EMPTY));
        assert!(g.is_winning(Coalition::full(6)));
    }

    #[test]
    fn unknown_player_is_an_error() {
        let g = eec_game();
        assert_eq!(
            g.coalition_of(["XX"]),
            Err(GameError::UnknownPlayer("XX".into()))
        );
    }

    #[test]
    fn full_set_always_blocks() {
        let g = eec_game();
        assert!(g.is_blocking(Coalition::full(6)));
    }

    #[test]
    fn eec_is_proper() {
        assert!(eec_game().find_disjoint_winning_pair().is_none());
    }

    #[test]
    fn blocking_exception_only_adds_winning_coalitions() {
        // exhaustive on a 10-player Lisbon-style game
        let players: Vec<String> = (0..10).map(|i| format!("P{i}")).collect();
        let weights = vec![50, 30, 20, 10, 8, 6, 5, 4, 2, 1];
        let rules = vec![
            QuotaRule::member_count(10, ratio(55, 100)),
            QuotaRule::new(weights, Threshold::Fraction(ratio(65, 100))),
        ];
        let without = VotingGame::new(players.clone(), rules.clone(), None, None).unwrap();
        let with = VotingGame::new(players, rules, Some(4), None).unwrap();
        for bits in 0..1u64 << 10 {
            let c = Coalition::from_bits(bits);
            if without.is_winning(c) {
                assert!(with.is_winning(c));
            }
        }
        assert!(!with.is_winning(Coalition::EMPTY));
    }

    #[test]
    fn monotone_on_random_chains() {
        // deterministic pseudo-random chains, no rng dependency needed here
        let players: Vec<String> = (0..12).map(|i| format!("P{i}")).collect();
        let weights: Vec<u64> = (0..12).map(|i| (i as u64 * 7 + 3) % 19 + 1).collect();
        let g = VotingGame::new(
            players,
            vec![
                QuotaRule::member_count(12, ratio(55, 100)),
                QuotaRule::new(weights, Threshold::Fraction(ratio(65, 100))),
            ],
            Some(4),
            None,
        )
        .unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..2000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let s = Coalition::from_bits(state & 0xfff);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let t = Coalition::from_bits(s.bits() | (state & 0xfff));
            if g.is_winning(s) {
                assert!(g.is_winning(t), "monotonicity violated: {s:?} -> {t:?}");
            }
        }
    }
}
