use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{ActionLabel, GameTree, InfoSetId, PlayerId};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Probability distribution over the actions of one information set.
/// Entries are sorted by label and carry strictly positive weight.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionDist(Vec<(ActionLabel, Rational)>);

impl ActionDist {
    pub fn pure(label: ActionLabel) -> Self {
        ActionDist(vec![(label, Rational::one())])
    }

    pub fn uniform(labels: &[ActionLabel]) -> Self {
        let w = rational::ratio(1, labels.len() as i64);
        let mut entries: Vec<_> = labels.iter().map(|&l| (l, w.clone())).collect();
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        ActionDist(entries)
    }

    pub fn new(entries: Vec<(ActionLabel, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<ActionLabel, Rational> = BTreeMap::new();
        for (l, p) in entries {
            if p.is_negative() {
                return Err(Error::InvalidProfile(format!(
                    "negative probability for action {l}"
                )));
            }
            *merged.entry(l).or_insert_with(Rational::zero) += p;
        }
        let total = merged.values().fold(Rational::zero(), |a, b| a + b);
        if !total.is_one() {
            return Err(Error::InvalidProfile(format!(
                "probabilities sum to {}",
                rational::format(&total)
            )));
        }
        Ok(ActionDist(
            merged.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        ))
    }

    pub fn entries(&self) -> &[(ActionLabel, Rational)] {
        &self.0
    }

    pub fn is_pure(&self) -> bool {
        self.0.len() == 1
    }

    pub fn pure_action(&self) -> Option<ActionLabel> {
        self.is_pure().then(|| self.0[0].0)
    }

    pub fn prob(&self, label: ActionLabel) -> Rational {
        self.0
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = ActionLabel> + '_ {
        self.0.iter().map(|(l, _)| *l)
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &ActionDist, weight: &Rational) -> ActionDist {
        let rest = Rational::one() - weight;
        let mut entries: Vec<_> = self.0.iter().map(|(l, p)| (*l, p * weight)).collect();
        entries.extend(other.0.iter().map(|(l, p)| (*l, p * &rest)));
        ActionDist::new(entries).expect("convex combination of distributions")
    }
}

impl fmt::Display for ActionDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.pure_action() {
            return write!(f, "{l}");
        }
        let parts: Vec<_> = self
            .0
            .iter()
            .map(|(l, p)| format!("{l}:{}", rational::format(p)))
            .collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

impl Serialize for ActionDist {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, String> = self
            .0
            .iter()
            .map(|(l, p)| (l.to_string(), rational::format(p)))
            .collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ActionDist {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let map = BTreeMap::<String, String>::deserialize(d)?;
        let mut entries = Vec::new();
        for (k, v) in map {
            let label: ActionLabel = k.parse().map_err(D::Error::custom)?;
            entries.push((label, rational::parse(&v).map_err(D::Error::custom)?));
        }
        ActionDist::new(entries).map_err(D::Error::custom)
    }
}

/// Behavioral strategy profile: one distribution per information set. The
/// owner of each set is taken from the game.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile {
    dists: BTreeMap<InfoSetId, ActionDist>,
}

impl StrategyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pure(actions: impl IntoIterator<Item = (InfoSetId, ActionLabel)>) -> Self {
        StrategyProfile {
            dists: actions
                .into_iter()
                .map(|(s, l)| (s, ActionDist::pure(l)))
                .collect(),
        }
    }

    pub fn set(&mut self, info_set: InfoSetId, dist: ActionDist) {
        self.dists.insert(info_set, dist);
    }

    pub fn set_pure(&mut self, info_set: InfoSetId, label: ActionLabel) {
        self.set(info_set, ActionDist::pure(label));
    }

    pub fn get(&self, info_set: InfoSetId) -> Option<&ActionDist> {
        self.dists.get(&info_set)
    }

    pub fn pure_action(&self, info_set: InfoSetId) -> Option<ActionLabel> {
        self.dists.get(&info_set).and_then(|d| d.pure_action())
    }

    pub fn iter(&self) -> impl Iterator<Item = (InfoSetId, &ActionDist)> {
        self.dists.iter().map(|(&s, d)| (s, d))
    }

    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }

    pub fn is_pure(&self) -> bool {
        self.dists.values().all(ActionDist::is_pure)
    }

    /// Strategy of one player, as a map over that player's information sets.
    pub fn for_player(&self, game: &GameTree, player: PlayerId) -> BTreeMap<InfoSetId, ActionDist> {
        self.dists
            .iter()
            .filter(|(s, _)| game.info_set(**s).is_some_and(|i| i.owner == player))
            .map(|(&s, d)| (s, d.clone()))
            .collect()
    }

    /// Replaces the listed information sets and keeps everything else.
    pub fn with_overrides<'a>(
        &self,
        overrides: impl IntoIterator<Item = (&'a InfoSetId, &'a ActionLabel)>,
    ) -> StrategyProfile {
        let mut out = self.clone();
        for (&s, &l) in overrides {
            out.set_pure(s, l);
        }
        out
    }

    pub fn extend(&mut self, other: &StrategyProfile) {
        for (s, d) in other.iter() {
            self.dists.insert(s, d.clone());
        }
    }

    /// Checks support and completeness against `game`.
    pub fn validate_for(&self, game: &GameTree) -> Result<()> {
        for (&s, d) in &self.dists {
            let set = game
                .info_set(s)
                .ok_or_else(|| Error::InvalidProfile(format!("unknown information set {s}")))?;
            if let Some(bad) = d.support().find(|l| !set.labels.contains(l)) {
                return Err(Error::InvalidProfile(format!(
                    "action {bad} not available at information set {s}"
                )));
            }
        }
        if let Some((&s, _)) = game
            .info_sets()
            .iter()
            .find(|(s, _)| !self.dists.contains_key(s))
        {
            return Err(Error::MissingAssignment(s));
        }
        Ok(())
    }
}
