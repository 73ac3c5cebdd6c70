//! Discretized popsicle games: `n` vendors post prices from a grid, then a
//! discounting buyer who sees every price picks a vendor and a side payment.
//!
//! Player 0 is the buyer, players `1..=n` the vendors. Vendor `j` owns the
//! single information set `j - 1`, spanning every node at its depth. Buyer
//! nodes are singletons, one per price vector.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    ActionDist, ActionLabel, GameBuilder, GameTree, InfoSetId, NodeId, PlayerId, StrategyProfile,
    UtilityVector,
};
use crate::rational::{self, Rational};

pub const DEFAULT_MAX_NODES: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiscountMode {
    /// Buyer keeps `(1 - p - q) * d^(i-1)` from vendor `i`.
    Multiplicative,
    /// Buyer keeps `1 - p - q - kappa * i * d`; not clamped at zero.
    Linear { kappa: Rational },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopsicleParams {
    pub n: usize,
    pub d: Rational,
    pub alpha: Rational,
    pub prices: Vec<Rational>,
    pub q_grid: Vec<Rational>,
    pub discount: DiscountMode,
    pub side_payments: bool,
}

/// A buyer action: the chosen vendor (1-based) and the side payment.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BuyerChoice {
    pub vendor: usize,
    pub q: Rational,
}

impl BuyerChoice {
    pub fn new(vendor: usize, q: Rational) -> Self {
        BuyerChoice { vendor, q }
    }
}

impl std::fmt::Display for BuyerChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(i*={}, q={})", self.vendor, rational::format(&self.q))
    }
}

pub type BuyerDist = Vec<(BuyerChoice, Rational)>;

/// Prices plus a buyer policy keyed by the observed price vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopsicleProfile {
    pub prices: Vec<Rational>,
    pub buyer_policy: BTreeMap<Vec<Rational>, BuyerDist>,
}

impl PopsicleParams {
    /// Multiplicative discounting with side payments enabled.
    pub fn new(
        n: usize,
        d: Rational,
        alpha: Rational,
        prices: Vec<Rational>,
        q_grid: Vec<Rational>,
    ) -> Result<Self> {
        let params = PopsicleParams {
            n,
            d,
            alpha,
            prices,
            q_grid,
            discount: DiscountMode::Multiplicative,
            side_payments: true,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn without_side_payments(mut self) -> Self {
        self.side_payments = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.n < 2 {
            return bad(format!("need at least 2 vendors, got {}", self.n));
        }
        if !rational::in_unit_interval(&self.d) {
            return bad(format!("discount d={} outside [0,1]", rational::format(&self.d)));
        }
        if self.alpha.is_negative() || self.alpha >= rational::one() {
            return bad(format!("tax rate alpha={} outside [0,1)", rational::format(&self.alpha)));
        }
        check_grid("price grid", &self.prices, true)?;
        check_grid("side-payment grid", &self.q_grid, false)?;
        if let DiscountMode::Linear { kappa } = &self.discount {
            if !kappa.is_positive() {
                return bad("linear discount requires kappa > 0".into());
            }
        }
        Ok(())
    }

    pub fn vendor(&self, j: usize) -> PlayerId {
        PlayerId(j)
    }

    /// Side-payment values the buyer may actually choose.
    pub fn effective_q(&self) -> Vec<Rational> {
        if self.side_payments {
            self.q_grid.clone()
        } else {
            vec![rational::zero()]
        }
    }

    pub fn vendor_info_set(&self, j: usize) -> InfoSetId {
        (j - 1) as InfoSetId
    }

    pub fn price_label(&self, price: &Rational) -> Option<ActionLabel> {
        self.prices
            .iter()
            .position(|p| p == price)
            .map(|i| i as ActionLabel)
    }

    pub fn price_of(&self, label: ActionLabel) -> &Rational {
        &self.prices[label as usize]
    }

    pub fn buyer_label(&self, choice: &BuyerChoice) -> Option<ActionLabel> {
        let qs = self.effective_q();
        let qi = qs.iter().position(|q| *q == choice.q)?;
        if choice.vendor == 0 || choice.vendor > self.n {
            return None;
        }
        Some(((choice.vendor - 1) * qs.len() + qi) as ActionLabel)
    }

    pub fn buyer_choice(&self, label: ActionLabel) -> BuyerChoice {
        let qs = self.effective_q();
        let l = label as usize;
        BuyerChoice::new(l / qs.len() + 1, qs[l % qs.len()].clone())
    }

    /// Index of a price vector in mixed radix, vendor 1 most significant.
    pub fn price_vector_index(&self, prices: &[Rational]) -> Result<usize> {
        if prices.len() != self.n {
            return Err(Error::InvalidParams(format!(
                "expected {} prices, got {}",
                self.n,
                prices.len()
            )));
        }
        let mut idx = 0;
        for p in prices {
            let l = self
                .price_label(p)
                .ok_or_else(|| Error::InvalidParams(format!("price {} off grid", rational::format(p))))?;
            idx = idx * self.prices.len() + l as usize;
        }
        Ok(idx)
    }

    pub fn buyer_info_set(&self, prices: &[Rational]) -> Result<InfoSetId> {
        Ok((self.n + self.price_vector_index(prices)?) as InfoSetId)
    }

    /// Every price vector in mixed-radix order.
    pub fn price_vectors(&self) -> Vec<Vec<Rational>> {
        let k = self.prices.len();
        let total = k.pow(self.n as u32);
        (0..total)
            .map(|mut idx| {
                let mut v = vec![rational::zero(); self.n];
                for slot in v.iter_mut().rev() {
                    *slot = self.prices[idx % k].clone();
                    idx /= k;
                }
                v
            })
            .collect()
    }

    pub fn buyer_utility(&self, vendor: usize, price: &Rational, q: &Rational) -> Rational {
        let net = rational::one() - price - q;
        match &self.discount {
            DiscountMode::Multiplicative => net * rational::pow(&self.d, vendor - 1),
            DiscountMode::Linear { kappa } => {
                net - kappa * rational::int(vendor as i64) * &self.d
            }
        }
    }

    pub fn vendor_utility(&self, price: &Rational, q: &Rational) -> Rational {
        (rational::one() - &self.alpha) * price + q
    }

    /// Utility vector of the outcome `(prices, choice)`.
    pub fn outcome(&self, prices: &[Rational], choice: &BuyerChoice) -> UtilityVector {
        let mut u = UtilityVector::zeros(self.n + 1);
        let p = &prices[choice.vendor - 1];
        u.0[0] = self.buyer_utility(choice.vendor, p, &choice.q);
        u.0[choice.vendor] = self.vendor_utility(p, &choice.q);
        u
    }

    /// Decision nodes and leaves of the built game.
    pub fn node_counts(&self) -> (u128, u128) {
        let k = self.prices.len() as u128;
        let vendor_nodes: u128 = (0..self.n as u32).map(|e| k.pow(e)).sum();
        let buyer_nodes = k.pow(self.n as u32);
        let leaves = buyer_nodes * (self.n as u128) * self.effective_q().len() as u128;
        (vendor_nodes + buyer_nodes, leaves)
    }
}

fn check_grid(name: &str, grid: &[Rational], needs_one: bool) -> Result<()> {
    if grid.iter().any(|v| !rational::in_unit_interval(v)) {
        return Err(Error::InvalidParams(format!("{name} must lie in [0,1]")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(format!(
            "{name} must be sorted and duplicate-free"
        )));
    }
    if !grid.iter().any(Zero::is_zero) {
        return Err(Error::InvalidParams(format!("{name} must contain 0")));
    }
    if needs_one && !grid.contains(&rational::one()) {
        return Err(Error::InvalidParams(format!("{name} must contain 1")));
    }
    Ok(())
}

pub fn build_popsicle(params: &PopsicleParams) -> Result<GameTree> {
    build_popsicle_with_budget(params, DEFAULT_MAX_NODES)
}

pub fn build_popsicle_with_budget(params: &PopsicleParams, max_nodes: usize) -> Result<GameTree> {
    params.validate()?;
    let (decisions, leaves) = params.node_counts();
    let total = decisions + leaves;
    if total > max_nodes as u128 {
        return Err(Error::budget("popsicle game nodes", total, max_nodes));
    }
    let mut b = GameBuilder::new();
    let mut prefix = Vec::with_capacity(params.n);
    let root = build_level(params, &mut b, &mut prefix);
    GameTree::build(b, root, params.n + 1)
}

fn build_level(params: &PopsicleParams, b: &mut GameBuilder, prefix: &mut Vec<usize>) -> NodeId {
    let depth = prefix.len();
    if depth == params.n {
        let prices: Vec<Rational> = prefix.iter().map(|&i| params.prices[i].clone()).collect();
        let qs = params.effective_q();
        let mut actions = Vec::with_capacity(params.n * qs.len());
        for vendor in 1..=params.n {
            for (qi, q) in qs.iter().enumerate() {
                let choice = BuyerChoice::new(vendor, q.clone());
                let leaf = b.leaf(params.outcome(&prices, &choice));
                actions.push((((vendor - 1) * qs.len() + qi) as ActionLabel, leaf));
            }
        }
        let set = params
            .buyer_info_set(&prices)
            .expect("prefix prices are on the grid");
        return b.decision(PlayerId::BUYER, set, actions);
    }
    let mut actions = Vec::with_capacity(params.prices.len());
    for i in 0..params.prices.len() {
        prefix.push(i);
        let child = build_level(params, b, prefix);
        prefix.pop();
        actions.push((i as ActionLabel, child));
    }
    b.decision(
        PlayerId(depth + 1),
        params.vendor_info_set(depth + 1),
        actions,
    )
}

/// Exact maximizers of the buyer's utility over every `(vendor, q)` pair.
/// With positive discount weights this is always a set of `q = 0` choices.
pub fn buyer_best_response(params: &PopsicleParams, prices: &[Rational]) -> Vec<BuyerChoice> {
    let mut best: Option<Rational> = None;
    let mut arg = Vec::new();
    for vendor in 1..=params.n {
        for q in params.effective_q() {
            let u = params.buyer_utility(vendor, &prices[vendor - 1], &q);
            match &best {
                Some(b) if u < *b => {}
                Some(b) if u == *b => arg.push(BuyerChoice::new(vendor, q)),
                _ => {
                    best = Some(u);
                    arg = vec![BuyerChoice::new(vendor, q)];
                }
            }
        }
    }
    arg
}

pub fn evaluate_profile(params: &PopsicleParams, profile: &PopsicleProfile) -> Result<UtilityVector> {
    params.price_vector_index(&profile.prices)?;
    let dist = profile.buyer_policy.get(&profile.prices).ok_or_else(|| {
        Error::InvalidProfile("buyer policy has no entry for the posted prices".into())
    })?;
    check_buyer_dist(params, dist)?;
    let mut u = UtilityVector::zeros(params.n + 1);
    for (choice, prob) in dist {
        u.add_scaled(&params.outcome(&profile.prices, choice), prob);
    }
    Ok(u)
}

fn check_buyer_dist(params: &PopsicleParams, dist: &BuyerDist) -> Result<()> {
    let mut total = rational::zero();
    for (choice, prob) in dist {
        if params.buyer_label(choice).is_none() {
            return Err(Error::InvalidProfile(format!("buyer choice {choice} off grid")));
        }
        if prob.is_negative() {
            return Err(Error::InvalidProfile("negative probability".into()));
        }
        total += prob;
    }
    if total != rational::one() {
        return Err(Error::InvalidProfile("buyer distribution does not sum to 1".into()));
    }
    Ok(())
}

impl PopsicleProfile {
    /// Prices with an on-path buyer distribution; every other price vector
    /// gets the first exact best response.
    pub fn with_best_response_policy(
        params: &PopsicleParams,
        prices: Vec<Rational>,
        on_path: BuyerDist,
    ) -> Result<Self> {
        params.price_vector_index(&prices)?;
        let mut buyer_policy = BTreeMap::new();
        for v in params.price_vectors() {
            let first = buyer_best_response(params, &v).remove(0);
            buyer_policy.insert(v, vec![(first, rational::one())]);
        }
        buyer_policy.insert(prices.clone(), on_path);
        Ok(PopsicleProfile {
            prices,
            buyer_policy,
        })
    }

    pub fn to_strategy_profile(&self, params: &PopsicleParams) -> Result<StrategyProfile> {
        let mut sp = StrategyProfile::new();
        for (j, p) in self.prices.iter().enumerate() {
            let l = params
                .price_label(p)
                .ok_or_else(|| Error::InvalidProfile(format!("price {} off grid", rational::format(p))))?;
            sp.set_pure(params.vendor_info_set(j + 1), l);
        }
        for v in params.price_vectors() {
            let set = params.buyer_info_set(&v)?;
            let dist = self
                .buyer_policy
                .get(&v)
                .ok_or(Error::MissingAssignment(set))?;
            check_buyer_dist(params, dist)?;
            let entries = dist
                .iter()
                .map(|(c, p)| (params.buyer_label(c).expect("checked"), p.clone()))
                .collect();
            sp.set(set, ActionDist::new(entries)?);
        }
        Ok(sp)
    }

    /// Reads prices and the full buyer policy back from a game profile.
    pub fn from_strategy_profile(params: &PopsicleParams, sp: &StrategyProfile) -> Result<Self> {
        let mut prices = Vec::with_capacity(params.n);
        for j in 1..=params.n {
            let set = params.vendor_info_set(j);
            let l = sp.pure_action(set).ok_or(Error::NotPure(set))?;
            prices.push(params.price_of(l).clone());
        }
        let mut buyer_policy = BTreeMap::new();
        for v in params.price_vectors() {
            let set = params.buyer_info_set(&v)?;
            if let Some(dist) = sp.get(set) {
                let entries = dist
                    .entries()
                    .iter()
                    .map(|(l, p)| (params.buyer_choice(*l), p.clone()))
                    .collect();
                buyer_policy.insert(v, entries);
            }
        }
        Ok(PopsicleProfile {
            prices,
            buyer_policy,
        })
    }

    pub fn on_path(&self) -> Option<&BuyerDist> {
        self.buyer_policy.get(&self.prices)
    }
}

/// The closed-form pure equilibrium without commitments.
///
/// When the first two vendors are equally attractive at price 0 every vendor
/// prices at 0 and the buyer mixes uniformly over the tied vendors. Otherwise
/// vendor 1 charges exactly its positional advantage over vendor 2
/// (`1 - d` under multiplicative discounting), vendor 2 charges 0, later
/// vendors charge 1 and the buyer takes vendor 1.
pub fn vanilla_equilibrium(params: &PopsicleParams) -> Result<PopsicleProfile> {
    params.validate()?;
    let zero = rational::zero();
    let first = params.buyer_utility(1, &zero, &zero);
    let second = params.buyer_utility(2, &zero, &zero);
    if first == second {
        let prices = vec![zero.clone(); params.n];
        let ties = buyer_best_response(params, &prices);
        let w = rational::ratio(1, ties.len() as i64);
        let on_path = ties.into_iter().map(|c| (c, w.clone())).collect();
        return PopsicleProfile::with_best_response_policy(params, prices, on_path);
    }
    let p1 = first - second;
    if params.price_label(&p1).is_none() {
        return Err(Error::GridIncompatible(format!(
            "vendor 1's equilibrium price {} is not on the price grid",
            rational::format(&p1)
        )));
    }
    let mut prices = vec![rational::one(); params.n];
    prices[0] = p1;
    prices[1] = zero.clone();
    PopsicleProfile::with_best_response_policy(
        params,
        prices,
        vec![(BuyerChoice::new(1, zero), rational::one())],
    )
}

/// On-disk parameter document. Rationals are `a/b` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub n: usize,
    #[serde(with = "rational::serde_str")]
    pub d: Rational,
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    #[serde(with = "rational::serde_vec")]
    pub prices: Vec<Rational>,
    #[serde(with = "rational::serde_vec")]
    pub q_grid: Vec<Rational>,
    #[serde(default = "default_mode")]
    pub discount_mode: String,
    #[serde(default, with = "rational::serde_opt", skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Rational>,
    #[serde(default = "default_true")]
    pub side_payments: bool,
}

fn default_mode() -> String {
    "multiplicative".into()
}

fn default_true() -> bool {
    true
}

impl From<&PopsicleParams> for ParamsDoc {
    fn from(p: &PopsicleParams) -> Self {
        let (discount_mode, kappa) = match &p.discount {
            DiscountMode::Multiplicative => ("multiplicative".to_string(), None),
            DiscountMode::Linear { kappa } => ("linear".to_string(), Some(kappa.clone())),
        };
        ParamsDoc {
            n: p.n,
            d: p.d.clone(),
            alpha: p.alpha.clone(),
            prices: p.prices.clone(),
            q_grid: p.q_grid.clone(),
            discount_mode,
            kappa,
            side_payments: p.side_payments,
        }
    }
}

impl TryFrom<ParamsDoc> for PopsicleParams {
    type Error = Error;

    fn try_from(doc: ParamsDoc) -> Result<Self> {
        let discount = match doc.discount_mode.as_str() {
            "multiplicative" => DiscountMode::Multiplicative,
            "linear" => DiscountMode::Linear {
                kappa: doc
                    .kappa
                    .ok_or_else(|| Error::InvalidParams("linear mode needs kappa".into()))?,
            },
            other => {
                return Err(Error::InvalidParams(format!("unknown discount mode `{other}`")))
            }
        };
        let params = PopsicleParams {
            n: doc.n,
            d: doc.d,
            alpha: doc.alpha,
            prices: doc.prices,
            q_grid: doc.q_grid,
            discount,
            side_payments: doc.side_payments,
        };
        params.validate()?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{expected_utility, play};
    use crate::rational::{int, ratio};

    fn grid(values: &[(i64, i64)]) -> Vec<Rational> {
        values.iter().map(|&(a, b)| ratio(a, b)).collect()
    }

    fn params(n: usize, d: Rational, alpha: Rational, prices: &[(i64, i64)], qs: &[(i64, i64)]) -> PopsicleParams {
        PopsicleParams::new(n, d, alpha, grid(prices), grid(qs)).unwrap()
    }

    fn three_prices() -> Vec<(i64, i64)> {
        vec![(0, 1), (1, 2), (1, 1)]
    }

    #[test]
    fn node_and_leaf_counts() {
        let p = params(2, ratio(1, 2), ratio(1, 4), &three_prices(), &[(0, 1), (1, 1)]);
        let g = build_popsicle(&p).unwrap();
        assert_eq!(g.decision_count(), 1 + 3 + 9);
        assert_eq!(g.leaf_count(), 36);

        let p = params(2, int(1), int(0), &[(0, 1), (1, 1)], &[(0, 1)]).without_side_payments();
        assert_eq!(build_popsicle(&p).unwrap().leaf_count(), 8);
    }

    #[test]
    fn node_budget_is_enforced() {
        let p = params(2, int(1), int(0), &three_prices(), &[(0, 1), (1, 1)]);
        assert!(build_popsicle_with_budget(&p, 10).unwrap_err().is_budget());
    }

    #[test]
    fn grid_constraints() {
        assert!(PopsicleParams::new(2, int(1), int(0), grid(&[(1, 2), (1, 1)]), grid(&[(0, 1)])).is_err());
        assert!(PopsicleParams::new(2, int(1), int(0), grid(&[(0, 1), (1, 2)]), grid(&[(0, 1)])).is_err());
        assert!(PopsicleParams::new(2, int(1), int(0), grid(&[(0, 1), (1, 1), (1, 2)]), grid(&[(0, 1)])).is_err());
        assert!(PopsicleParams::new(1, int(1), int(0), grid(&[(0, 1), (1, 1)]), grid(&[(0, 1)])).is_err());
        assert!(PopsicleParams::new(2, int(1), int(1), grid(&[(0, 1), (1, 1)]), grid(&[(0, 1)])).is_err());
        assert!(PopsicleParams::new(2, ratio(3, 2), int(0), grid(&[(0, 1), (1, 1)]), grid(&[(0, 1)])).is_err());
    }

    #[test]
    fn leaf_utilities_follow_the_payoff_formulas() {
        let p = params(2, ratio(1, 2), ratio(1, 4), &three_prices(), &[(0, 1), (1, 1)]);
        let g = build_popsicle(&p).unwrap();
        let prof = PopsicleProfile::with_best_response_policy(
            &p,
            vec![ratio(1, 2), int(0)],
            vec![(BuyerChoice::new(1, int(0)), int(1))],
        )
        .unwrap();
        let sp = prof.to_strategy_profile(&p).unwrap();
        let expected = UtilityVector(vec![ratio(1, 2), ratio(3, 8), int(0)]);
        assert_eq!(play(&g, &sp).unwrap(), expected);
        assert_eq!(evaluate_profile(&p, &prof).unwrap(), expected);
    }

    #[test]
    fn perfect_competition_leaf() {
        let p = params(2, int(1), int(0), &three_prices(), &[(0, 1), (1, 1)]);
        let prof = PopsicleProfile::with_best_response_policy(
            &p,
            vec![int(0), int(0)],
            vec![(BuyerChoice::new(1, int(0)), int(1))],
        )
        .unwrap();
        assert_eq!(evaluate_profile(&p, &prof).unwrap(), UtilityVector::from_ints(&[1, 0, 0]));
    }

    #[test]
    fn buyer_mixture_averages() {
        let p = params(2, ratio(1, 2), ratio(1, 4), &three_prices(), &[(0, 1), (1, 1)]);
        let prof = PopsicleProfile::with_best_response_policy(
            &p,
            vec![ratio(1, 2), int(0)],
            vec![
                (BuyerChoice::new(1, int(0)), ratio(1, 2)),
                (BuyerChoice::new(2, int(0)), ratio(1, 2)),
            ],
        )
        .unwrap();
        let u = evaluate_profile(&p, &prof).unwrap();
        // vendor 2 is chosen at price 0, so it earns nothing
        assert_eq!(u.0, vec![ratio(1, 2), ratio(3, 16), int(0)]);
        let g = build_popsicle(&p).unwrap();
        assert_eq!(expected_utility(&g, &prof.to_strategy_profile(&p).unwrap()).unwrap(), u);
    }

    #[test]
    fn negative_buyer_utility_is_kept() {
        let p = params(2, ratio(1, 2), int(0), &three_prices(), &[(0, 1), (1, 1)]);
        let prices = vec![int(1), int(1)];
        let prof = PopsicleProfile::with_best_response_policy(
            &p,
            prices,
            vec![(BuyerChoice::new(2, int(1)), int(1))],
        )
        .unwrap();
        assert_eq!(evaluate_profile(&p, &prof).unwrap().0[0], ratio(-1, 2));
    }

    #[test]
    fn off_grid_profile_is_rejected() {
        let p = params(2, ratio(1, 2), int(0), &three_prices(), &[(0, 1), (1, 1)]);
        let mut prof = vanilla_equilibrium(&p).unwrap();
        prof.prices[0] = ratio(1, 3);
        assert!(evaluate_profile(&p, &prof).is_err());
    }

    #[test]
    fn best_responses() {
        let p = params(2, ratio(1, 2), int(0), &three_prices(), &[(0, 1), (1, 1)]);
        assert_eq!(
            buyer_best_response(&p, &[ratio(1, 2), int(0)]),
            vec![BuyerChoice::new(1, int(0)), BuyerChoice::new(2, int(0))]
        );
        assert_eq!(buyer_best_response(&p, &[int(0), int(0)]), vec![BuyerChoice::new(1, int(0))]);
        let p3 = params(3, int(1), int(0), &three_prices(), &[(0, 1), (1, 1)]);
        assert_eq!(buyer_best_response(&p3, &[int(0), int(0), int(0)]).len(), 3);
    }

    #[test]
    fn vanilla_profiles() {
        let p = params(3, int(1), ratio(1, 4), &three_prices(), &[(0, 1), (1, 1)]);
        let prof = vanilla_equilibrium(&p).unwrap();
        assert_eq!(prof.prices, vec![int(0); 3]);
        assert_eq!(evaluate_profile(&p, &prof).unwrap(), UtilityVector::from_ints(&[1, 0, 0, 0]));

        let p = params(2, ratio(1, 2), ratio(1, 4), &three_prices(), &[(0, 1), (1, 1)]);
        let prof = vanilla_equilibrium(&p).unwrap();
        assert_eq!(prof.prices, vec![ratio(1, 2), int(0)]);
        assert_eq!(evaluate_profile(&p, &prof).unwrap().0[0], ratio(1, 2));

        let p = params(2, ratio(1, 2), ratio(1, 4), &[(0, 1), (1, 1)], &[(0, 1)]);
        assert!(matches!(vanilla_equilibrium(&p), Err(Error::GridIncompatible(_))));
    }

    #[test]
    fn linear_discount_is_unclamped() {
        let mut p = params(2, int(1), int(0), &three_prices(), &[(0, 1), (1, 1)]);
        p.discount = DiscountMode::Linear { kappa: int(1) };
        assert_eq!(p.buyer_utility(2, &int(1), &int(0)), int(-2));
        // vendor 1's advantage over vendor 2 is kappa * d = 1
        let prof = vanilla_equilibrium(&p).unwrap();
        assert_eq!(prof.prices, vec![int(1), int(0)]);
    }

    #[test]
    fn params_doc_round_trip() {
        let p = params(2, ratio(1, 2), ratio(1, 4), &three_prices(), &[(0, 1), (1, 1)]);
        let text = serde_json::to_string(&ParamsDoc::from(&p)).unwrap();
        assert!(text.contains("\"d\":\"1/2\""));
        let back: ParamsDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(PopsicleParams::try_from(back).unwrap(), p);
    }
}
