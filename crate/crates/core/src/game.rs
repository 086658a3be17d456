//! Finite normal-form games, recommendation mechanisms and incentives.
//!
//! Joint profiles are flattened with a mixed-radix rule, agent 0 most
//! significant. The opponent profiles `A_{-i}` of agent `i` use the same rule
//! with agent `i` deleted, so a slice `x(a_i, ·)` is a contiguous reading of
//! the opponent index `k = 0..d_i`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default absolute tolerance for float comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tolerance on the total mass of a [`Mechanism`].
pub const MASS_TOL: f64 = 1e-12;

/// Mixed-radix indexing of joint action profiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileIndexing {
    sizes: Vec<usize>,
    // strides[i] = prod_{j > i} sizes[j]
    strides: Vec<usize>,
    total: usize,
}

impl ProfileIndexing {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidGame("no agents".into()));
        }
        if let Some(i) = sizes.iter().position(|&m| m < 2) {
            return Err(Error::InvalidGame(format!(
                "agent {i} has {} actions, need at least 2",
                sizes[i]
            )));
        }
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len() - 1).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let total = strides[0] * sizes[0];
        Ok(Self {
            sizes,
            strides,
            total,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `m_i`.
    pub fn actions(&self, agent: usize) -> usize {
        self.sizes[agent]
    }

    /// `M = prod m_i`.
    pub fn profile_count(&self) -> usize {
        self.total
    }

    /// `d_i = M / m_i`.
    pub fn opponent_count(&self, agent: usize) -> usize {
        self.total / self.sizes[agent]
    }

    /// Largest action count `m = max m_i`.
    pub fn max_actions(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent < self.sizes.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "agent",
                index: agent,
                len: self.sizes.len(),
            })
        }
    }

    pub fn check_action(&self, agent: usize, action: usize) -> Result<()> {
        self.check_agent(agent)?;
        if action < self.sizes[agent] {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "action",
                index: action,
                len: self.sizes[agent],
            })
        }
    }

    pub fn check_profile(&self, profile: usize) -> Result<()> {
        if profile < self.total {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                what: "profile",
                index: profile,
                len: self.total,
            })
        }
    }

    pub fn encode(&self, actions: &[usize]) -> Result<usize> {
        if actions.len() != self.sizes.len() {
            return Err(Error::ShapeMismatch(format!(
                "profile has {} entries, game has {} agents",
                actions.len(),
                self.sizes.len()
            )));
        }
        let mut index = 0;
        for (agent, &a) in actions.iter().enumerate() {
            self.check_action(agent, a)?;
            index += a * self.strides[agent];
        }
        Ok(index)
    }

    pub fn decode(&self, profile: usize) -> Vec<usize> {
        self.sizes
            .iter()
            .zip(&self.strides)
            .map(|(&m, &s)| (profile / s) % m)
            .collect()
    }

    /// Action of `agent` inside `profile`.
    pub fn action_of(&self, profile: usize, agent: usize) -> usize {
        (profile / self.strides[agent]) % self.sizes[agent]
    }

    /// Position of `profile`'s opponent part inside `A_{-agent}`.
    pub fn opponent_index(&self, profile: usize, agent: usize) -> usize {
        let low = self.strides[agent];
        let high = profile / (low * self.sizes[agent]);
        high * low + profile % low
    }

    /// Joint profile in which `agent` plays `action` against opponent profile `k`.
    pub fn compose(&self, agent: usize, action: usize, k: usize) -> usize {
        let low = self.strides[agent];
        (k / low) * low * self.sizes[agent] + action * low + k % low
    }

    /// Replace the action of `agent` in `profile`.
    pub fn with_action(&self, profile: usize, agent: usize, action: usize) -> usize {
        let old = self.action_of(profile, agent);
        profile - old * self.strides[agent] + action * self.strides[agent]
    }
}

/// A finite normal-form game with labelled agents and actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    names: Vec<String>,
    action_labels: Vec<Vec<String>>,
    indexing: ProfileIndexing,
    utilities: Vec<Vec<f64>>,
}

impl Game {
    pub fn new(
        names: Vec<String>,
        action_labels: Vec<Vec<String>>,
        utilities: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if names.len() != action_labels.len() {
            return Err(Error::InvalidGame(format!(
                "{} names for {} action lists",
                names.len(),
                action_labels.len()
            )));
        }
        if names.len() < 2 {
            return Err(Error::InvalidGame("need at least 2 agents".into()));
        }
        let indexing = ProfileIndexing::new(action_labels.iter().map(Vec::len).collect())?;
        if utilities.len() != names.len() {
            return Err(Error::InvalidGame(format!(
                "{} utility tensors for {} agents",
                utilities.len(),
                names.len()
            )));
        }
        for (i, u) in utilities.iter().enumerate() {
            if u.len() != indexing.profile_count() {
                return Err(Error::InvalidGame(format!(
                    "agent {i}: utility tensor has {} entries, expected {}",
                    u.len(),
                    indexing.profile_count()
                )));
            }
            if let Some(k) = u.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!(
                    "agent {i}: non-finite utility at profile {k}"
                )));
            }
        }
        Ok(Self {
            names,
            action_labels,
            indexing,
            utilities,
        })
    }

    /// Game with generated labels (`p1`, `p2`, ... and `a1`, `a2`, ...).
    pub fn from_utilities(sizes: &[usize], utilities: Vec<Vec<f64>>) -> Result<Self> {
        let names = (0..sizes.len()).map(|i| format!("p{}", i + 1)).collect();
        let labels = sizes
            .iter()
            .map(|&m| (0..m).map(|a| format!("a{}", a + 1)).collect())
            .collect();
        Self::new(names, labels, utilities)
    }

    pub fn indexing(&self) -> &ProfileIndexing {
        &self.indexing
    }

    pub fn agent_count(&self) -> usize {
        self.indexing.agent_count()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn action_labels(&self) -> &[Vec<String>] {
        &self.action_labels
    }

    pub fn utilities(&self) -> &[Vec<f64>] {
        &self.utilities
    }

    pub fn utility(&self, agent: usize, profile: usize) -> f64 {
        self.utilities[agent][profile]
    }

    /// `u_i(a, ·)` over `A_{-i}`.
    pub fn utility_row(&self, agent: usize, action: usize) -> Result<Vec<f64>> {
        self.indexing.check_action(agent, action)?;
        let d = self.indexing.opponent_count(agent);
        Ok((0..d)
            .map(|k| self.utilities[agent][self.indexing.compose(agent, action, k)])
            .collect())
    }

    /// Replace one agent's utilities, keeping labels.
    pub fn with_agent_utilities(&self, agent: usize, utilities: Vec<f64>) -> Result<Self> {
        self.indexing.check_agent(agent)?;
        let mut all = self.utilities.clone();
        all[agent] = utilities;
        Self::new(self.names.clone(), self.action_labels.clone(), all)
    }

    /// Multiply every utility by `factor` (a common positive scale keeps the
    /// game in its equivalence class).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let utilities = self
            .utilities
            .iter()
            .map(|u| u.iter().map(|v| v * factor).collect())
            .collect();
        Self::new(self.names.clone(), self.action_labels.clone(), utilities)
    }

    pub fn difference_vector(
        &self,
        agent: usize,
        from: usize,
        to: usize,
    ) -> Result<DifferenceVector> {
        self.indexing.check_action(agent, from)?;
        self.indexing.check_action(agent, to)?;
        if from == to {
            return Err(Error::SameAction {
                agent,
                action: from,
            });
        }
        let u = &self.utilities[agent];
        let d = self.indexing.opponent_count(agent);
        let values = (0..d)
            .map(|k| {
                u[self.indexing.compose(agent, to, k)] - u[self.indexing.compose(agent, from, k)]
            })
            .collect();
        Ok(DifferenceVector {
            agent,
            from_action: from,
            to_action: to,
            values,
        })
    }

    /// Incentive `phi_i(rec, dev, x)` to deviate from `rec` to `dev`.
    pub fn incentive(&self, x: &Mechanism, agent: usize, rec: usize, dev: usize) -> Result<f64> {
        self.indexing.check_action(agent, rec)?;
        self.indexing.check_action(agent, dev)?;
        self.check_mechanism(x)?;
        if rec == dev {
            return Ok(0.0);
        }
        Ok(self.incentive_unchecked(x, agent, rec, dev))
    }

    pub(crate) fn incentive_unchecked(
        &self,
        x: &Mechanism,
        agent: usize,
        rec: usize,
        dev: usize,
    ) -> f64 {
        if rec == dev {
            return 0.0;
        }
        let u = &self.utilities[agent];
        let ix = &self.indexing;
        (0..ix.opponent_count(agent))
            .map(|k| {
                let from = ix.compose(agent, rec, k);
                let to = ix.compose(agent, dev, k);
                x.probs[from] * (u[to] - u[from])
            })
            .sum()
    }

    pub fn check_mechanism(&self, x: &Mechanism) -> Result<()> {
        if x.len() != self.indexing.profile_count() {
            return Err(Error::ShapeMismatch(format!(
                "mechanism has {} entries, game has {} profiles",
                x.len(),
                self.indexing.profile_count()
            )));
        }
        Ok(())
    }

    /// Checks every incentive constraint against `eps`.
    pub fn is_epsilon_ce(&self, x: &Mechanism, eps: f64) -> Result<CeCheck> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be >= 0, got {eps}"
            )));
        }
        self.check_mechanism(x)?;
        let mut worst = CeCheck {
            holds: true,
            max_violation: 0.0,
            argmax: None,
        };
        for agent in 0..self.agent_count() {
            let m = self.indexing.actions(agent);
            for rec in 0..m {
                for dev in (0..m).filter(|&d| d != rec) {
                    let phi = self.incentive_unchecked(x, agent, rec, dev);
                    if worst.argmax.is_none() || phi > worst.max_violation {
                        worst.max_violation = phi;
                        worst.argmax = Some((agent, rec, dev));
                    }
                }
            }
        }
        worst.max_violation = worst.max_violation.max(0.0);
        worst.holds = worst.max_violation <= eps;
        Ok(worst)
    }

    /// All `(agent, dominated, dominating)` triples under weak dominance.
    pub fn detect_weak_dominance(&self, tol: f64) -> Vec<Dominance> {
        let mut out = Vec::new();
        for agent in 0..self.agent_count() {
            let m = self.indexing.actions(agent);
            for dominated in 0..m {
                for dominating in (0..m).filter(|&b| b != dominated) {
                    let w = self
                        .difference_vector(agent, dominated, dominating)
                        .expect("indices in range");
                    let never_worse = w.values.iter().all(|&v| v >= -tol);
                    let somewhere_better = w.values.iter().any(|&v| v > tol);
                    if never_worse && somewhere_better {
                        out.push(Dominance {
                            agent,
                            dominated,
                            dominating,
                        });
                    }
                }
            }
        }
        out
    }

    /// True when every difference vector has a strictly positive and a
    /// strictly negative component.
    pub fn has_mixed_sign_differences(&self, tol: f64) -> bool {
        (0..self.agent_count()).all(|agent| {
            let m = self.indexing.actions(agent);
            (0..m).all(|a| {
                (a + 1..m).all(|b| {
                    let w = self
                        .difference_vector(agent, a, b)
                        .expect("indices in range");
                    w.values.iter().any(|&v| v > tol) && w.values.iter().any(|&v| v < -tol)
                })
            })
        })
    }
}

/// Outcome of [`Game::is_epsilon_ce`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeCheck {
    pub holds: bool,
    /// Largest incentive over all `(agent, rec, dev)`, floored at zero.
    pub max_violation: f64,
    pub argmax: Option<(usize, usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dominance {
    pub agent: usize,
    pub dominated: usize,
    pub dominating: usize,
}

/// `w_i(from, to) = u_i(to, ·) - u_i(from, ·)` over `A_{-i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceVector {
    pub agent: usize,
    pub from_action: usize,
    pub to_action: usize,
    pub values: Vec<f64>,
}

impl DifferenceVector {
    pub fn negated(&self) -> Self {
        Self {
            agent: self.agent,
            from_action: self.to_action,
            to_action: self.from_action,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// A probability distribution over joint profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    probs: Vec<f64>,
}

impl Mechanism {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidMechanism("empty".into()));
        }
        if let Some(k) = probs.iter().position(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidMechanism(format!(
                "entry {k} is {} (must be finite and >= 0)",
                probs[k]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMechanism(format!("mass sums to {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights to unit mass.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some(k) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMechanism(format!(
                "weight {k} is {}",
                weights[k]
            )));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidMechanism("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(profiles: usize) -> Self {
        Self {
            probs: vec![1.0 / profiles as f64; profiles],
        }
    }

    pub fn point_mass(profiles: usize, profile: usize) -> Self {
        let mut probs = vec![0.0; profiles];
        probs[profile] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `x(a_i, ·)` over `A_{-i}`.
    pub fn slice(
        &self,
        indexing: &ProfileIndexing,
        agent: usize,
        action: usize,
    ) -> Result<Vec<f64>> {
        indexing.check_action(agent, action)?;
        if self.len() != indexing.profile_count() {
            return Err(Error::ShapeMismatch(format!(
                "mechanism has {} entries, indexing has {} profiles",
                self.len(),
                indexing.profile_count()
            )));
        }
        Ok((0..indexing.opponent_count(agent))
            .map(|k| self.probs[indexing.compose(agent, action, k)])
            .collect())
    }

    /// Marginal probability that `agent` is recommended `action`.
    pub fn marginal(&self, indexing: &ProfileIndexing, agent: usize, action: usize) -> Result<f64> {
        Ok(self.slice(indexing, agent, action)?.iter().sum())
    }

    /// Mechanism whose slice at `(agent, action)` is `slice / |slice|_1` and
    /// zero elsewhere.
    pub fn from_slice(
        indexing: &ProfileIndexing,
        agent: usize,
        action: usize,
        slice: &[f64],
    ) -> Result<Self> {
        indexing.check_action(agent, action)?;
        if slice.len() != indexing.opponent_count(agent) {
            return Err(Error::ShapeMismatch(format!(
                "slice has {} entries, agent {agent} has {} opponent profiles",
                slice.len(),
                indexing.opponent_count(agent)
            )));
        }
        let mut weights = vec![0.0; indexing.profile_count()];
        for (k, &v) in slice.iter().enumerate() {
            weights[indexing.compose(agent, action, k)] = v;
        }
        Self::from_weights(weights)
    }

    /// Mechanism with the same slice at every action of `agent`, scaled so
    /// the total mass is one.
    pub fn from_common_slice(
        indexing: &ProfileIndexing,
        agent: usize,
        slice: &[f64],
    ) -> Result<Self> {
        indexing.check_agent(agent)?;
        if slice.len() != indexing.opponent_count(agent) {
            return Err(Error::ShapeMismatch(format!(
                "slice has {} entries, agent {agent} has {} opponent profiles",
                slice.len(),
                indexing.opponent_count(agent)
            )));
        }
        let mut weights = vec![0.0; indexing.profile_count()];
        for action in 0..indexing.actions(agent) {
            for (k, &v) in slice.iter().enumerate() {
                weights[indexing.compose(agent, action, k)] = v;
            }
        }
        Self::from_weights(weights)
    }

    /// Total-variation distance `0.5 * |x - y|_1`.
    pub fn total_variation(&self, other: &Mechanism) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn slice_examples() {
        let ix = ProfileIndexing::new(vec![2, 2]).unwrap();
        let uniform = Mechanism::uniform(4);
        assert_eq!(uniform.slice(&ix, 0, 0).unwrap(), vec![0.25, 0.25]);

        let point = Mechanism::point_mass(4, ix.encode(&[0, 0]).unwrap());
        assert_eq!(point.slice(&ix, 1, 0).unwrap(), vec![1.0, 0.0]);

        let x = Mechanism::new(vec![0.5, 0.3, 0.1, 0.1]).unwrap();
        assert_eq!(x.slice(&ix, 0, 1).unwrap(), vec![0.1, 0.1]);
        assert!((x.marginal(&ix, 0, 0).unwrap() - 0.8).abs() < 1e-15);

        assert!(matches!(
            x.slice(&ix, 0, 2),
            Err(Error::IndexOutOfRange { what: "action", .. })
        ));
        assert!(matches!(
            x.slice(&ix, 2, 0),
            Err(Error::IndexOutOfRange { what: "agent", .. })
        ));
    }

    #[test]
    fn counterexample_differences() {
        let (g, _) = catalog::counterexample_pair();
        assert_eq!(
            g.difference_vector(0, 0, 3).unwrap().values,
            vec![8.0, -8.0]
        );
        assert_eq!(
            g.difference_vector(0, 1, 2).unwrap().values,
            vec![2.0, -2.0]
        );
        assert!(matches!(
            g.difference_vector(0, 2, 2),
            Err(Error::SameAction {
                agent: 0,
                action: 2
            })
        ));
    }

    #[test]
    fn incentive_examples() {
        let (g, _) = catalog::counterexample_pair();
        let ix = g.indexing();
        let uniform = Mechanism::uniform(8);
        assert_eq!(g.incentive(&uniform, 0, 2, 2).unwrap(), 0.0);
        assert_eq!(g.incentive(&uniform, 0, 0, 3).unwrap(), 0.0);
        let point = Mechanism::point_mass(8, ix.encode(&[0, 0]).unwrap());
        assert_eq!(g.incentive(&point, 0, 0, 3).unwrap(), 8.0);
    }

    #[test]
    fn epsilon_ce_examples() {
        let constant = catalog::constant(&[2, 3]);
        let x = Mechanism::from_weights(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let check = constant.is_epsilon_ce(&x, 0.0).unwrap();
        assert!(check.holds);
        assert_eq!(check.max_violation, 0.0);

        // Dominant action is index 1 (defect) for both agents.
        let pd = catalog::prisoners_dilemma();
        let ix = pd.indexing();
        let dominant = Mechanism::point_mass(4, ix.encode(&[1, 1]).unwrap());
        assert!(pd.is_epsilon_ce(&dominant, 0.0).unwrap().holds);

        let dominated = Mechanism::point_mass(4, ix.encode(&[0, 0]).unwrap());
        let check = pd.is_epsilon_ce(&dominated, 0.0).unwrap();
        assert!(!check.holds);
        // Enumerate every constraint by hand: only (i, 0 -> 1) at the point
        // mass carries weight, gain = u_i(D, C) - u_i(C, C) = 5 - 3.
        let mut best = f64::NEG_INFINITY;
        for agent in 0..2 {
            for rec in 0..2 {
                for dev in 0..2 {
                    if rec == dev {
                        continue;
                    }
                    let mut phi = 0.0;
                    for p in 0..4 {
                        let acts = ix.decode(p);
                        if acts[agent] != rec {
                            continue;
                        }
                        let mut moved = acts.clone();
                        moved[agent] = dev;
                        let q = ix.encode(&moved).unwrap();
                        phi += dominated.probs()[p] * (pd.utility(agent, q) - pd.utility(agent, p));
                    }
                    best = best.max(phi);
                }
            }
        }
        assert_eq!(check.max_violation, best);
        assert_eq!(best, 2.0);
        assert!(pd.is_epsilon_ce(&dominated, -1.0).is_err());
    }

    #[test]
    fn weak_dominance_examples() {
        let (u, v) = catalog::counterexample_pair();
        assert!(u
            .detect_weak_dominance(DEFAULT_TOL)
            .iter()
            .all(|d| d.agent != 0));
        assert!(v
            .detect_weak_dominance(DEFAULT_TOL)
            .iter()
            .all(|d| d.agent != 0));
        assert!(u.detect_weak_dominance(DEFAULT_TOL).is_empty());

        let g = Game::from_utilities(
            &[2, 2],
            vec![vec![1.0, 4.0, 2.0, 5.0], vec![1.0, 2.0, 2.0, 1.0]],
        )
        .unwrap();
        assert_eq!(
            g.detect_weak_dominance(DEFAULT_TOL),
            vec![Dominance {
                agent: 0,
                dominated: 0,
                dominating: 1
            }]
        );

        let equal_rows = Game::from_utilities(
            &[2, 2],
            vec![vec![1.0, 4.0, 1.0, 4.0], vec![1.0, 2.0, 2.0, 1.0]],
        )
        .unwrap();
        assert!(equal_rows.detect_weak_dominance(DEFAULT_TOL).is_empty());
        assert!(!equal_rows.has_mixed_sign_differences(DEFAULT_TOL));
    }

    #[test]
    fn invalid_games_rejected() {
        assert!(Game::from_utilities(&[2, 1], vec![vec![0.0; 2], vec![0.0; 2]]).is_err());
        assert!(Game::from_utilities(&[2, 2], vec![vec![0.0; 3], vec![0.0; 4]]).is_err());
        assert!(
            Game::from_utilities(&[2, 2], vec![vec![0.0, f64::NAN, 0.0, 0.0], vec![0.0; 4]])
                .is_err()
        );
        assert!(Mechanism::new(vec![0.5, 0.6]).is_err());
        assert!(Mechanism::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn compose_matches_decode() {
        let ix = ProfileIndexing::new(vec![2, 3, 4]).unwrap();
        for p in 0..ix.profile_count() {
            let acts = ix.decode(p);
            for agent in 0..3 {
                let k = ix.opponent_index(p, agent);
                assert!(k < ix.opponent_count(agent));
                assert_eq!(ix.compose(agent, acts[agent], k), p);
                assert_eq!(ix.action_of(p, agent), acts[agent]);
            }
        }
        // A_{-1} ordering is the same mixed-radix rule with agent 1 deleted.
        let k = ix.opponent_index(ix.encode(&[1, 2, 3]).unwrap(), 1);
        assert_eq!(k, 4 + 3);
    }
}
