//! Simulated agents and the feedback they produce.
//!
//! Best-response agents play uniformly from the argmax set of
//! `<x(rec, ·), u_i(a', ·)>`. Quantal-response agents only consider
//! deviations with nonnegative incentive, weighted by `exp(beta * phi)`.
//! When the recommended action has zero marginal the belief is undefined and
//! every action is treated as acceptable.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{dot, Game, Mechanism};
use crate::seed;

/// Tolerance for argmax ties and `phi >= 0` membership.
pub const TIE_TOL: f64 = 1e-9;

/// Default utility-difference cap `C` used in sample budgets.
pub const DEFAULT_DIFFERENCE_CAP: f64 = 10.0;

fn zero_marginal(slice: &[f64]) -> bool {
    slice.iter().all(|&p| p == 0.0)
}

pub fn best_response_set(
    game: &Game,
    x: &Mechanism,
    agent: usize,
    rec: usize,
    tie_tol: f64,
) -> Result<Vec<usize>> {
    game.check_mechanism(x)?;
    let ix = game.indexing();
    let slice = x.slice(ix, agent, rec)?;
    let m = ix.actions(agent);
    if zero_marginal(&slice) {
        return Ok((0..m).collect());
    }
    let values = (0..m)
        .map(|a| game.utility_row(agent, a).map(|u| dot(&slice, &u)))
        .collect::<Result<Vec<_>>>()?;
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((0..m).filter(|&a| best - values[a] <= tie_tol).collect())
}

pub fn quantal_response_set(
    game: &Game,
    x: &Mechanism,
    agent: usize,
    rec: usize,
    tie_tol: f64,
) -> Result<Vec<usize>> {
    game.check_mechanism(x)?;
    let ix = game.indexing();
    ix.check_action(agent, rec)?;
    let m = ix.actions(agent);
    if zero_marginal(&x.slice(ix, agent, rec)?) {
        return Ok((0..m).collect());
    }
    Ok((0..m)
        .filter(|&a| game.incentive_unchecked(x, agent, rec, a) >= -tie_tol)
        .collect())
}

/// Choice probabilities over all of agent `i`'s actions (zero outside the
/// quantal-response set).
pub fn quantal_probabilities(
    game: &Game,
    x: &Mechanism,
    agent: usize,
    rec: usize,
    beta: f64,
) -> Result<Vec<f64>> {
    let support = quantal_response_set(game, x, agent, rec, TIE_TOL)?;
    let m = game.indexing().actions(agent);
    let zero = zero_marginal(&x.slice(game.indexing(), agent, rec)?);
    let phis: Vec<f64> = support
        .iter()
        .map(|&a| {
            if zero {
                0.0
            } else {
                game.incentive_unchecked(x, agent, rec, a).max(0.0)
            }
        })
        .collect();
    let top = phis.iter().copied().fold(0.0, f64::max);
    let weights: Vec<f64> = phis.iter().map(|&p| libm::exp(beta * (p - top))).collect();
    let total: f64 = weights.iter().sum();
    let mut probs = alloc::vec![0.0; m];
    for (&a, w) in support.iter().zip(weights) {
        probs[a] = w / total;
    }
    Ok(probs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BehaviorModel {
    BestResponse,
    QuantalResponse { beta: f64 },
}

/// One round of interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackRecord {
    pub mechanism: Mechanism,
    pub recommended: usize,
    pub realized: usize,
    pub round: u64,
}

/// Source of realized profiles for a recommendation.
pub trait ResponseModel {
    fn respond(&mut self, x: &Mechanism, recommended: usize, round: u64) -> Result<usize>;
}

/// Simulated agents playing a hidden game.
#[derive(Debug, Clone)]
pub struct AgentPopulation {
    game: Game,
    model: BehaviorModel,
    seed: u64,
    difference_cap: f64,
    draws: u64,
}

impl AgentPopulation {
    pub fn new(game: Game, model: BehaviorModel, seed: u64) -> Result<Self> {
        if let BehaviorModel::QuantalResponse { beta } = model {
            if !(beta >= 0.0) || !beta.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "beta must be finite and >= 0, got {beta}"
                )));
            }
        }
        Ok(Self {
            game,
            model,
            seed,
            difference_cap: DEFAULT_DIFFERENCE_CAP,
            draws: 0,
        })
    }

    pub fn with_difference_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap > 0.0) || !cap.is_finite() {
            return Err(Error::InvalidParameter(format!("difference cap {cap}")));
        }
        self.difference_cap = cap;
        Ok(self)
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn model(&self) -> BehaviorModel {
        self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn difference_cap(&self) -> f64 {
        self.difference_cap
    }

    fn choose_action(
        &self,
        x: &Mechanism,
        agent: usize,
        rec: usize,
        stream: &[u64],
    ) -> Result<usize> {
        let mut rng = seed::stream(self.seed, stream);
        match self.model {
            BehaviorModel::BestResponse => {
                let set = best_response_set(&self.game, x, agent, rec, TIE_TOL)?;
                Ok(set[rng.random_range(0..set.len())])
            }
            BehaviorModel::QuantalResponse { beta } => {
                let probs = quantal_probabilities(&self.game, x, agent, rec, beta)?;
                Ok(sample_index(&probs, rng.random::<f64>()))
            }
        }
    }

    /// Realized profile for `round`; a pure function of `(seed, agent, round)`.
    pub fn sample_response_at(
        &self,
        x: &Mechanism,
        recommended: usize,
        round: u64,
    ) -> Result<usize> {
        self.game.check_mechanism(x)?;
        let ix = self.game.indexing();
        ix.check_profile(recommended)?;
        let mut realized = recommended;
        for agent in 0..ix.agent_count() {
            let rec = ix.action_of(recommended, agent);
            let chosen = self.choose_action(x, agent, rec, &[agent as u64, round])?;
            realized = ix.with_action(realized, agent, chosen);
        }
        Ok(realized)
    }

    /// Samples with an internal draw counter.
    pub fn sample_response(&mut self, x: &Mechanism, recommended: usize) -> Result<FeedbackRecord> {
        let round = self.draws;
        let realized = self.sample_response_at(x, recommended, round)?;
        self.draws += 1;
        Ok(FeedbackRecord {
            mechanism: x.clone(),
            recommended,
            realized,
            round,
        })
    }

    /// `ceil(m_i * exp(beta * C) * ln(1/delta))`.
    pub fn membership_budget(&self, agent: usize, delta: f64) -> Result<u64> {
        let beta = match self.model {
            BehaviorModel::QuantalResponse { beta } => beta,
            BehaviorModel::BestResponse => {
                return Err(Error::InvalidParameter(
                    "membership sampling requires quantal-response agents".into(),
                ))
            }
        };
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta {delta} not in (0, 1)"
            )));
        }
        self.game.indexing().check_agent(agent)?;
        let m = self.game.indexing().actions(agent) as f64;
        let t = m * libm::exp(beta * self.difference_cap) * libm::log(1.0 / delta);
        Ok(libm::ceil(t).max(1.0) as u64)
    }

    /// Recommends `rec` repeatedly and reports whether `dev` was observed
    /// within the sample budget.
    pub fn verify_membership(
        &mut self,
        x: &Mechanism,
        agent: usize,
        rec: usize,
        dev: usize,
        delta: f64,
    ) -> Result<MembershipCheck> {
        let budget = self.membership_budget(agent, delta)?;
        self.game.check_mechanism(x)?;
        self.game.indexing().check_action(agent, rec)?;
        self.game.indexing().check_action(agent, dev)?;
        if dev == rec {
            self.draws += 1;
            return Ok(MembershipCheck {
                observed: true,
                samples: 1,
                budget,
            });
        }
        for used in 1..=budget {
            let draw = self.draws;
            self.draws += 1;
            if self.choose_action(x, agent, rec, &[agent as u64, draw])? == dev {
                return Ok(MembershipCheck {
                    observed: true,
                    samples: used,
                    budget,
                });
            }
        }
        Ok(MembershipCheck {
            observed: false,
            samples: budget,
            budget,
        })
    }

    /// Actions observed over `samples` draws after recommending `rec`.
    pub fn observe_responses(
        &mut self,
        x: &Mechanism,
        agent: usize,
        rec: usize,
        samples: u64,
    ) -> Result<Vec<usize>> {
        self.game.check_mechanism(x)?;
        self.game.indexing().check_action(agent, rec)?;
        let m = self.game.indexing().actions(agent);
        let mut seen = alloc::vec![false; m];
        seen[rec] = true;
        for _ in 0..samples {
            let draw = self.draws;
            self.draws += 1;
            seen[self.choose_action(x, agent, rec, &[agent as u64, draw])?] = true;
        }
        Ok((0..m).filter(|&a| seen[a]).collect())
    }
}

impl ResponseModel for AgentPopulation {
    fn respond(&mut self, x: &Mechanism, recommended: usize, round: u64) -> Result<usize> {
        self.sample_response_at(x, recommended, round)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MembershipCheck {
    pub observed: bool,
    pub samples: u64,
    pub budget: u64,
}

pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Realized profiles played back from a recorded run.
#[derive(Debug, Clone)]
pub struct ReplayResponses {
    realized: VecDeque<(u64, usize, usize)>,
}

impl ReplayResponses {
    /// `(round, recommended, realized)` triples in round order.
    pub fn new(records: impl IntoIterator<Item = (u64, usize, usize)>) -> Self {
        Self {
            realized: records.into_iter().collect(),
        }
    }
}

impl ResponseModel for ReplayResponses {
    fn respond(&mut self, _x: &Mechanism, recommended: usize, round: u64) -> Result<usize> {
        match self.realized.pop_front() {
            Some((r, rec, real)) if r == round && rec == recommended => Ok(real),
            Some((r, rec, _)) => Err(Error::Oracle(format!(
                "replay diverged at round {round}: recorded round {r} recommended {rec}, got {recommended}"
            ))),
            None => Err(Error::Oracle(format!("replay exhausted at round {round}"))),
        }
    }
}

/// Which learning stage issued a quantal-response query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    SignPattern,
    Bisection,
}

/// Answers "which actions did agent `i` take after being recommended `rec`
/// under `x`" with the (observed) quantal-response set.
pub trait QuantalOracle {
    fn response_set(
        &mut self,
        kind: QueryKind,
        x: &Mechanism,
        agent: usize,
        rec: usize,
    ) -> Result<Vec<usize>>;
}

/// Returns exact quantal-response sets of the hidden game.
#[derive(Debug, Clone)]
pub struct IdealOracle {
    game: Game,
}

impl IdealOracle {
    pub fn new(game: Game) -> Self {
        Self { game }
    }
}

impl QuantalOracle for IdealOracle {
    fn response_set(
        &mut self,
        _kind: QueryKind,
        x: &Mechanism,
        agent: usize,
        rec: usize,
    ) -> Result<Vec<usize>> {
        quantal_response_set(&self.game, x, agent, rec, TIE_TOL)
    }
}

/// Observes the quantal-response set by sampling a population; every true
/// member is missed with probability at most `delta` per query.
#[derive(Debug, Clone)]
pub struct SampledOracle {
    population: AgentPopulation,
    delta: f64,
    samples: u64,
}

impl SampledOracle {
    pub fn new(population: AgentPopulation, delta: f64) -> Result<Self> {
        // Validates model and delta.
        population.membership_budget(0, delta)?;
        Ok(Self {
            population,
            delta,
            samples: 0,
        })
    }

    pub fn samples_used(&self) -> u64 {
        self.samples
    }
}

impl QuantalOracle for SampledOracle {
    fn response_set(
        &mut self,
        _kind: QueryKind,
        x: &Mechanism,
        agent: usize,
        rec: usize,
    ) -> Result<Vec<usize>> {
        let budget = self.population.membership_budget(agent, self.delta)?;
        self.samples += budget;
        self.population.observe_responses(x, agent, rec, budget)
    }
}

/// A recorded quantal-response query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub kind: QueryKind,
    pub mechanism: Mechanism,
    pub agent: usize,
    pub rec: usize,
    pub response: Vec<usize>,
}

/// Wraps an oracle and keeps a transcript of every query.
#[derive(Debug, Clone)]
pub struct RecordingOracle<O> {
    inner: O,
    records: Vec<QueryRecord>,
}

impl<O: QuantalOracle> RecordingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn into_parts(self) -> (O, Vec<QueryRecord>) {
        (self.inner, self.records)
    }
}

impl<O: QuantalOracle> QuantalOracle for RecordingOracle<O> {
    fn response_set(
        &mut self,
        kind: QueryKind,
        x: &Mechanism,
        agent: usize,
        rec: usize,
    ) -> Result<Vec<usize>> {
        let response = self.inner.response_set(kind, x, agent, rec)?;
        self.records.push(QueryRecord {
            kind,
            mechanism: x.clone(),
            agent,
            rec,
            response: response.clone(),
        });
        Ok(response)
    }
}

/// Answers queries from a transcript, checking that the query sequence
/// matches the recording.
#[derive(Debug, Clone)]
pub struct ReplayOracle {
    records: VecDeque<QueryRecord>,
}

impl ReplayOracle {
    pub fn new(records: impl IntoIterator<Item = QueryRecord>) -> Self {
        Self {
            records: records.into_iter().collect(),
        }
    }
}

impl QuantalOracle for ReplayOracle {
    fn response_set(
        &mut self,
        kind: QueryKind,
        x: &Mechanism,
        agent: usize,
        rec: usize,
    ) -> Result<Vec<usize>> {
        let next = self
            .records
            .pop_front()
            .ok_or_else(|| Error::Oracle("transcript exhausted".into()))?;
        if next.kind != kind || next.agent != agent || next.rec != rec || next.mechanism != *x {
            return Err(Error::Oracle(format!(
                "query diverged from transcript (agent {agent}, rec {rec})"
            )));
        }
        Ok(next.response)
    }
}
