//! Recovery of agent utilities from quantal-response feedback.
//!
//! Learning runs per agent in three stages:
//!
//! 1. [`learn_sign_patterns`] issues one mechanism per opponent profile `k`
//!    (slice `e_k / m_i` at every action) and reads the sign of every
//!    component of every `w_i(a, a')` off the response sets.
//! 2. [`recover_pair`] fixes a positive pivot `p` and a negative pivot `q`
//!    and recovers the remaining components by bisection on ratios
//!    ([`binary_search_ratio`]), giving `w_i(a, a') / w_p`.
//! 3. [`reconcile_scales`] finds one positive multiplier per pair such that
//!    the rescaled estimates satisfy `w(a, c) = w(a, b) + w(b, c)`, and
//!    [`assemble_utilities`] turns them into a representative utility tensor.
//!
//! Only pairs `a < a'` are learned; `w(a', a) = -w(a, a')`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::affine::{fit_affine, utility_rows};
use crate::behavior::{QuantalOracle, QueryKind};
use crate::error::{Error, Result};
use crate::game::{Game, Mechanism, ProfileIndexing};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleSolver {
    NormalEquations,
    Kaczmarz { sweeps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// Bisection precision on every ratio.
    pub eps: f64,
    /// Upper end of the bisection bracket.
    pub ratio_cap: f64,
    /// Relative tolerance on rescaled triangular identities.
    pub tri_tol: f64,
    /// Estimated components below this magnitude are flagged.
    pub c_floor: f64,
    /// Lower bound on reconciled multipliers.
    pub lambda_min: f64,
    pub scale_solver: ScaleSolver,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            ratio_cap: 100.0,
            tri_tol: 0.05,
            c_floor: 1e-6,
            lambda_min: 1e-8,
            scale_solver: ScaleSolver::NormalEquations,
        }
    }
}

impl LearnConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !(self.ratio_cap > self.eps) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < eps < ratio_cap, got eps {} cap {}",
                self.eps, self.ratio_cap
            )));
        }
        if !(self.tri_tol > 0.0) {
            return Err(Error::InvalidParameter("tri_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Counts of distinct mechanisms and of response-set queries issued.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCount {
    pub mechanisms: u64,
    pub set_queries: u64,
}

impl core::ops::AddAssign for QueryCount {
    fn add_assign(&mut self, rhs: Self) {
        self.mechanisms += rhs.mechanisms;
        self.set_queries += rhs.set_queries;
    }
}

/// Number of bisection steps needed to shrink `[0, cap]` to width `eps`,
/// i.e. `ceil(log2(cap / eps))`.
pub fn bisection_steps(cap: f64, eps: f64) -> u32 {
    let mut width = cap;
    let mut steps = 0;
    while width > eps {
        width /= 2.0;
        steps += 1;
    }
    steps
}

/// Mechanisms needed to learn one agent:
/// `d_i + m_i (m_i - 1) / 2 * (d_i - 1) * ceil(log2(cap / eps))`.
pub fn agent_query_budget(ix: &ProfileIndexing, agent: usize, eps: f64, cap: f64) -> u64 {
    let m = ix.actions(agent) as u64;
    let d = ix.opponent_count(agent) as u64;
    d + m * (m - 1) / 2 * (d - 1) * bisection_steps(cap, eps) as u64
}

pub fn query_budget(ix: &ProfileIndexing, eps: f64, cap: f64) -> u64 {
    (0..ix.agent_count())
        .map(|i| agent_query_budget(ix, i, eps, cap))
        .sum()
}

/// Response-set queries needed to learn every agent (sign stage asks one
/// set per action and mechanism).
pub fn planned_set_queries(ix: &ProfileIndexing, eps: f64, cap: f64) -> u64 {
    (0..ix.agent_count())
        .map(|i| {
            let m = ix.actions(i) as u64;
            let d = ix.opponent_count(i) as u64;
            d * m + m * (m - 1) / 2 * (d - 1) * bisection_steps(cap, eps) as u64
        })
        .sum()
}

/// `n * m * M * log2(cap / eps)`, the shape of the mechanism budget.
pub fn budget_shape(ix: &ProfileIndexing, eps: f64, cap: f64) -> f64 {
    ix.agent_count() as f64
        * ix.max_actions() as f64
        * ix.profile_count() as f64
        * libm::log2(cap / eps)
}

/// Sign pattern of `w_i(from, to)`: `positive` holds the components with
/// `w_k >= 0`, `negative` those with `w_k < 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern {
    pub agent: usize,
    pub from: usize,
    pub to: usize,
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

/// Sign patterns of every ordered pair of `agent`'s actions, keyed by
/// `(from, to)`.
pub fn learn_sign_patterns<O: QuantalOracle + ?Sized>(
    oracle: &mut O,
    ix: &ProfileIndexing,
    agent: usize,
    count: &mut QueryCount,
) -> Result<BTreeMap<(usize, usize), SignPattern>> {
    ix.check_agent(agent)?;
    let m = ix.actions(agent);
    let d = ix.opponent_count(agent);
    let mut patterns = BTreeMap::new();
    for from in 0..m {
        for to in (0..m).filter(|&t| t != from) {
            patterns.insert(
                (from, to),
                SignPattern {
                    agent,
                    from,
                    to,
                    positive: Vec::new(),
                    negative: Vec::new(),
                },
            );
        }
    }
    for k in 0..d {
        let mut slice = vec![0.0; d];
        slice[k] = 1.0;
        let x = Mechanism::from_common_slice(ix, agent, &slice)?;
        count.mechanisms += 1;
        for from in 0..m {
            let set = oracle.response_set(QueryKind::SignPattern, &x, agent, from)?;
            count.set_queries += 1;
            for to in (0..m).filter(|&t| t != from) {
                let pattern = patterns.get_mut(&(from, to)).expect("initialized");
                if set.contains(&to) {
                    pattern.positive.push(k);
                } else {
                    pattern.negative.push(k);
                }
            }
        }
    }
    Ok(patterns)
}

/// Bisection for `tau* = -w_positive / w_negative` of pair `(from, to)`.
///
/// Each step recommends `from` with slice `(e_p + tau e_j) / (1 + tau)`;
/// `to` is in the response set iff `tau <= tau*`.
#[allow(clippy::too_many_arguments)]
pub fn binary_search_ratio<O: QuantalOracle + ?Sized>(
    oracle: &mut O,
    ix: &ProfileIndexing,
    agent: usize,
    pair: (usize, usize),
    positive: usize,
    negative: usize,
    eps: f64,
    cap: f64,
    count: &mut QueryCount,
) -> Result<f64> {
    let (from, to) = pair;
    ix.check_action(agent, from)?;
    ix.check_action(agent, to)?;
    let d = ix.opponent_count(agent);
    if positive >= d || negative >= d || positive == negative {
        return Err(Error::InvalidParameter(format!(
            "bad component pair ({positive}, {negative}) for d = {d}"
        )));
    }
    if !(eps > 0.0) || !(cap > eps) {
        return Err(Error::InvalidParameter(format!("eps {eps}, cap {cap}")));
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..bisection_steps(cap, eps) {
        let tau = 0.5 * (lo + hi);
        let mut slice = vec![0.0; d];
        slice[positive] = 1.0;
        slice[negative] = tau;
        let x = Mechanism::from_slice(ix, agent, from, &slice)?;
        count.mechanisms += 1;
        count.set_queries += 1;
        if oracle
            .response_set(QueryKind::Bisection, &x, agent, from)?
            .contains(&to)
        {
            lo = tau;
        } else {
            hi = tau;
        }
    }
    if lo >= cap - eps {
        return Err(Error::BracketViolation {
            agent,
            pair,
            positive,
            negative,
            cap,
        });
    }
    Ok(0.5 * (lo + hi))
}

/// Estimate of one pair's difference vector, normalized so the positive
/// pivot equals one.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredPair {
    pub from: usize,
    pub to: usize,
    pub values: Vec<f64>,
    pub positive_pivot: usize,
    pub negative_pivot: usize,
    /// Components whose magnitude fell below `c_floor`.
    pub flagged: Vec<usize>,
    pub bisections: usize,
}

pub fn recover_pair<O: QuantalOracle + ?Sized>(
    oracle: &mut O,
    ix: &ProfileIndexing,
    pattern: &SignPattern,
    config: &LearnConfig,
    count: &mut QueryCount,
) -> Result<RecoveredPair> {
    let agent = pattern.agent;
    let pair = (pattern.from, pattern.to);
    let (Some(&p), Some(&q)) = (pattern.positive.iter().min(), pattern.negative.iter().min())
    else {
        return Err(Error::UnrecoverablePair { agent, pair });
    };
    let d = ix.opponent_count(agent);
    let mut values = vec![0.0; d];
    values[p] = 1.0;
    let mut bisections = 0;
    for &j in &pattern.negative {
        let tau = binary_search_ratio(
            oracle,
            ix,
            agent,
            pair,
            p,
            j,
            config.eps,
            config.ratio_cap,
            count,
        )?;
        bisections += 1;
        values[j] = -1.0 / tau;
    }
    for &k in pattern.positive.iter().filter(|&&k| k != p) {
        let tau = binary_search_ratio(
            oracle,
            ix,
            agent,
            pair,
            k,
            q,
            config.eps,
            config.ratio_cap,
            count,
        )?;
        bisections += 1;
        values[k] = -values[q] * tau;
    }
    let flagged = (0..d)
        .filter(|&k| values[k].abs() < config.c_floor)
        .collect();
    Ok(RecoveredPair {
        from: pair.0,
        to: pair.1,
        values,
        positive_pivot: p,
        negative_pivot: q,
        flagged,
        bisections,
    })
}

/// Per-pair estimates of one agent, keyed by `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredDifferences {
    pub agent: usize,
    pub actions: usize,
    pub pairs: BTreeMap<(usize, usize), RecoveredPair>,
}

impl RecoveredDifferences {
    pub fn pair(&self, a: usize, b: usize) -> Option<&[f64]> {
        self.pairs.get(&(a, b)).map(|p| p.values.as_slice())
    }
}

/// Multipliers putting every pair estimate of one agent on a common scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconciliation {
    pub agent: usize,
    /// `lambda_(a, b)` for `a < b`; `lambda_(0, 1) = 1`.
    pub multipliers: BTreeMap<(usize, usize), f64>,
    /// Largest relative triangular-identity violation after rescaling.
    pub residual: f64,
    pub worst_triple: Option<(usize, usize, usize)>,
}

impl Reconciliation {
    pub fn scaled(&self, estimates: &RecoveredDifferences, a: usize, b: usize) -> Option<Vec<f64>> {
        let lambda = self.multipliers.get(&(a, b))?;
        Some(estimates.pair(a, b)?.iter().map(|v| lambda * v).collect())
    }
}

fn pair_ids(m: usize) -> BTreeMap<(usize, usize), usize> {
    let mut ids = BTreeMap::new();
    for a in 0..m {
        for b in a + 1..m {
            let next = ids.len();
            ids.insert((a, b), next);
        }
    }
    ids
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Relative triangular residual of every triple `a < b < c`.
fn triple_residuals(
    estimates: &RecoveredDifferences,
    multipliers: &BTreeMap<(usize, usize), f64>,
) -> (f64, Option<(usize, usize, usize)>) {
    let m = estimates.actions;
    let mut worst = (0.0, None);
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                let (Some(ab), Some(bc), Some(ac)) = (
                    estimates.pair(a, b),
                    estimates.pair(b, c),
                    estimates.pair(a, c),
                ) else {
                    continue;
                };
                let (lab, lbc, lac) = (
                    multipliers[&(a, b)],
                    multipliers[&(b, c)],
                    multipliers[&(a, c)],
                );
                let violation = max_abs(
                    ac.iter()
                        .zip(ab)
                        .zip(bc)
                        .map(|((x, y), z)| lac * x - lab * y - lbc * z),
                );
                let scale = max_abs(ac.iter().map(|x| lac * x))
                    .max(max_abs(ab.iter().map(|y| lab * y)))
                    .max(max_abs(bc.iter().map(|z| lbc * z)));
                let rel = if scale > 0.0 {
                    violation / scale
                } else {
                    violation
                };
                if worst.1.is_none() || rel > worst.0 {
                    worst = (rel, Some((a, b, c)));
                }
            }
        }
    }
    worst
}

/// Rows of `lambda_ac w(a,c) - lambda_ab w(a,b) - lambda_bc w(b,c) = 0` over
/// all triples and components, with `lambda_(0,1)` moved to the right side.
fn triple_system(
    estimates: &RecoveredDifferences,
    ids: &BTreeMap<(usize, usize), usize>,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = estimates.actions;
    let unknowns = ids.len() - 1;
    let column = |pair: (usize, usize)| ids[&pair].checked_sub(1);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                let terms = [((a, c), 1.0), ((a, b), -1.0), ((b, c), -1.0)]
                    .map(|(pair, sign)| (pair, sign, &estimates.pairs[&pair]));
                for k in 0..estimates.pairs[&(a, b)].values.len() {
                    let mut row = vec![0.0; unknowns];
                    let mut y = 0.0;
                    for (pair, sign, est) in terms {
                        let coeff = sign * est.values[k];
                        match column(pair) {
                            Some(col) => row[col] += coeff,
                            None => y -= coeff,
                        }
                    }
                    rows.push(row);
                    rhs.push(y);
                }
            }
        }
    }
    (rows, rhs)
}

/// Solves `lambda_ac w(a,c) = lambda_ab w(a,b) + lambda_bc w(b,c)` over all
/// triples in the least-squares sense with `lambda_(0,1)` pinned to one.
pub fn reconcile_scales(
    estimates: &RecoveredDifferences,
    config: &LearnConfig,
) -> Result<Reconciliation> {
    let m = estimates.actions;
    let ids = pair_ids(m);
    for &pair in ids.keys() {
        if estimates.pair(pair.0, pair.1).is_none() {
            return Err(Error::InvalidParameter(format!(
                "agent {}: missing estimate for pair {pair:?}",
                estimates.agent
            )));
        }
    }
    let mut multipliers: BTreeMap<(usize, usize), f64> = ids.keys().map(|&k| (k, 1.0)).collect();
    if m < 3 {
        return Ok(Reconciliation {
            agent: estimates.agent,
            multipliers,
            residual: 0.0,
            worst_triple: None,
        });
    }
    let (rows, rhs) = triple_system(estimates, &ids);
    let solution = match config.scale_solver {
        ScaleSolver::NormalEquations => linalg::least_squares(&rows, &rhs).ok_or_else(|| {
            Error::SolverFailure(format!("agent {}: singular scale system", estimates.agent))
        })?,
        ScaleSolver::Kaczmarz { sweeps } => {
            linalg::kaczmarz(&rows, &rhs, vec![1.0; ids.len() - 1], sweeps, 1e-13)
        }
    };
    for (&pair, &id) in &ids {
        if id > 0 {
            multipliers.insert(pair, solution[id - 1].max(config.lambda_min));
        }
    }
    let (residual, worst_triple) = triple_residuals(estimates, &multipliers);
    if residual > config.tri_tol {
        let triple = worst_triple.expect("m >= 3 has a triple");
        return Err(Error::InconsistentScales {
            agent: estimates.agent,
            triple,
            residual,
        });
    }
    Ok(Reconciliation {
        agent: estimates.agent,
        multipliers,
        residual,
        worst_triple,
    })
}

/// Utility tensor (length `M`) with `u(a^0, ·) = 0` and
/// `u(a^j, ·) = lambda_0j * w_hat(a^0, a^j)`.
pub fn assemble_utilities(
    ix: &ProfileIndexing,
    estimates: &RecoveredDifferences,
    reconciliation: &Reconciliation,
) -> Result<Vec<f64>> {
    let agent = estimates.agent;
    ix.check_agent(agent)?;
    let mut u = vec![0.0; ix.profile_count()];
    for j in 1..ix.actions(agent) {
        let row = reconciliation.scaled(estimates, 0, j).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "agent {agent}: no reconciled estimate for (0, {j})"
            ))
        })?;
        for (k, v) in row.into_iter().enumerate() {
            u[ix.compose(agent, j, k)] = v;
        }
    }
    Ok(u)
}

/// Max-norm misfit of `u_true ~ lambda * u_hat + t` with `lambda >= 0`
/// fitted by least squares.
pub fn alignment_error(u_hat: &Game, u_true: &Game, agent: usize) -> Result<f64> {
    if u_hat.indexing() != u_true.indexing() {
        return Err(Error::ShapeMismatch("games have different shapes".into()));
    }
    u_true.indexing().check_agent(agent)?;
    Ok(fit_affine(
        &utility_rows(u_true, agent),
        &utility_rows(u_hat, agent),
        true,
    )
    .max_residual)
}

/// Everything learned about one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecovery {
    pub agent: usize,
    pub patterns: BTreeMap<(usize, usize), SignPattern>,
    pub estimates: RecoveredDifferences,
    pub reconciliation: Reconciliation,
    pub utilities: Vec<f64>,
    pub queries: QueryCount,
}

pub fn learn_agent<O: QuantalOracle + ?Sized>(
    oracle: &mut O,
    ix: &ProfileIndexing,
    agent: usize,
    config: &LearnConfig,
) -> Result<AgentRecovery> {
    config.validate()?;
    let mut queries = QueryCount::default();
    let patterns = learn_sign_patterns(oracle, ix, agent, &mut queries)?;
    let m = ix.actions(agent);
    let mut pairs = BTreeMap::new();
    for a in 0..m {
        for b in a + 1..m {
            let pair = recover_pair(oracle, ix, &patterns[&(a, b)], config, &mut queries)?;
            pairs.insert((a, b), pair);
        }
    }
    let estimates = RecoveredDifferences {
        agent,
        actions: m,
        pairs,
    };
    let reconciliation = reconcile_scales(&estimates, config)?;
    let utilities = assemble_utilities(ix, &estimates, &reconciliation)?;
    Ok(AgentRecovery {
        agent,
        patterns,
        estimates,
        reconciliation,
        utilities,
        queries,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameRecovery {
    pub agents: Vec<AgentRecovery>,
    pub game: Game,
    pub queries: QueryCount,
}

/// Learns every agent in turn and assembles a representative game.
pub fn learn_game<O: QuantalOracle + ?Sized>(
    oracle: &mut O,
    ix: &ProfileIndexing,
    config: &LearnConfig,
) -> Result<GameRecovery> {
    let mut agents = Vec::with_capacity(ix.agent_count());
    let mut queries = QueryCount::default();
    for agent in 0..ix.agent_count() {
        let rec = learn_agent(oracle, ix, agent, config)?;
        queries += rec.queries;
        agents.push(rec);
    }
    let utilities = agents.iter().map(|a| a.utilities.clone()).collect();
    let game = Game::from_utilities(ix.sizes(), utilities)?;
    Ok(GameRecovery {
        agents,
        game,
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::IdealOracle;
    use crate::catalog;

    fn two_by(m0: usize, rows: &[&[f64]]) -> Game {
        // Agent 0 with `m0` actions; agent 1 with d = rows[0].len() actions
        // and generic utilities.
        let d = rows[0].len();
        let mut u0 = Vec::new();
        for r in rows {
            u0.extend_from_slice(r);
        }
        let u1 = (0..m0 * d)
            .map(|p| ((p * 7 + 3) % 11) as f64 + 0.25 * p as f64)
            .collect();
        Game::from_utilities(&[m0, d], vec![u0, u1]).unwrap()
    }

    #[test]
    fn bisection_steps_match_ceiling() {
        assert_eq!(bisection_steps(8.0, libm::ldexp(1.0, -10)), 13);
        assert_eq!(bisection_steps(100.0, 1e-3), 17);
        assert_eq!(bisection_steps(1.0, 1.0), 0);
    }

    #[test]
    fn sign_patterns_of_counterexample() {
        let (g, _) = catalog::counterexample_pair();
        let mut oracle = IdealOracle::new(g.clone());
        let mut count = QueryCount::default();
        let patterns = learn_sign_patterns(&mut oracle, g.indexing(), 0, &mut count).unwrap();
        let p = &patterns[&(0, 3)];
        assert_eq!(p.positive, vec![0]);
        assert_eq!(p.negative, vec![1]);
        // one mechanism per opponent profile, independent of m_i
        assert_eq!(count.mechanisms, 2);
        let mut count = QueryCount::default();
        learn_sign_patterns(&mut oracle, g.indexing(), 1, &mut count).unwrap();
        assert_eq!(count.mechanisms, 4);
    }

    #[test]
    fn sign_pattern_mixed_three_components() {
        // w(0 -> 1) = (+, +, -)
        let g = two_by(2, &[&[1.0, 1.0, 5.0], &[3.0, 2.0, 1.0]]);
        let mut oracle = IdealOracle::new(g.clone());
        let patterns =
            learn_sign_patterns(&mut oracle, g.indexing(), 0, &mut QueryCount::default()).unwrap();
        assert_eq!(patterns[&(0, 1)].positive, vec![0, 1]);
        assert_eq!(patterns[&(0, 1)].negative, vec![2]);
        assert_eq!(patterns[&(1, 0)].positive, vec![2]);
    }

    #[test]
    fn zero_component_lands_in_positive_set() {
        let g = two_by(2, &[&[1.0, 2.0, 5.0], &[3.0, 2.0, 1.0]]);
        let mut oracle = IdealOracle::new(g.clone());
        let patterns =
            learn_sign_patterns(&mut oracle, g.indexing(), 0, &mut QueryCount::default()).unwrap();
        assert_eq!(patterns[&(0, 1)].positive, vec![0, 1]);
        assert_eq!(patterns[&(1, 0)].positive, vec![1, 2]);
    }

    #[test]
    fn bisection_examples() {
        for (w, expected) in [((2.0, -1.0), 2.0), ((1.0, -1.0), 1.0)] {
            let g = two_by(2, &[&[0.0, 0.0], &[w.0, w.1]]);
            let mut oracle = IdealOracle::new(g.clone());
            let eps = 1e-4;
            let tau = binary_search_ratio(
                &mut oracle,
                g.indexing(),
                0,
                (0, 1),
                0,
                1,
                eps,
                8.0,
                &mut QueryCount::default(),
            )
            .unwrap();
            assert!((tau - expected).abs() <= eps, "{tau}");
        }
        let g = two_by(2, &[&[0.0, 0.0], &[3.0, -1.0]]);
        let mut oracle = IdealOracle::new(g.clone());
        let mut count = QueryCount::default();
        binary_search_ratio(
            &mut oracle,
            g.indexing(),
            0,
            (0, 1),
            0,
            1,
            libm::ldexp(1.0, -10),
            8.0,
            &mut count,
        )
        .unwrap();
        assert_eq!(count.mechanisms, 13);
    }

    #[test]
    fn bracket_violation_is_reported() {
        let g = two_by(2, &[&[0.0, 0.0], &[50.0, -1.0]]);
        let mut oracle = IdealOracle::new(g.clone());
        let err = binary_search_ratio(
            &mut oracle,
            g.indexing(),
            0,
            (0, 1),
            0,
            1,
            1e-3,
            10.0,
            &mut QueryCount::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::BracketViolation { cap, .. } if cap == 10.0));
    }

    #[test]
    fn membership_is_monotone_in_tau() {
        let g = two_by(2, &[&[0.0, 0.0, 0.0], &[2.0, -3.0, 1.0]]);
        let ix = g.indexing();
        let mut oracle = IdealOracle::new(g.clone());
        let mut previous = true;
        for step in 0..200 {
            let tau = step as f64 * 0.01;
            let x = Mechanism::from_slice(ix, 0, 0, &[1.0, tau, 0.0]).unwrap();
            let member = oracle
                .response_set(QueryKind::Bisection, &x, 0, 0)
                .unwrap()
                .contains(&1);
            assert!(previous || !member, "membership reappeared at tau = {tau}");
            previous = member;
        }
    }

    fn recover(
        g: &Game,
        from: usize,
        to: usize,
        config: &LearnConfig,
    ) -> (RecoveredPair, QueryCount) {
        let mut oracle = IdealOracle::new(g.clone());
        let mut count = QueryCount::default();
        let patterns = learn_sign_patterns(&mut oracle, g.indexing(), 0, &mut count).unwrap();
        let pair = recover_pair(
            &mut oracle,
            g.indexing(),
            &patterns[&(from, to)],
            config,
            &mut count,
        )
        .unwrap();
        (pair, count)
    }

    #[test]
    fn recover_pair_examples() {
        let config = LearnConfig::default();
        let g = two_by(2, &[&[0.0, 0.0], &[3.0, -1.5]]);
        let (pair, _) = recover(&g, 0, 1, &config);
        assert_eq!(pair.values[0], 1.0);
        assert!((pair.values[1] + 0.5).abs() < 10.0 * config.eps);

        let g = two_by(2, &[&[0.0, 0.0], &[1.0, -1.0]]);
        let (pair, _) = recover(&g, 0, 1, &config);
        assert!((pair.values[1] + 1.0).abs() < 10.0 * config.eps);

        // d_i = 4: one pair takes exactly d_i - 1 bisection runs.
        let g = two_by(2, &[&[0.0, 0.0, 0.0, 0.0], &[2.0, -1.0, 3.0, -2.0]]);
        let (pair, count) = recover(&g, 0, 1, &config);
        assert_eq!(pair.bisections, 3);
        assert_eq!(
            count.mechanisms,
            4 + 3 * bisection_steps(config.ratio_cap, config.eps) as u64
        );
        let truth = [1.0, -0.5, 1.5, -1.0];
        for (v, t) in pair.values.iter().zip(truth) {
            assert!((v - t).abs() < 10.0 * config.eps, "{v} vs {t}");
        }
    }

    #[test]
    fn weakly_dominated_pair_is_unrecoverable() {
        let g = two_by(2, &[&[0.0, 0.0], &[1.0, 2.0]]);
        let mut oracle = IdealOracle::new(g.clone());
        let config = LearnConfig::default();
        let err = learn_agent(&mut oracle, g.indexing(), 0, &config).unwrap_err();
        assert_eq!(
            err,
            Error::UnrecoverablePair {
                agent: 0,
                pair: (0, 1)
            }
        );
    }

    fn exact_estimates(
        g: &Game,
        agent: usize,
    ) -> (RecoveredDifferences, BTreeMap<(usize, usize), f64>) {
        let m = g.indexing().actions(agent);
        let mut pairs = BTreeMap::new();
        let mut pivots = BTreeMap::new();
        for a in 0..m {
            for b in a + 1..m {
                let w = g.difference_vector(agent, a, b).unwrap().values;
                let p = w.iter().position(|&v| v >= 0.0).unwrap();
                let q = w.iter().position(|&v| v < 0.0).unwrap();
                pivots.insert((a, b), w[p]);
                pairs.insert(
                    (a, b),
                    RecoveredPair {
                        from: a,
                        to: b,
                        values: w.iter().map(|v| v / w[p]).collect(),
                        positive_pivot: p,
                        negative_pivot: q,
                        flagged: Vec::new(),
                        bisections: 0,
                    },
                );
            }
        }
        (
            RecoveredDifferences {
                agent,
                actions: m,
                pairs,
            },
            pivots,
        )
    }

    fn four_action_game() -> Game {
        two_by(
            4,
            &[
                &[1.0, 9.0, 4.0],
                &[3.0, 7.5, 2.0],
                &[6.0, 2.0, 5.5],
                &[8.5, 1.0, 3.0],
            ],
        )
    }

    #[test]
    fn noiseless_reconciliation_matches_pivot_ratios() {
        let g = four_action_game();
        let (est, pivots) = exact_estimates(&g, 0);
        for solver in [
            ScaleSolver::NormalEquations,
            ScaleSolver::Kaczmarz { sweeps: 20_000 },
        ] {
            let config = LearnConfig {
                scale_solver: solver,
                ..LearnConfig::default()
            };
            let rec = reconcile_scales(&est, &config).unwrap();
            for (pair, lambda) in &rec.multipliers {
                let expected = pivots[pair] / pivots[&(0, 1)];
                assert!(
                    (lambda - expected).abs() < 1e-9,
                    "{pair:?}: {lambda} vs {expected}"
                );
            }
            assert!(rec.residual < 1e-9);
        }
    }

    #[test]
    fn two_actions_need_no_reconciliation() {
        let g = two_by(2, &[&[0.0, 1.0], &[1.0, 0.0]]);
        let (est, _) = exact_estimates(&g, 0);
        let rec = reconcile_scales(&est, &LearnConfig::default()).unwrap();
        assert_eq!(rec.multipliers[&(0, 1)], 1.0);
        assert_eq!(rec.residual, 0.0);
    }

    #[test]
    fn corrupted_pair_is_flagged() {
        let g = four_action_game();
        let (mut est, _) = exact_estimates(&g, 0);
        // Halve the negative part of (1, 2) only, so no rescaling can fix it.
        for v in est.pairs.get_mut(&(1, 2)).unwrap().values.iter_mut() {
            if *v < 0.0 {
                *v *= 2.0;
            }
        }
        match reconcile_scales(&est, &LearnConfig::default()) {
            Err(Error::InconsistentScales {
                triple, residual, ..
            }) => {
                assert!(residual > LearnConfig::default().tri_tol);
                let (a, b, c) = triple;
                let pairs = [(a, b), (b, c), (a, c)];
                assert!(pairs.contains(&(1, 2)), "{triple:?}");
            }
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn assembly_is_a_class_member() {
        let g = four_action_game();
        let (est, _) = exact_estimates(&g, 0);
        let rec = reconcile_scales(&est, &LearnConfig::default()).unwrap();
        let u = assemble_utilities(g.indexing(), &est, &rec).unwrap();
        let hat = g.with_agent_utilities(0, u).unwrap();
        assert!(alignment_error(&hat, &g, 0).unwrap() < 1e-9);
        // Re-stacking reproduces the reconciled reference pairs exactly.
        for j in 1..4 {
            let w = hat.difference_vector(0, 0, j).unwrap().values;
            assert_eq!(w, rec.scaled(&est, 0, j).unwrap());
        }
    }

    #[test]
    fn alignment_error_examples() {
        let g = four_action_game();
        let u = g.utilities()[0].iter().map(|v| 2.0 * v + 7.0).collect();
        let hat = g.with_agent_utilities(0, u).unwrap();
        assert!(alignment_error(&hat, &g, 0).unwrap() < 1e-9);
        let u = g.utilities()[0].iter().map(|v| -v).collect();
        let flipped = g.with_agent_utilities(0, u).unwrap();
        assert!(alignment_error(&flipped, &g, 0).unwrap() > 0.1);
    }

    #[test]
    fn learns_counterexample_player_one() {
        let (g, _) = catalog::counterexample_pair();
        let mut oracle = IdealOracle::new(g.clone());
        let config = LearnConfig::default();
        let rec = learn_game(&mut oracle, g.indexing(), &config).unwrap();
        for agent in 0..2 {
            let err = alignment_error(&rec.game, &g, agent).unwrap();
            assert!(err <= 5e-3, "agent {agent}: {err}");
        }
        assert_eq!(
            rec.queries.mechanisms,
            query_budget(g.indexing(), config.eps, config.ratio_cap)
        );
    }
}
