//! Stacked utility-difference parameters, correlated-equilibrium solving and
//! regret accounting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::behavior::FeedbackRecord;
use crate::error::{Error, Result};
use crate::game::{DifferenceVector, Game, Mechanism, ProfileIndexing};
use crate::lp::{LinearProgram, RowKind};

/// Tolerance on correlated-equilibrium constraints of a solved mechanism.
pub const FEAS_TOL: f64 = 1e-9;

/// Block layout of the stacked parameter.
///
/// Agent `i` owns `m_i - 1` consecutive blocks of length `d_i`; block `j`
/// (for actions `j = 1..m_i`) holds `w_i(a^0, a^j)`. Offsets are cumulative,
/// so agents with different action counts pack without gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackedLayout {
    indexing: ProfileIndexing,
    agent_offsets: Vec<usize>,
    len: usize,
}

impl StackedLayout {
    pub fn new(indexing: ProfileIndexing) -> Self {
        let mut agent_offsets = Vec::with_capacity(indexing.agent_count());
        let mut len = 0;
        for i in 0..indexing.agent_count() {
            agent_offsets.push(len);
            len += (indexing.actions(i) - 1) * indexing.opponent_count(i);
        }
        Self {
            indexing,
            agent_offsets,
            len,
        }
    }

    pub fn indexing(&self) -> &ProfileIndexing {
        &self.indexing
    }

    /// `N = sum_i (m_i - 1) d_i`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coordinates of block `(agent, action)`, `action >= 1`.
    pub fn block(&self, agent: usize, action: usize) -> Range<usize> {
        debug_assert!(action >= 1 && action < self.indexing.actions(agent));
        let d = self.indexing.opponent_count(agent);
        let start = self.agent_offsets[agent] + (action - 1) * d;
        start..start + d
    }

    pub fn block_checked(&self, agent: usize, action: usize) -> Result<Range<usize>> {
        self.indexing.check_action(agent, action)?;
        if action == 0 {
            return Err(Error::MalformedLayout(
                "reference action has no block".into(),
            ));
        }
        Ok(self.block(agent, action))
    }
}

/// `w* = [w_i(a^0, a^j)]_{i, j >= 1}` in [`StackedLayout`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedParameter {
    layout: StackedLayout,
    values: Vec<f64>,
}

impl StackedParameter {
    pub fn new(layout: StackedLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::MalformedLayout(format!(
                "{} values for layout of length {}",
                values.len(),
                layout.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedLayout("non-finite entry".into()));
        }
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: StackedLayout) -> Self {
        let values = vec![0.0; layout.len()];
        Self { layout, values }
    }

    pub fn from_game(game: &Game) -> Self {
        let layout = StackedLayout::new(game.indexing().clone());
        let mut values = vec![0.0; layout.len()];
        for i in 0..game.agent_count() {
            for j in 1..game.indexing().actions(i) {
                let w = game.difference_vector(i, 0, j).expect("in range");
                values[layout.block(i, j)].copy_from_slice(&w.values);
            }
        }
        Self { layout, values }
    }

    pub fn layout(&self) -> &StackedLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    /// `w_i(from, to)` through the reference action.
    pub fn difference(&self, agent: usize, from: usize, to: usize) -> Result<Vec<f64>> {
        let ix = self.layout.indexing();
        ix.check_action(agent, from)?;
        ix.check_action(agent, to)?;
        let d = ix.opponent_count(agent);
        Ok(match (from, to) {
            (f, t) if f == t => vec![0.0; d],
            (0, t) => self.values[self.layout.block(agent, t)].to_vec(),
            (f, 0) => self.values[self.layout.block(agent, f)]
                .iter()
                .map(|v| -v)
                .collect(),
            (f, t) => {
                let a = &self.values[self.layout.block(agent, f)];
                let b = &self.values[self.layout.block(agent, t)];
                b.iter().zip(a).map(|(b, a)| b - a).collect()
            }
        })
    }

    /// Every difference vector of every agent over ordered pairs `from != to`.
    pub fn expand_pairs(&self) -> Vec<DifferenceVector> {
        let ix = self.layout.indexing();
        let mut out = Vec::new();
        for agent in 0..ix.agent_count() {
            for from in 0..ix.actions(agent) {
                for to in (0..ix.actions(agent)).filter(|&t| t != from) {
                    out.push(DifferenceVector {
                        agent,
                        from_action: from,
                        to_action: to,
                        values: self.difference(agent, from, to).expect("in range"),
                    });
                }
            }
        }
        out
    }

    /// Representative game with `u_i(a^0, ·) = 0` and `u_i(a^j, ·) = w_i(a^0, a^j)`.
    pub fn to_game(&self) -> Game {
        let ix = self.layout.indexing();
        let mut utilities = vec![vec![0.0; ix.profile_count()]; ix.agent_count()];
        for (agent, u) in utilities.iter_mut().enumerate() {
            for j in 1..ix.actions(agent) {
                let block = &self.values[self.layout.block(agent, j)];
                for (k, &v) in block.iter().enumerate() {
                    u[ix.compose(agent, j, k)] = v;
                }
            }
        }
        Game::from_utilities(ix.sizes(), utilities).expect("layout is a valid shape")
    }

    pub fn dot(&self, q: &[f64]) -> f64 {
        crate::game::dot(&self.values, q)
    }
}

/// A correlated equilibrium of the candidate game encoded by `w`.
///
/// Among all equilibria the one maximizing the smallest profile probability
/// is returned, which yields the uniform distribution whenever it is an
/// equilibrium.
pub fn solve_ce(w: &StackedParameter) -> Result<Mechanism> {
    match solve_ce_with(w, true) {
        Ok(x) => Ok(x),
        Err(_) => solve_ce_with(w, false),
    }
}

fn solve_ce_with(w: &StackedParameter, spread: bool) -> Result<Mechanism> {
    let ix = w.layout().indexing();
    let m = ix.profile_count();
    let vars = m + 1;
    let mut lp = LinearProgram::new(vars);
    if spread {
        let mut objective = vec![0.0; vars];
        objective[m] = 1.0;
        lp.maximize(objective);
    }
    let mut mass = vec![1.0; vars];
    mass[m] = 0.0;
    lp.add_row(mass, RowKind::Eq, 1.0);
    let constraints = ce_constraints(w);
    // Rows are homogeneous; unit max-norm keeps pivots well scaled when `w`
    // is tiny.
    for (_, row) in &constraints {
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            continue;
        }
        let mut coeffs: Vec<f64> = row.iter().map(|v| v / scale).collect();
        coeffs.push(0.0);
        lp.add_row(coeffs, RowKind::Le, 0.0);
    }
    if spread {
        for a in 0..m {
            let mut coeffs = vec![0.0; vars];
            coeffs[a] = -1.0;
            coeffs[m] = 1.0;
            lp.add_row(coeffs, RowKind::Le, 0.0);
        }
    }
    let sol = lp.solve()?;
    let weights: Vec<f64> = sol.x[..m].iter().map(|&p| p.max(0.0)).collect();
    let x = Mechanism::from_weights(weights)?;
    let violation = constraints
        .iter()
        .map(|(_, row)| crate::game::dot(row, x.probs()))
        .fold(0.0, f64::max);
    if violation > FEAS_TOL {
        return Err(Error::SolverFailure(format!(
            "equilibrium constraint violated by {violation:e}"
        )));
    }
    Ok(x)
}

/// Rows `c` with `c . x = phi_i(rec, dev, x)` for every `(agent, rec, dev)`.
pub fn ce_constraints(w: &StackedParameter) -> Vec<((usize, usize, usize), Vec<f64>)> {
    let ix = w.layout().indexing();
    let mut rows = Vec::new();
    for agent in 0..ix.agent_count() {
        let m = ix.actions(agent);
        for rec in 0..m {
            for dev in (0..m).filter(|&d| d != rec) {
                let diff = w.difference(agent, rec, dev).expect("in range");
                let mut row = vec![0.0; ix.profile_count()];
                for (k, &v) in diff.iter().enumerate() {
                    row[ix.compose(agent, rec, k)] = v;
                }
                rows.push(((agent, rec, dev), row));
            }
        }
    }
    rows
}

/// Largest incentive to deviate under the candidate parameter.
pub fn max_incentive(w: &StackedParameter, x: &Mechanism) -> f64 {
    ce_constraints(w)
        .iter()
        .map(|(_, row)| crate::game::dot(row, x.probs()))
        .fold(0.0, f64::max)
}

/// `r(a, a*, x) = sum_i phi_i(a_i, a*_i, x)` against the true game.
pub fn round_regret(game: &Game, fb: &FeedbackRecord) -> Result<f64> {
    let ix = game.indexing();
    game.check_mechanism(&fb.mechanism)?;
    ix.check_profile(fb.recommended)?;
    ix.check_profile(fb.realized)?;
    let mut total = 0.0;
    for agent in 0..ix.agent_count() {
        let rec = ix.action_of(fb.recommended, agent);
        let real = ix.action_of(fb.realized, agent);
        total += game.incentive(&fb.mechanism, agent, rec, real)?;
    }
    Ok(total)
}

/// Per-round regret values and their running total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    regrets: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Regrets down to this value count as float noise around zero.
const REGRET_FLOOR: f64 = -1e-6;

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, regret: f64) -> Result<()> {
        if !(regret >= REGRET_FLOOR) {
            return Err(Error::InvalidParameter(format!("negative regret {regret}")));
        }
        let r = regret.max(0.0);
        let total = self.total() + r;
        self.regrets.push(r);
        self.cumulative.push(total);
        Ok(())
    }

    pub fn regrets(&self) -> &[f64] {
        &self.regrets
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn rounds(&self) -> usize {
        self.regrets.len()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Mean per-round regret over rounds `range` (0-based, clamped).
    pub fn window_mean(&self, range: Range<usize>) -> f64 {
        let end = range.end.min(self.regrets.len());
        let start = range.start.min(end);
        if end == start {
            return 0.0;
        }
        self.regrets[start..end].iter().sum::<f64>() / (end - start) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn layout(sizes: &[usize]) -> StackedLayout {
        StackedLayout::new(ProfileIndexing::new(sizes.to_vec()).unwrap())
    }

    #[test]
    fn layout_offsets_are_cumulative() {
        let l = layout(&[2, 3, 4]);
        // d = 12, 8, 6 ; blocks = 1, 2, 3
        assert_eq!(l.len(), 12 + 2 * 8 + 3 * 6);
        assert_eq!(l.block(0, 1), 0..12);
        assert_eq!(l.block(1, 1), 12..20);
        assert_eq!(l.block(1, 2), 20..28);
        assert_eq!(l.block(2, 3), 40..46);
        assert!(l.block_checked(1, 0).is_err());
        assert!(StackedParameter::new(l, vec![0.0; 3]).is_err());
    }

    #[test]
    fn expand_examples() {
        // Agent 0 with three actions facing a two-action opponent.
        let l = layout(&[3, 2]);
        let mut values = vec![0.0; l.len()];
        values[l.block(0, 1)].copy_from_slice(&[1.0, -1.0]);
        values[l.block(0, 2)].copy_from_slice(&[3.0, -2.0]);
        let w = StackedParameter::new(l, values).unwrap();
        assert_eq!(w.difference(0, 1, 2).unwrap(), vec![2.0, -1.0]);
        assert_eq!(w.difference(0, 1, 0).unwrap(), vec![-1.0, 1.0]);
        let pairs = w.expand_pairs();
        // 3*2 ordered pairs for agent 0, 2*1 for agent 1
        assert_eq!(pairs.len(), 8);
    }

    #[test]
    fn expand_round_trips_game_exactly() {
        // Dyadic utilities so every subtraction is exact.
        let (g, _) = catalog::counterexample_pair();
        let w = StackedParameter::from_game(&g);
        for dv in w.expand_pairs() {
            let direct = g
                .difference_vector(dv.agent, dv.from_action, dv.to_action)
                .unwrap();
            assert_eq!(dv.values, direct.values);
        }
    }

    #[test]
    fn zero_parameter_gives_uniform() {
        let w = StackedParameter::zeros(layout(&[2, 3]));
        let x = solve_ce(&w).unwrap();
        for &p in x.probs() {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_strategy_point_mass() {
        let g = catalog::prisoners_dilemma();
        let x = solve_ce(&StackedParameter::from_game(&g)).unwrap();
        let target = Mechanism::point_mass(4, g.indexing().encode(&[1, 1]).unwrap());
        assert!(x.total_variation(&target) < 1e-6);
    }

    #[test]
    fn rock_paper_scissors_is_feasible() {
        let g = catalog::rock_paper_scissors();
        let uniform = Mechanism::uniform(9);
        assert!(g.is_epsilon_ce(&uniform, 1e-12).unwrap().holds);
        let x = solve_ce(&StackedParameter::from_game(&g)).unwrap();
        assert!(g.is_epsilon_ce(&x, 1e-9).unwrap().holds);
    }

    #[test]
    fn tiny_parameters_solve_like_unit_ones() {
        let l = layout(&[2, 2]);
        let w = StackedParameter::new(
            l,
            vec![
                2.368909943776125e-6,
                -8.634810470425954e-5,
                1.775334695303516e-5,
                6.157006305343061e-5,
            ],
        )
        .unwrap();
        let x = solve_ce(&w).unwrap();
        assert!(max_incentive(&w, &x) <= 1e-12);
        let big = StackedParameter::new(
            w.layout().clone(),
            w.values().iter().map(|v| v * 1e5).collect(),
        )
        .unwrap();
        assert!(max_incentive(&big, &x) <= 1e-9);
    }

    #[test]
    fn three_player_gaussian_parameters() {
        use rand_distr::{Distribution, StandardNormal};
        for t in 0..100 {
            let mut rng = crate::seed::stream(17, &[t]);
            let l = layout(&[3, 3, 3]);
            let values = (0..l.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let w = StackedParameter::new(l, values).unwrap();
            let x = solve_ce(&w).unwrap();
            assert!(max_incentive(&w, &x) <= FEAS_TOL, "parameter {t}");
        }
    }

    #[test]
    fn regret_examples() {
        let (g, _) = catalog::counterexample_pair();
        let ix = g.indexing();
        let rec = ix.encode(&[0, 0]).unwrap();
        let x = Mechanism::point_mass(8, rec);
        let comply = FeedbackRecord {
            mechanism: x.clone(),
            recommended: rec,
            realized: rec,
            round: 0,
        };
        assert_eq!(round_regret(&g, &comply).unwrap(), 0.0);
        let deviate = FeedbackRecord {
            realized: ix.encode(&[3, 0]).unwrap(),
            ..comply.clone()
        };
        assert_eq!(round_regret(&g, &deviate).unwrap(), 8.0);

        // A tie: constant game, every deviation has zero incentive.
        let c = catalog::constant(&[2, 2]);
        let tie = FeedbackRecord {
            mechanism: Mechanism::uniform(4),
            recommended: 0,
            realized: 3,
            round: 1,
        };
        assert_eq!(round_regret(&c, &tie).unwrap(), 0.0);
    }

    #[test]
    fn ledger_accumulates() {
        let mut ledger = RegretLedger::new();
        ledger.push(1.0).unwrap();
        ledger.push(0.0).unwrap();
        ledger.push(2.5).unwrap();
        assert_eq!(ledger.cumulative(), &[1.0, 1.0, 3.5]);
        assert!(ledger.push(-1.0).is_err());
        assert_eq!(ledger.window_mean(0..2), 0.5);
    }
}
