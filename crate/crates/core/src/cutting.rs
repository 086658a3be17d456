//! Low-regret recommendations by cutting planes on the stacked parameter.
//!
//! The knowledge set is the unit ball intersected with the halfspaces
//! `<w, q_t> >= 0` contributed by every deviation seen so far. Each time a
//! deviation is observed the next query point is the centroid of the set
//! inflated by `rho`, estimated by hit-and-run, and the next recommendation
//! is a correlated equilibrium of the game that point encodes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::behavior::{sample_index, FeedbackRecord, ResponseModel};
use crate::ce::{round_regret, solve_ce, RegretLedger, StackedLayout, StackedParameter};
use crate::error::{Error, Result};
use crate::game::{dot, Game, Mechanism};
use crate::linalg;
use crate::seed;

/// Normals whose norm falls below this are treated as zero cuts.
const ZERO_NORMAL: f64 = 1e-15;
/// Unit normals closer than this are the same halfspace.

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// A cut `<w, normal> >= 0` and the deviations `(agent, rec, dev)` that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatingHyperplane {
    pub normal: Vec<f64>,
    pub deviations: Vec<(usize, usize, usize)>,
}

/// Builds the cut from one round's recommendation and realized profile.
///
/// For each deviating agent with recommended action `j` and deviation `j*`
/// the slice `x(a^j, ·)` is subtracted from block `(i, j)` and added to
/// block `(i, j*)`, skipping the reference action, so that
/// `<w*, q> = sum_i phi_i(rec_i, dev_i, x)`.
pub fn build_oracle_cut(
    x: &Mechanism,
    recommended: usize,
    realized: usize,
    layout: &StackedLayout,
) -> Result<SeparatingHyperplane> {
    let ix = layout.indexing();
    ix.check_profile(recommended)?;
    ix.check_profile(realized)?;
    if x.len() != ix.profile_count() {
        return Err(Error::ShapeMismatch(format!(
            "mechanism has {} entries, game has {} profiles",
            x.len(),
            ix.profile_count()
        )));
    }
    if recommended == realized {
        return Err(Error::NoDeviation);
    }
    let mut normal = vec![0.0; layout.len()];
    let mut deviations = Vec::new();
    for agent in 0..ix.agent_count() {
        let rec = ix.action_of(recommended, agent);
        let dev = ix.action_of(realized, agent);
        if rec == dev {
            continue;
        }
        deviations.push((agent, rec, dev));
        let slice = x.slice(ix, agent, rec)?;
        if rec != 0 {
            for (q, s) in normal[layout.block(agent, rec)].iter_mut().zip(&slice) {
                *q -= s;
            }
        }
        if dev != 0 {
            for (q, s) in normal[layout.block(agent, dev)].iter_mut().zip(&slice) {
                *q += s;
            }
        }
    }
    Ok(SeparatingHyperplane { normal, deviations })
}

/// Unit ball intersected with homogeneous halfspaces `<w, q> >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeSet {
    dimension: usize,
    cuts: Vec<SeparatingHyperplane>,
    // Irredundant nonzero unit normals; membership depends only on these.
    units: Vec<Vec<f64>>,
}

impl KnowledgeSet {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            cuts: Vec::new(),
            units: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cuts(&self) -> &[SeparatingHyperplane] {
        &self.cuts
    }

    /// Irredundant nonzero cut directions, normalized.
    pub fn unit_normals(&self) -> &[Vec<f64>] {
        &self.units
    }

    pub fn push_cut(&mut self, cut: SeparatingHyperplane) -> Result<()> {
        if cut.normal.len() != self.dimension {
            return Err(Error::ShapeMismatch(format!(
                "cut of length {} for dimension {}",
                cut.normal.len(),
                self.dimension
            )));
        }
        if cut.normal.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("cut normal is not finite".into()));
        }
        let n = norm(&cut.normal);
        if n > ZERO_NORMAL {
            let unit: Vec<f64> = cut.normal.iter().map(|v| v / n).collect();
            if !in_cone(&self.units, &unit) {
                self.units.push(unit);
                self.prune_units();
            }
        }
        self.cuts.push(cut);
        Ok(())
    }

    // Drops normals that are nonnegative combinations of the others; the
    // halfspaces they define are implied (Farkas).
    fn prune_units(&mut self) {
        let mut i = 0;
        while i < self.units.len() {
            let others: Vec<Vec<f64>> = self
                .units
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, u)| u.clone())
                .collect();
            if in_cone(&others, &self.units[i]) {
                self.units.remove(i);
            } else {
                i += 1;
            }
        }
    }

    pub fn apply_cut(mut self, cut: SeparatingHyperplane) -> Result<Self> {
        self.push_cut(cut)?;
        Ok(self)
    }

    /// Smallest of `<w, q_hat>` over all cuts (`+inf` without cuts).
    pub fn min_slack(&self, w: &[f64]) -> f64 {
        self.units
            .iter()
            .map(|u| dot(w, u))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        norm(w) <= 1.0 + tol && self.min_slack(w) >= -tol
    }

    /// Exact Euclidean distance to the set.
    ///
    /// The set is a polyhedral cone `K` cut by the unit ball, so the
    /// projection is `P_B(P_K(w))`; `P_K(w) = w - P_polar(w)` with the polar
    /// part found by non-negative least squares over the negated normals.
    pub fn distance(&self, w: &[f64]) -> f64 {
        if self.contains(w, 0.0) {
            return 0.0;
        }
        let mut p = w.to_vec();
        if self.min_slack(w) < 0.0 {
            let columns: Vec<Vec<f64>> = self
                .units
                .iter()
                .map(|u| u.iter().map(|v| -v).collect())
                .collect();
            let weights = linalg::nnls(&columns, w, PROJECTION_TOL);
            for (col, &l) in columns.iter().zip(&weights) {
                for (pk, ck) in p.iter_mut().zip(col) {
                    *pk -= l * ck;
                }
            }
        }
        let r = norm(&p);
        if r > 1.0 {
            p.iter_mut().for_each(|v| *v /= r);
        }
        let diff: Vec<f64> = w.iter().zip(&p).map(|(a, b)| a - b).collect();
        norm(&diff)
    }

    /// Membership in the set inflated by `rho`: `dist(w, C) <= rho`.
    pub fn buffered_contains(&self, w: &[f64], rho: f64) -> bool {
        let r = norm(w);
        if r > 1.0 + rho {
            return false;
        }
        let slack = self.min_slack(w);
        if slack < -rho {
            return false;
        }
        if r <= 1.0 && slack >= 0.0 {
            return true;
        }
        self.distance(w) <= rho
    }

    /// Largest `t >= 0` with `w + t u` in the set (`w` a member, `u` unit).
    fn chord_end(&self, w: &[f64], u: &[f64], radius: f64, offset: f64) -> f64 {
        // |w + t u| = radius
        let b = dot(w, u);
        let c = dot(w, w) - radius * radius;
        let mut t = -b + libm::sqrt((b * b - c).max(0.0));
        for q in &self.units {
            let along = dot(u, q);
            if along < 0.0 {
                t = t.min((dot(w, q) + offset) / -along);
            }
        }
        t.max(0.0)
    }
}

const PROJECTION_TOL: f64 = 1e-13;
/// A unit normal within this distance of the cone of the others is implied.
const REDUNDANT_TOL: f64 = 1e-10;

fn in_cone(generators: &[Vec<f64>], v: &[f64]) -> bool {
    if generators.is_empty() {
        return false;
    }
    let l = linalg::nnls(generators, v, PROJECTION_TOL);
    let mut r = v.to_vec();
    for (g, &lj) in generators.iter().zip(&l) {
        for (ri, gi) in r.iter_mut().zip(g) {
            *ri -= lj * gi;
        }
    }
    norm(&r) <= REDUNDANT_TOL
}
/// Chord ends are located to this fraction of the uncertain stretch.
const CHORD_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Retained samples after thinning (at least 1000).
    pub budget: usize,
    /// Burn-in steps per dimension.
    pub burn_in_per_dim: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            budget: 1000,
            burn_in_per_dim: 50,
        }
    }
}

/// Monte-Carlo centroid of the buffered knowledge set.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidEstimate {
    pub point: Vec<f64>,
    /// Per-coordinate standard error of the mean.
    pub coordinate_se: Vec<f64>,
    /// Euclidean norm of `coordinate_se`.
    pub standard_error: f64,
    pub samples: Vec<Vec<f64>>,
    /// The chain started from the origin because no start was supplied or
    /// the supplied one left the buffered set.
    pub started_at_origin: bool,
}

/// Hit-and-run estimate of the centroid of `{w : dist(w, C) <= rho}`.
///
/// Chords are found by bisection on the buffered membership test between
/// the exact chord of `C` and the chord of its `rho`-inflated outer bound.
pub fn buffered_centroid(
    ks: &KnowledgeSet,
    rho: f64,
    sampler: &SamplerConfig,
    start: Option<&[f64]>,
    rng: &mut ChaCha8Rng,
) -> Result<CentroidEstimate> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("buffer radius {rho}")));
    }
    if sampler.budget < 1000 {
        return Err(Error::InvalidParameter(format!(
            "sampler budget {} is below 1000",
            sampler.budget
        )));
    }
    let n = ks.dimension();
    if n == 0 {
        return Ok(CentroidEstimate {
            point: Vec::new(),
            coordinate_se: Vec::new(),
            standard_error: 0.0,
            samples: Vec::new(),
            started_at_origin: true,
        });
    }
    let (mut w, started_at_origin) = match start {
        Some(s) if s.len() == n && ks.buffered_contains(s, rho) => (s.to_vec(), false),
        _ => (vec![0.0; n], true),
    };
    let burn_in = sampler.burn_in_per_dim * n;
    let thin = n;
    let total = burn_in + sampler.budget * thin;
    let mut samples = Vec::with_capacity(sampler.budget);
    let mut u = vec![0.0; n];
    for step in 0..total {
        loop {
            for v in u.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let r = norm(&u);
            if r > 1e-12 {
                u.iter_mut().for_each(|v| *v /= r);
                break;
            }
        }
        let forward = chord_extent(ks, &w, &u, rho);
        let back: Vec<f64> = u.iter().map(|v| -v).collect();
        let backward = chord_extent(ks, &w, &back, rho);
        let t = rng.random_range(-backward..=forward);
        for (wi, ui) in w.iter_mut().zip(&u) {
            *wi += t * ui;
        }
        if step >= burn_in && (step - burn_in + 1).is_multiple_of(thin) {
            samples.push(w.clone());
        }
    }
    let count = samples.len() as f64;
    let mut point = vec![0.0; n];
    for s in &samples {
        for (p, v) in point.iter_mut().zip(s) {
            *p += v / count;
        }
    }
    let mut coordinate_se = vec![0.0; n];
    for s in &samples {
        for k in 0..n {
            let d = s[k] - point[k];
            coordinate_se[k] += d * d;
        }
    }
    for se in coordinate_se.iter_mut() {
        *se = libm::sqrt(*se / (count - 1.0) / count);
    }
    let standard_error = norm(&coordinate_se);
    Ok(CentroidEstimate {
        point,
        coordinate_se,
        standard_error,
        samples,
        started_at_origin,
    })
}

/// Distance from `w` to the buffered boundary along unit direction `u`.
fn chord_extent(ks: &KnowledgeSet, w: &[f64], u: &[f64], rho: f64) -> f64 {
    let outer = ks.chord_end(w, u, 1.0 + rho, rho);
    let mut lo = if ks.contains(w, 0.0) {
        ks.chord_end(w, u, 1.0, 0.0).min(outer)
    } else {
        0.0
    };
    let mut hi = outer;
    let tol = ((hi - lo) * CHORD_REL_TOL).max(1e-12);
    let at = |t: f64| -> Vec<f64> { w.iter().zip(u).map(|(a, b)| a + t * b).collect() };
    if hi - lo > tol && ks.buffered_contains(&at(hi), rho) {
        return hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ks.buffered_contains(&at(mid), rho) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `game` scaled so its stacked parameter has unit norm.
pub fn normalized_game(game: &Game) -> Result<Game> {
    let n = StackedParameter::from_game(game).norm();
    if n == 0.0 {
        return Ok(game.clone());
    }
    game.scaled(1.0 / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowRegretConfig {
    pub rounds: u64,
    /// Buffer radius; `None` means `1 / rounds`.
    pub rho: Option<f64>,
    pub sampler: SamplerConfig,
    /// Seeds the recommendation draws and the centroid sampler.
    pub seed: u64,
}

impl LowRegretConfig {
    pub fn new(rounds: u64, seed: u64) -> Self {
        Self {
            rounds,
            rho: None,
            sampler: SamplerConfig::default(),
            seed,
        }
    }

    pub fn buffer(&self) -> f64 {
        self.rho.unwrap_or(1.0 / self.rounds as f64)
    }
}

const RECOMMEND_STREAM: u64 = 1;
const CENTROID_STREAM: u64 = 2;

/// Everything decided and observed in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub mechanism: Mechanism,
    pub recommended: usize,
    pub realized: usize,
    pub regret: f64,
    /// Query point `w^(t)` the mechanism is an equilibrium of.
    pub query_point: Vec<f64>,
    /// Set when this round recomputed the centroid.
    pub centroid_se: Option<f64>,
    pub cut: Option<SeparatingHyperplane>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowRegretRun {
    pub ledger: RegretLedger,
    pub transcript: Vec<RoundRecord>,
    pub knowledge: KnowledgeSet,
}

/// Failure that aborted a run, with the rounds completed before it.
#[derive(Debug, Clone, PartialEq)]
pub struct AbortedRun {
    pub error: Error,
    pub partial: LowRegretRun,
}

/// Runs the recommendation loop for `config.rounds` rounds.
///
/// `truth` scores regret and is never shown to the learner; pass the
/// unit-norm game the responses come from.
pub fn run_low_regret<R: ResponseModel + ?Sized>(
    responses: &mut R,
    truth: &Game,
    config: &LowRegretConfig,
) -> core::result::Result<LowRegretRun, AbortedRun> {
    let layout = StackedLayout::new(truth.indexing().clone());
    let mut run = LowRegretRun {
        ledger: RegretLedger::new(),
        transcript: Vec::new(),
        knowledge: KnowledgeSet::new(layout.len()),
    };
    let mut state: Option<(Mechanism, Vec<f64>)> = None;
    let mut last_samples: Vec<Vec<f64>> = Vec::new();
    let mut deviated = true;
    for round in 0..config.rounds {
        match play_round(
            responses,
            truth,
            config,
            &layout,
            &mut run,
            &mut state,
            &mut last_samples,
            deviated,
            round,
        ) {
            Ok(d) => deviated = d,
            Err(error) => {
                return Err(AbortedRun {
                    error,
                    partial: run,
                })
            }
        }
    }
    Ok(run)
}

#[allow(clippy::too_many_arguments)]
fn play_round<R: ResponseModel + ?Sized>(
    responses: &mut R,
    truth: &Game,
    config: &LowRegretConfig,
    layout: &StackedLayout,
    run: &mut LowRegretRun,
    state: &mut Option<(Mechanism, Vec<f64>)>,
    last_samples: &mut Vec<Vec<f64>>,
    deviated: bool,
    round: u64,
) -> Result<bool> {
    let mut centroid_se = None;
    if deviated || state.is_none() {
        let ks = &run.knowledge;
        let start = last_samples
            .iter()
            .filter(|s| ks.contains(s, 0.0))
            .max_by(|a, b| slack(ks, a).total_cmp(&slack(ks, b)))
            .cloned();
        let mut rng = seed::stream(config.seed, &[CENTROID_STREAM, round]);
        let estimate = buffered_centroid(
            ks,
            config.buffer(),
            &config.sampler,
            start.as_deref(),
            &mut rng,
        )?;
        let w = StackedParameter::new(layout.clone(), estimate.point.clone())?;
        let x = solve_ce(&w)?;
        centroid_se = Some(estimate.standard_error);
        *last_samples = estimate.samples;
        *state = Some((x, estimate.point));
    }
    let (x, w) = state.as_ref().expect("set above");
    let mut rng = seed::stream(config.seed, &[RECOMMEND_STREAM, round]);
    let recommended = sample_index(x.probs(), rng.random::<f64>());
    let realized = responses.respond(x, recommended, round)?;
    let feedback = FeedbackRecord {
        mechanism: x.clone(),
        recommended,
        realized,
        round,
    };
    let regret = round_regret(truth, &feedback)?;
    run.ledger.push(regret)?;
    let cut = if realized != recommended {
        let cut = build_oracle_cut(x, recommended, realized, layout)?;
        run.knowledge.push_cut(cut.clone())?;
        Some(cut)
    } else {
        None
    };
    run.transcript.push(RoundRecord {
        round,
        mechanism: x.clone(),
        recommended,
        realized,
        regret,
        query_point: w.clone(),
        centroid_se,
        cut,
    });
    Ok(realized != recommended)
}

/// Distance to the nearest face of the set (ball or cut).
fn slack(ks: &KnowledgeSet, w: &[f64]) -> f64 {
    (1.0 - norm(w)).min(ks.min_slack(w))
}
