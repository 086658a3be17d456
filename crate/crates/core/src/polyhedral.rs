//! Geometry of what best-response feedback can and cannot reveal.
//!
//! Two games are equivalent when each agent's utilities differ by a positive
//! scale and a per-opponent-profile shift. Best-response feedback only
//! reveals, per agent, which action maximizes `<y, u(a, ·)>` for directions
//! `y` in the positive orthant, i.e. the normal fan of the utility polytope
//! restricted to that orthant. In two dimensions the fan is computed exactly;
//! otherwise directions are sampled.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;

use crate::affine::{fit_affine, utility_rows};
use crate::error::{Error, Result};
use crate::game::{dot, Game};

/// Residual below which an affine fit counts as exact.
pub const EQUIVALENCE_TOL: f64 = 1e-8;
/// Breakpoint angles closer than this (radians) coincide.
pub const ANGLE_TOL: f64 = 1e-9;
/// Relative tolerance for argmax ties.
const ARGMAX_TOL: f64 = 1e-12;

/// The utility vectors `u_i(a, ·)` of one agent, one point per action.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityPolytope {
    pub agent: usize,
    pub points: Vec<Vec<f64>>,
}

impl UtilityPolytope {
    pub fn from_game(game: &Game, agent: usize) -> Result<Self> {
        game.indexing().check_agent(agent)?;
        Ok(Self {
            agent,
            points: utility_rows(game, agent),
        })
    }

    pub fn new(agent: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        if points.is_empty() || d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::ShapeMismatch(
                "points must share one nonzero dimension".into(),
            ));
        }
        Ok(Self { agent, points })
    }

    pub fn dimension(&self) -> usize {
        self.points[0].len()
    }

    /// Actions maximizing `<y, u(a, ·)>`, ties within a relative tolerance.
    pub fn argmax(&self, y: &[f64]) -> Vec<usize> {
        argmax_set(&self.points, y)
    }

    fn require_planar(&self) -> Result<()> {
        if self.dimension() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "agent {} has {} opponent profiles; the exact fan needs 2",
                self.agent,
                self.dimension()
            )));
        }
        for a in 0..self.points.len() {
            for b in a + 1..self.points.len() {
                if self.points[a] == self.points[b] {
                    return Err(Error::InvalidGame(format!(
                        "agent {}: actions {a} and {b} have identical utilities",
                        self.agent
                    )));
                }
            }
        }
        Ok(())
    }
}

fn argmax_set(points: &[Vec<f64>], y: &[f64]) -> Vec<usize> {
    let values: Vec<f64> = points.iter().map(|p| dot(p, y)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    (0..values.len())
        .filter(|&a| values[a] >= best - ARGMAX_TOL * scale)
        .collect()
}

/// Per-agent result of fitting `g2 = scale * g1 + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentFit {
    pub agent: usize,
    pub scale: f64,
    pub shift: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub agents: Vec<AgentFit>,
}

/// Least-squares test of per-agent positive affine equivalence.
pub fn check_equivalence(g1: &Game, g2: &Game) -> Result<EquivalenceReport> {
    if g1.indexing() != g2.indexing() {
        return Err(Error::ShapeMismatch("games have different shapes".into()));
    }
    let mut agents = Vec::new();
    for agent in 0..g1.agent_count() {
        let source = utility_rows(g1, agent);
        let target = utility_rows(g2, agent);
        let fit = fit_affine(&target, &source, false);
        let mut scale = fit.scale;
        // A source constant in every column fixes no scale; any positive
        // one works when the target is constant too.
        if scale == 0.0 && fit.max_residual <= EQUIVALENCE_TOL && column_spread(&source) == 0.0 {
            scale = 1.0;
        }
        let shift = if scale == fit.scale {
            fit.shift
        } else {
            (0..source[0].len())
                .map(|k| target[0][k] - scale * source[0][k])
                .collect()
        };
        agents.push(AgentFit {
            agent,
            scale,
            shift,
            residual: fit.max_residual,
        });
    }
    let equivalent = agents
        .iter()
        .all(|a| a.residual <= EQUIVALENCE_TOL && a.scale > 0.0);
    Ok(EquivalenceReport { equivalent, agents })
}

fn column_spread(rows: &[Vec<f64>]) -> f64 {
    let mut spread = 0.0f64;
    for k in 0..rows[0].len() {
        for r in rows {
            spread = spread.max((r[k] - rows[0][k]).abs());
        }
    }
    spread
}

/// Direction `(cos theta, sin theta)` in the closed positive quadrant.
pub fn direction(theta: f64) -> [f64; 2] {
    [libm::cos(theta), libm::sin(theta)]
}

/// Maximal open arc of the quadrant on which the argmax set is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct FanInterval {
    pub start: f64,
    pub end: f64,
    pub labels: Vec<usize>,
}

/// Interior boundary between two fan intervals and the tie set on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoint {
    pub angle: f64,
    pub ties: Vec<usize>,
}

/// The normal fan of a planar utility polytope restricted to the positive
/// quadrant. Angles are measured from the first opponent profile's axis,
/// so intervals run from `0` to `pi/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedFan2D {
    pub intervals: Vec<FanInterval>,
    pub breakpoints: Vec<Breakpoint>,
}

impl RestrictedFan2D {
    /// Same breakpoint angles within `tol`, ignoring labels.
    pub fn same_breakpoints(&self, other: &Self, tol: f64) -> bool {
        self.breakpoints.len() == other.breakpoints.len()
            && self
                .breakpoints
                .iter()
                .zip(&other.breakpoints)
                .all(|(a, b)| (a.angle - b.angle).abs() <= tol)
    }

    /// Same breakpoints within `tol` and the same labels on every interval.
    pub fn matches(&self, other: &Self, tol: f64) -> bool {
        self.same_breakpoints(other, tol)
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| a.labels == b.labels)
    }

    /// Labels of the interval containing `theta` (interior angles only).
    pub fn label_at(&self, theta: f64) -> Option<&[usize]> {
        self.intervals
            .iter()
            .find(|iv| iv.start < theta && theta < iv.end)
            .map(|iv| iv.labels.as_slice())
    }
}

/// Angle in `(0, pi/2)` where `<y, a - b> = 0`, if any.
fn tie_angle(a: &[f64], b: &[f64]) -> Option<f64> {
    let (d1, d2) = (a[0] - b[0], a[1] - b[1]);
    if d1 == 0.0 || d2 == 0.0 || (d1 > 0.0) == (d2 > 0.0) {
        return None;
    }
    // d1 cos + d2 sin = 0  =>  tan = -d1 / d2 > 0
    Some(libm::atan2(d1.abs(), d2.abs()))
}

pub fn restricted_fan_2d(p: &UtilityPolytope) -> Result<RestrictedFan2D> {
    p.require_planar()?;
    let half_pi = core::f64::consts::FRAC_PI_2;
    let mut cuts = vec![0.0, half_pi];
    for a in 0..p.points.len() {
        for b in a + 1..p.points.len() {
            if let Some(t) = tie_angle(&p.points[a], &p.points[b]) {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= ANGLE_TOL * 1e-3);
    let mut intervals: Vec<FanInterval> = Vec::new();
    for w in cuts.windows(2) {
        let labels = p.argmax(&direction(0.5 * (w[0] + w[1])));
        match intervals.last_mut() {
            Some(last) if last.labels == labels => last.end = w[1],
            _ => intervals.push(FanInterval {
                start: w[0],
                end: w[1],
                labels,
            }),
        }
    }
    let breakpoints = intervals
        .windows(2)
        .map(|pair| {
            let angle = pair[0].end;
            let mut ties = pair[0].labels.clone();
            ties.extend(&pair[1].labels);
            ties.extend(p.argmax(&direction(angle)));
            ties.sort_unstable();
            ties.dedup();
            Breakpoint { angle, ties }
        })
        .collect();
    Ok(RestrictedFan2D {
        intervals,
        breakpoints,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrMode {
    /// Exact fan comparison. Agents with other than two opponent profiles
    /// are accepted only when their tables are positive affine copies.
    Exact2D,
    /// Compare argmax sets on `samples` directions per agent drawn
    /// uniformly from the simplex.
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrWitness {
    pub agent: usize,
    pub direction: Vec<f64>,
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BrCertificate {
    /// Per-agent fans coincide; breakpoints listed per agent (empty for
    /// agents settled by an affine fit).
    Exact { breakpoints: Vec<Vec<f64>> },
    /// No disagreement among the sampled directions. With 95% confidence
    /// any region where the games disagree has simplex measure below
    /// `undetected_mass`.
    Sampled {
        samples: usize,
        undetected_mass: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BrVerdict {
    Indistinguishable(BrCertificate),
    Distinguished(BrWitness),
}

impl BrVerdict {
    pub fn is_indistinguishable(&self) -> bool {
        matches!(self, BrVerdict::Indistinguishable(_))
    }
}

/// Do the two games induce the same best-response sets for every agent and
/// every recommendation slice?
pub fn br_indistinguishable<R: Rng + ?Sized>(
    g1: &Game,
    g2: &Game,
    mode: BrMode,
    rng: &mut R,
) -> Result<BrVerdict> {
    if g1.indexing() != g2.indexing() {
        return Err(Error::ShapeMismatch("games have different shapes".into()));
    }
    let n = g1.agent_count();
    match mode {
        BrMode::Exact2D => {
            let mut breakpoints = Vec::with_capacity(n);
            let fits = check_equivalence(g1, g2)?.agents;
            for agent in 0..n {
                let p1 = UtilityPolytope::from_game(g1, agent)?;
                let p2 = UtilityPolytope::from_game(g2, agent)?;
                // Positive affine copies share every best-response set in
                // any dimension.
                let fit = &fits[agent];
                if p1.dimension() != 2 && fit.residual <= EQUIVALENCE_TOL && fit.scale > 0.0 {
                    breakpoints.push(Vec::new());
                    continue;
                }
                let f1 = restricted_fan_2d(&p1)?;
                let f2 = restricted_fan_2d(&p2)?;
                if f1.matches(&f2, ANGLE_TOL) {
                    breakpoints.push(f1.breakpoints.iter().map(|b| b.angle).collect());
                } else {
                    return Ok(BrVerdict::Distinguished(fan_witness(
                        agent, &p1, &p2, &f1, &f2,
                    )));
                }
            }
            Ok(BrVerdict::Indistinguishable(BrCertificate::Exact {
                breakpoints,
            }))
        }
        BrMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::InvalidParameter("need at least one sample".into()));
            }
            for agent in 0..n {
                let p1 = UtilityPolytope::from_game(g1, agent)?;
                let p2 = UtilityPolytope::from_game(g2, agent)?;
                let d = p1.dimension();
                let mut y = vec![0.0; d];
                for _ in 0..samples {
                    let mut total = 0.0;
                    for v in y.iter_mut() {
                        *v = rng.sample::<f64, _>(Exp1);
                        total += *v;
                    }
                    y.iter_mut().for_each(|v| *v /= total);
                    let (first, second) = (p1.argmax(&y), p2.argmax(&y));
                    if first != second {
                        return Ok(BrVerdict::Distinguished(BrWitness {
                            agent,
                            direction: y,
                            first,
                            second,
                        }));
                    }
                }
            }
            let undetected_mass = 1.0 - libm::pow(0.05, 1.0 / samples as f64);
            Ok(BrVerdict::Indistinguishable(BrCertificate::Sampled {
                samples,
                undetected_mass,
            }))
        }
    }
}

/// A direction where two different planar fans assign different argmax
/// sets: interval midpoints of the merged subdivision first, then the
/// breakpoints themselves.
fn fan_witness(
    agent: usize,
    p1: &UtilityPolytope,
    p2: &UtilityPolytope,
    f1: &RestrictedFan2D,
    f2: &RestrictedFan2D,
) -> BrWitness {
    let mut cuts: Vec<f64> = vec![0.0, core::f64::consts::FRAC_PI_2];
    cuts.extend(
        f1.breakpoints
            .iter()
            .chain(&f2.breakpoints)
            .map(|b| b.angle),
    );
    cuts.sort_by(f64::total_cmp);
    let mids = cuts.windows(2).map(|w| 0.5 * (w[0] + w[1]));
    for theta in mids.chain(cuts.iter().copied()) {
        let y = direction(theta);
        let (first, second) = (p1.argmax(&y), p2.argmax(&y));
        if first != second {
            return BrWitness {
                agent,
                direction: y.to_vec(),
                first,
                second,
            };
        }
    }
    // Fans differ only below the angular tolerance; report the first
    // breakpoint mismatch direction.
    let theta = f1
        .breakpoints
        .iter()
        .zip(&f2.breakpoints)
        .find(|(a, b)| (a.angle - b.angle).abs() > ANGLE_TOL)
        .map_or(0.0, |(a, _)| a.angle);
    let y = direction(theta);
    BrWitness {
        agent,
        direction: y.to_vec(),
        first: p1.argmax(&y),
        second: p2.argmax(&y),
    }
}

/// The planar polyhedron `P + C°`, with `C°` the nonpositive quadrant.
#[derive(Debug, Clone, PartialEq)]
pub struct Polarized2D {
    pub agent: usize,
    /// Componentwise-maximal points `(action, point)`, by increasing first
    /// coordinate.
    pub pareto: Vec<(usize, [f64; 2])>,
    /// Extreme points of `P + C°`: the Pareto points on the upper-right hull,
    /// in the same order.
    pub vertices: Vec<(usize, [f64; 2])>,
}

impl Polarized2D {
    /// Angles of the outward edge normals between consecutive vertices.
    pub fn edge_normal_angles(&self) -> Vec<f64> {
        self.vertices
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].1, w[1].1);
                // edge runs right and down; outward normal (a_y - b_y, b_x - a_x)
                libm::atan2(b[0] - a[0], a[1] - b[1])
            })
            .rev()
            .collect()
    }
}

/// Pareto-maximal points of a planar point set. Of identical points the
/// lowest index is kept.
pub fn pareto_filter_2d(points: &[[f64; 2]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // x descending, then y descending, then index ascending
    order.sort_by(|&a, &b| {
        points[b][0]
            .total_cmp(&points[a][0])
            .then(points[b][1].total_cmp(&points[a][1]))
            .then(a.cmp(&b))
    });
    let mut kept = Vec::new();
    let mut best_y = f64::NEG_INFINITY;
    for i in order {
        if points[i][1] > best_y {
            kept.push(i);
            best_y = points[i][1];
        }
    }
    kept.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    kept
}

pub fn polarize_2d(p: &UtilityPolytope) -> Result<Polarized2D> {
    p.require_planar()?;
    let points: Vec<[f64; 2]> = p.points.iter().map(|q| [q[0], q[1]]).collect();
    let pareto: Vec<(usize, [f64; 2])> = pareto_filter_2d(&points)
        .into_iter()
        .map(|i| (i, points[i]))
        .collect();
    // Upper hull of the Pareto chain (x increasing, y decreasing): drop
    // points on or below the segment joining their neighbours.
    let mut vertices: Vec<(usize, [f64; 2])> = Vec::with_capacity(pareto.len());
    for &(i, q) in &pareto {
        while vertices.len() >= 2 {
            let (_, a) = vertices[vertices.len() - 2];
            let (_, b) = vertices[vertices.len() - 1];
            let cross = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]);
            let scale = (b[0] - a[0]).abs().max((q[1] - a[1]).abs()).max(1.0);
            if cross >= -1e-12 * scale * scale {
                vertices.pop();
            } else {
                break;
            }
        }
        vertices.push((i, q));
    }
    Ok(Polarized2D {
        agent: p.agent,
        pareto,
        vertices,
    })
}

/// Normal equivalence of two polarized planar polyhedra: equal vertex
/// counts and the same edge-normal angles within [`ANGLE_TOL`].
pub fn normal_equiv_2d(p1: &Polarized2D, p2: &Polarized2D) -> bool {
    let (a1, a2) = (p1.edge_normal_angles(), p2.edge_normal_angles());
    let equal = p1.vertices.len() == p2.vertices.len()
        && a1.iter().zip(&a2).all(|(x, y)| (x - y).abs() <= ANGLE_TOL);
    #[cfg(debug_assertions)]
    {
        let fan = |p: &Polarized2D| {
            let poly = UtilityPolytope {
                agent: p.agent,
                points: p.vertices.iter().map(|(_, q)| q.to_vec()).collect(),
            };
            restricted_fan_2d(&poly).expect("vertices are planar and distinct")
        };
        debug_assert_eq!(equal, fan(p1).same_breakpoints(&fan(p2), ANGLE_TOL));
    }
    equal
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignVerdict {
    /// `w2 = lambda * w1` with `lambda > 0`.
    Proportional { lambda: f64 },
    /// `y` lies in the open positive orthant and `<y, w1>`, `<y, w2>` have
    /// strictly opposite signs.
    Witness {
        y: Vec<f64>,
        first: f64,
        second: f64,
    },
    /// No witness was found (not expected for valid inputs).
    NoWitness,
}

fn is_mixed_sign(w: &[f64]) -> bool {
    w.iter().any(|&v| v > 0.0) && w.iter().any(|&v| v < 0.0)
}

fn opposite(y: &[f64], w1: &[f64], w2: &[f64]) -> Option<SignVerdict> {
    let (first, second) = (dot(y, w1), dot(y, w2));
    (first * second < 0.0 && y.iter().all(|&v| v > 0.0)).then(|| SignVerdict::Witness {
        y: y.to_vec(),
        first,
        second,
    })
}

/// Either confirms `w2` is a positive multiple of `w1` or finds a direction
/// in the positive orthant on which they disagree in sign.
///
/// `trials` random directions are tried first; then points on the tie
/// hyperplane of `w1` are nudged off it on the side `w2` disagrees with.
pub fn sign_agreement_implies_proportional<R: Rng + ?Sized>(
    w1: &[f64],
    w2: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<SignVerdict> {
    if w1.len() != w2.len() {
        return Err(Error::ShapeMismatch("vectors differ in length".into()));
    }
    if !is_mixed_sign(w1) || !is_mixed_sign(w2) {
        return Err(Error::InvalidParameter(
            "both vectors need a strictly positive and a strictly negative entry".into(),
        ));
    }
    let lambda = dot(w1, w2) / dot(w1, w1);
    let residual = w1
        .iter()
        .zip(w2)
        .map(|(a, b)| (b - lambda * a).abs())
        .fold(0.0, f64::max);
    if lambda > 0.0 && residual <= 1e-9 {
        return Ok(SignVerdict::Proportional { lambda });
    }
    let d = w1.len();
    let mut y = vec![0.0; d];
    for _ in 0..trials {
        for v in y.iter_mut() {
            *v = rng.sample::<f64, _>(Exp1);
        }
        if let Some(found) = opposite(&y, w1, w2) {
            return Ok(found);
        }
    }
    let pos = (0..d)
        .filter(|&k| w1[k] > 0.0)
        .max_by(|&a, &b| w1[a].total_cmp(&w1[b]))
        .expect("mixed");
    let neg = (0..d)
        .filter(|&k| w1[k] < 0.0)
        .min_by(|&a, &b| w1[a].total_cmp(&w1[b]))
        .expect("mixed");
    for attempt in 0..trials.max(64) {
        // Interior point, then moved along e_pos or e_neg onto <y, w1> = 0.
        for v in y.iter_mut() {
            *v = if attempt == 0 {
                1.0
            } else {
                rng.sample::<f64, _>(Exp1) + 1e-3
            };
        }
        let s = dot(&y, w1);
        if s > 0.0 {
            y[neg] += s / -w1[neg];
        } else {
            y[pos] += -s / w1[pos];
        }
        let on_plane = dot(&y, w2);
        if on_plane == 0.0 {
            continue;
        }
        // Step off the plane so w1 takes the sign opposite to w2, keeping
        // w2's sign: |step * w2_k| stays below |on_plane|.
        let k = if on_plane < 0.0 { pos } else { neg };
        let step = 0.5 * on_plane.abs() / (w2[k].abs() + w1[k].abs());
        y[k] += step;
        if let Some(found) = opposite(&y, w1, w2) {
            return Ok(found);
        }
    }
    Ok(SignVerdict::NoWitness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::seed;

    fn planar(points: &[[f64; 2]]) -> UtilityPolytope {
        UtilityPolytope::new(0, points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn equivalence_examples() {
        let g = catalog::prisoners_dilemma();
        let ix = g.indexing().clone();
        let transformed: Vec<Vec<f64>> = (0..2)
            .map(|i| {
                let (lambda, t) = ([2.0, 0.5][i], [[1.0, -3.0], [4.0, 0.25]][i]);
                (0..ix.profile_count())
                    .map(|p| {
                        let k = ix.opponent_index(p, i);
                        lambda * g.utilities()[i][p] + t[k]
                    })
                    .collect()
            })
            .collect();
        let h = Game::from_utilities(ix.sizes(), transformed).unwrap();
        let report = check_equivalence(&g, &h).unwrap();
        assert!(report.equivalent);
        assert!((report.agents[0].scale - 2.0).abs() < 1e-9);
        assert!((report.agents[1].scale - 0.5).abs() < 1e-9);
        assert!((report.agents[0].shift[1] + 3.0).abs() < 1e-9);

        let (u, v) = catalog::counterexample_pair();
        assert!(!check_equivalence(&u, &v).unwrap().equivalent);

        let neg = g.scaled(-1.0).unwrap();
        let report = check_equivalence(&g, &neg).unwrap();
        assert!(!report.equivalent);
        assert!(report.agents[0].scale < 0.0);

        let c = catalog::constant(&[2, 2]);
        assert!(check_equivalence(&c, &c).unwrap().equivalent);
    }

    #[test]
    fn counterexample_fans() {
        let (u, v) = catalog::counterexample_pair();
        let fu = restricted_fan_2d(&UtilityPolytope::from_game(&u, 0).unwrap()).unwrap();
        let fv = restricted_fan_2d(&UtilityPolytope::from_game(&v, 0).unwrap()).unwrap();
        // From the second axis down to the first: a1, a2, a3, a4.
        let labels: Vec<Vec<usize>> = fu
            .intervals
            .iter()
            .rev()
            .map(|iv| iv.labels.clone())
            .collect();
        assert_eq!(labels, vec![vec![0], vec![1], vec![2], vec![3]]);
        // Ties at y2 / y1 = 2/3, 1, 2.
        let expected = [libm::atan(2.0 / 3.0), libm::atan(1.0), libm::atan(2.0)];
        for (b, e) in fu.breakpoints.iter().zip(expected) {
            assert!((b.angle - e).abs() < 1e-12);
        }
        assert_eq!(fu.breakpoints[0].ties, vec![2, 3]);
        assert!(fu.matches(&fv, ANGLE_TOL));
    }

    #[test]
    fn diagonal_tie() {
        let fan = restricted_fan_2d(&planar(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_eq!(fan.breakpoints.len(), 1);
        assert!((fan.breakpoints[0].angle - core::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(restricted_fan_2d(&planar(&[[0.0, 1.0], [0.0, 1.0]])).is_err());
        let cube = UtilityPolytope::new(0, vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(restricted_fan_2d(&cube).is_err());
    }

    #[test]
    fn fan_labels_match_best_response_sets() {
        let (u, _) = catalog::counterexample_pair();
        let ix = u.indexing();
        let fan = restricted_fan_2d(&UtilityPolytope::from_game(&u, 0).unwrap()).unwrap();
        for s in 1..200 {
            let theta = s as f64 / 200.0 * core::f64::consts::FRAC_PI_2;
            let y = direction(theta);
            let x = crate::Mechanism::from_slice(ix, 0, 0, &y).unwrap();
            let br =
                crate::behavior::best_response_set(&u, &x, 0, 0, crate::behavior::TIE_TOL).unwrap();
            if let Some(labels) = fan.label_at(theta) {
                if fan
                    .breakpoints
                    .iter()
                    .all(|b| (b.angle - theta).abs() > 1e-6)
                {
                    assert_eq!(labels, br.as_slice(), "theta {theta}");
                }
            }
        }
    }

    #[test]
    fn br_verdicts() {
        let mut rng = seed::stream(4, &[]);
        let (u, v) = catalog::counterexample_pair();
        assert!(br_indistinguishable(&u, &v, BrMode::Exact2D, &mut rng)
            .unwrap()
            .is_indistinguishable());

        let h = u.scaled(3.0).unwrap();
        for mode in [BrMode::Exact2D, BrMode::MonteCarlo { samples: 20_000 }] {
            assert!(br_indistinguishable(&u, &h, mode, &mut rng)
                .unwrap()
                .is_indistinguishable());
        }

        // Swap the utilities of a1 and a4 for player 1, labels unchanged.
        let mut swapped = u.utilities()[0].clone();
        swapped.swap(0, 6);
        swapped.swap(1, 7);
        let s = u.with_agent_utilities(0, swapped).unwrap();
        for mode in [BrMode::Exact2D, BrMode::MonteCarlo { samples: 20_000 }] {
            match br_indistinguishable(&u, &s, mode, &mut rng).unwrap() {
                BrVerdict::Distinguished(w) => {
                    let p1 = UtilityPolytope::from_game(&u, w.agent).unwrap();
                    let p2 = UtilityPolytope::from_game(&s, w.agent).unwrap();
                    assert_ne!(p1.argmax(&w.direction), p2.argmax(&w.direction));
                }
                other => panic!("expected a witness, got {other:?}"),
            }
        }
    }

    #[test]
    fn polarization_examples() {
        let (u, _) = catalog::counterexample_pair();
        let pol = polarize_2d(&UtilityPolytope::from_game(&u, 0).unwrap()).unwrap();
        assert_eq!(pol.pareto.len(), 4);
        assert_eq!(pol.vertices.len(), 4);

        let pol = polarize_2d(&planar(&[[0.0, 0.0], [1.0, 1.0]])).unwrap();
        assert_eq!(pol.vertices, vec![(1, [1.0, 1.0])]);

        // Pareto-maximal but below the chord of its neighbours.
        let pol = polarize_2d(&planar(&[[0.0, 1.0], [1.0, 0.0], [0.4, 0.4]])).unwrap();
        assert_eq!(pol.pareto.len(), 3);
        assert_eq!(
            pol.vertices.iter().map(|v| v.0).collect::<Vec<_>>(),
            vec![0, 1]
        );
    }

    #[test]
    fn normal_equivalence_examples() {
        let (u, v) = catalog::counterexample_pair();
        let pu = polarize_2d(&UtilityPolytope::from_game(&u, 0).unwrap()).unwrap();
        let pv = polarize_2d(&UtilityPolytope::from_game(&v, 0).unwrap()).unwrap();
        assert!(normal_equiv_2d(&pu, &pv));

        let pts = [[0.0, 8.0], [3.0, 6.5], [5.0, 4.5], [8.0, 0.0]];
        let moved: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] + 10.0, p[1] - 2.0]).collect();
        let p1 = polarize_2d(&planar(&pts)).unwrap();
        assert!(normal_equiv_2d(&p1, &polarize_2d(&planar(&moved)).unwrap()));

        // Rotate the middle edge's normal by moving a3.
        let mut bent = pts;
        bent[2] = [5.0, 4.0];
        assert!(!normal_equiv_2d(&p1, &polarize_2d(&planar(&bent)).unwrap()));
    }

    #[test]
    fn sign_agreement_examples() {
        let mut rng = seed::stream(6, &[]);
        let w1 = [1.0, -2.0, 0.5];
        let w3: Vec<f64> = w1.iter().map(|v| 3.0 * v).collect();
        match sign_agreement_implies_proportional(&w1, &w3, 100, &mut rng).unwrap() {
            SignVerdict::Proportional { lambda } => assert!((lambda - 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        for (a, b) in [
            (vec![1.0, -1.0], vec![1.0, -2.0]),
            (vec![1.0, -1.0, 0.0], vec![1.0, -1.0, 1.0]),
        ] {
            match sign_agreement_implies_proportional(&a, &b, 0, &mut rng).unwrap() {
                SignVerdict::Witness { y, first, second } => {
                    assert!(y.iter().all(|&v| v > 0.0));
                    assert!(first * second < 0.0);
                    assert_eq!(first, dot(&y, &a));
                }
                other => panic!("{other:?}"),
            }
        }
        assert!(
            sign_agreement_implies_proportional(&[1.0, 2.0], &[1.0, -1.0], 10, &mut rng).is_err()
        );
    }
}
