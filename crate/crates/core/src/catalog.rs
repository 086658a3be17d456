//! Named games used in experiments and tests, plus the random generator.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{Game, ProfileIndexing};

fn labelled(names: [&str; 2], actions: [&[&str]; 2], utilities: Vec<Vec<f64>>) -> Game {
    Game::new(
        names.iter().map(|s| String::from(*s)).collect(),
        actions
            .iter()
            .map(|acts| acts.iter().map(|s| String::from(*s)).collect())
            .collect(),
        utilities,
    )
    .expect("catalog games are well formed")
}

/// Two non-equivalent games with identical best-response behaviour.
///
/// Player 1 has actions `a1..a4`, player 2 has `b1, b2`; player 2's
/// utilities are shared by both games.
pub fn counterexample_pair() -> (Game, Game) {
    // Columns of the player-1 tables, (b1, b2) per action.
    let u1 = [(0.0, 8.0), (3.0, 6.5), (5.0, 4.5), (8.0, 0.0)];
    let v1 = [(0.0, 8.0), (2.0, 7.0), (6.0, 3.0), (8.0, 0.0)];
    let u2 = [(1.0, 4.0), (2.0, 3.0), (3.0, 2.0), (4.0, 1.0)];
    let flatten = |t: &[(f64, f64); 4]| t.iter().flat_map(|&(x, y)| [x, y]).collect::<Vec<_>>();
    let acts: [&[&str]; 2] = [&["a1", "a2", "a3", "a4"], &["b1", "b2"]];
    (
        labelled(["p1", "p2"], acts, vec![flatten(&u1), flatten(&u2)]),
        labelled(["p1", "p2"], acts, vec![flatten(&v1), flatten(&u2)]),
    )
}

/// Prisoner's dilemma; action 0 cooperates, action 1 defects (dominant).
pub fn prisoners_dilemma() -> Game {
    labelled(
        ["p1", "p2"],
        [&["C", "D"], &["C", "D"]],
        vec![vec![3.0, 0.0, 5.0, 1.0], vec![3.0, 5.0, 0.0, 1.0]],
    )
}

pub fn rock_paper_scissors() -> Game {
    // beats[a][b] = payoff to the player choosing a against b
    let table = [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]];
    let mut u1 = Vec::with_capacity(9);
    let mut u2 = Vec::with_capacity(9);
    for a in 0..3 {
        for b in 0..3 {
            u1.push(table[a][b]);
            u2.push(table[b][a]);
        }
    }
    labelled(
        ["p1", "p2"],
        [&["R", "P", "S"], &["R", "P", "S"]],
        vec![u1, u2],
    )
}

pub fn constant(sizes: &[usize]) -> Game {
    let m: usize = sizes.iter().product();
    Game::from_utilities(sizes, vec![vec![1.0; m]; sizes.len()]).expect("sizes >= 2")
}

/// Parameters of the random generic-game generator.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomGameSpec {
    pub sizes: Vec<usize>,
    pub low: f64,
    pub high: f64,
    /// Lower bound on every `|u_i(a', k) - u_i(a, k)|`; zero disables it.
    pub min_gap: f64,
    pub require_no_weak_dominance: bool,
    pub max_retries: usize,
}

impl RandomGameSpec {
    pub fn new(sizes: Vec<usize>) -> Self {
        Self {
            sizes,
            low: 1.0,
            high: 10.0,
            min_gap: 0.0,
            require_no_weak_dominance: true,
            max_retries: 1000,
        }
    }
}

const COLLINEAR_TOL: f64 = 1e-9;

/// Draws i.i.d. uniform utilities until the genericity filters pass.
pub fn random_game<R: Rng + ?Sized>(spec: &RandomGameSpec, rng: &mut R) -> Result<Game> {
    if !(spec.low < spec.high) || !spec.low.is_finite() || !spec.high.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "utility range [{}, {}] is empty",
            spec.low, spec.high
        )));
    }
    let ix = ProfileIndexing::new(spec.sizes.clone())?;
    for _ in 0..spec.max_retries.max(1) {
        let utilities = (0..ix.agent_count())
            .map(|_| {
                (0..ix.profile_count())
                    .map(|_| rng.random_range(spec.low..spec.high))
                    .collect()
            })
            .collect();
        let game = Game::from_utilities(&spec.sizes, utilities)?;
        if acceptable(&game, spec) {
            return Ok(game);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no acceptable game after {} draws",
        spec.max_retries
    )))
}

fn acceptable(game: &Game, spec: &RandomGameSpec) -> bool {
    let ix = game.indexing();
    if spec.require_no_weak_dominance && !game.has_mixed_sign_differences(crate::DEFAULT_TOL) {
        return false;
    }
    for agent in 0..ix.agent_count() {
        let m = ix.actions(agent);
        let mut diffs = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                let w = game
                    .difference_vector(agent, a, b)
                    .expect("in range")
                    .values;
                if w.iter().any(|v| v.abs() < spec.min_gap) {
                    return false;
                }
                diffs.push(w);
            }
        }
        for (p, x) in diffs.iter().enumerate() {
            for y in &diffs[p + 1..] {
                if collinear(x, y) {
                    return false;
                }
            }
        }
    }
    true
}

fn collinear(x: &[f64], y: &[f64]) -> bool {
    let xy = crate::game::dot(x, y);
    let xx = crate::game::dot(x, x);
    let yy = crate::game::dot(y, y);
    if xx == 0.0 || yy == 0.0 {
        return true;
    }
    (xy * xy) >= (1.0 - COLLINEAR_TOL) * xx * yy
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_games_are_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut spec = RandomGameSpec::new(vec![3, 2]);
        spec.min_gap = 0.5;
        for _ in 0..20 {
            let g = random_game(&spec, &mut rng).unwrap();
            assert!(g.detect_weak_dominance(crate::DEFAULT_TOL).is_empty());
            assert!(g.has_mixed_sign_differences(crate::DEFAULT_TOL));
            for u in g.utilities() {
                assert!(u.iter().all(|&v| (1.0..10.0).contains(&v)));
            }
        }
    }

    #[test]
    fn impossible_spec_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut spec = RandomGameSpec::new(vec![2, 2]);
        spec.min_gap = 100.0;
        spec.max_retries = 5;
        assert!(random_game(&spec, &mut rng).is_err());
    }

    #[test]
    fn counterexample_player_two_is_generic() {
        let (u, v) = counterexample_pair();
        assert!(u.has_mixed_sign_differences(crate::DEFAULT_TOL));
        assert!(v.has_mixed_sign_differences(crate::DEFAULT_TOL));
    }
}
