//! Constructors for the game families used throughout the experiments.

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::game::{JointAction, StateGame, PROB_TOL, TIE_TOL};

/// n-agent, n-move pure coordination game: everyone picking move `m` reaches
/// the "coordinated on m" outcome (utility `c`); anything else reaches the
/// single uncoordinated outcome (utility `d`). Transitions stay implicit so
/// large instances (e.g. 10 agents, 10^10 joint actions) are representable.
pub fn make_pure_coordination(n: usize, c: f64, d: f64) -> Result<StateGame> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "pure coordination needs n >= 2 agents, got {n}"
        )));
    }
    if !(c > d) {
        return Err(Error::InvalidParameter(format!(
            "pure coordination needs c > d, got c={c}, d={d}"
        )));
    }
    Ok(StateGame::new_pure_coordination(n, c, d))
}

/// Deterministic 2x2 coordination game: matching actions pay 1, mismatches 0.
pub fn make_deterministic_2x2() -> StateGame {
    make_stochastic_2x2(0.0).expect("fail_p = 0 is valid")
}

/// Two agents move left or right; each independently reaches its intended
/// side with probability `1 - fail_p`. Outcomes are the four location pairs
/// (ll, lr, rl, rr); matching locations pay 1, mismatches 0.
pub fn make_stochastic_2x2(fail_p: f64) -> Result<StateGame> {
    if !(0.0..0.5).contains(&fail_p) {
        return Err(Error::InvalidParameter(format!(
            "fail_p must be in [0, 0.5), got {fail_p}"
        )));
    }
    let ok = 1.0 - fail_p;
    // Pr(agent lands at side x | intended action y).
    let land = |intended: usize, side: usize| if intended == side { ok } else { fail_p };
    let mut rows = Vec::with_capacity(4);
    for a0 in 0..2 {
        for a1 in 0..2 {
            let mut row = Vec::with_capacity(4);
            for s0 in 0..2 {
                for s1 in 0..2 {
                    row.push(land(a0, s0) * land(a1, s1));
                }
            }
            rows.push(row);
        }
    }
    let utilities = vec![1.0, 0.0, 0.0, 1.0];
    let game = StateGame::new_dense(vec![2, 2], 4, rows, utilities)?;
    game.with_rational_utilities(vec![
        Rational64::from_integer(1),
        Rational64::from_integer(0),
        Rational64::from_integer(0),
        Rational64::from_integer(1),
    ])
}

/// Deterministic 2x2 game with coordinated payoff `v_coord` on both diagonal
/// joint actions and uncoordinated payoffs 1 and 0.
pub fn make_asymmetric_2x2(v_coord: f64) -> Result<StateGame> {
    if !(v_coord > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "v_coord must exceed 1 so coordination stays uniquely optimal, got {v_coord}"
        )));
    }
    let a = Rational64::approximate_float(v_coord)
        .ok_or_else(|| Error::InvalidParameter(format!("v_coord {v_coord} not representable")))?;
    make_coordination_2x2(a, Rational64::from_integer(1), Rational64::from_integer(0))
}

/// Deterministic 2x2 coordination game with exact rational payoffs:
/// `a` on both diagonals, `b` and `c` on the two uncoordinated actions.
pub fn make_coordination_2x2(a: Rational64, b: Rational64, c: Rational64) -> Result<StateGame> {
    if a <= b.max(c) {
        return Err(Error::InvalidParameter(format!(
            "not a coordination game: a={a} must exceed b={b} and c={c}"
        )));
    }
    let to_f = |r: Rational64| *r.numer() as f64 / *r.denom() as f64;
    let rows = vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ];
    let utilities = vec![to_f(a), to_f(b), to_f(c), to_f(a)];
    let game = StateGame::new_dense(vec![2, 2], 4, rows, utilities)?;
    game.with_rational_utilities(vec![a, b, c, a])
}

/// Parameters for the 3-agent, 3-move convention game.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Convention3x3Params {
    /// Probability that an all-agree joint action slips to its bad state.
    pub slip_q: f64,
    /// Probability that a 2-vs-1 majority on move m still reaches good state m.
    pub majority_r: f64,
    pub good_utility: f64,
    pub bad_utility: f64,
}

impl Default for Convention3x3Params {
    fn default() -> Self {
        Convention3x3Params {
            slip_q: 0.1,
            majority_r: 0.15,
            good_utility: 1.0,
            bad_utility: 0.0,
        }
    }
}

/// 3 agents x 3 moves x 6 outcomes (three good states, three bad states).
/// All agents on move m: good state m with probability `1 - q`, bad state m
/// otherwise. A 2-vs-1 majority on m: good state m with probability `r`, the
/// majority's bad state otherwise. No majority: a uniformly random bad state.
///
/// Returns the game plus a warning flag that is true when two optimal joint
/// actions share an identical outcome distribution (likelihood estimates can
/// then never separate them).
pub fn make_3x3_convention_game(params: &Convention3x3Params) -> Result<(StateGame, bool)> {
    let q = params.slip_q;
    let r = params.majority_r;
    if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "slip probabilities must lie in [0,1]: q={q}, r={r}"
        )));
    }
    if params.good_utility < params.bad_utility {
        return Err(Error::InvalidParameter(
            "good_utility must be at least bad_utility".into(),
        ));
    }
    let good = |m: usize| m;
    let bad = |m: usize| 3 + m;
    let mut rows = Vec::with_capacity(27);
    for a0 in 0..3 {
        for a1 in 0..3 {
            for a2 in 0..3 {
                let mut row = vec![0.0; 6];
                let acts = [a0, a1, a2];
                let mut tally = [0usize; 3];
                for &x in &acts {
                    tally[x] += 1;
                }
                if let Some(m) = (0..3).find(|&m| tally[m] == 3) {
                    row[good(m)] = 1.0 - q;
                    row[bad(m)] = q;
                } else if let Some(m) = (0..3).find(|&m| tally[m] == 2) {
                    row[good(m)] = r;
                    row[bad(m)] = 1.0 - r;
                } else {
                    for m in 0..3 {
                        row[bad(m)] = 1.0 / 3.0;
                    }
                }
                rows.push(row);
            }
        }
    }
    let g = params.good_utility;
    let b = params.bad_utility;
    let game = StateGame::new_dense(vec![3, 3, 3], 6, rows, vec![g, g, g, b, b, b])?;

    let ojas = game.optimal_joint_actions(TIE_TOL)?;
    let warn = has_indistinguishable_pair(&game, &ojas);
    Ok((game, warn))
}

fn has_indistinguishable_pair(game: &StateGame, ojas: &[JointAction]) -> bool {
    for (i, a) in ojas.iter().enumerate() {
        let ra = game.transition_row(a);
        for b in &ojas[i + 1..] {
            let rb = game.transition_row(b);
            if ra
                .iter()
                .zip(rb.iter())
                .all(|(x, y)| (x - y).abs() <= PROB_TOL)
            {
                return true;
            }
        }
    }
    false
}
