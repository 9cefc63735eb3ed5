//! Exact convergence analysis by forward enumeration of the joint
//! belief-state Markov chain, plus a closed-form plateau-period checker for
//! 2x2 asymmetric coordination games.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Rational64;

use crate::config::LearnerConfig;
use crate::conventions::ConventionState;
use crate::error::{Error, Result};
use crate::game::{profile_error_probability, JointAction, MixedProfile, StateGame, TIE_TOL};
use crate::learners::LearnerState;

#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    /// Branches below this probability mass are dropped; the accumulated
    /// dropped mass is reported as a per-round error bound.
    pub prune_mass: f64,
    pub max_frontier: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            prune_mass: 1e-12,
            max_frontier: 1_000_000,
        }
    }
}

/// Exact per-round quantities for one configuration.
#[derive(Debug, Clone)]
pub struct ExactRound {
    pub round: usize,
    /// Probability the sampled joint action at this round misses every OJA.
    pub error: f64,
    /// Probability the agents' choice profile is not yet a deterministic OJA
    /// ("failure to have converged" entering this round).
    pub failure_mass: f64,
    /// Probability mass on belief states where some agent randomizes.
    pub randomize_mass: f64,
    /// Probability mass on frozen convention states.
    pub frozen_mass: f64,
    /// Cumulative dropped branch mass: bounds the error of every value above.
    pub pruned_mass: f64,
}

#[derive(Debug, Clone)]
pub struct ExactCurve {
    pub rounds: Vec<ExactRound>,
    /// Set when the frontier overflowed; `rounds` then holds partial results.
    pub truncated: Option<String>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct NodeKey {
    params: Vec<i64>,
    ojas: Vec<u64>,
    frozen: bool,
}

struct Node {
    learners: Vec<LearnerState>,
    convention: Option<ConventionState>,
    mass: f64,
}

const KEY_SCALE: f64 = 1e9;

fn node_key(game: &StateGame, learners: &[LearnerState], convention: Option<&ConventionState>) -> NodeKey {
    let mut params = Vec::new();
    for l in learners {
        for row in l.belief_params() {
            for &v in row {
                params.push((v * KEY_SCALE).round() as i64);
            }
        }
    }
    let (ojas, frozen) = match convention {
        Some(c) => (
            c.surviving_ojas()
                .iter()
                .map(|a| a.rank(game.actions_per_agent()))
                .collect(),
            c.frozen(),
        ),
        None => (Vec::new(), false),
    };
    NodeKey { params, ojas, frozen }
}

fn deterministic_transitions(game: &StateGame) -> bool {
    game.joint_actions()
        .all(|a| game.transition_row(&a).iter().all(|&p| p == 0.0 || p == 1.0))
}

/// Expected utility of each own action in exact rational arithmetic. Valid
/// when transitions are 0/1, utilities carry rationals, and belief parameters
/// are integers (observable learners).
fn rational_action_values(
    game: &StateGame,
    agent: usize,
    params: &[Vec<f64>],
) -> Option<Vec<Rational64>> {
    let utilities = game.rational_utilities()?;
    let mut values = vec![Rational64::from_integer(0); game.n_actions(agent)];
    for a in game.joint_actions() {
        let mut w = Rational64::from_integer(1);
        for (j, row) in params.iter().enumerate() {
            if j == agent {
                continue;
            }
            let count = row[a.0[j]];
            if count.fract() != 0.0 {
                return None;
            }
            w *= Rational64::from_integer(count as i64);
        }
        let row = game.transition_row(&a);
        let s = row.iter().position(|&p| p == 1.0)?;
        values[a.0[agent]] += w * utilities[s];
    }
    Some(values)
}

fn choice_distribution(
    game: &StateGame,
    learner: &LearnerState,
    convention: Option<&ConventionState>,
    use_rational: bool,
) -> Result<Vec<f64>> {
    if let Some(state) = convention {
        if state.frozen() {
            if let Some(a) = state.settled_action() {
                let mut dist = vec![0.0; game.n_actions(learner.agent)];
                dist[a.0[learner.agent]] = 1.0;
                return Ok(dist);
            }
        }
    }
    let active = convention.map(|c| c.active_actions());
    if use_rational {
        if let Some(values) = rational_action_values(game, learner.agent, learner.belief_params()) {
            let eligible: Vec<usize> = (0..values.len())
                .filter(|&k| active.map_or(true, |a| a[learner.agent][k]))
                .collect();
            let max = eligible.iter().map(|&k| values[k]).max().expect("nonempty");
            let chosen: Vec<usize> = eligible
                .into_iter()
                .filter(|&k| values[k] == max)
                .collect();
            let mut dist = vec![0.0; values.len()];
            for &k in &chosen {
                dist[k] = 1.0 / chosen.len() as f64;
            }
            return Ok(dist);
        }
    }
    learner.choice_distribution(game, active)
}

/// Forward recursion over the joint belief state: from every node, branch on
/// each joint action in the support of the agents' choices and each
/// positive-probability outcome, merging nodes with identical quantized keys.
pub fn exact_failure_curve(
    game: &StateGame,
    learner: &LearnerConfig,
    conventions: bool,
    horizon: usize,
    opts: &ExactOptions,
) -> Result<ExactCurve> {
    if !game.is_enumerable() {
        return Err(Error::Unsupported(format!(
            "exact analysis cannot enumerate {} joint actions",
            game.n_joint_actions()
        )));
    }
    let ojas = game.optimal_joint_actions(TIE_TOL)?;
    let oja_ranks: std::collections::BTreeSet<u64> = ojas
        .iter()
        .map(|a| a.rank(game.actions_per_agent()))
        .collect();
    // Exact rational best responses need 0/1 transitions, rational utilities,
    // integer belief updates, and no epsilon margin.
    let use_rational = learner.epsilon == 0.0
        && learner.kind.observes_actions()
        && game.rational_utilities().is_some()
        && deterministic_transitions(game);

    let initial_learners: Vec<LearnerState> = (0..game.n_agents())
        .map(|agent| LearnerState::new(game, agent, learner.kind, learner.epsilon, &learner.prior))
        .collect::<Result<_>>()?;
    let initial_convention = if conventions {
        Some(ConventionState::new(game, TIE_TOL)?)
    } else {
        None
    };

    let mut frontier: BTreeMap<NodeKey, Node> = BTreeMap::new();
    frontier.insert(
        node_key(game, &initial_learners, initial_convention.as_ref()),
        Node {
            learners: initial_learners,
            convention: initial_convention,
            mass: 1.0,
        },
    );

    let mut rounds = Vec::with_capacity(horizon);
    let mut dropped = 0.0;

    for round in 1..=horizon {
        let mut stats = ExactRound {
            round,
            error: 0.0,
            failure_mass: 0.0,
            randomize_mass: 0.0,
            frozen_mass: 0.0,
            pruned_mass: dropped,
        };
        // Choice distributions per node, reused for branching.
        let mut dists: Vec<Vec<Vec<f64>>> = Vec::with_capacity(frontier.len());
        for node in frontier.values() {
            let node_dists: Vec<Vec<f64>> = node
                .learners
                .iter()
                .map(|l| choice_distribution(game, l, node.convention.as_ref(), use_rational))
                .collect::<Result<_>>()?;
            stats.error += node.mass
                * profile_error_probability(&MixedProfile(node_dists.clone()), &ojas);
            let randomizes = node_dists
                .iter()
                .any(|d| d.iter().filter(|&&p| p > 0.0).count() > 1);
            if randomizes {
                stats.randomize_mass += node.mass;
                stats.failure_mass += node.mass;
            } else {
                let joint = JointAction(
                    node_dists
                        .iter()
                        .map(|d| d.iter().position(|&p| p > 0.0).expect("distribution"))
                        .collect(),
                );
                if !oja_ranks.contains(&joint.rank(game.actions_per_agent())) {
                    stats.failure_mass += node.mass;
                }
            }
            if node.convention.as_ref().is_some_and(|c| c.frozen()) {
                stats.frozen_mass += node.mass;
            }
            dists.push(node_dists);
        }
        rounds.push(stats);
        if round == horizon {
            break;
        }

        let mut next: BTreeMap<NodeKey, Node> = BTreeMap::new();
        for (node, node_dists) in frontier.values().zip(&dists) {
            let settled = node
                .convention
                .as_ref()
                .filter(|c| c.frozen())
                .and_then(|c| c.settled_action())
                .is_some();
            for a in game.joint_actions() {
                let p_joint: f64 = a
                    .0
                    .iter()
                    .zip(node_dists)
                    .map(|(&k, d)| d[k])
                    .product();
                if p_joint == 0.0 {
                    continue;
                }
                let row = game.transition_row(&a);
                for (outcome, &p_out) in row.iter().enumerate() {
                    if p_out == 0.0 {
                        continue;
                    }
                    let mass = node.mass * p_joint * p_out;
                    if mass < opts.prune_mass {
                        dropped += mass;
                        continue;
                    }
                    let mut learners = node.learners.clone();
                    if !settled {
                        for l in learners.iter_mut() {
                            l.update(game, &a, outcome)?;
                        }
                    }
                    let mut convention = node.convention.clone();
                    if let Some(state) = convention.as_mut() {
                        state.observe_outcome(game, outcome);
                    }
                    let key = node_key(game, &learners, convention.as_ref());
                    next.entry(key)
                        .and_modify(|n| n.mass += mass)
                        .or_insert(Node {
                            learners,
                            convention,
                            mass,
                        });
                }
            }
            if next.len() > opts.max_frontier {
                return Ok(ExactCurve {
                    rounds,
                    truncated: Some(format!(
                        "frontier exceeded {} nodes at round {round}",
                        opts.max_frontier
                    )),
                });
            }
        }
        frontier = next;
    }

    Ok(ExactCurve {
        rounds,
        truncated: None,
    })
}

/// Closed-form plateau structure for a 2x2 coordination game with payoff `a`
/// on both coordinated joint actions and `b`, `c` on the uncoordinated ones,
/// under uniform <1,1> priors and observable Bayesian learning.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauPrediction {
    /// Rounds between successive randomization opportunities.
    pub period: u64,
    /// First round at which the agents can randomize (`period - 1`).
    pub first_randomization: u64,
}

impl PlateauPrediction {
    /// Probability of failing to have converged at round k: (1/2)^floor(k/p).
    pub fn failure_at(&self, k: u64) -> f64 {
        0.5f64.powi((k / self.period) as i32)
    }

    pub fn failure_schedule(&self, horizon: u64) -> Vec<f64> {
        (1..=horizon).map(|k| self.failure_at(k)).collect()
    }
}

/// Derive the plateau period from the payoffs: counts `<N_l, N_r>` make an
/// agent indifferent exactly when `N_l (a - c) = N_r (a - b)`, so with unit
/// increments from `<1,1>` the count total must be a multiple of
/// `((a-b) + (a-c)) / gcd(a-b, a-c)` (numerators over a common denominator).
pub fn plateau_prediction(a: Rational64, b: Rational64, c: Rational64) -> Result<PlateauPrediction> {
    if b < c {
        return plateau_prediction(a, c, b);
    }
    if a <= b {
        return Err(Error::InvalidParameter(format!(
            "not a coordination game: a={a} must exceed b={b} and c={c}"
        )));
    }
    let x = a - b;
    let y = a - c;
    let denom = x.denom().lcm(y.denom());
    let nx = x.numer() * (denom / x.denom());
    let ny = y.numer() * (denom / y.denom());
    let g = nx.gcd(&ny);
    let period = ((nx + ny) / g) as u64;
    Ok(PlateauPrediction {
        period,
        first_randomization: period - 1,
    })
}

/// Rounds at which the exact curve shows a randomization opportunity.
pub fn randomization_rounds(curve: &ExactCurve, min_mass: f64) -> Vec<usize> {
    curve
        .rounds
        .iter()
        .filter(|r| r.randomize_mass > min_mass)
        .map(|r| r.round)
        .collect()
}
