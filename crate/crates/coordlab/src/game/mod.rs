//! Cooperative state games: joint actions, stochastic outcomes, shared utility.
//!
//! A state game has `n` agents, each with a finite action set. A joint action
//! (one component per agent) induces a fixed distribution over outcome states,
//! and every outcome carries a single utility shared by all agents.

mod builtins;
mod format;

pub use builtins::{
    make_3x3_convention_game, make_asymmetric_2x2, make_coordination_2x2,
    make_deterministic_2x2, make_pure_coordination, make_stochastic_2x2, Convention3x3Params,
};
pub use format::GameFile;

use std::borrow::Cow;

use num_rational::Rational64;

use crate::error::{Error, Result};

/// Row-sum and probability tolerance for game validation.
pub const PROB_TOL: f64 = 1e-12;
/// Default absolute tolerance for utility ties in best-response sets.
pub const TIE_TOL: f64 = 1e-9;

/// Joint actions with more components than this are never materialized as a
/// dense strategic-form table.
pub const DENSE_LIMIT: u64 = 100_000;

/// One action choice per agent, executed simultaneously.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct JointAction(pub Vec<usize>);

impl JointAction {
    /// Lexicographic rank with agent 0 as the most significant digit.
    pub fn rank(&self, dims: &[usize]) -> u64 {
        let mut idx = 0u64;
        for (c, d) in self.0.iter().zip(dims) {
            idx = idx * (*d as u64) + *c as u64;
        }
        idx
    }

    pub fn from_rank(mut idx: u64, dims: &[usize]) -> Self {
        let mut comps = vec![0usize; dims.len()];
        for i in (0..dims.len()).rev() {
            let d = dims[i] as u64;
            comps[i] = (idx % d) as usize;
            idx /= d;
        }
        JointAction(comps)
    }
}

/// Per-agent randomized strategies; one probability vector per agent.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MixedProfile(pub Vec<Vec<f64>>);

impl MixedProfile {
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.0.iter().enumerate() {
            if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "strategy for agent {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidParameter(format!(
                    "strategy for agent {i} sums to {s}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// Transition model for a state game.
#[derive(Debug, Clone, PartialEq)]
pub enum Transitions {
    /// One probability row per joint action, lexicographic order.
    Dense(Vec<Vec<f64>>),
    /// Pure coordination closed form: `n` agents with `n` moves each.
    /// All-equal-on-`m` reaches outcome `m`; anything else reaches the
    /// final "uncoordinated" outcome. Rows are built on demand so that
    /// games like 10x10 (10^10 joint actions) stay representable.
    PureCoordination,
}

/// A fully cooperative single-stage state game.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGame {
    actions_per_agent: Vec<usize>,
    n_outcomes: usize,
    transitions: Transitions,
    utilities: Vec<f64>,
    rational_utilities: Option<Vec<Rational64>>,
}

impl StateGame {
    /// Build a game from an explicit transition table and validate it.
    pub fn new_dense(
        actions_per_agent: Vec<usize>,
        n_outcomes: usize,
        transitions: Vec<Vec<f64>>,
        utilities: Vec<f64>,
    ) -> Result<Self> {
        let game = StateGame {
            actions_per_agent,
            n_outcomes,
            transitions: Transitions::Dense(transitions),
            utilities,
            rational_utilities: None,
        };
        game.validate()?;
        Ok(game)
    }

    /// Attach exact rational utilities (must agree with the float utilities).
    pub fn with_rational_utilities(mut self, rats: Vec<Rational64>) -> Result<Self> {
        if rats.len() != self.utilities.len() {
            return Err(Error::InvalidGame(format!(
                "{} rational utilities for {} outcomes",
                rats.len(),
                self.utilities.len()
            )));
        }
        for (r, &u) in rats.iter().zip(&self.utilities) {
            let approx = *r.numer() as f64 / *r.denom() as f64;
            if (approx - u).abs() > 1e-9 {
                return Err(Error::InvalidGame(format!(
                    "rational utility {r} disagrees with float utility {u}"
                )));
            }
        }
        self.rational_utilities = Some(rats);
        Ok(self)
    }

    pub(crate) fn new_pure_coordination(n: usize, c: f64, d: f64) -> Self {
        let mut utilities = vec![c; n];
        utilities.push(d);
        StateGame {
            actions_per_agent: vec![n; n],
            n_outcomes: n + 1,
            transitions: Transitions::PureCoordination,
            utilities,
            rational_utilities: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.actions_per_agent.is_empty() || self.actions_per_agent.iter().any(|&k| k == 0) {
            return Err(Error::InvalidGame(
                "need at least one agent, each with at least one action".into(),
            ));
        }
        if self.utilities.len() != self.n_outcomes {
            return Err(Error::InvalidGame(format!(
                "{} utilities for {} outcomes",
                self.utilities.len(),
                self.n_outcomes
            )));
        }
        if self.utilities.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidGame("non-finite utility".into()));
        }
        if let Transitions::Dense(rows) = &self.transitions {
            let expected = self.n_joint_actions();
            if rows.len() as u64 != expected {
                return Err(Error::InvalidGame(format!(
                    "{} transition rows, expected {expected}",
                    rows.len()
                )));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != self.n_outcomes {
                    return Err(Error::InvalidGame(format!(
                        "transition row {i} has {} entries, expected {}",
                        row.len(),
                        self.n_outcomes
                    )));
                }
                if row.iter().any(|&p| !(0.0..=1.0 + PROB_TOL).contains(&p)) {
                    return Err(Error::InvalidGame(format!(
                        "transition row {i} has an entry outside [0,1]"
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > PROB_TOL {
                    return Err(Error::InvalidGame(format!(
                        "transition row {i} sums to {s}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.actions_per_agent.len()
    }

    pub fn actions_per_agent(&self) -> &[usize] {
        &self.actions_per_agent
    }

    pub fn n_actions(&self, agent: usize) -> usize {
        self.actions_per_agent[agent]
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn rational_utilities(&self) -> Option<&[Rational64]> {
        self.rational_utilities.as_deref()
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    pub fn n_joint_actions(&self) -> u64 {
        self.actions_per_agent
            .iter()
            .fold(1u64, |acc, &k| acc.saturating_mul(k as u64))
    }

    /// True when the full strategic form fits in memory.
    pub fn is_enumerable(&self) -> bool {
        self.n_joint_actions() <= DENSE_LIMIT
    }

    pub fn validate_joint(&self, a: &JointAction) -> Result<()> {
        if a.0.len() != self.n_agents() {
            return Err(Error::InvalidParameter(format!(
                "joint action has {} components for {} agents",
                a.0.len(),
                self.n_agents()
            )));
        }
        for (agent, (&action, &limit)) in a.0.iter().zip(&self.actions_per_agent).enumerate() {
            if action >= limit {
                return Err(Error::InvalidAction {
                    agent,
                    action,
                    limit,
                });
            }
        }
        Ok(())
    }

    /// Outcome distribution `Pr^a(.)` for a joint action.
    pub fn transition_row(&self, a: &JointAction) -> Cow<'_, [f64]> {
        match &self.transitions {
            Transitions::Dense(rows) => {
                Cow::Borrowed(rows[a.rank(&self.actions_per_agent) as usize].as_slice())
            }
            Transitions::PureCoordination => {
                let n = self.n_agents();
                let mut row = vec![0.0; n + 1];
                let m = a.0[0];
                if a.0.iter().all(|&x| x == m) {
                    row[m] = 1.0;
                } else {
                    row[n] = 1.0;
                }
                Cow::Owned(row)
            }
        }
    }

    /// Expected utility of a joint action: `sum_s Pr^a(s) U(s)`.
    pub fn expected_utility(&self, a: &JointAction) -> Result<f64> {
        self.validate_joint(a)?;
        let row = self.transition_row(a);
        Ok(row
            .iter()
            .zip(&self.utilities)
            .map(|(p, u)| p * u)
            .sum())
    }

    /// Iterate all joint actions in lexicographic order (enumerable games only).
    pub fn joint_actions(&self) -> impl Iterator<Item = JointAction> + '_ {
        let dims = self.actions_per_agent.clone();
        (0..self.n_joint_actions()).map(move |idx| JointAction::from_rank(idx, &dims))
    }

    /// Strategic form: expected utility per joint action.
    pub fn to_strategic_form(&self) -> Result<PayoffTensor> {
        if !self.is_enumerable() {
            return Err(Error::ResourceLimit(format!(
                "{} joint actions exceed the dense limit of {DENSE_LIMIT}",
                self.n_joint_actions()
            )));
        }
        let mut values = Vec::with_capacity(self.n_joint_actions() as usize);
        for a in self.joint_actions() {
            values.push(self.expected_utility(&a)?);
        }
        Ok(PayoffTensor {
            dims: self.actions_per_agent.clone(),
            values,
        })
    }

    /// All joint actions whose expected utility is within `tol` of the maximum.
    pub fn optimal_joint_actions(&self, tol: f64) -> Result<Vec<JointAction>> {
        match &self.transitions {
            Transitions::PureCoordination => {
                let n = self.n_agents();
                // c > d is enforced by the constructor; diagonals are optimal.
                Ok((0..n).map(|m| JointAction(vec![m; n])).collect())
            }
            Transitions::Dense(_) => {
                let tensor = self.to_strategic_form()?;
                let max = tensor
                    .values
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                Ok(self
                    .joint_actions()
                    .zip(&tensor.values)
                    .filter(|(_, &v)| v >= max - tol)
                    .map(|(a, _)| a)
                    .collect())
            }
        }
    }

    /// Expected utility of each of `agent`'s actions against the others'
    /// predicted strategies. `prediction[j]` is a distribution over agent
    /// `j`'s actions; the slot for `agent` itself is ignored.
    pub fn expected_action_values(&self, agent: usize, prediction: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.n_agents();
        if agent >= n || prediction.len() != n {
            return Err(Error::InvalidParameter(format!(
                "bad agent index {agent} or prediction length {}",
                prediction.len()
            )));
        }
        match &self.transitions {
            Transitions::PureCoordination => {
                let c = self.utilities[0];
                let d = self.utilities[n];
                Ok((0..self.n_actions(agent))
                    .map(|m| {
                        let mut p = 1.0;
                        for (j, pred) in prediction.iter().enumerate() {
                            if j != agent {
                                p *= pred[m];
                            }
                        }
                        d + (c - d) * p
                    })
                    .collect())
            }
            Transitions::Dense(_) => {
                let mut values = vec![0.0; self.n_actions(agent)];
                for a in self.joint_actions() {
                    let mut p = 1.0;
                    for (j, pred) in prediction.iter().enumerate() {
                        if j != agent {
                            p *= pred[a.0[j]];
                        }
                    }
                    if p > 0.0 {
                        values[a.0[agent]] += p * self.expected_utility(&a)?;
                    }
                }
                Ok(values)
            }
        }
    }

    /// Pure best responses of `agent` against a reduced profile, with ties
    /// within `tol` (absolute).
    pub fn best_responses(
        &self,
        agent: usize,
        prediction: &[Vec<f64>],
        tol: f64,
    ) -> Result<Vec<usize>> {
        let values = self.expected_action_values(agent, prediction)?;
        Ok(tie_set(&values, tol))
    }
}

/// Indices of entries within `tol` of the maximum.
pub fn tie_set(values: &[f64], tol: f64) -> Vec<usize> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - tol)
        .map(|(i, _)| i)
        .collect()
}

/// Probability that independently sampled per-agent choices miss every
/// joint action in `ojas`: `1 - sum_{a in ojas} prod_i profile_i(a[i])`.
pub fn profile_error_probability(profile: &MixedProfile, ojas: &[JointAction]) -> f64 {
    let hit: f64 = ojas
        .iter()
        .map(|a| {
            a.0.iter()
                .zip(&profile.0)
                .map(|(&c, p)| p[c])
                .product::<f64>()
        })
        .sum();
    (1.0 - hit).clamp(0.0, 1.0)
}

/// Expected utility per joint action, indexed lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl PayoffTensor {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, a: &JointAction) -> f64 {
        self.values[a.rank(&self.dims) as usize]
    }
}
