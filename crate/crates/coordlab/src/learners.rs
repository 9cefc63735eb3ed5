//! The four learning rules: fictitious play and Dirichlet Bayesian best
//! response for observable actions, plus their adaptations to stochastic
//! unobservable actions via Bayes-rule posteriors (fractional Dirichlet
//! increments) and likelihood-estimate frequency updates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{tie_set, JointAction, StateGame, TIE_TOL};

/// Normalization tolerance for posterior and likelihood vectors.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    /// Fictitious play, observable actions.
    Fp,
    /// Dirichlet Bayesian best response, observable actions.
    Bayes,
    /// Bayesian best response with Bayes-rule posteriors over unobserved actions.
    BayesUnobs,
    /// Stochastic fictitious play: frequency counts updated by likelihood estimates.
    Sfp,
}

impl LearnerKind {
    pub fn observes_actions(self) -> bool {
        matches!(self, LearnerKind::Fp | LearnerKind::Bayes)
    }
}

/// Initial belief parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prior {
    /// Same initial value for every (agent, action) cell, e.g. `"uniform:1"`.
    Uniform(String),
    /// Explicit per-agent arrays (the entry for the owner is ignored).
    PerAgent(Vec<Vec<f64>>),
}

impl Default for Prior {
    fn default() -> Self {
        Prior::Uniform("uniform:1".into())
    }
}

impl Prior {
    pub fn cell_values(&self, game: &StateGame, own: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Prior::Uniform(spec) => {
                let value: f64 = spec
                    .strip_prefix("uniform:")
                    .ok_or_else(|| {
                        Error::Config(format!("bad prior '{spec}', expected 'uniform:<v>'"))
                    })?
                    .parse()
                    .map_err(|_| Error::Config(format!("bad prior value in '{spec}'")))?;
                if value <= 0.0 {
                    return Err(Error::Config("prior values must be positive".into()));
                }
                Ok((0..game.n_agents())
                    .map(|j| {
                        if j == own {
                            Vec::new()
                        } else {
                            vec![value; game.n_actions(j)]
                        }
                    })
                    .collect())
            }
            Prior::PerAgent(rows) => {
                if rows.len() != game.n_agents() {
                    return Err(Error::Config(format!(
                        "prior lists {} agents, game has {}",
                        rows.len(),
                        game.n_agents()
                    )));
                }
                let mut out = Vec::with_capacity(rows.len());
                for (j, row) in rows.iter().enumerate() {
                    if j == own {
                        out.push(Vec::new());
                        continue;
                    }
                    if row.len() != game.n_actions(j) {
                        return Err(Error::Config(format!(
                            "prior for agent {j} has {} entries, expected {}",
                            row.len(),
                            game.n_actions(j)
                        )));
                    }
                    if row.iter().any(|&v| v < 0.0) || row.iter().sum::<f64>() <= 0.0 {
                        return Err(Error::Config(
                            "prior counts must be nonnegative with a positive sum".into(),
                        ));
                    }
                    out.push(row.clone());
                }
                Ok(out)
            }
        }
    }
}

/// Fictitious-play frequency counts `C^j_{a^j}` over every other agent's
/// actions. The owner's slot stays empty: agents never count their own moves.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBelief {
    own: usize,
    counts: Vec<Vec<f64>>,
}

impl FrequencyBelief {
    pub fn new(game: &StateGame, own: usize, prior: &Prior) -> Result<Self> {
        Ok(FrequencyBelief {
            own,
            counts: prior.cell_values(game, own)?,
        })
    }

    pub fn counts(&self) -> &[Vec<f64>] {
        &self.counts
    }

    pub fn counts_for(&self, agent: usize) -> &[f64] {
        &self.counts[agent]
    }

    /// Relative frequencies per other agent, optionally masked to the
    /// active-action sets of a convention (deleted actions are ignored and
    /// the remainder renormalized).
    pub fn predict(&self, active: Option<&[Vec<bool>]>) -> Result<Vec<Vec<f64>>> {
        predict_from_params(self.own, &self.counts, active)
    }

    /// Observable update: increment the count of each observed action.
    pub fn observe_joint(&mut self, joint: &JointAction) {
        for (j, counts) in self.counts.iter_mut().enumerate() {
            if j != self.own {
                counts[joint.0[j]] += 1.0;
            }
        }
    }

    /// Zero the counts of inactive actions, keeping the rest unchanged.
    pub fn retain_active(&self, active: &[Vec<bool>]) -> FrequencyBelief {
        let counts = self
            .counts
            .iter()
            .enumerate()
            .map(|(j, row)| {
                if j == self.own {
                    Vec::new()
                } else {
                    row.iter()
                        .zip(&active[j])
                        .map(|(&c, &on)| if on { c } else { 0.0 })
                        .collect()
                }
            })
            .collect();
        FrequencyBelief { own: self.own, counts }
    }

    /// Likelihood-estimate update: `C^j_{a^j} += likelihood(j, a^j)`.
    pub fn add_likelihoods(&mut self, likelihoods: &[Vec<f64>]) {
        for (j, counts) in self.counts.iter_mut().enumerate() {
            if j != self.own {
                for (c, l) in counts.iter_mut().zip(&likelihoods[j]) {
                    *c += l;
                }
            }
        }
    }
}

/// Dirichlet parameters `N^j_k` over every other agent's actions.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletBelief {
    own: usize,
    params: Vec<Vec<f64>>,
}

impl DirichletBelief {
    pub fn new(game: &StateGame, own: usize, prior: &Prior) -> Result<Self> {
        let params = prior.cell_values(game, own)?;
        if params.iter().flatten().any(|&v| v <= 0.0) {
            return Err(Error::Config(
                "Dirichlet parameters must be strictly positive".into(),
            ));
        }
        Ok(DirichletBelief { own, params })
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn params_for(&self, agent: usize) -> &[f64] {
        &self.params[agent]
    }

    /// Expected strategy of each other agent: `N^j_k / sum_l N^j_l`.
    pub fn expectation(&self, active: Option<&[Vec<bool>]>) -> Result<Vec<Vec<f64>>> {
        predict_from_params(self.own, &self.params, active)
    }

    /// Observable update: `N^j_k += 1` for each observed component.
    pub fn observe_joint(&mut self, joint: &JointAction) {
        for (j, params) in self.params.iter_mut().enumerate() {
            if j != self.own {
                params[joint.0[j]] += 1.0;
            }
        }
    }

    /// Bayes-rule posterior over each other agent's action given the owner's
    /// action and the observed outcome. For agent j and action `a^j`:
    ///
    /// `posterior(j, a^j) ∝ Pr(outcome | a[j]=a^j, a[i]=own) * E[Pr(a[j]=a^j)]`
    ///
    /// where the likelihood marginalizes the remaining agents' actions under
    /// the current expectations. Each returned row sums to 1.
    pub fn action_posterior(
        &self,
        game: &StateGame,
        own_action: usize,
        outcome: usize,
    ) -> Result<Vec<Vec<f64>>> {
        if !game.is_enumerable() {
            return Err(Error::ResourceLimit(
                "action posterior requires an enumerable joint action space".into(),
            ));
        }
        let expect = self.expectation(None)?;
        let n = game.n_agents();
        let mut posterior: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                if j == self.own {
                    Vec::new()
                } else {
                    vec![0.0; game.n_actions(j)]
                }
            })
            .collect();
        for a in game.joint_actions() {
            if a.0[self.own] != own_action {
                continue;
            }
            // Weight includes E_j(a_j), so accumulating per (j, a[j]) yields
            // likelihood * prior directly.
            let mut w = 1.0;
            for (k, e) in expect.iter().enumerate() {
                if k != self.own {
                    w *= e[a.0[k]];
                }
            }
            if w == 0.0 {
                continue;
            }
            let p = game.transition_row(&a)[outcome];
            if p == 0.0 {
                continue;
            }
            for j in 0..n {
                if j != self.own {
                    posterior[j][a.0[j]] += w * p;
                }
            }
        }
        for (j, row) in posterior.iter_mut().enumerate() {
            if j == self.own {
                continue;
            }
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                return Err(Error::ImpossibleObservation { outcome });
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        Ok(posterior)
    }

    /// Fractional update: `N^j_k += posterior(j, k)`.
    pub fn add_posterior(&mut self, posterior: &[Vec<f64>]) {
        for (j, params) in self.params.iter_mut().enumerate() {
            if j != self.own {
                for (p, inc) in params.iter_mut().zip(&posterior[j]) {
                    *p += inc;
                }
            }
        }
    }
}

fn predict_from_params(
    own: usize,
    params: &[Vec<f64>],
    active: Option<&[Vec<bool>]>,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(params.len());
    for (j, row) in params.iter().enumerate() {
        if j == own {
            out.push(Vec::new());
            continue;
        }
        let mask = |k: usize| active.map_or(true, |a| a[j][k]);
        let total: f64 = row
            .iter()
            .enumerate()
            .filter(|&(k, _)| mask(k))
            .map(|(_, &v)| v)
            .sum();
        if total <= 0.0 {
            if active.is_some() {
                // All mass sat on deleted actions; fall back to uniform over
                // the remaining ones.
                let n_active = (0..row.len()).filter(|&k| mask(k)).count();
                if n_active == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "agent {j} has no active actions"
                    )));
                }
                out.push(
                    (0..row.len())
                        .map(|k| if mask(k) { 1.0 / n_active as f64 } else { 0.0 })
                        .collect(),
                );
                continue;
            }
            return Err(Error::UninitializedBelief { agent: j });
        }
        out.push(
            row.iter()
                .enumerate()
                .map(|(k, &v)| if mask(k) { v / total } else { 0.0 })
                .collect(),
        );
    }
    Ok(out)
}

/// Relative likelihood of each joint action consistent with the agent's own
/// action, given the observed outcome: `Pr^a(s) / sum_b Pr^b(s)` with both
/// `a` and `b` restricted to `a[i] = own_action`.
pub fn sfp_joint_likelihoods(
    game: &StateGame,
    own_agent: usize,
    own_action: usize,
    outcome: usize,
) -> Result<Vec<(JointAction, f64)>> {
    if !game.is_enumerable() {
        return Err(Error::ResourceLimit(
            "joint likelihoods require an enumerable joint action space".into(),
        ));
    }
    let mut entries: Vec<(JointAction, f64)> = Vec::new();
    let mut total = 0.0;
    for a in game.joint_actions() {
        if a.0[own_agent] != own_action {
            continue;
        }
        let p = game.transition_row(&a)[outcome];
        total += p;
        entries.push((a, p));
    }
    if total <= 0.0 {
        return Err(Error::ImpossibleObservation { outcome });
    }
    for (_, p) in entries.iter_mut() {
        *p /= total;
    }
    Ok(entries)
}

/// Marginal likelihood that each other agent performed each of its actions,
/// from normalized joint likelihoods. Rows sum to 1; the owner's row is empty.
pub fn sfp_individual_likelihoods(
    game: &StateGame,
    own_agent: usize,
    joint_likelihoods: &[(JointAction, f64)],
) -> Vec<Vec<f64>> {
    let n = game.n_agents();
    let mut out: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            if j == own_agent {
                Vec::new()
            } else {
                vec![0.0; game.n_actions(j)]
            }
        })
        .collect();
    for (a, p) in joint_likelihoods {
        for j in 0..n {
            if j != own_agent {
                out[j][a.0[j]] += p;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Belief {
    Frequency(FrequencyBelief),
    Dirichlet(DirichletBelief),
}

/// One agent's learner: kind, belief over the others, and epsilon margin for
/// randomizing over near-best responses.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub agent: usize,
    pub kind: LearnerKind,
    pub epsilon: f64,
    pub belief: Belief,
    pub last_action: Option<usize>,
}

impl LearnerState {
    pub fn new(
        game: &StateGame,
        agent: usize,
        kind: LearnerKind,
        epsilon: f64,
        prior: &Prior,
    ) -> Result<Self> {
        if epsilon < 0.0 {
            return Err(Error::Config("epsilon must be nonnegative".into()));
        }
        let belief = match kind {
            LearnerKind::Fp | LearnerKind::Sfp => {
                Belief::Frequency(FrequencyBelief::new(game, agent, prior)?)
            }
            LearnerKind::Bayes | LearnerKind::BayesUnobs => {
                Belief::Dirichlet(DirichletBelief::new(game, agent, prior)?)
            }
        };
        Ok(LearnerState {
            agent,
            kind,
            epsilon,
            belief,
            last_action: None,
        })
    }

    /// Predicted reduced profile over the other agents.
    pub fn predict(&self, active: Option<&[Vec<bool>]>) -> Result<Vec<Vec<f64>>> {
        match &self.belief {
            Belief::Frequency(b) => b.predict(active),
            Belief::Dirichlet(b) => b.expectation(active),
        }
    }

    /// Mixed distribution over the agent's own actions: uniform over all
    /// active actions whose expected utility against the prediction is
    /// within epsilon (absolute, plus the tie tolerance) of the maximum.
    pub fn choice_distribution(
        &self,
        game: &StateGame,
        active: Option<&[Vec<bool>]>,
    ) -> Result<Vec<f64>> {
        let prediction = self.predict(active)?;
        let values = game.expected_action_values(self.agent, &prediction)?;
        let eligible: Vec<usize> = match active {
            None => (0..values.len()).collect(),
            Some(sets) => (0..values.len()).filter(|&k| sets[self.agent][k]).collect(),
        };
        let max = eligible
            .iter()
            .map(|&k| values[k])
            .fold(f64::NEG_INFINITY, f64::max);
        let margin = self.epsilon + TIE_TOL;
        let chosen: Vec<usize> = eligible
            .into_iter()
            .filter(|&k| values[k] >= max - margin)
            .collect();
        let mut dist = vec![0.0; values.len()];
        for &k in &chosen {
            dist[k] = 1.0 / chosen.len() as f64;
        }
        Ok(dist)
    }

    pub fn choose<R: Rng>(
        &self,
        game: &StateGame,
        active: Option<&[Vec<bool>]>,
        rng: &mut R,
    ) -> Result<usize> {
        let dist = self.choice_distribution(game, active)?;
        Ok(sample_discrete(&dist, rng))
    }

    /// Post-round update. Observable kinds consume the true joint action;
    /// unobservable kinds consume only (own action, outcome).
    pub fn update(&mut self, game: &StateGame, joint: &JointAction, outcome: usize) -> Result<()> {
        let own_action = joint.0[self.agent];
        self.last_action = Some(own_action);
        match (&mut self.belief, self.kind) {
            (Belief::Frequency(b), LearnerKind::Fp) => b.observe_joint(joint),
            (Belief::Dirichlet(b), LearnerKind::Bayes) => b.observe_joint(joint),
            (Belief::Dirichlet(b), LearnerKind::BayesUnobs) => {
                let posterior = b.action_posterior(game, own_action, outcome)?;
                b.add_posterior(&posterior);
            }
            (Belief::Frequency(b), LearnerKind::Sfp) => {
                let joints = sfp_joint_likelihoods(game, self.agent, own_action, outcome)?;
                let individual = sfp_individual_likelihoods(game, self.agent, &joints);
                b.add_likelihoods(&individual);
            }
            _ => unreachable!("belief kind matches learner kind by construction"),
        }
        Ok(())
    }

    /// Flat view of the belief parameters, for exact-analysis state keys.
    pub fn belief_params(&self) -> &[Vec<f64>] {
        match &self.belief {
            Belief::Frequency(b) => &b.counts,
            Belief::Dirichlet(b) => &b.params,
        }
    }
}

/// Sample an index from a (sub)probability vector. Any residual mass from
/// rounding goes to the last positive entry.
pub fn sample_discrete<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if r < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Eligible epsilon-best set given action values (test and analysis helper).
pub fn epsilon_best_set(values: &[f64], epsilon: f64) -> Vec<usize> {
    tie_set(values, epsilon + TIE_TOL)
}
