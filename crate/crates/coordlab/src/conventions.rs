//! Maximum-likelihood conventions: after every interaction each agent ranks
//! the surviving optimal joint actions by the likelihood of the observed
//! outcome, removes strictly dominated ones, and deletes individual actions
//! that no longer occur in any survivor. The computation uses no personal
//! information, so every agent derives the identical state and the result is
//! common knowledge.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{JointAction, StateGame, PROB_TOL};
use crate::learners::FrequencyBelief;

/// Likelihood comparisons treat differences within this bound as ties; ties
/// survive because a false removal is irreversible.
pub const LIKELIHOOD_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionState {
    active_actions: Vec<Vec<bool>>,
    surviving_ojas: Vec<JointAction>,
    frozen: bool,
}

impl ConventionState {
    /// Start from the full OJA set of the game.
    pub fn new(game: &StateGame, tol: f64) -> Result<Self> {
        let ojas = game.optimal_joint_actions(tol)?;
        let mut state = ConventionState {
            active_actions: vec![Vec::new(); game.n_agents()],
            surviving_ojas: ojas,
            frozen: false,
        };
        state.refresh(game);
        Ok(state)
    }

    pub fn active_actions(&self) -> &[Vec<bool>] {
        &self.active_actions
    }

    pub fn surviving_ojas(&self) -> &[JointAction] {
        &self.surviving_ojas
    }

    pub fn frozen(&self) -> bool {
        self.frozen
    }

    /// The convention, once a unique OJA survives.
    pub fn settled_action(&self) -> Option<&JointAction> {
        if self.surviving_ojas.len() == 1 {
            Some(&self.surviving_ojas[0])
        } else {
            None
        }
    }

    fn refresh(&mut self, game: &StateGame) {
        for (i, row) in self.active_actions.iter_mut().enumerate() {
            *row = vec![false; game.n_actions(i)];
            for a in &self.surviving_ojas {
                row[a.0[i]] = true;
            }
        }
        self.frozen = self.surviving_ojas.len() == 1
            || detect_indistinguishable(game, &self.surviving_ojas);
    }

    /// Remove survivors strictly dominated in likelihood; exact ties survive.
    /// Active actions shrink to the union of surviving components. No-op once
    /// frozen.
    pub fn prune(&mut self, game: &StateGame, likelihoods: &[f64]) {
        if self.frozen {
            return;
        }
        assert_eq!(likelihoods.len(), self.surviving_ojas.len());
        let max = likelihoods.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let survivors: Vec<JointAction> = self
            .surviving_ojas
            .iter()
            .zip(likelihoods)
            .filter(|(_, &le)| le >= max - LIKELIHOOD_TIE_TOL)
            .map(|(a, _)| a.clone())
            .collect();
        // The argmax set is nonempty by construction, so survivors never empty.
        if survivors.len() < self.surviving_ojas.len() {
            self.surviving_ojas = survivors;
            self.refresh(game);
        } else {
            self.frozen = self.surviving_ojas.len() == 1
                || detect_indistinguishable(game, &self.surviving_ojas);
        }
    }

    /// Observe an outcome: compute likelihood estimates and prune.
    pub fn observe_outcome(&mut self, game: &StateGame, outcome: usize) {
        if self.frozen {
            return;
        }
        let le = oja_likelihoods(game, &self.surviving_ojas, outcome);
        self.prune(game, &le);
    }
}

/// Likelihood estimate `LE(a) = Pr^a(outcome)` for each surviving OJA. No
/// conditioning on any agent's own action, so every agent computes the same
/// values. An all-zero vector is legal (uninformative outcome).
pub fn oja_likelihoods(game: &StateGame, surviving_ojas: &[JointAction], outcome: usize) -> Vec<f64> {
    surviving_ojas
        .iter()
        .map(|a| game.transition_row(a)[outcome])
        .collect()
}

/// True when every pair of surviving OJAs has an identical outcome
/// distribution, so no future observation can refine the set. Vacuously true
/// for a singleton.
pub fn detect_indistinguishable(game: &StateGame, surviving_ojas: &[JointAction]) -> bool {
    for (i, a) in surviving_ojas.iter().enumerate() {
        let ra = game.transition_row(a);
        for b in &surviving_ojas[i + 1..] {
            let rb = game.transition_row(b);
            if ra
                .iter()
                .zip(rb.iter())
                .any(|(x, y)| (x - y).abs() > PROB_TOL)
            {
                return false;
            }
        }
    }
    true
}

/// The game restricted to the active action subsets. Returns the reduced game
/// plus, per agent, the map from reduced action index to original index.
pub fn reduce_game(game: &StateGame, state: &ConventionState) -> Result<(StateGame, Vec<Vec<usize>>)> {
    let mapping: Vec<Vec<usize>> = state
        .active_actions
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &on)| on)
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    if mapping.iter().any(|m: &Vec<usize>| m.is_empty()) {
        return Err(Error::InvalidParameter(
            "convention state left an agent with no active actions".into(),
        ));
    }
    let dims: Vec<usize> = mapping.iter().map(|m| m.len()).collect();
    let n_reduced: u64 = dims.iter().fold(1u64, |acc, &k| acc.saturating_mul(k as u64));
    if n_reduced > crate::game::DENSE_LIMIT {
        return Err(Error::ResourceLimit(
            "reduced game is too large to materialize".into(),
        ));
    }
    let mut rows = Vec::with_capacity(n_reduced as usize);
    for idx in 0..n_reduced {
        let reduced = JointAction::from_rank(idx, &dims);
        let original = JointAction(
            reduced
                .0
                .iter()
                .enumerate()
                .map(|(i, &k)| mapping[i][k])
                .collect(),
        );
        rows.push(game.transition_row(&original).into_owned());
    }
    let reduced_game = StateGame::new_dense(dims, game.n_outcomes(), rows, game.utilities().to_vec())?;
    let reduced_game = match game.rational_utilities() {
        Some(rats) => reduced_game.with_rational_utilities(rats.to_vec())?,
        None => reduced_game,
    };
    Ok((reduced_game, mapping))
}

/// Drop the counts of deleted actions; remaining counts are unchanged, so
/// predictions renormalize over the remainder.
pub fn renormalize_beliefs(belief: &FrequencyBelief, active: &[Vec<bool>]) -> FrequencyBelief {
    belief.retain_active(active)
}
