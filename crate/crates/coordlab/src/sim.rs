//! Monte Carlo harness: repeated plays of a state game by a team of
//! learners, per-round analytic error probability, and seeded averaging over
//! independent trials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{config_hash, ExperimentConfig};
use crate::conventions::ConventionState;
use crate::error::Result;
use crate::game::{profile_error_probability, JointAction, MixedProfile, StateGame, TIE_TOL};
use crate::learners::{sample_discrete, LearnerState};

#[derive(Debug, Clone, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Each agent's mixed choice distribution before sampling.
    pub choice_dists: Vec<Vec<f64>>,
    /// Probability the sampled joint action misses every OJA, computed
    /// analytically from the choice distributions before sampling.
    pub error_probability: f64,
    pub joint_action: JointAction,
    pub outcome: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<ConventionState>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub rounds: Vec<RoundRecord>,
    /// 1-based round after which the convention state froze; -1 if never.
    pub frozen_round: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundStats {
    pub round: usize,
    pub mean_error: f64,
    pub stderr: f64,
    pub frozen_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveResult {
    pub rounds: Vec<RoundStats>,
    pub config_hash: String,
    pub seed: u64,
}

/// One interaction: compute choice distributions, record the analytic error
/// probability, sample the joint action and outcome, update learners, prune
/// conventions.
pub fn play_round<R: rand::Rng>(
    game: &StateGame,
    ojas: &[JointAction],
    learners: &mut [LearnerState],
    convention: Option<&mut ConventionState>,
    round: usize,
    rng: &mut R,
) -> Result<RoundRecord> {
    let settled = convention
        .as_deref()
        .filter(|c| c.frozen())
        .and_then(|c| c.settled_action())
        .cloned();
    let active = convention.as_deref().map(|c| c.active_actions().to_vec());

    let choice_dists: Vec<Vec<f64>> = match &settled {
        Some(a) => learners
            .iter()
            .map(|l| {
                let mut dist = vec![0.0; game.n_actions(l.agent)];
                dist[a.0[l.agent]] = 1.0;
                dist
            })
            .collect(),
        None => learners
            .iter()
            .map(|l| l.choice_distribution(game, active.as_deref()))
            .collect::<Result<_>>()?,
    };

    let error_probability =
        profile_error_probability(&MixedProfile(choice_dists.clone()), ojas);

    // Fixed draw order: agent choices ascending by id, then the outcome.
    let joint_action = JointAction(
        choice_dists
            .iter()
            .map(|dist| sample_discrete(dist, rng))
            .collect(),
    );
    let outcome = sample_discrete(&game.transition_row(&joint_action), rng);

    if settled.is_none() {
        for learner in learners.iter_mut() {
            learner.update(game, &joint_action, outcome)?;
        }
    }
    let snapshot = match convention {
        Some(state) => {
            state.observe_outcome(game, outcome);
            Some(state.clone())
        }
        None => None,
    };

    Ok(RoundRecord {
        round,
        choice_dists,
        error_probability,
        joint_action,
        outcome,
        convention: snapshot,
    })
}

/// One full trial with a random stream derived deterministically from
/// (base seed, trial index): identical inputs give identical records.
pub fn run_trial(
    game: &StateGame,
    ojas: &[JointAction],
    config: &ExperimentConfig,
    trial: u64,
) -> Result<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial);

    let mut learners: Vec<LearnerState> = (0..game.n_agents())
        .map(|agent| {
            LearnerState::new(
                game,
                agent,
                config.learner.kind,
                config.learner.epsilon,
                &config.learner.prior,
            )
        })
        .collect::<Result<_>>()?;
    let mut convention = if config.conventions {
        Some(ConventionState::new(game, TIE_TOL)?)
    } else {
        None
    };

    let mut rounds = Vec::with_capacity(config.horizon);
    let mut frozen_round = -1i64;
    for round in 1..=config.horizon {
        let record = play_round(
            game,
            ojas,
            &mut learners,
            convention.as_mut(),
            round,
            &mut rng,
        )?;
        if frozen_round < 0 {
            if let Some(state) = &convention {
                if state.frozen() {
                    frozen_round = round as i64;
                }
            }
        }
        rounds.push(record);
    }
    Ok(TrialRecord {
        trial,
        rounds,
        frozen_round,
    })
}

/// Run all trials (in parallel) and reduce to a per-round mean error curve.
/// Results are byte-identical for a given (config, seed) regardless of the
/// number of workers. Set `keep_records` to also return every TrialRecord.
pub fn run_experiment(
    config: &ExperimentConfig,
    keep_records: bool,
) -> Result<(CurveResult, Option<Vec<TrialRecord>>)> {
    config.validate()?;
    let (game, _) = config.game.build()?;
    let ojas = game.optimal_joint_actions(TIE_TOL)?;

    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(&game, &ojas, config, trial))
        .collect::<Result<_>>()?;

    let n = config.trials as f64;
    let mut rounds = Vec::with_capacity(config.horizon);
    for round in 0..config.horizon {
        let errors: Vec<f64> = records
            .iter()
            .map(|r| r.rounds[round].error_probability)
            .collect();
        let mean = errors.iter().sum::<f64>() / n;
        let var = if config.trials > 1 {
            errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let frozen = records
            .iter()
            .filter(|r| r.frozen_round >= 0 && r.frozen_round <= (round + 1) as i64)
            .count() as f64;
        rounds.push(RoundStats {
            round: round + 1,
            mean_error: mean,
            stderr: (var / n).sqrt(),
            frozen_fraction: frozen / n,
        });
    }
    let curve = CurveResult {
        rounds,
        config_hash: config_hash(&config.to_value()?),
        seed: config.seed,
    };
    Ok((curve, keep_records.then_some(records)))
}

fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

/// CSV schema: `round,mean_error,stderr,frozen_fraction`, floats with nine
/// significant digits. `pruned_mass` holds the exact-analysis error bound
/// column when present.
pub fn write_curve_csv<W: std::io::Write>(
    w: &mut W,
    curve: &CurveResult,
    pruned_mass: Option<&[f64]>,
) -> Result<()> {
    match pruned_mass {
        None => writeln!(w, "round,mean_error,stderr,frozen_fraction")?,
        Some(_) => writeln!(w, "round,mean_error,stderr,frozen_fraction,pruned_mass")?,
    }
    for (i, r) in curve.rounds.iter().enumerate() {
        match pruned_mass {
            None => writeln!(
                w,
                "{},{},{},{}",
                r.round,
                fmt9(r.mean_error),
                fmt9(r.stderr),
                fmt9(r.frozen_fraction)
            )?,
            Some(masses) => writeln!(
                w,
                "{},{},{},{},{}",
                r.round,
                fmt9(r.mean_error),
                fmt9(r.stderr),
                fmt9(r.frozen_fraction),
                fmt9(masses[i])
            )?,
        }
    }
    Ok(())
}

/// JSON-lines dump of full trial records (for `--dump-trials`).
pub fn write_trial_records<W: std::io::Write>(w: &mut W, records: &[TrialRecord]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut *w, record)?;
        writeln!(w)?;
    }
    Ok(())
}
