//! Step/reset interaction with a fixed SCM.
//!
//! Each step applies a subset of the configured interventions, draws one
//! sample from the intervened model, evaluates the hooks and then undoes the
//! interventions, so the model is unchanged between steps.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::rng::RngState;
use crate::scm::{Intervention, Sample, ScmError, ScmModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("possible intervention {index} is invalid: {source}")]
    InvalidIntervention {
        index: usize,
        #[source]
        source: ScmError,
    },
    #[error(transparent)]
    Scm(#[from] ScmError),
}

/// Indices into the environment's possible interventions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Action {
    pub indices: BTreeSet<usize>,
}

impl Action {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        Action {
            indices: indices.into_iter().collect(),
        }
    }

    pub fn none() -> Self {
        Action::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: Sample,
}

pub type RewardFn = Box<dyn Fn(&Sample, &Action) -> f64 + Send + Sync>;
pub type TerminatedFn = Box<dyn Fn(&Sample) -> bool + Send + Sync>;
pub type TruncatedFn = Box<dyn Fn(u64) -> bool + Send + Sync>;
pub type ObservationFn = Box<dyn Fn(&Sample) -> Vec<f64> + Send + Sync>;

/// Optional overrides. Defaults: reward 0, never terminated, truncated once
/// the step count reaches the horizon, observation = endogenous values in
/// name order.
#[derive(Default)]
pub struct EnvHooks {
    pub reward: Option<RewardFn>,
    pub terminated: Option<TerminatedFn>,
    pub truncated: Option<TruncatedFn>,
    pub observation: Option<ObservationFn>,
}

#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub model: ScmModel,
    pub possible_interventions: Vec<Intervention>,
    /// Steps per episode; `None` never truncates.
    pub horizon: Option<u64>,
    pub seed: u64,
}

pub struct ScmEnvironment {
    model: ScmModel,
    possible: Vec<Intervention>,
    horizon: Option<u64>,
    rng: RngState,
    steps: u64,
    hooks: EnvHooks,
}

/// Number of subsets of `interventions` whose targets are pairwise
/// distinct.
pub fn count_valid_actions(interventions: &[Intervention]) -> u128 {
    let mut per_target: BTreeMap<&str, u128> = BTreeMap::new();
    for iv in interventions {
        *per_target.entry(&iv.target).or_insert(0) += 1;
    }
    per_target.values().map(|n| n + 1).product()
}

impl ScmEnvironment {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        let mut probe = config.model.clone();
        probe.undo_interventions();
        for (index, iv) in config.possible_interventions.iter().enumerate() {
            probe
                .do_interventions(std::slice::from_ref(iv))
                .map_err(|source| EnvError::InvalidIntervention { index, source })?;
            probe.undo_interventions();
        }
        Ok(ScmEnvironment {
            model: config.model,
            possible: config.possible_interventions,
            horizon: config.horizon,
            rng: RngState::new(config.seed),
            steps: 0,
            hooks: EnvHooks::default(),
        })
    }

    pub fn with_hooks(mut self, hooks: EnvHooks) -> Self {
        self.hooks = hooks;
        self
    }

    pub fn model(&self) -> &ScmModel {
        &self.model
    }

    pub fn possible_interventions(&self) -> &[Intervention] {
        &self.possible
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn action_space_size(&self) -> u128 {
        count_valid_actions(&self.possible)
    }

    pub fn validate_action(&self, action: &Action) -> Result<(), EnvError> {
        let mut targets = BTreeSet::new();
        for &i in &action.indices {
            let iv = self.possible.get(i).ok_or_else(|| {
                EnvError::InvalidAction(format!(
                    "index {i} out of range for {} possible interventions",
                    self.possible.len()
                ))
            })?;
            if !targets.insert(iv.target.as_str()) {
                return Err(EnvError::InvalidAction(format!(
                    "more than one intervention targets `{}`",
                    iv.target
                )));
            }
        }
        Ok(())
    }

    fn observe(&self, sample: &Sample) -> Vec<f64> {
        match &self.hooks.observation {
            Some(f) => f(sample),
            None => sample.endogenous.values().copied().collect(),
        }
    }

    pub fn reset(&mut self) -> Result<(Vec<f64>, Sample), EnvError> {
        self.steps = 0;
        self.model.undo_interventions();
        let sample = self.model.sample(&mut self.rng)?;
        Ok((self.observe(&sample), sample))
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        self.validate_action(action)?;
        let chosen: Vec<Intervention> = action
            .indices
            .iter()
            .map(|&i| self.possible[i].clone())
            .collect();
        self.model.do_interventions(&chosen)?;
        let sampled = self.model.sample(&mut self.rng);
        self.model.undo_interventions();
        let sample = sampled?;

        self.steps += 1;
        let reward = self
            .hooks
            .reward
            .as_ref()
            .map_or(0.0, |f| f(&sample, action));
        let terminated = self.hooks.terminated.as_ref().is_some_and(|f| f(&sample));
        let truncated = match &self.hooks.truncated {
            Some(f) => f(self.steps),
            None => self.horizon.is_some_and(|h| self.steps >= h),
        };
        Ok(StepResult {
            observation: self.observe(&sample),
            reward,
            terminated,
            truncated,
            info: sample,
        })
    }
}
