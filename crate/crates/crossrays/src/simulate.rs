//! Runs the scheduled experiment through the synthetic agent.

use crossrays_core::agent::{Agent, AgentParams};
use crossrays_core::experiment::{run_participant, ExperimentConfig};
use crossrays_core::tasks::TrialRecord;
use crossrays_core::techniques::TechniqueConfig;
use rayon::prelude::*;

/// Records for every participant, in participant then presentation order.
/// Participants run in parallel; the result does not depend on thread
/// count since every trial seeds its own generator.
pub fn simulate(cfg: &ExperimentConfig, params: AgentParams, techniques: TechniqueConfig) -> Vec<TrialRecord> {
    let agent = Agent::new(params, techniques);
    let per: Vec<Vec<TrialRecord>> =
        (0..cfg.n_participants).into_par_iter().map(|p| run_participant(cfg, &agent, p)).collect();
    per.into_iter().flatten().collect()
}
