use super::{
    evaluate, train, AgentError, DqnAgent, EpisodeMetrics, GreedyController, HomeEnv, QNetwork,
};

/// Result of [`train_with_selection`].
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    /// Online network with the best validation score seen.
    pub network: QNetwork,
    /// Episodes completed when `network` was captured.
    pub episode: usize,
    /// Mean per-step reward of `network` on the validation days.
    pub score: f64,
    /// `(episodes completed, score)` for every validation round.
    pub scores: Vec<(usize, f64)>,
    pub metrics: Vec<EpisodeMetrics>,
}

/// Trains for `episodes` episodes, scoring the greedy policy every `every`
/// episodes on one simulated day per validation seed, and keeps the snapshot
/// with the highest mean reward. Validation seeds should be disjoint from any
/// seeds later used for reporting.
pub fn train_with_selection(
    agent: &mut DqnAgent,
    env: &mut HomeEnv,
    episodes: usize,
    every: usize,
    validation_seeds: &[u64],
) -> Result<SelectionOutcome, AgentError> {
    if every == 0 || validation_seeds.is_empty() {
        return Err(AgentError::InvalidConfig(
            "selection needs a positive interval and at least one validation seed".into(),
        ));
    }
    let mut metrics = Vec::with_capacity(episodes);
    let mut scores = Vec::new();
    let mut best: Option<(QNetwork, usize, f64)> = None;
    let mut done = 0;
    while done < episodes {
        let chunk = every.min(episodes - done);
        let mut m = train(agent, env, chunk)?;
        for (i, e) in m.iter_mut().enumerate() {
            e.episode = done + i;
        }
        metrics.extend(m);
        done += chunk;
        let summary = evaluate(
            &mut GreedyController {
                network: agent.online(),
            },
            env.config(),
            env.weights(),
            validation_seeds,
            |_| {},
        )?;
        let score = summary.mean_reward;
        tracing::info!(
            episodes = done,
            score,
            energy_kwh = summary.energy_kwh,
            "validation"
        );
        scores.push((done, score));
        if best.as_ref().map_or(true, |b| score > b.2) {
            best = Some((agent.online().clone(), done, score));
        }
    }
    let (network, episode, score) = match best {
        Some(b) => b,
        None => (agent.online().clone(), 0, f64::NAN),
    };
    Ok(SelectionOutcome {
        network,
        episode,
        score,
        scores,
        metrics,
    })
}
