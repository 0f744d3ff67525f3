//! The round loop.
//!
//! Each round: estimate the average energy, elect cluster heads, attach every
//! other alive node to its nearest head, charge radio costs, then retire
//! nodes whose energy ran out. When no head is elected every alive node
//! reports straight to the base station.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{
    assign_energies, k_opt, rx_energy, total_initial_energy, tx_energy, EnergyEstimator,
    NetworkConfig, NodeState,
};
use crate::protocols::{elect, ElectionContext, ProtocolKind};

/// Counters observed at the end of one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    /// One-based round number.
    pub round: u64,
    pub alive: usize,
    pub dead: usize,
    pub ch_count: usize,
    /// Cumulative packets received by the base station.
    pub packets_to_bs: u64,
    /// Cumulative member packets received by cluster heads.
    pub packets_to_ch: u64,
    #[serde(rename = "total_residual_j")]
    pub total_residual: f64,
}

/// Mutable state of one simulation.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub config: NetworkConfig,
    pub nodes: Vec<NodeState>,
    pub estimator: EnergyEstimator,
    pub k_opt: f64,
    /// Rounds completed so far; also the zero-based index of the next round.
    pub round: u64,
    pub packets_to_bs: u64,
    pub packets_to_ch: u64,
    base_context: ElectionContext,
}

impl NetworkState {
    pub fn new(config: NetworkConfig, nodes: Vec<NodeState>) -> Self {
        let estimator = EnergyEstimator::new(&config, total_initial_energy(&nodes));
        let k = k_opt(&config);
        let base_context =
            ElectionContext::for_nodes(&nodes, config.heterogeneity, config.p_opt, config.e_o, k);
        NetworkState {
            config,
            nodes,
            estimator,
            k_opt: k,
            round: 0,
            packets_to_bs: 0,
            packets_to_ch: 0,
            base_context,
        }
    }

    /// Election context for the upcoming round.
    pub fn context(&self) -> ElectionContext {
        ElectionContext {
            round: self.round,
            avg_energy: self.estimator.average_energy(self.round),
            ..self.base_context
        }
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn total_residual(&self) -> f64 {
        self.nodes.iter().map(|n| n.residual_energy).sum()
    }

    fn metrics(&self, ch_count: usize) -> RoundMetrics {
        let alive = self.alive_count();
        RoundMetrics {
            round: self.round,
            alive,
            dead: self.nodes.len() - alive,
            ch_count,
            packets_to_bs: self.packets_to_bs,
            packets_to_ch: self.packets_to_ch,
            total_residual: self.total_residual(),
        }
    }
}

/// Executes one round and returns its metrics.
///
/// Once the estimated average energy has reached zero no election is held
/// and alive nodes transmit directly to the base station.
pub fn run_round<R: rand::Rng + ?Sized>(
    state: &mut NetworkState,
    kind: &ProtocolKind,
    rng: &mut R,
) -> Result<RoundMetrics> {
    let ctx = state.context();
    let radio = state.config.radio;
    let bits = radio.msg_bits;
    let bs = state.config.bs_position;

    let heads = if ctx.avg_energy > 0.0 && state.nodes.iter().any(|n| n.alive) {
        elect(kind, &mut state.nodes, &ctx, rng)?
    } else {
        Vec::new()
    };

    let n = state.nodes.len();
    let mut cost = vec![0.0; n];
    let mut members = vec![0u32; n];
    let mut is_head = vec![false; n];
    for &h in &heads {
        is_head[h] = true;
    }

    for node in state.nodes.iter().filter(|n| n.alive && !is_head[n.id]) {
        let nearest = heads
            .iter()
            .map(|&h| (h, node.position.distance(&state.nodes[h].position)))
            .fold(None, |best: Option<(usize, f64)>, (h, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((h, d)),
            });
        match nearest {
            Some((h, d)) => {
                cost[node.id] += tx_energy(&radio, bits, d);
                members[h] += 1;
                state.packets_to_ch += 1;
            }
            None => {
                cost[node.id] += tx_energy(&radio, bits, node.position.distance(&bs));
                state.packets_to_bs += 1;
            }
        }
    }

    for &h in &heads {
        let m = f64::from(members[h]);
        let head = &state.nodes[h];
        cost[h] += rx_energy(&radio, bits) * m
            + radio.e_da * f64::from(bits) * (m + 1.0)
            + tx_energy(&radio, bits, head.position.distance(&bs));
        state.packets_to_bs += 1;
    }

    for node in state.nodes.iter_mut().filter(|n| n.alive) {
        node.residual_energy -= cost[node.id];
        if node.residual_energy <= 0.0 {
            node.residual_energy = 0.0;
            node.alive = false;
            node.eligible = false;
        }
    }

    state.round += 1;
    Ok(state.metrics(heads.len()))
}

/// Result of one complete simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub protocol: ProtocolKind,
    /// Free-form scenario label, used as a key by the reporting layer.
    pub scenario: String,
    pub seed: u64,
    pub config: NetworkConfig,
    pub first_death_round: Option<u64>,
    /// Round at which the tenth node died. Undefined for networks with fewer
    /// than ten nodes.
    pub tenth_death_round: Option<u64>,
    pub last_death_round: Option<u64>,
    pub total_packets_to_bs: u64,
    pub per_round: Vec<RoundMetrics>,
}

impl RunSummary {
    /// Rounds before the first node death.
    pub fn stability_period(&self) -> Option<u64> {
        self.first_death_round
    }

    /// Rounds between the first and the last node death.
    pub fn instability_period(&self) -> Option<u64> {
        Some(self.last_death_round? - self.first_death_round?)
    }
}

/// Simulates `config` under `kind` until every node is dead or
/// `config.max_rounds` rounds have run. Deterministic in `config.rng_seed`.
pub fn run_simulation(config: &NetworkConfig, kind: ProtocolKind) -> Result<RunSummary> {
    config.validate()?;
    kind.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let nodes = assign_energies(config, &mut rng)?;
    let mut state = NetworkState::new(config.clone(), nodes);

    let mut per_round = Vec::new();
    let (mut first, mut tenth, mut last) = (None, None, None);
    while state.round < config.max_rounds && state.alive_count() > 0 {
        let m = run_round(&mut state, &kind, &mut rng)?;
        if m.dead >= 1 && first.is_none() {
            first = Some(m.round);
        }
        if m.dead >= 10 && tenth.is_none() {
            tenth = Some(m.round);
        }
        if m.alive == 0 {
            last = Some(m.round);
        }
        per_round.push(m);
    }

    Ok(RunSummary {
        protocol: kind,
        scenario: "custom".to_owned(),
        seed: config.rng_seed,
        config: config.clone(),
        first_death_round: first,
        tenth_death_round: tenth,
        last_death_round: last,
        total_packets_to_bs: state.packets_to_bs,
        per_round,
    })
}
