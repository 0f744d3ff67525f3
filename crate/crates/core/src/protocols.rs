//! Cluster-head election kernels.
//!
//! Every protocol follows the same two steps per node and round: an election
//! probability `p_i` derived from the node's residual energy relative to the
//! estimated network average, then a rotation threshold `T(s_i)` that the
//! node compares against a uniform draw. The kernels differ only in how the
//! probability is weighted by energy class (DEEC, DDEEC, EDEEC) or how the
//! threshold is scaled (TDEEC).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EnergyClass, HeterogeneityModel, NodeState};

/// Default value of the DDEEC damping constant `c`.
pub const DEFAULT_DDEEC_C: f64 = 0.02;

/// DDEEC residual-energy threshold as a fraction of `E_o`.
const DDEEC_THRESHOLD_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Deec,
    Ddeec,
    Edeec,
    Tdeec,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::Deec,
        Protocol::Ddeec,
        Protocol::Edeec,
        Protocol::Tdeec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Deec => "deec",
            Protocol::Ddeec => "ddeec",
            Protocol::Edeec => "edeec",
            Protocol::Tdeec => "tdeec",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("protocol", format!("unknown protocol `{s}`")))
    }
}

/// A protocol together with its tunable kernel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolKind {
    pub protocol: Protocol,
    /// DDEEC damping constant applied once a node's residual energy falls to
    /// the threshold level.
    pub ddeec_c: f64,
    /// Cap the rotation threshold at 1. Only TDEEC can exceed 1 otherwise.
    pub clamp_threshold: bool,
}

impl ProtocolKind {
    pub fn new(protocol: Protocol) -> Self {
        ProtocolKind {
            protocol,
            ddeec_c: DEFAULT_DDEEC_C,
            clamp_threshold: true,
        }
    }

    pub fn with_ddeec_c(mut self, c: f64) -> Self {
        self.ddeec_c = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ddeec_c > 0.0 && self.ddeec_c <= 1.0) {
            return Err(Error::invalid(
                "ddeec_c",
                format!("{} is not in (0, 1]", self.ddeec_c),
            ));
        }
        Ok(())
    }
}

/// Network-wide quantities a node needs to take its election decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectionContext {
    /// Zero-based round index.
    pub round: u64,
    /// Estimated average residual energy for this round, joules.
    pub avg_energy: f64,
    pub p_opt: f64,
    pub heterogeneity: HeterogeneityModel,
    pub k_opt: f64,
    pub n_nodes: usize,
    /// Sum of the nodes' extra-energy ratios (multi-level networks).
    pub extra_energy_sum: f64,
    /// Initial energy of a normal node, joules.
    pub e_o: f64,
}

impl ElectionContext {
    /// Sums the multi-level ratios of `nodes`; other fields come from the
    /// arguments.
    pub fn for_nodes(
        nodes: &[NodeState],
        heterogeneity: HeterogeneityModel,
        p_opt: f64,
        e_o: f64,
        k_opt: f64,
    ) -> Self {
        let extra_energy_sum = nodes
            .iter()
            .map(|n| match n.energy_class {
                EnergyClass::Multi(a) => a,
                _ => 0.0,
            })
            .sum();
        ElectionContext {
            round: 0,
            avg_energy: 0.0,
            p_opt,
            heterogeneity,
            k_opt,
            n_nodes: nodes.len(),
            extra_energy_sum,
            e_o,
        }
    }
}

/// Simplified DDEEC threshold residual energy, `0.7·E_o`.
pub fn ddeec_threshold_energy(e_o: f64) -> f64 {
    DDEEC_THRESHOLD_FRACTION * e_o
}

/// Full DDEEC threshold residual energy from the expected per-round
/// dissipation of normal (`e_dis_nn`) and advanced (`e_dis_an`) nodes.
pub fn ddeec_threshold_energy_exact(e_o: f64, a: f64, e_dis_nn: f64, e_dis_an: f64) -> f64 {
    e_o * (1.0 + a * e_dis_nn / (e_dis_nn - e_dis_an))
}

/// Class weight and normalizing denominator so that `p_i = p_opt · weight /
/// denom · E_i / Ē`. With `per_class == false` every node gets weight 1.
fn class_weighting(node: &NodeState, ctx: &ElectionContext, per_class: bool) -> (f64, f64) {
    match (ctx.heterogeneity, node.energy_class) {
        (HeterogeneityModel::MultiLevel { .. }, class) => {
            let a_i = match class {
                EnergyClass::Multi(a) => a,
                _ => 0.0,
            };
            let n = ctx.n_nodes as f64;
            ((1.0 + a_i) * n, n + ctx.extra_energy_sum)
        }
        (HeterogeneityModel::TwoLevel { m, a }, class) => {
            let weight = match class {
                EnergyClass::Advanced => 1.0 + a,
                _ => 1.0,
            };
            (weight, 1.0 + a * m)
        }
        (_, _) if !per_class => (1.0, 1.0),
        (HeterogeneityModel::ThreeLevel { m, m_o, a, b }, class) => {
            let weight = match class {
                EnergyClass::Advanced => 1.0 + a,
                EnergyClass::Super => 1.0 + b,
                _ => 1.0,
            };
            (weight, 1.0 + m * (a + m_o * b))
        }
    }
}

/// Election probability `p_i` of `node` for the round described by `ctx`,
/// clamped to `[0, 1]`.
pub fn election_probability(
    kind: &ProtocolKind,
    node: &NodeState,
    ctx: &ElectionContext,
) -> Result<f64> {
    if ctx.avg_energy.is_nan() || ctx.avg_energy <= 0.0 {
        return Err(Error::NonPositiveAverageEnergy(ctx.avg_energy));
    }
    let ratio = node.residual_energy / ctx.avg_energy;
    let p = match kind.protocol {
        // Three-level networks: DEEC and DDEEC have no super-node weighting and
        // fall back to the plain residual/average ratio.
        Protocol::Deec => {
            let (w, d) = class_weighting(node, ctx, false);
            ctx.p_opt * w * ratio / d
        }
        Protocol::Ddeec => {
            if node.residual_energy > ddeec_threshold_energy(ctx.e_o) {
                let (w, d) = class_weighting(node, ctx, false);
                ctx.p_opt * w * ratio / d
            } else {
                // Every class shares the advanced-node weighting, damped by c.
                let shared = match ctx.heterogeneity {
                    HeterogeneityModel::TwoLevel { m, a }
                    | HeterogeneityModel::ThreeLevel { m, a, .. } => (1.0 + a) / (1.0 + a * m),
                    // (1 + mean a_i) · N / (N + Σ a_i) = 1
                    HeterogeneityModel::MultiLevel { .. } => 1.0,
                };
                kind.ddeec_c * shared * ctx.p_opt * ratio
            }
        }
        // TDEEC shares EDEEC's per-class probabilities; its change is confined
        // to the threshold.
        Protocol::Edeec | Protocol::Tdeec => {
            let (w, d) = class_weighting(node, ctx, true);
            ctx.p_opt * w * ratio / d
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Number of rounds in a rotation epoch for probability `p_i`, at least 1.
pub fn rotation_period(p_i: f64) -> u64 {
    if p_i <= 0.0 {
        return u64::MAX;
    }
    ((1.0 / p_i).floor() as u64).max(1)
}

/// Rotation threshold `T(s_i)` a uniform draw must fall below for `node` to
/// become cluster head.
pub fn threshold(kind: &ProtocolKind, p_i: f64, node: &NodeState, ctx: &ElectionContext) -> f64 {
    if !node.eligible || p_i <= 0.0 {
        return 0.0;
    }
    let phase = (ctx.round % rotation_period(p_i)) as f64;
    let mut t = p_i / (1.0 - p_i * phase);
    if kind.protocol == Protocol::Tdeec && ctx.avg_energy > 0.0 {
        t *= node.residual_energy * ctx.k_opt / ctx.avg_energy;
    }
    if kind.clamp_threshold {
        t = t.clamp(0.0, 1.0);
    }
    t
}

/// Sum of `p_i` over the alive nodes: the expected number of cluster heads.
pub fn expected_ch_count(
    kind: &ProtocolKind,
    nodes: &[NodeState],
    ctx: &ElectionContext,
) -> Result<f64> {
    nodes
        .iter()
        .filter(|n| n.alive)
        .map(|n| election_probability(kind, n, ctx))
        .sum()
}

/// Runs one election sweep in ascending id order and returns the ids of the
/// new cluster heads.
///
/// Nodes whose rest period has elapsed become eligible again first. Only
/// alive, eligible nodes consume a random draw. An elected node sits out the
/// next `rotation_period(p_i) - 1` rounds.
pub fn elect<R: Rng + ?Sized>(
    kind: &ProtocolKind,
    nodes: &mut [NodeState],
    ctx: &ElectionContext,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut heads = Vec::new();
    for node in nodes.iter_mut().filter(|n| n.alive) {
        if !node.eligible && ctx.round >= node.rejoin_round {
            node.eligible = true;
        }
        if !node.eligible {
            continue;
        }
        let p = election_probability(kind, node, ctx)?;
        let t = threshold(kind, p, node, ctx);
        let u: f64 = rng.random();
        if u < t {
            node.eligible = false;
            node.rounds_as_ch += 1;
            node.rejoin_round = ctx.round.saturating_add(rotation_period(p));
            heads.push(node.id);
        }
    }
    Ok(heads)
}
