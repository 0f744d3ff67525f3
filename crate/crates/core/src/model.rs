//! Network model: node state, heterogeneous energy assignment, the
//! first-order radio dissipation model and the analytic per-round estimates
//! (optimal cluster count, expected round energy, lifetime, average energy).

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound of the extra-energy ratio in multi-level networks.
pub const DEFAULT_A_MAX: f64 = 2.0;

/// Mean node-to-BS distance as a fraction of the half field side.
const D_TO_BS_FACTOR: f64 = 0.765;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnergyClass {
    Normal,
    Advanced,
    Super,
    /// Multi-level node carrying `a_i` times extra energy.
    Multi(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: usize,
    pub position: Position,
    pub energy_class: EnergyClass,
    pub initial_energy: f64,
    pub residual_energy: f64,
    pub alive: bool,
    /// Number of rounds this node has served as cluster head.
    pub rounds_as_ch: u32,
    /// Whether the node is currently allowed to stand for election.
    pub eligible: bool,
    /// Zero-based round index from which an ineligible node may stand again.
    pub rejoin_round: u64,
}

impl NodeState {
    pub fn new(id: usize, position: Position, energy_class: EnergyClass, energy: f64) -> Self {
        NodeState {
            id,
            position,
            energy_class,
            initial_energy: energy,
            residual_energy: energy,
            alive: true,
            rounds_as_ch: 0,
            eligible: true,
            rejoin_round: 0,
        }
    }
}

/// How initial energy is spread over the node population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeterogeneityModel {
    /// A fraction `m` of advanced nodes with `a` times extra energy.
    TwoLevel { m: f64, a: f64 },
    /// Of the `m` fraction, a further `m_o` fraction are super nodes with `b`
    /// times extra energy; the rest of `m` are advanced nodes.
    ThreeLevel { m: f64, m_o: f64, a: f64, b: f64 },
    /// Each node draws its extra-energy ratio uniformly from `[0, a_max]`.
    MultiLevel { a_max: f64 },
}

impl Default for HeterogeneityModel {
    fn default() -> Self {
        HeterogeneityModel::TwoLevel { m: 0.0, a: 0.0 }
    }
}

impl HeterogeneityModel {
    pub fn validate(&self) -> Result<()> {
        fn fraction(key: &str, v: f64) -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    key,
                    format!("{v} is not a fraction in [0, 1]"),
                ));
            }
            Ok(())
        }
        fn ratio(key: &str, v: f64) -> Result<()> {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    key,
                    format!("{v} must be a finite ratio >= 0"),
                ));
            }
            Ok(())
        }
        match *self {
            HeterogeneityModel::TwoLevel { m, a } => {
                fraction("m", m)?;
                ratio("a", a)
            }
            HeterogeneityModel::ThreeLevel { m, m_o, a, b } => {
                fraction("m", m)?;
                fraction("m_o", m_o)?;
                ratio("a", a)?;
                ratio("b", b)?;
                if a <= 0.0 {
                    return Err(Error::invalid("a", "advanced nodes need a > 0"));
                }
                if b <= a {
                    return Err(Error::invalid(
                        "b",
                        format!("super nodes need b > a (b={b}, a={a})"),
                    ));
                }
                Ok(())
            }
            HeterogeneityModel::MultiLevel { a_max } => {
                ratio("a_max", a_max)?;
                if a_max == 0.0 {
                    return Err(Error::invalid("a_max", "must be > 0"));
                }
                Ok(())
            }
        }
    }

    /// Node counts `(super, advanced, normal)` for an `n`-node network.
    ///
    /// Class sizes are `round(n * fraction)`; whatever is left over is normal.
    /// Multi-level networks report every node as normal here.
    pub fn class_counts(&self, n: usize) -> Result<(usize, usize, usize)> {
        let nf = n as f64;
        let (n_super, n_adv) = match *self {
            HeterogeneityModel::TwoLevel { m, .. } => (0, (nf * m).round() as usize),
            HeterogeneityModel::ThreeLevel { m, m_o, .. } => (
                (nf * m * m_o).round() as usize,
                (nf * m * (1.0 - m_o)).round() as usize,
            ),
            HeterogeneityModel::MultiLevel { .. } => (0, 0),
        };
        let assigned = n_super + n_adv;
        if assigned > n {
            return Err(Error::ClassCountOverflow {
                assigned,
                n_nodes: n,
            });
        }
        Ok((n_super, n_adv, n - assigned))
    }
}

/// First-order radio model parameters. Energies are in joules per bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub e_elec: f64,
    /// Free-space amplifier energy, J/bit/m².
    pub eps_fs: f64,
    /// Multipath amplifier energy, J/bit/m⁴.
    pub eps_mp: f64,
    /// Aggregation energy, J/bit/signal.
    pub e_da: f64,
    /// Crossover distance between the two amplifier models, meters.
    pub d_o: f64,
    pub msg_bits: u32,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            e_elec: 50e-9,
            eps_fs: 10e-12,
            eps_mp: 0.0013e-12,
            e_da: 5e-9,
            d_o: 70.0,
            msg_bits: 4000,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("e_elec", self.e_elec),
            ("eps_fs", self.eps_fs),
            ("eps_mp", self.eps_mp),
            ("e_da", self.e_da),
            ("d_o", self.d_o),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(key, format!("{v} must be finite and > 0")));
            }
        }
        if self.msg_bits == 0 {
            return Err(Error::invalid("msg_bits", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n_nodes: usize,
    /// Side of the square deployment field, meters.
    pub field_side: f64,
    /// Initial energy of a normal node, joules.
    pub e_o: f64,
    pub p_opt: f64,
    pub bs_position: Position,
    pub heterogeneity: HeterogeneityModel,
    pub radio: RadioParams,
    pub max_rounds: u64,
    pub rng_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            n_nodes: 100,
            field_side: 100.0,
            e_o: 0.5,
            p_opt: 0.1,
            bs_position: Position::new(50.0, 50.0),
            heterogeneity: HeterogeneityModel::default(),
            radio: RadioParams::default(),
            max_rounds: 10_000,
            rng_seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::invalid("n_nodes", "must be >= 1"));
        }
        if !(self.field_side.is_finite() && self.field_side > 0.0) {
            return Err(Error::invalid(
                "field_side",
                format!("{} must be > 0", self.field_side),
            ));
        }
        if !(self.e_o.is_finite() && self.e_o > 0.0) {
            return Err(Error::invalid("e_o", format!("{} must be > 0", self.e_o)));
        }
        if !(self.p_opt > 0.0 && self.p_opt < 1.0) {
            return Err(Error::invalid(
                "p_opt",
                format!("{} is not in (0, 1)", self.p_opt),
            ));
        }
        if !(self.bs_position.x.is_finite() && self.bs_position.y.is_finite()) {
            return Err(Error::invalid("bs_position", "coordinates must be finite"));
        }
        self.heterogeneity.validate()?;
        self.radio.validate()?;
        self.heterogeneity.class_counts(self.n_nodes)?;
        Ok(())
    }
}

/// Places `n_nodes` uniformly over the field and assigns initial energies.
///
/// Super nodes take the lowest ids, then advanced nodes, then normal nodes.
/// Positions are drawn first (x then y per node), followed by the
/// multi-level ratios, so the topology for a given seed does not depend on
/// the heterogeneity model.
pub fn assign_energies<R: Rng + ?Sized>(
    config: &NetworkConfig,
    rng: &mut R,
) -> Result<Vec<NodeState>> {
    let n = config.n_nodes;
    let (n_super, n_adv, _) = config.heterogeneity.class_counts(n)?;
    let side = config.field_side;
    let positions: Vec<Position> = (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * side;
            let y = rng.random::<f64>() * side;
            Position::new(x, y)
        })
        .collect();

    let nodes = positions
        .into_iter()
        .enumerate()
        .map(|(id, pos)| {
            let (class, extra) = match config.heterogeneity {
                HeterogeneityModel::TwoLevel { a, .. } if id < n_adv => (EnergyClass::Advanced, a),
                HeterogeneityModel::ThreeLevel { b, .. } if id < n_super => (EnergyClass::Super, b),
                HeterogeneityModel::ThreeLevel { a, .. } if id < n_super + n_adv => {
                    (EnergyClass::Advanced, a)
                }
                HeterogeneityModel::MultiLevel { a_max } => {
                    let a_i = rng.random::<f64>() * a_max;
                    (EnergyClass::Multi(a_i), a_i)
                }
                _ => (EnergyClass::Normal, 0.0),
            };
            NodeState::new(id, pos, class, config.e_o * (1.0 + extra))
        })
        .collect();
    Ok(nodes)
}

/// Sum of the nodes' initial energies.
pub fn total_initial_energy(nodes: &[NodeState]) -> f64 {
    nodes.iter().map(|n| n.initial_energy).sum()
}

/// Closed-form total initial energy for two- and three-level networks,
/// `N·E_o·(1 + m·a)` and `N·E_o·(1 + m·(a + m_o·b))`. Multi-level networks
/// have no closed form and return `None`.
pub fn closed_form_total_energy(config: &NetworkConfig) -> Option<f64> {
    let base = config.n_nodes as f64 * config.e_o;
    match config.heterogeneity {
        HeterogeneityModel::TwoLevel { m, a } => Some(base * (1.0 + a * m)),
        HeterogeneityModel::ThreeLevel { m, m_o, a, b } => Some(base * (1.0 + m * (a + m_o * b))),
        HeterogeneityModel::MultiLevel { .. } => None,
    }
}

/// Energy to transmit `bits` over distance `d`.
pub fn tx_energy(radio: &RadioParams, bits: u32, d: f64) -> f64 {
    let l = f64::from(bits);
    if d < radio.d_o {
        l * radio.e_elec + l * radio.eps_fs * d * d
    } else {
        l * radio.e_elec + l * radio.eps_mp * d.powi(4)
    }
}

/// Energy to receive `bits`.
pub fn rx_energy(radio: &RadioParams, bits: u32) -> f64 {
    f64::from(bits) * radio.e_elec
}

/// Mean distance from a node to the base station for a centered BS.
pub fn expected_distance_to_bs(field_side: f64) -> f64 {
    D_TO_BS_FACTOR * field_side / 2.0
}

/// Mean member-to-cluster-head distance with `k` clusters.
pub fn expected_distance_to_ch(field_side: f64, k: f64) -> f64 {
    if field_side == 0.0 {
        return 0.0;
    }
    field_side / (2.0 * PI * k).sqrt()
}

/// `(d_to_ch, d_to_bs)` with `k = k_opt(config)`.
pub fn expected_distances(config: &NetworkConfig) -> (f64, f64) {
    let d_to_bs = expected_distance_to_bs(config.field_side);
    let d_to_ch = expected_distance_to_ch(config.field_side, k_opt(config));
    (d_to_ch, d_to_bs)
}

/// Analytically optimal number of clusters.
pub fn k_opt(config: &NetworkConfig) -> f64 {
    let m = config.field_side;
    if config.n_nodes == 0 || m == 0.0 {
        return 0.0;
    }
    let d_to_bs = expected_distance_to_bs(m);
    let n = config.n_nodes as f64;
    (n.sqrt() / (2.0 * PI).sqrt()) * (config.radio.eps_fs / config.radio.eps_mp).sqrt() * m
        / (d_to_bs * d_to_bs)
}

/// Expected energy dissipated by the whole network in one round with
/// `k_opt` clusters.
pub fn e_round(config: &NetworkConfig) -> f64 {
    if config.n_nodes == 0 {
        return 0.0;
    }
    let r = &config.radio;
    let n = config.n_nodes as f64;
    let k = k_opt(config);
    let (d_to_ch, d_to_bs) = expected_distances(config);
    // a zero amplifier coefficient switches its term off even when the
    // matching distance degenerates
    let term = |coef: f64, rest: f64| if coef == 0.0 { 0.0 } else { coef * rest };
    f64::from(r.msg_bits)
        * (2.0 * n * r.e_elec
            + n * r.e_da
            + term(r.eps_mp, k * d_to_bs.powi(4))
            + term(r.eps_fs, n * d_to_ch * d_to_ch))
}

/// Estimated network lifetime in rounds, `E_total / E_round`.
pub fn lifetime_estimate(config: &NetworkConfig, e_total: f64) -> f64 {
    if e_total == 0.0 {
        return 0.0;
    }
    e_total / e_round(config)
}

/// Estimated average residual energy per node at round `r`, falling linearly
/// from `E_total / N` to zero at the estimated lifetime and clamped at zero
/// afterwards.
pub fn average_energy_estimate(config: &NetworkConfig, e_total: f64, r: u64) -> f64 {
    EnergyEstimator::new(config, e_total).average_energy(r)
}

/// Precomputed form of [`average_energy_estimate`] for use inside the round
/// loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimator {
    pub e_total: f64,
    pub n_nodes: usize,
    /// Estimated lifetime `R` in rounds.
    pub lifetime: f64,
}

impl EnergyEstimator {
    pub fn new(config: &NetworkConfig, e_total: f64) -> Self {
        EnergyEstimator {
            e_total,
            n_nodes: config.n_nodes,
            lifetime: lifetime_estimate(config, e_total),
        }
    }

    pub fn average_energy(&self, r: u64) -> f64 {
        if self.n_nodes == 0 || self.lifetime.is_nan() || self.lifetime <= 0.0 {
            return 0.0;
        }
        let avg = self.e_total / self.n_nodes as f64 * (1.0 - r as f64 / self.lifetime);
        avg.max(0.0)
    }
}
