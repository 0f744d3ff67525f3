//! Command-line front end: scenario presets, config files and the
//! protocol × scenario × seed run matrix.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use crate::engine::{run_simulation, RunSummary};
use crate::error::{Error, Result};
use crate::model::{HeterogeneityModel, NetworkConfig, Position, DEFAULT_A_MAX};
use crate::protocols::{Protocol, ProtocolKind, DEFAULT_DDEEC_C};
use crate::reporting::{self, ComparisonTable};

/// Heterogeneity settings of the six reference scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum ScenarioPreset {
    S1,
    S2,
    S3,
    S4,
    S5,
    Multi,
}

impl ScenarioPreset {
    pub const ALL: [ScenarioPreset; 6] = [
        ScenarioPreset::S1,
        ScenarioPreset::S2,
        ScenarioPreset::S3,
        ScenarioPreset::S4,
        ScenarioPreset::S5,
        ScenarioPreset::Multi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioPreset::S1 => "s1",
            ScenarioPreset::S2 => "s2",
            ScenarioPreset::S3 => "s3",
            ScenarioPreset::S4 => "s4",
            ScenarioPreset::S5 => "s5",
            ScenarioPreset::Multi => "multi",
        }
    }

    /// `a_max` only matters for [`ScenarioPreset::Multi`].
    pub fn heterogeneity(self, a_max: f64) -> HeterogeneityModel {
        let three = |m, m_o, a, b| HeterogeneityModel::ThreeLevel { m, m_o, a, b };
        match self {
            ScenarioPreset::S1 => three(0.5, 0.4, 1.5, 3.0),
            ScenarioPreset::S2 => three(0.4, 0.3, 1.3, 2.5),
            ScenarioPreset::S3 => three(0.3, 0.2, 1.2, 2.0),
            ScenarioPreset::S4 => three(0.6, 0.5, 1.6, 3.2),
            ScenarioPreset::S5 => three(0.7, 0.6, 1.7, 3.4),
            ScenarioPreset::Multi => HeterogeneityModel::MultiLevel { a_max },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Deec,
    Ddeec,
    Edeec,
    Tdeec,
    All,
}

impl ProtocolArg {
    fn expand(self) -> &'static [Protocol] {
        match self {
            ProtocolArg::Deec => &[Protocol::Deec],
            ProtocolArg::Ddeec => &[Protocol::Ddeec],
            ProtocolArg::Edeec => &[Protocol::Edeec],
            ProtocolArg::Tdeec => &[Protocol::Tdeec],
            ProtocolArg::All => &Protocol::ALL,
        }
    }
}

/// Simulate DEEC-family clustering protocols on heterogeneous sensor networks.
#[derive(Debug, Clone, Parser)]
#[command(name = "wsnsim", version)]
pub struct Cli {
    /// Protocols to run (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub protocol: Vec<ProtocolArg>,

    /// Scenario presets (comma separated). Defaults to s1 without --config.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub scenario: Vec<ScenarioPreset>,

    /// Flat TOML file with network parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Run seeds 0..N.
    #[arg(long, conflicts_with = "seed")]
    pub seeds: Option<u64>,

    /// Run a single seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Round budget per run
    #[arg(long)]
    pub max_rounds: Option<u64>,

    /// Output directory
    #[arg(long, env = "WSNSIM_OUT", default_value = "wsnsim-out")]
    pub out: PathBuf,

    /// DDEEC scaling constant c for depleted nodes
    #[arg(long)]
    pub ddeec_c: Option<f64>,

    /// Upper bound of the extra-energy ratio for the multi-level preset.
    #[arg(long)]
    pub a_max: Option<f64>,

    /// Desired cluster-head fraction
    #[arg(long)]
    pub p_opt: Option<f64>,

    /// Number of sensor nodes
    #[arg(long)]
    pub n_nodes: Option<usize>,

    /// Print the run matrix and exit.
    #[arg(long)]
    pub dry_run: bool,

    /// Maximum number of concurrent simulations.
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Also write a JSON copy of every run summary.
    #[arg(long)]
    pub json: bool,
}

/// Contents of a `--config` file. Keys mirror the `NetworkConfig` fields,
/// with the heterogeneity and radio parameters flattened.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n_nodes: Option<usize>,
    pub field_side: Option<f64>,
    pub e_o: Option<f64>,
    pub p_opt: Option<f64>,
    pub bs_position: Option<[f64; 2]>,
    /// `two_level`, `three_level` or `multi_level`.
    pub heterogeneity: Option<String>,
    pub m: Option<f64>,
    pub m_o: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub a_max: Option<f64>,
    pub e_elec: Option<f64>,
    pub eps_fs: Option<f64>,
    pub eps_mp: Option<f64>,
    pub e_da: Option<f64>,
    pub d_o: Option<f64>,
    pub msg_bits: Option<u32>,
    pub max_rounds: Option<u64>,
    pub rng_seed: Option<u64>,
    pub ddeec_c: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigFile {
            path: path.to_owned(),
            message: e.message().to_owned(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    fn heterogeneity_model(&self) -> Result<Option<HeterogeneityModel>> {
        let need = |key: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::invalid(key, "required by the selected heterogeneity model"))
        };
        let Some(kind) = self.heterogeneity.as_deref() else {
            let stray = [
                ("m", self.m),
                ("m_o", self.m_o),
                ("a", self.a),
                ("b", self.b),
                ("a_max", self.a_max),
            ];
            if let Some((key, _)) = stray.iter().find(|(_, v)| v.is_some()) {
                return Err(Error::invalid(*key, "set `heterogeneity` to use this key"));
            }
            return Ok(None);
        };
        let model = match kind {
            "two_level" => HeterogeneityModel::TwoLevel {
                m: need("m", self.m)?,
                a: need("a", self.a)?,
            },
            "three_level" => HeterogeneityModel::ThreeLevel {
                m: need("m", self.m)?,
                m_o: need("m_o", self.m_o)?,
                a: need("a", self.a)?,
                b: need("b", self.b)?,
            },
            "multi_level" => HeterogeneityModel::MultiLevel {
                a_max: self.a_max.unwrap_or(DEFAULT_A_MAX),
            },
            other => {
                return Err(Error::invalid(
                    "heterogeneity",
                    format!("`{other}` is not one of two_level, three_level, multi_level"),
                ))
            }
        };
        Ok(Some(model))
    }

    /// Applies the file's values on top of `config`.
    pub fn apply(&self, config: &mut NetworkConfig) -> Result<()> {
        if let Some(v) = self.n_nodes {
            config.n_nodes = v;
        }
        if let Some(v) = self.field_side {
            config.field_side = v;
            config.bs_position = Position::new(v / 2.0, v / 2.0);
        }
        if let Some(v) = self.e_o {
            config.e_o = v;
        }
        if let Some(v) = self.p_opt {
            config.p_opt = v;
        }
        if let Some([x, y]) = self.bs_position {
            config.bs_position = Position::new(x, y);
        }
        if let Some(h) = self.heterogeneity_model()? {
            config.heterogeneity = h;
        }
        let r = &mut config.radio;
        for (slot, v) in [
            (&mut r.e_elec, self.e_elec),
            (&mut r.eps_fs, self.eps_fs),
            (&mut r.eps_mp, self.eps_mp),
            (&mut r.e_da, self.e_da),
            (&mut r.d_o, self.d_o),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(v) = self.msg_bits {
            r.msg_bits = v;
        }
        if let Some(v) = self.max_rounds {
            config.max_rounds = v;
        }
        if let Some(v) = self.rng_seed {
            config.rng_seed = v;
        }
        Ok(())
    }
}

/// One cell of the run matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCell {
    pub scenario: String,
    pub kind: ProtocolKind,
    /// Network configuration with `rng_seed` set to this cell's seed.
    pub config: NetworkConfig,
}

impl RunCell {
    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_seed{}",
            self.scenario, self.kind.protocol, self.config.rng_seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMatrix {
    pub scenarios: Vec<(String, NetworkConfig)>,
    pub protocols: Vec<ProtocolKind>,
    pub seeds: Vec<u64>,
}

impl RunMatrix {
    /// Cells in scenario, protocol, seed order.
    pub fn cells(&self) -> Vec<RunCell> {
        let mut cells = Vec::new();
        for (name, config) in &self.scenarios {
            for kind in &self.protocols {
                for &seed in &self.seeds {
                    cells.push(RunCell {
                        scenario: name.clone(),
                        kind: *kind,
                        config: NetworkConfig {
                            rng_seed: seed,
                            ..config.clone()
                        },
                    });
                }
            }
        }
        cells
    }
}

/// Resolves defaults, the optional config file and flags (in increasing
/// precedence) into a validated run matrix.
pub fn parse_config(cli: &Cli) -> Result<RunMatrix> {
    let mut base = NetworkConfig::default();
    let mut ddeec_c = DEFAULT_DDEEC_C;
    let mut label = None;
    if let Some(path) = &cli.config {
        let file = FileConfig::load(path)?;
        file.apply(&mut base)?;
        if let Some(c) = file.ddeec_c {
            ddeec_c = c;
        }
        label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }

    if let Some(v) = cli.n_nodes {
        base.n_nodes = v;
    }
    if let Some(v) = cli.p_opt {
        base.p_opt = v;
    }
    if let Some(v) = cli.max_rounds {
        base.max_rounds = v;
    }
    if let Some(v) = cli.ddeec_c {
        ddeec_c = v;
    }
    let a_max = match (cli.a_max, base.heterogeneity) {
        (Some(v), _) => v,
        (None, HeterogeneityModel::MultiLevel { a_max }) => a_max,
        _ => DEFAULT_A_MAX,
    };
    if let (Some(v), HeterogeneityModel::MultiLevel { .. }) = (cli.a_max, base.heterogeneity) {
        base.heterogeneity = HeterogeneityModel::MultiLevel { a_max: v };
    }

    let scenarios: Vec<(String, NetworkConfig)> = if !cli.scenario.is_empty() {
        let mut seen = Vec::new();
        cli.scenario
            .iter()
            .filter(|p| {
                let fresh = !seen.contains(*p);
                seen.push(**p);
                fresh
            })
            .map(|p| {
                let config = NetworkConfig {
                    heterogeneity: p.heterogeneity(a_max),
                    ..base.clone()
                };
                (p.name().to_owned(), config)
            })
            .collect()
    } else if let Some(label) = label {
        vec![(label, base.clone())]
    } else {
        let config = NetworkConfig {
            heterogeneity: ScenarioPreset::S1.heterogeneity(a_max),
            ..base.clone()
        };
        vec![(ScenarioPreset::S1.name().to_owned(), config)]
    };
    for (_, config) in &scenarios {
        config.validate()?;
    }

    let mut protocols: Vec<ProtocolKind> = Vec::new();
    for p in cli.protocol.iter().flat_map(|a| a.expand()) {
        if !protocols.iter().any(|k| k.protocol == *p) {
            protocols.push(ProtocolKind::new(*p).with_ddeec_c(ddeec_c));
        }
    }
    for kind in &protocols {
        kind.validate()?;
    }

    let seeds = match (cli.seeds, cli.seed) {
        (Some(0), _) => return Err(Error::invalid("seeds", "must be >= 1")),
        (Some(n), _) => (0..n).collect(),
        (None, Some(k)) => vec![k],
        (None, None) => vec![base.rng_seed],
    };

    Ok(RunMatrix {
        scenarios,
        protocols,
        seeds,
    })
}

/// Runs every cell of `matrix` on up to `jobs` threads, writing one
/// per-round CSV per cell and `summary.csv` into `out`.
pub fn run_matrix(
    matrix: &RunMatrix,
    out: &Path,
    jobs: Option<usize>,
    json: bool,
) -> Result<ComparisonTable> {
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_owned(),
        source,
    })?;
    let cells = matrix.cells();
    let run_cell = |cell: &RunCell| -> Result<RunSummary> {
        let mut run = run_simulation(&cell.config, cell.kind)?;
        run.scenario = cell.scenario.clone();
        let stem = cell.file_stem();
        reporting::write_rounds_csv(&run.per_round, &out.join(format!("{stem}.csv")))?;
        if json {
            reporting::write_run_json(&run, &out.join(format!("{stem}.json")))?;
        }
        // the per-round series is on disk; keep memory flat for large sweeps
        run.per_round = Vec::new();
        Ok(run)
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    let runs: Vec<RunSummary> =
        pool.install(|| cells.par_iter().map(run_cell).collect::<Result<_>>())?;

    let table = reporting::summarize(&runs);
    reporting::write_summary_csv(&table, &out.join("summary.csv"))?;
    Ok(table)
}

pub fn describe_matrix(matrix: &RunMatrix) -> String {
    let mut s = format!(
        "{} scenario(s) x {} protocol(s) x {} seed(s) = {} run(s)\n",
        matrix.scenarios.len(),
        matrix.protocols.len(),
        matrix.seeds.len(),
        matrix.scenarios.len() * matrix.protocols.len() * matrix.seeds.len()
    );
    for cell in matrix.cells() {
        s.push_str(&format!(
            "  {:<8} {:<6} seed={:<6} n={} max_rounds={} {:?}\n",
            cell.scenario,
            cell.kind.protocol,
            cell.config.rng_seed,
            cell.config.n_nodes,
            cell.config.max_rounds,
            cell.config.heterogeneity
        ));
    }
    s
}

/// Entry point behind the binary. Returns the text to print on success.
pub fn execute(cli: &Cli) -> Result<String> {
    let matrix = parse_config(cli)?;
    if cli.dry_run {
        return Ok(describe_matrix(&matrix));
    }
    let table = run_matrix(&matrix, &cli.out, cli.jobs, cli.json)?;
    Ok(format!("{table}\nwrote results to {}\n", cli.out.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        let mut full = vec!["wsnsim"];
        full.extend_from_slice(args);
        Cli::try_parse_from(full).unwrap()
    }

    #[test]
    fn defaults_are_reference_parameters() {
        let m = parse_config(&cli(&[])).unwrap();
        let (name, config) = &m.scenarios[0];
        assert_eq!(name, "s1");
        assert_eq!(config.n_nodes, 100);
        assert_eq!(config.field_side, 100.0);
        assert_eq!(config.e_o, 0.5);
        assert_eq!(config.p_opt, 0.1);
        assert_eq!(config.radio.msg_bits, 4000);
        assert_eq!(config.radio.d_o, 70.0);
        assert_eq!(config.radio.e_elec, 50e-9);
        assert_eq!(config.radio.e_da, 5e-9);
        assert_eq!(config.radio.eps_fs, 10e-12);
        assert_eq!(config.radio.eps_mp, 0.0013e-12);
        assert_eq!(config.max_rounds, 10_000);
        assert_eq!(config.bs_position, Position::new(50.0, 50.0));
        assert_eq!(m.protocols.len(), 4);
        assert_eq!(m.seeds, vec![0]);
    }

    #[test]
    fn empty_config_file_gives_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.toml");
        fs::write(&path, "").unwrap();
        let m = parse_config(&cli(&["--config", path.to_str().unwrap()])).unwrap();
        assert_eq!(
            m.scenarios,
            vec![("empty".to_owned(), NetworkConfig::default())]
        );
    }

    #[test]
    fn scenario_presets() {
        let m = parse_config(&cli(&["--scenario", "s1"])).unwrap();
        assert_eq!(
            m.scenarios[0].1.heterogeneity,
            HeterogeneityModel::ThreeLevel {
                m: 0.5,
                m_o: 0.4,
                a: 1.5,
                b: 3.0
            }
        );
        assert_eq!(
            ScenarioPreset::S2.heterogeneity(2.0),
            HeterogeneityModel::ThreeLevel {
                m: 0.4,
                m_o: 0.3,
                a: 1.3,
                b: 2.5
            }
        );
        assert_eq!(
            ScenarioPreset::S3.heterogeneity(2.0),
            HeterogeneityModel::ThreeLevel {
                m: 0.3,
                m_o: 0.2,
                a: 1.2,
                b: 2.0
            }
        );
        assert_eq!(
            ScenarioPreset::S4.heterogeneity(2.0),
            HeterogeneityModel::ThreeLevel {
                m: 0.6,
                m_o: 0.5,
                a: 1.6,
                b: 3.2
            }
        );
        assert_eq!(
            ScenarioPreset::S5.heterogeneity(2.0),
            HeterogeneityModel::ThreeLevel {
                m: 0.7,
                m_o: 0.6,
                a: 1.7,
                b: 3.4
            }
        );
        let m = parse_config(&cli(&["--scenario", "multi", "--a-max", "3"])).unwrap();
        assert_eq!(
            m.scenarios[0].1.heterogeneity,
            HeterogeneityModel::MultiLevel { a_max: 3.0 }
        );
        for p in ScenarioPreset::ALL {
            let config = NetworkConfig {
                heterogeneity: p.heterogeneity(2.0),
                ..NetworkConfig::default()
            };
            assert!(config.validate().is_ok(), "{p:?}");
        }
    }

    #[test]
    fn out_of_range_p_opt_is_rejected() {
        let err = parse_config(&cli(&["--p-opt", "1.5"])).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("p_opt"));
    }

    #[test]
    fn unknown_file_key_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(&path, "n_nodes = 10\nbogus_key = 3\n").unwrap();
        let err = parse_config(&cli(&["--config", path.to_str().unwrap()])).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn out_of_range_file_value_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(
            &path,
            "heterogeneity = \"three_level\"\nm = 1.4\nm_o = 0.2\na = 1.0\nb = 2.0\n",
        )
        .unwrap();
        let err = parse_config(&cli(&["--config", path.to_str().unwrap()])).unwrap_err();
        assert!(
            matches!(&err, Error::InvalidConfig { key, .. } if key == "m"),
            "{err}"
        );
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.toml");
        fs::write(
            &path,
            "n_nodes = 50\np_opt = 0.2\nfield_side = 200.0\nheterogeneity = \"two_level\"\nm = 0.2\na = 1.0\nrng_seed = 9\nddeec_c = 0.05\n",
        )
        .unwrap();
        let m = parse_config(&cli(&[
            "--config",
            path.to_str().unwrap(),
            "--p-opt",
            "0.05",
        ]))
        .unwrap();
        let (name, config) = &m.scenarios[0];
        assert_eq!(name, "net");
        assert_eq!(config.n_nodes, 50);
        assert_eq!(config.p_opt, 0.05);
        assert_eq!(config.bs_position, Position::new(100.0, 100.0));
        assert_eq!(
            config.heterogeneity,
            HeterogeneityModel::TwoLevel { m: 0.2, a: 1.0 }
        );
        assert_eq!(m.seeds, vec![9]);
        assert!(m.protocols.iter().all(|k| k.ddeec_c == 0.05));
    }

    #[test]
    fn matrix_shape() {
        let m = parse_config(&cli(&[
            "--protocol",
            "all",
            "--scenario",
            "s1",
            "--seeds",
            "30",
        ]))
        .unwrap();
        assert_eq!(m.cells().len(), 120);
        let m = parse_config(&cli(&[
            "--protocol",
            "tdeec,deec",
            "--scenario",
            "s2,multi",
            "--seed",
            "7",
        ]))
        .unwrap();
        let cells = m.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].file_stem(), "s2_tdeec_seed7");
        assert!(Cli::try_parse_from(["wsnsim", "--seeds", "3", "--seed", "1"]).is_err());
        assert!(Cli::try_parse_from(["wsnsim", "--protocol", "leach"]).is_err());
    }

    #[test]
    fn dry_run_lists_cells_without_writing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let c = cli(&["--dry-run", "--seeds", "2", "--out", out.to_str().unwrap()]);
        let text = execute(&c).unwrap();
        assert!(text.starts_with("1 scenario(s) x 4 protocol(s) x 2 seed(s) = 8 run(s)"));
        assert!(!out.exists());
    }
}
