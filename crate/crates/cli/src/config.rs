//! Experiment configuration: one TOML file per run, every field optional
//! except where a subcommand needs it. Unknown fields are rejected so typos
//! surface as errors naming the field.

use std::path::{Path, PathBuf};

use loopmetric::convex::GraphFamily;
use loopmetric::graph::{self, GraphSpec, WeightedGraph};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphRef {
    /// A_n at `q = exp(i pi/(n+1))` unless `q` is given.
    DynkinA { n: usize, q: Option<String> },
    /// First `cutoff` vertices of A_infinity with real `q >= 1`.
    AInfinity {
        cutoff: usize,
        #[serde(default = "one")]
        q: f64,
    },
    AffineD { n: usize },
    DInfinity { cutoff: usize },
    /// One vertex with `loops` loops.
    Bouquet { loops: usize },
    /// Graph description in TOML or JSON, relative to the config file.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl GraphRef {
    pub fn build(&self, base: &Path) -> CliResult<WeightedGraph> {
        let g = match self {
            GraphRef::DynkinA { n, q: None } => graph::dynkin_a(*n),
            GraphRef::DynkinA { n, q: Some(q) } => graph::parse_q(q).and_then(|q| graph::dynkin_a_with_q(*n, q)),
            GraphRef::AInfinity { cutoff, q } => graph::dynkin_a_infinity(*cutoff, *q),
            GraphRef::AffineD { n } => graph::affine_d(*n),
            GraphRef::DInfinity { cutoff } => graph::d_infinity(*cutoff),
            GraphRef::Bouquet { loops } => graph::bouquet(*loops),
            GraphRef::File { path } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::Config(format!("graph.path: cannot read {}: {e}", full.display())))?;
                let spec = if full.extension().is_some_and(|x| x == "json") {
                    GraphSpec::from_json(&text)
                } else {
                    GraphSpec::from_toml(&text)
                };
                spec.and_then(|s| WeightedGraph::from_spec(&s))
            }
        };
        g.map_err(|e| CliError::Config(format!("graph: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// A_m -> A_infinity at q = 1.
    DynkinA,
    /// Fixed A_infinity truncation with q_m = 1 + 2^-m.
    QDeformation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyRef {
    pub kind: FamilyKind,
    pub members: Vec<usize>,
    /// Truncation of the A_infinity limit.
    #[serde(default = "default_family_cutoff")]
    pub cutoff: usize,
}

fn default_family_cutoff() -> usize {
    12
}

impl FamilyRef {
    pub fn build(&self) -> CliResult<GraphFamily> {
        let f = match self.kind {
            FamilyKind::DynkinA => GraphFamily::dynkin_a(&self.members, self.cutoff),
            FamilyKind::QDeformation => GraphFamily::q_deformation(&self.members, self.cutoff),
        };
        f.map_err(|e| CliError::Config(format!("family: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cutoffs {
    /// Compression cutoff `K`.
    pub k: usize,
    /// Depth of the loop-space truncation.
    pub depth: usize,
    /// Largest cutoff of a sweep over `K`.
    pub k_max: usize,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self { k: 4, depth: 10, k_max: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Slack for structural identities and norm inequalities.
    pub structural: f64,
    /// Relative increment below which a sweep counts as converged.
    pub relative: f64,
    /// Target accuracy of projections onto convex bodies.
    pub hausdorff: f64,
    /// Entrywise agreement of the two Wick realizations.
    pub wick: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { structural: 1e-9, relative: 1e-3, hausdorff: 1e-4, wick: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    /// Random elements per degree.
    pub elements: usize,
    /// Boundary points per convex body.
    pub cloud: usize,
    /// Boundary points per Minkowski-oracle instance.
    pub oracle: usize,
    /// Random loops combined per degree in unit-ball samples.
    pub loops_per_degree: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self { elements: 10, cloud: 8, oracle: 200, loops_per_degree: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Elements {
    /// Degrees of random homogeneous elements.
    pub degrees: Vec<usize>,
    /// Explicit loops (directed edge ids); each gives the element `Y_w + Y_w^*`.
    pub words: Vec<Vec<usize>>,
}

impl Default for Elements {
    fn default() -> Self {
        Self { degrees: vec![1, 2], words: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TljConfig {
    pub max_points: usize,
    pub deltas: Vec<f64>,
}

impl Default for TljConfig {
    fn default() -> Self {
        Self { max_points: 6, deltas: vec![2.0, 2.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaConfig {
    pub t: Vec<f64>,
    pub n_max: usize,
    pub delta: f64,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        Self { t: vec![0.1, 0.5, 1.0], n_max: 12, delta: 2.0 }
    }
}

/// Resolved configuration. Serializing it yields every effective default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_cache")]
    pub cache: PathBuf,
    pub graph: Option<GraphRef>,
    pub family: Option<FamilyRef>,
    #[serde(default)]
    pub cutoffs: Cutoffs,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub elements: Elements,
    #[serde(default)]
    pub tlj: TljConfig,
    #[serde(default)]
    pub theta: ThetaConfig,
    /// Directory that relative paths inside the config refer to.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_cache() -> PathBuf {
    PathBuf::from(".loopmetric-cache")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Range and sign checks that do not depend on the subcommand.
    pub fn validate(&self) -> CliResult<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(CliError::Config(format!("{name}: must be positive")))
            } else {
                Ok(())
            }
        };
        let positive_f = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name}: must be a positive number, got {v}")))
            }
        };
        positive("cutoffs.k", self.cutoffs.k)?;
        positive("cutoffs.depth", self.cutoffs.depth)?;
        positive("cutoffs.k_max", self.cutoffs.k_max)?;
        positive_f("tolerances.structural", self.tolerances.structural)?;
        positive_f("tolerances.relative", self.tolerances.relative)?;
        positive_f("tolerances.hausdorff", self.tolerances.hausdorff)?;
        positive_f("tolerances.wick", self.tolerances.wick)?;
        positive("samples.elements", self.samples.elements)?;
        positive("samples.cloud", self.samples.cloud)?;
        positive("samples.oracle", self.samples.oracle)?;
        positive("samples.loops_per_degree", self.samples.loops_per_degree)?;
        if self.elements.degrees.contains(&0) {
            return Err(CliError::Config("elements.degrees: degrees must be positive".into()));
        }
        for &d in &self.tlj.deltas {
            positive_f("tlj.deltas", d)?;
        }
        for &t in &self.theta.t {
            positive_f("theta.t", t)?;
        }
        positive_f("theta.delta", self.theta.delta)?;
        if let Some(f) = &self.family {
            if f.members.is_empty() {
                return Err(CliError::Config("family.members: at least one member is required".into()));
            }
            if f.members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Config("family.members: must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> CliResult<WeightedGraph> {
        self.graph
            .as_ref()
            .ok_or_else(|| CliError::Config("graph: this subcommand needs a [graph] section".into()))?
            .build(&self.base_dir)
    }

    pub fn family(&self) -> CliResult<GraphFamily> {
        self.family
            .as_ref()
            .ok_or_else(|| CliError::Config("family: this subcommand needs a [family] section".into()))?
            .build()
    }

    /// Depth must cover the cutoff plus the element degree plus one, so
    /// products of compressed operators agree with the true operators.
    pub fn require_exact(&self, cutoff_name: &str, cutoff: usize, degree: usize) -> CliResult<()> {
        let needed = cutoff + degree + 1;
        if self.cutoffs.depth < needed {
            return Err(CliError::Config(format!(
                "cutoffs.depth: must be at least {cutoff_name} + degree + 1 = {cutoff} + {degree} + 1 = {needed}, got {}",
                self.cutoffs.depth
            )));
        }
        Ok(())
    }

    /// Canonical TOML rendering of the resolved configuration.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_has_defaults() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg.cutoffs, Cutoffs::default());
        assert_eq!(cfg.seed, 0);
        assert!(cfg.graph.is_none());
    }

    #[test]
    fn unknown_field_is_named() {
        let err = ExperimentConfig::parse("[cutoffs]\ndepht = 3\n").unwrap_err();
        assert!(err.to_string().contains("depht"), "{err}");
        let err = ExperimentConfig::parse("[graph]\nkind = \"bouquet\"\nloops = 2\nextra = 1\n").unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn zero_cutoff_is_rejected() {
        let err = ExperimentConfig::parse("[cutoffs]\nk = 0\n").unwrap_err();
        assert!(err.to_string().contains("cutoffs.k"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn graph_kinds_build() {
        let cfg = ExperimentConfig::parse("[graph]\nkind = \"a_infinity\"\ncutoff = 6\n").unwrap();
        assert_eq!(cfg.graph().unwrap().num_vertices(), 6);
        let cfg = ExperimentConfig::parse("[graph]\nkind = \"dynkin_a\"\nn = 2\nq = \"exp(i*pi/3)\"\n").unwrap();
        assert_eq!(cfg.graph().unwrap().num_vertices(), 2);
    }

    #[test]
    fn exactness_contract() {
        let cfg = ExperimentConfig::parse("[cutoffs]\ndepth = 6\n").unwrap();
        assert!(cfg.require_exact("K", 3, 2).is_ok());
        let err = cfg.require_exact("K", 4, 2).unwrap_err();
        assert!(err.to_string().contains("cutoffs.depth"));
    }

    #[test]
    fn resolved_config_roundtrips() {
        let cfg = ExperimentConfig::parse("seed = 3\n[graph]\nkind = \"bouquet\"\nloops = 2\n").unwrap();
        let again = ExperimentConfig::parse(&cfg.resolved_toml()).unwrap();
        assert_eq!(cfg, again);
    }
}
