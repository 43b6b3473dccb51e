//! Experiment configuration files.
//!
//! ```toml
//! [cone]
//! kind = "orthant"
//! n = 2
//! mask = [1, 2]          # 1-based axes that must stay positive
//!
//! [weight]
//! kind = "monomial"
//! A = [1.0, 1.0]
//!
//! [domain]
//! kind = "ball"
//! rho = 1.0
//!
//! [grid]
//! N = 256
//! ```
//!
//! Every other section is optional. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use coniso_core::abp::{ChainOptions, MappedDomain, SolverOptions};
use coniso_core::cone::{cap_quadrature, CapGrid, ConvexCone};
use coniso_core::domain::StarDomain;
use coniso_core::optimize::{Method, ModeBasis, OptimOptions, ScanOptions};
use coniso_core::weight::HomogeneousWeight;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cone: ConeSpec,
    pub weight: WeightSpec,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub optimize: OptimizeSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConeSpec {
    Sector { beta: f64 },
    Orthant { n: usize, mask: Vec<usize> },
    Halfspace { n: usize, axis: usize },
    Full { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant,
    Monomial {
        #[serde(rename = "A")]
        exponents: Vec<f64>,
    },
    Radial { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball {
        #[serde(default = "one")]
        rho: f64,
    },
    /// `R = rho (1 + Σ c_k cos(kπ(θ - θ_lo)/β))`.
    Modes {
        coeffs: Vec<f64>,
        #[serde(default = "one")]
        rho: f64,
    },
    /// One radius per line, in grid node order.
    ProfileFile { path: PathBuf },
    /// Planar disk compactly inside the cone (ABP only).
    Disk { center: [f64; 2], radius: f64 },
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::Ball { rho: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Cap quadrature points per angular axis.
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    /// Radial cells of the ABP solver.
    #[serde(default = "default_radial")]
    pub radial: usize,
    /// Angular cells of the ABP solver; defaults to `2·radial` on periodic
    /// grids and `radial` on sectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular: Option<usize>,
}

fn default_n() -> usize {
    256
}

fn default_radial() -> usize {
    128
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: default_n(),
            radial: default_radial(),
            angular: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodSpec {
    NelderMead,
    FdGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSpec {
    pub modes: usize,
    pub max_iter: usize,
    pub starts: usize,
    pub seed: u64,
    pub method: MethodSpec,
    pub init_amplitude: f64,
}

impl Default for OptimizeSpec {
    fn default() -> Self {
        let d = OptimOptions::<f64>::default();
        Self {
            modes: d.modes,
            max_iter: d.max_iter,
            starts: d.starts,
            seed: d.seed,
            method: MethodSpec::NelderMead,
            init_amplitude: d.init_amplitude,
        }
    }
}

impl OptimizeSpec {
    pub fn options(&self) -> OptimOptions<f64> {
        OptimOptions {
            modes: self.modes,
            max_iter: self.max_iter,
            starts: self.starts,
            seed: self.seed,
            method: match self.method {
                MethodSpec::NelderMead => Method::NelderMead,
                MethodSpec::FdGradient => Method::FdGradient,
            },
            init_amplitude: self.init_amplitude,
            ..OptimOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    /// A deficit below `-deficit` counts as an inequality violation.
    pub deficit: f64,
    /// Optimizer margin separating ball-optimal from ball-beaten angles.
    pub margin: f64,
    pub refine_width: f64,
    pub max_bracket: f64,
    pub concavity_samples: usize,
    pub cover_eta: f64,
    pub cover_samples: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        let scan = ScanOptions::<f64>::default();
        let chain = ChainOptions::<f64>::default();
        Self {
            deficit: 1e-6,
            margin: scan.margin,
            refine_width: scan.refine_width,
            max_bracket: scan.max_bracket,
            concavity_samples: 100_000,
            cover_eta: chain.eta,
            cover_samples: chain.samples,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// JSON report; stdout always receives a copy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    /// CSV rows are appended here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Optimized profile, one radius per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    /// Nodal ABP field `x,y,u,ux,uy`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::from_toml(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        // Relative profile paths are resolved against the config file.
        if let DomainSpec::ProfileFile { path: p } = &mut cfg.domain {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn cone(&self) -> Result<ConvexCone<f64>> {
        self.cone.build()
    }

    pub fn weight(&self) -> Result<HomogeneousWeight<f64>> {
        let dim = self.cone.dim();
        let w = match &self.weight {
            WeightSpec::Constant => HomogeneousWeight::constant(dim),
            WeightSpec::Monomial { exponents } => {
                if exponents.len() != dim {
                    bail!("weight has {} exponents but the cone has dimension {dim}", exponents.len());
                }
                HomogeneousWeight::monomial(exponents.clone())?
            }
            WeightSpec::Radial { alpha } => HomogeneousWeight::radial_power(dim, *alpha)?,
        };
        Ok(w)
    }

    pub fn grid(&self, cone: &ConvexCone<f64>) -> Result<CapGrid<f64>> {
        Ok(cap_quadrature(cone, self.grid.n)?)
    }

    /// The configured domain as a radial graph over the cap grid.
    pub fn star_domain(&self, cone: &ConvexCone<f64>, grid: &CapGrid<f64>) -> Result<StarDomain<f64>> {
        match &self.domain {
            DomainSpec::Ball { rho } => Ok(StarDomain::ball(cone, grid, *rho)?),
            DomainSpec::Modes { coeffs, rho } => {
                let w = self.weight()?;
                let basis = ModeBasis::new(cone, grid, &w, coeffs.len())?;
                let (radii, _) = basis.profile(coeffs);
                let radii = radii.iter().map(|r| r * rho).collect();
                Ok(StarDomain::from_profile(cone, grid, radii)?)
            }
            DomainSpec::ProfileFile { path } => {
                let radii = read_profile(path)?;
                Ok(StarDomain::from_profile(cone, grid, radii)?)
            }
            DomainSpec::Disk { .. } => {
                bail!("a disk is not a radial graph about the vertex; use it with verify-abp")
            }
        }
    }

    pub fn mapped_domain(&self, cone: &ConvexCone<f64>) -> Result<MappedDomain<f64>> {
        match &self.domain {
            DomainSpec::Disk { center, radius } => Ok(MappedDomain::disk(cone, *center, *radius)?),
            _ => {
                let grid = self.grid(cone)?;
                Ok(MappedDomain::star(&self.star_domain(cone, &grid)?)?)
            }
        }
    }

    pub fn solver_options(&self) -> SolverOptions<f64> {
        SolverOptions {
            angular: self.grid.angular,
            ..SolverOptions::with_radial(self.grid.radial)
        }
    }

    pub fn chain_options(&self) -> ChainOptions<f64> {
        ChainOptions {
            eta: self.tolerances.cover_eta,
            samples: self.tolerances.cover_samples,
            ..ChainOptions::default()
        }
    }

    pub fn scan_options(&self) -> ScanOptions<f64> {
        ScanOptions {
            optim: self.optimize.options(),
            resolution: self.grid.n,
            margin: self.tolerances.margin,
            refine_width: self.tolerances.refine_width,
            max_bracket: self.tolerances.max_bracket,
            ..ScanOptions::default()
        }
    }
}

impl ConeSpec {
    pub fn dim(&self) -> usize {
        match self {
            ConeSpec::Sector { .. } => 2,
            ConeSpec::Orthant { n, .. } | ConeSpec::Halfspace { n, .. } | ConeSpec::Full { n } => *n,
        }
    }

    pub fn build(&self) -> Result<ConvexCone<f64>> {
        let zero_based = |axis: usize, n: usize| -> Result<usize> {
            if axis == 0 || axis > n {
                bail!("axis {axis} is outside 1..={n}");
            }
            Ok(axis - 1)
        };
        let cone = match self {
            ConeSpec::Sector { beta } => ConvexCone::sector(*beta)?,
            ConeSpec::Orthant { n, mask } => {
                let mask = mask.iter().map(|&a| zero_based(a, *n)).collect::<Result<Vec<_>>>()?;
                ConvexCone::orthant(*n, &mask)?
            }
            ConeSpec::Halfspace { n, axis } => ConvexCone::halfspace(*n, zero_based(*axis, *n)?)?,
            ConeSpec::Full { n } => ConvexCone::full(*n)?,
        };
        Ok(cone)
    }
}

pub fn read_profile(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read profile {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .with_context(|| format!("{}:{}: not a number", path.display(), i + 1))
        })
        .collect()
}

/// Full-precision radii, one per line, readable by [`read_profile`].
pub fn write_profile(path: &Path, radii: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(radii.len() * 24);
    for r in radii {
        out.push_str(&format!("{r:e}\n"));
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[cone]
kind = "orthant"
n = 2
mask = [1, 2]

[weight]
kind = "monomial"
A = [1.0, 1.0]

[domain]
kind = "modes"
coeffs = [0.0, 0.1, -0.05]

[grid]
N = 128
radial = 64

[optimize]
modes = 6
max_iter = 5000
starts = 4
seed = 9
method = "fd-gradient"
init_amplitude = 0.2

[tolerances]
margin = 2e-4

[output]
json = "out.json"
csv = "rows.csv"
"#;

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::from_toml(FULL).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.grid.n, 128);
        assert_eq!(cfg.optimize.method, MethodSpec::FdGradient);
        assert_eq!(cfg.tolerances.deficit, 1e-6);
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = ExperimentConfig::from_toml(
            "[cone]\nkind = \"sector\"\nbeta = 2.0\n[weight]\nkind = \"constant\"\n",
        )
        .unwrap();
        assert_eq!(cfg.domain, DomainSpec::Ball { rho: 1.0 });
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.optimize.starts, 20);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_are_named() {
        for (text, key) in [
            ("[cone]\nkind = \"sector\"\nbeta = 1.0\nwidth = 2\n[weight]\nkind = \"constant\"\n", "width"),
            ("[cone]\nkind = \"sector\"\nbeta = 1.0\n[weight]\nkind = \"constant\"\n[grid]\nM = 3\n", "M"),
            ("[cone]\nkind = \"sector\"\nbeta = 1.0\n[weight]\nkind = \"constant\"\n[extra]\n", "extra"),
        ] {
            let err = format!("{:#}", ExperimentConfig::from_toml(text).unwrap_err());
            assert!(err.contains(key), "{err}");
        }
    }

    #[test]
    fn masks_are_one_based() {
        let cone = ConeSpec::Orthant { n: 3, mask: vec![1, 3] }.build().unwrap();
        assert!(cone.contains(&[1.0, -1.0, 1.0]));
        assert!(!cone.contains(&[1.0, 1.0, -1.0]));
        assert!(ConeSpec::Orthant { n: 2, mask: vec![0] }.build().is_err());
        assert!(ConeSpec::Halfspace { n: 2, axis: 3 }.build().is_err());
    }

    #[test]
    fn modes_domain_matches_perturb() {
        let cfg = ExperimentConfig::from_toml(FULL).unwrap();
        let cone = cfg.cone().unwrap();
        let grid = cfg.grid(&cone).unwrap();
        let dom = cfg.star_domain(&cone, &grid).unwrap();
        let ball = StarDomain::ball(&cone, &grid, 1.0).unwrap();
        let by_hand = ball.perturb(2, 0.1).unwrap();
        let th = std::f64::consts::FRAC_PI_4 / 3.0;
        let expected = by_hand.radius_at(th) - 0.05 * (3.0 * std::f64::consts::PI * th / std::f64::consts::FRAC_PI_2).cos();
        assert!((dom.radius_at(th) - expected).abs() < 1e-9);
    }

    #[test]
    fn profile_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.txt");
        let radii = vec![1.0, 0.1 + 0.2, 1.0 / 3.0];
        write_profile(&path, &radii).unwrap();
        assert_eq!(read_profile(&path).unwrap(), radii);
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = ExperimentConfig::from_toml(
            "[cone]\nkind = \"sector\"\nbeta = 1.0\n[weight]\nkind = \"monomial\"\nA = [1.0, 1.0, 1.0]\n",
        )
        .unwrap();
        assert!(cfg.weight().is_err());
    }

    #[test]
    fn partial_optimize_section() {
        let cfg = ExperimentConfig::from_toml(
            "[cone]\nkind = \"sector\"\nbeta = 1.0\n[weight]\nkind = \"constant\"\n[optimize]\nstarts = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.optimize.starts, 3);
        assert_eq!(cfg.optimize.max_iter, OptimizeSpec::default().max_iter);
    }
}
