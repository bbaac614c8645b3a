//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    tune_amplitude, BlowupThresholds, Equation, GaussianProfile, InitialData, SimConfig,
    TunedAmplitude, DEFAULT_MARGIN_FRACTION,
};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid};
use crate::operators::Nonlinearity;
use crate::oracle::random_smooth_field;
use crate::potentials::HypothesisParams;
use crate::potentials::{
    build_m, AntisymMatrix, ElectricPotential, MagneticPotential, PotentialSpec, Taper,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default = "default_equation")]
    pub equation: Equation,
    pub dim: usize,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub monitor: MonitorSection,
    #[serde(default)]
    pub hypotheses: HypothesesSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: u64,
    /// Parameter grid for `scan`; ignored by the other commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

fn default_equation() -> Equation {
    Equation::Schrodinger
}
fn default_exponent() -> f64 {
    3.0
}
fn default_coupling() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub extent: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub cadence: usize,
    #[serde(default = "default_true")]
    pub dealias: bool,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, cadence: 10, dealias: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MagneticSection {
    Zero,
    /// `A = ½ M x` with the standard block matrix scaled by `strength`.
    Linear {
        #[serde(default = "default_coupling")]
        strength: f64,
    },
    /// `A = ½ M x` with an explicit antisymmetric matrix.
    LinearMatrix { rows: Vec<Vec<f64>> },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    SingularSpherical,
    SingularCylindrical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElectricSection {
    Zero,
    InverseQuadratic { strength: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum TaperSection {
    /// `"auto"` for radii `0.8 R`, `0.95 R`; `"none"` to disable.
    Keyword(String),
    Radii { inner: f64, outer: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub magnetic: MagneticSection,
    pub electric: ElectricSection,
    #[serde(default = "default_taper")]
    pub taper: TaperSection,
    /// Singular-family smoothing length; default `2h`.
    #[serde(default)]
    pub regularization: Option<f64>,
}

fn default_taper() -> TaperSection {
    TaperSection::Keyword("auto".into())
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { magnetic: MagneticSection::Zero, electric: ElectricSection::Zero, taper: default_taper(), regularization: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSection {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_margin")]
    pub margin_fraction: f64,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN_FRACTION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Zero,
    Gaussian {
        #[serde(default = "default_coupling")]
        amplitude: f64,
        #[serde(default = "default_coupling")]
        width: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        velocity: Option<Vec<f64>>,
        #[serde(default)]
        chirp: f64,
        #[serde(default = "default_velocity_ratio")]
        wave_velocity_ratio: f64,
        /// Replaces `amplitude` by the smallest one with energy below `−margin`.
        #[serde(default)]
        tune: Option<TuneSection>,
    },
    /// Seeded smooth random field scaled to the given sup norm.
    Random {
        #[serde(default = "default_coupling")]
        amplitude: f64,
    },
}

fn default_velocity_ratio() -> f64 {
    0.2
}

impl Default for InitialSection {
    fn default() -> Self {
        Self::Zero
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    #[serde(default = "default_sup_factor")]
    pub sup_factor: f64,
    #[serde(default = "default_h1a_factor")]
    pub h1a_factor: f64,
    #[serde(default = "default_boundary_warn")]
    pub boundary_warn: f64,
}

fn default_sup_factor() -> f64 {
    BlowupThresholds::default().sup_factor
}
fn default_h1a_factor() -> f64 {
    BlowupThresholds::default().h1a_factor
}
fn default_boundary_warn() -> f64 {
    1e-6
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self { sup_factor: default_sup_factor(), h1a_factor: default_h1a_factor(), boundary_warn: default_boundary_warn() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesesSection {
    #[serde(default = "default_coupling")]
    pub strichartz_m: f64,
    #[serde(default)]
    pub kato_radius: Option<f64>,
}

impl Default for HypothesesSection {
    fn default() -> Self {
        Self { strichartz_m: 1.0, kato_radius: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

/// Each present list is one axis of a Cartesian product.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default)]
    pub amplitude: Option<Vec<f64>>,
    #[serde(default)]
    pub exponent: Option<Vec<f64>>,
    #[serde(default)]
    pub electric_strength: Option<Vec<f64>>,
    #[serde(default)]
    pub magnetic_strength: Option<Vec<f64>>,
}

/// A configuration after amplitude tuning and sampling, ready to run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub sim: SimConfig,
    pub tuned: Option<TunedAmplitude>,
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn make_grid(&self) -> Result<Grid> {
        make_grid(self.dim, self.grid.extent, self.grid.points)
    }

    pub fn hypothesis_params(&self) -> HypothesisParams {
        HypothesisParams { strichartz_m: self.hypotheses.strichartz_m, kato_radius: self.hypotheses.kato_radius }
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let n = self.dim;
        let p = &self.potential;
        let magnetic = match &p.magnetic {
            MagneticSection::Zero => MagneticPotential::Zero,
            MagneticSection::Linear { strength } => MagneticPotential::LinearM(build_m(n)?.scaled(*strength)),
            MagneticSection::LinearMatrix { rows } => MagneticPotential::LinearM(AntisymMatrix::from_rows(rows)?),
            MagneticSection::Affine { matrix, offset } => {
                MagneticPotential::Affine { matrix: matrix.clone(), offset: offset.clone() }
            }
            MagneticSection::SingularSpherical => MagneticPotential::SingularSpherical,
            MagneticSection::SingularCylindrical => MagneticPotential::SingularCylindrical,
        };
        let electric = match &p.electric {
            ElectricSection::Zero => ElectricPotential::Zero,
            ElectricSection::InverseQuadratic { strength } => ElectricPotential::InverseQuadratic { strength: *strength },
        };
        let taper = match &p.taper {
            TaperSection::Keyword(k) if k == "auto" => Some(Taper::for_extent(self.grid.extent)),
            TaperSection::Keyword(k) if k == "none" => None,
            TaperSection::Keyword(k) => {
                return Err(Error::Config(format!("taper must be \"auto\", \"none\" or {{inner, outer}}, got {k:?}")))
            }
            TaperSection::Radii { inner, outer } => Some(Taper::new(*inner, *outer)?),
        };
        let mut spec = PotentialSpec::new(n, magnetic, electric)?.with_taper(taper);
        if let Some(eps) = p.regularization {
            spec = spec.with_regularization(eps)?;
        }
        Ok(spec)
    }

    /// Builds the simulation configuration, tuning the amplitude when requested.
    pub fn prepare(&self) -> Result<Prepared> {
        let potential = self.potential_spec()?;
        let mut sim = match self.equation {
            Equation::Schrodinger => SimConfig::schrodinger(potential, self.grid.extent, self.grid.points),
            Equation::Wave => SimConfig::wave(potential, self.grid.extent, self.grid.points),
        };
        sim.nonlinearity = Nonlinearity { exponent: self.exponent, coupling: self.coupling };
        sim.dt = self.time.dt;
        sim.t_end = self.time.t_end;
        sim.cadence = self.time.cadence;
        sim.dealias = self.time.dealias;
        sim.blowup = BlowupThresholds { sup_factor: self.monitor.sup_factor, h1a_factor: self.monitor.h1a_factor };
        sim.boundary_warn = self.monitor.boundary_warn;
        let mut tuned = None;
        sim.initial = match &self.initial {
            InitialSection::Zero => InitialData::Zero,
            InitialSection::Gaussian { amplitude, width, center, velocity, chirp, wave_velocity_ratio, tune } => {
                let mut g = GaussianProfile::centered(self.dim, *amplitude, *width);
                if let Some(c) = center {
                    g.center = c.clone();
                }
                if let Some(v) = velocity {
                    g.velocity = v.clone();
                }
                g.chirp = *chirp;
                g.wave_velocity_ratio = *wave_velocity_ratio;
                if let Some(t) = tune {
                    sim.initial = InitialData::Gaussian(g.clone());
                    let found = tune_amplitude(&sim, t.lo, t.hi, t.margin_fraction)?;
                    g.amplitude = found.amplitude;
                    tuned = Some(found);
                }
                InitialData::Gaussian(g)
            }
            InitialSection::Random { amplitude } => {
                let grid = self.make_grid()?;
                let u = random_smooth_field(&grid, self.seed);
                let s = amplitude / u.sup_norm().max(f64::MIN_POSITIVE);
                let u = u.map(|z| z * s);
                let v = (self.equation == Equation::Wave).then(|| u.map(|z| z * default_velocity_ratio()));
                InitialData::Fields { u, v }
            }
        };
        sim.validate()?;
        Ok(Prepared { sim, tuned })
    }
}
