//! Run configuration. Every parameter can come from a flag, from the
//! subcommand's table in a TOML file, or from the built-in default, in that
//! order of precedence.

use std::path::Path;

use clap::ValueEnum;
use logkdv_core::halfline::TimeScheme;
use logkdv_core::jacobi::PlateauEstimator;
use logkdv_core::lattice::Integrator;
use serde::{Deserialize, Serialize};

use crate::CliError;

macro_rules! layered {
    (
        $(#[$sm:meta])*
        $args:ident => $cfg:ident {
            $( $(#[$fm:meta])* $f:ident : $t:ty = $d:expr ),* $(,)?
        }
    ) => {
        $(#[$sm])*
        #[derive(Debug, Clone, Default, clap::Args, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $args {
            $( $(#[$fm])* #[arg(long)] pub $f: Option<$t>, )*
        }

        #[derive(Debug, Clone, PartialEq, Serialize)]
        pub struct $cfg {
            $( pub $f: $t, )*
        }

        impl $args {
            pub fn resolve(&self, file: &$args) -> $cfg {
                $cfg {
                    $( $f: self.$f.clone().or_else(|| file.$f.clone()).unwrap_or_else(|| $d), )*
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorChoice {
    AsymptoticFit,
    TailMean,
}

impl From<EstimatorChoice> for PlateauEstimator {
    fn from(e: EstimatorChoice) -> Self {
        match e {
            EstimatorChoice::AsymptoticFit => PlateauEstimator::AsymptoticFit,
            EstimatorChoice::TailMean => PlateauEstimator::TailMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorChoice {
    Midpoint,
    Rk4,
}

impl From<IntegratorChoice> for Integrator {
    fn from(i: IntegratorChoice) -> Self {
        match i {
            IntegratorChoice::Midpoint => Integrator::ImplicitMidpoint,
            IntegratorChoice::Rk4 => Integrator::Rk4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    CrankNicolson,
    BackwardEuler,
}

impl From<SchemeChoice> for TimeScheme {
    fn from(s: SchemeChoice) -> Self {
        match s {
            SchemeChoice::CrankNicolson => TimeScheme::CrankNicolson,
            SchemeChoice::BackwardEuler => TimeScheme::BackwardEuler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PresetChoice {
    /// Hermite projection of a Gaussian bump.
    Gaussian,
    /// Uniform random entries, normalized, drawn from the run seed.
    Random,
}

layered! {
    /// Eigenvalue search and Wronskian traces.
    SpectrumArgs => SpectrumConfig {
        z_min: f64 = 0.05,
        z_max: f64 = 20.0,
        scan_step: f64 = 0.05,
        tol: f64 = 1e-6,
        n_max: usize = 1000,
        estimator: EstimatorChoice = EstimatorChoice::AsymptoticFit,
        decay_m_max: usize = 10_000,
        decay_tail_fraction: f64 = 0.5,
        /// Spectral parameter of the written trace.
        trace_z: f64 = 1.0,
        trace_n_max: usize = 1000,
    }
}

layered! {
    /// Norm-conserving lattice evolution.
    EvolveArgs => EvolveConfig {
        n: usize = 400,
        /// Time span, negative to run backward.
        #[arg(alias = "T", allow_negative_numbers = true)]
        t_final: f64 = 10.0,
        dt: f64 = 1e-3,
        sample_every: usize = 100,
        integrator: IntegratorChoice = IntegratorChoice::Midpoint,
        preset: PresetChoice = PresetChoice::Gaussian,
        #[arg(allow_negative_numbers = true)]
        x0: f64 = 1.0,
        sigma: f64 = 1.0,
        normalize: bool = true,
        /// Truncation of the series for the projection bound constant.
        c0_n_max: usize = 100_000,
    }
}

layered! {
    /// Dissipative half-line flow and modulation equations.
    DissipateArgs => DissipateConfig {
        extent: f64 = 40.0,
        h: f64 = 0.02,
        #[arg(alias = "T")]
        t_final: f64 = 5.0,
        dt: f64 = 1e-3,
        scheme: SchemeChoice = SchemeChoice::CrankNicolson,
        #[arg(allow_negative_numbers = true)]
        center: f64 = -2.0,
        width: f64 = 1.0,
        /// Choose `a(0)` so that the constraint value vanishes.
        balance: bool = true,
        #[arg(allow_negative_numbers = true)]
        a0: f64 = 0.0,
        #[arg(allow_negative_numbers = true)]
        b0: f64 = 0.0,
        /// Stride of the CSV rows in time steps.
        sample_every: usize = 100,
    }
}

layered! {
    /// Coercivity constant and projection bound.
    CoercivityArgs => CoercivityConfig {
        n_max: usize = 400,
        compare_n_max: usize = 200,
        samples: usize = 1000,
        c0_n_max: usize = 100_000,
    }
}

layered! {
    /// The projection sequence `f_n`.
    ProjectionsArgs => ProjectionsConfig {
        n_max: usize = 20,
        /// Also compute `f_n` by quadrature (limited to `n_max <= 200`).
        quadrature: bool = true,
    }
}

layered! {
    /// Physical-space eigenvector profiles.
    ReconstructArgs => ReconstructConfig {
        /// Spectral parameter; when absent the root selected by `root` is
        /// located first.
        z: Option<f64> = None,
        root: usize = 1,
        m_max: usize = 500,
        x_max: f64 = 12.0,
        spacing: f64 = 0.05,
        residual_window: f64 = 8.0,
        residual_spacing: f64 = 0.005,
        residual_m_max: usize = 64,
        max_power: usize = 6,
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub spectrum: SpectrumArgs,
    pub evolve: EvolveArgs,
    pub dissipate: DissipateArgs,
    pub coercivity: CoercivityArgs,
    pub projections: ProjectionsArgs,
    pub reconstruct: ReconstructArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            CliError::Config(format!("{}: {}", path.display(), e.message()))
        })
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    check(v > 0.0 && v.is_finite(), || format!("{name} must be positive and finite (got {v})"))
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("z_min", self.z_min)?;
        check(self.z_max > self.z_min && self.z_max.is_finite(), || {
            format!("z_max = {} must exceed z_min = {}", self.z_max, self.z_min)
        })?;
        positive("scan_step", self.scan_step)?;
        positive("tol", self.tol)?;
        positive("trace_z", self.trace_z)?;
        check(self.n_max >= 10 && self.trace_n_max >= 10, || "n_max and trace_n_max must be at least 10".into())?;
        check(self.decay_m_max >= 20, || "decay_m_max must be at least 20".into())?;
        check(self.decay_tail_fraction > 0.0 && self.decay_tail_fraction < 1.0, || {
            format!("decay_tail_fraction = {} must lie in (0, 1)", self.decay_tail_fraction)
        })
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check(self.n >= 2, || format!("lattice size n = {} must be at least 2", self.n))?;
        check(self.t_final.is_finite(), || "t_final must be finite".into())?;
        positive("dt", self.dt)?;
        positive("sigma", self.sigma)?;
        check(self.x0.is_finite(), || "x0 must be finite".into())?;
        check(self.sample_every >= 1, || "sample_every must be at least 1".into())?;
        check(self.c0_n_max >= 2, || "c0_n_max must be at least 2".into())
    }
}

impl DissipateConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("extent", self.extent)?;
        positive("h", self.h)?;
        positive("t_final", self.t_final)?;
        positive("dt", self.dt)?;
        positive("width", self.width)?;
        check(self.center.is_finite() && self.center <= 0.0, || {
            format!("center = {} must lie on the half-line z <= 0", self.center)
        })?;
        check(self.a0.is_finite() && self.b0.is_finite(), || "a0 and b0 must be finite".into())?;
        check(self.sample_every >= 1, || "sample_every must be at least 1".into())
    }
}

impl CoercivityConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check(self.n_max >= 10 && self.compare_n_max >= 10, || {
            "n_max and compare_n_max must be at least 10".into()
        })?;
        check(self.c0_n_max >= 2, || "c0_n_max must be at least 2".into())
    }
}

impl ProjectionsConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check(self.n_max >= 1, || "n_max must be at least 1".into())
    }
}

impl ReconstructConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(z) = self.z {
            check(z.is_finite(), || "z must be finite".into())?;
        }
        check(self.root >= 1, || "root counts from 1".into())?;
        check(self.m_max >= 2 && self.residual_m_max >= 2, || "m_max and residual_m_max must be at least 2".into())?;
        positive("x_max", self.x_max)?;
        positive("spacing", self.spacing)?;
        positive("residual_window", self.residual_window)?;
        positive("residual_spacing", self.residual_spacing)
    }
}
