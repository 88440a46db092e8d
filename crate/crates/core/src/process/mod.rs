//! Analytic hot-rod-rolling stage models.
//!
//! The chain runs deformation → recrystallization (dynamic, metadynamic and
//! static) → austenite grain growth → cooling transformation → yield
//! strength. Temperatures and cooling rates are in °F at every public
//! boundary and converted to kelvin inside the rate laws. Grain sizes and
//! lamellar spacings are in μm; stresses in MPa.
//!
//! Every stage checks its inputs against a validity window and reports the
//! first offending field as [`Error::Domain`].

mod provenance;
mod sampling;
mod stages;
mod yield_models;

pub use provenance::{provenance_csv, provenance_table, Constant};
pub use sampling::{generate_training_data, stratified_samples, TrainingData};
pub use stages::{
    cooling_microstructure, drx_grain, full_chain, grain_growth, mdrx_grain, recrystallized_size,
    trace_chain, ChainTrace, Recrystallization,
};
pub use yield_models::{yield_strength, YIELD_WINDOW};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314;

/// Closed interval `[lo, hi]` on one input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub field: &'static str,
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub const fn new(field: &'static str, lo: f64, hi: f64) -> Self {
        Window { field, lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && v >= self.lo && v <= self.hi
    }

    pub fn check(&self, v: f64) -> Result<f64> {
        if self.contains(v) {
            Ok(v)
        } else {
            Err(Error::Domain {
                field: self.field,
                value: v,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

pub const TEMPERATURE_WINDOW: Window = Window::new("temperature", 900.0, 2100.0);
pub const STRAIN_WINDOW: Window = Window::new("strain", 0.1, 1.0);
pub const STRAIN_RATE_WINDOW: Window = Window::new("strain_rate", 0.1, 100.0);
pub const INTERPASS_WINDOW: Window = Window::new("interpass_time", 0.1, 10.0);
pub const INITIAL_GRAIN_WINDOW: Window = Window::new("initial_grain_size", 20.0, 300.0);
pub const GROWTH_TIME_WINDOW: Window = Window::new("time", 0.0, 10.0);
pub const AUSTENITE_WINDOW: Window = Window::new("austenite_grain_size", 1.0, 300.0);
pub const CARBON_WINDOW: Window = Window::new("carbon", 0.15, 0.25);
pub const MANGANESE_WINDOW: Window = Window::new("manganese", 0.6, 0.9);
pub const COOLING_RATE_WINDOW: Window = Window::new("cooling_rate", 2.0, 36.0);

/// Design window swept for temperature, °F.
pub const DESIGN_TEMPERATURE: (f64, f64) = (1000.0, 2000.0);

pub fn fahrenheit_to_kelvin(t_f: f64) -> f64 {
    (t_f - 32.0) * 5.0 / 9.0 + 273.15
}

/// Converts a rate of temperature change from °F/s to K/s.
pub fn fahrenheit_rate_to_kelvin(rate_f: f64) -> f64 {
    rate_f * 5.0 / 9.0
}

/// Inputs of a single rolling pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RollingState {
    pub strain: f64,
    /// 1/s
    pub strain_rate: f64,
    /// °F
    pub temperature: f64,
    /// s
    pub interpass_time: f64,
    /// μm
    pub initial_grain_size: f64,
}

impl Default for RollingState {
    fn default() -> Self {
        RollingState {
            strain: 0.6,
            strain_rate: 10.0,
            temperature: 1450.0,
            interpass_time: 1.0,
            initial_grain_size: 100.0,
        }
    }
}

impl RollingState {
    pub fn at_temperature(self, temperature: f64) -> Self {
        RollingState {
            temperature,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        STRAIN_WINDOW.check(self.strain)?;
        STRAIN_RATE_WINDOW.check(self.strain_rate)?;
        TEMPERATURE_WINDOW.check(self.temperature)?;
        INTERPASS_WINDOW.check(self.interpass_time)?;
        INITIAL_GRAIN_WINDOW.check(self.initial_grain_size)?;
        Ok(())
    }

    /// Zener–Hollomon parameter with the deformation activation energy.
    pub(crate) fn zener_hollomon(&self) -> f64 {
        let t = fahrenheit_to_kelvin(self.temperature);
        self.strain_rate * (stages::Q_DEF / (GAS_CONSTANT * t)).exp()
    }
}

/// Steel chemistry, wt%.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub carbon: f64,
    pub manganese: f64,
}

impl Default for Composition {
    fn default() -> Self {
        Composition {
            carbon: 0.2,
            manganese: 0.8,
        }
    }
}

impl Composition {
    pub fn validate(&self) -> Result<()> {
        CARBON_WINDOW.check(self.carbon)?;
        MANGANESE_WINDOW.check(self.manganese)?;
        Ok(())
    }

    /// Carbon equivalent `C + Mn/6`.
    pub fn carbon_equivalent(&self) -> f64 {
        self.carbon + self.manganese / 6.0
    }
}

/// Room-temperature ferrite–pearlite microstructure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Microstructure {
    /// μm
    pub ferrite_grain_size: f64,
    pub ferrite_fraction: f64,
    /// μm
    pub pearlite_spacing: f64,
}

/// Which yield-strength relation closes the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelSelector {
    /// Gladman-type mixture law, f₀.
    Middle,
    /// Hodgson–Gibbs regression, f₁.
    Upper,
    /// Lower-bound mixture law, f₂.
    Lower,
    /// Each training row uses one of the three, chosen uniformly.
    All,
}

impl ModelSelector {
    pub const SINGLE: [ModelSelector; 3] = [
        ModelSelector::Middle,
        ModelSelector::Upper,
        ModelSelector::Lower,
    ];

    pub fn is_single(self) -> bool {
        self != ModelSelector::All
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelSelector::Middle => "middle",
            ModelSelector::Upper => "upper",
            ModelSelector::Lower => "lower",
            ModelSelector::All => "all",
        }
    }
}

impl fmt::Display for ModelSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "middle" | "f0" => Ok(ModelSelector::Middle),
            "upper" | "f1" => Ok(ModelSelector::Upper),
            "lower" | "f2" => Ok(ModelSelector::Lower),
            "all" => Ok(ModelSelector::All),
            other => Err(Error::input(format!("unknown yield model `{other}`"))),
        }
    }
}

/// Everything except temperature that the chain needs, held fixed while
/// temperature is swept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainInputs {
    pub state: RollingState,
    pub composition: Composition,
    /// °F/s
    pub cooling_rate: f64,
}

impl Default for ChainInputs {
    fn default() -> Self {
        ChainInputs {
            state: RollingState::default(),
            composition: Composition::default(),
            cooling_rate: 18.0,
        }
    }
}
