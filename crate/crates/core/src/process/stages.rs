use serde::{Deserialize, Serialize};

use super::{
    fahrenheit_rate_to_kelvin, fahrenheit_to_kelvin, yield_strength, ChainInputs, Composition,
    Microstructure, ModelSelector, RollingState, AUSTENITE_WINDOW, COOLING_RATE_WINDOW,
    GAS_CONSTANT, GROWTH_TIME_WINDOW, TEMPERATURE_WINDOW,
};
use crate::error::{Error, Result};

/// Activation energy of hot deformation, J/mol.
pub(crate) const Q_DEF: f64 = 300_000.0;
/// Activation energy of metadynamic softening, J/mol.
pub(crate) const Q_MDRX: f64 = 230_000.0;
/// Activation energy of static recrystallized grain size, J/mol.
pub(crate) const Q_SRX: f64 = 45_000.0;
/// Activation energy of austenite grain growth, J/mol.
pub(crate) const Q_GROWTH: f64 = 400_000.0;

pub(crate) const DRX_PEAK_COEF: f64 = 4.9e-4;
pub(crate) const DRX_CRITICAL_RATIO: f64 = 0.8;
pub(crate) const DRX_HALF_COEF: f64 = 1.144e-3;
pub(crate) const DRX_HALF_TEMP: f64 = 6420.0;
pub(crate) const DRX_SIZE_COEF: f64 = 1.6e4;
pub(crate) const AVRAMI_LN2: f64 = 0.693;
pub(crate) const MDRX_HALF_COEF: f64 = 1.1;
pub(crate) const MDRX_SIZE_COEF: f64 = 2.6e4;
pub(crate) const SIZE_Z_EXPONENT: f64 = -0.23;
pub(crate) const SRX_SIZE_COEF: f64 = 343.0;
pub(crate) const GROWTH_EXPONENT: i32 = 7;
pub(crate) const GROWTH_RATE: f64 = 1.5e27;

/// Size and volume fraction produced by one softening mechanism.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recrystallization {
    /// μm
    pub grain_size: f64,
    pub fraction: f64,
}

/// Dynamic recrystallization during the pass.
///
/// Critical strain `0.8 * 4.9e-4 d0^0.5 Z^0.15`; above it the fraction
/// follows `1 - exp(-0.693 ((eps - eps_c) / eps_0.5)^2)` with
/// `eps_0.5 = 1.144e-3 d0^0.28 rate^0.05 exp(6420 / T)`. The dynamic grain
/// size is `1.6e4 Z^-0.23`.
pub fn drx_grain(state: &RollingState) -> Result<Recrystallization> {
    state.validate()?;
    let t = fahrenheit_to_kelvin(state.temperature);
    let z = state.zener_hollomon();
    let d0 = state.initial_grain_size;
    let critical = DRX_CRITICAL_RATIO * DRX_PEAK_COEF * d0.sqrt() * z.powf(0.15);
    let half =
        DRX_HALF_COEF * d0.powf(0.28) * state.strain_rate.powf(0.05) * (DRX_HALF_TEMP / t).exp();
    let fraction = if state.strain > critical {
        let r = (state.strain - critical) / half;
        1.0 - (-AVRAMI_LN2 * r * r).exp()
    } else {
        0.0
    };
    Ok(Recrystallization {
        grain_size: DRX_SIZE_COEF * z.powf(SIZE_Z_EXPONENT),
        fraction: fraction.clamp(0.0, 1.0),
    })
}

/// Metadynamic recrystallization over the interpass time.
///
/// Depends only on strain rate, temperature and interpass time:
/// `t_0.5 = 1.1 Z^-0.8 exp(230000 / RT)`, fraction
/// `1 - exp(-0.693 t_ip / t_0.5)`, size `2.6e4 Z^-0.23`.
pub fn mdrx_grain(state: &RollingState) -> Result<Recrystallization> {
    state.validate()?;
    let t = fahrenheit_to_kelvin(state.temperature);
    let z = state.zener_hollomon();
    let half = MDRX_HALF_COEF * z.powf(-0.8) * (Q_MDRX / (GAS_CONSTANT * t)).exp();
    let fraction = 1.0 - (-AVRAMI_LN2 * state.interpass_time / half).exp();
    Ok(Recrystallization {
        grain_size: MDRX_SIZE_COEF * z.powf(SIZE_Z_EXPONENT),
        fraction: fraction.clamp(0.0, 1.0),
    })
}

/// Austenite grain size once softening after the pass is complete.
///
/// The dynamically recrystallized fraction ends at the metadynamic size
/// where metadynamic softening has run, and keeps the dynamic size
/// elsewhere. The remainder recrystallizes statically to
/// `343 eps^-0.5 d0^0.4 exp(-45000 / RT)`.
pub fn recrystallized_size(
    state: &RollingState,
    drx: &Recrystallization,
    mdrx: &Recrystallization,
) -> Result<f64> {
    state.validate()?;
    let t = fahrenheit_to_kelvin(state.temperature);
    let d_srx = SRX_SIZE_COEF
        * state.strain.powf(-0.5)
        * state.initial_grain_size.powf(0.4)
        * (-Q_SRX / (GAS_CONSTANT * t)).exp();
    let dynamic = mdrx.fraction * mdrx.grain_size + (1.0 - mdrx.fraction) * drx.grain_size;
    Ok(drx.fraction * dynamic + (1.0 - drx.fraction) * d_srx)
}

/// Austenite grain growth `d^7 = d_0^7 + 1.5e27 t exp(-400000 / RT)`.
pub fn grain_growth(post_mdrx_size: f64, time: f64, temperature: f64) -> Result<f64> {
    AUSTENITE_WINDOW.check(post_mdrx_size)?;
    GROWTH_TIME_WINDOW.check(time)?;
    TEMPERATURE_WINDOW.check(temperature)?;
    if time == 0.0 {
        return Ok(post_mdrx_size);
    }
    let t = fahrenheit_to_kelvin(temperature);
    let k = GROWTH_RATE * time * (-Q_GROWTH / (GAS_CONSTANT * t)).exp();
    // factored form keeps d^7 from overflowing for coarse grains
    let d = post_mdrx_size;
    Ok(d * (1.0 + k / d.powi(GROWTH_EXPONENT)).powf(1.0 / GROWTH_EXPONENT as f64))
}

pub(crate) const FERRITE_SIZE: [f64; 5] = [-0.4, 6.37, 24.2, -59.0, 22.0];
pub(crate) const FERRITE_SIZE_DECAY: f64 = 0.015;
pub(crate) const FERRITE_FRACTION_EUTECTOID: f64 = 0.77;
pub(crate) const FERRITE_FRACTION_SPAN: f64 = 0.75;
pub(crate) const FERRITE_FRACTION_GRAIN: f64 = 0.05;
pub(crate) const FERRITE_FRACTION_DECAY: f64 = 0.02;
pub(crate) const FERRITE_FRACTION_RATE: f64 = 0.005;
pub(crate) const PEARLITE_SPACING: [f64; 3] = [0.1307, 1.027, -1.993];
pub(crate) const PEARLITE_RATE_EXPONENT: f64 = -0.1;

/// Ferrite–pearlite microstructure after controlled cooling.
///
/// Ferrite grain size (μm), with cooling rate `c` in K/s:
/// `(-0.4 + 6.37 Ceq) + (24.2 - 59 Ceq) c^-0.5 + 22 (1 - exp(-0.015 D))`.
/// Ferrite fraction is the lever-rule fraction, reduced slightly for coarse
/// austenite and fast cooling. Pearlite spacing follows a quadratic in
/// carbon scaled by `c^-0.1`.
pub fn cooling_microstructure(
    final_austenite: f64,
    comp: &Composition,
    cooling_rate: f64,
) -> Result<Microstructure> {
    AUSTENITE_WINDOW.check(final_austenite)?;
    comp.validate()?;
    COOLING_RATE_WINDOW.check(cooling_rate)?;
    let cr = fahrenheit_rate_to_kelvin(cooling_rate);
    let ceq = comp.carbon_equivalent();
    let [a0, a1, b0, b1, g] = FERRITE_SIZE;
    let d = final_austenite;
    let ferrite_grain_size =
        (a0 + a1 * ceq) + (b0 + b1 * ceq) / cr.sqrt() + g * (1.0 - (-FERRITE_SIZE_DECAY * d).exp());
    let lever = (FERRITE_FRACTION_EUTECTOID - comp.carbon) / FERRITE_FRACTION_SPAN;
    let ferrite_fraction = (lever
        * (1.0 - FERRITE_FRACTION_GRAIN * (1.0 - (-FERRITE_FRACTION_DECAY * d).exp()))
        - FERRITE_FRACTION_RATE * cr.sqrt())
    .clamp(0.0, 1.0);
    let [s0, s1, s2] = PEARLITE_SPACING;
    let c = comp.carbon;
    let pearlite_spacing = (s0 + s1 * c + s2 * c * c) * cr.powf(PEARLITE_RATE_EXPONENT);
    if !(ferrite_grain_size > 0.0 && pearlite_spacing > 0.0) {
        return Err(Error::Numeric(format!(
            "non-positive microstructure size (ferrite {ferrite_grain_size}, spacing {pearlite_spacing})"
        )));
    }
    Ok(Microstructure {
        ferrite_grain_size,
        ferrite_fraction,
        pearlite_spacing,
    })
}

/// Intermediate values of one pass through the chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    /// °F
    pub temperature: f64,
    pub drx: Recrystallization,
    pub mdrx: Recrystallization,
    /// μm
    pub recrystallized_size: f64,
    /// μm
    pub austenite_size: f64,
    pub micro: Microstructure,
    /// MPa
    pub yield_strength: f64,
}

/// Runs every stage at `state` and records the intermediates. Stage errors
/// carry the stage name.
pub fn trace_chain(
    state: &RollingState,
    comp: &Composition,
    cooling_rate: f64,
    model: ModelSelector,
) -> Result<ChainTrace> {
    let drx = drx_grain(state).map_err(|e| e.in_stage("drx"))?;
    let mdrx = mdrx_grain(state).map_err(|e| e.in_stage("mdrx"))?;
    let rex = recrystallized_size(state, &drx, &mdrx).map_err(|e| e.in_stage("mdrx"))?;
    let austenite = grain_growth(rex, state.interpass_time, state.temperature)
        .map_err(|e| e.in_stage("grain_growth"))?;
    let micro =
        cooling_microstructure(austenite, comp, cooling_rate).map_err(|e| e.in_stage("cooling"))?;
    let y = yield_strength(model, &micro, comp).map_err(|e| e.in_stage("yield"))?;
    Ok(ChainTrace {
        temperature: state.temperature,
        drx,
        mdrx,
        recrystallized_size: rex,
        austenite_size: austenite,
        micro,
        yield_strength: y,
    })
}

/// Yield strength (MPa) at the end of the chain.
pub fn full_chain(
    state: &RollingState,
    comp: &Composition,
    cooling_rate: f64,
    model: ModelSelector,
) -> Result<f64> {
    trace_chain(state, comp, cooling_rate, model).map(|t| t.yield_strength)
}

impl ChainInputs {
    pub fn trace(&self, temperature: f64, model: ModelSelector) -> Result<ChainTrace> {
        trace_chain(
            &self.state.at_temperature(temperature),
            &self.composition,
            self.cooling_rate,
            model,
        )
    }
}
