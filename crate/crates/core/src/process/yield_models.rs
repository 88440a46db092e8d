use super::{Composition, Microstructure, ModelSelector, Window, MANGANESE_WINDOW};
use crate::error::{Error, Result};

/// Microstructure ranges over which the three relations keep the order
/// upper ≥ middle ≥ lower. Inputs outside are rejected.
pub const YIELD_WINDOW: [Window; 3] = [
    Window::new("ferrite_grain_size", 2.0, 30.0),
    Window::new("ferrite_fraction", 0.6, 0.85),
    Window::new("pearlite_spacing", 0.17, 0.30),
];

pub(crate) const GLADMAN_FERRITE: [f64; 3] = [35.0, 58.0, 17.4];
pub(crate) const GLADMAN_PEARLITE: [f64; 2] = [178.0, 3.8];
pub(crate) const HODGSON_GIBBS: [f64; 3] = [62.6, 26.1, 19.7];
/// Si, P and free N contributions of the upper relation, MPa per wt%.
pub(crate) const HODGSON_GIBBS_RESIDUAL_COEF: [f64; 3] = [60.2, 759.0, 3286.0];
/// Residual Si, P and free N levels assumed for the upper relation, wt%.
pub(crate) const RESIDUAL_LEVELS: [f64; 3] = [0.25, 0.01, 0.004];
pub(crate) const LOWER_FERRITE: [f64; 3] = [20.0, 30.0, 12.0];
pub(crate) const LOWER_PEARLITE: [f64; 2] = [100.0, 2.0];

/// Yield strength in MPa under one of the three relations.
///
/// Grain size and lamellar spacing enter as inverse square roots in mm.
pub fn yield_strength(
    model: ModelSelector,
    micro: &Microstructure,
    comp: &Composition,
) -> Result<f64> {
    let [wd, wx, ws] = YIELD_WINDOW;
    let d = wd.check(micro.ferrite_grain_size)? * 1e-3;
    let x = wx.check(micro.ferrite_fraction)?;
    let s = ws.check(micro.pearlite_spacing)? * 1e-3;
    let mn = MANGANESE_WINDOW.check(comp.manganese)?;
    let hp_d = d.powf(-0.5);
    let hp_s = s.powf(-0.5);
    let y = match model {
        ModelSelector::Middle => {
            let [f0, f1, f2] = GLADMAN_FERRITE;
            let [p0, p1] = GLADMAN_PEARLITE;
            let w = x.cbrt();
            w * (f0 + f1 * mn + f2 * hp_d) + (1.0 - w) * (p0 + p1 * hp_s)
        }
        ModelSelector::Upper => {
            let [c0, c_mn, c_d] = HODGSON_GIBBS;
            let residual: f64 = HODGSON_GIBBS_RESIDUAL_COEF
                .iter()
                .zip(RESIDUAL_LEVELS)
                .map(|(k, w)| k * w)
                .sum();
            c0 + c_mn * mn + residual + c_d * hp_d
        }
        ModelSelector::Lower => {
            let [f0, f1, f2] = LOWER_FERRITE;
            let [p0, p1] = LOWER_PEARLITE;
            x * (f0 + f1 * mn + f2 * hp_d) + (1.0 - x) * (p0 + p1 * hp_s)
        }
        ModelSelector::All => {
            return Err(Error::input(
                "yield_strength needs a single model, not `all`",
            ));
        }
    };
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<(Microstructure, Composition)> {
        let lin = |w: Window, k: usize, n: usize| w.lo + (w.hi - w.lo) * k as f64 / (n - 1) as f64;
        let mut out = Vec::new();
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    for m in 0..5 {
                        out.push((
                            Microstructure {
                                ferrite_grain_size: lin(YIELD_WINDOW[0], a, 6),
                                ferrite_fraction: lin(YIELD_WINDOW[1], b, 6),
                                pearlite_spacing: lin(YIELD_WINDOW[2], c, 6),
                            },
                            Composition {
                                carbon: 0.2,
                                manganese: lin(MANGANESE_WINDOW, m, 5),
                            },
                        ));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn grain_size_sensitivity_is_negative_everywhere() {
        for (micro, comp) in grid() {
            for model in ModelSelector::SINGLE {
                let h = 1e-3;
                let mut up = micro;
                up.ferrite_grain_size = (micro.ferrite_grain_size + h).min(30.0);
                let mut dn = micro;
                dn.ferrite_grain_size = (micro.ferrite_grain_size - h).max(2.0);
                let slope = yield_strength(model, &up, &comp).unwrap()
                    - yield_strength(model, &dn, &comp).unwrap();
                assert!(slope < 0.0, "{model} at {micro:?}");
            }
        }
    }

    #[test]
    fn all_is_rejected() {
        let (m, c) = grid()[0];
        assert!(yield_strength(ModelSelector::All, &m, &c).is_err());
    }

    #[test]
    fn outside_window_is_domain_error() {
        let (mut m, c) = grid()[0];
        m.ferrite_grain_size = 45.0;
        assert!(matches!(
            yield_strength(ModelSelector::Middle, &m, &c),
            Err(Error::Domain {
                field: "ferrite_grain_size",
                ..
            })
        ));
    }
}
