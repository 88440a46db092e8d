use super::stages::*;
use super::yield_models::*;
use super::GAS_CONSTANT;
use crate::error::Result;
use crate::io::csv_text;

/// One model constant with its origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Constant {
    pub name: &'static str,
    pub value: f64,
    pub units: &'static str,
    pub source: &'static str,
}

const HG: &str = "Hodgson & Gibbs (1992), C-Mn steel relations";
const KUZIAK: &str = "Kuziak, Cheng & Tang (1997) compilation; form as published";
const GLADMAN: &str = "Gladman, McIvor & Pickering (1972) ferrite-pearlite mixture law";
const LOWER: &str = "mixture-law form after Kuziak et al. (1997); constants representative, chosen to bound the other two relations from below";
const RESIDUAL: &str = "representative residual level for plain C-Mn rod; assumed";
const LEVER: &str = "lever-rule ferrite fraction with grain-size and cooling-rate corrections; constants representative";
const SPACING: &str =
    "quadratic-in-carbon pearlite spacing after Kuziak et al. (1997); constants representative";

/// Every constant used by the stage models.
pub fn provenance_table() -> Vec<Constant> {
    let c = |name, value, units, source| Constant {
        name,
        value,
        units,
        source,
    };
    vec![
        c(
            "gas_constant",
            GAS_CONSTANT,
            "J/(mol K)",
            "physical constant",
        ),
        c("q_deformation", Q_DEF, "J/mol", HG),
        c("drx_peak_strain_coef", DRX_PEAK_COEF, "um^-0.5", HG),
        c("drx_critical_ratio", DRX_CRITICAL_RATIO, "-", HG),
        c("drx_half_strain_coef", DRX_HALF_COEF, "-", HG),
        c("drx_half_strain_temp", DRX_HALF_TEMP, "K", HG),
        c("drx_size_coef", DRX_SIZE_COEF, "um", HG),
        c("avrami_ln2", AVRAMI_LN2, "-", KUZIAK),
        c("mdrx_half_time_coef", MDRX_HALF_COEF, "s", HG),
        c("q_mdrx", Q_MDRX, "J/mol", HG),
        c("mdrx_size_coef", MDRX_SIZE_COEF, "um", HG),
        c("size_z_exponent", SIZE_Z_EXPONENT, "-", HG),
        c("srx_size_coef", SRX_SIZE_COEF, "um^0.6", HG),
        c("q_srx_size", Q_SRX, "J/mol", HG),
        c("growth_exponent", GROWTH_EXPONENT as f64, "-", HG),
        c("growth_rate", GROWTH_RATE, "um^7/s", HG),
        c("q_growth", Q_GROWTH, "J/mol", HG),
        c("ferrite_size_a0", FERRITE_SIZE[0], "um", HG),
        c("ferrite_size_a1", FERRITE_SIZE[1], "um/wt%", HG),
        c("ferrite_size_b0", FERRITE_SIZE[2], "um (K/s)^0.5", HG),
        c("ferrite_size_b1", FERRITE_SIZE[3], "um (K/s)^0.5/wt%", HG),
        c("ferrite_size_g", FERRITE_SIZE[4], "um", HG),
        c("ferrite_size_decay", FERRITE_SIZE_DECAY, "1/um", HG),
        c(
            "ferrite_fraction_eutectoid",
            FERRITE_FRACTION_EUTECTOID,
            "wt%",
            LEVER,
        ),
        c("ferrite_fraction_span", FERRITE_FRACTION_SPAN, "wt%", LEVER),
        c("ferrite_fraction_grain", FERRITE_FRACTION_GRAIN, "-", LEVER),
        c(
            "ferrite_fraction_decay",
            FERRITE_FRACTION_DECAY,
            "1/um",
            LEVER,
        ),
        c(
            "ferrite_fraction_rate",
            FERRITE_FRACTION_RATE,
            "(K/s)^-0.5",
            LEVER,
        ),
        c("pearlite_spacing_s0", PEARLITE_SPACING[0], "um", SPACING),
        c(
            "pearlite_spacing_s1",
            PEARLITE_SPACING[1],
            "um/wt%",
            SPACING,
        ),
        c(
            "pearlite_spacing_s2",
            PEARLITE_SPACING[2],
            "um/wt%^2",
            SPACING,
        ),
        c(
            "pearlite_spacing_rate_exp",
            PEARLITE_RATE_EXPONENT,
            "-",
            SPACING,
        ),
        c("middle_ferrite_const", GLADMAN_FERRITE[0], "MPa", GLADMAN),
        c("middle_ferrite_mn", GLADMAN_FERRITE[1], "MPa/wt%", GLADMAN),
        c(
            "middle_ferrite_hall_petch",
            GLADMAN_FERRITE[2],
            "MPa mm^0.5",
            GLADMAN,
        ),
        c("middle_pearlite_const", GLADMAN_PEARLITE[0], "MPa", GLADMAN),
        c(
            "middle_pearlite_spacing",
            GLADMAN_PEARLITE[1],
            "MPa mm^0.5",
            GLADMAN,
        ),
        c("upper_const", HODGSON_GIBBS[0], "MPa", HG),
        c("upper_mn", HODGSON_GIBBS[1], "MPa/wt%", HG),
        c("upper_hall_petch", HODGSON_GIBBS[2], "MPa mm^0.5", HG),
        c("upper_si", HODGSON_GIBBS_RESIDUAL_COEF[0], "MPa/wt%", HG),
        c("upper_p", HODGSON_GIBBS_RESIDUAL_COEF[1], "MPa/wt%", HG),
        c(
            "upper_free_n",
            HODGSON_GIBBS_RESIDUAL_COEF[2],
            "MPa/wt%",
            HG,
        ),
        c("residual_si", RESIDUAL_LEVELS[0], "wt%", RESIDUAL),
        c("residual_p", RESIDUAL_LEVELS[1], "wt%", RESIDUAL),
        c("residual_free_n", RESIDUAL_LEVELS[2], "wt%", RESIDUAL),
        c("lower_ferrite_const", LOWER_FERRITE[0], "MPa", LOWER),
        c("lower_ferrite_mn", LOWER_FERRITE[1], "MPa/wt%", LOWER),
        c(
            "lower_ferrite_hall_petch",
            LOWER_FERRITE[2],
            "MPa mm^0.5",
            LOWER,
        ),
        c("lower_pearlite_const", LOWER_PEARLITE[0], "MPa", LOWER),
        c(
            "lower_pearlite_spacing",
            LOWER_PEARLITE[1],
            "MPa mm^0.5",
            LOWER,
        ),
    ]
}

/// The provenance table as CSV (`name,value,units,source`).
pub fn provenance_csv() -> Result<String> {
    csv_text(
        &["name", "value", "units", "source"],
        provenance_table().into_iter().map(|c| {
            vec![
                c.name.to_string(),
                format!("{}", c.value),
                c.units.to_string(),
                c.source.to_string(),
            ]
        }),
    )
}
