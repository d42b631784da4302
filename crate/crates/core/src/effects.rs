//! The signed effect algebra over potential-outcome functionals.
//!
//! Every effect in the TV decompositions is a ±1 combination of
//! `PO(x_y, x_w, x_z) = E[Y_{x_y, W_{x_w}} | X = x_z]` (with `Y` replaced by
//! `log P` or `logit P` on the log scales). This module is the single source
//! of truth for those coefficients; both the simulation oracle and the
//! data estimators expand effects through it, which is what makes the
//! decomposition identities hold to numerical round-off rather than "up to
//! estimation error": every decomposition telescopes in PO space.
//!
//! Transitions are the baseline `x0 = 0 → x1 = 1`; conditioning strata are
//! written last, so e.g. `x-DE(y|x0)` is `PO(1,0,0) − PO(0,0,0)`.

use serde::{Deserialize, Serialize};

use crate::shape::Scale;

/// Identifier of a potential-outcome functional: set `X = x_y` for the
/// outcome, let mediators respond to `X = x_w`, condition on the natural
/// stratum `X = x_z` (`None` = the whole population).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoSignature {
    pub x_y: u8,
    pub x_w: u8,
    pub x_z: Option<u8>,
}

impl PoSignature {
    pub const fn new(x_y: u8, x_w: u8, x_z: u8) -> Self {
        PoSignature { x_y, x_w, x_z: Some(x_z) }
    }

    pub const fn marginal(x_y: u8, x_w: u8) -> Self {
        PoSignature { x_y, x_w, x_z: None }
    }
}

/// The named effects of the TV decompositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectKind {
    /// Total variation: `E[Y|x1] − E[Y|x0]`.
    Tv,
    /// x-specific total effect given `x0`.
    Te,
    /// x-specific (natural) direct effect given `x0`.
    De,
    /// x-specific (natural) indirect effect given `x0`.
    Ie,
    /// x-specific spurious effect.
    Se,
    /// Direct-indirect interaction given `x0`.
    DeIe,
    /// Total-spurious interaction.
    TeSe,
    /// Direct-spurious interaction.
    DeSe,
    /// Indirect-spurious interaction.
    IeSe,
    /// Three-way direct-indirect-spurious interaction.
    DeIeSe,
}

impl EffectKind {
    /// Every effect, in decomposition order.
    pub const ALL: [EffectKind; 10] = [
        EffectKind::Tv,
        EffectKind::Te,
        EffectKind::De,
        EffectKind::Ie,
        EffectKind::Se,
        EffectKind::DeIe,
        EffectKind::TeSe,
        EffectKind::DeSe,
        EffectKind::IeSe,
        EffectKind::DeIeSe,
    ];

    /// The five interaction measures, in testing order.
    pub const INTERACTIONS: [EffectKind; 5] = [
        EffectKind::TeSe,
        EffectKind::DeIe,
        EffectKind::DeSe,
        EffectKind::IeSe,
        EffectKind::DeIeSe,
    ];

    /// Signed PO coefficients (the authoritative algebra table).
    pub fn coefficients(self) -> Vec<(f64, PoSignature)> {
        use PoSignature as S;
        match self {
            EffectKind::Tv => vec![(1.0, S::new(1, 1, 1)), (-1.0, S::new(0, 0, 0))],
            EffectKind::Te => vec![(1.0, S::new(1, 1, 0)), (-1.0, S::new(0, 0, 0))],
            EffectKind::De => vec![(1.0, S::new(1, 0, 0)), (-1.0, S::new(0, 0, 0))],
            EffectKind::Ie => vec![(1.0, S::new(0, 1, 0)), (-1.0, S::new(0, 0, 0))],
            EffectKind::Se => vec![(1.0, S::new(0, 0, 1)), (-1.0, S::new(0, 0, 0))],
            EffectKind::DeIe => vec![
                (1.0, S::new(1, 1, 0)),
                (-1.0, S::new(0, 1, 0)),
                (-1.0, S::new(1, 0, 0)),
                (1.0, S::new(0, 0, 0)),
            ],
            EffectKind::TeSe => vec![
                (1.0, S::new(1, 1, 1)),
                (-1.0, S::new(0, 0, 1)),
                (-1.0, S::new(1, 1, 0)),
                (1.0, S::new(0, 0, 0)),
            ],
            EffectKind::DeSe => vec![
                (1.0, S::new(1, 0, 1)),
                (-1.0, S::new(0, 0, 1)),
                (-1.0, S::new(1, 0, 0)),
                (1.0, S::new(0, 0, 0)),
            ],
            EffectKind::IeSe => vec![
                (1.0, S::new(0, 1, 1)),
                (-1.0, S::new(0, 0, 1)),
                (-1.0, S::new(0, 1, 0)),
                (1.0, S::new(0, 0, 0)),
            ],
            EffectKind::DeIeSe => vec![
                (1.0, S::new(1, 1, 1)),
                (-1.0, S::new(0, 1, 1)),
                (-1.0, S::new(1, 0, 1)),
                (1.0, S::new(0, 0, 1)),
                (-1.0, S::new(1, 1, 0)),
                (1.0, S::new(0, 1, 0)),
                (1.0, S::new(1, 0, 0)),
                (-1.0, S::new(0, 0, 0)),
            ],
        }
    }

    /// Report name on the given scale (`x-te-se`, `x-tlr-slr`, ...).
    pub fn name(self, scale: Scale) -> String {
        let (t, d, i, s) = match scale {
            Scale::Mean => ("te", "de", "ie", "se"),
            Scale::LogRisk => ("tlr", "dlr", "ilr", "slr"),
            Scale::LogOdds => ("tlo", "dlo", "ilo", "slo"),
        };
        match self {
            EffectKind::Tv => match scale {
                Scale::Mean => "tv".into(),
                Scale::LogRisk => "tvlr".into(),
                Scale::LogOdds => "tvlo".into(),
            },
            EffectKind::Te => format!("x-{t}"),
            EffectKind::De => format!("x-{d}"),
            EffectKind::Ie => format!("x-{i}"),
            EffectKind::Se => format!("x-{s}"),
            EffectKind::DeIe => format!("x-{d}-{i}"),
            EffectKind::TeSe => format!("x-{t}-{s}"),
            EffectKind::DeSe => format!("x-{d}-{s}"),
            EffectKind::IeSe => format!("x-{i}-{s}"),
            EffectKind::DeIeSe => format!("x-{d}-{i}-{s}"),
        }
    }

    /// Parses the mean-scale effect name (`te-se`, `x-te-se`, `de-ie`, ...).
    pub fn parse(s: &str) -> Option<EffectKind> {
        let s = s.trim().trim_start_matches("x-");
        match s {
            "tv" => Some(EffectKind::Tv),
            "te" => Some(EffectKind::Te),
            "de" => Some(EffectKind::De),
            "ie" => Some(EffectKind::Ie),
            "se" => Some(EffectKind::Se),
            "de-ie" => Some(EffectKind::DeIe),
            "te-se" => Some(EffectKind::TeSe),
            "de-se" => Some(EffectKind::DeSe),
            "ie-se" => Some(EffectKind::IeSe),
            "de-ie-se" => Some(EffectKind::DeIeSe),
            _ => None,
        }
    }
}

/// The z-specific DE-IE interaction of the population-granularity analysis
/// uses the reverse transition orientation of its source definition:
/// `[PO(1,0) − PO(0,0)] − [PO(1,1) − PO(0,1)]` within the `Z = z` stratum,
/// which is the negative of [`EffectKind::DeIe`]'s orientation.
pub fn z_de_ie_coefficients() -> Vec<(f64, PoSignature)> {
    use PoSignature as S;
    vec![
        (1.0, S::marginal(1, 0)),
        (-1.0, S::marginal(0, 0)),
        (-1.0, S::marginal(1, 1)),
        (1.0, S::marginal(0, 1)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn accumulate(kinds: &[EffectKind]) -> HashMap<PoSignature, f64> {
        let mut m: HashMap<PoSignature, f64> = HashMap::new();
        for k in kinds {
            for (c, s) in k.coefficients() {
                *m.entry(s).or_insert(0.0) += c;
            }
        }
        m.retain(|_, v| v.abs() > 1e-12);
        m
    }

    #[test]
    fn first_decomposition_telescopes_to_tv() {
        // TE + SE + TE-SE == TV as PO coefficients.
        let sum = accumulate(&[EffectKind::Te, EffectKind::Se, EffectKind::TeSe]);
        let tv = accumulate(&[EffectKind::Tv]);
        assert_eq!(sum, tv);
    }

    #[test]
    fn full_decomposition_telescopes_to_tv() {
        let sum = accumulate(&[
            EffectKind::De,
            EffectKind::Ie,
            EffectKind::Se,
            EffectKind::DeIe,
            EffectKind::DeSe,
            EffectKind::IeSe,
            EffectKind::DeIeSe,
        ]);
        let tv = accumulate(&[EffectKind::Tv]);
        assert_eq!(sum, tv);
    }

    #[test]
    fn granular_interactions_sum_to_te_se() {
        let sum = accumulate(&[EffectKind::DeSe, EffectKind::IeSe, EffectKind::DeIeSe]);
        let te_se = accumulate(&[EffectKind::TeSe]);
        assert_eq!(sum, te_se);
    }

    #[test]
    fn de_ie_parses_and_names() {
        assert_eq!(EffectKind::parse("x-de-ie"), Some(EffectKind::DeIe));
        assert_eq!(EffectKind::parse("te-se"), Some(EffectKind::TeSe));
        assert_eq!(EffectKind::DeIe.name(Scale::LogRisk), "x-dlr-ilr");
    }
}
