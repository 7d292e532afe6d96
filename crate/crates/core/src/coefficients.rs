//! Diffusion and drift coefficients, named presets, and initial data.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

type CoefficientFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;
type ProfileFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A real function of `(t, x, u)`.
#[derive(Clone)]
pub enum Coefficient {
    Zero,
    Constant(f64),
    /// `c * sign(u) * |u|^gamma`; the constant `c` when `gamma == 0`.
    Power { c: f64, gamma: f64 },
    /// `2u(1 - u^2)`
    AllenCahn,
    /// `u(1 - u)`
    Kpp,
    Custom(Arc<CoefficientFn>),
}

impl Coefficient {
    pub fn custom(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64, u: f64) -> f64 {
        match self {
            Coefficient::Zero => 0.0,
            Coefficient::Constant(c) => *c,
            Coefficient::Power { c, gamma } => signed_power(*c, *gamma, u),
            Coefficient::AllenCahn => 2.0 * u * (1.0 - u * u),
            Coefficient::Kpp => u * (1.0 - u),
            Coefficient::Custom(f) => f(t, x, u),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coefficient::Zero) || matches!(self, Coefficient::Constant(c) if *c == 0.0)
    }
}

#[inline]
fn signed_power(c: f64, gamma: f64, u: f64) -> f64 {
    if gamma == 0.0 {
        c
    } else if gamma == 1.0 {
        c * u
    } else if gamma == 0.5 {
        c * u.signum() * u.abs().sqrt()
    } else {
        c * u.signum() * u.abs().powf(gamma)
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Zero => write!(f, "Zero"),
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Power { c, gamma } => write!(f, "Power {{ c: {c}, gamma: {gamma} }}"),
            Coefficient::AllenCahn => write!(f, "AllenCahn"),
            Coefficient::Kpp => write!(f, "Kpp"),
            Coefficient::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    HeatPower,
    AllenCahn,
    Kpp,
}

impl PresetName {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::HeatPower => "heat-power",
            PresetName::AllenCahn => "allen-cahn",
            PresetName::Kpp => "kpp",
        }
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat-power" => Ok(PresetName::HeatPower),
            "allen-cahn" => Ok(PresetName::AllenCahn),
            "kpp" => Ok(PresetName::Kpp),
            other => Err(Error::InvalidCoefficients(format!(
                "unknown preset `{other}` (expected heat-power, allen-cahn or kpp)"
            ))),
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The coefficient triple of the SPDE pair: diffusion `a`, base drift `b`,
/// and the extra drift `d` that separates the two equations.
#[derive(Debug, Clone)]
pub struct CoefficientSpec {
    pub name: String,
    pub a: Coefficient,
    pub b: Coefficient,
    pub d: Coefficient,
}

impl CoefficientSpec {
    pub fn new(name: impl Into<String>, a: Coefficient, b: Coefficient, d: Coefficient) -> Self {
        CoefficientSpec {
            name: name.into(),
            a,
            b,
            d,
        }
    }

    /// Power-law noise parameters `(C, gamma)` when `a` is a power law.
    pub fn power_law(&self) -> Option<(f64, f64)> {
        match self.a {
            Coefficient::Power { c, gamma } => Some((c, gamma)),
            _ => None,
        }
    }
}

/// Builds a named preset with noise `a(u) = C sign(u) |u|^gamma` and `b = 0`.
pub fn preset(name: PresetName, c: f64, gamma: f64) -> Result<CoefficientSpec> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidCoefficients(format!(
            "C must be finite and nonzero, got {c}"
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidCoefficients(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    let a = Coefficient::Power { c, gamma };
    let d = match name {
        PresetName::HeatPower => Coefficient::Zero,
        PresetName::AllenCahn => Coefficient::AllenCahn,
        PresetName::Kpp => Coefficient::Kpp,
    };
    Ok(CoefficientSpec::new(name.as_str(), a, Coefficient::Zero, d))
}

/// Initial profile `h(x)`.
#[derive(Clone)]
pub enum InitialShape {
    Constant(f64),
    /// `height * exp(-(x - center)^2 / (2 sigma^2))`
    Gaussian { center: f64, sigma: f64, height: f64 },
    /// `height` on `|x - center| <= width/2`, cosine taper to zero over
    /// `ramp` on each side. `ramp = 0` gives a sharp indicator.
    Plateau {
        center: f64,
        width: f64,
        height: f64,
        ramp: f64,
    },
    /// Smooth compactly supported bump `height * exp(1 - 1/(1 - r^2))`,
    /// `r = (x - center)/radius`.
    Bump { center: f64, radius: f64, height: f64 },
    Custom(Arc<ProfileFn>),
}

#[derive(Clone)]
pub struct InitialData {
    pub shape: InitialShape,
    /// Interval outside of which `h` vanishes, when known.
    pub support_hint: Option<(f64, f64)>,
}

impl InitialData {
    pub fn constant(c: f64) -> Self {
        InitialData {
            shape: InitialShape::Constant(c),
            support_hint: None,
        }
    }

    pub fn gaussian(center: f64, sigma: f64, height: f64) -> Self {
        InitialData {
            shape: InitialShape::Gaussian {
                center,
                sigma,
                height,
            },
            support_hint: None,
        }
    }

    pub fn plateau(center: f64, width: f64, height: f64, ramp: f64) -> Self {
        let half = 0.5 * width + ramp;
        InitialData {
            shape: InitialShape::Plateau {
                center,
                width,
                height,
                ramp,
            },
            support_hint: Some((center - half, center + half)),
        }
    }

    pub fn bump(center: f64, radius: f64, height: f64) -> Self {
        InitialData {
            shape: InitialShape::Bump {
                center,
                radius,
                height,
            },
            support_hint: Some((center - radius, center + radius)),
        }
    }

    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support_hint: Option<(f64, f64)>,
    ) -> Self {
        InitialData {
            shape: InitialShape::Custom(Arc::new(f)),
            support_hint,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            InitialShape::Constant(c) => *c,
            InitialShape::Gaussian {
                center,
                sigma,
                height,
            } => {
                let z = (x - center) / sigma;
                height * (-0.5 * z * z).exp()
            }
            InitialShape::Plateau {
                center,
                width,
                height,
                ramp,
            } => {
                let dist = (x - center).abs() - 0.5 * width;
                if dist <= 0.0 {
                    *height
                } else if dist < *ramp {
                    0.5 * height * (1.0 + (std::f64::consts::PI * dist / ramp).cos())
                } else {
                    0.0
                }
            }
            InitialShape::Bump {
                center,
                radius,
                height,
            } => {
                let r = (x - center) / radius;
                if r.abs() < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - r * r)).exp()
                } else {
                    0.0
                }
            }
            InitialShape::Custom(f) => f(x),
        }
    }

    /// Points where `h` is not smooth, used to split quadrature intervals.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            InitialShape::Plateau {
                center,
                width,
                ramp,
                ..
            } => {
                let half = 0.5 * width;
                vec![
                    center - half - ramp,
                    center - half,
                    center + half,
                    center + half + ramp,
                ]
            }
            InitialShape::Bump { center, radius, .. } => vec![center - radius, center + radius],
            _ => self
                .support_hint
                .map(|(l, r)| vec![l, r])
                .unwrap_or_default(),
        }
    }
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = match &self.shape {
            InitialShape::Constant(c) => format!("Constant({c})"),
            InitialShape::Gaussian {
                center,
                sigma,
                height,
            } => format!("Gaussian {{ center: {center}, sigma: {sigma}, height: {height} }}"),
            InitialShape::Plateau {
                center,
                width,
                height,
                ramp,
            } => format!(
                "Plateau {{ center: {center}, width: {width}, height: {height}, ramp: {ramp} }}"
            ),
            InitialShape::Bump {
                center,
                radius,
                height,
            } => format!("Bump {{ center: {center}, radius: {radius}, height: {height} }}"),
            InitialShape::Custom(_) => "Custom(..)".to_string(),
        };
        f.debug_struct("InitialData")
            .field("shape", &format_args!("{shape}"))
            .field("support_hint", &self.support_hint)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_values() {
        let ac = preset(PresetName::AllenCahn, 1.0, 0.5).unwrap();
        assert_eq!(ac.d.eval(0.0, 0.0, 2.0), -12.0);
        let hp = preset(PresetName::HeatPower, 2.0, 0.5).unwrap();
        assert_eq!(hp.a.eval(0.0, 0.0, 4.0), 4.0);
        assert!(hp.d.is_zero());
        let kpp = preset(PresetName::Kpp, 1.0, 0.5).unwrap();
        assert_eq!(kpp.d.eval(0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn power_law_is_odd_and_vanishes_at_zero() {
        for gamma in [0.3, 0.5, 0.75, 1.0] {
            let a = Coefficient::Power { c: 1.5, gamma };
            assert_eq!(a.eval(0.0, 0.0, 0.0), 0.0);
            for u in [0.1, 0.7, 3.0] {
                assert_eq!(a.eval(0.0, 0.0, -u), -a.eval(0.0, 0.0, u));
            }
        }
        assert_eq!(Coefficient::Power { c: 2.0, gamma: 0.0 }.eval(0.0, 0.0, 0.0), 2.0);
    }

    #[test]
    fn preset_rejects_bad_parameters() {
        assert!(preset(PresetName::AllenCahn, 0.0, 0.5).is_err());
        assert!(preset(PresetName::AllenCahn, 1.0, 1.5).is_err());
        assert!(preset(PresetName::AllenCahn, 1.0, -0.1).is_err());
        assert!("wave".parse::<PresetName>().is_err());
        assert_eq!("kpp".parse::<PresetName>().unwrap(), PresetName::Kpp);
    }

    #[test]
    fn plateau_shape() {
        let h = InitialData::plateau(0.0, 1.0, 2.0, 0.2);
        assert_eq!(h.eval(0.4), 2.0);
        assert!((h.eval(0.6) - 1.0).abs() < 1e-12);
        assert_eq!(h.eval(0.71), 0.0);
        assert_eq!(h.support_hint, Some((-0.7, 0.7)));
    }

    #[test]
    fn bump_is_compact() {
        let h = InitialData::bump(1.0, 0.5, 3.0);
        assert_eq!(h.eval(1.0), 3.0);
        assert_eq!(h.eval(1.5), 0.0);
        assert!(h.eval(1.49) > 0.0);
    }
}
