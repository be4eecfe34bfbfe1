use serde::{Deserialize, Serialize};

/// Pointwise nonlinearities used by the supported backbones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    Relu,
    Sine,
    Gauss,
    VariablePeriodic,
    GaborReal,
    Identity,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 6] = [
        ActivationKind::Relu,
        ActivationKind::Sine,
        ActivationKind::Gauss,
        ActivationKind::VariablePeriodic,
        ActivationKind::GaborReal,
        ActivationKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Sine => "sine",
            ActivationKind::Gauss => "gauss",
            ActivationKind::VariablePeriodic => "variable-periodic",
            ActivationKind::GaborReal => "gabor-real",
            ActivationKind::Identity => "identity",
        }
    }

    /// Default frequency `omega`.
    pub fn default_omega(self) -> f64 {
        30.0
    }

    /// Default spread: 30 for gauss, 10 for the Gabor wavelet.
    pub fn default_scale(self) -> f64 {
        match self {
            ActivationKind::GaborReal => 10.0,
            _ => 30.0,
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('-', "_") == s)
            .ok_or_else(|| crate::Error::arg(format!("unknown activation {s:?}")))
    }
}

/// Activation with its parameters.
///
/// | kind | value | derivative |
/// |------|-------|------------|
/// | relu | `max(0, z)` | `1` for `z > 0`, else `0` |
/// | sine | `sin(w z)` | `w cos(w z)` |
/// | gauss | `exp(-(s z)^2)` | `-2 s^2 z exp(-(s z)^2)` |
/// | variable-periodic | `sin(w (|z|+1) z)` | `w (2|z|+1) cos(w (|z|+1) z)` |
/// | gabor-real | `cos(w z) exp(-(s z)^2)` | product rule |
/// | identity | `z` | `1` |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub omega: f64,
    pub scale: f64,
}

impl ActivationSpec {
    pub fn new(kind: ActivationKind) -> Self {
        ActivationSpec { kind, omega: kind.default_omega(), scale: kind.default_scale() }
    }

    pub fn relu() -> Self {
        Self::new(ActivationKind::Relu)
    }

    pub fn sine(omega: f64) -> Self {
        ActivationSpec { omega, ..Self::new(ActivationKind::Sine) }
    }

    pub fn gauss(scale: f64) -> Self {
        ActivationSpec { scale, ..Self::new(ActivationKind::Gauss) }
    }

    pub fn variable_periodic(omega: f64) -> Self {
        ActivationSpec { omega, ..Self::new(ActivationKind::VariablePeriodic) }
    }

    pub fn gabor_real(omega: f64, scale: f64) -> Self {
        ActivationSpec { kind: ActivationKind::GaborReal, omega, scale }
    }

    pub fn identity() -> Self {
        Self::new(ActivationKind::Identity)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let uses_omega = matches!(
            self.kind,
            ActivationKind::Sine | ActivationKind::VariablePeriodic | ActivationKind::GaborReal
        );
        let uses_scale = matches!(self.kind, ActivationKind::Gauss | ActivationKind::GaborReal);
        if uses_omega && !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(crate::Error::config(format!("omega must be positive, got {}", self.omega)));
        }
        if uses_scale && !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(crate::Error::config(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::Sine => (self.omega * z).sin(),
            ActivationKind::Gauss => (-(self.scale * z).powi(2)).exp(),
            ActivationKind::VariablePeriodic => (self.omega * (z.abs() + 1.0) * z).sin(),
            ActivationKind::GaborReal => (self.omega * z).cos() * (-(self.scale * z).powi(2)).exp(),
            ActivationKind::Identity => z,
        }
    }

    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Sine => self.omega * (self.omega * z).cos(),
            ActivationKind::Gauss => {
                let s2 = self.scale * self.scale;
                -2.0 * s2 * z * (-s2 * z * z).exp()
            }
            ActivationKind::VariablePeriodic => {
                // d/dz (|z|+1) z = sign(z) z + |z| + 1, with sign(0) = 0
                let inner = self.omega * (z.abs() + 1.0) * z;
                self.omega * (2.0 * z.abs() + 1.0) * inner.cos()
            }
            ActivationKind::GaborReal => {
                let s2 = self.scale * self.scale;
                let envelope = (-s2 * z * z).exp();
                let wz = self.omega * z;
                envelope * (-self.omega * wz.sin() - 2.0 * s2 * z * wz.cos())
            }
            ActivationKind::Identity => 1.0,
        }
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Prng;

    #[test]
    fn sine_at_zero() {
        let a = ActivationSpec::sine(30.0);
        assert_eq!(a.apply(0.0), 0.0);
        assert_eq!(a.derivative(0.0), 30.0);
    }

    #[test]
    fn gauss_at_zero() {
        let a = ActivationSpec::gauss(30.0);
        assert_eq!(a.apply(0.0), 1.0);
        assert_eq!(a.derivative(0.0), 0.0);
    }

    #[test]
    fn ties_at_zero() {
        assert_eq!(ActivationSpec::relu().derivative(0.0), 0.0);
        assert_eq!(ActivationSpec::variable_periodic(30.0).derivative(0.0), 30.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut g = Prng::new(2024);
        let h = 1e-6;
        let specs = ActivationKind::ALL
            .into_iter()
            .flat_map(|kind| [ActivationSpec::new(kind), ActivationSpec { kind, omega: 3.0, scale: 2.0 }]);
        for spec in specs {
            let kind = spec.kind;
            for _ in 0..100 {
                let mut z = g.uniform(-1.5, 1.5).unwrap();
                if kind == ActivationKind::Relu || kind == ActivationKind::VariablePeriodic {
                    // stay away from the kink
                    if z.abs() < 1e-3 {
                        z += 0.01;
                    }
                }
                let fd = (spec.apply(z + h) - spec.apply(z - h)) / (2.0 * h);
                let an = spec.derivative(z);
                let rel = (fd - an).abs() / an.abs().max(1e-8);
                assert!(rel < 1e-5 || (fd - an).abs() < 1e-8, "{kind:?} z={z} fd={fd} an={an}");
            }
        }
    }

    #[test]
    fn parse_names() {
        for k in ActivationKind::ALL {
            assert_eq!(k.name().parse::<ActivationKind>().unwrap(), k);
        }
        assert!("tanh".parse::<ActivationKind>().is_err());
    }

    #[test]
    fn validation() {
        assert!(ActivationSpec::sine(0.0).validate().is_err());
        assert!(ActivationSpec::gauss(-1.0).validate().is_err());
        assert!(ActivationSpec { omega: 0.0, ..ActivationSpec::relu() }.validate().is_ok());
    }
}
