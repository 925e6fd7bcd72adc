use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four scalars of the theory. Defaults are natural units with a unit
/// negative charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConstants")]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub m: f64,
    pub q: f64,
}

#[derive(Deserialize)]
struct RawConstants {
    hbar: f64,
    c: f64,
    m: f64,
    q: f64,
}

impl TryFrom<RawConstants> for PhysicalConstants {
    type Error = Error;

    fn try_from(raw: RawConstants) -> Result<Self> {
        PhysicalConstants::new(raw.hbar, raw.c, raw.m, raw.q)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar: 1.0,
            c: 1.0,
            m: 1.0,
            q: -1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, c: f64, m: f64, q: f64) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConstants(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("hbar", hbar)?;
        positive("c", c)?;
        positive("m", m)?;
        if !q.is_finite() || q == 0.0 {
            return Err(Error::InvalidConstants(format!("q must be nonzero and finite, got {q}")));
        }
        Ok(PhysicalConstants { hbar, c, m, q })
    }

    /// mc/hbar, the mass parameter of the Klein-Gordon equation.
    pub fn compton_wavenumber(&self) -> f64 {
        self.m * self.c / self.hbar
    }

    /// mc^2/hbar.
    pub fn rest_frequency(&self) -> f64 {
        self.m * self.c * self.c / self.hbar
    }

    /// q/hbar, the coupling in D = d + i(q/hbar)A.
    pub fn coupling(&self) -> f64 {
        self.q / self.hbar
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, f64::NAN, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(PhysicalConstants::new(2.0, 3.0, 0.5, -1.5).is_ok());
    }

    #[test]
    fn derived_scales() {
        let k = PhysicalConstants::new(2.0, 3.0, 4.0, 1.0).unwrap();
        assert_eq!(k.compton_wavenumber(), 6.0);
        assert_eq!(k.rest_frequency(), 18.0);
        assert_eq!(k.coupling(), 0.5);
    }

    #[test]
    fn deserialization_validates() {
        let bad: std::result::Result<PhysicalConstants, _> =
            serde_json::from_str(r#"{"hbar":1,"c":1,"m":-1,"q":1}"#);
        assert!(bad.is_err());
    }
}
