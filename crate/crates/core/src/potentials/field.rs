use serde::{Deserialize, Serialize};

/// External potential `U`; the force on a particle of charge `b` is `b·g` with `g = -U'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExternalField {
    Zero,
    /// `U(x) = slope · x`.
    Linear {
        slope: f64,
    },
    /// `U(x) = stiffness (x - center)² / 2`.
    Quadratic {
        stiffness: f64,
        center: f64,
    },
    /// `U(x) = amplitude · cos(x / length)`.
    Cosine {
        amplitude: f64,
        length: f64,
    },
    /// Another field with the force `g` shifted by a constant: `U ↦ U - shift·x`.
    Shifted {
        base: FieldBase,
        shift: f64,
    },
}

/// Field profiles that can be shifted (one level of nesting keeps the type `Copy`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldBase {
    Zero,
    Linear { slope: f64 },
    Quadratic { stiffness: f64, center: f64 },
    Cosine { amplitude: f64, length: f64 },
}

impl FieldBase {
    fn field(self) -> ExternalField {
        match self {
            FieldBase::Zero => ExternalField::Zero,
            FieldBase::Linear { slope } => ExternalField::Linear { slope },
            FieldBase::Quadratic { stiffness, center } => ExternalField::Quadratic { stiffness, center },
            FieldBase::Cosine { amplitude, length } => ExternalField::Cosine { amplitude, length },
        }
    }
}

impl ExternalField {
    pub fn u(&self, x: f64) -> f64 {
        match *self {
            ExternalField::Zero => 0.0,
            ExternalField::Linear { slope } => slope * x,
            ExternalField::Quadratic { stiffness, center } => 0.5 * stiffness * (x - center) * (x - center),
            ExternalField::Cosine { amplitude, length } => amplitude * (x / length).cos(),
            ExternalField::Shifted { base, shift } => base.field().u(x) - shift * x,
        }
    }

    /// `U'(x)`.
    pub fn du(&self, x: f64) -> f64 {
        match *self {
            ExternalField::Zero => 0.0,
            ExternalField::Linear { slope } => slope,
            ExternalField::Quadratic { stiffness, center } => stiffness * (x - center),
            ExternalField::Cosine { amplitude, length } => -amplitude / length * (x / length).sin(),
            ExternalField::Shifted { base, shift } => base.field().du(x) - shift,
        }
    }

    /// Force `g = -U'`.
    #[inline]
    pub fn force(&self, x: f64) -> f64 {
        -self.du(x)
    }

    /// Lipschitz constant of `U'`.
    pub fn lipschitz_bound(&self) -> f64 {
        match *self {
            ExternalField::Zero | ExternalField::Linear { .. } => 0.0,
            ExternalField::Quadratic { stiffness, .. } => stiffness.abs(),
            ExternalField::Cosine { amplitude, length } => (amplitude / (length * length)).abs(),
            ExternalField::Shifted { base, .. } => base.field().lipschitz_bound(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            ExternalField::Zero => true,
            ExternalField::Shifted { base: FieldBase::Zero, shift } => shift == 0.0,
            ExternalField::Linear { slope } => slope == 0.0,
            _ => false,
        }
    }

    /// Same field with the force replaced by `g + sigma`.
    pub fn with_force_shift(&self, sigma: f64) -> ExternalField {
        let (base, shift) = match *self {
            ExternalField::Zero => (FieldBase::Zero, 0.0),
            ExternalField::Linear { slope } => (FieldBase::Linear { slope }, 0.0),
            ExternalField::Quadratic { stiffness, center } => (FieldBase::Quadratic { stiffness, center }, 0.0),
            ExternalField::Cosine { amplitude, length } => (FieldBase::Cosine { amplitude, length }, 0.0),
            ExternalField::Shifted { base, shift } => (base, shift),
        };
        ExternalField::Shifted { base, shift: shift + sigma }
    }

    /// Largest finite-difference slope of `U'` over consecutive points of `grid`.
    pub fn sampled_lipschitz(&self, grid: &[f64]) -> f64 {
        grid.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| ((self.du(w[1]) - self.du(w[0])) / (w[1] - w[0])).abs())
            .fold(0.0, f64::max)
    }
}
