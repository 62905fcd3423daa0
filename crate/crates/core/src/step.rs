use serde::{Deserialize, Serialize};

use crate::error::StepError;

/// Step-size rule `eps_t`, indexed from `t = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant { epsilon: f64 },
    /// `eps_t = epsilon * t^-alpha` with `alpha` in `(1/2, 1)`.
    PowerDecay { epsilon: f64, alpha: f64 },
}

impl StepSchedule {
    pub fn constant(epsilon: f64) -> Result<Self, StepError> {
        check_epsilon(epsilon)?;
        Ok(Self::Constant { epsilon })
    }

    pub fn power_decay(epsilon: f64, alpha: f64) -> Result<Self, StepError> {
        check_epsilon(epsilon)?;
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(StepError::AlphaOutOfRange(alpha));
        }
        Ok(Self::PowerDecay { epsilon, alpha })
    }

    /// Re-runs constructor validation on a deserialized value.
    pub fn validate(&self) -> Result<(), StepError> {
        match *self {
            Self::Constant { epsilon } => Self::constant(epsilon).map(|_| ()),
            Self::PowerDecay { epsilon, alpha } => Self::power_decay(epsilon, alpha).map(|_| ()),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match *self {
            Self::Constant { epsilon } | Self::PowerDecay { epsilon, .. } => epsilon,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }

    /// Step at index `t >= 1`. `t = 0` is treated as `t = 1`.
    #[inline]
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Self::Constant { epsilon } => epsilon,
            Self::PowerDecay { epsilon, alpha } => epsilon * (t.max(1) as f64).powf(-alpha),
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), StepError> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(StepError::NonPositive(epsilon))
    }
}
