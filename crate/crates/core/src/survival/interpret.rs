use serde::{Deserialize, Serialize};

use super::FitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Dropout less likely.
    Protective,
    /// Dropout more likely.
    Harmful,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardInterpretation {
    pub hazard_ratio: f64,
    pub direction: Direction,
    /// Fractional change in the odds of the event: `1 - hr` when protective,
    /// `hr - 1` when harmful.
    pub percent_change: f64,
}

pub fn interpret(hr: f64) -> Result<HazardInterpretation, FitError> {
    if !hr.is_finite() || hr <= 0.0 {
        return Err(FitError::NonPositiveRatio(hr));
    }
    let (direction, percent_change) = if hr < 1.0 {
        (Direction::Protective, 1.0 - hr)
    } else if hr > 1.0 {
        (Direction::Harmful, hr - 1.0)
    } else {
        (Direction::Null, 0.0)
    };
    Ok(HazardInterpretation { hazard_ratio: hr, direction, percent_change })
}

impl HazardInterpretation {
    /// e.g. "60% less likely", "25% more likely", "no effect (0%)".
    pub fn describe(&self) -> String {
        let pct = format_sig2(self.percent_change * 100.0);
        match self.direction {
            Direction::Protective => format!("{pct}% less likely"),
            Direction::Harmful => format!("{pct}% more likely"),
            Direction::Null => "no effect (0%)".to_owned(),
        }
    }
}

/// Two significant figures, no exponent.
pub fn format_sig2(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".to_owned();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = 1 - magnitude;
    if decimals > 0 {
        format!("{:.*}", decimals as usize, v)
    } else {
        let unit = 10f64.powi(-decimals);
        format!("{:.0}", (v / unit).round() * unit)
    }
}
