//! Access tiers and the exposure request limits attached to them.

use serde::{Deserialize, Serialize};
use urnmap_core::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Guest,
    Registered,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Guest => "guest",
            Tier::Registered => "registered",
        }
    }
}

/// Maximum SEL window length and maximum extent side lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierLimits {
    pub max_sel_days: f64,
    #[serde(default = "default_side")]
    pub max_sel_side_deg: f64,
}

fn default_side() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TierTable {
    pub guest: TierLimits,
    pub registered: TierLimits,
}

impl Default for TierTable {
    fn default() -> Self {
        Self {
            guest: TierLimits {
                max_sel_days: 1.0,
                max_sel_side_deg: 2.0,
            },
            registered: TierLimits {
                max_sel_days: 30.0,
                max_sel_side_deg: 10.0,
            },
        }
    }
}

impl TierTable {
    pub fn limits(&self, tier: Tier) -> TierLimits {
        match tier {
            Tier::Guest => self.guest,
            Tier::Registered => self.registered,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, l) in [("guest", self.guest), ("registered", self.registered)] {
            if !(l.max_sel_days > 0.0 && l.max_sel_side_deg > 0.0) {
                return Err(format!("{name} tier limits must be positive"));
            }
        }
        Ok(())
    }
}

fn plural(v: f64, unit: &str) -> String {
    if v == 1.0 {
        format!("1 {unit}")
    } else {
        format!("{v} {unit}s")
    }
}

/// Checks a window length (seconds) and extent; the error names the limit.
pub fn check(tier: Tier, limits: TierLimits, duration_s: f64, extent: &BoundingBox) -> Result<(), String> {
    let days = duration_s / 86_400.0;
    if days > limits.max_sel_days + 1e-12 {
        return Err(format!(
            "the {} tier is limited to SEL windows of {}; {} requested",
            tier.as_str(),
            plural(limits.max_sel_days, "day"),
            plural((days * 1000.0).round() / 1000.0, "day"),
        ));
    }
    let side = limits.max_sel_side_deg;
    let (h, w) = (extent.height_deg(), extent.width_deg());
    if h > side + 1e-9 || w > side + 1e-9 {
        return Err(format!(
            "the {} tier is limited to SEL areas of {side}°×{side}°; {:.3}°×{:.3}° requested",
            tier.as_str(),
            h,
            w,
        ));
    }
    Ok(())
}
