//! Battery policies: which actions are allowed in which periods.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evaluator::{activity_load_profile, BatteryAction, BatteryModel, Schedule};
use crate::num::{max_of, Scalar};
use crate::ppoi::Instance;
use crate::series::Calendar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatteryPolicy {
    /// Batteries never act.
    Conservative,
    /// No charging in working hours; a battery with enough stored energy
    /// must discharge in every working period.
    ForcedDischarge,
    /// No charging in working hours.
    NoForcedDischarge,
    /// Charging anywhere as long as it does not lift the recurring-load peak.
    Liberal,
    /// No restriction.
    VeryLiberal,
}

impl BatteryPolicy {
    pub const ALL: [BatteryPolicy; 5] = [
        BatteryPolicy::Conservative,
        BatteryPolicy::ForcedDischarge,
        BatteryPolicy::NoForcedDischarge,
        BatteryPolicy::Liberal,
        BatteryPolicy::VeryLiberal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BatteryPolicy::Conservative => "conservative",
            BatteryPolicy::ForcedDischarge => "forced-discharge",
            BatteryPolicy::NoForcedDischarge => "no-forced-discharge",
            BatteryPolicy::Liberal => "liberal",
            BatteryPolicy::VeryLiberal => "very-liberal",
        }
    }

    /// Whether charging is allowed in period `t`, ignoring the recurring-peak cap.
    pub fn may_charge(self, calendar: &Calendar, t: usize) -> bool {
        match self {
            BatteryPolicy::Conservative => false,
            BatteryPolicy::ForcedDischarge | BatteryPolicy::NoForcedDischarge => !calendar.is_working_period(t),
            BatteryPolicy::Liberal | BatteryPolicy::VeryLiberal => true,
        }
    }

    pub fn may_discharge(self) -> bool {
        self != BatteryPolicy::Conservative
    }
}

impl fmt::Display for BatteryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BatteryPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BatteryPolicy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown battery policy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PolicyViolation {
    ActionNotAllowed { battery: usize, period: usize },
    ChargeInWorkingHours { battery: usize, period: usize },
    MissedForcedDischarge { period: usize },
    ChargeRaisesRecurringPeak { period: usize },
}

impl fmt::Display for PolicyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyViolation::ActionNotAllowed { battery, period } => {
                write!(f, "battery {battery} acts in period {period}")
            }
            PolicyViolation::ChargeInWorkingHours { battery, period } => {
                write!(f, "battery {battery} charges in working period {period}")
            }
            PolicyViolation::MissedForcedDischarge { period } => {
                write!(f, "no battery discharges in working period {period} although one could")
            }
            PolicyViolation::ChargeRaisesRecurringPeak { period } => {
                write!(f, "charging in period {period} lifts load above the recurring peak")
            }
        }
    }
}

/// Slack used when comparing against the recurring-load peak.
pub(crate) fn peak_tol<T: Scalar>(peak: T) -> T {
    (peak.abs() + T::one()) * T::epsilon() * T::lit(1024.0)
}

/// Policy rules for a battery plan, given the recurring activity load per period.
pub fn check_plan_policy<T: Scalar>(
    policy: BatteryPolicy,
    models: &[BatteryModel<T>],
    plan: &[Vec<BatteryAction>],
    recurring: &[T],
    calendar: &Calendar,
) -> Vec<PolicyViolation> {
    let mut out = Vec::new();
    let horizon = recurring.len();
    match policy {
        BatteryPolicy::VeryLiberal => {}
        BatteryPolicy::Conservative => {
            for (b, row) in plan.iter().enumerate() {
                if let Some(t) = row.iter().position(|&a| a != BatteryAction::Idle) {
                    out.push(PolicyViolation::ActionNotAllowed { battery: b, period: t });
                }
            }
        }
        BatteryPolicy::NoForcedDischarge | BatteryPolicy::ForcedDischarge => {
            for (b, row) in plan.iter().enumerate() {
                for (t, &a) in row.iter().enumerate() {
                    if a == BatteryAction::Charge && calendar.is_working_period(t) {
                        out.push(PolicyViolation::ChargeInWorkingHours { battery: b, period: t });
                    }
                }
            }
            if policy == BatteryPolicy::ForcedDischarge {
                let mut soc = vec![T::zero(); models.len()];
                for t in 0..horizon {
                    if calendar.is_working_period(t) {
                        let able = models.iter().zip(&soc).any(|(m, &s)| s >= m.discharge_drain - m.soc_tol());
                        let acting = plan.iter().any(|row| row[t] == BatteryAction::Discharge);
                        if able && !acting {
                            out.push(PolicyViolation::MissedForcedDischarge { period: t });
                        }
                    }
                    for ((m, row), s) in models.iter().zip(plan).zip(soc.iter_mut()) {
                        *s = *s + m.soc_delta(row[t]);
                    }
                }
            }
        }
        BatteryPolicy::Liberal => {
            let peak = max_of(recurring).unwrap_or_else(T::zero);
            let tol = peak_tol(peak);
            for t in 0..horizon {
                let charging: T = models
                    .iter()
                    .zip(plan)
                    .filter(|(_, row)| row[t] == BatteryAction::Charge)
                    .map(|(m, _)| m.power)
                    .sum();
                if charging > T::zero() && recurring[t] + charging > peak + tol {
                    out.push(PolicyViolation::ChargeRaisesRecurringPeak { period: t });
                }
            }
        }
    }
    out
}

/// Policy rules for the battery plan of a schedule. Assumes the plan has the
/// right shape; shape errors are reported by the feasibility check.
pub fn policy_check<T: Scalar>(
    policy: BatteryPolicy,
    inst: &Instance<T>,
    calendar: &Calendar,
    schedule: &Schedule,
) -> Vec<PolicyViolation> {
    let recurring = activity_load_profile(inst, calendar, schedule);
    let models = BatteryModel::from_instance(inst);
    check_plan_policy(policy, &models, &schedule.battery_plan, &recurring, calendar)
}
