//! Exhaustive single-battery dispatch for short horizons.

use crate::evaluator::{BatteryAction, BatteryModel, PEAK_WEIGHT, PERIOD_HOURS};
use crate::num::{max_of, Scalar};
use crate::ppoi::Battery;
use crate::scheduler::dispatch::{DispatchError, DispatchInput};
use crate::scheduler::policy::{peak_tol, BatteryPolicy};

use BatteryAction::{Charge, Discharge, Idle};

pub const EXACT_MAX_HORIZON: usize = 16;

/// Cost-minimal plan for one battery, found by enumerating every action
/// sequence that respects the state-of-charge bounds and the policy. Among
/// equally cheap plans the one first in (Idle, Charge, Discharge)
/// lexicographic order is returned, so all-idle wins ties.
pub fn dispatch_battery_exact<T: Scalar>(
    input: &DispatchInput<T>,
    battery: &Battery<T>,
    policy: BatteryPolicy,
) -> Result<(Vec<BatteryAction>, T), DispatchError> {
    input.check()?;
    let horizon = input.horizon();
    if horizon > EXACT_MAX_HORIZON {
        return Err(DispatchError::HorizonTooLarge { horizon, max: EXACT_MAX_HORIZON });
    }
    let peak = max_of(input.recurring).unwrap_or_else(T::zero);
    let mut search = Search {
        input,
        m: BatteryModel::new(battery),
        policy,
        cap: peak + peak_tol(peak),
        row: vec![Idle; horizon],
        best: None,
    };
    search.dfs(0, T::zero(), T::zero(), T::neg_infinity());
    Ok(search.best.expect("all-idle plan is always feasible"))
}

struct Search<'a, 'b, T: Scalar> {
    input: &'b DispatchInput<'a, T>,
    m: BatteryModel<T>,
    policy: BatteryPolicy,
    cap: T,
    row: Vec<BatteryAction>,
    best: Option<(Vec<BatteryAction>, T)>,
}

impl<T: Scalar> Search<'_, '_, T> {
    fn options(&self, t: usize, soc: T) -> Vec<BatteryAction> {
        let m = &self.m;
        let tol = m.soc_tol();
        let can_discharge = self.policy.may_discharge() && soc - m.discharge_drain >= -tol;
        if self.policy == BatteryPolicy::ForcedDischarge && self.input.calendar.is_working_period(t) && can_discharge {
            return vec![Discharge];
        }
        let mut out = vec![Idle];
        let can_charge = self.policy.may_charge(self.input.calendar, t)
            && soc + m.charge_store <= m.capacity + tol
            && (self.policy != BatteryPolicy::Liberal || self.input.recurring[t] + m.power <= self.cap);
        if can_charge {
            out.push(Charge);
        }
        if can_discharge {
            out.push(Discharge);
        }
        out
    }

    fn dfs(&mut self, t: usize, soc: T, energy: T, peak: T) {
        if t == self.row.len() {
            let p = if peak.is_finite() { peak } else { T::zero() };
            let cost = T::lit(PERIOD_HOURS / 1000.0) * energy + T::lit(PEAK_WEIGHT) * p * p;
            if self.best.as_ref().is_none_or(|(_, c)| cost < *c) {
                self.best = Some((self.row.clone(), cost));
            }
            return;
        }
        for a in self.options(t, soc) {
            self.row[t] = a;
            let l = self.input.load[t] + self.m.grid_delta(a);
            self.dfs(t + 1, soc + self.m.soc_delta(a), energy + l * self.input.prices[t], peak.max(l));
        }
        self.row[t] = Idle;
    }
}
