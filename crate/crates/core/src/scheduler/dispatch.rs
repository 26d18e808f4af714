//! Greedy battery dispatch against a fixed load profile.
//!
//! Non-forced policies optimise one battery at a time with the others held
//! fixed: discharges are added where they save most (single periods or whole
//! blocks near the peak), each paired with the cheapest charges that keep the
//! state of charge feasible, and the plan is then polished with single-period
//! toggles and relocations. The forced-discharge policy only decides how much
//! to charge before each working block; the discharges follow from the rule.

use thiserror::Error;

use crate::evaluator::{objective, BatteryAction, BatteryModel, PEAK_WEIGHT, PERIOD_HOURS};
use crate::num::{max_of, Scalar};
use crate::ppoi::Battery;
use crate::scheduler::policy::{peak_tol, BatteryPolicy};
use crate::series::Calendar;

use BatteryAction::{Charge, Discharge, Idle};

/// Load seen by the batteries.
#[derive(Debug, Clone, Copy)]
pub struct DispatchInput<'a, T> {
    /// Base load plus recurring activity load, kW per period.
    pub load: &'a [T],
    /// Recurring activity load alone (needed by the liberal policy).
    pub recurring: &'a [T],
    pub prices: &'a [T],
    pub calendar: &'a Calendar,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DispatchError {
    #[error("series lengths {0:?} do not match the horizon {1}")]
    LengthMismatch(Vec<usize>, usize),
    #[error("exhaustive dispatch supports at most {max} periods, got {horizon}")]
    HorizonTooLarge { horizon: usize, max: usize },
}

impl<T: Scalar> DispatchInput<'_, T> {
    pub fn horizon(&self) -> usize {
        self.load.len()
    }

    pub fn check(&self) -> Result<(), DispatchError> {
        let h = self.calendar.horizon();
        let lens = vec![self.load.len(), self.recurring.len(), self.prices.len()];
        if lens.iter().any(|&n| n != h) {
            return Err(DispatchError::LengthMismatch(lens, h));
        }
        Ok(())
    }

    fn recurring_peak(&self) -> T {
        max_of(self.recurring).unwrap_or_else(T::zero)
    }
}

pub fn idle_plan(batteries: usize, horizon: usize) -> Vec<Vec<BatteryAction>> {
    vec![vec![Idle; horizon]; batteries]
}

/// Grid load with the plan applied.
pub fn plan_load<T: Scalar>(load: &[T], models: &[BatteryModel<T>], plan: &[Vec<BatteryAction>]) -> Vec<T> {
    let mut out = load.to_vec();
    for (m, row) in models.iter().zip(plan) {
        for (l, &a) in out.iter_mut().zip(row) {
            *l = *l + m.grid_delta(a);
        }
    }
    out
}

pub fn plan_cost<T: Scalar>(input: &DispatchInput<T>, models: &[BatteryModel<T>], plan: &[Vec<BatteryAction>]) -> T {
    objective(&plan_load(input.load, models, plan), input.prices)
}

pub(crate) fn improvement_tol<T: Scalar>(cost: T) -> T {
    (cost.abs() + T::one()) * T::epsilon() * T::lit(256.0)
}

/// Drops every action that breaks the policy or the state-of-charge bounds,
/// scanning forward in time. Under the forced-discharge policy it also adds
/// the discharges the rule demands.
pub fn repair_plan<T: Scalar>(
    input: &DispatchInput<T>,
    models: &[BatteryModel<T>],
    policy: BatteryPolicy,
    plan: &[Vec<BatteryAction>],
) -> Vec<Vec<BatteryAction>> {
    let horizon = input.horizon();
    let mut out = idle_plan(models.len(), horizon);
    if policy == BatteryPolicy::Conservative {
        return out;
    }
    let peak = input.recurring_peak();
    let cap = peak + peak_tol(peak);
    let mut soc = vec![T::zero(); models.len()];
    for t in 0..horizon {
        let mut charging = T::zero();
        for (b, m) in models.iter().enumerate() {
            let tol = m.soc_tol();
            let a = match plan[b][t] {
                Charge
                    if policy.may_charge(input.calendar, t)
                        && soc[b] + m.charge_store <= m.capacity + tol
                        && (policy != BatteryPolicy::Liberal || input.recurring[t] + charging + m.power <= cap) =>
                {
                    charging = charging + m.power;
                    Charge
                }
                Discharge if soc[b] - m.discharge_drain >= -tol => Discharge,
                _ => Idle,
            };
            out[b][t] = a;
        }
        if policy == BatteryPolicy::ForcedDischarge && input.calendar.is_working_period(t) {
            let acting = out.iter().any(|row| row[t] == Discharge);
            if !acting {
                let best = models
                    .iter()
                    .enumerate()
                    .filter(|(b, m)| soc[*b] >= m.discharge_drain - m.soc_tol())
                    .max_by(|x, y| {
                        let rx = soc[x.0] / x.1.capacity;
                        let ry = soc[y.0] / y.1.capacity;
                        rx.partial_cmp(&ry).expect("finite soc").then(y.0.cmp(&x.0))
                    });
                if let Some((b, _)) = best {
                    out[b][t] = Discharge;
                }
            }
        }
        for (b, m) in models.iter().enumerate() {
            soc[b] = soc[b] + m.soc_delta(out[b][t]);
        }
    }
    out
}

/// Heuristic dispatch. The returned plan satisfies the policy and the
/// state-of-charge bounds and never costs more than leaving every battery idle.
pub fn dispatch_battery_heuristic<T: Scalar>(
    input: &DispatchInput<T>,
    batteries: &[Battery<T>],
    policy: BatteryPolicy,
) -> Vec<Vec<BatteryAction>> {
    let idle = idle_plan(batteries.len(), input.horizon());
    improve_plan(input, batteries, policy, &idle, true)
}

/// Improves a given plan. With `rebuild` false only local polishing is done,
/// which is much cheaper than a full greedy construction.
pub fn improve_plan<T: Scalar>(
    input: &DispatchInput<T>,
    batteries: &[Battery<T>],
    policy: BatteryPolicy,
    start: &[Vec<BatteryAction>],
    rebuild: bool,
) -> Vec<Vec<BatteryAction>> {
    let horizon = input.horizon();
    let idle = idle_plan(batteries.len(), horizon);
    if batteries.is_empty() || horizon == 0 || policy == BatteryPolicy::Conservative {
        return idle;
    }
    let models: Vec<BatteryModel<T>> = batteries.iter().map(BatteryModel::new).collect();
    let mut plan = repair_plan(input, &models, policy, start);
    if policy == BatteryPolicy::ForcedDischarge {
        if rebuild {
            let searched = forced_search(input, &models, plan);
            // the unforced plan, once repaired, is a second starting point
            let free = improve_plan(input, batteries, BatteryPolicy::NoForcedDischarge, start, true);
            let free = repair_plan(input, &models, policy, &free);
            plan = if plan_cost(input, &models, &free) < plan_cost(input, &models, &searched) { free } else { searched };
            plan = forced_polish(input, &models, plan);
        }
    } else {
        let rounds = if rebuild { 2 } else { 1 };
        for _ in 0..rounds {
            for b in 0..models.len() {
                let mut single = Single::new(input, &models, policy, &plan, b);
                if rebuild {
                    single.build(usize::MAX);
                    single.polish();
                } else {
                    single.polish();
                    if single.build(EXTEND_STEPS) {
                        single.polish();
                    }
                }
                plan[b] = single.row;
            }
        }
        plan = repair_plan(input, &models, policy, &plan);
    }
    let mut best = idle;
    let mut best_cost = plan_cost(input, &models, &best);
    for cand in [repair_plan(input, &models, policy, start), plan] {
        let c = plan_cost(input, &models, &cand);
        if c < best_cost {
            best = cand;
            best_cost = c;
        }
    }
    best
}

/// One battery against the load left by all others.
struct Single<'a, T: Scalar> {
    prices: &'a [T],
    m: BatteryModel<T>,
    base: Vec<T>,
    can_charge: Vec<bool>,
    can_discharge: bool,
    row: Vec<BatteryAction>,
    load: Vec<T>,
    soc: Vec<T>,
    suf_min: Vec<T>,
    suf_max: Vec<T>,
    /// Largest loads, descending, as (load, period).
    top: Vec<(T, usize)>,
    cost: T,
    tol: T,
    lin: T,
}

const MAX_TRIES: usize = 48;
const MAX_PASSES: usize = 50;
/// Construction steps allowed when only polishing.
const EXTEND_STEPS: usize = 2;

impl<'a, T: Scalar> Single<'a, T> {
    fn new(
        input: &DispatchInput<'a, T>,
        models: &[BatteryModel<T>],
        policy: BatteryPolicy,
        plan: &[Vec<BatteryAction>],
        b: usize,
    ) -> Self {
        let horizon = input.horizon();
        let m = models[b];
        let mut base = input.load.to_vec();
        let mut others_charging = vec![T::zero(); horizon];
        for (o, (om, row)) in models.iter().zip(plan).enumerate() {
            if o == b {
                continue;
            }
            for t in 0..horizon {
                base[t] = base[t] + om.grid_delta(row[t]);
                if row[t] == Charge {
                    others_charging[t] = others_charging[t] + om.power;
                }
            }
        }
        let peak = input.recurring_peak();
        let cap = peak + peak_tol(peak);
        let can_charge = (0..horizon)
            .map(|t| {
                policy.may_charge(input.calendar, t)
                    && (policy != BatteryPolicy::Liberal || input.recurring[t] + others_charging[t] + m.power <= cap)
            })
            .collect();
        let mut s = Self {
            prices: input.prices,
            m,
            base,
            can_charge,
            can_discharge: policy.may_discharge(),
            row: plan[b].clone(),
            load: Vec::new(),
            soc: Vec::new(),
            suf_min: Vec::new(),
            suf_max: Vec::new(),
            top: Vec::new(),
            cost: T::zero(),
            tol: m.soc_tol(),
            lin: T::lit(PERIOD_HOURS / 1000.0),
        };
        s.refresh();
        s
    }

    fn horizon(&self) -> usize {
        self.base.len()
    }

    fn allowed(&self, t: usize, a: BatteryAction) -> bool {
        match a {
            Charge => self.can_charge[t],
            Discharge => self.can_discharge,
            Idle => true,
        }
    }

    fn row_load(&self, row: &[BatteryAction]) -> Vec<T> {
        self.base.iter().zip(row).map(|(&l, &a)| l + self.m.grid_delta(a)).collect()
    }

    fn refresh(&mut self) {
        let n = self.horizon();
        self.load = self.row_load(&self.row);
        self.soc = self.m.trajectory(&self.row);
        self.suf_min = vec![T::infinity(); n + 1];
        self.suf_max = vec![T::neg_infinity(); n + 1];
        for t in (0..n).rev() {
            self.suf_min[t] = self.suf_min[t + 1].min(self.soc[t]);
            self.suf_max[t] = self.suf_max[t + 1].max(self.soc[t]);
        }
        let mut idx: Vec<usize> = (0..n).collect();
        let k = 3.min(n);
        if k > 0 {
            idx.select_nth_unstable_by(k - 1, |&a, &b| self.load[b].partial_cmp(&self.load[a]).expect("finite load"));
            idx.truncate(k);
            idx.sort_by(|&a, &b| self.load[b].partial_cmp(&self.load[a]).expect("finite load").then(a.cmp(&b)));
        }
        self.top = idx.into_iter().map(|t| (self.load[t], t)).collect();
        self.cost = objective(&self.load, self.prices);
    }

    fn peak(&self) -> T {
        self.top.first().map_or_else(T::zero, |p| p.0)
    }

    fn peak_excluding(&self, ex: &[usize]) -> T {
        if let Some(&(v, _)) = self.top.iter().find(|(_, t)| !ex.contains(t)) {
            return v;
        }
        self.load
            .iter()
            .enumerate()
            .filter(|(t, _)| !ex.contains(t))
            .map(|(_, &v)| v)
            .fold(T::neg_infinity(), T::max)
    }

    /// Exact objective change when the load at each listed period moves by the given amount.
    fn delta(&self, changes: &[(usize, T)]) -> T {
        let ex: Vec<usize> = changes.iter().map(|c| c.0).collect();
        let mut np = self.peak_excluding(&ex);
        let mut lin = T::zero();
        for &(t, dl) in changes {
            np = np.max(self.load[t] + dl);
            lin = lin + self.prices[t] * dl;
        }
        let p = self.peak();
        self.lin * lin + T::lit(PEAK_WEIGHT) * (np * np - p * p)
    }

    fn soc_fits(&self, from: usize, shift: T) -> bool {
        self.suf_min[from] + shift >= -self.tol && self.suf_max[from] + shift <= self.m.capacity + self.tol
    }

    /// Adds the cheapest charges needed to keep the row from running empty.
    fn fix_soc(&self, row: &mut [BatteryAction], limit: usize) -> bool {
        let n = row.len();
        let peak = self.peak();
        for _ in 0..=limit {
            let soc = self.m.trajectory(row);
            if soc.iter().any(|&s| s > self.m.capacity + self.tol) {
                return false;
            }
            let Some(v) = soc.iter().position(|&s| s < -self.tol) else { return true };
            let mut smax = vec![T::neg_infinity(); n + 1];
            for t in (0..n).rev() {
                smax[t] = smax[t + 1].max(soc[t]);
            }
            let mut best: Option<(T, usize)> = None;
            for c in 0..=v {
                if row[c] != Idle || !self.can_charge[c] || smax[c] + self.m.charge_store > self.m.capacity + self.tol {
                    continue;
                }
                let l = self.base[c] + self.m.power;
                let mut score = self.lin * self.prices[c] * self.m.power;
                if l > peak {
                    score = score + T::lit(PEAK_WEIGHT) * (l * l - peak * peak);
                }
                if best.is_none_or(|(s, _)| score < s) {
                    best = Some((score, c));
                }
            }
            let Some((_, c)) = best else { return false };
            row[c] = Charge;
        }
        false
    }

    fn try_discharges(&mut self, periods: &[usize]) -> bool {
        if periods.is_empty() {
            return false;
        }
        let mut row = self.row.clone();
        for &t in periods {
            row[t] = Discharge;
        }
        let per = (self.m.discharge_drain / self.m.charge_store).ceil().to_usize().unwrap_or(1);
        if !self.fix_soc(&mut row, periods.len() * (per + 1) + 2) {
            return false;
        }
        let cost = objective(&self.row_load(&row), self.prices);
        if cost < self.cost - improvement_tol(self.cost) {
            self.row = row;
            self.refresh();
            true
        } else {
            false
        }
    }

    fn try_block(&mut self) -> bool {
        let peak = self.peak();
        let relief = self.m.discharge_relief;
        for div in [1.0, 2.0, 4.0, 8.0] {
            let band = relief / T::lit(div);
            let block: Vec<usize> = (0..self.horizon()).filter(|&t| self.load[t] > peak - band).collect();
            if block.iter().any(|&t| self.row[t] != Idle) || !self.can_discharge || block.len() * 4 > self.horizon() {
                continue;
            }
            if self.try_discharges(&block) {
                return true;
            }
        }
        false
    }

    /// Greedily adds funded discharges, at most `steps` of them.
    fn build(&mut self, steps: usize) -> bool {
        if !self.can_discharge {
            return false;
        }
        let n = self.horizon();
        let mut taken = 0;
        while taken < steps {
            taken += 1;
            if self.try_block() {
                continue;
            }
            // cheapest permitted idle charge price up to each period
            let mut cheapest = vec![T::infinity(); n];
            let mut run = T::infinity();
            for t in 0..n {
                if self.row[t] == Idle && self.can_charge[t] {
                    run = run.min(self.prices[t]);
                }
                cheapest[t] = run;
            }
            let mut cands: Vec<(T, usize)> = Vec::new();
            for t in 0..n {
                if self.row[t] != Idle {
                    continue;
                }
                let mut gain = -self.delta(&[(t, -self.m.discharge_relief)]);
                let deficit = self.m.discharge_drain - self.suf_min[t] - self.tol;
                if deficit > T::zero() {
                    if cheapest[t].is_infinite() {
                        continue;
                    }
                    let k = (deficit / self.m.charge_store).ceil();
                    gain = gain - k * self.lin * self.m.power * cheapest[t];
                }
                if gain > T::zero() {
                    cands.push((gain, t));
                }
            }
            cands.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite gain").then(a.1.cmp(&b.1)));
            let accepted = cands.iter().take(MAX_TRIES).any(|&(_, t)| self.try_discharges(&[t]));
            if !accepted {
                return taken > 1;
            }
        }
        true
    }

    fn polish(&mut self) {
        for _ in 0..MAX_PASSES {
            let mut improved = false;
            for t in 0..self.horizon() {
                let cur = self.row[t];
                for a in [Idle, Charge, Discharge] {
                    if a == cur || !self.allowed(t, a) {
                        continue;
                    }
                    if !self.soc_fits(t, self.m.soc_delta(a) - self.m.soc_delta(cur)) {
                        continue;
                    }
                    let d = self.delta(&[(t, self.m.grid_delta(a) - self.m.grid_delta(cur))]);
                    if d < -improvement_tol(self.cost) {
                        self.row[t] = a;
                        self.refresh();
                        improved = true;
                        break;
                    }
                }
            }
            for t in 0..self.horizon() {
                if self.row[t] != Idle && self.relocate(t) {
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    }

    /// Moves the action at `t` to the idle period where it saves most.
    fn relocate(&mut self, t: usize) -> bool {
        let a = self.row[t];
        let s = self.m.soc_delta(a);
        let g = self.m.grid_delta(a);
        let (cap, tol) = (self.m.capacity + self.tol, -self.tol);
        let fits = |lo: T, hi: T, shift: T| lo + shift >= tol && hi + shift <= cap;
        let mut best: Option<(T, usize)> = None;
        let mut consider = |u: usize, this: &Self| {
            if this.row[u] != Idle || !this.allowed(u, a) {
                return;
            }
            let d = this.delta(&[(t, -g), (u, g)]);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, u));
            }
        };
        // earlier: soc over [u, t) rises by s
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for u in (0..t).rev() {
            lo = lo.min(self.soc[u]);
            hi = hi.max(self.soc[u]);
            if !fits(lo, hi, s) {
                break;
            }
            consider(u, self);
        }
        // later: soc over [t, u) falls by s
        let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
        for u in t + 1..self.horizon() {
            lo = lo.min(self.soc[u - 1]);
            hi = hi.max(self.soc[u - 1]);
            if !fits(lo, hi, -s) {
                break;
            }
            consider(u, self);
        }
        match best {
            Some((d, u)) if d < -improvement_tol(self.cost) => {
                self.row[t] = Idle;
                self.row[u] = a;
                self.refresh();
                true
            }
            _ => false,
        }
    }
}

/// Charge decisions for the forced-discharge policy. Charges for a working
/// block go in the gap before it, since anything stored earlier is drained
/// by the forced discharges of the previous block.
fn forced_search<T: Scalar>(
    input: &DispatchInput<T>,
    models: &[BatteryModel<T>],
    start: Vec<Vec<BatteryAction>>,
) -> Vec<Vec<BatteryAction>> {
    let policy = BatteryPolicy::ForcedDischarge;
    let cal = input.calendar;
    let horizon = input.horizon();
    let prices: &[T] = input.prices;
    let mut gaps: Vec<Vec<usize>> = Vec::new();
    let mut gap: Vec<usize> = Vec::new();
    for t in 0..horizon {
        if cal.is_working_period(t) {
            if t == 0 || !cal.is_working_period(t - 1) {
                let mut g = std::mem::take(&mut gap);
                g.sort_by(|&a, &b| prices[a].partial_cmp(&prices[b]).expect("finite price").then(b.cmp(&a)));
                gaps.push(g);
            }
        } else {
            gap.push(t);
        }
    }
    let mut plan = start;
    let mut cost = plan_cost(input, models, &plan);
    loop {
        let mut improved = false;
        for (b, m) in models.iter().enumerate() {
            let per = (m.discharge_drain / m.charge_store).ceil().to_usize().unwrap_or(1).max(1);
            for g in &gaps {
                let picks: Vec<usize> = g.iter().copied().filter(|&t| plan[b][t] == Idle).take(per).collect();
                if picks.is_empty() {
                    continue;
                }
                let mut trial = plan.clone();
                for &t in &picks {
                    trial[b][t] = Charge;
                }
                let trial = repair_plan(input, models, policy, &trial);
                let c = plan_cost(input, models, &trial);
                if c < cost - improvement_tol(cost) {
                    plan = trial;
                    cost = c;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    plan
}

/// Local search under the forced-discharge rule. Each trial changes one
/// battery's row (toggling one action, or adding a discharge together with
/// the cheapest earlier charges that fund it) and is scored after
/// [`repair_plan`], so the forced discharges it triggers are accounted for.
fn forced_polish<T: Scalar>(
    input: &DispatchInput<T>,
    models: &[BatteryModel<T>],
    mut plan: Vec<Vec<BatteryAction>>,
) -> Vec<Vec<BatteryAction>> {
    let policy = BatteryPolicy::ForcedDischarge;
    let horizon = input.horizon();
    let mut cost = plan_cost(input, models, &plan);
    for _ in 0..MAX_PASSES {
        let mut improved = false;
        for (b, m) in models.iter().enumerate() {
            for t in 0..horizon {
                let cur = plan[b][t];
                let mut rows = Vec::with_capacity(3);
                for a in [Idle, Charge, Discharge] {
                    if a != cur && (a != Charge || policy.may_charge(input.calendar, t)) {
                        let mut row = plan[b].clone();
                        row[t] = a;
                        rows.push(row);
                    }
                }
                if cur == Idle {
                    rows.extend(funded_discharge(input, m, &plan[b], t));
                }
                for row in rows {
                    let mut trial = plan.clone();
                    trial[b] = row;
                    let trial = repair_plan(input, models, policy, &trial);
                    let c = plan_cost(input, models, &trial);
                    if c < cost - improvement_tol(cost) {
                        plan = trial;
                        cost = c;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    plan
}

/// `row` with a discharge at `t` and the cheapest idle charges before it
/// needed to keep the state of charge non-negative.
fn funded_discharge<T: Scalar>(
    input: &DispatchInput<T>,
    m: &BatteryModel<T>,
    row: &[BatteryAction],
    t: usize,
) -> Option<Vec<BatteryAction>> {
    let tol = m.soc_tol();
    let mut row = row.to_vec();
    row[t] = Discharge;
    loop {
        let soc = m.trajectory(&row);
        if soc.iter().any(|&s| s > m.capacity + tol) {
            return None;
        }
        let Some(v) = soc.iter().position(|&s| s < -tol) else { return Some(row) };
        let mut smax = vec![T::neg_infinity(); row.len() + 1];
        for u in (0..row.len()).rev() {
            smax[u] = smax[u + 1].max(soc[u]);
        }
        let c = (0..=v)
            .filter(|&u| {
                row[u] == Idle
                    && BatteryPolicy::ForcedDischarge.may_charge(input.calendar, u)
                    && smax[u] + m.charge_store <= m.capacity + tol
            })
            .min_by(|&a, &b| input.prices[a].partial_cmp(&input.prices[b]).expect("finite price").then(b.cmp(&a)))?;
        row[c] = Charge;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::policy::check_plan_policy;
    use crate::series::{DayLayout, Weekday};

    fn cal(days: usize, ppd: usize, ws: usize, we: usize) -> Calendar {
        Calendar::starting_on(Weekday::Mon, days)
            .unwrap()
            .with_layout(DayLayout { periods_per_day: ppd, work_start: ws, work_end: we })
            .unwrap()
    }

    fn battery(cap: f64, p: f64, eta: f64) -> Battery<f64> {
        Battery { id: 0, capacity: cap, max_power: p, efficiency: eta }
    }

    #[test]
    fn flat_profile_stays_idle() {
        let c = cal(1, 8, 2, 6);
        let load = vec![50.0; 8];
        let zero = vec![0.0; 8];
        let prices = vec![40.0; 8];
        let input = DispatchInput { load: &load, recurring: &zero, prices: &prices, calendar: &c };
        let plan = dispatch_battery_heuristic(&input, &[battery(5.0, 2.0, 0.87)], BatteryPolicy::VeryLiberal);
        assert_eq!(plan, idle_plan(1, 8));
    }

    #[test]
    fn conservative_is_idle() {
        let c = cal(1, 4, 2, 4);
        let load = vec![10.0, 10.0, 100.0, 100.0];
        let zero = vec![0.0; 4];
        let prices = vec![10.0, 10.0, 500.0, 500.0];
        let input = DispatchInput { load: &load, recurring: &zero, prices: &prices, calendar: &c };
        let plan = dispatch_battery_heuristic(&input, &[battery(5.0, 2.0, 0.87)], BatteryPolicy::Conservative);
        assert_eq!(plan, idle_plan(1, 4));
    }

    #[test]
    fn charges_cheap_discharges_dear() {
        let c = cal(1, 4, 2, 4);
        let load = vec![10.0, 10.0, 100.0, 100.0];
        let zero = vec![0.0; 4];
        let prices = vec![10.0, 10.0, 500.0, 500.0];
        let input = DispatchInput { load: &load, recurring: &zero, prices: &prices, calendar: &c };
        let plan = dispatch_battery_heuristic(&input, &[battery(5.0, 2.0, 1.0)], BatteryPolicy::NoForcedDischarge);
        assert_eq!(plan, vec![vec![Charge, Charge, Discharge, Discharge]]);
    }

    #[test]
    fn forced_discharge_plan_obeys_rule() {
        let c = cal(2, 8, 3, 6);
        let load: Vec<f64> = (0..16).map(|t| if c.is_working_period(t) { 120.0 } else { 20.0 }).collect();
        let zero = vec![0.0; 16];
        let prices: Vec<f64> = (0..16).map(|t| if c.is_working_period(t) { 300.0 } else { 20.0 }).collect();
        let input = DispatchInput { load: &load, recurring: &zero, prices: &prices, calendar: &c };
        let b = [battery(2.0, 2.0, 0.9)];
        let plan = dispatch_battery_heuristic(&input, &b, BatteryPolicy::ForcedDischarge);
        let models: Vec<_> = b.iter().map(BatteryModel::new).collect();
        assert!(check_plan_policy(BatteryPolicy::ForcedDischarge, &models, &plan, &zero, &c).is_empty());
        assert!(plan_cost(&input, &models, &plan) < plan_cost(&input, &models, &idle_plan(1, 16)));
    }
}
