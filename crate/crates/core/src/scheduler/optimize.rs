//! Local search over placements with simulated annealing.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evaluator::{
    activity_load_profile, check_feasibility, objective, total_cost, BatteryAction, BatteryModel, EvalError,
    Placement, Schedule, Slot,
};
use crate::num::Scalar;
use crate::ppoi::{validate_instance, Instance};
use crate::scheduler::dispatch::{improve_plan, plan_load, repair_plan, DispatchInput};
use crate::scheduler::placement::{candidate_slots, precedence_ok, RoomUsage};
use crate::scheduler::policy::BatteryPolicy;
use crate::scheduler::warm::conservative_warm_starts;
use crate::scheduler::SchedulerError;
use crate::series::{Calendar, NetLoadSeries, PriceSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub num_warm_starts: usize,
    /// Proposed moves of the local search.
    pub iterations: usize,
    pub seed: u64,
    /// Wall-clock limit in seconds. Results under a limit depend on machine speed.
    pub time_limit: Option<f64>,
    /// Probability of accepting an average uphill move at the start.
    pub initial_acceptance: f64,
    /// Final temperature as a fraction of the initial one.
    pub final_temperature_ratio: f64,
    /// Moves of the steepest descent that follows the annealing.
    pub descent_moves: usize,
    /// Moves per descent step that get a fresh battery dispatch.
    pub descent_candidates: usize,
    /// The descent runs from this many of the best distinct placements seen.
    pub descent_starts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            num_warm_starts: 46,
            iterations: 2000,
            seed: 0,
            time_limit: None,
            initial_acceptance: 0.3,
            final_temperature_ratio: 1e-2,
            descent_moves: 20,
            descent_candidates: 4,
            descent_starts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport<T> {
    pub policy: BatteryPolicy,
    pub seed: u64,
    pub num_warm_starts: usize,
    /// Cost of each warm start with idle batteries, against the forecast.
    pub warm_start_costs: Vec<T>,
    pub best_warm_start: usize,
    pub best_warm_start_cost: T,
    /// Cost after the first battery dispatch on the best warm start.
    pub initial_cost: T,
    pub iterations: usize,
    pub accepted_moves: usize,
    pub initial_temperature: T,
    pub final_cost: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult<T> {
    pub schedule: Schedule,
    /// Cost against the forecast.
    pub cost: T,
    pub report: RunReport<T>,
}

struct Problem<'a, T: Scalar> {
    inst: &'a Instance<T>,
    calendar: &'a Calendar,
    base: &'a [T],
    prices: &'a [T],
    policy: BatteryPolicy,
    models: Vec<BatteryModel<T>>,
    succ: Vec<Vec<usize>>,
    slots: Vec<Vec<Slot>>,
}

#[derive(Clone)]
struct State<T> {
    placements: Vec<Placement>,
    keys: Vec<Option<usize>>,
    usage: RoomUsage,
    recurring: Vec<T>,
    plan: Vec<Vec<BatteryAction>>,
    cost: T,
}

impl<T: Scalar> Problem<'_, T> {
    fn load(&self, recurring: &[T]) -> Vec<T> {
        self.base.iter().zip(recurring).map(|(&b, &r)| b + r).collect()
    }

    fn input<'b>(&'b self, load: &'b [T], recurring: &'b [T]) -> DispatchInput<'b, T> {
        DispatchInput { load, recurring, prices: self.prices, calendar: self.calendar }
    }

    fn cost(&self, recurring: &[T], plan: &[Vec<BatteryAction>]) -> T {
        objective(&plan_load(&self.load(recurring), &self.models, plan), self.prices)
    }

    fn state(&self, schedule: &Schedule) -> State<T> {
        let mut placements = schedule.placements.clone();
        placements.sort_by_key(|p| p.activity);
        let mut usage = RoomUsage::new(self.inst.num_buildings(), self.calendar.periods_per_day());
        for p in &placements {
            usage.add(p, self.inst.recurring[p.activity].duration);
        }
        let keys = placements.iter().map(|p| Some(p.slot.week_key(self.calendar))).collect();
        let recurring = activity_load_profile(self.inst, self.calendar, schedule);
        let plan = schedule.battery_plan.clone();
        let cost = self.cost(&recurring, &plan);
        State { placements, keys, usage, recurring, plan, cost }
    }

    fn schedule(&self, s: &State<T>) -> Schedule {
        Schedule { placements: s.placements.clone(), battery_plan: s.plan.clone() }
    }

    fn shift_load(&self, recurring: &mut [T], activity: usize, slot: Slot, sign: T) {
        let act = &self.inst.recurring[activity];
        let ppd = self.calendar.periods_per_day();
        for day in self.calendar.days_on(slot.weekday) {
            for k in 0..act.duration {
                let t = day * ppd + slot.period + k;
                recurring[t] = recurring[t] + sign * act.load;
            }
        }
    }

    /// Battery plan after a change of the recurring load: actions the policy
    /// no longer allows are dropped and the rest is polished.
    fn replan(&self, recurring: &[T], plan: &[Vec<BatteryAction>]) -> Vec<Vec<BatteryAction>> {
        if self.models.is_empty() || self.policy == BatteryPolicy::Conservative {
            return plan.to_vec();
        }
        let load = self.load(recurring);
        let input = self.input(&load, recurring);
        improve_plan(&input, &self.inst.batteries, self.policy, plan, false)
    }

    fn full_dispatch(&self, s: &mut State<T>) {
        if self.models.is_empty() || self.policy == BatteryPolicy::Conservative {
            return;
        }
        let load = self.load(&s.recurring);
        let input = self.input(&load, &s.recurring);
        let plan = improve_plan(&input, &self.inst.batteries, self.policy, &s.plan, true);
        let cost = self.cost(&s.recurring, &plan);
        if cost < s.cost {
            s.plan = plan;
            s.cost = cost;
        }
    }

    /// Proposes new placements for one or two activities, already checked
    /// for working hours, precedence and rooms against `s`.
    fn propose<R: Rng>(&self, s: &mut State<T>, rng: &mut R) -> Option<Vec<Placement>> {
        let n = s.placements.len();
        let roll: f64 = rng.random();
        let a = rng.random_range(0..n);
        let pick = |a: usize, rng: &mut R| self.slots[a][rng.random_range(0..self.slots[a].len())];
        if roll < 0.5 || (n < 2 && roll < 0.9) {
            let slot = pick(a, rng);
            if slot == s.placements[a].slot {
                return None;
            }
            self.relocate(s, &[(a, slot)], rng)
        } else if roll < 0.9 {
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            // both moved at once gets past pairs that block each other
            let (sa, sb) = if roll < 0.7 {
                (s.placements[b].slot, s.placements[a].slot)
            } else {
                (pick(a, rng), pick(b, rng))
            };
            if sa == s.placements[a].slot && sb == s.placements[b].slot {
                return None;
            }
            self.relocate(s, &[(a, sa), (b, sb)], rng)
        } else {
            // same slot, rooms drawn again
            self.relocate(s, &[(a, s.placements[a].slot)], rng)
        }
    }

    fn relocate<R: Rng>(&self, s: &mut State<T>, moves: &[(usize, Slot)], rng: &mut R) -> Option<Vec<Placement>> {
        let layout = self.calendar.layout();
        for &(a, slot) in moves {
            let d = self.inst.recurring[a].duration;
            if slot.period < layout.work_start || slot.period + d > layout.work_end {
                return None;
            }
        }
        for &(a, _) in moves {
            s.usage.remove(&s.placements[a], self.inst.recurring[a].duration);
            s.keys[a] = None;
        }
        let mut out = Vec::new();
        let mut ok = true;
        for &(a, slot) in moves {
            let key = slot.week_key(self.calendar);
            let rooms = if precedence_ok(self.inst, &self.succ, &s.keys, a, key) {
                s.usage.assign_random(self.inst, a, slot, rng)
            } else {
                None
            };
            let Some(rooms) = rooms else {
                ok = false;
                break;
            };
            let p = Placement { activity: a, slot, rooms };
            s.usage.add(&p, self.inst.recurring[a].duration);
            s.keys[a] = Some(key);
            out.push(p);
        }
        for p in &out {
            s.usage.remove(p, self.inst.recurring[p.activity].duration);
        }
        for &(a, _) in moves {
            s.usage.add(&s.placements[a], self.inst.recurring[a].duration);
            s.keys[a] = Some(s.placements[a].slot.week_key(self.calendar));
        }
        ok.then_some(out)
    }

    /// Recurring load after replacing some placements, or `None` when no
    /// activity changes slot.
    fn moved_load(&self, s: &State<T>, new: &[Placement]) -> Option<Vec<T>> {
        let mut recurring = s.recurring.clone();
        let mut moved = false;
        for p in new {
            let old = s.placements[p.activity].slot;
            if old != p.slot {
                moved = true;
                self.shift_load(&mut recurring, p.activity, old, -T::one());
                self.shift_load(&mut recurring, p.activity, p.slot, T::one());
            }
        }
        moved.then_some(recurring)
    }

    /// Recurring load, plan and cost after replacing some placements. The
    /// battery plan is repaired and polished for the new load.
    fn evaluate(&self, s: &State<T>, new: &[Placement]) -> (Vec<T>, Vec<Vec<BatteryAction>>, T) {
        let Some(recurring) = self.moved_load(s, new) else {
            return (s.recurring.clone(), s.plan.clone(), s.cost);
        };
        let plan = self.replan(&recurring, &s.plan);
        let cost = self.cost(&recurring, &plan);
        (recurring, plan, cost)
    }

    /// A fresh greedy dispatch for `recurring`, kept only if it beats the
    /// polished `plan`. The forced-discharge search is too slow to repeat,
    /// so under that policy the unforced dispatch is repaired instead.
    fn redispatch(&self, recurring: &[T], plan: Vec<Vec<BatteryAction>>, cost: T) -> (Vec<Vec<BatteryAction>>, T) {
        if self.models.is_empty() || self.policy == BatteryPolicy::Conservative {
            return (plan, cost);
        }
        let load = self.load(recurring);
        let input = self.input(&load, recurring);
        let build = match self.policy {
            BatteryPolicy::ForcedDischarge => BatteryPolicy::NoForcedDischarge,
            p => p,
        };
        let built = improve_plan(&input, &self.inst.batteries, build, &plan, true);
        let built = repair_plan(&input, &self.models, self.policy, &built);
        let c = self.cost(recurring, &built);
        if c < cost {
            (built, c)
        } else {
            (plan, cost)
        }
    }

    /// Steepest descent over single-activity moves. All moves are ranked
    /// with the current plan repaired, the best few are polished and the
    /// `candidates` best of those are dispatched afresh. Stops after `moves`
    /// moves or when none improves.
    fn descend<R: Rng>(&self, s: &mut State<T>, moves: usize, candidates: usize, rng: &mut R) {
        type Move<T> = (Vec<Placement>, Vec<T>, Vec<Vec<BatteryAction>>, T);
        let candidates = candidates.max(1);
        for _ in 0..moves {
            let mut ranked: Vec<(T, Vec<Placement>)> = Vec::new();
            for a in 0..s.placements.len() {
                for &slot in &self.slots[a] {
                    if slot == s.placements[a].slot {
                        continue;
                    }
                    let Some(new) = self.relocate(s, &[(a, slot)], rng) else { continue };
                    let Some(recurring) = self.moved_load(s, &new) else { continue };
                    let cost = if self.models.is_empty() || self.policy == BatteryPolicy::Conservative {
                        self.cost(&recurring, &s.plan)
                    } else {
                        let load = self.load(&recurring);
                        let plan = repair_plan(&self.input(&load, &recurring), &self.models, self.policy, &s.plan);
                        self.cost(&recurring, &plan)
                    };
                    ranked.push((cost, new));
                }
            }
            ranked.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite cost"));
            let mut polished: Vec<Move<T>> = ranked
                .into_iter()
                .take(DESCENT_POLISHED.max(candidates))
                .map(|(_, new)| {
                    let (recurring, plan, cost) = self.evaluate(s, &new);
                    (new, recurring, plan, cost)
                })
                .collect();
            polished.sort_by(|x, y| x.3.partial_cmp(&y.3).expect("finite cost"));
            let mut found: Option<Move<T>> = None;
            for (new, recurring, plan, cost) in polished.into_iter().take(candidates) {
                let (plan, cost) = self.redispatch(&recurring, plan, cost);
                let bar = found.as_ref().map_or(s.cost, |f| f.3);
                if cost < bar - improvement_tolerance(s.cost) {
                    found = Some((new, recurring, plan, cost));
                }
            }
            let Some((new, recurring, plan, cost)) = found else { break };
            self.commit(s, new, recurring, plan, cost);
        }
    }

    fn commit(&self, s: &mut State<T>, new: Vec<Placement>, recurring: Vec<T>, plan: Vec<Vec<BatteryAction>>, cost: T) {
        for p in new {
            let a = p.activity;
            s.usage.remove(&s.placements[a], self.inst.recurring[a].duration);
            s.usage.add(&p, self.inst.recurring[a].duration);
            s.keys[a] = Some(p.slot.week_key(self.calendar));
            s.placements[a] = p;
        }
        s.recurring = recurring;
        s.plan = plan;
        s.cost = cost;
    }
}

/// Builds a schedule for the forecast base load. The result is feasible,
/// satisfies `policy` and costs no more (against the forecast) than the
/// best warm start. Runs are reproducible for a fixed seed when no time
/// limit is set.
pub fn optimize<T: Scalar>(
    inst: &Instance<T>,
    calendar: &Calendar,
    forecast: &NetLoadSeries<T>,
    prices: &PriceSeries<T>,
    policy: BatteryPolicy,
    config: &OptimizerConfig,
) -> Result<OptimizeResult<T>, SchedulerError> {
    let clock = Instant::now();
    let v = validate_instance(inst);
    if !v.is_empty() {
        return Err(SchedulerError::InvalidInstance(v));
    }
    let h = calendar.horizon();
    for len in [forecast.len(), prices.len()] {
        if len != h {
            return Err(SchedulerError::Eval(EvalError::HorizonMismatch { expected: h, found: len }));
        }
    }
    if config.num_warm_starts == 0 {
        return Err(SchedulerError::Config("at least one warm start is required".into()));
    }
    let problem = Problem {
        inst,
        calendar,
        base: forecast.values(),
        prices: prices.values(),
        policy,
        models: BatteryModel::from_instance(inst),
        succ: inst.successors(),
        slots: inst.recurring.iter().map(|a| candidate_slots(calendar, a.duration)).collect(),
    };

    let starts = conservative_warm_starts(inst, calendar, config.num_warm_starts, config.seed)?;
    let mut warm_costs = Vec::with_capacity(starts.len());
    for s in &starts {
        warm_costs.push(total_cost(forecast, prices, inst, calendar, s).map_err(SchedulerError::Eval)?);
    }
    let best_warm = (0..warm_costs.len())
        .min_by(|&a, &b| warm_costs[a].partial_cmp(&warm_costs[b]).expect("finite cost").then(a.cmp(&b)))
        .expect("at least one warm start");

    let mut current = problem.state(&starts[best_warm]);
    problem.full_dispatch(&mut current);
    let initial_cost = current.cost;
    let pool = config.descent_starts.max(1);
    let mut elite = vec![current.clone()];

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut iterations = 0;
    let mut accepted = 0;
    let mut temperature = T::zero();
    if inst.num_recurring() > 0 && config.iterations > 0 {
        temperature = initial_temperature(&problem, &mut current, config, &mut rng);
        let t0 = temperature;
        let ratio = config.final_temperature_ratio.clamp(1e-12, 1.0);
        let cooling = T::lit(ratio.powf(1.0 / config.iterations as f64));
        for _ in 0..config.iterations {
            if config.time_limit.is_some_and(|lim| clock.elapsed().as_secs_f64() > lim) {
                break;
            }
            iterations += 1;
            if let Some(new) = problem.propose(&mut current, &mut rng) {
                let (recurring, plan, cost) = problem.evaluate(&current, &new);
                let delta = cost - current.cost;
                let accept = delta <= T::zero()
                    || (temperature > T::zero() && T::lit(rng.random::<f64>()) < (-delta / temperature).exp());
                if accept {
                    accepted += 1;
                    problem.commit(&mut current, new, recurring, plan, cost);
                    remember(&mut elite, &current, pool);
                }
            }
            temperature = temperature * cooling;
        }
        temperature = t0;
    }
    elite.sort_by(|a, b| a.cost.partial_cmp(&b.cost).expect("finite cost"));
    if inst.num_recurring() > 0 && config.descent_moves > 0 {
        for e in &mut elite {
            let (plan, cost) = problem.redispatch(&e.recurring, e.plan.clone(), e.cost);
            e.plan = plan;
            e.cost = cost;
            problem.descend(e, config.descent_moves, config.descent_candidates, &mut rng);
        }
    }
    let mut best = elite
        .into_iter()
        .min_by(|a, b| a.cost.partial_cmp(&b.cost).expect("finite cost"))
        .expect("at least one state");
    problem.full_dispatch(&mut best);

    let schedule = problem.schedule(&best);
    let violations = check_feasibility(inst, calendar, &schedule, Some(policy));
    if !violations.is_empty() {
        return Err(SchedulerError::Infeasible(violations));
    }
    let cost = total_cost(forecast, prices, inst, calendar, &schedule).map_err(SchedulerError::Eval)?;
    let report = RunReport {
        policy,
        seed: config.seed,
        num_warm_starts: config.num_warm_starts,
        best_warm_start: best_warm,
        best_warm_start_cost: warm_costs[best_warm],
        warm_start_costs: warm_costs,
        initial_cost,
        iterations,
        accepted_moves: accepted,
        initial_temperature: temperature,
        final_cost: cost,
    };
    Ok(OptimizeResult { schedule, cost, report })
}

/// Moves per descent step whose battery plan is polished.
const DESCENT_POLISHED: usize = 16;

/// Keeps the `limit` cheapest states with distinct placements.
fn remember<T: Scalar>(elite: &mut Vec<State<T>>, s: &State<T>, limit: usize) {
    let same = |e: &State<T>| e.placements.iter().zip(&s.placements).all(|(a, b)| a.slot == b.slot);
    if let Some(i) = elite.iter().position(same) {
        if s.cost < elite[i].cost {
            elite[i] = s.clone();
        }
    } else if elite.len() < limit {
        elite.push(s.clone());
    } else if let Some(i) = (0..elite.len()).max_by(|&a, &b| elite[a].cost.partial_cmp(&elite[b].cost).expect("finite cost")) {
        if s.cost < elite[i].cost {
            elite[i] = s.clone();
        }
    }
}

fn improvement_tolerance<T: Scalar>(cost: T) -> T {
    (cost.abs() + T::one()) * T::epsilon() * T::lit(64.0)
}

/// Temperature at which an average uphill move from the start is accepted
/// with the configured probability.
fn initial_temperature<T: Scalar, R: Rng>(
    problem: &Problem<T>,
    s: &mut State<T>,
    config: &OptimizerConfig,
    rng: &mut R,
) -> T {
    let mut sum = T::zero();
    let mut count = 0usize;
    for _ in 0..50 {
        if let Some(new) = problem.propose(s, rng) {
            let (_, _, cost) = problem.evaluate(s, &new);
            if cost > s.cost {
                sum = sum + (cost - s.cost);
                count += 1;
            }
        }
    }
    let p = config.initial_acceptance.clamp(1e-6, 1.0 - 1e-6);
    if count == 0 {
        return (s.cost.abs() + T::one()) * T::lit(1e-6);
    }
    sum / T::from_usize_lossy(count) / T::lit(-p.ln())
}

/// Cost of a schedule once the actual base load is known.
pub fn evaluate_against_actual<T: Scalar>(
    schedule: &Schedule,
    actual: &NetLoadSeries<T>,
    prices: &PriceSeries<T>,
    inst: &Instance<T>,
    calendar: &Calendar,
) -> Result<T, EvalError> {
    total_cost(actual, prices, inst, calendar, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppoi::{parse_instance, EXAMPLE_INSTANCE};
    use crate::series::Weekday;

    fn small_config(seed: u64) -> OptimizerConfig {
        OptimizerConfig { num_warm_starts: 4, iterations: 200, seed, ..Default::default() }
    }

    #[test]
    fn empty_instance_costs_base_load() {
        let inst: Instance<f64> = parse_instance("ppoi 0 0 0 0 0").unwrap();
        let cal = Calendar::starting_on(Weekday::Mon, 1).unwrap();
        let base = NetLoadSeries(vec![20.0; 96]);
        let prices = PriceSeries(vec![30.0; 96]);
        let r = optimize(&inst, &cal, &base, &prices, BatteryPolicy::VeryLiberal, &small_config(1)).unwrap();
        assert!(r.schedule.placements.is_empty());
        assert_eq!(r.cost, objective(&base.0, &prices.0));
    }

    #[test]
    fn example_instance_beats_warm_starts() {
        let inst: Instance<f64> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        let cal = Calendar::month(2020, 11).unwrap();
        let base = NetLoadSeries((0..cal.horizon()).map(|t| 40.0 + 30.0 * ((t % 96) as f64 / 96.0)).collect());
        let prices = PriceSeries((0..cal.horizon()).map(|t| if t % 96 < 28 { 20.0 } else { 90.0 }).collect());
        for policy in BatteryPolicy::ALL {
            let r = optimize(&inst, &cal, &base, &prices, policy, &small_config(3)).unwrap();
            assert!(check_feasibility(&inst, &cal, &r.schedule, Some(policy)).is_empty());
            assert!(r.cost <= r.report.best_warm_start_cost, "{policy}");
            let again = optimize(&inst, &cal, &base, &prices, policy, &small_config(3)).unwrap();
            assert_eq!(again.schedule, r.schedule);
        }
    }

    #[test]
    fn actual_equals_forecast_cost() {
        let inst: Instance<f64> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        let cal = Calendar::month(2020, 11).unwrap();
        let base = NetLoadSeries(vec![35.0; cal.horizon()]);
        let prices = PriceSeries(vec![60.0; cal.horizon()]);
        let r = optimize(&inst, &cal, &base, &prices, BatteryPolicy::NoForcedDischarge, &small_config(0)).unwrap();
        let c = evaluate_against_actual(&r.schedule, &base, &prices, &inst, &cal).unwrap();
        assert_eq!(c, r.cost);
    }
}
