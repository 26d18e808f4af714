//! Schedules, their feasibility and their energy cost.
//!
//! The cost of a grid-load profile `l` under prices `e` ($/MWh) is
//!
//! ```text
//! sum_t 0.25 * l_t * e_t / 1000  +  0.005 * (max_t l_t)^2
//! ```
//!
//! where `l_t` is base load plus recurring activity load plus battery grid
//! effect, all in kW, over 15-minute periods.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{max_of, Scalar};
use crate::ppoi::{Battery, Instance, RoomSize};
use crate::scheduler::policy::{policy_check, BatteryPolicy, PolicyViolation};
use crate::series::{Calendar, NetLoadSeries, PriceSeries, Weekday};

/// Hours per period used in energy accounting.
pub const PERIOD_HOURS: f64 = 0.25;
/// Weight of the squared monthly peak.
pub const PEAK_WEIGHT: f64 = 0.005;

/// Weekly start time of a recurring activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub weekday: Weekday,
    /// Period of the day the activity starts in.
    pub period: usize,
}

impl Slot {
    pub fn new(weekday: Weekday, period: usize) -> Self {
        Self { weekday, period }
    }

    /// Start position in first-week order (days counted from the first day of the month).
    pub fn week_key(&self, calendar: &Calendar) -> usize {
        calendar.week_offset(self.weekday) * calendar.periods_per_day() + self.period
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub activity: usize,
    #[serde(flatten)]
    pub slot: Slot,
    /// One `(building, size)` entry per room used.
    pub rooms: Vec<(usize, RoomSize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BatteryAction {
    #[serde(rename = "C")]
    Charge,
    #[serde(rename = "D")]
    Discharge,
    #[serde(rename = "I")]
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub placements: Vec<Placement>,
    /// `battery_plan[b][t]`
    pub battery_plan: Vec<Vec<BatteryAction>>,
}

impl Schedule {
    /// A schedule with the given placements and every battery idle.
    pub fn with_idle_batteries(placements: Vec<Placement>, batteries: usize, horizon: usize) -> Self {
        Self { placements, battery_plan: vec![vec![BatteryAction::Idle; horizon]; batteries] }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn placement_of(&self, activity: usize) -> Option<&Placement> {
        self.placements.iter().find(|p| p.activity == activity)
    }
}

/// Full-power battery behaviour per period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryModel<T> {
    pub capacity: T,
    /// Grid draw while charging, kW.
    pub power: T,
    /// Energy stored by one charging period, kWh.
    pub charge_store: T,
    /// Energy drained by one discharging period, kWh.
    pub discharge_drain: T,
    /// Grid relief while discharging, kW.
    pub discharge_relief: T,
}

impl<T: Scalar> BatteryModel<T> {
    pub fn new(b: &Battery<T>) -> Self {
        let h = T::lit(PERIOD_HOURS);
        let root = b.efficiency.sqrt();
        Self {
            capacity: b.capacity,
            power: b.max_power,
            charge_store: h * b.max_power * root,
            discharge_drain: h * b.max_power,
            discharge_relief: root * b.max_power,
        }
    }

    pub fn from_instance(inst: &Instance<T>) -> Vec<Self> {
        inst.batteries.iter().map(Self::new).collect()
    }

    /// Slack allowed on state-of-charge bounds for rounding drift.
    pub fn soc_tol(&self) -> T {
        self.capacity * T::epsilon() * T::lit(4096.0)
    }

    /// Change in stored energy (kWh).
    pub fn soc_delta(&self, a: BatteryAction) -> T {
        match a {
            BatteryAction::Charge => self.charge_store,
            BatteryAction::Discharge => -self.discharge_drain,
            BatteryAction::Idle => T::zero(),
        }
    }

    /// Change in grid load (kW).
    pub fn grid_delta(&self, a: BatteryAction) -> T {
        match a {
            BatteryAction::Charge => self.power,
            BatteryAction::Discharge => -self.discharge_relief,
            BatteryAction::Idle => T::zero(),
        }
    }

    /// State of charge after each period, starting empty. No bound checks.
    pub fn trajectory(&self, actions: &[BatteryAction]) -> Vec<T> {
        let mut soc = T::zero();
        actions
            .iter()
            .map(|&a| {
                soc = soc + self.soc_delta(a);
                soc
            })
            .collect()
    }
}

/// Objective value of a grid-load profile.
pub fn objective<T: Scalar>(load: &[T], prices: &[T]) -> T {
    debug_assert_eq!(load.len(), prices.len());
    let energy: T = load.iter().zip(prices).map(|(&l, &e)| l * e).sum();
    let peak = max_of(load).unwrap_or_else(T::zero);
    T::lit(PERIOD_HOURS) * energy / T::lit(1000.0) + T::lit(PEAK_WEIGHT) * peak * peak
}

/// Load added by recurring activities, repeated on every matching day of the month.
pub fn activity_load_profile<T: Scalar>(inst: &Instance<T>, calendar: &Calendar, schedule: &Schedule) -> Vec<T> {
    let mut out = vec![T::zero(); calendar.horizon()];
    let ppd = calendar.periods_per_day();
    for p in &schedule.placements {
        let Some(act) = inst.recurring.get(p.activity) else { continue };
        for day in calendar.days_on(p.slot.weekday) {
            for k in 0..act.duration {
                let pod = p.slot.period + k;
                if pod < ppd {
                    let t = day * ppd + pod;
                    out[t] = out[t] + act.load;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryProfile<T> {
    /// Net grid effect of all batteries, kW per period.
    pub grid_effect: Vec<T>,
    /// `soc[b][t]`: stored energy after period `t`, kWh.
    pub soc: Vec<Vec<T>>,
}

fn plan_shape_violations<T: Scalar>(inst: &Instance<T>, horizon: usize, schedule: &Schedule) -> Vec<ScheduleViolation> {
    let plan = &schedule.battery_plan;
    let bad_len = plan.iter().any(|row| row.len() != horizon);
    if plan.len() != inst.num_batteries() || bad_len {
        return vec![ScheduleViolation::PlanShape {
            batteries: inst.num_batteries(),
            periods: horizon,
            found_batteries: plan.len(),
            found_periods: plan.iter().map(Vec::len).collect(),
        }];
    }
    Vec::new()
}

fn soc_violations<T: Scalar>(models: &[BatteryModel<T>], plan: &[Vec<BatteryAction>]) -> Vec<ScheduleViolation> {
    let mut out = Vec::new();
    for (b, (m, row)) in models.iter().zip(plan).enumerate() {
        let tol = m.soc_tol();
        for (t, soc) in m.trajectory(row).into_iter().enumerate() {
            if soc < -tol {
                out.push(ScheduleViolation::SocBelowZero { battery: b, period: t });
                break;
            }
            if soc > m.capacity + tol {
                out.push(ScheduleViolation::SocAboveCapacity { battery: b, period: t });
                break;
            }
        }
    }
    out
}

/// Grid effect and stored-energy trajectories of the battery plan.
pub fn battery_profile<T: Scalar>(
    inst: &Instance<T>,
    horizon: usize,
    schedule: &Schedule,
) -> Result<BatteryProfile<T>, EvalError> {
    let mut v = plan_shape_violations(inst, horizon, schedule);
    if !v.is_empty() {
        return Err(EvalError::Infeasible(v));
    }
    let models = BatteryModel::from_instance(inst);
    v = soc_violations(&models, &schedule.battery_plan);
    if !v.is_empty() {
        return Err(EvalError::Infeasible(v));
    }
    let mut grid_effect = vec![T::zero(); horizon];
    for (m, row) in models.iter().zip(&schedule.battery_plan) {
        for (g, &a) in grid_effect.iter_mut().zip(row) {
            *g = *g + m.grid_delta(a);
        }
    }
    let soc = models.iter().zip(&schedule.battery_plan).map(|(m, row)| m.trajectory(row)).collect();
    Ok(BatteryProfile { grid_effect, soc })
}

/// Grid load split into its three sources.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile<T> {
    pub base: Vec<T>,
    pub activities: Vec<T>,
    pub battery: Vec<T>,
}

impl<T: Scalar> LoadProfile<T> {
    pub fn build(
        base: &NetLoadSeries<T>,
        inst: &Instance<T>,
        calendar: &Calendar,
        schedule: &Schedule,
    ) -> Result<Self, EvalError> {
        if base.len() != calendar.horizon() {
            return Err(EvalError::HorizonMismatch { expected: calendar.horizon(), found: base.len() });
        }
        Ok(Self {
            base: base.values().to_vec(),
            activities: activity_load_profile(inst, calendar, schedule),
            battery: battery_profile(inst, calendar.horizon(), schedule)?.grid_effect,
        })
    }

    /// `l_t` per period.
    pub fn total(&self) -> Vec<T> {
        self.base
            .iter()
            .zip(&self.activities)
            .zip(&self.battery)
            .map(|((&b, &a), &c)| b + a + c)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleViolation {
    MissingPlacement { activity: usize },
    DuplicatePlacement { activity: usize },
    UnknownActivity { activity: usize },
    NotAWeekday { activity: usize, weekday: Weekday },
    OutsideWorkingHours { activity: usize, period: usize, duration: usize },
    RoomCount { activity: usize, expected: usize, found: usize },
    RoomSizeMismatch { activity: usize, expected: RoomSize, found: RoomSize },
    UnknownBuilding { activity: usize, building: usize },
    RoomsExceeded { building: usize, size: RoomSize, weekday: Weekday, period: usize, used: usize, available: usize },
    Precedence { before: usize, after: usize },
    PlanShape { batteries: usize, periods: usize, found_batteries: usize, found_periods: Vec<usize> },
    SocBelowZero { battery: usize, period: usize },
    SocAboveCapacity { battery: usize, period: usize },
    Policy { policy: BatteryPolicy, violation: PolicyViolation },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ScheduleViolation::*;
        match self {
            MissingPlacement { activity } => write!(f, "activity {activity} is not placed"),
            DuplicatePlacement { activity } => write!(f, "activity {activity} is placed more than once"),
            UnknownActivity { activity } => write!(f, "placement for unknown activity {activity}"),
            NotAWeekday { activity, weekday } => write!(f, "activity {activity} placed on {weekday}"),
            OutsideWorkingHours { activity, period, duration } => {
                write!(f, "activity {activity} at period {period} for {duration} periods leaves working hours")
            }
            RoomCount { activity, expected, found } => {
                write!(f, "activity {activity} needs {expected} rooms, {found} allocated")
            }
            RoomSizeMismatch { activity, expected, found } => {
                write!(f, "activity {activity} needs {expected} rooms, got a {found} room")
            }
            UnknownBuilding { activity, building } => write!(f, "activity {activity} uses unknown building {building}"),
            RoomsExceeded { building, size, weekday, period, used, available } => write!(
                f,
                "building {building} uses {used} {size} rooms on {weekday} period {period}, {available} available"
            ),
            Precedence { before, after } => write!(f, "activity {before} must finish before activity {after} starts"),
            PlanShape { batteries, periods, found_batteries, .. } => write!(
                f,
                "battery plan must be {batteries} x {periods}, found {found_batteries} rows of mismatched length"
            ),
            SocBelowZero { battery, period } => write!(f, "battery {battery} drains below empty at period {period}"),
            SocAboveCapacity { battery, period } => write!(f, "battery {battery} exceeds capacity at period {period}"),
            Policy { policy, violation } => write!(f, "{policy} policy: {violation}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("infeasible schedule: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Infeasible(Vec<ScheduleViolation>),
    #[error("series length {found} does not match horizon {expected}")]
    HorizonMismatch { expected: usize, found: usize },
}

fn placement_violations<T: Scalar>(inst: &Instance<T>, calendar: &Calendar, schedule: &Schedule) -> Vec<ScheduleViolation> {
    use ScheduleViolation::*;
    let layout = calendar.layout();
    let mut out = Vec::new();
    let mut seen = vec![0usize; inst.num_recurring()];
    for p in &schedule.placements {
        let Some(act) = inst.recurring.get(p.activity) else {
            out.push(UnknownActivity { activity: p.activity });
            continue;
        };
        seen[p.activity] += 1;
        if seen[p.activity] == 2 {
            out.push(DuplicatePlacement { activity: p.activity });
        }
        if !p.slot.weekday.is_weekday() {
            out.push(NotAWeekday { activity: p.activity, weekday: p.slot.weekday });
        }
        if p.slot.period < layout.work_start || p.slot.period + act.duration > layout.work_end {
            out.push(OutsideWorkingHours { activity: p.activity, period: p.slot.period, duration: act.duration });
        }
        if p.rooms.len() != act.rooms_required {
            out.push(RoomCount { activity: p.activity, expected: act.rooms_required, found: p.rooms.len() });
        }
        for &(b, size) in &p.rooms {
            if b >= inst.num_buildings() {
                out.push(UnknownBuilding { activity: p.activity, building: b });
            }
            if size != act.room_size {
                out.push(RoomSizeMismatch { activity: p.activity, expected: act.room_size, found: size });
            }
        }
    }
    for (a, &n) in seen.iter().enumerate() {
        if n == 0 {
            out.push(MissingPlacement { activity: a });
        }
    }
    out
}

fn room_violations<T: Scalar>(inst: &Instance<T>, calendar: &Calendar, schedule: &Schedule) -> Vec<ScheduleViolation> {
    let ppd = calendar.periods_per_day();
    // (building, size, weekday, period of day) -> rooms in use
    let mut usage: BTreeMap<(usize, RoomSize, Weekday, usize), usize> = BTreeMap::new();
    for p in &schedule.placements {
        let Some(act) = inst.recurring.get(p.activity) else { continue };
        for &(b, size) in &p.rooms {
            for k in 0..act.duration {
                if p.slot.period + k < ppd {
                    *usage.entry((b, size, p.slot.weekday, p.slot.period + k)).or_default() += 1;
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut reported = std::collections::BTreeSet::new();
    for ((b, size, wd, period), used) in usage {
        let available = inst.buildings.get(b).map_or(0, |bd| bd.rooms(size));
        if used > available && reported.insert((b, size, wd)) {
            out.push(ScheduleViolation::RoomsExceeded { building: b, size, weekday: wd, period, used, available });
        }
    }
    out
}

fn precedence_violations<T: Scalar>(inst: &Instance<T>, calendar: &Calendar, schedule: &Schedule) -> Vec<ScheduleViolation> {
    let mut out = Vec::new();
    for act in &inst.recurring {
        let Some(after) = schedule.placement_of(act.id) else { continue };
        for &pred in &act.precedences {
            let (Some(before), Some(pact)) = (schedule.placement_of(pred), inst.recurring.get(pred)) else { continue };
            if before.slot.week_key(calendar) + pact.duration > after.slot.week_key(calendar) {
                out.push(ScheduleViolation::Precedence { before: pred, after: act.id });
            }
        }
    }
    out
}

/// Every rule the schedule breaks; empty means feasible. When `policy` is
/// given its battery rules are checked as well.
pub fn check_feasibility<T: Scalar>(
    inst: &Instance<T>,
    calendar: &Calendar,
    schedule: &Schedule,
    policy: Option<BatteryPolicy>,
) -> Vec<ScheduleViolation> {
    let mut out = placement_violations(inst, calendar, schedule);
    out.extend(room_violations(inst, calendar, schedule));
    out.extend(precedence_violations(inst, calendar, schedule));
    let shape = plan_shape_violations(inst, calendar.horizon(), schedule);
    let shape_ok = shape.is_empty();
    out.extend(shape);
    if shape_ok {
        out.extend(soc_violations(&BatteryModel::from_instance(inst), &schedule.battery_plan));
        if let Some(policy) = policy {
            out.extend(
                policy_check(policy, inst, calendar, schedule)
                    .into_iter()
                    .map(|violation| ScheduleViolation::Policy { policy, violation }),
            );
        }
    }
    out
}

/// Energy cost of a feasible schedule against a base-load series.
pub fn total_cost<T: Scalar>(
    base: &NetLoadSeries<T>,
    prices: &PriceSeries<T>,
    inst: &Instance<T>,
    calendar: &Calendar,
    schedule: &Schedule,
) -> Result<T, EvalError> {
    if prices.len() != calendar.horizon() {
        return Err(EvalError::HorizonMismatch { expected: calendar.horizon(), found: prices.len() });
    }
    let v = check_feasibility(inst, calendar, schedule, None);
    if !v.is_empty() {
        return Err(EvalError::Infeasible(v));
    }
    let profile = LoadProfile::build(base, inst, calendar, schedule)?;
    Ok(objective(&profile.total(), prices.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppoi::{parse_instance, EXAMPLE_INSTANCE};
    use crate::series::DayLayout;
    use proptest::prelude::*;

    fn fig1() -> Instance<f64> {
        parse_instance(EXAMPLE_INSTANCE).unwrap()
    }

    fn nov() -> Calendar {
        Calendar::month(2020, 11).unwrap()
    }

    fn place(activity: usize, weekday: Weekday, period: usize, rooms: &[(usize, RoomSize)]) -> Placement {
        Placement { activity, slot: Slot::new(weekday, period), rooms: rooms.to_vec() }
    }

    /// A feasible placement of the example instance: r2 then r0 on Monday.
    fn fig1_schedule(cal: &Calendar) -> Schedule {
        use RoomSize::*;
        let placements = vec![
            place(0, Weekday::Mon, 40, &[(0, Large)]),
            place(1, Weekday::Tue, 36, &[(0, Small), (1, Small)]),
            place(2, Weekday::Mon, 36, &[(0, Large), (2, Large)]),
            place(3, Weekday::Wed, 50, &[(1, Small)]),
        ];
        Schedule::with_idle_batteries(placements, 1, cal.horizon())
    }

    #[test]
    fn objective_hand_case() {
        assert_eq!(objective(&[100.0; 4], &[50.0; 4]), 55.0);
        assert_eq!(objective(&[0.0; 4], &[50.0; 4]), 0.0);
        assert_eq!(objective::<f64>(&[], &[]), 0.0);
    }

    #[test]
    fn negative_peak_is_squared_as_is() {
        let v = objective(&[-10.0f64, -20.0], &[0.0, 0.0]);
        assert!((v - 0.005 * 100.0).abs() < 1e-12);
    }

    #[test]
    fn example_schedule_is_feasible() {
        let cal = nov();
        let s = fig1_schedule(&cal);
        assert_eq!(check_feasibility(&fig1(), &cal, &s, None), vec![]);
    }

    #[test]
    fn end_to_start_precedence_is_satisfied() {
        // r2 occupies 9:00-10:00 Monday, r0 starts at 10:00
        let cal = nov();
        let s = fig1_schedule(&cal);
        assert!(precedence_violations(&fig1(), &cal, &s).is_empty());
        let mut late = s.clone();
        late.placements[0].slot.period = 39;
        assert_eq!(
            precedence_violations(&fig1(), &cal, &late),
            vec![ScheduleViolation::Precedence { before: 2, after: 0 }]
        );
    }

    #[test]
    fn working_hours_boundary() {
        let cal = nov();
        let mut s = fig1_schedule(&cal);
        s.placements[3].slot.period = 64; // 4 periods: ends exactly at 17:00
        assert!(check_feasibility(&fig1(), &cal, &s, None).is_empty());
        s.placements[3].slot.period = 66;
        assert!(check_feasibility(&fig1(), &cal, &s, None)
            .iter()
            .any(|v| matches!(v, ScheduleViolation::OutsideWorkingHours { activity: 3, .. })));
    }

    #[test]
    fn room_clash() {
        let inst: Instance<f64> =
            parse_instance("ppoi 1 0 0 2 0\nb 0 0 1\nr 0 1 L 5 4 0\nr 1 1 L 5 4 0").unwrap();
        let cal = nov();
        let s = Schedule::with_idle_batteries(
            vec![
                place(0, Weekday::Mon, 40, &[(0, RoomSize::Large)]),
                place(1, Weekday::Mon, 42, &[(0, RoomSize::Large)]),
            ],
            0,
            cal.horizon(),
        );
        let v = check_feasibility(&inst, &cal, &s, None);
        assert!(matches!(v.as_slice(), [ScheduleViolation::RoomsExceeded { used: 2, available: 1, .. }]), "{v:?}");
    }

    #[test]
    fn structural_violations() {
        let cal = nov();
        let inst = fig1();
        let mut s = fig1_schedule(&cal);
        s.placements.pop();
        s.placements[0].rooms.push((0, RoomSize::Small));
        s.placements[1].slot.weekday = Weekday::Sat;
        s.placements.push(place(9, Weekday::Mon, 40, &[]));
        s.battery_plan[0].pop();
        let v = check_feasibility(&inst, &cal, &s, None);
        let has = |f: fn(&ScheduleViolation) -> bool| v.iter().any(f);
        assert!(has(|x| matches!(x, ScheduleViolation::MissingPlacement { activity: 3 })));
        assert!(has(|x| matches!(x, ScheduleViolation::RoomCount { activity: 0, .. })));
        assert!(has(|x| matches!(x, ScheduleViolation::RoomSizeMismatch { activity: 0, .. })));
        assert!(has(|x| matches!(x, ScheduleViolation::NotAWeekday { activity: 1, .. })));
        assert!(has(|x| matches!(x, ScheduleViolation::UnknownActivity { activity: 9 })));
        assert!(has(|x| matches!(x, ScheduleViolation::PlanShape { .. })));
    }

    #[test]
    fn activity_repeats_on_every_monday() {
        let inst: Instance<f64> = parse_instance("ppoi 1 0 0 1 0\nb 0 0 1\nr 0 1 L 15 8 0").unwrap();
        let cal = nov();
        let s = Schedule::with_idle_batteries(vec![place(0, Weekday::Mon, 36, &[(0, RoomSize::Large)])], 0, cal.horizon());
        let prof = activity_load_profile(&inst, &cal, &s);
        // Mondays of November 2020 are the 2nd, 9th, 16th, 23rd and 30th (day indices 1, 8, 15, 22, 29)
        let mut expect = vec![0.0; cal.horizon()];
        for d in [1usize, 8, 15, 22, 29] {
            for p in 36..44 {
                expect[d * 96 + p] = 15.0;
            }
        }
        assert_eq!(prof, expect);
    }

    #[test]
    fn activity_profiles_add() {
        let inst: Instance<f64> = parse_instance("ppoi 1 0 0 2 0\nb 0 2 0\nr 0 1 S 10 4 0\nr 1 1 S 5 4 0").unwrap();
        let cal = Calendar::starting_on(Weekday::Mon, 1).unwrap();
        let s = Schedule::with_idle_batteries(
            vec![place(0, Weekday::Mon, 40, &[(0, RoomSize::Small)]), place(1, Weekday::Mon, 42, &[(0, RoomSize::Small)])],
            0,
            cal.horizon(),
        );
        let prof = activity_load_profile(&inst, &cal, &s);
        assert_eq!(&prof[40..46], &[10.0, 10.0, 15.0, 15.0, 5.0, 5.0]);
        let empty = Schedule::with_idle_batteries(vec![], 0, cal.horizon());
        assert!(activity_load_profile(&inst, &cal, &empty).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn battery_single_charge() {
        let inst = fig1();
        let mut s = Schedule::with_idle_batteries(vec![], 1, 4);
        s.battery_plan[0][0] = BatteryAction::Charge;
        let prof = battery_profile(&inst, 4, &s).unwrap();
        assert_eq!(prof.grid_effect, vec![2.0, 0.0, 0.0, 0.0]);
        let stored = 0.25 * 2.0 * 0.87f64.sqrt();
        assert!((prof.soc[0][0] - stored).abs() < 1e-15);
        assert!((stored - 0.4665).abs() < 5e-4);
    }

    #[test]
    fn battery_idle_and_underflow() {
        let inst = fig1();
        let idle = Schedule::with_idle_batteries(vec![], 1, 3);
        let prof = battery_profile(&inst, 3, &idle).unwrap();
        assert!(prof.grid_effect.iter().all(|&g| g == 0.0));
        assert!(prof.soc[0].iter().all(|&s| s == 0.0));
        let mut drain = idle.clone();
        drain.battery_plan[0][0] = BatteryAction::Discharge;
        assert!(matches!(
            battery_profile(&inst, 3, &drain),
            Err(EvalError::Infeasible(v)) if v == vec![ScheduleViolation::SocBelowZero { battery: 0, period: 0 }]
        ));
    }

    #[test]
    fn battery_overflow() {
        // capacity 5 kWh holds 10 charges of 0.466 kWh, not 11
        let inst = fig1();
        let mut s = Schedule::with_idle_batteries(vec![], 1, 11);
        for t in 0..10 {
            s.battery_plan[0][t] = BatteryAction::Charge;
        }
        assert!(battery_profile(&inst, 11, &s).is_ok());
        s.battery_plan[0][10] = BatteryAction::Charge;
        assert!(battery_profile(&inst, 11, &s).is_err());
    }

    #[test]
    fn schedule_json_shape() {
        let cal = Calendar::starting_on(Weekday::Mon, 1)
            .unwrap()
            .with_layout(DayLayout { periods_per_day: 4, work_start: 1, work_end: 3 })
            .unwrap();
        let mut s = Schedule::with_idle_batteries(vec![place(0, Weekday::Mon, 1, &[(2, RoomSize::Large)])], 1, cal.horizon());
        s.battery_plan[0][0] = BatteryAction::Charge;
        s.battery_plan[0][3] = BatteryAction::Discharge;
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "placements": [{"activity": 0, "weekday": "Mon", "period": 1, "rooms": [[2, "L"]]}],
                "battery_plan": [["C", "I", "I", "D"]]
            })
        );
        assert_eq!(Schedule::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn total_cost_rejects_infeasible() {
        let cal = nov();
        let inst = fig1();
        let mut s = fig1_schedule(&cal);
        s.placements[0].slot.period = 38;
        let base = NetLoadSeries(vec![0.0; cal.horizon()]);
        let prices = PriceSeries(vec![10.0; cal.horizon()]);
        assert!(matches!(total_cost(&base, &prices, &inst, &cal, &s), Err(EvalError::Infeasible(_))));
        let ok = fig1_schedule(&cal);
        assert!(total_cost(&base, &prices, &inst, &cal, &ok).unwrap() > 0.0);
    }

    #[test]
    fn decomposition_matches_total() {
        let cal = nov();
        let inst = fig1();
        let mut s = fig1_schedule(&cal);
        s.battery_plan[0][0] = BatteryAction::Charge;
        s.battery_plan[0][1] = BatteryAction::Charge;
        s.battery_plan[0][40] = BatteryAction::Discharge;
        let base = NetLoadSeries((0..cal.horizon()).map(|t| 50.0 + (t % 7) as f64).collect());
        let prof = LoadProfile::build(&base, &inst, &cal, &s).unwrap();
        let l = prof.total();
        let acts = activity_load_profile(&inst, &cal, &s);
        let bat = battery_profile(&inst, cal.horizon(), &s).unwrap().grid_effect;
        for t in 0..cal.horizon() {
            assert_eq!(l[t], base.0[t] + acts[t] + bat[t]);
        }
    }

    proptest! {
        #[test]
        fn constant_shift_closed_form(
            loads in prop::collection::vec(0.0f64..500.0, 1..40),
            prices in prop::collection::vec(-50.0f64..300.0, 40),
            c in 0.0f64..100.0,
        ) {
            let prices = &prices[..loads.len()];
            let before = objective(&loads, prices);
            let shifted: Vec<f64> = loads.iter().map(|l| l + c).collect();
            let m = loads.iter().copied().fold(f64::MIN, f64::max);
            let expect = prices.iter().map(|e| 0.25 * c * e / 1000.0).sum::<f64>() + 0.005 * ((m + c).powi(2) - m * m);
            prop_assert!((objective(&shifted, prices) - before - expect).abs() < 1e-9 * (1.0 + before.abs()));
        }

        #[test]
        fn raising_the_peak_raises_cost(
            loads in prop::collection::vec(0.0f64..500.0, 2..30),
            prices in prop::collection::vec(0.0f64..300.0, 30),
            bump in 0.01f64..50.0,
        ) {
            let prices = &prices[..loads.len()];
            let arg = loads.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            let mut higher = loads.clone();
            higher[arg] += bump;
            prop_assert!(objective(&higher, prices) > objective(&loads, prices));
        }

        #[test]
        fn energy_conservation(actions in prop::collection::vec(0u8..3, 1..60)) {
            let inst = fig1();
            let m = BatteryModel::new(&inst.batteries[0]);
            let plan: Vec<BatteryAction> = actions.iter().map(|a| match a {
                0 => BatteryAction::Charge, 1 => BatteryAction::Discharge, _ => BatteryAction::Idle,
            }).collect();
            let charges = plan.iter().filter(|a| **a == BatteryAction::Charge).count() as f64;
            let discharges = plan.iter().filter(|a| **a == BatteryAction::Discharge).count() as f64;
            let last = *m.trajectory(&plan).last().unwrap();
            let expect = charges * 0.25 * 2.0 * 0.87f64.sqrt() - discharges * 0.25 * 2.0;
            prop_assert!((last - expect).abs() < 1e-9);
        }
    }
}
