//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use predopt::evaluator::{BatteryAction, Placement, Schedule, Slot};
use predopt::ppoi::{Battery, Instance, RoomSize};
use predopt::scheduler::BatteryPolicy;
use predopt::series::{Calendar, DayLayout, Weekday};
use rand::Rng;

pub const HOURS: f64 = 0.25;

pub fn day_calendar(ppd: usize, work_start: usize, work_end: usize, days: usize) -> Calendar {
    Calendar::starting_on(Weekday::Mon, days)
        .unwrap()
        .with_layout(DayLayout { periods_per_day: ppd, work_start, work_end })
        .unwrap()
}

pub fn cost_of(load: &[f64], prices: &[f64]) -> f64 {
    let energy: f64 = load.iter().zip(prices).map(|(l, e)| HOURS * l * e / 1000.0).sum();
    let peak = load.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    energy + 0.005 * peak * peak
}

/// Single-battery optimum by dynamic programming. For every candidate peak
/// `cap` (each reachable per-period load) the cheapest-energy plan whose
/// maximum load is exactly `cap` is found over states (period, charges,
/// discharges, cap reached); the best `energy + 0.005 cap^2` over all caps
/// is the optimum.
pub fn dp_dispatch(
    load: &[f64],
    recurring: &[f64],
    prices: &[f64],
    working: &[bool],
    battery: &Battery<f64>,
    policy: BatteryPolicy,
) -> (f64, Vec<BatteryAction>) {
    use BatteryAction::*;
    let n = load.len();
    let p = battery.max_power;
    let root = battery.efficiency.sqrt();
    let store = HOURS * p * root;
    let drain = HOURS * p;
    let relief = root * p;
    let tol = battery.capacity * f64::EPSILON * 4096.0;
    let rec_peak = recurring.iter().copied().fold(0.0f64, f64::max);
    let rec_cap = rec_peak + (rec_peak.abs() + 1.0) * f64::EPSILON * 1024.0;
    let delta = |a: BatteryAction| match a {
        Charge => p,
        Discharge => -relief,
        Idle => 0.0,
    };
    let allowed = |t: usize, soc: f64| -> Vec<BatteryAction> {
        let can_dis = policy != BatteryPolicy::Conservative && soc - drain >= -tol;
        if policy == BatteryPolicy::ForcedDischarge && working[t] && can_dis {
            return vec![Discharge];
        }
        let mut v = vec![Idle];
        let charge_ok = match policy {
            BatteryPolicy::Conservative => false,
            BatteryPolicy::ForcedDischarge | BatteryPolicy::NoForcedDischarge => !working[t],
            BatteryPolicy::Liberal => recurring[t] + p <= rec_cap,
            BatteryPolicy::VeryLiberal => true,
        };
        if charge_ok && soc + store <= battery.capacity + tol {
            v.push(Charge);
        }
        if can_dis {
            v.push(Discharge);
        }
        v
    };
    let mut caps: Vec<f64> = Vec::new();
    for t in 0..n {
        for a in [Idle, Charge, Discharge] {
            caps.push(load[t] + delta(a));
        }
    }
    caps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    caps.dedup();

    type Cell = Option<(f64, Vec<BatteryAction>)>;
    let mut best: Cell = None;
    let dim = n + 1;
    let at = |c: usize, d: usize, hit: bool| (c * dim + d) * 2 + hit as usize;
    for &cap in &caps {
        let mut layer: Vec<Cell> = vec![None; dim * dim * 2];
        layer[0] = Some((0.0, Vec::new()));
        for t in 0..n {
            let mut next: Vec<Cell> = vec![None; dim * dim * 2];
            for c in 0..dim {
                for d in 0..dim {
                    for hit in [false, true] {
                        let Some((e, plan)) = &layer[at(c, d, hit)] else { continue };
                        let soc = c as f64 * store - d as f64 * drain;
                        for a in allowed(t, soc) {
                            let l = load[t] + delta(a);
                            if l > cap {
                                continue;
                            }
                            let (nc, nd) = match a {
                                Charge => (c + 1, d),
                                Discharge => (c, d + 1),
                                Idle => (c, d),
                            };
                            let ne = e + HOURS * l * prices[t] / 1000.0;
                            let cell = &mut next[at(nc, nd, hit || l == cap)];
                            if cell.as_ref().is_none_or(|(be, _)| ne < *be) {
                                let mut np = plan.clone();
                                np.push(a);
                                *cell = Some((ne, np));
                            }
                        }
                    }
                }
            }
            layer = next;
        }
        for c in 0..dim {
            for d in 0..dim {
                let Some((e, plan)) = layer[at(c, d, true)].take() else { continue };
                let total = e + 0.005 * cap * cap;
                if best.as_ref().is_none_or(|(bc, _)| total < *bc) {
                    best = Some((total, plan));
                }
            }
        }
    }
    best.expect("idle plan is always reachable")
}

/// Grid load of a single-battery plan.
pub fn with_battery(load: &[f64], battery: &Battery<f64>, plan: &[BatteryAction]) -> Vec<f64> {
    let root = battery.efficiency.sqrt();
    load.iter()
        .zip(plan)
        .map(|(l, a)| match a {
            BatteryAction::Charge => l + battery.max_power,
            BatteryAction::Discharge => l - root * battery.max_power,
            BatteryAction::Idle => *l,
        })
        .collect()
}

/// Exhaustive optimum over every placement of a one-building, one-day
/// instance (at most one battery), with the battery dispatched by
/// [`dp_dispatch`]. Returns the cost and the best schedule, or `None` when
/// no placement is feasible.
pub fn brute_force(
    inst: &Instance<f64>,
    cal: &Calendar,
    base: &[f64],
    prices: &[f64],
    policy: BatteryPolicy,
) -> Option<(f64, Schedule)> {
    assert_eq!(inst.buildings.len(), 1);
    assert!(inst.batteries.len() <= 1);
    assert_eq!(cal.days_in_month(), 1);
    let layout = cal.layout();
    let working: Vec<bool> = (0..cal.horizon()).map(|t| cal.is_working_period(t)).collect();
    let n = inst.recurring.len();
    let options: Vec<Vec<usize>> = inst
        .recurring
        .iter()
        .map(|a| (layout.work_start..=layout.work_end.saturating_sub(a.duration)).collect())
        .collect();
    let mut best: Option<(f64, Schedule)> = None;
    let mut idx = vec![0usize; n];
    loop {
        let starts: Vec<usize> = (0..n).map(|a| options[a][idx[a]]).collect();
        if feasible(inst, &starts) {
            let mut rec = vec![0.0; base.len()];
            for (a, &s) in starts.iter().enumerate() {
                let act = &inst.recurring[a];
                for r in &mut rec[s..s + act.duration] {
                    *r += act.load;
                }
            }
            let load: Vec<f64> = base.iter().zip(&rec).map(|(b, r)| b + r).collect();
            let (cost, plan) = match inst.batteries.first() {
                Some(b) => {
                    let (c, p) = dp_dispatch(&load, &rec, prices, &working, b, policy);
                    (c, vec![p])
                }
                None => (cost_of(&load, prices), Vec::new()),
            };
            if best.as_ref().is_none_or(|(bc, _)| cost < *bc) {
                let placements = starts
                    .iter()
                    .enumerate()
                    .map(|(a, &s)| Placement {
                        activity: a,
                        slot: Slot::new(Weekday::Mon, s),
                        rooms: vec![(0, inst.recurring[a].room_size); inst.recurring[a].rooms_required],
                    })
                    .collect();
                best = Some((cost, Schedule { placements, battery_plan: plan }));
            }
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn feasible(inst: &Instance<f64>, starts: &[usize]) -> bool {
    let b = &inst.buildings[0];
    for (a, act) in inst.recurring.iter().enumerate() {
        for &p in &act.precedences {
            if starts[p] + inst.recurring[p].duration > starts[a] {
                return false;
            }
        }
    }
    let end = starts.iter().zip(&inst.recurring).map(|(s, a)| s + a.duration).max().unwrap_or(0);
    for t in 0..end {
        for size in [RoomSize::Small, RoomSize::Large] {
            let used: usize = inst
                .recurring
                .iter()
                .zip(starts)
                .filter(|(a, &s)| a.room_size == size && s <= t && t < s + a.duration)
                .map(|(a, _)| a.rooms_required)
                .sum();
            if used > b.rooms(size) {
                return false;
            }
        }
    }
    true
}

/// Random instance text in the file grammar, valid by construction.
pub fn random_instance_text<R: Rng>(rng: &mut R) -> String {
    let nb = rng.random_range(1..5);
    let ns = rng.random_range(0..4);
    let nc = rng.random_range(0..3);
    let nr = rng.random_range(0..6);
    let no = rng.random_range(0..4);
    let mut s = format!("ppoi {nb} {ns} {nc} {nr} {no}\n");
    let mut small = 0;
    let mut large = 0;
    for b in 0..nb {
        let (sm, lg) = (rng.random_range(1..4), rng.random_range(1..4));
        small += sm;
        large += lg;
        s += &format!("b {b} {sm} {lg}\n");
    }
    for i in 0..ns {
        s += &format!("s {i} {}\n", rng.random_range(0..nb));
    }
    for i in 0..nc {
        let cap = rng.random_range(1..400) as f64 / 4.0;
        let pw = rng.random_range(1..200) as f64 / 4.0;
        let eff = rng.random_range(50..=100) as f64 / 100.0;
        s += &format!("c {i} {cap} {pw} {eff}\n");
    }
    let record = |tag: &str, i: usize, extra: String, prec_pool: usize, rng: &mut R| {
        let large_room = rng.random_bool(0.5);
        let avail = if large_room { large } else { small };
        let rooms = rng.random_range(1..=avail.min(3));
        let size = if large_room { 'L' } else { 'S' };
        let load = rng.random_range(0..2000) as f64 / 8.0;
        let dur = rng.random_range(1..=12);
        // precedences only on earlier ids keep the graph acyclic
        let preds: Vec<usize> = (0..prec_pool).filter(|_| rng.random_bool(0.3)).collect();
        let mut line = format!("{tag} {i} {rooms} {size} {load} {dur}{extra} {}", preds.len());
        for p in preds {
            line += &format!(" {p}");
        }
        line + "\n"
    };
    for i in 0..nr {
        s += &record("r", i, String::new(), i, rng);
    }
    for i in 0..no {
        let extra = format!(" {} {}", rng.random_range(0..5000), rng.random_range(0..5000));
        s += &record("a", i, extra, i, rng);
    }
    s
}

/// Random tiny instance: one building, at most three activities, at most one battery.
pub fn random_tiny_instance<R: Rng>(rng: &mut R, max_duration: usize) -> Instance<f64> {
    let nr = rng.random_range(1..=3);
    let nc = rng.random_range(0..=1);
    let mut s = format!("ppoi 1 0 {nc} {nr} 0\nb 0 {} {}\n", rng.random_range(1..3), rng.random_range(1..3));
    for i in 0..nc {
        let cap = rng.random_range(2..40) as f64 / 4.0;
        let pw = rng.random_range(4..60) as f64 / 4.0;
        let eff = rng.random_range(70..=100) as f64 / 100.0;
        s += &format!("c {i} {cap} {pw} {eff}\n");
    }
    for i in 0..nr {
        let size = if rng.random_bool(0.5) { 'S' } else { 'L' };
        let load = rng.random_range(4..120) as f64 / 2.0;
        let dur = rng.random_range(1..=max_duration);
        let pred = i > 0 && rng.random_bool(0.3);
        if pred {
            s += &format!("r {i} 1 {size} {load} {dur} 1 {}\n", i - 1);
        } else {
            s += &format!("r {i} 1 {size} {load} {dur} 0\n");
        }
    }
    predopt::ppoi::parse_instance(&s).unwrap()
}
