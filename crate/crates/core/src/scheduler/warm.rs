//! Greedy peak-levelling warm starts.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evaluator::{Placement, Schedule};
use crate::num::Scalar;
use crate::ppoi::{validate_instance, Instance};
use crate::scheduler::placement::{candidate_slots, latest_starts, precedence_ok, RoomUsage};
use crate::scheduler::SchedulerError;
use crate::series::Calendar;

/// `n` feasible schedules with idle batteries. Activities are placed in
/// precedence order, larger loads first among those ready, each into the
/// slot that keeps the weekly recurring-load peak lowest (then the lowest
/// load over its own interval); remaining ties are broken at random.
/// Schedules are distinct when enough attempts find distinct ones.
pub fn conservative_warm_starts<T: Scalar>(
    inst: &Instance<T>,
    calendar: &Calendar,
    n: usize,
    seed: u64,
) -> Result<Vec<Schedule>, SchedulerError> {
    let v = validate_instance(inst);
    if !v.is_empty() {
        return Err(SchedulerError::InvalidInstance(v));
    }
    if n == 0 {
        return Err(SchedulerError::Config("at least one warm start is required".into()));
    }
    let latest = latest_starts(inst, calendar).ok_or(SchedulerError::NoFeasiblePlacement)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Schedule> = Vec::with_capacity(n);
    let max_attempts = 20 * n + 20;
    for attempt in 0..max_attempts {
        if out.len() == n {
            break;
        }
        let Some(s) = greedy_once(inst, calendar, &latest, &mut rng) else { continue };
        if !out.contains(&s) || attempt >= 10 * n {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(SchedulerError::NoFeasiblePlacement);
    }
    let distinct = out.len();
    for i in distinct..n {
        out.push(out[i % distinct].clone());
    }
    Ok(out)
}

fn greedy_once<T: Scalar, R: Rng>(
    inst: &Instance<T>,
    calendar: &Calendar,
    latest: &[usize],
    rng: &mut R,
) -> Option<Schedule> {
    let n = inst.num_recurring();
    let ppd = calendar.periods_per_day();
    let succ = inst.successors();
    let mut indeg: Vec<usize> = inst.recurring.iter().map(|a| a.precedences.len()).collect();
    let mut keys: Vec<Option<usize>> = vec![None; n];
    let mut placements: Vec<Option<Placement>> = vec![None; n];
    let mut usage = RoomUsage::new(inst.num_buildings(), ppd);
    let mut week = vec![T::zero(); 7 * ppd];
    let mut peak = T::zero();
    let mut ready: Vec<usize> = (0..n).filter(|&a| indeg[a] == 0).collect();
    while !ready.is_empty() {
        // largest load first, random among equals
        let top = ready.iter().map(|&a| inst.recurring[a].load).fold(T::neg_infinity(), T::max);
        let heavy: Vec<usize> = ready.iter().copied().filter(|&a| inst.recurring[a].load == top).collect();
        let a = *heavy.choose(rng).expect("non-empty");
        ready.retain(|&x| x != a);
        let act = &inst.recurring[a];

        let mut best: Vec<(Placement, usize)> = Vec::new();
        let mut best_score = (T::infinity(), T::infinity());
        for slot in candidate_slots(calendar, act.duration) {
            let key = slot.week_key(calendar);
            if key > latest[a] || !precedence_ok(inst, &succ, &keys, a, key) {
                continue;
            }
            let Some(rooms) = usage.assign_random(inst, a, slot, rng) else { continue };
            let local = week[key..key + act.duration].iter().copied().fold(T::neg_infinity(), T::max) + act.load;
            let score = (peak.max(local), local);
            if score < best_score {
                best_score = score;
                best.clear();
            }
            if score == best_score {
                best.push((Placement { activity: a, slot, rooms }, key));
            }
        }
        let (p, key) = best.choose(rng)?.clone();
        for w in &mut week[key..key + act.duration] {
            *w = *w + act.load;
        }
        peak = peak.max(best_score.1);
        usage.add(&p, act.duration);
        keys[a] = Some(key);
        placements[a] = Some(p);
        for &s in &succ[a] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    let placements: Option<Vec<Placement>> = placements.into_iter().collect();
    Some(Schedule::with_idle_batteries(placements?, inst.num_batteries(), calendar.horizon()))
}
