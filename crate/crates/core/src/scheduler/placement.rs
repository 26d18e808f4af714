//! Slot enumeration, room bookkeeping and precedence bounds shared by the
//! warm-start builder and the local search.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::evaluator::{Placement, Slot};
use crate::num::Scalar;
use crate::ppoi::{Instance, RoomSize};
use crate::series::{Calendar, Weekday};

/// Every start slot an activity of `duration` periods may use, in first-week order.
pub fn candidate_slots(calendar: &Calendar, duration: usize) -> Vec<Slot> {
    let layout = calendar.layout();
    let mut days = calendar.active_weekdays();
    days.sort_by_key(|&w| calendar.week_offset(w));
    let mut out = Vec::new();
    if duration == 0 || layout.work_start + duration > layout.work_end {
        return out;
    }
    for w in days {
        for p in layout.work_start..=layout.work_end - duration {
            out.push(Slot::new(w, p));
        }
    }
    out
}

fn size_index(s: RoomSize) -> usize {
    match s {
        RoomSize::Small => 0,
        RoomSize::Large => 1,
    }
}

/// Rooms in use per building, size, weekday and period of day.
#[derive(Debug, Clone)]
pub(crate) struct RoomUsage {
    ppd: usize,
    used: Vec<u32>,
}

impl RoomUsage {
    pub fn new(buildings: usize, ppd: usize) -> Self {
        Self { ppd, used: vec![0; buildings * 2 * 7 * ppd] }
    }

    fn base(&self, b: usize, size: RoomSize, w: Weekday) -> usize {
        ((b * 2 + size_index(size)) * 7 + w.index()) * self.ppd
    }

    fn free<T: Scalar>(&self, inst: &Instance<T>, b: usize, size: RoomSize, slot: Slot, duration: usize) -> usize {
        let base = self.base(b, size, slot.weekday);
        let end = (slot.period + duration).min(self.ppd);
        let peak = self.used[base + slot.period..base + end].iter().copied().max().unwrap_or(0) as usize;
        inst.buildings[b].rooms(size).saturating_sub(peak)
    }

    fn update(&mut self, p: &Placement, duration: usize, add: bool) {
        let end = (p.slot.period + duration).min(self.ppd);
        for &(b, size) in &p.rooms {
            let base = self.base(b, size, p.slot.weekday);
            for u in &mut self.used[base + p.slot.period..base + end] {
                if add {
                    *u += 1;
                } else {
                    *u -= 1;
                }
            }
        }
    }

    pub fn add(&mut self, p: &Placement, duration: usize) {
        self.update(p, duration, true);
    }

    pub fn remove(&mut self, p: &Placement, duration: usize) {
        self.update(p, duration, false);
    }

    /// Rooms for `activity` at `slot`, filling buildings in the given order.
    pub fn assign<T: Scalar>(
        &self,
        inst: &Instance<T>,
        activity: usize,
        slot: Slot,
        order: &[usize],
    ) -> Option<Vec<(usize, RoomSize)>> {
        let act = &inst.recurring[activity];
        let mut need = act.rooms_required;
        let mut rooms = Vec::with_capacity(need);
        for &b in order {
            if need == 0 {
                break;
            }
            let take = self.free(inst, b, act.room_size, slot, act.duration).min(need);
            rooms.extend(std::iter::repeat_n((b, act.room_size), take));
            need -= take;
        }
        (need == 0).then(|| {
            rooms.sort();
            rooms
        })
    }

    /// Like [`assign`](Self::assign) with a freshly shuffled building order.
    pub fn assign_random<T: Scalar, R: Rng>(
        &self,
        inst: &Instance<T>,
        activity: usize,
        slot: Slot,
        rng: &mut R,
    ) -> Option<Vec<(usize, RoomSize)>> {
        let mut order: Vec<usize> = (0..inst.num_buildings()).collect();
        order.shuffle(rng);
        self.assign(inst, activity, slot, &order)
    }
}

/// Whether `activity` may start at first-week position `key` given the
/// positions of the activities already placed.
pub(crate) fn precedence_ok<T: Scalar>(
    inst: &Instance<T>,
    succ: &[Vec<usize>],
    keys: &[Option<usize>],
    activity: usize,
    key: usize,
) -> bool {
    let act = &inst.recurring[activity];
    let preds_ok = act
        .precedences
        .iter()
        .all(|&p| keys[p].is_none_or(|kp| kp + inst.recurring[p].duration <= key));
    preds_ok && succ[activity].iter().all(|&s| keys[s].is_none_or(|ks| key + act.duration <= ks))
}

/// Topological order of the recurring activities; `None` on a cycle.
pub(crate) fn topological_order<T: Scalar>(inst: &Instance<T>) -> Option<Vec<usize>> {
    let n = inst.num_recurring();
    let succ = inst.successors();
    let mut indeg: Vec<usize> = inst.recurring.iter().map(|a| a.precedences.len()).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&a| indeg[a] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(a) = ready.pop() {
        out.push(a);
        for &s in &succ[a] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    (out.len() == n).then_some(out)
}

/// Latest first-week start of each activity that still leaves room for its
/// chain of successors; `None` when an activity cannot fit at all.
pub(crate) fn latest_starts<T: Scalar>(inst: &Instance<T>, calendar: &Calendar) -> Option<Vec<usize>> {
    let order = topological_order(inst)?;
    let succ = inst.successors();
    let mut latest = vec![0usize; inst.num_recurring()];
    for &a in order.iter().rev() {
        let dur = inst.recurring[a].duration;
        let last = candidate_slots(calendar, dur).last()?.week_key(calendar);
        let mut bound = last;
        for &s in &succ[a] {
            bound = bound.min(latest[s].checked_sub(dur)?);
        }
        latest[a] = bound;
    }
    Some(latest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppoi::{parse_instance, EXAMPLE_INSTANCE};

    #[test]
    fn slots_respect_working_hours() {
        let cal = Calendar::month(2020, 11).unwrap();
        let s = candidate_slots(&cal, 8);
        assert_eq!(s.len(), 5 * 25);
        assert_eq!(s[0], Slot::new(Weekday::Mon, 36));
        assert_eq!(s.last().unwrap(), &Slot::new(Weekday::Fri, 60));
        assert!(candidate_slots(&cal, 33).is_empty());
    }

    #[test]
    fn rooms_fill_in_order() {
        let inst: Instance<f64> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        let mut usage = RoomUsage::new(3, 96);
        let slot = Slot::new(Weekday::Mon, 36);
        // r2 needs 2 large rooms, both available in building 0
        let rooms = usage.assign(&inst, 2, slot, &[0, 1, 2]).unwrap();
        assert_eq!(rooms, vec![(0, RoomSize::Large), (0, RoomSize::Large)]);
        let p = Placement { activity: 2, slot, rooms };
        usage.add(&p, 4);
        assert_eq!(usage.assign(&inst, 0, slot, &[0, 1]), None);
        assert_eq!(usage.assign(&inst, 0, slot, &[0, 1, 2]), Some(vec![(2, RoomSize::Large)]));
        assert!(usage.assign(&inst, 0, Slot::new(Weekday::Mon, 40), &[0, 1]).is_some());
        usage.remove(&p, 4);
        assert!(usage.assign(&inst, 0, slot, &[0, 1]).is_some());
    }

    #[test]
    fn chain_bounds() {
        let inst: Instance<f64> = parse_instance(EXAMPLE_INSTANCE).unwrap();
        let cal = Calendar::month(2020, 11).unwrap();
        let latest = latest_starts(&inst, &cal).unwrap();
        // r2 (4 periods) must finish before r0 (8 periods) starts
        assert_eq!(latest[0] + 8, cal.week_offset(Weekday::Fri) * 96 + 68);
        assert_eq!(latest[2], latest[0] - 4);
    }
}
