mod common;

use common::{brute_force, day_calendar, dp_dispatch, random_tiny_instance, with_battery};
use predopt::evaluator::{check_feasibility, total_cost};
use predopt::ppoi::Battery;
use predopt::scheduler::{dispatch_battery_exact, BatteryPolicy, DispatchInput};
use predopt::series::{NetLoadSeries, PriceSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_battery(rng: &mut ChaCha8Rng) -> Battery<f64> {
    Battery {
        id: 0,
        capacity: rng.random_range(1..40) as f64 / 4.0,
        max_power: rng.random_range(2..40) as f64 / 4.0,
        efficiency: rng.random_range(60..=100) as f64 / 100.0,
    }
}

#[test]
fn dynamic_programme_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for case in 0..300 {
        let ppd = rng.random_range(2..=12);
        let ws = rng.random_range(0..ppd);
        let we = rng.random_range(ws + 1..=ppd);
        let cal = day_calendar(ppd, ws, we, 1);
        let load: Vec<f64> = (0..ppd).map(|_| rng.random_range(0..400) as f64 / 4.0).collect();
        let rec: Vec<f64> = load.iter().map(|l| if rng.random_bool(0.5) { l / 2.0 } else { 0.0 }).collect();
        let prices: Vec<f64> = (0..ppd).map(|_| rng.random_range(-200..3000) as f64 / 4.0).collect();
        let b = random_battery(&mut rng);
        let policy = BatteryPolicy::ALL[case % 5];
        let working: Vec<bool> = (0..ppd).map(|t| cal.is_working_period(t)).collect();
        let (dp_cost, dp_plan) = dp_dispatch(&load, &rec, &prices, &working, &b, policy);
        let input = DispatchInput { load: &load, recurring: &rec, prices: &prices, calendar: &cal };
        let (_, exact_cost) = dispatch_battery_exact(&input, &b, policy).unwrap();
        assert!(
            (dp_cost - exact_cost).abs() <= 1e-9 * (1.0 + exact_cost.abs()),
            "case {case}: dp {dp_cost} vs enumeration {exact_cost}"
        );
        let replay = common::cost_of(&with_battery(&load, &b, &dp_plan), &prices);
        assert!((replay - dp_cost).abs() < 1e-9 * (1.0 + dp_cost.abs()));
    }
}

#[test]
fn brute_force_schedules_check_out() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cal = day_calendar(16, 4, 12, 1);
    let mut checked = 0;
    for case in 0..40 {
        let inst = random_tiny_instance(&mut rng, 3);
        let base: Vec<f64> = (0..16).map(|_| rng.random_range(20..120) as f64).collect();
        let prices: Vec<f64> = (0..16).map(|_| rng.random_range(10..400) as f64).collect();
        let policy = BatteryPolicy::ALL[case % 5];
        let Some((cost, schedule)) = brute_force(&inst, &cal, &base, &prices, policy) else { continue };
        assert!(check_feasibility(&inst, &cal, &schedule, Some(policy)).is_empty(), "case {case}");
        let evaluated =
            total_cost(&NetLoadSeries(base.clone()), &PriceSeries(prices.clone()), &inst, &cal, &schedule).unwrap();
        assert!((evaluated - cost).abs() < 1e-9 * (1.0 + cost), "case {case}: {evaluated} vs {cost}");
        checked += 1;
    }
    assert!(checked >= 30);
}
