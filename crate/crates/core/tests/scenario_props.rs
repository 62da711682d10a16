use std::path::Path;

use hems_core::scenario::presets::{community4, community50};
use hems_core::scenario::{parse_scenario, Scenario};
use proptest::prelude::*;

fn corrupt(s: &mut Scenario, kind: usize, mg: usize) {
    let n = s.microgrids.len();
    let m = &mut s.microgrids[mg % n];
    match kind {
        0 => s.horizon.dt_hours = 0.0,
        1 => {
            m.pv.pop();
        }
        2 => {
            let t = 3 % s.prices.sell.len();
            s.prices.sell[t] = s.prices.buy[t] + 0.01;
        }
        3 => m.grid_export_min = 1.0,
        4 => {
            let b = &mut m.storages[0];
            b.initial_energy = b.capacity_max + 1.0;
        }
        5 => m.storages[0].efficiency = 1.5,
        6 => {
            let other = s.microgrids[(mg + 1) % n].id.clone();
            s.microgrids[mg % n].id = other;
        }
        7 => s.topology.loss_factor_default = -0.1,
        8 => s.topology.loss_factor_default = 10.0,
        9 => s.microgrids.clear(),
        10 => m.storages[0].charge_power_min = 1.0,
        11 => m.fixed_load[0] = f64::NAN,
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_scenarios_validate(seed in any::<u64>()) {
        prop_assert!(community4(seed).validate().is_ok());
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>()) {
        let s = community4(seed);
        let back = parse_scenario(&s.to_json_string(), Path::new(".")).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn single_corruption_is_rejected(seed in any::<u64>(), kind in 0usize..12, mg in 0usize..4) {
        let mut s = community4(seed);
        corrupt(&mut s, kind, mg);
        prop_assert!(s.validate().is_err(), "corruption {} on mg {} accepted", kind, mg);
    }
}

#[test]
fn large_preset_validates_and_round_trips() {
    let s = community50(7);
    s.validate().unwrap();
    assert_eq!(parse_scenario(&s.to_json_string(), Path::new(".")).unwrap(), s);
}
