use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use v2x_cosim::comm::{deliver, Beacon, BeaconSchedule, BeaconTable, Point, ProtocolModel, Snapshot};
use v2x_cosim::sim::{Lane, VehicleId, DT};

proptest! {
    #[test]
    fn cv2x_range_shrinks_with_density(rho in 1.0..5000.0f64, d in 0.5..500.0f64) {
        let a = ProtocolModel::Cv2x.params(rho).unwrap();
        let b = ProtocolModel::Cv2x.params(rho + d).unwrap();
        prop_assert!(b.mhr_km < a.mhr_km);
        prop_assert!((a.mhr_km * rho - 50.0).abs() < 1e-9);
        prop_assert_eq!(a.ipg_ms, 100.0);
    }

    #[test]
    fn dsrc_gap_never_shrinks_with_density(rho in 1.0..5000.0f64, d in 0.0..500.0f64) {
        let a = ProtocolModel::Dsrc.params(rho).unwrap();
        let b = ProtocolModel::Dsrc.params(rho + d).unwrap();
        prop_assert!(b.ipg_ms >= a.ipg_ms);
        if rho >= 250.0 {
            prop_assert_eq!(a.mhr_km, 0.25);
        }
    }

    #[test]
    fn protocol_labels_round_trip(m in 0.0..5.0f64, i in 1.0..5000.0f64) {
        let p = ProtocolModel::custom((m * 1e4).round() / 1e4, (i * 1e4).round() / 1e4).unwrap();
        prop_assert_eq!(p.to_string().parse::<ProtocolModel>().unwrap(), p);
    }

    /// A receiver that stays in range always holds a beacon no older than one
    /// packet gap plus one step.
    #[test]
    fn staleness_is_bounded_while_in_range(seed in any::<u64>(), ipg in prop::sample::select(vec![100.0, 125.0, 375.0, 750.0, 1000.0]),
                                           sep in 0.0..250.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sched = BeaconSchedule::random(0.0, ipg, &mut rng, DT).unwrap();
        let mut table: BeaconTable = BeaconTable::new();
        let ipg_s = ipg / 1000.0;
        for step in 0..400u64 {
            let now = step as f64 * DT;
            if sched.fire(step) {
                let b = Beacon {
                    sender: VehicleId(1),
                    sent_at: now,
                    snapshot: Snapshot { s: 0.0, v: 0.0, lane: Lane::Mainline, pos: Point::new(0.0, 0.0) },
                    payload: (),
                };
                deliver(&[b], [(VehicleId(2), Point::new(sep, 0.0), &mut table)], 0.25);
            }
            if now >= ipg_s + DT {
                let age = table.staleness(VehicleId(1), now).expect("heard at least once");
                prop_assert!(age <= ipg_s + DT + 1e-9, "age {} at {}", age, now);
            }
        }
    }
}

#[test]
fn protocols_coincide_at_density_100() {
    assert_eq!(ProtocolModel::Cv2x.params(100.0).unwrap(), ProtocolModel::Dsrc.params(100.0).unwrap());
}
