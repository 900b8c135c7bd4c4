use sublinear_core::ineq::{
    calibrate, canned_config, frozen_constants, shipped_families, verify_bound, BoundName,
    RosenthalVariant, VerifyConfig, CANNED_CONFIGS,
};

#[test]
fn recalibration_reproduces_frozen_constants() {
    let frozen = frozen_constants();
    let cal = calibrate(frozen.calibration_seed, frozen.calibration_paths).unwrap();
    assert_eq!(&cal.constants, frozen);
}

#[test]
fn canned_configs_are_dominated() {
    for name in CANNED_CONFIGS {
        let out = verify_bound(&canned_config(name).unwrap()).unwrap();
        println!(
            "{name}: {} reports, all dominated = {}",
            out.reports.len(),
            out.all_dominated
        );
        assert!(out.all_dominated, "{name}");
    }
}

#[test]
fn rosenthal_dominates_on_held_out_seed() {
    let kinds = [
        (BoundName::RosenthalChoquet, RosenthalVariant::Independent),
        (BoundName::RosenthalMoment, RosenthalVariant::Independent),
        (BoundName::RosenthalMoment, RosenthalVariant::NdMax),
    ];
    for fam in shipped_families() {
        for n in [10, 100, 1000] {
            for p in [2.0, 3.0, 4.0] {
                for (bound, variant) in kinds {
                    let mut cfg = VerifyConfig::new(bound, fam.clone(), n, 10_000, 99);
                    cfg.p = p;
                    cfg.variant = variant;
                    let out = verify_bound(&cfg).unwrap();
                    assert!(
                        out.all_dominated,
                        "{} n={n} p={p} {bound:?} {variant:?}: {:?}",
                        fam.tag(),
                        out.reports
                    );
                }
            }
        }
    }
}
