use super::*;
use crate::channel::{composite_stats, required_power_irs, RadioConfig};
use crate::geometry::CellConfig;
use crate::powerctl::equalize_power;

fn model_with(cell: CellConfig) -> EnergyModel {
    EnergyModel::new(&RadioConfig::default(), &cell, &IrsSpec::default(), 0.95).unwrap()
}

fn model() -> EnergyModel {
    model_with(CellConfig::default())
}

fn plan3() -> RingPlan {
    RingPlan::new(&CellConfig::default(), vec![250.0, 223.6, 180.0, 120.0], vec![10, 50, 40]).unwrap()
}

fn small_mc(n_topologies: usize, n_fading: usize) -> McConfig {
    McConfig {
        n_topologies,
        n_fading,
        seed: 7,
        element_draws: ElementDraws::GaussianSurrogate,
    }
}

#[test]
fn mc_config_validation() {
    assert!(McConfig::default().validate().is_ok());
    assert_eq!(McConfig::default().full_scale().n_fading, 1_000_000);
    assert!(small_mc(0, 10).validate().is_err());
    assert!(small_mc(1, 0).validate().is_err());
}

#[test]
fn zero_threshold_never_fails() {
    let m = model();
    let p = plan3();
    let policy = PowerPolicy {
        model: &m,
        plan: &p,
        eta0: 10.0,
    };
    let est = empirical_nop_at(&policy, &small_mc(2, 50), 0.0).unwrap();
    for s in est.strata.iter().filter(|s| s.trials > 0) {
        assert_eq!(s.nop, 1.0, "{}", s.name);
    }
    assert_eq!(est.common_nop, 1.0);
}

#[test]
fn single_user_never_overflows() {
    let cell = CellConfig {
        users: 1,
        ..CellConfig::default()
    };
    let m = model_with(cell);
    let p = plan3();
    let policy = PowerPolicy {
        model: &m,
        plan: &p,
        eta0: 5.0,
    };
    for t in 0..50 {
        let topo = sample_topology(&policy, t, 3).unwrap();
        assert_eq!(topo.ues.len(), 1);
        assert!(!topo.ues[0].overflow);
    }
}

#[test]
fn crowded_sector_keeps_the_nearest_n_t() {
    let cell = CellConfig {
        users: 200,
        ..CellConfig::default()
    };
    let m = model_with(cell);
    let p = RingPlan::new(&cell, vec![250.0, 0.0], vec![1]).unwrap();
    let policy = PowerPolicy {
        model: &m,
        plan: &p,
        eta0: 5.0,
    };
    let topo = sample_topology(&policy, 0, 11).unwrap();
    let served: Vec<_> = topo.ues.iter().filter(|u| !u.overflow).collect();
    let dropped: Vec<_> = topo.ues.iter().filter(|u| u.overflow).collect();
    assert_eq!(served.len(), 20);
    assert_eq!(dropped.len(), 180);
    assert!(dropped.iter().all(|u| u.region == Region::ApOnly && u.geometry.is_none()));
    let l = p.irs_radius(1);
    let d = |u: &UeSample| crate::geometry::irs_ue_distance(u.r, l, u.azimuth - p.sector(1, 0).irs_azimuth);
    let worst_kept = served.iter().map(|u| d(u)).fold(0.0, f64::max);
    let best_dropped = dropped.iter().map(|u| d(u)).fold(f64::MAX, f64::min);
    assert!(worst_kept <= best_dropped);
    assert_eq!(*topo.served_per_sector().values().max().unwrap(), 20);
}

#[test]
fn sector_counts_follow_the_density() {
    let m = model();
    let p = plan3();
    let policy = PowerPolicy {
        model: &m,
        plan: &p,
        eta0: 5.0,
    };
    let ring = 2;
    let (o, i) = (p.outer(ring), p.inner(ring));
    let mi = p.irs_count(ring) as f64;
    let share = (o * o - i * i) / (250.0 * 250.0) / mi;
    let k = 500.0;
    let expected = k * share;
    let n_top = 1000;
    let mut total = 0usize;
    for t in 0..n_top {
        let topo = sample_topology(&policy, t, 5).unwrap();
        total += topo.ues.iter().filter(|u| u.r <= o && u.r > i).count();
    }
    let mean = total as f64 / (n_top as f64 * mi);
    // independent-sector binomial spread is an upper bound on the true spread
    let sigma = (k * share * (1.0 - share) / (n_top as f64 * mi)).sqrt();
    assert!((mean - expected).abs() < 3.0 * sigma, "{mean} vs {expected} (sigma {sigma})");
}

#[test]
fn cipc_deciles_follow_the_exponential_law() {
    let m = model();
    let cell = *m.cell();
    let mut plan = RingPlan::ap_only(&cell);
    let c = m.coefficients(&plan).unwrap();
    let alloc = equalize_power(&c, m.radio(), 0.95).unwrap();
    plan.power_ratios = alloc.rho.clone();
    let policy = PowerPolicy {
        model: &m,
        plan: &plan,
        eta0: alloc.eta0_star,
    };
    let est = empirical_nop(&policy, &small_mc(20, 2000)).unwrap();
    // ten simultaneous intervals: Bonferroni-corrected z for 95% jointly
    let z_joint = 2.81;
    for s in est.strata.iter().filter(|s| s.name.starts_with("decile")) {
        let hw = s.half_width / Z95 * z_joint;
        assert!((s.nop - 0.95).abs() <= hw, "{}: {} +- {}", s.name, s.nop, hw);
    }
    let ap = &est.strata[0];
    assert_eq!(ap.name, "ap_only");
    assert!((ap.nop - 0.95).abs() <= ap.half_width * 1.5);
}

#[test]
fn required_power_point_near_target() {
    let m = model();
    let geom = LinkGeometry::new(150.0, 150.0, 0.0).unwrap();
    let s = composite_stats(m.irs(), &mean_gains_irs(m.radio(), &geom)).unwrap();
    let eta0 = 30.0;
    let p = required_power_irs(&s, m.radio(), eta0, 0.95).unwrap();
    let (hits, n) = nop_at_point(&m, &geom, p, eta0, 10_000, ElementDraws::Exact, 3, 0);
    let nop = hits as f64 / n as f64;
    assert!((nop - 0.95).abs() < 0.02, "{nop}");
}

#[test]
fn identical_seed_identical_estimate_any_thread_count() {
    let m = model();
    let p = plan3();
    let policy = PowerPolicy {
        model: &m,
        plan: &p,
        eta0: 20.0,
    };
    let mc = small_mc(6, 300);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| empirical_nop(&policy, &mc).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let mut other = mc;
    other.seed += 1;
    let c = empirical_nop(&policy, &other).unwrap();
    assert_ne!(a.strata, c.strata);
}

#[test]
fn overflow_never_exceeds_slots_and_energy_is_audited() {
    let m = model();
    let cell = *m.cell();
    let mut plan = plan3();
    let c = m.coefficients(&plan).unwrap();
    let alloc = equalize_power(&c, m.radio(), 0.95).unwrap();
    plan.power_ratios = alloc.rho.clone();
    let result = PlanResult {
        method: "test".into(),
        plan,
        coefficients: c,
        nu_bar: alloc.nu_bar,
        allocation: alloc,
    };
    let report = validate_plan_mc(&m, &result, &small_mc(40, 200)).unwrap();
    assert!(report.mc.max_served_per_sector <= m.radio().slots as usize);
    assert!(report.energy_within_budget, "energy ratio {}", report.energy_ratio);
    assert!(report.mc.strata.iter().take(1 + 3).all(|s| s.ues > 0));
    let total: u64 = report.mc.strata.iter().take(4).map(|s| s.ues).sum();
    assert_eq!(total, 40 * cell.users as u64);
}

#[test]
fn surrogate_moments_match_the_gaussian_model() {
    let m = model();
    let geom = LinkGeometry::new(200.0, 190.0, 10.0).unwrap();
    let gains = mean_gains_irs(m.radio(), &geom);
    let s = composite_stats(m.irs(), &gains).unwrap();
    let (mean, var) = sample_z2_moments(&gains, m.irs(), 400_000, ElementDraws::GaussianSurrogate, 2, 0);
    assert!(((mean - s.mean_z2) / s.mean_z2).abs() < 0.01);
    assert!(((var - s.var_z2) / s.var_z2).abs() < 0.02);
}
