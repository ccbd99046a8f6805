use super::*;
use crate::channel::{db_to_linear, dbm_to_watts};
use crate::geometry::validate_plan;

fn setup() -> (RadioConfig, CellConfig, IrsSpec) {
    (RadioConfig::default(), CellConfig::default(), IrsSpec::default())
}

fn planner() -> Planner {
    let (c, k, irs) = setup();
    Planner::new(EnergyModel::new(&c, &k, &irs, 0.95).unwrap(), SearchGrid::default()).unwrap()
}

#[test]
fn grid_validation() {
    assert!(SearchGrid::default().validate().is_ok());
    let mut g = SearchGrid::default();
    g.radius_step = 0.0;
    assert!(g.validate().is_err());
    let mut g = SearchGrid::default();
    g.rho_step = 1.0;
    assert!(g.validate().is_err());
    let mut g = SearchGrid::default();
    g.max_rings = 0;
    assert!(g.validate().is_err());
}

#[test]
fn baseline_coverage_closed_form_and_bisection_agree() {
    let (c, _, irs) = setup();
    let p = dbm_to_watts(10.0);
    let g = db_to_linear(10.0);
    let closed = coverage_range_closed_form(&c, p, g).unwrap();
    let cov = coverage_range(&c, &irs, p, g, None).unwrap();
    assert!(cov.reachable);
    assert!((cov.range - closed).abs() < 1e-6);
    assert!((closed - 563.0).abs() < 1.0, "{closed}");
}

#[test]
fn coverage_without_elements_is_the_baseline() {
    let (c, _, _) = setup();
    let none = IrsSpec { elements: 0 };
    let p = dbm_to_watts(10.0);
    let g = db_to_linear(10.0);
    let base = coverage_range_closed_form(&c, p, g).unwrap();
    for l in [0.0, 50.0, 300.0, 500.0] {
        let cov = coverage_range(&c, &none, p, g, Some(l)).unwrap();
        assert!((cov.range - base).abs() < 1e-6, "l = {l}: {}", cov.range);
    }
}

#[test]
fn coverage_with_irs_extends_near_and_far() {
    let (c, _, irs) = setup();
    let p = dbm_to_watts(10.0);
    let g = db_to_linear(10.0);
    let base = coverage_range_closed_form(&c, p, g).unwrap();
    let at = |l: f64| coverage_range(&c, &irs, p, g, Some(l)).unwrap().range;
    assert!(at(20.0) > base + 1.0);
    assert!(at(520.0) > base + 1.0);
    // the benefit dips in mid-range but an IRS never shortens the range
    let mid = at(275.0);
    assert!(mid < at(100.0) && mid < at(450.0));
    assert!(mid > base);
    // an IRS far beyond the AP's own reach barely helps
    let far = coverage_range(&c, &irs, p, g, Some(5000.0)).unwrap();
    assert!(!far.reachable);
    assert!(far.range >= base - 1e-6 && far.range < base + 1.0, "{}", far.range);
}

#[test]
fn few_irs_collapse_to_one_near_ap_ring() {
    let mut pl = planner();
    let ls = pl.line_search(5, 3).unwrap();
    let a1 = pl.algorithm1(5, 10).unwrap();
    assert_eq!(ls.plan.irs_counts, vec![5]);
    assert_eq!(a1.plan.irs_counts, vec![5]);
    assert!((ls.plan.radii[1] - a1.plan.radii[1]).abs() < 1e-9);
    assert!((ls.nu_bar - a1.nu_bar).abs() < 1e-12);
    assert_eq!(ls.plan.irs_radius(1), 10.0);
}

#[test]
fn line_search_nondecreasing_in_irs_count() {
    let mut pl = planner();
    let mut last = 0.0;
    for m in 1..=16 {
        let r = pl.line_search(m, 2).unwrap();
        assert!(validate_plan(pl.model().cell(), &r.plan).is_empty());
        assert!(r.nu_bar >= last - 1e-9, "M = {m}: {} < {last}", r.nu_bar);
        last = r.nu_bar;
    }
}

#[test]
fn too_many_irs_for_one_ring_is_infeasible() {
    let mut pl = planner();
    match pl.line_search(20, 1) {
        Err(Error::Infeasible(reasons)) => assert!(reasons[0].starts_with("near_ap_max")),
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn plan_results_conserve_energy() {
    let mut pl = planner();
    for r in [pl.line_search(30, 2).unwrap(), pl.algorithm1(60, 6).unwrap()] {
        let e = r.allocation.energy(&r.coefficients);
        let budget = pl.model().radio().energy_budget;
        assert!(((e - budget) / budget).abs() < 1e-10);
        let hi = r.allocation.region_throughputs.iter().cloned().fold(f64::MIN, f64::max);
        let lo = r.allocation.region_throughputs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(hi - lo < 1e-12);
        assert_eq!(r.plan.power_ratios, r.allocation.rho);
    }
}

#[test]
fn algorithm1_rings_hold_capacity_mass() {
    let (_, k, _) = setup();
    let lam = k.density();
    let mut pl = planner();
    for m in [12, 40, 75, 130] {
        let r = pl.algorithm1(m, 10).unwrap();
        let plan = &r.plan;
        assert_eq!(plan.total_irs(), m);
        // ring 1 sits at the cap; later rings share one per-IRS load, which
        // drops below the cap once the whole cell is covered
        let mass = |ring: usize| {
            let (o, i) = (plan.outer(ring), plan.inner(ring));
            lam * PI * (o * o - i * i)
        };
        assert!((mass(1) - plan.irs_count(1) as f64 * k.max_users_per_irs).abs() < 1e-6);
        let per_irs = mass(2) / plan.irs_count(2) as f64;
        assert!(per_irs <= k.max_users_per_irs * (1.0 + 1e-9));
        for ring in 2..=plan.rings() {
            let load = mass(ring) / plan.irs_count(ring) as f64;
            if plan.inner(ring) > 0.0 {
                assert!((load - per_irs).abs() < 1e-6 * per_irs, "M = {m}, ring {ring}: {load} vs {per_irs}");
            } else {
                assert!(load <= per_irs * (1.0 + 1e-9));
            }
        }
    }
}

#[test]
fn algorithm1_served_area_grows_then_saturates() {
    let mut pl = planner();
    let full = pl.model().cell().area();
    let mut last = 0.0;
    for m in (1..=150).step_by(7) {
        let a = pl.algorithm1(m, 10).unwrap().plan.irs_served_area();
        assert!(a >= last - 1e-6 * full, "M = {m}");
        assert!(a <= full * (1.0 + 1e-12));
        last = a;
    }
    assert!((last - full).abs() < 1e-9 * full);
}

#[test]
fn outer_edge_search_prefers_cell_edge() {
    let (c, k, irs) = setup();
    let grid = SearchGrid {
        search_outer_radius: true,
        ..SearchGrid::default()
    };
    let r = line_search(&k, &c, &irs, 0.95, 14, 2, &grid).unwrap();
    assert_eq!(r.plan.irs_outer_radius(), k.radius);
}
