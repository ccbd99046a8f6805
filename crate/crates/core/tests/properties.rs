//! Randomized checks of the model's structural invariants.

use std::f64::consts::PI;

use irsplan::channel::{composite_stats, composite_stats_at, mean_gain_direct, mean_gains_irs, IrsSpec, LinkGeometry, RadioConfig};
use irsplan::geometry::{locate_ue, sector_area, validate_plan, CellConfig, Region, RingPlan};
use irsplan::numerics::{inv_reg_upper_gamma, reg_upper_gamma, GaussLegendre};
use irsplan::powerctl::{equalize_power, EnergyModel};
use proptest::prelude::*;

/// Ring plan from sorted fractions of the cell radius.
fn plan_from(cell: &CellConfig, cuts: &[f64], counts: &[u32]) -> RingPlan {
    let mut radii: Vec<f64> = cuts.iter().map(|c| c * cell.radius).collect();
    radii.sort_by(|a, b| b.total_cmp(a));
    RingPlan::new(cell, radii, counts.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn upper_gamma_nonincreasing_in_x(alpha in 0.5f64..500.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let scale = 3.0 * alpha;
        let q_lo = reg_upper_gamma(alpha, lo * scale).unwrap();
        let q_hi = reg_upper_gamma(alpha, hi * scale).unwrap();
        prop_assert!(q_hi <= q_lo + 1e-15);
        prop_assert!((0.0..=1.0).contains(&q_lo));
    }

    #[test]
    fn inverse_upper_gamma_round_trip(alpha in 0.5f64..500.0, t in 0.0f64..1.0) {
        // x spread log-uniformly over [1e-6, 10 alpha]
        let x = (1e-6f64.ln() + t * ((10.0 * alpha).ln() - 1e-6f64.ln())).exp();
        let q = reg_upper_gamma(alpha, x).unwrap();
        if q < 1e-300 {
            // the tail underflows; nothing to invert
            return Ok(());
        }
        let back = inv_reg_upper_gamma(alpha, q).unwrap();
        let q_back = reg_upper_gamma(alpha, back).unwrap();
        prop_assert!((q_back - q).abs() <= 1e-8 * q.max(1e-300) || ((back - x) / x).abs() < 1e-8,
            "alpha {alpha} x {x}: q {q} back {back}");
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials(n in 1usize..40, coeffs in proptest::collection::vec(-1.0f64..1.0, 1..80)) {
        let rule = GaussLegendre::new(n);
        let deg = (2 * n - 1).min(coeffs.len() - 1);
        let c = &coeffs[..=deg];
        let poly = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        let got: f64 = rule.nodes().iter().zip(rule.weights()).map(|(&x, &w)| w * poly(x)).sum();
        // integral over [-1, 1] keeps the even powers only
        let exact: f64 = c.iter().enumerate().filter(|(k, _)| k % 2 == 0).map(|(k, &a)| 2.0 * a / (k as f64 + 1.0)).sum();
        prop_assert!((got - exact).abs() < 1e-12, "n {n} deg {deg}: {got} vs {exact}");
    }

    #[test]
    fn gamma_matching_identities(r in 1.0f64..400.0, d in 0.0f64..80.0, n in 0u32..5000) {
        let l = (r - d).abs();
        let s = composite_stats_at(&RadioConfig::default(), &IrsSpec { elements: n }, &LinkGeometry { r, l, d }).unwrap();
        prop_assert!(s.mean_z2 > 0.0 && s.var_z2 > 0.0);
        prop_assert!(((s.alpha / s.beta - s.mean_z2) / s.mean_z2).abs() < 1e-14);
        prop_assert!(((s.alpha / (s.beta * s.beta) - s.var_z2) / s.var_z2).abs() < 1e-13);
    }

    #[test]
    fn mean_power_grows_with_elements(r in 1.0f64..400.0, d in 0.0f64..80.0, n in 0u32..4000) {
        let l = (r - d).abs();
        let gains = mean_gains_irs(&RadioConfig::default(), &LinkGeometry { r, l, d });
        let a = composite_stats(&IrsSpec { elements: n }, &gains).unwrap();
        let b = composite_stats(&IrsSpec { elements: n + 1 }, &gains).unwrap();
        prop_assert!(b.mean_z2 > a.mean_z2);
    }

    #[test]
    fn mean_gains_bounded_and_decreasing(r in 0.0f64..1000.0, dr in 0.01f64..100.0) {
        let c = RadioConfig::default();
        let g = mean_gain_direct(&c, r);
        prop_assert!(g > 0.0 && g <= c.reference_gain());
        prop_assert!(mean_gain_direct(&c, r + dr) < g);
        let near = mean_gains_irs(&c, &LinkGeometry { r: r + dr, l: r, d: dr });
        let far = mean_gains_irs(&c, &LinkGeometry { r: r + 2.0 * dr, l: r + dr, d: dr });
        prop_assert!(far.ap_irs < near.ap_irs && near.ap_irs <= c.reference_gain());
        prop_assert!(near.irs_ue <= c.reference_gain());
    }

    #[test]
    fn cell_area_is_accounted_for(
        a in 0.05f64..1.0, b in 0.05f64..1.0, c in 0.0f64..1.0,
        m1 in 1u32..10, m2 in 1u32..60,
    ) {
        let cell = CellConfig::default();
        let p = plan_from(&cell, &[a, b, c], &[m1, m2]);
        let sectors: f64 = (1..=2).map(|i| sector_area(&p, i) * p.irs_count(i) as f64).sum();
        let disc = PI * p.ap_disc_radius().powi(2);
        let exterior = cell.area() - PI * p.irs_outer_radius().powi(2);
        prop_assert!(((sectors + disc + exterior) - cell.area()).abs() < 1e-9 * cell.area());
    }

    #[test]
    fn every_point_has_exactly_one_region(
        r in 0.0f64..=250.0, az in 0.0f64..std::f64::consts::TAU,
        a in 0.05f64..1.0, b in 0.05f64..1.0, c in 0.0f64..1.0, m1 in 1u32..10, m2 in 1u32..60,
    ) {
        let cell = CellConfig::default();
        let p = plan_from(&cell, &[a, b, c], &[m1, m2]);
        let loc = locate_ue(&cell, &p, r, az).unwrap();
        match loc.region {
            Region::ApOnly => {
                prop_assert!(r <= p.ap_disc_radius() || r > p.irs_outer_radius());
                prop_assert!(loc.geometry.is_none());
            }
            Region::Irs { ring, sector } => {
                prop_assert!(r <= p.outer(ring) && r >= p.inner(ring));
                prop_assert!(sector < p.irs_count(ring) as usize);
                let g = loc.geometry.unwrap();
                prop_assert!(g.validate().is_ok());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn allocated_ratios_sum_to_one(
        a in 0.3f64..1.0, b in 0.3f64..1.0, c in 0.0f64..0.3, m1 in 1u32..=10, m2 in 4u32..40,
    ) {
        let cell = CellConfig::default();
        let radio = RadioConfig::default();
        let model = EnergyModel::new(&radio, &cell, &IrsSpec::default(), 0.95).unwrap();
        let mut p = plan_from(&cell, &[a, b, c], &[m1, m2]);
        let coeffs = model.coefficients(&p).unwrap();
        let alloc = equalize_power(&coeffs, &radio, 0.95).unwrap();
        p.power_ratios = alloc.rho.clone();
        prop_assert!((alloc.rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(alloc.rho.iter().all(|&x| x >= 0.0));
        prop_assert!(((alloc.energy(&coeffs) - radio.energy_budget) / radio.energy_budget).abs() < 1e-10);
        prop_assert!(validate_plan(&cell, &p).iter().all(|v| v.constraint != "power_ratios"));
    }
}
