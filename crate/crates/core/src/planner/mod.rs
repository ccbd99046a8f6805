//! IRS placement: coverage range, exhaustive line search over ring layouts,
//! and the constructive ring heuristic.
//!
//! Every layout is scored by the closed-form power split, so searching only
//! has to range over ring radii and IRS counts. Maximizing the common
//! throughput is the same as minimizing the summed energy coefficients.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{composite_stats, mean_gain_direct, mean_gains_irs, IrsSpec, LinkGeometry, RadioConfig};
use crate::error::{Error, Result};
use crate::geometry::{validate_plan_total, CellConfig, RingPlan};
use crate::numerics::bisect;
use crate::powerctl::{
    ap_annulus_coefficient, equalize_power, EnergyModel, PowerAllocation, RegionEnergyCoefficient,
};

/// Relative slack on the per-IRS user cap.
const CAP_SLACK: f64 = 1e-9;
/// Relative difference in throughput treated as a tie.
const TIE: f64 = 1e-9;

/// Discretization of the line search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchGrid {
    /// Spacing of candidate ring radii, m.
    pub radius_step: f64,
    /// Ratio resolution. The ratios are solved in closed form, so this only
    /// has to be a valid step.
    pub rho_step: f64,
    /// Largest number of rings tried.
    pub max_rings: usize,
    /// Also search the outer edge `R_in,0` of the IRS-served region.
    pub search_outer_radius: bool,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            radius_step: 5.0,
            rho_step: 0.01,
            max_rings: 3,
            search_outer_radius: false,
        }
    }
}

impl SearchGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_step > 0.0 && self.radius_step.is_finite()) {
            return Err(Error::Config(format!("grid.radius_step must be > 0, got {}", self.radius_step)));
        }
        if !(self.rho_step > 0.0 && self.rho_step < 1.0) {
            return Err(Error::Config(format!("grid.rho_step must lie in (0, 1), got {}", self.rho_step)));
        }
        if self.max_rings == 0 {
            return Err(Error::Config("grid.max_rings must be >= 1".into()));
        }
        Ok(())
    }
}

/// A placement with its power split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub method: String,
    pub plan: RingPlan,
    pub coefficients: Vec<RegionEnergyCoefficient>,
    pub allocation: PowerAllocation,
    pub nu_bar: f64,
}

impl PlanResult {
    /// Scores `plan` with the adaptive quadrature and stores the ratios in it.
    pub fn evaluate(model: &EnergyModel, method: &str, mut plan: RingPlan) -> Result<Self> {
        let coefficients = model.coefficients(&plan)?;
        let allocation = equalize_power(&coefficients, model.radio(), model.target_nop())?;
        plan.power_ratios = allocation.rho.clone();
        Ok(Self {
            method: method.to_string(),
            nu_bar: allocation.nu_bar,
            plan,
            coefficients,
            allocation,
        })
    }
}

/// Largest distance meeting a mean-SNR threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// AP-IRS distance, if an IRS is on the AP-UE line.
    pub irs_distance: Option<f64>,
    pub range: f64,
    /// False when the threshold is missed at the IRS itself; `range` then
    /// ends between the AP and the IRS.
    pub reachable: bool,
}

/// `r*` without IRS from the path-loss law, or `None` if even `r = 0` misses.
pub fn coverage_range_closed_form(cfg: &RadioConfig, p: f64, gamma_thresh: f64) -> Option<f64> {
    let d2 = (p * cfg.reference_gain() / (cfg.noise_power() * gamma_thresh)).powf(2.0 / cfg.path_loss_exponent);
    let r2 = d2 - cfg.ap_height * cfg.ap_height;
    (r2 >= 0.0).then(|| r2.sqrt())
}

/// Largest AP-UE distance at which the mean received SNR still reaches
/// `gamma_thresh`. With `l` set, an IRS sits on the AP-UE line at distance
/// `l` from the AP and the UE moves along that line.
pub fn coverage_range(
    cfg: &RadioConfig,
    irs: &IrsSpec,
    p: f64,
    gamma_thresh: f64,
    l: Option<f64>,
) -> Result<Coverage> {
    cfg.validate()?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(format!("transmit power must be > 0, got {p}")));
    }
    if !(gamma_thresh > 0.0 && gamma_thresh.is_finite()) {
        return Err(Error::domain(format!("SNR threshold must be > 0, got {gamma_thresh}")));
    }
    let w = cfg.noise_power();
    let direct_margin = |r: f64| p * mean_gain_direct(cfg, r) / w / gamma_thresh - 1.0;
    let Some(baseline) = coverage_range_closed_form(cfg, p, gamma_thresh) else {
        if l.is_none() {
            return Ok(Coverage {
                irs_distance: None,
                range: 0.0,
                reachable: false,
            });
        }
        return Err(Error::domain("threshold unreachable even next to the AP"));
    };
    let Some(l) = l else {
        let hi = 10.0 * baseline.max(1.0);
        let range = bisect(direct_margin, 0.0, hi)?;
        return Ok(Coverage {
            irs_distance: None,
            range,
            reachable: true,
        });
    };
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::domain(format!("AP-IRS distance must be >= 0, got {l}")));
    }
    let margin = |r: f64| -> f64 {
        let geom = LinkGeometry { r, l, d: (r - l).abs() };
        match composite_stats(irs, &mean_gains_irs(cfg, &geom)) {
            Ok(s) => p * s.mean_z2 / w / gamma_thresh - 1.0,
            Err(_) => f64::NAN,
        }
    };
    if !(margin(l) >= 0.0) {
        // the IRS itself is out of reach; coverage ends short of it, with the
        // IRS behind the UE still contributing
        let step = 1.0;
        let mut upper = l;
        let mut lower = (l - step).max(0.0);
        while !(margin(lower) >= 0.0) {
            if lower == 0.0 {
                return Ok(Coverage {
                    irs_distance: Some(l),
                    range: 0.0,
                    reachable: false,
                });
            }
            upper = lower;
            lower = (lower - step).max(0.0);
        }
        let range = bisect(margin, lower, upper)?;
        return Ok(Coverage {
            irs_distance: Some(l),
            range,
            reachable: false,
        });
    }
    // walk inward from the far end of the bracket so the largest crossing is found
    let hi = l.max(10.0 * baseline);
    let step = 1.0;
    let mut upper = hi;
    let mut lower = (upper - step).max(l);
    if margin(hi) >= 0.0 {
        return Err(Error::domain(format!("threshold still met at the bracket end {hi} m")));
    }
    while !(margin(lower) >= 0.0) {
        upper = lower;
        lower = (lower - step).max(l);
    }
    let range = if lower == upper {
        lower
    } else {
        bisect(margin, lower, upper)?
    };
    Ok(Coverage {
        irs_distance: Some(l),
        range,
        reachable: true,
    })
}

type CoeffKey = (u64, u64, u32, u64);

/// Ring coefficients computed by the screening rule, keyed by exact radii,
/// count and circle radius. Shared across searches with the same model.
#[derive(Debug, Default)]
pub struct CoefficientCache {
    map: HashMap<CoeffKey, f64>,
}

impl CoefficientCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn get(&self, key: &CoeffKey) -> f64 {
        self.map[key]
    }

    fn fill(&mut self, model: &EnergyModel, keys: Vec<CoeffKey>) -> Result<()> {
        let mut missing: Vec<CoeffKey> = keys.into_iter().filter(|k| !self.map.contains_key(k)).collect();
        missing.sort_unstable();
        missing.dedup();
        let values = missing
            .par_iter()
            .map(|&(o, i, m, l)| {
                model.ring_coefficient_screen(f64::from_bits(o), f64::from_bits(i), m, f64::from_bits(l))
            })
            .collect::<Result<Vec<_>>>()?;
        self.map.extend(missing.into_iter().zip(values));
        Ok(())
    }
}

fn key(outer: f64, inner: f64, m: u32, l: f64) -> CoeffKey {
    (outer.to_bits(), inner.to_bits(), m, l.to_bits())
}

/// Searches placements and scores them for one radio/cell/IRS setup.
pub struct Planner {
    model: EnergyModel,
    grid: SearchGrid,
    cache: CoefficientCache,
}

/// Search state: a ring with outer radius `outer` and `rings` rings left to
/// place from `rem` IRSs.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct State {
    outer: u64,
    rem: u32,
    rings: usize,
}

#[derive(Clone, Copy)]
struct Best {
    cost: f64,
    m: u32,
    inner: f64,
}

impl Planner {
    pub fn new(model: EnergyModel, grid: SearchGrid) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            model,
            grid,
            cache: CoefficientCache::new(),
        })
    }

    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn grid(&self) -> &SearchGrid {
        &self.grid
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    fn cell(&self) -> &CellConfig {
        self.model.cell()
    }

    /// Largest ring area `m` IRSs may serve, m^2.
    fn capacity(&self, m: u32) -> f64 {
        m as f64 * self.cell().max_users_per_irs / self.cell().density()
    }

    /// Inner-radius candidates for a ring of `m` IRSs below `outer`: grid
    /// points that respect the per-IRS cap plus the radius at which the cap
    /// binds exactly. Ascending.
    fn inner_candidates(&self, outer: f64, m: u32) -> Vec<f64> {
        let tight2 = outer * outer - self.capacity(m) / PI;
        let lo = tight2.max(0.0).sqrt();
        let step = self.grid.radius_step;
        let mut out = Vec::new();
        if tight2 > 0.0 {
            out.push(lo);
        }
        let mut k = (lo / step).ceil() as u64;
        loop {
            let r = k as f64 * step;
            if r >= outer * (1.0 - 1e-12) {
                break;
            }
            if out.last().is_none_or(|&x| (r - x).abs() > 1e-9) && r >= lo {
                out.push(r);
            }
            k += 1;
        }
        out.retain(|&r| self.fits(outer, r, m));
        out
    }

    fn fits(&self, outer: f64, inner: f64, m: u32) -> bool {
        inner < outer && PI * (outer * outer - inner * inner) <= self.capacity(m) * (1.0 + CAP_SLACK)
    }

    fn circle_radius(&self, first: bool, outer: f64, inner: f64) -> f64 {
        if first {
            self.cell().near_ap_radius
        } else {
            0.5 * (outer + inner)
        }
    }

    fn count_range(&self, first: bool, rem: u32, rings: usize) -> std::ops::RangeInclusive<u32> {
        let spare = rem.saturating_sub(rings as u32 - 1);
        if rings == 1 {
            // the last ring takes whatever is left
            let ok = !first || rem <= self.cell().near_ap_max;
            return if ok && rem >= 1 { rem..=rem } else { std::ops::RangeInclusive::new(1, 0) };
        }
        let hi = if first { spare.min(self.cell().near_ap_max) } else { spare };
        1..=hi
    }

    /// Every ring coefficient the search below `state` can touch.
    fn collect(&self, first: bool, st: State, seen: &mut HashMap<(bool, State), ()>, keys: &mut Vec<CoeffKey>) {
        if seen.insert((first, st), ()).is_some() {
            return;
        }
        let outer = f64::from_bits(st.outer);
        for m in self.count_range(first, st.rem, st.rings) {
            for inner in self.inner_candidates(outer, m) {
                keys.push(key(outer, inner, m, self.circle_radius(first, outer, inner)));
                if st.rings > 1 && inner > 0.0 {
                    let next = State {
                        outer: inner.to_bits(),
                        rem: st.rem - m,
                        rings: st.rings - 1,
                    };
                    self.collect(false, next, seen, keys);
                }
            }
        }
    }

    /// Cheapest completion below `state`: ring coefficients plus the AP disc.
    fn solve(&self, first: bool, st: State, memo: &mut HashMap<(bool, State), Option<Best>>) -> Result<Option<Best>> {
        if let Some(b) = memo.get(&(first, st)) {
            return Ok(*b);
        }
        let outer = f64::from_bits(st.outer);
        let cfg = self.model.radio();
        let p_no = self.model.target_nop();
        let mut best: Option<Best> = None;
        for m in self.count_range(first, st.rem, st.rings) {
            for inner in self.inner_candidates(outer, m) {
                let ring = self.cache.get(&key(outer, inner, m, self.circle_radius(first, outer, inner)));
                let rest = if st.rings == 1 {
                    Some(ap_annulus_coefficient(cfg, self.cell(), p_no, 0.0, inner)?.coefficient)
                } else if inner > 0.0 {
                    let next = State {
                        outer: inner.to_bits(),
                        rem: st.rem - m,
                        rings: st.rings - 1,
                    };
                    self.solve(false, next, memo)?.map(|b| b.cost)
                } else {
                    None
                };
                if let Some(rest) = rest {
                    let cost = ring + rest;
                    if best.is_none_or(|b| cost < b.cost) {
                        best = Some(Best { cost, m, inner });
                    }
                }
            }
        }
        memo.insert((first, st), best);
        Ok(best)
    }

    fn outer_candidates(&self) -> Vec<f64> {
        let r_ex = self.cell().radius;
        if !self.grid.search_outer_radius {
            return vec![r_ex];
        }
        let step = self.grid.radius_step;
        let mut out = vec![r_ex];
        let mut k = ((r_ex / step).ceil() as u64).saturating_sub(1);
        while k > 0 {
            let r = k as f64 * step;
            if r < r_ex - 1e-9 {
                out.push(r);
            }
            k -= 1;
        }
        out
    }

    /// Best layout with exactly `rings` rings, or `None` if none is feasible.
    fn search_rings(&mut self, m_total: u32, rings: usize) -> Result<Option<(f64, RingPlan)>> {
        if (m_total as usize) < rings {
            return Ok(None);
        }
        let outers = self.outer_candidates();
        let mut keys = Vec::new();
        let mut seen = HashMap::new();
        for &o in &outers {
            let st = State {
                outer: o.to_bits(),
                rem: m_total,
                rings,
            };
            self.collect(true, st, &mut seen, &mut keys);
        }
        self.cache.fill(&self.model, keys)?;

        let cfg = *self.model.radio();
        let cell = *self.cell();
        let p_no = self.model.target_nop();
        let mut memo = HashMap::new();
        let mut best: Option<(f64, f64)> = None;
        for &o in &outers {
            let st = State {
                outer: o.to_bits(),
                rem: m_total,
                rings,
            };
            if let Some(b) = self.solve(true, st, &mut memo)? {
                let ext = ap_annulus_coefficient(&cfg, &cell, p_no, o, cell.radius)?.coefficient;
                let cost = b.cost + ext;
                if best.is_none_or(|(c, _)| cost < c) {
                    best = Some((cost, o));
                }
            }
        }
        let Some((cost, outer)) = best else {
            return Ok(None);
        };
        // walk the memo back down to recover the layout
        let mut radii = vec![outer];
        let mut counts = Vec::new();
        let mut st = State {
            outer: outer.to_bits(),
            rem: m_total,
            rings,
        };
        let mut first = true;
        loop {
            let b = memo[&(first, st)].ok_or_else(|| Error::Internal("search lost its own optimum".into()))?;
            radii.push(b.inner);
            counts.push(b.m);
            if st.rings == 1 {
                break;
            }
            st = State {
                outer: b.inner.to_bits(),
                rem: st.rem - b.m,
                rings: st.rings - 1,
            };
            first = false;
        }
        Ok(Some((cost, RingPlan::new(&cell, radii, counts)?)))
    }

    /// Exhaustive search over up to `max_rings` rings with exactly `m_total` IRSs.
    pub fn line_search(&mut self, m_total: u32, max_rings: usize) -> Result<PlanResult> {
        if m_total == 0 {
            return Err(Error::domain("line search needs at least one IRS"));
        }
        if max_rings == 0 {
            return Err(Error::domain("line search needs at least one ring"));
        }
        let mut best: Option<(f64, RingPlan)> = None;
        let mut reasons = Vec::new();
        for rings in 1..=max_rings {
            match self.search_rings(m_total, rings)? {
                Some((cost, plan)) => {
                    // ties keep the layout with fewer rings
                    let better = best.as_ref().is_none_or(|(c, _)| (c - cost) / c > TIE);
                    if better {
                        best = Some((cost, plan));
                    }
                }
                None => reasons.push(self.infeasibility(m_total, rings)),
            }
        }
        let Some((_, plan)) = best else {
            return Err(Error::Infeasible(reasons));
        };
        let result = PlanResult::evaluate(&self.model, "line-search", plan)?;
        self.check(&result, m_total)?;
        Ok(result)
    }

    fn infeasibility(&self, m_total: u32, rings: usize) -> String {
        let cell = self.cell();
        if (m_total as usize) < rings {
            format!("irs_total: {m_total} IRSs cannot fill {rings} rings")
        } else if rings == 1 && m_total > cell.near_ap_max {
            format!(
                "near_ap_max: a single near-AP ring holds at most {} IRSs, {m_total} requested",
                cell.near_ap_max
            )
        } else {
            format!(
                "users_per_irs: no {rings}-ring layout of {m_total} IRSs keeps every sector under {} UEs on the {} m grid",
                cell.max_users_per_irs, self.grid.radius_step
            )
        }
    }

    fn check(&self, result: &PlanResult, m_total: u32) -> Result<()> {
        let v = validate_plan_total(self.cell(), &result.plan, m_total);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Internal(format!("planner produced an invalid plan: {v:?}")))
        }
    }

    /// Constructive ring heuristic: near-AP IRSs first, then rings of
    /// equal radial width filled at the per-IRS user cap, best over
    /// `2..=max_rings` rings.
    pub fn algorithm1(&mut self, m_total: u32, max_rings: usize) -> Result<PlanResult> {
        if m_total == 0 {
            return Err(Error::domain("algorithm needs at least one IRS"));
        }
        let cell = *self.cell();
        let lam = cell.density();
        let k_cap = cell.max_users_per_irs;
        let r_ex = cell.radius;
        let a1 = k_cap / lam;
        let shrink = |outer: f64, area: f64| (outer * outer - area / PI).max(0.0).sqrt();

        if m_total <= cell.near_ap_max {
            let r1 = shrink(r_ex, m_total as f64 * a1);
            let plan = RingPlan::new(&cell, vec![r_ex, r1], vec![m_total])?;
            let result = PlanResult::evaluate(&self.model, "algorithm1", plan)?;
            self.check(&result, m_total)?;
            return Ok(result);
        }

        let m1 = cell.near_ap_max;
        let r1 = shrink(r_ex, m1 as f64 * a1);
        let mut best: Option<PlanResult> = None;
        for rings in 2..=max_rings.max(2) {
            let Some(plan) = algorithm1_layout(&cell, m_total, m1, r1, rings) else {
                continue;
            };
            let result = PlanResult::evaluate(&self.model, "algorithm1", plan)?;
            if best.as_ref().is_none_or(|b| result.nu_bar > b.nu_bar * (1.0 + TIE)) {
                best = Some(result);
            }
        }
        let best = best.ok_or_else(|| {
            Error::Infeasible(vec![format!("irs_total: no ring layout uses all {m_total} IRSs")])
        })?;
        self.check(&best, m_total)?;
        Ok(best)
    }
}

/// Steps 3-10 of the heuristic for a fixed ring count. `None` when the
/// IRSs run out before the last ring.
fn algorithm1_layout(cell: &CellConfig, m_total: u32, m1: u32, r1: f64, rings: usize) -> Option<RingPlan> {
    let lam = cell.density();
    let r_ex = cell.radius;
    let m_rest = m_total - m1;
    if (m_rest as usize) < rings - 1 {
        return None;
    }
    let mut k_bar = cell.max_users_per_irs;
    let area = m1 as f64 * k_bar / lam + m_rest as f64 * k_bar / lam;
    let r_last = if area > PI * r_ex * r_ex {
        k_bar = lam * PI * r1 * r1 / m_rest as f64;
        0.0
    } else {
        (r_ex * r_ex - area / PI).sqrt()
    };
    let mut radii = vec![r_ex, r1];
    let mut counts = vec![m1];
    let mut used = m1;
    for i in 2..=rings {
        let prev = *radii.last().expect("radii start non-empty");
        if prev <= 0.0 {
            return None;
        }
        let m = if i == rings {
            if m_total <= used {
                return None;
            }
            m_total - used
        } else {
            let delta = (prev - r_last) / (rings - i + 1) as f64;
            let target = prev - delta;
            let mass = lam * PI * (prev * prev - target * target) / k_bar;
            ((mass - 1e-9).ceil() as u32).max(1)
        };
        // ring area M_i A_i with A_i = K_bar / lambda
        let inner = (prev * prev - m as f64 * k_bar / (lam * PI)).max(0.0).sqrt();
        radii.push(inner);
        counts.push(m);
        used += m;
    }
    if used != m_total {
        return None;
    }
    RingPlan::new(cell, radii, counts).ok()
}

/// One-shot line search with a fresh planner.
pub fn line_search(
    cell: &CellConfig,
    cfg: &RadioConfig,
    irs: &IrsSpec,
    p_no: f64,
    m_total: u32,
    max_rings: usize,
    grid: &SearchGrid,
) -> Result<PlanResult> {
    let model = EnergyModel::new(cfg, cell, irs, p_no)?;
    Planner::new(model, *grid)?.line_search(m_total, max_rings)
}

/// One-shot run of the constructive heuristic.
pub fn algorithm1(
    cell: &CellConfig,
    cfg: &RadioConfig,
    irs: &IrsSpec,
    p_no: f64,
    m_total: u32,
    max_rings: usize,
) -> Result<PlanResult> {
    let model = EnergyModel::new(cfg, cell, irs, p_no)?;
    Planner::new(model, SearchGrid::default())?.algorithm1(m_total, max_rings)
}

#[cfg(test)]
mod tests;
