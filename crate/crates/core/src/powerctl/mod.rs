//! Power control: channel inversion for AP-only UEs, NOP-equalizing power for
//! IRS-served UEs, and the closed-form split of the energy budget.
//!
//! Under both policies a region's frame energy is linear in the common SNR
//! threshold `eta0`, `E_region = eta0 * C_region`. Everything else follows from
//! the coefficients `C`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{
    composite_stats, mean_gain_direct, mean_gains_irs, CompositeChannelStats, IrsSpec, LinkGeometry,
    RadioConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{irs_ue_distance, locate_ue, CellConfig, Region, RingPlan};
use crate::numerics::{
    integrate_polar_sector_with, GammaQuantileTable, GaussLegendre, QuadOptions, Tolerance,
};

/// Shape range covered by the quantile table. Outside it the exact inversion is used.
const TABLE_ALPHA: (f64, f64) = (0.5, 1.0e5);

/// Points per axis and panel of the fixed screening rule.
const SCREEN_POINTS: usize = 16;
/// The screening rule breaks the angular axis at this arc length from the IRS azimuth, m.
const SCREEN_ARC: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionId {
    ApOnly,
    Ring { ring: usize },
}

/// Frame energy per unit of `eta0` for one region, J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEnergyCoefficient {
    pub region: RegionId,
    pub coefficient: f64,
}

/// Budget split across regions and the resulting common throughput.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub regions: Vec<RegionId>,
    /// Energy ratios, aligned with `regions`.
    pub rho: Vec<f64>,
    /// Common SNR threshold.
    pub eta0_star: f64,
    /// Common rate `log2(1 + eta0*)`, bps/Hz.
    pub rate: f64,
    /// Common throughput, bps/Hz.
    pub nu_bar: f64,
    /// Throughput each region achieves with its share. Regions without area
    /// carry the common value.
    pub region_throughputs: Vec<f64>,
}

impl PowerAllocation {
    /// Budget actually spent, `sum eta0* C`.
    pub fn energy(&self, coeffs: &[RegionEnergyCoefficient]) -> f64 {
        coeffs.iter().map(|c| self.eta0_star * c.coefficient).sum()
    }
}

/// Common throughput of a complete scheme plus the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub scheme: String,
    /// True for the IRS benchmarks whose power policy is defined by this crate.
    pub repo_defined: bool,
    pub target_nop: f64,
    pub eta0: f64,
    pub rate: f64,
    pub nu_bar: f64,
    /// UE position `(r, azimuth)` that limits the common throughput, if any.
    pub worst_position: Option<(f64, f64)>,
}

impl ThroughputReport {
    fn new(scheme: &str, repo_defined: bool, p_no: f64, eta0: f64, worst: Option<(f64, f64)>) -> Self {
        let rate = (1.0 + eta0).log2();
        Self {
            scheme: scheme.to_string(),
            repo_defined,
            target_nop: p_no,
            eta0,
            rate,
            nu_bar: p_no * rate,
            worst_position: worst,
        }
    }
}

fn check_p_no(p_no: f64) -> Result<()> {
    if !(p_no > 0.0 && p_no < 1.0) {
        return Err(Error::domain(format!("target NOP must lie in (0, 1), got {p_no}")));
    }
    Ok(())
}

/// Transmit power that gives mean received SNR `gamma_bar` at distance `r`.
pub fn cipc_power(cfg: &RadioConfig, gamma_bar: f64, r: f64) -> f64 {
    gamma_bar * cfg.noise_power() / mean_gain_direct(cfg, r)
}

/// `integral_0^R (r^2 + H_A^2)^(n0/2) r dr` in closed form.
pub fn f0_integral(cfg: &RadioConfig, radius: f64) -> f64 {
    let k = 0.5 * cfg.path_loss_exponent + 1.0;
    let h2 = cfg.ap_height * cfg.ap_height;
    ((radius * radius + h2).powf(k) - h2.powf(k)) / (2.0 * k)
}

/// `C_0` of an AP-only disc of radius `r_inner`.
pub fn ap_region_coefficient(
    cfg: &RadioConfig,
    cell: &CellConfig,
    p_no: f64,
    r_inner: f64,
) -> Result<RegionEnergyCoefficient> {
    ap_annulus_coefficient(cfg, cell, p_no, 0.0, r_inner)
}

/// AP-only coefficient of the annulus `r_lo < r <= r_hi`.
pub fn ap_annulus_coefficient(
    cfg: &RadioConfig,
    cell: &CellConfig,
    p_no: f64,
    r_lo: f64,
    r_hi: f64,
) -> Result<RegionEnergyCoefficient> {
    check_p_no(p_no)?;
    if !(r_lo >= 0.0 && r_hi >= r_lo) {
        return Err(Error::domain(format!("bad AP-only annulus [{r_lo}, {r_hi}]")));
    }
    let f = f0_integral(cfg, r_hi) - f0_integral(cfg, r_lo);
    let c = 2.0 * PI * cell.density() * cfg.noise_power() * cfg.slot_duration() * f
        / (cfg.reference_gain() * (1.0 / p_no).ln());
    Ok(RegionEnergyCoefficient {
        region: RegionId::ApOnly,
        coefficient: c,
    })
}

/// `C_i` of ring `i` of `plan`.
pub fn irs_region_coefficient(
    cfg: &RadioConfig,
    cell: &CellConfig,
    irs: &IrsSpec,
    plan: &RingPlan,
    ring: usize,
    p_no: f64,
) -> Result<RegionEnergyCoefficient> {
    EnergyModel::new(cfg, cell, irs, p_no)?.ring_coefficient(plan, ring)
}

/// Splits `E_total` so that every region reaches the same SNR threshold.
pub fn equalize_power(
    coeffs: &[RegionEnergyCoefficient],
    cfg: &RadioConfig,
    p_no: f64,
) -> Result<PowerAllocation> {
    check_p_no(p_no)?;
    if coeffs.iter().any(|c| !(c.coefficient >= 0.0 && c.coefficient.is_finite())) {
        return Err(Error::domain("energy coefficients must be finite and >= 0"));
    }
    let total: f64 = coeffs.iter().map(|c| c.coefficient).sum();
    if !(total > 0.0) {
        return Err(Error::domain("every region has zero energy coefficient"));
    }
    let e = cfg.energy_budget;
    let eta0 = e / total;
    let rate = (1.0 + eta0).log2();
    let nu_bar = p_no * rate;
    let rho: Vec<f64> = coeffs.iter().map(|c| c.coefficient / total).collect();
    let region_throughputs = coeffs
        .iter()
        .zip(&rho)
        .map(|(c, r)| {
            if c.coefficient > 0.0 {
                p_no * (1.0 + r * e / c.coefficient).log2()
            } else {
                nu_bar
            }
        })
        .collect();
    Ok(PowerAllocation {
        regions: coeffs.iter().map(|c| c.region).collect(),
        rho,
        eta0_star: eta0,
        rate,
        nu_bar,
        region_throughputs,
    })
}

/// AP-only cell where every UE gets `E_total / (K t0)`; the cell edge limits.
pub fn benchmark_equal_power(cfg: &RadioConfig, cell: &CellConfig, p_no: f64) -> Result<ThroughputReport> {
    check_p_no(p_no)?;
    let p = cfg.energy_budget / (cell.users as f64 * cfg.slot_duration());
    let eta0 = p * mean_gain_direct(cfg, cell.radius) * (1.0 / p_no).ln() / cfg.noise_power();
    Ok(ThroughputReport::new(
        "ap-equal-power",
        false,
        p_no,
        eta0,
        Some((cell.radius, 0.0)),
    ))
}

/// AP-only cell under slow channel inversion.
pub fn benchmark_cipc(cfg: &RadioConfig, cell: &CellConfig, p_no: f64) -> Result<ThroughputReport> {
    let c = ap_region_coefficient(cfg, cell, p_no, cell.radius)?;
    let alloc = equalize_power(&[c], cfg, p_no)?;
    Ok(ThroughputReport::new("ap-cipc", false, p_no, alloc.eta0_star, None))
}

/// IRS placement from `plan`, equal power per UE. The max-min threshold is
/// taken at the worst point of a polar grid over every region.
pub fn benchmark_irs_equal_power(
    cfg: &RadioConfig,
    cell: &CellConfig,
    irs: &IrsSpec,
    plan: &RingPlan,
    p_no: f64,
) -> Result<ThroughputReport> {
    let model = EnergyModel::new(cfg, cell, irs, p_no)?;
    let p = cfg.energy_budget / (cell.users as f64 * cfg.slot_duration());
    let w = cfg.noise_power();
    let ln_inv = (1.0 / p_no).ln();
    let (eta0, worst) = model.worst_point(plan, |pt| match pt {
        GridPoint::Direct { g_d } => Ok(p * g_d * ln_inv / w),
        GridPoint::Irs { stats } => Ok(p * model.quantile(stats.alpha)? / (stats.beta * w)),
    })?;
    Ok(ThroughputReport::new("irs-equal-power", true, p_no, eta0, worst))
}

/// IRS placement from `plan`, with every UE's power inverting its mean
/// channel gain (`E{Z^2}` for IRS-served UEs). The common mean SNR follows
/// from the budget; outage is then evaluated pointwise.
pub fn benchmark_irs_mean_cipc(
    cfg: &RadioConfig,
    cell: &CellConfig,
    irs: &IrsSpec,
    plan: &RingPlan,
    p_no: f64,
) -> Result<ThroughputReport> {
    let model = EnergyModel::new(cfg, cell, irs, p_no)?;
    let lam = cell.density();
    let w = cfg.noise_power();
    let t0 = cfg.slot_duration();
    // energy per unit mean SNR
    let mut per_gamma = 2.0 * PI * lam * w * t0 / cfg.reference_gain()
        * (f0_integral(cfg, plan.ap_disc_radius()) + f0_integral(cfg, cell.radius)
            - f0_integral(cfg, plan.irs_outer_radius()));
    for ring in 1..=plan.rings() {
        let inv_mean = model.sector_integral(plan, ring, |s| Ok(1.0 / s.mean_z2))?;
        per_gamma += plan.irs_count(ring) as f64 * lam * w * t0 * inv_mean;
    }
    let gamma_bar = cfg.energy_budget / per_gamma;
    let ln_inv = (1.0 / p_no).ln();
    let (eta0, worst) = model.worst_point(plan, |pt| match pt {
        GridPoint::Direct { .. } => Ok(gamma_bar * ln_inv),
        GridPoint::Irs { stats } => Ok(gamma_bar * model.quantile(stats.alpha)? / stats.alpha),
    })?;
    Ok(ThroughputReport::new("irs-mean-cipc", true, p_no, eta0, worst))
}

enum GridPoint {
    Direct { g_d: f64 },
    Irs { stats: CompositeChannelStats },
}

/// Region energy model for one radio/cell/IRS setup and NOP target.
///
/// Holds the quantile table for the target so repeated coefficient
/// evaluations only pay for interpolation.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    cfg: RadioConfig,
    cell: CellConfig,
    irs: IrsSpec,
    p_no: f64,
    quad: QuadOptions,
    table: GammaQuantileTable,
    screen: GaussLegendre,
}

/// Radial and angular points per ring in the worst-position grid.
const GRID_RADIAL: usize = 41;
const GRID_ANGULAR: usize = 21;

impl EnergyModel {
    pub fn new(cfg: &RadioConfig, cell: &CellConfig, irs: &IrsSpec, p_no: f64) -> Result<Self> {
        check_p_no(p_no)?;
        cfg.validate()?;
        cell.validate()?;
        let tol = Tolerance::default();
        let table = GammaQuantileTable::new(p_no, TABLE_ALPHA.0, TABLE_ALPHA.1, &tol)?;
        Ok(Self {
            cfg: *cfg,
            cell: *cell,
            irs: *irs,
            p_no,
            quad: QuadOptions::default(),
            table,
            screen: GaussLegendre::new(SCREEN_POINTS),
        })
    }

    pub fn with_quadrature(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    pub fn radio(&self) -> &RadioConfig {
        &self.cfg
    }

    pub fn cell(&self) -> &CellConfig {
        &self.cell
    }

    pub fn irs(&self) -> &IrsSpec {
        &self.irs
    }

    pub fn target_nop(&self) -> f64 {
        self.p_no
    }

    /// `x` with `Q(alpha, x) = p_no`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        self.table.quantile(alpha)
    }

    /// Composite statistics for a UE at `(r, offset)` from an IRS on circle `l`.
    pub fn stats(&self, r: f64, l: f64, offset: f64) -> Result<CompositeChannelStats> {
        let geom = LinkGeometry {
            r,
            l,
            d: irs_ue_distance(r, l, offset),
        };
        composite_stats(&self.irs, &mean_gains_irs(&self.cfg, &geom))
    }

    /// `beta / Q^-1(alpha, p_no)`: power per unit `W eta0` for an IRS-served UE.
    pub fn irs_power_factor(&self, stats: &CompositeChannelStats) -> Result<f64> {
        Ok(stats.beta / self.quantile(stats.alpha)?)
    }

    /// Coefficient of every region of `plan`: AP-only first, then rings in order.
    pub fn coefficients(&self, plan: &RingPlan) -> Result<Vec<RegionEnergyCoefficient>> {
        let mut out = Vec::with_capacity(plan.rings() + 1);
        out.push(self.ap_coefficient(plan)?);
        for ring in 1..=plan.rings() {
            out.push(self.ring_coefficient(plan, ring)?);
        }
        Ok(out)
    }

    /// AP-only coefficient of `plan`: the inner disc plus any exterior annulus.
    pub fn ap_coefficient(&self, plan: &RingPlan) -> Result<RegionEnergyCoefficient> {
        let disc = ap_region_coefficient(&self.cfg, &self.cell, self.p_no, plan.ap_disc_radius())?;
        let outer = plan.irs_outer_radius().min(self.cell.radius);
        let ext = ap_annulus_coefficient(&self.cfg, &self.cell, self.p_no, outer, self.cell.radius)?;
        Ok(RegionEnergyCoefficient {
            region: RegionId::ApOnly,
            coefficient: disc.coefficient + ext.coefficient,
        })
    }

    pub fn ring_coefficient(&self, plan: &RingPlan, ring: usize) -> Result<RegionEnergyCoefficient> {
        let c = self.ring_coefficient_raw(plan.outer(ring), plan.inner(ring), plan.irs_count(ring), plan.irs_radius(ring))?;
        Ok(RegionEnergyCoefficient {
            region: RegionId::Ring { ring },
            coefficient: c,
        })
    }

    /// `C_i = M_i lambda W t0 F_i` for a ring given by its radii, IRS count and circle radius.
    pub fn ring_coefficient_raw(&self, outer: f64, inner: f64, m: u32, l: f64) -> Result<f64> {
        if m == 0 {
            return Err(Error::domain("ring must hold at least one IRS"));
        }
        let f = self.sector_integral_raw(outer, inner, m, l, |s| self.irs_power_factor(s))?;
        Ok(m as f64 * self.cell.density() * self.cfg.noise_power() * self.cfg.slot_duration() * f)
    }

    /// Cheap estimate of [`ring_coefficient_raw`](Self::ring_coefficient_raw)
    /// for ranking candidate plans.
    ///
    /// A fixed tensor-product rule with panel breaks at the IRS circle and
    /// close to the IRS azimuth, where the integrand bends sharply. Agrees
    /// with the adaptive value to about 1e-7 relative at cell scale.
    pub fn ring_coefficient_screen(&self, outer: f64, inner: f64, m: u32, l: f64) -> Result<f64> {
        if m == 0 {
            return Err(Error::domain("ring must hold at least one IRS"));
        }
        if !(inner >= 0.0 && outer >= inner) {
            return Err(Error::domain(format!("bad ring radii: inner {inner}, outer {outer}")));
        }
        if outer == inner {
            return Ok(0.0);
        }
        let half = PI / m as f64;
        let mut rb = [inner, outer, outer];
        let nr = if l > inner && l < outer {
            rb[1] = l;
            2
        } else {
            1
        };
        let mut ab = [0.0, half, half];
        let a1 = SCREEN_ARC / l.max(1.0);
        let na = if a1 < 0.75 * half {
            ab[1] = a1;
            2
        } else {
            1
        };
        let (xs, ws) = (self.screen.nodes(), self.screen.weights());
        let mut total = 0.0;
        for pr in 0..nr {
            let (r0, hr) = (rb[pr], 0.5 * (rb[pr + 1] - rb[pr]));
            for (x, w) in xs.iter().zip(ws) {
                let r = r0 + hr * (x + 1.0);
                let mut inner_sum = 0.0;
                for pa in 0..na {
                    let (a0, ha) = (ab[pa], 0.5 * (ab[pa + 1] - ab[pa]));
                    let mut s = 0.0;
                    for (y, v) in xs.iter().zip(ws) {
                        s += v * self.irs_power_factor(&self.stats(r, l, a0 + ha * (y + 1.0))?)?;
                    }
                    inner_sum += ha * s;
                }
                total += w * hr * r * inner_sum;
            }
        }
        Ok(2.0 * total * m as f64 * self.cell.density() * self.cfg.noise_power() * self.cfg.slot_duration())
    }

    /// `integral over one sector of g(stats) dA` for ring `i` of `plan`.
    fn sector_integral<G>(&self, plan: &RingPlan, ring: usize, g: G) -> Result<f64>
    where
        G: Fn(&CompositeChannelStats) -> Result<f64>,
    {
        self.sector_integral_raw(plan.outer(ring), plan.inner(ring), plan.irs_count(ring), plan.irs_radius(ring), g)
    }

    /// The integrand is symmetric about the IRS azimuth, so half a sector is
    /// integrated and doubled.
    fn sector_integral_raw<G>(&self, outer: f64, inner: f64, m: u32, l: f64, g: G) -> Result<f64>
    where
        G: Fn(&CompositeChannelStats) -> Result<f64>,
    {
        if !(inner >= 0.0 && outer >= inner) {
            return Err(Error::domain(format!("bad ring radii: inner {inner}, outer {outer}")));
        }
        if outer == inner {
            return Ok(0.0);
        }
        let half = PI / m as f64;
        let mut err = None;
        let v = integrate_polar_sector_with(
            |r, a| match self.stats(r, l, a).and_then(|s| g(&s)) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
            inner,
            outer,
            half,
            &self.quad,
        );
        if let Some(e) = err {
            return Err(e);
        }
        Ok(2.0 * v?)
    }

    /// Planned transmit power of a UE at `(r, azimuth)` for threshold `eta0`.
    pub fn ue_power(&self, plan: &RingPlan, r: f64, azimuth: f64, eta0: f64) -> Result<f64> {
        let loc = locate_ue(&self.cell, plan, r, azimuth)?;
        let w = self.cfg.noise_power();
        match (loc.region, loc.geometry) {
            (Region::Irs { .. }, Some(geom)) => {
                let s = composite_stats(&self.irs, &mean_gains_irs(&self.cfg, &geom))?;
                Ok(w * eta0 * self.irs_power_factor(&s)?)
            }
            _ => Ok(self.direct_power(r, eta0)),
        }
    }

    /// CIPC power that meets the target at threshold `eta0` over the direct link.
    pub fn direct_power(&self, r: f64, eta0: f64) -> f64 {
        cipc_power(&self.cfg, eta0 / (1.0 / self.p_no).ln(), r)
    }

    /// Minimum of `eval` over a polar grid covering every region of `plan`.
    fn worst_point<F>(&self, plan: &RingPlan, eval: F) -> Result<(f64, Option<(f64, f64)>)>
    where
        F: Fn(GridPoint) -> Result<f64>,
    {
        let mut best = f64::INFINITY;
        let mut at = None;
        let mut visit = |v: f64, pos: (f64, f64)| {
            if v < best {
                best = v;
                at = Some(pos);
            }
        };
        // AP-only: the mean gain falls with r, so the outermost AP-only radius limits
        let mut ap_radii = Vec::new();
        if plan.ap_disc_radius() > 0.0 || plan.rings() == 0 {
            ap_radii.push(plan.ap_disc_radius());
        }
        if plan.irs_outer_radius() < self.cell.radius {
            ap_radii.push(self.cell.radius);
        }
        for r in ap_radii {
            let v = eval(GridPoint::Direct {
                g_d: mean_gain_direct(&self.cfg, r),
            })?;
            visit(v, (r, 0.0));
        }
        for ring in 1..=plan.rings() {
            let (lo, hi) = (plan.inner(ring), plan.outer(ring));
            if hi <= lo {
                continue;
            }
            let half = plan.sector_angle(ring) / 2.0;
            let l = plan.irs_radius(ring);
            let az0 = plan.sector(ring, 0).irs_azimuth;
            for i in 0..GRID_RADIAL {
                let r = lo + (hi - lo) * i as f64 / (GRID_RADIAL - 1) as f64;
                for j in 0..GRID_ANGULAR {
                    let off = half * j as f64 / (GRID_ANGULAR - 1) as f64;
                    let v = eval(GridPoint::Irs {
                        stats: self.stats(r, l, off)?,
                    })?;
                    visit(v, (r, az0 + off));
                }
            }
        }
        if at.is_none() {
            return Err(Error::domain("plan has no area to evaluate"));
        }
        Ok((best, at))
    }
}
