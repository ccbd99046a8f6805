//! Monte Carlo check of the analytical outage and energy model.
//!
//! Every random quantity comes from its own ChaCha8 stream, addressed by
//! (purpose, topology, UE, batch), so results do not depend on how work is
//! spread over threads.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{mean_gain_direct, mean_gains_irs, IrsSpec, LinkGeometry, MeanGains};
use crate::error::{Error, Result};
use crate::geometry::{locate_ue, Region, RingPlan};
use crate::planner::PlanResult;
use crate::powerctl::EnergyModel;

/// z for a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

/// Draws per RNG stream when one link is sampled many times.
const BATCH: usize = 8192;

const DOMAIN_TOPOLOGY: u64 = 1;
const DOMAIN_FADING: u64 = 2;
const DOMAIN_POINT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementDraws {
    /// N independent double-Rayleigh products per draw.
    Exact,
    /// The reflected amplitude drawn from its Gaussian approximation.
    GaussianSurrogate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_topologies: usize,
    /// Fading draws per UE.
    pub n_fading: usize,
    pub seed: u64,
    pub element_draws: ElementDraws,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_topologies: 100,
            n_fading: 10_000,
            seed: 1,
            element_draws: ElementDraws::GaussianSurrogate,
        }
    }
}

impl McConfig {
    /// 1000 topologies with 10^6 draws per link.
    pub fn full_scale(self) -> Self {
        Self {
            n_topologies: 1000,
            n_fading: 1_000_000,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_topologies == 0 || self.n_fading == 0 {
            return Err(Error::Config("mc.n_topologies and mc.n_fading must be >= 1".into()));
        }
        Ok(())
    }
}

/// Generator for one (purpose, topology, UE, batch) address.
pub fn stream(seed: u64, domain: u64, topology: u64, unit: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(topology);
    rng.set_word_pos((unit as u128) << 40);
    rng
}

/// `-ln u` for `u` uniform on (0, 1].
#[inline]
fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// One draw of the composite amplitude `Z = sum |h_i,n||h_r,n| + |h_d|`.
///
/// Rayleigh amplitudes come from `delta sqrt(-2 ln u)` with `delta^2 = g / 2`,
/// so a product of two is `sqrt(g_i g_r) sqrt(ln u1 ln u2)`.
pub fn draw_amplitude(rng: &mut ChaCha8Rng, gains: &MeanGains, irs: &IrsSpec, mode: ElementDraws) -> f64 {
    let hd = (gains.direct * exp1(rng)).sqrt();
    let gigr = gains.ap_irs * gains.irs_ue;
    let n = irs.elements;
    if n == 0 {
        return hd;
    }
    let x = match mode {
        ElementDraws::Exact => {
            let mut s = 0.0;
            for _ in 0..n {
                s += (exp1(rng) * exp1(rng)).sqrt();
            }
            gigr.sqrt() * s
        }
        ElementDraws::GaussianSurrogate => {
            let nf = n as f64;
            let mu = nf * PI / 4.0 * gigr.sqrt();
            let sd = (nf * (1.0 - PI * PI / 16.0) * gigr).sqrt();
            // Box-Muller, one variate per pair
            let u1 = 1.0 - rng.random::<f64>();
            let u2 = rng.random::<f64>();
            mu + sd * (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
        }
    };
    x + hd
}

/// Successes of `p Z^2 / W >= eta0` over `n` draws for one IRS-assisted link.
/// Batches run in parallel on their own streams.
pub fn nop_at_point(
    model: &EnergyModel,
    geom: &LinkGeometry,
    p: f64,
    eta0: f64,
    n: usize,
    mode: ElementDraws,
    seed: u64,
    point: u64,
) -> (u64, u64) {
    let gains = mean_gains_irs(model.radio(), geom);
    let need = eta0 * model.radio().noise_power() / p;
    let irs = *model.irs();
    let batches = n.div_ceil(BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, DOMAIN_POINT, point, b as u64);
            let len = BATCH.min(n - b * BATCH);
            (0..len)
                .filter(|_| {
                    let z = draw_amplitude(&mut rng, &gains, &irs, mode);
                    z * z >= need
                })
                .count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    (hits, n as u64)
}

/// Sample mean and variance of `Z^2` over `n` draws. Batches keep Welford
/// running moments and are merged pairwise in batch order.
pub fn sample_z2_moments(
    gains: &MeanGains,
    irs: &IrsSpec,
    n: usize,
    mode: ElementDraws,
    seed: u64,
    point: u64,
) -> (f64, f64) {
    let batches = n.div_ceil(BATCH);
    let parts: Vec<(f64, f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, DOMAIN_POINT, point, b as u64);
            let len = BATCH.min(n - b * BATCH);
            let (mut count, mut mean, mut m2) = (0.0, 0.0, 0.0);
            for _ in 0..len {
                let z = draw_amplitude(&mut rng, gains, irs, mode);
                let z2 = z * z;
                count += 1.0;
                let delta = z2 - mean;
                mean += delta / count;
                m2 += delta * (z2 - mean);
            }
            (count, mean, m2)
        })
        .collect();
    let (count, mean, m2) = parts.into_iter().fold((0.0, 0.0, 0.0), |(na, ma, sa), (nb, mb, sb)| {
        let total = na + nb;
        if total == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let delta = mb - ma;
        (total, ma + delta * nb / total, sa + sb + delta * delta * na * nb / total)
    });
    (mean, m2 / (count - 1.0).max(1.0))
}

/// 95% half-width `1.96 sqrt(p (1 - p) / n)`.
pub fn half_width(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Power policy of a planned cell at common threshold `eta0`.
#[derive(Debug, Clone, Copy)]
pub struct PowerPolicy<'a> {
    pub model: &'a EnergyModel,
    pub plan: &'a RingPlan,
    pub eta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeSample {
    pub r: f64,
    pub azimuth: f64,
    /// Region after the overflow rule.
    pub region: Region,
    /// IRS link distances while IRS-served.
    #[serde(skip)]
    pub geometry: Option<LinkGeometry>,
    /// Fell back to AP-only service because its sector was full.
    pub overflow: bool,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub index: u64,
    pub ues: Vec<UeSample>,
}

impl Topology {
    /// Frame energy `sum p_k t0`, J.
    pub fn energy(&self, slot: f64) -> f64 {
        self.ues.iter().map(|u| u.power).sum::<f64>() * slot
    }

    /// IRS-served UEs per (ring, sector).
    pub fn served_per_sector(&self) -> HashMap<(usize, usize), usize> {
        let mut out = HashMap::new();
        for u in &self.ues {
            if let Region::Irs { ring, sector } = u.region {
                *out.entry((ring, sector)).or_insert(0) += 1;
            }
        }
        out
    }
}

/// Draws `K` UEs uniformly on the disc, assigns them to sectors and sets
/// their powers. A sector with more than `n_t` UEs keeps the `n_t` closest to
/// its IRS; the rest fall back to AP-only CIPC at the AP region's mean SNR.
pub fn sample_topology(policy: &PowerPolicy<'_>, index: u64, seed: u64) -> Result<Topology> {
    let model = policy.model;
    let cell = model.cell();
    let mut rng = stream(seed, DOMAIN_TOPOLOGY, index, 0);
    let mut ues = Vec::with_capacity(cell.users as usize);
    for _ in 0..cell.users {
        let r = cell.radius * rng.random::<f64>().sqrt();
        let azimuth = TAU * rng.random::<f64>();
        let loc = locate_ue(cell, policy.plan, r, azimuth)?;
        ues.push(UeSample {
            r,
            azimuth,
            region: loc.region,
            geometry: loc.geometry,
            overflow: false,
            power: 0.0,
        });
    }
    let cap = model.radio().slots as usize;
    let mut by_sector: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (k, u) in ues.iter().enumerate() {
        if let Region::Irs { ring, sector } = u.region {
            by_sector.entry((ring, sector)).or_default().push(k);
        }
    }
    for members in by_sector.values_mut() {
        if members.len() <= cap {
            continue;
        }
        members.sort_by(|&a, &b| {
            let da = ues[a].geometry.map_or(0.0, |g| g.d);
            let db = ues[b].geometry.map_or(0.0, |g| g.d);
            da.total_cmp(&db).then(a.cmp(&b))
        });
        for &k in &members[cap..] {
            ues[k].region = Region::ApOnly;
            ues[k].geometry = None;
            ues[k].overflow = true;
        }
    }
    for u in &mut ues {
        u.power = match u.geometry {
            Some(g) => {
                let s = crate::channel::composite_stats(model.irs(), &mean_gains_irs(model.radio(), &g))?;
                model.radio().noise_power() * policy.eta0 * model.irs_power_factor(&s)?
            }
            None => model.direct_power(u.r, policy.eta0),
        };
    }
    Ok(Topology { index, ues })
}

/// Pooled non-outage counts for one group of UEs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub name: String,
    pub ues: u64,
    pub successes: u64,
    pub trials: u64,
    pub nop: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n_topologies: usize,
    pub n_fading: usize,
    pub seed: u64,
    pub element_draws: ElementDraws,
    /// Common rate `log2(1 + eta0)`.
    pub rate: f64,
    /// Per served region (`ap_only`, `ring_1`, ...) then per radial decile.
    pub strata: Vec<Stratum>,
    /// Lowest region-average NOP; it sets the common throughput.
    pub common_nop: f64,
    pub common_half_width: f64,
    /// `rate * common_nop`, bps/Hz.
    pub throughput: f64,
    pub throughput_half_width: f64,
    /// Lowest single-UE NOP, biased low by the minimum over noisy estimates.
    pub min_ue_nop: f64,
    pub min_ue_throughput: f64,
    /// Mean frame energy over topologies, J.
    pub energy_mean: f64,
    /// Standard error of `energy_mean`, J.
    pub energy_std_err: f64,
    pub overflow_ues: u64,
    /// Largest number of IRS-served UEs in any sector of any topology.
    pub max_served_per_sector: usize,
}

struct TopologyOutcome {
    /// (stratum keys, successes) per UE
    ues: Vec<(String, usize, u64)>,
    energy: f64,
    overflow: u64,
    max_served: usize,
}

fn region_name(region: &Region) -> String {
    match region {
        Region::ApOnly => "ap_only".to_string(),
        Region::Irs { ring, .. } => format!("ring_{ring}"),
    }
}

fn simulate_topology(policy: &PowerPolicy<'_>, mc: &McConfig, threshold: f64, index: u64) -> Result<TopologyOutcome> {
    let model = policy.model;
    let cfg = model.radio();
    let topo = sample_topology(policy, index, mc.seed)?;
    let w = cfg.noise_power();
    let radius = model.cell().radius;
    let mut ues = Vec::with_capacity(topo.ues.len());
    for (k, u) in topo.ues.iter().enumerate() {
        let mut rng = stream(mc.seed, DOMAIN_FADING, index, k as u64);
        let need = threshold * w / u.power;
        let hits = match u.geometry {
            Some(g) => {
                let gains = mean_gains_irs(cfg, &g);
                (0..mc.n_fading)
                    .filter(|_| {
                        let z = draw_amplitude(&mut rng, &gains, model.irs(), mc.element_draws);
                        z * z >= need
                    })
                    .count()
            }
            None => {
                let gd = mean_gain_direct(cfg, u.r);
                (0..mc.n_fading).filter(|_| gd * exp1(&mut rng) >= need).count()
            }
        } as u64;
        let decile = ((u.r / radius * 10.0) as usize).min(9);
        ues.push((region_name(&u.region), decile, hits));
    }
    let max_served = topo.served_per_sector().values().copied().max().unwrap_or(0);
    Ok(TopologyOutcome {
        ues,
        energy: topo.energy(cfg.slot_duration()),
        overflow: topo.ues.iter().filter(|u| u.overflow).count() as u64,
        max_served,
    })
}

/// Runs `mc.n_topologies` topologies under `policy` and pools the outcomes.
pub fn empirical_nop(policy: &PowerPolicy<'_>, mc: &McConfig) -> Result<McEstimate> {
    empirical_nop_at(policy, mc, policy.eta0)
}

/// As [`empirical_nop`] but decodes against `threshold` instead of the
/// threshold the powers were set for.
pub fn empirical_nop_at(policy: &PowerPolicy<'_>, mc: &McConfig, threshold: f64) -> Result<McEstimate> {
    mc.validate()?;
    for t in [policy.eta0, threshold] {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::domain(format!("SNR threshold must be >= 0, got {t}")));
        }
    }
    let outcomes = (0..mc.n_topologies as u64)
        .into_par_iter()
        .map(|t| simulate_topology(policy, mc, threshold, t))
        .collect::<Result<Vec<_>>>()?;

    let n = mc.n_fading as u64;
    let rate = (1.0 + threshold).log2();
    // region strata in a fixed order: ap_only, ring_1, ring_2, ...
    let mut names = vec!["ap_only".to_string()];
    names.extend((1..=policy.plan.rings()).map(|i| format!("ring_{i}")));
    names.extend((0..10).map(|d| format!("decile_{d}")));
    let mut counts = vec![(0u64, 0u64); names.len()];
    let rings = policy.plan.rings();
    let mut min_ue = 1.0f64;
    let mut energies = Vec::with_capacity(outcomes.len());
    let mut overflow = 0;
    let mut max_served = 0;
    for o in &outcomes {
        for (region, decile, hits) in &o.ues {
            let ri = names.iter().position(|x| x == region).expect("known region");
            counts[ri].0 += 1;
            counts[ri].1 += hits;
            let di = 1 + rings + decile;
            counts[di].0 += 1;
            counts[di].1 += hits;
            min_ue = min_ue.min(*hits as f64 / n as f64);
        }
        energies.push(o.energy);
        overflow += o.overflow;
        max_served = max_served.max(o.max_served);
    }
    let strata: Vec<Stratum> = names
        .into_iter()
        .zip(counts)
        .map(|(name, (ues, successes))| {
            let trials = ues * n;
            let nop = if trials > 0 { successes as f64 / trials as f64 } else { f64::NAN };
            Stratum {
                name,
                ues,
                successes,
                trials,
                nop,
                half_width: if trials > 0 { half_width(nop, trials) } else { f64::NAN },
            }
        })
        .collect();
    let limiting = strata[..=rings]
        .iter()
        .filter(|s| s.trials > 0)
        .min_by(|a, b| a.nop.total_cmp(&b.nop))
        .ok_or_else(|| Error::Internal("no UE was simulated".into()))?;
    let (common_nop, common_half_width) = (limiting.nop, limiting.half_width);
    let m = energies.len() as f64;
    let energy_mean = energies.iter().sum::<f64>() / m;
    let energy_var = if energies.len() > 1 {
        energies.iter().map(|e| (e - energy_mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        n_topologies: mc.n_topologies,
        n_fading: mc.n_fading,
        seed: mc.seed,
        element_draws: mc.element_draws,
        rate,
        common_nop,
        common_half_width,
        throughput: rate * common_nop,
        throughput_half_width: rate * common_half_width,
        strata,
        min_ue_nop: min_ue,
        min_ue_throughput: rate * min_ue,
        energy_mean,
        energy_std_err: (energy_var / m).sqrt(),
        overflow_ues: overflow,
        max_served_per_sector: max_served,
    })
}

/// Analytical prediction against Monte Carlo for one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub method: String,
    pub analytical_nu_bar: f64,
    pub eta0: f64,
    pub target_nop: f64,
    pub mc: McEstimate,
    /// `mc.throughput - analytical_nu_bar`, bps/Hz.
    pub nu_delta: f64,
    /// Analytical value inside the 95% MC interval.
    pub within_interval: bool,
    /// Mean frame energy over the budget.
    pub energy_ratio: f64,
    /// Mean frame energy within `E_total (1 + 3 * relative MC error)`.
    pub energy_within_budget: bool,
    /// Overflow UEs get AP-only CIPC at the AP region's mean SNR.
    pub overflow_policy: String,
}

pub fn validate_plan_mc(model: &EnergyModel, result: &PlanResult, mc: &McConfig) -> Result<ValidationReport> {
    let eta0 = result.allocation.eta0_star;
    let policy = PowerPolicy {
        model,
        plan: &result.plan,
        eta0,
    };
    let est = empirical_nop(&policy, mc)?;
    let budget = model.radio().energy_budget;
    let rel_err = if est.energy_mean > 0.0 { est.energy_std_err / est.energy_mean } else { 0.0 };
    let nu = result.nu_bar;
    Ok(ValidationReport {
        method: result.method.clone(),
        analytical_nu_bar: nu,
        eta0,
        target_nop: model.target_nop(),
        nu_delta: est.throughput - nu,
        within_interval: (est.throughput - nu).abs() <= est.throughput_half_width,
        energy_ratio: est.energy_mean / budget,
        energy_within_budget: est.energy_mean <= budget * (1.0 + 3.0 * rel_err),
        overflow_policy: "ap-only cipc at the ap region mean snr".to_string(),
        mc: est,
    })
}

#[cfg(test)]
mod tests;
