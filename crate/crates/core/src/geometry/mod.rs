//! Cell layout: ring partition, annulus sectors and UE association.
//!
//! Ring `i` (1-based) covers radii `(R_in,i, R_in,i-1]` and is tiled by `M_i`
//! equal annulus sectors, each served by one IRS on the circle of radius
//! `L_i` at the sector's angular centre. Sectors of every ring start at
//! azimuth 0. UEs inside `R_in,I`, or outside `R_in,0`, are AP-only.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::channel::LinkGeometry;
use crate::error::{Error, Result};

const REL_EPS: f64 = 1e-9;

/// Cell and deployment limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    /// Cell radius `R_ex`, m.
    pub radius: f64,
    /// Number of UEs `K`.
    pub users: u32,
    /// Radius of the near-AP IRS circle `L_min`, m.
    pub near_ap_radius: f64,
    /// Maximum number of near-AP IRSs.
    pub near_ap_max: u32,
    /// Cap on the mean number of UEs per IRS sector.
    pub max_users_per_irs: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            radius: 250.0,
            users: 500,
            near_ap_radius: 10.0,
            near_ap_max: 10,
            max_users_per_irs: 10.0,
        }
    }
}

impl CellConfig {
    /// UE density `K / (pi R_ex^2)` per m^2.
    pub fn density(&self) -> f64 {
        self.users as f64 / (PI * self.radius * self.radius)
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Config(format!("cell.radius must be > 0, got {}", self.radius)));
        }
        if self.users == 0 {
            return Err(Error::Config("cell.users must be >= 1".into()));
        }
        if !(self.near_ap_radius >= 1.0 && self.near_ap_radius <= self.radius) {
            return Err(Error::Config(format!(
                "cell.near_ap_radius must lie in [1, radius], got {}",
                self.near_ap_radius
            )));
        }
        if !(self.max_users_per_irs >= 1.0 && self.max_users_per_irs.is_finite()) {
            return Err(Error::Config(format!(
                "cell.max_users_per_irs must be >= 1, got {}",
                self.max_users_per_irs
            )));
        }
        Ok(())
    }
}

/// Ring partition with per-ring IRS counts, circle radii and region power ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingPlan {
    /// `[R_in,0, R_in,1, ..., R_in,I]`, non-increasing, m.
    pub radii: Vec<f64>,
    /// `[M_1, ..., M_I]`.
    pub irs_counts: Vec<u32>,
    /// `[L_1, ..., L_I]`, m.
    pub irs_radii: Vec<f64>,
    /// `[rho_0, rho_1, ..., rho_I]`; `rho_0` belongs to the AP-only region.
    /// Empty until power has been allocated.
    #[serde(default)]
    pub power_ratios: Vec<f64>,
}

impl RingPlan {
    /// Builds a plan with the standard circle radii: ring 1 sits on the
    /// near-AP circle, later rings at the middle of their annulus.
    pub fn new(cell: &CellConfig, radii: Vec<f64>, irs_counts: Vec<u32>) -> Result<Self> {
        if radii.len() != irs_counts.len() + 1 {
            return Err(Error::domain(format!(
                "{} radii do not match {} rings",
                radii.len(),
                irs_counts.len()
            )));
        }
        let irs_radii = (1..radii.len())
            .map(|i| standard_irs_radius(cell, &radii, i))
            .collect();
        Ok(Self {
            radii,
            irs_counts,
            irs_radii,
            power_ratios: Vec::new(),
        })
    }

    /// A plan without IRSs; the whole cell is AP-only.
    pub fn ap_only(cell: &CellConfig) -> Self {
        Self {
            radii: vec![cell.radius],
            irs_counts: Vec::new(),
            irs_radii: Vec::new(),
            power_ratios: vec![1.0],
        }
    }

    pub fn rings(&self) -> usize {
        self.irs_counts.len()
    }

    pub fn total_irs(&self) -> u32 {
        self.irs_counts.iter().sum()
    }

    /// Outer radius `R_in,i-1` of ring `i`.
    pub fn outer(&self, ring: usize) -> f64 {
        self.radii[ring - 1]
    }

    /// Inner radius `R_in,i` of ring `i`.
    pub fn inner(&self, ring: usize) -> f64 {
        self.radii[ring]
    }

    pub fn irs_count(&self, ring: usize) -> u32 {
        self.irs_counts[ring - 1]
    }

    pub fn irs_radius(&self, ring: usize) -> f64 {
        self.irs_radii[ring - 1]
    }

    /// `R_in,I`, the edge of the inner AP-only disc.
    pub fn ap_disc_radius(&self) -> f64 {
        *self.radii.last().expect("plan has at least R_in,0")
    }

    /// `R_in,0`, the outer edge of the IRS-served region.
    pub fn irs_outer_radius(&self) -> f64 {
        self.radii[0]
    }

    /// Central angle of one sector of ring `i`.
    pub fn sector_angle(&self, ring: usize) -> f64 {
        TAU / self.irs_count(ring) as f64
    }

    /// Area of the IRS-served annulus `pi (R_in,0^2 - R_in,I^2)`.
    pub fn irs_served_area(&self) -> f64 {
        let (o, i) = (self.irs_outer_radius(), self.ap_disc_radius());
        PI * (o * o - i * i)
    }

    pub fn sector(&self, ring: usize, sector: usize) -> SectorAssignment {
        let phi = self.sector_angle(ring);
        SectorAssignment {
            ring,
            sector,
            irs_azimuth: (sector as f64 + 0.5) * phi,
            angle: phi,
        }
    }

    /// Every IRS as (ring, sector, circle radius, azimuth).
    pub fn irs_positions(&self) -> Vec<(usize, usize, f64, f64)> {
        let mut out = Vec::with_capacity(self.total_irs() as usize);
        for ring in 1..=self.rings() {
            for s in 0..self.irs_count(ring) as usize {
                let a = self.sector(ring, s);
                out.push((ring, s, self.irs_radius(ring), a.irs_azimuth));
            }
        }
        out
    }
}

fn standard_irs_radius(cell: &CellConfig, radii: &[f64], ring: usize) -> f64 {
    if ring == 1 {
        cell.near_ap_radius
    } else {
        0.5 * (radii[ring] + radii[ring - 1])
    }
}

/// One annulus sector and the IRS at its angular centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorAssignment {
    /// 1-based ring index.
    pub ring: usize,
    /// 0-based sector index within the ring.
    pub sector: usize,
    pub irs_azimuth: f64,
    /// Central angle `2 pi / M_i`.
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    ApOnly,
    Irs { ring: usize, sector: usize },
}

/// Where a UE falls and, when IRS-served, its link distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeLocation {
    pub region: Region,
    pub geometry: Option<LinkGeometry>,
}

/// `pi (R_in,i-1^2 - R_in,i^2) / M_i`
pub fn sector_area(plan: &RingPlan, ring: usize) -> f64 {
    let (o, i) = (plan.outer(ring), plan.inner(ring));
    PI * (o * o - i * i) / plan.irs_count(ring) as f64
}

/// Mean number of UEs in one sector of ring `i`.
pub fn mean_users_per_sector(cell: &CellConfig, plan: &RingPlan, ring: usize) -> f64 {
    cell.density() * sector_area(plan, ring)
}

/// IRS-UE horizontal distance by the law of cosines.
pub fn irs_ue_distance(r: f64, irs_radius: f64, azimuth_offset: f64) -> f64 {
    (r * r + irs_radius * irs_radius - 2.0 * r * irs_radius * azimuth_offset.cos())
        .max(0.0)
        .sqrt()
}

/// Region of a UE at polar position `(r, azimuth)`.
pub fn locate_ue(cell: &CellConfig, plan: &RingPlan, r: f64, azimuth: f64) -> Result<UeLocation> {
    if !(r.is_finite() && r >= 0.0) || r > cell.radius * (1.0 + REL_EPS) {
        return Err(Error::domain(format!(
            "UE radius {r} outside the cell of radius {}",
            cell.radius
        )));
    }
    if !azimuth.is_finite() {
        return Err(Error::domain("UE azimuth must be finite"));
    }
    let ap_only = UeLocation {
        region: Region::ApOnly,
        geometry: None,
    };
    for ring in 1..=plan.rings() {
        let (outer, inner) = (plan.outer(ring), plan.inner(ring));
        let last = ring == plan.rings();
        // rings are (inner, outer]; the AP disc boundary goes to the last ring
        let inside = r <= outer && (r > inner || (last && r == inner));
        if !inside || outer <= inner || plan.irs_count(ring) == 0 {
            continue;
        }
        let phi = plan.sector_angle(ring);
        let az = azimuth.rem_euclid(TAU);
        let sector = ((az / phi) as usize).min(plan.irs_count(ring) as usize - 1);
        let assignment = plan.sector(ring, sector);
        let l = plan.irs_radius(ring);
        let d = irs_ue_distance(r, l, az - assignment.irs_azimuth);
        return Ok(UeLocation {
            region: Region::Irs { ring, sector },
            geometry: Some(LinkGeometry { r, l, d }),
        });
    }
    Ok(ap_only)
}

/// A violated plan constraint. `slack` is how far the constraint is missed,
/// in the constraint's own units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub message: String,
    pub slack: f64,
}

impl Violation {
    fn new(constraint: &str, slack: f64, message: String) -> Self {
        Self {
            constraint: constraint.to_string(),
            message,
            slack,
        }
    }
}

/// Checks every structural constraint of a ring plan. An empty result means
/// the plan is admissible.
pub fn validate_plan(cell: &CellConfig, plan: &RingPlan) -> Vec<Violation> {
    let mut v = Vec::new();
    let rings = plan.rings();
    if plan.radii.len() != rings + 1 || plan.irs_radii.len() != rings {
        v.push(Violation::new(
            "shape",
            0.0,
            format!(
                "{} radii, {} IRS counts and {} circle radii are inconsistent",
                plan.radii.len(),
                rings,
                plan.irs_radii.len()
            ),
        ));
        return v;
    }
    if plan.power_ratios.len() != rings + 1 {
        v.push(Violation::new(
            "power_ratios",
            0.0,
            format!("expected {} power ratios, got {}", rings + 1, plan.power_ratios.len()),
        ));
    } else {
        let sum: f64 = plan.power_ratios.iter().sum();
        if (sum - 1.0).abs() > REL_EPS {
            v.push(Violation::new(
                "power_ratios",
                sum - 1.0,
                format!("power ratios sum to {sum}, not 1"),
            ));
        }
        for (i, &rho) in plan.power_ratios.iter().enumerate() {
            if !(rho >= 0.0) {
                v.push(Violation::new("power_ratios", rho, format!("rho_{i} = {rho} is negative")));
            }
        }
    }

    let tol = REL_EPS * cell.radius;
    if plan.radii[0] > cell.radius + tol {
        v.push(Violation::new(
            "radii",
            plan.radii[0] - cell.radius,
            format!("R_in,0 = {} exceeds the cell radius {}", plan.radii[0], cell.radius),
        ));
    }
    for (i, w) in plan.radii.windows(2).enumerate() {
        if w[1] > w[0] + tol {
            v.push(Violation::new(
                "radii",
                w[1] - w[0],
                format!("R_in,{} = {} exceeds R_in,{} = {}", i + 1, w[1], i, w[0]),
            ));
        }
    }
    if let Some(&last) = plan.radii.last() {
        if last < -tol || !last.is_finite() {
            v.push(Violation::new("radii", -last, format!("R_in,I = {last} is negative")));
        }
    }

    if rings > 0 && plan.irs_counts[0] > cell.near_ap_max {
        v.push(Violation::new(
            "near_ap_max",
            (plan.irs_counts[0] - cell.near_ap_max) as f64,
            format!(
                "M_1 = {} exceeds the near-AP limit {}",
                plan.irs_counts[0], cell.near_ap_max
            ),
        ));
    }

    for ring in 1..=rings {
        let expected = standard_irs_radius(cell, &plan.radii, ring);
        let l = plan.irs_radius(ring);
        if (l - expected).abs() > tol {
            v.push(Violation::new(
                "irs_radius",
                l - expected,
                format!("L_{ring} = {l} but the layout rule gives {expected}"),
            ));
        }
        let m = plan.irs_count(ring);
        let width = plan.outer(ring) - plan.inner(ring);
        if m == 0 {
            if width > tol {
                v.push(Violation::new(
                    "irs_count",
                    -1.0,
                    format!("ring {ring} has positive width but no IRS"),
                ));
            }
            continue;
        }
        let users = mean_users_per_sector(cell, plan, ring);
        if users > cell.max_users_per_irs * (1.0 + REL_EPS) {
            v.push(Violation::new(
                "users_per_irs",
                users - cell.max_users_per_irs,
                format!(
                    "ring {ring}: {users:.4} mean UEs per sector exceeds the cap {}",
                    cell.max_users_per_irs
                ),
            ));
        }
    }
    v
}

/// `validate_plan` plus the total IRS count.
pub fn validate_plan_total(cell: &CellConfig, plan: &RingPlan, total: u32) -> Vec<Violation> {
    let mut v = validate_plan(cell, plan);
    if plan.total_irs() != total {
        v.push(Violation::new(
            "irs_total",
            plan.total_irs() as f64 - total as f64,
            format!("plan deploys {} IRSs, expected {total}", plan.total_irs()),
        ));
    }
    v
}
