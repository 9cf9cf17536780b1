//! Ground-cell gravity traffic with a diurnal profile, mapped onto the LEO
//! switches that serve each cell.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constellation::{geodetic_to_ecef, great_circle_km, NetworkSnapshot, NodeId, NINE_CITIES};
use crate::error::{Error, Result};
use crate::visibility::elevation_angle;

pub const LON_BANDS: usize = 36;
pub const LAT_BANDS: usize = 18;
pub const CELL_COUNT: usize = LON_BANDS * LAT_BANDS;
const CELL_DEG: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundCell {
    pub index: usize,
    pub lat_range: (f64, f64),
    pub lon_range: (f64, f64),
    pub center: (f64, f64),
    pub density_weight: f64,
}

impl GroundCell {
    /// Solid angle in steradians.
    pub fn solid_angle(&self) -> f64 {
        let dlon = (self.lon_range.1 - self.lon_range.0).to_radians();
        dlon * (self.lat_range.1.to_radians().sin() - self.lat_range.0.to_radians().sin())
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_range.0..self.lat_range.1).contains(&lat) && (self.lon_range.0..self.lon_range.1).contains(&lon)
    }
}

/// 10° × 10° equal-angle cells (the 72-cell 30° grid split 3 × 3). Each
/// weight is the density at the cell centre scaled by `cos(latitude)` for
/// cell area.
pub fn build_grid(density: impl Fn(f64, f64) -> f64) -> Vec<GroundCell> {
    let mut cells = Vec::with_capacity(CELL_COUNT);
    for la in 0..LAT_BANDS {
        let lat0 = -90.0 + CELL_DEG * la as f64;
        for lo in 0..LON_BANDS {
            let lon0 = -180.0 + CELL_DEG * lo as f64;
            let center = (lat0 + CELL_DEG / 2.0, lon0 + CELL_DEG / 2.0);
            let d = density(center.0, center.1).max(0.0);
            cells.push(GroundCell {
                index: cells.len(),
                lat_range: (lat0, lat0 + CELL_DEG),
                lon_range: (lon0, lon0 + CELL_DEG),
                center,
                density_weight: d * center.0.to_radians().cos(),
            });
        }
    }
    cells
}

/// Index of the cell containing a point.
pub fn cell_index(lat: f64, lon: f64) -> usize {
    let la = (((lat + 90.0) / CELL_DEG).floor() as usize).min(LAT_BANDS - 1);
    let lo = (((lon + 180.0) / CELL_DEG).floor() as usize).min(LON_BANDS - 1);
    la * LON_BANDS + lo
}

/// Synthetic population: a uniform background plus Gaussian bumps centred on
/// cities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityField {
    #[serde(default = "default_background")]
    pub background: f64,
    #[serde(default = "default_amplitude")]
    pub bump_amplitude: f64,
    #[serde(default = "default_sigma")]
    pub bump_sigma_km: f64,
    /// `(lat, lon)` bump centres; empty means the nine-city set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub centers: Vec<(f64, f64)>,
}

fn default_background() -> f64 {
    0.05
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    800.0
}

impl Default for DensityField {
    fn default() -> Self {
        Self {
            background: default_background(),
            bump_amplitude: default_amplitude(),
            bump_sigma_km: default_sigma(),
            centers: Vec::new(),
        }
    }
}

impl DensityField {
    pub fn weight(&self, lat: f64, lon: f64) -> f64 {
        let s2 = 2.0 * self.bump_sigma_km * self.bump_sigma_km;
        let bump = |&(clat, clon): &(f64, f64)| {
            let d = great_circle_km(lat, lon, clat, clon);
            self.bump_amplitude * (-d * d / s2).exp()
        };
        let sum: f64 = if self.centers.is_empty() {
            NINE_CITIES.iter().map(|&(_, a, b)| bump(&(a, b))).sum()
        } else {
            self.centers.iter().map(bump).sum()
        };
        self.background + sum
    }
}

/// Gravity-model flow rate between two cells: `g * w_i * w_j / d^exponent`.
pub fn gravity_demand(a: &GroundCell, b: &GroundCell, g: f64, exponent: f64) -> f64 {
    gravity_weights(a, b, a.density_weight, b.density_weight, g, exponent)
}

fn gravity_weights(a: &GroundCell, b: &GroundCell, wa: f64, wb: f64, g: f64, exponent: f64) -> f64 {
    if wa == 0.0 || wb == 0.0 {
        return 0.0;
    }
    let d = great_circle_km(a.center.0, a.center.1, b.center.0, b.center.1);
    g * wa * wb / d.powf(exponent)
}

pub fn local_solar_hour(lon: f64, utc_s: f64) -> f64 {
    (utc_s / 3600.0 + lon / 15.0).rem_euclid(24.0)
}

/// Raised-cosine daily profile peaking at 14:00 local solar time with the
/// trough at `floor`.
pub fn diurnal_factor(cell: &GroundCell, utc_s: f64, floor: f64) -> f64 {
    let h = local_solar_hour(cell.center.1, utc_s);
    0.5 * (1.0 + floor) + 0.5 * (1.0 - floor) * (TAU * (h - 14.0) / 24.0).cos()
}

/// Dense directed cell-to-cell flow rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDemand {
    n: usize,
    values: Vec<f64>,
}

impl CellDemand {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Gravity demands between all distinct cells with diurnally modulated
    /// masses at `utc_s`.
    pub fn gravity(cells: &[GroundCell], utc_s: f64, params: &TrafficParams, g: f64) -> Self {
        let n = cells.len();
        let masses: Vec<f64> =
            cells.iter().map(|c| c.density_weight * diurnal_factor(c, utc_s, params.diurnal_floor)).collect();
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = gravity_weights(&cells[i], &cells[j], masses[i], masses[j], g, params.gravity_exponent);
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }
}

/// LEO-to-LEO flow arrival rates (flows per second) for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficMatrix {
    pub slot_index: usize,
    /// Scale already applied to the baseline rates.
    pub gamma: f64,
    pub rates: BTreeMap<(NodeId, NodeId), f64>,
}

impl TrafficMatrix {
    pub fn empty(slot_index: usize) -> Self {
        Self { slot_index, gamma: 1.0, rates: BTreeMap::new() }
    }

    pub fn rate(&self, src: NodeId, dst: NodeId) -> f64 {
        self.rates.get(&(src, dst)).copied().unwrap_or(0.0)
    }

    /// Adds to a pair's rate. Self-pairs are ignored.
    pub fn add(&mut self, src: NodeId, dst: NodeId, rate: f64) {
        if src != dst && rate > 0.0 {
            *self.rates.entry((src, dst)).or_insert(0.0) += rate;
        }
    }

    pub fn total(&self) -> f64 {
        self.rates.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.rates.iter().map(|(&(s, d), &r)| (s, d, r))
    }

    /// Total outgoing rate per source switch.
    pub fn outgoing(&self) -> BTreeMap<NodeId, f64> {
        let mut out = BTreeMap::new();
        for (s, _, r) in self.iter() {
            *out.entry(s).or_insert(0.0) += r;
        }
        out
    }

    /// Rate the same base process would have at `gamma = 1`.
    pub fn base_rate(&self, rate: f64) -> f64 {
        if self.gamma > 0.0 {
            rate / self.gamma
        } else {
            0.0
        }
    }
}

/// `M_sim = gamma * M_base`.
pub fn scale(matrix: &TrafficMatrix, gamma: f64) -> Result<TrafficMatrix> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidGamma(gamma));
    }
    Ok(TrafficMatrix {
        slot_index: matrix.slot_index,
        gamma: matrix.gamma * gamma,
        rates: matrix.rates.iter().map(|(&k, &v)| (k, v * gamma)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingOutcome {
    pub matrix: TrafficMatrix,
    /// Serving LEO per cell, `None` when no LEO is above the horizon.
    pub serving: Vec<Option<NodeId>>,
    pub total_demand: f64,
    pub local_demand: f64,
    pub unservable_demand: f64,
}

/// The LEO with the highest elevation above the cell centre, if any is above
/// the horizon. Ties go to the lowest id.
pub fn serving_satellite(cell: &GroundCell, snapshot: &NetworkSnapshot) -> Option<NodeId> {
    let ground = geodetic_to_ecef(cell.center.0, cell.center.1);
    let mut best: Option<(f64, NodeId)> = None;
    for &leo in &snapshot.leo_ids {
        let e = elevation_angle(&ground, snapshot.position(leo));
        if e >= 0.0 && best.is_none_or(|(b, _)| e > b) {
            best = Some((e, leo));
        }
    }
    best.map(|(_, id)| id)
}

/// Accrues every cell-pair demand to the pair of serving LEOs. Pairs served by
/// the same LEO are local traffic and are discarded.
pub fn map_to_satellites(
    cells: &[GroundCell],
    demands: &CellDemand,
    snapshot: &NetworkSnapshot,
    slot_index: usize,
) -> MappingOutcome {
    assert_eq!(cells.len(), demands.len());
    let serving: Vec<Option<NodeId>> = cells.iter().map(|c| serving_satellite(c, snapshot)).collect();
    // Dense accumulation over the distinct serving switches.
    let mut switches: Vec<NodeId> = serving.iter().flatten().copied().collect();
    switches.sort();
    switches.dedup();
    let slot_of: Vec<Option<usize>> =
        serving.iter().map(|s| s.map(|id| switches.binary_search(&id).expect("serving switch indexed"))).collect();
    let k = switches.len();
    let mut acc = vec![0.0; k * k];
    let (mut total, mut local, mut unservable) = (0.0, 0.0, 0.0);
    for i in 0..cells.len() {
        for j in 0..cells.len() {
            let d = demands.get(i, j);
            if i == j || d == 0.0 {
                continue;
            }
            total += d;
            match (slot_of[i], slot_of[j]) {
                (Some(a), Some(b)) if a == b => local += d,
                (Some(a), Some(b)) => acc[a * k + b] += d,
                _ => unservable += d,
            }
        }
    }
    let mut matrix = TrafficMatrix::empty(slot_index);
    for a in 0..k {
        for b in 0..k {
            matrix.add(switches[a], switches[b], acc[a * k + b]);
        }
    }
    MappingOutcome { matrix, serving, total_demand: total, local_demand: local, unservable_demand: unservable }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficParams {
    /// Explicit gravity constant. When absent the constant is calibrated so
    /// that the centralized baseline is overloaded by `odc_overload` at γ = 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity_constant: Option<f64>,
    #[serde(default = "default_overload")]
    pub odc_overload: f64,
    #[serde(default = "default_exponent")]
    pub gravity_exponent: f64,
    #[serde(default = "default_floor")]
    pub diurnal_floor: f64,
    #[serde(default)]
    pub density: DensityField,
}

fn default_overload() -> f64 {
    1.25
}
fn default_exponent() -> f64 {
    2.0
}
fn default_floor() -> f64 {
    0.2
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self {
            gravity_constant: None,
            odc_overload: default_overload(),
            gravity_exponent: default_exponent(),
            diurnal_floor: default_floor(),
            density: DensityField::default(),
        }
    }
}

/// Grid plus parameters; produces the baseline matrix for any snapshot.
#[derive(Debug, Clone)]
pub struct TrafficModel {
    pub cells: Vec<GroundCell>,
    pub params: TrafficParams,
    pub gravity_constant: f64,
    /// `d_ij^-exponent` for every cell pair, row-major.
    decay: Vec<f64>,
}

impl TrafficModel {
    pub fn new(params: TrafficParams, gravity_constant: f64) -> Self {
        let density = params.density.clone();
        let cells = build_grid(|lat, lon| density.weight(lat, lon));
        let n = cells.len();
        let mut decay = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (&cells[i], &cells[j]);
                let d = great_circle_km(a.center.0, a.center.1, b.center.0, b.center.1);
                let v = d.powf(-params.gravity_exponent);
                decay[i * n + j] = v;
                decay[j * n + i] = v;
            }
        }
        Self { cells, params, gravity_constant, decay }
    }

    /// Cell demands at `utc_s`; equal to [`CellDemand::gravity`].
    pub fn demand(&self, utc_s: f64) -> CellDemand {
        let n = self.cells.len();
        let masses: Vec<f64> =
            self.cells.iter().map(|c| c.density_weight * diurnal_factor(c, utc_s, self.params.diurnal_floor)).collect();
        let mut out = CellDemand::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out.values[i * n + j] = self.gravity_constant * masses[i] * masses[j] * self.decay[i * n + j];
                }
            }
        }
        out
    }

    pub fn base_matrix(&self, snapshot: &NetworkSnapshot, slot_index: usize) -> MappingOutcome {
        map_to_satellites(&self.cells, &self.demand(snapshot.time), snapshot, slot_index)
    }
}

/// Writes `slot,src,dst,rate` rows.
pub fn write_csv<W: Write>(matrices: &[TrafficMatrix], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "src", "dst", "rate"])?;
    for m in matrices {
        for (s, d, r) in m.iter() {
            w.write_record([m.slot_index.to_string(), s.to_string(), d.to_string(), format!("{r:e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sum of all cell solid angles; the grid tiles the sphere so this is 4π.
pub fn total_solid_angle(cells: &[GroundCell]) -> f64 {
    cells.iter().map(GroundCell::solid_angle).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const FOUR_PI: f64 = 4.0 * PI;

    fn cell_at(lat: f64, lon: f64, w: f64) -> GroundCell {
        GroundCell { index: 0, lat_range: (lat, lat), lon_range: (lon, lon), center: (lat, lon), density_weight: w }
    }

    #[test]
    fn grid_tiles_sphere() {
        let cells = build_grid(|_, _| 1.0);
        assert_eq!(cells.len(), 648);
        assert_relative_eq!(total_solid_angle(&cells), FOUR_PI, epsilon = 1e-9);
        for c in &cells {
            assert_relative_eq!(c.density_weight, c.center.0.to_radians().cos(), epsilon = 1e-15);
            assert_eq!(cell_index(c.center.0, c.center.1), c.index);
        }
    }

    #[test]
    fn gravity_zero_weight_and_symmetry() {
        let a = cell_at(0.0, 0.0, 0.0);
        let b = cell_at(0.0, 10.0, 1.0);
        assert_eq!(gravity_demand(&a, &b, 1.0, 2.0), 0.0);
        let a = cell_at(0.0, 0.0, 2.0);
        assert_eq!(gravity_demand(&a, &b, 1.0, 2.0), gravity_demand(&b, &a, 1.0, 2.0));
    }

    #[test]
    fn gravity_unit_cells_thousand_km() {
        // Longitude separation giving exactly 1000 km along the equator.
        let dlon = (1000.0 / crate::constellation::EARTH_RADIUS_KM).to_degrees();
        let a = cell_at(0.0, 0.0, 1.0);
        let b = cell_at(0.0, dlon, 1.0);
        assert_relative_eq!(gravity_demand(&a, &b, 1.0, 2.0), 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn diurnal_peak_trough_antiphase() {
        let c = cell_at(0.0, 0.0, 1.0);
        assert_relative_eq!(diurnal_factor(&c, 14.0 * 3600.0, 0.2), 1.0, epsilon = 1e-12);
        assert_relative_eq!(diurnal_factor(&c, 2.0 * 3600.0, 0.2), 0.2, epsilon = 1e-12);
        let far = cell_at(0.0, 180.0, 1.0);
        for h in 0..24 {
            let t = h as f64 * 3600.0;
            let mid = 0.6;
            let a = diurnal_factor(&c, t, 0.2) - mid;
            let b = diurnal_factor(&far, t, 0.2) - mid;
            assert_relative_eq!(a, -b, epsilon = 1e-12);
        }
    }

    #[test]
    fn scale_bounds_and_values() {
        let mut m = TrafficMatrix::empty(0);
        m.add(NodeId(0), NodeId(1), 4.0);
        m.add(NodeId(1), NodeId(0), 2.0);
        m.add(NodeId(1), NodeId(1), 9.0);
        assert_eq!(m.rates.len(), 2);
        assert!(scale(&m, 1.5).is_err());
        assert!(scale(&m, -0.1).is_err());
        assert_eq!(scale(&m, 1.0).unwrap(), m);
        assert!(scale(&m, 0.0).unwrap().rates.values().all(|&r| r == 0.0));
        let half = scale(&m, 0.5).unwrap();
        assert_eq!(half.rate(NodeId(0), NodeId(1)), 2.0);
        assert_eq!(half.gamma, 0.5);
        assert_eq!(half.base_rate(2.0), 4.0);
    }
}
