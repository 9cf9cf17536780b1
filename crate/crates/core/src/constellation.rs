//! Walker-style shell generation, circular two-body propagation and the
//! +Grid inter-satellite-link topology.
//!
//! Everything downstream works in the Earth-fixed (ECEF) frame on a
//! spherical Earth, so ground stations have constant positions and a
//! [`NetworkSnapshot`] is a pure function of the shells, the ground stations
//! and the time.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Standard gravitational parameter of the Earth, km³/s².
pub const MU_EARTH: f64 = 398_600.441_8;
/// Sidereal rotation rate of the Earth, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitClass {
    Leo,
    Meo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Leo,
    Meo,
    Ground,
}

impl Role {
    pub fn is_controller(self) -> bool {
        !matches!(self, Role::Leo)
    }
}

impl From<OrbitClass> for Role {
    fn from(c: OrbitClass) -> Self {
        match c {
            OrbitClass::Leo => Role::Leo,
            OrbitClass::Meo => Role::Meo,
        }
    }
}

/// One circular Walker shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub num_planes: u32,
    pub sats_per_plane: u32,
    /// Inter-plane phase shift as a fraction of the in-plane spacing.
    /// `None` means the Walker-delta default of `1 / num_planes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phasing_offset: Option<f64>,
    pub role: OrbitClass,
    /// Kept for reference; propagation is circular and ignores it.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub eccentricity: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl ShellSpec {
    pub fn new(altitude_km: f64, inclination_deg: f64, num_planes: u32, sats_per_plane: u32, role: OrbitClass) -> Self {
        Self { altitude_km, inclination_deg, num_planes, sats_per_plane, phasing_offset: None, role, eccentricity: 0.0 }
    }

    /// Named shells: LEO constellations and MEO controller constellations used
    /// in the reference emulation scenarios.
    pub fn preset(name: &str) -> Result<Self> {
        use OrbitClass::*;
        let (alt, inc, total, planes, role, ecc) = match name {
            "iridium" => (780.0, 86.4, 66, 6, Leo, 0.0),
            "telesat" => (1015.0, 98.98, 351, 27, Leo, 0.0),
            "oneweb" => (1200.0, 87.9, 720, 18, Leo, 0.0),
            "starlink" => (550.0, 53.0, 1584, 72, Leo, 0.0),
            "cscn" => (365.0, 40.0, 1848, 33, Leo, 0.0),
            "meo-3000" => (3000.0, 63.4, 36, 6, Meo, 0.1),
            "meo-6000" => (6000.0, 55.0, 32, 4, Meo, 0.01),
            "meo-8070" => (8070.0, 53.1, 20, 5, Meo, 0.001),
            "meo-10354" => (10354.0, 39.4, 6, 2, Meo, 0.0001),
            _ => return Err(Error::UnknownPreset(name.to_string())),
        };
        let mut spec = ShellSpec::new(alt, inc, planes, total / planes, role);
        spec.eccentricity = ecc;
        Ok(spec)
    }

    pub const PRESETS: [&'static str; 9] =
        ["iridium", "telesat", "oneweb", "starlink", "cscn", "meo-3000", "meo-6000", "meo-8070", "meo-10354"];

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidShell(msg));
        if !(self.altitude_km > 0.0) || !self.altitude_km.is_finite() {
            return bad(format!("altitude must be positive, got {}", self.altitude_km));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return bad(format!("inclination {} outside [0, 180]", self.inclination_deg));
        }
        if self.num_planes == 0 || self.sats_per_plane == 0 {
            return bad(format!(
                "shell needs at least one plane and one satellite per plane, got {}x{}",
                self.num_planes, self.sats_per_plane
            ));
        }
        if let Some(f) = self.phasing_offset {
            if !(0.0..1.0).contains(&f) {
                return bad(format!("phasing offset {f} outside [0, 1)"));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u32 {
        self.num_planes * self.sats_per_plane
    }

    pub fn orbital_radius(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    pub fn phasing(&self) -> f64 {
        self.phasing_offset.unwrap_or(1.0 / self.num_planes as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteNode {
    pub id: NodeId,
    pub role: Role,
    pub shell_index: usize,
    pub plane_index: u32,
    pub slot_index: u32,
    pub raan: f64,
    pub phase0: f64,
    pub inclination: f64,
    pub orbital_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStationNode {
    pub id: NodeId,
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
}

impl GroundStationNode {
    pub fn new(id: NodeId, name: impl Into<String>, latitude: f64, longitude: f64) -> Result<Self> {
        let name = name.into();
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::InvalidGroundStation {
                name,
                reason: format!("({latitude}, {longitude}) is not a valid coordinate"),
            });
        }
        Ok(Self { id, name, latitude, longitude })
    }

    pub fn position(&self) -> Vec3 {
        geodetic_to_ecef(self.latitude, self.longitude)
    }
}

/// Cities hosting the ground-station controllers, `(name, lat, lon)`.
pub const NINE_CITIES: [(&str, f64, f64); 9] = [
    ("new-york", 40.7128, -74.0060),
    ("london", 51.5074, -0.1278),
    ("tokyo", 35.6762, 139.6503),
    ("sydney", -33.8688, 151.2093),
    ("sao-paulo", -23.5505, -46.6333),
    ("cairo", 30.0444, 31.2357),
    ("mumbai", 19.0760, 72.8777),
    ("beijing", 39.9042, 116.4074),
    ("lagos", 6.5244, 3.3792),
];

pub fn city(name: &str) -> Option<(f64, f64)> {
    NINE_CITIES.iter().find(|(n, _, _)| *n == name).map(|&(_, lat, lon)| (lat, lon))
}

/// Lays out `num_planes × sats_per_plane` satellites with RAANs spread over
/// the full circle and in-plane phases offset plane by plane.
pub fn generate_shell(spec: &ShellSpec, shell_index: usize, first_id: u32) -> Result<Vec<SatelliteNode>> {
    spec.validate()?;
    let planes = spec.num_planes;
    let per_plane = spec.sats_per_plane;
    let spacing = TAU / per_plane as f64;
    let offset = spec.phasing();
    let inclination = spec.inclination_deg.to_radians();
    let radius = spec.orbital_radius();
    let mut out = Vec::with_capacity(spec.total() as usize);
    for p in 0..planes {
        let raan = TAU * p as f64 / planes as f64;
        for s in 0..per_plane {
            let phase0 = (spacing * (s as f64 + offset * p as f64)).rem_euclid(TAU);
            out.push(SatelliteNode {
                id: NodeId(first_id + p * per_plane + s),
                role: spec.role.into(),
                shell_index,
                plane_index: p,
                slot_index: s,
                raan,
                phase0,
                inclination,
                orbital_radius: radius,
            });
        }
    }
    Ok(out)
}

/// Two-body circular period in seconds for an orbit of the given radius (km).
pub fn orbital_period(radius_km: f64) -> f64 {
    TAU * (radius_km.powi(3) / MU_EARTH).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Inertial (ECI) state of a satellite `t` seconds after epoch.
pub fn propagate_inertial(node: &SatelliteNode, t: f64) -> StateVector {
    let r = node.orbital_radius;
    let n = TAU / orbital_period(r);
    let u = node.phase0 + n * t;
    let (su, cu) = u.sin_cos();
    let (so, co) = node.raan.sin_cos();
    let (si, ci) = node.inclination.sin_cos();
    let position = Vec3::new(r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * si);
    let velocity = Vec3::new(r * n * (-co * su - so * cu * ci), r * n * (-so * su + co * cu * ci), r * n * cu * si);
    StateVector { position, velocity }
}

/// Earth-fixed state of a satellite `t` seconds after epoch.
pub fn propagate(node: &SatelliteNode, t: f64) -> StateVector {
    let eci = propagate_inertial(node, t);
    let theta = EARTH_ROTATION_RAD_S * t;
    let position = rotate_z(&eci.position, -theta);
    let omega = Vec3::new(0.0, 0.0, EARTH_ROTATION_RAD_S);
    let velocity = rotate_z(&eci.velocity, -theta) - omega.cross(&position);
    StateVector { position, velocity }
}

fn rotate_z(v: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// Spherical-Earth ECEF position of a surface point.
pub fn geodetic_to_ecef(lat_deg: f64, lon_deg: f64) -> Vec3 {
    let (sl, cl) = lat_deg.to_radians().sin_cos();
    let (so, co) = lon_deg.to_radians().sin_cos();
    Vec3::new(EARTH_RADIUS_KM * cl * co, EARTH_RADIUS_KM * cl * so, EARTH_RADIUS_KM * sl)
}

/// Latitude/longitude (degrees) of the sub-point of an ECEF vector.
pub fn ecef_to_geodetic(v: &Vec3) -> (f64, f64) {
    let lat = (v.z / v.norm()).clamp(-1.0, 1.0).asin().to_degrees();
    let lon = v.y.atan2(v.x).to_degrees();
    (lat, lon)
}

/// Great-circle distance (km) between two surface points given in degrees.
pub fn great_circle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// +Grid links for one shell: slot ± 1 within each plane and the same slot in
/// the neighbouring planes, both modular.
pub fn build_isl_topology(shell: &[SatelliteNode]) -> BTreeSet<(NodeId, NodeId)> {
    let mut edges = BTreeSet::new();
    let Some(planes) = shell.iter().map(|s| s.plane_index + 1).max() else {
        return edges;
    };
    let per_plane = shell.iter().map(|s| s.slot_index + 1).max().unwrap_or(0);
    let mut grid = vec![None; (planes * per_plane) as usize];
    for sat in shell {
        grid[(sat.plane_index * per_plane + sat.slot_index) as usize] = Some(sat.id);
    }
    let at = |p: u32, s: u32| grid[(p * per_plane + s) as usize];
    let mut link = |a: Option<NodeId>, b: Option<NodeId>| {
        if let (Some(a), Some(b)) = (a, b) {
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    };
    for p in 0..planes {
        for s in 0..per_plane {
            let here = at(p, s);
            link(here, at(p, (s + 1) % per_plane));
            link(here, at((p + 1) % planes, s));
        }
    }
    edges
}

/// Static description of the hierarchical network: all satellites, ground
/// stations and LEO links. Ids are dense: LEOs first, then MEOs, then ground
/// stations.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub shells: Vec<ShellSpec>,
    pub satellites: Vec<SatelliteNode>,
    pub ground_stations: Vec<GroundStationNode>,
    pub isl_edges: BTreeSet<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
    roles: Vec<Role>,
    leo_ids: Vec<NodeId>,
    controller_ids: Vec<NodeId>,
}

impl Network {
    pub fn new(shells: &[ShellSpec], stations: &[(String, f64, f64)]) -> Result<Self> {
        let mut ordered: Vec<(usize, &ShellSpec)> = shells.iter().enumerate().collect();
        // LEO shells get the low ids.
        ordered.sort_by_key(|(i, s)| (s.role == OrbitClass::Meo, *i));
        let mut satellites = Vec::new();
        let mut isl_edges = BTreeSet::new();
        let mut next = 0u32;
        for (index, spec) in ordered {
            let shell = generate_shell(spec, index, next)?;
            next += shell.len() as u32;
            if spec.role == OrbitClass::Leo {
                isl_edges.extend(build_isl_topology(&shell));
            }
            satellites.extend(shell);
        }
        let mut ground_stations = Vec::with_capacity(stations.len());
        for (name, lat, lon) in stations {
            ground_stations.push(GroundStationNode::new(NodeId(next), name.clone(), *lat, *lon)?);
            next += 1;
        }
        let mut roles = vec![Role::Leo; next as usize];
        for sat in &satellites {
            roles[sat.id.index()] = sat.role;
        }
        for gs in &ground_stations {
            roles[gs.id.index()] = Role::Ground;
        }
        let mut adjacency = vec![Vec::new(); next as usize];
        for &(a, b) in &isl_edges {
            adjacency[a.index()].push(b);
            adjacency[b.index()].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let leo_ids = (0..next).map(NodeId).filter(|id| roles[id.index()] == Role::Leo).collect();
        let controller_ids = (0..next).map(NodeId).filter(|id| roles[id.index()] != Role::Leo).collect();
        Ok(Self {
            shells: shells.to_vec(),
            satellites,
            ground_stations,
            isl_edges,
            adjacency,
            roles,
            leo_ids,
            controller_ids,
        })
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    pub fn leo_ids(&self) -> &[NodeId] {
        &self.leo_ids
    }

    pub fn controller_ids(&self) -> &[NodeId] {
        &self.controller_ids
    }

    pub fn role(&self, id: NodeId) -> Role {
        self.roles[id.index()]
    }

    pub fn satellite(&self, id: NodeId) -> Option<&SatelliteNode> {
        self.satellites.get(id.index()).filter(|s| s.id == id)
    }

    /// Orbital period of the first LEO shell, the natural emulation horizon.
    pub fn leo_period(&self) -> Option<f64> {
        self.satellites.iter().find(|s| s.role == Role::Leo).map(|s| orbital_period(s.orbital_radius))
    }

    pub fn snapshot(&self, time: f64) -> NetworkSnapshot {
        let n = self.node_count();
        let mut positions = vec![Vec3::zeros(); n];
        let mut velocities = vec![Vec3::zeros(); n];
        for sat in &self.satellites {
            let state = propagate(sat, time);
            positions[sat.id.index()] = state.position;
            velocities[sat.id.index()] = state.velocity;
        }
        for gs in &self.ground_stations {
            positions[gs.id.index()] = gs.position();
        }
        NetworkSnapshot {
            time,
            positions,
            velocities,
            roles: self.roles.clone(),
            isl_edges: self.isl_edges.clone(),
            adjacency: self.adjacency.clone(),
            leo_ids: self.leo_ids.clone(),
            controller_ids: self.controller_ids.clone(),
        }
    }
}

/// Every node's ECEF state at one instant together with the LEO link graph.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSnapshot {
    pub time: f64,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub roles: Vec<Role>,
    pub isl_edges: BTreeSet<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
    pub leo_ids: Vec<NodeId>,
    pub controller_ids: Vec<NodeId>,
}

impl NetworkSnapshot {
    /// Builds a snapshot from explicit node states, used for hand-made
    /// scenarios. `roles[i]` is the role of `NodeId(i)`.
    pub fn from_parts(
        time: f64,
        roles: Vec<Role>,
        positions: Vec<Vec3>,
        velocities: Vec<Vec3>,
        isl_edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Self {
        assert_eq!(roles.len(), positions.len());
        assert_eq!(roles.len(), velocities.len());
        let n = roles.len();
        let isl_edges: BTreeSet<_> = isl_edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &isl_edges {
            adjacency[a.index()].push(b);
            adjacency[b.index()].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let leo_ids = (0..n as u32).map(NodeId).filter(|i| roles[i.index()] == Role::Leo).collect();
        let controller_ids = (0..n as u32).map(NodeId).filter(|i| roles[i.index()] != Role::Leo).collect();
        Self { time, positions, velocities, roles, isl_edges, adjacency, leo_ids, controller_ids }
    }

    pub fn position(&self, id: NodeId) -> &Vec3 {
        &self.positions[id.index()]
    }

    pub fn velocity(&self, id: NodeId) -> &Vec3 {
        &self.velocities[id.index()]
    }

    pub fn role(&self, id: NodeId) -> Role {
        self.roles[id.index()]
    }

    /// Sorted ISL neighbours of a LEO.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.index()]
    }

    pub fn distance_km(&self, a: NodeId, b: NodeId) -> f64 {
        (self.position(a) - self.position(b)).norm()
    }

    pub fn is_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.isl_edges.contains(&(a.min(b), a.max(b)))
    }

    /// Northbound when the sub-satellite latitude is increasing.
    pub fn is_northbound(&self, id: NodeId) -> bool {
        self.velocity(id).z >= 0.0
    }
}

/// Angle between two vectors in radians, robust near 0 and π.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}
