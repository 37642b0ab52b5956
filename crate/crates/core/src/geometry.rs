//! Parametric design rules of the actuator-lattice unit.
//!
//! Every length is laid out in reference millimetres (the 1.0x unit, where
//! the lattice cell is 12.5 mm) and multiplied by the scale factor once, at
//! the end. Scaled geometry is therefore exactly `scale` times the reference
//! geometry, bit for bit. The waveguide radius is the one length that does
//! not scale.

use std::io::Write;

use thiserror::Error;

use crate::Vec3;

/// Lattice unit cell at scale 1.0, mm.
pub const REFERENCE_UNIT_CELL: f64 = 12.5;
/// Minimum strut thickness at scale 1.0, mm.
pub const REFERENCE_STRUT_THICKNESS: f64 = 1.5;
/// Waveguide inclusion radius, mm. Kept constant across scales.
pub const DEFAULT_SENSOR_RADIUS: f64 = 1.0;

// Simplified cavity layout, in multiples of the unit cell.
const CAVITY_RADIAL: f64 = 0.8;
const CAVITY_AXIAL: f64 = 0.35;
const CHANNEL_RADIUS: f64 = 0.15;
const END_MARGIN: f64 = 1.0;
const WALL_MARGIN: f64 = 0.5;
const MEMBRANE_BAND: f64 = 0.12;
// Cavity axis shift toward +z; leaves a thin extensible wall on top and a
// thicker strain-limiting side holding the anchors.
const AXIS_OFFSET: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("`{field}` must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("`chamber_count` must be at least 1, got {0}")]
    ChamberCount(usize),
    #[error("`fingers` must be 1 or 2, got {0}")]
    Fingers(usize),
    #[error("membrane band {band} mm must be thinner than the thinnest wall {wall} mm")]
    MembraneBand { band: f64, wall: f64 },
    #[error("cavity extent {extent} mm pierces the envelope half-width {half_width} mm")]
    CavityPiercesWall { extent: f64, half_width: f64 },
    #[error("adjacent cavities overlap (axial extent {extent} mm, pitch {pitch} mm)")]
    CavityOverlap { extent: f64, pitch: f64 },
}

/// Parametric description of one design variant.
#[derive(Debug, Clone, PartialEq)]
pub struct MuDesign {
    pub scale: f64,
    /// Lattice unit cell `U`, mm.
    pub unit_cell: f64,
    pub chamber_count: usize,
    /// Always `2 U`.
    pub bladder_diameter: f64,
    /// Always `U`.
    pub chamber_pitch: f64,
    pub strut_min_thickness: f64,
    pub sensor_radius: f64,
    pub fingers: usize,
}

/// Builds a design from the scaling rules.
pub fn build_design(
    scale: f64,
    chamber_count: usize,
    fingers: usize,
) -> Result<MuDesign, GeometryError> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(GeometryError::NonPositive {
            field: "scale",
            value: scale,
        });
    }
    if chamber_count < 1 {
        return Err(GeometryError::ChamberCount(chamber_count));
    }
    if !(1..=2).contains(&fingers) {
        return Err(GeometryError::Fingers(fingers));
    }
    let unit_cell = REFERENCE_UNIT_CELL * scale;
    Ok(MuDesign {
        scale,
        unit_cell,
        chamber_count,
        bladder_diameter: 2.0 * unit_cell,
        chamber_pitch: unit_cell,
        strut_min_thickness: REFERENCE_STRUT_THICKNESS * scale,
        sensor_radius: DEFAULT_SENSOR_RADIUS,
        fingers,
    })
}

impl MuDesign {
    /// Overrides the inclusion radius (mm).
    pub fn with_sensor_radius(mut self, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::NonPositive {
                field: "sensor_radius",
                value: radius,
            });
        }
        self.sensor_radius = radius;
        Ok(self)
    }

    /// Converts a reference-scale length (mm at 1.0x) to this design's scale.
    fn mm(&self, reference: f64) -> f64 {
        reference * self.scale
    }

    fn ref_vec(&self, x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(self.mm(x), self.mm(y), self.mm(z))
    }

    /// Axial length of one finger envelope, mm.
    pub fn actuator_length(&self) -> f64 {
        self.mm(REFERENCE_UNIT_CELL * (self.chamber_count as f64 + 2.0 * END_MARGIN))
    }

    /// Half-width of the square cross-section, mm.
    pub fn half_width(&self) -> f64 {
        self.mm(REFERENCE_UNIT_CELL * (1.0 + WALL_MARGIN))
    }

    /// Vertical centre of finger `f` and whether it is mirrored about its
    /// own mid-plane. The second finger sits below the first, one finger
    /// width apart, mirrored so that both curl toward the gap.
    fn finger_frame(&self, finger: usize) -> (f64, bool) {
        let w = REFERENCE_UNIT_CELL * (1.0 + WALL_MARGIN);
        match finger {
            0 => (0.0, false),
            _ => (-4.0 * w, true),
        }
    }
}

/// Ordered lattice-core anchors on the sagittal plane (`y = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    /// Anchors of the primary finger, proximal to distal.
    pub points: Vec<Vec3>,
    /// Matching anchors on every additional finger (gripper preset).
    pub replicas: Vec<Vec<Vec3>>,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes one anchor per line, three space-separated coordinates.
    pub fn write_nodes_txt<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.points {
            writeln!(out, "{:.3} {:.3} {:.3}", p.x, p.y, p.z)?;
        }
        Ok(())
    }
}

/// One anchor per chamber, at the core of the strain-limiting row of
/// lattice cells, spaced exactly one unit cell apart.
pub fn anchor_nodes(design: &MuDesign) -> AnchorSet {
    let per_finger = |finger: usize| -> Vec<Vec3> {
        let (zc, mirrored) = design.finger_frame(finger);
        let u = REFERENCE_UNIT_CELL;
        let w = u * (1.0 + WALL_MARGIN);
        // Core of the bottom row of cells, half a cell above the outer face.
        let local_z = -w + 0.5 * u;
        let z = if mirrored { zc - local_z } else { zc + local_z };
        (0..design.chamber_count)
            .map(|c| design.ref_vec(u * (END_MARGIN + c as f64 + 0.5), 0.0, z))
            .collect()
    };
    AnchorSet {
        points: per_finger(0),
        replicas: (1..design.fingers).map(per_finger).collect(),
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance(&self, p: &Vec3) -> f64 {
        let d = (self.min - p).sup(&(p - self.max)).sup(&Vec3::zeros());
        d.norm()
    }
}

/// Oblate cavity of revolution about an axis parallel to `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cavity {
    pub id: usize,
    pub center: Vec3,
    /// Semi-extent perpendicular to the axis, mm.
    pub radial: f64,
    /// Semi-extent along the axis, mm.
    pub axial: f64,
}

impl Cavity {
    pub fn contains(&self, p: &Vec3) -> bool {
        let d = p - self.center;
        let a = d.x / self.axial;
        let r = (d.y * d.y + d.z * d.z).sqrt() / self.radial;
        a * a + r * r <= 1.0
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radial * self.radial * self.axial
    }
}

/// Feed channel joining the cavities of one finger: a cylinder along `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub start: Vec3,
    pub length: f64,
    pub radius: f64,
    /// Cavities served by this channel; channel cells take the id of the
    /// axially nearest one.
    pub cavity_ids: Vec<usize>,
}

impl Channel {
    pub fn contains(&self, p: &Vec3) -> bool {
        let d = p - self.start;
        d.x >= 0.0 && d.x <= self.length && (d.y * d.y + d.z * d.z) <= self.radius * self.radius
    }
}

/// Simplified solid consumed by the mesher.
#[derive(Debug, Clone, PartialEq)]
pub struct SolidOutline {
    /// One envelope per finger.
    pub envelopes: Vec<Aabb>,
    /// Shared base block of the gripper preset.
    pub base: Option<Aabb>,
    pub cavities: Vec<Cavity>,
    pub channels: Vec<Channel>,
    /// Tets within this distance of a cavity are labelled membrane, mm.
    pub membrane_band: f64,
    /// Outer wall margin added around the bladders on each side, mm.
    pub wall_margin: f64,
    /// Length that the mesh grid must divide evenly, mm.
    pub grid_unit: f64,
    /// Points whose nearest vertices become the monitored backbone.
    pub monitor_points: Vec<Vec3>,
}

impl SolidOutline {
    /// A plain box with no cavities, clamped at its `x = min` face.
    pub fn block(min: Vec3, max: Vec3, grid_unit: f64) -> Self {
        Self {
            envelopes: vec![Aabb::new(min, max)],
            base: None,
            cavities: Vec::new(),
            channels: Vec::new(),
            membrane_band: 0.0,
            wall_margin: 0.0,
            grid_unit,
            monitor_points: Vec::new(),
        }
    }

    /// All solid boxes: envelopes followed by the base block.
    pub fn bodies(&self) -> impl Iterator<Item = &Aabb> {
        self.envelopes.iter().chain(self.base.iter())
    }

    pub fn bounds(&self) -> Aabb {
        let mut it = self.bodies();
        let first = *it.next().expect("outline has at least one body");
        it.fold(first, |acc, b| acc.union(b))
    }

    /// Total volume of the solid boxes, counting overlaps once per box.
    pub fn envelope_volume(&self) -> f64 {
        self.bodies().map(Aabb::volume).sum()
    }

    /// Which cavity (if any) owns point `p`.
    pub fn cavity_at(&self, p: &Vec3) -> Option<usize> {
        if let Some(c) = self.cavities.iter().find(|c| c.contains(p)) {
            return Some(c.id);
        }
        self.channels
            .iter()
            .find(|ch| ch.contains(p))
            .and_then(|ch| {
                ch.cavity_ids
                    .iter()
                    .filter_map(|id| self.cavities.iter().find(|c| c.id == *id))
                    .min_by(|a, b| {
                        let da = (p.x - a.center.x).abs();
                        let db = (p.x - b.center.x).abs();
                        da.total_cmp(&db).then(a.id.cmp(&b.id))
                    })
                    .map(|c| c.id)
            })
    }

    /// Checks the outline invariants.
    pub fn validate(&self) -> Result<(), GeometryError> {
        for env in &self.envelopes {
            let half = 0.5 * env.extent().y.min(env.extent().z);
            let mid = 0.5 * (env.min + env.max);
            for c in self.cavities.iter().filter(|c| env.contains(&c.center)) {
                let reach = c.radial + (c.center.z - mid.z).abs().max((c.center.y - mid.y).abs());
                if reach >= half {
                    return Err(GeometryError::CavityPiercesWall {
                        extent: reach,
                        half_width: half,
                    });
                }
                let wall = half - reach;
                if self.membrane_band >= wall {
                    return Err(GeometryError::MembraneBand {
                        band: self.membrane_band,
                        wall,
                    });
                }
            }
        }
        let mut sorted: Vec<&Cavity> = self.cavities.iter().collect();
        sorted.sort_by(|a, b| {
            (a.center.z, a.center.x)
                .partial_cmp(&(b.center.z, b.center.x))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for pair in sorted.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.center.z == b.center.z && a.center.y == b.center.y {
                let pitch = (b.center.x - a.center.x).abs();
                if a.axial + b.axial >= pitch {
                    return Err(GeometryError::CavityOverlap {
                        extent: a.axial + b.axial,
                        pitch,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Outline tunables, in multiples of the unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlineParams {
    pub membrane_band: f64,
    pub cavity_radial: f64,
    pub cavity_axial: f64,
    pub channel_radius: f64,
}

impl Default for OutlineParams {
    fn default() -> Self {
        Self {
            membrane_band: MEMBRANE_BAND,
            cavity_radial: CAVITY_RADIAL,
            cavity_axial: CAVITY_AXIAL,
            channel_radius: CHANNEL_RADIUS,
        }
    }
}

pub fn solid_outline(design: &MuDesign) -> Result<SolidOutline, GeometryError> {
    solid_outline_with(design, &OutlineParams::default())
}

/// Lays out envelopes, cavities and channels. The axis runs along `+x` from
/// the clamped proximal face; the sagittal plane is `y = 0`.
pub fn solid_outline_with(
    design: &MuDesign,
    params: &OutlineParams,
) -> Result<SolidOutline, GeometryError> {
    let u = REFERENCE_UNIT_CELL;
    let w = u * (1.0 + WALL_MARGIN);
    let length = u * (design.chamber_count as f64 + 2.0 * END_MARGIN);
    let n = design.chamber_count;

    let mut envelopes = Vec::new();
    let mut cavities = Vec::new();
    let mut channels = Vec::new();
    for finger in 0..design.fingers {
        let (zc, mirrored) = design.finger_frame(finger);
        envelopes.push(Aabb::new(
            design.ref_vec(0.0, -w, zc - w),
            design.ref_vec(length, w, zc + w),
        ));
        let axis_z = if mirrored {
            zc - AXIS_OFFSET * u
        } else {
            zc + AXIS_OFFSET * u
        };
        let ids: Vec<usize> = (0..n).map(|c| finger * n + c).collect();
        for (c, id) in ids.iter().enumerate() {
            cavities.push(Cavity {
                id: *id,
                center: design.ref_vec(u * (END_MARGIN + c as f64 + 0.5), 0.0, axis_z),
                radial: design.mm(params.cavity_radial * u),
                axial: design.mm(params.cavity_axial * u),
            });
        }
        if n > 1 {
            channels.push(Channel {
                start: design.ref_vec(u * (END_MARGIN + 0.5), 0.0, axis_z),
                length: design.mm(u * (n as f64 - 1.0)),
                radius: design.mm(params.channel_radius * u),
                cavity_ids: ids,
            });
        }
    }
    let base = (design.fingers > 1).then(|| {
        let lowest = envelopes
            .iter()
            .map(|e| e.min.z)
            .fold(f64::INFINITY, f64::min);
        let highest = envelopes
            .iter()
            .map(|e| e.max.z)
            .fold(f64::NEG_INFINITY, f64::max);
        Aabb::new(
            Vec3::new(design.mm(-u), design.mm(-w), lowest),
            Vec3::new(0.0, design.mm(w), highest),
        )
    });
    let outline = SolidOutline {
        envelopes,
        base,
        cavities,
        channels,
        membrane_band: design.mm(params.membrane_band * u),
        wall_margin: design.mm(WALL_MARGIN * u),
        grid_unit: design.unit_cell,
        monitor_points: anchor_nodes(design).points,
    };
    outline.validate()?;
    Ok(outline)
}
