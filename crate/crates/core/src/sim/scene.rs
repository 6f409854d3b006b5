//! Scene geometry: heightfield ground plus primitive elements, with ray chord,
//! voxel overlap and robot-box overlap queries.

use nalgebra::{Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::labeling::{OrientedBox, Traversability};
use crate::map::VoxelKey;

/// Ground heights on a regular grid, bilinearly interpolated and clamped at the
/// border.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heightfield {
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub heights: Vec<f64>,
}

impl Heightfield {
    pub fn flat(extent_x: f64, extent_y: f64, z: f64) -> Self {
        let spacing = 1.0;
        let nx = (extent_x / spacing).ceil() as usize + 1;
        let ny = (extent_y / spacing).ceil() as usize + 1;
        Self {
            spacing,
            nx,
            ny,
            heights: vec![z; nx * ny],
        }
    }

    fn node(&self, ix: usize, iy: usize) -> f64 {
        self.heights[iy * self.nx + ix]
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        let gx = (x / self.spacing).clamp(0.0, (self.nx - 1) as f64);
        let gy = (y / self.spacing).clamp(0.0, (self.ny - 1) as f64);
        let ix = (gx.floor() as usize).min(self.nx.saturating_sub(2));
        let iy = (gy.floor() as usize).min(self.ny.saturating_sub(2));
        let fx = gx - ix as f64;
        let fy = gy - iy as f64;
        let h00 = self.node(ix, iy);
        let h10 = self.node(ix + 1, iy);
        let h01 = self.node(ix, iy + 1);
        let h11 = self.node(ix + 1, iy + 1);
        h00 * (1.0 - fx) * (1.0 - fy) + h10 * fx * (1.0 - fy) + h01 * (1.0 - fx) * fy + h11 * fx * fy
    }

    /// Height range over the rectangle `[x0, x1] × [y0, y1]`. Bilinear patches
    /// take their extremes at rectangle corners once the rectangle is split
    /// along grid lines, so corners and grid-line crossings suffice.
    pub fn height_range(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> (f64, f64) {
        let cuts = |a: f64, b: f64| {
            let mut v = vec![a, b];
            let mut g = (a / self.spacing).ceil() * self.spacing;
            while g < b {
                v.push(g);
                g += self.spacing;
            }
            v
        };
        let xs = cuts(x0, x1);
        let ys = cuts(y0, y1);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &xs {
            for &y in &ys {
                let h = self.height(x, y);
                lo = lo.min(h);
                hi = hi.max(h);
            }
        }
        (lo, hi)
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// Vertical solid cylinder (tree trunk).
    Cylinder {
        base: Point3<f64>,
        radius: f64,
        height: f64,
    },
    /// Segment swept by a sphere (branch, stem or fallen log).
    Capsule {
        a: Point3<f64>,
        b: Point3<f64>,
        radius: f64,
    },
    /// Vertical cylindrical volume of grass blades.
    BladeCluster {
        base: Point3<f64>,
        radius: f64,
        height: f64,
    },
    /// Box rotated about the vertical axis (rock or rigid obstacle).
    Box {
        center: Point3<f64>,
        half: Vector3<f64>,
        yaw: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneElement {
    pub shape: Shape,
    pub traversability: Traversability,
    /// Probability that a beam passes through the element.
    pub p_pass: f64,
    pub intensity: IntensityProfile,
    /// Thin elements may split a beam into two returns.
    pub thin: bool,
}

fn yaw_rotation(yaw: f64) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), yaw)
}

/// Distance from `p` to the segment `a -> b`.
fn point_segment_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

fn point_obb_distance(p: &Point3<f64>, obb: &OrientedBox) -> f64 {
    let d = p - obb.center;
    let mut sq = 0.0;
    for a in 0..3 {
        let c = d.dot(&obb.axes[a]);
        let excess = c.abs() - obb.half[a];
        if excess > 0.0 {
            sq += excess * excess;
        }
    }
    sq.sqrt()
}

/// Minimum of a convex function on `[0, 1]` by golden-section search.
fn convex_min(f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f(0.0).min(f(1.0)).min(f1).min(f2)
}

/// Distance from a 2D point to an axis-aligned rectangle.
fn point_rect_distance(px: f64, py: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let dx = (x0 - px).max(0.0).max(px - x1);
    let dy = (y0 - py).max(0.0).max(py - y1);
    (dx * dx + dy * dy).sqrt()
}

/// Interval of `[t0, t1]` on a ray where it lies within the slab `[lo, hi]`.
fn slab(o: f64, d: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if d.abs() < 1e-15 {
        (o >= lo && o <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY))
    } else {
        let a = (lo - o) / d;
        let b = (hi - o) / d;
        Some((a.min(b), a.max(b)))
    }
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (hi > lo).then_some((lo, hi))
}

fn cylinder_chord(
    o: &Point3<f64>,
    d: &Vector3<f64>,
    base: &Point3<f64>,
    radius: f64,
    height: f64,
) -> Option<(f64, f64)> {
    let z = slab(o.z, d.z, base.z, base.z + height)?;
    let ox = o.x - base.x;
    let oy = o.y - base.y;
    let a = d.x * d.x + d.y * d.y;
    let c = ox * ox + oy * oy - radius * radius;
    let radial = if a < 1e-15 {
        if c <= 0.0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            return None;
        }
    } else {
        let b = ox * d.x + oy * d.y;
        let disc = b * b - a * c;
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        ((-b - s) / a, (-b + s) / a)
    };
    intersect(z, radial)
}

/// Entry parameter of a ray into a capsule, if it hits.
fn capsule_entry(
    ro: &Point3<f64>,
    rd: &Vector3<f64>,
    pa: &Point3<f64>,
    pb: &Point3<f64>,
    r: f64,
) -> Option<f64> {
    let ba = pb - pa;
    let oa = ro - pa;
    let baba = ba.dot(&ba);
    let bard = ba.dot(rd);
    let baoa = ba.dot(&oa);
    let rdoa = rd.dot(&oa);
    let oaoa = oa.dot(&oa);
    let a = baba - bard * bard;
    let b = baba * rdoa - baoa * bard;
    let c = baba * oaoa - baoa * baoa - r * r * baba;
    let h = b * b - a * c;
    if h >= 0.0 {
        if a.abs() > 1e-15 {
            let t = (-b - h.sqrt()) / a;
            let y = baoa + t * bard;
            if y > 0.0 && y < baba {
                return Some(t);
            }
        }
        let baoa_pos = if a.abs() > 1e-15 {
            baoa + ((-b - h.sqrt()) / a) * bard
        } else {
            baoa
        };
        let oc = if baoa_pos <= 0.0 { oa } else { ro - pb };
        let b = rd.dot(&oc);
        let c = oc.dot(&oc) - r * r;
        let h = b * b - c;
        if h > 0.0 {
            return Some(-b - h.sqrt());
        }
    }
    None
}

fn capsule_chord(
    o: &Point3<f64>,
    d: &Vector3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    r: f64,
) -> Option<(f64, f64)> {
    // start well behind the capsule so the entry is never behind the ray start
    let back = (o - a).norm() + (b - a).norm() + 2.0 * r + 1.0;
    let start = o - d * back;
    let t_in = capsule_entry(&start, d, a, b, r)? - back;
    let end = o + d * (t_in + 2.0 * back);
    let t_out = t_in + 2.0 * back - capsule_entry(&end, &(-d), a, b, r)?;
    (t_out > t_in).then_some((t_in, t_out))
}

impl Shape {
    /// Parameter interval where the ray `o + t d` (unit `d`) is inside the shape.
    pub fn chord(&self, o: &Point3<f64>, d: &Vector3<f64>) -> Option<(f64, f64)> {
        match *self {
            Shape::Cylinder {
                base,
                radius,
                height,
            }
            | Shape::BladeCluster {
                base,
                radius,
                height,
            } => cylinder_chord(o, d, &base, radius, height),
            Shape::Capsule { a, b, radius } => capsule_chord(o, d, &a, &b, radius),
            Shape::Box { center, half, yaw } => {
                let rot = yaw_rotation(yaw);
                let lo = rot.inverse() * (o - center);
                let ld = rot.inverse() * d;
                let mut range = (f64::NEG_INFINITY, f64::INFINITY);
                for a in 0..3 {
                    range = intersect(range, slab(lo[a], ld[a], -half[a], half[a])?)?;
                }
                Some(range)
            }
        }
    }

    /// Distance from `p` to the shape's boundary; zero inside volumetric clusters.
    pub fn surface_distance(&self, p: &Point3<f64>) -> f64 {
        match *self {
            Shape::Cylinder {
                base,
                radius,
                height,
            } => {
                let radial = ((p.x - base.x).powi(2) + (p.y - base.y).powi(2)).sqrt() - radius;
                let vertical = (base.z - p.z).max(p.z - base.z - height);
                if radial <= 0.0 && vertical <= 0.0 {
                    (-radial).min(-vertical)
                } else {
                    (radial.max(0.0).powi(2) + vertical.max(0.0).powi(2)).sqrt()
                }
            }
            Shape::BladeCluster {
                base,
                radius,
                height,
            } => {
                let radial = ((p.x - base.x).powi(2) + (p.y - base.y).powi(2)).sqrt() - radius;
                let vertical = (base.z - p.z).max(p.z - base.z - height);
                (radial.max(0.0).powi(2) + vertical.max(0.0).powi(2)).sqrt()
            }
            Shape::Capsule { a, b, radius } => (point_segment_distance(p, &a, &b) - radius).abs(),
            Shape::Box { center, half, yaw } => {
                let local = yaw_rotation(yaw).inverse() * (p - center);
                let q = local.abs() - half;
                let outside = q.map(|v| v.max(0.0)).norm();
                let inside = q.max().min(0.0);
                (outside + inside).abs()
            }
        }
    }

    /// Whether the shape shares positive volume with the voxel `key`.
    pub fn overlaps_voxel(&self, key: &VoxelKey, resolution: f64) -> bool {
        let lo = key.min_corner(resolution);
        let hi = lo + Vector3::repeat(resolution);
        match *self {
            Shape::Cylinder {
                base,
                radius,
                height,
            }
            | Shape::BladeCluster {
                base,
                radius,
                height,
            } => {
                hi.z > base.z
                    && lo.z < base.z + height
                    && point_rect_distance(base.x, base.y, lo.x, hi.x, lo.y, hi.y) < radius
            }
            Shape::Capsule { a, b, radius } => {
                let cell = OrientedBox::axis_aligned(lo, hi);
                convex_min(|t| point_obb_distance(&(a + (b - a) * t), &cell)) < radius
            }
            Shape::Box { center, half, yaw } => {
                let rot = yaw_rotation(yaw);
                let obb = OrientedBox {
                    center,
                    axes: [rot * Vector3::x(), rot * Vector3::y(), Vector3::z()],
                    half,
                };
                obb.overlaps(&OrientedBox::axis_aligned(lo, hi))
            }
        }
    }

    /// Whether the shape shares positive volume with an oriented box whose
    /// third axis is vertical.
    pub fn overlaps_upright_box(&self, obb: &OrientedBox) -> bool {
        match *self {
            Shape::Cylinder {
                base,
                radius,
                height,
            }
            | Shape::BladeCluster {
                base,
                radius,
                height,
            } => {
                let z_lo = obb.center.z - obb.half.z;
                let z_hi = obb.center.z + obb.half.z;
                if !(z_hi > base.z && z_lo < base.z + height) {
                    return false;
                }
                let d = base - obb.center;
                let u = d.dot(&obb.axes[0]);
                let v = d.dot(&obb.axes[1]);
                point_rect_distance(u, v, -obb.half.x, obb.half.x, -obb.half.y, obb.half.y)
                    < radius
            }
            Shape::Capsule { a, b, radius } => {
                convex_min(|t| point_obb_distance(&(a + (b - a) * t), obb)) < radius
            }
            Shape::Box { center, half, yaw } => {
                let rot = yaw_rotation(yaw);
                OrientedBox {
                    center,
                    axes: [rot * Vector3::x(), rot * Vector3::y(), Vector3::z()],
                    half,
                }
                .overlaps(obb)
            }
        }
    }

    /// Conservative axis-aligned bounds.
    pub fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        match *self {
            Shape::Cylinder {
                base,
                radius,
                height,
            }
            | Shape::BladeCluster {
                base,
                radius,
                height,
            } => (
                Point3::new(base.x - radius, base.y - radius, base.z),
                Point3::new(base.x + radius, base.y + radius, base.z + height),
            ),
            Shape::Capsule { a, b, radius } => (
                a.inf(&b) - Vector3::repeat(radius),
                a.sup(&b) + Vector3::repeat(radius),
            ),
            Shape::Box { center, half, yaw } => {
                let (s, c) = yaw.sin_cos();
                let ex = half.x * c.abs() + half.y * s.abs();
                let ey = half.x * s.abs() + half.y * c.abs();
                let e = Vector3::new(ex, ey, half.z);
                (center - e, center + e)
            }
        }
    }
}

/// Uniform 2D bucket grid over element footprints.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct ElementGrid {
    cell: f64,
    nx: i32,
    ny: i32,
    buckets: Vec<Vec<u32>>,
}

impl ElementGrid {
    const CELL: f64 = 1.0;

    pub(crate) fn build(elements: &[SceneElement], extent_x: f64, extent_y: f64) -> Self {
        let cell = Self::CELL;
        // margin for elements overhanging the extent
        let nx = (extent_x / cell).ceil() as i32 + 4;
        let ny = (extent_y / cell).ceil() as i32 + 4;
        let mut grid = Self {
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); (nx * ny) as usize],
        };
        for (idx, e) in elements.iter().enumerate() {
            grid.insert(idx as u32, e);
        }
        grid
    }

    fn cell_of(&self, x: f64, y: f64) -> (i32, i32) {
        (
            ((x / self.cell).floor() as i32 + 2).clamp(0, self.nx - 1),
            ((y / self.cell).floor() as i32 + 2).clamp(0, self.ny - 1),
        )
    }

    pub(crate) fn insert(&mut self, idx: u32, e: &SceneElement) {
        let (lo, hi) = e.shape.bounds();
        let (x0, y0) = self.cell_of(lo.x, lo.y);
        let (x1, y1) = self.cell_of(hi.x, hi.y);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                self.buckets[(cy * self.nx + cx) as usize].push(idx);
            }
        }
    }

    /// Elements whose footprint buckets meet the 2D rectangle.
    pub(crate) fn query_rect(&self, lo: (f64, f64), hi: (f64, f64), out: &mut Vec<u32>) {
        let (x0, y0) = self.cell_of(lo.0, lo.1);
        let (x1, y1) = self.cell_of(hi.0, hi.1);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                out.extend_from_slice(&self.buckets[(cy * self.nx + cx) as usize]);
            }
        }
        out.sort_unstable();
        out.dedup();
    }

    /// Visits, in ray order, the buckets crossed by the horizontal projection
    /// of `o + t d` for `t` in `[0, max_t]`. The callback receives each
    /// bucket's elements and the ray parameter where the ray leaves it, and
    /// returns false to stop.
    pub(crate) fn walk(
        &self,
        o: &Point3<f64>,
        d: &Vector3<f64>,
        max_t: f64,
        mut visit: impl FnMut(&[u32], f64) -> bool,
    ) {
        let gx = o.x / self.cell + 2.0;
        let gy = o.y / self.cell + 2.0;
        let mut cx = gx.floor() as i32;
        let mut cy = gy.floor() as i32;
        let axis = |g: f64, c: i32, dir: f64| -> (i32, f64, f64) {
            if dir > 0.0 {
                (1, ((c + 1) as f64 - g) * self.cell / dir, self.cell / dir)
            } else if dir < 0.0 {
                (-1, (c as f64 - g) * self.cell / dir, -self.cell / dir)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (sx, mut tx, dtx) = axis(gx, cx, d.x);
        let (sy, mut ty, dty) = axis(gy, cy, d.y);
        loop {
            if cx < 0 || cy < 0 || cx >= self.nx || cy >= self.ny {
                return;
            }
            let t_exit = tx.min(ty).min(max_t);
            if !visit(&self.buckets[(cy * self.nx + cx) as usize], t_exit) || t_exit >= max_t {
                return;
            }
            if tx <= ty {
                cx += sx;
                tx += dtx;
            } else {
                cy += sy;
                ty += dty;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub extent_x: f64,
    pub extent_y: f64,
    pub ground: Heightfield,
    pub ground_intensity: IntensityProfile,
    pub elements: Vec<SceneElement>,
    #[serde(skip)]
    pub(crate) grid: ElementGrid,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.extent_x == other.extent_x
            && self.extent_y == other.extent_y
            && self.ground == other.ground
            && self.ground_intensity == other.ground_intensity
            && self.elements == other.elements
    }
}

impl Scene {
    pub fn new(
        extent_x: f64,
        extent_y: f64,
        ground: Heightfield,
        ground_intensity: IntensityProfile,
        elements: Vec<SceneElement>,
    ) -> Self {
        let grid = ElementGrid::build(&elements, extent_x, extent_y);
        Self {
            extent_x,
            extent_y,
            ground,
            ground_intensity,
            elements,
            grid,
        }
    }

    pub(crate) fn push_element(&mut self, e: SceneElement) {
        let idx = self.elements.len() as u32;
        self.grid.insert(idx, &e);
        self.elements.push(e);
    }

    /// Rebuilds the acceleration grid (needed after deserializing).
    pub fn reindex(&mut self) {
        self.grid = ElementGrid::build(&self.elements, self.extent_x, self.extent_y);
    }

    pub fn ground_height(&self, x: f64, y: f64) -> f64 {
        self.ground.height(x, y)
    }

    /// First ground crossing of the ray within `(t_min, t_max)`.
    pub fn ground_hit(&self, o: &Point3<f64>, d: &Vector3<f64>, t_min: f64, t_max: f64) -> Option<f64> {
        let top = self.ground.max_height();
        if d.z >= 0.0 && o.z > top {
            return None;
        }
        let f = |t: f64| {
            let p = o + d * t;
            p.z - self.ground.height(p.x, p.y)
        };
        let step = 0.05;
        let mut t0 = t_min;
        let mut f0 = f(t0);
        if f0 <= 0.0 {
            return None;
        }
        while t0 < t_max {
            let t1 = (t0 + step).min(t_max);
            let f1 = f(t1);
            if f1 <= 0.0 {
                let (mut lo, mut hi) = (t0, t1);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
            // rising ray above all terrain cannot come back down
            if d.z >= 0.0 && o.z + d.z * t1 > top {
                return None;
            }
            t0 = t1;
            f0 = f1;
        }
        let _ = f0;
        None
    }

    /// Distance from a point to the nearest surface (ground or element).
    pub fn surface_distance(&self, p: &Point3<f64>) -> f64 {
        let ground = (p.z - self.ground_height(p.x, p.y)).abs();
        self.elements
            .iter()
            .map(|e| e.shape.surface_distance(p))
            .fold(ground, f64::min)
    }

    /// Indices of non-traversable elements overlapping an upright box.
    pub fn nt_elements_overlapping(&self, obb: &OrientedBox) -> Vec<usize> {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in obb.corners() {
            lo = (lo.0.min(c.x), lo.1.min(c.y));
            hi = (hi.0.max(c.x), hi.1.max(c.y));
        }
        let mut cand = Vec::new();
        self.grid.query_rect(lo, hi, &mut cand);
        cand.into_iter()
            .map(|i| i as usize)
            .filter(|&i| {
                let e = &self.elements[i];
                e.traversability == Traversability::NonTraversable
                    && e.shape.overlaps_upright_box(obb)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_chord_face_on() {
        let shape = Shape::Cylinder {
            base: Point3::new(5.0, 0.0, 0.0),
            radius: 0.2,
            height: 3.0,
        };
        let (t0, t1) = shape
            .chord(&Point3::new(0.0, 0.0, 1.0), &Vector3::x())
            .unwrap();
        assert!((t0 - 4.8).abs() < 1e-12 && (t1 - 5.2).abs() < 1e-12);
        assert!(shape
            .chord(&Point3::new(0.0, 0.5, 1.0), &Vector3::x())
            .is_none());
    }

    #[test]
    fn capsule_chord_matches_sphere_and_body() {
        let shape = Shape::Capsule {
            a: Point3::new(2.0, -1.0, 0.5),
            b: Point3::new(2.0, 1.0, 0.5),
            radius: 0.1,
        };
        let (t0, t1) = shape
            .chord(&Point3::new(0.0, 0.0, 0.5), &Vector3::x())
            .unwrap();
        assert!((t0 - 1.9).abs() < 1e-9 && (t1 - 2.1).abs() < 1e-9);
        // through the spherical cap along the axis
        let (t0, t1) = shape
            .chord(&Point3::new(2.0, -3.0, 0.5), &Vector3::y())
            .unwrap();
        assert!((t0 - 1.9).abs() < 1e-9 && (t1 - 4.1).abs() < 1e-9);
    }

    #[test]
    fn box_chord_respects_yaw() {
        let shape = Shape::Box {
            center: Point3::new(3.0, 0.0, 0.0),
            half: Vector3::new(0.5, 0.1, 0.5),
            yaw: std::f64::consts::FRAC_PI_2,
        };
        let (t0, t1) = shape.chord(&Point3::origin(), &Vector3::x()).unwrap();
        assert!((t0 - 2.9).abs() < 1e-9 && (t1 - 3.1).abs() < 1e-9);
    }

    #[test]
    fn heightfield_range_brackets_samples() {
        let mut hf = Heightfield::flat(4.0, 4.0, 0.0);
        for (i, h) in hf.heights.iter_mut().enumerate() {
            *h = ((i * 7919) % 13) as f64 * 0.05;
        }
        let (lo, hi) = hf.height_range(0.9, 1.15, 1.95, 2.05);
        for a in 0..=20 {
            for b in 0..=20 {
                let h = hf.height(0.9 + 0.25 * a as f64 / 20.0, 1.95 + 0.1 * b as f64 / 20.0);
                assert!(h >= lo - 1e-12 && h <= hi + 1e-12);
            }
        }
    }
}
