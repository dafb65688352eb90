//! Reference computations for the test suites.
//!
//! Everything here is written from first principles on plain arrays and
//! shares no code with the engine: discs are intersected in their own frame,
//! interpolation is an explicit eight-corner weighted sum, and the camera is
//! rebuilt from an eye/target/up basis. Speed is not a goal.

pub type V3 = [f64; 3];
/// Unit quaternion `[w, x, y, z]`.
pub type Quat = [f64; 4];

pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: V3) -> V3 {
    scale(a, 1.0 / norm(a))
}

/// Rotation matrix of a unit quaternion, rows first.
pub fn rotation_matrix(q: Quat) -> [[f64; 3]; 3] {
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn rotate(q: Quat, v: V3) -> V3 {
    let m = rotation_matrix(q);
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// Applies the inverse rotation (the transposed matrix).
pub fn rotate_inv(q: Quat, v: V3) -> V3 {
    let m = rotation_matrix(q);
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

/// Hamilton product `a·b`.
pub fn quat_mul(a: Quat, b: Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn quat_conj(q: Quat) -> Quat {
    [q[0], -q[1], -q[2], -q[3]]
}

/// Rotation angle between two unit quaternions, radians, sign-agnostic.
/// Uses the half-angle's sine and cosine, which stays accurate near zero
/// where `acos` of the dot product does not.
pub fn quat_angle(a: Quat, b: Quat) -> f64 {
    let d = quat_mul(quat_conj(a), b);
    let s = (d[1] * d[1] + d[2] * d[2] + d[3] * d[3]).sqrt();
    2.0 * s.atan2(d[0].abs())
}

/// A lens disc: `radius` around `center` in the local XY plane of `orientation`.
#[derive(Clone, Copy, Debug)]
pub struct Disc {
    pub id: u64,
    pub center: V3,
    pub orientation: Quat,
    pub radius: f64,
}

/// Hits closer than this along the ray are ignored.
pub const MIN_T: f64 = 1e-6;
/// Rays whose direction has a smaller component along the normal count as parallel.
pub const PARALLEL: f64 = 1e-9;

/// Ray/disc intersection in the disc's own frame: solve `z = 0`, then test
/// `x² + y² ≤ r²`. Returns the ray parameter (unit direction) and whether the
/// ray travels against the disc's +Z (the front face).
pub fn disc_hit(disc: &Disc, origin: V3, dir: V3) -> Option<(f64, bool)> {
    let o = rotate_inv(disc.orientation, sub(origin, disc.center));
    let v = rotate_inv(disc.orientation, normalize(dir));
    if v[2].abs() < PARALLEL {
        return None;
    }
    let t = -o[2] / v[2];
    if !(t > MIN_T) {
        return None;
    }
    let x = o[0] + t * v[0];
    let y = o[1] + t * v[1];
    if x * x + y * y > disc.radius * disc.radius {
        return None;
    }
    Some((t, v[2] < 0.0))
}

/// Exhaustive pick: the disc with the smallest hit parameter within `range`,
/// ties to the smaller id.
pub fn nearest_disc(discs: &[Disc], origin: V3, dir: V3, range: f64) -> Option<u64> {
    let mut best: Option<(f64, u64)> = None;
    for d in discs {
        if let Some((t, _)) = disc_hit(d, origin, dir) {
            if t > range {
                continue;
            }
            let better = match best {
                None => true,
                Some((bt, bid)) => t < bt || (t == bt && d.id < bid),
            };
            if better {
                best = Some((t, d.id));
            }
        }
    }
    best.map(|(_, id)| id)
}

/// A scalar grid in the engine's layout (x fastest), values at voxel centers.
#[derive(Clone, Debug)]
pub struct Grid {
    pub dims: [usize; 3],
    pub spacing: V3,
    pub origin: V3,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn from_fn(dims: [usize; 3], spacing: V3, origin: V3, f: impl Fn(V3) -> f64) -> Self {
        let mut values = Vec::new();
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = [
                        origin[0] + i as f64 * spacing[0],
                        origin[1] + j as f64 * spacing[1],
                        origin[2] + k as f64 * spacing[2],
                    ];
                    values.push(f(p));
                }
            }
        }
        Self { dims, spacing, origin, values }
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    pub fn lo(&self) -> V3 {
        self.origin
    }

    pub fn hi(&self) -> V3 {
        [0, 1, 2].map(|a| self.origin[a] + (self.dims[a] - 1) as f64 * self.spacing[a])
    }

    /// Trilinear interpolation as the weighted sum of the eight cell corners;
    /// zero outside the voxel-center box.
    pub fn trilinear(&self, p: V3) -> f64 {
        let mut cell = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let g = (p[a] - self.origin[a]) / self.spacing[a];
            let last = (self.dims[a] - 1) as f64;
            if !(g >= 0.0 && g <= last) {
                return 0.0;
            }
            let i = (g.floor() as usize).min(self.dims[a].saturating_sub(2));
            cell[a] = i;
            frac[a] = g - i as f64;
        }
        let mut sum = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..3 {
                let up = (corner >> a) & 1 == 1;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
                idx[a] = (cell[a] + up as usize).min(self.dims[a] - 1);
            }
            if w != 0.0 {
                sum += w * self.at(idx[0], idx[1], idx[2]);
            }
        }
        sum
    }
}

/// Ray parameters where the ray is inside the box `[lo, hi]`, clipped to `t ≥ 0`.
pub fn box_interval(lo: V3, hi: V3, origin: V3, dir: V3) -> Option<(f64, f64)> {
    let d = normalize(dir);
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for a in 0..3 {
        if d[a] == 0.0 {
            if origin[a] < lo[a] || origin[a] > hi[a] {
                return None;
            }
            continue;
        }
        let ta = (lo[a] - origin[a]) / d[a];
        let tb = (hi[a] - origin[a]) / d[a];
        t0 = t0.max(ta.min(tb));
        t1 = t1.min(ta.max(tb));
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Largest sample of `field` at `t0 + k·step`, `t < t1`, along a unit-direction ray.
pub fn max_along(field: impl Fn(V3) -> f64, origin: V3, dir: V3, t0: f64, t1: f64, step: f64) -> f64 {
    let d = normalize(dir);
    let mut best = 0.0f64;
    let mut k = 0u64;
    loop {
        let t = t0 + k as f64 * step;
        if t >= t1 {
            return best;
        }
        best = best.max(field(add(origin, scale(d, t))));
        k += 1;
    }
}

/// Piecewise-linear transfer function `(value, opacity, gray)`, points sorted by value.
pub fn transfer(points: &[(f64, f64, f64)], v: f64) -> (f64, f64) {
    let v = v.clamp(0.0, 1.0);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if v <= b.0 {
            let s = (v - a.0) / (b.0 - a.0);
            return (a.1 + s * (b.1 - a.1), a.2 + s * (b.2 - a.2));
        }
    }
    let last = points[points.len() - 1];
    (last.1, last.2)
}

/// Front-to-back emission-absorption along a ray, stopping once the
/// accumulated opacity reaches `exit_alpha` (pass a value above 1 to march
/// the whole interval). Opacities are defined per `reference_step` and
/// corrected to `step`. Returns premultiplied gray and accumulated opacity.
#[allow(clippy::too_many_arguments)]
pub fn emission_absorption(
    field: impl Fn(V3) -> f64,
    points: &[(f64, f64, f64)],
    origin: V3,
    dir: V3,
    t0: f64,
    t1: f64,
    step: f64,
    reference_step: f64,
    exit_alpha: f64,
) -> (f64, f64) {
    let d = normalize(dir);
    let (mut c, mut a) = (0.0, 0.0);
    let mut k = 0u64;
    loop {
        let t = t0 + k as f64 * step;
        if t >= t1 {
            return (c, a);
        }
        let (op, gray) = transfer(points, field(add(origin, scale(d, t))));
        let op = 1.0 - (1.0 - op).powf(step / reference_step);
        c += (1.0 - a) * op * gray;
        a += (1.0 - a) * op;
        if a >= exit_alpha {
            return (c, a);
        }
        k += 1;
    }
}

/// A pinhole camera rebuilt from its eye, target and up vector. Pixel
/// `(0, 0)` is top-left; rays go through pixel centers.
#[derive(Clone, Copy, Debug)]
pub struct Pinhole {
    pub eye: V3,
    pub forward: V3,
    pub right: V3,
    pub up: V3,
    pub tan_half: f64,
    pub width: u32,
    pub height: u32,
}

impl Pinhole {
    pub fn new(eye: V3, target: V3, up: V3, fov_deg: f64, width: u32, height: u32) -> Self {
        let forward = normalize(sub(target, eye));
        let right = normalize(cross(forward, up));
        let up = cross(right, forward);
        Self {
            eye,
            forward,
            right,
            up,
            tan_half: (fov_deg.to_radians() / 2.0).tan(),
            width,
            height,
        }
    }

    pub fn ray(&self, x: u32, y: u32) -> V3 {
        let aspect = self.width as f64 / self.height as f64;
        let sx = ((x as f64 + 0.5) / self.width as f64 * 2.0 - 1.0) * aspect * self.tan_half;
        let sy = (1.0 - (y as f64 + 0.5) / self.height as f64 * 2.0) * self.tan_half;
        normalize(add(self.forward, add(scale(self.right, sx), scale(self.up, sy))))
    }
}

/// Whether `p` lies in the axis-aligned ellipsoid `(center, semi_axes)`.
pub fn in_ellipsoid(p: V3, center: V3, semi_axes: V3) -> bool {
    (0..3)
        .map(|a| ((p[a] - center[a]) / semi_axes[a]).powi(2))
        .sum::<f64>()
        <= 1.0
}

/// Pixels whose center ray passes through the ellipsoid, found by marching
/// every ray at `step` up to `t_max` and testing membership. Row-major mask.
pub fn ellipsoid_mask(cam: &Pinhole, center: V3, semi_axes: V3, t_max: f64, step: f64) -> Vec<bool> {
    let mut mask = Vec::with_capacity((cam.width * cam.height) as usize);
    let reach = semi_axes.iter().fold(0.0f64, |m, &s| m.max(s));
    let to_center = norm(sub(center, cam.eye));
    for y in 0..cam.height {
        for x in 0..cam.width {
            let d = cam.ray(x, y);
            // Only march the stretch of the ray that can reach the ellipsoid.
            let t0 = (to_center - reach).max(0.0);
            let t1 = (to_center + reach).min(t_max);
            let mut hit = false;
            let mut t = t0;
            while t <= t1 && !hit {
                hit = in_ellipsoid(add(cam.eye, scale(d, t)), center, semi_axes);
                t += step;
            }
            mask.push(hit);
        }
    }
    mask
}
