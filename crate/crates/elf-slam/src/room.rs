//! 2D image-source room acoustics: mirror-image enumeration, impulse
//! responses with device directivity, chirp echo synthesis, and grid
//! dataset generation.

use crate::dataset::{Dataset, DatasetHeader, EchoRecord, DATASET_VERSION};
use crate::dsp::{self, ChirpConfig, EchoTrace, Recording, TRACE_LEN};
use crate::error::{Error, Result};
use crate::geom::{point_in_polygon, Segment, Vec2};
use crate::scalar::Scalar;
use crate::seeding::task_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

const GEOM_EPS: f64 = 1e-9;

/// A simple polygonal room. Vertices are normalized to counter-clockwise
/// order at construction; wall `i` runs from vertex `i` to vertex `i+1`.
#[derive(Debug, Clone)]
pub struct Room<T> {
    vertices: Vec<Vec2<T>>,
    reflection_coeff: Vec<T>,
    pub max_order: usize,
    pub speed_of_sound_mps: T,
}

impl<T: Scalar> Room<T> {
    pub fn new(
        vertices: Vec<Vec2<T>>,
        reflection_coeff: Vec<T>,
        max_order: usize,
    ) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry("a room needs at least 3 vertices".into()));
        }
        if reflection_coeff.len() != vertices.len() {
            return Err(Error::Geometry(format!(
                "need one reflection coefficient per wall: {} walls, {} coefficients",
                vertices.len(),
                reflection_coeff.len()
            )));
        }
        if reflection_coeff
            .iter()
            .any(|&r| r <= T::zero() || r >= T::one())
        {
            return Err(Error::Geometry(
                "reflection coefficients must lie in (0, 1)".into(),
            ));
        }
        if max_order == 0 {
            return Err(Error::Geometry("max_order must be >= 1".into()));
        }
        let mut room = Self {
            vertices,
            reflection_coeff,
            max_order,
            speed_of_sound_mps: T::of(343.0),
        };
        // Normalize to counter-clockwise so the interior is on the left of
        // every directed wall.
        if room.signed_area() < T::zero() {
            let n = room.vertices.len();
            room.vertices.reverse();
            let old = room.reflection_coeff.clone();
            for k in 0..n {
                room.reflection_coeff[k] = old[(2 * n - 2 - k) % n];
            }
        }
        if room.signed_area().abs() < T::of(GEOM_EPS) {
            return Err(Error::Geometry("degenerate polygon".into()));
        }
        room.check_simple()?;
        Ok(room)
    }

    /// Axis-aligned rectangular room with a uniform wall coefficient.
    pub fn rectangle(width_m: T, height_m: T, reflection: T, max_order: usize) -> Result<Self> {
        Self::new(
            vec![
                Vec2::zero(),
                Vec2::new(width_m, T::zero()),
                Vec2::new(width_m, height_m),
                Vec2::new(T::zero(), height_m),
            ],
            vec![reflection; 4],
            max_order,
        )
    }

    fn signed_area(&self) -> T {
        let mut acc = T::zero();
        let n = self.vertices.len();
        for i in 0..n {
            acc += self.vertices[i].cross(self.vertices[(i + 1) % n]);
        }
        acc * T::of(0.5)
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // Skip the shared-endpoint neighbors.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if self.wall(i).crosses_strictly(&self.wall(j), T::of(GEOM_EPS)) {
                    return Err(Error::Geometry(format!(
                        "polygon is not simple: walls {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_walls(&self) -> usize {
        self.vertices.len()
    }

    pub fn wall(&self, i: usize) -> Segment<T> {
        let n = self.vertices.len();
        Segment::new(self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn wall_reflection(&self, i: usize) -> T {
        self.reflection_coeff[i]
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        point_in_polygon(&self.vertices, p)
    }

    /// Distance from an interior point to the nearest wall.
    pub fn boundary_distance(&self, p: Vec2<T>) -> T {
        (0..self.num_walls())
            .map(|i| self.wall(i).dist_to_point(p))
            .fold(T::infinity(), |a, d| a.min(d))
    }

    pub fn bounding_box(&self) -> (Vec2<T>, Vec2<T>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// True when the open segment a-b does not cross any wall other than the
    /// excluded indices.
    fn leg_unoccluded(&self, a: Vec2<T>, b: Vec2<T>, exclude: &[usize]) -> bool {
        let leg = Segment::new(a, b);
        let eps = T::of(1e-7);
        for w in 0..self.num_walls() {
            if exclude.contains(&w) {
                continue;
            }
            if leg.crosses_strictly(&self.wall(w), eps) {
                return false;
            }
        }
        true
    }
}

/// Simulated phone: speaker ahead of the body center, microphone behind,
/// both on the heading axis, with a cardioid-mix directivity.
#[derive(Debug, Clone)]
pub struct Device<T> {
    pub position: Vec2<T>,
    pub heading_rad: T,
    pub speaker_offset_m: T,
    pub mic_offset_m: T,
    pub directivity_alpha: T,
    pub snr_db: T,
}

impl<T: Scalar> Device<T> {
    pub fn at(position: Vec2<T>, heading_rad: T) -> Self {
        Self {
            position,
            heading_rad,
            speaker_offset_m: T::of(0.075),
            mic_offset_m: T::of(0.075),
            directivity_alpha: T::of(0.5),
            snr_db: T::of(30.0),
        }
    }

    pub fn speaker_pos(&self) -> Vec2<T> {
        self.position
            .add(Vec2::unit(self.heading_rad).scale(self.speaker_offset_m))
    }

    pub fn mic_pos(&self) -> Vec2<T> {
        self.position
            .sub(Vec2::unit(self.heading_rad).scale(self.mic_offset_m))
    }

    /// Cardioid-mix gain for a ray leaving or arriving along `dir`.
    pub fn directivity_gain(&self, dir: Vec2<T>) -> T {
        let a = self.directivity_alpha;
        let h = Vec2::unit(self.heading_rad);
        match dir.normalized() {
            Some(d) => (T::one() - a) + a * h.dot(d),
            None => T::one(),
        }
    }
}

/// A mirror image of the source across a sequence of walls.
#[derive(Debug, Clone)]
pub struct ImageSource<T> {
    pub point: Vec2<T>,
    pub reflection_product: T,
    pub order: usize,
    pub wall_seq: Vec<usize>,
}

/// Enumerates mirror images of `src` across wall sequences up to `order`
/// reflections. A wall extends a sequence only when the parent image lies
/// strictly on its interior side, which prunes sequences that cannot form a
/// reflection path for any receiver; per-receiver path validity (occlusion)
/// is checked when rendering an impulse response.
pub fn compute_image_sources<T: Scalar>(
    room: &Room<T>,
    src: Vec2<T>,
    order: usize,
) -> Result<Vec<ImageSource<T>>> {
    if !room.contains(src) {
        return Err(Error::Geometry(format!(
            "source ({}, {}) lies outside the room",
            src.x, src.y
        )));
    }
    let eps = T::of(GEOM_EPS);
    let mut out: Vec<ImageSource<T>> = Vec::new();
    let mut frontier = vec![ImageSource {
        point: src,
        reflection_product: T::one(),
        order: 0,
        wall_seq: Vec::new(),
    }];
    for level in 1..=order {
        let mut next = Vec::new();
        for parent in &frontier {
            for w in 0..room.num_walls() {
                let wall = room.wall(w);
                // Interior is on the left of every CCW wall.
                if wall.side(parent.point) <= eps {
                    continue;
                }
                let mut seq = parent.wall_seq.clone();
                seq.push(w);
                next.push(ImageSource {
                    point: wall.mirror(parent.point),
                    reflection_product: parent.reflection_product * room.wall_reflection(w),
                    order: level,
                    wall_seq: seq,
                });
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

/// Reconstructs the reflection path `src -> walls -> rcv` for an image's
/// wall sequence by folding back through the mirrors. Returns the polyline
/// including both endpoints when the path is geometrically valid and
/// unoccluded.
pub fn reflection_path<T: Scalar>(
    room: &Room<T>,
    src: Vec2<T>,
    rcv: Vec2<T>,
    wall_seq: &[usize],
) -> Option<Vec<Vec2<T>>> {
    // Images of the source after each prefix of the sequence.
    let mut images = Vec::with_capacity(wall_seq.len() + 1);
    images.push(src);
    for &w in wall_seq {
        let prev = *images.last().unwrap();
        images.push(room.wall(w).mirror(prev));
    }
    // Walk backwards from the receiver, intersecting each wall.
    let mut points = vec![rcv];
    let mut target = rcv;
    for (k, &w) in wall_seq.iter().enumerate().rev() {
        let wall = room.wall(w);
        let ray = Segment::new(images[k + 1], target);
        let (t, u) = ray.intersect_params(&wall)?;
        let eps = T::of(1e-9);
        if !(t > eps && t < T::one() - eps && u >= -eps && u <= T::one() + eps) {
            return None;
        }
        let hit = wall.a.add(wall.b.sub(wall.a).scale(u));
        points.push(hit);
        target = hit;
    }
    points.push(src);
    points.reverse(); // src, X_1, ..., X_k, rcv
                      // Occlusion: every leg must miss all walls except the ones it touches.
    for (leg_idx, pair) in points.windows(2).enumerate() {
        let mut exclude = Vec::new();
        if leg_idx > 0 {
            exclude.push(wall_seq[leg_idx - 1]);
        }
        if leg_idx < wall_seq.len() {
            exclude.push(wall_seq[leg_idx]);
        }
        if !room.leg_unoccluded(pair[0], pair[1], &exclude) {
            return None;
        }
    }
    Some(points)
}

/// One arrival: fractional sample delay and signed amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap<T> {
    pub delay_samples: T,
    pub amplitude: T,
}

/// Discretized image-source sum for one device pose.
#[derive(Debug, Clone)]
pub struct ImpulseResponse<T> {
    pub taps: Vec<Tap<T>>,
}

/// Renders the impulse response between the device's speaker and microphone,
/// one tap per valid reflection path up to the room's `max_order`.
pub fn render_impulse_response<T: Scalar>(
    room: &Room<T>,
    dev: &Device<T>,
    sample_rate_hz: u32,
) -> Result<ImpulseResponse<T>> {
    let speaker = dev.speaker_pos();
    let mic = dev.mic_pos();
    for (name, p) in [("speaker", speaker), ("microphone", mic)] {
        if !room.contains(p) {
            return Err(Error::Geometry(format!(
                "device {name} at ({}, {}) lies outside the room",
                p.x, p.y
            )));
        }
    }
    let fs = T::of_usize(sample_rate_hz as usize);
    let c = room.speed_of_sound_mps;
    let near_clamp = T::of(0.1);
    let mut taps = Vec::new();
    let mut push_path = |path: &[Vec2<T>], product: T| {
        let dist: T = path
            .windows(2)
            .fold(T::zero(), |acc, w| acc + w[0].dist(w[1]));
        let departure = path[1].sub(path[0]);
        let arrival_from = path[path.len() - 2].sub(path[path.len() - 1]);
        let gain = dev.directivity_gain(departure) * dev.directivity_gain(arrival_from);
        taps.push(Tap {
            delay_samples: dist / c * fs,
            amplitude: product * gain / dist.max(near_clamp),
        });
    };
    // Direct path.
    if room.leg_unoccluded(speaker, mic, &[]) {
        push_path(&[speaker, mic], T::one());
    }
    // Reflections.
    for img in compute_image_sources(room, speaker, room.max_order)? {
        if let Some(path) = reflection_path(room, speaker, mic, &img.wall_seq) {
            push_path(&path, img.reflection_product);
        }
    }
    taps.sort_by(|a, b| a.delay_samples.partial_cmp(&b.delay_samples).unwrap());
    Ok(ImpulseResponse { taps })
}

/// Convolves the chirp with an impulse response using linear fractional
/// delays, producing `len` output samples.
fn convolve_taps<T: Scalar>(chirp: &[T], taps: &[Tap<T>], len: usize) -> Vec<T> {
    let mut y = vec![T::zero(); len];
    for tap in taps {
        let base = tap.delay_samples.floor();
        let frac = tap.delay_samples - base;
        let base = base.as_f64() as isize;
        let (w0, w1) = (tap.amplitude * (T::one() - frac), tap.amplitude * frac);
        for (m, &x) in chirp.iter().enumerate() {
            let i0 = base + m as isize;
            if i0 >= 0 && (i0 as usize) < len {
                y[i0 as usize] += w0 * x;
            }
            let i1 = i0 + 1;
            if i1 >= 0 && (i1 as usize) < len {
                y[i1 as usize] += w1 * x;
            }
        }
    }
    y
}

/// Synthesizes the echo trace a device records at its pose: image-source
/// convolution, additive white noise at the device SNR, clipping, then the
/// same direct-path removal as echo extraction. Deterministic given `seed`.
pub fn simulate_echo<T: Scalar>(
    room: &Room<T>,
    dev: &Device<T>,
    chirp: &Recording<T>,
    seed: u64,
) -> Result<EchoTrace<T>> {
    let ir = render_impulse_response(room, dev, chirp.sample_rate_hz)?;
    let fs = chirp.sample_rate_hz as f64;
    let duration_s = chirp.samples.len() as f64 / fs;
    let start = ((duration_s + 0.001) * fs).round() as usize;
    let len = start + TRACE_LEN;
    let mut y = convolve_taps(&chirp.samples, &ir.taps, len);
    // Noise power is set relative to the echo power in the kept window.
    let window = &y[start..];
    let power = window.iter().fold(T::zero(), |a, &v| a + v * v)
        / T::of_usize(TRACE_LEN);
    let snr_lin = T::of(10.0).powf(dev.snr_db / T::of(10.0));
    let noise_var = if power > T::zero() && snr_lin.is_finite() {
        power / snr_lin
    } else {
        T::zero()
    };
    if noise_var > T::zero() {
        let sigma = noise_var.sqrt().as_f64();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        for v in y.iter_mut() {
            *v += T::of(normal.sample(&mut rng));
        }
    }
    for v in y.iter_mut() {
        *v = v.max(-T::one()).min(T::one());
    }
    EchoTrace::new(y[start..].to_vec())
}

/// Device parameters shared by all poses of a synthesized dataset.
#[derive(Debug, Clone)]
pub struct DeviceTemplate<T> {
    pub speaker_offset_m: T,
    pub mic_offset_m: T,
    pub directivity_alpha: T,
    pub snr_db: T,
}

impl<T: Scalar> Default for DeviceTemplate<T> {
    fn default() -> Self {
        Self {
            speaker_offset_m: T::of(0.075),
            mic_offset_m: T::of(0.075),
            directivity_alpha: T::of(0.5),
            snr_db: T::of(30.0),
        }
    }
}

impl<T: Scalar> DeviceTemplate<T> {
    pub fn device_at(&self, position: Vec2<T>, heading_rad: T) -> Device<T> {
        Device {
            position,
            heading_rad,
            speaker_offset_m: self.speaker_offset_m,
            mic_offset_m: self.mic_offset_m,
            directivity_alpha: self.directivity_alpha,
            snr_db: self.snr_db,
        }
    }

    pub fn max_offset(&self) -> T {
        self.speaker_offset_m.max(self.mic_offset_m)
    }
}

/// Grid synthesis parameters.
#[derive(Debug, Clone)]
pub struct GridSynthConfig<T> {
    pub chirp: ChirpConfig<T>,
    pub device: DeviceTemplate<T>,
    /// Uniform per-trace heading perturbation, +/- this many radians.
    pub orientation_jitter_rad: T,
}

impl<T: Scalar> Default for GridSynthConfig<T> {
    fn default() -> Self {
        Self {
            chirp: ChirpConfig::default(),
            device: DeviceTemplate::default(),
            orientation_jitter_rad: T::of(5.0f64.to_radians()),
        }
    }
}

/// Interior lattice points at `spacing` over the room's bounding box. Points
/// too close to a wall for the device footprint are skipped.
pub fn grid_points<T: Scalar>(room: &Room<T>, spacing_m: T, margin_m: T) -> Vec<Vec2<T>> {
    let (lo, hi) = room.bounding_box();
    let nx = ((hi.x - lo.x) / spacing_m).as_f64().floor() as usize;
    let ny = ((hi.y - lo.y) / spacing_m).as_f64().floor() as usize;
    let mut pts = Vec::new();
    for iy in 0..=ny {
        for ix in 0..=nx {
            let p = Vec2::new(
                lo.x + spacing_m * T::of_usize(ix),
                lo.y + spacing_m * T::of_usize(iy),
            );
            if room.contains(p) && room.boundary_distance(p) > margin_m {
                pts.push(p);
            }
        }
    }
    pts
}

/// Synthesizes echo traces at every interior grid point for every listed
/// orientation, `traces_per_pose` traces each with jittered heading. Each
/// trace derives its own seed from `(seed, spot, orientation, trace)`, so
/// the result is independent of evaluation order.
pub fn synth_grid_dataset<T: Scalar>(
    room: &Room<T>,
    cfg: &GridSynthConfig<T>,
    spacing_m: T,
    orientations: &[T],
    traces_per_pose: usize,
    seed: u64,
) -> Result<Dataset> {
    if spacing_m <= T::zero() {
        return Err(Error::InvalidConfig("grid spacing must be positive".into()));
    }
    if orientations.is_empty() || traces_per_pose == 0 {
        return Err(Error::InvalidConfig(
            "need at least one orientation and one trace per pose".into(),
        ));
    }
    let margin = cfg.device.max_offset() + T::of(1e-6);
    let spots = grid_points(room, spacing_m, margin);
    if spots.is_empty() {
        return Err(Error::InvalidConfig(
            "grid is empty: no interior lattice point clears the device footprint".into(),
        ));
    }
    let chirp = dsp::generate_chirp(&cfg.chirp)?;
    let jitter = cfg.orientation_jitter_rad.as_f64();

    let mut jobs = Vec::new();
    for (spot, &pos) in spots.iter().enumerate() {
        for (oi, &orient) in orientations.iter().enumerate() {
            for trace_idx in 0..traces_per_pose {
                jobs.push((spot, pos, oi, orient, trace_idx));
            }
        }
    }
    let records: Result<Vec<EchoRecord>> = jobs
        .par_iter()
        .map(|&(spot, pos, oi, orient, trace_idx)| {
            let s = task_seed(seed, &[spot as u64, oi as u64, trace_idx as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let heading = orient + T::of(rng.gen_range(-jitter..=jitter));
            let dev = cfg.device.device_at(pos, heading);
            let trace = simulate_echo(room, &dev, &chirp, rng.gen())?;
            Ok(EchoRecord {
                step_idx: spot as u32,
                echo_idx: (oi * traces_per_pose + trace_idx) as u32,
                x: pos.x.as_f64(),
                y: pos.y.as_f64(),
                heading: heading.as_f64(),
                spot_id: Some(spot as u64),
                trace: trace.cast(),
            })
        })
        .collect();
    let mut ds = Dataset::new(DatasetHeader {
        version: DATASET_VERSION,
        kind: "grid".into(),
        config: format!(
            "spacing_m = {}\norientations = {}\ntraces_per_pose = {traces_per_pose}",
            spacing_m,
            orientations.len()
        ),
        seed,
    });
    ds.records = records?;
    ds.sort_records();
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect_room() -> Room<f64> {
        Room::rectangle(8.0, 6.0, 0.6, 3).unwrap()
    }

    fn l_room() -> Room<f64> {
        Room::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(8.0, 0.0),
                Vec2::new(8.0, 3.0),
                Vec2::new(4.0, 3.0),
                Vec2::new(4.0, 6.0),
                Vec2::new(0.0, 6.0),
            ],
            vec![0.6; 6],
            2,
        )
        .unwrap()
    }

    #[test]
    fn rectangle_order_one_has_four_images() {
        let room = rect_room();
        let src = Vec2::new(4.0, 3.0);
        let images: Vec<_> = compute_image_sources(&room, src, 1)
            .unwrap()
            .into_iter()
            .filter(|i| i.order == 1)
            .collect();
        assert_eq!(images.len(), 4);
        let mut dists: Vec<f64> = images.iter().map(|i| i.point.dist(src)).collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Twice the wall distances of the centered source.
        assert!((dists[0] - 6.0).abs() < 1e-12);
        assert!((dists[1] - 6.0).abs() < 1e-12);
        assert!((dists[2] - 8.0).abs() < 1e-12);
        assert!((dists[3] - 8.0).abs() < 1e-12);
        for i in &images {
            assert!((i.reflection_product - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn source_outside_room_is_rejected() {
        let room = rect_room();
        assert!(matches!(
            compute_image_sources(&room, Vec2::new(9.0, 3.0), 1),
            Err(Error::Geometry(_))
        ));
    }

    /// Independent mirror-enumeration oracle: walks every wall-index
    /// sequence, mirrors with an explicit normal-projection formula, and
    /// applies the interior-side rule from the wall normal.
    fn oracle_images(
        room: &Room<f64>,
        src: Vec2<f64>,
        order: usize,
    ) -> Vec<(Vec<usize>, Vec2<f64>, f64)> {
        fn mirror_explicit(a: Vec2<f64>, b: Vec2<f64>, p: Vec2<f64>) -> Vec2<f64> {
            let d = b.sub(a);
            let n = Vec2::new(-d.y, d.x); // interior normal of a CCW wall
            let n = n.scale(1.0 / n.norm());
            let offset = p.sub(a).dot(n);
            p.sub(n.scale(2.0 * offset))
        }
        fn recurse(
            room: &Room<f64>,
            seq: &mut Vec<usize>,
            point: Vec2<f64>,
            product: f64,
            depth: usize,
            out: &mut Vec<(Vec<usize>, Vec2<f64>, f64)>,
        ) {
            if depth == 0 {
                return;
            }
            for w in 0..room.num_walls() {
                let wall = room.wall(w);
                let n = {
                    let d = wall.b.sub(wall.a);
                    Vec2::new(-d.y, d.x)
                };
                // Parent must be on the side the interior normal points to.
                if point.sub(wall.a).dot(n) <= 1e-9 {
                    continue;
                }
                let img = mirror_explicit(wall.a, wall.b, point);
                seq.push(w);
                out.push((seq.clone(), img, product * room.wall_reflection(w)));
                recurse(room, seq, img, product * room.wall_reflection(w), depth - 1, out);
                seq.pop();
            }
        }
        let mut out = Vec::new();
        recurse(room, &mut Vec::new(), src, 1.0, order, &mut out);
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    #[test]
    fn l_shape_images_match_enumeration_oracle() {
        let room = l_room();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let src = loop {
                let p = Vec2::new(rng.gen_range(0.2..7.8), rng.gen_range(0.2..5.8));
                if room.contains(p) && room.boundary_distance(p) > 0.15 {
                    break p;
                }
            };
            let mut got: Vec<(Vec<usize>, Vec2<f64>, f64)> = compute_image_sources(&room, src, 2)
                .unwrap()
                .into_iter()
                .map(|i| (i.wall_seq, i.point, i.reflection_product))
                .collect();
            got.sort_by(|a, b| a.0.cmp(&b.0));
            let want = oracle_images(&room, src, 2);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.0, w.0);
                assert!(g.1.dist(w.1) < 1e-9);
                assert!((g.2 - w.2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn direct_path_delay_matches_distance() {
        let room = rect_room();
        // Straight-line speaker-to-mic distance 0.15 m; check against an
        // explicit pose where the geometry gives a 3.43 m first reflection.
        let dev = Device {
            snr_db: f64::INFINITY,
            ..Device::at(Vec2::new(4.0, 3.0), 0.0)
        };
        let ir = render_impulse_response(&room, &dev, 44_100).unwrap();
        // First tap is the direct path: 0.15 m.
        let direct = ir.taps[0];
        assert!((direct.delay_samples - 0.15 / 343.0 * 44_100.0).abs() < 1e-9);
        // A 3.43 m path takes exactly 441 samples at 44.1 ksps.
        assert!((3.43f64 / 343.0 * 44_100.0 - 441.0).abs() < 1e-12);
    }

    #[test]
    fn omnidirectional_device_ignores_heading() {
        let room = rect_room();
        let mk = |heading: f64| Device {
            directivity_alpha: 0.0,
            speaker_offset_m: 0.0,
            mic_offset_m: 0.0,
            ..Device::at(Vec2::new(3.0, 2.0), heading)
        };
        let a = render_impulse_response(&room, &mk(0.0), 44_100).unwrap();
        let b = render_impulse_response(&room, &mk(2.1), 44_100).unwrap();
        assert_eq!(a.taps.len(), b.taps.len());
        for (ta, tb) in a.taps.iter().zip(&b.taps) {
            assert!((ta.delay_samples - tb.delay_samples).abs() < 1e-9);
            assert!((ta.amplitude - tb.amplitude).abs() < 1e-12);
        }
    }

    #[test]
    fn heading_flip_changes_amplitudes_not_delays() {
        let room = rect_room();
        let mk = |heading: f64| Device {
            snr_db: f64::INFINITY,
            ..Device::at(Vec2::new(3.0, 2.0), heading)
        };
        let a = render_impulse_response(&room, &mk(0.3), 44_100).unwrap();
        let b = render_impulse_response(&room, &mk(0.3 + std::f64::consts::PI), 44_100).unwrap();
        assert_eq!(a.taps.len(), b.taps.len());
        // With speaker/mic offsets the delay sets match within the 0.15 m
        // separation bound; first-order amplitudes must differ.
        let bound = 0.15 / 343.0 * 44_100.0;
        let mut amp_changed = false;
        for (ta, tb) in a.taps.iter().zip(&b.taps) {
            assert!(
                (ta.delay_samples - tb.delay_samples).abs() <= bound + 1e-9,
                "delay moved by more than the offset bound"
            );
            if (ta.amplitude - tb.amplitude).abs() > 1e-6 {
                amp_changed = true;
            }
        }
        assert!(amp_changed, "flipping the heading should change amplitudes");
    }

    #[test]
    fn zero_offset_device_has_heading_invariant_delays() {
        let room = rect_room();
        let mk = |heading: f64| Device {
            speaker_offset_m: 0.0,
            mic_offset_m: 0.0,
            ..Device::at(Vec2::new(5.5, 2.2), heading)
        };
        let a = render_impulse_response(&room, &mk(0.0), 44_100).unwrap();
        let b = render_impulse_response(&room, &mk(1.234), 44_100).unwrap();
        for (ta, tb) in a.taps.iter().zip(&b.taps) {
            assert!((ta.delay_samples - tb.delay_samples).abs() < 1e-9);
        }
    }

    #[test]
    fn tap_delays_start_at_direct_path() {
        let room = l_room();
        let dev = Device::at(Vec2::new(2.0, 2.0), 0.7);
        let ir = render_impulse_response(&room, &dev, 44_100).unwrap();
        let direct = dev.speaker_pos().dist(dev.mic_pos()) / 343.0 * 44_100.0;
        assert!(ir
            .taps
            .iter()
            .all(|t| t.delay_samples >= direct - 1e-9));
    }

    #[test]
    fn repeated_wall_pair_amplitudes_decay() {
        // Between two parallel walls, each extra bounce pair multiplies the
        // reflection product by r^2 and lengthens the path, so amplitudes
        // strictly decrease along the ladder.
        let room = rect_room();
        let dev = Device {
            directivity_alpha: 0.0,
            speaker_offset_m: 0.0,
            mic_offset_m: 0.0,
            ..Device::at(Vec2::new(4.0, 3.0), 0.0)
        };
        let ir = render_impulse_response(&room, &dev, 44_100).unwrap();
        // Taps sorted by delay; the direct tap is first and strongest.
        assert!(ir.taps.len() > 5);
        let amps: Vec<f64> = ir.taps.iter().map(|t| t.amplitude.abs()).collect();
        assert!(amps[0] >= *amps.iter().skip(1).fold(&0.0, |a, b| if b > a { b } else { a }));
    }

    #[test]
    fn simulate_echo_is_deterministic() {
        let room = rect_room();
        let chirp = dsp::generate_chirp(&ChirpConfig::default()).unwrap();
        let dev = Device::at(Vec2::new(3.0, 2.5), 0.4);
        let a = simulate_echo(&room, &dev, &chirp, 77).unwrap();
        let b = simulate_echo(&room, &dev, &chirp, 77).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = simulate_echo(&room, &dev, &chirp, 78).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn noise_free_devices_at_same_pose_agree() {
        let room = rect_room();
        let chirp = dsp::generate_chirp(&ChirpConfig::default()).unwrap();
        let dev = Device {
            snr_db: f64::INFINITY,
            ..Device::at(Vec2::new(3.0, 2.5), 0.4)
        };
        let a = simulate_echo(&room, &dev, &chirp, 1).unwrap();
        let b = simulate_echo(&room, &dev, &chirp, 2).unwrap();
        assert_eq!(a.samples(), b.samples());
    }

    #[test]
    fn single_tap_reproduces_shifted_chirp() {
        let chirp = dsp::generate_chirp(&ChirpConfig::<f64>::default()).unwrap();
        let taps = [Tap {
            delay_samples: 600.0,
            amplitude: 0.5,
        }];
        let y = convolve_taps(&chirp.samples, &taps, 485 + TRACE_LEN);
        for (m, &x) in chirp.samples.iter().enumerate() {
            assert!((y[600 + m] - 0.5 * x).abs() < 1e-12);
        }
        let kept = &y[485..];
        for (k, &v) in kept.iter().enumerate() {
            let src_idx = 485 + k;
            let expect = if (600..600 + chirp.samples.len()).contains(&src_idx) {
                0.5 * chirp.samples[src_idx - 600]
            } else {
                0.0
            };
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn nearby_poses_are_more_similar_than_distant_ones() {
        // Spectrogram similarity contrast between a same-spot repeat and a
        // 2 m displaced device, averaged over seeds.
        let room = rect_room();
        let chirp = dsp::generate_chirp(&ChirpConfig::default()).unwrap();
        let cos = |a: &dsp::Spectrogram<f64>, b: &dsp::Spectrogram<f64>| {
            let dot: f64 = a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum();
            let na: f64 = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.data().iter().map(|x| x * x).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        let mut same_acc = 0.0;
        let mut far_acc = 0.0;
        let n = 50;
        for s in 0..n {
            let d1 = Device::at(Vec2::new(3.0, 2.5), 0.0);
            let d2 = Device::at(Vec2::new(5.0, 2.5), 0.0);
            let t1 = simulate_echo(&room, &d1, &chirp, task_seed(9, &[s, 0])).unwrap();
            let t1b = simulate_echo(&room, &d1, &chirp, task_seed(9, &[s, 1])).unwrap();
            let t2 = simulate_echo(&room, &d2, &chirp, task_seed(9, &[s, 2])).unwrap();
            let (s1, s1b, s2) = (
                dsp::compute_spectrogram(&t1),
                dsp::compute_spectrogram(&t1b),
                dsp::compute_spectrogram(&t2),
            );
            same_acc += cos(&s1, &s1b);
            far_acc += cos(&s1, &s2);
        }
        let (same, far) = (same_acc / n as f64, far_acc / n as f64);
        assert!(
            far < same,
            "2 m apart similarity {far} should be below same-spot repeat {same}"
        );
    }

    #[test]
    fn grid_counts_match_point_in_polygon_oracle() {
        let room = rect_room();
        let pts = grid_points(&room, 0.25, 0.075 + 1e-6);
        // Flood-fill oracle: strictly interior lattice points, tested by
        // ray casting all four diagonal nudges of each candidate.
        let eps = 1e-6;
        let mut oracle = 0;
        for iy in 0..=24 {
            for ix in 0..=32 {
                let p = Vec2::new(0.25 * ix as f64, 0.25 * iy as f64);
                let interior = [(eps, eps), (eps, -eps), (-eps, eps), (-eps, -eps)]
                    .iter()
                    .all(|&(dx, dy)| {
                        point_in_polygon(room.vertices(), Vec2::new(p.x + dx, p.y + dy))
                    });
                if interior {
                    oracle += 1;
                }
            }
        }
        assert_eq!(pts.len(), oracle);
        assert_eq!(oracle, 31 * 23);
    }

    #[test]
    fn tiny_grid_has_single_center_point() {
        let room = Room::rectangle(1.0, 1.0, 0.5, 1).unwrap();
        let cfg = GridSynthConfig::<f64>::default();
        let ds = synth_grid_dataset(&room, &cfg, 0.5, &[0.0], 1, 3).unwrap();
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].x, 0.5);
        assert_eq!(ds.records[0].y, 0.5);
    }

    #[test]
    fn dataset_size_is_spots_times_orientations_times_traces() {
        let room = Room::rectangle(2.0, 2.0, 0.5, 1).unwrap();
        let cfg = GridSynthConfig::<f64>::default();
        let orientations = [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI, -std::f64::consts::FRAC_PI_2];
        let ds = synth_grid_dataset(&room, &cfg, 0.5, &orientations, 3, 3).unwrap();
        let spots = grid_points(&room, 0.5, cfg.device.max_offset() + 1e-6).len();
        assert_eq!(ds.records.len(), spots * 4 * 3);
    }

    #[test]
    fn grid_dataset_is_seed_deterministic() {
        let room = Room::rectangle(1.5, 1.5, 0.5, 2).unwrap();
        let cfg = GridSynthConfig::<f64>::default();
        let a = synth_grid_dataset(&room, &cfg, 0.5, &[0.0], 2, 11).unwrap();
        let b = synth_grid_dataset(&room, &cfg, 0.5, &[0.0], 2, 11).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.trace.samples(), rb.trace.samples());
            assert_eq!(ra.heading, rb.heading);
        }
    }

    #[test]
    fn empty_grid_is_a_config_error() {
        let room = Room::rectangle(0.1, 0.1, 0.5, 1).unwrap();
        let cfg = GridSynthConfig::<f64>::default();
        assert!(matches!(
            synth_grid_dataset(&room, &cfg, 0.5, &[0.0], 1, 0),
            Err(Error::InvalidConfig(_))
        ));
    }
}
