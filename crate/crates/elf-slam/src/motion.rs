//! Footstep trajectory simulation, drifting odometry, and dead reckoning.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::linalg::Mat3;
use crate::scalar::Scalar;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::of(2.0) * T::PI();
    let mut r = a % two_pi;
    if r <= -T::PI() {
        r += two_pi;
    } else if r > T::PI() {
        r -= two_pi;
    }
    r
}

/// SE(2) pose: position in meters, heading in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Scalar> Pose2<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn position(&self) -> Vec2<T> {
        Vec2::new(self.x, self.y)
    }

    /// SE(2) composition: applies `delta` in the frame of `self`.
    pub fn compose(&self, delta: &Pose2<T>) -> Pose2<T> {
        let (s, c) = (self.theta.sin(), self.theta.cos());
        Pose2::new(
            self.x + c * delta.x - s * delta.y,
            self.y + s * delta.x + c * delta.y,
            self.theta + delta.theta,
        )
    }

    /// Relative pose of `other` expressed in the frame of `self`, the
    /// inverse of [`Pose2::compose`].
    pub fn between(&self, other: &Pose2<T>) -> Pose2<T> {
        let (s, c) = (self.theta.sin(), self.theta.cos());
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        Pose2::new(
            c * dx + s * dy,
            -s * dx + c * dy,
            other.theta - self.theta,
        )
    }

    pub fn inverse(&self) -> Pose2<T> {
        let (s, c) = (self.theta.sin(), self.theta.cos());
        Pose2::new(
            -(c * self.x + s * self.y),
            -(-s * self.x + c * self.y),
            -self.theta,
        )
    }
}

/// Relative motion between consecutive footsteps with its information
/// (inverse covariance) matrix.
#[derive(Debug, Clone)]
pub struct OdometryEdge<T> {
    pub from_idx: usize,
    pub to_idx: usize,
    pub delta: Pose2<T>,
    pub information: Mat3<T>,
}

/// Footstep walk parameters.
#[derive(Debug, Clone)]
pub struct WalkConfig<T> {
    pub waypoints: Vec<Vec2<T>>,
    pub stride_m: T,
    pub stride_sigma_m: T,
    pub heading_sigma_rad: T,
    /// Constant per-step heading bias; `None` draws one per walk from
    /// U(-0.005, 0.005) rad.
    pub heading_bias_rad: Option<T>,
    pub echoes_per_step: usize,
}

impl<T: Scalar> Default for WalkConfig<T> {
    fn default() -> Self {
        Self {
            waypoints: Vec::new(),
            stride_m: T::of(0.7),
            stride_sigma_m: T::of(0.02),
            heading_sigma_rad: T::of(0.0175),
            heading_bias_rad: None,
            echoes_per_step: 6,
        }
    }
}

/// Output of one simulated walk.
#[derive(Debug, Clone)]
pub struct Walk<T> {
    /// True footstep poses, including the start pose.
    pub ground_truth: Vec<Pose2<T>>,
    /// Noisy step-to-step odometry, one edge per stride.
    pub odometry: Vec<OdometryEdge<T>>,
    /// Chirp emission poses, `echoes_per_step` per stride, tagged with the
    /// step index of the stride they fall on.
    pub echo_poses: Vec<(usize, Pose2<T>)>,
}

/// Arc-length position and direction along a polyline.
fn polyline_sample<T: Scalar>(points: &[Vec2<T>], dist: T) -> (Vec2<T>, T) {
    let mut remaining = dist;
    for w in points.windows(2) {
        let seg = w[1].sub(w[0]);
        let len = seg.norm();
        if remaining <= len || len == T::zero() {
            let dir = seg.normalized().unwrap_or(Vec2::new(T::one(), T::zero()));
            let heading = dir.y.atan2(dir.x);
            return (w[0].add(dir.scale(remaining)), heading);
        }
        remaining -= len;
    }
    // Past the end: clamp to the final point and direction.
    let last = points[points.len() - 1];
    let seg = last.sub(points[points.len() - 2]);
    let dir = seg.normalized().unwrap_or(Vec2::new(T::one(), T::zero()));
    (last, dir.y.atan2(dir.x))
}

fn polyline_length<T: Scalar>(points: &[Vec2<T>]) -> T {
    points
        .windows(2)
        .fold(T::zero(), |acc, w| acc + w[0].dist(w[1]))
}

/// Default odometry information: diag(1/sigma_stride^2, 1/sigma_stride^2,
/// 1/sigma_heading^2), floored to stay finite for noiseless walks.
pub fn odometry_information<T: Scalar>(cfg: &WalkConfig<T>) -> Mat3<T> {
    let floor = T::of(1e-6);
    let ss = cfg.stride_sigma_m.max(floor);
    let sh = cfg.heading_sigma_rad.max(floor);
    Mat3::diag(
        T::one() / (ss * ss),
        T::one() / (ss * ss),
        T::one() / (sh * sh),
    )
}

/// Simulates footsteps along the waypoint polyline repeated `rounds` times,
/// with noisy odometry and interpolated chirp poses.
pub fn simulate_walk<T: Scalar>(
    cfg: &WalkConfig<T>,
    rounds: usize,
    seed: u64,
) -> Result<Walk<T>> {
    if cfg.waypoints.len() < 2 {
        return Err(Error::InvalidConfig(
            "walk needs at least two waypoints".into(),
        ));
    }
    if cfg.stride_m <= T::zero() {
        return Err(Error::InvalidConfig("stride must be positive".into()));
    }
    let single = polyline_length(&cfg.waypoints);
    if single < cfg.stride_m {
        return Err(Error::InvalidConfig(format!(
            "waypoint polyline ({} m) is shorter than one stride",
            single
        )));
    }
    if rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be >= 1".into()));
    }
    // Repeat the waypoint cycle; multi-round walks must form a closed loop.
    let mut path = cfg.waypoints.clone();
    if rounds > 1 {
        let closed = cfg.waypoints[0].dist(*cfg.waypoints.last().unwrap()) < T::of(1e-9);
        if !closed {
            return Err(Error::InvalidConfig(
                "multi-round walks require a closed waypoint loop".into(),
            ));
        }
        for _ in 1..rounds {
            path.extend(cfg.waypoints[1..].iter().copied());
        }
    }
    let total_len = polyline_length(&path);
    // Tolerate round-off when the perimeter is an exact stride multiple.
    let n_steps = ((total_len / cfg.stride_m).as_f64() + 1e-9).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    use rand::SeedableRng;
    let bias = match cfg.heading_bias_rad {
        Some(b) => b,
        None => T::of(rng.gen_range(-0.005..0.005)),
    };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut ground_truth = Vec::with_capacity(n_steps + 1);
    for k in 0..=n_steps {
        let d = cfg.stride_m * T::of_usize(k);
        let (p, heading) = polyline_sample(&path, d);
        ground_truth.push(Pose2::new(p.x, p.y, heading));
    }

    let info = odometry_information(cfg);
    let mut odometry = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let true_delta = ground_truth[k].between(&ground_truth[k + 1]);
        let nx = T::of(normal.sample(&mut rng)) * cfg.stride_sigma_m;
        let ny = T::of(normal.sample(&mut rng)) * cfg.stride_sigma_m;
        let nt = T::of(normal.sample(&mut rng)) * cfg.heading_sigma_rad + bias;
        odometry.push(OdometryEdge {
            from_idx: k,
            to_idx: k + 1,
            delta: Pose2::new(true_delta.x + nx, true_delta.y + ny, true_delta.theta + nt),
            information: info,
        });
    }

    let mut echo_poses = Vec::with_capacity(n_steps * cfg.echoes_per_step);
    for k in 0..n_steps {
        for e in 0..cfg.echoes_per_step {
            let frac = T::of_usize(e) / T::of_usize(cfg.echoes_per_step);
            let d = cfg.stride_m * (T::of_usize(k) + frac);
            let (p, heading) = polyline_sample(&path, d);
            echo_poses.push((k, Pose2::new(p.x, p.y, heading)));
        }
    }

    Ok(Walk {
        ground_truth,
        odometry,
        echo_poses,
    })
}

/// Integrates odometry edges from `start` by SE(2) composition.
pub fn dead_reckon<T: Scalar>(edges: &[OdometryEdge<T>], start: Pose2<T>) -> Result<Vec<Pose2<T>>> {
    let mut poses = Vec::with_capacity(edges.len() + 1);
    poses.push(start);
    for (k, e) in edges.iter().enumerate() {
        if e.to_idx != e.from_idx + 1 || (k > 0 && e.from_idx != edges[k - 1].to_idx) {
            return Err(Error::Sequence(format!(
                "odometry edges must be index-consecutive, got {}->{} at position {k}",
                e.from_idx, e.to_idx
            )));
        }
        let prev = *poses.last().unwrap();
        poses.push(prev.compose(&e.delta));
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noiseless(waypoints: Vec<Vec2<f64>>, stride: f64) -> WalkConfig<f64> {
        WalkConfig {
            waypoints,
            stride_m: stride,
            stride_sigma_m: 0.0,
            heading_sigma_rad: 0.0,
            heading_bias_rad: Some(0.0),
            echoes_per_step: 6,
        }
    }

    #[test]
    fn straight_walk_places_steps_on_the_line() {
        let cfg = noiseless(vec![Vec2::new(0.0, 0.0), Vec2::new(7.0, 0.0)], 0.7);
        let walk = simulate_walk(&cfg, 1, 0).unwrap();
        assert_eq!(walk.odometry.len(), 10);
        assert_eq!(walk.ground_truth.len(), 11);
        for (k, pose) in walk.ground_truth.iter().enumerate() {
            assert!((pose.x - 0.7 * k as f64).abs() < 1e-9);
            assert!(pose.y.abs() < 1e-12);
        }
    }

    #[test]
    fn rectangle_loop_yields_58_steps_per_round() {
        // Perimeter 40.6 m at stride 0.7 -> 58 steps per round.
        let w = 12.0;
        let h = 8.3;
        let rect = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(w, 0.0),
            Vec2::new(w, h),
            Vec2::new(0.0, h),
            Vec2::new(0.0, 0.0),
        ];
        let cfg = noiseless(rect, 0.7);
        let one = simulate_walk(&cfg, 1, 0).unwrap();
        assert_eq!(one.odometry.len(), 58);
        let three = simulate_walk(&cfg, 3, 0).unwrap();
        assert_eq!(three.odometry.len(), 174);
    }

    #[test]
    fn zero_noise_dead_reckoning_reproduces_ground_truth() {
        let rect = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(4.2, 0.0),
            Vec2::new(4.2, 2.8),
            Vec2::new(0.0, 2.8),
            Vec2::new(0.0, 0.0),
        ];
        let cfg = noiseless(rect, 0.7);
        let walk = simulate_walk(&cfg, 2, 123).unwrap();
        let dr = dead_reckon(&walk.odometry, walk.ground_truth[0]).unwrap();
        for (a, b) in dr.iter().zip(&walk.ground_truth) {
            assert!((a.x - b.x).abs() < 1e-9);
            assert!((a.y - b.y).abs() < 1e-9);
            assert!(wrap_angle(a.theta - b.theta).abs() < 1e-9);
        }
    }

    #[test]
    fn dead_reckon_empty_and_square() {
        let start = Pose2::new(1.0, 2.0, 0.3);
        assert_eq!(dead_reckon::<f64>(&[], start).unwrap(), vec![start]);

        let edge = |k: usize| OdometryEdge {
            from_idx: k,
            to_idx: k + 1,
            delta: Pose2::new(1.0, 0.0, std::f64::consts::FRAC_PI_2),
            information: Mat3::identity(),
        };
        let edges: Vec<_> = (0..4).map(edge).collect();
        let poses = dead_reckon(&edges, Pose2::identity()).unwrap();
        assert_eq!(poses.len(), 5);
        let last = poses[4];
        assert!(last.x.abs() < 1e-12);
        assert!(last.y.abs() < 1e-12);
        assert!(wrap_angle(last.theta).abs() < 1e-12);
    }

    #[test]
    fn dead_reckon_rejects_index_gaps() {
        let mk = |from: usize, to: usize| OdometryEdge {
            from_idx: from,
            to_idx: to,
            delta: Pose2::identity(),
            information: Mat3::identity(),
        };
        assert!(dead_reckon(&[mk(0, 1), mk(2, 3)], Pose2::<f64>::identity()).is_err());
        assert!(dead_reckon(&[mk(0, 2)], Pose2::<f64>::identity()).is_err());
    }

    #[test]
    fn noisy_loop_drifts_by_more_than_a_meter() {
        // Median endpoint error over 50 seeds of a 3-round loop with the
        // default noise model; demonstrates the drift that loop closures
        // must repair.
        let rect = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(6.4, 0.0),
            Vec2::new(6.4, 4.4),
            Vec2::new(0.0, 4.4),
            Vec2::new(0.0, 0.0),
        ];
        let cfg = WalkConfig {
            waypoints: rect,
            stride_m: 21.6 / 58.0,
            ..WalkConfig::default()
        };
        let mut endpoint_errors: Vec<f64> = (0..50)
            .map(|seed| {
                let walk = simulate_walk(&cfg, 3, seed).unwrap();
                let dr = dead_reckon(&walk.odometry, walk.ground_truth[0]).unwrap();
                let est = dr.last().unwrap();
                let truth = walk.ground_truth.last().unwrap();
                est.position().dist(truth.position())
            })
            .collect();
        endpoint_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = endpoint_errors[25];
        assert!(median > 1.0, "median endpoint drift {median} m");
    }

    #[test]
    fn echo_poses_interpolate_along_each_stride() {
        let cfg = noiseless(vec![Vec2::new(0.0, 0.0), Vec2::new(7.0, 0.0)], 0.7);
        let walk = simulate_walk(&cfg, 1, 0).unwrap();
        assert_eq!(walk.echo_poses.len(), 60);
        let (step, p) = walk.echo_poses[3];
        assert_eq!(step, 0);
        assert!((p.x - 0.7 * 3.0 / 6.0).abs() < 1e-9);
        assert!((p.theta - 0.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn compose_matches_homogeneous_matrix_oracle(
            x in -5.0f64..5.0, y in -5.0f64..5.0, t in -3.0f64..3.0,
            ux in -2.0f64..2.0, uy in -2.0f64..2.0, ut in -3.0f64..3.0,
        ) {
            let a = Pose2::new(x, y, t);
            let u = Pose2::new(ux, uy, ut);
            let c = a.compose(&u);
            // 3x3 homogeneous product oracle.
            let m = |p: &Pose2<f64>| {
                [
                    [p.theta.cos(), -p.theta.sin(), p.x],
                    [p.theta.sin(), p.theta.cos(), p.y],
                    [0.0, 0.0, 1.0],
                ]
            };
            let (ma, mu) = (m(&a), m(&u));
            let mut prod = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        prod[i][j] += ma[i][k] * mu[k][j];
                    }
                }
            }
            prop_assert!((c.x - prod[0][2]).abs() < 1e-9);
            prop_assert!((c.y - prod[1][2]).abs() < 1e-9);
            prop_assert!((c.theta.cos() - prod[0][0]).abs() < 1e-9);
            prop_assert!((c.theta.sin() - prod[1][0]).abs() < 1e-9);
        }

        #[test]
        fn compose_is_associative(
            vals in proptest::collection::vec(-3.0f64..3.0, 9)
        ) {
            let p = Pose2::new(vals[0], vals[1], vals[2]);
            let q = Pose2::new(vals[3], vals[4], vals[5]);
            let r = Pose2::new(vals[6], vals[7], vals[8]);
            let a = p.compose(&q).compose(&r);
            let b = p.compose(&q.compose(&r));
            prop_assert!((a.x - b.x).abs() < 1e-9);
            prop_assert!((a.y - b.y).abs() < 1e-9);
            prop_assert!(wrap_angle(a.theta - b.theta).abs() < 1e-9);
        }

        #[test]
        fn between_inverts_compose(
            vals in proptest::collection::vec(-3.0f64..3.0, 6)
        ) {
            let a = Pose2::new(vals[0], vals[1], vals[2]);
            let d = Pose2::new(vals[3], vals[4], vals[5]);
            let b = a.compose(&d);
            let rec = a.between(&b);
            prop_assert!((rec.x - d.x).abs() < 1e-9);
            prop_assert!((rec.y - d.y).abs() < 1e-9);
            prop_assert!(wrap_angle(rec.theta - d.theta).abs() < 1e-9);
        }

        #[test]
        fn wrap_angle_stays_in_half_open_interval(a in -100.0f64..100.0) {
            let w = wrap_angle(a);
            prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
            // Same direction.
            prop_assert!((w.sin() - a.sin()).abs() < 1e-9);
            prop_assert!((w.cos() - a.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn wrap_angle_boundary_is_positive_pi() {
        assert_eq!(wrap_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(wrap_angle(-std::f64::consts::PI), std::f64::consts::PI);
    }

    #[test]
    fn dead_reckon_left_translation_identity() {
        // dead_reckon(edges, start) == start o dead_reckon(edges, identity)
        let mk = |k: usize, d: Pose2<f64>| OdometryEdge {
            from_idx: k,
            to_idx: k + 1,
            delta: d,
            information: Mat3::identity(),
        };
        let edges = vec![
            mk(0, Pose2::new(1.0, 0.2, 0.3)),
            mk(1, Pose2::new(0.5, -0.1, -0.2)),
            mk(2, Pose2::new(0.9, 0.0, 1.0)),
        ];
        let start = Pose2::new(2.0, -1.0, 0.7);
        let a = dead_reckon(&edges, start).unwrap();
        let b = dead_reckon(&edges, Pose2::identity()).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            let composed = start.compose(pb);
            assert!((pa.x - composed.x).abs() < 1e-12);
            assert!((pa.y - composed.y).abs() < 1e-12);
            assert!(wrap_angle(pa.theta - composed.theta).abs() < 1e-12);
        }
    }
}
