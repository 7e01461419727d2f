//! Small 2D geometry toolkit shared by the room simulator, the motion
//! model, and the localizers.

use crate::scalar::Scalar;

/// 2D point / vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
        }
    }

    /// Unit vector at the given angle from the +x axis.
    pub fn unit(angle_rad: T) -> Self {
        Self::new(angle_rad.cos(), angle_rad.sin())
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Self) -> T {
        self.sub(o).norm()
    }

    /// Rotates by `angle_rad` about the origin.
    pub fn rotate(self, angle_rad: T) -> Self {
        let (s, c) = (angle_rad.sin(), angle_rad.cos());
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() {
            Some(self.scale(T::one() / n))
        } else {
            None
        }
    }
}

/// Directed line segment.
#[derive(Debug, Clone, Copy)]
pub struct Segment<T> {
    pub a: Vec2<T>,
    pub b: Vec2<T>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(a: Vec2<T>, b: Vec2<T>) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> T {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> Vec2<T> {
        self.a.add(self.b).scale(T::of(0.5))
    }

    /// Mirrors a point across the infinite line through this segment.
    pub fn mirror(&self, p: Vec2<T>) -> Vec2<T> {
        let d = self.b.sub(self.a);
        let len2 = d.dot(d);
        if len2 == T::zero() {
            return p;
        }
        let t = p.sub(self.a).dot(d) / len2;
        let foot = self.a.add(d.scale(t));
        foot.add(foot.sub(p))
    }

    /// Signed perpendicular offset of `p`; positive on the left of a->b.
    pub fn side(&self, p: Vec2<T>) -> T {
        self.b.sub(self.a).cross(p.sub(self.a))
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn dist_to_point(&self, p: Vec2<T>) -> T {
        let d = self.b.sub(self.a);
        let len2 = d.dot(d);
        if len2 == T::zero() {
            return self.a.dist(p);
        }
        let t = (p.sub(self.a).dot(d) / len2)
            .max(T::zero())
            .min(T::one());
        self.a.add(d.scale(t)).dist(p)
    }

    /// Intersection of two segments as parameters `(t, u)` along self and
    /// `other`, when the supporting lines are not parallel.
    pub fn intersect_params(&self, other: &Segment<T>) -> Option<(T, T)> {
        let r = self.b.sub(self.a);
        let s = other.b.sub(other.a);
        let denom = r.cross(s);
        if denom == T::zero() {
            return None;
        }
        let qp = other.a.sub(self.a);
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        Some((t, u))
    }

    /// True when the open interior of `self` crosses the open interior of
    /// `other`; shared endpoints do not count.
    pub fn crosses_strictly(&self, other: &Segment<T>, eps: T) -> bool {
        match self.intersect_params(other) {
            Some((t, u)) => t > eps && t < T::one() - eps && u > eps && u < T::one() - eps,
            None => false,
        }
    }
}

/// Even-odd point-in-polygon test over a closed vertex loop.
pub fn point_in_polygon<T: Scalar>(vertices: &[Vec2<T>], p: Vec2<T>) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi.y > p.y) != (vj.y > p.y) {
            let x_cross = vi.x + (p.y - vi.y) / (vj.y - vi.y) * (vj.x - vi.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
