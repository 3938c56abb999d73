//! Pixel geometry: regions, points, quadrant splits and the eight scan
//! directions. Origin is the top-left corner, y grows downward.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: u32,
    pub y: u32,
}

impl Point {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned rectangle covering `[x, x + w) × [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Region {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub const fn screen(w: u32, h: u32) -> Self {
        Self::new(0, 0, w, h)
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x < self.right() && p.y >= self.y && p.y < self.bottom()
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.x < other.right()
            && other.x < self.right()
            && self.y < other.bottom()
            && other.y < self.bottom()
    }

    /// Integer center, rounding toward the top-left.
    pub fn center(&self) -> Point {
        Point::new(self.x + self.w / 2, self.y + self.h / 2)
    }

    /// Nearest point of a non-empty region to `p`.
    pub fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.x, self.right() - 1),
            p.y.clamp(self.y, self.bottom() - 1),
        )
    }

    /// Squared distance from `p` to the nearest pixel of the region.
    pub fn distance_sq(&self, p: Point) -> u64 {
        let q = self.clamp(p);
        let dx = u64::from(p.x.abs_diff(q.x));
        let dy = u64::from(p.y.abs_diff(q.y));
        dx * dx + dy * dy
    }

    /// The four children in TL, TR, BL, BR order. Each axis is split with the
    /// floor half first, so an axis of length 1 leaves the first half empty;
    /// those children are `None`.
    pub fn quadrants(&self) -> [Option<Region>; 4] {
        let (w0, w1) = split(self.w);
        let (h0, h1) = split(self.h);
        let xm = self.x + w0;
        let ym = self.y + h0;
        let make = |x, y, w, h| {
            let r = Region::new(x, y, w, h);
            (!r.is_empty()).then_some(r)
        };
        [
            make(self.x, self.y, w0, h0),
            make(xm, self.y, w1, h0),
            make(self.x, ym, w0, h1),
            make(xm, ym, w1, h1),
        ]
    }

    pub fn quadrant(&self, idx: usize) -> Option<Region> {
        self.quadrants().get(idx).copied().flatten()
    }
}

fn split(len: u32) -> (u32, u32) {
    let first = len / 2;
    (first, len - first)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Up,
    UpLeft,
    Left,
    LeftDown,
    Down,
    DownRight,
    Right,
    RightUp,
}

impl Direction {
    /// Default cycle order for directional scanning.
    pub const SCAN_ORDER: [Direction; 8] = [
        Direction::Up,
        Direction::UpLeft,
        Direction::Left,
        Direction::LeftDown,
        Direction::Down,
        Direction::DownRight,
        Direction::Right,
        Direction::RightUp,
    ];

    pub fn offset(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, -1),
            Direction::UpLeft => (-1, -1),
            Direction::Left => (-1, 0),
            Direction::LeftDown => (-1, 1),
            Direction::Down => (0, 1),
            Direction::DownRight => (1, 1),
            Direction::Right => (1, 0),
            Direction::RightUp => (1, -1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::UpLeft => "up-left",
            Direction::Left => "left",
            Direction::LeftDown => "left-down",
            Direction::Down => "down",
            Direction::DownRight => "down-right",
            Direction::Right => "right",
            Direction::RightUp => "right-up",
        }
    }
}

/// Moves `p` by `step` pixels along `dir`, clamping each axis to `bounds`.
pub fn step_within(p: Point, dir: Direction, step: u32, bounds: &Region) -> Point {
    let (dx, dy) = dir.offset();
    let mv = |v: u32, d: i32, lo: u32, hi_excl: u32| -> u32 {
        let next = i64::from(v) + i64::from(d) * i64::from(step);
        next.clamp(i64::from(lo), i64::from(hi_excl) - 1) as u32
    };
    Point::new(
        mv(p.x, dx, bounds.x, bounds.right()),
        mv(p.y, dy, bounds.y, bounds.bottom()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_split() {
        let q = Region::screen(1024, 1024).quadrants();
        assert_eq!(q[0], Some(Region::new(0, 0, 512, 512)));
        assert_eq!(q[1], Some(Region::new(512, 0, 512, 512)));
        assert_eq!(q[2], Some(Region::new(0, 512, 512, 512)));
        assert_eq!(q[3], Some(Region::new(512, 512, 512, 512)));
    }

    #[test]
    fn odd_split_floor_first() {
        let q = Region::screen(1023, 1023).quadrants();
        assert_eq!(q[0], Some(Region::new(0, 0, 511, 511)));
        assert_eq!(q[3], Some(Region::new(511, 511, 512, 512)));
    }

    #[test]
    fn unit_axis_leaves_empty_children() {
        let q = Region::new(5, 5, 1, 3).quadrants();
        assert_eq!(q[0], None);
        assert_eq!(q[2], None);
        assert_eq!(q[1], Some(Region::new(5, 5, 1, 1)));
        assert_eq!(q[3], Some(Region::new(5, 6, 1, 2)));
    }

    #[test]
    fn step_clamps_per_axis() {
        let b = Region::new(0, 0, 64, 64);
        assert_eq!(
            step_within(Point::new(60, 10), Direction::RightUp, 8, &b),
            Point::new(63, 2)
        );
        assert_eq!(
            step_within(Point::new(63, 10), Direction::Right, 8, &b),
            Point::new(63, 10)
        );
        assert_eq!(
            step_within(Point::new(3, 3), Direction::UpLeft, 8, &b),
            Point::new(0, 0)
        );
    }

    #[test]
    fn scan_order_names() {
        let names: Vec<_> = Direction::SCAN_ORDER.iter().map(|d| d.name()).collect();
        assert_eq!(
            names,
            [
                "up",
                "up-left",
                "left",
                "left-down",
                "down",
                "down-right",
                "right",
                "right-up"
            ]
        );
    }
}
