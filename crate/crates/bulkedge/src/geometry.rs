//! Finite regions of Z², the 1-metric, dual edges and the region masks used
//! by the magnetization decomposition.
//!
//! Dual-lattice points have half-integer coordinates. They are stored doubled,
//! so every predicate in this module is exact integer arithmetic.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice site. `x1` is the column, `x2` the row.
///
/// The ordering is row-major (by `x2`, then `x1`). Mode indices and
/// therefore fermionic signs are built on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x1: i64,
    pub x2: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x1: 0, x2: 0 };

    pub const fn new(x1: i64, x2: i64) -> Self {
        Site { x1, x2 }
    }

    pub fn distance(self, other: Site) -> u64 {
        distance(self, other)
    }

    pub fn shifted(self, by: Site) -> Site {
        Site::new(self.x1 + by.x1, self.x2 + by.x2)
    }

    pub fn minus(self, by: Site) -> Site {
        Site::new(self.x1 - by.x1, self.x2 - by.x2)
    }

    pub fn coord(self, k: Direction) -> i64 {
        match k {
            Direction::X1 => self.x1,
            Direction::X2 => self.x2,
        }
    }
}

impl Ord for Site {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.x2, self.x1).cmp(&(other.x2, other.x1))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// 1-metric distance.
pub fn distance(a: Site, b: Site) -> u64 {
    a.x1.abs_diff(b.x1) + a.x2.abs_diff(b.x2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    /// Λ_L = [−L, L] × [0, 2L]
    HalfPlaneBox { l: i64 },
    /// B_L = [−L, L]²
    CenteredBox { l: i64 },
    Ball { center: Site, radius: u64 },
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSet {
    kind: RegionKind,
    members: BTreeSet<Site>,
}

impl SiteSet {
    pub fn empty() -> Self {
        SiteSet {
            kind: RegionKind::Custom,
            members: BTreeSet::new(),
        }
    }

    pub fn half_plane_box(l: i64) -> Self {
        let members = (0..=2 * l)
            .flat_map(|x2| (-l..=l).map(move |x1| Site::new(x1, x2)))
            .collect();
        SiteSet {
            kind: RegionKind::HalfPlaneBox { l },
            members,
        }
    }

    pub fn centered_box(l: i64) -> Self {
        let members = (-l..=l)
            .flat_map(|x2| (-l..=l).map(move |x1| Site::new(x1, x2)))
            .collect();
        SiteSet {
            kind: RegionKind::CenteredBox { l },
            members,
        }
    }

    /// All sites of Z² within 1-distance `radius` of `center`.
    pub fn ball(center: Site, radius: u64) -> Self {
        let r = radius as i64;
        let mut members = BTreeSet::new();
        for dx2 in -r..=r {
            let w = r - dx2.abs();
            for dx1 in -w..=w {
                members.insert(Site::new(center.x1 + dx1, center.x2 + dx2));
            }
        }
        SiteSet {
            kind: RegionKind::Ball { center, radius },
            members,
        }
    }

    /// A rectangle [a1, b1] × [a2, b2] (inclusive), tagged as custom.
    pub fn rectangle(a1: i64, b1: i64, a2: i64, b2: i64) -> Self {
        (a2..=b2)
            .flat_map(|x2| (a1..=b1).map(move |x1| Site::new(x1, x2)))
            .collect()
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    /// Box half-width for Λ_L and B_L.
    pub fn box_half_width(&self) -> Option<i64> {
        match self.kind {
            RegionKind::HalfPlaneBox { l } | RegionKind::CenteredBox { l } => Some(l),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: Site) -> bool {
        self.members.contains(&x)
    }

    /// Members in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        self.members.iter().copied()
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn intersection(&self, other: &SiteSet) -> SiteSet {
        if self.is_subset(other) {
            return self.clone();
        }
        self.members.intersection(&other.members).copied().collect()
    }

    pub fn difference(&self, other: &SiteSet) -> SiteSet {
        self.members.difference(&other.members).copied().collect()
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        self.members.union(&other.members).copied().collect()
    }

    pub fn translated(&self, by: Site) -> SiteSet {
        let kind = match self.kind {
            RegionKind::Ball { center, radius } => RegionKind::Ball {
                center: center.shifted(by),
                radius,
            },
            _ if by == Site::ORIGIN => self.kind,
            _ => RegionKind::Custom,
        };
        SiteSet {
            kind,
            members: self.members.iter().map(|x| x.shifted(by)).collect(),
        }
    }

    /// dist(x, Z² ∖ self). Zero when `x` is outside the set.
    pub fn distance_to_complement(&self, x: Site) -> u64 {
        if !self.contains(x) {
            return 0;
        }
        match self.kind {
            RegionKind::HalfPlaneBox { l } => {
                [x.x1 + l + 1, l - x.x1 + 1, x.x2 + 1, 2 * l - x.x2 + 1]
                    .into_iter()
                    .min()
                    .unwrap() as u64
            }
            RegionKind::CenteredBox { l } => {
                [x.x1 + l + 1, l - x.x1 + 1, x.x2 + l + 1, l - x.x2 + 1]
                    .into_iter()
                    .min()
                    .unwrap() as u64
            }
            _ => {
                // Expanding rings; a finite set always has an outside site
                // within len() + 1 steps.
                let mut r: i64 = 1;
                loop {
                    for dx1 in -r..=r {
                        let dx2 = r - dx1.abs();
                        for s in [dx2, -dx2] {
                            if !self.contains(Site::new(x.x1 + dx1, x.x2 + s)) {
                                return r as u64;
                            }
                        }
                    }
                    r += 1;
                }
            }
        }
    }

    /// True when any two members are joined by a path of nearest-neighbour
    /// steps inside the set.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.members.iter().next().copied() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for n in neighbours(x) {
                if self.contains(n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen.len() == self.len()
    }
}

impl FromIterator<Site> for SiteSet {
    fn from_iter<I: IntoIterator<Item = Site>>(iter: I) -> Self {
        SiteSet {
            kind: RegionKind::Custom,
            members: iter.into_iter().collect(),
        }
    }
}

pub fn neighbours(x: Site) -> [Site; 4] {
    [
        Site::new(x.x1 + 1, x.x2),
        Site::new(x.x1 - 1, x.x2),
        Site::new(x.x1, x.x2 + 1),
        Site::new(x.x1, x.x2 - 1),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetDistance {
    Finite(u64),
    /// The second set is empty.
    Infinite,
}

impl SetDistance {
    pub fn finite(self) -> Option<u64> {
        match self {
            SetDistance::Finite(d) => Some(d),
            SetDistance::Infinite => None,
        }
    }
}

pub fn set_distance(x: &SiteSet, y: &SiteSet) -> Result<SetDistance> {
    if x.is_empty() {
        return Err(Error::EmptySet("X"));
    }
    let best = x
        .iter()
        .flat_map(|a| y.iter().map(move |b| distance(a, b)))
        .min();
    Ok(best.map_or(SetDistance::Infinite, SetDistance::Finite))
}

/// dist(X, Z² ∖ region).
pub fn distance_to_outside(x: &SiteSet, region: &SiteSet) -> Result<u64> {
    if x.is_empty() {
        return Err(Error::EmptySet("X"));
    }
    Ok(x.iter()
        .map(|a| region.distance_to_complement(a))
        .min()
        .unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Direction {
    X1 = 1,
    X2 = 2,
}

impl Direction {
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn unit(self) -> Site {
        match self {
            Direction::X1 => Site::new(1, 0),
            Direction::X2 => Site::new(0, 1),
        }
    }
}

impl From<Direction> for u8 {
    fn from(k: Direction) -> u8 {
        k as u8
    }
}

impl TryFrom<u8> for Direction {
    type Error = String;
    fn try_from(k: u8) -> std::result::Result<Self, String> {
        match k {
            1 => Ok(Direction::X1),
            2 => Ok(Direction::X2),
            _ => Err(format!("direction must be 1 or 2, got {k}")),
        }
    }
}

/// The dual edge e_{k,z}: the unit segment crossing the bond from z to z + ê_k at
/// its midpoint. e_{1,z} runs from (z1+½, z2−½) to (z1+½, z2+½).
///
/// Ordered by (k, z1, z2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualEdge {
    pub k: Direction,
    pub base: Site,
}

impl Ord for DualEdge {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.k, self.base.x1, self.base.x2).cmp(&(other.k, other.base.x1, other.base.x2))
    }
}

impl PartialOrd for DualEdge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DualEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e[{},{}]", self.k.index(), self.base)
    }
}

/// How a lattice segment meets a closed dual edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contact {
    /// Crosses the open segment.
    Open,
    /// Touches one endpoint only.
    Endpoint,
}

impl DualEdge {
    pub const fn new(k: Direction, base: Site) -> Self {
        DualEdge { k, base }
    }

    pub fn vertical(m: i64, n: i64) -> Self {
        DualEdge::new(Direction::X1, Site::new(m, n))
    }

    pub fn horizontal(m: i64, n: i64) -> Self {
        DualEdge::new(Direction::X2, Site::new(m, n))
    }

    /// The site on the far side of the bond, z + ê_k.
    pub fn far(self) -> Site {
        self.base.shifted(self.k.unit())
    }

    /// Doubled coordinates of the two endpoints.
    pub fn doubled_endpoints(self) -> [(i64, i64); 2] {
        let (z1, z2) = (self.base.x1, self.base.x2);
        match self.k {
            Direction::X1 => [(2 * z1 + 1, 2 * z2 - 1), (2 * z1 + 1, 2 * z2 + 1)],
            Direction::X2 => [(2 * z1 - 1, 2 * z2 + 1), (2 * z1 + 1, 2 * z2 + 1)],
        }
    }

    /// Exact contact test between the segment from x to y and the closed edge.
    pub fn contact(self, x: Site, y: Site) -> Option<Contact> {
        let (along, across) = match self.k {
            Direction::X1 => ((x.x1, y.x1, self.base.x1), (x.x2, y.x2, self.base.x2)),
            Direction::X2 => ((x.x2, y.x2, self.base.x2), (x.x1, y.x1, self.base.x1)),
        };
        let (xa, ya, za) = along;
        let (xc, yc, zc) = across;
        let line = 2 * za + 1;
        // The line sits at a half-integer; a segment with xa == ya never
        // touches it, and it can never pass through a lattice endpoint.
        if !((2 * xa < line && line < 2 * ya) || (2 * ya < line && line < 2 * xa)) {
            return None;
        }
        let (num, den) = crossing_fraction(xa, ya, xc, yc, line);
        let lo = (2 * zc - 1) as i128 * den;
        let hi = (2 * zc + 1) as i128 * den;
        if num > lo && num < hi {
            Some(Contact::Open)
        } else if num == lo || num == hi {
            Some(Contact::Endpoint)
        } else {
            None
        }
    }
}

/// Doubled transverse coordinate where the segment meets the doubled line
/// `line`, as num/den with den > 0.
fn crossing_fraction(xa: i64, ya: i64, xc: i64, yc: i64, line: i64) -> (i128, i128) {
    let den = (ya - xa) as i128;
    let num = 2 * xc as i128 * den + (line - 2 * xa) as i128 * (yc - xc) as i128;
    if den < 0 {
        (-num, -den)
    } else {
        (num, den)
    }
}

/// Every dual edge of direction `k` met by the segment from x to y, with its
/// contact type. Sorted by edge.
pub fn crossings(k: Direction, x: Site, y: Site) -> Vec<(DualEdge, Contact)> {
    let (xa, ya, xc, yc) = match k {
        Direction::X1 => (x.x1, y.x1, x.x2, y.x2),
        Direction::X2 => (x.x2, y.x2, x.x1, y.x1),
    };
    let make = |a: i64, c: i64| match k {
        Direction::X1 => DualEdge::new(k, Site::new(a, c)),
        Direction::X2 => DualEdge::new(k, Site::new(c, a)),
    };
    let mut out = Vec::new();
    for za in xa.min(ya)..xa.max(ya) {
        let (num, den) = crossing_fraction(xa, ya, xc, yc, 2 * za + 1);
        if num % den == 0 && (num / den).rem_euclid(2) == 1 {
            let t = (num / den) as i64;
            out.push((make(za, (t - 1) / 2), Contact::Endpoint));
            out.push((make(za, (t + 1) / 2), Contact::Endpoint));
        } else {
            let zc = (num + den).div_euclid(2 * den) as i64;
            out.push((make(za, zc), Contact::Open));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// A dual edge on the boundary of Z relative to an ambient region, with the
/// conservation sign: −1 when the base site lies in Z, +1 otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub edge: DualEdge,
    pub sign: i8,
}

/// ∂_Λ Z: the dual edges between Z and ambient ∖ Z.
pub fn dual_edge_boundary(z: &SiteSet, ambient: &SiteSet) -> Result<Vec<BoundaryEdge>> {
    if !z.is_subset(ambient) {
        return Err(Error::NotSubset("Z"));
    }
    let mut out = Vec::new();
    for base in ambient.iter() {
        for k in [Direction::X1, Direction::X2] {
            let edge = DualEdge::new(k, base);
            let far = edge.far();
            if !ambient.contains(far) {
                continue;
            }
            match (z.contains(base), z.contains(far)) {
                (true, false) => out.push(BoundaryEdge { edge, sign: -1 }),
                (false, true) => out.push(BoundaryEdge { edge, sign: 1 }),
                _ => {}
            }
        }
    }
    out.sort_by(|a, b| a.edge.cmp(&b.edge));
    Ok(out)
}

/// All dual edges whose bond has both endpoints in the region.
pub fn interior_dual_edges(region: &SiteSet) -> Vec<DualEdge> {
    let mut out: Vec<DualEdge> = region
        .iter()
        .flat_map(|z| [DualEdge::new(Direction::X1, z), DualEdge::new(Direction::X2, z)])
        .filter(|e| region.contains(e.far()))
        .collect();
    out.sort();
    out
}

/// Vertical dual edges e_{1,(m,n)} with −L ≤ m ≤ L−1, 0 ≤ n ≤ 2L.
pub fn vertical_dual_edges(l: i64) -> Vec<DualEdge> {
    (-l..l)
        .flat_map(|m| (0..=2 * l).map(move |n| DualEdge::vertical(m, n)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    Bulk,
    Left,
    Right,
    Bottom,
    Top,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 5] = [
        RegionLabel::Bulk,
        RegionLabel::Left,
        RegionLabel::Right,
        RegionLabel::Bottom,
        RegionLabel::Top,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMask {
    pub label: RegionLabel,
    pub edges: BTreeSet<DualEdge>,
}

/// Which of the five regions the vertical dual edge e_{1,(m,n)} falls in.
pub fn region_of(l: i64, d: i64, m: i64, n: i64) -> RegionLabel {
    if m <= -l + d - 1 {
        RegionLabel::Left
    } else if m >= l - d {
        RegionLabel::Right
    } else if n <= d - 1 {
        RegionLabel::Bottom
    } else if n >= 2 * l - d + 1 {
        RegionLabel::Top
    } else {
        RegionLabel::Bulk
    }
}

/// Split the vertical dual edges of Λ_L into bulk, left, right, bottom and
/// top strips of depth d. `reach` is R + D of the model; d must satisfy
/// reach < d ≤ L.
pub fn five_region_masks(l: i64, d: i64, reach: i64) -> Result<[RegionMask; 5]> {
    if d <= reach || d > l {
        return Err(Error::DepthOutOfRange { d, lo: reach, hi: l });
    }
    let mut masks = RegionLabel::ALL.map(|label| RegionMask {
        label,
        edges: BTreeSet::new(),
    });
    for e in vertical_dual_edges(l) {
        let label = region_of(l, d, e.base.x1, e.base.x2);
        masks[label as usize].edges.insert(e);
    }
    Ok(masks)
}
