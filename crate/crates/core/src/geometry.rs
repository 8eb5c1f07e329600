//! Node placement, cluster hierarchies and the planar predicates used when
//! bounding the correlation between channel entries.
//!
//! Coordinates follow one convention throughout: the origin is the
//! bottom-left corner of the network square, and for a [`ClusterPair`] it is
//! the bottom-left corner of the transmit square.

use std::f64::consts::SQRT_2;
use std::ops::Sub;

use rand::Rng as _;

use crate::error::{ensure, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn scale(self, c: f64) -> Point {
        Point::new(self.x * c, self.y * c)
    }
}

fn uniform_in_rect(rng: &mut rng::Rng, x0: f64, y0: f64, w: f64, h: f64) -> Point {
    Point::new(x0 + w * rng.random::<f64>(), y0 + h * rng.random::<f64>())
}

impl Sub for Point {
    type Output = Point;

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

/// `n` nodes placed independently and uniformly in a `side` x `side` square.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub points: Vec<Point>,
    pub side: f64,
    pub seed: u64,
}

pub fn place_uniform(n: usize, side: f64, seed: u64) -> Result<Placement> {
    ensure!(n >= 1, "placement needs at least one node");
    ensure!(side > 0.0 && side.is_finite(), "side must be positive, got {side}");
    let mut rng = rng::seeded(seed);
    let points = (0..n)
        .map(|_| uniform_in_rect(&mut rng, 0.0, 0.0, side, side))
        .collect();
    Ok(Placement { points, side, seed })
}

impl Placement {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Two horizontally aligned `D` x `D` clusters whose centres are `L` apart.
///
/// The transmit square is `[0, D] x [0, D]`; the receive square is
/// `[L, L + D] x [0, D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPair {
    pub side: f64,
    pub separation: f64,
    pub tx: Vec<Point>,
    pub rx: Vec<Point>,
}

impl ClusterPair {
    /// Places `n` nodes uniformly in each square.
    pub fn random(side: f64, separation: f64, n: usize, seed: u64) -> Result<Self> {
        check_pair_geometry(side, separation)?;
        ensure!(n >= 1, "cluster pair needs at least one node per cluster");
        let mut rng = rng::seeded(seed);
        let tx = (0..n)
            .map(|_| uniform_in_rect(&mut rng, 0.0, 0.0, side, side))
            .collect();
        let rx = (0..n)
            .map(|_| uniform_in_rect(&mut rng, separation, 0.0, side, side))
            .collect();
        Ok(Self {
            side,
            separation,
            tx,
            rx,
        })
    }

    pub fn from_points(side: f64, separation: f64, tx: Vec<Point>, rx: Vec<Point>) -> Result<Self> {
        check_pair_geometry(side, separation)?;
        ensure!(
            tx.len() == rx.len() && !tx.is_empty(),
            "clusters must hold the same nonzero number of nodes ({} vs {})",
            tx.len(),
            rx.len()
        );
        let pair = Self {
            side,
            separation,
            tx,
            rx,
        };
        for p in &pair.tx {
            ensure!(pair.in_tx_square(*p), "transmit node {p:?} outside the transmit square");
        }
        for p in &pair.rx {
            ensure!(pair.in_rx_square(*p), "receive node {p:?} outside the receive square");
        }
        Ok(pair)
    }

    pub fn nodes(&self) -> usize {
        self.tx.len()
    }

    pub fn in_tx_square(&self, p: Point) -> bool {
        (0.0..=self.side).contains(&p.x) && (0.0..=self.side).contains(&p.y)
    }

    pub fn in_rx_square(&self, p: Point) -> bool {
        (self.separation..=self.separation + self.side).contains(&p.x) && (0.0..=self.side).contains(&p.y)
    }

    /// Corners of the receive square, counterclockwise from `(L, 0)`.
    pub fn rx_corners(&self) -> [Point; 4] {
        let (l, d) = (self.separation, self.side);
        [
            Point::new(l, 0.0),
            Point::new(l + d, 0.0),
            Point::new(l + d, d),
            Point::new(l, d),
        ]
    }

    /// Exact smallest and largest transmit-receive distances over the squares.
    pub fn distance_extremes(&self) -> (f64, f64) {
        let (l, d) = (self.separation, self.side);
        (l - d, (l + d).hypot(d))
    }

    /// Distance range implied by the centre separation alone, `L -+ sqrt(2) D`.
    pub fn centre_distance_bounds(&self) -> (f64, f64) {
        let (l, d) = (self.separation, self.side);
        (l - SQRT_2 * d, l + SQRT_2 * d)
    }

    /// Bounds on the normalised magnitudes `a = (L / d)^(alpha / 2)`.
    pub fn amplitude_bounds(&self, alpha: f64) -> (f64, f64) {
        let (dmin, dmax) = self.distance_extremes();
        let l = self.separation;
        ((l / dmax).powf(alpha / 2.0), (l / dmin).powf(alpha / 2.0))
    }
}

fn check_pair_geometry(side: f64, separation: f64) -> Result<()> {
    ensure!(
        side > 0.0 && side.is_finite(),
        "cluster side must be positive, got {side}"
    );
    ensure!(
        separation >= 2.0 * side,
        "centre distance {separation} must be at least twice the side {side}"
    );
    Ok(())
}

/// A square region split into `count x count` cells.
///
/// Cells have a nominal side; when the region is not an integer multiple of
/// it, the last row and column absorb the remainder. Cell `(row, col)` spans
/// `edges[col]..edges[col + 1]` horizontally and `edges[row]..edges[row + 1]`
/// vertically.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGrid {
    edges: Vec<f64>,
    nominal: f64,
}

pub type Cell = (usize, usize);

impl ClusterGrid {
    pub fn uniform(count: usize, cell: f64) -> Result<Self> {
        ensure!(count >= 1, "grid needs at least one cell per side");
        ensure!(cell > 0.0, "cell side must be positive");
        let edges = (0..=count).map(|i| i as f64 * cell).collect();
        Ok(Self { edges, nominal: cell })
    }

    /// Splits `[0, side]` into cells of nominal side `cell`, rounding the count
    /// down and widening the last cell.
    pub fn covering(side: f64, cell: f64) -> Result<Self> {
        ensure!(side > 0.0 && cell > 0.0, "grid side and cell must be positive");
        let count = ((side / cell) * (1.0 + 1e-12)).floor().max(1.0) as usize;
        let mut edges: Vec<f64> = (0..count).map(|i| i as f64 * cell).collect();
        edges.push(side);
        Ok(Self { edges, nominal: cell })
    }

    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn nominal_side(&self) -> f64 {
        self.nominal
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.0 * self.count() + cell.1
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let c = self.count();
        (0..c).flat_map(move |r| (0..c).map(move |col| (r, col)))
    }

    fn axis_bin(&self, v: f64) -> usize {
        // partition_point gives the number of interior edges <= v
        let inner = &self.edges[1..self.edges.len() - 1];
        inner.partition_point(|&e| e <= v)
    }

    pub fn cell_of(&self, p: Point) -> Cell {
        (self.axis_bin(p.y), self.axis_bin(p.x))
    }

    pub fn centre(&self, (row, col): Cell) -> Point {
        Point::new(
            0.5 * (self.edges[col] + self.edges[col + 1]),
            0.5 * (self.edges[row] + self.edges[row + 1]),
        )
    }

    /// `(x0, y0, width, height)` of a cell.
    pub fn rect(&self, (row, col): Cell) -> (f64, f64, f64, f64) {
        (
            self.edges[col],
            self.edges[row],
            self.edges[col + 1] - self.edges[col],
            self.edges[row + 1] - self.edges[row],
        )
    }

    pub fn sample_in(&self, cell: Cell, rng: &mut rng::Rng) -> Point {
        let (x0, y0, w, h) = self.rect(cell);
        uniform_in_rect(rng, x0, y0, w, h)
    }
}

/// Slot in `1..=9` of the spatial-reuse pattern: clusters share a slot iff
/// their row and column indices agree modulo 3.
pub fn tdma9_slot(row: usize, col: usize) -> u8 {
    (3 * (row % 3) + (col % 3) + 1) as u8
}

/// Chebyshev (L-infinity) distance between two grid cells.
pub fn grid_distance(a: Cell, b: Cell) -> usize {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

/// Same-slot clusters other than `v`, grouped into rings.
///
/// Ring `i` (stored at index `i - 1`) holds the clusters at grid distance
/// exactly `3i`; it has at most `8i` members, each with centre distance at
/// least `3i` nominal cell sides from `v`.
pub fn interferer_subgroups(v: Cell, grid: &ClusterGrid) -> Result<Vec<Vec<Cell>>> {
    let c = grid.count();
    ensure!(v.0 < c && v.1 < c, "cluster {v:?} outside a {c}x{c} grid");
    let slot = tdma9_slot(v.0, v.1);
    let mut rings: Vec<Vec<Cell>> = Vec::new();
    for cell in grid.cells() {
        if cell == v || tdma9_slot(cell.0, cell.1) != slot {
            continue;
        }
        let ring = grid_distance(cell, v) / 3;
        if rings.len() < ring {
            rings.resize(ring, Vec::new());
        }
        rings[ring - 1].push(cell);
    }
    Ok(rings)
}

/// One level of a [`ClusterHierarchy`].
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyLevel {
    pub grid: ClusterGrid,
    /// Cluster index (row-major) of every node.
    pub membership: Vec<usize>,
    /// Nodes actually falling in each cluster.
    pub realized: Vec<usize>,
    /// Node count the idealised scheme assumes per cluster (`n_k`).
    pub ideal: f64,
}

/// Nested square partitions of a placement, level `h` being the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterHierarchy {
    pub levels: Vec<HierarchyLevel>,
}

impl ClusterHierarchy {
    /// Builds the hierarchy for cluster sizes `n_seq = (n_0, ..., n_h)`, where
    /// `n_h` is the total node count and level `k` has area `n_k / n` of the
    /// network.
    ///
    /// Each level-`k` cluster is split into `r x r` equal children with
    /// `r = floor(sqrt(n_k / n_{k-1}))`, so children are never smaller than the
    /// idealised area `n_{k-1} / n`.
    pub fn build(placement: &Placement, n_seq: &[f64]) -> Result<Self> {
        ensure!(!n_seq.is_empty(), "hierarchy needs at least one level");
        let n = *n_seq.last().unwrap();
        ensure!(n > 0.0, "cluster sizes must be positive");
        for w in n_seq.windows(2) {
            ensure!(
                w[0] > 0.0 && w[0] <= w[1],
                "cluster sizes must be positive and nondecreasing: {n_seq:?}"
            );
        }
        let side = placement.side;
        let h = n_seq.len() - 1;
        let mut grids = vec![ClusterGrid {
            edges: vec![0.0, side],
            nominal: side,
        }];
        for k in (1..=h).rev() {
            let parent = grids.last().unwrap();
            let split = ((n_seq[k] / n_seq[k - 1]).sqrt() * (1.0 + 1e-12)).floor().max(1.0) as usize;
            let count = parent.count() * split;
            let cell = side / count as f64;
            let edges = (0..=count)
                .map(|i| if i == count { side } else { i as f64 * cell })
                .collect();
            grids.push(ClusterGrid { edges, nominal: cell });
        }
        grids.reverse();

        let levels = grids
            .into_iter()
            .zip(n_seq)
            .map(|(grid, &ideal)| {
                let membership: Vec<usize> = placement.points.iter().map(|&p| grid.index(grid.cell_of(p))).collect();
                let mut realized = vec![0; grid.count() * grid.count()];
                for &m in &membership {
                    realized[m] += 1;
                }
                HierarchyLevel {
                    grid,
                    membership,
                    realized,
                    ideal,
                }
            })
            .collect();
        Ok(Self { levels })
    }

    pub fn height(&self) -> usize {
        self.levels.len() - 1
    }

    /// Level-`k` cluster containing level-`(k-1)` cluster `child`.
    pub fn parent_of(&self, k: usize, child: usize) -> usize {
        let lower = &self.levels[k - 1].grid;
        let upper = &self.levels[k].grid;
        let c = lower.count();
        let (row, col) = (child / c, child % c);
        let centre = lower.centre((row, col));
        upper.index(upper.cell_of(centre))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// The line through the two transmit nodes meets the receive square.
    Gamma1,
    Gamma2,
}

/// Classifies a transmit pair by whether the infinite line through it meets
/// the (closed) receive square. Touching a corner counts as meeting it.
pub fn classify_region(zu: Point, zv: Point, pair: &ClusterPair) -> Result<Region> {
    let dir = zv - zu;
    ensure!(dir.x != 0.0 || dir.y != 0.0, "transmit points coincide at {zu:?}");
    let mut pos = false;
    let mut neg = false;
    for c in pair.rx_corners() {
        let s = dir.cross(c - zu);
        pos |= s >= 0.0;
        neg |= s <= 0.0;
    }
    Ok(if pos && neg { Region::Gamma1 } else { Region::Gamma2 })
}

/// Signed counterclockwise angle at `zs` from `zv` to `zu`, in `(-pi, pi]`.
pub fn angle_phi(zu: Point, zv: Point, zs: Point) -> Result<f64> {
    let to_v = zv - zs;
    let to_u = zu - zs;
    if to_v == Point::default() || to_u == Point::default() {
        return Err(Error::InvalidArgument(format!(
            "vertex {zs:?} coincides with an endpoint"
        )));
    }
    let phi = to_v.cross(to_u).atan2(to_v.dot(to_u));
    // atan2 returns -pi for a negative-zero cross product
    Ok(if phi == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        phi
    })
}

/// Smallest `|phi|` over the four corners of the receive square.
pub fn phi_corner_min(zu: Point, zv: Point, pair: &ClusterPair) -> Result<f64> {
    if classify_region(zu, zv, pair)? == Region::Gamma1 {
        return Err(Error::Precondition(
            "corner angle bound is only defined for pairs whose line misses the receive square".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for c in pair.rx_corners() {
        best = best.min(angle_phi(zu, zv, c)?.abs());
    }
    Ok(best)
}
