//! 2D mesh with serpentine photonic overlays.
//!
//! Routers are numbered row-major: node `y * width + x`. Each of the `K`
//! snakes owns an equal horizontal band of rows and visits it in
//! boustrophedon order; every `S`-th router along a snake hosts a hybrid
//! site. A snake is a pair of waveguide sets, one per direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    pub width: usize,
    pub height: usize,
    pub hop_length_mm: f64,
    pub cores_per_router: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            width: 8,
            height: 8,
            hop_length_mm: 2.5,
            cores_per_router: 4,
        }
    }
}

impl MeshSpec {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::Layout(format!(
                "mesh must be at least 2x2, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.hop_length_mm > 0.0) {
            return Err(Error::Layout("hop length must be > 0".into()));
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.width * self.height
    }

    pub fn coord(&self, n: NodeId) -> (usize, usize) {
        (n % self.width, n / self.width)
    }

    pub fn node(&self, x: usize, y: usize) -> NodeId {
        y * self.width + x
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n < self.nodes()
    }

    pub fn manhattan(&self, a: NodeId, b: NodeId) -> u32 {
        let (ax, ay) = self.coord(a);
        let (bx, by) = self.coord(b);
        (ax.abs_diff(bx) + ay.abs_diff(by)) as u32
    }

    /// Next router on the dimension-ordered (X first) route from `at` to `dst`.
    pub fn xy_next(&self, at: NodeId, dst: NodeId) -> Option<NodeId> {
        let (x, y) = self.coord(at);
        let (dx, dy) = self.coord(dst);
        if x < dx {
            Some(self.node(x + 1, y))
        } else if x > dx {
            Some(self.node(x - 1, y))
        } else if y < dy {
            Some(self.node(x, y + 1))
        } else if y > dy {
            Some(self.node(x, y - 1))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Along the snake's router order.
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snake {
    pub id: usize,
    /// Routers in waveguide order; a Hamiltonian path of the band.
    pub routers: Vec<NodeId>,
    /// Hybrid-router sites in waveguide order.
    pub sites: Vec<NodeId>,
    pub length_m: f64,
}

impl Snake {
    fn site_index(&self, n: NodeId) -> Option<usize> {
        self.sites.iter().position(|&s| s == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnakeLayout {
    pub mesh: MeshSpec,
    pub snakes_count: usize,
    pub stride: usize,
    pub site_offset: usize,
    pub snakes: Vec<Snake>,
}

/// Builds `k` snakes with sites every `stride` routers, starting at the first
/// router of each snake.
pub fn build(mesh: &MeshSpec, k: usize, stride: usize) -> Result<SnakeLayout> {
    build_with_offset(mesh, k, stride, 0)
}

pub fn build_with_offset(
    mesh: &MeshSpec,
    k: usize,
    stride: usize,
    site_offset: usize,
) -> Result<SnakeLayout> {
    mesh.validate()?;
    if k == 0 || mesh.height % k != 0 {
        return Err(Error::Layout(format!(
            "{k} snakes cannot split {} rows evenly",
            mesh.height
        )));
    }
    let per_snake = mesh.nodes() / k;
    if stride == 0 || per_snake % stride != 0 {
        return Err(Error::Layout(format!(
            "stride {stride} does not divide the {per_snake} routers of a snake"
        )));
    }
    if site_offset >= stride {
        return Err(Error::Layout(format!(
            "site offset {site_offset} must be below the stride {stride}"
        )));
    }
    let band = mesh.height / k;
    let snakes = (0..k)
        .map(|id| {
            let mut routers = Vec::with_capacity(per_snake);
            for (i, y) in (id * band..(id + 1) * band).enumerate() {
                if i % 2 == 0 {
                    routers.extend((0..mesh.width).map(|x| mesh.node(x, y)));
                } else {
                    routers.extend((0..mesh.width).rev().map(|x| mesh.node(x, y)));
                }
            }
            let sites = routers
                .iter()
                .copied()
                .skip(site_offset)
                .step_by(stride)
                .collect();
            Snake {
                id,
                length_m: per_snake as f64 * mesh.hop_length_mm * 1e-3,
                routers,
                sites,
            }
        })
        .collect();
    Ok(SnakeLayout {
        mesh: *mesh,
        snakes_count: k,
        stride,
        site_offset,
        snakes,
    })
}

impl SnakeLayout {
    pub fn total_sites(&self) -> usize {
        self.snakes.iter().map(|s| s.sites.len()).sum()
    }

    pub fn sites_per_snake(&self) -> usize {
        self.snakes[0].sites.len()
    }

    pub fn length_per_waveguide_m(&self) -> f64 {
        self.snakes[0].length_m
    }

    /// Snake owning router `n`.
    pub fn snake_of(&self, n: NodeId) -> Option<usize> {
        self.snakes.iter().position(|s| s.routers.contains(&n))
    }

    pub fn is_site(&self, n: NodeId) -> bool {
        self.snakes.iter().any(|s| s.sites.contains(&n))
    }

    pub fn export(&self) -> LayoutExport {
        LayoutExport {
            width: self.mesh.width,
            height: self.mesh.height,
            snakes_count: self.snakes_count,
            stride: self.stride,
            length_per_waveguide_m: self.length_per_waveguide_m(),
            candidate_count: candidates(self).len(),
            snakes: self
                .snakes
                .iter()
                .map(|s| SnakeExport {
                    id: s.id,
                    routers: s.routers.iter().map(|&n| self.mesh.coord(n)).collect(),
                    sites: s.sites.iter().map(|&n| self.mesh.coord(n)).collect(),
                })
                .collect(),
        }
    }
}

/// Layout as written to disk for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutExport {
    pub width: usize,
    pub height: usize,
    pub snakes_count: usize,
    pub stride: usize,
    pub length_per_waveguide_m: f64,
    pub candidate_count: usize,
    pub snakes: Vec<SnakeExport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnakeExport {
    pub id: usize,
    /// `(x, y)` coordinates in waveguide order.
    pub routers: Vec<(usize, usize)>,
    pub sites: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LogicalLinkCandidate {
    pub snake: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub direction: Direction,
}

/// Every ordered pair of distinct sites within each snake, sorted by
/// `(snake, src, dst)`.
pub fn candidates(layout: &SnakeLayout) -> Vec<LogicalLinkCandidate> {
    let mut out = Vec::new();
    for snake in &layout.snakes {
        for (i, &src) in snake.sites.iter().enumerate() {
            for (j, &dst) in snake.sites.iter().enumerate() {
                if i == j {
                    continue;
                }
                out.push(LogicalLinkCandidate {
                    snake: snake.id,
                    src,
                    dst,
                    direction: if i < j {
                        Direction::Forward
                    } else {
                        Direction::Reverse
                    },
                });
            }
        }
    }
    out.sort();
    out
}

impl LogicalLinkCandidate {
    /// True when both endpoints are sites of the named snake and the
    /// direction agrees with their order along it.
    pub fn is_consistent(&self, layout: &SnakeLayout) -> bool {
        let Some(snake) = layout.snakes.get(self.snake) else {
            return false;
        };
        match (snake.site_index(self.src), snake.site_index(self.dst)) {
            (Some(i), Some(j)) if i != j => (i < j) == (self.direction == Direction::Forward),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceSummary {
    /// Both directions over all snakes.
    pub waveguides: u32,
    pub avg_wavelengths_per_waveguide: f64,
    pub length_per_waveguide_m: f64,
    pub add_on_routers: usize,
    pub mrrs: u64,
    pub data_rate_gbps: f64,
}

/// Resource census of a layout whose every snake uses `waveguides_per_snake`
/// waveguides (both directions) carrying `avg_wavelengths` channels each.
pub fn resource_summary(
    layout: &SnakeLayout,
    waveguides_per_snake: u32,
    avg_wavelengths: f64,
    data_rate_gbps: f64,
) -> ResourceSummary {
    let rings: f64 = layout
        .snakes
        .iter()
        .map(|s| s.sites.len() as f64 * f64::from(waveguides_per_snake) * avg_wavelengths * 2.0)
        .sum();
    ResourceSummary {
        waveguides: waveguides_per_snake * layout.snakes_count as u32,
        avg_wavelengths_per_waveguide: avg_wavelengths,
        length_per_waveguide_m: layout.length_per_waveguide_m(),
        add_on_routers: layout.total_sites(),
        mrrs: rings.round() as u64,
        data_rate_gbps,
    }
}

/// The `(K, S)` variants that tile an 8×8 mesh with at least two sites per snake.
pub const VARIANTS: [(usize, usize); 14] = [
    (1, 1),
    (1, 2),
    (1, 4),
    (1, 8),
    (2, 1),
    (2, 2),
    (2, 4),
    (2, 8),
    (4, 1),
    (4, 2),
    (4, 4),
    (8, 1),
    (8, 2),
    (8, 4),
];
