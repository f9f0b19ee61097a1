//! Graded triangular meshes of star-shaped domains.
//!
//! The domain splits into a boundary annulus and a core. The annulus is
//! parameterized by `(theta, u) -> (1 - u) B(theta)` and carries a 2:1
//! balanced quadtree whose leaves are fanned into triangles, so the mesh can
//! grade from a few cells of size `h_near` inside a thin refinement region
//! up to `h_far` within a short distance. The core is a ring-by-ring
//! "spiderweb" whose angular resolution halves dyadically toward a small
//! center fan. Both zones share the annulus bottom row, so the mesh is
//! conforming by construction, and every boundary vertex lies exactly on
//! the boundary curve.

use crate::geometry::{DomainGeometry, Vec2};
use crate::{CoreError, Result};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

/// Default cap on the number of triangles.
pub const DEFAULT_BUDGET: usize = 2_000_000;

/// Relative depth of the quadtree annulus (the core is the `1 - U_ANN`
/// scaled copy of the domain).
const U_ANN: f64 = 0.4;

/// Spatial grading slope of the size field away from the refined region.
const GRADING_SLOPE: f64 = 0.5;

/// Region that must be resolved at `h_near`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefineRegion {
    /// No local refinement (uniform `h_far` mesh).
    None,
    /// Ball of radius `r_refine` around the boundary point at `theta_p`.
    Ball { theta_p: f64, r_refine: f64 },
    /// Boundary strip: arclength window of half width `s_half` around the
    /// point at `theta_p`, down to physical depth `depth`.
    Strip {
        theta_p: f64,
        s_half: f64,
        depth: f64,
    },
}

/// Mesh generation request.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshParams {
    pub h_far: f64,
    pub h_near: f64,
    pub refine: RefineRegion,
    pub budget: usize,
}

impl MeshParams {
    pub fn uniform(h: f64) -> Self {
        MeshParams {
            h_far: h,
            h_near: h,
            refine: RefineRegion::None,
            budget: DEFAULT_BUDGET,
        }
    }

    /// Exact bit pattern of the request, usable as a cache key.
    pub fn cache_key(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        mix(self.h_far.to_bits());
        mix(self.h_near.to_bits());
        mix(self.budget as u64);
        match self.refine {
            RefineRegion::None => mix(0),
            RefineRegion::Ball { theta_p, r_refine } => {
                mix(1);
                mix(theta_p.to_bits());
                mix(r_refine.to_bits());
            }
            RefineRegion::Strip {
                theta_p,
                s_half,
                depth,
            } => {
                mix(2);
                mix(theta_p.to_bits());
                mix(s_half.to_bits());
                mix(depth.to_bits());
            }
        }
        h
    }
}

/// Boundary vertex bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryVertex {
    pub vertex: u32,
    pub theta: f64,
    pub arclength: f64,
}

/// Summary of how a mesh was graded.
#[derive(Debug, Clone)]
pub struct GradingDescriptor {
    pub h_far: f64,
    pub h_near: f64,
    pub refine: RefineRegion,
    pub annulus_cells: usize,
    pub core_cells: usize,
}

/// A conforming triangle mesh.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[u32; 3]>,
    /// Boundary vertices sorted by parameter, each lying exactly on the
    /// boundary curve.
    pub boundary: Vec<BoundaryVertex>,
    pub grading: GradingDescriptor,
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
    }

    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        let d = |x: Vec2, y: Vec2| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        d(p, q).max(d(q, r)).max(d(r, p))
    }

    pub fn triangle_centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    pub fn min_angle_deg(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        let mut min = f64::INFINITY;
        for (v, u, w) in [(p, q, r), (q, r, p), (r, p, q)] {
            let e1 = [u[0] - v[0], u[1] - v[1]];
            let e2 = [w[0] - v[0], w[1] - v[1]];
            let dot = e1[0] * e2[0] + e1[1] * e2[1];
            let n1 = (e1[0] * e1[0] + e1[1] * e1[1]).sqrt();
            let n2 = (e2[0] * e2[0] + e2[1] * e2[1]).sqrt();
            min = min.min((dot / (n1 * n2)).clamp(-1.0, 1.0).acos());
        }
        min.to_degrees()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// ASCII dump. Columns: `v x y` per vertex, `t i j k` per triangle
    /// (zero-based vertex indices), `b vertex theta arclength` per boundary
    /// vertex.
    pub fn write_ascii<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# triangular mesh: {} vertices, {} triangles",
            self.n_vertices(),
            self.n_triangles()
        )?;
        writeln!(w, "# v <x> <y>")?;
        writeln!(w, "# t <i> <j> <k>   (zero-based, counter-clockwise)")?;
        writeln!(w, "# b <vertex> <theta> <arclength>")?;
        for v in &self.vertices {
            writeln!(w, "v {:.17e} {:.17e}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "t {} {} {}", t[0], t[1], t[2])?;
        }
        for b in &self.boundary {
            writeln!(w, "b {} {:.17e} {:.17e}", b.vertex, b.theta, b.arclength)?;
        }
        Ok(())
    }
}

/// Mesh resolution needed to resolve a probe with oscillation index `N` and
/// tangential direction norm `|xi'|` at `ppw` points per wavelength.
///
/// Returns `(h_near, r_refine)` with `h_near = 2 pi / (N |xi'| ppw)` capped
/// at `h_far`, and `r_refine = 2/sqrt(N) + h_far` (the probe support at the
/// widest admissible concentration `M = sqrt(N)`, plus a collar).
pub fn required_resolution(n: f64, xi_prime_norm: f64, ppw: f64, h_far: f64) -> (f64, f64) {
    let h_near = (2.0 * PI / (n * xi_prime_norm * ppw)).min(h_far);
    let r_refine = 2.0 / n.sqrt() + h_far;
    (h_near, r_refine)
}

/// Generates a graded mesh with the refinement ball demanded by the probe
/// resolution rule. See [`generate_mesh_with`] for the general entry point.
pub fn generate_mesh(
    domain: &Arc<DomainGeometry>,
    h_far: f64,
    h_near: f64,
    theta_p: f64,
    r_refine: f64,
) -> Result<TriMesh> {
    generate_mesh_with(
        domain,
        &MeshParams {
            h_far,
            h_near,
            refine: RefineRegion::Ball { theta_p, r_refine },
            budget: DEFAULT_BUDGET,
        },
    )
}

/// Generates a graded triangle mesh for the given parameters.
pub fn generate_mesh_with(domain: &Arc<DomainGeometry>, params: &MeshParams) -> Result<TriMesh> {
    if !(params.h_near > 0.0) || params.h_near > params.h_far {
        return Err(CoreError::InvalidParameter(format!(
            "need 0 < h_near <= h_far, got h_near = {}, h_far = {}",
            params.h_near, params.h_far
        )));
    }
    if params.h_far > 0.25 * domain.min_radius() {
        return Err(CoreError::InvalidParameter(format!(
            "h_far = {} too coarse for the domain",
            params.h_far
        )));
    }
    Builder::new(domain, params).build()
}

/// Size field: target triangle diameter at a location given in `(theta, u)`
/// annulus coordinates.
struct SizeField {
    domain: Arc<DomainGeometry>,
    h_far: f64,
    h_near: f64,
    region: Region,
}

enum Region {
    None,
    Ball { center: Vec2, r: f64 },
    Strip { s_center: f64, s_half: f64, depth: f64 },
}

impl SizeField {
    fn new(domain: &Arc<DomainGeometry>, params: &MeshParams) -> Self {
        let region = match params.refine {
            RefineRegion::None => Region::None,
            RefineRegion::Ball { theta_p, r_refine } => Region::Ball {
                center: domain.boundary_point(theta_p),
                r: r_refine,
            },
            RefineRegion::Strip {
                theta_p,
                s_half,
                depth,
            } => Region::Strip {
                s_center: domain.arclength_of(theta_p),
                s_half,
                depth,
            },
        };
        SizeField {
            domain: Arc::clone(domain),
            h_far: params.h_far,
            h_near: params.h_near,
            region,
        }
    }

    /// Target size at `(theta, u)`; `slack` widens the refined region by the
    /// caller's cell half-diameter so straddling cells refine too.
    fn target(&self, theta: f64, u: f64, slack: f64) -> f64 {
        if self.h_near == self.h_far {
            return self.h_far;
        }
        let dist = match &self.region {
            Region::None => return self.h_far,
            Region::Ball { center, r } => {
                let b = self.domain.boundary_point(theta);
                let p = [(1.0 - u) * b[0], (1.0 - u) * b[1]];
                let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                (d - r - slack).max(0.0)
            }
            Region::Strip {
                s_center,
                s_half,
                depth,
            } => {
                let l = self.domain.total_length();
                let s = self.domain.arclength_of(theta);
                let mut ds = (s - s_center).rem_euclid(l);
                if ds > l / 2.0 {
                    ds -= l;
                }
                let da = (ds.abs() - s_half - slack).max(0.0);
                let dp = (u * self.domain.radius(theta) - depth - slack).max(0.0);
                (da * da + dp * dp).sqrt()
            }
        };
        (self.h_near + GRADING_SLOPE * dist).clamp(self.h_near, self.h_far)
    }
}

/// Quadtree cell: level, column, row. Columns wrap periodically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Cell {
    level: u8,
    ix: u64,
    iy: u64,
}

struct Builder<'a> {
    domain: &'a Arc<DomainGeometry>,
    params: &'a MeshParams,
    size: SizeField,
    n0: u64,
    m0: u64,
    max_level: u8,
    sup_radius: f64,
}

impl<'a> Builder<'a> {
    fn new(domain: &'a Arc<DomainGeometry>, params: &'a MeshParams) -> Self {
        let sup_speed = (0..512)
            .map(|i| domain.boundary_speed(2.0 * PI * i as f64 / 512.0))
            .fold(0.0f64, f64::max);
        let sup_radius = domain.max_radius();

        let target_cols = (sup_speed * 2.0 * PI / params.h_far).ceil() as u64;
        let n0 = dyadic_cols(target_cols);
        let m0 = ((U_ANN * sup_radius / params.h_far).ceil() as u64).max(2);
        let max_level_f = (params.h_far / params.h_near).log2().ceil() + 1.0;
        let max_level = (max_level_f.max(0.0) as u8).min(26);
        Builder {
            domain,
            params,
            size: SizeField::new(domain, params),
            n0,
            m0,
            max_level,
            sup_radius,
        }
    }

    fn cell_theta_u(&self, c: Cell) -> (f64, f64, f64, f64) {
        let cols = (self.n0 << c.level) as f64;
        let rows = (self.m0 << c.level) as f64;
        let t0 = 2.0 * PI * c.ix as f64 / cols;
        let t1 = 2.0 * PI * (c.ix + 1) as f64 / cols;
        let u0 = U_ANN * c.iy as f64 / rows;
        let u1 = U_ANN * (c.iy + 1) as f64 / rows;
        (t0, t1, u0, u1)
    }

    fn needs_refine(&self, c: Cell) -> bool {
        if c.level >= self.max_level {
            return false;
        }
        let (t0, t1, u0, u1) = self.cell_theta_u(c);
        // Keep the bottom two root rows at level zero so the core interface
        // stays a uniform ring.
        let bottom_guard = U_ANN * (self.m0 - 2) as f64 / self.m0 as f64;
        if u0 >= bottom_guard - 1e-12 {
            return false;
        }
        let tc = 0.5 * (t0 + t1);
        let w = (1.0 - u0) * self.domain.boundary_speed(tc) * (t1 - t0);
        let h = self.domain.radius(tc) * (u1 - u0);
        let slack = 0.5 * (w * w + h * h).sqrt();
        let target = self.size.target(tc, 0.5 * (u0 + u1), slack);
        w.max(h) > target
    }

    fn build(&self) -> Result<TriMesh> {
        let leaves = self.refine_and_balance()?;
        self.triangulate(leaves)
    }

    fn refine_and_balance(&self) -> Result<Vec<Cell>> {
        let mut leaves: HashMap<Cell, ()> = HashMap::new();
        let mut stack: Vec<Cell> = Vec::new();
        for iy in 0..self.m0 {
            for ix in 0..self.n0 {
                stack.push(Cell { level: 0, ix, iy });
            }
        }
        while let Some(c) = stack.pop() {
            if self.needs_refine(c) {
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    stack.push(Cell {
                        level: c.level + 1,
                        ix: 2 * c.ix + dx,
                        iy: 2 * c.iy + dy,
                    });
                }
            } else {
                leaves.insert(c, ());
            }
            if (leaves.len() + stack.len()) * 3 > self.params.budget {
                return Err(CoreError::ElementBudget {
                    requested: (leaves.len() + stack.len()) * 3,
                    cap: self.params.budget,
                    h_near: self.params.h_near,
                });
            }
        }

        // Enforce the 2:1 balance: a leaf bordering a leaf two levels finer
        // is split. Iterate to a fixpoint; detection runs from the fine side.
        loop {
            let mut to_split: Vec<Cell> = Vec::new();
            for &c in leaves.keys() {
                if c.level < 2 {
                    continue;
                }
                for (nx, ny) in self.neighbors(c) {
                    let mut probe = Cell {
                        level: c.level,
                        ix: nx,
                        iy: ny,
                    };
                    loop {
                        if leaves.contains_key(&probe) {
                            if c.level > probe.level + 1 {
                                to_split.push(probe);
                            }
                            break;
                        }
                        if probe.level == 0 {
                            break;
                        }
                        probe = Cell {
                            level: probe.level - 1,
                            ix: probe.ix / 2,
                            iy: probe.iy / 2,
                        };
                    }
                }
            }
            if to_split.is_empty() {
                break;
            }
            to_split.sort_unstable();
            to_split.dedup();
            for c in to_split {
                if leaves.remove(&c).is_some() {
                    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        leaves.insert(
                            Cell {
                                level: c.level + 1,
                                ix: 2 * c.ix + dx,
                                iy: 2 * c.iy + dy,
                            },
                            (),
                        );
                    }
                }
            }
            if leaves.len() * 3 > self.params.budget {
                return Err(CoreError::ElementBudget {
                    requested: leaves.len() * 3,
                    cap: self.params.budget,
                    h_near: self.params.h_near,
                });
            }
        }

        let mut sorted: Vec<Cell> = leaves.into_keys().collect();
        sorted.sort_unstable();
        Ok(sorted)
    }

    /// Same-level edge neighbors (wrapping in the column direction).
    fn neighbors(&self, c: Cell) -> Vec<(u64, u64)> {
        let cols = self.n0 << c.level;
        let rows = self.m0 << c.level;
        let mut out = Vec::with_capacity(4);
        out.push(((c.ix + 1) % cols, c.iy));
        out.push(((c.ix + cols - 1) % cols, c.iy));
        if c.iy + 1 < rows {
            out.push((c.ix, c.iy + 1));
        }
        if c.iy > 0 {
            out.push((c.ix, c.iy - 1));
        }
        out
    }

    fn triangulate(&self, leaves: Vec<Cell>) -> Result<TriMesh> {
        let leaf_set: HashMap<Cell, ()> = leaves.iter().map(|&c| (c, ())).collect();
        // Lattice with doubled resolution so cell centers are integers.
        let scale_of = |level: u8| 1u64 << (self.max_level - level + 1);
        let lattice_cols = 2 * (self.n0 << self.max_level);
        let lattice_rows = 2 * (self.m0 << self.max_level);

        let mut vertices: Vec<Vec2> = Vec::new();
        let mut vertex_ids: HashMap<(u64, u64), u32> = HashMap::new();
        let mut boundary: Vec<BoundaryVertex> = Vec::new();
        let mut triangles: Vec<[u32; 3]> = Vec::new();

        let domain = self.domain;
        let mut get_vertex = |a: u64, b: u64, vertices: &mut Vec<Vec2>| -> u32 {
            let a = a % lattice_cols;
            if let Some(&id) = vertex_ids.get(&(a, b)) {
                return id;
            }
            let theta = 2.0 * PI * a as f64 / lattice_cols as f64;
            let u = U_ANN * b as f64 / lattice_rows as f64;
            let bp = domain.boundary_point(theta);
            let p = [(1.0 - u) * bp[0], (1.0 - u) * bp[1]];
            let id = vertices.len() as u32;
            vertices.push(p);
            vertex_ids.insert((a, b), id);
            if b == 0 {
                boundary.push(BoundaryVertex {
                    vertex: id,
                    theta,
                    arclength: domain.arclength_of(theta),
                });
            }
            id
        };

        // Finer leaf across an edge? With 2:1 balance testing one child of
        // the same-level neighbor suffices.
        let finer_across = |c: Cell, dir: u8| -> bool {
            if c.level >= self.max_level {
                return false;
            }
            let cols = self.n0 << (c.level + 1);
            let rows = self.m0 << (c.level + 1);
            let (x2, y2) = (2 * c.ix, 2 * c.iy);
            let (cx, cy) = match dir {
                0 => ((x2 + 2) % cols, y2),
                1 => ((x2 + cols - 1) % cols, y2),
                2 => (x2, y2 + 2),
                _ => {
                    if c.iy == 0 {
                        return false;
                    }
                    (x2, y2 - 1)
                }
            };
            if dir == 2 && y2 + 2 >= rows {
                return false;
            }
            leaf_set.contains_key(&Cell {
                level: c.level + 1,
                ix: cx,
                iy: cy,
            })
        };

        let annulus_cells = leaves.len();
        for &c in &leaves {
            let s = scale_of(c.level);
            let (a0, b0) = (c.ix * s, c.iy * s);
            let (a1, b1) = (a0 + s, b0 + s);
            let half = s / 2;

            let mut poly: Vec<(u64, u64)> = Vec::with_capacity(8);
            poly.push((a0, b0));
            if finer_across(c, 3) {
                poly.push((a0 + half, b0));
            }
            poly.push((a1, b0));
            if finer_across(c, 0) {
                poly.push((a1, b0 + half));
            }
            poly.push((a1, b1));
            if finer_across(c, 2) {
                poly.push((a0 + half, b1));
            }
            poly.push((a0, b1));
            if finer_across(c, 1) {
                poly.push((a0, b0 + half));
            }

            let center = get_vertex(a0 + half, b0 + half, &mut vertices);
            let ids: Vec<u32> = poly
                .iter()
                .map(|&(a, b)| get_vertex(a, b, &mut vertices))
                .collect();
            for i in 0..ids.len() {
                let j = (i + 1) % ids.len();
                push_oriented(&mut triangles, &vertices, center, ids[i], ids[j]);
            }
        }

        // Bottom row nodes become ring zero of the core; they must be the
        // uniform level-zero lattice.
        let stride = 1u64 << (self.max_level + 1);
        let mut ring: Vec<u32> = Vec::with_capacity(self.n0 as usize);
        for i in 0..self.n0 {
            match vertex_ids.get(&(i * stride, lattice_rows)) {
                Some(&id) => ring.push(id),
                None => {
                    return Err(CoreError::InvalidParameter(
                        "annulus bottom row is not uniform; deepen the annulus".into(),
                    ))
                }
            }
        }

        let core_cells = self.build_core(&mut vertices, &mut triangles, ring)?;

        boundary.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
        Ok(TriMesh {
            vertices,
            triangles,
            boundary,
            grading: GradingDescriptor {
                h_far: self.params.h_far,
                h_near: self.params.h_near,
                refine: self.params.refine,
                annulus_cells,
                core_cells,
            },
        })
    }

    /// Spiderweb rings from the annulus interface down to a center fan.
    fn build_core(
        &self,
        vertices: &mut Vec<Vec2>,
        triangles: &mut Vec<[u32; 3]>,
        mut ring: Vec<u32>,
    ) -> Result<usize> {
        let mut rho = 1.0 - U_ANN;
        let mut n = ring.len() as u64;
        let mut cells = 0usize;

        loop {
            let mut h_min = f64::INFINITY;
            for i in 0..n {
                let theta = 2.0 * PI * i as f64 / n as f64;
                h_min = h_min.min(self.size.target(theta, 1.0 - rho, 0.0));
            }
            let w_out = 2.0 * PI * rho * self.sup_radius / n as f64;
            if rho * self.sup_radius <= 0.95 * h_min && n <= 17 {
                let center = vertices.len() as u32;
                vertices.push([0.0, 0.0]);
                for i in 0..n as usize {
                    let j = (i + 1) % n as usize;
                    push_oriented(triangles, vertices, center, ring[i], ring[j]);
                    cells += 1;
                }
                return Ok(cells);
            }

            // Ring spacing tracks the local cell width and caps the taper so
            // band cells stay near unit aspect all the way to the center.
            let mut drho =
                h_min.min(1.2 * w_out).min(0.35 * rho * self.sup_radius) / self.sup_radius;
            // Avoid a sliver ring right before the fan.
            if rho - drho < 0.6 * drho {
                drho = rho * 0.55;
            }
            let rho_in = rho - drho;

            let halve = w_out <= 0.5 * h_min && n % 2 == 0 && n / 2 >= 9;

            let n_in = if halve { n / 2 } else { n };
            let mut inner: Vec<u32> = Vec::with_capacity(n_in as usize);
            for i in 0..n_in {
                let theta = 2.0 * PI * i as f64 / n_in as f64;
                let bp = self.domain.boundary_point(theta);
                inner.push(vertices.len() as u32);
                vertices.push([rho_in * bp[0], rho_in * bp[1]]);
            }

            if halve {
                for j in 0..n_in as usize {
                    let ids = [
                        ring[2 * j],
                        ring[2 * j + 1],
                        ring[(2 * j + 2) % n as usize],
                        inner[(j + 1) % n_in as usize],
                        inner[j],
                    ];
                    fan_polygon(vertices, triangles, &ids);
                    cells += 1;
                }
            } else {
                for i in 0..n as usize {
                    let j = (i + 1) % n as usize;
                    let ids = [ring[i], ring[j], inner[j], inner[i]];
                    fan_polygon(vertices, triangles, &ids);
                    cells += 1;
                }
            }

            ring = inner;
            n = n_in;
            rho = rho_in;
            if triangles.len() > self.params.budget {
                return Err(CoreError::ElementBudget {
                    requested: triangles.len(),
                    cap: self.params.budget,
                    h_near: self.params.h_near,
                });
            }
        }
    }
}

/// Adds the centroid of `ids` as a vertex and fans the polygon around it.
fn fan_polygon(vertices: &mut Vec<Vec2>, triangles: &mut Vec<[u32; 3]>, ids: &[u32]) {
    let k = ids.len() as f64;
    let cx = ids
        .iter()
        .map(|&v| vertices[v as usize])
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
    let centroid = vertices.len() as u32;
    vertices.push([cx[0] / k, cx[1] / k]);
    for i in 0..ids.len() {
        let j = (i + 1) % ids.len();
        push_oriented(triangles, vertices, centroid, ids[i], ids[j]);
    }
}

fn push_oriented(triangles: &mut Vec<[u32; 3]>, vertices: &[Vec2], a: u32, b: u32, c: u32) {
    let (p, q, r) = (
        vertices[a as usize],
        vertices[b as usize],
        vertices[c as usize],
    );
    let area2 = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    if area2 >= 0.0 {
        triangles.push([a, b, c]);
    } else {
        triangles.push([a, c, b]);
    }
}

/// Smallest `m * 2^k >= target` with `9 <= m <= 17`, so the core angular
/// count can halve dyadically down to a small center fan.
fn dyadic_cols(target: u64) -> u64 {
    let target = target.max(9);
    let mut best = u64::MAX;
    for k in 0..40u32 {
        let pow = 1u64 << k;
        let m = target.div_ceil(pow);
        if (9..=17).contains(&m) {
            best = best.min(m * pow);
        }
        if pow > target {
            break;
        }
    }
    best
}
