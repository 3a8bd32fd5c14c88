//! Two-level acceleration structure.
//!
//! A [`Blas`] is a BVH over one triangle mesh or one list of custom
//! primitive boxes. A [`Tlas`] is a BVH over transformed [`Instance`]s of
//! bottom-level structures. Rays are tested against instances in object
//! space; see [`transform_ray_to_local`].

mod bvh;
mod instance;
mod registry;
mod traverse;

pub use bvh::{BuildParams, BuildQuality, Bvh, BvhNode, NodeKind, MAX_DEPTH};
pub use instance::{transform_ray_to_local, Affine, Instance, SrtFrame};
pub use registry::{intersect_sphere_list, CustomHit, IntersectFn, IntersectorRegistry};
pub use traverse::{TraversalCursor, TraversalState, TraversalStats, TIE_EPSILON};

use crate::geometry::{aabb_of_triangle, Aabb, Triangle, TriangleMesh, Vec3};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("cannot build a BVH over zero primitives")]
    NoPrimitives,
    #[error("too many primitives: {0}")]
    TooManyPrimitives(usize),
    #[error("primitive {index} has a non-finite bounding box")]
    NonFiniteBounds { index: usize },
    #[error("triangle {triangle} references vertex {vertex} but the mesh has {vertex_count} vertices")]
    VertexOutOfRange {
        triangle: usize,
        vertex: u32,
        vertex_count: usize,
    },
    #[error("refit expects {expected} primitives, got {actual}")]
    PrimitiveCountMismatch { expected: usize, actual: usize },
    #[error("refit needs {expected} vertices, got {actual}")]
    VertexCountMismatch { expected: usize, actual: usize },
    #[error("refit of a {0} structure with the wrong kind of input")]
    GeometryKindMismatch(&'static str),
    #[error("scene needs at least one instance")]
    NoInstances,
    #[error("instance {instance} references missing bottom-level structure {blas_id}")]
    MissingBlas { instance: usize, blas_id: usize },
    #[error("instance {instance} has a non-invertible transform")]
    SingularTransform { instance: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("no intersection function registered for geometry type {geom_type} and ray type {ray_type}")]
    MissingIntersector { geom_type: u32, ray_type: u32 },
    #[error("traversal stack overflow")]
    StackOverflow,
}

#[derive(Debug, Clone)]
pub enum BlasGeometry {
    Triangles(TriangleMesh),
    /// Custom primitives given by their boxes; `geom_type` selects the
    /// intersection function in an [`IntersectorRegistry`].
    Custom { aabbs: Vec<Aabb>, geom_type: u32 },
}

/// Bottom-level acceleration structure.
#[derive(Debug, Clone)]
pub struct Blas {
    bvh: Bvh,
    geometry: BlasGeometry,
}

impl Blas {
    pub fn from_mesh(mesh: TriangleMesh, params: &BuildParams) -> Result<Blas, BuildError> {
        let boxes = triangle_boxes(&mesh.vertices, &mesh.triangles)?;
        Ok(Blas {
            bvh: Bvh::build(&boxes, params)?,
            geometry: BlasGeometry::Triangles(mesh),
        })
    }

    pub fn from_aabbs(aabbs: Vec<Aabb>, geom_type: u32, params: &BuildParams) -> Result<Blas, BuildError> {
        Ok(Blas {
            bvh: Bvh::build(&aabbs, params)?,
            geometry: BlasGeometry::Custom { aabbs, geom_type },
        })
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn geometry(&self) -> &BlasGeometry {
        &self.geometry
    }

    pub fn mesh(&self) -> Option<&TriangleMesh> {
        match &self.geometry {
            BlasGeometry::Triangles(m) => Some(m),
            BlasGeometry::Custom { .. } => None,
        }
    }

    /// `None` for triangle meshes.
    pub fn geom_type(&self) -> Option<u32> {
        match self.geometry {
            BlasGeometry::Triangles(_) => None,
            BlasGeometry::Custom { geom_type, .. } => Some(geom_type),
        }
    }

    pub fn prim_count(&self) -> usize {
        self.bvh.prim_count()
    }

    pub fn bounds(&self) -> Aabb {
        self.bvh.root_bounds()
    }

    /// Moves the mesh vertices and refits the tree bottom-up.
    pub fn refit_vertices(&mut self, vertices: Vec<Vec3>) -> Result<(), BuildError> {
        let BlasGeometry::Triangles(mesh) = &mut self.geometry else {
            return Err(BuildError::GeometryKindMismatch("custom"));
        };
        if vertices.len() != mesh.vertices.len() {
            return Err(BuildError::VertexCountMismatch {
                expected: mesh.vertices.len(),
                actual: vertices.len(),
            });
        }
        let boxes = triangle_boxes(&vertices, &mesh.triangles)?;
        self.bvh.refit(&boxes)?;
        mesh.vertices = vertices;
        Ok(())
    }

    pub fn refit_aabbs(&mut self, aabbs: Vec<Aabb>) -> Result<(), BuildError> {
        let BlasGeometry::Custom { aabbs: current, .. } = &mut self.geometry else {
            return Err(BuildError::GeometryKindMismatch("triangle"));
        };
        self.bvh.refit(&aabbs)?;
        *current = aabbs;
        Ok(())
    }
}

fn triangle_boxes(vertices: &[Vec3], triangles: &[Triangle]) -> Result<Vec<Aabb>, BuildError> {
    let vertex_count = vertices.len();
    triangles
        .iter()
        .enumerate()
        .map(|(i, tri)| {
            if let Some(&vertex) = tri.indices.iter().find(|&&v| v as usize >= vertex_count) {
                return Err(BuildError::VertexOutOfRange {
                    triangle: i,
                    vertex,
                    vertex_count,
                });
            }
            let [a, b, c] = tri.indices.map(|v| vertices[v as usize]);
            let bounds = aabb_of_triangle(a, b, c);
            if bounds.is_finite() {
                Ok(bounds)
            } else {
                Err(BuildError::NonFiniteBounds { index: i })
            }
        })
        .collect()
}

/// Top-level acceleration structure over instances.
#[derive(Debug, Clone)]
pub struct Tlas {
    bvh: Bvh,
    instances: Vec<Instance>,
    blases: Vec<Arc<Blas>>,
    object_to_world: Vec<Affine>,
    world_to_object: Vec<Affine>,
    world_bounds: Vec<Aabb>,
}

impl Tlas {
    pub fn build(
        instances: Vec<Instance>,
        blases: Vec<Arc<Blas>>,
        params: &BuildParams,
    ) -> Result<Tlas, BuildError> {
        if instances.is_empty() {
            return Err(BuildError::NoInstances);
        }
        let mut object_to_world = Vec::with_capacity(instances.len());
        let mut world_to_object = Vec::with_capacity(instances.len());
        let mut world_bounds = Vec::with_capacity(instances.len());
        for (i, inst) in instances.iter().enumerate() {
            let blas = blases.get(inst.blas_id).ok_or(BuildError::MissingBlas {
                instance: i,
                blas_id: inst.blas_id,
            })?;
            let m = inst.frame.matrix();
            let inv = m.inverse().ok_or(BuildError::SingularTransform { instance: i })?;
            let b = m.transform_aabb(&blas.bounds());
            if !b.is_finite() {
                return Err(BuildError::NonFiniteBounds { index: i });
            }
            object_to_world.push(m);
            world_to_object.push(inv);
            world_bounds.push(b);
        }
        let bvh = Bvh::build(&world_bounds, params)?;
        Ok(Tlas {
            bvh,
            instances,
            blases,
            object_to_world,
            world_to_object,
            world_bounds,
        })
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn blases(&self) -> &[Arc<Blas>] {
        &self.blases
    }

    pub fn blas_of(&self, instance: usize) -> &Blas {
        &self.blases[self.instances[instance].blas_id]
    }

    pub fn object_to_world(&self, instance: usize) -> &Affine {
        &self.object_to_world[instance]
    }

    pub fn world_to_object(&self, instance: usize) -> &Affine {
        &self.world_to_object[instance]
    }

    pub fn instance_bounds(&self, instance: usize) -> Aabb {
        self.world_bounds[instance]
    }

    pub fn bounds(&self) -> Aabb {
        self.bvh.root_bounds()
    }

    /// Checks that every custom geometry type has an intersector for each
    /// of `ray_types`.
    pub fn check_registry(&self, registry: &IntersectorRegistry, ray_types: &[u32]) -> Result<(), TraceError> {
        for blas in &self.blases {
            if let Some(geom_type) = blas.geom_type() {
                for &ray_type in ray_types {
                    if registry.get(geom_type, ray_type).is_none() {
                        return Err(TraceError::MissingIntersector { geom_type, ray_type });
                    }
                }
            }
        }
        Ok(())
    }
}
