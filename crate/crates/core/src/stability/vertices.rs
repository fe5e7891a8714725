use crate::controller::filter::FilterSpec;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::reference::augmented::build_augmented;
use crate::sim::system::LtiSubsystem;
use crate::sim::uncertainty::UncertaintyBounds;

/// Corners of `Θ × Ω`. Since `Ā` is affine in `(θ, ω)`, Lyapunov
/// inequalities checked at these points hold on the whole box.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeVertexSet {
    pub vertices: Vec<(Matrix, Matrix)>,
}

impl PolytopeVertexSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Distinct ω corners.
    pub fn omegas(&self) -> Vec<Matrix> {
        let mut out: Vec<Matrix> = Vec::new();
        for (_, w) in &self.vertices {
            if !out.contains(w) {
                out.push(w.clone());
            }
        }
        out
    }
}

pub fn enumerate_vertices(bounds: &UncertaintyBounds) -> PolytopeVertexSet {
    let thetas = bounds.theta_vertices();
    let omegas = bounds.omega_vertices();
    let vertices = thetas.iter().flat_map(|t| omegas.iter().map(move |w| (t.clone(), w.clone()))).collect();
    PolytopeVertexSet { vertices }
}

/// `Ā_p` at every vertex, grouped by mode.
pub fn vertex_matrices(
    family: &[LtiSubsystem],
    filter: &FilterSpec,
    vertices: &PolytopeVertexSet,
    kp: &[Matrix],
) -> Result<Vec<Vec<Matrix>>> {
    family
        .iter()
        .zip(kp)
        .map(|(sys, k)| vertices.vertices.iter().map(|(t, w)| Ok(build_augmented(sys, filter, t, w, k)?.a_bar)).collect())
        .collect()
}
