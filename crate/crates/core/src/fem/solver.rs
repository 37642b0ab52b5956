use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::LltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, Par, Side};

use crate::mesh::TetMesh;
use crate::parallel;
use crate::Vec3;

use super::element::{ElementState, TetElement};
use super::{MaterialField, PressureProgram, SolverError, TrajectorySet};

const UNUSED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kinematics {
    /// Element rotations removed by polar decomposition.
    Corotational,
    /// Small-strain elasticity on the rest configuration.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Newton stops once the residual drops below this fraction of the
    /// external load norm at the start of the increment.
    pub rel_tolerance: f64,
    /// Increments whose load is below this fraction of the peak load are
    /// held to the tolerance of the peak load instead.
    pub load_floor: f64,
    pub max_iterations: usize,
    /// Depth of recursive halving of a load increment that fails.
    pub max_bisections: usize,
    pub kinematics: Kinematics,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-8,
            load_floor: 1e-2,
            max_iterations: 50,
            max_bisections: 4,
            kinematics: Kinematics::Corotational,
        }
    }
}

/// Loads scaled by one scalar load parameter: follower pressure on
/// `pressure_faces` (area normal pointing away from the solid) and fixed
/// nodal forces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadCase {
    pub pressure_faces: Vec<[usize; 3]>,
    pub dead_loads: Vec<(usize, Vec3)>,
}

impl LoadCase {
    /// Cavity pressure on every cavity face of the mesh.
    pub fn cavity_pressure(mesh: &TetMesh) -> Self {
        Self {
            pressure_faces: mesh
                .cavity_faces
                .iter()
                .map(|f| mesh.face_vertices(f))
                .collect(),
            dead_loads: Vec::new(),
        }
    }
}

/// Sparsity pattern, constraint map and symbolic factorization for one
/// mesh topology. Shared read-only between all solves on that mesh.
pub struct Layout {
    n_vertices: usize,
    /// Free equation number per DOF, `UNUSED` when constrained.
    equation: Vec<u32>,
    n_free: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// Per element, value slot of each upper-triangle local pair.
    scatter: Vec<[u32; 78]>,
    symbolic: SymbolicCholesky<usize>,
}

impl std::fmt::Debug for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Layout")
            .field("n_vertices", &self.n_vertices)
            .field("n_free", &self.n_free)
            .field("nnz", &self.row_idx.len())
            .finish()
    }
}

fn local_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..12).flat_map(|i| (i..12).map(move |j| (i, j)))
}

impl Layout {
    /// `fixed[d]` marks constrained DOF `d = 3 * vertex + axis`.
    pub fn new(
        n_vertices: usize,
        tets: &[[usize; 4]],
        fixed: &[bool],
    ) -> Result<Self, SolverError> {
        assert_eq!(fixed.len(), 3 * n_vertices, "one flag per DOF");
        if !fixed.iter().any(|&f| f) {
            return Err(SolverError::Singular(
                "no constrained degrees of freedom".into(),
            ));
        }
        let mut equation = vec![UNUSED; 3 * n_vertices];
        let mut n_free = 0usize;
        for (d, &f) in fixed.iter().enumerate() {
            if !f {
                equation[d] = n_free as u32;
                n_free += 1;
            }
        }
        if n_free == 0 {
            return Err(SolverError::Singular(
                "every degree of freedom is constrained".into(),
            ));
        }
        let dofs = |tet: &[usize; 4]| -> [u32; 12] {
            std::array::from_fn(|l| equation[3 * tet[l / 3] + l % 3])
        };

        let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n_free];
        for tet in tets {
            let eq = dofs(tet);
            for (i, j) in local_pairs() {
                let (a, b) = (eq[i], eq[j]);
                if a != UNUSED && b != UNUSED {
                    let (r, c) = (a.min(b) as usize, a.max(b) as usize);
                    columns[c].push(r);
                }
            }
        }
        for c in 0..n_free {
            columns[c].push(c);
        }
        let mut col_ptr = Vec::with_capacity(n_free + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for col in &mut columns {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        drop(columns);

        let scatter = tets
            .iter()
            .map(|tet| {
                let eq = dofs(tet);
                let mut slots = [UNUSED; 78];
                for (k, (i, j)) in local_pairs().enumerate() {
                    let (a, b) = (eq[i], eq[j]);
                    if a == UNUSED || b == UNUSED {
                        continue;
                    }
                    let (r, c) = (a.min(b) as usize, a.max(b) as usize);
                    let rows = &row_idx[col_ptr[c]..col_ptr[c + 1]];
                    let pos = rows
                        .binary_search(&r)
                        .expect("pattern holds every element pair");
                    slots[k] = (col_ptr[c] + pos) as u32;
                }
                slots
            })
            .collect();

        let pattern =
            SymbolicSparseColMatRef::new_checked(n_free, n_free, &col_ptr, None, &row_idx);
        let symbolic = factorize_symbolic_cholesky(
            pattern,
            Side::Upper,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| SolverError::Singular(format!("symbolic factorization failed: {e:?}")))?;

        Ok(Self {
            n_vertices,
            equation,
            n_free,
            col_ptr,
            row_idx,
            scatter,
            symbolic,
        })
    }

    /// Pattern for a mesh with its fixed vertices clamped in all directions.
    pub fn for_mesh(mesh: &TetMesh) -> Result<Self, SolverError> {
        let mut fixed = vec![false; 3 * mesh.vertices.len()];
        for &v in &mesh.fixed_vertices {
            fixed[3 * v..3 * v + 3].fill(true);
        }
        Self::new(mesh.vertices.len(), &mesh.tets, &fixed)
    }

    pub fn free_dofs(&self) -> usize {
        self.n_free
    }

    pub fn nonzeros(&self) -> usize {
        self.row_idx.len()
    }
}

/// Solver bookkeeping of one quasi-static run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub increments: usize,
    pub bisections: usize,
    pub newton_iterations: usize,
}

enum NewtonFailure {
    Diverged(f64),
    Inverted,
    NotPositive,
}

/// Discretized problem: elements with their moduli, loads and constraints.
pub struct System {
    rest: Vec<Vec3>,
    elements: Vec<TetElement>,
    loads: LoadCase,
    layout: Arc<Layout>,
    settings: SolverSettings,
    /// Free-DOF external force norm at unit load on the rest state.
    unit_load_norm: f64,
    /// Smallest residual norm resolvable in floating point: positions of
    /// magnitude `|X|` times the stiffest diagonal, over all free DOFs.
    roundoff_floor: f64,
}

impl System {
    pub fn new(
        vertices: &[Vec3],
        tets: &[[usize; 4]],
        e_per_tet: &[f64],
        nu: f64,
        loads: LoadCase,
        layout: Arc<Layout>,
        settings: SolverSettings,
    ) -> Result<Self, SolverError> {
        if e_per_tet.len() != tets.len() {
            return Err(SolverError::Material(format!(
                "{} moduli for {} elements",
                e_per_tet.len(),
                tets.len()
            )));
        }
        if layout.n_vertices != vertices.len() || layout.scatter.len() != tets.len() {
            return Err(SolverError::Singular(
                "layout was built for a different mesh".into(),
            ));
        }
        let elements = tets
            .iter()
            .zip(e_per_tet)
            .enumerate()
            .map(|(t, (tet, &e))| {
                TetElement::new(*tet, tet.map(|v| vertices[v]), e, nu)
                    .ok_or_else(|| SolverError::Singular(format!("element {t} is degenerate")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut system = Self {
            rest: vertices.to_vec(),
            elements,
            loads,
            layout,
            settings,
            unit_load_norm: 0.0,
            roundoff_floor: 0.0,
        };
        system.unit_load_norm = norm(&system.free_part(&system.external_force(vertices, 1.0)));
        let mut diag = vec![0.0; 3 * vertices.len()];
        for e in &system.elements {
            for l in 0..12 {
                diag[3 * e.nodes[l / 3] + l % 3] += e.k0[(l, l)];
            }
        }
        let stiffest = diag.iter().fold(0.0f64, |a, &b| a.max(b));
        let extent = vertices.iter().fold(0.0f64, |a, v| a.max(v.amax()));
        system.roundoff_floor =
            f64::EPSILON * extent * stiffest * (system.layout.n_free as f64).sqrt();
        Ok(system)
    }

    pub fn from_mesh(
        mesh: &TetMesh,
        material: &MaterialField,
        layout: Arc<Layout>,
        settings: SolverSettings,
    ) -> Result<Self, SolverError> {
        Self::new(
            &mesh.vertices,
            &mesh.tets,
            &material.e_per_tet,
            material.poisson,
            LoadCase::cavity_pressure(mesh),
            layout,
            settings,
        )
    }

    pub fn rest_positions(&self) -> &[Vec3] {
        &self.rest
    }

    fn external_force(&self, x: &[Vec3], load: f64) -> Vec<f64> {
        let mut f = vec![0.0; 3 * x.len()];
        if load == 0.0 {
            return f;
        }
        for face in &self.loads.pressure_faces {
            let [a, b, c] = face.map(|v| x[v]);
            let push = -load / 6.0 * (b - a).cross(&(c - a));
            for &v in face {
                for d in 0..3 {
                    f[3 * v + d] += push[d];
                }
            }
        }
        for (v, force) in &self.loads.dead_loads {
            for d in 0..3 {
                f[3 * v + d] += load * force[d];
            }
        }
        f
    }

    fn free_part(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.n_free];
        for (d, &eq) in self.layout.equation.iter().enumerate() {
            if eq != UNUSED {
                out[eq as usize] = full[d];
            }
        }
        out
    }

    fn element_states(&self, x: &[Vec3]) -> Option<Vec<ElementState>> {
        let corotational = self.settings.kinematics == Kinematics::Corotational;
        let states = parallel::map(&self.elements, |e| e.evaluate(x, corotational));
        states.into_iter().collect()
    }

    /// Free-DOF residual `f_ext - f_int` and optionally the upper triangle
    /// of the tangent. Scatter runs in element order, so sums are
    /// reproducible regardless of thread count.
    fn assemble(&self, x: &[Vec3], load: f64, values: Option<&mut [f64]>) -> Option<Vec<f64>> {
        let states = self.element_states(x)?;
        let mut residual = self.external_force(x, load);
        for (e, s) in self.elements.iter().zip(&states) {
            for l in 0..12 {
                residual[3 * e.nodes[l / 3] + l % 3] -= s.force[l];
            }
        }
        if let Some(values) = values {
            values.fill(0.0);
            for (slots, s) in self.layout.scatter.iter().zip(&states) {
                for (k, (i, j)) in local_pairs().enumerate() {
                    let slot = slots[k];
                    if slot != UNUSED {
                        values[slot as usize] += s.tangent[(i, j)];
                    }
                }
            }
        }
        Some(self.free_part(&residual))
    }

    /// Newton iteration from `start` to equilibrium at `load`.
    fn newton(
        &self,
        start: &[Vec3],
        load: f64,
        peak: f64,
        iterations: &mut usize,
    ) -> Result<Vec<Vec3>, NewtonFailure> {
        let layout = &*self.layout;
        let n = layout.n_free;
        let reference = norm(&self.free_part(&self.external_force(start, load)));
        let floor = self.settings.load_floor * peak.abs() * self.unit_load_norm;
        let threshold =
            (self.settings.rel_tolerance * reference.max(floor)).max(self.roundoff_floor);

        let mut x = start.to_vec();
        let mut values = vec![0.0; layout.row_idx.len()];
        let mut l_values = vec![0.0; layout.symbolic.len_val()];
        let mut mem = MemBuffer::new(
            layout
                .symbolic
                .factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default())
                .or(layout.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq)),
        );
        let pattern =
            SymbolicSparseColMatRef::new_checked(n, n, &layout.col_ptr, None, &layout.row_idx);

        let mut residual = self
            .assemble(&x, load, Some(&mut values))
            .ok_or(NewtonFailure::Inverted)?;
        let mut r_norm = norm(&residual);
        for _ in 0..self.settings.max_iterations {
            if r_norm <= threshold {
                return Ok(x);
            }
            if !r_norm.is_finite() {
                return Err(NewtonFailure::Diverged(r_norm));
            }
            *iterations += 1;
            let matrix = SparseColMatRef::new(pattern, &values);
            let llt = layout
                .symbolic
                .factorize_numeric_llt(
                    &mut l_values,
                    matrix,
                    Side::Upper,
                    LltRegularization::default(),
                    Par::Seq,
                    MemStack::new(&mut mem),
                    Default::default(),
                )
                .map_err(|_| NewtonFailure::NotPositive)?;
            let mut step = residual.clone();
            llt.solve_in_place_with_conj(
                Conj::No,
                faer::MatMut::from_column_major_slice_mut(&mut step, n, 1),
                Par::Seq,
                MemStack::new(&mut mem),
            );

            // Halve the update while it would invert an element.
            let mut scale = 1.0;
            let mut next = None;
            for _ in 0..8 {
                let trial = self.displaced(&x, &step, scale);
                if let Some(r) = self.assemble(&trial, load, Some(&mut values)) {
                    next = Some((trial, r));
                    break;
                }
                scale *= 0.5;
            }
            let (trial, r) = next.ok_or(NewtonFailure::Inverted)?;
            x = trial;
            residual = r;
            r_norm = norm(&residual);
        }
        if r_norm <= threshold {
            Ok(x)
        } else {
            Err(NewtonFailure::Diverged(r_norm))
        }
    }

    fn displaced(&self, x: &[Vec3], step: &[f64], scale: f64) -> Vec<Vec3> {
        let mut out = x.to_vec();
        for (d, &eq) in self.layout.equation.iter().enumerate() {
            if eq != UNUSED {
                out[d / 3][d % 3] += scale * step[eq as usize];
            }
        }
        out
    }

    /// Equilibrium at `load`, reached in one increment from the rest state.
    pub fn solve_static(&self, load: f64) -> Result<Vec<Vec3>, SolverError> {
        let mut stats = SolveStats::default();
        self.advance(&self.rest, 0.0, load, 0, load, &mut stats)
    }

    /// Moves the equilibrium at load `from` (positions `start`) to load
    /// `to`, halving the increment on failure.
    fn advance(
        &self,
        start: &[Vec3],
        from: f64,
        to: f64,
        step: usize,
        peak: f64,
        stats: &mut SolveStats,
    ) -> Result<Vec<Vec3>, SolverError> {
        self.advance_depth(start, from, to, step, peak, 0, stats)
    }

    #[allow(clippy::too_many_arguments)]
    fn advance_depth(
        &self,
        start: &[Vec3],
        from: f64,
        to: f64,
        step: usize,
        peak: f64,
        depth: usize,
        stats: &mut SolveStats,
    ) -> Result<Vec<Vec3>, SolverError> {
        stats.increments += 1;
        let failure = match self.newton(start, to, peak, &mut stats.newton_iterations) {
            Ok(x) => return Ok(x),
            Err(f) => f,
        };
        let at_rest = from == 0.0 && start == self.rest.as_slice();
        if let NewtonFailure::NotPositive = failure {
            if at_rest {
                return Err(SolverError::Singular(
                    "tangent is not positive definite at the rest state".into(),
                ));
            }
        }
        if depth < self.settings.max_bisections {
            stats.bisections += 1;
            let mid = 0.5 * (from + to);
            let half = self.advance_depth(start, from, mid, step, peak, depth + 1, stats)?;
            return self.advance_depth(&half, mid, to, step, peak, depth + 1, stats);
        }
        let residual = match failure {
            NewtonFailure::Diverged(r) => r,
            NewtonFailure::Inverted | NewtonFailure::NotPositive => f64::NAN,
        };
        Err(SolverError::NonConvergence {
            step,
            pressure: to,
            residual,
        })
    }

    /// Equilibria at the `k` uniformly spaced normalized times of the
    /// program; returns the positions of `monitored` at each.
    pub fn solve_program(
        &self,
        program: &PressureProgram,
        k: usize,
        monitored: &[usize],
    ) -> Result<(TrajectorySet, SolveStats), SolverError> {
        if k < 2 {
            return Err(SolverError::StepCount(k));
        }
        let mut stats = SolveStats::default();
        let times: Vec<f64> = (0..k).map(|m| m as f64 / (k - 1) as f64).collect();
        let mut positions = Vec::with_capacity(k);
        let mut x = self.rest.clone();
        let mut load = 0.0;
        let peak = program.max_abs_pressure();
        for (m, &t) in times.iter().enumerate() {
            let target = program.at_normalized(t);
            if target != load || m == 0 {
                x = self.advance(&x, load, target, m, peak, &mut stats)?;
                load = target;
            }
            positions.push(monitored.iter().map(|&v| x[v]).collect());
        }
        let traj = TrajectorySet::new(times, positions)?;
        Ok((traj, stats))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Builds the system for `mesh` and records its monitored vertices at `k`
/// uniformly spaced normalized times of `program`.
pub fn solve_quasistatic(
    mesh: &TetMesh,
    material: &MaterialField,
    program: &PressureProgram,
    k: usize,
    layout: Arc<Layout>,
    settings: SolverSettings,
) -> Result<TrajectorySet, SolverError> {
    if k < 2 {
        return Err(SolverError::StepCount(k));
    }
    let system = System::from_mesh(mesh, material, layout, settings)?;
    let (traj, stats) = system.solve_program(program, k, &mesh.monitored_vertices)?;
    log::debug!(
        "solved {} steps: {} increments, {} bisections, {} Newton iterations",
        k,
        stats.increments,
        stats.bisections,
        stats.newton_iterations
    );
    Ok(traj)
}
