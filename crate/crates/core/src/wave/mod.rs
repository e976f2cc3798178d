//! Damped 2D wave equation in co-energy variables on triangular meshes:
//! mesh generation, exact-quadrature assembly, the sparse pH full-order
//! model and an energy-consistent time integrator.

mod assemble;
mod mesh;
mod time;

pub use assemble::{assemble, discrete_hamiltonian, fom_realization, sample_fom, FEMatrices, Field, WaveParams};
pub use mesh::{mesh_lshape, mesh_rectangle, Domain, Mesh};
pub use time::{step_midpoint, HamiltonianTrace, MidpointStepper, StepRecord, WaveState};
