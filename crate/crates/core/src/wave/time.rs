use serde::{Deserialize, Serialize};

use super::assemble::FEMatrices;
use crate::error::{Error, Result};
use crate::linalg::{SparseLu, SparseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub e_q: Vec<f64>,
    pub e_p: Vec<f64>,
}

impl WaveState {
    pub fn zeros(fem: &FEMatrices) -> Self {
        Self { e_q: vec![0.0; fem.n_q()], e_p: vec![0.0; fem.n_p()] }
    }

    fn stacked(&self) -> Vec<f64> {
        self.e_q.iter().chain(&self.e_p).copied().collect()
    }
}

/// Energy bookkeeping of one step. Powers are evaluated at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub h_before: f64,
    pub h_after: f64,
    /// `(H₁ − H₀)/dt`, computed as `(z₁ − z₀)ᵀ M z_mid / dt`.
    pub rate: f64,
    /// `u_∂ᵀ M_∂ y_∂`.
    pub supplied: f64,
    /// `e_pᵀ M_ε e_p`.
    pub dissipated: f64,
}

impl StepRecord {
    /// `|rate − (supplied − dissipated)|`.
    pub fn balance_residual(&self) -> f64 {
        (self.rate - (self.supplied - self.dissipated)).abs()
    }

    pub fn balance_scale(&self) -> f64 {
        self.rate.abs().max(self.supplied.abs()).max(self.dissipated.abs())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HamiltonianTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub supplied_power: Vec<f64>,
    pub dissipated_power: Vec<f64>,
}

/// Implicit midpoint rule for `M ż = (J − R) z + [0; B] u` with a factored
/// step matrix `M − dt/2 (J − R)`.
pub struct MidpointStepper<'a> {
    fem: &'a FEMatrices,
    dt: f64,
    mass: SparseMatrix,
    flow: SparseMatrix,
    step_lu: SparseLu,
    bnd_lu: SparseLu,
}

impl<'a> MidpointStepper<'a> {
    pub fn new(fem: &'a FEMatrices, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
        }
        let ph = super::assemble::fom_realization(fem)?;
        let mass = ph.m.to_sparse();
        let flow = ph.state_matrix()?.to_sparse();
        let lhs = mass.axpby(1.0, &flow, -0.5 * dt)?;
        Ok(Self { fem, dt, step_lu: SparseLu::new(&lhs)?, bnd_lu: SparseLu::new(&fem.m_bnd)?, mass, flow })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step with input `u` held over the step; returns the new state,
    /// the midpoint output `y_∂` and the energy record.
    pub fn step(&self, state: &WaveState, u: &[f64]) -> Result<(WaveState, Vec<f64>, StepRecord)> {
        let fem = self.fem;
        let (nq, np) = (fem.n_q(), fem.n_p());
        if state.e_q.len() != nq || state.e_p.len() != np || u.len() != fem.n_bnd() {
            return Err(Error::Dimension("state or input does not match the discretization".into()));
        }
        let z0 = state.stacked();
        let mz = self.mass.mul_vec(&z0);
        let kz = self.flow.mul_vec(&z0);
        let bu = fem.b.mul_vec(u);
        let mut rhs: Vec<f64> = (0..z0.len()).map(|i| mz[i] + 0.5 * self.dt * kz[i]).collect();
        for i in 0..np {
            rhs[nq + i] += self.dt * bu[i];
        }
        let z1 = self.step_lu.solve(&rhs)?;
        let zm: Vec<f64> = z0.iter().zip(&z1).map(|(a, b)| 0.5 * (a + b)).collect();
        let dz: Vec<f64> = z0.iter().zip(&z1).map(|(a, b)| b - a).collect();
        let mzm = self.mass.mul_vec(&zm);
        let rate = dz.iter().zip(&mzm).map(|(a, b)| a * b).sum::<f64>() / self.dt;
        let epm = &zm[nq..];
        let bte = fem.b.transpose().mul_vec(epm);
        let y = self.bnd_lu.solve(&bte)?;
        let supplied = u.iter().zip(&bte).map(|(a, b)| a * b).sum();
        let dissipated = fem.m_eps.quad_form(epm);
        let h = |z: &[f64]| 0.5 * self.mass.quad_form(z);
        let next = WaveState { e_q: z1[..nq].to_vec(), e_p: z1[nq..].to_vec() };
        Ok((next, y, StepRecord { h_before: h(&z0), h_after: h(&z1), rate, supplied, dissipated }))
    }

    /// `steps` steps from `state` with input `u(t_mid)`.
    pub fn run(
        &self,
        state: &WaveState,
        steps: usize,
        input: impl Fn(f64) -> Vec<f64>,
    ) -> Result<(WaveState, HamiltonianTrace, Vec<StepRecord>)> {
        let mut z = state.clone();
        let mut trace = HamiltonianTrace::default();
        let mut records = Vec::with_capacity(steps);
        for k in 0..steps {
            let t = k as f64 * self.dt;
            let (next, _, rec) = self.step(&z, &input(t + 0.5 * self.dt))?;
            if k == 0 {
                trace.times.push(t);
                trace.values.push(rec.h_before);
            }
            trace.times.push(t + self.dt);
            trace.values.push(rec.h_after);
            trace.supplied_power.push(rec.supplied);
            trace.dissipated_power.push(rec.dissipated);
            records.push(rec);
            z = next;
        }
        Ok((z, trace, records))
    }
}

/// Single implicit-midpoint step (factors the step matrix each call).
pub fn step_midpoint(fem: &FEMatrices, state: &WaveState, u: &[f64], dt: f64) -> Result<(WaveState, Vec<f64>)> {
    let (next, y, _) = MidpointStepper::new(fem, dt)?.step(state, u)?;
    Ok((next, y))
}
