//! Truncated qutrit ⊗ Fock state space and Hamiltonian assembly.
//!
//! Basis states `|k, n⟩` combine the atomic level `k ∈ {0, 1, 2}` with the
//! photon number `n ≤ n_max`. The excitation number `N = n + k` is conserved
//! by the bare Hamiltonian, so the basis is ordered by ascending `(N, k)`:
//! inside the subspace with `N` excitations the canonical order is
//! `|0, N⟩, |1, N-1⟩, |2, N-2⟩`, omitting states cut off by the photon
//! truncation. This fixed order makes dressed-state labels, file outputs and
//! tests reproducible.

use num_complex::Complex64 as C64;

use crate::error::{AdceError, Result};
use crate::modulation::{ModulationSpec, Target};
use crate::params::SystemParams;
use crate::OMEGA0;

/// One product state `|k, n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    /// Atomic level index, 0..=2.
    pub atom: usize,
    /// Fock index.
    pub photons: usize,
}

impl BasisState {
    /// Excitation number `N = n + k`.
    pub fn excitation(&self) -> usize {
        self.photons + self.atom
    }
}

/// Canonical truncated basis with per-subspace index lists.
#[derive(Debug, Clone)]
pub struct Basis {
    pub n_max: usize,
    states: Vec<BasisState>,
    /// `subspaces[n]` lists the global indices of the N = n members in
    /// canonical order; n runs to `n_max + 2`.
    subspaces: Vec<Vec<usize>>,
    /// Lookup table `atom * (n_max + 1) + photons -> global index`.
    index: Vec<usize>,
}

impl Basis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> BasisState {
        self.states[i]
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    /// Global index of `|atom, photons⟩` if it lies inside the truncation.
    pub fn index_of(&self, atom: usize, photons: usize) -> Option<usize> {
        if atom > 2 || photons > self.n_max {
            return None;
        }
        Some(self.index[atom * (self.n_max + 1) + photons])
    }

    /// Member indices of the `N`-excitation subspace, canonical order.
    pub fn subspace(&self, n: usize) -> &[usize] {
        self.subspaces.get(n).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Largest excitation number present (`n_max + 2`).
    pub fn max_excitation(&self) -> usize {
        self.subspaces.len() - 1
    }

    /// Subspace degeneracy `g(N)`; equals `min(N + 1, 3)` when the cutoff
    /// does not truncate the subspace.
    pub fn g(&self, n: usize) -> usize {
        self.subspace(n).len()
    }
}

/// Build the canonical basis for a photon cutoff `n_max >= 2`.
pub fn build_basis(n_max: usize) -> Result<Basis> {
    if n_max < 2 {
        return Err(AdceError::InvalidCutoff(n_max));
    }
    let mut states = Vec::with_capacity(3 * (n_max + 1));
    let mut subspaces = vec![Vec::new(); n_max + 3];
    for n in 0..=n_max + 2 {
        for atom in 0..=2usize {
            if atom > n {
                continue;
            }
            let photons = n - atom;
            if photons > n_max {
                continue;
            }
            subspaces[n].push(states.len());
            states.push(BasisState { atom, photons });
        }
    }
    let mut index = vec![usize::MAX; 3 * (n_max + 1)];
    for (i, s) in states.iter().enumerate() {
        index[s.atom * (n_max + 1) + s.photons] = i;
    }
    Ok(Basis {
        n_max,
        states,
        subspaces,
        index,
    })
}

/// Dense Hermitian operator over the canonical basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub dim: usize,
    /// Row-major entries.
    pub entries: Vec<C64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix {
            dim,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.entries[row * self.dim + col] = value;
    }

    /// Set the symmetric pair `(row, col)` and `(col, row)` to a real value.
    fn set_sym(&mut self, row: usize, col: usize, value: f64) {
        let v = C64::new(value, 0.0);
        self.set(row, col, v);
        self.set(col, row, v);
    }

    /// Largest `|H - H^dagger|` entry.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest entry magnitude connecting different excitation subspaces.
    pub fn max_off_block(&self, basis: &Basis) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            let nr = basis.state(r).excitation();
            for c in 0..self.dim {
                if basis.state(c).excitation() != nr {
                    worst = worst.max(self.get(r, c).norm());
                }
            }
        }
        worst
    }

    /// `y = M x` for a complex vector.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        for r in 0..self.dim {
            let row = &self.entries[r * self.dim..(r + 1) * self.dim];
            let mut acc = C64::new(0.0, 0.0);
            for (m, xv) in row.iter().zip(x) {
                acc += m * xv;
            }
            y[r] = acc;
        }
        y
    }
}

/// Bare Hamiltonian: cavity energy, atomic energies and the excitation-
/// conserving couplings `G_{0,k} (a sigma_{k+1,k} + a^dag sigma_{k,k+1})`.
/// Block-diagonal over the excitation subspaces.
pub fn hamiltonian_bare(params: &SystemParams, basis: &Basis) -> OperatorMatrix {
    let mut h = OperatorMatrix::zeros(basis.dim());
    for (i, s) in basis.states().iter().enumerate() {
        let e = s.photons as f64 * OMEGA0 + params.level_energy(s.atom);
        h.set(i, i, C64::new(e, 0.0));
    }
    for k in 0..2usize {
        let g = params.coupling(k);
        if g == 0.0 {
            continue;
        }
        // a sigma_{k+1,k} |k, n> = sqrt(n) |k+1, n-1>
        for n in 1..=basis.n_max {
            let from = basis.index_of(k, n);
            let to = basis.index_of(k + 1, n - 1);
            if let (Some(i), Some(j)) = (from, to) {
                h.set_sym(j, i, g * (n as f64).sqrt());
            }
        }
    }
    h
}

/// Full Hamiltonian at time `t`: instantaneous modulated parameters and both
/// rotating and counter-rotating couplings
/// `G_k(t) (a + a^dag)(sigma_{k+1,k} + sigma_{k,k+1})`.
pub fn hamiltonian_full(
    params: &SystemParams,
    spec: &ModulationSpec,
    t: f64,
    basis: &Basis,
) -> OperatorMatrix {
    let e1 = spec.value(Target::E1, params.e1, t);
    let e2 = spec.value(Target::E2, params.e2, t);
    let g0 = spec.value(Target::G0, params.g00, t);
    let g1 = spec.value(Target::G1, params.g01, t);

    let mut h = OperatorMatrix::zeros(basis.dim());
    for (i, s) in basis.states().iter().enumerate() {
        let atom_e = match s.atom {
            0 => 0.0,
            1 => e1,
            _ => e2,
        };
        h.set(i, i, C64::new(s.photons as f64 * OMEGA0 + atom_e, 0.0));
    }
    for (k, g) in [(0usize, g0), (1usize, g1)] {
        if g == 0.0 {
            continue;
        }
        for n in 1..=basis.n_max {
            // rotating: a sigma_{k+1,k} |k, n> = sqrt(n) |k+1, n-1>
            if let (Some(i), Some(j)) = (basis.index_of(k, n), basis.index_of(k + 1, n - 1)) {
                h.set_sym(j, i, g * (n as f64).sqrt());
            }
            // counter-rotating: a sigma_{k,k+1} |k+1, n> = sqrt(n) |k, n-1>
            if let (Some(i), Some(j)) = (basis.index_of(k + 1, n), basis.index_of(k, n - 1)) {
                h.set_sym(j, i, g * (n as f64).sqrt());
            }
        }
    }
    h
}
