//! Dirac matrices in the Dirac–Pauli representation, the model Hamiltonian
//! `H = α_x p + β + Δ β Σ_x` (natural units) and its eigensystem, obtained
//! both by numeric diagonalization and from closed-form helicity blocks.

use crate::config::{ConfigError, ParticleConfig};
use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub type Matrix4c = Matrix4<Complex64>;
pub type Spinor = Vector4<Complex64>;

/// Components smaller than this are skipped when fixing the spinor phase.
const PHASE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("matrix is not Hermitian (‖H − H†‖ = {0:e})")]
    NotHermitian(f64),
    #[error("could not assign (branch, helicity) labels: {0}")]
    Labeling(String),
    #[error("dimension mismatch: operator is {rows}×{cols}, spinors have {bra} and {ket} entries")]
    Dimension {
        rows: usize,
        cols: usize,
        bra: usize,
        ket: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// Energy branch `l` and helicity `s` of a plane-wave eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub branch: Branch,
    pub spin: Spin,
}

impl Label {
    pub const PLUS_UP: Label = Label::new(Branch::Positive, Spin::Up);
    pub const PLUS_DOWN: Label = Label::new(Branch::Positive, Spin::Down);
    pub const MINUS_UP: Label = Label::new(Branch::Negative, Spin::Up);
    pub const MINUS_DOWN: Label = Label::new(Branch::Negative, Spin::Down);

    /// Canonical storage order used by every `[T; 4]` indexed by label.
    pub const ALL: [Label; 4] = [
        Label::PLUS_UP,
        Label::PLUS_DOWN,
        Label::MINUS_UP,
        Label::MINUS_DOWN,
    ];

    pub const fn new(branch: Branch, spin: Spin) -> Self {
        Label { branch, spin }
    }

    pub fn index(self) -> usize {
        match (self.branch, self.spin) {
            (Branch::Positive, Spin::Up) => 0,
            (Branch::Positive, Spin::Down) => 1,
            (Branch::Negative, Spin::Up) => 2,
            (Branch::Negative, Spin::Down) => 3,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = match self.branch {
            Branch::Positive => '+',
            Branch::Negative => '-',
        };
        let s = match self.spin {
            Spin::Up => "up",
            Spin::Down => "down",
        };
        write!(f, "{l}{s}")
    }
}

/// The fixed operator set. Spin operators are in units of ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracOperatorSet {
    pub alpha_x: Matrix4c,
    pub alpha_y: Matrix4c,
    pub alpha_z: Matrix4c,
    pub beta: Matrix4c,
    pub sigma_x_big: Matrix4c,
    pub sigma_y_big: Matrix4c,
    pub sigma_z_big: Matrix4c,
    pub spin_x: Matrix4c,
    pub spin_y: Matrix4c,
    pub spin_z: Matrix4c,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli() -> [[[Complex64; 2]; 2]; 3] {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        [[o, one], [one, o]],
        [[o, -i], [i, o]],
        [[one, o], [o, -one]],
    ]
}

fn block(tl: [[Complex64; 2]; 2], tr: [[Complex64; 2]; 2], bl: [[Complex64; 2]; 2], br: [[Complex64; 2]; 2]) -> Matrix4c {
    Matrix4c::from_fn(|r, col| {
        let b = match (r < 2, col < 2) {
            (true, true) => &tl,
            (true, false) => &tr,
            (false, true) => &bl,
            (false, false) => &br,
        };
        b[r % 2][col % 2]
    })
}

pub fn build_operators() -> DiracOperatorSet {
    let zero = [[c(0.0, 0.0); 2]; 2];
    let id = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    let neg_id = [[c(-1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
    let [sx, sy, sz] = pauli();
    let alpha = |s| block(zero, s, s, zero);
    let big_sigma = |s| block(s, zero, zero, s);
    let sigma_x_big = big_sigma(sx);
    let sigma_y_big = big_sigma(sy);
    let sigma_z_big = big_sigma(sz);
    DiracOperatorSet {
        alpha_x: alpha(sx),
        alpha_y: alpha(sy),
        alpha_z: alpha(sz),
        beta: block(id, zero, zero, neg_id),
        spin_x: sigma_x_big.scale(0.5),
        spin_y: sigma_y_big.scale(0.5),
        spin_z: sigma_z_big.scale(0.5),
        sigma_x_big,
        sigma_y_big,
        sigma_z_big,
    }
}

/// `H = α_x p + β + Δ β Σ_x` with `p` in units of `mc` and energies in `mc²`.
pub fn build_hamiltonian(p: f64, cfg: &ParticleConfig) -> Result<Matrix4c, AlgebraError> {
    cfg.validate()?;
    let ops = build_operators();
    let delta = cfg.delta_natural();
    Ok(ops.alpha_x.scale(p) + ops.beta + (ops.beta * ops.sigma_x_big).scale(delta))
}

/// Four labelled energies and eigenspinors at one momentum (natural units).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub p: f64,
    /// Indexed by [`Label::index`].
    pub energies: [f64; 4],
    pub spinors: [Spinor; 4],
    /// `(mc² + Δ, mc² − Δ)`.
    pub rest_energies: (f64, f64),
}

impl EigenSystem {
    pub fn energy(&self, label: Label) -> f64 {
        self.energies[label.index()]
    }

    pub fn spinor(&self, label: Label) -> &Spinor {
        &self.spinors[label.index()]
    }
}

/// Rotate so that the first component above [`PHASE_TOL`] is real and positive.
pub fn fix_phase(v: &Spinor) -> Spinor {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() > PHASE_TOL * scale) {
        Some(z) => v * (z.conj() / z.norm()),
        None => *v,
    }
}

fn frobenius(m: &Matrix4c) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Numeric diagonalization. Degenerate eigenvalue clusters are resolved by
/// diagonalizing Σ_x inside the cluster, so labels stay well defined at
/// `Δ = 0` and `p = 0`.
pub fn eigensystem_numeric(h: &Matrix4c, ops: &DiracOperatorSet) -> Result<EigenSystem, AlgebraError> {
    let norm = frobenius(h).max(1.0);
    let skew = frobenius(&(h - h.adjoint()));
    if skew > 1e-12 * norm {
        return Err(AlgebraError::NotHermitian(skew));
    }
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);

    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let cluster_tol = 1e-9 * norm;
    let mut vectors: Vec<Spinor> = Vec::with_capacity(4);
    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4
            && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= cluster_tol
        {
            end += 1;
        }
        let basis: Vec<Spinor> = order[start..end]
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect();
        if basis.len() == 1 {
            vectors.push(basis[0]);
        } else {
            let k = basis.len();
            let projected = DMatrix::from_fn(k, k, |r, col| {
                basis[r].dotc(&(ops.sigma_x_big * basis[col]))
            });
            let projected = (&projected + projected.adjoint()).scale(0.5);
            let inner = SymmetricEigen::new(projected);
            for col in 0..k {
                let mut v = Spinor::zeros();
                for (r, b) in basis.iter().enumerate() {
                    v += b * inner.eigenvectors[(r, col)];
                }
                vectors.push(v.normalize());
            }
        }
        start = end;
    }

    let mut energies = [f64::NAN; 4];
    let mut spinors = [Spinor::zeros(); 4];
    let mut filled = [false; 4];
    for v in vectors {
        let energy = v.dotc(&(h * v)).re;
        let helicity = v.dotc(&(ops.sigma_x_big * v)).re;
        if (helicity.abs() - 1.0).abs() > 1e-10 {
            return Err(AlgebraError::Labeling(format!(
                "eigenvector has helicity {helicity}, not ±1"
            )));
        }
        let branch = if energy > 0.0 { Branch::Positive } else { Branch::Negative };
        let spin = if helicity > 0.0 { Spin::Up } else { Spin::Down };
        let idx = Label::new(branch, spin).index();
        if filled[idx] {
            return Err(AlgebraError::Labeling(format!(
                "two eigenvectors carry label {}",
                Label::new(branch, spin)
            )));
        }
        filled[idx] = true;
        energies[idx] = energy;
        spinors[idx] = fix_phase(&v);
    }

    // p recovered from the α_x coefficient: Tr(α_x H)/4.
    let p = (ops.alpha_x * h).trace().re / 4.0;
    let mass_term = (ops.beta * h).trace().re / 4.0;
    let split = (ops.beta * ops.sigma_x_big * h).trace().re / 4.0;
    Ok(EigenSystem {
        p,
        energies,
        spinors,
        rest_energies: (mass_term + split, mass_term - split),
    })
}

/// Closed-form eigensystem from the two 2×2 helicity blocks
/// `[[M_s, s·p], [s·p, −M_s]]` with `M_s = 1 + s·Δ`.
pub fn eigensystem_analytic(p: f64, cfg: &ParticleConfig) -> Result<EigenSystem, AlgebraError> {
    cfg.validate()?;
    let delta = cfg.delta_natural();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut energies = [0.0; 4];
    let mut spinors = [Spinor::zeros(); 4];
    for spin in [Spin::Up, Spin::Down] {
        let s = spin.sign();
        let m = 1.0 + s * delta;
        let q = s * p;
        let e = q.hypot(m);
        let n = (2.0 * e * (e + m)).sqrt();
        let chi = [inv_sqrt2, s * inv_sqrt2];
        let embed = |upper: f64, lower: f64| {
            Spinor::new(
                c(upper * chi[0], 0.0),
                c(upper * chi[1], 0.0),
                c(lower * chi[0], 0.0),
                c(lower * chi[1], 0.0),
            )
        };
        let plus = Label::new(Branch::Positive, spin).index();
        let minus = Label::new(Branch::Negative, spin).index();
        energies[plus] = e;
        energies[minus] = -e;
        spinors[plus] = fix_phase(&embed((e + m) / n, q / n));
        spinors[minus] = fix_phase(&embed(-q / n, (e + m) / n));
    }
    Ok(EigenSystem {
        p,
        energies,
        spinors,
        rest_energies: (1.0 + delta, 1.0 - delta),
    })
}

/// `⟨bra|op|ket⟩` for operators and spinors of any matching dimension.
pub fn matrix_element(op: &DMatrix<Complex64>, bra: &[Complex64], ket: &[Complex64]) -> Result<Complex64, AlgebraError> {
    if op.nrows() != bra.len() || op.ncols() != ket.len() {
        return Err(AlgebraError::Dimension {
            rows: op.nrows(),
            cols: op.ncols(),
            bra: bra.len(),
            ket: ket.len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, b) in bra.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (col, k) in ket.iter().enumerate() {
            row += op[(r, col)] * k;
        }
        acc += b.conj() * row;
    }
    Ok(acc)
}

/// Fixed-size shortcut used on hot paths.
pub fn element(op: &Matrix4c, bra: &Spinor, ket: &Spinor) -> Complex64 {
    bra.dotc(&(op * ket))
}
