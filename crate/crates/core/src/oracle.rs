//! Numerically exact references for the closed-form shifts.
//!
//! Two problems are solved by dense symmetric diagonalization:
//!
//! * the coupled gate/spectator pair as two truncated anharmonic oscillators
//!   with exchange coupling J(a_G a_S† + h.c.), from which dressed energies
//!   give ζ1 and ζ2 to all orders in J;
//! * a single transmon 4E_C n² − E_J cos φ in the charge basis, fitted to a
//!   measured frequency and anharmonicity to predict the sextic correction β.

use nalgebra::DMatrix;

use crate::device::TransmonSpec;
use crate::dispersive::ShiftTriple;
use crate::linalg::eigh;
use crate::{Error, Result};

pub const DEFAULT_DIMS: usize = 4;

/// Dressed states whose best overlap with a bare state falls to this value
/// or below are reported as hybridized.
pub const HYBRIDIZATION_THRESHOLD: f64 = 0.5;

/// Two coupled oscillators in the bare product basis |n_G n_S⟩, index
/// `n_G * dims + n_S`. Entries in MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct PairHamiltonian {
    pub dims: usize,
    pub matrix: DMatrix<f64>,
}

impl PairHamiltonian {
    pub fn index(&self, n_g: usize, n_s: usize) -> usize {
        n_g * self.dims + n_s
    }

    pub fn entry(&self, bra: (usize, usize), ket: (usize, usize)) -> f64 {
        self.matrix[(self.index(bra.0, bra.1), self.index(ket.0, ket.1))]
    }
}

pub fn build_pair_hamiltonian(
    g: &TransmonSpec,
    s: &TransmonSpec,
    j: f64,
    dims: usize,
) -> Result<PairHamiltonian> {
    if dims < 3 {
        return Err(Error::InvalidArgument(format!(
            "pair Hamiltonian needs at least 3 levels per qubit, got {dims}"
        )));
    }
    let n = dims * dims;
    let mut m = DMatrix::zeros(n, n);
    for ng in 0..dims {
        for ns in 0..dims {
            let i = ng * dims + ns;
            m[(i, i)] = g.level(ng) + s.level(ns);
            // a_G† a_S: |ng, ns⟩ → √(ng+1)√ns |ng+1, ns−1⟩
            if ng + 1 < dims && ns >= 1 {
                let k = (ng + 1) * dims + (ns - 1);
                let v = j * ((ng + 1) as f64).sqrt() * (ns as f64).sqrt();
                m[(k, i)] = v;
                m[(i, k)] = v;
            }
        }
    }
    Ok(PairHamiltonian { dims, matrix: m })
}

/// Dressed energies labelled by the bare state they overlap most.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedSpectrum {
    pub dims: usize,
    /// Dressed energy for each bare label (index `n_G * dims + n_S`), MHz.
    pub energies: Vec<f64>,
    /// |⟨bare|dressed⟩|² of the assigned pair.
    pub overlaps: Vec<f64>,
    /// Dressed eigenvector (bare-basis column) assigned to each label.
    pub vectors: DMatrix<f64>,
}

impl DressedSpectrum {
    pub fn energy(&self, n_g: usize, n_s: usize) -> f64 {
        self.energies[n_g * self.dims + n_s]
    }

    pub fn overlap(&self, n_g: usize, n_s: usize) -> f64 {
        self.overlaps[n_g * self.dims + n_s]
    }
}

/// Greedy maximum-overlap assignment of eigenvectors to bare labels.
///
/// Pairs are taken in order of decreasing overlap; equal overlaps go to the
/// lower-energy eigenvector first. The result is always a bijection.
pub fn dressed_spectrum(h: &PairHamiltonian) -> DressedSpectrum {
    let n = h.matrix.nrows();
    let (values, vectors) = eigh(&h.matrix);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for e in 0..n {
        for b in 0..n {
            pairs.push((vectors[(b, e)].powi(2), e, b));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut energies = vec![f64::NAN; n];
    let mut overlaps = vec![0.0; n];
    let mut assigned = DMatrix::zeros(n, n);
    let mut used_e = vec![false; n];
    let mut used_b = vec![false; n];
    let mut left = n;
    for (ov, e, b) in pairs {
        if left == 0 {
            break;
        }
        if used_e[e] || used_b[b] {
            continue;
        }
        used_e[e] = true;
        used_b[b] = true;
        energies[b] = values[e];
        overlaps[b] = ov;
        assigned.set_column(b, &vectors.column(e));
        left -= 1;
    }
    DressedSpectrum {
        dims: h.dims,
        energies,
        overlaps,
        vectors: assigned,
    }
}

/// Labels (n_G, n_S) entering ζ1 and ζ2.
const SHIFT_LABELS: [(usize, usize); 6] = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)];

/// ζ1 = E11 − E10 − E01 + E00, ζ2 = E21 − E20 − E01 + E00 from the dressed
/// spectrum (gate index first).
pub fn exact_shifts(h: &PairHamiltonian) -> Result<ShiftTriple> {
    exact_shifts_with(h, HYBRIDIZATION_THRESHOLD)
}

pub fn exact_shifts_with(h: &PairHamiltonian, threshold: f64) -> Result<ShiftTriple> {
    let d = dressed_spectrum(h);
    for (ng, ns) in SHIFT_LABELS {
        let ov = d.overlap(ng, ns);
        if ov <= threshold {
            return Err(Error::Hybridized {
                label: format!("|{ng}{ns}>"),
                overlap: ov,
            });
        }
    }
    Ok(shifts_from_spectrum(&d))
}

/// Shifts without the hybridization check. Near a crossing the labels swap,
/// which is what makes the exact ζ2 change sign across the |21⟩↔|30⟩ pole.
pub fn shifts_from_spectrum(d: &DressedSpectrum) -> ShiftTriple {
    let e = |a, b| d.energy(a, b);
    let zeta1 = e(1, 1) - e(1, 0) - e(0, 1) + e(0, 0);
    let zeta2 = e(2, 1) - e(2, 0) - e(0, 1) + e(0, 0);
    ShiftTriple::new(zeta1, zeta2)
}

/// Smallest assignment overlap among the labels entering ζ1 and ζ2.
pub fn min_shift_overlap(d: &DressedSpectrum) -> f64 {
    SHIFT_LABELS
        .iter()
        .map(|&(a, b)| d.overlap(a, b))
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// Charge-basis transmon

pub const CHARGE_CUTOFF: usize = 20;
pub const CHARGE_CUTOFF_RAISED: usize = 30;
/// Level shift between cutoffs (MHz) above which the raised cutoff is used.
const CUTOFF_TOLERANCE: f64 = 1e-3;
/// Smallest E_J/E_C accepted as a transmon.
pub const MIN_EJ_OVER_EC: f64 = 20.0;

/// Lowest four levels of 4E_C n² − E_J cos φ (n_g = 0) relative to the ground
/// state, charge states −cutoff..=cutoff.
pub fn charge_levels(ej: f64, ec: f64, cutoff: usize) -> [f64; 4] {
    let size = 2 * cutoff + 1;
    let mut h = DMatrix::zeros(size, size);
    for k in 0..size {
        let n = k as f64 - cutoff as f64;
        h[(k, k)] = 4.0 * ec * n * n;
        if k + 1 < size {
            h[(k, k + 1)] = -0.5 * ej;
            h[(k + 1, k)] = -0.5 * ej;
        }
    }
    let (values, _) = eigh(&h);
    [0.0, values[1] - values[0], values[2] - values[0], values[3] - values[0]]
}

/// β = E23 − 2E12 + E01 of a level ladder, i.e. (E23 − E12) − (E12 − E01) − α.
pub fn sextic_from_levels(levels: &[f64; 4]) -> f64 {
    let e01 = levels[1] - levels[0];
    let e12 = levels[2] - levels[1];
    let e23 = levels[3] - levels[2];
    e23 - 2.0 * e12 + e01
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmonFit {
    pub ej: f64,
    pub ec: f64,
    pub cutoff: usize,
    /// E01 of the fitted Hamiltonian, MHz.
    pub freq: f64,
    /// E12 − E01 of the fitted Hamiltonian, MHz.
    pub anh: f64,
    /// Sextic correction, MHz.
    pub beta: f64,
}

fn levels_adaptive(ej: f64, ec: f64) -> ([f64; 4], usize) {
    let lo = charge_levels(ej, ec, CHARGE_CUTOFF);
    let hi = charge_levels(ej, ec, CHARGE_CUTOFF_RAISED);
    let shift = lo.iter().zip(&hi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if shift > CUTOFF_TOLERANCE {
        (hi, CHARGE_CUTOFF_RAISED)
    } else {
        (lo, CHARGE_CUTOFF)
    }
}

/// Finds (E_J, E_C) reproducing `freq` and `anh` by a damped 2-D Newton
/// iteration in log-parameters.
pub fn fit_transmon(freq: f64, anh: f64) -> Result<TransmonFit> {
    if !(freq > 0.0 && anh < 0.0 && freq.is_finite() && anh.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need freq > 0 and anh < 0, got {freq} / {anh}"
        )));
    }
    let residual = |x: [f64; 2]| {
        let (l, _) = levels_adaptive(x[0].exp(), x[1].exp());
        let e01 = l[1];
        let e12 = l[2] - l[1];
        [e01 - freq, (e12 - e01) - anh]
    };
    // Asymptotic transmon relations: α ≈ −E_C, ω ≈ √(8E_J E_C) − E_C.
    let ec0 = -anh;
    let ej0 = (freq + ec0).powi(2) / (8.0 * ec0);
    let mut x = [ej0.ln(), ec0.ln()];
    let mut r = residual(x);
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    for _ in 0..60 {
        if norm(r) < 1e-7 {
            break;
        }
        let h = 1e-6;
        let rj = residual([x[0] + h, x[1]]);
        let rc = residual([x[0], x[1] + h]);
        let jac = [
            [(rj[0] - r[0]) / h, (rc[0] - r[0]) / h],
            [(rj[1] - r[1]) / h, (rc[1] - r[1]) / h],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::NoConvergence("singular Jacobian in transmon fit".into()));
        }
        let dx = [
            (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let mut step = 1.0;
        loop {
            let trial = [x[0] - step * dx[0], x[1] - step * dx[1]];
            let rt = residual(trial);
            if norm(rt) < norm(r) || step < 1e-4 {
                x = trial;
                r = rt;
                break;
            }
            step *= 0.5;
        }
    }
    if norm(r) > 1e-6 {
        return Err(Error::NoConvergence(format!(
            "transmon fit residual {:.3e} MHz",
            norm(r)
        )));
    }
    let (ej, ec) = (x[0].exp(), x[1].exp());
    if ej / ec < MIN_EJ_OVER_EC {
        return Err(Error::InvalidArgument(format!(
            "E_J/E_C = {:.1} is outside the transmon regime (≥ {MIN_EJ_OVER_EC})",
            ej / ec
        )));
    }
    let (levels, cutoff) = levels_adaptive(ej, ec);
    Ok(TransmonFit {
        ej,
        ec,
        cutoff,
        freq: levels[1],
        anh: levels[2] - 2.0 * levels[1],
        beta: sextic_from_levels(&levels),
    })
}

/// Sextic correction β predicted for a transmon with the given frequency and
/// anharmonicity, MHz.
pub fn transmon_beta(freq: f64, anh: f64) -> Result<f64> {
    fit_transmon(freq, anh).map(|f| f.beta)
}
