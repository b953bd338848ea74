//! Detection probabilities in the 16-dimensional four-qubit space, built from
//! explicit tensor products, against the block-diagonal projector model.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinmetro::spin::{BlockDensityMatrix, CMatrix, Sector, Spin, C64};
use spinmetro::tomography::{default_bases, outcome_probabilities, BasisSetting};

const Q: usize = 4;
const DIM: usize = 1 << Q;

/// Bit `q` of `s` set means photon `q` is V.
fn n_h(s: usize) -> usize {
    Q - s.count_ones() as usize
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Total `J_+` on four qubits; single-qubit `J_+ = |H><V|`.
fn j_plus() -> DMatrix<f64> {
    let mut m = DMatrix::zeros(DIM, DIM);
    for s in 0..DIM {
        for q in 0..Q {
            if s & (1 << q) != 0 {
                m[(s & !(1 << q), s)] += 1.0;
            }
        }
    }
    m
}

/// Orthonormal basis of the null space of `J_+` restricted to states with `k` H photons.
fn highest_weights(k: usize) -> Vec<DVector<f64>> {
    let idx: Vec<usize> = (0..DIM).filter(|&s| n_h(s) == k).collect();
    let jp = j_plus();
    let sub = DMatrix::from_fn(DIM, idx.len(), |r, col| jp[(r, idx[col])]);
    let gram = sub.transpose() * &sub;
    let eig = gram.symmetric_eigen();
    (0..idx.len())
        .filter(|&i| eig.eigenvalues[i].abs() < 1e-10)
        .map(|i| {
            let mut v = DVector::zeros(DIM);
            for (col, &s) in idx.iter().enumerate() {
                v[s] = eig.eigenvectors[(col, i)];
            }
            v
        })
        .collect()
}

/// Dicke ladder `|j, j>, |j, j-1>, ...` below a highest-weight vector.
fn ladder(top: DVector<f64>, two_j: u32) -> Vec<DVector<f64>> {
    let jm = j_plus().transpose();
    let j = two_j as f64 / 2.0;
    let mut out = vec![top];
    for i in 0..two_j as usize {
        let m = j - i as f64;
        let next = &jm * out.last().unwrap() / ((j + m) * (j - m + 1.0)).sqrt();
        out.push(next);
    }
    out
}

/// Embeds a block-diagonal state into the full tensor-product space.
fn embed(rho: &BlockDensityMatrix) -> CMatrix {
    let mut full = CMatrix::zeros(DIM, DIM);
    for s in rho.sectors() {
        let two_j = s.spin.twice();
        let tops = highest_weights((Q + two_j as usize) / 2);
        assert_eq!(tops.len(), s.multiplicity as usize);
        for top in tops {
            let vecs: Vec<_> = ladder(top, two_j).into_iter().map(|v| v.map(|x| c(x, 0.0))).collect();
            for (a, va) in vecs.iter().enumerate() {
                for (b, vb) in vecs.iter().enumerate() {
                    full += va * vb.adjoint() * s.block[(a, b)];
                }
            }
        }
    }
    full
}

/// `exp(-i theta n.sigma / 2)` for one photon, `|H>` first.
fn qubit_rotation(theta: [f64; 3]) -> [[C64; 2]; 2] {
    let a = (theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]).sqrt();
    if a == 0.0 {
        return [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    }
    let [x, y, z] = theta.map(|v| v / a);
    let (co, si) = ((a / 2.0).cos(), (a / 2.0).sin());
    [
        [c(co, -si * z), c(-si * y, -si * x)],
        [c(si * y, -si * x), c(co, si * z)],
    ]
}

fn brute_force(full: &CMatrix, b: &BasisSetting) -> [f64; 5] {
    let u1 = qubit_rotation(b.rotation().theta);
    let u = CMatrix::from_fn(DIM, DIM, |r, col| {
        (0..Q).fold(c(1.0, 0.0), |acc, q| acc * u1[(r >> q) & 1][(col >> q) & 1])
    });
    let rotated = u.adjoint() * full * &u;
    let mut p = [0.0; 5];
    for s in 0..DIM {
        p[n_h(s)] += rotated[(s, s)].re;
    }
    p
}

fn random_block(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    m / c(tr, 0.0)
}

fn random_state(rng: &mut ChaCha8Rng, pure: bool) -> BlockDensityMatrix {
    if pure {
        let psi = spinmetro::spin::PureSpinState::random(Spin::of_photons(4), rng);
        return psi.to_density();
    }
    let w: [f64; 3] = [rng.random::<f64>() + 0.2, rng.random(), rng.random()];
    let total: f64 = w.iter().sum();
    let layout = [(4u32, 1u32), (2, 3), (0, 2)];
    let sectors = layout
        .iter()
        .zip(w)
        .map(|(&(two_j, mult), wi)| {
            let b = random_block(two_j as usize + 1, rng) * c(wi / total / mult as f64, 0.0);
            Sector::new(Spin::from_twice(two_j), mult, b)
        })
        .collect();
    BlockDensityMatrix::new(sectors).unwrap()
}

#[test]
fn qubit_rotation_matches_spin_half_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let theta = [rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0];
        let u = spinmetro::spin::RotationParams::new(theta).unwrap().unitary(Spin::from_twice(1));
        let v = qubit_rotation(theta);
        for r in 0..2 {
            for col in 0..2 {
                assert!((u[(r, col)] - v[r][col]).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn embedding_preserves_trace_and_positivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rho = random_state(&mut rng, false);
    let full = embed(&rho);
    assert!((full.trace().re - 1.0).abs() < 1e-12);
    let (vals, _) = spinmetro::spin::hermitian_eigen(&full);
    assert!(vals.iter().all(|&v| v > -1e-12));
    assert!(((&full * &full).trace().re - rho.purity()).abs() < 1e-12);
}

#[test]
fn projector_model_matches_sixteen_dimensional_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bases = default_bases();
    bases.push(BasisSetting::from_angles(1.1, -2.3));
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let rho = random_state(&mut rng, trial % 2 == 0);
        let full = embed(&rho);
        for b in &bases {
            let model = outcome_probabilities(&rho, b).unwrap();
            let oracle = brute_force(&full, b);
            for k in 0..5 {
                worst = worst.max((model[k] - oracle[k]).abs());
            }
        }
    }
    assert!(worst < 1e-10, "largest deviation {worst:e}");
}
