//! Clebsch-Gordan coefficients and orthonormal irreducible tensor operators.

use crate::spin::{CMatrix, Spin, C64};

fn factorial(n: i64) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `⟨j1 m1; j2 m2 | j m⟩`, all arguments doubled. Racah's closed form.
pub fn clebsch_gordan(tj1: i64, tm1: i64, tj2: i64, tm2: i64, tj: i64, tm: i64) -> f64 {
    if tm1 + tm2 != tm
        || tm1.abs() > tj1
        || tm2.abs() > tj2
        || tm.abs() > tj
        || tj > tj1 + tj2
        || tj < (tj1 - tj2).abs()
        || (tj1 + tj2 + tj) % 2 != 0
        || (tj1 + tm1) % 2 != 0
        || (tj2 + tm2) % 2 != 0
        || (tj + tm) % 2 != 0
    {
        return 0.0;
    }
    let h = |x: i64| x / 2;
    let prefactor = ((tj + 1) as f64
        * factorial(h(tj1 + tj2 - tj))
        * factorial(h(tj1 - tj2 + tj))
        * factorial(h(-tj1 + tj2 + tj))
        / factorial(h(tj1 + tj2 + tj) + 1))
        .sqrt()
        * (factorial(h(tj + tm))
            * factorial(h(tj - tm))
            * factorial(h(tj1 - tm1))
            * factorial(h(tj1 + tm1))
            * factorial(h(tj2 - tm2))
            * factorial(h(tj2 + tm2)))
        .sqrt();
    let kmin = 0.max(h(tj2 - tj - tm1)).max(h(tj1 - tj + tm2));
    let kmax = h(tj1 + tj2 - tj).min(h(tj1 - tm1)).min(h(tj2 + tm2));
    let sum: f64 = (kmin..=kmax)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / (factorial(k)
                * factorial(h(tj1 + tj2 - tj) - k)
                * factorial(h(tj1 - tm1) - k)
                * factorial(h(tj2 + tm2) - k)
                * factorial(h(tj - tj2 + tm1) + k)
                * factorial(h(tj - tj1 - tm2) + k))
        })
        .sum();
    prefactor * sum
}

/// `T_kq` in the Dicke basis of `spin`, normalized so that `Tr(T_kq† T_k'q') = δδ`.
pub fn tensor_operator(spin: Spin, k: u32, q: i32) -> CMatrix {
    let dim = spin.dim();
    let tj = spin.twice() as i64;
    let scale = ((2 * k + 1) as f64 / (tj + 1) as f64).sqrt();
    CMatrix::from_fn(dim, dim, |r, s| {
        let tm = tj - 2 * r as i64;
        let tmp = tj - 2 * s as i64;
        C64::new(scale * clebsch_gordan(tj, tmp, 2 * k as i64, 2 * q as i64, tj, tm), 0.0)
    })
}

/// `ρ_kq = Tr(block T_kq†)` for `k = 0..=2j`, `q = -k..=k` (inner index `q + k`).
pub fn multipole_coefficients(spin: Spin, block: &CMatrix) -> Vec<Vec<C64>> {
    (0..=spin.twice())
        .map(|k| {
            (-(k as i32)..=k as i32)
                .map(|q| (block * tensor_operator(spin, k, q).adjoint()).trace())
                .collect()
        })
        .collect()
}

/// `M_k = Σ_q |ρ_kq|²` of the trace-normalized block.
pub fn multipole_moments_of_block(spin: Spin, block: &CMatrix) -> Vec<f64> {
    let tr = block.trace().re;
    multipole_coefficients(spin, block)
        .into_iter()
        .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>() / (tr * tr))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_generators, PureSpinState};

    #[test]
    fn cg_known_values() {
        // ⟨1/2 1/2; 1/2 -1/2 | 1 0⟩ = 1/√2, ⟨1/2 1/2; 1/2 -1/2 | 0 0⟩ = 1/√2
        assert!((clebsch_gordan(1, 1, 1, -1, 2, 0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(1, -1, 1, 1, 0, 0) + 0.5f64.sqrt()).abs() < 1e-15);
        // ⟨1 1; 1 -1 | 2 0⟩ = 1/√6
        assert!((clebsch_gordan(2, 2, 2, -2, 4, 0) - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert_eq!(clebsch_gordan(2, 2, 2, 2, 2, 2), 0.0);
    }

    #[test]
    fn tensor_operators_are_orthonormal() {
        for tj in 1..=6 {
            let spin = Spin::from_twice(tj);
            let ops: Vec<CMatrix> = (0..=tj)
                .flat_map(|k| (-(k as i32)..=k as i32).map(move |q| tensor_operator(spin, k, q)))
                .collect();
            assert_eq!(ops.len(), spin.dim() * spin.dim());
            for (a, ta) in ops.iter().enumerate() {
                for (b, tb) in ops.iter().enumerate() {
                    let ip = (ta.adjoint() * tb).trace();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - C64::new(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rank_one_operators_are_spin_components() {
        let spin = Spin::from_twice(4);
        let gens = build_generators(spin);
        // T_10 ∝ Jz
        let t10 = tensor_operator(spin, 1, 0);
        let ratio = t10[(0, 0)] / gens.z[(0, 0)];
        assert!((t10 - &gens.z * ratio).camax() < 1e-12);
    }

    #[test]
    fn coherent_state_moments() {
        let psi = PureSpinState::coherent(4, 0.7, 1.9).unwrap();
        let m = multipole_moments_of_block(psi.spin(), &psi.projector());
        assert!((m[1] - 0.4).abs() < 1e-12);
        assert!((m[2] - 2.0 / 7.0).abs() < 1e-12);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tetrahedron_has_no_dipole_or_quadrupole() {
        let psi = PureSpinState::tetrahedron();
        let m = multipole_moments_of_block(psi.spin(), &psi.projector());
        assert!(m[1] < 1e-12 && m[2] < 1e-12, "{m:?}");
    }
}
