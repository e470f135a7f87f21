use super::{check_guard, et_terms, EtParams, DEFAULT_DIM_GUARD};
use crate::error::{Error, Result};
use crate::hilbert::{embed, embed_product, pauli_ops, Factor, Operator, SpaceSpec};
use crate::scalar::Real;

/// Target-side energies of the GHZ scheme on `2·n_half` qubits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhzParams<T: Real> {
    pub e0: T,
    pub k: T,
    pub n_half: usize,
}

impl<T: Real> GhzParams<T> {
    pub fn new(e0: T, k: T, n_half: usize) -> Result<Self> {
        if !(e0 > T::zero()) || !(k > T::zero()) {
            return Err(Error::InvalidParameter(format!("GHZ energies must be positive, got E0={e0}, k={k}")));
        }
        if !(1..=2).contains(&n_half) {
            return Err(Error::InvalidParameter(format!("GHZ scheme supports 2 or 4 targets, got {}", 2 * n_half)));
        }
        Ok(Self { e0, k, n_half })
    }

    pub fn n_targets(&self) -> usize {
        2 * self.n_half
    }
}

/// `(E₀/2)Σσᶻ` and `(k/2)(Π₁ᴺσˣ + Π_{N+1}^{2N}σˣ)` on the target sites.
fn target_terms<T: Real>(gp: &GhzParams<T>, space: &SpaceSpec, first: usize) -> Result<(Operator<T>, Operator<T>)> {
    let s = pauli_ops::<T>();
    let half = T::lit(0.5);
    let n = gp.n_half;
    let mut z = Operator::zeros(space);
    for i in 0..2 * n {
        z = z + embed(&s.z, first + i, space)?;
    }
    let left: Vec<(usize, &Operator<T>)> = (0..n).map(|i| (first + i, &s.x)).collect();
    let right: Vec<(usize, &Operator<T>)> = (n..2 * n).map(|i| (first + i, &s.x)).collect();
    let x = embed_product(&left, space)? + embed_product(&right, space)?;
    Ok((z.scale(half * gp.e0), x.scale(half * gp.k)))
}

/// GHZ-scheme Hamiltonian on `[Qubit, Boson(n_c), Qubit × 2N]`:
/// `H_ET + (E₀/2)σ₀ᶻΣσᵢᶻ + (E₀/2)Σσᵢᶻ + (k/2)(Π₁ᴺσˣ + Π_{N+1}^{2N}σˣ)`.
pub fn build_ghz<T: Real>(p: &EtParams<T>, gp: &GhzParams<T>, n_c: usize) -> Result<Operator<T>> {
    let mut factors = vec![Factor::Qubit, Factor::Boson { cutoff: n_c }];
    factors.extend(std::iter::repeat_n(Factor::Qubit, gp.n_targets()));
    let space = SpaceSpec::new(factors)?;
    check_guard(&space, DEFAULT_DIM_GUARD)?;
    let (z, x) = target_terms(gp, &space, 2)?;
    let sz0 = embed(&pauli_ops::<T>().z, 0, &space)?;
    let shift = sz0.try_mul(&z)?;
    Ok(et_terms(p, &space, 0, 1, true)? + shift + z + x)
}

/// `(H_ext⁺, H_ext⁻) = H_ext ± (E₀/2)Σσᶻ` on the `2N` targets alone: the
/// target Hamiltonian seen with the control in `|D⟩` and in `|A⟩`.
pub fn ghz_external_hamiltonians<T: Real>(gp: &GhzParams<T>) -> Result<(Operator<T>, Operator<T>)> {
    let space = SpaceSpec::new(vec![Factor::Qubit; gp.n_targets()])?;
    let (z, x) = target_terms(gp, &space, 0)?;
    let ext = &z + &x;
    Ok((&ext + &z, &ext - &z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;
    use crate::scalar::{c, cr};
    use nalgebra::DMatrix;

    fn kron(ms: &[&DMatrix<crate::C<f64>>]) -> DMatrix<crate::C<f64>> {
        ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.kronecker(m))
    }

    #[test]
    fn two_spin_matches_hand_built() {
        let (de, e0, k, g, v) = (1.4, 0.2, 0.04, 0.5, 0.008);
        let p = EtParams::new(de, g, v, std::f64::consts::TAU * 25.0).unwrap();
        let gp = GhzParams::new(e0, k, 1).unwrap();
        let n_c = 5;
        let h = build_ghz(&p, &gp, n_c).unwrap();

        let i2 = DMatrix::<crate::C<f64>>::identity(2, 2);
        let ib = DMatrix::<crate::C<f64>>::identity(n_c, n_c);
        let sz = DMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
        let sx = DMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let mut a = DMatrix::zeros(n_c, n_c);
        for m in 0..n_c - 1 {
            a[(m, m + 1)] = cr(((m + 1) as f64).sqrt());
        }
        let ad = a.adjoint();
        let x = &a + &ad;
        let num = &ad * &a;
        let s = |v: f64| c(v, 0.0);
        let expected = kron(&[&sz, &ib, &i2, &i2]) * s(de / 2.0)
            + kron(&[&sx, &ib, &i2, &i2]) * s(v)
            + (kron(&[&sz, &ib, &sz, &i2]) + kron(&[&sz, &ib, &i2, &sz])) * s(e0 / 2.0)
            + (kron(&[&i2, &ib, &sz, &i2]) + kron(&[&i2, &ib, &i2, &sz])) * s(e0 / 2.0)
            + (kron(&[&i2, &ib, &sx, &i2]) + kron(&[&i2, &ib, &i2, &sx])) * s(k / 2.0)
            + kron(&[&sz, &x, &i2, &i2]) * s(g / 2.0)
            + kron(&[&i2, &num, &i2, &i2]);
        assert!((h.matrix() - expected).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn no_flips_commutes_with_every_sz() {
        let p = EtParams::new(0.6, 1.0, 0.0, 1.0).unwrap();
        let gp = GhzParams { e0: 0.2, k: 0.0, n_half: 2 };
        let h = build_ghz(&p, &gp, 3).unwrap();
        let sz = pauli_ops::<f64>().z;
        for site in [0, 2, 3, 4, 5] {
            let z = embed(&sz, site, h.space()).unwrap();
            assert!(h.commutator(&z).unwrap().max_norm() < 1e-14);
        }
    }

    #[test]
    fn acceptor_side_has_zero_energy_ghz() {
        for n_half in [1, 2] {
            let gp = GhzParams::new(0.2, 0.04, n_half).unwrap();
            let (plus, minus) = ghz_external_hamiltonians(&gp).unwrap();
            let space = minus.space().clone();
            let n = gp.n_targets();
            let up = StateVector::basis(&space, &vec![0; n]).unwrap();
            let down = StateVector::basis(&space, &vec![1; n]).unwrap();
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let ghz = StateVector::new(space.clone(), (up.amplitudes() - down.amplitudes()) * cr(r)).unwrap();
            let out = minus.apply(&ghz).unwrap();
            assert!(out.norm() < 1e-15);
            let e = plus.expectation(&up).unwrap().re;
            assert!((e - n as f64 * 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GhzParams::new(0.0, 0.04, 1).is_err());
        assert!(GhzParams::new(0.2, 0.04, 3).is_err());
    }
}
