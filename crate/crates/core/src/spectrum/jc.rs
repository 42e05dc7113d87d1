use crate::linalg::{kron, CMat};
use crate::{Error, Result, C64};

use super::ops::oscillator_ops;
use super::HermitianOperator;

/// Duffing qubit (b) coupled to a resonator (a):
/// Omega b†b + delta/2 b†b(b†b - 1) + omega_r a†a + g (a†b + a b†).
/// Tensor order is qubit then resonator. A qubit dimension of 2 gives the
/// two-level truncation.
pub fn jc_model(omega_t: f64, delta_t: f64, omega_r: f64, g: f64, dims: (usize, usize)) -> Result<HermitianOperator> {
    let (dq, dr) = dims;
    if dq < 2 || dr < 2 {
        return Err(Error::TruncationTooSmall(dq.min(dr)));
    }
    let b = oscillator_ops(dq)?;
    let a = oscillator_ops(dr)?;
    let iq = CMat::identity(dq, dq);
    let ir = CMat::identity(dr, dr);
    let r = |x: f64| C64::new(x, 0.0);
    let nb = &b.n;
    let duff = nb * r(omega_t) + nb * (nb - &iq) * r(delta_t / 2.0);
    let h = kron(&duff, &ir)
        + kron(&iq, &(&a.n * r(omega_r)))
        + (kron(&b.a, &a.adag) + kron(&b.adag, &a.a)) * r(g);
    Ok(HermitianOperator::dense(vec!["qubit".into(), "resonator".into()], vec![dq, dr], h))
}

/// b†b + a†a on the same space.
pub fn jc_number_operator(dims: (usize, usize)) -> Result<CMat> {
    let b = oscillator_ops(dims.0)?;
    let a = oscillator_ops(dims.1)?;
    Ok(kron(&b.n, &CMat::identity(dims.1, dims.1)) + kron(&CMat::identity(dims.0, dims.0), &a.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, eigh, max_abs};

    #[test]
    fn uncoupled_levels_add() {
        let h = jc_model(5.0, -0.3, 6.0, 0.0, (3, 4)).unwrap();
        let (e, _) = eigh(&h.to_dense());
        let mut want = vec![];
        for q in 0..3usize {
            for n in 0..4 {
                want.push(5.0 * q as f64 - 0.15 * (q * q.saturating_sub(1)) as f64 + 6.0 * n as f64);
            }
        }
        want.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn excitation_number_conserved() {
        let h = jc_model(5.0, -0.3, 5.1, 0.07, (4, 6)).unwrap();
        let n = jc_number_operator((4, 6)).unwrap();
        assert!(max_abs(&commutator(&h.to_dense(), &n)) < 1e-12);
    }

    #[test]
    fn sign_of_coupling_is_irrelevant() {
        let (a, _) = eigh(&jc_model(5.0, -0.3, 5.1, 0.07, (4, 6)).unwrap().to_dense());
        let (b, _) = eigh(&jc_model(5.0, -0.3, 5.1, -0.07, (4, 6)).unwrap().to_dense());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
