use faer::{c64, Mat};

use super::{Superoperator, VecBasis};
use crate::algebra::FockCutoff;
use crate::error::{Error, Result};
use crate::linalg::{column_entries, dagger, identity, kron, re, row_entries, CMat, I};
use crate::model::{self, hilbert_dim, SystemParams};

/// `D_O(ρ) = 2OρO† − O†Oρ − ρO†O` on the full column-stacked basis,
/// assembled from Kronecker products.
pub fn lindblad_term(op: &CMat) -> Result<Superoperator> {
    if op.nrows() != op.ncols() {
        return Err(Error::Dimension(format!(
            "jump operator must be square, got {}x{}",
            op.nrows(),
            op.ncols()
        )));
    }
    let d = op.nrows();
    let id = identity(d);
    let od_o = &dagger(op) * op;
    let conj = Mat::from_fn(d, d, |i, j| op[(i, j)].conj());
    let matrix = kron(&conj, op) * faer::Scale(re(2.0)) - kron(&id, &od_o) - kron(&od_o.transpose().to_owned(), &id);
    Superoperator::new(VecBasis::full(d), matrix)
}

/// Mean thermal occupation `1 / (e^{ω/T} − 1)`.
pub fn bose_einstein(omega: f64, temperature: f64) -> f64 {
    1.0 / (omega / temperature).exp_m1()
}

/// A jump operator with the prefactor multiplying `D_O`.
struct Channel {
    weight: f64,
    op: CMat,
}

fn channels(params: &SystemParams, cutoff: FockCutoff) -> Result<Vec<Channel>> {
    let lambda = params.deformation()?;
    let a = model::cavity_lowering(cutoff, lambda);
    let s = model::qe_lowering(cutoff);
    let mut out = vec![Channel {
        weight: 0.5 * params.kappa * (1.0 + params.nbar),
        op: a.clone(),
    }];
    if params.nbar > 0.0 {
        out.push(Channel {
            weight: 0.5 * params.kappa * params.nbar,
            op: dagger(&a),
        });
    }
    out.push(Channel {
        weight: 0.5 * params.gamma,
        op: s.clone(),
    });
    out.push(Channel {
        weight: 0.5 * params.pump,
        op: dagger(&s),
    });
    Ok(out)
}

/// Assemble `−i[H,·] + Σ w D_O` column by column on `basis`, visiting only
/// nonzero operator entries. Fails if the basis is not invariant.
fn assemble(h: &CMat, chans: &[Channel], basis: &VecBasis) -> Result<CMat> {
    let n = basis.len();
    let h_cols = column_entries(h);
    let h_rows = row_entries(h);
    struct Prepared {
        weight: c64,
        cols: Vec<Vec<(usize, c64)>>,
        m_cols: Vec<Vec<(usize, c64)>>,
        m_rows: Vec<Vec<(usize, c64)>>,
    }
    let prepared: Vec<Prepared> = chans
        .iter()
        .filter(|c| c.weight != 0.0)
        .map(|c| {
            let m = &dagger(&c.op) * &c.op;
            Prepared {
                weight: re(c.weight),
                cols: column_entries(&c.op),
                m_cols: column_entries(&m),
                m_rows: row_entries(&m),
            }
        })
        .collect();

    let mut out = Mat::<c64>::zeros(n, n);
    let mut leak = 0.0f64;
    for (col, &(i, j)) in basis.pairs().iter().enumerate() {
        let mut put = |k: usize, l: usize, v: c64| match basis.position(k, l) {
            Some(row) => out[(row, col)] += v,
            None => leak = leak.max(v.norm()),
        };
        // −i H|i⟩⟨j| + i |i⟩⟨j|H
        for &(k, hk) in &h_cols[i] {
            put(k, j, -I * hk);
        }
        for &(l, hl) in &h_rows[j] {
            put(i, l, I * hl);
        }
        for p in &prepared {
            // 2 O|i⟩⟨j|O† = 2 Σ_kl O[k,i] conj(O[l,j]) |k⟩⟨l|
            for &(k, ok) in &p.cols[i] {
                for &(l, ol) in &p.cols[j] {
                    put(k, l, p.weight * re(2.0) * ok * ol.conj());
                }
            }
            for &(k, mk) in &p.m_cols[i] {
                put(k, j, -p.weight * mk);
            }
            for &(l, ml) in &p.m_rows[j] {
                put(i, l, -p.weight * ml);
            }
        }
    }
    if leak > 0.0 {
        return Err(Error::Dimension(format!(
            "vectorization basis is not invariant under the Liouvillian (leak {leak:.3e})"
        )));
    }
    Ok(out)
}

fn build(params: &SystemParams, cutoff: FockCutoff, basis: VecBasis) -> Result<Superoperator> {
    params.validate()?;
    let h = model::hamiltonian(params, cutoff)?;
    debug_assert_eq!(h.nrows(), basis.hilbert_dim());
    let matrix = assemble(&h, &channels(params, cutoff)?, &basis)?;
    Superoperator::new(basis, matrix)
}

/// Generator of `dρ/dt = −i[H,ρ] + (κ/2)D_a + (γ/2)D_σ + (P/2)D_σ†` on the
/// full column-stacked space. Requires `nbar = 0`.
pub fn liouvillian(params: &SystemParams, cutoff: FockCutoff) -> Result<Superoperator> {
    if params.nbar != 0.0 {
        return Err(Error::InvalidInput(format!(
            "liouvillian() describes a zero-temperature bath; got nbar = {} (use thermal_liouvillian)",
            params.nbar
        )));
    }
    build(params, cutoff, VecBasis::full(hilbert_dim(cutoff)))
}

/// Thermal-bath generator with cavity terms `(κ(1+n̄)/2)D_a + (κn̄/2)D_a†`.
/// At `n̄ = 0` this is the same construction as [`liouvillian`].
pub fn thermal_liouvillian(params: &SystemParams, cutoff: FockCutoff) -> Result<Superoperator> {
    build(params, cutoff, VecBasis::full(hilbert_dim(cutoff)))
}

/// Generator restricted to the excitation-difference sector `shift`
/// (thermal terms included when `nbar > 0`).
pub fn sector_liouvillian(
    params: &SystemParams,
    cutoff: FockCutoff,
    shift: i64,
) -> Result<Superoperator> {
    build(params, cutoff, VecBasis::excitation_sector(cutoff, shift))
}

/// Reference assembly from Kronecker products, for cross-checking.
#[cfg(test)]
pub(crate) fn liouvillian_by_kron(params: &SystemParams, cutoff: FockCutoff) -> CMat {
    let h = model::hamiltonian(params, cutoff).unwrap();
    let d = h.nrows();
    let id = identity(d);
    let mut l = (kron(&id, &h) - kron(&h.transpose().to_owned(), &id)) * faer::Scale(-I);
    for c in channels(params, cutoff).unwrap() {
        l = l + lindblad_term(&c.op).unwrap().into_matrix() * faer::Scale(re(c.weight));
    }
    l
}
