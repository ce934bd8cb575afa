//! Universal global angular form on sphere bundles from Berezin integrals.

pub mod algebra;

use std::time::Instant;

use serde::Serialize;

pub use algebra::{Generating, SphereAlgebra, MAX_N};

use crate::error::{Error, Result};
use crate::koszul::scalar::{factorial, parity_sign, Scalar, Q};
use crate::koszul::GradedElement;

/// `s = ceil((n - 2) / 2)`.
pub fn top_index(n: usize) -> usize {
    (n - 1) / 2
}

/// Volume of the unit `d`-sphere by `Omega_d = 2 pi Omega_{d-2} / (d - 1)`.
pub fn sphere_volume(d: usize) -> Scalar {
    match d {
        0 => Scalar::int(2),
        1 => Scalar::pi_pow(1).scale_q(&Q::int(2)),
        _ => sphere_volume(d - 2).shift_pi(1).scale_q(&Q::new(2, d as i64 - 1)),
    }
}

/// Closed form of the coefficients `C_k`, `k = 0..=s`.
pub fn closed_form_coefficients(n: usize) -> Vec<Scalar> {
    let s = top_index(n);
    (0..=s)
        .map(|k| {
            let sign = Q::int(parity_sign((k + s) as i64) as i64);
            if n % 2 == 0 {
                let q = &sign * &(&factorial((s - k) as u32) / &Q::int(1 << (k + 1)));
                Scalar::from_q(q).shift_pi(-(s as i32 + 1))
            } else {
                let den = &(&Q::int(1 << (s - k + 1)) * &Q::int(1 << s)) * &factorial((s - k) as u32);
                let q = &sign * &(&factorial((2 * s - 2 * k) as u32) / &den);
                Scalar::from_q(q).shift_pi(-(s as i32))
            }
        })
        .collect()
}

/// `C_0 = (-1)^s / Omega_{n-1}` and `C_k = -C_{k-1} / (n - 2k)`.
pub fn recursive_coefficients(n: usize) -> Vec<Scalar> {
    let s = top_index(n);
    let mut c = vec![Scalar::sign(parity_sign(s as i64)) * sphere_volume(n - 1).recip_monomial().expect("monomial")];
    for k in 1..=s {
        let prev = c[k - 1].scale_q(&Q::new(-1, (n - 2 * k) as i64));
        c.push(prev);
    }
    c
}

/// Berezin-derived data for one fiber dimension, all reduced modulo the constraint ideal.
pub struct AngularData {
    pub alg: SphereAlgebra,
    pub phi: Vec<GradedElement>,
    pub psi: Vec<GradedElement>,
    pub phi_raw: Vec<GradedElement>,
    pub psi_raw: Vec<GradedElement>,
    pub dpsi: Vec<GradedElement>,
}

impl AngularData {
    pub fn new(n: usize) -> Result<AngularData> {
        if !(2..=MAX_N).contains(&n) {
            return Err(Error::Range(format!("fiber dimension {n} not in 2..={MAX_N}")));
        }
        let alg = SphereAlgebra::new(n)?;
        let phi_gen = alg.generating_function(Generating::Phi)?;
        let psi_gen = alg.generating_function(Generating::Psi)?;
        let phi_raw: Vec<_> = (0..=n / 2 + 1).map(|k| alg.lambda_coefficient(&phi_gen, k)).collect();
        let psi_raw: Vec<_> = (0..=top_index(n) + 1).map(|k| alg.lambda_coefficient(&psi_gen, k)).collect();
        let phi = phi_raw.iter().map(|p| alg.normal_form(p)).collect::<Result<Vec<_>>>()?;
        let psi = psi_raw.iter().map(|p| alg.normal_form(p)).collect::<Result<Vec<_>>>()?;
        let dpsi = psi_raw
            .iter()
            .map(|p| alg.normal_form(&alg.d(p)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(AngularData {
            alg,
            phi,
            psi,
            phi_raw,
            psi_raw,
            dpsi,
        })
    }

    pub fn n(&self) -> usize {
        self.alg.n
    }

    /// `Phi_k` and `Psi_k` from the Berezin expansion equal their closed forms for every `k`.
    pub fn closed_forms_match(&self) -> Result<bool> {
        for (k, p) in self.phi_raw.iter().enumerate() {
            if *p != self.alg.phi_closed(k)? {
                return Ok(false);
            }
        }
        for (k, p) in self.psi_raw.iter().enumerate() {
            if *p != self.alg.psi_closed(k)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `Phi_0` vanishes on the sphere while its unreduced expansion does not.
    pub fn phi0_vanishes(&self) -> bool {
        self.phi[0].is_zero() && !self.phi_raw[0].is_zero()
    }

    /// `d Psi = (-1)^{n+1} (n - 2 lambda d/dlambda + 1/lambda) Phi` and its `lambda^k` components.
    pub fn check_dpsi(&self) -> Result<DpsiReport> {
        let n = self.n();
        let alg = &self.alg;
        let sign = Scalar::sign(parity_sign(n as i64 + 1));
        let mut per_order = Vec::new();
        for k in 0..self.dpsi.len() {
            let next = self.phi.get(k + 1).cloned().unwrap_or_else(|| alg.zero());
            let rhs = self.phi[k]
                .scale(&Scalar::int(n as i64 - 2 * k as i64))
                .add(&next)?
                .scale(&sign);
            per_order.push(self.dpsi[k] == rhs);
        }
        // whole generating functions: lambda d/dlambda and 1/lambda act on exponents
        let lhs = alg.normal_form(&alg.d(&alg.lambda_series(&self.psi_raw)?)?)?;
        let phi = alg.lambda_series(&self.phi)?;
        let euler = alg.lambda_series(
            &self
                .phi
                .iter()
                .enumerate()
                .map(|(k, p)| p.scale(&Scalar::int(n as i64 - 2 * k as i64)))
                .collect::<Vec<_>>(),
        )?;
        let shifted = alg.lambda_series(&self.phi[1..])?;
        let rhs = alg.normal_form(&euler.add(&shifted)?.scale(&sign))?;
        let residual = lhs.sub(&rhs)?;
        Ok(DpsiReport {
            n,
            holds: residual.is_zero() && self.phi[0].is_zero(),
            per_order,
            nontrivial: !lhs.is_zero() && !phi.is_zero(),
            witness: witness(&residual),
        })
    }

    /// Coefficients forced by the data: `C_0` from the volume normalization of `Psi_0`, each `C_k` from
    /// the vanishing of the sphere-dependent `F^k` sector of `d theta`.
    pub fn derived_coefficients(&self) -> Result<Vec<Scalar>> {
        let n = self.n();
        let alg = &self.alg;
        let vol = alg.normal_form(&alg.sphere_volume_form()?)?;
        let (m0, v0) = vol
            .terms()
            .next()
            .ok_or_else(|| Error::Algebra("sphere volume form reduced to zero".into()))?;
        let ratio = rational_ratio(&self.psi[0].coefficient(m0), v0)?;
        if self.psi[0] != vol.scale(&Scalar::from_q(ratio.clone())) {
            return Err(Error::Algebra("Psi_0 is not a multiple of the volume form".into()));
        }
        let omega = sphere_volume(n - 1);
        let mut c = vec![(omega.scale_q(&ratio)).recip_monomial().expect("monomial")];
        for k in 1..=top_index(n) {
            let sector = |e: &GradedElement| e.filter(|m| alg.f_degree(m) == k && alg.on_sphere(m));
            let (lower, upper) = (sector(&self.dpsi[k - 1]), sector(&self.dpsi[k]));
            let (m, b) = upper
                .terms()
                .next()
                .ok_or_else(|| Error::Algebra(format!("empty F^{k} sector in d Psi_{k}")))?;
            let ratio = rational_ratio(&lower.coefficient(m), b)?;
            let ck = c[k - 1].scale_q(&-ratio);
            let residual = lower.scale(&c[k - 1]).add(&upper.scale(&ck))?;
            if !residual.is_zero() {
                return Err(Error::Algebra(format!("F^{k} sector of d theta cannot be cancelled")));
            }
            c.push(ck);
        }
        Ok(c)
    }

    /// `theta = sum_k C_k Psi_k`, unreduced.
    pub fn theta(&self, c: &[Scalar]) -> Result<GradedElement> {
        let mut out = self.alg.zero();
        for (k, ck) in c.iter().enumerate() {
            out = out.add(&self.psi_raw[k].scale(ck))?;
        }
        Ok(out)
    }

    /// `d theta` reduced on the sphere.
    pub fn dtheta(&self, c: &[Scalar]) -> Result<GradedElement> {
        let mut out = self.alg.zero();
        for (k, ck) in c.iter().enumerate() {
            out = out.add(&self.dpsi[k].scale(ck))?;
        }
        Ok(out)
    }

    /// Expected `d theta`: zero for odd `n`, `-Pf F / (2 pi)^{n/2}` for even `n`.
    pub fn expected_dtheta(&self) -> Result<GradedElement> {
        let n = self.n();
        if n % 2 == 1 {
            return Ok(self.alg.zero());
        }
        let scale = Scalar::from_q(Q::new(-1, 1 << (n / 2))).shift_pi(-(n as i32 / 2));
        Ok(self.alg.pfaffian()?.scale(&scale))
    }

    /// Rewriting of `theta` as a single sum of `eps` monomials with explicit rational weights.
    pub fn theta_rewritten(&self) -> Result<GradedElement> {
        let n = self.n();
        let s = top_index(n);
        let mut out = self.alg.zero();
        for k in 0..=s {
            let l = n - 2 * k - 1;
            let w = if n % 2 == 1 {
                // 1 / (2 (4 pi)^s k! (s - k)!)
                let den = &(&Q::int(2 * (1 << (2 * s))) * &factorial(k as u32)) * &factorial((s - k) as u32);
                Scalar::from_q(den.recip()).shift_pi(-(s as i32))
            } else {
                // (s - k)! / (2 pi^{s+1} 4^k k! (2s - 2k + 1)!)
                let den = &(&Q::int(2 * (1 << (2 * k))) * &factorial(k as u32)) * &factorial((2 * s - 2 * k + 1) as u32);
                Scalar::from_q(&factorial((s - k) as u32) / &den).shift_pi(-(s as i32 + 1))
            };
            out = out.add(&self.alg.eps(true, k, l)?.scale(&w))?;
        }
        Ok(out)
    }
}

/// First surviving term of a residual.
fn witness(e: &GradedElement) -> Option<String> {
    let w = e.terms().next().map(|(m, c)| {
        let mut single = GradedElement::zero(e.universe());
        single.add_term(m.clone(), c.clone());
        single.to_string()
    });
    w
}

fn rational_ratio(a: &Scalar, b: &Scalar) -> Result<Q> {
    match (a.as_rational(), b.as_rational()) {
        (Some(a), Some(b)) if !b.is_zero() => Ok(&a / &b),
        _ => Err(Error::Algebra(format!("expected rational coefficients, got {a} / {b}"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DpsiReport {
    pub n: usize,
    pub holds: bool,
    pub per_order: Vec<bool>,
    pub nontrivial: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AngularReport {
    pub n: usize,
    pub s: usize,
    #[serde(rename = "C_k")]
    pub c: Vec<String>,
    pub recursion_residuals: Vec<String>,
    pub normalization_residual: String,
    pub closed_equals_recursion: bool,
    pub closed_equals_derived: bool,
    pub phi0_zero: bool,
    pub closed_forms_match: bool,
    pub dpsi: DpsiReport,
    pub dtheta_status: String,
    pub dtheta_witness: Option<String>,
    pub pfaffian_match: bool,
    pub antipodal_parity: bool,
    pub rewritten_theta_match: bool,
    pub wall_time: f64,
}

impl AngularReport {
    pub fn pass(&self) -> bool {
        self.recursion_residuals.iter().all(|r| r == "0")
            && self.normalization_residual == "0"
            && self.closed_equals_recursion
            && self.closed_equals_derived
            && self.phi0_zero
            && self.closed_forms_match
            && self.dpsi.holds
            && self.dtheta_status != "fail"
            && self.pfaffian_match
            && self.antipodal_parity
            && self.rewritten_theta_match
    }
}

/// Every angular-form identity for fiber dimension `n`.
pub fn check_angular(n: usize) -> Result<AngularReport> {
    let start = Instant::now();
    let data = AngularData::new(n)?;
    let alg = &data.alg;
    let s = top_index(n);
    let closed = closed_form_coefficients(n);
    let recursion = recursive_coefficients(n);
    let derived = data.derived_coefficients()?;
    let recursion_residuals = (1..=s)
        .map(|k| (closed[k].scale_q(&Q::int((n - 2 * k) as i64)) + closed[k - 1].clone()).to_string())
        .collect();
    let normalization =
        closed[0].clone() - Scalar::sign(parity_sign(s as i64)) * sphere_volume(n - 1).recip_monomial().expect("monomial");
    let dtheta = data.dtheta(&closed)?;
    let expected = data.expected_dtheta()?;
    let residual = dtheta.sub(&expected)?;
    let dtheta_status = match (residual.is_zero(), n % 2) {
        (false, _) => "fail",
        (true, 1) => "closed",
        (true, _) => "euler",
    };
    let pfaffian_match = n % 2 == 1 || data.phi_raw[n / 2] == alg.pfaffian()?;
    let theta = data.theta(&closed)?;
    let antipodal_parity = alg.antipodal(&theta) == theta.scale(&Scalar::sign(parity_sign(n as i64)))
        && data
            .psi_raw
            .iter()
            .all(|p| alg.antipodal(p) == p.scale(&Scalar::sign(parity_sign(n as i64))));
    Ok(AngularReport {
        n,
        s,
        c: closed.iter().map(|c| c.to_string()).collect(),
        recursion_residuals,
        normalization_residual: normalization.to_string(),
        closed_equals_recursion: closed == recursion,
        closed_equals_derived: closed == derived,
        phi0_zero: data.phi0_vanishes(),
        closed_forms_match: data.closed_forms_match()?,
        dpsi: data.check_dpsi()?,
        dtheta_status: dtheta_status.into(),
        dtheta_witness: witness(&residual),
        pfaffian_match,
        antipodal_parity,
        rewritten_theta_match: theta == data.theta_rewritten()?,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_volumes() {
        // Omega_{2s+1} = 2 pi^{s+1} / s!, Omega_{2s} = 2 (2 pi)^s / (2s - 1)!!
        for s in 0..4usize {
            let odd = Scalar::from_q(&Q::int(2) / &factorial(s as u32)).shift_pi(s as i32 + 1);
            assert_eq!(sphere_volume(2 * s + 1), odd);
            let double_fact = (1..=2 * s as i64 - 1).step_by(2).fold(Q::one(), |a, k| &a * &Q::int(k));
            let even = Scalar::from_q(&Q::int(2 * (1 << s)) / &double_fact).shift_pi(s as i32);
            assert_eq!(sphere_volume(2 * s), even);
        }
    }

    #[test]
    fn reference_coefficients() {
        let pi2 = |p: i64, q: i64| Scalar::rat(p, q).shift_pi(-2);
        assert_eq!(closed_form_coefficients(4), vec![pi2(-1, 2), pi2(1, 4)]);
        assert_eq!(closed_form_coefficients(5)[0], pi2(3, 8));
        assert_eq!(closed_form_coefficients(3)[0], Scalar::rat(-1, 4).shift_pi(-1));
        for n in 2..=8 {
            assert_eq!(closed_form_coefficients(n), recursive_coefficients(n), "n = {n}");
            if n % 2 == 0 {
                let s = top_index(n);
                assert_eq!(closed_form_coefficients(n)[s], Scalar::rat(1, 1 << (s + 1)).shift_pi(-(s as i32 + 1)));
            }
        }
    }

    #[test]
    fn small_dimensions() {
        for n in 2..=4 {
            let r = check_angular(n).unwrap();
            assert!(r.pass(), "{r:?}");
            assert!(r.dpsi.nontrivial);
        }
        assert_eq!(check_angular(3).unwrap().dtheta_status, "closed");
        assert_eq!(check_angular(2).unwrap().dtheta_status, "euler");
        assert!(check_angular(1).is_err());
        assert!(check_angular(9).is_err());
    }

    #[test]
    fn wrong_coefficients_fail() {
        let data = AngularData::new(4).unwrap();
        let mut c = closed_form_coefficients(4);
        c[1] = c[1].scale_q(&Q::int(2));
        assert_ne!(data.dtheta(&c).unwrap(), data.expected_dtheta().unwrap());
    }
}
