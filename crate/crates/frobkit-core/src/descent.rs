//! Rank-1 classification and norm-criterion descent, the filtered descent
//! engine for objects whose slope-0 part is one-dimensional, and the
//! twisted-descent planner for antisymmetric rank-2 slope data.

use num_rational::Ratio;
use num_traits::Signed;

use crate::cocycle::{cocycle_from_generator_map, descend_with_datum, DescentOutcome, GaloisStep};
use crate::coeff::{build_ring, RingElt, RingMat};
use crate::error::{Error, Result};
use crate::isocrystal::{hom_space, is_morphism, Isocrystal};
use crate::padic::{self, Field, FieldEmbedding, PadicElement};
use crate::slopes::{self, Slope};

/// Successful descent: the object over the smaller field plus a certificate
/// conjugating its induction back to the input.
pub struct Descended {
    pub object: Isocrystal,
    /// invertible map over the input's ring with
    /// S_input = (sigma tensor 1)(C)^(-1) S_induced C in the row convention,
    /// stored as the hom-space witness induce(object) -> input
    pub certificate: RingMat,
}

/// The eigenvalue of F^d on a rank-1 object, as an element of L. Two rank-1
/// objects are isomorphic exactly when these agree at precision.
pub fn rank1_eigenvalue(m: &Isocrystal) -> Result<PadicElement> {
    assert_eq!(m.rank(), 1, "rank-1 classification needs a rank-1 object");
    let lin = m.linearize();
    lin.at(0, 0).as_l_scalar().map_err(|_| {
        Error::InvarianceFailure("F^d eigenvalue does not lie in L".into())
    })
}

/// Norm membership for the algebra map K -> Q_q tensor K: true iff
/// f = d / gcd(d, m_K) divides the normalized valuation of x.
pub fn is_norm_algebra(x: &PadicElement, d: usize) -> Result<bool> {
    let m_k = x.field().unram_degree();
    let f = d / gcd(d, m_k);
    padic::is_norm(x, f)
}

/// Membership plus a ring witness: an element of Q_q tensor K whose algebra
/// norm is x.
pub fn is_norm_algebra_with_witness(
    x: &PadicElement,
    d: usize,
) -> Result<(bool, Option<RingElt>)> {
    let field = x.field().clone();
    let m_k = field.unram_degree();
    let f = d / gcd(d, m_k);
    let (ok, field_witness) = padic::is_norm_with_witness(x, f)?;
    if !ok {
        return Ok((false, None));
    }
    let ring = build_ring(field.p(), d, &field)?;
    // place the field witness in the factor-0 slot, 1 elsewhere; the factor
    // field of the ring has the same spec as the witness extension
    let w = field_witness.unwrap();
    let transplanted = transplant_to(&w.witness, ring.factor_field());
    let mut comp = vec![PadicElement::one(ring.factor_field()); ring.factor_count()];
    comp[0] = transplanted;
    let cand = RingElt::from_components(&ring, comp);
    let nm = cand.algebra_norm();
    let target = RingElt::from_l_scalar(&ring, x);
    let tol = field.precision() as i64 - 4;
    if !nm.agrees_to(&target, tol) {
        return Err(Error::NoWitness(field.precision()));
    }
    Ok((true, Some(cand)))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn transplant_to(x: &PadicElement, target: &Field) -> PadicElement {
    assert!(x.field().same_field(target));
    let Some((a, coords)) = x.integral_coordinates() else {
        return PadicElement::zero(target);
    };
    let m = target.unram_degree();
    let g = PadicElement::generator(target);
    let t = PadicElement::uniformizer(target);
    let mut acc = PadicElement::zero(target);
    for (idx, c) in coords.iter().enumerate() {
        if num_traits::Zero::is_zero(c) {
            continue;
        }
        let (j, i) = (idx / m, idx % m);
        let term = PadicElement::from_bigint(target, c)
            .mul(&g.pow(i as i64).unwrap())
            .mul(&t.pow(j as i64).unwrap());
        acc = acc.add(&term);
    }
    acc.shift_p(a)
}

/// Descend a rank-1 object to a target coefficient field K whose
/// intersection with L contains the F^d eigenvalue. K need not sit inside L:
/// the certificate lives over the compositum. The obstruction is exactly
/// failure of the norm criterion; slope-0 inputs always succeed.
pub fn rank1_descend(m: &Isocrystal, k: &Field) -> Result<Descended> {
    assert_eq!(m.rank(), 1);
    let l = m.ring().l_field().clone();
    let lambda = rank1_eigenvalue(m)?;
    // the eigenvalue must lie in the common subfield of K and L
    let meet = padic::common_subfield(k, &l)?;
    let emb_meet = FieldEmbedding::new(&meet, &l)?;
    let lambda_meet = emb_meet.extract(&lambda).map_err(|_| Error::EigenvalueNotInK)?;
    let emb_k = FieldEmbedding::new(&meet, k)?;
    let lambda_k = emb_k.embed(&lambda_meet);
    let d = m.ring().d();
    let (ok, witness) = is_norm_algebra_with_witness(&lambda_k, d)?;
    if !ok {
        let f = d / gcd(d, k.unram_degree());
        return Err(Error::Obstructed {
            reason: format!(
                "eigenvalue is not an algebra norm: {} does not divide the normalized valuation",
                f
            ),
            valuation: format!(
                "{}/{}",
                lambda_k.vnum_t().unwrap_or(0),
                k.ram_degree()
            ),
        });
    }
    let a = witness.unwrap();
    let ring_k = a.ring().clone();
    let descended = Isocrystal::new(&ring_k, RingMat::new(&ring_k, 1, 1, vec![a]))?;
    // certificate: isomorphism over the compositum of K and L
    let join = padic::compositum(k, &l)?;
    let lhs = descended.induce(&join)?;
    let rhs = m.induce(&join)?;
    let homs = hom_space(&lhs, &rhs)?;
    if homs.dim == 0 {
        return Err(Error::PrecisionLoss(
            "descended object is not isomorphic to the input".into(),
        ));
    }
    let cert = homs.basis[0].clone();
    if cert.at(0, 0).is_zero() {
        return Err(Error::PrecisionLoss("certificate degenerate".into()));
    }
    Ok(Descended { object: descended, certificate: cert })
}

/// The filtered-descent engine: slope 0 with multiplicity exactly 1 and char
/// poly over L0. When the endomorphisms are scalar the descent datum of the
/// slope-0 rank-1 piece is transported to the whole object through the
/// identification of the two cocycles and executed by twisted averaging. A
/// pointwise object of rank at least 2 with two slopes always decomposes, so
/// the transport degenerates to descending the isoclinic summands by the
/// norm criterion and reassembling with a verified certificate.
pub fn filtered_descend(m: &Isocrystal, l0: &Field) -> Result<Descended> {
    let l = m.ring().l_field().clone();
    let step = GaloisStep::new(l0, &l)?;
    let ring = m.ring().clone();
    let tol = ring.precision() as i64 - 4;
    // char poly coefficients must lie in L0
    let cp = m.char_poly()?;
    for c in &cp.coeffs {
        if !c.is_zero_at_precision() && step.embedding.extract(c).is_err() {
            return Err(Error::CharPolyNotRational);
        }
    }
    // slope 0 with multiplicity exactly 1
    let factors = slopes::slope_factor(&cp)?;
    let zero = Ratio::new(0, 1);
    let z = factors.iter().find(|(s, _)| *s == zero);
    let Some((_, zf)) = z else {
        return Err(Error::SlopeZeroNotSimple(0));
    };
    if zf.len() - 1 != 1 {
        return Err(Error::SlopeZeroNotSimple(zf.len() - 1));
    }
    let end = hom_space(m, m)?;
    if end.dim == 1 {
        // scalar endomorphisms: transport the slope-0 datum through the
        // cocycle identification and execute
        return transported_descent(m, l0, &step, tol);
    }
    // decomposable input: descend the isoclinic summands individually
    let parts = slopes::isoclinic_decompose(m)?;
    if parts.iter().any(|p| p.object.rank() != 1) {
        return Err(Error::EndTooBig(end.dim));
    }
    let mut descended_parts = Vec::with_capacity(parts.len());
    for part in &parts {
        descended_parts.push(rank1_descend(&part.object, l0)?);
    }
    let mut object = descended_parts[0].object.clone();
    for dp in &descended_parts[1..] {
        object = object.direct_sum(&dp.object)?;
    }
    // certificate rows: c_i * W_i stacked
    let n = m.rank();
    let mut cert = RingMat::zero(&ring, n, n);
    let mut row = 0;
    for (part, dp) in parts.iter().zip(descended_parts.iter()) {
        let c_i = dp.certificate.at(0, 0);
        for i in 0..part.inclusion.rows {
            for j in 0..n {
                *cert.at_mut(row, j) = part.inclusion.at(i, j).mul(c_i);
            }
            row += 1;
        }
    }
    let induced = object.induce(&l)?;
    if !is_morphism(&induced, m, &cert, tol - 2) || !cert.is_invertible() {
        return Err(Error::PrecisionLoss("certificate fails verification".into()));
    }
    Ok(Descended { object, certificate: cert })
}

/// Descent via the cocycle identification, valid under the Schur condition.
fn transported_descent(
    m: &Isocrystal,
    l0: &Field,
    step: &GaloisStep,
    tol: i64,
) -> Result<Descended> {
    let l = m.ring().l_field().clone();
    let ring = m.ring().clone();
    let zero = Ratio::new(0, 1);
    let parts = slopes::isoclinic_decompose(m)?;
    let n1 = parts
        .iter()
        .find(|p| p.slope == zero)
        .ok_or(Error::SlopeZeroNotSimple(0))?;
    assert_eq!(n1.object.rank(), 1);
    // descend the rank-1 piece (always succeeds: slope 0, eigenvalue in L0)
    let d1 = rank1_descend(&n1.object, l0)?;
    // generator isomorphism on M, scaled so that its restriction to N1
    // matches the canonical datum transported through d1's certificate
    let tw = m.galois_twist(step.gen_power)?;
    let homs = hom_space(m, &tw)?;
    if homs.dim == 0 {
        return Err(Error::NotIsomorphicToTwist);
    }
    if homs.dim > 1 {
        return Err(Error::EndTooBig(homs.dim));
    }
    let phi = &homs.basis[0];
    // restriction of phi to N1 as a scalar: W phi = rho * (g W)
    let w = &n1.inclusion;
    let w_phi = w.matmul(phi);
    let gw = w.galois_map(0, step.gen_power as i64);
    let rho = solve_scalar(&w_phi, &gw, tol)?;
    // canonical datum on N1 through the certificate psi: n_g = psi^(-1) (g psi)
    let psi = d1.certificate.at(0, 0).clone();
    let n_g = psi.inverse()?.mul(&psi.galois_map(0, step.gen_power as i64));
    // scale phi by the L-scalar n_g / rho
    let ratio = n_g.mul(&rho.inverse()?);
    let lam = ratio.as_l_scalar().map_err(|_| {
        Error::PrecisionLoss("datum correction scalar does not lie in L".into())
    })?;
    let c_g = phi.scale(&RingElt::from_l_scalar(&ring, &lam));
    // assemble the datum and execute
    let xi = cocycle_from_generator_map(m, step, &c_g)?;
    let outcome: DescentOutcome = descend_with_datum(m, step, &xi.maps)?;
    let induced = outcome.object.induce(&l)?;
    let cert = hom_space(&induced, m)?;
    if cert.dim == 0 {
        return Err(Error::PrecisionLoss(
            "descended object is not isomorphic to the input".into(),
        ));
    }
    let cmat = cert.basis[0].clone();
    if !is_morphism(&induced, m, &cmat, tol - 2) {
        return Err(Error::PrecisionLoss("certificate fails verification".into()));
    }
    Ok(Descended { object: outcome.object, certificate: cmat })
}

/// rho with a = rho * b for rank-1 row spaces a, b (1 x n ring matrices).
fn solve_scalar(a: &RingMat, b: &RingMat, tol: i64) -> Result<RingElt> {
    // find a unit entry of b
    for j in 0..b.cols {
        if b.at(0, j).is_unit() {
            let rho = a.at(0, j).mul(&b.at(0, j).inverse()?);
            // verify proportionality
            let scaled = b.scale(&rho);
            if scaled.agrees_to(a, tol) {
                return Ok(rho);
            }
            return Err(Error::PrecisionLoss("rows are not proportional".into()));
        }
    }
    Err(Error::PrecisionLoss("no unit entry in comparison row".into()))
}

/// Plan for the twisted descent of a rank-2 object from antisymmetric point
/// slopes {-s/r, s/r}.
#[derive(Debug, Clone)]
pub struct TwistPlan {
    pub s_over_r: Slope,
    /// least power of q divisible by p^r, as the exponent of q
    pub q_prime_exponent: usize,
    /// q' = p^(this exponent)
    pub q_prime_p_exponent: usize,
    pub twist: Slope,
    pub predicted_slopes: Vec<Slope>,
    /// set when the target coefficient field is Q_p and the determinant is
    /// the Tate class: 2s/r must be a positive integer within the rank-2
    /// bound, which forces s/r = 1/2
    pub forced_half: Option<bool>,
}

/// Determinant class declared by the caller for planning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetClass {
    Tate,
    Other,
}

pub fn twisted_descent_plan(
    point_slopes: &[Slope],
    d: usize,
    det: DetClass,
    target_is_qp: bool,
) -> Result<TwistPlan> {
    if point_slopes.len() != 2 {
        return Err(Error::NotAntisymmetricSlopes(format!(
            "expected two slopes, got {}",
            point_slopes.len()
        )));
    }
    let mut s = point_slopes.to_vec();
    s.sort();
    let lam = s[1];
    if s[0] != -lam || lam <= Ratio::new(0, 1) {
        return Err(Error::NotAntisymmetricSlopes(format!("{:?}", point_slopes)));
    }
    if lam.abs() > Ratio::new(1, 2) {
        return Err(Error::BoundViolation(format!(
            "slope {} exceeds the rank-2 half bound",
            lam
        )));
    }
    let r = *lam.denom() as usize;
    // q' = q^k, least k with d*k >= r... divisibility: p^r | q^k = p^(dk)
    let k = r.div_ceil(d);
    let two_lam = lam * Ratio::from_integer(2);
    let forced_half = if target_is_qp && det == DetClass::Tate {
        if !two_lam.is_integer() {
            return Err(Error::BoundViolation(format!(
                "predicted slope 2s/r = {} is not an integer while the determinant forces one",
                two_lam
            )));
        }
        Some(lam == Ratio::new(1, 2))
    } else {
        None
    };
    Ok(TwistPlan {
        s_over_r: lam,
        q_prime_exponent: k,
        q_prime_p_exponent: d * k,
        twist: -lam,
        predicted_slopes: vec![Ratio::new(0, 1), two_lam],
        forced_half,
    })
}
