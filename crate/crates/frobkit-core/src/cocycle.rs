//! Galois twisting of objects over a cyclic unramified coefficient step
//! L / L0, the two-cocycle attached to a choice of isomorphisms onto the
//! twists, coboundary testing through the norm criterion, and effective
//! execution of descent data by twisted averaging.

use num_traits::Zero;

use crate::coeff::{CoeffRing, RingElt, RingMap, RingMat};
use crate::error::{Error, Result};
use crate::isocrystal::{hom_space, Isocrystal};
use crate::padic::{self, Field, FieldEmbedding, PadicElement};

/// A cyclic unramified coefficient-field step L / L0 with its generator
/// sigma_L^(m_0).
pub struct GaloisStep {
    pub l0: Field,
    pub l: Field,
    pub embedding: FieldEmbedding,
    /// group order n = [L : L0]
    pub order: usize,
    /// the generator acts on L as sigma^gen_power
    pub gen_power: usize,
}

impl GaloisStep {
    pub fn new(l0: &Field, l: &Field) -> Result<Self> {
        if l0.ram_degree() != l.ram_degree()
            || l0.eisenstein() != l.eisenstein()
            || l.unram_degree() % l0.unram_degree() != 0
        {
            return Err(Error::UnsupportedTower(
                "galois steps must be unramified with matching eisenstein parts".into(),
            ));
        }
        let embedding = FieldEmbedding::new(l0, l)?;
        let order = l.unram_degree() / l0.unram_degree();
        Ok(GaloisStep {
            l0: l0.clone(),
            l: l.clone(),
            embedding,
            order,
            gen_power: l0.unram_degree(),
        })
    }

    /// Apply g^i to an element of L.
    pub fn act(&self, x: &PadicElement, i: usize) -> PadicElement {
        x.sigma((self.gen_power * i) % self.l.unram_degree().max(1))
    }
}

/// The two-cocycle attached to M and a choice of isomorphisms c_(g^i).
pub struct Cocycle {
    pub order: usize,
    /// xi(g^i, g^j), values in L
    pub table: Vec<Vec<PadicElement>>,
    /// matrices of c_(g^i), index 0 holding the identity
    pub maps: Vec<RingMat>,
}

/// Scalar of a matrix that must be lambda * identity with lambda in L.
fn scalar_of(m: &RingMat, ring: &CoeffRing, tol: i64) -> Result<PadicElement> {
    let n = m.rows;
    let diag = m.at(0, 0).clone();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                if !m.at(i, j).agrees_to(&diag, tol) {
                    return Err(Error::PrecisionLoss(
                        "composite is not a scalar matrix".into(),
                    ));
                }
            } else if !m.at(i, j).is_zero() {
                return Err(Error::PrecisionLoss(
                    "composite has nonzero off-diagonal entries".into(),
                ));
            }
        }
    }
    let _ = ring;
    diag.as_l_scalar()
        .map_err(|_| Error::PrecisionLoss("composite scalar does not lie in L".into()))
}

/// Deterministic normalization of a basis morphism: scale by the inverse of
/// the first nonzero L-coordinate of the first minimal-valuation entry.
fn normalize_map(raw: &RingMat, ring: &CoeffRing) -> Result<RingMat> {
    let mut best: Option<(usize, i64)> = None;
    for (idx, z) in raw.entries().iter().enumerate() {
        let v = z
            .components()
            .iter()
            .filter_map(|c| c.vnum_t())
            .min();
        if let Some(v) = v {
            if best.map_or(true, |(_, bv)| v < bv) {
                best = Some((idx, v));
            }
        }
    }
    let Some((idx, _)) = best else {
        return Err(Error::NotIsomorphicToTwist);
    };
    let coords = raw.entries()[idx].l_coordinates()?;
    let lam = coords
        .into_iter()
        .find(|c| !c.is_zero_at_precision())
        .ok_or(Error::NotIsomorphicToTwist)?;
    let scale = RingElt::from_l_scalar(ring, &lam.inverse()?);
    Ok(raw.scale(&scale))
}

/// Compute the cocycle of M for the cyclic step, choosing each c_g
/// deterministically.
pub fn compute_cocycle(m: &Isocrystal, step: &GaloisStep) -> Result<Cocycle> {
    let ring = m.ring().clone();
    assert!(ring.l_field().same_field(&step.l), "object not over the step's top field");
    let end = hom_space(m, m)?;
    if end.dim != 1 {
        return Err(Error::EndTooBig(end.dim));
    }
    // generator map
    let tw = m.galois_twist(step.gen_power)?;
    let homs = hom_space(m, &tw)?;
    if homs.dim == 0 {
        return Err(Error::NotIsomorphicToTwist);
    }
    if homs.dim > 1 {
        return Err(Error::EndTooBig(homs.dim));
    }
    let d_mat = normalize_map(&homs.basis[0], &ring)?;
    cocycle_from_generator_map(m, step, &d_mat)
}

/// Build the full table from a chosen generator isomorphism.
pub fn cocycle_from_generator_map(
    m: &Isocrystal,
    step: &GaloisStep,
    d_mat: &RingMat,
) -> Result<Cocycle> {
    let ring = m.ring().clone();
    let n = step.order;
    let tol = ring.precision() as i64 - 4;
    // c_(g^(i+1)) = c_(g^i) . (g^i c_g): matrices compose left to right
    let mut maps = Vec::with_capacity(n);
    maps.push(RingMat::identity(&ring, m.rank()));
    for i in 1..n {
        let prev = &maps[i - 1];
        let twisted = d_mat.galois_map(0, (step.gen_power * (i - 1)) as i64);
        maps.push(prev.matmul(&twisted));
    }
    // xi(g^i, g^j) = c_(g^i) . (g^i c_(g^j)) . c_(g^(i+j))^(-1)
    let mut table = vec![vec![PadicElement::one(&step.l); n]; n];
    for i in 0..n {
        for j in 0..n {
            let twisted = maps[j].galois_map(0, (step.gen_power * i) as i64);
            let comp = maps[i]
                .matmul(&twisted)
                .matmul(&maps[(i + j) % n].inverse()?);
            table[i][j] = scalar_of(&comp, &ring, tol)?;
        }
    }
    Ok(Cocycle { order: n, table, maps })
}

/// Check the 2-cocycle identity at precision on every triple.
pub fn verify_cocycle(xi: &Cocycle, step: &GaloisStep) -> bool {
    let n = xi.order;
    let tol = step.l.precision() as i64 - 5;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                // ^(g^a) xi(g^b, g^c) * xi(g^a, g^(b+c))
                let lhs = step.act(&xi.table[b][c], a).mul(&xi.table[a][(b + c) % n]);
                // xi(g^(a+b), g^c) * xi(g^a, g^b)
                let rhs = xi.table[(a + b) % n][c].mul(&xi.table[a][b]);
                if !lhs.agrees_to(&rhs, tol) {
                    return false;
                }
            }
        }
    }
    true
}

pub struct CyclicClass {
    /// the norm-residue invariant, an element of L0
    pub invariant: PadicElement,
    pub trivial: bool,
    /// a cobounding function alpha(g^i) when trivial
    pub witness: Option<Vec<PadicElement>>,
}

/// Decide triviality of a verified cocycle on the cyclic step by the exact
/// unramified norm criterion, and construct a cobounding alpha when trivial.
pub fn cyclic_class(xi: &Cocycle, step: &GaloisStep) -> Result<CyclicClass> {
    let n = xi.order;
    // reported invariant: product over xi(g, g^i)
    let mut a = PadicElement::one(&step.l);
    for i in 0..n {
        a = a.mul(&xi.table[1 % n][i]);
    }
    let a0 = step
        .embedding
        .extract(&a)
        .map_err(|_| Error::PrecisionLoss("class invariant does not lie in L0".into()))?;
    let v = a0.vnum_t().ok_or(Error::PrecisionZero)?;
    let trivial = v.rem_euclid(n as i64) == 0;
    if !trivial {
        return Ok(CyclicClass { invariant: a0, trivial, witness: None });
    }
    // witness: alpha(g^(i+1)) = ^(g^i) alpha(g) * alpha(g^i) / xi(g^i, g),
    // consistency requires Nm(alpha(g)) = C = prod_i xi(g^i, g)
    let mut c = PadicElement::one(&step.l);
    for i in 0..n {
        c = c.mul(&xi.table[i][1 % n]);
    }
    let c0 = step
        .embedding
        .extract(&c)
        .map_err(|_| Error::PrecisionLoss("unwinding product does not lie in L0".into()))?;
    let (ok, w) = padic::is_norm_with_witness(&c0, n)?;
    if !ok {
        // both products represent the same class; this cannot differ
        return Err(Error::PrecisionLoss(
            "norm criterion disagrees between invariant representatives".into(),
        ));
    }
    let w = w.ok_or(Error::NoWitness(step.l.precision()))?;
    // transplant the witness into L (same field spec)
    let x = transplant(&w.witness, &step.l);
    let mut alpha = vec![PadicElement::one(&step.l); n];
    for i in 0..n.saturating_sub(1) {
        let num = step.act(&x, i).mul(&alpha[i]);
        alpha[i + 1] = num.div(&xi.table[i][1 % n])?;
    }
    // verify the coboundary equation on all pairs
    let tol = step.l.precision() as i64 - 6;
    for i in 0..n {
        for j in 0..n {
            let b = step.act(&alpha[j], i).mul(&alpha[i]).div(&alpha[(i + j) % n])?;
            if !b.agrees_to(&xi.table[i][j], tol) {
                return Err(Error::PrecisionLoss(
                    "coboundary witness verification failed".into(),
                ));
            }
        }
    }
    Ok(CyclicClass { invariant: a0, trivial, witness: Some(alpha) })
}

/// Move an element to an identical field spec behind a different handle.
fn transplant(x: &PadicElement, target: &Field) -> PadicElement {
    assert!(x.field().same_field(target));
    let Some((a, coords)) = x.integral_coordinates() else {
        return PadicElement::zero(target);
    };
    let m = target.unram_degree();
    let g = PadicElement::generator(target);
    let t = PadicElement::uniformizer(target);
    let mut acc = PadicElement::zero(target);
    for (idx, c) in coords.iter().enumerate() {
        if c.is_zero() {
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

pub struct DescentOutcome {
    pub object: Isocrystal,
    /// base change Q over the big ring: S0 = (sigma tensor 1)(Q) S Q^(-1)
    pub certificate: RingMat,
}

/// Execute a descent datum with trivial cocycle: find the averaged base
/// change, check the descended matrix is fixed by the coefficient action, and
/// extract it over L0.
pub fn descend_with_datum(
    m: &Isocrystal,
    step: &GaloisStep,
    maps: &[RingMat],
) -> Result<DescentOutcome> {
    let ring = m.ring().clone();
    let n = step.order;
    assert_eq!(maps.len(), n);
    let tol = ring.precision() as i64 - 5;
    // datum validation: c_1 = id, composition closes with xi = 1
    if !maps[0].agrees_to(&RingMat::identity(&ring, m.rank()), tol) {
        return Err(Error::NotADatum("c_identity is not the identity".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let twisted = maps[j].galois_map(0, (step.gen_power * i) as i64);
            let comp = maps[i].matmul(&twisted);
            if !comp.agrees_to(&maps[(i + j) % n], tol.min(ring.precision() as i64 - 6)) {
                return Err(Error::NotADatum(format!(
                    "cocycle condition fails at ({}, {})",
                    i, j
                )));
            }
        }
    }
    // averaged base change over deterministic regularizers
    let candidates = theta_candidates(&ring, m.rank());
    let mut found: Option<RingMat> = None;
    for theta in candidates {
        let mut b = RingMat::zero(&ring, m.rank(), m.rank());
        for i in 0..n {
            let twisted = theta.galois_map(0, (step.gen_power * i) as i64);
            b = b.add(&maps[i].matmul(&twisted));
        }
        if b.is_invertible() {
            found = Some(b);
            break;
        }
    }
    let Some(b) = found else {
        return Err(Error::PrecisionLoss(
            "no regularizer made the averaged map invertible".into(),
        ));
    };
    let q = b.inverse()?;
    let s0 = q.sigma_tensor_one().matmul(m.matrix()).matmul(&q.inverse()?);
    // the descended matrix must be fixed by the coefficient action
    let moved = s0.galois_map(0, step.gen_power as i64);
    if !moved.agrees_to(&s0, tol.min(ring.precision() as i64 - 8)) {
        return Err(Error::PrecisionLoss(
            "averaged matrix is not fixed by the galois action".into(),
        ));
    }
    let ring0 = crate::coeff::build_ring(ring.p(), ring.d(), &step.l0)?;
    let incl = RingMap::new(&ring0, &ring)?;
    let s0_small = incl.extract_mat(&s0)?;
    let object = Isocrystal::new(&ring0, s0_small)?;
    Ok(DescentOutcome { object, certificate: q })
}

fn theta_candidates(ring: &CoeffRing, n: usize) -> Vec<RingMat> {
    let mut out = Vec::new();
    out.push(RingMat::identity(ring, n));
    let g = PadicElement::generator(ring.factor_field());
    let m = ring.factor_field().unram_degree();
    for shift in 1..m.max(2) {
        let mut mat = RingMat::zero(ring, n, n);
        for i in 0..n {
            let pow = ((i * shift) % m.max(1)) as i64;
            let val = g.pow(pow).unwrap().add(&PadicElement::from_i64(
                ring.factor_field(),
                1 + i as i64,
            ));
            *mat.at_mut(i, i) = RingElt::from_components(
                ring,
                (0..ring.factor_count()).map(|k| val.sigma(k)).collect(),
            );
        }
        out.push(mat);
    }
    // a few dense deterministic patterns
    for salt in 1..4i64 {
        let mut mat = RingMat::identity(ring, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    *mat.at_mut(i, j) = RingElt::from_i64(ring, (i as i64 + salt * j as i64) % 3);
                }
            }
        }
        out.push(mat);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::build_ring;
    use crate::descent::rank1_descend;
    use crate::isocrystal::standard_object;
    use crate::padic::make_field;
    use crate::testutil::Rng;

    fn setup(p: u64) -> (Field, Field, GaloisStep) {
        let l0 = make_field(p, 1, None, 24).unwrap();
        let l = make_field(p, 2, None, 24).unwrap();
        let step = GaloisStep::new(&l0, &l).unwrap();
        (l0, l, step)
    }

    #[test]
    fn induced_objects_have_trivial_class_and_round_trip() {
        let mut rng = Rng::new(7);
        let (l0, l, step) = setup(5);
        let ring0 = build_ring(5, 2, &l0).unwrap();
        for n in 1..=2usize {
            // random invertible object over L0, induced up to L
            let m0 = loop {
                let mut s = RingMat::zero(&ring0, n, n);
                for i in 0..n {
                    for j in 0..n {
                        *s.at_mut(i, j) = RingElt::from_i64(&ring0, rng.int_in(-3, 3));
                    }
                    *s.at_mut(i, i) =
                        s.at(i, i).add(&RingElt::from_i64(&ring0, 1 + 2 * rng.int_in(0, 2)));
                }
                if let Ok(m) = Isocrystal::new(&ring0, s) {
                    break m;
                }
            };
            let m = m0.induce(&l).unwrap();
            // skip inputs whose endomorphisms are not scalar (the cocycle
            // would not be canonical)
            if crate::isocrystal::hom_space(&m, &m).unwrap().dim != 1 {
                continue;
            }
            let xi = compute_cocycle(&m, &step).unwrap();
            assert!(verify_cocycle(&xi, &step));
            let class = cyclic_class(&xi, &step).unwrap();
            assert!(class.trivial, "induced objects must have trivial class");
            let alpha = class.witness.unwrap();
            // scale the maps by 1/alpha to get a datum, then execute descent
            let mut maps = xi.maps.clone();
            for (i, a) in alpha.iter().enumerate() {
                let s = RingElt::from_l_scalar(m.ring(), &a.inverse().unwrap());
                maps[i] = maps[i].scale(&s);
            }
            let out = descend_with_datum(&m, &step, &maps).unwrap();
            // round trip: the descended object has the same char poly as m0
            let cp0 = m0.char_poly().unwrap();
            let cp1 = out.object.char_poly().unwrap();
            for (a, b) in cp0.coeffs.iter().zip(cp1.coeffs.iter()) {
                assert!(a.agrees_to(b, 15));
            }
        }
    }

    #[test]
    fn half_twist_class_is_nontrivial_with_odd_valuation() {
        let (l0, l, step) = setup(5);
        let _ = l0;
        // the slope-1/2 rank-1 object descended to Q_(p^2): eigenvalue p
        let qp_ring = build_ring(5, 2, &make_field(5, 1, None, 24).unwrap()).unwrap();
        let unit = Isocrystal::unit(&qp_ring);
        let (m_ram, _) = unit.tate_twist(-1, 2).unwrap();
        let qp2 = l.clone();
        let desc = rank1_descend(&m_ram, &qp2).unwrap();
        let m = desc.object;
        let xi = compute_cocycle(&m, &step).unwrap();
        assert!(verify_cocycle(&xi, &step));
        let class = cyclic_class(&xi, &step).unwrap();
        assert!(!class.trivial);
        let v = class.invariant.vnum_t().unwrap();
        assert_eq!(v.rem_euclid(2), 1, "invariant valuation must be odd, got {}", v);
    }

    #[test]
    fn dual_cocycle_is_inverse() {
        let (_, _, step) = setup(3);
        let ring = build_ring(3, 2, &step.l).unwrap();
        // a rank-1 object isomorphic to its twist: diagonal from L0
        let m = {
            let s = RingMat::new(
                &ring,
                1,
                1,
                vec![RingElt::from_l_scalar(&ring, &PadicElement::from_i64(&step.l, 3 + 9))],
            );
            Isocrystal::new(&ring, s).unwrap()
        };
        let xi = compute_cocycle(&m, &step).unwrap();
        let dual = m.dual().unwrap();
        // inverse-dual choice of maps: (c_g^*)^(-1) = inverse transpose
        let d_star = xi.maps[1].inverse().unwrap().transpose();
        let xi_star = cocycle_from_generator_map(&dual, &step, &d_star).unwrap();
        for i in 0..xi.order {
            for j in 0..xi.order {
                let prod = xi.table[i][j].mul(&xi_star.table[i][j]);
                assert!(prod.agrees_to(&PadicElement::one(&step.l), 18));
            }
        }
    }

    #[test]
    fn class_is_multiplicative_under_tensor() {
        let (_, _, step) = setup(5);
        let ring = build_ring(5, 2, &step.l).unwrap();
        let mk = |u: i64, v: i64| {
            let x = PadicElement::from_i64(&step.l, u).shift_p(v);
            let s = RingMat::new(&ring, 1, 1, vec![RingElt::from_l_scalar(&ring, &x)]);
            Isocrystal::new(&ring, s).unwrap()
        };
        let m = mk(3, 1);
        let n = mk(2, 0);
        let xi_m = compute_cocycle(&m, &step).unwrap();
        let xi_n = compute_cocycle(&n, &step).unwrap();
        let t = m.tensor(&n).unwrap();
        let d_t = xi_m.maps[1].at(0, 0).mul(xi_n.maps[1].at(0, 0));
        let xi_t =
            cocycle_from_generator_map(&t, &step, &RingMat::new(&ring, 1, 1, vec![d_t])).unwrap();
        let a_m = cyclic_class(&xi_m, &step).unwrap().invariant;
        let a_n = cyclic_class(&xi_n, &step).unwrap().invariant;
        let a_t = cyclic_class(&xi_t, &step).unwrap().invariant;
        assert!(a_t.agrees_to(&a_m.mul(&a_n), 16));
    }

    #[test]
    fn twisting_preserves_hom_dimensions() {
        use crate::isocrystal::hom_space;
        use crate::testutil::Rng;
        let (_, _, step) = setup(5);
        let ring = build_ring(5, 2, &step.l).unwrap();
        let mut rng = Rng::new(21);
        for _ in 0..3 {
            let mk = |rng: &mut Rng| loop {
                let mut s = RingMat::zero(&ring, 2, 2);
                for i in 0..2 {
                    for j in 0..2 {
                        *s.at_mut(i, j) = RingElt::from_i64(&ring, rng.int_in(-3, 3));
                    }
                    *s.at_mut(i, i) = s.at(i, i).add(&RingElt::from_i64(&ring, 1));
                }
                if let Ok(m) = Isocrystal::new(&ring, s) {
                    break m;
                }
            };
            let m = mk(&mut rng);
            let n = mk(&mut rng);
            let d0 = hom_space(&m, &n).unwrap().dim;
            let d1 = hom_space(
                &m.galois_twist(step.gen_power).unwrap(),
                &n.galois_twist(step.gen_power).unwrap(),
            )
            .unwrap()
            .dim;
            assert_eq!(d0, d1);
        }
    }

    #[test]
    fn perturbed_tables_and_data_are_rejected()  {
        let (_, _, step) = setup(5);
        let ring = build_ring(5, 2, &step.l).unwrap();
        let m = standard_object(0, 1, &ring).unwrap();
        let mut xi = compute_cocycle(&m, &step).unwrap();
        assert!(verify_cocycle(&xi, &step));
        // perturb one entry by something not fixed by the group
        xi.table[1][1] = xi.table[1][1].add(&PadicElement::generator(&step.l));
        assert!(!verify_cocycle(&xi, &step));
        // perturbed maps are not a datum
        let xi2 = compute_cocycle(&m, &step).unwrap();
        let mut maps = xi2.maps.clone();
        let bad = RingElt::from_l_scalar(m.ring(), &PadicElement::generator(&step.l));
        maps[1] = maps[1].scale(&bad);
        assert!(matches!(
            descend_with_datum(&m, &step, &maps),
            Err(Error::NotADatum(_))
        ));
    }
}
