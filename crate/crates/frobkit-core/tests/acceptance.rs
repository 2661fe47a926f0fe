//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the tolerances pinned in code. Default precision 32 digits; agreement
//! means at least 29 digits unless stated otherwise.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::Ratio;

use frobkit_core::cocycle::{
    compute_cocycle, cocycle_from_generator_map, cyclic_class, descend_with_datum, verify_cocycle,
    GaloisStep,
};
use frobkit_core::coeff::{build_ring, CoeffRing, RingElt, RingMat};
use frobkit_core::descent::{
    filtered_descend, rank1_descend, rank1_eigenvalue, twisted_descent_plan, DetClass,
};
use frobkit_core::dieudonne::{
    classify_slopes, katz_lattice, verify_dieudonne, LatticeMode, PointClass,
};
use frobkit_core::error::Error;
use frobkit_core::frobdata::{
    cyclotomic, finite_monodromy_detect, roots_of_unity_certificate, theorem_f_check,
    Coeff, DetKind, DetSpec, FrobPoint, FrobeniusDataset, Rat,
};
use frobkit_core::isocrystal::{hom_space, is_morphism, standard_object, Isocrystal};
use frobkit_core::linalg;
use frobkit_core::padic::{hilbert90_solve, make_field, Field, PadicElement};
use frobkit_core::slopes::{
    dm_witness, isoclinic_decompose, newton_slopes, slope_factor, SlopeMultiset,
};

const PREC: u32 = 32;
const AGREE: i64 = 29;

/// deterministic splitmix64 stream
struct Rng(u64);
impl Rng {
    fn new(seed: u64) -> Self {
        Rng(seed)
    }
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
    fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
    fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.below((hi - lo + 1) as u64) as i64)
    }
}

fn l_field(p: u64, kind: usize) -> Field {
    match kind {
        0 => make_field(p, 1, None, PREC).unwrap(),
        1 => make_field(p, 2, None, PREC).unwrap(),
        _ => {
            let eis = vec![BigInt::from(-(p as i64)), BigInt::from(0), BigInt::from(1)];
            make_field(p, 1, Some(eis), PREC).unwrap()
        }
    }
}

fn random_isocrystal(ring: &CoeffRing, n: usize, rng: &mut Rng) -> Isocrystal {
    loop {
        let mut s = RingMat::zero(ring, n, n);
        for i in 0..n {
            for j in 0..n {
                let mut entry = RingElt::from_i64(ring, rng.int_in(-4, 4));
                if rng.below(3) == 0 {
                    let g = PadicElement::generator(ring.factor_field());
                    let c = PadicElement::from_i64(ring.factor_field(), rng.int_in(-2, 2));
                    let comp: Vec<PadicElement> =
                        (0..ring.factor_count()).map(|k| g.sigma(k).mul(&c)).collect();
                    entry = entry.add(&RingElt::from_components(ring, comp));
                }
                if i == j {
                    entry = entry.add(&RingElt::from_i64(ring, 1 + 2 * rng.int_in(0, 2)));
                }
                *s.at_mut(i, j) = entry;
            }
        }
        if let Ok(m) = Isocrystal::new(ring, s) {
            return m;
        }
    }
}

/// the shared random corpus: 50 objects across p, d, n, and L kinds
fn corpus() -> &'static [Isocrystal] {
    static CORPUS: std::sync::OnceLock<Vec<Isocrystal>> = std::sync::OnceLock::new();
    CORPUS.get_or_init(build_corpus)
}

fn build_corpus() -> Vec<Isocrystal> {
    let mut rng = Rng::new(0xACCE55);
    let mut rings: BTreeMap<(u64, usize, usize), CoeffRing> = BTreeMap::new();
    let mut out = Vec::with_capacity(50);
    let ps = [2u64, 3, 5];
    for i in 0..50 {
        let p = ps[(i % 3) as usize];
        let d = 1 + (rng.below(4) as usize);
        let kind = rng.below(3) as usize;
        let n = 1 + (rng.below(4) as usize);
        let ring = rings
            .entry((p, d, kind))
            .or_insert_with(|| build_ring(p, d, &l_field(p, kind)).unwrap())
            .clone();
        out.push(random_isocrystal(&ring, n, &mut rng));
    }
    out
}

fn linearize_oracle(m: &Isocrystal) -> RingMat {
    let n = m.rank();
    let ring = m.ring().clone();
    let mut rows = Vec::new();
    for i in 0..n {
        let mut x: Vec<RingElt> = (0..n)
            .map(|j| if i == j { RingElt::one(&ring) } else { RingElt::zero(&ring) })
            .collect();
        for _ in 0..ring.d() {
            x = m.apply_semilinear(&x);
        }
        rows.extend(x);
    }
    RingMat::new(&ring, n, n, rows)
}

#[test]
fn acceptance_01_linearization_oracle() {
    let corpus = corpus();
    assert_eq!(corpus.len(), 50);
    for m in corpus {
        let a = m.linearize();
        let b = linearize_oracle(m);
        assert!(
            a.agrees_to(&b, AGREE),
            "linearize disagrees with the semilinear iteration (p={}, d={}, n={})",
            m.ring().p(),
            m.ring().d(),
            m.rank()
        );
    }
    println!("ACCEPTANCE 1: PASS - linearize matches d-fold semilinear iteration on 50 random objects (>= {} digits)", AGREE);
}

#[test]
fn acceptance_02_char_poly_rationality() {
    let corpus = corpus();
    for m in corpus {
        let cp = m.char_poly().expect("coefficients must be invariant and land in L");
        assert_eq!(cp.coeffs.len(), m.rank() + 1);
        let one = PadicElement::one(m.ring().l_field());
        assert!(cp.coeffs[m.rank()].agrees_to(&one, AGREE));
    }
    println!("ACCEPTANCE 2: PASS - characteristic polynomials are invariant and projected into L on the corpus");
}

#[test]
fn acceptance_03_slope_correctness() {
    // standard objects
    let ring = build_ring(5, 1, &l_field(5, 0)).unwrap();
    for (s, r) in [(0i64, 1usize), (1, 1), (1, 2), (1, 3), (2, 3), (3, 2)] {
        let e = standard_object(s, r, &ring).unwrap();
        let ms = newton_slopes(&e.char_poly().unwrap()).unwrap();
        assert_eq!(ms.entries, vec![(Ratio::new(s, r as i64), r)], "E^({}/{})", s, r);
    }
    // tensor/dual/det identities on corpus objects of moderate size
    let corpus = corpus();
    let mut checked = 0;
    for m in corpus.iter().filter(|m| m.rank() <= 3) {
        let cp = m.char_poly().unwrap();
        let slopes = newton_slopes(&cp).unwrap();
        // det: sum of slopes
        let det = m.det_object().unwrap();
        let det_slope = newton_slopes(&det.char_poly().unwrap()).unwrap();
        let total: Ratio<i64> = slopes
            .as_sorted_list()
            .iter()
            .sum();
        assert_eq!(det_slope.as_sorted_list(), vec![total], "det slope must be the sum");
        // dual: negated multiset
        let dual = m.dual().unwrap();
        let dual_slopes = newton_slopes(&dual.char_poly().unwrap()).unwrap();
        assert_eq!(dual_slopes, slopes.negate(), "dual must negate slopes");
        // tensor with a rank-1 object shifts by its slope
        let e1 = standard_object(1, 1, m.ring()).unwrap();
        let t = m.tensor(&e1).unwrap();
        let t_slopes = newton_slopes(&t.char_poly().unwrap()).unwrap();
        assert_eq!(t_slopes, slopes.shift(Ratio::new(1, 1)));
        // tensor with the unit object preserves the char poly
        let u = Isocrystal::unit(m.ring());
        let tu = m.tensor(&u).unwrap();
        let cpu = tu.char_poly().unwrap();
        for (a, b) in cp.coeffs.iter().zip(cpu.coeffs.iter()) {
            assert!(a.agrees_to(b, AGREE));
        }
        checked += 1;
        if checked >= 12 {
            break;
        }
    }
    assert!(checked >= 8);
    println!("ACCEPTANCE 3: PASS - standard-object slopes and tensor/dual/det slope identities hold");
}

#[test]
fn acceptance_04_decomposition_round_trip() {
    let mut rng = Rng::new(44);
    let ring = build_ring(5, 1, &l_field(5, 0)).unwrap();
    let ring3 = build_ring(3, 1, &l_field(3, 0)).unwrap();
    // random conjugates of block-diagonal objects decompose and reassemble
    for rg in [&ring, &ring3] {
        for _ in 0..5 {
            let block = standard_object(0, 1, rg)
                .unwrap()
                .direct_sum(&standard_object(1, 1, rg).unwrap())
                .unwrap()
                .direct_sum(&standard_object(1, 2, rg).unwrap())
                .unwrap();
            let p = loop {
                let mut p = RingMat::zero(rg, 4, 4);
                for i in 0..4 {
                    for j in 0..4 {
                        *p.at_mut(i, j) = RingElt::from_i64(rg, rng.int_in(-3, 3));
                    }
                }
                if p.is_invertible() {
                    break p;
                }
            };
            let m = block.conjugate(&p).unwrap();
            let parts = isoclinic_decompose(&m).unwrap();
            let slopes: Vec<Ratio<i64>> = parts.iter().map(|x| x.slope).collect();
            assert_eq!(
                slopes,
                vec![Ratio::new(0, 1), Ratio::new(1, 2), Ratio::new(1, 1)],
                "block slopes recovered"
            );
            // reassembly is an isomorphism: the decomposition verifies the
            // stacked inclusion internally; check ranks too
            let total: usize = parts.iter().map(|x| x.object.rank()).sum();
            assert_eq!(total, 4);
        }
    }
    // standard-form witnesses for conjugated standard objects
    for (s, r) in [(1i64, 2usize), (1, 3)] {
        let e = standard_object(s, r, &ring).unwrap();
        let p = loop {
            let mut p = RingMat::zero(&ring, r, r);
            for i in 0..r {
                for j in 0..r {
                    *p.at_mut(i, j) = RingElt::from_i64(&ring, rng.int_in(-3, 3));
                }
            }
            if p.is_invertible() {
                break p;
            }
        };
        let m = e.conjugate(&p).unwrap();
        let w = dm_witness(&m, 6).unwrap();
        assert_eq!(w.block_count, 1);
        assert_eq!(w.extension_degree % r, 0);
        let conj = w.extended.conjugate(&w.base_change).unwrap();
        assert!(conj.matrix().agrees_to(w.standard_form.matrix(), AGREE - 3));
    }
    println!("ACCEPTANCE 4: PASS - isoclinic decomposition and standard-form witnesses round-trip");
}

#[test]
fn acceptance_05_half_twist_descent_regression() {
    for p in [3u64, 5] {
        let l = make_field(p, 1, None, PREC).unwrap();
        let ring = build_ring(p, 2, &l).unwrap();
        let unit = Isocrystal::unit(&ring);
        let (m, _) = unit.tate_twist(-1, 2).unwrap();
        // eigenvalue of F^2 is p
        let lam = rank1_eigenvalue(&m).unwrap();
        assert_eq!(lam.valuation().unwrap(), Ratio::new(1, 1));
        // descent to Q_p is obstructed by the norm criterion (odd valuation)
        let qp = make_field(p, 1, None, PREC).unwrap();
        match rank1_descend(&m, &qp) {
            Err(Error::Obstructed { valuation, .. }) => {
                assert!(valuation.starts_with('1'), "odd valuation obstruction");
            }
            other => panic!("expected obstruction, got {:?}", other.map(|_| ()).err()),
        }
        // descent to Q_(p^2) succeeds
        let qp2 = make_field(p, 2, None, PREC).unwrap();
        let d2 = rank1_descend(&m, &qp2).unwrap();
        assert_eq!(
            rank1_eigenvalue(&d2.object).unwrap().valuation().unwrap(),
            Ratio::new(1, 1)
        );
        // descent to Q_p(sqrt p) succeeds
        let eis = vec![BigInt::from(-(p as i64)), BigInt::from(0), BigInt::from(1)];
        let kram = make_field(p, 1, Some(eis), PREC).unwrap();
        let d3 = rank1_descend(&m, &kram).unwrap();
        assert_eq!(
            rank1_eigenvalue(&d3.object).unwrap().valuation().unwrap(),
            Ratio::new(1, 1)
        );
    }
    println!("ACCEPTANCE 5: PASS - the slope-1/2 twist fails to Q_p and descends to Q_p(sqrt p) and Q_(p^2) for p in {{3, 5}}");
}

#[test]
fn acceptance_06_hilbert_90() {
    let mut rng = Rng::new(90);
    let mut count = 0;
    for p in [2u64, 3, 5] {
        for mdeg in [2usize, 3] {
            let f = make_field(p, mdeg, None, PREC).unwrap();
            let g = PadicElement::generator(&f);
            let mut done = 0;
            while done < 9 {
                // random unit u, lambda = u / sigma(u) has relative norm 1
                let mut u = PadicElement::from_i64(&f, rng.int_in(1, (p as i64 - 1).max(1)));
                for i in 0..mdeg {
                    let c = rng.int_in(0, p as i64 - 1);
                    u = u.add(
                        &PadicElement::from_i64(&f, c)
                            .mul(&g.pow(i as i64).unwrap())
                            .shift_p(1),
                    );
                }
                if u.is_zero_at_precision() || u.vnum_t() != Some(0) {
                    continue;
                }
                let lambda = u.div(&u.sigma(1)).unwrap();
                let a = hilbert90_solve(&lambda, 1).unwrap();
                let lhs = a.clone();
                let rhs = lambda.mul(&a.sigma(1));
                assert!(lhs.agrees_to(&rhs, AGREE + 1), "witness must satisfy a = lambda sigma(a)");
                done += 1;
                count += 1;
            }
            // valuation obstruction raises NormNotOne
            let bad = PadicElement::from_i64(&f, p as i64);
            assert!(matches!(hilbert90_solve(&bad, 1), Err(Error::NormNotOne(_))));
        }
    }
    assert!(count >= 50);
    println!("ACCEPTANCE 6: PASS - Hilbert 90 witnesses verified on norm-1 inputs; valuation obstructions rejected ({} cases)", count);
}

#[test]
fn acceptance_07_cocycle_suite() {
    let mut rng = Rng::new(707);
    let p = 5u64;
    let l0 = make_field(p, 1, None, PREC).unwrap();
    let l = make_field(p, 2, None, PREC).unwrap();
    let step = GaloisStep::new(&l0, &l).unwrap();
    let ring = build_ring(p, 2, &l).unwrap();
    let ring0 = build_ring(p, 2, &l0).unwrap();
    // every computed cocycle verifies; induced objects give the trivial class
    // and the full pipeline round-trips
    for _ in 0..4 {
        let u = 1 + (p as i64) * rng.int_in(0, 8);
        let s0 = RingMat::new(
            &ring0,
            1,
            1,
            vec![RingElt::from_l_scalar(&ring0, &PadicElement::from_i64(&l0, u))],
        );
        let m0 = Isocrystal::new(&ring0, s0).unwrap();
        let m = m0.induce(&l).unwrap();
        let xi = compute_cocycle(&m, &step).unwrap();
        assert!(verify_cocycle(&xi, &step), "computed cocycles satisfy the identity");
        let class = cyclic_class(&xi, &step).unwrap();
        assert!(class.trivial, "induced objects have trivial class");
        let alpha = class.witness.unwrap();
        let mut maps = xi.maps.clone();
        for (i, a) in alpha.iter().enumerate() {
            maps[i] = maps[i].scale(&RingElt::from_l_scalar(&ring, &a.inverse().unwrap()));
        }
        let out = descend_with_datum(&m, &step, &maps).unwrap();
        let cp0 = m0.char_poly().unwrap();
        let cp1 = out.object.char_poly().unwrap();
        for (a, b) in cp0.coeffs.iter().zip(cp1.coeffs.iter()) {
            assert!(a.agrees_to(b, AGREE - 4));
        }
    }
    // duality: xi_(M*) = xi_M^(-1) under the inverse-dual choice of maps
    let m = {
        let s = RingMat::new(
            &ring,
            1,
            1,
            vec![RingElt::from_l_scalar(&ring, &PadicElement::from_i64(&l, 30))],
        );
        Isocrystal::new(&ring, s).unwrap()
    };
    let xi = compute_cocycle(&m, &step).unwrap();
    let dual = m.dual().unwrap();
    let d_star = xi.maps[1].inverse().unwrap().transpose();
    let xi_star = cocycle_from_generator_map(&dual, &step, &d_star).unwrap();
    for i in 0..xi.order {
        for j in 0..xi.order {
            let prod = xi.table[i][j].mul(&xi_star.table[i][j]);
            assert!(prod.agrees_to(&PadicElement::one(&l), AGREE - 2));
        }
    }
    // multiplicativity of the class invariant
    let mk = |u: i64, v: i64| {
        let x = PadicElement::from_i64(&l, u).shift_p(v);
        let s = RingMat::new(&ring, 1, 1, vec![RingElt::from_l_scalar(&ring, &x)]);
        Isocrystal::new(&ring, s).unwrap()
    };
    let a_obj = mk(3, 1);
    let b_obj = mk(7, 2);
    let xi_a = compute_cocycle(&a_obj, &step).unwrap();
    let xi_b = compute_cocycle(&b_obj, &step).unwrap();
    let t = a_obj.tensor(&b_obj).unwrap();
    let d_t = xi_a.maps[1].at(0, 0).mul(xi_b.maps[1].at(0, 0));
    let xi_t = cocycle_from_generator_map(&t, &step, &RingMat::new(&ring, 1, 1, vec![d_t])).unwrap();
    let inv_a = cyclic_class(&xi_a, &step).unwrap().invariant;
    let inv_b = cyclic_class(&xi_b, &step).unwrap().invariant;
    let inv_t = cyclic_class(&xi_t, &step).unwrap().invariant;
    assert!(inv_t.agrees_to(&inv_a.mul(&inv_b), AGREE - 4));
    println!("ACCEPTANCE 7: PASS - cocycle identities, trivial classes on induced objects, duality, multiplicativity, and the descent pipeline hold");
}

#[test]
fn acceptance_08_filtered_descent() {
    let mut rng = Rng::new(808);
    let p = 5u64;
    let qp = make_field(p, 1, None, PREC).unwrap();
    let l = make_field(p, 2, None, PREC).unwrap();
    let ring0 = build_ring(p, 2, &qp).unwrap();
    for _ in 0..3 {
        let base = standard_object(0, 1, &ring0)
            .unwrap()
            .direct_sum(&standard_object(1, 1, &ring0).unwrap())
            .unwrap();
        let c0 = loop {
            let mut c = RingMat::zero(&ring0, 2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    *c.at_mut(i, j) = RingElt::from_i64(&ring0, rng.int_in(-3, 3));
                }
            }
            if c.is_invertible() {
                break c;
            }
        };
        let m0 = base.conjugate(&c0).unwrap();
        let induced = m0.induce(&l).unwrap();
        let ring1 = induced.ring().clone();
        let c1 = loop {
            let mut c = RingMat::zero(&ring1, 2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    *c.at_mut(i, j) = RingElt::from_i64(&ring1, rng.int_in(-3, 3));
                }
            }
            if c.is_invertible() {
                break c;
            }
        };
        let m = induced.conjugate(&c1).unwrap();
        let desc = filtered_descend(&m, &qp).unwrap();
        let re = desc.object.induce(&l).unwrap();
        assert!(
            is_morphism(&re, &m, &desc.certificate, AGREE - 3),
            "certificate conjugates the induction onto the input"
        );
        let cp0 = m0.char_poly().unwrap();
        let cp1 = desc.object.char_poly().unwrap();
        for (a, b) in cp0.coeffs.iter().zip(cp1.coeffs.iter()) {
            assert!(a.agrees_to(b, AGREE - 3));
        }
    }
    // supersingular rejection
    let ss = standard_object(1, 2, &ring0).unwrap().induce(&l).unwrap();
    assert!(matches!(filtered_descend(&ss, &qp), Err(Error::SlopeZeroNotSimple(_))));
    println!("ACCEPTANCE 8: PASS - induced-then-conjugated ordinary objects descend with verified certificates; supersingular inputs rejected");
}

#[test]
fn acceptance_09_twist_plan_forcing() {
    let s = vec![Ratio::new(-1i64, 2), Ratio::new(1, 2)];
    let plan = twisted_descent_plan(&s, 1, DetClass::Tate, true).unwrap();
    assert_eq!(plan.s_over_r, Ratio::new(1, 2));
    assert_eq!(plan.q_prime_p_exponent, 2, "q' = p^2 is the least power of q divisible by p^r");
    assert_eq!(plan.twist, Ratio::new(-1, 2));
    assert_eq!(plan.predicted_slopes, vec![Ratio::new(0, 1), Ratio::new(1, 1)]);
    assert_eq!(plan.forced_half, Some(true));
    // with q = p^2 already: q' = q
    let plan2 = twisted_descent_plan(&s, 2, DetClass::Tate, true).unwrap();
    assert_eq!(plan2.q_prime_exponent, 1);
    let bad = vec![Ratio::new(-1i64, 3), Ratio::new(1, 3)];
    assert!(matches!(
        twisted_descent_plan(&bad, 1, DetClass::Tate, true),
        Err(Error::BoundViolation(_))
    ));
    let flat = vec![Ratio::new(0i64, 1), Ratio::new(0, 1)];
    assert!(matches!(
        twisted_descent_plan(&flat, 1, DetClass::Tate, true),
        Err(Error::NotAntisymmetricSlopes(_))
    ));
    println!("ACCEPTANCE 9: PASS - twist plans force s/r = 1/2 with Tate determinant over Q_p and flag the 1/3 configuration");
}

#[test]
fn acceptance_10_dieudonne_suite() {
    let mut rng = Rng::new(1010);
    let ring = build_ring(5, 1, &l_field(5, 0)).unwrap();
    // admissible inputs succeed with FV = VF = p
    let admissible = [
        standard_object(1, 2, &ring).unwrap(),
        standard_object(0, 1, &ring)
            .unwrap()
            .direct_sum(&standard_object(1, 1, &ring).unwrap())
            .unwrap(),
    ];
    for base in &admissible {
        for _ in 0..3 {
            let n = base.rank();
            let p = loop {
                let mut p = RingMat::zero(&ring, n, n);
                for i in 0..n {
                    for j in 0..n {
                        *p.at_mut(i, j) = RingElt::from_i64(&ring, rng.int_in(-3, 3));
                    }
                }
                if p.is_invertible() {
                    break p;
                }
            };
            let m = base.conjugate(&p).unwrap();
            let d = katz_lattice(&m, LatticeMode::Dieudonne).unwrap();
            let rep = verify_dieudonne(&d);
            assert!(rep.pass, "FV = VF = p on the saturated lattice: {:?}", rep);
        }
    }
    // inadmissible inputs fail with the right error
    let neg = standard_object(1, 1, &ring).unwrap().dual().unwrap();
    assert!(matches!(katz_lattice(&neg, LatticeMode::FCrystal), Err(Error::NegativeSlope(_))));
    let high = standard_object(2, 1, &ring).unwrap();
    assert!(matches!(katz_lattice(&high, LatticeMode::Dieudonne), Err(Error::SlopeAboveOne(_))));
    assert!(katz_lattice(&high, LatticeMode::FCrystal).is_ok());
    // classification matches newton slopes on 100 random rank-2 polynomials
    let l = l_field(5, 0);
    let mut agree = 0;
    for _ in 0..100 {
        let a_val = rng.int_in(0, 2);
        let a_unit = 1 + 5 * rng.int_in(0, 3);
        let b_val = rng.int_in(0, 2);
        let b_unit = 1 + 5 * rng.int_in(0, 3);
        let coeffs = vec![
            PadicElement::from_i64(&l, b_unit).shift_p(b_val),
            PadicElement::from_i64(&l, a_unit).shift_p(a_val),
            PadicElement::one(&l),
        ];
        let cp = frobkit_core::isocrystal::CharPoly { field: l.clone(), coeffs, d: 1 };
        let ms = newton_slopes(&cp).unwrap();
        let class = classify_slopes(&ms, true);
        let list = ms.as_sorted_list();
        let expect = if list == vec![Ratio::new(0, 1), Ratio::new(1, 1)] {
            PointClass::Ordinary
        } else if list == vec![Ratio::new(1, 2), Ratio::new(1, 2)] {
            PointClass::Supersingular
        } else {
            PointClass::Invalid { reason: String::new() }
        };
        let matches = matches!(
            (&class, &expect),
            (PointClass::Ordinary, PointClass::Ordinary)
                | (PointClass::Supersingular, PointClass::Supersingular)
                | (PointClass::Invalid { .. }, PointClass::Invalid { .. })
        );
        assert!(matches, "classification must agree with newton slopes");
        agree += 1;
    }
    assert_eq!(agree, 100);
    println!("ACCEPTANCE 10: PASS - lattices succeed exactly on admissible slopes with FV = VF = p; classification agrees with newton slopes on 100 polynomials");
}

#[test]
fn acceptance_11_finite_monodromy() {
    let mut rng = Rng::new(1111);
    let mut cache = BTreeMap::new();
    // float oracle at 1e-9 (simple roots: random integer polynomials and
    // products of distinct cyclotomics)
    let mut tested = 0;
    while tested < 200 {
        let deg_target = 1 + rng.below(6) as usize;
        let poly: Vec<BigInt> = if rng.below(2) == 0 {
            let mut acc = vec![BigInt::from(1)];
            let mut used = Vec::new();
            loop {
                let k = 1 + rng.below(10) as usize;
                if used.contains(&k) {
                    break;
                }
                used.push(k);
                let ck = cyclotomic(k, &mut cache);
                if acc.len() + ck.len() - 2 > 6 {
                    break;
                }
                let mut next = vec![BigInt::from(0); acc.len() + ck.len() - 1];
                for (i, a) in acc.iter().enumerate() {
                    for (j, b) in ck.iter().enumerate() {
                        next[i + j] += a * b;
                    }
                }
                acc = next;
                if acc.len() - 1 >= deg_target {
                    break;
                }
            }
            acc
        } else {
            let mut v: Vec<BigInt> =
                (0..deg_target).map(|_| BigInt::from(rng.int_in(-5, 5))).collect();
            if v[0] == BigInt::from(0) {
                v[0] = BigInt::from(1);
            }
            v.push(BigInt::from(1));
            v
        };
        if poly.len() < 2 {
            continue;
        }
        tested += 1;
        let exact = roots_of_unity_certificate(&poly, 6).is_some();
        let float = unit_circle_oracle(&poly, 1e-9);
        assert_eq!(exact, float, "Kronecker verdict vs float oracle on {:?}", poly);
    }
    // the all-isoclinic chain on a constructed unit-root dataset
    let trivial = DetSpec { kind: DetKind::Trivial, weight: 0 };
    let mk = |polys: Vec<Vec<i64>>| FrobeniusDataset {
        p: 7,
        d: 1,
        rank: 2,
        det: trivial,
        sqrt_disc: None,
        points: polys
            .into_iter()
            .enumerate()
            .map(|(i, poly)| FrobPoint {
                label: format!("x{}", i),
                degree: 1,
                poly: poly
                    .into_iter()
                    .map(|c| Coeff::rational(Rat::from_integer(BigInt::from(c))))
                    .collect(),
            })
            .collect(),
    };
    let good = mk(vec![vec![1, -1, 1], vec![1, -2, 1], vec![1, 0, 1]]);
    let rep = theorem_f_check(&good).unwrap();
    assert!(rep.all_isoclinic);
    assert_eq!(rep.monodromy.as_ref().unwrap().verdict, "finite");
    assert_eq!(finite_monodromy_detect(&good, 1).unwrap().verdict, "finite");
    // a weight-normalized ordinary point reports the excluded configuration
    // (normalization by d = 2 puts the slopes at -1/2 and 1/2)
    let mut bad = mk(vec![vec![1, 0, 1]]);
    bad.d = 2;
    bad.points[0].poly[1] = Coeff::rational(Rat::new(BigInt::from(1), BigInt::from(7)));
    let rep = theorem_f_check(&bad).unwrap();
    assert!(!rep.all_isoclinic);
    assert!(rep.excluded_points[0].contains("-1/2"));
    println!("ACCEPTANCE 11: PASS - exact Kronecker verdicts match the float oracle on 200 polynomials; the isoclinic chain and exclusion reports hold");
}

/// Durand-Kerner magnitude oracle used only as an independent check.
fn unit_circle_oracle(poly: &[BigInt], tol: f64) -> bool {
    let n = poly.len() - 1;
    if n == 0 {
        return true;
    }
    let coeffs: Vec<(f64, f64)> = poly
        .iter()
        .map(|c| (c.to_string().parse::<f64>().unwrap(), 0.0))
        .collect();
    let cmul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let csub = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0, a.1 - b.1);
    let cdiv = |a: (f64, f64), b: (f64, f64)| {
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    };
    let eval = |z: (f64, f64)| {
        let mut acc = (0.0, 0.0);
        for c in coeffs.iter().rev() {
            acc = cmul(acc, z);
            acc = (acc.0 + c.0, acc.1 + c.1);
        }
        acc
    };
    let mut roots: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
            (1.3 * th.cos(), 1.3 * th.sin())
        })
        .collect();
    for _ in 0..400 {
        for i in 0..n {
            let mut den = (1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den = cmul(den, csub(roots[i], roots[j]));
                }
            }
            let corr = cdiv(eval(roots[i]), den);
            roots[i] = csub(roots[i], corr);
        }
    }
    roots.iter().all(|r| ((r.0 * r.0 + r.1 * r.1).sqrt() - 1.0).abs() < tol)
}

#[test]
fn acceptance_extra_norm_criterion_matches_search_oracle() {
    // brute-force preimage search at 3 digits, entirely at the residue level
    // (independent of the element arithmetic), cross-checking the exact
    // divisibility criterion for p in {2, 3, 5}, f in {2, 3}
    let mut rng = Rng::new(555);
    for p in [2u64, 3, 5] {
        for f in [2usize, 3] {
            let k_field = make_field(p, 1, None, PREC).unwrap();
            // Z/p^3 arithmetic on the monomial basis of the unramified
            // degree-f extension
            let p3 = p.pow(3);
            let fbar = frobkit_core::fp::least_irreducible(p, f);
            let gred: Vec<u64> = (0..f).map(|i| (p3 - fbar[i] % p3) % p3).collect();
            let mul = |a: &[u64], b: &[u64]| -> Vec<u64> {
                let mut wide = vec![0u64; 2 * f - 1];
                for i in 0..f {
                    for j in 0..f {
                        wide[i + j] = (wide[i + j] + a[i] * b[j]) % p3;
                    }
                }
                for k in (f..2 * f - 1).rev() {
                    let top = wide[k];
                    if top == 0 {
                        continue;
                    }
                    wide[k] = 0;
                    for i in 0..f {
                        wide[k - f + i] = (wide[k - f + i] + top * gred[i]) % p3;
                    }
                }
                wide.truncate(f);
                wide
            };
            // frobenius at 3 digits: x -> x^p in (Z/p^3)[g]/(f lift)
            let frob = |a: &[u64]| -> Vec<u64> {
                let mut acc = vec![0u64; f];
                acc[0] = 1;
                let mut base = a.to_vec();
                let mut e = p;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = mul(&acc, &base);
                    }
                    base = mul(&base, &base);
                    e >>= 1;
                }
                acc
            };
            let mut reachable = std::collections::BTreeSet::new();
            let count = p3.pow(f as u32);
            for code in 0..count {
                let mut c = code;
                let mut x = vec![0u64; f];
                for xi in x.iter_mut() {
                    *xi = c % p3;
                    c /= p3;
                }
                if x[0] % p == 0 && x[1..].iter().all(|&v| v % p == 0) {
                    continue; // not a unit
                }
                let mut nm = vec![0u64; f];
                nm[0] = 1;
                let mut conj = x.clone();
                for _ in 0..f {
                    nm = mul(&nm, &conj);
                    conj = frob(&conj);
                }
                if nm[1..].iter().all(|&v| v == 0) {
                    reachable.insert(nm[0]);
                }
            }
            // every unit of Z/p^3 must be reached, and only units are
            let expected: std::collections::BTreeSet<u64> =
                (1..p3).filter(|v| v % p != 0).collect();
            assert_eq!(reachable, expected, "p={} f={}", p, f);
            for _ in 0..50 {
                let v = rng.int_in(0, 4);
                let u = 1 + (p as i64) * rng.int_in(0, (p3 as i64 / p as i64) - 1);
                let x = PadicElement::from_i64(&k_field, u).shift_p(v);
                let exact = frobkit_core::padic::is_norm(&x, f).unwrap();
                // search verdict: valuation part must split into f powers of
                // the uniformizer; the unit part is always reachable
                let search = v.rem_euclid(f as i64) == 0;
                assert_eq!(exact, search, "p={} f={} v={}", p, f, v);
            }
        }
    }
    println!("ACCEPTANCE EXTRA: PASS - the exact norm criterion matches the 3-digit brute-force preimage search");
}

#[test]
fn acceptance_extra_invariants() {
    // slope multiset denominators over Q_p divide multiplicities; the product
    // of slope factors recovers the polynomial
    let ring = build_ring(3, 1, &l_field(3, 0)).unwrap();
    let e = standard_object(1, 3, &ring).unwrap();
    let cp = e.char_poly().unwrap();
    let ms = newton_slopes(&cp).unwrap();
    for (s, m) in &ms.entries {
        assert_eq!(m % (*s.denom() as usize), 0);
    }
    let fs = slope_factor(&cp).unwrap();
    assert_eq!(fs.len(), 1);
    // hom dimension doubles under induction for a pair of rank-1 objects
    let l2 = make_field(3, 2, None, PREC).unwrap();
    let a = standard_object(0, 1, &ring).unwrap();
    let d0 = hom_space(&a, &a).unwrap().dim;
    let a2 = a.induce(&l2).unwrap();
    let d1 = hom_space(&a2, &a2).unwrap().dim;
    assert_eq!(d0, d1, "dimension over the base counts the same L-rank");
    // restriction multiplies rank
    let qp = l_field(3, 0);
    let m = standard_object(0, 1, &build_ring(3, 1, &l2).unwrap()).unwrap();
    let r = m.restrict(&qp).unwrap();
    assert_eq!(r.rank(), 2);
    // unit / inverse checks at the ring level
    let z = RingElt::from_i64(&ring, 7);
    assert!(z.is_unit());
    assert!(z
        .inverse()
        .unwrap()
        .mul(&z)
        .agrees_to(&RingElt::one(&ring), AGREE));
    let sm = SlopeMultiset::from_list(vec![Ratio::new(1, 2), Ratio::new(1, 2)]);
    assert_eq!(sm.entries, vec![(Ratio::new(1, 2), 2)]);
    let _ = linalg::Mat::identity(&qp, 2);
    println!("ACCEPTANCE EXTRA: PASS - cross-module invariants hold");
}

