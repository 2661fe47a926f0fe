//! Property tests for the arithmetic invariants that quantify over all
//! inputs rather than a fixed corpus.

use num_bigint::BigInt;
use proptest::prelude::*;

use frobkit_core::expr::parse_element;
use frobkit_core::frobdata::{
    lint, Coeff, DetKind, DetSpec, FrobPoint, FrobeniusDataset, Rat,
};
use frobkit_core::padic::{make_field, Field, PadicElement};

fn field(p: u64) -> Field {
    make_field(p, 2, None, 20).unwrap()
}

fn element(f: &Field, a: i64, b: i64, shift: i64) -> PadicElement {
    let g = PadicElement::generator(f);
    PadicElement::from_i64(f, a)
        .add(&PadicElement::from_i64(f, b).mul(&g))
        .shift_p(shift % 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn valuation_is_additive_and_ultrametric(
        a in -50i64..50, b in -50i64..50, c in -50i64..50, d in -50i64..50, s in 0i64..4
    ) {
        let f = field(5);
        let x = element(&f, a, b, 0);
        let y = element(&f, c, d, s);
        if let (Ok(vx), Ok(vy)) = (x.valuation(), y.valuation()) {
            let prod = x.mul(&y);
            prop_assert_eq!(prod.valuation().unwrap(), vx + vy);
            let sum = x.add(&y);
            if let Ok(vs) = sum.valuation() {
                prop_assert!(vs >= vx.min(vy));
                if vx != vy {
                    prop_assert_eq!(vs, vx.min(vy));
                }
            }
        }
    }

    #[test]
    fn expression_strings_round_trip(
        a in -30i64..30, b in -30i64..30, s in -3i64..4
    ) {
        let f = field(3);
        let x = element(&f, a, b, s);
        let text = x.to_expr_string();
        let back = parse_element(&text, &f).unwrap();
        prop_assert!(back.agrees_to(&x, 18), "{} reparsed differently", text);
    }

    #[test]
    fn sigma_respects_multiplication(
        a in -20i64..20, b in -20i64..20, c in -20i64..20, d in -20i64..20
    ) {
        let f = field(5);
        let x = element(&f, a, b, 0);
        let y = element(&f, c, d, 0);
        let lhs = x.mul(&y).sigma(1);
        let rhs = x.sigma(1).mul(&y.sigma(1));
        prop_assert!(lhs.agrees_to(&rhs, 18));
    }

    #[test]
    fn fingerprints_ignore_labels_and_order(
        seed in 0u64..1000, swap in proptest::bool::ANY
    ) {
        let mk = |labels: [&str; 2], flip: bool| {
            let p1 = vec![5 + seed as i64, -1, 1];
            let p2 = vec![25, -(seed as i64 % 7) - 1, 1];
            let polys = if flip { [p2.clone(), p1.clone()] } else { [p1.clone(), p2.clone()] };
            FrobeniusDataset {
                p: 5,
                d: 1,
                rank: 2,
                det: DetSpec { kind: DetKind::Tate, weight: 1 },
                sqrt_disc: None,
                points: labels
                    .iter()
                    .zip(polys.iter())
                    .map(|(l, poly)| FrobPoint {
                        label: l.to_string(),
                        degree: 1,
                        poly: poly
                            .iter()
                            .map(|&c| Coeff::rational(Rat::from_integer(BigInt::from(c))))
                            .collect(),
                    })
                    .collect(),
            }
        };
        let a = mk(["x", "y"], false);
        let b = mk(["first", "second"], swap);
        prop_assert_eq!(lint(&a).unwrap().fingerprint, lint(&b).unwrap().fingerprint);
    }
}
