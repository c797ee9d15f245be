use std::sync::Arc;

use hpl_core::field::{make_field, splitting_type, Elem, IdealTag, PrimeSel};
use hpl_core::forms::{hilbert_divisor_series, random_elliptic, random_hilbert};
use hpl_core::io::{read_form, write_form, FormData};
use hpl_core::lvalue::{build_h_prime, euler_factors, verify_gz, EulerInputs, SplittingKind};
use hpl_core::padic::{PadicRing, PadicScalar};
use hpl_core::qexp::HilbertSpace;
use hpl_core::weights::{PairClass, WeightPair};
use proptest::prelude::*;

fn space(p: u64, prec: u32, bound: u32) -> Arc<HilbertSpace> {
    let f = make_field(5).unwrap();
    let s = splitting_type(&f, p, prec).unwrap();
    HilbertSpace::new(f, s, IdealTag::InverseDifferent, bound).unwrap()
}

fn ring_strategy() -> impl Strategy<Value = PadicRing> {
    prop_oneof![Just((7u64, 1u8)), Just((7, 2)), Just((11, 1)), Just((11, 2))]
        .prop_map(|(p, d)| PadicRing::new(p, 10, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(ring in ring_strategy(), a in any::<[u64; 2]>(), b in any::<[u64; 2]>(), c in any::<[u64; 2]>()) {
        let m = ring.modulus();
        let hi = if ring.degree() == 2 { m } else { 1 };
        let x = ring.from_coords([a[0] % m, a[1] % hi]);
        let y = ring.from_coords([b[0] % m, b[1] % hi]);
        let z = ring.from_coords([c[0] % m, c[1] % hi]);
        prop_assert_eq!((x + y) * z, x * z + y * z);
        prop_assert_eq!(x * y, y * x);
        prop_assert!((x - x).is_zero());
        if x.is_unit() {
            prop_assert_eq!(x * x.inv().unwrap(), ring.one());
        }
    }

    #[test]
    fn exp_inverts_log(ring in ring_strategy(), a in any::<u64>()) {
        let x = ring.one() + ring.from_coords([a % ring.modulus(), 0]).mul_p_pow(1);
        let back = x.log().unwrap().exp().unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn scalar_valuations_add(ring in ring_strategy(), a in 1i128..10_000, b in 1i128..10_000) {
        let x = PadicScalar::from_int(ring, a);
        let y = PadicScalar::from_int(ring, b);
        prop_assert_eq!(x.mul(&y).valuation(), x.valuation() + y.valuation());
        prop_assert!(x.div(&y).unwrap().mul(&y).agreement(&x) >= x.abs_prec().min(ring.prec() as i64) - y.valuation());
    }

    #[test]
    fn weight_pair_roundtrip(l1 in 1i64..20, dl in 0i64..6, dk in -20i64..20) {
        let l = [l1, l1 + 2 * dl];
        let k = l[0] + l[1] + 2 * dk;
        let w = WeightPair::from_lk(l, k).unwrap();
        prop_assert_eq!(w.l(), l);
        prop_assert_eq!(w.k(), k);
        match w.classify().unwrap() {
            PairClass::FDominated { t } => prop_assert_eq!(t, dk),
            PairClass::Balanced { s, .. } => {
                prop_assert_eq!(s, -dk - 1);
                prop_assert!(s <= l1 - 2);
            }
            PairClass::Neither => prop_assert!(-dk - 1 > l1 - 2),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_linear(split in any::<bool>(), s1 in any::<u64>(), s2 in any::<u64>(), c in 1i128..1000) {
        let sp = space(if split { 11 } else { 7 }, 8, 16);
        let f = random_hilbert(s1, &sp);
        let g = random_hilbert(s2, &sp);
        let c = sp.ring().int(c);
        let h = f.scale(c).add(&g).unwrap();
        for i in 1..=2 {
            prop_assert_eq!(h.d_op(i), f.d_op(i).scale(c).add(&g.d_op(i)).unwrap());
        }
        let hz = h.zeta_star();
        prop_assert_eq!(hz, f.zeta_star().scale(c).add(&g.zeta_star()).unwrap());
        prop_assert_eq!(h.deplete(PrimeSel::P), f.deplete(PrimeSel::P).scale(c).add(&g.deplete(PrimeSel::P)).unwrap());
        let uh = h.u_op(PrimeSel::P);
        prop_assert_eq!(uh, f.u_op(PrimeSel::P).scale(c).add(&g.u_op(PrimeSel::P)).unwrap());
    }

    #[test]
    fn u_left_inverts_v(split in any::<bool>(), seed in any::<u64>()) {
        let sp = space(if split { 11 } else { 7 }, 8, 24);
        let f = random_hilbert(seed, &sp);
        let primes = if split { vec![PrimeSel::P1, PrimeSel::P2, PrimeSel::P] } else { vec![PrimeSel::P] };
        for w in primes {
            let uv = f.v_op(w).u_op(w);
            prop_assert_eq!(uv.diff_valuation(&f.truncate(uv.bound())).unwrap(), 8);
            let d = f.deplete(w);
            prop_assert_eq!(d.deplete(w), d);
        }
    }

    #[test]
    fn form_files_roundtrip(split in any::<bool>(), seed in any::<u64>()) {
        let sp = space(if split { 11 } else { 7 }, 6, 14);
        let f = random_hilbert(seed, &sp);
        let FormData::Hilbert(back) = read_form(&write_form(&FormData::Hilbert(f.clone())), Some(&sp)).unwrap() else {
            panic!("kind changed")
        };
        prop_assert_eq!(back, f);
        let e = random_elliptic(seed, sp.ring(), 20);
        let FormData::Elliptic(eb) = read_form(&write_form(&FormData::Elliptic(e.clone())), None).unwrap() else {
            panic!("kind changed")
        };
        prop_assert_eq!(eb.coeffs(), e.coeffs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gz_agreement_is_invariant_under_unit_scaling(u in 1i128..48, s in 0i64..2) {
        prop_assume!(u % 7 != 0);
        let sp = space(7, 10, 24);
        let l = s + 4;
        let g = hilbert_divisor_series(&sp, l as u32).unwrap();
        let base = verify_gz(&g, [l, l], s).unwrap();
        let scaled = verify_gz(&g.scale(sp.ring().int(u)), [l, l], s).unwrap();
        prop_assert_eq!(base.noc.agreement, scaled.noc.agreement);
        prop_assert_eq!(base.projected.agreement, scaled.projected.agreement);
    }

    #[test]
    fn constant_term_does_not_reach_depleted_pipeline(c in 1i128..10_000) {
        let sp = space(7, 8, 20);
        let g = hilbert_divisor_series(&sp, 4).unwrap();
        let bump = hpl_core::qexp::HilbertQExp::monomial(&sp, &Elem::zero(5), sp.ring().int(c)).unwrap();
        let g2 = g.add(&bump).unwrap();
        let a = build_h_prime(&g.deplete(PrimeSel::P), [4, 4], 0).unwrap();
        let b = build_h_prime(&g2.deplete(PrimeSel::P), [4, 4], 0).unwrap();
        prop_assert_eq!(a.diff_valuation(&b).unwrap(), 8);
    }

    #[test]
    fn euler_factors_are_trivial_without_data(split in any::<bool>(), a in 1i128..100) {
        prop_assume!(a % 7 != 0 && a % 11 != 0);
        let ring = PadicRing::new(if split { 11 } else { 7 }, 10, 1).unwrap();
        let z = PadicScalar::zero(ring, 10);
        let inp = EulerInputs {
            kind: if split { SplittingKind::Split } else { SplittingKind::Inert },
            g_roots: vec![(z, z); if split { 2 } else { 1 }],
            alpha_f: PadicScalar::from_int(ring, a),
            beta_f: z,
            t: 0,
        };
        let e = euler_factors(&inp).unwrap();
        let one = PadicScalar::from_int(ring, 1);
        prop_assert!(e.e_p.agreement(&one) >= 10);
        prop_assert!(e.e_fstar.agreement(&one) >= 10);
        prop_assert!(e.exceptional.is_empty());
    }
}
