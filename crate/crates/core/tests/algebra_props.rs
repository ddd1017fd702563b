use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geokin::brackets::{bracket, jacobiator, leibniz_defect, BracketKind};
use geokin::kinetics::adjudicate::random_one_form;
use geokin::musical::{flat, sharp, sharp_roundtrip_residual, SharpVariant};
use geokin::poly::random::{random_poly, RandomPolyConfig};
use geokin::poly::{int, Poly};
use geokin::{Chart, ChartKind};

const CFG: RandomPolyConfig = RandomPolyConfig {
    max_degree: 3,
    max_terms: 4,
    coeff_bound: 4,
};

fn chart_strategy() -> impl Strategy<Value = Chart> {
    (0..4usize, 1..=2usize).prop_map(|(k, n)| Chart::new(ChartKind::ALL[k], n).unwrap())
}

fn polys(chart: Chart, seed: u64, count: usize) -> Vec<Poly> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_poly(&mut rng, chart.dim(), CFG)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(c in chart_strategy(), seed in any::<u64>()) {
        let v = polys(c, seed, 3);
        let (a, b, d) = (&v[0], &v[1], &v[2]);
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!(a * b, b * a);
        prop_assert_eq!((a + b) + d, a + (b + d));
        prop_assert_eq!((a * b) * d, a * (b * d));
        prop_assert_eq!(a * (b + d), a * b + a * d);
        prop_assert!((a - a).is_zero());
        prop_assert_eq!(a * &Poly::one(c.dim()), a.clone());
    }

    #[test]
    fn partials_commute(c in chart_strategy(), seed in any::<u64>(), i in 0..6usize, j in 0..6usize) {
        let (i, j) = (i % c.dim(), j % c.dim());
        let f = &polys(c, seed, 1)[0];
        prop_assert_eq!(f.d(i).d(j), f.d(j).d(i));
    }

    #[test]
    fn product_rule(c in chart_strategy(), seed in any::<u64>(), i in 0..6usize) {
        let i = i % c.dim();
        let v = polys(c, seed, 2);
        prop_assert_eq!((&v[0] * &v[1]).d(i), v[0].d(i) * &v[1] + &v[0] * v[1].d(i));
    }

    #[test]
    fn print_then_parse(c in chart_strategy(), seed in any::<u64>()) {
        let f = &polys(c, seed, 1)[0];
        prop_assert_eq!(&c.parse(&c.format(f)).unwrap(), f);
    }

    #[test]
    fn compiled_matches_exact(c in chart_strategy(), seed in any::<u64>(), x in prop::collection::vec(-2.0f64..2.0, 6)) {
        let f = &polys(c, seed, 1)[0];
        let x = &x[..c.dim()];
        let exact = f.eval(x).unwrap();
        prop_assert!((f.compile().eval(x) - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
    }

    #[test]
    fn flat_inverts_sharp(c in chart_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = random_one_form(&mut rng, c, CFG);
        prop_assert!(sharp_roundtrip_residual(c, &alpha).unwrap().is_zero());
        let x = sharp(c, SharpVariant::Full, &alpha).unwrap();
        prop_assert_eq!(sharp(c, SharpVariant::Full, &flat(c, &x).unwrap()).unwrap(), x);
    }

    #[test]
    fn brackets_bilinear_and_skew(c in chart_strategy(), seed in any::<u64>(), k in -5i64..5) {
        let v = polys(c, seed, 3);
        let (f, g, h) = (&v[0], &v[1], &v[2]);
        for kind in BracketKind::ALL.into_iter().filter(|b| b.chart_kind() == c.kind()) {
            let lhs = bracket(kind, &c, &(f + g.scale_int(k)), h).unwrap();
            let rhs = bracket(kind, &c, f, h).unwrap() + bracket(kind, &c, g, h).unwrap().scale(&int(k));
            prop_assert_eq!(lhs, rhs);
            prop_assert!(bracket(kind, &c, f, f).unwrap().is_zero());
        }
    }

    #[test]
    fn bracket_laws(c in chart_strategy(), seed in any::<u64>()) {
        let v = polys(c, seed, 3);
        let (f, g, h) = (&v[0], &v[1], &v[2]);
        for kind in BracketKind::ALL.into_iter().filter(|b| b.chart_kind() == c.kind()) {
            if kind.satisfies_jacobi_identity() {
                prop_assert!(jacobiator(kind, &c, f, g, h).unwrap().is_zero());
            }
            let defect = leibniz_defect(kind, &c, f, g, h).unwrap();
            match c.z_index().filter(|_| !kind.satisfies_leibniz()) {
                Some(z) => prop_assert_eq!(defect, g * h * f.d(z)),
                None => prop_assert!(defect.is_zero()),
            }
        }
    }
}
