//! The numeric field path, fed only H and its gradient, must reproduce the
//! exact polynomial field on every catalog row.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geokin::fields::{make_field, Family, FieldSpec};
use geokin::flow::{FieldEvaluator, Hamiltonian};
use geokin::poly::random::{random_poly, random_poly_masked, RandomPolyConfig};
use geokin::poly::{CompiledPoly, Poly};
use geokin::{Chart, ChartKind};

fn numeric(h: &Poly) -> Hamiltonian {
    let value = h.compile();
    let grad: Vec<CompiledPoly> = (0..h.nvars()).map(|i| h.d(i).compile()).collect();
    Hamiltonian::Numeric(Arc::new(move |x: &[f64]| (value.eval(x), grad.iter().map(|g| g.eval(x)).collect())))
}

#[test]
fn numeric_and_exact_fields_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = RandomPolyConfig {
        max_degree: 3,
        max_terms: 5,
        coeff_bound: 3,
    };
    for kind in ChartKind::ALL {
        for n in [1, 2] {
            let c = Chart::new(kind, n).unwrap();
            let no_z: Vec<bool> = (0..c.dim()).map(|i| Some(i) != c.z_index()).collect();
            for spec in FieldSpec::rows(c) {
                for _ in 0..10 {
                    let h = if spec.family() == Family::Strict {
                        random_poly_masked(&mut rng, &no_z, cfg)
                    } else {
                        random_poly(&mut rng, c.dim(), cfg)
                    };
                    let exact = make_field(&spec, &h).unwrap();
                    let eval = FieldEvaluator::new(&spec, &numeric(&h)).unwrap();
                    assert!(!eval.is_exact());
                    let mut out = vec![0.0; c.dim()];
                    for _ in 0..5 {
                        let x: Vec<f64> = (0..c.dim()).map(|_| rng.random_range(-1.5..1.5)).collect();
                        eval.field(&x, &mut out);
                        let want = exact.eval(&x).unwrap();
                        for (a, b) in out.iter().zip(&want) {
                            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{spec}: {out:?} vs {want:?}");
                        }
                    }
                }
            }
        }
    }
}
