//! The exact identity suite of one chart, run on seeded random inputs.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::brackets::{bracket, bracket_via_bivector, jacobiator, leibniz_defect, BracketKind};
use crate::chart::{Chart, ChartKind};
use crate::error::Result;
use crate::fields::laws::{check_row, homomorphism_residual, relation_checks, reeb_checks, LawCheck};
use crate::fields::{Family, FieldSpec};
use crate::kinetics::adjudicate::{adjudicate, random_one_form};
use crate::kinetics::{
    dual_pairing_defect, frozen_coefficients, intertwine_residual, momentum_map, momentum_map_abstract,
    MomentumOneForm,
};
use crate::musical::sharp_roundtrip_residual;
use crate::poly::random::{random_poly, random_poly_masked, RandomPolyConfig};
use crate::poly::Poly;

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub law: String,
    pub status: Status,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub chart: Chart,
    pub seed: u64,
    pub samples: usize,
    pub passed: bool,
    pub laws: Vec<LawReport>,
}

/// Folds repeated checks of the same law into one report line, keeping the
/// first witness.
#[derive(Default)]
struct Tally {
    order: Vec<String>,
    laws: BTreeMap<String, LawReport>,
}

impl Tally {
    fn push(&mut self, law: String, passed: bool, witness: impl FnOnce() -> String) {
        let entry = self.laws.entry(law.clone()).or_insert_with(|| {
            self.order.push(law.clone());
            LawReport {
                law,
                status: Status::Pass,
                samples: 0,
                witness: None,
            }
        });
        entry.samples += 1;
        if !passed && entry.status == Status::Pass {
            entry.status = Status::Fail;
            entry.witness = Some(witness());
        }
    }

    fn check(&mut self, prefix: &str, c: LawCheck, inputs: impl FnOnce() -> String) {
        let name = if prefix.is_empty() {
            c.law
        } else {
            format!("{prefix} {}", c.law)
        };
        let witness = c.witness.unwrap_or_default();
        self.push(name, c.passed, || format!("{witness}; {}", inputs()));
    }

    fn zero(&mut self, law: &str, chart: &Chart, residual: &Poly, inputs: impl FnOnce() -> String) {
        self.push(law.to_string(), residual.is_zero(), || {
            format!("residual {}; {}", chart.format(residual), inputs())
        });
    }

    fn finish(mut self) -> Vec<LawReport> {
        self.order
            .iter()
            .map(|k| self.laws.remove(k).expect("tallied law"))
            .collect()
    }
}

fn show(chart: &Chart, named: &[(&str, &Poly)]) -> String {
    named
        .iter()
        .map(|(n, p)| format!("{n} = {}", chart.format(p)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Runs every exact law that applies to `chart` on `samples` seeded inputs.
pub fn identity_suite(chart: Chart, seed: u64, samples: usize) -> Result<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = chart.dim();
    let cfg = RandomPolyConfig {
        max_degree: 3,
        max_terms: 4,
        coeff_bound: 3,
    };
    let small = RandomPolyConfig { max_degree: 2, ..cfg };
    let no_z: Vec<bool> = (0..dim).map(|i| Some(i) != chart.z_index()).collect();
    let mut t = Tally::default();

    for spec in FieldSpec::rows(chart) {
        let name = spec.name();
        for _ in 0..samples {
            let h = if spec.family() == Family::Strict {
                random_poly_masked(&mut rng, &no_z, cfg)
            } else {
                random_poly(&mut rng, dim, cfg)
            };
            for c in check_row(&spec, &h)? {
                t.check(&name, c, || show(&chart, &[("H", &h)]));
            }
        }
    }

    let ham = FieldSpec::hamiltonian(chart);
    for _ in 0..samples {
        let f = random_poly(&mut rng, dim, small);
        let h = random_poly(&mut rng, dim, small);
        let inputs = || show(&chart, &[("F", &f), ("H", &h)]);
        let hom = homomorphism_residual(&ham, &f, &h)?;
        t.push(format!("{} homomorphism", ham.name()), hom.is_zero(), inputs);
        for c in relation_checks(chart, &f, &h)? {
            t.check("", c, inputs);
        }
    }
    for c in reeb_checks(chart)? {
        t.check("", c, String::new);
    }

    for kind in BracketKind::ALL.into_iter().filter(|k| k.chart_kind() == chart.kind()) {
        let label = format!("{kind:?}");
        for _ in 0..samples {
            let f = random_poly(&mut rng, dim, cfg);
            let g = random_poly(&mut rng, dim, small);
            let h = random_poly(&mut rng, dim, small);
            let inputs = || show(&chart, &[("F", &f), ("G", &g), ("H", &h)]);
            let fh = bracket(kind, &chart, &f, &h)?;
            let hf = bracket(kind, &chart, &h, &f)?;
            t.zero(&format!("{label} antisymmetry"), &chart, &(&fh + &hf), inputs);
            let route = bracket_via_bivector(kind, &chart, &f, &h)?;
            t.zero(&format!("{label} bivector-route"), &chart, &(&fh - &route), inputs);
            if kind.satisfies_jacobi_identity() {
                t.zero(&format!("{label} jacobi"), &chart, &jacobiator(kind, &chart, &f, &g, &h)?, inputs);
            }
            let defect = leibniz_defect(kind, &chart, &f, &g, &h)?;
            if kind.satisfies_leibniz() {
                t.zero(&format!("{label} leibniz"), &chart, &defect, inputs);
            } else {
                let z = chart.z_index().expect("jacobi kinds carry z");
                let want = &g * &h * f.d(z);
                t.zero(&format!("{label} weak-leibniz"), &chart, &(&defect - &want), inputs);
            }
            if chart.kind() == ChartKind::Cosymplectic {
                let mask: Vec<bool> = (0..dim).map(|i| Some(i) == chart.t_index()).collect();
                let ft = random_poly_masked(&mut rng, &mask, cfg);
                let cas = bracket(kind, &chart, &ft, &h)?;
                t.zero(&format!("{label} casimir"), &chart, &cas, || show(&chart, &[("F", &ft), ("H", &h)]));
            }
        }
    }

    for _ in 0..samples {
        let alpha = random_one_form(&mut rng, chart, cfg);
        let r = sharp_roundtrip_residual(chart, &alpha)?;
        let bad = r.components().iter().find(|p| !p.is_zero()).cloned();
        t.push("musical flat-sharp roundtrip".into(), bad.is_none(), || {
            format!("residual {}", chart.format(&bad.unwrap_or_else(|| chart.zero())))
        });
    }

    for _ in 0..samples {
        let h = random_poly(&mut rng, dim, small);
        let pi = MomentumOneForm::new(random_one_form(&mut rng, chart, small));
        let comps = || {
            let c: Vec<String> = pi.form().components().iter().map(|p| chart.format(p)).collect();
            format!("H = {}, U = [{}]", chart.format(&h), c.join(", "))
        };
        let r = intertwine_residual(&ham, &h, &pi)?;
        t.zero("momentum intertwining", &chart, &r, comps);
        let routes = momentum_map(&pi) - momentum_map_abstract(&pi)?;
        t.zero("momentum two-route density", &chart, &routes, comps);
        t.zero("momentum dual pairing", &chart, &dual_pairing_defect(&pi, &h)?, comps);
    }
    let resolved = adjudicate(&chart, seed, 6)?;
    let frozen = frozen_coefficients(&chart);
    t.push("density coefficients re-solved".into(), resolved == frozen, || {
        format!("resolved {resolved:?}, frozen {frozen:?}")
    });

    let laws = t.finish();
    Ok(IdentityReport {
        chart,
        seed,
        samples,
        passed: laws.iter().all(|l| l.status == Status::Pass),
        laws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cocontact_suite_passes() {
        let c = Chart::new(ChartKind::Cocontact, 1).unwrap();
        let r = identity_suite(c, 42, 3).unwrap();
        let failed: Vec<_> = r.laws.iter().filter(|l| l.status == Status::Fail).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        let rows = r.laws.iter().filter(|l| l.law.ends_with(" divergence")).count();
        assert_eq!(rows, 9);
    }

    #[test]
    fn deterministic() {
        let c = Chart::new(ChartKind::Contact, 1).unwrap();
        let a = serde_json::to_string(&identity_suite(c, 5, 2).unwrap()).unwrap();
        let b = serde_json::to_string(&identity_suite(c, 5, 2).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
