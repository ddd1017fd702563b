//! Exact checks of the catalog laws: each compares a quantity computed from
//! the constructed field with the analytic value in [`FieldDiagnostics`].

use serde::Serialize;

use super::cartan::{exterior_derivative_oneform, lie_derivative_oneform, lie_derivative_twoform, structure_two_form};
use super::{diagnostics, make_field, FieldSpec, Family, Gauge};
use crate::brackets::{bracket, BracketKind};
use crate::chart::{canonical_forms, pairing, reeb_tau, ChartKind, OneFormExpr, TwoFormExpr, VectorFieldExpr};
use crate::error::Result;
use crate::musical::{sharp, SharpVariant};
use crate::poly::Poly;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawCheck {
    pub law: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl LawCheck {
    fn poly(law: impl Into<String>, chart: &crate::Chart, residual: &Poly) -> Self {
        LawCheck {
            law: law.into(),
            passed: residual.is_zero(),
            witness: (!residual.is_zero()).then(|| format!("residual {}", chart.format(residual))),
        }
    }

    fn components(law: impl Into<String>, chart: &crate::Chart, residual: &[Poly]) -> Self {
        let bad = residual.iter().enumerate().find(|(_, r)| !r.is_zero());
        LawCheck {
            law: law.into(),
            passed: bad.is_none(),
            witness: bad.map(|(i, r)| format!("component {i}: residual {}", chart.format(r))),
        }
    }

    fn twoform(law: impl Into<String>, chart: &crate::Chart, residual: &TwoFormExpr) -> Self {
        let d = chart.dim();
        let flat: Vec<Poly> = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| residual.entry(i, j).clone())
            .collect();
        Self::components(law, chart, &flat)
    }
}

fn form_residual(a: &OneFormExpr, b: &OneFormExpr) -> Vec<Poly> {
    (a - b).into_components()
}

/// Contraction, divergence, energy-rate and Lie-derivative laws of one row.
pub fn check_row(spec: &FieldSpec, h: &Poly) -> Result<Vec<LawCheck>> {
    let c = spec.chart();
    let x = make_field(spec, h)?;
    let diag = diagnostics(spec, h)?;
    let forms = canonical_forms(c);
    let omega = structure_two_form(c);
    let mut out = Vec::new();

    let i_omega = omega.contract(&x)?;
    out.push(LawCheck::components(
        "contraction:structure",
        &c,
        &form_residual(&i_omega, &diag.contractions.structure),
    ));
    if let (Some(eta), Some(want)) = (&forms.eta, &diag.contractions.eta) {
        out.push(LawCheck::poly("contraction:eta", &c, &(pairing(eta, &x)? - want)));
    }
    if let (Some(tau), Some(want)) = (&forms.tau, &diag.contractions.tau) {
        out.push(LawCheck::poly("contraction:tau", &c, &(pairing(tau, &x)? - want)));
    }
    out.push(LawCheck::poly("divergence", &c, &(x.divergence() - &diag.divergence)));
    out.push(LawCheck::poly("energy-rate", &c, &(x.apply(h) - &diag.dh_along_flow)));

    if let (Some(tau), Some(want)) = (&forms.tau, &diag.lie_tau) {
        let got = lie_derivative_oneform(&x, tau)?;
        out.push(LawCheck::components("lie:tau", &c, &form_residual(&got, want)));
    }
    if let (Some(eta), Some(want)) = (&forms.eta, &diag.lie_eta) {
        let got = lie_derivative_oneform(&x, eta)?;
        out.push(LawCheck::components("lie:eta", &c, &form_residual(&got, want)));
    }
    let got = lie_derivative_twoform(&x, &omega)?;
    out.push(LawCheck::twoform("lie:structure", &c, &(&got - &diag.lie_structure)));
    Ok(out)
}

/// `[X_F, X_H] + X_{{F,H}}`, identically zero on Hamiltonian/Zero rows and,
/// for `z`-independent pairs, on strict rows.
pub fn homomorphism_residual(spec: &FieldSpec, f: &Poly, h: &Poly) -> Result<VectorFieldExpr> {
    let c = spec.chart();
    let kind = BracketKind::canonical(c.kind());
    let xf = make_field(spec, f)?;
    let xh = make_field(spec, h)?;
    let fh = bracket(kind, &c, f, h)?;
    Ok(&xf.lie_bracket(&xh)? + &make_field(spec, &fh)?)
}

/// The relation identities tying fields to brackets and musical maps on
/// one chart.
pub fn relation_checks(chart: crate::Chart, f: &Poly, h: &Poly) -> Result<Vec<LawCheck>> {
    let mut out = Vec::new();
    let dh = OneFormExpr::exact(chart, h);
    match chart.kind() {
        ChartKind::Symplectic => {
            let x = make_field(&FieldSpec::hamiltonian(chart), h)?;
            let want = bracket(BracketKind::PoissonSymplectic, &chart, f, h)?;
            out.push(LawCheck::poly("relation:X(F)={F,H}", &chart, &(x.apply(f) - want)));
        }
        ChartKind::Cosymplectic => {
            let ht = chart.reeb_tau_of(h);
            let tau = canonical_forms(chart).tau.expect("cosymplectic tau");
            let x = make_field(&FieldSpec::new(chart, Family::Hamiltonian, Some(Gauge::Zero))?, h)?;
            let grad = make_field(&FieldSpec::new(chart, Family::Hamiltonian, Some(Gauge::GradH))?, h)?;
            let e = make_field(&FieldSpec::new(chart, Family::Hamiltonian, Some(Gauge::One))?, h)?;
            let lifted = sharp(chart, SharpVariant::Full, &tau.scale(&ht))?;
            out.push(LawCheck::components(
                "relation:grad=X+sharp(H_t tau)",
                &chart,
                &(&grad - &(&x + &lifted)).into_components(),
            ));
            let rt = reeb_tau(chart)?;
            let rebuilt = &(&sharp(chart, SharpVariant::Full, &dh)? + &rt) - &rt.scale(&ht);
            out.push(LawCheck::components(
                "relation:E=sharp(dH)+(1-H_t)R",
                &chart,
                &(&e - &rebuilt).into_components(),
            ));
            let want = bracket(BracketKind::PoissonCosymplectic, &chart, f, h)?;
            out.push(LawCheck::poly("relation:X(F)={F,H}", &chart, &(x.apply(f) - want)));
        }
        ChartKind::Contact | ChartKind::Cocontact => {
            let kind = BracketKind::canonical(chart.kind());
            let x = make_field(&FieldSpec::hamiltonian(chart), h)?;
            let want = bracket(kind, &chart, f, h)? - f * chart.reeb_eta_of(h);
            out.push(LawCheck::poly("relation:X(F)={F,H}-F*R(H)", &chart, &(x.apply(f) - want)));
            let bivector = sharp(chart, SharpVariant::Bivector, &dh)?;
            let ap = match chart.kind() {
                ChartKind::Contact => BracketKind::AlmostPoissonContact,
                _ => BracketKind::AlmostPoissonCocontact,
            };
            let df = OneFormExpr::exact(chart, f);
            let want = bracket(ap, &chart, f, h)?;
            out.push(LawCheck::poly(
                "relation:{F,H}_ap=<dF,sharp_L(dH)>",
                &chart,
                &(pairing(&df, &bivector)? - want),
            ));
        }
    }
    Ok(out)
}

/// `d eta` (or `Omega`) contracted with the Reeb fields, and the pairings of
/// the canonical one-forms with them.
pub fn reeb_checks(chart: crate::Chart) -> Result<Vec<LawCheck>> {
    let forms = canonical_forms(chart);
    let omega = match &forms.eta {
        Some(eta) => exterior_derivative_oneform(eta),
        None => structure_two_form(chart),
    };
    let mut out = Vec::new();
    let reebs = [
        ("R_tau", crate::chart::reeb_tau(chart).ok()),
        ("R_eta", crate::chart::reeb_eta(chart).ok()),
    ];
    for (name, r) in reebs.iter() {
        let Some(r) = r else { continue };
        out.push(LawCheck::components(
            format!("reeb:i_{name}(d eta)=0"),
            &chart,
            omega.contract(r)?.components(),
        ));
        for (fname, form) in [("tau", &forms.tau), ("eta", &forms.eta)] {
            let Some(form) = form else { continue };
            let expected = i64::from((*name == "R_tau") == (fname == "tau"));
            out.push(LawCheck::poly(
                format!("reeb:<{fname},{name}>={expected}"),
                &chart,
                &(pairing(form, r)? - chart.constant(expected)),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    #[test]
    fn damped_oscillator_rows_pass() {
        for kind in ChartKind::ALL {
            let c = Chart::new(kind, 1).unwrap();
            let names = c.var_names();
            let mut expr = "p1^2/2 + q1^2/2 + q1*p1".to_string();
            if kind.has_time() {
                expr.push_str(" + t^2*q1");
            }
            let h_full = c.parse(&format!("{expr} + {}*p1", names[c.dim() - 1])).unwrap();
            let h_strict = c.parse(&expr).unwrap();
            for spec in FieldSpec::rows(c) {
                let h = if spec.family() == Family::Strict { &h_strict } else { &h_full };
                for check in check_row(&spec, h).unwrap() {
                    assert!(check.passed, "{spec} {}: {:?}", check.law, check.witness);
                }
            }
        }
    }

    #[test]
    fn reeb_identities() {
        for kind in ChartKind::ALL {
            for check in reeb_checks(Chart::new(kind, 2).unwrap()).unwrap() {
                assert!(check.passed, "{kind} {}", check.law);
            }
        }
    }

    #[test]
    fn symplectic_homomorphism_sign() {
        let c = Chart::new(ChartKind::Symplectic, 1).unwrap();
        let spec = FieldSpec::hamiltonian(c);
        let f = c.parse("q1^2*p1").unwrap();
        let h = c.parse("p1^3 + q1").unwrap();
        assert!(homomorphism_residual(&spec, &f, &h).unwrap().is_zero());
    }
}
