//! Dynamical vector fields built from a Hamiltonian, with their divergence,
//! energy-rate and Lie-derivative laws.
//!
//! Every field is `sharp(dH)` corrected along the Reeb directions:
//!
//! ```text
//! X = sharp(dH) + (g - H_t) R_tau - e R_eta
//! ```
//!
//! where the gauge fixes `g = i_X tau` (`0`, `1` or `H_t`) and the family fixes
//! `e` (`H + H_z`, `H_z` or `H`). Charts without `t` or `z` drop the matching
//! term, which recovers the symplectic, cosymplectic and contact rows.

pub mod cartan;
pub mod laws;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chart::{
    canonical_forms, reeb_eta, reeb_tau, Chart, ChartKind, OneFormExpr, TwoFormExpr,
    VectorFieldExpr,
};
use crate::error::{GeoError, Result};
use crate::musical::{sharp, SharpVariant};
use crate::poly::Poly;

use cartan::{d_function, structure_two_form};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hamiltonian,
    Energy,
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gauge {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "one")]
    One,
    #[serde(rename = "gradH")]
    GradH,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Hamiltonian, Family::Energy, Family::Strict];
}

impl Gauge {
    pub const ALL: [Gauge; 3] = [Gauge::Zero, Gauge::One, Gauge::GradH];
}

/// A row of the field catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    chart: Chart,
    family: Family,
    gauge: Option<Gauge>,
}

impl FieldSpec {
    pub fn new(chart: Chart, family: Family, gauge: Option<Gauge>) -> Result<Self> {
        let kind = chart.kind();
        let bad = |why: &str| Err(GeoError::InvalidFieldSpec(format!("{why} on a {kind} chart")));
        if kind.has_time() && gauge.is_none() {
            return bad("a gauge is required");
        }
        if !kind.has_time() && gauge.is_some() {
            return bad("no gauge is admitted");
        }
        if !kind.has_action() && family != Family::Hamiltonian {
            return bad("only the hamiltonian family exists");
        }
        Ok(FieldSpec { chart, family, gauge })
    }

    /// The Hamiltonian row with `i_X tau = 0`, which carries the Lie algebra
    /// structure used by the kinetic theory.
    pub fn hamiltonian(chart: Chart) -> Self {
        let gauge = chart.kind().has_time().then_some(Gauge::Zero);
        FieldSpec {
            chart,
            family: Family::Hamiltonian,
            gauge,
        }
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn gauge(&self) -> Option<Gauge> {
        self.gauge
    }

    pub fn is_hamiltonian_zero(&self) -> bool {
        self.family == Family::Hamiltonian && matches!(self.gauge, None | Some(Gauge::Zero))
    }

    /// All admissible rows on a chart, in catalog order.
    pub fn rows(chart: Chart) -> Vec<FieldSpec> {
        let families: &[Family] = if chart.kind().has_action() {
            &Family::ALL
        } else {
            &[Family::Hamiltonian]
        };
        let gauges: Vec<Option<Gauge>> = if chart.kind().has_time() {
            Gauge::ALL.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let mut out = Vec::new();
        for &g in &gauges {
            for &f in families {
                out.push(FieldSpec { chart, family: f, gauge: g });
            }
        }
        out
    }

    /// Conventional symbol of the row, e.g. `gradE^cc_H`.
    pub fn name(&self) -> String {
        let fam = match self.family {
            Family::Hamiltonian => "X",
            Family::Energy => "E",
            Family::Strict => "xi",
        };
        match self.chart.kind() {
            ChartKind::Symplectic => "X^s_H".into(),
            ChartKind::Cosymplectic => match self.gauge {
                Some(Gauge::Zero) => "X^cs_H".into(),
                Some(Gauge::One) => "E_H".into(),
                _ => "gradH".into(),
            },
            ChartKind::Contact => format!("{fam}^c_H"),
            ChartKind::Cocontact => match self.gauge {
                Some(Gauge::Zero) => format!("{fam}^cc_H"),
                Some(Gauge::One) => format!("{fam}bar^cc_H"),
                _ => format!("grad{fam}^cc_H"),
            },
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpecConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<Gauge>,
}

impl FieldSpecConfig {
    pub fn resolve(&self, chart: Chart) -> Result<FieldSpec> {
        FieldSpec::new(chart, self.family, self.gauge)
    }
}

fn check_h(spec: &FieldSpec, h: &Poly) -> Result<()> {
    spec.chart.ensure_poly(h)?;
    if spec.family == Family::Strict {
        if let Some(z) = spec.chart.z_index() {
            if h.depends_on(z) {
                return Err(GeoError::NotStrict);
            }
        }
    }
    Ok(())
}

/// `i_X tau` for the spec's gauge.
pub fn gauge_value(spec: &FieldSpec, h: &Poly) -> Option<Poly> {
    let c = spec.chart;
    spec.gauge.map(|g| match g {
        Gauge::Zero => c.zero(),
        Gauge::One => c.constant(1),
        Gauge::GradH => c.reeb_tau_of(h),
    })
}

/// `i_X eta` for the spec's family.
pub fn eta_value(spec: &FieldSpec, h: &Poly) -> Option<Poly> {
    spec.chart.kind().has_action().then(|| match spec.family {
        Family::Hamiltonian | Family::Strict => -h,
        Family::Energy => spec.chart.zero(),
    })
}

pub fn make_field(spec: &FieldSpec, h: &Poly) -> Result<VectorFieldExpr> {
    check_h(spec, h)?;
    let c = spec.chart;
    let mut x = sharp(c, SharpVariant::Full, &OneFormExpr::exact(c, h))?;
    if let Some(g) = gauge_value(spec, h) {
        x = &x + &reeb_tau(c)?.scale(&(g - c.reeb_tau_of(h)));
    }
    if let Some(eta_target) = eta_value(spec, h) {
        // <eta, sharp dH> = H_z
        x = &x + &reeb_eta(c)?.scale(&(eta_target - c.reeb_eta_of(h)));
    }
    Ok(x)
}

/// Expected values of the contractions that define a row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contractions {
    /// `i_X Omega` (symplectic, cosymplectic) or `i_X d eta`.
    pub structure: OneFormExpr,
    pub eta: Option<Poly>,
    pub tau: Option<Poly>,
}

/// Analytic laws of a row, evaluated for a given Hamiltonian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDiagnostics {
    pub divergence: Poly,
    pub dh_along_flow: Poly,
    /// With `L_X eta = [dH] + conformal_eta eta + conformal_tau tau`, the
    /// bracketed `dH` present only for the energy family.
    pub conformal_eta: Option<Poly>,
    pub conformal_tau: Option<Poly>,
    pub contractions: Contractions,
    pub lie_tau: Option<OneFormExpr>,
    pub lie_eta: Option<OneFormExpr>,
    /// `L_X Omega` or `L_X d eta`.
    pub lie_structure: TwoFormExpr,
}

pub fn diagnostics(spec: &FieldSpec, h: &Poly) -> Result<FieldDiagnostics> {
    check_h(spec, h)?;
    let c = spec.chart;
    let kind = c.kind();
    let n = c.n() as i64;
    let ht = c.reeb_tau_of(h);
    let hz = c.reeb_eta_of(h);
    let forms = canonical_forms(c);
    let dh = d_function(c, h);

    let (div_eta, rate_eta) = match (kind.has_action(), spec.family) {
        (false, _) => (c.zero(), c.zero()),
        (true, Family::Hamiltonian) => (hz.scale_int(-(n + 1)), -(&hz * h)),
        (true, Family::Energy) => (hz.scale_int(-n), c.zero()),
        (true, Family::Strict) => (c.zero(), c.zero()),
    };
    let (div_tau, rate_tau) = match spec.gauge {
        None | Some(Gauge::Zero) => (c.zero(), c.zero()),
        Some(Gauge::One) => (c.zero(), ht.clone()),
        Some(Gauge::GradH) => (c.reeb_tau_of(&ht), &ht * &ht),
    };

    // h-term vanishes for the strict family, whose H has no z-dependence
    let h_eta = match spec.family {
        Family::Strict => c.zero(),
        _ => hz.clone(),
    };

    let mut structure = dh.clone();
    if let Some(eta) = &forms.eta {
        structure = &structure - &eta.scale(&h_eta);
    }
    if let Some(tau) = &forms.tau {
        structure = &structure - &tau.scale(&ht);
    }

    let g = gauge_value(spec, h);
    let lie_tau = g.as_ref().map(|g| d_function(c, g));

    let conformal_eta = forms.eta.as_ref().map(|_| -&h_eta);
    let conformal_tau = forms.eta.as_ref().map(|_| -&ht);
    let lie_eta = forms.eta.as_ref().map(|eta| {
        let mut l = &eta.scale(&-&h_eta) - &forms.tau.as_ref().map_or_else(
            || OneFormExpr::zero(c),
            |tau| tau.scale(&ht),
        );
        if spec.family == Family::Energy {
            l = &l + &dh;
        }
        l
    });

    let omega = structure_two_form(c);
    let mut lie_structure = TwoFormExpr::zero(c);
    if let Some(eta) = &forms.eta {
        let dh_eta = d_function(c, &h_eta);
        lie_structure = &lie_structure - &TwoFormExpr::wedge(&dh_eta, eta)?;
        lie_structure = &lie_structure - &omega.scale(&h_eta);
    }
    if let Some(tau) = &forms.tau {
        lie_structure = &lie_structure - &TwoFormExpr::wedge(&d_function(c, &ht), tau)?;
    }

    Ok(FieldDiagnostics {
        divergence: div_eta + div_tau,
        dh_along_flow: rate_eta + rate_tau,
        conformal_eta,
        conformal_tau,
        contractions: Contractions {
            structure,
            eta: eta_value(spec, h),
            tau: g,
        },
        lie_tau,
        lie_eta,
        lie_structure,
    })
}
