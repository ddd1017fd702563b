//! Sharp and flat maps between one-forms and vector fields.
//!
//! Writing a one-form as `a_i dq^i + b^i dp_i + zeta dz + u dt`, the full
//! sharp on a cocontact chart is
//!
//! ```text
//! b^i d/dq^i - (a_i + p_i zeta) d/dp_i + (zeta + b^i p_i) d/dz + u d/dt
//! ```
//!
//! and the other charts drop whichever of `t`, `z` they lack. The bivector
//! variant removes the Reeb components, so `zeta` only survives in the `p`
//! slot and the `u d/dt` term disappears.

use crate::chart::{canonical_forms, pairing, Chart, OneFormExpr, VectorFieldExpr};
use crate::error::Result;
use crate::fields::cartan::structure_two_form;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SharpVariant {
    /// Inverse of the flat isomorphism.
    Full,
    /// Map induced by the (almost) Poisson bivector.
    Bivector,
}

pub fn sharp(chart: Chart, variant: SharpVariant, alpha: &OneFormExpr) -> Result<VectorFieldExpr> {
    chart.ensure_same(&alpha.chart())?;
    let a = alpha.components();
    let mut x = vec![chart.zero(); chart.dim()];
    let zeta = chart.z_index().map(|z| &a[z]);
    for i in 0..chart.n() {
        let (qi, pi) = (chart.q(i), chart.p(i));
        x[qi] = a[pi].clone();
        x[pi] = match zeta {
            Some(zeta) => -(&a[qi] + chart.p_var(i) * zeta),
            None => -&a[qi],
        };
    }
    if let Some(z) = chart.z_index() {
        let lifted = (0..chart.n()).fold(chart.zero(), |acc, i| acc + &a[chart.p(i)] * chart.p_var(i));
        x[z] = match variant {
            SharpVariant::Full => &a[z] + &lifted,
            SharpVariant::Bivector => lifted,
        };
    }
    if let (Some(t), SharpVariant::Full) = (chart.t_index(), variant) {
        x[t] = a[t].clone();
    }
    VectorFieldExpr::new(chart, x)
}

/// `<tau,X> tau + i_X Omega + <eta,X> eta`, with the `tau` and `eta` terms
/// present only where the chart carries them.
pub fn flat(chart: Chart, x: &VectorFieldExpr) -> Result<OneFormExpr> {
    chart.ensure_same(&x.chart())?;
    let forms = canonical_forms(chart);
    let mut out = structure_two_form(chart).contract(x)?;
    for form in [forms.tau, forms.eta].into_iter().flatten() {
        let coeff = pairing(&form, x)?;
        out = &out + &form.scale(&coeff);
    }
    Ok(out)
}

/// `flat(sharp(alpha)) - alpha`; identically zero.
pub fn sharp_roundtrip_residual(chart: Chart, alpha: &OneFormExpr) -> Result<OneFormExpr> {
    let back = flat(chart, &sharp(chart, SharpVariant::Full, alpha)?)?;
    Ok(&back - alpha)
}
