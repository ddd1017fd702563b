//! Coordinate Cartan calculus: `d`, interior products and Lie derivatives
//! of functions, one-forms and two-forms.
//!
//! Conventions: `(d alpha)_ij = d_i alpha_j - d_j alpha_i`,
//! `(i_X w)_j = sum_i X^i w_ij`, and `[X, Y]^i = X(Y^i) - Y(X^i)`.

use crate::chart::{canonical_forms, Chart, OneFormExpr, TwoFormExpr, VectorFieldExpr};
use crate::error::Result;
use crate::poly::Poly;

pub fn d_function(chart: Chart, f: &Poly) -> OneFormExpr {
    OneFormExpr::exact(chart, f)
}

pub fn exterior_derivative_oneform(alpha: &OneFormExpr) -> TwoFormExpr {
    let a = alpha.components();
    TwoFormExpr::from_upper(alpha.chart(), |i, j| a[j].d(i) - a[i].d(j))
}

/// `Omega = dq^i ^ dp_i`, which is also `d eta` on charts with an action
/// coordinate.
pub fn structure_two_form(chart: Chart) -> TwoFormExpr {
    -&exterior_derivative_oneform(&canonical_forms(chart).theta)
}

pub fn contract_twoform(x: &VectorFieldExpr, w: &TwoFormExpr) -> Result<OneFormExpr> {
    w.contract(x)
}

/// `(L_X alpha)_j = X^i d_i alpha_j + alpha_i d_j X^i`.
pub fn lie_derivative_oneform(x: &VectorFieldExpr, alpha: &OneFormExpr) -> Result<OneFormExpr> {
    let chart = x.chart();
    chart.ensure_same(&alpha.chart())?;
    let xs = x.components();
    let a = alpha.components();
    let comps = (0..chart.dim())
        .map(|j| {
            let transport = x.apply(&a[j]);
            (0..chart.dim())
                .filter(|&i| !a[i].is_zero())
                .fold(transport, |acc, i| acc + &a[i] * xs[i].d(j))
        })
        .collect();
    OneFormExpr::new(chart, comps)
}

/// `(L_X w)_jk = X^i d_i w_jk + w_ik d_j X^i + w_ji d_k X^i`.
pub fn lie_derivative_twoform(x: &VectorFieldExpr, w: &TwoFormExpr) -> Result<TwoFormExpr> {
    let chart = x.chart();
    chart.ensure_same(&w.chart())?;
    let xs = x.components();
    Ok(TwoFormExpr::from_upper(chart, |j, k| {
        let mut acc = x.apply(w.entry(j, k));
        for (i, xi) in xs.iter().enumerate() {
            if !w.entry(i, k).is_zero() {
                acc = acc + w.entry(i, k) * xi.d(j);
            }
            if !w.entry(j, i).is_zero() {
                acc = acc + w.entry(j, i) * xi.d(k);
            }
        }
        acc
    }))
}

/// `L_X alpha` assembled as `d(i_X alpha) + i_X d alpha`.
pub fn lie_derivative_oneform_cartan(
    x: &VectorFieldExpr,
    alpha: &OneFormExpr,
) -> Result<OneFormExpr> {
    let chart = x.chart();
    let exact = d_function(chart, &crate::chart::pairing(alpha, x)?);
    let contracted = exterior_derivative_oneform(alpha).contract(x)?;
    Ok(&exact + &contracted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartKind;

    #[test]
    fn d_eta_is_dq_wedge_dp() {
        let c = Chart::new(ChartKind::Contact, 1).unwrap();
        let eta = canonical_forms(c).eta.unwrap();
        let w = exterior_derivative_oneform(&eta);
        assert_eq!(*w.entry(0, 1), c.constant(1));
        assert_eq!(*w.entry(1, 0), c.constant(-1));
        assert!(w.entry(0, 2).is_zero() && w.entry(1, 2).is_zero());
        assert_eq!(w, structure_two_form(c));
    }

    #[test]
    fn d_of_liouville_form() {
        let c = Chart::new(ChartKind::Symplectic, 1).unwrap();
        let w = exterior_derivative_oneform(&canonical_forms(c).theta);
        assert_eq!(*w.entry(0, 1), c.constant(-1));
    }

    #[test]
    fn d_of_dt_vanishes() {
        let c = Chart::new(ChartKind::Cocontact, 1).unwrap();
        let tau = canonical_forms(c).tau.unwrap();
        assert!(exterior_derivative_oneform(&tau).is_zero());
        let rt = crate::chart::reeb_tau(c).unwrap();
        assert!(lie_derivative_oneform(&rt, &tau).unwrap().is_zero());
    }

    #[test]
    fn lie_derivative_of_liouville_along_free_flow() {
        // L_{p d/dq}(p dq) = p dp
        let c = Chart::new(ChartKind::Symplectic, 1).unwrap();
        let x = VectorFieldExpr::basis(c, 0).scale(&c.p_var(0));
        let theta = canonical_forms(c).theta;
        let l = lie_derivative_oneform(&x, &theta).unwrap();
        assert_eq!(l.components(), &[c.zero(), c.p_var(0)]);
        assert_eq!(l, lie_derivative_oneform_cartan(&x, &theta).unwrap());
    }

    #[test]
    fn twoform_lie_derivative_commutes_with_d() {
        let c = Chart::new(ChartKind::Contact, 1).unwrap();
        let (q, p, z) = (c.q_var(0), c.p_var(0), c.coord(2));
        let x = VectorFieldExpr::new(c, vec![&p * &z, &q * &q, &q * &p]).unwrap();
        let alpha = OneFormExpr::new(c, vec![&z * &p, q.clone(), &p * &p]).unwrap();
        let lhs = lie_derivative_twoform(&x, &exterior_derivative_oneform(&alpha)).unwrap();
        let rhs = exterior_derivative_oneform(&lie_derivative_oneform(&x, &alpha).unwrap());
        assert_eq!(lhs, rhs);
    }
}
