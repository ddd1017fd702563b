//! Darboux charts and coordinate expressions of one-forms, two-forms and
//! vector fields.
//!
//! Layouts are fixed per chart family, with `t` first and `z` last:
//!
//! | kind         | coordinates              | dim    |
//! |--------------|--------------------------|--------|
//! | symplectic   | `q1..qn, p1..pn`         | 2n     |
//! | cosymplectic | `t, q1..qn, p1..pn`      | 2n + 1 |
//! | contact      | `q1..qn, p1..pn, z`      | 2n + 1 |
//! | cocontact    | `t, q1..qn, p1..pn, z`   | 2n + 2 |
//!
//! The Darboux volume form has unit density in these coordinates, so every
//! divergence in the crate is the plain coordinate divergence.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::poly::{self, Poly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Symplectic,
    Cosymplectic,
    Contact,
    Cocontact,
}

impl ChartKind {
    pub const ALL: [ChartKind; 4] = [
        ChartKind::Symplectic,
        ChartKind::Cosymplectic,
        ChartKind::Contact,
        ChartKind::Cocontact,
    ];

    pub fn has_time(self) -> bool {
        matches!(self, ChartKind::Cosymplectic | ChartKind::Cocontact)
    }

    pub fn has_action(self) -> bool {
        matches!(self, ChartKind::Contact | ChartKind::Cocontact)
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChartKind::Symplectic => "symplectic",
            ChartKind::Cosymplectic => "cosymplectic",
            ChartKind::Contact => "contact",
            ChartKind::Cocontact => "cocontact",
        })
    }
}

impl std::str::FromStr for ChartKind {
    type Err = GeoError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symplectic" => Ok(ChartKind::Symplectic),
            "cosymplectic" => Ok(ChartKind::Cosymplectic),
            "contact" => Ok(ChartKind::Contact),
            "cocontact" => Ok(ChartKind::Cocontact),
            other => Err(GeoError::InvalidChart(format!("unknown chart kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawChart", into = "RawChart")]
pub struct Chart {
    kind: ChartKind,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct RawChart {
    kind: ChartKind,
    n: usize,
}

impl TryFrom<RawChart> for Chart {
    type Error = GeoError;
    fn try_from(raw: RawChart) -> Result<Self> {
        Chart::new(raw.kind, raw.n)
    }
}

impl From<Chart> for RawChart {
    fn from(c: Chart) -> Self {
        RawChart {
            kind: c.kind,
            n: c.n,
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={})", self.kind, self.n)
    }
}

impl Chart {
    pub fn new(kind: ChartKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GeoError::InvalidChart(
                "a chart needs at least one (q, p) pair".into(),
            ));
        }
        Ok(Chart { kind, n })
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.kind.has_time() as usize + self.kind.has_action() as usize
    }

    fn offset(&self) -> usize {
        self.kind.has_time() as usize
    }

    pub fn t_index(&self) -> Option<usize> {
        self.kind.has_time().then_some(0)
    }

    pub fn z_index(&self) -> Option<usize> {
        self.kind.has_action().then(|| self.dim() - 1)
    }

    /// Index of `q^{i+1}` (zero-based `i`).
    pub fn q(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        self.offset() + i
    }

    /// Index of `p_{i+1}` (zero-based `i`).
    pub fn p(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        self.offset() + self.n + i
    }

    pub fn var_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        if self.kind.has_time() {
            names.push("t".to_string());
        }
        names.extend((1..=self.n).map(|i| format!("q{i}")));
        names.extend((1..=self.n).map(|i| format!("p{i}")));
        if self.kind.has_action() {
            names.push("z".to_string());
        }
        names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names().iter().position(|v| v == name)
    }

    pub fn parse(&self, expr: &str) -> Result<Poly> {
        poly::parse(expr, self)
    }

    pub fn format(&self, p: &Poly) -> String {
        p.to_string_with(&self.var_names())
    }

    pub fn zero(&self) -> Poly {
        Poly::zero(self.dim())
    }

    pub fn constant(&self, c: i64) -> Poly {
        Poly::from_int(self.dim(), c)
    }

    pub fn coord(&self, index: usize) -> Poly {
        Poly::var(self.dim(), index)
    }

    pub fn q_var(&self, i: usize) -> Poly {
        self.coord(self.q(i))
    }

    pub fn p_var(&self, i: usize) -> Poly {
        self.coord(self.p(i))
    }

    /// `R^tau(F) = dF/dt`, or zero on charts without a time coordinate.
    pub fn reeb_tau_of(&self, f: &Poly) -> Poly {
        match self.t_index() {
            Some(t) => f.d(t),
            None => self.zero(),
        }
    }

    /// `R^eta(F) = dF/dz`, or zero on charts without an action coordinate.
    pub fn reeb_eta_of(&self, f: &Poly) -> Poly {
        match self.z_index() {
            Some(z) => f.d(z),
            None => self.zero(),
        }
    }

    /// Density of the Darboux volume form relative to the coordinate volume.
    pub fn volume_density(&self) -> Poly {
        self.constant(1)
    }

    pub fn ensure_same(&self, other: &Chart) -> Result<()> {
        if self != other {
            return Err(GeoError::ChartMismatch {
                left: self.to_string(),
                right: other.to_string(),
            });
        }
        Ok(())
    }

    pub fn ensure_poly(&self, p: &Poly) -> Result<()> {
        if p.nvars() != self.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: self.dim(),
                found: p.nvars(),
            });
        }
        Ok(())
    }
}

fn check_components(chart: &Chart, components: &[Poly]) -> Result<()> {
    if components.len() != chart.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: chart.dim(),
            found: components.len(),
        });
    }
    components.iter().try_for_each(|c| chart.ensure_poly(c))
}

/// A one-form `sum_i alpha_i dx^i` on a chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneFormExpr {
    chart: Chart,
    components: Vec<Poly>,
}

impl OneFormExpr {
    pub fn new(chart: Chart, components: Vec<Poly>) -> Result<Self> {
        check_components(&chart, &components)?;
        Ok(OneFormExpr { chart, components })
    }

    pub fn zero(chart: Chart) -> Self {
        OneFormExpr {
            chart,
            components: vec![chart.zero(); chart.dim()],
        }
    }

    /// The coordinate differential `dx^index`.
    pub fn basis(chart: Chart, index: usize) -> Self {
        let mut f = Self::zero(chart);
        f.components[index] = chart.constant(1);
        f
    }

    /// `dF`.
    pub fn exact(chart: Chart, f: &Poly) -> Self {
        OneFormExpr {
            chart,
            components: (0..chart.dim()).map(|i| f.d(i)).collect(),
        }
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn component(&self, index: usize) -> &Poly {
        &self.components[index]
    }

    pub fn into_components(self) -> Vec<Poly> {
        self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    pub fn scale(&self, f: &Poly) -> Self {
        OneFormExpr {
            chart: self.chart,
            components: self.components.iter().map(|c| c * f).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        OneFormExpr {
            chart: self.chart,
            components: self.components.iter().map(f).collect(),
        }
    }
}

/// A vector field `sum_i X^i d/dx^i` on a chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorFieldExpr {
    chart: Chart,
    components: Vec<Poly>,
}

impl VectorFieldExpr {
    pub fn new(chart: Chart, components: Vec<Poly>) -> Result<Self> {
        check_components(&chart, &components)?;
        Ok(VectorFieldExpr { chart, components })
    }

    pub fn zero(chart: Chart) -> Self {
        VectorFieldExpr {
            chart,
            components: vec![chart.zero(); chart.dim()],
        }
    }

    pub fn basis(chart: Chart, index: usize) -> Self {
        let mut x = Self::zero(chart);
        x.components[index] = chart.constant(1);
        x
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn component(&self, index: usize) -> &Poly {
        &self.components[index]
    }

    pub fn into_components(self) -> Vec<Poly> {
        self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    pub fn scale(&self, f: &Poly) -> Self {
        VectorFieldExpr {
            chart: self.chart,
            components: self.components.iter().map(|c| c * f).collect(),
        }
    }

    /// Derivative of `f` along the field, `X(f) = sum_i X^i df/dx^i`.
    pub fn apply(&self, f: &Poly) -> Poly {
        self.components
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .fold(self.chart.zero(), |acc, (i, c)| acc + c * f.d(i))
    }

    /// Coordinate divergence `sum_i dX^i/dx^i`.
    pub fn divergence(&self) -> Poly {
        self.components
            .iter()
            .enumerate()
            .fold(self.chart.zero(), |acc, (i, c)| acc + c.d(i))
    }

    /// Jacobi-Lie bracket `[X, Y]^i = X(Y^i) - Y(X^i)`.
    pub fn lie_bracket(&self, other: &VectorFieldExpr) -> Result<VectorFieldExpr> {
        self.chart.ensure_same(&other.chart)?;
        let components = (0..self.chart.dim())
            .map(|i| self.apply(&other.components[i]) - other.apply(&self.components[i]))
            .collect();
        Ok(VectorFieldExpr {
            chart: self.chart,
            components,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }
}

/// A two-form stored as its full antisymmetric coefficient matrix:
/// `omega = sum_{i<j} w_ij dx^i ^ dx^j` with `w_ji = -w_ij`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoFormExpr {
    chart: Chart,
    entries: Vec<Vec<Poly>>,
}

impl TwoFormExpr {
    pub fn zero(chart: Chart) -> Self {
        let d = chart.dim();
        TwoFormExpr {
            chart,
            entries: vec![vec![chart.zero(); d]; d],
        }
    }

    /// Builds from the upper triangle `f(i, j)` for `i < j`.
    pub fn from_upper(chart: Chart, f: impl Fn(usize, usize) -> Poly) -> Self {
        let mut w = Self::zero(chart);
        let d = chart.dim();
        for i in 0..d {
            for j in (i + 1)..d {
                let v = f(i, j);
                w.entries[j][i] = -&v;
                w.entries[i][j] = v;
            }
        }
        w
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i][j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(Poly::is_zero)
    }

    /// `alpha ^ beta` with entries `a_i b_j - a_j b_i`.
    pub fn wedge(alpha: &OneFormExpr, beta: &OneFormExpr) -> Result<Self> {
        alpha.chart.ensure_same(&beta.chart)?;
        let a = alpha.components();
        let b = beta.components();
        Ok(Self::from_upper(alpha.chart, |i, j| &a[i] * &b[j] - &a[j] * &b[i]))
    }

    /// Interior product `(i_X w)_j = sum_i X^i w_ij`.
    pub fn contract(&self, x: &VectorFieldExpr) -> Result<OneFormExpr> {
        self.chart.ensure_same(&x.chart)?;
        let d = self.chart.dim();
        let components = (0..d)
            .map(|j| {
                (0..d)
                    .filter(|&i| !x.components[i].is_zero())
                    .fold(self.chart.zero(), |acc, i| {
                        acc + &x.components[i] * &self.entries[i][j]
                    })
            })
            .collect();
        Ok(OneFormExpr {
            chart: self.chart,
            components,
        })
    }

    pub fn scale(&self, f: &Poly) -> Self {
        TwoFormExpr {
            chart: self.chart,
            entries: self
                .entries
                .iter()
                .map(|row| row.iter().map(|e| e * f).collect())
                .collect(),
        }
    }

    pub fn map_entries(&self, f: impl Fn(usize, usize) -> Poly) -> Self {
        Self::from_upper(self.chart, f)
    }
}

macro_rules! linear_ops {
    ($ty:ident, $field:ident) => {
        impl Add for &$ty {
            type Output = $ty;
            fn add(self, rhs: &$ty) -> $ty {
                assert_eq!(self.chart, rhs.chart, "chart mismatch");
                $ty {
                    chart: self.chart,
                    $field: self
                        .$field
                        .iter()
                        .zip(&rhs.$field)
                        .map(|(a, b)| a + b)
                        .collect(),
                }
            }
        }
        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                assert_eq!(self.chart, rhs.chart, "chart mismatch");
                $ty {
                    chart: self.chart,
                    $field: self
                        .$field
                        .iter()
                        .zip(&rhs.$field)
                        .map(|(a, b)| a - b)
                        .collect(),
                }
            }
        }
        impl Add for $ty {
            type Output = $ty;
            fn add(self, rhs: $ty) -> $ty {
                &self + &rhs
            }
        }
        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: $ty) -> $ty {
                &self - &rhs
            }
        }
        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                $ty {
                    chart: self.chart,
                    $field: self.$field.iter().map(|a| -a).collect(),
                }
            }
        }
        impl Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                -&self
            }
        }
    };
}

linear_ops!(OneFormExpr, components);
linear_ops!(VectorFieldExpr, components);

impl Add for &TwoFormExpr {
    type Output = TwoFormExpr;
    fn add(self, rhs: &TwoFormExpr) -> TwoFormExpr {
        assert_eq!(self.chart, rhs.chart, "chart mismatch");
        TwoFormExpr::from_upper(self.chart, |i, j| &self.entries[i][j] + &rhs.entries[i][j])
    }
}

impl Sub for &TwoFormExpr {
    type Output = TwoFormExpr;
    fn sub(self, rhs: &TwoFormExpr) -> TwoFormExpr {
        assert_eq!(self.chart, rhs.chart, "chart mismatch");
        TwoFormExpr::from_upper(self.chart, |i, j| &self.entries[i][j] - &rhs.entries[i][j])
    }
}

impl Neg for &TwoFormExpr {
    type Output = TwoFormExpr;
    fn neg(self) -> TwoFormExpr {
        TwoFormExpr::from_upper(self.chart, |i, j| -&self.entries[i][j])
    }
}

/// The constant field `d/dt`.
pub fn reeb_tau(chart: Chart) -> Result<VectorFieldExpr> {
    match chart.t_index() {
        Some(t) => Ok(VectorFieldExpr::basis(chart, t)),
        None => Err(GeoError::WrongChartKind {
            operation: "reeb_tau",
            kind: chart.kind(),
        }),
    }
}

/// The constant field `d/dz`.
pub fn reeb_eta(chart: Chart) -> Result<VectorFieldExpr> {
    match chart.z_index() {
        Some(z) => Ok(VectorFieldExpr::basis(chart, z)),
        None => Err(GeoError::WrongChartKind {
            operation: "reeb_eta",
            kind: chart.kind(),
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForms {
    /// `dt`, where a time coordinate exists.
    pub tau: Option<OneFormExpr>,
    /// `dz - p_i dq^i`, where an action coordinate exists.
    pub eta: Option<OneFormExpr>,
    /// Liouville form `p_i dq^i` (pulled back to the chart).
    pub theta: OneFormExpr,
}

pub fn canonical_forms(chart: Chart) -> CanonicalForms {
    let mut theta = OneFormExpr::zero(chart);
    for i in 0..chart.n() {
        theta.components[chart.q(i)] = chart.p_var(i);
    }
    let tau = chart.t_index().map(|t| OneFormExpr::basis(chart, t));
    let eta = chart
        .z_index()
        .map(|z| &OneFormExpr::basis(chart, z) - &theta);
    CanonicalForms { tau, eta, theta }
}

/// `<alpha, X> = sum_i alpha_i X^i`.
pub fn pairing(alpha: &OneFormExpr, x: &VectorFieldExpr) -> Result<Poly> {
    alpha.chart.ensure_same(&x.chart)?;
    Ok(alpha
        .components
        .iter()
        .zip(&x.components)
        .filter(|(a, b)| !a.is_zero() && !b.is_zero())
        .fold(alpha.chart.zero(), |acc, (a, b)| acc + a * b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    fn chart(kind: ChartKind, n: usize) -> Chart {
        Chart::new(kind, n).unwrap()
    }

    fn ints(f: &VectorFieldExpr) -> Vec<i64> {
        f.components()
            .iter()
            .map(|c| {
                assert!(c.is_constant());
                i64::try_from(c.constant_term().to_integer()).unwrap()
            })
            .collect()
    }

    #[test]
    fn layouts() {
        let cc = chart(ChartKind::Cocontact, 2);
        assert_eq!(cc.dim(), 6);
        assert_eq!(cc.var_names(), ["t", "q1", "q2", "p1", "p2", "z"]);
        assert_eq!(chart(ChartKind::Symplectic, 2).dim(), 4);
        assert_eq!(chart(ChartKind::Cosymplectic, 1).var_names(), ["t", "q1", "p1"]);
        assert_eq!(chart(ChartKind::Contact, 1).var_names(), ["q1", "p1", "z"]);
        assert!(Chart::new(ChartKind::Contact, 0).is_err());
    }

    #[test]
    fn reeb_fields() {
        assert_eq!(ints(&reeb_tau(chart(ChartKind::Cosymplectic, 1)).unwrap()), [1, 0, 0]);
        assert_eq!(ints(&reeb_tau(chart(ChartKind::Cocontact, 1)).unwrap()), [1, 0, 0, 0]);
        assert!(reeb_tau(chart(ChartKind::Symplectic, 1)).is_err());
        assert_eq!(ints(&reeb_eta(chart(ChartKind::Contact, 1)).unwrap()), [0, 0, 1]);
        assert_eq!(
            ints(&reeb_eta(chart(ChartKind::Cocontact, 2)).unwrap()),
            [0, 0, 0, 0, 0, 1]
        );
        assert!(matches!(
            reeb_eta(chart(ChartKind::Cosymplectic, 1)),
            Err(GeoError::WrongChartKind { .. })
        ));
    }

    #[test]
    fn canonical_form_components() {
        let c = chart(ChartKind::Contact, 1);
        let eta = canonical_forms(c).eta.unwrap();
        assert_eq!(eta.components(), &[-c.p_var(0), c.zero(), c.constant(1)]);

        let cc = chart(ChartKind::Cocontact, 1);
        let forms = canonical_forms(cc);
        let tau = forms.tau.unwrap();
        assert_eq!(tau.components(), &[cc.constant(1), cc.zero(), cc.zero(), cc.zero()]);
        assert_eq!(
            forms.eta.unwrap().components(),
            &[cc.zero(), -cc.p_var(0), cc.zero(), cc.constant(1)]
        );

        let s = chart(ChartKind::Symplectic, 2);
        let theta = canonical_forms(s).theta;
        assert_eq!(theta.components(), &[s.p_var(0), s.p_var(1), s.zero(), s.zero()]);
        assert!(canonical_forms(s).tau.is_none());
    }

    #[test]
    fn reeb_pairings() {
        for kind in [ChartKind::Contact, ChartKind::Cocontact] {
            let c = chart(kind, 2);
            let eta = canonical_forms(c).eta.unwrap();
            assert_eq!(pairing(&eta, &reeb_eta(c).unwrap()).unwrap(), c.constant(1));
        }
        let cc = chart(ChartKind::Cocontact, 1);
        let f = canonical_forms(cc);
        let (tau, eta) = (f.tau.unwrap(), f.eta.unwrap());
        assert!(pairing(&eta, &reeb_tau(cc).unwrap()).unwrap().is_zero());
        assert!(pairing(&tau, &reeb_eta(cc).unwrap()).unwrap().is_zero());
        assert_eq!(pairing(&tau, &reeb_tau(cc).unwrap()).unwrap(), cc.constant(1));
    }

    #[test]
    fn pairing_rejects_chart_mismatch() {
        let a = OneFormExpr::zero(chart(ChartKind::Contact, 1));
        let x = VectorFieldExpr::zero(chart(ChartKind::Contact, 2));
        assert!(matches!(pairing(&a, &x), Err(GeoError::ChartMismatch { .. })));
    }

    #[test]
    fn lie_bracket_of_coordinate_fields() {
        let c = chart(ChartKind::Symplectic, 1);
        // [d/dq, q d/dp] = d/dp
        let x = VectorFieldExpr::basis(c, 0);
        let y = VectorFieldExpr::basis(c, 1).scale(&c.q_var(0));
        let b = x.lie_bracket(&y).unwrap();
        assert_eq!(b, VectorFieldExpr::basis(c, 1));
        assert_eq!(y.divergence(), c.zero());
        assert_eq!(y.apply(&c.p_var(0)), c.q_var(0));
        assert_eq!(int(1), c.constant(1).constant_term());
    }

    #[test]
    fn chart_serialization() {
        let c: Chart = serde_json::from_str(r#"{"kind": "cocontact", "n": 1}"#).unwrap();
        assert_eq!(c, chart(ChartKind::Cocontact, 1));
        assert!(serde_json::from_str::<Chart>(r#"{"kind": "contact", "n": 0}"#).is_err());
        let back = serde_json::to_string(&c).unwrap();
        assert_eq!(back, r#"{"kind":"cocontact","n":1}"#);
    }
}
