//! Kinetic theory: momentum maps from one-form densities to scalar
//! densities, the momentum-Vlasov and density-Vlasov right-hand sides, and
//! numeric density solvers.
//!
//! Writing `U = U_i dq^i + U^i dp_i + U_z dz + U_t dt`, the momentum map is
//! the L2 adjoint of `H -> X_H`:
//!
//! ```text
//! f = dU^i/dq^i - dU_i/dp_i - p_i (dU_z/dp_i - dU^i/dz) - (n + 1) U_z
//! ```
//!
//! with the `z` terms absent on symplectic and cosymplectic charts.

pub mod adjudicate;
pub mod grid;
pub mod particle;

use std::sync::Arc;

use num_traits::Zero;

use crate::brackets::{bracket, BracketKind};
use crate::chart::{pairing, reeb_eta, reeb_tau, Chart, OneFormExpr, VectorFieldExpr};
use crate::error::{GeoError, Result};
use crate::fields::cartan::lie_derivative_oneform;
use crate::fields::{make_field, FieldSpec};
use crate::flow::{FieldEvaluator, Hamiltonian, NumericFn};
use crate::musical::{sharp, SharpVariant};
use crate::poly::{to_f64, CompiledPoly, Poly, Rational};

pub use adjudicate::{adjudicate, frozen_coefficients, DensityCoefficients};
pub use grid::{solve_density_grid, Axis, Boundary, GridDensity, GridLayout};
pub use particle::{solve_density_particle, DensitySource, ParticleEnsemble, ParticleSolve};

/// A one-form designated as an element of the dual of the Hamiltonian
/// vector fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentumOneForm(OneFormExpr);

impl MomentumOneForm {
    pub fn new(form: OneFormExpr) -> Self {
        MomentumOneForm(form)
    }

    /// Rejects forms whose density vanishes identically, which pair to zero
    /// with every Hamiltonian field.
    pub fn new_validated(form: OneFormExpr) -> Result<Self> {
        let m = MomentumOneForm(form);
        if momentum_map(&m).is_zero() {
            return Err(GeoError::InvalidFieldSpec(
                "one-form has identically zero density".into(),
            ));
        }
        Ok(m)
    }

    pub fn chart(&self) -> Chart {
        self.0.chart()
    }

    pub fn form(&self) -> &OneFormExpr {
        &self.0
    }

    pub fn into_form(self) -> OneFormExpr {
        self.0
    }
}

/// Coordinate formula.
pub fn momentum_map(pi: &MomentumOneForm) -> Poly {
    let c = pi.chart();
    let u = pi.form().components();
    let n = c.n() as i64;
    let mut f = c.zero();
    for i in 0..c.n() {
        let (q, p) = (c.q(i), c.p(i));
        f = f + u[p].d(q) - u[q].d(p);
        if let Some(z) = c.z_index() {
            f = f - c.p_var(i) * (u[z].d(p) - u[p].d(z));
        }
    }
    if let Some(z) = c.z_index() {
        f = f - u[z].scale_int(n + 1);
    }
    f
}

/// `div sharp(U) - R_eta<U,R_eta> - R_tau<U,R_tau> - <U,R_eta>`, each Reeb
/// term present only where the chart has that Reeb field.
pub fn momentum_map_abstract(pi: &MomentumOneForm) -> Result<Poly> {
    let c = pi.chart();
    let u = pi.form();
    let mut f = sharp(c, SharpVariant::Full, u)?.divergence();
    if let Ok(r) = reeb_eta(c) {
        let uz = pairing(u, &r)?;
        f = f - c.reeb_eta_of(&uz) - uz;
    }
    if let Ok(r) = reeb_tau(c) {
        f = f - c.reeb_tau_of(&pairing(u, &r)?);
    }
    Ok(f)
}

/// Decomposition of `H -> X_H` as `X_H^j = sum_k c_jk d_k H + d_j H`.
struct FirstOrderSymbol {
    c: Vec<Vec<Poly>>,
    d: Vec<Poly>,
}

fn hamiltonian_symbol(spec: &FieldSpec) -> Result<FirstOrderSymbol> {
    let chart = spec.chart();
    let dim = chart.dim();
    let x1 = make_field(spec, &chart.constant(1))?;
    let mut c = vec![vec![chart.zero(); dim]; dim];
    for k in 0..dim {
        let xk = make_field(spec, &chart.coord(k))?;
        for j in 0..dim {
            c[j][k] = xk.component(j) - chart.coord(k) * x1.component(j);
        }
    }
    Ok(FirstOrderSymbol {
        c,
        d: x1.into_components(),
    })
}

/// Third route to the density: integrate `<U, X_H>` by parts using the
/// first-order symbol of `H -> X_H`. Returns `(f, V)` with
/// `<U, X_H> - H f = div V` for every `H`, where `V^k = H W_k` is returned
/// as the vector `W`.
pub fn momentum_map_adjoint(pi: &MomentumOneForm) -> Result<(Poly, VectorFieldExpr)> {
    let chart = pi.chart();
    let spec = FieldSpec::hamiltonian(chart);
    let sym = hamiltonian_symbol(&spec)?;
    let u = pi.form().components();
    let dim = chart.dim();
    let w: Vec<Poly> = (0..dim)
        .map(|k| (0..dim).fold(chart.zero(), |acc, j| acc + &u[j] * &sym.c[j][k]))
        .collect();
    let mut f = (0..dim).fold(chart.zero(), |acc, j| acc + &u[j] * &sym.d[j]);
    for (k, wk) in w.iter().enumerate() {
        f = f - wk.d(k);
    }
    Ok((f, VectorFieldExpr::new(chart, w)?))
}

/// `<U, X_H> - H f - div(H W)`, identically zero.
pub fn dual_pairing_defect(pi: &MomentumOneForm, h: &Poly) -> Result<Poly> {
    let chart = pi.chart();
    let x = make_field(&FieldSpec::hamiltonian(chart), h)?;
    let (_, w) = momentum_map_adjoint(pi)?;
    let f = momentum_map(pi);
    let flux = w.scale(h).divergence();
    Ok(pairing(pi.form(), &x)? - h * f - flux)
}

fn require_hamiltonian_row(spec: &FieldSpec) -> Result<()> {
    if !spec.is_hamiltonian_zero() {
        return Err(GeoError::InvalidFieldSpec(format!(
            "kinetic dynamics is defined for the hamiltonian row with zero gauge, not {spec}"
        )));
    }
    Ok(())
}

/// `-L_X U`, plus `(n + 1) R_eta(H) U` on charts with an action coordinate.
pub fn momentum_vlasov_rhs(spec: &FieldSpec, h: &Poly, pi: &MomentumOneForm) -> Result<MomentumOneForm> {
    require_hamiltonian_row(spec)?;
    let c = spec.chart();
    c.ensure_same(&pi.chart())?;
    let x = make_field(spec, h)?;
    let mut rhs = -lie_derivative_oneform(&x, pi.form())?;
    if c.kind().has_action() {
        let hz = c.reeb_eta_of(h).scale_int(c.n() as i64 + 1);
        rhs = &rhs + &pi.form().scale(&hz);
    }
    Ok(MomentumOneForm(rhs))
}

/// `a {H,f} + b f R_eta(H) + c f R_tau(H)` for explicit coefficients.
pub fn density_rhs_with(chart: &Chart, coeffs: &DensityCoefficients, h: &Poly, f: &Poly) -> Result<Poly> {
    let kind = BracketKind::canonical(chart.kind());
    let mut out = bracket(kind, chart, h, f)?.scale(&coeffs.a);
    if !coeffs.b.is_zero() {
        out = out + (f * chart.reeb_eta_of(h)).scale(&coeffs.b);
    }
    if !coeffs.c.is_zero() {
        out = out + (f * chart.reeb_tau_of(h)).scale(&coeffs.c);
    }
    Ok(out)
}

/// Density-Vlasov right-hand side with the frozen coefficients.
pub fn density_vlasov_rhs(chart: &Chart, h: &Poly, f: &Poly) -> Result<Poly> {
    chart.ensure_poly(h)?;
    chart.ensure_poly(f)?;
    density_rhs_with(chart, &frozen_coefficients(chart), h, f)
}

/// Momentum map of the momentum-Vlasov rate minus the density-Vlasov rate
/// of the momentum map; identically zero.
pub fn intertwine_residual(spec: &FieldSpec, h: &Poly, pi: &MomentumOneForm) -> Result<Poly> {
    let rhs = momentum_vlasov_rhs(spec, h, pi)?;
    let f = momentum_map(pi);
    Ok(momentum_map(&rhs) - density_vlasov_rhs(&spec.chart(), h, &f)?)
}

/// `ds log w` for particle masses carried by the Hamiltonian flow:
/// `div X_H + density_rhs(H, 1)`.
pub fn weight_rate(chart: &Chart, h: &Poly) -> Result<Poly> {
    let spec = FieldSpec::hamiltonian(*chart);
    Ok(make_field(&spec, h)?.divergence() + density_vlasov_rhs(chart, h, &chart.constant(1))?)
}

/// Constant `k` with `weight_rate = k R_eta(H)`, used on the numeric path.
pub fn weight_rate_coefficient(chart: &Chart) -> Rational {
    let co = frozen_coefficients(chart);
    if !chart.kind().has_action() {
        return Rational::zero();
    }
    // {H, 1} = -R_eta(H) and div X_H = -(n + 1) R_eta(H)
    co.b - co.a - Rational::from_integer((chart.n() as i64 + 1).into())
}

/// Pointwise source rate `weight_rate(H)` for the numeric solvers, less
/// the divergence along collapsed axes: a density on a slice `x^c = const`
/// with `X^c = 0` there still feels `dX^c/dx^c`.
#[derive(Clone)]
pub(crate) enum RateEvaluator {
    Compiled(CompiledPoly),
    Numeric {
        h: Arc<NumericFn>,
        z: Option<usize>,
        k: f64,
        field: Box<FieldEvaluator>,
        collapsed: Vec<usize>,
    },
}

/// Step of the central difference used for numeric Hamiltonians.
const SLICE_DIFF_STEP: f64 = 1e-6;

impl RateEvaluator {
    pub(crate) fn new(chart: &Chart, h: &Hamiltonian, collapsed: &[usize]) -> Result<Self> {
        let spec = FieldSpec::hamiltonian(*chart);
        Ok(match h {
            Hamiltonian::Poly(p) => {
                let x = make_field(&spec, p)?;
                let slice = collapsed.iter().fold(chart.zero(), |acc, &c| acc + x.component(c).d(c));
                RateEvaluator::Compiled((weight_rate(chart, p)? - slice).compile())
            }
            Hamiltonian::Numeric(f) => RateEvaluator::Numeric {
                h: f.clone(),
                z: chart.z_index(),
                k: to_f64(&weight_rate_coefficient(chart)),
                field: Box::new(FieldEvaluator::new(&spec, h)?),
                collapsed: collapsed.to_vec(),
            },
        })
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        match self {
            RateEvaluator::Compiled(c) => c.eval(x),
            RateEvaluator::Numeric { h, z, k, field, collapsed } => {
                let mut rate = z.map_or(0.0, |z| k * h(x).1[z]);
                let mut y = x.to_vec();
                let mut v = vec![0.0; x.len()];
                for &c in collapsed {
                    let step = SLICE_DIFF_STEP * (1.0 + x[c].abs());
                    y[c] = x[c] + step;
                    field.field(&y, &mut v);
                    let up = v[c];
                    y[c] = x[c] - step;
                    field.field(&y, &mut v);
                    rate -= (up - v[c]) / (2.0 * step);
                    y[c] = x[c];
                }
                rate
            }
        }
    }
}

/// Runs `op` on a pool sized by `GEOKIN_THREADS` when set.
pub(crate) fn with_pool<R: Send>(op: impl FnOnce() -> R + Send) -> Result<R> {
    match std::env::var("GEOKIN_THREADS") {
        Ok(v) => {
            let threads: usize = v
                .trim()
                .parse()
                .map_err(|_| GeoError::Config(format!("GEOKIN_THREADS must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| GeoError::Config(e.to_string()))?;
            Ok(pool.install(op))
        }
        Err(_) => Ok(op()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartKind;

    fn chart(kind: ChartKind, n: usize) -> Chart {
        Chart::new(kind, n).unwrap()
    }

    fn form(c: Chart, comps: &[&str]) -> MomentumOneForm {
        MomentumOneForm::new(
            OneFormExpr::new(c, comps.iter().map(|s| c.parse(s).unwrap()).collect()).unwrap(),
        )
    }

    #[test]
    fn symplectic_density() {
        let c = chart(ChartKind::Symplectic, 1);
        assert_eq!(momentum_map(&form(c, &["0", "q1"])), c.constant(1));
    }

    #[test]
    fn cocontact_liouville_density() {
        let c = chart(ChartKind::Cocontact, 1);
        assert_eq!(momentum_map(&form(c, &["0", "p1", "0", "0"])), c.constant(-1));
    }

    #[test]
    fn three_routes_agree_on_eta() {
        for n in [1, 2] {
            let c = chart(ChartKind::Cocontact, n);
            let eta = MomentumOneForm::new(crate::chart::canonical_forms(c).eta.unwrap());
            let f = momentum_map(&eta);
            assert_eq!(f, momentum_map_abstract(&eta).unwrap());
            assert_eq!(f, momentum_map_adjoint(&eta).unwrap().0);
        }
    }

    #[test]
    fn zero_form_has_zero_density() {
        for kind in ChartKind::ALL {
            let c = chart(kind, 2);
            let z = MomentumOneForm::new(OneFormExpr::zero(c));
            assert!(momentum_map(&z).is_zero());
            assert!(MomentumOneForm::new_validated(OneFormExpr::zero(c)).is_err());
        }
    }

    #[test]
    fn free_streaming_momentum_rhs() {
        let c = chart(ChartKind::Symplectic, 1);
        let spec = FieldSpec::hamiltonian(c);
        let h = c.parse("p1^2/2").unwrap();
        let pi = form(c, &["p1", "0"]);
        let rhs = momentum_vlasov_rhs(&spec, &h, &pi).unwrap();
        assert_eq!(rhs.form().components(), &[c.zero(), -c.p_var(0)]);
        assert!(intertwine_residual(&spec, &h, &pi).unwrap().is_zero());
    }

    #[test]
    fn density_rhs_examples() {
        let c = chart(ChartKind::Symplectic, 1);
        let h = c.parse("p1^2/2").unwrap();
        assert_eq!(density_vlasov_rhs(&c, &h, &c.q_var(0)).unwrap(), -c.p_var(0));
        let cs = chart(ChartKind::Cosymplectic, 1);
        let h = cs.parse("t*q1^2 + p1^3").unwrap();
        let f = cs.parse("t^2 + 1").unwrap();
        assert!(density_vlasov_rhs(&cs, &h, &f).unwrap().is_zero());
    }

    #[test]
    fn weight_rate_is_action_derivative() {
        for n in [1, 2] {
            let c = chart(ChartKind::Contact, n);
            let h = c.parse("z^2 + p1*q1*z + p1^2").unwrap();
            let k = weight_rate_coefficient(&c);
            assert_eq!(weight_rate(&c, &h).unwrap(), c.reeb_eta_of(&h).scale(&k));
            assert_eq!(k, Rational::from_integer(1.into()));
        }
    }

    #[test]
    fn rejects_non_hamiltonian_rows() {
        let c = chart(ChartKind::Cocontact, 1);
        let spec = FieldSpec::new(c, crate::fields::Family::Energy, Some(crate::fields::Gauge::Zero)).unwrap();
        let pi = form(c, &["0", "p1", "0", "0"]);
        assert!(momentum_vlasov_rhs(&spec, &c.coord(3), &pi).is_err());
    }
}
