//! The six scalar brackets on Darboux charts.
//!
//! With implicit sums over `i`:
//!
//! ```text
//! Poisson        F_q H_p - F_p H_q
//! almost-Poisson F_q H_p - F_p H_q + p F_z H_p - p F_p H_z
//! Jacobi         F_q H_p - F_p H_q + (F - p F_p) H_z - (H - p H_p) F_z
//! ```
//!
//! The Poisson formula serves both the symplectic and cosymplectic charts,
//! the other two serve contact and cocontact charts. None of them involve
//! `t`-derivatives, so functions of `t` alone are cosymplectic Casimirs.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{pairing, Chart, ChartKind, OneFormExpr};
use crate::error::{GeoError, Result};
use crate::musical::{sharp, SharpVariant};
use crate::poly::{int, Poly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BracketKind {
    PoissonSymplectic,
    PoissonCosymplectic,
    AlmostPoissonContact,
    JacobiContact,
    AlmostPoissonCocontact,
    JacobiCocontact,
}

impl BracketKind {
    pub const ALL: [BracketKind; 6] = [
        BracketKind::PoissonSymplectic,
        BracketKind::PoissonCosymplectic,
        BracketKind::AlmostPoissonContact,
        BracketKind::JacobiContact,
        BracketKind::AlmostPoissonCocontact,
        BracketKind::JacobiCocontact,
    ];

    pub fn chart_kind(self) -> ChartKind {
        match self {
            BracketKind::PoissonSymplectic => ChartKind::Symplectic,
            BracketKind::PoissonCosymplectic => ChartKind::Cosymplectic,
            BracketKind::AlmostPoissonContact | BracketKind::JacobiContact => ChartKind::Contact,
            BracketKind::AlmostPoissonCocontact | BracketKind::JacobiCocontact => {
                ChartKind::Cocontact
            }
        }
    }

    pub fn is_jacobi(self) -> bool {
        matches!(self, BracketKind::JacobiContact | BracketKind::JacobiCocontact)
    }

    pub fn is_almost_poisson(self) -> bool {
        matches!(
            self,
            BracketKind::AlmostPoissonContact | BracketKind::AlmostPoissonCocontact
        )
    }

    pub fn satisfies_jacobi_identity(self) -> bool {
        !self.is_almost_poisson()
    }

    pub fn satisfies_leibniz(self) -> bool {
        !self.is_jacobi()
    }

    /// The Hamiltonian-structure bracket of a chart: Poisson on symplectic
    /// and cosymplectic charts, Jacobi on contact and cocontact charts.
    pub fn canonical(kind: ChartKind) -> BracketKind {
        match kind {
            ChartKind::Symplectic => BracketKind::PoissonSymplectic,
            ChartKind::Cosymplectic => BracketKind::PoissonCosymplectic,
            ChartKind::Contact => BracketKind::JacobiContact,
            ChartKind::Cocontact => BracketKind::JacobiCocontact,
        }
    }
}

fn check(kind: BracketKind, chart: &Chart, polys: &[&Poly]) -> Result<()> {
    if chart.kind() != kind.chart_kind() {
        return Err(GeoError::WrongChartKind {
            operation: "bracket",
            kind: chart.kind(),
        });
    }
    polys.iter().try_for_each(|p| chart.ensure_poly(p))
}

fn canonical_part(chart: &Chart, f: &Poly, h: &Poly) -> Poly {
    (0..chart.n()).fold(chart.zero(), |acc, i| {
        let (q, p) = (chart.q(i), chart.p(i));
        acc + f.d(q) * h.d(p) - f.d(p) * h.d(q)
    })
}

/// `p_i dF/dp_i`
fn euler_p(chart: &Chart, f: &Poly) -> Poly {
    (0..chart.n()).fold(chart.zero(), |acc, i| acc + chart.p_var(i) * f.d(chart.p(i)))
}

pub fn bracket(kind: BracketKind, chart: &Chart, f: &Poly, h: &Poly) -> Result<Poly> {
    check(kind, chart, &[f, h])?;
    let base = canonical_part(chart, f, h);
    Ok(match kind {
        BracketKind::PoissonSymplectic | BracketKind::PoissonCosymplectic => base,
        BracketKind::AlmostPoissonContact | BracketKind::AlmostPoissonCocontact => {
            let z = chart.z_index().expect("action coordinate");
            base + f.d(z) * euler_p(chart, h) - euler_p(chart, f) * h.d(z)
        }
        BracketKind::JacobiContact | BracketKind::JacobiCocontact => {
            let z = chart.z_index().expect("action coordinate");
            base + (f - euler_p(chart, f)) * h.d(z) - (h - euler_p(chart, h)) * f.d(z)
        }
    })
}

/// Second route: `<dF, sharp_Lambda(dH)>`, plus `F R(H) - H R(F)` for the
/// Jacobi kinds.
pub fn bracket_via_bivector(kind: BracketKind, chart: &Chart, f: &Poly, h: &Poly) -> Result<Poly> {
    check(kind, chart, &[f, h])?;
    let x = sharp(*chart, SharpVariant::Bivector, &OneFormExpr::exact(*chart, h))?;
    let lambda = pairing(&OneFormExpr::exact(*chart, f), &x)?;
    Ok(if kind.is_jacobi() {
        lambda + f * chart.reeb_eta_of(h) - h * chart.reeb_eta_of(f)
    } else {
        lambda
    })
}

/// `{{F,G},H} + {{G,H},F} + {{H,F},G}`
pub fn jacobiator(kind: BracketKind, chart: &Chart, f: &Poly, g: &Poly, h: &Poly) -> Result<Poly> {
    let b = |a: &Poly, c: &Poly| bracket(kind, chart, a, c);
    Ok(b(&b(f, g)?, h)? + b(&b(g, h)?, f)? + b(&b(h, f)?, g)?)
}

/// `{F, K H} - K {F, H} - H {F, K}`
pub fn leibniz_defect(kind: BracketKind, chart: &Chart, f: &Poly, k: &Poly, h: &Poly) -> Result<Poly> {
    let b = |a: &Poly, c: &Poly| bracket(kind, chart, a, c);
    Ok(b(f, &(k * h))? - k * b(f, h)? - h * b(f, k)?)
}

/// A triple on which the jacobiator does not vanish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiatorWitness {
    pub f: Poly,
    pub g: Poly,
    pub h: Poly,
    pub jacobiator: Poly,
}

/// Searches seeded random triples of monic monomials of degree at most 2
/// for a nonvanishing jacobiator. Returns the first hit.
pub fn find_jacobiator_witness(
    kind: BracketKind,
    chart: &Chart,
    seed: u64,
    attempts: usize,
) -> Result<Option<JacobiatorWitness>> {
    check(kind, chart, &[])?;
    let dim = chart.dim();
    let mut monomials = Vec::new();
    for i in 0..dim {
        let mut e = vec![0u32; dim];
        e[i] = 1;
        monomials.push(e.clone());
        for j in i..dim {
            let mut e2 = e.clone();
            e2[j] += 1;
            monomials.push(e2);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let mut pick = || {
            let e = monomials.choose(&mut rng).expect("nonempty").clone();
            Poly::monomial(e, int(1))
        };
        let (f, g, h) = (pick(), pick(), pick());
        let j = jacobiator(kind, chart, &f, &g, &h)?;
        if !j.is_zero() {
            return Ok(Some(JacobiatorWitness { f, g, h, jacobiator: j }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(kind: ChartKind, n: usize) -> Chart {
        Chart::new(kind, n).unwrap()
    }

    #[test]
    fn canonical_pair() {
        let c = chart(ChartKind::Symplectic, 1);
        let b = bracket(BracketKind::PoissonSymplectic, &c, &c.q_var(0), &c.p_var(0)).unwrap();
        assert_eq!(b, c.constant(1));
    }

    #[test]
    fn time_is_a_casimir() {
        let c = chart(ChartKind::Cosymplectic, 1);
        let h = c.parse("t*q1*p1 + p1^2 + t^2*q1").unwrap();
        let f = c.parse("t^3 - 2*t").unwrap();
        assert!(bracket(BracketKind::PoissonCosymplectic, &c, &f, &h).unwrap().is_zero());
    }

    #[test]
    fn contact_jacobi_of_z_with_kinetic_energy() {
        let c = chart(ChartKind::Contact, 1);
        let h = c.parse("p1^2/2").unwrap();
        let b = bracket(BracketKind::JacobiContact, &c, &c.coord(2), &h).unwrap();
        assert_eq!(b, h);
    }

    #[test]
    fn cocontact_jacobi_reduces_to_poisson() {
        let cc = chart(ChartKind::Cocontact, 1);
        let s = chart(ChartKind::Symplectic, 1);
        let f = cc.parse("q1^2*p1 - 3*p1").unwrap();
        let h = cc.parse("p1^2/2 + q1^3").unwrap();
        let fs = s.parse("q1^2*p1 - 3*p1").unwrap();
        let hs = s.parse("p1^2/2 + q1^3").unwrap();
        let a = bracket(BracketKind::JacobiCocontact, &cc, &f, &h).unwrap();
        let b = bracket(BracketKind::PoissonSymplectic, &s, &fs, &hs).unwrap();
        assert_eq!(cc.format(&a), s.format(&b));
    }

    #[test]
    fn jacobi_triple_of_coordinates() {
        let c = chart(ChartKind::Cocontact, 1);
        let j = jacobiator(BracketKind::JacobiCocontact, &c, &c.q_var(0), &c.p_var(0), &c.coord(3)).unwrap();
        assert!(j.is_zero());
    }

    #[test]
    fn weak_leibniz_on_z() {
        let c = chart(ChartKind::Contact, 1);
        let one = c.constant(1);
        let d = leibniz_defect(BracketKind::JacobiContact, &c, &c.coord(2), &one, &one).unwrap();
        assert_eq!(d, one);
    }

    #[test]
    fn kind_gating() {
        let c = chart(ChartKind::Contact, 1);
        let x = c.q_var(0);
        assert!(bracket(BracketKind::PoissonSymplectic, &c, &x, &x).is_err());
    }

    #[test]
    fn bivector_route_agrees() {
        for kind in BracketKind::ALL {
            let c = chart(kind.chart_kind(), 2);
            let names = c.var_names();
            let f = c.parse(&format!("{}*{} + {}^2", names[0], names[2], names[1])).unwrap();
            let h = c.parse(&format!("{}^2*{} - {}", names[3], names[0], names[c.dim() - 1])).unwrap();
            assert_eq!(
                bracket(kind, &c, &f, &h).unwrap(),
                bracket_via_bivector(kind, &c, &f, &h).unwrap(),
                "{kind:?}"
            );
        }
    }
}
