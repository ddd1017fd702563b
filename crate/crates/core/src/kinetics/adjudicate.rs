//! Coefficients of the density-Vlasov equation, fixed by requiring that the
//! momentum map intertwine the two kinetic formulations.
//!
//! The density rate is sought in the form
//! `a {H,f} + b f R_eta(H) + c f R_tau(H)`. Each random `(H, U)` pair gives
//! one linear equation per monomial; the stacked system is solved exactly.

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{momentum_map, momentum_vlasov_rhs, MomentumOneForm};
use crate::brackets::{bracket, BracketKind};
use crate::chart::{Chart, OneFormExpr};
use crate::error::{GeoError, Result};
use crate::fields::FieldSpec;
use crate::poly::random::{random_poly, RandomPolyConfig};
use crate::poly::{int, Monomial, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityCoefficients {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
}

#[derive(Serialize)]
struct Printed {
    a: String,
    b: String,
    c: String,
}

impl Serialize for DensityCoefficients {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Printed {
            a: self.a.to_string(),
            b: self.b.to_string(),
            c: self.c.to_string(),
        }
        .serialize(s)
    }
}

/// The coefficients obtained once by [`adjudicate`] and frozen:
/// `(1, 0, 0)` without an action coordinate and `(1, n + 3, 0)` with one.
pub fn frozen_coefficients(chart: &Chart) -> DensityCoefficients {
    let b = if chart.kind().has_action() {
        int(chart.n() as i64 + 3)
    } else {
        Rational::zero()
    };
    DensityCoefficients {
        a: Rational::one(),
        b,
        c: Rational::zero(),
    }
}

pub fn random_one_form<R: rand::Rng + ?Sized>(rng: &mut R, chart: Chart, cfg: RandomPolyConfig) -> OneFormExpr {
    let comps = (0..chart.dim()).map(|_| random_poly(rng, chart.dim(), cfg)).collect();
    OneFormExpr::new(chart, comps).expect("component count matches chart")
}

/// Re-derives the coefficients from `samples` seeded random pairs, with
/// `H` of degree at most 2 and one-form components of degree at most 3.
pub fn adjudicate(chart: &Chart, seed: u64, samples: usize) -> Result<DensityCoefficients> {
    let spec = FieldSpec::hamiltonian(*chart);
    let kind = BracketKind::canonical(chart.kind());
    let cfg = RandomPolyConfig {
        max_degree: 2,
        max_terms: 4,
        coeff_bound: 3,
    };
    let form_cfg = RandomPolyConfig { max_degree: 3, ..cfg };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let has_z = chart.kind().has_action();
    let has_t = chart.kind().has_time();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut rhs: Vec<Rational> = Vec::new();
    for _ in 0..samples {
        let h = random_poly(&mut rng, chart.dim(), cfg);
        let pi = MomentumOneForm::new(random_one_form(&mut rng, *chart, form_cfg));
        let lhs = momentum_map(&momentum_vlasov_rhs(&spec, &h, &pi)?);
        let f = momentum_map(&pi);
        let mut basis = vec![bracket(kind, chart, &h, &f)?];
        if has_z {
            basis.push(&f * chart.reeb_eta_of(&h));
        }
        if has_t {
            basis.push(&f * chart.reeb_tau_of(&h));
        }
        let mut monos: Vec<&Monomial> = lhs.terms().map(|(m, _)| m).collect();
        for b in &basis {
            monos.extend(b.terms().map(|(m, _)| m));
        }
        monos.sort();
        monos.dedup();
        for m in monos {
            rows.push(basis.iter().map(|b| b.coeff(m.exps())).collect());
            rhs.push(lhs.coeff(m.exps()));
        }
    }
    let x = solve_exact(rows, rhs)?;
    let mut it = x.into_iter();
    let a = it.next().expect("bracket coefficient");
    let b = if has_z { it.next().expect("b") } else { Rational::zero() };
    let c = if has_t { it.next().expect("c") } else { Rational::zero() };
    Ok(DensityCoefficients { a, b, c })
}

/// Exact solution of an overdetermined system; fails unless the columns
/// are independent and every equation is satisfied.
pub fn solve_exact(mut rows: Vec<Vec<Rational>>, mut rhs: Vec<Rational>) -> Result<Vec<Rational>> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(ncols);
    for col in 0..ncols {
        let Some(r) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            return Err(GeoError::Singular(format!("column {col} is not determined")));
        };
        rows.swap(pivot_row, r);
        rhs.swap(pivot_row, r);
        let inv = Rational::one() / &rows[pivot_row][col];
        for v in rows[pivot_row].iter_mut() {
            *v = &*v * &inv;
        }
        rhs[pivot_row] = &rhs[pivot_row] * &inv;
        for r in 0..rows.len() {
            if r != pivot_row && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for k in 0..ncols {
                    let delta = &factor * &rows[pivot_row][k];
                    rows[r][k] -= delta;
                }
                let delta = &factor * &rhs[pivot_row];
                rhs[r] -= delta;
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    if rhs[pivot_row..].iter().any(|v| !v.is_zero()) {
        return Err(GeoError::Singular("system is inconsistent".into()));
    }
    Ok(pivots.into_iter().map(|r| rhs[r].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartKind;
    use crate::poly::rat;

    #[test]
    fn small_exact_system() {
        // x + y = 3, x - y = 1, 2x = 4
        let rows = vec![
            vec![int(1), int(1)],
            vec![int(1), int(-1)],
            vec![int(2), int(0)],
        ];
        let x = solve_exact(rows, vec![int(3), int(1), int(4)]).unwrap();
        assert_eq!(x, vec![int(2), int(1)]);
        let bad = solve_exact(vec![vec![int(1)], vec![int(1)]], vec![int(1), int(2)]);
        assert!(bad.is_err());
        assert_eq!(rat(4, 2), int(2));
    }

    #[test]
    fn resolved_constants_match_frozen() {
        for kind in ChartKind::ALL {
            for n in [1, 2] {
                let c = Chart::new(kind, n).unwrap();
                let got = adjudicate(&c, 11, 6).unwrap_or_else(|e| panic!("{kind} n={n}: {e}"));
                assert_eq!(got, frozen_coefficients(&c), "{kind} n={n}");
            }
        }
    }
}
