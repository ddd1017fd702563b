use geokin::kinetics::{
    solve_density_grid, solve_density_particle, Axis, Boundary, DensitySource, GridDensity, GridLayout,
    ParticleEnsemble,
};
use geokin::{Chart, ChartKind};

fn bump(q: f64, p: f64) -> f64 {
    (-(q * q + (p - 0.5) * (p - 0.5)) / 0.72).exp()
}

fn driven_layout(cells: usize) -> GridLayout {
    let c = Chart::new(ChartKind::Cosymplectic, 1).unwrap();
    let a = Axis::new(-4.0, 4.0, cells, Boundary::ZeroInflow).unwrap();
    GridLayout::new(c, vec![Axis::collapsed(1.0), a, a]).unwrap()
}

/// Characteristics of `p^2/2 + t q` with `t` frozen.
fn driven_exact(layout: &GridLayout, s: f64) -> GridDensity {
    GridDensity::sample(layout.clone(), |x| {
        let t = x[0];
        bump(x[1] - x[2] * s - t * s * s / 2.0, x[2] + t * s)
    })
    .unwrap()
}

#[test]
fn grid_converges_on_driven_streaming() {
    let c = Chart::new(ChartKind::Cosymplectic, 1).unwrap();
    let h = c.parse("p1^2/2 + t*q1").unwrap().into();
    let errors: Vec<f64> = [32, 64]
        .into_iter()
        .map(|cells| {
            let layout = driven_layout(cells);
            let f0 = GridDensity::sample(layout.clone(), |x| bump(x[1], x[2])).unwrap();
            let f = solve_density_grid(&c, &h, &f0, 0.5, 0.01).unwrap();
            f.relative_l1(&driven_exact(&layout, 0.5)).unwrap()
        })
        .collect();
    assert!(errors[1] < 0.1, "{errors:?}");
    let ratio = errors[0] / errors[1];
    assert!((1.6..2.6).contains(&ratio), "first-order ratio {ratio}: {errors:?}");
}

#[test]
fn particles_follow_driven_streaming() {
    let c = Chart::new(ChartKind::Cosymplectic, 1).unwrap();
    let h = c.parse("p1^2/2 + t*q1").unwrap().into();
    let layout = driven_layout(48);
    let f0 = DensitySource::function(|x: &[f64]| bump(x[1], x[2]));
    let sol = solve_density_particle(&c, &h, &f0, &layout, 0.5, 0.01, 50_000).unwrap();
    let err = sol.density.relative_l1(&driven_exact(&layout, 0.5)).unwrap();
    assert!(err < 0.02, "{err}");
    assert!(((sol.final_mass + sol.escaped_mass) / sol.initial_mass - 1.0).abs() < 1e-12);
}

#[test]
fn contact_weights_track_the_reeb_rate() {
    // H = z: every characteristic carries weight e^{s}, while the support
    // contracts by e^{-s} in both p and z.
    let c = Chart::new(ChartKind::Contact, 1).unwrap();
    let a = Axis::new(-3.0, 3.0, 48, Boundary::ZeroInflow).unwrap();
    let layout = GridLayout::new(c, vec![Axis::collapsed(0.0), a, a]).unwrap();
    let g = |x: &[f64]| (-(x[1] * x[1] + x[2] * x[2]) / 2.0).exp();
    let sol = solve_density_particle(&c, &c.parse("z").unwrap().into(), &DensitySource::function(g), &layout, 0.5, 0.01, 20_000)
        .unwrap();
    let growth = sol.final_mass / sol.initial_mass;
    assert!((growth - 0.5f64.exp()).abs() < 1e-9, "{growth}");
}

#[test]
fn ensemble_csv_round_trip() {
    let c = Chart::new(ChartKind::Cocontact, 1).unwrap();
    let a = Axis::new(-1.0, 1.0, 32, Boundary::Periodic).unwrap();
    let layout = GridLayout::new(c, vec![Axis::collapsed(0.0), a, a, a]).unwrap();
    let src = DensitySource::function(|x: &[f64]| 1.0 + x[1] * x[1]);
    let ens = ParticleEnsemble::quiet_start(&layout, &src, 40_000).unwrap();
    let mut buf = Vec::new();
    ens.write_csv(&mut buf).unwrap();
    let header = String::from_utf8(buf.clone()).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "q1,p1,z,t,w");
    let back = ParticleEnsemble::read_csv(c, buf.as_slice()).unwrap();
    assert_eq!(back.len(), ens.len());
    assert!((back.total_weight() - ens.total_weight()).abs() <= 1e-12 * ens.total_weight());
}
