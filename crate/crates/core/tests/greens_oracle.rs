//! Independent oracles for the FDTD Green's tensor extraction.

use std::f64::consts::PI;

use greenshape::domain::{make_grid, MaterialMap, UnitSystem};
use greenshape::fdtd::{self, source_spectrum, Axis, SolverSettings, SourceSpec, StopRule};
use greenshape::greens::{
    analytic_freespace_g2d, greens_columns, reciprocity_defect, tensor_from_columns,
    GreensSettings, Tensor2,
};
use num_complex::Complex64;

/// Composite Simpson rule on `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `H0⁽¹⁾` and `H1⁽¹⁾` from their integral representations.
fn hankel_quadrature(x: f64) -> (Complex64, Complex64) {
    let n = 4000;
    let j0 = simpson(|t| (x * t.sin()).cos(), 0.0, PI, n) / PI;
    let j1 = simpson(|t| (t - x * t.sin()).cos(), 0.0, PI, n) / PI;
    // Tails vanish once x sinh t exceeds ~50.
    let t_max = (50.0 / x).asinh();
    let y0 = simpson(|t| (x * t.sin()).sin(), 0.0, PI, n) / PI
        - 2.0 / PI * simpson(|t| (-x * t.sinh()).exp(), 0.0, t_max, 20 * n);
    let y1 = simpson(|t| (x * t.sin() - t).sin(), 0.0, PI, n) / PI
        - simpson(|t| (t.exp() - (-t).exp()) * (-x * t.sinh()).exp(), 0.0, t_max, 20 * n) / PI;
    (Complex64::new(j0, y0), Complex64::new(j1, y1))
}

fn quadrature_tensor(r: (f64, f64), s: (f64, f64), k: f64) -> Tensor2 {
    let (dx, dy) = (r.0 - s.0, r.1 - s.1);
    let rho = dx.hypot(dy);
    let (h0, h1) = hankel_quadrature(k * rho);
    let i4 = Complex64::new(0.0, 0.25);
    let x = k * rho;
    let along = i4 * h1 / x;
    let across = i4 * (h0 - h1 / x);
    let u = [dx / rho, dy / rho];
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let d = if a == b { 1.0 } else { 0.0 };
            g[a][b] = across * d + (along - across) * u[a] * u[b];
        }
    }
    g
}

fn max_rel(a: &Tensor2, b: &Tensor2) -> f64 {
    let scale = b.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let mut e: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            e = e.max((a[i][j] - b[i][j]).norm() / scale);
        }
    }
    e
}

#[test]
fn closed_form_matches_quadrature_oracle() {
    let omega = UnitSystem::angular_frequency(2.0);
    for (r, s, eps) in [
        ((2.0, 0.0), (-2.0, 0.0), 1.0),
        ((1.2, 1.6), (-1.2, -1.6), 1.0),
        ((0.3, -0.1), (0.0, 0.0), 1.0),
        ((0.5, 0.5), (-0.5, 0.0), 12.0),
    ] {
        let g = analytic_freespace_g2d(r, s, omega, eps).unwrap();
        let oracle = quadrature_tensor(r, s, eps.sqrt() * omega);
        let e = max_rel(&g, &oracle);
        assert!(e < 1e-7, "r={r:?} s={s:?} eps={eps}: rel err {e:e}");
    }
}

#[test]
fn source_spectrum_matches_numerical_transform() {
    let f = 0.5;
    let src = SourceSpec::gaussian((0.0, 0.0), Axis::X, f, 10.0 / f);
    let (t0, w) = (src.peak_time, src.width);
    let untruncated = |t: f64| (2.0 * PI * f * t).cos() * (-0.5 * ((t - t0) / w).powi(2)).exp();
    for omega in [2.0 * PI * f, 2.0 * PI * f * 1.05, 2.0 * PI * f * 0.97] {
        let n = 200_000;
        let transform = |j: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            Complex64::new(
                simpson(|t| j(t) * (omega * t).cos(), a, b, n),
                simpson(|t| j(t) * (omega * t).sin(), a, b, n),
            )
        };
        let exact = source_spectrum(&src, omega).unwrap();
        let full = transform(&untruncated, t0 - 12.0 * w, t0 + 12.0 * w);
        assert!((full - exact).norm() < 1e-8 * exact.norm(), "{full} vs {exact}");
        // The emitted pulse is cut at ±5w; that costs ~1e-4 relative.
        let emitted = transform(&|t| src.value(t), 0.0, src.cutoff);
        assert!((emitted - exact).norm() < 1e-3 * exact.norm());
    }
}

fn vacuum(extent: f64, res: u32) -> MaterialMap {
    MaterialMap::uniform(make_grid(extent, extent, res).unwrap(), 1.0)
}

#[test]
fn centred_source_field_is_mirror_symmetric() {
    let m = vacuum(5.0, 10);
    let omega = UnitSystem::angular_frequency(2.0);
    let settings = GreensSettings::for_wavelength(2.0, 10);
    let [cx, _] = greens_columns(&m, (0.0, 0.0), omega, &settings).unwrap();
    let g = m.grid;
    let (nx, ny) = (g.nodes_x(), g.nodes_y());
    let scale = cx.field.values.iter().map(|v| v[0].norm()).fold(0.0, f64::max);
    for j in 0..ny {
        for i in 0..nx {
            let e = cx.field.at(i, j);
            let mirrored_y = cx.field.at(i, ny - 1 - j);
            let mirrored_x = cx.field.at(nx - 1 - i, j);
            assert!((e[0] - mirrored_y[0]).norm() < 1e-9 * scale);
            assert!((e[1] + mirrored_y[1]).norm() < 1e-9 * scale);
            assert!((e[0] - mirrored_x[0]).norm() < 1e-9 * scale);
            assert!((e[1] + mirrored_x[1]).norm() < 1e-9 * scale);
        }
    }
}

#[test]
fn response_is_linear_in_source_amplitude() {
    let m = vacuum(4.0, 5);
    let omega = UnitSystem::angular_frequency(2.0);
    let settings = SolverSettings::for_wavelength(2.0, 5);
    let src = SourceSpec::gaussian((0.4, -0.2), Axis::Y, 0.5, 20.0);
    let a = fdtd::run(&m, &src, omega, &settings).unwrap();
    let b = fdtd::run(&m, &src.with_amplitude(2.5), omega, &settings).unwrap();
    for (u, v) in a.field.values.iter().zip(&b.field.values) {
        for c in 0..2 {
            assert!((v[c] - 2.5 * u[c]).norm() <= 1e-9 * (1.0 + v[c].norm()));
        }
    }
}

#[test]
fn energy_does_not_grow_after_source_cutoff() {
    // A high-index disk rings down long after the short pulse ends.
    let g = make_grid(4.0, 4.0, 5).unwrap();
    let eps = (0..g.node_count())
        .map(|k| {
            let (x, y) = (g.x(k % g.nodes_x()), g.y(k / g.nodes_x()));
            if x.hypot(y) < 1.0 { 12.0 } else { 1.0 }
        })
        .collect();
    let m = MaterialMap::from_values(g, eps).unwrap();
    let omega = UnitSystem::angular_frequency(2.0);
    let mut settings = SolverSettings::for_wavelength(2.0, 5);
    settings.energy_every = 1;
    let src = SourceSpec::gaussian((0.4, 0.0), Axis::X, 0.5, 2.0);
    let run = fdtd::run(&m, &src, omega, &settings).unwrap();
    let after: Vec<f64> = run
        .energy
        .iter()
        .filter(|(t, _)| *t > src.cutoff)
        .map(|(_, e)| *e)
        .collect();
    assert!(after.len() > 10);
    for w in after.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-14 * run.peak_energy, "{} -> {}", w[0], w[1]);
    }
    assert!(after.last().unwrap() / run.peak_energy < 1e-8);
}

#[test]
fn non_decaying_fixed_step_run_is_reported() {
    let m = vacuum(4.0, 5);
    let omega = UnitSystem::angular_frequency(2.0);
    let mut settings = SolverSettings::for_wavelength(2.0, 5);
    settings.stop = StopRule::EnergyDecay { ratio: 1e-8, max_steps: 50 };
    let src = SourceSpec::gaussian((0.0, 0.0), Axis::X, 0.5, 20.0);
    assert!(matches!(
        fdtd::run(&m, &src, omega, &settings),
        Err(greenshape::Error::NonDecaying { .. })
    ));
}

#[test]
fn freespace_columns_converge_to_closed_form() {
    let omega = UnitSystem::angular_frequency(2.0);
    let (s, r) = ((-1.5, -2.0), (1.5, 2.0));
    let err = |res: u32| {
        let m = vacuum(7.0, res);
        let settings = GreensSettings::for_wavelength(2.0, res);
        let cols = greens_columns(&m, s, omega, &settings).unwrap();
        let g = tensor_from_columns(&cols, r).unwrap().tensor;
        max_rel(&g, &analytic_freespace_g2d(r, s, omega, 1.0).unwrap())
    };
    let coarse = err(4);
    let fine = err(8);
    assert!(fine < 0.1, "res 8 error {fine}");
    assert!(fine < coarse, "{fine} !< {coarse}");
}

#[test]
fn freespace_reciprocity_is_exact_to_dft_truncation() {
    let m = vacuum(5.0, 10);
    let omega = UnitSystem::angular_frequency(2.0);
    let settings = GreensSettings::for_wavelength(2.0, 10);
    let d = reciprocity_defect(&m, (1.0, 0.7), (-0.9, -0.4), omega, &settings).unwrap();
    assert!(d < 1e-6, "defect {d:e}");
}

#[test]
fn dielectric_inclusion_keeps_reciprocity() {
    let g = make_grid(5.0, 5.0, 10).unwrap();
    let eps = (0..g.node_count())
        .map(|k| {
            let (i, j) = (k % g.nodes_x(), k / g.nodes_x());
            let (x, y) = (g.x(i), g.y(j));
            if (x - 0.3).hypot(y) < 0.8 { 12.0 } else { 1.0 }
        })
        .collect();
    let m = MaterialMap::from_values(g, eps).unwrap();
    let omega = UnitSystem::angular_frequency(2.0);
    let settings = GreensSettings::for_wavelength(2.0, 10);
    let d = reciprocity_defect(&m, (1.5, 0.5), (-1.5, -0.2), omega, &settings).unwrap();
    assert!(d < 1e-2, "defect {d:e}");
}
