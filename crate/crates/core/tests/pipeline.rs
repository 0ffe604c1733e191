use greenshape::domain::{rasterize, MaterialMap};
use greenshape::levelset::init_shape;
use greenshape::merit::{coupling_from_column, permittivity_gradient, velocity_from_coupling};
use greenshape::optimizer::{
    acceptor_column, both_columns, donor_column, optimize, q_of_material, OptimizeConfig,
    OutputOptions, RunStatus,
};

fn small(iterations: usize) -> OptimizeConfig {
    let mut cfg = OptimizeConfig::cylinder_defaults(4).unwrap();
    cfg.max_iterations = iterations;
    cfg
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn zero_iterations_evaluates_initial_shape_only() {
    let h = optimize(&small(0), &OutputOptions::default()).unwrap();
    assert_eq!(h.records.len(), 1);
    assert_eq!(h.best_iteration, 0);
    assert_eq!(h.status, RunStatus::Completed);
    assert!(h.records[0].predicted_df.is_none());
    assert_eq!(h.best_phi.phi, h.final_phi.phi);
}

#[test]
fn vacuum_shape_gives_unit_q() {
    let mut cfg = small(0);
    cfg.eps_in = 1.0;
    let h = optimize(&cfg, &OutputOptions::default()).unwrap();
    assert!((h.best_q - 1.0).abs() < 1e-9, "Q = {}", h.best_q);
}

#[test]
fn replay_is_deterministic() {
    let cfg = small(3);
    let a = optimize(&cfg, &OutputOptions::default()).unwrap();
    let b = optimize(&cfg, &OutputOptions::default()).unwrap();
    assert_eq!(a.q_values(), b.q_values());
    assert_eq!(a.final_phi.phi, b.final_phi.phi);
}

#[test]
fn reference_rate_is_cached_and_reused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(0);
    let cache = tmp.path().join("cache");
    let m = MaterialMap::uniform(cfg.grid, 1.0);
    let first = q_of_material(&cfg, &m, Some(&cache)).unwrap();
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let second = q_of_material(&cfg, &m, Some(&cache)).unwrap();
    assert_eq!(first.gamma0, second.gamma0);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);

    // A different wavelength must not hit the same entry.
    let mut other = cfg.clone();
    other.wavelength = 2.5;
    other.greens = greenshape::greens::GreensSettings::for_wavelength(2.5, 4);
    q_of_material(&other, &MaterialMap::uniform(other.grid, 1.0), Some(&cache)).unwrap();
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 2);
}

#[test]
fn concurrent_columns_match_sequential() {
    let cfg = small(0);
    let m = rasterize(&init_shape(&cfg.shape, &cfg.grid).unwrap(), 12.0, 1.0).unwrap();
    let (d, a) = both_columns(&cfg, &m).unwrap();
    assert_eq!(d.values, donor_column(&cfg, &m).unwrap().values);
    assert_eq!(a.values, acceptor_column(&cfg, &m).unwrap().values);
}

#[test]
fn edge_gradient_is_the_discrete_derivative() {
    let cfg = small(0);
    let g = cfg.grid;
    let base = rasterize(&init_shape(&cfg.shape, &g).unwrap(), 12.0, 1.0).unwrap();
    let (d, a) = both_columns(&cfg, &base).unwrap();
    let p = coupling_from_column(&d, &cfg.acceptor).unwrap();
    let v = permittivity_gradient(&a, &d, p).unwrap();
    let gamma = p.norm_sqr();

    // Nodes just outside the cylinder, spread around its circumference.
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    for j in 0..g.nodes_y() {
        for i in 0..g.nodes_x() {
            let r = g.x(i).hypot(g.y(j));
            if (1.0..1.0 + g.h()).contains(&r) {
                nodes.push((i, j));
            }
        }
    }
    let nodes: Vec<_> = nodes.iter().step_by(nodes.len().div_ceil(12)).copied().collect();
    let delta = 0.01;
    let (mut fd, mut adj) = (Vec::new(), Vec::new());
    for &(i, j) in &nodes {
        let mut eps = base.eps.clone();
        eps[g.index(i, j)] += delta;
        let m = MaterialMap::from_values(g, eps).unwrap();
        let p2 = coupling_from_column(&donor_column(&cfg, &m).unwrap(), &cfg.acceptor).unwrap();
        fd.push((p2.norm_sqr() - gamma) / delta);
        adj.push(v.at(i, j));
    }
    let r = pearson(&fd, &adj);
    assert!(r > 0.99, "correlation {r}");
    // dΓ/dε = 2ω²h²·v up to the Born remainder.
    let ratios: Vec<f64> = fd.iter().zip(&adj).map(|(f, v)| f / v).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(mean > 0.0);
    for q in &ratios {
        assert!((q / mean - 1.0).abs() < 0.15, "ratio {q} vs mean {mean}");
    }
}

#[test]
fn node_velocity_matches_edge_gradient_in_smooth_regions() {
    let cfg = small(0);
    let g = cfg.grid;
    let phi = init_shape(&cfg.shape, &g).unwrap();
    let m = rasterize(&phi, 12.0, 1.0).unwrap();
    let (d, a) = both_columns(&cfg, &m).unwrap();
    let p = coupling_from_column(&d, &cfg.acceptor).unwrap();
    let node = velocity_from_coupling(&a, &d, p).unwrap();
    let edge = permittivity_gradient(&a, &d, p).unwrap();
    // Between the cylinder and the dipoles' near field both agree.
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for j in 0..g.nodes_y() {
        for i in 0..g.nodes_x() {
            let r = g.x(i).hypot(g.y(j));
            let near_dipole = [(-2.0, 0.0), (2.0, 0.0)]
                .iter()
                .any(|c: &(f64, f64)| (g.x(i) - c.0).hypot(g.y(j) - c.1) < 0.75);
            if r > 1.5 && !near_dipole {
                x.push(node.at(i, j));
                y.push(edge.at(i, j));
            }
        }
    }
    assert!(pearson(&x, &y) > 0.99);
}
