use std::path::PathBuf;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fluxlag::density::InitialDensity;
use fluxlag::dynamics::{SchemeParams, Solver};
use fluxlag::exec::{Exec, PAR_MIN_NODES};
use fluxlag::experiments::{run_many, InitialSpec, MeshSpec, Scenario};
use fluxlag::mesh::MassMesh;
use fluxlag::reference::PowerSupersolution;
use fluxlag::transform::init_pseudo_inverse;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sweep(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let jobs: Vec<(Scenario, PathBuf)> = [1.0, 10.0, 30.0, 100.0]
        .iter()
        .map(|&nu| {
            let mut s = Scenario::new(
                &format!("nu{nu}"),
                1.0,
                MeshSpec::uniform(100),
                InitialSpec::new("indicator"),
                0.05,
            );
            s.nu = nu;
            s.reference = Some("u_hom".into());
            let out = dir.path().join(&s.name);
            (s, out)
        })
        .collect();
    let mut g = c.benchmark_group("sweep_nu");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| run_many(&jobs, exec)));
    }
    g.finish();
}

fn residual(c: &mut Criterion) {
    let u = PowerSupersolution::new(0.5, 1.0, 1.0, 1.0).unwrap();
    let mut g = c.benchmark_group("residual_grid_101");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| u.residual_grid((0.0, 1.0), 101, 101, 1e-3, exec).unwrap())
        });
    }
    g.finish();
}

fn evaluate(c: &mut Criterion) {
    let mut g = c.benchmark_group("rhs_evaluate");
    for n in [PAR_MIN_NODES, 4 * PAR_MIN_NODES] {
        let mesh = Arc::new(MassMesh::uniform(n).unwrap());
        let state = init_pseudo_inverse(&InitialDensity::triangle(1.0).unwrap(), mesh).unwrap();
        for (name, exec) in MODES {
            let mut solver = Solver::new(SchemeParams::with_m(1.5)).unwrap().with_exec(exec);
            g.bench_with_input(BenchmarkId::new(name, n), &state, |b, s| {
                b.iter(|| solver.evaluate(s).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, sweep, residual, evaluate);
criterion_main!(benches);
