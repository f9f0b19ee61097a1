use calderon_core::boundary::{pointwise_div, BoundaryScalar};
use calderon_core::conductivity::builtin_field;
use calderon_core::geometry::{build_chart, select_xi, DomainGeometry, Orientation};
use calderon_core::probes::{probe_grad, MRule, ProbeSpec};
use calderon_core::solver::{CleanOracle, OracleMode, SolverConfig};
use num_complex::Complex64;
use std::sync::Arc;

fn clean_node(
    oracle: &Arc<CleanOracle>,
    spec: &ProbeSpec,
    gamma_b: &BoundaryScalar,
    t: f64,
) -> Complex64 {
    let f = probe_grad(spec, t).unwrap();
    let fc = f.conj();
    let g = pointwise_div(&fc, gamma_b).unwrap();
    let params = oracle.mesh_params_for(&[&f, &g]);
    let eng_g = oracle.engine_for(&params, false).unwrap();
    let eng_1 = oracle.engine_for(&params, true).unwrap();
    let uf = eng_g.solve(&f).unwrap();
    let vf = eng_1.solve(&f).unwrap();
    let mut vol = Complex64::new(0.0, 0.0);
    for tx in 0..eng_g.mesh.n_triangles() {
        let c = eng_g.mesh.triangle_centroid(tx);
        let gg = oracle.gamma.gradient(c);
        let gv = oracle.gamma.value(c);
        let gu = eng_g.gradient(&uf, tx);
        let v = vf.value_at_centroid(tx).conj();
        vol += eng_g.mesh.triangle_area(tx) * (gu[0] * (gg[0] / gv) + gu[1] * (gg[1] / gv)) * v;
    }
    -vol
}

fn main() {
    let dom = DomainGeometry::unit_disk();
    let chart = build_chart(&dom, 0.0).unwrap();
    let frame = select_xi(&chart, Orientation::CounterClockwise);
    let spec = ProbeSpec::new(chart, frame, MRule::Grad);

    for (name, params, target) in [
        ("2+x", vec![2.0, 1.0, 0.0], Complex64::new(-1.0 / 3.0, 0.0)),
        ("e^y", vec![0.0, 1.0], Complex64::new(0.0, 1.0)),
    ] {
        let gamma = builtin_field(if name == "2+x" { "affine" } else { "exponential" }, &params).unwrap();
        let gamma_b = BoundaryScalar::from_conductivity(&gamma, &dom);
        for ppw in [40.0] {
            let oracle = CleanOracle::new(
                Arc::clone(&dom),
                gamma.clone(),
                SolverConfig { ppw, mode: OracleMode::AnalyticDisk, ..SolverConfig::default() },
            );
            for t in [2.5, 5.0, 10.0, 20.0] {
                let v = clean_node(&oracle, &spec, &gamma_b, t);
                println!(
                    "{name} ppw {ppw} t {t}: {:.5}+{:.5}i  (|err vs paper-target| = {:.2e})",
                    v.re, v.im, (v - target).norm()
                );
            }
        }
    }
}
