use adce::exact::*;
use adce::hilbert::build_basis;
use adce::modulation::{Drive, ModulationSpec};
use adce::SystemParams;

fn main() {
    let p = SystemParams::from_detunings(0.06, 0.0, -0.48, 0.48);
    let basis = build_basis(21).unwrap();
    let mut spec = ModulationSpec::default();
    spec.e1 = Drive::single(0.05 * p.omega01(), 1.477, 0.0);
    let initial = fock_state(&basis, 0, 4).unwrap();
    let controls = PropagationControls::new(93_500.0, 25.0);
    let t0 = std::time::Instant::now();
    let run = propagate(&initial, &p, &spec, &basis, &[], &controls).unwrap();
    let el = t0.elapsed().as_secs_f64();
    println!(
        "steps = {}, h = {:.4}, drift = {:.2e}, wall = {:.1} s  ({:.1} Msteps/s)",
        run.steps_total, run.step, run.norm_err_max, el,
        run.steps_total as f64 / el / 1e6
    );
}
