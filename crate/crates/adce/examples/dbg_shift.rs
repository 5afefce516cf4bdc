use adce::dressed::{assign_labels, dressed_numeric, nu_corrections, Label, Regime};
use adce::hilbert::{build_basis, hamiltonian_bare};
use adce::modulation::{Drive, ModulationSpec, Tone};
use adce::rates::drive_level_shift;
use adce::SystemParams;

fn main() {
    let p = SystemParams::from_detunings(0.06, 0.072, -0.48, 0.48);
    let basis = build_basis(12).unwrap();
    let h0 = hamiltonian_bare(&p, &basis);
    let mut db = dressed_numeric(&h0, &basis, &p).unwrap();
    assign_labels(&mut db, Regime::DoubleResonant).unwrap();
    nu_corrections(&mut db);
    let mut spec = ModulationSpec::default();
    spec.e1 = Drive {
        depth: 0.05 * p.omega01(),
        tones: vec![
            Tone { freq: 1.5002, weight: 10.0 / 17.0, phase: 0.0 },
            Tone { freq: 1.4443, weight: 7.0 / 17.0, phase: std::f64::consts::PI },
        ],
    };
    let tones = spec.merged_tones();
    for (m, label) in [(4usize, Label::Zero), (4, Label::PlusD), (2, Label::MinusD)] {
        let s = db.find(m, label).unwrap();
        let d = drive_level_shift(&spec, &tones, &db, m, s.ordinal).unwrap();
        println!("shift({m},{label}) = {d:.3e}");
    }
}
