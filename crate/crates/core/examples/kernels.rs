//! Closed-form transition probabilities for the three sub-processes, checked
//! against the matrix-exponential oracle.

use clustered_msm::kernels::{
    expm_oracle, fallback_count, four_state_tpm, three_state_tpm, two_state_tpm, TransitionKernel,
};
use clustered_msm::model::{FourStateRates, ThreeStateRates, TwoStateRates};

fn show(name: &str, k: &TransitionKernel) {
    println!("{name} (t = {}):", k.elapsed());
    for row in k.rows() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.6}")).collect();
        println!("  {}", cells.join("  "));
    }
}

fn main() {
    // states: inactive, active, inactive damaged, active damaged
    let mover = FourStateRates { l12: 0.15, l13: 0.02, l21: 0.6, l24: 0.054, l34: 0.11, l43: 0.49 };
    let t = 1.5;
    let k = four_state_tpm(&mover, t).unwrap();
    show("four-state mover", &k);
    let oracle = expm_oracle(&mover.generator(), t).unwrap();
    println!("  max |closed - expm| = {:.2e}", k.max_abs_diff(&oracle));

    // row 2 is row 1 of the kernel with the roles of the two activity states swapped
    let s = four_state_tpm(&mover.swapped(), t).unwrap();
    println!(
        "  row 2 via swap: [{:.6}, {:.6}, {:.6}, {:.6}]",
        s.get(0, 1),
        s.get(0, 0),
        s.get(0, 3),
        s.get(0, 2)
    );

    // damage absorbs regardless of activity
    let three = ThreeStateRates { l12: 0.33, l13: 0.017, l21: 0.85, l23: 0.15 };
    let k3 = three_state_tpm(&three, t).unwrap();
    show("three-state mover", &k3);
    println!("  max |closed - expm| = {:.2e}", k3.max_abs_diff(&expm_oracle(&three.generator(), t).unwrap()));

    let stayer = TwoStateRates { forward: 0.33, backward: 0.99 };
    let k2 = two_state_tpm(stayer.forward, stayer.backward, t).unwrap();
    show("two-state stayer", &k2);

    // P(s + t) = P(s) P(t)
    let (a, b) = (0.7, 2.3);
    let direct = four_state_tpm(&mover, a + b).unwrap();
    let composed = four_state_tpm(&mover, a).unwrap().compose(&four_state_tpm(&mover, b).unwrap());
    println!("semigroup gap at s = {a}, t = {b}: {:.2e}", direct.max_abs_diff(&composed));

    // coincident exits from the undamaged block have no closed form here
    let flat = FourStateRates { l12: 0.0, l13: 0.5, l21: 0.0, l24: 0.5, l34: 0.2, l43: 0.3 };
    let before = fallback_count();
    four_state_tpm(&flat, t).unwrap();
    println!("oracle fallbacks for a degenerate generator: {}", fallback_count() - before);
}
