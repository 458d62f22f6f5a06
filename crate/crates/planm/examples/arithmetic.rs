//! Exact arithmetic in ℚ(√5): numbers a + b·φ, exact signs, and weights
//! ordered with tiebreaks.

use planm::arith::{integer, rational};
use planm::{golden_sign, GoldenNumber, TaggedWeight};

fn main() {
    let phi = GoldenNumber::phi();
    println!("phi = {phi} ~ {:.9}", phi.to_f64());
    println!("phi^2 = {} (phi + 1)", &phi * &phi);
    println!("1/phi = {} (phi - 1)", GoldenNumber::inv_phi());

    // the bound checks used throughout: sign of c·gain − opt
    for (gain, opt) in [(14, 15), (8, 13), (13, 21)] {
        let margin = phi.scale(&integer(gain)) - GoldenNumber::from_int(opt);
        println!("sign(phi*{gain} - {opt}) = {:+}", golden_sign(&margin));
    }

    let x = GoldenNumber::new(rational(1, 2), rational(-1, 3));
    println!("x = {x}, conjugate {}, norm {}, 1/x = {}", x.conjugate(), x.norm(), x.recip().unwrap());

    let a = TaggedWeight::original(integer(5), -1);
    let b = TaggedWeight::original(integer(5), -2);
    println!("equal weights, earlier arrival ranks higher: {}", a > b);
    println!("a bumped past itself: {}", a.bumped(1) > a);
}
