//! Answer extraction and equivalence checks.

use prmkit::verify::{answers_equal, canonicalize, extract_final_answer, parse_steps};

fn main() -> prmkit::Result<()> {
    let response = "Add the tens: 10 + 30 = 40.\n\nAdd the units: 40 + 2 = 42.\n\nThe answer is \\boxed{42}.";
    for (i, step) in parse_steps(response, "\n\n")?.iter().enumerate() {
        println!("step {i}: {step}");
    }
    println!("final answer: {}", extract_final_answer(response)?);

    let pairs = [("1/2", "0.5"), ("0.50", "1/2"), ("-3", "-3.0"), ("(B)", "b"), ("42", "43"), ("x+1", "x + 1")];
    for (a, b) in pairs {
        println!(
            "{a:>6} [{:?}] vs {b:<6} [{:?}]: {}",
            canonicalize(a).kind(),
            canonicalize(b).kind(),
            if answers_equal(a, b) { "equal" } else { "different" }
        );
    }
    Ok(())
}
