//! Central-difference check of every analytic gradient in the crate, plus
//! one hand-written objective to show the checker on its own.

use pga::gradcheck::{run_suite, ABS_TOL, REL_TOL};
use pga::objective::check_gradient;
use pga::ObjectiveFn;

/// f(x, y) = sin(x)·y² + exp(y/2)
struct Wavy;

impl ObjectiveFn for Wavy {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, p: &[f64]) -> pga::Result<f64> {
        Ok(p[0].sin() * p[1] * p[1] + (p[1] / 2.0).exp())
    }
    fn gradient(&self, p: &[f64]) -> pga::Result<Vec<f64>> {
        Ok(vec![
            p[0].cos() * p[1] * p[1],
            2.0 * p[0].sin() * p[1] + 0.5 * (p[1] / 2.0).exp(),
        ])
    }
}

fn main() -> pga::Result<()> {
    let r = check_gradient(&Wavy, &[0.3, -1.2], REL_TOL, ABS_TOL)?;
    println!("wavy: passed={} max abs err={:.2e}", r.passed, r.max_abs_error);

    for s in run_suite(0, 100)? {
        println!(
            "{:<10} {}/{} passed, worst abs {:.2e}, rel {:.2e}",
            s.name, s.passed, s.points, s.worst_abs_error, s.worst_rel_error
        );
    }
    Ok(())
}
