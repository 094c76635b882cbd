//! Small site-percolation run: four-point link patterns against the exact
//! universal ratio, plus crossing and one-arm estimates.
//!
//! Usage: percolation_mc [box] [half_span] [samples]

use cle_fourpoint::connection::connect_basis;
use cle_fourpoint::frobenius::DEFAULT_ORDER;
use cle_fourpoint::ode::KappaParams;
use cle_fourpoint::perc_mc::{one_arm, rhombus_crossing, run_box, McConfig};

fn main() -> Result<(), cle_fourpoint::Error> {
    let arg = |i: usize, default: u64| std::env::args().nth(i).map_or(default, |s| s.parse().expect("integer argument"));
    let (box_width, half_span, samples) = (arg(1, 128) as usize, arg(2, 32) as usize, arg(3, 4000));
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut cfg = McConfig::conformal(box_width, &[0.3, 0.5, 0.7], &[2], half_span, samples, 1)?;
    cfg.workers = workers;
    let exact = connect_basis(&KappaParams::new(6.0)?, DEFAULT_ORDER)?;
    for t in run_box(&cfg)? {
        println!(
            "lambda {:.4}: ratio {:.4} +- {:.4}, exact {:.4}, n_13_24 = {}",
            t.lambda,
            t.ratio(),
            t.stderr(),
            exact.ratio(t.lambda)?,
            t.n_13_24
        );
    }
    let c = rhombus_crossing(64, 10_000, 2, workers)?;
    println!("rhombus crossing {:.4} +- {:.4}", c.probability, c.stderr);
    let arm = one_arm(&[8, 16, 32, 64, 128], 10_000, 3, workers)?;
    println!("boundary one-arm exponent {:.3}", arm.exponent);
    Ok(())
}
