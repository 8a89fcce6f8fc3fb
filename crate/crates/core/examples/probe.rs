// Scratch scan for a value-convergence ladder with cleanly decreasing
// Cauchy differences.
use dynkin::diagnostics::value_convergence;
use dynkin::model::{BasePayoff, DiffusionModel, InnovationLaw, PayoffPair, Penalty};

fn scan(label: &str, base: BasePayoff, sigma: f64, delta: f64) {
    let s2 = sigma * sigma;
    let m = DiffusionModel::scalar(move |_| sigma, move |_| -0.5 * s2, 1.0, 0.0).unwrap();
    let rad = InnovationLaw::rademacher(1).unwrap();
    let pair = PayoffPair::game(base, Penalty::LinearDecay(delta));
    let table = value_convergence(&m, &rad, &pair, &[8, 16, 32, 64, 128], 1 << 22, true);
    let d = &table.differences;
    let mono = d.windows(2).all(|w| w[1] <= w[0]);
    let quarter = d.last().unwrap() < &(d[0] / 4.0);
    print!("{label}: diffs=");
    for x in d {
        print!("{x:.4e} ");
    }
    println!(" mono={mono} quarter={quarter}");
}

fn main() {
    for strike in [0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.2, 1.3] {
        scan(&format!("put k={strike} s=0.2 d=0.2"), BasePayoff::put(strike), 0.2, 0.2);
    }
    for strike in [0.9, 1.0, 1.1] {
        scan(&format!("put k={strike} s=0.3 d=0.3"), BasePayoff::put(strike), 0.3, 0.3);
    }
    for strike in [0.95, 1.0, 1.05, 1.1] {
        scan(
            &format!("avgput k={strike} s=0.25 d=0.15"),
            BasePayoff::average_put(strike),
            0.25,
            0.15,
        );
    }
    for strike in [1.0, 1.05, 1.1] {
        scan(
            &format!("lookback k={strike} s=0.2 d=0.25"),
            BasePayoff::lookback_call(strike),
            0.2,
            0.25,
        );
    }
    // Binding-penalty variants (the canceller region is interior).
    for delta in [0.06, 0.08, 0.1] {
        scan(
            &format!("avgput k=1.05 s=0.25 d={delta}"),
            BasePayoff::average_put(1.05),
            0.25,
            delta,
        );
    }
}
