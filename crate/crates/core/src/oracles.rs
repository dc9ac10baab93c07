//! Reference computations that share no code path with the library: a
//! quadrature for `K1` and direct enumeration of the retransmission trees.
//! Built only with the `oracles` feature, for tests.

/// `K1(x) = int_0^inf exp(-x cosh t) cosh t dt` by the trapezoidal rule.
///
/// The integrand is even and analytic in a strip around the real axis, so
/// the trapezoidal sum converges geometrically in the step.
pub fn k1_quadrature(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite());
    let h = 1.0 / 64.0;
    let t_max = (750.0 / x).max(1.0).acosh() + 1.0;
    let n = (t_max / h).ceil() as usize;
    let f = |t: f64| {
        let c = t.cosh();
        (-x * c).exp() * c
    };
    let mut sum = 0.5 * f(0.0);
    let mut comp = 0.0;
    for j in 1..=n {
        // Neumaier summation.
        let v = f(j as f64 * h);
        let s = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - s) + v;
        } else {
            comp += (v - s) + sum;
        }
        sum = s;
    }
    h * (sum + comp)
}

/// Slot-count distribution of amplify-and-forward ARQ by walking the round
/// tree: each round is one direct slot, then one relay slot on failure.
/// Entry `n` is `P(slots = n)`; entry 0 is unused.
pub fn af_slot_pmf(eps1: f64, eps2: f64, max_slots: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; max_slots + 1];
    // Probability of still being undelivered when a round starts at `slot`.
    let mut alive = 1.0;
    let mut slot = 0;
    while slot + 2 <= max_slots {
        pmf[slot + 1] += alive * (1.0 - eps1);
        pmf[slot + 2] += alive * eps1 * (1.0 - eps2);
        alive *= eps1 * eps2;
        slot += 2;
    }
    pmf
}

/// Slot-count distribution of decode-and-forward ARQ by walking the outer
/// (source) and inner (relay) retransmission loops.
pub fn df_slot_pmf(eps1: f64, eps2: f64, eps3: f64, max_slots: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; max_slots + 1];
    // outer[n]: probability the source broadcasts in slot n.
    let mut outer = vec![0.0; max_slots + 2];
    // relay[n]: probability the relay holds the codeword and sends in slot n.
    let mut relay = vec![0.0; max_slots + 2];
    outer[1] = 1.0;
    for n in 1..=max_slots {
        let o = outer[n];
        pmf[n] += o * (1.0 - eps1);
        outer[n + 1] += o * eps1 * eps2;
        relay[n + 1] += o * eps1 * (1.0 - eps2);
        let r = relay[n];
        pmf[n] += r * (1.0 - eps3);
        relay[n + 1] += r * eps3;
    }
    pmf
}

/// Mean of a slot pmf and the probability mass it leaves out.
pub fn pmf_mean(pmf: &[f64]) -> (f64, f64) {
    let mean = pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let mass: f64 = pmf.iter().sum();
    (mean, 1.0 - mass)
}

/// Decode-and-forward mean slots from the nested-variable decomposition:
/// after `j` failed outer rounds the source broadcasts in slot `j + 1`;
/// either the destination decodes, or the relay takes over and its inner
/// loop ends at slot `n >= j + 2` with probability `e3^(n-j-2) (1 - e3)`.
/// Both loops are truncated at `depth`; returns `(mean, residual_mass)`.
pub fn df_nested_tree_mean(eps1: f64, eps2: f64, eps3: f64, depth: usize) -> (f64, f64) {
    let mut mean = 0.0;
    let mut mass = 0.0;
    let mut reach = 1.0;
    for j in 0..=depth {
        let direct = reach * (1.0 - eps1);
        mean += direct * (j + 1) as f64;
        mass += direct;
        let to_relay = reach * eps1 * (1.0 - eps2);
        let mut tail = 1.0;
        for m in 0..=depth {
            let p = to_relay * tail * (1.0 - eps3);
            mean += p * (j + 2 + m) as f64;
            mass += p;
            tail *= eps3;
        }
        reach *= eps1 * eps2;
    }
    (mean, 1.0 - mass)
}
