//! Jump counts of a two-state Markov chain against the tail envelope
//! exp(-j (log j - γ₀)).

use roughswitch::experiments::jump_count_samples;
use roughswitch::switching::{check_jump_tail, Generator};

fn main() -> roughswitch::Result<()> {
    let counts = jump_count_samples(&Generator::two_state(2.0)?, 0, 1.0, 100_000, 8, 0)?;
    let rep = check_jump_tail(&counts, 3.0, 30)?;
    println!("mean {:.4}, tail-sum mean {:.4}, envelope holds {}", rep.mean, rep.tail_sum_mean, rep.holds);
    for (j, emp, env) in &rep.checked {
        println!("j = {j:>2}: P(N > j) = {emp:.5}  envelope {env:.3e}");
    }
    Ok(())
}
