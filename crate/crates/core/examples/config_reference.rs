//! Prints the benchmark config reference page.
//!
//!     cargo run --example config_reference > crates/core/docs/config-reference.md

fn main() {
    print!("{}", stiefel_mcmc::bench::config_reference());
}
