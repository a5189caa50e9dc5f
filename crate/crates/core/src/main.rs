// SPDX-License-Identifier: MIT
//! `causal-account` binary.

fn main() {
    let code =
        causal_account::cli::run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
