use hilbert_sharp_cli::{main_with, THREADS_ENV};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let env = std::env::var(THREADS_ENV).ok();
    std::process::exit(main_with(&argv, env.as_deref()));
}
