use clap::Parser;

mod cli;

fn main() {
    if let Some(n) = std::env::var("DEVS_SCC_JOBS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let code = match cli::run(cli::Cli::parse()) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("devs-scc: {}", f.message);
            f.code
        }
    };
    std::process::exit(code);
}
