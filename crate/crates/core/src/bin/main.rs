use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = nru_offload::cli::Cli::parse();
    std::process::ExitCode::from(nru_offload::cli::run(&cli) as u8)
}
