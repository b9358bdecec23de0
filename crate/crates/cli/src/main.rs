use clap::Parser;

fn main() {
    let cli = sdmi_cli::Cli::parse();
    std::process::exit(sdmi_cli::dispatch(cli));
}
