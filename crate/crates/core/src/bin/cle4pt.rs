//! Command-line front end; see `cle_fourpoint::cli`.

fn main() {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr();
    let code = cle_fourpoint::cli::run(std::env::args_os(), &mut stdout, &mut stderr);
    std::process::exit(code);
}
