use std::io;

fn main() {
    tracing_subscriber::fmt().with_writer(io::stderr).with_target(false).init();
    let code = cep_service::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
