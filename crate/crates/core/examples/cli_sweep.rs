//! Drives the command-line runner in-process: a small sweep over N and r
//! written to a temporary directory.
fn main() {
    let out = std::env::temp_dir().join("fracdg-example-sweep");
    let out = out.to_string_lossy().into_owned();
    let args = [
        "fracdg", "--dim", "1", "--m", "16", "--mode", "both", "--sweep-N", "256,512", "--sweep-r", "3,5",
        "--no-stream", "--out", &out,
    ];
    let code = fracdg::cli::main_with_args(args);
    println!("exit status: {code:?}");
}
