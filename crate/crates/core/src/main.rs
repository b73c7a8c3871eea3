fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // scans parallelize over grid points; keep each factorization single-threaded
    faer::set_global_parallelism(faer::Par::Seq);
    std::process::exit(rdjc::cli::main_with_args(std::env::args_os()));
}
