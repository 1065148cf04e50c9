fn main() {
    std::process::exit(geofol::cli::main());
}
